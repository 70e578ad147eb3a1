"""Closed-form solution of the conditional-displacement (RWA) dynamics.

Starting from (|g> + |e>)|0,0>/sqrt(2), the excited branch is displaced to the
two-mode coherent state |alpha(t), beta(t)> and acquires the phase theta(t);
the ground branch is stationary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import DegenerateCatError, ResonantLimitError
from .hilbert import CompositeSpace, StateVector, coherent_amplitudes, displacement, poisson_tail
from .model import EffectiveParams

CAT_DENOMINATOR_MIN = 1e-12


@dataclass(frozen=True)
class AnalyticState:
    t: float
    alpha: complex
    beta: complex
    eta: complex
    zeta: complex
    theta_a: float
    theta_b: float
    theta: float
    m_plus: float
    m_minus: float
    p_plus: float
    p_minus: float

    @property
    def overlap_weight(self) -> float:
        """|<0,0|alpha,beta>| = exp(-(|alpha|^2 + |beta|^2)/2)."""
        return math.exp(-0.5 * (abs(self.alpha) ** 2 + abs(self.beta) ** 2))


def _check_detunings(eff: EffectiveParams):
    if eff.delta_a == 0 or eff.delta_b == 0:
        raise ResonantLimitError("closed-form solution needs delta_a != 0 and delta_b != 0")


def rotating_amplitudes(eff: EffectiveParams, t):
    """(eta, zeta, theta_a, theta_b) in the interaction frame; ``t`` may be an array."""
    _check_detunings(eff)
    t = np.asarray(t, dtype=float)
    ra, rb = eff.g_a / eff.delta_a, eff.g_b / eff.delta_b
    eta = ra * (1 - np.exp(1j * eff.delta_a * t))
    zeta = rb * (1 - np.exp(1j * eff.delta_b * t))
    theta_a = ra**2 * (eff.delta_a * t - np.sin(eff.delta_a * t))
    theta_b = rb**2 * (eff.delta_b * t - np.sin(eff.delta_b * t))
    return eta, zeta, theta_a, theta_b


def lab_amplitudes(eff: EffectiveParams, t):
    """Lab-frame coherent amplitudes (alpha, beta) of cavity and vibration."""
    eta, zeta, _, _ = rotating_amplitudes(eff, t)
    t = np.asarray(t, dtype=float)
    mod = eff.xi * np.sin(eff.omega_0 * t)
    rot_plus = np.exp(-1j * (mod + eff.omega_plus * t))
    rot_minus = np.exp(-1j * (mod + eff.omega_minus * t))
    s, c = math.sin(eff.theta_mix), math.cos(eff.theta_mix)
    alpha = s * zeta * rot_plus - c * eta * rot_minus
    beta = c * zeta * rot_plus + s * eta * rot_minus
    return alpha, beta


def analytic_series(eff: EffectiveParams, omega_e: float, t) -> dict:
    """Vectorized closed-form quantities on a time grid."""
    eta, zeta, th_a, th_b = rotating_amplitudes(eff, t)
    alpha, beta = lab_amplitudes(eff, t)
    theta = th_a + th_b - omega_e * np.asarray(t, dtype=float)
    w = np.exp(-0.5 * (np.abs(alpha) ** 2 + np.abs(beta) ** 2))
    c = np.cos(theta) * w
    p_plus, p_minus = 0.5 * (1 + c), 0.5 * (1 - c)
    with np.errstate(divide="ignore"):
        m_plus = 1 / np.sqrt(2 * (1 + c))
        m_minus = 1 / np.sqrt(2 * (1 - c))
    return dict(
        t=np.asarray(t, dtype=float), alpha=alpha, beta=beta, eta=eta, zeta=zeta,
        theta_a=th_a, theta_b=th_b, theta=theta, m_plus=m_plus, m_minus=m_minus,
        p_plus=p_plus, p_minus=p_minus,
    )


def analytic_state(eff: EffectiveParams, omega_e: float, t: float) -> AnalyticState:
    s = analytic_series(eff, omega_e, float(t))
    return AnalyticState(
        t=float(t),
        alpha=complex(s["alpha"]), beta=complex(s["beta"]),
        eta=complex(s["eta"]), zeta=complex(s["zeta"]),
        theta_a=float(s["theta_a"]), theta_b=float(s["theta_b"]), theta=float(s["theta"]),
        m_plus=float(s["m_plus"]), m_minus=float(s["m_minus"]),
        p_plus=float(s["p_plus"]), p_minus=float(s["p_minus"]),
    )


def mean_excitations_analytic(state: AnalyticState) -> tuple[float, float]:
    return abs(state.alpha) ** 2 / 2, abs(state.beta) ** 2 / 2


def detection_prob_analytic(state: AnalyticState) -> tuple[float, float]:
    c = math.cos(state.theta) * state.overlap_weight
    return 0.5 * (1 + c), 0.5 * (1 - c)


def detection_time(eff: EffectiveParams, refine=False) -> float:
    """t_s = pi/|delta_a|, optionally moved to the nearby maximum of |alpha|^2 + |beta|^2."""
    ts = math.pi / abs(eff.delta_a)
    if not refine:
        return ts

    def neg_size(t):
        al, be = lab_amplitudes(eff, t)
        return -(abs(al) ** 2 + abs(be) ** 2)

    res = minimize_scalar(neg_size, bounds=(0.8 * ts, 1.2 * ts), method="bounded",
                          options={"xatol": 1e-10})
    return float(res.x)


def _sign(sign) -> int:
    if sign in ("+", +1):
        return 1
    if sign in ("-", -1):
        return -1
    raise ValueError(f"sign must be '+' or '-', got {sign!r}")


def cat_amplitudes(alpha: complex, beta: complex, theta: float, sign, mode_dims) -> np.ndarray:
    """Unnormalized C^{+-}_{m,k} = e^{i theta}<m|alpha><k|beta> +- delta_{m0} delta_{k0}."""
    s = _sign(sign)
    na, nb = mode_dims
    c = np.exp(1j * theta) * np.outer(coherent_amplitudes(alpha, na), coherent_amplitudes(beta, nb))
    c[0, 0] += s
    return c


def cat_state(state: AnalyticState, sign, mode_dims) -> StateVector:
    """Entangled cat state M(e^{i theta}|alpha>|beta> +- |0>|0>) on the two-mode space."""
    s = _sign(sign)
    denom = 1 + s * math.cos(state.theta) * state.overlap_weight
    if denom <= CAT_DENOMINATOR_MIN:
        raise DegenerateCatError(f"cat state '{sign}' has vanishing norm at t = {state.t}")
    c = cat_amplitudes(state.alpha, state.beta, state.theta, s, mode_dims)
    norm = np.linalg.norm(c)
    if norm <= CAT_DENOMINATOR_MIN:
        raise DegenerateCatError(f"truncated cat state '{sign}' has vanishing norm")
    deficit = poisson_tail(state.alpha, mode_dims[0]) + poisson_tail(state.beta, mode_dims[1])
    return StateVector(c.reshape(-1) / norm, tuple(mode_dims), truncation_deficit=deficit)


def full_state_analytic(state: AnalyticState, space: CompositeSpace) -> StateVector:
    """(e^{i theta}|e>|alpha,beta> + |g>|0,0>)/sqrt(2), renormalized after truncation."""
    na, nb = space.mode_dims
    v = np.zeros(space.dims, dtype=complex)
    v[0, 0, 0] = 1.0
    v[1] = np.exp(1j * state.theta) * np.outer(
        coherent_amplitudes(state.alpha, na), coherent_amplitudes(state.beta, nb)
    )
    deficit = poisson_tail(state.alpha, na) + poisson_tail(state.beta, nb)
    return StateVector.normalized(v.reshape(-1), space.dims, truncation_deficit=deficit / 2)


def magnus_unitary(eff: EffectiveParams, t: float, mode_dims) -> np.ndarray:
    """U_e(t) = e^{i theta_a} D_a(-eta) e^{i theta_b} D_b(zeta) on the two-mode space.

    Displacements are the exact (cropped) matrix elements; the product is
    unitary up to the population they move past the cutoffs.
    """
    eta, zeta, th_a, th_b = (complex(v) for v in rotating_amplitudes(eff, float(t)))
    na, nb = mode_dims
    phase = np.exp(1j * (th_a.real + th_b.real))
    return phase * np.kron(displacement(-eta, na), displacement(zeta, nb))
