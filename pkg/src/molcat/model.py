"""Physical parameters, sideband-engineered effective couplings, Hamiltonians.

All energies and rates are in units of the Huang-Rhys coupling ``lam`` (which
is fixed to 1), times in units of 1/lam.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.special import jv

from .errors import ArgumentError, DegenerateMixingError, RWAConditionWarning
from .hilbert import CompositeSpace, annihilation

BESSEL_MAX_ORDER = 50
BESSEL_MAX_ARG = 50.0

# "much greater than" in the RWA conditions means at least this ratio
RWA_RATIO = 10.0
# the off-target sideband of mode b must sit this many couplings away
SIDEBAND_DETUNING_RATIO = 3.0


@dataclass(frozen=True)
class ModelParams:
    omega_c: float
    omega_v: float
    omega_e: float
    g: float
    xi: float
    n_a: int = 1
    n_b: int = 1
    delta_a_spec: float = -0.5
    kappa: float = 0.0
    gamma_v: float = 0.0
    gamma_e: float = 0.0
    lam: float = 1.0

    def __post_init__(self):
        for name in ("omega_c", "omega_v", "omega_e", "xi"):
            if not getattr(self, name) > 0:
                raise ArgumentError(f"{name} must be > 0, got {getattr(self, name)!r}")
        for name in ("kappa", "gamma_v", "gamma_e"):
            if not getattr(self, name) >= 0:
                raise ArgumentError(f"{name} must be >= 0, got {getattr(self, name)!r}")
        for name in ("n_a", "n_b"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ArgumentError(f"{name} must be a positive integer, got {v!r}")
        if self.lam != 1.0:
            raise ArgumentError("lam is the unit of energy and must equal 1")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class EffectiveParams:
    theta_mix: float
    omega_plus: float
    omega_minus: float
    omega_0: float
    g_a: float
    g_b: float
    delta_a: float
    delta_b: float
    xi: float = 0.0
    warnings: tuple[str, ...] = field(default=(), compare=False)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["warnings"] = list(self.warnings)
        return d

    @property
    def period(self) -> float:
        """Decoupling period 2*pi/|delta_a| of the cavity displacement."""
        return 2 * math.pi / abs(self.delta_a)


def bessel_j(order: int, x: float) -> float:
    """Bessel function of the first kind J_order(x) for integer order."""
    if int(order) != order:
        raise ArgumentError(f"order must be an integer, got {order!r}")
    if abs(order) > BESSEL_MAX_ORDER or not abs(x) <= BESSEL_MAX_ARG:
        raise ArgumentError(
            f"bessel_j supports |order| <= {BESSEL_MAX_ORDER}, |x| <= {BESSEL_MAX_ARG}; "
            f"got ({order}, {x})"
        )
    return float(jv(int(order), float(x)))


def mixing_angle(omega_c: float, omega_v: float, g: float) -> float:
    if omega_v == omega_c:
        if g == 0:
            raise DegenerateMixingError("mixing angle undefined for omega_v == omega_c and g == 0")
        return math.copysign(math.pi / 4, g)
    return 0.5 * math.atan(2 * g / (omega_v - omega_c))


def rwa_condition_report(params: ModelParams, eff: EffectiveParams) -> list[str]:
    """Human-readable list of violated validity conditions (empty when fine)."""
    lam = params.lam
    out = []
    if eff.omega_minus < RWA_RATIO * lam:
        out.append(f"omega_- = {eff.omega_minus:.4g} is not >> lambda (need >= {RWA_RATIO:g})")
    if eff.omega_plus < RWA_RATIO * lam:
        out.append(f"omega_+ = {eff.omega_plus:.4g} is not >> lambda (need >= {RWA_RATIO:g})")
    if eff.omega_0 < RWA_RATIO * lam:
        out.append(f"omega_0 = {eff.omega_0:.4g} is not >> lambda (need >= {RWA_RATIO:g})")
    if abs(eff.delta_b) < SIDEBAND_DETUNING_RATIO * abs(eff.g_b):
        out.append(
            f"|delta_b| = {abs(eff.delta_b):.4g} < {SIDEBAND_DETUNING_RATIO:g}|g_b| = "
            f"{SIDEBAND_DETUNING_RATIO * abs(eff.g_b):.4g}: second sideband not far detuned"
        )
    # every non-target sideband of mode a must stay far from resonance
    for n in range(-3 * params.n_a, 3 * params.n_a + 1):
        if n == params.n_a:
            continue
        det = eff.omega_minus - n * eff.omega_0
        if abs(det) < RWA_RATIO * lam * abs(math.sin(eff.theta_mix) * jv(-n, params.xi)):
            out.append(f"mode-a sideband n={n} is near resonance (detuning {det:.4g})")
    return out


def derive_effective(params: ModelParams, warn=True) -> EffectiveParams:
    """Hybrid-mode frequencies, sideband couplings and the modulation frequency.

    The target detuning is given relative to the coupling,
    ``delta_a = delta_a_spec * g_a``, and the modulation frequency is solved
    from ``delta_a = omega_- - n_a * omega_0``.
    """
    wc, wv, g, lam = params.omega_c, params.omega_v, params.g, params.lam
    th = mixing_angle(wc, wv, g)
    mean = 0.5 * (wc + wv)
    split = 0.5 * (wv - wc) * math.cos(2 * th) + g * math.sin(2 * th)
    w_plus, w_minus = mean + split, mean - split
    g_a = lam * math.sin(th) * bessel_j(-params.n_a, params.xi)
    g_b = lam * math.cos(th) * bessel_j(-params.n_b, params.xi)
    delta_a = params.delta_a_spec * g_a
    omega_0 = (w_minus - delta_a) / params.n_a
    if not omega_0 > 0:
        raise ArgumentError(f"derived modulation frequency omega_0 = {omega_0!r} is not positive")
    delta_b = w_plus - params.n_b * omega_0
    eff = EffectiveParams(th, w_plus, w_minus, omega_0, g_a, g_b, delta_a, delta_b, params.xi)
    report = rwa_condition_report(params, eff)
    if warn:
        for msg in report:
            warnings.warn(msg, RWAConditionWarning, stacklevel=2)
    return EffectiveParams(th, w_plus, w_minus, omega_0, g_a, g_b, delta_a, delta_b, params.xi, tuple(report))


@dataclass(frozen=True)
class HamiltonianTerms:
    """H(t) = static + cos(omega_0 t) * modulation, both sparse."""

    static: sp.csr_matrix
    modulation: sp.csr_matrix
    omega_0: float

    def at(self, t: float) -> sp.csr_matrix:
        return (self.static + math.cos(self.omega_0 * t) * self.modulation).tocsr()


def hamiltonian_terms(params: ModelParams, eff: EffectiveParams, space: CompositeSpace) -> HamiltonianTerms:
    a, b, sm = space.a, space.b, space.sigma_minus
    ad, bd = a.conj().T, b.conj().T
    pe = space.excited_projector
    na_op, nb_op = ad @ a, bd @ b
    h_ev = params.omega_e * pe + params.omega_v * nb_op + params.lam * pe @ (bd + b)
    h_cv = params.omega_c * na_op + params.g * (ad @ b + a @ bd)
    h_mod = params.xi * eff.omega_0 * (na_op + nb_op)
    return HamiltonianTerms(sp.csr_matrix(h_ev + h_cv), sp.csr_matrix(h_mod), eff.omega_0)


def full_hamiltonian(params: ModelParams, eff: EffectiveParams, t: float, space: CompositeSpace, dense=False):
    """Lab-frame H(t) = H_e-v + H_c-v + H_m(t) in the composite Fock basis."""
    h = hamiltonian_terms(params, eff, space).at(t)
    return h.toarray() if dense else h


def rwa_excited_block(eff: EffectiveParams, t: float, mode_dims) -> np.ndarray:
    """H_e(t) = g_b (b^+ e^{i d_b t} + h.c.) - g_a (a^+ e^{i d_a t} + h.c.) on the two-mode space."""
    na, nb = mode_dims
    a = np.kron(annihilation(na), np.eye(nb))
    b = np.kron(np.eye(na), annihilation(nb))
    drive_b = eff.g_b * np.exp(1j * eff.delta_b * t) * b.conj().T
    drive_a = eff.g_a * np.exp(1j * eff.delta_a * t) * a.conj().T
    h = drive_b - drive_a
    return h + h.conj().T


def rwa_hamiltonian(eff: EffectiveParams, t: float, space: CompositeSpace, dense=False):
    """H_RWA(t) = H_e(t) (x) |e><e|; the ground block is identically zero."""
    he = rwa_excited_block(eff, t, space.mode_dims)
    h = sp.kron(sp.csr_matrix(np.diag([0.0, 1.0])), sp.csr_matrix(he), format="csr")
    return h.toarray() if dense else h
