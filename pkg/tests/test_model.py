import math
import warnings

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from molcat.errors import ArgumentError, DegenerateMixingError, RWAConditionWarning
from molcat.hilbert import CompositeSpace, annihilation
from molcat.model import (
    ModelParams, bessel_j, derive_effective, full_hamiltonian, mixing_angle, rwa_condition_report,
    rwa_hamiltonian,
)

FIG3 = dict(omega_c=50.0, omega_v=50.5, omega_e=250.0, g=2.5, xi=1.841, delta_a_spec=-0.5)


def besselj_series(n, x, terms=80):
    # power-series oracle, summed in 50-digit arithmetic
    mp.mp.dps = 50
    sign = 1
    if n < 0:
        n, sign = -n, (-1) ** n
    x = mp.mpf(x)
    s = mp.fsum((-1) ** k / (mp.factorial(k) * mp.factorial(k + n)) * (x / 2) ** (2 * k + n) for k in range(terms))
    return sign * float(s)


def test_bessel_trivial():
    assert bessel_j(0, 0) == 1.0
    for x in (0.3, 1.841, 7.5):
        assert bessel_j(-1, x) == pytest.approx(-bessel_j(1, x), abs=1e-15)


def test_bessel_series_oracle_value():
    ref = besselj_series(1, 1.841)
    assert ref == pytest.approx(0.58187, abs=1e-4)
    assert bessel_j(1, 1.841) == pytest.approx(ref, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.integers(-50, 50), st.floats(-50, 50))
def test_bessel_against_mpmath(n, x):
    mp.mp.dps = 30
    assert abs(bessel_j(n, x) - float(mp.besselj(n, x))) <= 1e-12


@pytest.mark.parametrize("args", [(51, 1.0), (0, 50.5), (1.5, 1.0), (0, float("nan"))])
def test_bessel_range_errors(args):
    with pytest.raises(ArgumentError):
        bessel_j(*args)


def test_bessel_argmax():
    xi = np.linspace(1e-4, 3, 30000)
    j = np.abs([bessel_j(-1, x) for x in xi])
    assert xi[np.argmax(j)] == pytest.approx(1.841, abs=1e-3)


def test_jacobi_anger():
    xi, w0 = 1.841, 1.7
    for t in np.linspace(0, 5, 11):
        s = sum(bessel_j(n, xi) * np.exp(1j * n * w0 * t) for n in range(-25, 26))
        assert abs(s - np.exp(1j * xi * np.sin(w0 * t))) < 1e-10


def effective_oracle(wc, wv, g, xi, na, nb, spec):
    mp.mp.dps = 40
    wc, wv, g, xi = (mp.mpf(v) for v in (wc, wv, g, xi))
    th = mp.atan(2 * g / (wv - wc)) / 2
    mean, split = (wc + wv) / 2, (wv - wc) / 2 * mp.cos(2 * th) + g * mp.sin(2 * th)
    wp, wm = mean + split, mean - split
    ga = mp.sin(th) * mp.besselj(-na, xi)
    gb = mp.cos(th) * mp.besselj(-nb, xi)
    da = spec * ga
    w0 = (wm - da) / na
    db = wp - nb * w0
    return {k: float(v) for k, v in dict(theta_mix=th, omega_plus=wp, omega_minus=wm, g_a=ga, g_b=gb,
                                         delta_a=da, omega_0=w0, delta_b=db).items()}


def test_derive_effective_fig3_values():
    eff = derive_effective(ModelParams(**FIG3))
    oracle = effective_oracle(50, 50.5, 2.5, 1.841, 1, 1, mp.mpf(-0.5))
    for k, v in oracle.items():
        assert getattr(eff, k) == pytest.approx(v, abs=1e-10), k
    # frozen values
    assert eff.theta_mix == pytest.approx(0.73556, abs=1e-4)
    assert eff.omega_plus == pytest.approx(52.7625, abs=1e-3)
    assert eff.omega_minus == pytest.approx(47.7375, abs=1e-3)
    assert eff.g_a == pytest.approx(-0.3904, abs=5e-4)
    assert eff.g_b == pytest.approx(-0.4314, abs=5e-4)
    assert eff.delta_a == pytest.approx(0.1952, abs=3e-4)
    assert eff.omega_0 == pytest.approx(47.5423, abs=1e-3)
    assert eff.delta_b == pytest.approx(5.2202, abs=1e-3)
    assert eff.warnings == ()


def test_effective_exact_identities():
    p = ModelParams(**FIG3, n_a=2, n_b=3)
    eff = derive_effective(p, warn=False)
    # equal up to the rounding of omega_0 = (omega_- - delta_a)/n_a
    assert eff.delta_a == pytest.approx(eff.omega_minus - 2 * eff.omega_0, abs=1e-12)
    assert eff.delta_b == eff.omega_plus - 3 * eff.omega_0
    assert eff.g_a == math.sin(eff.theta_mix) * bessel_j(-2, p.xi)
    assert eff.g_b == math.cos(eff.theta_mix) * bessel_j(-3, p.xi)


def test_decoupled_limit():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        eff = derive_effective(ModelParams(omega_c=50, omega_v=50.5, omega_e=250, g=0.0, xi=1.841), warn=False)
    assert eff.theta_mix == 0 and eff.g_a == 0
    assert {eff.omega_plus, eff.omega_minus} == {50.5, 50.0}


def test_resonant_beam_splitter_limit():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        eff = derive_effective(ModelParams(omega_c=50, omega_v=50, omega_e=250, g=2.5, xi=1.841))
    assert eff.theta_mix == pytest.approx(math.pi / 4)
    assert eff.omega_plus == pytest.approx(52.5)
    assert eff.omega_minus == pytest.approx(47.5)


def test_degenerate_mixing():
    with pytest.raises(DegenerateMixingError):
        mixing_angle(50, 50, 0)
    with pytest.raises(DegenerateMixingError):
        derive_effective(ModelParams(omega_c=50, omega_v=50, omega_e=250, g=0.0, xi=1.841))


def test_negative_branch_for_lower_vibration():
    eff = derive_effective(ModelParams(omega_c=50.5, omega_v=50, omega_e=250, g=2.5, xi=1.841), warn=False)
    assert eff.theta_mix < 0 and eff.g_a > 0


def test_rwa_warnings():
    with pytest.warns(RWAConditionWarning, match="omega_-"), warnings.catch_warnings():
        derive_effective(ModelParams(omega_c=2, omega_v=2.5, omega_e=250, g=0.3, xi=1.841))
    p = ModelParams(**FIG3)
    assert rwa_condition_report(p, derive_effective(p)) == []


def test_weak_sideband_detuning_warning():
    # omega_v - omega_c tuned so that delta_b is small compared with g_b
    p = ModelParams(omega_c=50, omega_v=50.0 + 1e-3, omega_e=250, g=0.05, xi=1.841)
    eff = derive_effective(p, warn=False)
    assert any("delta_b" in w for w in eff.warnings)


def test_model_param_validation():
    with pytest.raises(ArgumentError):
        ModelParams(omega_c=-1, omega_v=1, omega_e=1, g=1, xi=1)
    with pytest.raises(ArgumentError):
        ModelParams(omega_c=1, omega_v=1, omega_e=1, g=1, xi=1, kappa=-0.1)
    with pytest.raises(ArgumentError):
        ModelParams(omega_c=1, omega_v=1, omega_e=1, g=1, xi=1, n_a=0)
    with pytest.raises(ArgumentError):
        ModelParams(omega_c=1, omega_v=1, omega_e=1, g=1, xi=1, lam=2.0)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.2, 5.0))
def test_scale_covariance(c):
    base = ModelParams(**FIG3)
    scaled = ModelParams(**{**FIG3, "omega_c": 50 * c, "omega_v": 50.5 * c, "g": 2.5 * c})
    e0, e1 = derive_effective(base, warn=False), derive_effective(scaled, warn=False)
    assert e1.theta_mix == pytest.approx(e0.theta_mix, abs=1e-12)
    assert e1.g_a == pytest.approx(e0.g_a, abs=1e-12)
    assert e1.omega_plus + e1.omega_minus == pytest.approx(scaled.omega_c + scaled.omega_v, abs=1e-12)


def test_frequency_sum_and_product_identity():
    p = ModelParams(**FIG3)
    eff = derive_effective(p)
    assert eff.omega_plus + eff.omega_minus == pytest.approx(p.omega_c + p.omega_v, abs=1e-13)
    assert eff.omega_plus * eff.omega_minus == pytest.approx(p.omega_c * p.omega_v - p.g ** 2, abs=1e-10)


def test_full_hamiltonian_diagonal_and_hermitian():
    p = ModelParams(**FIG3)
    eff = derive_effective(p)
    s = CompositeSpace.from_cutoffs(3, 4)
    h0 = full_hamiltonian(p, eff, 0.0, s, dense=True)
    for n in range(4):
        for j in range(5):
            k = s.index("e", n, j)
            ref = p.omega_e + n * p.omega_c + j * p.omega_v + (n + j) * p.xi * eff.omega_0
            assert h0[k, k].real == pytest.approx(ref, abs=1e-9)
    hq = full_hamiltonian(p, eff, math.pi / (2 * eff.omega_0), s, dense=True)
    k = s.index("g", 2, 3)
    assert hq[k, k].real == pytest.approx(2 * p.omega_c + 3 * p.omega_v, abs=1e-9)
    rng = np.random.default_rng(0)
    for t in rng.uniform(0, 20, 5):
        h = full_hamiltonian(p, eff, t, s, dense=True)
        assert np.max(np.abs(h - h.conj().T)) == 0


def test_full_hamiltonian_against_dense_build():
    p = ModelParams(**FIG3)
    eff = derive_effective(p)
    s = CompositeSpace.from_cutoffs(2, 3)
    a1, b1 = annihilation(3), annihilation(4)
    I2, Ia, Ib = np.eye(2), np.eye(3), np.eye(4)
    a = np.kron(I2, np.kron(a1, Ib))
    b = np.kron(I2, np.kron(Ia, b1))
    pe = np.kron(np.diag([0, 1]), np.eye(12))
    t = 0.37
    ref = (p.omega_e * pe + p.omega_v * b.T @ b + pe @ (b.T + b) + p.omega_c * a.T @ a
           + p.g * (a.T @ b + a @ b.T) + p.xi * eff.omega_0 * math.cos(eff.omega_0 * t) * (a.T @ a + b.T @ b))
    assert np.allclose(full_hamiltonian(p, eff, t, s, dense=True), ref, atol=1e-12)


def test_rwa_hamiltonian_structure():
    eff = derive_effective(ModelParams(**FIG3))
    s = CompositeSpace.from_cutoffs(3, 3)
    d = s.mode_dim
    h0 = rwa_hamiltonian(eff, 0.0, s, dense=True)
    assert np.all(h0[:d, :d] == 0) and np.all(h0[:d, d:] == 0)
    a = np.kron(annihilation(4), np.eye(4))
    b = np.kron(np.eye(4), annihilation(4))
    assert np.allclose(h0[d:, d:], eff.g_b * (b.T + b) - eff.g_a * (a.T + a))
    h = rwa_hamiltonian(eff, 3.3, s, dense=True)
    assert np.max(np.abs(h - h.conj().T)) == 0
    assert np.all(h[:d, :d] == 0)
