import math
import warnings

import numpy as np
import pytest

from molcat import _accel
from molcat.dynamics import IntegratorOptions, Propagator, evolve_lindblad, evolve_schrodinger, plus_vacuum_state
from molcat.errors import ArgumentError, MonitorError, TruncationError
from molcat.hilbert import CompositeSpace, DensityMatrix, StateVector
from molcat.model import ModelParams, derive_effective, full_hamiltonian

FIG3 = dict(omega_c=50.0, omega_v=50.5, omega_e=250.0, g=2.5, xi=1.841, delta_a_spec=-0.5)


def setup(cut=(3, 3), **kw):
    p = ModelParams(**{**FIG3, **kw})
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        eff = derive_effective(p, warn=False)
    return p, eff, CompositeSpace.from_cutoffs(*cut)


def basis(space, level, n, j):
    v = np.zeros(space.dim, complex)
    v[space.index(level, n, j)] = 1
    return StateVector(v, space.dims)


def test_options_validation():
    with pytest.raises(ArgumentError):
        IntegratorOptions(sample_times=(1.0, 0.5))
    with pytest.raises(ArgumentError):
        IntegratorOptions(sample_times=(-1.0,))
    with pytest.raises(ArgumentError):
        IntegratorOptions(sample_times=(1.0,), method="euler")
    with pytest.raises(ArgumentError):
        IntegratorOptions(sample_times=(1.0,), step=0)


def test_diagonal_kernel_exact_phases():
    # time-independent diagonal generator, lab frame: pure phases
    rng = np.random.default_rng(0)
    n = 6
    e = rng.uniform(-3, 3, n)
    op = (np.arange(n)[:, None].astype(np.int64), np.zeros((n, 1), complex), np.zeros((n, 1), np.int64),
          np.zeros(1), np.zeros(1), e, np.zeros(n), 1.0)
    x0 = rng.normal(size=n) + 1j * rng.normal(size=n)
    x0 /= np.linalg.norm(x0)
    t, steps = 2.0, 4000
    for nb in (True, False):
        x = _accel.rk4_vector(x0, 0.0, t / steps, steps, op, use_numba=nb)
        assert np.max(np.abs(x - np.exp(-1j * e * t) * x0)) < 1e-10


def test_ground_block_modulated_phases():
    # g = 0: the |g> block evolves under a diagonal, modulated H with known phases
    p, eff, space = setup(g=0.0)
    v = np.zeros(space.dim, complex)
    v[: space.mode_dim] = 1 / math.sqrt(space.mode_dim)
    psi0 = StateVector(v, space.dims)
    times = (0.3, 1.1)
    traj = evolve_schrodinger(p, eff, psi0, IntegratorOptions(sample_times=times, top_population_tol=1.0),
                              space=space)
    _, n, j = space.quanta
    g = slice(0, space.mode_dim)
    for t, st in zip(times, traj.states):
        phase = (n * p.omega_c + j * p.omega_v) * t + (n + j) * p.xi * math.sin(eff.omega_0 * t)
        ref = v * np.exp(-1j * phase)
        assert np.max(np.abs(st.data[g] - ref[g])) < 1e-10


def test_rotating_and_lab_frames_agree():
    p, eff, space = setup()
    psi0 = plus_vacuum_state(space)
    times = (0.2, 0.5)
    a = evolve_schrodinger(p, eff, psi0, IntegratorOptions(sample_times=times, top_population_tol=1.0), space=space)
    b = evolve_schrodinger(p, eff, psi0, IntegratorOptions(sample_times=times, frame="lab",
                                                           top_population_tol=1.0), space=space)
    for x, y in zip(a.states, b.states):
        assert abs(np.vdot(x.data, y.data)) ** 2 > 1 - 1e-9


def test_rk45_matches_rk4():
    p, eff, space = setup()
    psi0 = plus_vacuum_state(space)
    times = (0.5,)
    a = evolve_schrodinger(p, eff, psi0, IntegratorOptions(sample_times=times, top_population_tol=1.0), space=space)
    b = evolve_schrodinger(p, eff, psi0, IntegratorOptions(sample_times=times, method="rk45", rtol=1e-10,
                                                           atol=1e-12, top_population_tol=1.0), space=space)
    assert np.max(np.abs(a.states[0].data - b.states[0].data)) < 1e-7


def test_against_dense_reference_integrator():
    # independent oracle: scipy DOP853 on the dense lab-frame Hamiltonian
    from scipy.integrate import solve_ivp

    p, eff, space = setup(cut=(2, 2))
    psi0 = plus_vacuum_state(space)
    t = 0.4
    f = lambda s, y: -1j * (full_hamiltonian(p, eff, s, space, dense=True) @ y)
    ref = solve_ivp(f, (0, t), psi0.data, method="DOP853", rtol=1e-12, atol=1e-13).y[:, -1]
    got = evolve_schrodinger(p, eff, psi0, IntegratorOptions(sample_times=(t,), top_population_tol=1.0),
                             space=space).states[0].data
    assert np.max(np.abs(got - ref)) < 1e-8


def test_rk4_order_four():
    p, eff, space = setup()
    psi0 = plus_vacuum_state(space)
    t = 0.5

    def run(h):
        o = IntegratorOptions(sample_times=(t,), step=h, top_population_tol=1.0, norm_tol=1.0)
        return evolve_schrodinger(p, eff, psi0, o, space=space).states[0].data

    ref = run(1e-4)
    e1 = np.linalg.norm(run(4e-3) - ref)
    e2 = np.linalg.norm(run(2e-3) - ref)
    assert 12 < e1 / e2 < 20


def test_norm_monitor_breach():
    p, eff, space = setup()
    opts = IntegratorOptions(sample_times=(0.5,), step=0.02, top_population_tol=1.0)
    with pytest.raises(MonitorError, match="norm drift"):
        evolve_schrodinger(p, eff, plus_vacuum_state(space), opts, space=space)
    opts = IntegratorOptions(sample_times=(0.5,), step=0.02, top_population_tol=1.0, on_breach="warn")
    with pytest.warns(RuntimeWarning):
        traj = evolve_schrodinger(p, eff, plus_vacuum_state(space), opts, space=space)
    assert traj.flagged


def test_truncation_monitor():
    p, eff, space = setup(cut=(1, 1))
    opts = IntegratorOptions(sample_times=(3.0,))
    with pytest.raises(TruncationError):
        evolve_schrodinger(p, eff, plus_vacuum_state(space), opts, space=space)


def test_bad_initial_states():
    p, eff, space = setup()
    with pytest.raises(ArgumentError):
        evolve_schrodinger(p, eff, np.ones(space.dim), IntegratorOptions(sample_times=(1.0,)))
    other = plus_vacuum_state(CompositeSpace.from_cutoffs(2, 2))
    with pytest.raises(ArgumentError):
        evolve_schrodinger(p, eff, other, IntegratorOptions(sample_times=(1.0,)), space=space)


def test_lindblad_matches_schrodinger_projector():
    p, eff, space = setup()
    psi0 = plus_vacuum_state(space)
    times = (0.1, 0.35, 0.6)
    opts = IntegratorOptions(sample_times=times, top_population_tol=1.0)
    a = evolve_schrodinger(p, eff, psi0, opts, space=space)
    b = evolve_lindblad(p, eff, psi0.projector(), opts, space=space)
    for x, r in zip(a.states, b.states):
        assert np.max(np.abs(np.outer(x.data, x.data.conj()) - r.data)) < 1e-6


def test_cavity_decay_exponential():
    # g = 0 and the electron in |g>: the |g,1,0> population just decays at rate kappa
    kappa = 0.3
    p, eff, space = setup(g=0.0, kappa=kappa)
    rho0 = basis(space, "g", 1, 0).projector()
    times = tuple(np.linspace(0.5, 3.0, 6))
    traj = evolve_lindblad(p, eff, rho0, IntegratorOptions(sample_times=times, top_population_tol=1.0), space=space)
    k = space.index("g", 1, 0)
    for t, r in zip(times, traj.states):
        assert r.data[k, k].real == pytest.approx(math.exp(-kappa * t), abs=1e-6)


def test_electronic_and_vibrational_decay_rates():
    p, eff, space = setup(g=0.0, gamma_e=0.2, gamma_v=0.1)
    rho0 = basis(space, "g", 0, 1).projector()
    traj = evolve_lindblad(p, eff, rho0, IntegratorOptions(sample_times=(2.0,), top_population_tol=1.0), space=space)
    k = space.index("g", 0, 1)
    assert traj.states[0].data[k, k].real == pytest.approx(math.exp(-0.2), abs=1e-6)


def test_lindblad_trace_hermiticity_positivity():
    p, eff, space = setup(kappa=0.05, gamma_v=0.05, gamma_e=0.2)
    rho0 = plus_vacuum_state(space).projector()
    times = tuple(np.linspace(0.1, 1.0, 10))
    traj = evolve_lindblad(p, eff, rho0, IntegratorOptions(sample_times=times, positivity_every=1,
                                                           top_population_tol=1.0), space=space)
    for m, r in zip(traj.monitors, traj.states):
        assert m["trace_drift"] < 1e-6
        assert m["min_eig"] >= -1e-4
        assert np.array_equal(r.data, r.data.conj().T)


def test_rk45_lindblad_runs():
    p, eff, space = setup(cut=(2, 2), kappa=0.1)
    rho0 = plus_vacuum_state(space).projector()
    a = evolve_lindblad(p, eff, rho0, IntegratorOptions(sample_times=(0.2,), top_population_tol=1.0), space=space)
    b = evolve_lindblad(p, eff, rho0, IntegratorOptions(sample_times=(0.2,), method="rk45", top_population_tol=1.0),
                        space=space)
    assert np.max(np.abs(a.states[0].data - b.states[0].data)) < 1e-6


def test_numba_and_numpy_paths_agree():
    p, eff, space = setup(kappa=0.05, gamma_v=0.02, gamma_e=0.1)
    prop = Propagator(p, eff, space)
    rng = np.random.default_rng(3)
    x = rng.normal(size=space.dim) + 1j * rng.normal(size=space.dim)
    m = rng.normal(size=(space.dim,) * 2) + 1j * rng.normal(size=(space.dim,) * 2)
    rho = m @ m.conj().T
    for t in (0.0, 0.37):
        assert np.allclose(prop.rhs_vector(t, x, True), prop.rhs_vector(t, x, False), atol=1e-12)
        assert np.allclose(prop.rhs_matrix(t, rho, True), prop.rhs_matrix(t, rho, False), atol=1e-10)
    h = prop.default_step()
    a = _accel.rk4_matrix(rho, 0.0, h, 5, prop.op, prop.jumps, use_numba=True)
    b = _accel.rk4_matrix(rho, 0.0, h, 5, prop.op, prop.jumps, use_numba=False)
    assert np.allclose(a, b, atol=1e-10)


def test_rotating_generator_matches_lab_hamiltonian():
    # phases of the packed generator reproduce exp(iPhi) V exp(-iPhi)
    p, eff, space = setup()
    prop = Propagator(p, eff, space)
    t = 0.77
    x = np.random.default_rng(1).normal(size=space.dim) + 0j
    h = full_hamiltonian(p, eff, t, space, dense=True)
    ph = prop.frame_phases(t)
    d = np.diag(h).copy()
    v = h - np.diag(d)
    ref = -1j * (ph.conj() * (v @ (ph * x)))
    assert np.allclose(prop.rhs_vector(t, x), ref, atol=1e-10)


def test_default_step_resolves_fastest_rate():
    p, eff, space = setup()
    prop = Propagator(p, eff, space)
    assert prop.default_step(60) == pytest.approx(2 * math.pi / (60 * prop.omega_max))
    assert prop.omega_max >= p.omega_v
