"""Exact closed (Schrodinger) and open (Lindblad) evolution under the lab-frame H(t).

The diagonal part of H(t) is ``d0 + cos(omega_0 t) dm`` and the off-diagonal
part ``V`` is time independent (the modulation only shifts mode frequencies).
By default the integration runs in the frame generated by the diagonal part,
``psi_rot = exp(i Phi(t)) psi``, ``Phi = d0 t + dm sin(omega_0 t)/omega_0``,
which is exact and removes the omega_e and n*omega_c time scales from the step
constraint.  The jump operators lower the diagonal energy by a state
independent amount, so the dissipators are frame invariant.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp
from scipy.integrate import solve_ivp

from . import _accel
from .errors import ArgumentError, MonitorError, PositivityError, TruncationError
from .hilbert import CompositeSpace, DensityMatrix, StateVector
from .model import EffectiveParams, ModelParams, hamiltonian_terms

DEFAULT_STEPS_PER_CYCLE = 60


@dataclass(frozen=True)
class IntegratorOptions:
    sample_times: tuple
    method: str = "rk4"
    step: float | None = None
    steps_per_cycle: int = DEFAULT_STEPS_PER_CYCLE
    rtol: float = 1e-9
    atol: float = 1e-11
    frame: str = "rotating"
    norm_tol: float = 1e-8
    trace_tol: float = 1e-6
    top_population_tol: float = 1e-6
    positivity_tol: float = 1e-4
    positivity_every: int = 10
    on_breach: str = "raise"
    use_numba: bool | None = None

    def __post_init__(self):
        ts = np.asarray(self.sample_times, dtype=float).reshape(-1)
        if ts.size == 0:
            raise ArgumentError("sample_times must not be empty")
        if ts[0] < 0 or np.any(np.diff(ts) <= 0):
            raise ArgumentError("sample_times must be strictly increasing and start at >= 0")
        object.__setattr__(self, "sample_times", tuple(float(t) for t in ts))
        if self.method not in ("rk4", "rk45"):
            raise ArgumentError(f"method must be 'rk4' or 'rk45', got {self.method!r}")
        if self.frame not in ("rotating", "lab"):
            raise ArgumentError(f"frame must be 'rotating' or 'lab', got {self.frame!r}")
        if self.step is not None and not self.step > 0:
            raise ArgumentError("step must be > 0")
        if not (self.rtol > 0 and self.atol > 0):
            raise ArgumentError("tolerances must be > 0")
        if self.on_breach not in ("raise", "warn", "ignore"):
            raise ArgumentError("on_breach must be 'raise', 'warn' or 'ignore'")

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["sample_times"] = {"first": self.sample_times[0], "last": self.sample_times[-1],
                             "count": len(self.sample_times)}
        return d


@dataclass
class Trajectory:
    times: np.ndarray
    states: list
    monitors: list[dict]
    observations: list = field(default_factory=list)
    step: float | None = None
    flagged: bool = False


class Propagator:
    """ELL-packed generator of one model on one truncated space."""

    def __init__(self, params: ModelParams, eff: EffectiveParams, space: CompositeSpace, frame="rotating"):
        self.params, self.eff, self.space, self.frame = params, eff, space, frame
        terms = hamiltonian_terms(params, eff, space)
        static, mod = terms.static.tocsr(), terms.modulation.tocsr()
        off_mod = mod - sp.diags(mod.diagonal())
        if off_mod.count_nonzero():
            raise ArgumentError("modulation term must be diagonal in the Fock basis")
        self.omega0 = eff.omega_0
        self.d0 = static.diagonal().real.copy()
        self.dm = mod.diagonal().real.copy()
        V = (static - sp.diags(static.diagonal())).tocsr()
        V.eliminate_zeros()
        self.V = V
        self._pack(V)
        self._pack_jumps()

    def _pack(self, V):
        n = V.shape[0]
        counts = np.diff(V.indptr)
        K = max(int(counts.max()) if n else 0, 1)
        cols = np.repeat(np.arange(n)[:, None], K, axis=1)
        vals = np.zeros((n, K), complex)
        for k in range(n):
            lo, hi = V.indptr[k], V.indptr[k + 1]
            cols[k, : hi - lo] = V.indices[lo:hi]
            vals[k, : hi - lo] = V.data[lo:hi]
        rows = np.repeat(np.arange(n)[:, None], K, axis=1)
        if self.frame == "rotating":
            w0 = self.d0[rows] - self.d0[cols]
            wm = (self.dm[rows] - self.dm[cols]) / self.omega0
            key = np.round(np.stack([w0.ravel(), wm.ravel()], axis=1), 9)
            uniq, types = np.unique(key, axis=0, return_inverse=True)
            self.types = types.reshape(n, K).astype(np.int64)
            self.w0, self.wm = uniq[:, 0].copy(), uniq[:, 1].copy()
            d0, dm = np.zeros(n), np.zeros(n)
        else:
            self.types = np.zeros((n, K), np.int64)
            self.w0, self.wm = np.zeros(1), np.zeros(1)
            d0, dm = self.d0, self.dm
        self.op = (np.ascontiguousarray(cols, dtype=np.int64), np.ascontiguousarray(vals), self.types,
                   self.w0, self.wm, np.ascontiguousarray(d0), np.ascontiguousarray(dm), float(self.omega0))

    def _pack_jumps(self):
        p, s = self.params, self.space
        n = s.dim
        channels = [(p.gamma_e, s.sigma_minus), (p.kappa, s.a), (p.gamma_v, s.b)]
        jcols, jvals = [], []
        gdiag = np.zeros(n)
        for rate, o in channels:
            if rate == 0:
                continue
            o = o.tocsr()
            if np.diff(o.indptr).max() > 1:
                raise ArgumentError("jump operators must have at most one entry per row")
            c = np.arange(n)
            v = np.zeros(n, complex)
            coo = o.tocoo()
            c[coo.row] = coo.col
            v[coo.row] = math.sqrt(rate) * coo.data
            # diagonal-energy drop along the jump must be state independent
            if coo.nnz:
                drop0 = self.d0[coo.col] - self.d0[coo.row]
                dropm = self.dm[coo.col] - self.dm[coo.row]
                if np.ptp(drop0) > 1e-9 * max(1.0, np.abs(drop0).max()) or np.ptp(dropm) > 1e-9 * max(1.0, np.abs(dropm).max()):
                    raise ArgumentError("jump operator is not frame invariant")
            jcols.append(c)
            jvals.append(v)
            gdiag += rate * np.asarray((o.conj().T @ o).diagonal()).real
        if jcols:
            self.jumps = (np.array(jcols, dtype=np.int64), np.array(jvals), gdiag)
        else:
            self.jumps = (np.zeros((0, n), np.int64), np.zeros((0, n), complex), gdiag)

    @property
    def omega_max(self) -> float:
        """Largest rate the step must resolve in the chosen frame."""
        row_sum = float(np.abs(self.op[1]).sum(axis=1).max())
        if self.frame == "rotating":
            inst = float(np.max(np.abs(self.w0) + np.abs(self.wm) * self.omega0))
            return max(inst, row_sum)
        return float(np.max(np.abs(self.d0) + np.abs(self.dm))) + row_sum

    def default_step(self, steps_per_cycle=DEFAULT_STEPS_PER_CYCLE) -> float:
        return 2 * math.pi / (steps_per_cycle * self.omega_max)

    def frame_phases(self, t: float) -> np.ndarray:
        """exp(-i Phi(t)): multiply a rotating-frame vector by this to get the lab vector."""
        if self.frame == "lab":
            return np.ones(self.space.dim, complex)
        phi = self.d0 * t + self.dm * math.sin(self.omega0 * t) / self.omega0
        return np.exp(-1j * phi)

    def rhs_vector(self, t, x, use_numba=None):
        return _accel.schrodinger_rhs(t, x, self.op, use_numba)

    def rhs_matrix(self, t, rho, use_numba=None):
        return _accel.lindblad_rhs(t, rho, self.op, self.jumps, use_numba)


def _top_populations(space: CompositeSpace, probs: np.ndarray) -> tuple[float, float]:
    p = probs.reshape(space.dims)
    return float(p[:, -1, :].sum()), float(p[:, :, -1].sum())


def _breach(opts: IntegratorOptions, exc: Exception):
    if opts.on_breach == "raise":
        raise exc
    if opts.on_breach == "warn":
        warnings.warn(str(exc), RuntimeWarning, stacklevel=3)


def _intervals(times, h_max):
    t_prev = 0.0
    for t in times:
        dt = t - t_prev
        if dt <= 0:
            yield t, 0.0, 0
        else:
            n = max(1, math.ceil(dt / h_max - 1e-9))
            yield t, dt / n, n
        t_prev = t


def _check_space(space, dims):
    if tuple(dims) != space.dims:
        raise ArgumentError(f"state dims {tuple(dims)} do not match space dims {space.dims}")


def evolve_schrodinger(params: ModelParams, eff: EffectiveParams, psi0: StateVector, opts: IntegratorOptions,
                       space: CompositeSpace | None = None, observe: Callable | None = None,
                       store_states=True) -> Trajectory:
    """Integrate i d/dt |psi> = H(t)|psi> and sample at ``opts.sample_times``."""
    if not isinstance(psi0, StateVector):
        raise ArgumentError("psi0 must be a StateVector")
    if space is None:
        space = _space_from_dims(psi0.dims)
    _check_space(space, psi0.dims)
    prop = Propagator(params, eff, space, opts.frame)
    h_max = opts.step or prop.default_step(opts.steps_per_cycle)
    times = np.array(opts.sample_times)
    traj = Trajectory(times=times, states=[], monitors=[], step=h_max)
    x = np.array(psi0.data, dtype=complex)

    if opts.method == "rk45":
        sol = solve_ivp(lambda t, y: prop.rhs_vector(t, y, opts.use_numba), (0.0, times[-1]), x,
                        method="RK45", t_eval=times, rtol=opts.rtol, atol=opts.atol)
        if not sol.success:
            raise MonitorError(f"adaptive integration failed: {sol.message}")
        samples = ((t, sol.y[:, i], None, None) for i, t in enumerate(times))
    else:
        def _fixed():
            t0, y = 0.0, x
            for t, h, n in _intervals(times, h_max):
                if n:
                    y = _accel.rk4_vector(y, t0, h, n, prop.op, opts.use_numba)
                yield t, y, h, n
                t0 = t
        samples = _fixed()

    for t, y, h, n in samples:
        lab = prop.frame_phases(t) * y
        norm = float(np.linalg.norm(lab))
        drift = abs(norm - 1.0)
        top_a, top_b = _top_populations(space, np.abs(lab) ** 2)
        rec = dict(t=float(t), norm_drift=drift, top_a=top_a, top_b=top_b, step=h, nsteps=n)
        traj.monitors.append(rec)
        if drift > opts.norm_tol * max(t, 1.0):
            traj.flagged = True
            _breach(opts, MonitorError(
                f"norm drift {drift:.3e} at t = {t:.6g} exceeds {opts.norm_tol:g} per unit time; "
                f"reduce the step", t, rec))
        if max(top_a, top_b) > opts.top_population_tol:
            traj.flagged = True
            _breach(opts, TruncationError(
                f"top Fock level population {max(top_a, top_b):.3e} at t = {t:.6g} exceeds "
                f"{opts.top_population_tol:g}; raise the cutoffs"))
        state = StateVector(lab / norm, space.dims)
        if store_states:
            traj.states.append(state)
        if observe is not None:
            traj.observations.append(observe(t, state))
    return traj


def evolve_lindblad(params: ModelParams, eff: EffectiveParams, rho0: DensityMatrix, opts: IntegratorOptions,
                    space: CompositeSpace | None = None, observe: Callable | None = None,
                    store_states=True) -> Trajectory:
    """Integrate the vacuum-bath master equation with cavity, vibrational and electronic decay."""
    if not isinstance(rho0, DensityMatrix):
        raise ArgumentError("rho0 must be a DensityMatrix")
    if space is None:
        space = _space_from_dims(rho0.dims)
    _check_space(space, rho0.dims)
    prop = Propagator(params, eff, space, opts.frame)
    h_max = opts.step or prop.default_step(opts.steps_per_cycle)
    times = np.array(opts.sample_times)
    traj = Trajectory(times=times, states=[], monitors=[], step=h_max)
    r = np.array(rho0.data, dtype=complex)
    dim = space.dim

    if opts.method == "rk45":
        sol = solve_ivp(lambda t, y: prop.rhs_matrix(t, y.reshape(dim, dim), opts.use_numba).ravel(),
                        (0.0, times[-1]), r.ravel(), method="RK45", t_eval=times,
                        rtol=opts.rtol, atol=opts.atol)
        if not sol.success:
            raise MonitorError(f"adaptive integration failed: {sol.message}")
        samples = ((t, sol.y[:, i].reshape(dim, dim), None, None) for i, t in enumerate(times))
    else:
        def _fixed():
            t0, y = 0.0, r
            for t, h, n in _intervals(times, h_max):
                if n:
                    y = _accel.rk4_matrix(y, t0, h, n, prop.op, prop.jumps, opts.use_numba)
                    y = 0.5 * (y + y.conj().T)
                yield t, y, h, n
                t0 = t
        samples = _fixed()

    last = len(times) - 1
    for i, (t, y, h, n) in enumerate(samples):
        ph = prop.frame_phases(t)
        lab = ph[:, None] * y * ph.conj()[None, :]
        herm = float(np.max(np.abs(lab - lab.conj().T)))
        lab = 0.5 * (lab + lab.conj().T)
        tr = float(np.trace(lab).real)
        drift = abs(tr - 1.0)
        top_a, top_b = _top_populations(space, np.diag(lab).real)
        rec = dict(t=float(t), trace_drift=drift, hermiticity=herm, top_a=top_a, top_b=top_b,
                   step=h, nsteps=n, min_eig=None)
        if opts.positivity_every and (i % opts.positivity_every == 0 or i == last):
            lo = float(np.linalg.eigvalsh(lab)[0])
            rec["min_eig"] = lo
            if lo < -opts.positivity_tol:
                traj.monitors.append(rec)
                raise PositivityError(
                    f"density matrix eigenvalue {lo:.3e} < -{opts.positivity_tol:g} at t = {t:.6g}", t, rec)
        traj.monitors.append(rec)
        if drift > opts.trace_tol * max(t, 1.0):
            traj.flagged = True
            _breach(opts, MonitorError(
                f"trace drift {drift:.3e} at t = {t:.6g} exceeds {opts.trace_tol:g} per unit time", t, rec))
        if max(top_a, top_b) > opts.top_population_tol:
            traj.flagged = True
            _breach(opts, TruncationError(
                f"top Fock level population {max(top_a, top_b):.3e} at t = {t:.6g} exceeds "
                f"{opts.top_population_tol:g}; raise the cutoffs"))
        state = DensityMatrix(lab / tr, space.dims)
        if store_states:
            traj.states.append(state)
        if observe is not None:
            traj.observations.append(observe(t, state))
    return traj


def _space_from_dims(dims) -> CompositeSpace:
    if len(dims) != 3 or dims[0] != 2:
        raise ArgumentError(f"expected composite dims (2, N_a, N_b), got {dims}")
    return CompositeSpace.from_cutoffs(dims[1] - 1, dims[2] - 1)


def plus_vacuum_state(space: CompositeSpace) -> StateVector:
    """(|g> + |e>)|0,0>/sqrt(2)."""
    v = np.zeros(space.dims, complex)
    v[0, 0, 0] = v[1, 0, 0] = 1 / math.sqrt(2)
    return StateVector(v.reshape(-1), space.dims)
