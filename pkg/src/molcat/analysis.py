"""Observables: electronic projection, fidelities, logarithmic negativity, joint Wigner function."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .analytic import _sign
from .errors import ArgumentError, ShapeError, TruncationError, VanishingBranchError
from .hilbert import DensityMatrix, StateVector, as_matrix, displacement, parity, partial_transpose

BRANCH_MIN = 1e-12
WIGNER_IMAG_TOL = 1e-8
WIGNER_BOUND = 4 / math.pi**2


@dataclass(frozen=True)
class ProjectionResult:
    sign: str
    probability: float
    collapsed: StateVector | DensityMatrix


def _composite_dims(dims):
    if len(dims) != 3 or dims[0] != 2:
        raise ShapeError(f"expected a state on the composite space (2, N_a, N_b), got dims {dims}")
    return dims[1], dims[2]


def project_electronic(state, sign) -> ProjectionResult:
    """Measure the electronic system in |+-> = (|e> +- |g>)/sqrt(2).

    Returns the detection probability and the renormalized two-mode state the
    modes collapse into.
    """
    s = _sign(sign)
    label = "+" if s > 0 else "-"
    na, nb = _composite_dims(state.dims)
    d = na * nb
    if isinstance(state, StateVector):
        v = state.data
        branch = (v[d:] + s * v[:d]) / math.sqrt(2)
        p = float(np.vdot(branch, branch).real)
        if p < BRANCH_MIN:
            raise VanishingBranchError(f"branch '{label}' has probability {p:.3g}")
        return ProjectionResult(label, p, StateVector(branch / math.sqrt(p), (na, nb)))
    if isinstance(state, DensityMatrix):
        r = state.data
        gg, ge, eg, ee = r[:d, :d], r[:d, d:], r[d:, :d], r[d:, d:]
        block = 0.5 * (ee + gg + s * (eg + ge))
        p = float(np.trace(block).real)
        if p < BRANCH_MIN:
            raise VanishingBranchError(f"branch '{label}' has probability {p:.3g}")
        return ProjectionResult(label, p, DensityMatrix.hermitized(block / p, (na, nb)))
    raise ArgumentError("state must be a StateVector or DensityMatrix")


def detection_probabilities(state) -> tuple[float, float]:
    """(p_+, p_-) without forming the collapsed states."""
    na, nb = _composite_dims(state.dims)
    d = na * nb
    if isinstance(state, StateVector):
        v = state.data
        return (float(np.sum(np.abs(v[d:] + v[:d]) ** 2) / 2),
                float(np.sum(np.abs(v[d:] - v[:d]) ** 2) / 2))
    r = state.data
    base = 0.5 * (np.trace(r[:d, :d]) + np.trace(r[d:, d:])).real
    cross = np.trace(r[d:, :d]).real
    return float(base + cross), float(base - cross)


def _check_same(x_dim, y_dim):
    if x_dim != y_dim:
        raise ShapeError(f"dimension mismatch: {x_dim} vs {y_dim}")


def fidelity_pure(x: StateVector, y: StateVector) -> float:
    """|<x|y>|^2."""
    _check_same(x.data.size, y.data.size)
    return float(abs(np.vdot(x.data, y.data)) ** 2)


def fidelity_mixed(psi: StateVector, rho) -> float:
    """<psi|rho|psi>, evaluated directly as a quadratic form."""
    r = as_matrix(rho)
    _check_same(psi.data.size, r.shape[0])
    return float(np.vdot(psi.data, r @ psi.data).real)


def _two_mode_matrix(state, dims=None):
    if isinstance(state, StateVector):
        return np.outer(state.data, state.data.conj()), state.dims
    if isinstance(state, DensityMatrix):
        return state.data, state.dims
    if dims is None:
        raise ArgumentError("dims required for a raw matrix")
    return np.asarray(state, dtype=complex), tuple(dims)


def log_negativity(rho, dims=None, herm_tol=1e-10) -> float:
    """log2 of the trace norm of the partial transpose over mode b.

    The partial transpose of a Hermitian matrix is Hermitian, so the trace norm
    is the sum of absolute eigenvalues.  No clamping at zero is applied.
    """
    r, dims = _two_mode_matrix(rho, dims)
    if len(dims) != 2:
        raise ShapeError(f"expected a two-mode state, got dims {dims}")
    herm = float(np.max(np.abs(r - r.conj().T)))
    if herm > herm_tol:
        raise ArgumentError(f"input is not Hermitian (defect {herm:.3g})")
    pt = partial_transpose(r, dims, "b")
    ev = np.linalg.eigvalsh(0.5 * (pt + pt.conj().T))
    return float(math.log2(np.sum(np.abs(ev))))


def log_negativity_svd(rho, dims=None) -> float:
    """Same quantity from singular values (cross-check path)."""
    r, dims = _two_mode_matrix(rho, dims)
    pt = partial_transpose(r, dims, "b")
    return float(math.log2(np.sum(np.linalg.svd(pt, compute_uv=False))))


def log_negativity_pure(psi: StateVector) -> float:
    """Closed form for pure states: 2 log2 of the sum of Schmidt coefficients."""
    if len(psi.dims) != 2:
        raise ShapeError(f"expected a two-mode state, got dims {psi.dims}")
    s = np.linalg.svd(psi.tensor(), compute_uv=False)
    return float(2 * math.log2(np.sum(s)))


def mean_excitations(state) -> tuple[float, float]:
    """(<a^+ a>, <b^+ b>) for two-mode or composite states."""
    dims = state.dims
    if len(dims) == 3:
        na, nb = dims[1], dims[2]
    elif len(dims) == 2:
        na, nb = dims
    else:
        raise ShapeError(f"unsupported dims {dims}")
    if isinstance(state, StateVector):
        pops = np.abs(state.data) ** 2
    else:
        pops = np.diag(state.data).real
    pops = pops.reshape(-1, na, nb)
    n = np.arange(na)[None, :, None]
    j = np.arange(nb)[None, None, :]
    return float(np.sum(pops * n)), float(np.sum(pops * j))


@dataclass(frozen=True)
class WignerGrid:
    """W(sigma, chi) on the outer product (or zip) of two complex coordinate lists."""

    sigmas: np.ndarray
    chis: np.ndarray
    values: np.ndarray
    mesh: bool = True


def _displaced_parity(points, dim):
    # D(z) P D(z)^+ = D(2z) P, with exact matrix elements of D
    par = parity(dim)
    return np.stack([displacement(2 * z, dim) * par[None, :] for z in points])


def wigner_guard(points, dim) -> float:
    """Largest weight the cropped D(2z) moves past the cutoff, over ``points``.

    Equals the Poisson tail of |2z| beyond ``dim`` levels, seen from the
    vacuum; used as a cheap sanity bound for the requested window.
    """
    from .hilbert import poisson_tail

    return max((poisson_tail(2 * abs(z), dim) for z in points), default=0.0)


def joint_wigner(state, sigmas, chis, mesh=True, dims=None, guard_tol=None) -> WignerGrid:
    """Joint Wigner function (4/pi^2) <D_a P_a D_a^+ (x) D_b P_b D_b^+>.

    ``sigmas`` and ``chis`` are complex coordinates.  With ``mesh`` the result
    has shape ``(len(sigmas), len(chis))``; otherwise they are paired
    elementwise.  The matrix elements of the displaced parity are exact, so the
    only approximation is the truncation of the state itself.
    """
    r, dims = _two_mode_matrix(state, dims)
    if len(dims) != 2:
        raise ShapeError(f"expected a two-mode state, got dims {dims}")
    na, nb = dims
    sig = np.atleast_1d(np.asarray(sigmas, dtype=complex))
    chi = np.atleast_1d(np.asarray(chis, dtype=complex))
    if not mesh and sig.shape != chi.shape:
        raise ShapeError("paired coordinates must have equal length")
    if guard_tol is not None:
        worst = max(wigner_guard(sig, na), wigner_guard(chi, nb))
        if worst > guard_tol:
            raise TruncationError(
                f"Wigner window too wide for cutoffs {dims}: tail weight {worst:.2e} > {guard_tol:g}")
    # Tr[rho (A (x) B)] = sum rho[(m,k),(n,j)] A[n,m] B[j,k]
    t = r.reshape(na, nb, na, nb)
    A = _displaced_parity(sig, na)
    B = _displaced_parity(chi, nb)
    if mesh:
        tmp = np.einsum("mknj,pnm->pkj", t, A, optimize=True)
        vals = np.einsum("pkj,qjk->pq", tmp, B, optimize=True)
    else:
        vals = np.array([np.einsum("mknj,nm,jk->", t, A[i], B[i]) for i in range(sig.size)])
    vals = WIGNER_BOUND * vals
    imag = float(np.max(np.abs(vals.imag))) if vals.size else 0.0
    if imag > WIGNER_IMAG_TOL:
        raise ArgumentError(f"Wigner values have imaginary residue {imag:.3g}; state not Hermitian?")
    return WignerGrid(sig, chi, vals.real.copy(), mesh)
