"""Truncated Fock (cavity) x Fock (vibration) x two-level Hilbert space.

Linear layout of the composite space is level-major, then cavity Fock index
``n``, then vibrational Fock index ``j``::

    k = s * (N_a * N_b) + n * N_b + j,    s = 0 for |g>, 1 for |e>

with ``N_a = n_a_max + 1`` and ``N_b = n_b_max + 1``.  A C-order reshape of a
composite vector to ``(2, N_a, N_b)`` therefore exposes each electronic block
as a contiguous two-mode slab, and a two-mode vector reshapes to ``(N_a, N_b)``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp
from scipy.special import eval_genlaguerre, gammaln

from .errors import ArgumentError, IndexRangeError, ShapeError, TruncationWarning

LEVELS = ("g", "e")

COHERENT_DEFICIT_WARN = 1e-4


@dataclass(frozen=True)
class FockCutoffs:
    n_a_max: int
    n_b_max: int

    def __post_init__(self):
        for name in ("n_a_max", "n_b_max"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ArgumentError(f"{name} must be an integer >= 1, got {v!r}")

    @property
    def mode_dims(self) -> tuple[int, int]:
        return (self.n_a_max + 1, self.n_b_max + 1)


@dataclass(frozen=True)
class CompositeSpace:
    cutoffs: FockCutoffs

    @classmethod
    def from_cutoffs(cls, n_a_max: int, n_b_max: int) -> "CompositeSpace":
        return cls(FockCutoffs(n_a_max, n_b_max))

    @property
    def mode_dims(self) -> tuple[int, int]:
        return self.cutoffs.mode_dims

    @property
    def dims(self) -> tuple[int, int, int]:
        return (2,) + self.mode_dims

    @property
    def mode_dim(self) -> int:
        na, nb = self.mode_dims
        return na * nb

    @property
    def dim(self) -> int:
        return 2 * self.mode_dim

    def index(self, level: str, n: int, j: int) -> int:
        if level not in LEVELS:
            raise IndexRangeError(f"level must be 'g' or 'e', got {level!r}")
        na, nb = self.mode_dims
        if not (0 <= n < na) or not (0 <= j < nb):
            raise IndexRangeError(
                f"(n, j) = ({n}, {j}) outside cutoffs ({na - 1}, {nb - 1})"
            )
        return LEVELS.index(level) * self.mode_dim + n * nb + j

    def unindex(self, k: int) -> tuple[str, int, int]:
        if not 0 <= k < self.dim:
            raise IndexRangeError(f"index {k} outside 0..{self.dim - 1}")
        s, rem = divmod(k, self.mode_dim)
        n, j = divmod(rem, self.mode_dims[1])
        return LEVELS[s], n, j

    # Operators on the full composite space (sparse CSR).

    @cached_property
    def _eyes(self):
        na, nb = self.mode_dims
        return sp.identity(2, format="csr"), sp.identity(na, format="csr"), sp.identity(nb, format="csr")

    def _embed(self, op_s, op_a, op_b):
        return sp.kron(sp.kron(op_s, op_a), op_b, format="csr").astype(complex)

    @cached_property
    def a(self) -> sp.csr_matrix:
        i2, _, ib = self._eyes
        return self._embed(i2, sp.csr_matrix(annihilation(self.mode_dims[0])), ib)

    @cached_property
    def b(self) -> sp.csr_matrix:
        i2, ia, _ = self._eyes
        return self._embed(i2, ia, sp.csr_matrix(annihilation(self.mode_dims[1])))

    @cached_property
    def sigma_minus(self) -> sp.csr_matrix:
        # |g><e| with g = row 0, e = row 1
        _, ia, ib = self._eyes
        return self._embed(sp.csr_matrix(np.array([[0.0, 1.0], [0.0, 0.0]])), ia, ib)

    @cached_property
    def excited_projector(self) -> sp.csr_matrix:
        _, ia, ib = self._eyes
        return self._embed(sp.csr_matrix(np.diag([0.0, 1.0])), ia, ib)

    @cached_property
    def quanta(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Per-index (level, n, j) occupation arrays in the linear layout."""
        s, n, j = np.indices(self.dims).reshape(3, -1)
        return s, n, j


def annihilation(dim: int) -> np.ndarray:
    """Truncated ladder operator with sqrt(n) on the first superdiagonal."""
    if int(dim) != dim or dim < 2:
        raise ArgumentError(f"dim must be an integer >= 2, got {dim!r}")
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1).astype(complex)


def creation(dim: int) -> np.ndarray:
    return annihilation(dim).T.copy()


@dataclass(frozen=True, eq=False)
class StateVector:
    """Normalized pure state with subsystem dimensions ``dims``."""

    data: np.ndarray
    dims: tuple[int, ...]
    truncation_deficit: float = field(default=0.0)

    def __post_init__(self):
        data = np.array(self.data, dtype=complex).reshape(-1)
        dims = tuple(int(d) for d in self.dims)
        if data.size != int(np.prod(dims)):
            raise ShapeError(f"vector of length {data.size} does not match dims {dims}")
        norm = np.linalg.norm(data)
        if abs(norm - 1.0) > 1e-8:
            raise ArgumentError(f"state is not normalized (norm = {norm!r})")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "dims", dims)

    @classmethod
    def normalized(cls, data, dims, truncation_deficit=0.0) -> "StateVector":
        data = np.asarray(data, dtype=complex)
        return cls(data / np.linalg.norm(data), dims, truncation_deficit)

    @property
    def dim(self) -> int:
        return self.data.size

    def tensor(self) -> np.ndarray:
        return self.data.reshape(self.dims)

    def projector(self) -> "DensityMatrix":
        return DensityMatrix(np.outer(self.data, self.data.conj()), self.dims)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    data: np.ndarray
    dims: tuple[int, ...]

    HERMITIAN_TOL = 1e-10
    TRACE_TOL = 1e-6
    POSITIVITY_TOL = 1e-6

    def __post_init__(self):
        data = np.array(self.data, dtype=complex)
        dims = tuple(int(d) for d in self.dims)
        d = int(np.prod(dims))
        if data.shape != (d, d):
            raise ShapeError(f"matrix of shape {data.shape} does not match dims {dims}")
        herm = np.max(np.abs(data - data.conj().T)) if d else 0.0
        if herm > self.HERMITIAN_TOL:
            raise ArgumentError(f"density matrix not Hermitian (defect {herm:.3g})")
        tr = np.trace(data).real
        if abs(tr - 1.0) > self.TRACE_TOL:
            raise ArgumentError(f"density matrix trace {tr!r} != 1")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "dims", dims)

    @classmethod
    def hermitized(cls, data, dims) -> "DensityMatrix":
        data = np.asarray(data, dtype=complex)
        return cls(0.5 * (data + data.conj().T), dims)

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.data)[0])

    def check_positive(self, tol=POSITIVITY_TOL) -> float:
        lo = self.min_eigenvalue()
        if lo < -tol:
            raise ArgumentError(f"density matrix has eigenvalue {lo:.3g} < -{tol:g}")
        return lo


def as_matrix(rho) -> np.ndarray:
    return rho.data if isinstance(rho, DensityMatrix) else np.asarray(rho)


def fock_state(dims, *occupations) -> StateVector:
    if len(occupations) != len(dims):
        raise ShapeError("one occupation per subsystem required")
    v = np.zeros(dims, dtype=complex)
    try:
        v[tuple(occupations)] = 1.0
    except IndexError as exc:
        raise IndexRangeError(str(exc)) from None
    return StateVector(v.reshape(-1), dims)


def coherent_amplitudes(amplitude: complex, dim: int) -> np.ndarray:
    """Unnormalized Fock amplitudes exp(-|a|^2/2) a^n / sqrt(n!) for n < dim.

    Computed in log space so large ``n`` does not overflow.
    """
    amplitude = complex(amplitude)
    out = np.zeros(dim, dtype=complex)
    if amplitude == 0:
        out[0] = 1.0
        return out
    n = np.arange(dim)
    log_mag = -0.5 * abs(amplitude) ** 2 + n * np.log(abs(amplitude)) - 0.5 * gammaln(n + 1)
    return np.exp(log_mag) * np.exp(1j * n * np.angle(amplitude))


def poisson_tail(amplitude: complex, dim: int) -> float:
    """Probability weight of Fock levels >= dim in a coherent state."""
    from scipy.special import gammainc

    x = abs(amplitude) ** 2
    if x == 0:
        return 0.0
    return float(gammainc(dim, x))


def coherent_state(amplitude: complex, dim: int, warn=True) -> StateVector:
    """Coherent state |amplitude> truncated to ``dim`` levels and renormalized.

    The weight lost to truncation is kept on ``truncation_deficit``.
    """
    c = coherent_amplitudes(amplitude, dim)
    deficit = poisson_tail(amplitude, dim)
    if warn and deficit > COHERENT_DEFICIT_WARN:
        warnings.warn(
            f"coherent state |{amplitude:.3g}> loses {deficit:.2e} of its norm to "
            f"truncation at {dim} levels",
            TruncationWarning,
            stacklevel=2,
        )
    return StateVector.normalized(c, (dim,), truncation_deficit=deficit)


def displacement(gamma: complex, dim: int) -> np.ndarray:
    """Matrix elements <m|D(gamma)|n>, m, n < dim, of the untruncated operator.

    Uses the generalized-Laguerre closed form, so the result is the exact
    top-left block of the infinite matrix (not exp of a truncated generator).
    """
    gamma = complex(gamma)
    m, n = np.indices((dim, dim))
    if gamma == 0:
        return np.eye(dim, dtype=complex)
    x = abs(gamma) ** 2
    lo = np.minimum(m, n)
    diff = np.abs(m - n)
    # below the diagonal the factor is gamma^(m-n); above it (-gamma*)^(n-m)
    base = np.where(m >= n, gamma, -np.conj(gamma))
    log_pref = 0.5 * (gammaln(lo + 1) - gammaln(lo + diff + 1)) + diff * np.log(abs(gamma)) - 0.5 * x
    phase = np.exp(1j * diff * np.angle(base))
    return np.exp(log_pref) * phase * eval_genlaguerre(lo, diff, x)


def parity(dim: int) -> np.ndarray:
    return (-1.0) ** np.arange(dim)


def _two_mode_tensor(rho, dims):
    rho = as_matrix(rho)
    na, nb = dims
    d = na * nb
    if rho.ndim != 2 or rho.shape != (d, d):
        raise ShapeError(f"expected a {d}x{d} two-mode matrix, got shape {rho.shape}")
    return rho.reshape(na, nb, na, nb)


def partial_transpose(rho, dims, subsystem: str = "b") -> np.ndarray:
    """Partial transpose of a two-mode matrix: <m,k|.|n,j> -> <m,j|.|n,k> for 'b'."""
    t = _two_mode_tensor(rho, dims)
    if subsystem == "b":
        t = t.transpose(0, 3, 2, 1)
    elif subsystem == "a":
        t = t.transpose(2, 1, 0, 3)
    else:
        raise ArgumentError(f"subsystem must be 'a' or 'b', got {subsystem!r}")
    d = dims[0] * dims[1]
    return t.reshape(d, d).copy()


def partial_trace(rho, dims, keep: str = "a") -> DensityMatrix:
    t = _two_mode_tensor(rho, dims)
    if keep == "a":
        red = np.einsum("mknk->mn", t)
        return DensityMatrix.hermitized(red, (dims[0],))
    if keep == "b":
        red = np.einsum("mkmj->kj", t)
        return DensityMatrix.hermitized(red, (dims[1],))
    raise ArgumentError(f"keep must be 'a' or 'b', got {keep!r}")
