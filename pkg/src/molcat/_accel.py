"""Hot loops of the integrators.

The off-diagonal part of H is kept in ELLPACK form (``cols``, ``vals`` of
shape ``(dim, K)``, padded with zero values pointing at the row itself).  Each
slot carries a ``type`` index into per-type rotation frequencies ``w0``,
``wm`` so that its time-dependent phase is

    exp(i (w0 t + wm sin(omega0 t)))

and the diagonal of H is ``d0 + cos(omega0 t) dm``.  The rotating frame sets
``d0 = dm = 0`` and moves everything into the phases; the lab frame keeps the
diagonal and uses zero frequencies.

Every kernel exists twice: a numba ``@njit`` version and a pure-numpy one.
Set ``MOLCAT_NO_NUMBA=1`` (or uninstall numba) to force the numpy path.
"""

from __future__ import annotations

import os

import numpy as np

_DISABLED = os.environ.get("MOLCAT_NO_NUMBA", "").strip().lower() not in ("", "0", "false", "no")

try:
    if _DISABLED:
        raise ImportError
    from numba import njit

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda f: f


def backend() -> str:
    return "numba" if HAVE_NUMBA else "numpy"


# ---------------------------------------------------------------- numpy path


def np_phases(w0, wm, omega0, t):
    return np.exp(1j * (w0 * t + wm * np.sin(omega0 * t)))


def np_schrodinger_rhs(t, x, op):
    cols, vals, types, w0, wm, d0, dm, omega0 = op
    coef = vals * np_phases(w0, wm, omega0, t)[types]
    y = (d0 + np.cos(omega0 * t) * dm) * x
    y += np.einsum("ks,ks->k", coef, x[cols])
    return -1j * y


def np_lindblad_rhs(t, rho, op, jumps):
    cols, vals, types, w0, wm, d0, dm, omega0 = op
    jcols, jvals, gdiag = jumps
    coef = vals * np_phases(w0, wm, omega0, t)[types]
    d = d0 + np.cos(omega0 * t) * dm
    x = np.einsum("ks,ksl->kl", coef, rho[cols])
    x += d[:, None] * rho
    # rho Hermitian => rho H = (H rho)^dagger
    out = -1j * (x - x.conj().T)
    for q in range(jcols.shape[0]):
        c, v = jcols[q], jvals[q]
        out += (v[:, None] * v.conj()[None, :]) * rho[np.ix_(c, c)]
    out -= 0.5 * (gdiag[:, None] + gdiag[None, :]) * rho
    return out


def np_rk4_vector(x, t0, h, nsteps, op):
    for i in range(nsteps):
        t = t0 + i * h
        k1 = np_schrodinger_rhs(t, x, op)
        k2 = np_schrodinger_rhs(t + 0.5 * h, x + 0.5 * h * k1, op)
        k3 = np_schrodinger_rhs(t + 0.5 * h, x + 0.5 * h * k2, op)
        k4 = np_schrodinger_rhs(t + h, x + h * k3, op)
        x = x + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return x


def np_rk4_matrix(rho, t0, h, nsteps, op, jumps):
    for i in range(nsteps):
        t = t0 + i * h
        k1 = np_lindblad_rhs(t, rho, op, jumps)
        k2 = np_lindblad_rhs(t + 0.5 * h, rho + 0.5 * h * k1, op, jumps)
        k3 = np_lindblad_rhs(t + 0.5 * h, rho + 0.5 * h * k2, op, jumps)
        k4 = np_lindblad_rhs(t + h, rho + h * k3, op, jumps)
        rho = rho + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return rho


# ---------------------------------------------------------------- numba path


@njit(cache=True)
def _nb_phases(w0, wm, omega0, t, out):
    s = np.sin(omega0 * t)
    for q in range(w0.size):
        out[q] = np.exp(1j * (w0[q] * t + wm[q] * s))


@njit(cache=True)
def _nb_schrodinger_rhs(t, x, cols, vals, types, w0, wm, d0, dm, omega0, ph, out):
    _nb_phases(w0, wm, omega0, t, ph)
    c = np.cos(omega0 * t)
    n, K = cols.shape
    for k in range(n):
        acc = (d0[k] + c * dm[k]) * x[k]
        for s in range(K):
            acc += vals[k, s] * ph[types[k, s]] * x[cols[k, s]]
        out[k] = -1j * acc


@njit(cache=True)
def _nb_rk4_vector(x0, t0, h, nsteps, cols, vals, types, w0, wm, d0, dm, omega0):
    n = x0.size
    x = x0.copy()
    tmp = np.empty(n, np.complex128)
    k1 = np.empty(n, np.complex128)
    k2 = np.empty(n, np.complex128)
    k3 = np.empty(n, np.complex128)
    k4 = np.empty(n, np.complex128)
    ph = np.empty(w0.size, np.complex128)
    for i in range(nsteps):
        t = t0 + i * h
        _nb_schrodinger_rhs(t, x, cols, vals, types, w0, wm, d0, dm, omega0, ph, k1)
        for k in range(n):
            tmp[k] = x[k] + 0.5 * h * k1[k]
        _nb_schrodinger_rhs(t + 0.5 * h, tmp, cols, vals, types, w0, wm, d0, dm, omega0, ph, k2)
        for k in range(n):
            tmp[k] = x[k] + 0.5 * h * k2[k]
        _nb_schrodinger_rhs(t + 0.5 * h, tmp, cols, vals, types, w0, wm, d0, dm, omega0, ph, k3)
        for k in range(n):
            tmp[k] = x[k] + h * k3[k]
        _nb_schrodinger_rhs(t + h, tmp, cols, vals, types, w0, wm, d0, dm, omega0, ph, k4)
        for k in range(n):
            x[k] = x[k] + (h / 6.0) * (k1[k] + 2 * k2[k] + 2 * k3[k] + k4[k])
    return x


@njit(cache=True)
def _nb_lindblad_rhs(t, rho, cols, vals, types, w0, wm, d0, dm, omega0, jcols, jvals, gdiag, ph, x, out):
    _nb_phases(w0, wm, omega0, t, ph)
    c = np.cos(omega0 * t)
    n, K = cols.shape
    # x = H rho, row by row
    for k in range(n):
        dk = d0[k] + c * dm[k]
        xr = x[k]
        rr = rho[k]
        for l in range(n):
            xr[l] = dk * rr[l]
        for s in range(K):
            v = vals[k, s]
            if v == 0:
                continue
            coef = v * ph[types[k, s]]
            src = rho[cols[k, s]]
            for l in range(n):
                xr[l] += coef * src[l]
    # the result is Hermitian: fill the upper triangle, mirror at the end
    B = 32
    for kb in range(0, n, B):
        for lb in range(kb, n, B):
            for k in range(kb, min(kb + B, n)):
                gk = gdiag[k]
                for l in range(max(lb, k), min(lb + B, n)):
                    out[k, l] = -1j * (x[k, l] - np.conj(x[l, k])) - 0.5 * (gk + gdiag[l]) * rho[k, l]
    for q in range(jcols.shape[0]):
        jc = jcols[q]
        jv = jvals[q]
        for k in range(n):
            vk = jv[k]
            if vk == 0:
                continue
            src = rho[jc[k]]
            for l in range(k, n):
                vl = jv[l]
                if vl != 0:
                    out[k, l] += vk * np.conj(vl) * src[jc[l]]
    for k in range(n):
        for l in range(k + 1, n):
            out[l, k] = np.conj(out[k, l])


@njit(cache=True)
def _nb_rk4_matrix(rho0, t0, h, nsteps, cols, vals, types, w0, wm, d0, dm, omega0, jcols, jvals, gdiag):
    n = rho0.shape[0]
    rho = rho0.copy()
    tmp = np.empty((n, n), np.complex128)
    x = np.empty((n, n), np.complex128)
    k1 = np.empty((n, n), np.complex128)
    k2 = np.empty((n, n), np.complex128)
    k3 = np.empty((n, n), np.complex128)
    k4 = np.empty((n, n), np.complex128)
    ph = np.empty(w0.size, np.complex128)
    for i in range(nsteps):
        t = t0 + i * h
        _nb_lindblad_rhs(t, rho, cols, vals, types, w0, wm, d0, dm, omega0, jcols, jvals, gdiag, ph, x, k1)
        for k in range(n):
            for l in range(n):
                tmp[k, l] = rho[k, l] + 0.5 * h * k1[k, l]
        _nb_lindblad_rhs(t + 0.5 * h, tmp, cols, vals, types, w0, wm, d0, dm, omega0, jcols, jvals, gdiag, ph, x, k2)
        for k in range(n):
            for l in range(n):
                tmp[k, l] = rho[k, l] + 0.5 * h * k2[k, l]
        _nb_lindblad_rhs(t + 0.5 * h, tmp, cols, vals, types, w0, wm, d0, dm, omega0, jcols, jvals, gdiag, ph, x, k3)
        for k in range(n):
            for l in range(n):
                tmp[k, l] = rho[k, l] + h * k3[k, l]
        _nb_lindblad_rhs(t + h, tmp, cols, vals, types, w0, wm, d0, dm, omega0, jcols, jvals, gdiag, ph, x, k4)
        for k in range(n):
            for l in range(n):
                rho[k, l] = rho[k, l] + (h / 6.0) * (k1[k, l] + 2 * k2[k, l] + 2 * k3[k, l] + k4[k, l])
    return rho


# ---------------------------------------------------------------- dispatch


def rk4_vector(x, t0, h, nsteps, op, use_numba=None):
    """Advance ``x`` by ``nsteps`` fixed RK4 steps of size ``h`` from ``t0``."""
    x = np.ascontiguousarray(x, dtype=np.complex128)
    if use_numba is None:
        use_numba = HAVE_NUMBA
    if use_numba:
        return _nb_rk4_vector(x, float(t0), float(h), int(nsteps), *op)
    return np_rk4_vector(x, t0, h, nsteps, op)


def rk4_matrix(rho, t0, h, nsteps, op, jumps, use_numba=None):
    rho = np.ascontiguousarray(rho, dtype=np.complex128)
    if use_numba is None:
        use_numba = HAVE_NUMBA
    if use_numba:
        return _nb_rk4_matrix(rho, float(t0), float(h), int(nsteps), *op, *jumps)
    return np_rk4_matrix(rho, t0, h, nsteps, op, jumps)


def schrodinger_rhs(t, x, op, use_numba=None):
    if use_numba is None:
        use_numba = HAVE_NUMBA
    if use_numba:
        out = np.empty_like(x, dtype=np.complex128)
        ph = np.empty(op[3].size, np.complex128)
        _nb_schrodinger_rhs(float(t), np.ascontiguousarray(x, dtype=np.complex128), *op, ph, out)
        return out
    return np_schrodinger_rhs(t, x, op)


def lindblad_rhs(t, rho, op, jumps, use_numba=None):
    if use_numba is None:
        use_numba = HAVE_NUMBA
    if use_numba:
        rho = np.ascontiguousarray(rho, dtype=np.complex128)
        out = np.empty_like(rho)
        x = np.empty_like(rho)
        ph = np.empty(op[3].size, np.complex128)
        _nb_lindblad_rhs(float(t), rho, *op, *jumps, ph, x, out)
        return out
    return np_lindblad_rhs(t, rho, op, jumps)
