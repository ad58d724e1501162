"""Monte Carlo kernels.

Every kernel exists twice: a per-sample loop compiled with numba and a
vectorised numpy version.  ``GRAPHFIELD_NO_NUMBA=1`` (or numba missing)
selects the numpy path.  Both paths consume the same uniforms and agree to
rounding.

Sampling of a free point ``z``: pick an anchor among the points already
placed, then ``z = anchor + rho * exp(i phi)`` with ``phi`` uniform and
``rho = s u / (1 - u)``, i.e. radial density ``s / (s + rho)^2``.  The
two dimensional density of one anchor is ``s / (2 pi rho (s + rho)^2)``.
On the half-plane the scale ``s`` is the anchor height and points falling
below the real axis are reflected, which adds the mirrored density.
"""

from __future__ import annotations

import math
import os

import numpy as np

try:  # pragma: no cover - exercised via the env flag
    from numba import njit
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f

TWO_PI = 2.0 * math.pi


def numba_enabled() -> bool:
    flag = os.environ.get("GRAPHFIELD_NO_NUMBA", "").strip().lower()
    return HAVE_NUMBA and flag not in ("1", "true", "yes", "on")


# ---------------------------------------------------------------------------
# numba path

@njit(cache=True, nogil=True)
def _radial_density(rho, s):
    return s / (TWO_PI * rho * (s + rho) * (s + rho))


@njit(cache=True, nogil=True)
def _det(a):
    """Determinant by Gaussian elimination with partial pivoting (destroys a)."""
    m = a.shape[0]
    det = a[0, 0] * 0 + 1
    for col in range(m):
        piv = col
        best = abs(a[col, col])
        for r in range(col + 1, m):
            v = abs(a[r, col])
            if v > best:
                best = v
                piv = r
        if best == 0.0:
            return det * 0
        if piv != col:
            for c in range(m):
                tmp = a[col, c]
                a[col, c] = a[piv, c]
                a[piv, c] = tmp
            det = -det
        p = a[col, col]
        det = det * p
        for r in range(col + 1, m):
            f = a[r, col] / p
            if f != 0:
                for c in range(col, m):
                    a[r, c] -= f * a[col, c]
    return det


@njit(cache=True, nogil=True)
def _circle_density(alpha, breaks, values):
    a = alpha % TWO_PI
    nb = values.shape[0]
    for k in range(nb):
        if a < breaks[k + 1]:
            return values[k]
    return values[nb - 1]


@njit(cache=True, nogil=True)
def plane_kernel_nb(u, n, edges, breaks, values, sign):
    """Samples of ``det / density`` on the configuration space of the plane.
    Degenerate samples come back as NaN."""
    N = u.shape[0]
    m = 2 * n - 3
    out = np.zeros(N)
    z = np.zeros(n, dtype=np.complex128)
    mat = np.zeros((m, m))
    for s in range(N):
        theta = TWO_PI * u[s, 0]
        z[0] = 0.0
        z[1] = complex(math.cos(theta), math.sin(theta))
        dens = 1.0 / TWO_PI
        for k in range(2, n):
            base = 1 + 3 * (k - 2)
            c = int(u[s, base] * k)
            if c >= k:
                c = k - 1
            uu = u[s, base + 1]
            rho = uu / (1.0 - uu)
            phi = TWO_PI * u[s, base + 2]
            z[k] = z[c] + rho * complex(math.cos(phi), math.sin(phi))
            pk = 0.0
            for a in range(k):
                r = abs(z[k] - z[a])
                pk += _radial_density(r, 1.0)
            dens *= pk / k
        dz1 = complex(-math.sin(theta), math.cos(theta))
        ok = True
        for e in range(m):
            i = edges[e, 0]
            j = edges[e, 1]
            w = z[i] - z[j]
            if w == 0:
                ok = False
                break
            g = _circle_density(math.atan2(w.imag, w.real), breaks, values) / TWO_PI
            inv = 1.0 / w
            for col in range(m):
                mat[e, col] = 0.0
            dth = 0.0
            if i == 1:
                dth += (dz1 * inv).imag
            if j == 1:
                dth -= (dz1 * inv).imag
            mat[e, 0] = g * dth
            if i >= 2:
                mat[e, 1 + 2 * (i - 2)] += g * inv.imag
                mat[e, 2 + 2 * (i - 2)] += g * inv.real
            if j >= 2:
                mat[e, 1 + 2 * (j - 2)] -= g * inv.imag
                mat[e, 2 + 2 * (j - 2)] -= g * inv.real
        if not ok or dens == 0.0:
            out[s] = np.nan
            continue
        out[s] = sign * _det(mat) / dens
    return out


@njit(cache=True, nogil=True)
def _place_half_plane(u, s, n, z):
    """Fill z[1:] from uniforms; returns the density of the free points."""
    z[0] = 1j
    dens = 1.0
    for k in range(1, n):
        base = 3 * (k - 1)
        c = int(u[s, base] * k)
        if c >= k:
            c = k - 1
        sc = z[c].imag
        uu = u[s, base + 1]
        rho = sc * uu / (1.0 - uu)
        phi = TWO_PI * u[s, base + 2]
        w = z[c] + rho * complex(math.cos(phi), math.sin(phi))
        if w.imag < 0.0:
            w = w.conjugate()
        z[k] = w
        pk = 0.0
        for a in range(k):
            sa = z[a].imag
            pk += _radial_density(abs(w - z[a]), sa)
            pk += _radial_density(abs(w.conjugate() - z[a]), sa)
        dens *= pk / k
    return dens


@njit(cache=True, nogil=True)
def half_plane_kernel_nb(u, n, edges, kinds, coeffs, lins, renorm, sign):
    """Samples of ``det / density`` on the configuration space of the
    half-plane modulo real translations and dilations (vertex 0 at ``i``)."""
    N = u.shape[0]
    m = 2 * n - 2
    out = np.zeros(N, dtype=coeffs.dtype)
    z = np.zeros(n, dtype=np.complex128)
    mat = np.zeros((m, m), dtype=coeffs.dtype)
    du1 = np.zeros(m, dtype=np.complex128)
    du2 = np.zeros(m, dtype=np.complex128)
    dzmin = np.zeros(m, dtype=np.complex128)
    T = kinds.shape[0]
    for s in range(N):
        dens = _place_half_plane(u, s, n, z)
        if dens == 0.0:
            out[s] = np.nan
            continue
        # lowest point
        kmin = 0
        tie = False
        for a in range(1, n):
            if z[a].imag < z[kmin].imag:
                kmin = a
        for a in range(n):
            if a != kmin and z[a].imag == z[kmin].imag:
                tie = True
        if renorm and tie:
            out[s] = np.nan
            continue
        xc = 0.0
        for a in range(n):
            xc += z[a].real
        xc /= n
        zmin = complex(xc, z[kmin].imag)
        for col in range(m):
            dzmin[col] = 0.0
        for a in range(1, n):
            dzmin[2 * (a - 1)] = 1.0 / n
        if kmin >= 1:
            dzmin[2 * (kmin - 1) + 1] += 1j
        bad = False
        for e in range(m):
            i = edges[e, 0]
            j = edges[e, 1]
            for col in range(m):
                du1[col] = 0.0
                du2[col] = 0.0
                mat[e, col] = 0.0
            if renorm:
                if z[i].imag == z[j].imag:
                    bad = True
                    break
                # dw with w = z_i - z_j
                if z[i].imag > z[j].imag:
                    u1 = z[i] - z[j] + zmin
                    u2 = zmin
                    sgn = 1.0
                else:
                    u1 = zmin
                    u2 = z[j] - z[i] + zmin
                    sgn = -1.0
                for col in range(m):
                    du1[col] = dzmin[col]
                    du2[col] = dzmin[col]
                if sgn > 0:
                    if i >= 1:
                        du1[2 * (i - 1)] += 1.0
                        du1[2 * (i - 1) + 1] += 1j
                    if j >= 1:
                        du1[2 * (j - 1)] -= 1.0
                        du1[2 * (j - 1) + 1] -= 1j
                else:
                    if j >= 1:
                        du2[2 * (j - 1)] += 1.0
                        du2[2 * (j - 1) + 1] += 1j
                    if i >= 1:
                        du2[2 * (i - 1)] -= 1.0
                        du2[2 * (i - 1) + 1] -= 1j
            else:
                u1 = z[i]
                u2 = z[j]
                if i >= 1:
                    du1[2 * (i - 1)] = 1.0
                    du1[2 * (i - 1) + 1] = 1j
                if j >= 1:
                    du2[2 * (j - 1)] = 1.0
                    du2[2 * (j - 1) + 1] = 1j
            for t in range(T):
                a1 = lins[t, 0]
                b1 = lins[t, 1]
                a2 = lins[t, 2]
                b2 = lins[t, 3]
                ev = a1 * u1 + b1 * u1.conjugate() + a2 * u2 + b2 * u2.conjugate()
                if ev == 0:
                    bad = True
                    break
                inv = 1.0 / ev
                cf = coeffs[t] / TWO_PI
                for col in range(m):
                    de = a1 * du1[col] + b1 * du1[col].conjugate() + a2 * du2[col] + b2 * du2[col].conjugate()
                    r = de * inv
                    if kinds[t] == 0:
                        mat[e, col] += cf * r.imag
                    else:
                        mat[e, col] += cf * r.real
            if bad:
                break
        if bad:
            out[s] = np.nan
            continue
        out[s] = sign * _det(mat) / dens
    return out


@njit(cache=True, nogil=True)
def zeta_box_kernel_nb(u):
    N = u.shape[0]
    d = u.shape[1]
    out = np.zeros(N)
    for s in range(N):
        p = 1.0
        for k in range(d):
            p *= u[s, k]
        out[s] = 1.0 / (1.0 - p)
    return out


# ---------------------------------------------------------------------------
# numpy path

def _radial_density_np(rho, s):
    return s / (TWO_PI * rho * (s + rho) ** 2)


def _circle_density_np(alpha, breaks, values):
    a = np.mod(alpha, TWO_PI)
    idx = np.clip(np.searchsorted(breaks, a, side="right") - 1, 0, len(values) - 1)
    return values[idx]


def _det_np(mat):
    if mat.shape[-1] == 0:
        return np.ones(mat.shape[0], dtype=mat.dtype)
    return np.linalg.det(mat)


def plane_kernel_np(u, n, edges, breaks, values, sign):
    N = u.shape[0]
    m = 2 * n - 3
    theta = TWO_PI * u[:, 0]
    z = np.zeros((N, n), dtype=complex)
    z[:, 1] = np.exp(1j * theta)
    dens = np.full(N, 1.0 / TWO_PI)
    for k in range(2, n):
        base = 1 + 3 * (k - 2)
        c = np.minimum((u[:, base] * k).astype(np.int64), k - 1)
        uu = u[:, base + 1]
        rho = uu / (1.0 - uu)
        phi = TWO_PI * u[:, base + 2]
        z[:, k] = z[np.arange(N), c] + rho * np.exp(1j * phi)
        pk = np.zeros(N)
        for a in range(k):
            pk += _radial_density_np(np.abs(z[:, k] - z[:, a]), 1.0)
        dens *= pk / k
    dz1 = 1j * np.exp(1j * theta)
    mat = np.zeros((N, m, m))
    with np.errstate(divide="ignore", invalid="ignore"):
        for e in range(m):
            i, j = int(edges[e, 0]), int(edges[e, 1])
            w = z[:, i] - z[:, j]
            g = _circle_density_np(np.angle(w), breaks, values) / TWO_PI
            inv = 1.0 / w
            dth = np.zeros(N)
            if i == 1:
                dth += (dz1 * inv).imag
            if j == 1:
                dth -= (dz1 * inv).imag
            mat[:, e, 0] = g * dth
            if i >= 2:
                mat[:, e, 1 + 2 * (i - 2)] += g * inv.imag
                mat[:, e, 2 + 2 * (i - 2)] += g * inv.real
            if j >= 2:
                mat[:, e, 1 + 2 * (j - 2)] -= g * inv.imag
                mat[:, e, 2 + 2 * (j - 2)] -= g * inv.real
        vals = sign * _det_np(mat) / dens
    return np.where(np.isfinite(vals), vals, np.nan)


def _place_half_plane_np(u, n):
    N = u.shape[0]
    z = np.zeros((N, n), dtype=complex)
    z[:, 0] = 1j
    dens = np.ones(N)
    rows = np.arange(N)
    for k in range(1, n):
        base = 3 * (k - 1)
        c = np.minimum((u[:, base] * k).astype(np.int64), k - 1)
        sc = z[rows, c].imag
        uu = u[:, base + 1]
        rho = sc * uu / (1.0 - uu)
        phi = TWO_PI * u[:, base + 2]
        w = z[rows, c] + rho * np.exp(1j * phi)
        w = np.where(w.imag < 0.0, np.conj(w), w)
        z[:, k] = w
        pk = np.zeros(N)
        for a in range(k):
            sa = z[:, a].imag
            pk += _radial_density_np(np.abs(w - z[:, a]), sa)
            pk += _radial_density_np(np.abs(np.conj(w) - z[:, a]), sa)
        dens *= pk / k
    return z, dens


def half_plane_kernel_np(u, n, edges, kinds, coeffs, lins, renorm, sign):
    N = u.shape[0]
    m = 2 * n - 2
    z, dens = _place_half_plane_np(u, n)
    rows = np.arange(N)
    y = z.imag
    kmin = np.argmin(y, axis=1)
    ymin = y[rows, kmin]
    tie = (y == ymin[:, None]).sum(axis=1) > 1
    zmin = z.real.mean(axis=1) + 1j * ymin
    dzmin = np.zeros((N, m), dtype=complex)
    for a in range(1, n):
        dzmin[:, 2 * (a - 1)] = 1.0 / n
    for a in range(1, n):
        dzmin[kmin == a, 2 * (a - 1) + 1] += 1j
    dtype = coeffs.dtype
    mat = np.zeros((N, m, m), dtype=dtype)
    bad = tie.copy() if renorm else np.zeros(N, dtype=bool)

    def unit(v):
        d = np.zeros((N, m), dtype=complex)
        if v >= 1:
            d[:, 2 * (v - 1)] = 1.0
            d[:, 2 * (v - 1) + 1] = 1j
        return d

    with np.errstate(divide="ignore", invalid="ignore"):
        for e in range(m):
            i, j = int(edges[e, 0]), int(edges[e, 1])
            if renorm:
                up = (y[:, i] > y[:, j])[:, None]
                bad |= y[:, i] == y[:, j]
                w = z[:, i] - z[:, j]
                dw = unit(i) - unit(j)
                u1 = np.where(up[:, 0], w + zmin, zmin)
                u2 = np.where(up[:, 0], zmin, -w + zmin)
                du1 = np.where(up, dw + dzmin, dzmin)
                du2 = np.where(up, dzmin, -dw + dzmin)
            else:
                u1, u2 = z[:, i], z[:, j]
                du1, du2 = unit(i), unit(j)
            for t in range(len(kinds)):
                a1, b1, a2, b2 = lins[t]
                ev = a1 * u1 + b1 * np.conj(u1) + a2 * u2 + b2 * np.conj(u2)
                de = a1 * du1 + b1 * np.conj(du1) + a2 * du2 + b2 * np.conj(du2)
                r = de / ev[:, None]
                part = r.imag if kinds[t] == 0 else r.real
                mat[:, e, :] += (coeffs[t] / TWO_PI) * part
        vals = sign * _det_np(mat) / dens
    vals = vals.astype(dtype)
    return np.where(bad | ~np.isfinite(vals), np.nan, vals)


def zeta_box_kernel_np(u):
    return 1.0 / (1.0 - np.prod(u, axis=1))


def plane_kernel(u, n, edges, breaks, values, sign, use_numba=None):
    if use_numba is None:
        use_numba = numba_enabled()
    f = plane_kernel_nb if use_numba else plane_kernel_np
    return f(u, n, edges, breaks, values, float(sign))


def half_plane_kernel(u, n, edges, kinds, coeffs, lins, renorm, sign, use_numba=None):
    if use_numba is None:
        use_numba = numba_enabled()
    f = half_plane_kernel_nb if use_numba else half_plane_kernel_np
    return f(u, n, edges, kinds, coeffs, lins, bool(renorm), float(sign))


def zeta_box_kernel(u, use_numba=None):
    if use_numba is None:
        use_numba = numba_enabled()
    return zeta_box_kernel_nb(u) if use_numba else zeta_box_kernel_np(u)
