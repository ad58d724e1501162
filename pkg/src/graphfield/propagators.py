"""Propagators: closed 1-forms on pairs of points of the upper half-plane.

A propagator is written on a pair ``(u1, u2)`` as a combination of
``dArg(e)`` and ``dln|e|`` where each ``e`` is a real linear expression in
``u1, conj(u1), u2, conj(u2)``.  All forms are normalised so that a small
loop of ``u1`` around ``u2`` has period 1, i.e. the stored combination is
divided by ``2 pi`` when evaluated.

Each propagator also records its restriction to the two boundary circles
of the compactified two point space, as a density ``g(alpha)`` in the angle
``alpha = Arg(z1 - z2)`` (again divided by ``2 pi`` on evaluation).

Maps from a configuration to a pair:

``plain``        edge ``i -> j`` uses ``(z_i, z_j)``
``renormalized`` uses ``(z_i - z_j + z_min, z_min)`` when ``y_i >= y_j`` and
                 ``(z_min, z_j - z_i + z_min)`` otherwise, where ``z_min`` is
                 the mean real part plus ``i`` times the lowest height
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi

ARG, LOG = 0, 1

# linear expressions in (u1, conj u1, u2, conj u2)
U1_MINUS_U2 = (1.0, 0.0, -1.0, 0.0)
U1_MINUS_U2BAR = (1.0, 0.0, 0.0, -1.0)
U1BAR_MINUS_U2 = (0.0, 1.0, -1.0, 0.0)


@dataclass(frozen=True)
class AngleTerm:
    kind: int          # ARG or LOG
    coeff: complex
    lin: tuple[float, float, float, float]


@dataclass(frozen=True)
class CircleDensity:
    """Piecewise constant density on ``[0, 2 pi)``; ``breaks`` has one more
    entry than ``values``."""
    breaks: tuple[float, ...]
    values: tuple[float, ...]
    singular: bool = False

    def __call__(self, alpha):
        if self.singular:
            raise ValueError("this boundary restriction is singular")
        a = np.mod(alpha, TWO_PI)
        idx = np.clip(np.searchsorted(self.breaks, a, side="right") - 1, 0, len(self.values) - 1)
        return np.asarray(self.values)[idx]

    def total(self) -> float:
        return float(sum(v * (b1 - b0) for v, b0, b1 in zip(self.values, self.breaks, self.breaks[1:])))


def _uniform(c: float) -> CircleDensity:
    return CircleDensity((0.0, TWO_PI), (c,))


def _split(upper: float, lower: float) -> CircleDensity:
    return CircleDensity((0.0, math.pi, TWO_PI), (upper, lower))


SINGULAR = CircleDensity((0.0, TWO_PI), (0.0,), singular=True)


@dataclass(frozen=True)
class Propagator:
    name: str
    terms: tuple[AngleTerm, ...]
    inner: CircleDensity
    outer: CircleDensity
    default_map: str = "renormalized"
    t: float | None = None

    @property
    def is_complex(self) -> bool:
        return any(complex(tm.coeff).imag != 0 for tm in self.terms)

    def boundary(self, side: str) -> CircleDensity:
        if side not in ("inner", "outer"):
            raise ValueError("side must be 'inner' or 'outer'")
        return self.inner if side == "inner" else self.outer

    def term_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        kinds = np.array([tm.kind for tm in self.terms], dtype=np.int64)
        dtype = np.complex128 if self.is_complex else np.float64
        coeffs = np.array([tm.coeff for tm in self.terms], dtype=dtype)
        lins = np.array([tm.lin for tm in self.terms], dtype=np.float64)
        return kinds, coeffs, lins

    def gradient(self, u1, u2, du1, du2):
        """Form evaluated on the tangent vector ``(du1, du2)`` at ``(u1, u2)``,
        already divided by ``2 pi``.  Inputs broadcast as numpy arrays."""
        u1 = np.asarray(u1, dtype=complex)
        u2 = np.asarray(u2, dtype=complex)
        total = 0.0
        for tm in self.terms:
            a1, b1, a2, b2 = tm.lin
            e = a1 * u1 + b1 * np.conj(u1) + a2 * u2 + b2 * np.conj(u2)
            de = a1 * du1 + b1 * np.conj(du1) + a2 * du2 + b2 * np.conj(du2)
            r = de / e
            total = total + tm.coeff * (r.imag if tm.kind == ARG else r.real)
        return total / TWO_PI

    def angle(self, u1, u2):
        """Primitive (up to constants) of the real part; only defined for
        propagators built from ``dArg`` terms."""
        total = 0.0
        for tm in self.terms:
            if tm.kind != ARG:
                raise ValueError("primitive only available for pure angle forms")
            a1, b1, a2, b2 = tm.lin
            e = a1 * u1 + b1 * np.conj(u1) + a2 * u2 + b2 * np.conj(u2)
            total = total + complex(tm.coeff).real * np.angle(e)
        return total / TWO_PI


def _arg(c, lin) -> AngleTerm:
    return AngleTerm(ARG, c, lin)


def _log(c, lin) -> AngleTerm:
    return AngleTerm(LOG, c, lin)


def kontsevich() -> Propagator:
    return Propagator("kontsevich", (_arg(1.0, U1_MINUS_U2), _arg(1.0, U1_MINUS_U2BAR)),
                      _uniform(1.0), _split(2.0, 0.0))


def anti() -> Propagator:
    return Propagator("anti", (_arg(1.0, U1_MINUS_U2), _arg(-1.0, U1_MINUS_U2BAR)),
                      _uniform(1.0), _split(0.0, 2.0))


def symmetrized() -> Propagator:
    return Propagator("symmetrized", (_arg(1.0, U1_MINUS_U2),), _uniform(1.0), _uniform(1.0))


def family_t(t: float) -> Propagator:
    t = float(t)
    return Propagator(f"family_t({t:g})",
                      (_arg(1.0, U1_MINUS_U2), _arg(2.0 * t - 1.0, U1_MINUS_U2BAR)),
                      _uniform(1.0), _split(2.0 * t, 2.0 * (1.0 - t)), t=t)


def half_k() -> Propagator:
    """``(1/i) dlog((u1 - u2) / (conj(u1) - u2))``."""
    return Propagator("half_k", (_arg(1.0, U1_MINUS_U2), _arg(-1.0, U1BAR_MINUS_U2),
                                 _log(-1j, U1_MINUS_U2), _log(1j, U1BAR_MINUS_U2)),
                      SINGULAR, _split(2.0, 0.0), default_map="plain")


def half_k_anti() -> Propagator:
    """``(1/i) dlog((u1 - u2) / (u1 - conj(u2)))``."""
    return Propagator("half_k_anti", (_arg(1.0, U1_MINUS_U2), _arg(-1.0, U1_MINUS_U2BAR),
                                      _log(-1j, U1_MINUS_U2), _log(1j, U1_MINUS_U2BAR)),
                      SINGULAR, _split(0.0, 2.0), default_map="plain")


def volume_s1() -> Propagator:
    """Normalised ``dArg(z1 - z2)``: the volume form of the circle."""
    return Propagator("volume_s1", (_arg(1.0, U1_MINUS_U2),), _uniform(1.0), _uniform(1.0),
                      default_map="plain")


_REGISTRY = {
    "kontsevich": kontsevich,
    "anti": anti,
    "anti_kontsevich": anti,
    "symmetrized": symmetrized,
    "half_k": half_k,
    "half_k_anti": half_k_anti,
    "volume_s1": volume_s1,
}

NAMES = tuple(_REGISTRY) + ("family_t",)


def get_propagator(name: str, t: float | None = None) -> Propagator:
    """Look up a propagator; ``family_t`` needs ``t``, and ``family_t:0.3``
    is accepted as shorthand."""
    if name.startswith("family_t"):
        if ":" in name:
            t = float(name.split(":", 1)[1])
        if t is None:
            raise ValueError("family_t needs a parameter t")
        return family_t(t)
    try:
        return _REGISTRY[name]()
    except KeyError:
        raise ValueError(f"unknown propagator {name!r}; choose from {NAMES}") from None


# ---------------------------------------------------------------------------
# pullbacks

MAPS = ("plain", "renormalized")


def forgetful_pi(points, i: int, j: int) -> complex:
    """Unit vector ``(z_i - z_j) / |z_i - z_j|`` (0-based vertices)."""
    w = complex(points[i]) - complex(points[j])
    if w == 0:
        raise ValueError("coincident points")
    return w / abs(w)


def z_min(points) -> complex:
    """Mean real part plus ``i`` times the lowest height."""
    z = np.asarray(points, dtype=complex)
    return complex(z.real.mean(), z.imag.min())


def renormalized_fp(points, i: int, j: int) -> tuple[complex, complex]:
    """The pair fed to the propagator by the renormalized map for edge
    ``i -> j``; raises on the seam ``y_i = y_j``."""
    z = np.asarray(points, dtype=complex)
    if z[i].imag == z[j].imag:
        raise ValueError("configuration lies on a seam of the renormalized map")
    m = z_min(z)
    w = complex(z[i] - z[j])
    if z[i].imag > z[j].imag:
        return w + m, m
    return m, -w + m


def pair_jacobian(points: np.ndarray, i: int, j: int, mode: str):
    """Pair ``(u1, u2)`` for edge ``i -> j`` (0-based) and the derivatives
    ``du1, du2`` along every real coordinate ``(x_1, y_1, ..., x_n, y_n)``.

    Returns ``u1, u2, du1, du2`` with ``du*`` of length ``2n``; ``None`` when
    the configuration sits on a seam of the renormalized map.
    """
    z = np.asarray(points, dtype=complex)
    n = len(z)
    du1 = np.zeros(2 * n, dtype=complex)
    du2 = np.zeros(2 * n, dtype=complex)
    if mode == "plain":
        du1[2 * i], du1[2 * i + 1] = 1.0, 1j
        du2[2 * j], du2[2 * j + 1] = 1.0, 1j
        return z[i], z[j], du1, du2
    if mode != "renormalized":
        raise ValueError(f"map must be one of {MAPS}")
    y = z.imag
    order = np.argsort(y)
    if n > 1 and y[order[0]] == y[order[1]] or y[i] == y[j]:
        return None
    k = int(order[0])
    zmin = z.real.mean() + 1j * y[k]
    dzmin = np.zeros(2 * n, dtype=complex)
    dzmin[0::2] = 1.0 / n
    dzmin[2 * k + 1] += 1j
    dw = np.zeros(2 * n, dtype=complex)
    dw[2 * i], dw[2 * i + 1] = 1.0, 1j
    dw[2 * j] -= 1.0
    dw[2 * j + 1] -= 1j
    w = z[i] - z[j]
    if y[i] >= y[j]:
        return w + zmin, zmin, dw + dzmin, dzmin
    return zmin, -w + zmin, dzmin, -dw + dzmin


def eval_pullback_1form(prop: Propagator, i: int, j: int, points, mode: str | None = None) -> np.ndarray:
    """Covector of the pulled back form in the coordinates
    ``(x_1, y_1, ..., x_n, y_n)``; vertices are 0-based."""
    mode = mode or prop.default_map
    res = pair_jacobian(np.asarray(points), i, j, mode)
    if res is None:
        raise ValueError("configuration lies on a seam of the renormalized map")
    u1, u2, du1, du2 = res
    return np.asarray(prop.gradient(u1, u2, du1, du2))


def eval_circle_1form(density: CircleDensity, i: int, j: int, points) -> np.ndarray:
    """``g(alpha) d alpha / 2 pi`` with ``alpha = Arg(z_i - z_j)`` on the plane."""
    z = np.asarray(points, dtype=complex)
    n = len(z)
    w = z[i] - z[j]
    g = float(density(np.angle(w))) / TWO_PI
    out = np.zeros(2 * n)
    # d alpha = Im(dw / w)
    inv = 1.0 / w
    out[2 * i] += inv.imag
    out[2 * i + 1] += inv.real
    out[2 * j] -= inv.imag
    out[2 * j + 1] -= inv.real
    return g * out
