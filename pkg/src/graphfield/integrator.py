"""Monte Carlo integration of graph weights over configuration spaces.

Two spaces:

``plane``       ``C_n``: ``n`` points in the plane modulo translations and
                dilations.  Chart: ``z_1 = 0``, ``z_2 = exp(i theta)``, the
                others free.  Each edge carries a boundary circle density.
``half-plane``  ``C_{n,0}``: ``n`` points in the upper half-plane modulo real
                translations and dilations.  Chart: ``z_1 = i``, the others
                free.  Each edge carries a propagator through a pair map.

Orientation: configuration space carries ``dx_1 dy_1 ... dx_n dy_n`` and the
quotient is oriented so that (group directions, quotient) is positive.  The
group directions are ``(t_x, t_y, log s)`` in the plane and ``(t_x, log s)``
on the half-plane.  The sign of each chart is read off a Jacobian once.

Random numbers: shard ``k`` of a run with seed ``s`` draws from a Philox
stream keyed by ``(s, k)``; batches are reduced in a fixed order, so a
result depends only on ``(seed, samples, shards, batches)``.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, asdict
from fractions import Fraction

import numpy as np

from . import _kernels
from .graphs import DecoratedGraph, parse_graph
from .propagators import Propagator, get_propagator

SPACES = ("plane", "half-plane")

# global orientation conventions, see notes in the README
PLANE_ORIENTATION = 1
HALF_PLANE_ORIENTATION = 1

DEFAULT_SEED = 20240601
CHUNK = 1 << 16


def default_seed() -> int:
    env = os.environ.get("GRAPHFIELD_SEED")
    return int(env) if env else DEFAULT_SEED


@dataclass
class WeightEstimate:
    value: complex
    stderr: float
    samples: int
    seed: int | None
    shards: int = 1
    batches: int = 0
    rejected: int = 0
    exact: object = None
    method: str = "mc"

    @property
    def real(self) -> float:
        return float(np.real(self.value))

    @property
    def imag(self) -> float:
        return float(np.imag(self.value))

    def within(self, target: complex, rel: float = 0.0, abs_tol: float = 0.0) -> bool:
        return abs(self.value - target) <= max(abs_tol, rel * abs(target))

    def to_dict(self) -> dict:
        d = asdict(self)
        v = complex(self.value)
        d["value"] = v.real if v.imag == 0 else [v.real, v.imag]
        d["exact"] = None if self.exact is None else str(self.exact)
        return d

    def __str__(self) -> str:
        v = complex(self.value)
        if v.imag == 0:
            val = f"{v.real:.6e}"
        else:
            val = f"{v.real:.6e}{v.imag:+.6e}i"
        return f"{val} +/- {self.stderr:.2e} (N={self.samples:.1e})"


# ---------------------------------------------------------------------------
# charts

def _plane_embedding(n: int, params: np.ndarray) -> np.ndarray:
    """(t_x, t_y, log s, theta, x_3, y_3, ...) -> (x_1, y_1, ..., x_n, y_n)."""
    tx, ty, ls, theta = params[:4]
    z = np.zeros(n, dtype=complex)
    z[1] = np.exp(1j * theta)
    for k in range(2, n):
        z[k] = params[4 + 2 * (k - 2)] + 1j * params[5 + 2 * (k - 2)]
    z = np.exp(ls) * z + (tx + 1j * ty)
    return np.column_stack([z.real, z.imag]).ravel()


def _half_plane_embedding(n: int, params: np.ndarray) -> np.ndarray:
    """(t_x, log s, x_2, y_2, ...) -> (x_1, y_1, ..., x_n, y_n)."""
    tx, ls = params[:2]
    z = np.zeros(n, dtype=complex)
    z[0] = 1j
    for k in range(1, n):
        z[k] = params[2 + 2 * (k - 1)] + 1j * params[3 + 2 * (k - 1)]
    z = np.exp(ls) * z + tx
    return np.column_stack([z.real, z.imag]).ravel()


def _jacobian_sign(f, p0: np.ndarray) -> int:
    h = 1e-6
    cols = []
    for k in range(len(p0)):
        dp = np.zeros_like(p0)
        dp[k] = h
        cols.append((f(p0 + dp) - f(p0 - dp)) / (2 * h))
    det = np.linalg.det(np.column_stack(cols))
    if abs(det) < 1e-8:
        raise RuntimeError("degenerate chart point")
    return 1 if det > 0 else -1


def chart_sign(space: str, n: int) -> int:
    """Orientation of the slice chart relative to the quotient orientation."""
    rng = np.random.default_rng(12345)
    if space == "plane":
        if n < 2:
            return 1
        p0 = np.concatenate([[0.1, -0.2, 0.05, 0.7], rng.normal(size=2 * (n - 2)) + 2.0])
        return PLANE_ORIENTATION * _jacobian_sign(lambda p: _plane_embedding(n, p), p0)
    if space == "half-plane":
        extra = rng.normal(size=2 * (n - 1))
        extra[1::2] = np.abs(extra[1::2]) + 0.5
        p0 = np.concatenate([[0.3, 0.1], extra])
        return HALF_PLANE_ORIENTATION * _jacobian_sign(lambda p: _half_plane_embedding(n, p), p0)
    raise ValueError(f"space must be one of {SPACES}")


def space_dimension(space: str, n: int) -> int:
    if space == "plane":
        return max(2 * n - 3, 0)
    if space == "half-plane":
        return 2 * n - 2
    raise ValueError(f"space must be one of {SPACES}")


def uniform_dimension(space: str, n: int) -> int:
    return 1 + 3 * (n - 2) if space == "plane" else 3 * (n - 1)


# ---------------------------------------------------------------------------
# driver

def _stream(seed: int, shard: int) -> np.random.Generator:
    key = np.array([seed % (1 << 64), shard], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _run_shard(kernel, dim_u: int, count: int, seed: int, shard: int, n_batches: int, dtype):
    rng = _stream(seed, shard)
    sums, counts = [], []
    rejected = 0
    b_base, b_extra = divmod(count, n_batches)
    for b in range(n_batches):
        left = b_base + (1 if b < b_extra else 0)
        counts.append(left)
        total = dtype(0)
        while left > 0:
            m = min(CHUNK, left)
            vals = kernel(rng.random((m, max(dim_u, 1))))
            nan = np.isnan(vals)
            if nan.any():
                rejected += int(nan.sum())
                vals = np.where(nan, 0, vals)
            total = total + vals.sum()
            left -= m
        sums.append(total)
    return sums, counts, rejected


def monte_carlo(kernel, dim_u: int, samples: int, seed: int, shards: int = 1,
                batches: int = 16, dtype=float, workers: int = 1) -> WeightEstimate:
    """Mean of ``kernel(uniforms)`` with batch-means standard error.

    Shards may run on ``workers`` threads (the compiled kernels release the
    GIL); the reduction always follows shard order, so the result does not
    depend on ``workers``.
    """
    samples = int(samples)
    if samples <= 0:
        raise ValueError("samples must be positive")
    shards = max(1, int(shards))
    per_shard_batches = max(1, -(-max(16, int(batches)) // shards))
    base, extra = divmod(samples, shards)
    jobs = [(kernel, dim_u, base + (1 if k < extra else 0), seed, k, per_shard_batches, dtype)
            for k in range(shards)]
    if workers > 1 and shards > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda job: _run_shard(*job), jobs))
    else:
        results = [_run_shard(*job) for job in jobs]
    batch_sums = [v for r in results for v in r[0]]
    counts = np.array([c for r in results for c in r[1]], dtype=float)
    rejected = sum(r[2] for r in results)
    sums = np.array(batch_sums)
    value = sums.sum() / counts.sum()
    mask = counts > 0
    means = sums[mask] / counts[mask]
    if len(means) > 1:
        stderr = float(np.sqrt(np.sum(np.abs(means - value) ** 2) / (len(means) - 1) / len(means)))
    else:
        stderr = float("nan")
    return WeightEstimate(value, stderr, samples, seed, shards, int(mask.sum()), rejected)


def _edge_array(graph: DecoratedGraph) -> np.ndarray:
    return np.array([(s - 1, t - 1) for s, t in graph.edges], dtype=np.int64).reshape(-1, 2)


def weight(graph: DecoratedGraph | str, propagator: Propagator | str, space: str = "half-plane",
           samples: int = 10 ** 6, seed: int | None = None, side: str = "outer",
           map: str | None = None, shards: int = 1, batches: int = 16,
           use_numba: bool | None = None, workers: int = 1) -> WeightEstimate:
    """Monte Carlo weight of an oriented graph.

    On ``plane`` every edge carries the propagator's boundary density on
    ``side``; on ``half-plane`` the propagator is pulled back by ``map``
    (default: the propagator's own).  Graphs of the wrong degree give an
    exact zero.
    """
    if isinstance(graph, str):
        graph = parse_graph(graph)
    if isinstance(propagator, str):
        propagator = get_propagator(propagator)
    if not graph.directed:
        raise ValueError("weights are defined for directed graphs")
    seed = default_seed() if seed is None else int(seed)
    n = graph.n
    dim = space_dimension(space, n)
    if graph.l != dim:
        return WeightEstimate(0.0, 0.0, 0, seed, exact=0, method="degree")
    if dim == 0:
        return WeightEstimate(float(graph.parity), 0.0, 0, seed, exact=graph.parity, method="point")
    sign = graph.parity * chart_sign(space, n)
    edges = _edge_array(graph)
    if space == "plane":
        density = propagator.boundary(side)
        if density.singular:
            raise ValueError(f"{propagator.name} has a singular {side} boundary restriction")
        breaks = np.array(density.breaks, dtype=float)
        values = np.array(density.values, dtype=float)

        def kernel(u):
            return _kernels.plane_kernel(u, n, edges, breaks, values, sign, use_numba)
        return monte_carlo(kernel, uniform_dimension(space, n), samples, seed, shards, batches,
                           workers=workers)
    mode = map or propagator.default_map
    if mode not in ("plain", "renormalized"):
        raise ValueError("map must be 'plain' or 'renormalized'")
    kinds, coeffs, lins = propagator.term_arrays()
    renorm = mode == "renormalized"

    def kernel(u):
        return _kernels.half_plane_kernel(u, n, edges, kinds, coeffs, lins, renorm, sign, use_numba)
    dtype = complex if propagator.is_complex else float
    return monte_carlo(kernel, uniform_dimension(space, n), samples, seed, shards, batches, dtype,
                       workers)


# ---------------------------------------------------------------------------
# zeta values

def zeta_partial(n: int, terms: int = 1000) -> float:
    """``sum_{k>=1} k^-n`` by a partial sum plus an Euler-Maclaurin tail."""
    if n < 2:
        raise ValueError("zeta needs n >= 2")
    N = terms
    s = math.fsum(k ** -float(n) for k in range(1, N))
    # tail sum_{k>=N} k^-n
    tail = N ** (1 - n) / (n - 1) + 0.5 * N ** -n + n * N ** (-n - 1) / 12.0 \
        - n * (n + 1) * (n + 2) * N ** (-n - 3) / 720.0
    return s + tail


def zeta_box_integral(n: int, samples: int = 10 ** 6, seed: int | None = None,
                      shards: int = 1, batches: int = 16, use_numba: bool | None = None,
                      workers: int = 1) -> WeightEstimate:
    """Monte Carlo for ``int_{[0,1]^n} dx / (1 - x_1 ... x_n)``."""
    if n < 2:
        raise ValueError("the box integral diverges for n < 2")
    seed = default_seed() if seed is None else int(seed)
    est = monte_carlo(lambda u: _kernels.zeta_box_kernel(u, use_numba), n, samples, seed, shards, batches,
                      workers=workers)
    est.exact = zeta_partial(n)
    return est


def bernoulli(n: int) -> Fraction:
    """Bernoulli numbers with ``B_1 = -1/2``."""
    b = [Fraction(1)]
    for m in range(1, n + 1):
        b.append(-sum(math.comb(m + 1, k) * b[k] for k in range(m)) / Fraction(m + 1))
    return b[n]
