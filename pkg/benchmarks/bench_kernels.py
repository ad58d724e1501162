"""Compare the compiled and the plain numpy Monte Carlo kernels.

    python benchmarks/bench_kernels.py --samples 2e5 --repeat 3

Both backends see the same uniforms, so the printed values must agree to
rounding; the table shows seconds per million samples.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from graphfield import _kernels
from graphfield.graphs import parse_graph, wheel
from graphfield.integrator import CHUNK, chart_sign, uniform_dimension
from graphfield.propagators import get_propagator

CASES = [
    ("plane C_4, kontsevich outer", "plane", "4;5;3>1,3>2,4>1,4>2,2>1", "kontsevich"),
    ("half-plane C_3,0, kontsevich renormalized", "half-plane", "3;4;3>1,1>3,2>3,2>1", "kontsevich"),
    ("half-plane C_4,0, wheel 3, half_k_anti", "half-plane", wheel(3).to_string(), "half_k_anti"),
]


def make_kernel(space: str, graph_text: str, prop_name: str):
    g = parse_graph(graph_text)
    prop = get_propagator(prop_name)
    edges = np.array([(s - 1, t - 1) for s, t in g.edges], dtype=np.int64)
    sign = g.parity * chart_sign(space, g.n)
    if space == "plane":
        dens = prop.boundary("outer")
        breaks = np.array(dens.breaks)
        values = np.array(dens.values)
        return g.n, lambda u, nb: _kernels.plane_kernel(u, g.n, edges, breaks, values, sign, nb)
    kinds, coeffs, lins = prop.term_arrays()
    renorm = prop.default_map == "renormalized"
    return g.n, lambda u, nb: _kernels.half_plane_kernel(u, g.n, edges, kinds, coeffs, lins, renorm, sign, nb)


def time_backend(kernel, u_chunks, use_numba: bool, repeat: int) -> tuple[float, complex]:
    kernel(u_chunks[0][:16], use_numba)  # compile / warm up
    best = float("inf")
    total = 0j
    for _ in range(repeat):
        t0 = time.perf_counter()
        total = sum(np.nansum(kernel(u, use_numba)) for u in u_chunks)
        best = min(best, time.perf_counter() - t0)
    return best, total / sum(len(u) for u in u_chunks)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--samples", type=float, default=2e5)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()
    n_samples = int(args.samples)
    if not _kernels.HAVE_NUMBA:
        print("numba is not installed; only the numpy backend is available")
    print(f"{'case':45s} {'numba s/1e6':>12s} {'numpy s/1e6':>12s} {'speedup':>8s}  values agree")
    for label, space, text, prop in CASES:
        n, kernel = make_kernel(space, text, prop)
        rng = np.random.default_rng(args.seed)
        dim = uniform_dimension(space, n)
        chunks = [rng.random((min(CHUNK, n_samples - k), dim)) for k in range(0, n_samples, CHUNK)]
        t_np, v_np = time_backend(kernel, chunks, False, args.repeat)
        if _kernels.HAVE_NUMBA:
            t_nb, v_nb = time_backend(kernel, chunks, True, args.repeat)
        else:
            t_nb, v_nb = float("nan"), v_np
        scale = 1e6 / n_samples
        agree = abs(v_nb - v_np) <= 1e-9 * max(1.0, abs(v_np))
        print(f"{label:45s} {t_nb * scale:12.3f} {t_np * scale:12.3f} {t_np / t_nb:8.2f}  {agree}")


if __name__ == "__main__":
    main()
