"""Acceptance suite.

Each criterion prints one ``PASS``/``FAIL`` line (also collected in the
terminal summary).  Run directly with ``python tests/test_acceptance.py``
for the lines alone.  Sample counts follow the stated budgets; set
``GRAPHFIELD_ACCEPT_SCALE`` to a fraction for a quicker, looser run.
"""

from __future__ import annotations

import os
import random
import sys
from fractions import Fraction

import pytest

from graphfield import faceoperad, graphs, integrator, polyfields, theory
from graphfield.cli import four_point_relations, verify_gluings

SCALE = float(os.environ.get("GRAPHFIELD_ACCEPT_SCALE", "1"))
SEED = 20240601
SHARDS = 4
RESULTS: dict[int, tuple[bool, str]] = {}


def samples(n: float) -> int:
    return max(10 ** 4, int(n * SCALE))


def report(k: int, ok: bool, detail: str) -> None:
    RESULTS[k] = (ok, detail)
    line = f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    sys.__stdout__.write(line + "\n")
    sys.__stdout__.flush()


# ---------------------------------------------------------------------------

def _homogeneous(rng, g):
    while True:
        f = polyfields.random_polyfield(rng, g, rng.randint(0, min(2, g.d)), 3, 3)
        if f.homogeneous_degree() is not None:
            return f


def criterion_1() -> tuple[bool, str]:
    """mu_2 from the dArg table against (-1)^{|g1|} [g1 . g2], mu_3 = 0."""
    rng = random.Random(1)
    table = theory.omega0_table()
    mu = theory.build_mu(table, 3)
    literal = plain = 0
    higher_zero = True
    for k in range(50):
        d = 1 + k % 3
        g = polyfields.Grading.even(d)
        a, b, c = (_homogeneous(rng, g) for _ in range(3))
        m2 = mu(a, b)
        br = polyfields.schouten(a, b)
        sign = -1 if a.homogeneous_degree() % 2 else 1
        literal += m2 == br.scale(sign)
        plain += m2 == br
        higher_zero &= mu(a, b, c).is_zero()
    ok = literal == 50 and higher_zero
    return ok, (f"signed form matches {literal}/50, plain bracket matches {plain}/50, "
                f"mu_3 = 0: {higher_zero}")


def criterion_2() -> tuple[bool, str]:
    rep = faceoperad.check_d_squared(5)
    q = faceoperad.leibniz_quotient_check(3)
    ok = rep.passed and q.in_ideal
    return ok, f"d^2 = 0 on {rep.n_checked} generators: {rep.passed}; quotient check: {q.in_ideal}"


def _within(est, target, rel, sigmas):
    return abs(complex(est.value) - target) <= max(rel * abs(target), sigmas * est.stderr)


def criterion_3() -> tuple[bool, str]:
    n = samples(1e7)
    ok = True
    parts = []
    for text in theory.FOUR_POINT_POSITIVE + theory.FOUR_POINT_ZERO:
        target = Fraction(1, 12) if text in theory.FOUR_POINT_POSITIVE else Fraction(0)
        exact = theory.analytic_weight_appendix4(text)
        est = integrator.weight(text, "kontsevich", "plane", samples=n, seed=SEED, shards=SHARDS)
        good = exact == target and _within(est, float(target), 0.02 if target else 0.0, 3.0)
        ok &= good
        parts.append(f"{exact}|{est.real:.5f}+/-{est.stderr:.1e}")
    return ok, f"N={n:.0e}: " + ", ".join(parts)


def criterion_4() -> tuple[bool, str]:
    n = samples(1e7)
    rel = four_point_relations(n, SEED + 1, SHARDS)
    parts = [f"{r['relation']}: {r['lhs']:.5f} vs {r['rhs']:.5f} ({r['difference'] / r['combined_error']:+.1f} sigma)"
             for r in rel["rows"]]
    return rel["passed"], f"N={n:.0e}: " + "; ".join(parts)


def criterion_5() -> tuple[bool, str]:
    n = samples(1e7)
    ok = True
    parts = []
    for k, ref in ((2, 1.64493), (3, 1.20206)):
        est = integrator.zeta_box_integral(k, n, SEED, SHARDS)
        series = integrator.zeta_partial(k)
        good = abs(est.value - ref) <= 0.01 * ref and abs(est.value - series) <= max(0.01 * series, 3 * est.stderr)
        ok &= good
        parts.append(f"zeta({k}) ~ {est.value:.5f}+/-{est.stderr:.1e} (series {series:.6f})")
    return ok, f"N={n:.0e}: " + ", ".join(parts)


def criterion_6() -> tuple[bool, str]:
    w2 = theory.wheel_weight_closed_form(2, "bernoulli")
    ok = w2 == Fraction(1, 24) and abs(theory.wheel_weight_closed_form(2, "zeta") - 1 / 24) < 1e-12
    gaps = []
    for n in (4, 6):
        gap = abs(theory.wheel_weight_closed_form(n, "zeta") - float(theory.wheel_weight_closed_form(n, "bernoulli")))
        gaps.append(gap)
        ok &= gap < 1e-12
    return ok, f"w_2 = {w2}; zeta/bernoulli gaps n=4,6: {gaps[0]:.1e}, {gaps[1]:.1e}"


def criterion_7() -> tuple[bool, str]:
    n = samples(1e6)
    ok = True
    parts = []
    for cls in graphs.enumerate_graphs(3, 4, "G", labeled=False, skip_odd=True):
        est = integrator.weight(cls.representative, "symmetrized", "half-plane", samples=n, seed=SEED,
                                map="renormalized", shards=SHARDS)
        ok &= abs(est.real) <= 3 * est.stderr
        parts.append(f"{est.real:+.1e}+/-{est.stderr:.1e}")
    return ok, f"N={n:.0e}, {len(parts)} classes: " + ", ".join(parts)


def criterion_8() -> tuple[bool, str]:
    w = theory.omega0_table()
    checked = 0
    ok = True
    for n in range(2, 5):
        for cls in graphs.enumerate_graphs(n, 2 * n - 4, "G", labeled=True):
            checked += 1
            ok &= theory.structure_identity_residual(cls.representative, w).value == 0
    glue = verify_gluings(3)
    ok &= glue["passed"]
    return ok, f"{checked} identities exactly zero: {ok}; {glue['checked']} gluings: {glue['passed']}"


def criterion_9() -> tuple[bool, str]:
    g2 = theory.linear_poisson(theory.so3_structure(), 3)
    casimir = polyfields.parse_polyfield("x1^2 + x2^2 + x3^2", g2.grading)
    ok = True
    for g0 in (casimir, casimir * casimir):
        tr = theory.duflo_transform(g2, g0, 4, route="trace")
        wh = theory.duflo_transform(g2, g0, 4, route="wheels")
        ok &= tr == wh
    c2 = theory.duflo_coefficient(2)
    ok &= c2 == Fraction(1, 48)
    return ok, f"routes agree through hbar^4: {ok}; hbar^2 coefficient {c2}"


def criterion_10() -> tuple[bool, str]:
    a = theory.linear_poisson(theory.so3_structure(), 3)
    full = theory.tetrahedron_flow(a)
    second = full - theory.tetrahedron_flow(a, include_second_term=False)
    bracket = polyfields.schouten(a, full)
    ok = second.is_zero() and bracket.is_zero()
    return ok, f"second term zero: {second.is_zero()}; [a, flow] = 0: {bracket.is_zero()}"


def wheel3_measurement() -> str:
    n = samples(1e6)
    est = integrator.weight(graphs.wheel(3), "half_k", "half-plane", samples=n, seed=SEED,
                            map="renormalized", shards=SHARDS)
    ref = theory.wheel_weight_closed_form(3)
    return (f"info: w_3 with half_k, renormalized map, N={n:.0e}: "
            f"{est.real:+.3e}{est.imag:+.3e}i +/- {est.stderr:.1e} "
            f"(closed form {ref.imag:+.4e}i; measurement only)")


CRITERIA = {k: globals()[f"criterion_{k}"] for k in range(1, 11)}


@pytest.mark.parametrize("k", sorted(CRITERIA))
def test_criterion(k):
    ok, detail = CRITERIA[k]()
    report(k, ok, detail)
    assert ok, detail


def test_wheel3_measurement():
    line = wheel3_measurement()
    sys.__stdout__.write(line + "\n")
    RESULTS[0] = (True, line)


def main() -> int:
    failed = 0
    for k, fn in CRITERIA.items():
        ok, detail = fn()
        report(k, ok, detail)
        failed += not ok
    print(wheel3_measurement())
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
