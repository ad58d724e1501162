import itertools
from fractions import Fraction

import pytest
import sympy as sp

from graphfield.graphs import enumerate_graphs, parse_graph, permutation_sign, wheel
from graphfield.polyfields import (Grading, PolyField, bivector_from_components, parse_polyfield,
                                   phi, schouten)
from graphfield.theory import (FOUR_POINT_POSITIVE, FOUR_POINT_ZERO, GAMMA_DOUBLE_PRIME, GAMMA_PRIME,
                               HbarSeries, MissingWeight, WeightTable, analytic_weight_appendix4,
                               four_point_integral, quadratic_relation_defect, build_morphism, build_mu,
                               duflo_coefficient, duflo_transform, leib_infty_defect, linear_poisson,
                               mc_preservation_defect, omega0_table, shoikhet_table, so3_structure,
                               stokes_identity_residual, structure_identity_residual, tetrahedron_flow,
                               transform_mc, wheel_phi_closed_form, wheel_series,
                               wheel_weight_closed_form)

from conftest import random_fields

G3 = Grading.even(3)


def casimir_poisson(casimir: str, factor: str = "1") -> PolyField:
    """``{x_i, x_j} = f eps_ijk dC/dx_k``, Poisson for any ``f`` and ``C``."""
    c = parse_polyfield(casimir, G3)
    f = parse_polyfield(factor, G3)
    comps = {}
    for i, j, k in itertools.permutations((1, 2, 3)):
        comps[(i, j)] = (f * c.dx(k)).scale(permutation_sign((i - 1, j - 1, k - 1)))
    return bivector_from_components(comps, G3)


@pytest.fixture
def poisson():
    a = casimir_poisson("x1^2*x2 + x3^2 + x1*x3", "1 + x2 + x1*x3")
    assert schouten(a, a).is_zero()
    return a


def single(graph, value=1) -> WeightTable:
    t = WeightTable("single", "half-plane", default=Fraction(0))
    t.set(graph, value)
    return t


# -- weight tables ------------------------------------------------------------

def test_table_sign_follows_the_orientation():
    t = single("3;4;1>2,1>3,2>1,2>3", Fraction(3))
    assert t.get("3;4;1>3,1>2,2>1,2>3") == -3
    assert t.get("3;4;2>1,2>3,1>2,1>3") == 3  # relabeled
    assert t.get("2;2;1>2,1>2") == 0  # odd class


def test_missing_entries_raise():
    t = WeightTable("strict", "plane")
    with pytest.raises(MissingWeight):
        t.get("3;3;1>2,2>3,3>1")


# -- mu from tables ------------------------------------------------------------

def test_mu_of_darg_is_the_bracket(rng):
    mu = build_mu(omega0_table(), 3)
    for a, b in itertools.combinations(random_fields(rng, 2, 6, psi_max=2), 2):
        assert mu(a, b) == schouten(a, b)
    a, b, c = random_fields(rng, 2, 3)
    assert mu(a, b, c).is_zero()


def test_empty_table_gives_zero(rng):
    mu = build_mu(WeightTable("zero", "plane", default=Fraction(0)), 3)
    a, b = random_fields(rng, 2, 2)
    assert mu(a, b).is_zero()


def test_kontsevich_outer_quartic_terms():
    mu = build_mu(shoikhet_table(), 4)
    assert mu.terms[4]
    assert {w for _, w in mu.terms[4]} <= {Fraction(1, 12), Fraction(-1, 12)}
    assert not mu.terms[3]


def test_darg_operations_satisfy_the_relations(rng):
    mu = build_mu(omega0_table(), 3)
    for _ in range(5):
        gs = [f for f in random_fields(rng, 2, 3, psi_max=2) if f.homogeneous_degree() is not None]
        if len(gs) == 3:
            assert leib_infty_defect(mu, gs).is_zero()


# -- morphisms and Maurer-Cartan elements -------------------------------------

def test_zero_table_morphism_is_the_identity(poisson):
    F = build_morphism(WeightTable("zero", "half-plane", default=Fraction(0)), 3)
    assert F(poisson) == poisson
    assert F(poisson, poisson).is_zero()
    assert transform_mc(WeightTable("zero", "half-plane", default=Fraction(0)), poisson, 3) \
        == HbarSeries.constant(poisson, 3)


def test_single_weight_morphism():
    g = parse_graph("3;4;1>2,1>3,2>1,2>3")
    F = build_morphism(single(g, Fraction(5)), 3)
    a = casimir_poisson("x1^2*x2 + x3^2")
    # every relabeling of g appears with the same weight, so F3 sums them
    expected = PolyField.zero(G3)
    for lab, w in F.terms[3]:
        expected = expected + phi(lab, [a] * 3).scale(w)
    assert F(a, a, a) == expected
    assert len(F.terms[3]) == 3  # 3!/#Aut
    assert not F(a, a, a).is_zero()


def test_class_and_labeled_sums_agree(poisson):
    cls = enumerate_graphs(3, 4, "G", labeled=False, skip_odd=True)
    t = WeightTable("syn", "half-plane", default=Fraction(0))
    for k, c in enumerate(cls):
        t.set(c.representative, Fraction(k + 1, 7))
    assert transform_mc(t, poisson, 2) == transform_mc(t, poisson, 2, via="labeled")


def test_transform_rejects_non_bivectors():
    t = WeightTable("zero", "half-plane", default=Fraction(0))
    with pytest.raises(ValueError):
        transform_mc(t, parse_polyfield("x1*psi1", G3), 2)


def test_bracket_of_image_matches_the_quadratic_relation(poisson):
    """hbar^{n-2} part of [F(a), F(a)] is sum_{p+q=n} [F_p, F_q] / p! q!."""
    cls = enumerate_graphs(3, 4, "G", labeled=False, skip_odd=True)
    t = WeightTable("syn", "half-plane", default=Fraction(0))
    for k, c in enumerate(cls):
        t.set(c.representative, Fraction(2 * k - 3, 5))
    d = mc_preservation_defect(t, poisson, 2)
    assert d[0].is_zero()
    assert d[1] == quadratic_relation_defect(t, poisson, 3)
    assert d[2] == quadratic_relation_defect(t, poisson, 4)


def test_relation_forces_the_three_point_weights_to_vanish(poisson):
    """A table solving the quadratic relation on a generic Poisson structure
    has no three-point part; the only solution preserves the MC equation."""
    cls = enumerate_graphs(3, 4, "G", labeled=False, skip_odd=True)
    vecs = [quadratic_relation_defect(single(c.representative), poisson, 4) for c in cls]
    keys = sorted({m for v in vecs for m in v.terms})
    M = sp.Matrix([[sp.Rational(str(v.terms.get(m, 0))) for v in vecs] for m in keys])
    assert M.nullspace() == []
    solution = WeightTable("solution", "half-plane", default=Fraction(0))
    assert mc_preservation_defect(solution, poisson, 2).is_zero()


def test_perturbed_table_breaks_the_mc_equation(poisson):
    for c in enumerate_graphs(3, 4, "G", labeled=False, skip_odd=True):
        d = mc_preservation_defect(single(c.representative, Fraction(1, 3)), poisson, 2)
        assert not d[2].is_zero()


# -- boundary identities -------------------------------------------------------

def test_darg_structure_identity_is_exact():
    w = omega0_table()
    for cls in enumerate_graphs(3, 2, "G"):
        assert structure_identity_residual(cls.representative, w).value == 0


def test_two_point_boundary_identity():
    C = WeightTable("C", "half-plane", default=Fraction(0))
    r = stokes_identity_residual("2;1;1>2", omega0_table(), omega0_table(), C)
    assert r.value == 0


def test_outer_weights_against_three_point_weights():
    cp, cpp = sp.symbols("Cp Cpp")
    C = WeightTable("sym", "half-plane", default=Fraction(0))
    C.set(GAMMA_PRIME, cp)
    C.set(GAMMA_DOUBLE_PRIME, cpp)
    res = [sp.expand(stokes_identity_residual(g, omega0_table(), shoikhet_table(), C).value)
           for g in FOUR_POINT_POSITIVE]
    q = sp.Rational(1, 12)
    assert res == [q - 2 * cp, q - cp - cpp, q - 2 * cpp]


def test_stokes_needs_the_right_edge_count():
    with pytest.raises(ValueError):
        stokes_identity_residual("3;4;1>2,2>3,3>1,1>3", omega0_table(), omega0_table(), omega0_table())


# -- closed form weights -------------------------------------------------------

def test_four_point_integral():
    assert four_point_integral() == Fraction(1, 12)
    for g in FOUR_POINT_POSITIVE:
        assert analytic_weight_appendix4(g) == Fraction(1, 12)
    for g in FOUR_POINT_ZERO:
        assert analytic_weight_appendix4(g) == 0
    with pytest.raises(ValueError):
        analytic_weight_appendix4("5;7;1>2,2>3,3>4,4>5,5>1,1>3,2>4")


def test_wheel_closed_forms():
    assert wheel_weight_closed_form(2, "bernoulli") == Fraction(1, 24)
    assert wheel_weight_closed_form(4, "bernoulli") == Fraction(1, 1440)
    assert wheel_weight_closed_form(3, "bernoulli") == 0
    for n in (2, 4, 6):
        assert abs(wheel_weight_closed_form(n) - float(wheel_weight_closed_form(n, "bernoulli"))) < 1e-12
    z3 = wheel_weight_closed_form(3)
    assert z3.real == 0 and z3.imag < 0
    with pytest.raises(ValueError):
        wheel_weight_closed_form(3, "bernoulli_even")
    with pytest.raises(ValueError):
        wheel_weight_closed_form(1)


@pytest.mark.parametrize("n", [2, 3])
def test_wheel_operator_formula(n, poisson):
    assert wheel_phi_closed_form(n, poisson) == phi(wheel(n), [poisson] * (n + 1))


def test_wheel_series_fixes_constant_structures():
    a = parse_polyfield("psi1*psi2 + 3*psi2*psi3", G3)
    assert wheel_series(a, 4) == HbarSeries.constant(a, 4)


# -- Duflo ---------------------------------------------------------------------

def test_duflo_coefficients():
    assert duflo_coefficient(2) == Fraction(1, 48)
    assert duflo_coefficient(3) == 0
    assert abs(duflo_coefficient(2, "zeta") - 1 / 48) < 1e-12


def test_duflo_routes_agree_on_so3():
    g2 = linear_poisson(so3_structure(), 3)
    r = parse_polyfield("x1^2 + x2^2 + x3^2", G3)
    g0 = r * r
    tr = duflo_transform(g2, g0, 4, route="trace")
    wh = duflo_transform(g2, g0, 4, route="wheels")
    assert tr == wh
    # Tr(ad^2) = -2 laplacian, so hbar^2 gives -1/24 laplacian(r^4) = -5/6 r^2
    assert tr[2] == r.scale(Fraction(-5, 6))


def test_duflo_abelian_case_is_trivial():
    g2 = PolyField.zero(G3)
    g0 = parse_polyfield("x1^4 + x2*x3", G3)
    assert duflo_transform(g2, g0, 4) == HbarSeries.constant(g0, 4)


def test_duflo_input_checks():
    g2 = linear_poisson(so3_structure(), 3)
    with pytest.raises(ValueError):
        duflo_transform(g2, parse_polyfield("x1", G3), 2)
    with pytest.raises(ValueError):
        duflo_transform(casimir_poisson("x1^2*x2"), parse_polyfield("1", G3), 2)


# -- tetrahedral flow ------------------------------------------------------------

def test_flow_vanishes_on_constant_and_linear_structures():
    a = parse_polyfield("psi1*psi2 - 2*psi1*psi3", G3)
    assert tetrahedron_flow(a).is_zero()
    so3 = linear_poisson(so3_structure(), 3)
    assert tetrahedron_flow(so3, include_second_term=False).is_zero()


def test_flow_vanishes_on_casimir_structures():
    a = casimir_poisson("x1^3*x2 + x3^2")
    assert tetrahedron_flow(a).is_zero()


def test_flow_terms_combine_to_a_tangent_vector():
    # the printed 4/3 mix is not tangent off the linear case; the raw terms
    # satisfy [a, first] = 6 [a, second]
    a = casimir_poisson("x1^2 + x2^2 + x3^2", "1 + x1^2")
    first = tetrahedron_flow(a, include_second_term=False)
    second = (tetrahedron_flow(a) - first).scale(Fraction(3, 4))
    assert not second.is_zero()
    assert not schouten(a, first).is_zero()
    assert schouten(a, first - second.scale(6)).is_zero()
