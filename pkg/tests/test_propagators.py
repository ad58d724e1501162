import math

import numpy as np
import pytest

from graphfield.propagators import (NAMES, eval_circle_1form, eval_pullback_1form, forgetful_pi,
                                    get_propagator, pair_jacobian, renormalized_fp)

NONSINGULAR = ["kontsevich", "anti", "symmetrized", "family_t:0.3", "volume_s1"]
ALL = NONSINGULAR + ["half_k", "half_k_anti"]


def random_upper(rng, n):
    return rng.normal(size=n) + 1j * (rng.random(n) * 2 + 0.2)


def angle_value(prop, u1, u2):
    """Primitive of the real part, for finite differences."""
    return prop.angle(u1, u2)


def test_registry():
    for name in NAMES:
        if name == "family_t":
            continue
        assert get_propagator(name).name
    assert get_propagator("anti_kontsevich").name == "anti"
    with pytest.raises(ValueError):
        get_propagator("family_t")
    with pytest.raises(ValueError):
        get_propagator("nope")


def test_forgetful_pi_examples():
    pts = [1 + 1j, 1j]
    assert forgetful_pi(pts, 0, 1) == pytest.approx(1)
    assert forgetful_pi(pts, 1, 0) == pytest.approx(-1)
    with pytest.raises(ValueError):
        forgetful_pi([1j, 1j], 0, 1)


def test_renormalized_fp():
    pts = np.array([0.3 + 2j, -0.5 + 1j])
    u1, u2 = renormalized_fp(pts, 0, 1)
    assert u2 == pytest.approx(complex(-0.1, 1.0))
    # two points: the pair agrees with the points up to a real translation
    shift = pts[1] - u2
    assert shift.imag == pytest.approx(0)
    assert u1 + shift == pytest.approx(pts[0])
    with pytest.raises(ValueError):
        renormalized_fp(np.array([1j, 2 + 1j]), 0, 1)


@pytest.mark.parametrize("name", ["kontsevich", "anti", "symmetrized", "family_t:0.3", "volume_s1"])
@pytest.mark.parametrize("mode", ["plain", "renormalized"])
def test_pullback_matches_finite_differences(name, mode):
    prop = get_propagator(name)
    rng = np.random.default_rng(7)
    h = 1e-6
    for _ in range(40):
        pts = random_upper(rng, 3)
        i, j = rng.choice(3, 2, replace=False)
        cov = eval_pullback_1form(prop, i, j, pts, mode)
        base = pair_jacobian(pts, i, j, mode)
        for k in range(6):
            step = np.zeros(3, dtype=complex)
            step[k // 2] = h if k % 2 == 0 else 1j * h
            up = pair_jacobian(pts + step, i, j, mode)
            dn = pair_jacobian(pts - step, i, j, mode)
            if base is None or up is None or dn is None:
                continue
            fd = (angle_value(prop, *up[:2]) - angle_value(prop, *dn[:2])) / (2 * h)
            assert abs(fd - np.real(cov[k])) <= 1e-6 * max(1.0, abs(fd))


@pytest.mark.parametrize("name", ["half_k", "half_k_anti"])
def test_half_propagators_match_finite_differences(name):
    prop = get_propagator(name)
    rng = np.random.default_rng(3)
    h = 1e-6
    for _ in range(40):
        u1, u2 = random_upper(rng, 2)
        for du1, du2 in ((1, 0), (1j, 0), (0, 1), (0, 1j)):
            val = prop.gradient(u1, u2, du1, du2)
            # integrate the form against a tiny segment via the complex log
            def f(a, b):
                if name == "half_k":
                    return np.log((a - b) / (np.conj(a) - b)) / 1j / (2 * math.pi)
                return np.log((a - b) / (a - np.conj(b))) / 1j / (2 * math.pi)
            fd = (f(u1 + h * du1, u2 + h * du2) - f(u1 - h * du1, u2 - h * du2)) / (2 * h)
            assert abs(fd - val) <= 1e-6


def test_symmetrized_plane_covector_at_unit_difference():
    cov = eval_pullback_1form(get_propagator("symmetrized"), 0, 1, [1.0 + 1j, 1j], "plain")
    assert np.real(cov) * 2 * math.pi == pytest.approx([0, 1, 0, -1])


def test_kontsevich_near_collapse_looks_like_darg():
    k = get_propagator("kontsevich")
    s = get_propagator("symmetrized")
    eps = 1e-7
    pts = [2j + eps * np.exp(0.7j), 2j]
    a = eval_pullback_1form(k, 0, 1, pts, "plain")
    b = eval_pullback_1form(s, 0, 1, pts, "plain")
    assert np.allclose(a * eps, b * eps, atol=1e-6)


def test_boundary_normalization():
    alpha = np.linspace(0, 2 * math.pi, 100001)
    for name in NONSINGULAR:
        prop = get_propagator(name)
        for side in ("inner", "outer"):
            dens = prop.boundary(side)
            total = np.trapezoid(dens(alpha), alpha) if hasattr(np, "trapezoid") else np.trapz(dens(alpha), alpha)
            assert total == pytest.approx(2 * math.pi, rel=1e-4)


def test_boundary_restrictions():
    assert get_propagator("family_t:0.2").inner == get_propagator("symmetrized").inner
    assert get_propagator("symmetrized").outer == get_propagator("symmetrized").inner
    assert get_propagator("half_k").inner.singular
    with pytest.raises(ValueError):
        get_propagator("half_k").inner(0.3)


def test_circle_form_on_c2_integrates_to_one():
    prop = get_propagator("volume_s1")
    thetas = np.linspace(0, 2 * math.pi, 2001)[:-1]
    total = 0.0
    for th in thetas:
        pts = [np.exp(1j * th), 0]
        cov = eval_circle_1form(prop.outer, 0, 1, pts)
        tangent = np.array([-math.sin(th), math.cos(th), 0, 0])
        total += cov @ tangent * (2 * math.pi / len(thetas))
    assert total == pytest.approx(1.0, rel=1e-9)


@pytest.mark.parametrize("mode", ["plain", "renormalized"])
def test_invariance_under_real_affine_maps(mode):
    prop = get_propagator("kontsevich")
    rng = np.random.default_rng(11)
    for _ in range(20):
        pts = random_upper(rng, 3)
        a, b = 0.5 + rng.random() * 3, rng.normal()
        base = eval_pullback_1form(prop, 0, 2, pts, mode)
        moved = eval_pullback_1form(prop, 0, 2, a * pts + b, mode)
        # a covector picks up 1/a under scaling
        assert np.allclose(moved * a, base, atol=1e-10)


def test_plane_invariance_under_complex_translation():
    prop = get_propagator("kontsevich").outer
    rng = np.random.default_rng(5)
    pts = rng.normal(size=3) + 1j * rng.normal(size=3)
    base = eval_circle_1form(prop, 0, 1, pts)
    moved = eval_circle_1form(prop, 0, 1, 2.0 * pts + (1 - 3j))
    assert np.allclose(moved * 2.0, base)
