import random

import pytest
from hypothesis import given, settings, strategies as st

from ffcircle.laurent import Laurent, parse_laurent
from ffcircle.polyring import Poly, RatFunc, parse_poly
from ffcircle.quadform import (
    Cone,
    QuadForm,
    class_witness,
    cone_coverage,
    mat_det,
    mat_mul,
    mat_transpose,
    witness_point,
)


def P(s, q=3):
    return parse_poly(q, s)


def L(s, q=3):
    return parse_laurent(q, s)


FOUR_SQUARES = QuadForm.diagonal(3, [1, 1, 1, 1])
MIXED = QuadForm.from_coeffs(3, 3, {(0, 0): "t", (1, 1): 1, (2, 2): "t+1", (0, 1): 1})


def test_gram_symmetry_enforced():
    with pytest.raises(ValueError):
        QuadForm([[P("1"), P("t")], [P("0"), P("1")]])


def test_from_coeffs_halves_cross_terms():
    # F = x0^2 + x0 x1: gram off-diagonal is 1/2 = 2 mod 3
    f = QuadForm.from_coeffs(3, 2, {(0, 0): 1, (0, 1): 1})
    assert f.gram[0][1] == P("2")
    x = [P("t"), P("1")]
    assert f.evaluate(x) == P("t^2+t")


def test_evaluate_matches_by_hand():
    x = [P("t"), P("t+1"), P("2")]
    # t*x0^2 + x1^2 + (t+1)*x2^2 + x0*x1
    want = P("t") * x[0] * x[0] + x[1] * x[1] + P("t+1") * x[2] * x[2] + x[0] * x[1]
    assert MIXED.evaluate(x) == want


def test_evaluate_over_laurent_and_ratfunc():
    x = [L("t+t^-1@floor=-2"), L("1"), L("0")]
    v = MIXED.evaluate(x)
    assert v[3] == 1  # t * t^2 leading digit
    y = [RatFunc(P("1"), P("t")), RatFunc.from_poly(P("1")), RatFunc.from_poly(P("0"))]
    w = MIXED.evaluate(y)
    # t/t^2 + 1 + 0 + (1/t)*1 = (t+2)/t
    assert w == RatFunc(P("t+2"), P("t"))


def test_bilinear_polarization():
    x = [P("t"), P("1"), P("2*t")]
    y = [P("1"), P("t+2"), P("0")]
    fxy = MIXED.evaluate([x[i] + y[i] for i in range(3)])
    assert fxy == MIXED.evaluate(x) + MIXED.evaluate(y) + MIXED.bilinear(x, y)
    assert MIXED.bilinear(x, x) == 2 * MIXED.evaluate(x)


def test_gradient():
    x = [P("t"), P("1"), P("0")]
    g = MIXED.gradient(x)
    # d/dx0 = 2t*x0 + x1, d/dx1 = 2 x1 + x0, d/dx2 = 2(t+1) x2
    assert g[0] == 2 * P("t") * P("t") + P("1")
    assert g[1] == 2 * P("1") + P("t")
    assert g[2] == Poly.zero(3)


def test_disc():
    assert FOUR_SQUARES.disc() == P("16")  # det(2I) = 16 = 1 mod 3
    d = MIXED.disc()
    two_a = [[2 * e for e in row] for row in MIXED.gram]
    assert d == mat_det(two_a)
    assert not d.is_zero()


def test_dual_eval_diagonal():
    # diag(a1..): dual at c is sum c_i^2/(4 a_i)
    f = QuadForm.diagonal(3, ["t", 1])
    c = [P("1"), P("t")]
    want = RatFunc(P("1"), 4 * P("t")) + RatFunc(P("t^2"), P("4"))
    assert f.dual_eval(c) == want


@pytest.mark.parametrize("m", ["t", "t^2", "t^2+1", "t^3+2*t^2"])
def test_diagonalize_mod(m):
    m = P(m)
    for form in (FOUR_SQUARES, MIXED):
        from ffcircle.polyring import coprime

        if not coprime(m, form.disc()):
            with pytest.raises(ValueError):
                form.diagonalize_mod(m)
            continue
        U, D = form.diagonalize_mod(m)
        UT = mat_transpose(U)
        M = mat_mul(mat_mul(UT, form.gram), U)
        for i in range(form.d):
            for j in range(form.d):
                want = D[i] if i == j else Poly.zero(3)
                assert (M[i][j] - want) % m == Poly.zero(3)
        det_u = mat_det(U)
        assert coprime(det_u % m, m)
        for di in D:
            assert coprime(di, m)


def test_diagonalize_mod_needs_coprime_disc():
    # disc(MIXED) picks up the factor from the t and t+1 entries
    with pytest.raises(ValueError):
        MIXED.diagonalize_mod(MIXED.disc())


def test_diagonalize_oinf():
    H = [[L("t+1"), L("t^2")], [L("t^2"), L("1")]]
    form = QuadForm.diagonal(3, [1, 1])  # carrier for q, d
    U, D = form.diagonalize_oinf(H)
    # check U^T H U is diagonal wherever digits are tracked
    d = 2
    M = [[None] * d for _ in range(d)]
    for i in range(d):
        for j in range(d):
            acc = Laurent.zero(3)
            for a in range(d):
                for b in range(d):
                    acc = acc + U[a][i] * H[a][b] * U[b][j]
            M[i][j] = acc
    assert M[0][1].known_zero() and M[1][0].known_zero()
    assert int(M[0][0].deg) == int(D[0].deg)
    # pivot took the largest entry: first diagonal value has degree 2
    assert int(D[0].deg) == 2


def test_cone_membership():
    cone = Cone(FOUR_SQUARES, s=0)
    ok = [L("t"), L("0"), L("0"), L("0")]
    assert cone.contains(ok)
    bad = [L("t"), L("t"), L("t"), L("0")]  # 3 t^2 = 0, drops out of the cone
    assert not cone.contains(bad)
    loose = Cone(FOUR_SQUARES, s=2)
    almost = [L("t"), L("t"), L("t"), L("1")]  # F = 1, deg 0 >= 2 - 2? no: 2*1-2=0 yes
    assert loose.contains(almost)
    assert not cone.contains(almost)


def test_cone_scaling_invariance():
    cone = Cone(MIXED, s=1)
    rng = random.Random(7)
    for _ in range(40):
        x = [Laurent(3, 0, [rng.randrange(3) for _ in range(3)], exact=True)
             for _ in range(3)]
        if all(xi.known_zero() for xi in x):
            continue
        scaled = [xi.shift(2) * 2 for xi in x]  # c = 2 t^2
        assert cone.contains(x) == cone.contains(scaled)


def test_ball_in_cone():
    cone = Cone(FOUR_SQUARES, s=0)
    center = [L("t^3"), L("1"), L("0"), L("0")]
    assert cone.ball_in_cone(center, rho=1)
    assert not cone.ball_in_cone(center, rho=3)
    # membership of sampled points of an accepted ball
    rng = random.Random(3)
    for _ in range(30):
        x = [c + Laurent(3, -2, [rng.randrange(3) for _ in range(4)])
             for c in center]
        assert cone.contains(x)


def test_dominant_cone():
    cone = Cone(FOUR_SQUARES, s=0, kind="dominant", omega=1, omega_prime=0)
    assert cone.contains([L("t^2"), L("t"), L("0"), L("1")])
    assert not cone.contains([L("t"), L("t"), L("0"), L("0")])
    assert cone.omega == 1 and cone.omega_prime == 0


def test_cone_coverage_positive():
    rng = random.Random(11)
    cov0 = cone_coverage(FOUR_SQUARES, 0, rng, samples=200)
    rng = random.Random(11)
    cov2 = cone_coverage(FOUR_SQUARES, 2, rng, samples=200)
    assert 0 < cov0 <= cov2 <= 1


def test_class_witness_and_point():
    for f in [P("t^4+2"), P("t^3+t+1"), P("2*t^4+t"), P("2*t^5")]:
        w, val = class_witness(FOUR_SQUARES, f)
        assert val == FOUR_SQUARES.evaluate(w)
        assert int(val.deg) % 2 == int(f.deg) % 2
        x0 = witness_point(FOUR_SQUARES, f, floor=-6)
        got = FOUR_SQUARES.evaluate(x0)
        want = Laurent.from_poly(f)
        assert got.agrees_with(want)


@given(st.integers(0, 3 ** 4 - 1))
@settings(max_examples=40)
def test_openness_of_cone(seed):
    # perturbing far below the decisive digits never changes membership
    rng = random.Random(seed)
    x = [Laurent(3, 0, [rng.randrange(3), rng.randrange(3), 1], exact=True)
         for _ in range(4)]
    cone = Cone(FOUR_SQUARES, s=1)
    base = cone.contains(x)
    y = [xi + Laurent.monomial(3, rng.randrange(1, 3), -9) for xi in x]
    assert cone.contains(y) == base
