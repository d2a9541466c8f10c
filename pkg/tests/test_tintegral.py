import itertools
import random

import pytest

from ffcircle.basefield import Cyclo, Fq, gauss_sum, kloosterman, salie, tau_psi
from ffcircle.laurent import Laurent, PrecisionError, parse_laurent
from ffcircle.polyring import Poly, parse_poly
from ffcircle.tintegral import (
    TruncSeries,
    ball_cells,
    ball_char_integral_closed,
    ball_char_integral_direct,
    delta_eval,
    delta_scan,
    dissection_centers,
    dissection_locate,
    gauss_factor_closed,
    gauss_factor_direct,
    gauss_product_closed,
    gauss_product_direct,
    integrate_unit_ball,
    morse_normal_form,
    poly_char_sum_closed,
    poly_char_sum_direct,
    series_inverse,
    shell_integral_closed,
    shell_integral_direct,
    stationary_phase_closed,
    stationary_phase_direct,
)


def P(s, q=3):
    return parse_poly(q, s)


def L(s, q=3):
    return parse_laurent(q, s)


def rand_laurent(rng, q, top, floor):
    coeffs = [rng.randrange(q) for _ in range(top - floor)] + [rng.randrange(1, q)]
    return Laurent(q, floor, coeffs, exact=True)


# -- cells and plain integration ------------------------------------------------


def test_ball_cells_tile():
    cells = ball_cells(3, -2)
    assert len(cells) == 9
    assert len(set(cells)) == 9
    vol = integrate_unit_ball(3, 2, -1, lambda u: Cyclo.one(3))
    assert vol == Cyclo.one(3)


# -- orthogonality --------------------------------------------------------------


def test_poly_char_sum_both_routes():
    rng = random.Random(5)
    for _ in range(25):
        gamma = rand_laurent(rng, 3, rng.randrange(-3, 1), -6)
        for n in (1, 2, 3):
            assert poly_char_sum_direct(gamma, n) == poly_char_sum_closed(gamma, n)


def test_poly_char_sum_known_case():
    # gamma = t^-3: digits -1, -2 vanish, -3 does not
    g = L("t^-3")
    assert poly_char_sum_closed(g, 2) == Cyclo.from_int(3, 9)
    assert poly_char_sum_closed(g, 3) == Cyclo.zero(3)


def test_ball_char_integral_both_routes():
    rng = random.Random(8)
    for _ in range(20):
        gamma = rand_laurent(rng, 3, rng.randrange(-3, 2), -5)
        for y in (-2, -1, 0, 1):
            assert ball_char_integral_direct(gamma, y) == ball_char_integral_closed(
                gamma, y
            )
    z = Laurent.zero(3)
    assert ball_char_integral_closed(z, 2) == Cyclo.from_int(3, 9)
    assert ball_char_integral_direct(z, 2) == Cyclo.from_int(3, 9)


def test_ball_char_integral_needs_precision():
    g = L("0@floor=1")  # digit at t^0 untracked, so |g| < 1 is undecidable
    with pytest.raises(PrecisionError):
        ball_char_integral_closed(g, 0)
    # ...but a visible top digit settles it without raising
    h = L("t^2@floor=1")
    assert ball_char_integral_closed(h, 0) == Cyclo.zero(3)


# -- dissection -------------------------------------------------------------------


@pytest.mark.parametrize("level", [1, 2])
def test_dissection_partitions_unit_ball(level):
    q = 3
    scale = -2 * level
    for cell in ball_cells(q, scale):
        hits = dissection_locate(cell, level)
        assert len(hits) == 1, f"alpha={cell}: hits={hits}"


def test_dissection_center_count():
    # reduced pairs with deg r <= 1 at q = 3: (0,1) plus 2 units x 3 monic deg-1
    assert len(dissection_centers(3, 1)) == 1 + 2 * 3


def test_dissection_locates_its_own_centers():
    q = 3
    for a, r in dissection_centers(q, 2):
        alpha = Laurent.from_ratio(a, r, floor=-7) if not r.is_one() else (
            Laurent.from_poly(a).truncate(-7))
        hits = dissection_locate(alpha, 2)
        assert (a, r) in hits and len(hits) == 1


# -- the delta kernel ---------------------------------------------------------------


def test_delta_eval_hand_values():
    q = 3
    assert delta_eval(Poly.zero(q), 1) == Cyclo.one(q)
    assert delta_eval(Poly.one(q), 1) == Cyclo.zero(q)
    assert delta_eval(P("t"), 1) == Cyclo.zero(q)
    assert delta_eval(Poly.zero(q), 2) == Cyclo.one(q)
    assert delta_eval(P("t^2+2*t"), 2) == Cyclo.zero(q)


@pytest.mark.parametrize("q,level,deg_bound", [(3, 1, 2), (3, 2, 3), (5, 1, 2)])
def test_delta_scan(q, level, deg_bound):
    checked, failures = delta_scan(q, level, deg_bound)
    assert checked == q ** (deg_bound + 1)
    assert failures == 0


# -- Gauss factors -------------------------------------------------------------------


@pytest.mark.parametrize("q", [3, 5])
def test_gauss_factor_both_routes(q):
    for o in range(-3, 5):
        for c in range(1, q):
            lam = Laurent.monomial(q, c, o)
            assert gauss_factor_closed(lam) == gauss_factor_direct(lam)


def test_gauss_factor_pins_the_quadratic_convention():
    # integral of psi(t u^2) is q^-1 G(1), and with coefficient 2 it is q^-1 G(2):
    # the table keys on the square's own coefficient, not twice it
    q = 3
    g1 = gauss_factor_closed(Laurent.monomial(q, 1, 1))
    g2 = gauss_factor_closed(Laurent.monomial(q, 2, 1))
    assert g1 == gauss_sum(q, 1).mul_q_pow(-2)
    assert g2 == gauss_sum(q, 2).mul_q_pow(-2)
    assert g1 != g2
    assert gauss_factor_direct(Laurent.monomial(q, 1, 1)) == g1


def test_gauss_factor_inexact_tail_is_irrelevant():
    lam = L("t^2+1@floor=0")
    assert gauss_factor_closed(lam) == Cyclo.from_int(3, 1).mul_q_pow(-2)


def test_gauss_product_small_dims():
    rng = random.Random(2)
    for d in (2, 3):
        for _ in range(6):
            lams = [Laurent.monomial(3, rng.randrange(1, 3), rng.randrange(-2, 3))
                    for _ in range(d)]
            assert gauss_product_closed(lams) == gauss_product_direct(lams)


# -- shell integrals ------------------------------------------------------------------


ALPHA_TILDES = [
    lambda q: Laurent.zero(q),
    lambda q: Laurent.monomial(q, 1, -1),
    lambda q: Laurent(q, -8, [2, 0, 1, 0, 0, 2, 1], exact=True),
]


@pytest.mark.parametrize("twisted", [False, True])
def test_shell_integral_grid(twisted):
    q = 3
    for l in range(-3, 3):
        for k in range(-2, 3):
            for ap in (1, 2):
                for mk in ALPHA_TILDES:
                    at = mk(q)
                    want = shell_integral_closed(l, k, ap, at, twisted)
                    got = shell_integral_direct(l, k, ap, at, twisted)
                    assert got == want, (l, k, ap, str(at), twisted)


def test_shell_integral_frozen_rows():
    q = 3
    z = Laurent.zero(q)
    # deep shell: volume (q-1) q^l
    assert shell_integral_closed(-3, 0, 1, z) == Cyclo.from_int(q, 2).mul_q_pow(-6)
    # l = -1, k = 0: the field Kloosterman / Salie sums appear
    for ap in (1, 2):
        assert shell_integral_closed(-1, 0, ap, z) == kloosterman(q, ap).mul_q_pow(-2)
        assert shell_integral_closed(-1, 0, ap, z, twisted=True) == salie(
            q, ap).mul_q_pow(-2)
    # twisted, odd shell, oscillation from the x side: tau
    assert shell_integral_closed(-1, -1, 1, z, twisted=True) == tau_psi(q).mul_q_pow(-2)
    # twisted, odd shell, oscillation from the alpha/x side picks up chi(alpha')
    F = Fq(3)
    got = shell_integral_closed(-3, 2, 2, z, twisted=True)
    assert got == (tau_psi(q) * F.chi(2)).mul_q_pow(-6)


def test_shell_integral_rejects_bad_args():
    with pytest.raises(ValueError):
        shell_integral_closed(0, 0, 3, Laurent.zero(3))
    with pytest.raises(ValueError):
        shell_integral_direct(0, 0, 1, Laurent.from_int(3, 1))


# -- truncated series -------------------------------------------------------------------


def _mkvar(i, d=2, order=4, q=3):
    return TruncSeries.var(q, d, order, i)


def test_series_arith_and_truncation():
    x, y = _mkvar(0), _mkvar(1)
    f = (x + y) * (x + y)
    assert f.coeff((2, 0)) == Laurent.one(3)
    assert f.coeff((1, 1)) == Laurent.from_int(3, 2)
    g = f * f  # degree 4 terms survive at order 4
    assert g.coeff((4, 0)) == Laurent.one(3)
    h = g * f  # degree 6 truncated away entirely
    assert h.max_degree() <= 4


def test_series_substitute_composes():
    q = 3
    x, y = _mkvar(0), _mkvar(1)
    f = x * x + y
    inner = [x + y * y, y + x * x * L("t^-1")]
    got = f.substitute(inner)
    want = (x + y * y) * (x + y * y) + (y + x * x * L("t^-1"))
    diff = got - want
    assert diff.is_known_zero()


def test_series_inverse_roundtrip():
    q = 3
    d, order = 2, 4
    x, y = _mkvar(0), _mkvar(1)
    maps = [x + y + x * y, 2 * y + x * x]
    inv = series_inverse(maps)
    ident = [TruncSeries.var(q, d, order, i) for i in range(d)]
    for i in range(d):
        err = maps[i].substitute(inv) - ident[i]
        assert err.is_known_zero()
        err2 = inv[i].substitute(maps) - ident[i]
        assert err2.is_known_zero()


def test_series_evaluate():
    x, y = _mkvar(0), _mkvar(1)
    f = x * x * L("t") + y * 2 + 1
    v = f.evaluate([L("t^-1"), L("2*t^-2")])
    # t * t^-2 + 2*2*t^-2 + 1 = t^-1 + t^-2 + 1
    assert v == L("1+t^-1+t^-2")


# -- Morse normal form and stationary phase ------------------------------------------------


def _series_from(q, d, order, entries):
    return TruncSeries(q, d, order, {e: c for e, c in entries.items()})


def test_morse_normal_form_diagonalizes():
    q, d, order = 3, 2, 4
    phi = _series_from(q, d, order, {
        (0, 0): L("t^2+2"),
        (2, 0): L("t"),
        (1, 1): L("1"),
        (0, 2): L("t"),
        (3, 0): L("1"),
        (1, 2): L("2"),
    })
    maps, lams, c0 = morse_normal_form(phi)
    assert c0 == L("t^2+2")
    got = phi.substitute(maps)
    for e, c in got.terms.items():
        deg = sum(e)
        if deg == 0:
            assert c.agrees_with(L("t^2+2"))
        elif deg == 2 and max(e) == 2:
            i = e.index(2)
            assert c.agrees_with(lams[i])
        else:
            assert c.known_zero(), (e, str(c))


def test_morse_rejects_undominated_phase():
    q = 3
    phi = _series_from(q, 1, 3, {(2,): L("1"), (3,): L("t^3")})
    with pytest.raises(ValueError):
        morse_normal_form(phi)


def test_stationary_phase_one_dim_frozen():
    q = 3
    phi = _series_from(q, 1, 2, {(2,): L("t")})
    closed = stationary_phase_closed(phi)
    assert closed == gauss_sum(q, 1).mul_q_pow(-2)
    assert stationary_phase_direct(phi) == closed


def test_stationary_phase_random_instances():
    q = 3
    rng = random.Random(17)
    for _ in range(12):
        d = rng.choice([1, 2])
        order = rng.choice([3, 4])
        terms = {}
        # diagonal quadratic part with nonnegative orders
        for i in range(d):
            e = tuple(2 if j == i else 0 for j in range(d))
            terms[e] = Laurent.monomial(q, rng.randrange(1, q), rng.randrange(0, 3))
        # a constant term and a few small higher terms
        terms[(0,) * d] = rand_laurent(rng, q, rng.randrange(-1, 3), -4)
        for _ in range(rng.randrange(0, 3)):
            e = tuple(rng.randrange(0, order) for _ in range(d))
            if sum(e) < 3 or sum(e) > order:
                continue
            terms[e] = Laurent.from_int(q, rng.randrange(1, q))
        phi = _series_from(q, d, order, terms)
        closed = stationary_phase_closed(phi)
        direct = stationary_phase_direct(phi)
        assert closed == direct, phi


def test_stationary_phase_mixed_quadratic():
    q = 3
    phi = _series_from(q, 2, 3, {
        (2, 0): L("t"), (1, 1): L("1"), (0, 2): L("t"),
        (3, 0): L("2"), (0, 0): L("t+1"),
    })
    assert stationary_phase_closed(phi) == stationary_phase_direct(phi)
