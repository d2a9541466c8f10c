import itertools
from fractions import Fraction

import pytest

from ffcircle.densities import (
    DensityProfile,
    congruence_count,
    partial_identity_check,
    sigma_local,
    singular_series,
    tail_report,
)
from ffcircle.expsums import Instance
from ffcircle.polyring import Poly, monic_irreducibles, parse_poly
from ffcircle.quadform import QuadForm


def P(s, q=3):
    return parse_poly(q, s)


def four_squares_g1():
    return Instance(QuadForm.diagonal(3, [1, 1, 1, 1]), P("1"), P("1"),
                    (P("0"),) * 4)


def four_squares_gt():
    return Instance(QuadForm.diagonal(3, [1, 1, 1, 1]), P("t^2+1"), P("t"),
                    (P("1"), P("0"), P("0"), P("0")))


def test_sigma_four_squares_frozen():
    inst = four_squares_g1()
    prof = sigma_local(inst, P("t"), 2)
    assert prof.levels == ((1, 24, Fraction(8, 9)), (2, 648, Fraction(8, 9)))
    assert prof.k_stable == 1 and prof.sigma == Fraction(8, 9)
    assert sigma_local(inst, P("t+1"), 2).sigma == Fraction(8, 9)
    prof2 = sigma_local(inst, P("t^2+1"), 2)
    assert prof2.levels[0] == (1, 720, Fraction(80, 81))
    assert prof2.sigma == Fraction(80, 81) and prof2.k_stable == 1


def test_count_matches_enumeration_cross_terms():
    # independent check of the dense walker on a form with a mixed term
    form = QuadForm.from_coeffs(3, 3, {(0, 0): 1, (0, 1): 1, (1, 1): 2,
                                       (2, 2): 1})
    lin = [P("1"), P("0"), P("2")]
    const = P("2")
    got = congruence_count(form, P("t"), P("1"), lin, const, method="dense")
    want = 0
    for x in itertools.product(range(3), repeat=3):
        v = x[0] ** 2 + x[0] * x[1] + 2 * x[1] ** 2 + x[2] ** 2
        v += 1 * x[0] + 2 * x[2] + 2
        want += v % 3 == 0
    assert got == want


def test_congruence_count_routes_agree():
    form = QuadForm.diagonal(3, [P("1"), P("2"), P("1")])
    lin = [P("t+1"), P("0"), P("2")]
    for m in [P("t"), P("t^2"), P("t^2+1"), P("t^2+2*t+1")]:
        dense = congruence_count(form, m, P("t"), lin, P("1"), method="dense")
        chars = congruence_count(form, m, P("t"), lin, P("1"), method="chars")
        assert dense == chars
    with pytest.raises(ValueError):
        congruence_count(form, P("t^2+t"), P("1"), [P("0")] * 3, P("0"),
                         method="chars")


def test_sigma_is_one_on_primes_dividing_g():
    prof = sigma_local(four_squares_gt(), P("t"), 2)
    assert prof.sigma == 1 and prof.k_stable == 1


def test_sigma_unstable_is_explicit():
    prof = sigma_local(four_squares_g1(), P("t"), 1)
    assert prof.k_stable is None and prof.sigma is None
    assert not prof.stable
    assert prof.to_json()["stable_at"] is None
    assert prof.to_json()["sigma"] is None


def test_sigma_decay_for_good_primes():
    # away from f, g, and the discriminant: |sigma - 1| <= C / |varpi|^2
    inst = four_squares_g1()
    for varpi in monic_irreducibles(3, 2):
        if int(varpi.deg) < 2:
            continue
        prof = sigma_local(inst, varpi, 2)
        c_observed = abs(prof.sigma - 1) * 9**2
        assert c_observed <= Fraction(3, 2)


def test_sigma_validation():
    inst = four_squares_g1()
    with pytest.raises(ValueError):
        sigma_local(inst, P("t^2"), 2)
    with pytest.raises(ValueError):
        sigma_local(inst, P("2*t"), 2)
    with pytest.raises(ValueError):
        sigma_local(inst, P("t"), 0)


def test_profile_json_schema():
    prof = sigma_local(four_squares_g1(), P("t"), 2)
    blob = prof.to_json()
    assert set(blob) == {"prime", "levels", "stable_at", "sigma"}
    assert blob["levels"][0] == {"k": 1, "count": 24, "normalized": "8/9"}
    assert blob["stable_at"] == 1 and blob["sigma"] == "8/9"


def test_partial_identity_frozen_values():
    lhs, rhs, eq = partial_identity_check(four_squares_g1(), 0)
    assert eq and lhs == 1
    lhs, rhs, eq = partial_identity_check(four_squares_gt(), 0)
    assert eq and lhs == 81
    lhs, rhs, eq = partial_identity_check(four_squares_g1(), 1)
    assert eq and lhs == Fraction(512, 729)
    lhs, rhs, eq = partial_identity_check(four_squares_gt(), 1)
    assert eq and lhs == 64


def test_partial_identity_guards():
    small = Instance(QuadForm.diagonal(3, [1, 1]), P("1"), P("1"),
                     (P("0"), P("0")))
    with pytest.raises(ValueError):
        partial_identity_check(small, 0)
    with pytest.raises(ValueError, match="reduce N"):
        partial_identity_check(four_squares_g1(), 2)


def test_singular_series_frozen():
    inst = four_squares_g1()
    prod1, factors1 = singular_series(inst, 1)
    assert prod1 == Fraction(8, 9) ** 3 == Fraction(512, 729)
    prod2, factors2 = singular_series(inst, 2)
    assert prod2 == Fraction(8, 9) ** 3 * Fraction(80, 81) ** 3
    assert all(f.k_stable == 1 for f in factors2)
    prod3, _ = singular_series(inst, 3)
    assert prod3 >= Fraction(1, 10)
    assert abs(float(prod3) - 0.669250) < 1e-5


def test_singular_series_envelope():
    inst = four_squares_g1()
    prod1, _ = singular_series(inst, 1)
    prod2, factors = singular_series(inst, 2)
    ratio = prod2 / prod1
    check = Fraction(1)
    for f in factors:
        if int(f.prime.deg) == 2:
            assert abs(f.sigma - 1) <= Fraction(3, 2) / 81
            check *= f.sigma
    assert ratio == check


def test_local_obstruction_flagged():
    # F = x1^2 + x2^2 cannot take the value t at t: any solution mod t is
    # the origin, which forces F = 0 mod t^2
    obst = Instance(QuadForm.diagonal(3, [1, 1]), P("t"), P("1"),
                    (P("0"), P("0")))
    prof = sigma_local(obst, P("t"), 3)
    assert prof.levels[0][2] == Fraction(1, 3)
    assert prof.levels[1][1] == 0 and prof.levels[2][1] == 0
    assert prof.k_stable == 2 and prof.sigma == 0
    prod, factors = singular_series(obst, 1)
    assert prod == 0
    assert any(f.sigma == 0 for f in factors)


def test_tail_report_shapes():
    inst = four_squares_gt()
    rep0 = tail_report(inst, 0)
    assert len(rep0["rows"]) == 1 and rep0["fitted_exponent"] is None

    rep = tail_report(inst, 3)
    incs = [row["increment"] for row in rep["rows"]]
    assert incs[2] < incs[1] and incs[3] < incs[2]


def test_tail_exponent_d5():
    inst = Instance(QuadForm.diagonal(3, [1] * 5), P("t^2+1"), P("t"),
                    (P("1"),) + (P("0"),) * 4)
    rep = tail_report(inst, 3)
    assert rep["fitted_exponent"] <= 1.5 - 5 / 2 + 0.3
