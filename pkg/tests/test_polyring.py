import pytest
from hypothesis import given, settings, strategies as st

from ffcircle.polyring import (
    NEG_INF,
    Poly,
    RatFunc,
    ResidueRing,
    coprime,
    crt,
    divisor_count,
    enumerate_polys,
    euler_phi,
    factor,
    inv_mod,
    is_irreducible,
    monic_divisors,
    monic_irreducibles,
    parse_poly,
    poly_factorial,
    poly_gcd,
    xgcd,
)


def P(text, q=3):
    return parse_poly(q, text)


def small_poly(q=3, max_deg=5):
    return st.lists(st.integers(0, q - 1), min_size=0, max_size=max_deg + 1).map(
        lambda cs: Poly(q, cs)
    )


def test_zero_degree_sentinel():
    z = Poly.zero(3)
    assert z.deg == NEG_INF
    assert z.norm == 0
    assert Poly.const(3, 2).deg == 0
    assert Poly.t(3).deg == 1


def test_str_parse_roundtrip_cases():
    for s in ["0", "1", "2", "t", "2*t", "t^2+2*t+1", "t^5+2*t^3+1", "2*t^4+t"]:
        assert str(P(s)) == s
    assert P("t+t") == P("2*t")
    assert P("2*t+t") == Poly.zero(3)
    with pytest.raises(ValueError):
        parse_poly(3, "")
    with pytest.raises(ValueError):
        parse_poly(3, "t^")


@given(small_poly())
def test_str_parse_roundtrip_random(f):
    assert parse_poly(3, str(f)) == f


@given(small_poly(), small_poly(), small_poly())
def test_ring_axioms(a, b, c):
    assert a * (b + c) == a * b + a * c
    assert (a * b) * c == a * (b * c)
    assert a + b == b + a


@given(small_poly(), small_poly())
def test_divmod_identity(a, b):
    if b.is_zero():
        with pytest.raises(ZeroDivisionError):
            divmod(a, b)
        return
    quo, rem = divmod(a, b)
    assert quo * b + rem == a
    assert rem.is_zero() or rem.deg < b.deg


@given(small_poly(), small_poly())
def test_xgcd_bezout(a, b):
    g, u, v = xgcd(a, b)
    assert u * a + v * b == g
    if not g.is_zero():
        assert g.is_monic()
        assert (a % g).is_zero() and (b % g).is_zero()


def test_inv_mod():
    m = P("t^2+1")
    a = P("t+1")
    ai = inv_mod(a, m)
    assert (a * ai) % m == Poly.one(3)


def test_inv_mod_noncoprime_raises():
    with pytest.raises(ValueError):
        inv_mod(P("t"), P("t^2+t"))


def test_crt():
    pairs = [(P("1"), P("t")), (P("2"), P("t+1")), (P("t"), P("t^2+1"))]
    x = crt(pairs)
    for v, m in pairs:
        assert (x - v) % m == Poly.zero(3)
    assert x.deg < 4


def test_enumeration_counts():
    assert len(list(enumerate_polys(3, 1))) == 9
    assert len(list(enumerate_polys(3, 1, monic_only=True))) == 4
    assert len(list(enumerate_polys(3, -1))) == 1  # just zero
    assert len(list(enumerate_polys(3, 2))) == 27


def test_irreducible_counts_q3():
    # counts per degree by the necklace formula: 3, 3, 8, 18
    irr = monic_irreducibles(3, 4)
    by_deg = {}
    for p in irr:
        by_deg[p.deg] = by_deg.get(p.deg, 0) + 1
    assert by_deg == {1: 3, 2: 3, 3: 8, 4: 18}
    for p in irr:
        assert is_irreducible(p)


def test_is_irreducible_cases():
    assert is_irreducible(P("t^2+1"))
    assert not is_irreducible(P("t^2+2"))  # (t+1)(t+2)
    assert is_irreducible(P("t^3+2*t+1"))
    assert not is_irreducible(P("1"))
    assert not is_irreducible(P("2"))


@given(small_poly(max_deg=6))
@settings(max_examples=60)
def test_factor_recomposes(f):
    if f.is_zero():
        return
    fac = factor(f)
    g = Poly.const(3, f.lc())
    for p, e in fac.items():
        assert is_irreducible(p)
        g = g * p**e
    assert g == f


def test_poly_factorial_q3():
    assert poly_factorial(3, 1) == P("t^3+2*t")
    f2 = poly_factorial(3, 2)
    assert f2.deg == 3 + 2 * 9
    assert (f2 % P("t^2+1")).is_zero()


def test_divisors():
    f = P("t^2") * P("t+1")
    divs = monic_divisors(f)
    assert len(divs) == 6
    assert divisor_count(f) == 6
    for d in divs:
        assert (f % d).is_zero()


def test_euler_phi():
    assert euler_phi(P("t")) == 2
    assert euler_phi(P("t^2")) == 6
    assert euler_phi(P("t^2+1")) == 8
    assert euler_phi(P("t^2+t")) == 4


def test_residue_ring_roundtrip():
    R = ResidueRing(P("t^2+1"))
    assert R.size == 9
    seen = set()
    for i in range(R.size):
        f = R.poly(i)
        assert R.index(f) == i
        seen.add(f)
    assert len(seen) == 9
    units = list(R.units())
    assert len(units) == euler_phi(R.m)
    for u in units:
        assert (u * R.inv(u)) % R.m == Poly.one(3)


def test_residue_ring_rejects_constants():
    with pytest.raises(ValueError):
        ResidueRing(Poly.one(3))


def test_ratfunc_reduction_and_arith():
    a = RatFunc(P("t^2+2*t+1"), P("t+1"))
    assert a.is_poly() and a.num == P("t+1")
    b = RatFunc(P("1"), P("t"))
    c = a + b
    assert c == RatFunc(P("t^2+t+1"), P("t"))
    assert (b * b.inv()) == RatFunc.from_poly(Poly.one(3))
    assert RatFunc(P("2*t"), P("2")).num == P("t")  # monic denominator normalization
    with pytest.raises(ZeroDivisionError):
        RatFunc(P("1"), Poly.zero(3))


@given(small_poly(max_deg=3), small_poly(max_deg=3))
@settings(max_examples=40)
def test_gcd_divides(a, b):
    g = poly_gcd(a, b)
    if g.is_zero():
        assert a.is_zero() and b.is_zero()
    else:
        assert (a % g).is_zero() and (b % g).is_zero()
        assert coprime(a // g, b // g) or (a // g).is_zero() or (b // g).is_zero()
