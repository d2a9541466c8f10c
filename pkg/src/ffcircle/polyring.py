"""Dense polynomial arithmetic over F_q, plus the helpers the rest of the
package leans on: extended gcd, CRT, irreducible enumeration, factoring by
trial division, divisor lattices, and a small rational-function type.

Polynomial literals use the grammar ``c*t^k`` with terms joined by ``+``
(examples: ``t^2+2*t+1``, ``2``, ``t``); parsing and printing round-trip.
"""

from __future__ import annotations

import itertools
from functools import lru_cache
from typing import Iterator, Sequence

from .basefield import Fq

NEG_INF = float("-inf")


class Poly:
    """A polynomial over F_q; immutable, coefficients lowest degree first."""

    __slots__ = ("q", "coeffs")

    def __init__(self, q: int, coeffs: Sequence[int]):
        cs = [c % q for c in coeffs]
        while cs and cs[-1] == 0:
            cs.pop()
        self.q = q
        self.coeffs = tuple(cs)

    # -- constructors ------------------------------------------------------

    @classmethod
    def zero(cls, q: int) -> "Poly":
        return cls(q, ())

    @classmethod
    def one(cls, q: int) -> "Poly":
        return cls(q, (1,))

    @classmethod
    def const(cls, q: int, c: int) -> "Poly":
        return cls(q, (c,))

    @classmethod
    def t(cls, q: int) -> "Poly":
        return cls(q, (0, 1))

    @classmethod
    def monomial(cls, q: int, c: int, k: int) -> "Poly":
        return cls(q, (0,) * k + (c,))

    # -- structure ---------------------------------------------------------

    @property
    def deg(self):
        """Degree; -inf for the zero polynomial."""
        return len(self.coeffs) - 1 if self.coeffs else NEG_INF

    @property
    def norm(self) -> int:
        """The absolute value |f| = q**deg(f), with |0| = 0."""
        return self.q ** (len(self.coeffs) - 1) if self.coeffs else 0

    def is_zero(self) -> bool:
        return not self.coeffs

    def __bool__(self) -> bool:
        return bool(self.coeffs)

    def is_one(self) -> bool:
        return self.coeffs == (1,)

    def is_const(self) -> bool:
        return len(self.coeffs) <= 1

    def lc(self) -> int:
        if not self.coeffs:
            raise ValueError("zero polynomial has no leading coefficient")
        return self.coeffs[-1]

    def is_monic(self) -> bool:
        return bool(self.coeffs) and self.coeffs[-1] == 1

    def monic(self) -> "Poly":
        if not self.coeffs:
            return self
        u = pow(self.coeffs[-1], self.q - 2, self.q)
        return Poly(self.q, [c * u for c in self.coeffs])

    def __getitem__(self, k: int) -> int:
        return self.coeffs[k] if 0 <= k < len(self.coeffs) else 0

    def __eq__(self, other) -> bool:
        if isinstance(other, int):
            other = Poly.const(self.q, other)
        if not isinstance(other, Poly):
            return NotImplemented
        return self.q == other.q and self.coeffs == other.coeffs

    def __hash__(self) -> int:
        return hash((self.q, self.coeffs))

    # -- ring operations ---------------------------------------------------

    def _coerce(self, other) -> "Poly":
        if isinstance(other, int):
            return Poly.const(self.q, other)
        if isinstance(other, Poly):
            if other.q != self.q:
                raise ValueError("mixed base fields")
            return other
        return NotImplemented

    def __add__(self, other) -> "Poly":
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        n = max(len(self.coeffs), len(other.coeffs))
        return Poly(self.q, [self[i] + other[i] for i in range(n)])

    __radd__ = __add__

    def __neg__(self) -> "Poly":
        return Poly(self.q, [-c for c in self.coeffs])

    def __sub__(self, other) -> "Poly":
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other) -> "Poly":
        return -(self - other)

    def __mul__(self, other) -> "Poly":
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        if not self.coeffs or not other.coeffs:
            return Poly.zero(self.q)
        out = [0] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if a:
                for j, b in enumerate(other.coeffs):
                    out[i + j] += a * b
        return Poly(self.q, out)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "Poly":
        if n < 0:
            raise ValueError("negative power")
        out = Poly.one(self.q)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def __divmod__(self, other) -> tuple["Poly", "Poly"]:
        other = self._coerce(other)
        if other.is_zero():
            raise ZeroDivisionError("polynomial division by zero")
        q_field = self.q
        rem = list(self.coeffs)
        db = len(other.coeffs) - 1
        inv_lc = pow(other.coeffs[-1], q_field - 2, q_field)
        quo = [0] * max(0, len(rem) - db)
        for i in range(len(rem) - 1, db - 1, -1):
            c = rem[i] % q_field
            if c:
                factor = (c * inv_lc) % q_field
                quo[i - db] = factor
                for j, b in enumerate(other.coeffs):
                    rem[i - db + j] -= factor * b
        return Poly(q_field, quo), Poly(q_field, rem[:db])

    def __floordiv__(self, other) -> "Poly":
        return divmod(self, other)[0]

    def __mod__(self, other) -> "Poly":
        return divmod(self, other)[1]

    def shift(self, k: int) -> "Poly":
        """Multiply by t**k (k >= 0)."""
        if not self.coeffs:
            return self
        return Poly(self.q, (0,) * k + self.coeffs)

    def evaluate(self, x: int) -> int:
        acc = 0
        for c in reversed(self.coeffs):
            acc = (acc * x + c) % self.q
        return acc

    def derivative(self) -> "Poly":
        return Poly(self.q, [i * c for i, c in enumerate(self.coeffs)][1:])

    # -- printing / parsing --------------------------------------------------

    def __str__(self) -> str:
        if not self.coeffs:
            return "0"
        parts = []
        for k in range(len(self.coeffs) - 1, -1, -1):
            c = self.coeffs[k]
            if not c:
                continue
            if k == 0:
                parts.append(str(c))
            elif k == 1:
                parts.append("t" if c == 1 else f"{c}*t")
            else:
                parts.append(f"t^{k}" if c == 1 else f"{c}*t^{k}")
        return "+".join(parts)

    def __repr__(self) -> str:
        return f"Poly({self.q}, {self})"


def parse_poly(q: int, text: str) -> Poly:
    """Parse the ``c*t^k`` grammar; inverse of ``str`` on canonical output."""
    text = text.strip().replace(" ", "")
    if not text:
        raise ValueError("empty polynomial literal")
    acc: dict[int, int] = {}
    for term in text.split("+"):
        if not term:
            raise ValueError(f"bad polynomial literal {text!r}")
        c, k = _parse_term(term)
        acc[k] = acc.get(k, 0) + c
    top = max(acc)
    coeffs = [0] * (top + 1)
    for k, c in acc.items():
        if k < 0:
            raise ValueError("negative exponent in polynomial literal")
        coeffs[k] = c
    return Poly(q, coeffs)


def _parse_term(term: str) -> tuple[int, int]:
    if "*" in term:
        cs, ts = term.split("*", 1)
        c = int(cs)
    elif term.startswith("t"):
        c, ts = 1, term
    else:
        return int(term), 0
    if ts == "t":
        return c, 1
    if not ts.startswith("t^"):
        raise ValueError(f"bad term {term!r}")
    return c, int(ts[2:])


# -- gcd machinery ----------------------------------------------------------


def xgcd(a: Poly, b: Poly) -> tuple[Poly, Poly, Poly]:
    """Extended gcd: returns (g, u, v) with u*a + v*b = g, g monic (or zero)."""
    q = a.q
    r0, r1 = a, b
    s0, s1 = Poly.one(q), Poly.zero(q)
    t0, t1 = Poly.zero(q), Poly.one(q)
    while not r1.is_zero():
        quo, rem = divmod(r0, r1)
        r0, r1 = r1, rem
        s0, s1 = s1, s0 - quo * s1
        t0, t1 = t1, t0 - quo * t1
    if r0.is_zero():
        return r0, s0, t0
    u = pow(r0.lc(), q - 2, q)
    return r0.monic(), s0 * u, t0 * u


def poly_gcd(a: Poly, b: Poly) -> Poly:
    return xgcd(a, b)[0]


def inv_mod(a: Poly, m: Poly) -> Poly:
    g, u, _ = xgcd(a, m)
    if not g.is_one():
        raise ValueError(f"{a} is not invertible mod {m}")
    return u % m


def coprime(a: Poly, b: Poly) -> bool:
    return poly_gcd(a, b).is_one()


def crt(residues: Sequence[tuple[Poly, Poly]]) -> Poly:
    """Solve x = v mod m for a list of (v, m) with pairwise coprime moduli."""
    if not residues:
        raise ValueError("empty CRT input")
    x, m = residues[0]
    x = x % m
    for v, n in residues[1:]:
        g, u, w = xgcd(m, n)
        if not g.is_one():
            raise ValueError("CRT moduli are not coprime")
        # x' = x + m * (u*(v - x) mod n)
        x = x + m * ((u * (v - x)) % n)
        m = m * n
        x = x % m
    return x


# -- enumeration and factorization ------------------------------------------


def enumerate_polys(q: int, deg_bound: int, monic_only: bool = False) -> Iterator[Poly]:
    """All polynomials of degree <= deg_bound (including 0 unless monic_only)."""
    if deg_bound < 0:
        if not monic_only:
            yield Poly.zero(q)
        return
    if monic_only:
        for d in range(deg_bound + 1):
            for tail in itertools.product(range(q), repeat=d):
                yield Poly(q, list(tail) + [1])
    else:
        for coeffs in itertools.product(range(q), repeat=deg_bound + 1):
            yield Poly(q, coeffs)


def monic_of_degree(q: int, d: int) -> Iterator[Poly]:
    for tail in itertools.product(range(q), repeat=d):
        yield Poly(q, list(tail) + [1])


@lru_cache(maxsize=None)
def monic_irreducibles(q: int, max_deg: int) -> tuple[Poly, ...]:
    """All monic irreducibles of degree <= max_deg, ordered by degree then coeffs."""
    out: list[Poly] = []
    for d in range(1, max_deg + 1):
        for f in monic_of_degree(q, d):
            if all(not (f % p).is_zero() for p in out if 2 * (len(p.coeffs) - 1) <= d):
                out.append(f)
    return tuple(out)


def is_irreducible(f: Poly) -> bool:
    d = len(f.coeffs) - 1
    if d <= 0:
        return False
    for p in monic_irreducibles(f.q, d // 2):
        if (f % p).is_zero():
            return False
    return True


def factor(f: Poly) -> dict[Poly, int]:
    """Factor into monic irreducibles: f = lc * prod p**e.  Unit is dropped."""
    if f.is_zero():
        raise ValueError("cannot factor 0")
    f = f.monic()
    out: dict[Poly, int] = {}
    d = len(f.coeffs) - 1
    for p in monic_irreducibles(f.q, max(d, 1)):
        if len(p.coeffs) - 1 > len(f.coeffs) - 1:
            break
        e = 0
        while True:
            quo, rem = divmod(f, p)
            if rem.is_zero():
                f = quo
                e += 1
            else:
                break
        if e:
            out[p] = e
        if f.is_one():
            break
    return out


def monic_divisors(f: Poly) -> list[Poly]:
    """All monic divisors of f, from the factorization."""
    fac = factor(f)
    divs = [Poly.one(f.q)]
    for p, e in fac.items():
        divs = [d * p**k for d in divs for k in range(e + 1)]
    return divs


def divisor_count(f: Poly) -> int:
    """tau(f): number of monic divisors."""
    return len(monic_divisors(f))


def poly_factorial(q: int, n: int) -> Poly:
    """Product of all monic polynomials of degree <= n."""
    out = Poly.one(q)
    for d in range(1, n + 1):
        for f in monic_of_degree(q, d):
            out = out * f
    return out


def euler_phi(m: Poly) -> int:
    """Number of units in O/(m)."""
    out = 1
    for p, e in factor(m).items():
        np = p.norm
        out *= (np - 1) * np ** (e - 1)
    return out


# -- residue rings -----------------------------------------------------------


class ResidueRing:
    """The quotient F_q[t]/(m), with canonical representatives of degree < deg m.

    Elements are encoded as integer indices in [0, q**deg m): the index is the
    base-q expansion of the coefficient vector, lowest degree first.
    """

    def __init__(self, m: Poly):
        if m.is_zero() or m.is_const():
            raise ValueError("modulus must have positive degree")
        self.m = m.monic()
        self.q = m.q
        self.deg = len(self.m.coeffs) - 1
        self.size = self.q**self.deg

    def reduce(self, f: Poly) -> Poly:
        return f % self.m

    def index(self, f: Poly) -> int:
        f = f % self.m
        out = 0
        for c in reversed(f.coeffs):
            out = out * self.q + c
        return out

    def poly(self, idx: int) -> Poly:
        coeffs = []
        for _ in range(self.deg):
            coeffs.append(idx % self.q)
            idx //= self.q
        return Poly(self.q, coeffs)

    def elements(self) -> Iterator[Poly]:
        for i in range(self.size):
            yield self.poly(i)

    def units(self) -> Iterator[Poly]:
        for f in self.elements():
            if coprime(f, self.m):
                yield f

    def inv(self, f: Poly) -> Poly:
        return inv_mod(f, self.m)


# -- rational functions -------------------------------------------------------


class RatFunc:
    """A rational function num/den over F_q, reduced, with monic denominator."""

    __slots__ = ("num", "den")

    def __init__(self, num: Poly, den: Poly):
        if den.is_zero():
            raise ZeroDivisionError("zero denominator")
        g = poly_gcd(num, den)
        if not g.is_one() and not num.is_zero():
            num, den = num // g, den // g
        if num.is_zero():
            den = Poly.one(num.q)
        u = pow(den.lc(), den.q - 2, den.q)
        self.num = num * u
        self.den = den * u

    @classmethod
    def from_poly(cls, f: Poly) -> "RatFunc":
        return cls(f, Poly.one(f.q))

    def _coerce(self, other) -> "RatFunc":
        if isinstance(other, RatFunc):
            return other
        if isinstance(other, Poly):
            return RatFunc.from_poly(other)
        if isinstance(other, int):
            return RatFunc.from_poly(Poly.const(self.num.q, other))
        return NotImplemented

    def __add__(self, other) -> "RatFunc":
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return RatFunc(self.num * other.den + other.num * self.den, self.den * other.den)

    __radd__ = __add__

    def __neg__(self) -> "RatFunc":
        return RatFunc(-self.num, self.den)

    def __sub__(self, other) -> "RatFunc":
        return self + (-self._coerce(other))

    def __mul__(self, other) -> "RatFunc":
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return RatFunc(self.num * other.num, self.den * other.den)

    __rmul__ = __mul__

    def inv(self) -> "RatFunc":
        return RatFunc(self.den, self.num)

    def __truediv__(self, other) -> "RatFunc":
        return self * self._coerce(other).inv()

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def is_poly(self) -> bool:
        return self.den.is_one()

    def __eq__(self, other) -> bool:
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self.num == other.num and self.den == other.den

    def __hash__(self) -> int:
        return hash((self.num, self.den))

    def __repr__(self) -> str:
        return f"RatFunc({self.num}, {self.den})"
