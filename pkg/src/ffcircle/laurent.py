"""Laurent series in 1/t over F_q: the completion at the infinite place.

An element is a finite list of known digits plus, unless it is exact, an
unknown tail.  ``floor`` is the lowest exponent whose coefficient is known;
every read below it on an inexact element raises ``PrecisionError``.  The
absolute value is |x| = q**deg(x), so the unknown tail of an element with
floor f has absolute value < q**f.

Precision propagates through arithmetic with the worst-case rules
  add: floor = max of the inexact floors
  mul: floor = max(deg(x) + floor(y), deg(y) + floor(x))
and division and square root work digit by digit in the relative expansion
x = c*t^N*(1 + d_1/t + d_2/t^2 + ...), preserving the count of known
relative digits.

Literals: terms ``c*t^k`` (k may be negative) joined by ``+``, with an
optional ``@floor=F`` suffix marking the element inexact below F.
"""

from __future__ import annotations

from typing import Sequence

from .basefield import Cyclo, Fq, eq_char
from .polyring import NEG_INF, Poly, _parse_term


class PrecisionError(Exception):
    """Read of a coefficient that the tracked precision does not cover."""


class Laurent:
    """Element of F_q((1/t)) with tracked precision.

    ``coeffs[i]`` is the coefficient of t**(floor + i); entries above the
    top nonzero digit are trimmed.  ``exact`` means all coefficients below
    floor are zero.
    """

    __slots__ = ("q", "floor", "exact", "coeffs")

    def __init__(self, q: int, floor: int, coeffs: Sequence[int], exact: bool = False):
        cs = [c % q for c in coeffs]
        while cs and cs[-1] == 0:
            cs.pop()
        if exact:
            # canonical exact form starts at the lowest nonzero digit
            k = 0
            while k < len(cs) and cs[k] == 0:
                k += 1
            cs = cs[k:]
            floor = floor + k if cs else 0
        self.q = q
        self.floor = floor
        self.exact = exact
        self.coeffs = tuple(cs)

    # -- constructors --------------------------------------------------------

    @classmethod
    def zero(cls, q: int) -> "Laurent":
        return cls(q, 0, (), exact=True)

    @classmethod
    def one(cls, q: int) -> "Laurent":
        return cls(q, 0, (1,), exact=True)

    @classmethod
    def from_int(cls, q: int, c: int) -> "Laurent":
        return cls(q, 0, (c,), exact=True)

    @classmethod
    def monomial(cls, q: int, c: int, k: int) -> "Laurent":
        return cls(q, k, (c,), exact=True)

    @classmethod
    def from_poly(cls, f: Poly) -> "Laurent":
        return cls(f.q, 0, f.coeffs, exact=True)

    @classmethod
    def from_ratio(cls, num: Poly, den: Poly, floor: int | None = None) -> "Laurent":
        """Expand num/den at infinity.  Exact when den divides num, otherwise
        the target floor is required."""
        if den.is_zero():
            raise ZeroDivisionError("division by zero")
        quo, rem = divmod(num, den)
        if rem.is_zero():
            return cls.from_poly(quo)
        if floor is None:
            raise PrecisionError("num/den does not terminate; pass floor=")
        shifted = num.shift(-floor) if floor <= 0 else None
        if shifted is None:
            # floor > 0: only digits at exponents >= floor survive
            quo2, rem2 = divmod(num, den.shift(floor))
            return cls(num.q, floor, quo2.coeffs, exact=False)
        quo2, rem2 = divmod(shifted, den)
        return cls(num.q, floor, quo2.coeffs, exact=rem2.is_zero())

    # -- structure -----------------------------------------------------------

    @property
    def top_known(self) -> bool:
        return self.exact or bool(self.coeffs)

    @property
    def deg(self):
        """Exponent of the top digit; NEG_INF for exact zero.

        Raises on an inexact element with no known nonzero digit, whose
        magnitude genuinely is not determined.
        """
        if self.coeffs:
            return self.floor + len(self.coeffs) - 1
        if self.exact:
            return NEG_INF
        raise PrecisionError(f"magnitude below t^{self.floor} is untracked")

    def deg_bound(self) -> float:
        """An upper bound for deg that never raises."""
        if self.coeffs:
            return self.floor + len(self.coeffs) - 1
        return NEG_INF if self.exact else self.floor - 1

    def is_zero(self) -> bool:
        """True when the element is exactly zero; raises when that is not
        determined by the tracked digits."""
        if self.coeffs:
            return False
        if self.exact:
            return True
        raise PrecisionError(f"zero to precision t^{self.floor} but tail untracked")

    def known_zero(self) -> bool:
        """All known digits vanish (weaker than is_zero)."""
        return not self.coeffs

    def __getitem__(self, k: int) -> int:
        if k >= self.floor:
            i = k - self.floor
            return self.coeffs[i] if i < len(self.coeffs) else 0
        if self.exact:
            return 0
        raise PrecisionError(f"coefficient of t^{k} is below floor t^{self.floor}")

    def __eq__(self, other) -> bool:
        if isinstance(other, int):
            other = Laurent.from_int(self.q, other)
        if not isinstance(other, Laurent):
            return NotImplemented
        if self.q != other.q or self.exact != other.exact:
            return False
        if self.exact:
            return self.coeffs == other.coeffs and (
                not self.coeffs or self.floor == other.floor
            )
        return self.floor == other.floor and self.coeffs == other.coeffs

    def __hash__(self) -> int:
        return hash((self.q, self.exact, self.floor, self.coeffs))

    def _hi(self, lo: int) -> int:
        b = self.deg_bound()
        return lo - 1 if b == NEG_INF else int(b)

    def agrees_with(self, other: "Laurent") -> bool:
        """Digits agree wherever both sides track them."""
        if self.exact and other.exact:
            return self == other
        lo = max(
            self.floor if not self.exact else other.floor,
            other.floor if not other.exact else self.floor,
        )
        hi = max(self._hi(lo), other._hi(lo), lo - 1)
        return all(self[k] == other[k] for k in range(lo, hi + 1))

    # -- arithmetic -----------------------------------------------------------

    def _coerce(self, other) -> "Laurent":
        if isinstance(other, Laurent):
            if other.q != self.q:
                raise ValueError("mixed base fields")
            return other
        if isinstance(other, int):
            return Laurent.from_int(self.q, other)
        if isinstance(other, Poly):
            return Laurent.from_poly(other)
        return NotImplemented

    def __add__(self, other) -> "Laurent":
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        exact = self.exact and other.exact
        if exact:
            lo = min(self.floor, other.floor) if (self.coeffs and other.coeffs) else (
                self.floor if self.coeffs else other.floor
            )
        else:
            floors = [x.floor for x in (self, other) if not x.exact]
            lo = max(floors)
        hi = max(self._hi(lo), other._hi(lo), lo - 1)
        return Laurent(
            self.q,
            lo,
            [self[k] + other[k] for k in range(lo, hi + 1)],
            exact=exact,
        )

    __radd__ = __add__

    def __neg__(self) -> "Laurent":
        return Laurent(self.q, self.floor, [-c for c in self.coeffs], exact=self.exact)

    def __sub__(self, other) -> "Laurent":
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other) -> "Laurent":
        return -(self - other)

    def __mul__(self, other) -> "Laurent":
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        if (self.exact and not self.coeffs) or (other.exact and not other.coeffs):
            return Laurent.zero(self.q)
        terms = []
        if not other.exact:
            terms.append(int(self.deg_bound()) + other.floor)
        if not self.exact:
            terms.append(int(other.deg_bound()) + self.floor)
        exact = not terms
        conv_lo = self.floor + other.floor
        la, lb = len(self.coeffs), len(other.coeffs)
        out = [0] * (la + lb - 1) if la and lb else []
        for i, a in enumerate(self.coeffs):
            if a:
                for j, b in enumerate(other.coeffs):
                    out[i + j] += a * b
        if exact:
            return Laurent(self.q, conv_lo, out, exact=True)
        lo = max(terms)
        drop = lo - conv_lo
        return Laurent(self.q, lo, out[drop:] if drop >= 0 else [0] * (-drop) + out)

    __rmul__ = __mul__

    def shift(self, k: int) -> "Laurent":
        """Multiply by t**k."""
        return Laurent(self.q, self.floor + k, self.coeffs, exact=self.exact)

    def truncate(self, new_floor: int) -> "Laurent":
        """Forget digits below new_floor; the result is inexact."""
        if not self.exact and new_floor < self.floor:
            raise PrecisionError("cannot refine precision by truncating")
        drop = new_floor - self.floor
        return Laurent(self.q, new_floor, self.coeffs[drop:] if drop > 0 else (0,) * (-drop) + self.coeffs)

    # relative-digit helpers: x = c * t^N * (1 + d_1 t^-1 + ...)

    def _relative(self, digits: int) -> tuple[int, int, list[int]]:
        if not self.coeffs:
            raise ZeroDivisionError("no leading digit")
        n = self.floor + len(self.coeffs) - 1
        c = self.coeffs[-1]
        F = Fq(self.q)
        cinv = F.inv(c)
        avail = len(self.coeffs) - 1 if not self.exact else digits
        if digits > avail:
            raise PrecisionError(
                f"need {digits} relative digits, element tracks {avail}"
            )
        d = [(self[n - j] * cinv) % self.q for j in range(1, digits + 1)]
        return n, c, d

    def reciprocal(self, floor: int | None = None) -> "Laurent":
        """1/x.  Terminates exactly only for monomials; otherwise the result
        is truncated, by default at the precision the input supports."""
        if not self.coeffs:
            raise ZeroDivisionError("reciprocal of (possible) zero")
        n = self.floor + len(self.coeffs) - 1
        if self.exact and len(self.coeffs) == 1 and floor is None:
            return Laurent.monomial(self.q, Fq(self.q).inv(self.coeffs[-1]), -n)
        if floor is None:
            if self.exact:
                raise PrecisionError("non-monomial exact reciprocal: pass floor=")
            floor = self.floor - 2 * n
        digits = -n - floor
        if digits < 0:
            # 1/x has degree -n < floor: every tracked digit is zero
            return Laurent(self.q, floor, ())
        _, c, d = self._relative(digits)
        e = [1] + [0] * digits
        for j in range(1, digits + 1):
            e[j] = -sum(d[i - 1] * e[j - i] for i in range(1, j + 1)) % self.q
        F = Fq(self.q)
        cinv = F.inv(c)
        out = [(cinv * v) % self.q for v in reversed(e)]
        return Laurent(self.q, floor, out, exact=False)

    def sqrt(self, floor: int | None = None) -> "Laurent":
        """Canonical square root: the one whose leading coefficient is the
        smaller residue.  Degree must be even and the leading digit a square."""
        if not self.coeffs:
            raise ZeroDivisionError("sqrt needs a known leading digit")
        n = self.floor + len(self.coeffs) - 1
        if n % 2:
            raise ValueError("odd degree has no square root in F_q((1/t))")
        F = Fq(self.q)
        c = self.coeffs[-1]
        s0 = F.sqrt(c)  # raises for a non-square
        if self.exact and len(self.coeffs) == 1 and floor is None:
            return Laurent.monomial(self.q, s0, n // 2)
        if floor is None:
            if self.exact:
                raise PrecisionError("non-monomial exact sqrt: pass floor=")
            floor = self.floor - n // 2
        digits = max(n // 2 - floor, 0)
        _, _, d = self._relative(digits)
        # s = s0 (1 + s_1 t^-1 + ...): s_j = (d_j - sum_{0<i<j} s_i s_{j-i}) / 2
        inv2 = F.inv(2)
        s = [1] + [0] * digits
        for j in range(1, digits + 1):
            acc = d[j - 1] - sum(s[i] * s[j - i] for i in range(1, j))
            s[j] = (acc * inv2) % self.q
        out = [(s0 * v) % self.q for v in reversed(s)]
        return Laurent(self.q, n // 2 - digits, out, exact=False)

    # -- pieces ----------------------------------------------------------------

    def poly_part(self) -> Poly:
        """The digits at exponents >= 0, as a polynomial ([x])."""
        if self.floor > 0 and not self.exact:
            raise PrecisionError("integer part needs digits down to t^0")
        n = int(self.deg_bound())
        return Poly(self.q, [self[k] for k in range(0, max(n, -1) + 1)])

    def frac_part(self) -> "Laurent":
        """((x)): the digits at exponents <= -1."""
        if self.floor > 0 and not self.exact:
            raise PrecisionError("fractional part needs digits below t^0")
        hi = min(int(self.deg_bound()), -1)
        lo = self.floor if not self.exact else min(self.floor, hi)
        if hi < lo and self.exact:
            return Laurent.zero(self.q)
        return Laurent(self.q, lo, [self[k] for k in range(lo, hi + 1)], exact=self.exact)

    def residue(self) -> int:
        """The coefficient of 1/t, the argument of the additive character."""
        return self[-1]

    def psi(self) -> Cyclo:
        """psi(x) = e_q(coefficient of t^-1)."""
        return eq_char(self.q, self[-1])

    def small_frac(self, n: int) -> bool:
        """Whether |((x))| < q**-n, i.e. digits -1..-n all vanish."""
        return all(self[-k] == 0 for k in range(1, n + 1))

    # -- printing / parsing ------------------------------------------------------

    def __str__(self) -> str:
        parts = []
        hi = int(self.deg_bound()) if self.coeffs else self.floor - 1
        for k in range(hi, self.floor - 1, -1):
            c = self[k]
            if not c:
                continue
            if k == 0:
                parts.append(str(c))
            elif k == 1:
                parts.append("t" if c == 1 else f"{c}*t")
            else:
                parts.append(f"t^{k}" if c == 1 else f"{c}*t^{k}")
        body = "+".join(parts) if parts else "0"
        return body if self.exact else f"{body}@floor={self.floor}"

    def __repr__(self) -> str:
        return f"Laurent({self.q}, {self})"


def parse_laurent(q: int, text: str) -> Laurent:
    """Parse the ``c*t^k`` grammar with optional ``@floor=F`` suffix."""
    text = text.strip().replace(" ", "")
    floor = None
    if "@" in text:
        body, tag = text.split("@", 1)
        if not tag.startswith("floor="):
            raise ValueError(f"bad precision tag {tag!r}")
        floor = int(tag[len("floor=") :])
    else:
        body = text
    if not body:
        raise ValueError("empty literal")
    acc: dict[int, int] = {}
    for term in body.split("+"):
        c, k = _parse_term(term)
        acc[k] = acc.get(k, 0) + c
    acc = {k: c for k, c in acc.items() if c % q}
    lo = min(acc) if acc else 0
    hi = max(acc) if acc else 0
    if floor is not None and acc and lo < floor:
        raise ValueError("literal has digits below its own floor")
    start = floor if floor is not None else lo
    coeffs = [acc.get(k, 0) for k in range(start, hi + 1)]
    return Laurent(q, start, coeffs, exact=floor is None)


def psi_ratio(num: Poly, den: Poly) -> Cyclo:
    """psi(num/den), computed exactly from the expansion at infinity."""
    return Laurent.from_ratio(num, den, floor=-1).psi()


def residue_ratio(num: Poly, den: Poly) -> int:
    """Coefficient of 1/t in the expansion of num/den."""
    return Laurent.from_ratio(num, den, floor=-1)[-1]
