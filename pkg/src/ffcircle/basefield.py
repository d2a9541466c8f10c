"""Prime fields and exact character values.

Complete character sums over F_q[t] (Gauss, Kloosterman, Salie, and the
oscillatory integrals built from them) take values in the ring of cyclotomic
integers Z[zeta_q] scaled by half-integer powers of q.  ``Cyclo`` stores such
a value exactly as q**(-half/2) * z with z in Z[zeta_q], so equality of two
sums is decidable with no floating point involved.  A complex embedding is
provided only for magnitude checks.

Only prime q is supported; extension data enters elsewhere through residue
rings of F_q[t].
"""

from __future__ import annotations

import cmath
from fractions import Fraction
from typing import Iterable


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    d = 2
    while d * d <= n:
        if n % d == 0:
            return False
        d += 1
    return True


class Fq:
    """The prime field F_q, with elements represented as ints in [0, q)."""

    def __init__(self, q: int):
        if not is_prime(q):
            raise ValueError(f"q must be prime, got {q}")
        if q == 2:
            raise ValueError("even characteristic is not supported")
        self.q = q

    def __repr__(self) -> str:
        return f"Fq({self.q})"

    def __eq__(self, other) -> bool:
        return isinstance(other, Fq) and other.q == self.q

    def __hash__(self) -> int:
        return hash(("Fq", self.q))

    def elements(self) -> range:
        return range(self.q)

    def units(self) -> range:
        return range(1, self.q)

    def add(self, a: int, b: int) -> int:
        return (a + b) % self.q

    def sub(self, a: int, b: int) -> int:
        return (a - b) % self.q

    def neg(self, a: int) -> int:
        return (-a) % self.q

    def mul(self, a: int, b: int) -> int:
        return (a * b) % self.q

    def inv(self, a: int) -> int:
        if a % self.q == 0:
            raise ZeroDivisionError("inverse of 0 in F_q")
        return pow(a, self.q - 2, self.q)

    def div(self, a: int, b: int) -> int:
        return self.mul(a, self.inv(b))

    def chi(self, a: int) -> int:
        """Quadratic character: 1 on nonzero squares, -1 on non-squares, 0 at 0."""
        a %= self.q
        if a == 0:
            return 0
        e = pow(a, (self.q - 1) // 2, self.q)
        return 1 if e == 1 else -1

    def is_square(self, a: int) -> bool:
        return self.chi(a) >= 0

    def sqrt(self, a: int) -> int:
        """A square root of a, the smaller of the two representatives.

        Raises ValueError when a is not a square.
        """
        a %= self.q
        if a == 0:
            return 0
        if self.chi(a) != 1:
            raise ValueError(f"{a} is not a square mod {self.q}")
        # q is small throughout; a scan is simplest and deterministic.
        for x in range(1, self.q):
            if (x * x) % self.q == a:
                return min(x, self.q - x)
        raise AssertionError("unreachable")

    def non_square(self) -> int:
        """The smallest quadratic non-residue."""
        for x in range(2, self.q):
            if self.chi(x) == -1:
                return x
        raise AssertionError("unreachable for q > 2")


def _strip(q: int, half: int, z: tuple[int, ...]) -> tuple[int, tuple[int, ...]]:
    while any(z) and all(c % q == 0 for c in z):
        z = tuple(c // q for c in z)
        half -= 2
    if not any(z):
        return 0, (0,) * (q - 1)
    return half, z


_TAU_CACHE: dict[int, tuple[int, ...]] = {}


def _tau_coeffs(q: int) -> tuple[int, ...]:
    """Coefficients of the Gauss sum sum_x e_q(x^2) on the basis zeta..zeta^(q-1)."""
    if q not in _TAU_CACHE:
        counts = [0] * q
        for x in range(q):
            counts[(x * x) % q] += 1
        _TAU_CACHE[q] = tuple(counts[i + 1] - counts[0] for i in range(q - 1))
    return _TAU_CACHE[q]


class Cyclo:
    """An exact value q**(-half/2) * z with z in Z[zeta_q], q an odd prime.

    z is stored on the integral basis zeta, zeta^2, ..., zeta^(q-1); the
    relation 1 + zeta + ... + zeta^(q-1) = 0 eliminates the zeta^0
    coordinate.  Canonical form strips common factors of q from z (each strip
    lowers ``half`` by 2) and, when q = 1 mod 4, rewrites odd ``half`` using
    sqrt(q) = sum_x e_q(x^2) so that ``half`` is always even.  For
    q = 3 mod 4 the parity of ``half`` is intrinsic (sqrt(q) is not in
    Q(zeta_q)) and values of mixed parity can only be added when one is zero.
    """

    __slots__ = ("q", "half", "z")

    def __init__(self, q: int, half: int, z: Iterable[int]):
        z = tuple(z)
        if len(z) != q - 1:
            raise ValueError("coefficient vector must have length q-1")
        if q % 4 == 1 and half % 2 and any(z):
            # sqrt(q) = tau exactly for q = 1 mod 4; fold it into z.
            z = _mul_z(q, z, _tau_coeffs(q))
            half += 1
        half, z = _strip(q, half, z)
        self.q = q
        self.half = half
        self.z = z

    # -- constructors ------------------------------------------------------

    @classmethod
    def zero(cls, q: int) -> "Cyclo":
        return cls(q, 0, (0,) * (q - 1))

    @classmethod
    def from_int(cls, q: int, n: int) -> "Cyclo":
        # n * 1 = n * (-(zeta + ... + zeta^(q-1)))
        return cls(q, 0, (-n,) * (q - 1))

    @classmethod
    def one(cls, q: int) -> "Cyclo":
        return cls.from_int(q, 1)

    @classmethod
    def from_counts(cls, q: int, counts, half: int = 0) -> "Cyclo":
        """Value sum_j counts[j] * zeta^j (counts indexed by 0..q-1)."""
        counts = list(counts)
        if len(counts) != q:
            raise ValueError("counts must have length q")
        return cls(q, half, tuple(counts[i + 1] - counts[0] for i in range(q - 1)))

    @classmethod
    def zeta_pow(cls, q: int, j: int) -> "Cyclo":
        counts = [0] * q
        counts[j % q] += 1
        return cls.from_counts(q, counts)

    # -- predicates --------------------------------------------------------

    def is_zero(self) -> bool:
        return not any(self.z)

    def __bool__(self) -> bool:
        return not self.is_zero()

    def __eq__(self, other) -> bool:
        if isinstance(other, int):
            other = Cyclo.from_int(self.q, other)
        if not isinstance(other, Cyclo):
            return NotImplemented
        return (self.q, self.half, self.z) == (other.q, other.half, other.z)

    def __hash__(self) -> int:
        return hash((self.q, self.half, self.z))

    # -- arithmetic --------------------------------------------------------

    def _check(self, other: "Cyclo"):
        if self.q != other.q:
            raise ValueError("mixed cyclotomic orders")

    def __add__(self, other: "Cyclo") -> "Cyclo":
        self._check(other)
        if self.is_zero():
            return other
        if other.is_zero():
            return self
        if (self.half - other.half) % 2:
            # Only reachable for q = 3 mod 4, where the parity classes of
            # half only intersect at zero.
            raise ValueError("cannot add values of mixed sqrt(q) parity")
        h = max(self.half, other.half)
        za = _scale_z(self.q, self.z, (h - self.half) // 2)
        zb = _scale_z(self.q, other.z, (h - other.half) // 2)
        return Cyclo(self.q, h, tuple(a + b for a, b in zip(za, zb)))

    def __neg__(self) -> "Cyclo":
        return Cyclo(self.q, self.half, tuple(-c for c in self.z))

    def __sub__(self, other: "Cyclo") -> "Cyclo":
        return self + (-other)

    def __mul__(self, other) -> "Cyclo":
        if isinstance(other, int):
            if other == 0:
                return Cyclo.zero(self.q)
            return Cyclo(self.q, self.half, tuple(other * c for c in self.z))
        self._check(other)
        return Cyclo(self.q, self.half + other.half, _mul_z(self.q, self.z, other.z))

    __rmul__ = __mul__

    def mul_q_pow(self, k2: int) -> "Cyclo":
        """Multiply by q**(k2/2) (k2 in half-integer steps of the exponent)."""
        if self.is_zero():
            return self
        return Cyclo(self.q, self.half - k2, self.z)

    def conj(self) -> "Cyclo":
        """Complex conjugation, zeta -> zeta^(-1)."""
        q = self.q
        out = [0] * (q - 1)
        for i, c in enumerate(self.z):
            out[q - (i + 1) - 1] = c
        return Cyclo(q, self.half, tuple(out))

    def norm_sq(self) -> "Cyclo":
        return self * self.conj()

    # -- conversions -------------------------------------------------------

    def to_fraction(self) -> Fraction:
        """The value as an exact rational; raises when it is not rational."""
        first = self.z[0]
        if any(c != first for c in self.z):
            raise ValueError("value is not rational")
        if first and self.half % 2:
            raise ValueError("value is not rational")
        num = -first
        if self.half >= 0:
            return Fraction(num, self.q ** (self.half // 2))
        return Fraction(num * self.q ** (-self.half // 2), 1)

    def embed(self) -> complex:
        """Numerical value with zeta = exp(2*pi*i/q).  For magnitude checks only."""
        q = self.q
        total = 0j
        for i, c in enumerate(self.z):
            if c:
                total += c * cmath.exp(2j * cmath.pi * (i + 1) / q)
        return total * q ** (-self.half / 2)

    def abs_embed(self) -> float:
        return abs(self.embed())

    def __repr__(self) -> str:
        if self.is_zero():
            return f"Cyclo({self.q}, 0)"
        return f"Cyclo(q={self.q}, half={self.half}, z={self.z})"


def _scale_z(q: int, z: tuple[int, ...], k: int) -> tuple[int, ...]:
    if k == 0:
        return z
    m = q**k
    return tuple(c * m for c in z)


def _mul_z(q: int, za: tuple[int, ...], zb: tuple[int, ...]) -> tuple[int, ...]:
    """Product in Z[zeta_q] on the zeta..zeta^(q-1) basis."""
    full = [0] * q  # coefficients on zeta^0..zeta^(q-1)
    for i, a in enumerate(za):
        if not a:
            continue
        for j, b in enumerate(zb):
            if b:
                full[(i + j + 2) % q] += a * b
    c0 = full[0]
    return tuple(full[i + 1] - c0 for i in range(q - 1))


# -- characters and classical sums ----------------------------------------


def eq_char(q: int, a: int) -> Cyclo:
    """The additive character e_q(a) = zeta_q^a of F_q."""
    return Cyclo.zeta_pow(q, a)


def gauss_sum(q: int, a: int) -> Cyclo:
    """G(a) = sum_{x in F_q} e_q(a x^2); |G(a)|^2 = q for a != 0."""
    counts = [0] * q
    for x in range(q):
        counts[(a * x * x) % q] += 1
    return Cyclo.from_counts(q, counts)


def tau_psi(q: int) -> Cyclo:
    """The quadratic Gauss sum sum_{a != 0} chi(a) e_q(a); equals G(1)."""
    F = Fq(q)
    out = Cyclo.zero(q)
    for a in range(1, q):
        out = out + F.chi(a) * eq_char(q, a)
    return out


def kloosterman(q: int, alpha: int) -> Cyclo:
    """Kl(alpha) = sum_{x != 0} e_q(x + alpha/x)."""
    F = Fq(q)
    counts = [0] * q
    for x in range(1, q):
        counts[(x + alpha * F.inv(x)) % q] += 1
    return Cyclo.from_counts(q, counts)


def salie(q: int, alpha: int) -> Cyclo:
    """Sa(alpha) = sum_{x != 0} chi(x) e_q(x + alpha/x)."""
    F = Fq(q)
    out = Cyclo.zero(q)
    for x in range(1, q):
        out = out + F.chi(x) * eq_char(q, (x + alpha * F.inv(x)) % q)
    return out
