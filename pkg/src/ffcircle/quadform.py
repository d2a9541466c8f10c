"""Quadratic forms over F_q[t] in d variables.

A form is stored by its symmetric Gram matrix A, F(x) = x^T A x, with
polynomial entries (odd q, so cross coefficients halve exactly).  The
module provides evaluation over any coefficient ring reachable from Poly
by coercion (Poly, Laurent, RatFunc), the discriminant det(2A), the dual
form c -> c^T (4A)^{-1} c, congruence diagonalization modulo an odd
modulus coprime to the discriminant, diagonalization over the valuation
ring at infinity, and the cones of regular directions on which
|F(x)| >= q^{-s} |x|^2.
"""

from __future__ import annotations

import itertools
from typing import Sequence

from .basefield import Fq
from .laurent import Laurent, PrecisionError
from .polyring import (
    Poly,
    RatFunc,
    coprime,
    crt,
    factor,
    inv_mod,
    parse_poly,
    poly_gcd,
)

Mat = list[list[Poly]]


def _mat_id(q: int, d: int) -> Mat:
    return [[Poly.one(q) if i == j else Poly.zero(q) for j in range(d)] for i in range(d)]


def mat_mul(A: Mat, B: Mat) -> Mat:
    d, m, n = len(A), len(B), len(B[0])
    out = []
    for i in range(d):
        row = []
        for j in range(n):
            acc = A[i][0] * B[0][j]
            for k in range(1, m):
                acc = acc + A[i][k] * B[k][j]
            row.append(acc)
        out.append(row)
    return out


def mat_transpose(A: Mat) -> Mat:
    return [list(col) for col in zip(*A)]


def mat_det(A: Mat) -> Poly:
    """Cofactor expansion; fine for the small d used here."""
    d = len(A)
    if d == 1:
        return A[0][0]
    q = A[0][0].q
    acc = Poly.zero(q)
    sign = 1
    for j in range(d):
        if not A[0][j].is_zero():
            minor = [[A[i][k] for k in range(d) if k != j] for i in range(1, d)]
            term = A[0][j] * mat_det(minor)
            acc = acc + (term if sign > 0 else -term)
        sign = -sign
    return acc


def mat_adjugate(A: Mat) -> Mat:
    d = len(A)
    if d == 1:
        return [[Poly.one(A[0][0].q)]]
    out = [[None] * d for _ in range(d)]
    for i in range(d):
        for j in range(d):
            minor = [[A[r][c] for c in range(d) if c != j] for r in range(d) if r != i]
            cof = mat_det(minor)
            out[j][i] = cof if (i + j) % 2 == 0 else -cof
    return out


class QuadForm:
    """F(x) = x^T A x with A symmetric over F_q[t]."""

    def __init__(self, gram: Sequence[Sequence[Poly]]):
        d = len(gram)
        q = gram[0][0].q
        for i in range(d):
            if len(gram[i]) != d:
                raise ValueError("gram matrix must be square")
            for j in range(d):
                if gram[i][j] != gram[j][i]:
                    raise ValueError("gram matrix must be symmetric")
        self.q = q
        self.d = d
        self.gram: Mat = [list(row) for row in gram]

    @classmethod
    def diagonal(cls, q: int, entries: Sequence[Poly | int | str]) -> "QuadForm":
        es = [_as_poly(q, e) for e in entries]
        d = len(es)
        g = [[es[i] if i == j else Poly.zero(q) for j in range(d)] for i in range(d)]
        return cls(g)

    @classmethod
    def from_coeffs(cls, q: int, d: int, coeffs: dict) -> "QuadForm":
        """Build from {(i, j): c} with F = sum c_ij x_i x_j, i <= j."""
        F = Fq(q)
        half = F.inv(2)
        g = [[Poly.zero(q) for _ in range(d)] for _ in range(d)]
        for (i, j), c in coeffs.items():
            c = _as_poly(q, c)
            if i == j:
                g[i][i] = g[i][i] + c
            else:
                h = c * half
                g[i][j] = g[i][j] + h
                g[j][i] = g[j][i] + h
        return cls(g)

    def __repr__(self) -> str:
        rows = "; ".join(",".join(str(e) for e in row) for row in self.gram)
        return f"QuadForm[{rows}]"

    def __eq__(self, other) -> bool:
        return isinstance(other, QuadForm) and self.gram == other.gram

    # -- evaluation ----------------------------------------------------------

    def evaluate(self, x: Sequence):
        """x^T A x for a vector over Poly, Laurent, or RatFunc."""
        if len(x) != self.d:
            raise ValueError("wrong vector length")
        acc = None
        for i in range(self.d):
            for j in range(self.d):
                g = self.gram[i][j]
                if g.is_zero():
                    continue
                term = x[i] * x[j] * g
                acc = term if acc is None else acc + term
        if acc is None:
            acc = Poly.zero(self.q) * x[0] * x[0]  # typed zero
        return acc

    def bilinear(self, x: Sequence, y: Sequence):
        """B(x, y) = 2 x^T A y, so that B(x, x) = 2 F(x)."""
        acc = None
        for i in range(self.d):
            for j in range(self.d):
                g = self.gram[i][j]
                if g.is_zero():
                    continue
                term = x[i] * y[j] * (2 * g)
                acc = term if acc is None else acc + term
        if acc is None:
            acc = Poly.zero(self.q) * x[0] * y[0]
        return acc

    def gradient(self, x: Sequence) -> list:
        """2 A x."""
        out = []
        for i in range(self.d):
            acc = None
            for j in range(self.d):
                g = self.gram[i][j]
                if g.is_zero():
                    continue
                term = x[j] * (2 * g)
                acc = term if acc is None else acc + term
            out.append(acc if acc is not None else Poly.zero(self.q) * x[0])
        return out

    # -- invariants ------------------------------------------------------------

    def disc(self) -> Poly:
        """det(2A)."""
        two_a = [[2 * e for e in row] for row in self.gram]
        return mat_det(two_a)

    def max_deg_entry(self) -> int:
        m = 0
        for row in self.gram:
            for e in row:
                if not e.is_zero():
                    m = max(m, int(e.deg))
        return m

    def dual_gram(self) -> list[list[RatFunc]]:
        """(4A)^{-1} as rational functions."""
        four_a = [[4 * e for e in row] for row in self.gram]
        det = mat_det(four_a)
        if det.is_zero():
            raise ValueError("degenerate form has no dual")
        adj = mat_adjugate(four_a)
        return [[RatFunc(adj[i][j], det) for j in range(self.d)] for i in range(self.d)]

    def dual_eval(self, c: Sequence[Poly]) -> RatFunc:
        """The dual form c^T (4A)^{-1} c."""
        dg = self.dual_gram()
        acc = RatFunc.from_poly(Poly.zero(self.q))
        for i in range(self.d):
            for j in range(self.d):
                if not dg[i][j].is_zero():
                    acc = acc + dg[i][j] * (c[i] * c[j])
        return acc

    # -- diagonalization ---------------------------------------------------------

    def diagonalize_mod(self, m: Poly) -> tuple[Mat, list[Poly]]:
        """U, D with U^T A U = diag(D) mod m and det U invertible mod m.

        Requires gcd(m, disc) = 1 and m odd (automatic here).  Works prime
        power by prime power, then recombines.
        """
        if not coprime(m, self.disc()):
            raise ValueError("modulus shares a factor with the discriminant")
        pieces = []
        moduli = []
        for p, e in factor(m).items():
            pe = p**e
            pieces.append(self._diag_prime_power(p, pe))
            moduli.append(pe)
        d = self.d
        U = [[crt([(pieces[k][0][i][j], moduli[k]) for k in range(len(moduli))])
              for j in range(d)] for i in range(d)]
        D = [crt([(pieces[k][1][i], moduli[k]) for k in range(len(moduli))])
             for i in range(d)]
        return U, D

    def _diag_prime_power(self, p: Poly, pe: Poly) -> tuple[Mat, list[Poly]]:
        q, d = self.q, self.d
        M = [[self.gram[i][j] % pe for j in range(d)] for i in range(d)]
        U = _mat_id(q, d)

        def apply_col(src: int, dst: int, c: Poly):
            # x_dst picks up c * x_src: col_dst += c * col_src on M and U
            for i in range(d):
                M[i][dst] = (M[i][dst] + c * M[i][src]) % pe
            for i in range(d):
                M[dst][i] = (M[dst][i] + c * M[src][i]) % pe
            for i in range(d):
                U[i][dst] = (U[i][dst] + c * U[i][src]) % pe

        def swap(i: int, j: int):
            for r in range(d):
                M[r][i], M[r][j] = M[r][j], M[r][i]
            M[i], M[j] = M[j], M[i]
            for r in range(d):
                U[r][i], U[r][j] = U[r][j], U[r][i]

        one = Poly.one(q)
        for k in range(d):
            # deterministic pivot: first unit diagonal entry, else first unit
            # off-diagonal entry (row-major), folded onto the diagonal
            piv = None
            for i in range(k, d):
                if coprime(M[i][i], p):
                    piv = i
                    break
            if piv is None:
                for i in range(k, d):
                    for j in range(i + 1, d):
                        if coprime(M[i][j], p):
                            apply_col(j, i, one)
                            piv = i
                            break
                    if piv is not None:
                        break
            if piv is None:
                raise ValueError("unexpected degeneracy mod prime power")
            if piv != k:
                swap(piv, k)
            inv_p = inv_mod(M[k][k], pe)
            for i in range(k + 1, d):
                if not M[k][i].is_zero():
                    apply_col(k, i, (-M[k][i] * inv_p) % pe)
        return U, [M[i][i] for i in range(d)]

    def diagonalize_oinf(self, H: list[list[Laurent]] | None = None
                         ) -> tuple[list[list[Laurent]], list[Laurent]]:
        """Congruence-diagonalize over the valuation ring at infinity.

        Defaults to this form's own Gram matrix.  Pivots on an entry of
        maximal absolute value, so the transform and its inverse both have
        sup-norm <= 1 (it lies in GL_d(O_inf)) and norms are preserved.
        """
        q, d = self.q, self.d
        if H is None:
            H = [[Laurent.from_poly(e) for e in row] for row in self.gram]
        else:
            H = [list(row) for row in H]
        U = [[Laurent.one(q) if i == j else Laurent.zero(q) for j in range(d)]
             for i in range(d)]

        def colop(src: int, dst: int, c: Laurent):
            for i in range(d):
                H[i][dst] = H[i][dst] + c * H[i][src]
            for i in range(d):
                H[dst][i] = H[dst][i] + c * H[src][i]
            for i in range(d):
                U[i][dst] = U[i][dst] + c * U[i][src]

        def swap(i: int, j: int):
            for r in range(d):
                H[r][i], H[r][j] = H[r][j], H[r][i]
            H[i], H[j] = H[j], H[i]
            for r in range(d):
                U[r][i], U[r][j] = U[r][j], U[r][i]

        for k in range(d):
            best, bi, bj = None, None, None
            for i in range(k, d):
                for j in range(k, d):
                    e = H[i][j]
                    if e.known_zero():
                        continue
                    dd = int(e.deg)
                    # prefer diagonal pivots at equal magnitude
                    key = (dd, i == j, -(i + j))
                    if best is None or key > best:
                        best, bi, bj = key, i, j
            if best is None:
                raise ValueError("degenerate block at infinity")
            if bi != bj:
                colop(bj, bi, Laurent.one(q))  # diagonal now carries the max
            if bi != k:
                swap(bi, k)
            pk = H[k][k]
            try:
                pinv = pk.reciprocal()
            except PrecisionError:
                pinv = pk.reciprocal(floor=-int(pk.deg) - _OINF_DIGITS)
            for i in range(k + 1, d):
                if not H[k][i].known_zero():
                    colop(k, i, -(H[k][i] * pinv))
        return U, [H[i][i] for i in range(d)]


_OINF_DIGITS = 24


def _as_poly(q: int, e) -> Poly:
    if isinstance(e, Poly):
        return e
    if isinstance(e, int):
        return Poly.const(q, e)
    if isinstance(e, str):
        return parse_poly(q, e)
    raise TypeError(f"cannot make a polynomial from {e!r}")


# -- cones of regular directions ----------------------------------------------


class Cone:
    """Directions along which the form does not degenerate.

    ``slack`` kind: x belongs when deg F(x) >= 2 max_i deg x_i - s.
    ``dominant`` kind: additionally the first coordinate strictly dominates.
    The attached exponents omega, omega_prime feed the weight construction;
    by default omega = s + maxdeg(A) + 1 and omega_prime = s.
    """

    def __init__(self, form: QuadForm, s: int, kind: str = "slack",
                 omega: int | None = None, omega_prime: int | None = None):
        if kind not in ("slack", "dominant"):
            raise ValueError("kind must be 'slack' or 'dominant'")
        self.form = form
        self.s = s
        self.kind = kind
        self.omega = omega if omega is not None else s + form.max_deg_entry() + 1
        self.omega_prime = omega_prime if omega_prime is not None else s

    def contains(self, x: Sequence[Laurent]) -> bool:
        degs = []
        for xi in x:
            if xi.known_zero() and xi.exact:
                degs.append(None)
            else:
                degs.append(int(xi.deg))  # PrecisionError for untracked magnitude
        if all(d is None for d in degs):
            return False
        top = max(d for d in degs if d is not None)
        if self.kind == "dominant":
            if degs[0] is None or degs[0] != top:
                return False
            if any(d is not None and d >= top for d in degs[1:]):
                return False
        val = self.form.evaluate(x)
        try:
            dv = val.deg
        except PrecisionError:
            raise
        if dv == float("-inf"):
            return False
        return int(dv) >= 2 * top - self.s

    def ball_in_cone(self, center: Sequence[Laurent], rho: int) -> bool:
        """Sufficient criterion for {x : |x - center| <= q**rho} to lie in
        the cone: the value at the center dominates every perturbation term.
        """
        n = max(int(c.deg) for c in center if not (c.exact and c.known_zero()))
        if rho >= n:
            return False
        val = self.form.evaluate(center)
        if val.known_zero():
            return False
        dv = int(val.deg)
        eta = self.form.max_deg_entry()
        if dv < 2 * n - self.s:
            return False
        cross = n + eta + rho
        quad = 2 * rho + eta
        if self.kind == "dominant":
            # the perturbation must not disturb coordinate dominance
            for i, c in enumerate(center):
                di = None if (c.exact and c.known_zero()) else int(c.deg)
                if i == 0 and (di is None or rho >= di):
                    return False
                if i > 0 and di is not None and di >= int(center[0].deg):
                    return False
        return dv > max(cross, quad)

    def __repr__(self) -> str:
        return (f"Cone(kind={self.kind}, s={self.s}, omega={self.omega}, "
                f"omega'={self.omega_prime})")


def cone_coverage(form: QuadForm, s: int, rng, samples: int = 300,
                  top: int = 2) -> float:
    """Fraction of sampled integral directions lying in the slack-s cone."""
    q, d = form.q, form.d
    cone = Cone(form, s)
    hit = 0
    for _ in range(samples):
        x = []
        for _ in range(d):
            coeffs = [rng.randrange(q) for _ in range(top + 1)]
            x.append(Laurent(q, 0, coeffs, exact=True))
        if all(xi.known_zero() for xi in x):
            continue
        if cone.contains(x):
            hit += 1
    return hit / samples


def class_witness(form: QuadForm, f: Poly, search_deg: int = 1
                  ) -> tuple[list[Poly], Poly]:
    """A vector w with F(w) in the same square class of K_inf as f, meaning
    deg F(w) = deg f mod 2 and the leading coefficients differ by a square.

    Searches constant vectors first, then low-degree ones.
    """
    q, d = form.q, form.d
    F = Fq(q)
    want_chi = F.chi(f.lc())
    for bound in range(search_deg + 1):
        cands = list(itertools.product(range(q ** (bound + 1)), repeat=d))
        for enc in cands:
            w = [_decode_poly(q, e, bound) for e in enc]
            if all(wi.is_zero() for wi in w):
                continue
            val = form.evaluate(w)
            if val.is_zero():
                continue
            if int(val.deg) % 2 == int(f.deg) % 2 and F.chi(val.lc()) == want_chi:
                return w, val
    raise ValueError("no witness in the searched box")


def _decode_poly(q: int, enc: int, deg_bound: int) -> Poly:
    cs = []
    for _ in range(deg_bound + 1):
        cs.append(enc % q)
        enc //= q
    return Poly(q, cs)


def witness_point(form: QuadForm, f: Poly, floor: int,
                  search_deg: int = 1) -> list[Laurent]:
    """A point x0 over K_inf with F(x0) = f to the requested precision:
    scale a class witness by sqrt(f / F(w))."""
    w, val = class_witness(form, f, search_deg)
    ratio = Laurent.from_ratio(f, val, floor=floor)
    c = ratio.sqrt(floor=floor) if ratio.exact else ratio.sqrt()
    return [c * wi for wi in w]
