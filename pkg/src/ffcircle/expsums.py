"""Complete exponential sums for the congruence-constrained counting problem.

Counting solutions of F(x) = f with x = g*b + lambda turns, through the delta
kernel, into sums S_{g,r}(c) over residue vectors b mod g*r.  Every sum here
has at least two evaluation routes kept deliberately separate:

  * a literal enumeration following the defining triple sum (small moduli);
  * the ell-collapsed form, a constrained sum over b weighted by |g|, which
    is the default;
  * a separable per-coordinate route available for diagonal Gram matrices;
  * closed forms (Gauss sum times Kloosterman or Salie factors) where the
    modulus is coprime to the discriminant.

The heavy lifting is a small engine that walks the b-space in chunks and
counts psi-digit values with numpy; everything it returns is an exact count,
so the cyclotomic results carry no rounding.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .basefield import Cyclo
from .laurent import Laurent, psi_ratio
from .polyring import (
    Poly,
    coprime,
    divisor_count,
    enumerate_polys,
    factor,
    inv_mod,
    monic_of_degree,
    poly_gcd,
)
from .quadform import QuadForm, mat_det

MAX_RESIDUE_SPACE = 200_000_000


@dataclass(frozen=True)
class Instance:
    """One counting problem: F(x) = f over x congruent to lambda mod g.

    Validation enforces what the identities below need: f and the
    discriminant invertible mod g, g dividing f - F(lambda) so the auxiliary
    polynomial k = (f - F(lambda)) / g is integral, each lambda_i reduced
    mod g, and at least one lambda_i a unit mod g.
    """

    form: QuadForm
    f: Poly
    g: Poly
    lam: tuple[Poly, ...]

    def __post_init__(self):
        object.__setattr__(self, "lam", tuple(self.lam))
        q = self.form.q
        if self.f.q != q or self.g.q != q or any(l.q != q for l in self.lam):
            raise ValueError("mixed base fields")
        if len(self.lam) != self.form.d:
            raise ValueError("lambda length must match the form dimension")
        if self.g.is_zero():
            raise ValueError("g must be nonzero")
        dg = int(self.g.deg)
        for l in self.lam:
            if l.deg >= dg:
                raise ValueError("lambda must be reduced mod g")
        if not coprime(self.f * self.form.disc(), self.g):
            raise ValueError("f times the discriminant must be a unit mod g")
        rem = (self.f - self.form.evaluate(self.lam)) % self.g
        if not rem.is_zero():
            raise ValueError("g must divide f - F(lambda)")
        if not any(coprime(l, self.g) for l in self.lam):
            raise ValueError("some coordinate of lambda must be a unit mod g")

    @property
    def q(self) -> int:
        return self.form.q

    @property
    def d(self) -> int:
        return self.form.d

    @property
    def k(self) -> Poly:
        return (self.f - self.form.evaluate(self.lam)) // self.g

    def lam_gram(self) -> list[Poly]:
        """The row vector lambda^T A (A the Gram matrix of the form)."""
        A = self.form.gram
        return [
            sum((self.lam[i] * A[i][j] for i in range(self.d)), Poly.zero(self.q))
            for j in range(self.d)
        ]

    def zero_c(self) -> list[Poly]:
        return [Poly.zero(self.q)] * self.d


def _cvec(inst: Instance, c) -> list[Poly]:
    if c is None:
        return inst.zero_c()
    c = list(c)
    if len(c) != inst.d:
        raise ValueError("c must have one entry per variable")
    return c


def _units_mod(r: Poly) -> list[Poly]:
    return [a for a in enumerate_polys(r.q, int(r.deg) - 1) if coprime(a, r)]


def _psi_digit(num: Poly, den: Poly) -> int:
    """The t^-1 digit of num/den: the residue psi reads off this ratio."""
    return Laurent.from_ratio(num, den, floor=-1)[-1]


# -- literal route ----------------------------------------------------------------


def s_al(inst: Instance, r: Poly, a: Poly, ell: Poly, c=None) -> Cyclo:
    """One inner sum over b in (O/gr)^d, straight from the definition.

    Enumerates every b; meant for small moduli and as the oracle against
    which the vectorized routes are checked.
    """
    q = inst.q
    c = _cvec(inst, c)
    gr = inst.g * r
    dgr = int(gr.deg)
    if q ** (inst.d * dgr) > 2_000_000:
        raise ValueError("modulus too large for the literal route")
    w = a + r * ell
    lamA = inst.lam_gram()
    k = inst.k
    total = Cyclo.zero(q)
    for b in itertools.product(enumerate_polys(q, dgr - 1), repeat=inst.d):
        lin = sum((lamA[j] * b[j] for j in range(inst.d)), Poly.zero(q))
        num = w * (2 * lin - k) + a * inst.g * inst.form.evaluate(b)
        num = num - sum((c[j] * b[j] for j in range(inst.d)), Poly.zero(q))
        total = total + psi_ratio(num, gr)
    return total


# -- digit-counting engine ----------------------------------------------------------


def _engine_span(args):
    (q, d, D, lo, hi, chunk, BW, WA, WL, S0, consW, cons0) = args
    nq = WA.shape[0]
    LN = WA.shape[1]
    out = np.zeros((nq, q), dtype=np.int64)
    pos = lo
    while pos < hi:
        n = min(chunk, hi - pos)
        idx = np.arange(pos, pos + n, dtype=np.int64)
        digits = np.empty((n, d * D), dtype=np.int64)
        for j in range(d * D):
            digits[:, j] = (idx // q**j) % q
        # coefficient rows of b^T (BW) b by explicit convolution; the digit
        # weights below are linear, so reducing mod q early is safe
        Nco = np.zeros((n, LN), dtype=np.int64)
        for i in range(d):
            for j2 in range(d):
                nz = np.nonzero(BW[i, j2])[0]
                if nz.size == 0:
                    continue
                for u in range(D):
                    for v in range(D):
                        piv = digits[:, i * D + u] * digits[:, j2 * D + v]
                        for s in nz:
                            Nco[:, int(s) + u + v] += int(BW[i, j2, s]) * piv
        Nco %= q
        if consW is not None:
            res = (digits @ consW + cons0) % q
            keep = ~res.any(axis=1)
        else:
            keep = None
        for jq in range(nq):
            dig = (Nco @ WA[jq] + digits @ WL[jq] + S0[jq]) % q
            if keep is not None:
                dig = dig[keep]
            out[jq] += np.bincount(dig, minlength=q)
        pos += n
    return out


def quad_digit_counts(q: int, m: Poly, base_gram, queries, constraint=None,
                      chunk_rows: int = 1 << 17, workers: int = 1) -> np.ndarray:
    """Count psi digits of (mult * N(b) + <lin, b> + const) / m over b in
    (O/m)^d, where N(b) = b^T (base_gram) b.

    queries: iterable of (mult, lin, const) with mult, const Poly and lin a
    d-vector of Poly.  constraint, if given, is (modulus, lin, const) and
    keeps only b with modulus | <lin, b> + const.  Returns an int array of
    shape (len(queries), q): exact counts of each digit value per query.
    """
    queries = list(queries)
    d = len(base_gram)
    D = int(m.deg) if not m.is_one() else 0
    total = q ** (d * D)
    if total > MAX_RESIDUE_SPACE:
        raise ValueError("residue space too large to enumerate")
    LA = max(max(len(e.coeffs) for e in row) for row in base_gram)
    LA = max(LA, 1)
    LN = LA + max(0, 2 * (D - 1))
    BW = np.zeros((d, d, LA), dtype=np.int64)
    for i in range(d):
        for j in range(d):
            for s, cf in enumerate(base_gram[i][j].coeffs):
                BW[i, j, s] = cf
    nq = len(queries)
    WA = np.zeros((nq, LN), dtype=np.int64)
    WL = np.zeros((nq, d * D), dtype=np.int64)
    S0 = np.zeros(nq, dtype=np.int64)
    for jq, (mult, lin, const) in enumerate(queries):
        for s in range(LN):
            WA[jq, s] = _psi_digit(mult.shift(s), m)
        for i in range(d):
            for u in range(D):
                WL[jq, i * D + u] = _psi_digit(lin[i].shift(u), m)
        S0[jq] = _psi_digit(const, m)
    consW = cons0 = None
    if constraint is not None:
        cmod, clin, cconst = constraint
        Dg = int(cmod.deg)
        if Dg > 0:
            consW = np.zeros((d * D, Dg), dtype=np.int64)
            for i in range(d):
                for u in range(D):
                    red = (clin[i].shift(u)) % cmod
                    for e, cf in enumerate(red.coeffs):
                        consW[i * D + u, e] = cf
            cons0 = np.zeros(Dg, dtype=np.int64)
            for e, cf in enumerate((cconst % cmod).coeffs):
                cons0[e] = cf
    if workers > 1 and total > chunk_rows:
        span = -(-total // workers)
        spans = [(q, d, D, w * span, min((w + 1) * span, total), chunk_rows,
                  BW, WA, WL, S0, consW, cons0) for w in range(workers)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_engine_span, spans))
        return sum(parts[1:], parts[0])
    return _engine_span((q, d, D, 0, total, chunk_rows, BW, WA, WL, S0,
                         consW, cons0))


def _counts_to_cyclo(q: int, counts: np.ndarray, scale: int = 1) -> Cyclo:
    return Cyclo.from_counts(q, [int(v) * scale for v in counts])


# -- the full sum S_{g,r}(c) ---------------------------------------------------------


def s_full(inst: Instance, r: Poly, c=None, route: str = "auto",
           workers: int = 1) -> Cyclo:
    """The complete sum over ell, units a mod r, and b mod gr.

    route: "reduced" collapses the ell sum into the congruence
    g | 2 lambda^T A b - k with weight |g| (the default); "triple" follows
    the definition; "separable" factors the b-sum per coordinate (diagonal
    Gram only); "literal" sums s_al terms in pure Python.
    """
    q = inst.q
    c = _cvec(inst, c)
    if not r.is_monic():
        raise ValueError("r must be monic")
    if route == "auto":
        route = "separable" if _is_diagonal(inst.form) else "reduced"
    if route == "literal":
        total = Cyclo.zero(q)
        for ell in enumerate_polys(q, int(inst.g.deg) - 1):
            for a in _units_mod(r):
                total = total + s_al(inst, r, a, ell, c)
        return total
    if route == "separable":
        if not _is_diagonal(inst.form):
            raise ValueError("separable route needs a diagonal Gram matrix")
        return _s_separable(inst, r, c)
    g, k = inst.g, inst.k
    lamA = inst.lam_gram()
    units = _units_mod(r)
    if route == "triple":
        queries = []
        for ell in enumerate_polys(q, int(g.deg) - 1):
            for a in units:
                w = a + r * ell
                queries.append((a * g, [2 * w * lamA[j] - c[j]
                                        for j in range(inst.d)], -(w * k)))
        counts = quad_digit_counts(q, g * r, inst.form.gram, queries,
                                   workers=workers)
        return _counts_to_cyclo(q, counts.sum(axis=0))
    if route != "reduced":
        raise ValueError(f"unknown route {route!r}")
    queries = [(a * g, [2 * a * lamA[j] - c[j] for j in range(inst.d)], -(a * k))
               for a in units]
    cons = None
    if int(g.deg) > 0:
        cons = (g, [2 * lamA[j] for j in range(inst.d)], -k)
    counts = quad_digit_counts(q, g * r, inst.form.gram, queries,
                               constraint=cons, workers=workers)
    return _counts_to_cyclo(q, counts.sum(axis=0), scale=q ** int(g.deg))


def _is_diagonal(form: QuadForm) -> bool:
    return all(form.gram[i][j].is_zero()
               for i in range(form.d) for j in range(form.d) if i != j)


def _s_separable(inst: Instance, r: Poly, c) -> Cyclo:
    # psi is additive, so for diagonal A the b-sum is a product of d
    # one-variable sums; the cost drops from |gr|^d to d|gr| per (ell, a)
    q = inst.q
    g, k = inst.g, inst.k
    gr = g * r
    dgr = int(gr.deg)
    alphas = [inst.form.gram[i][i] for i in range(inst.d)]
    bs = list(enumerate_polys(q, dgr - 1))
    bsq = [b * b for b in bs]
    cache: dict[tuple[Poly, Poly], Cyclo] = {}

    def one_var(quad: Poly, lin: Poly) -> Cyclo:
        key = (quad % gr, lin % gr)
        hit = cache.get(key)
        if hit is None:
            hit = Cyclo.zero(q)
            for b, b2 in zip(bs, bsq):
                hit = hit + psi_ratio(key[0] * b2 + key[1] * b, gr)
            cache[key] = hit
        return hit

    total = Cyclo.zero(q)
    for ell in enumerate_polys(q, int(g.deg) - 1):
        for a in _units_mod(r):
            w = a + r * ell
            term = psi_ratio(-(w * k), gr)
            for i in range(inst.d):
                term = term * one_var(a * g * alphas[i],
                                      2 * w * inst.lam[i] * alphas[i] - c[i])
            total = total + term
    return total


# -- many c at once -------------------------------------------------------------------


def _family_span(args):
    (q, d, D, lo, hi, chunk, BW, LIN, K0, Rtab, FW, consW, cons0) = args
    LN = Rtab.shape[0]
    ncls = q ** (d * FW.shape[1])
    T = np.zeros((q**D, ncls), dtype=np.int64)
    radD = q ** np.arange(D, dtype=np.int64)
    radC = q ** np.arange(d * FW.shape[1], dtype=np.int64)
    pos = lo
    while pos < hi:
        n = min(chunk, hi - pos)
        idx = np.arange(pos, pos + n, dtype=np.int64)
        digits = np.empty((n, d * D), dtype=np.int64)
        for j in range(d * D):
            digits[:, j] = (idx // q**j) % q
        Mco = np.zeros((n, LN), dtype=np.int64)
        for i in range(d):
            for j2 in range(d):
                nz = np.nonzero(BW[i, j2])[0]
                if nz.size == 0:
                    continue
                for u in range(D):
                    for v in range(D):
                        piv = digits[:, i * D + u] * digits[:, j2 * D + v]
                        for s in nz:
                            Mco[:, int(s) + u + v] += int(BW[i, j2, s]) * piv
        for i in range(d):
            nz = np.nonzero(LIN[i])[0]
            for u in range(D):
                col = digits[:, i * D + u]
                for s in nz:
                    Mco[:, int(s) + u] += int(LIN[i, s]) * col
        Mco = (Mco - K0) % q
        mres = (Mco @ Rtab) % q
        midx = mres @ radD
        fu = np.empty((n, d * FW.shape[1]), dtype=np.int64)
        for i in range(d):
            fu[:, i * FW.shape[1]:(i + 1) * FW.shape[1]] = (
                digits[:, i * D:(i + 1) * D] @ FW) % q
        cidx = fu @ radC
        if consW is not None:
            res = (digits @ consW + cons0) % q
            keep = ~res.any(axis=1)
            midx, cidx = midx[keep], cidx[keep]
        np.add.at(T.reshape(-1), midx * ncls + cidx, 1)
        pos += n
    return T


class SFamily:
    """S_{g,r}(c) for a batch of small c, driven by one walk of the b-space.

    The walk records, per residue of the a-multiplier polynomial
    M(b) = 2 lambda^T A b - k + g F(b) mod gr and per digit profile of the
    low coefficients of each b_i, how many constrained b fall in the cell.
    A single c is then a reweighting of that tensor: milliseconds per c.
    """

    def __init__(self, inst: Instance, r: Poly, cmax_deg: int = 0,
                 chunk_rows: int = 1 << 17, workers: int = 1):
        q, d = inst.q, inst.d
        if not r.is_monic():
            raise ValueError("r must be monic")
        self.inst = inst
        self.r = r
        self.q, self.d = q, d
        gr = inst.g * r
        self.gr = gr
        D = int(gr.deg)
        self.D = D
        self.cw = cmax_deg + 1
        if q ** (d * D) > MAX_RESIDUE_SPACE:
            raise ValueError("residue space too large to enumerate")
        if q**D * q ** (d * self.cw) > 40_000_000:
            raise ValueError("count tensor too large; lower cmax_deg")
        lamA = inst.lam_gram()
        LN = max(1, 2 * max(D, 1) - 1 + D)
        BW = np.zeros((d, d, LN), dtype=np.int64)
        for i in range(d):
            for j in range(d):
                red = (inst.g * inst.form.gram[i][j]) % gr
                for s, cf in enumerate(red.coeffs):
                    BW[i, j, s] = cf
        LIN = np.zeros((d, LN), dtype=np.int64)
        for i in range(d):
            red = (2 * lamA[i]) % gr
            for s, cf in enumerate(red.coeffs):
                LIN[i, s] = cf
        K0 = np.zeros(LN, dtype=np.int64)
        for s, cf in enumerate((inst.k % gr).coeffs):
            K0[s] = cf
        Rtab = np.zeros((LN, D), dtype=np.int64)
        for s in range(LN):
            red = Poly.monomial(q, 1, s) % gr
            for e, cf in enumerate(red.coeffs):
                Rtab[s, e] = cf
        wext = [_psi_digit(Poly.monomial(q, 1, s), gr)
                for s in range(D + self.cw)]
        FW = np.zeros((D, self.cw), dtype=np.int64)
        for v in range(D):
            for u in range(self.cw):
                FW[v, u] = wext[u + v]
        consW = cons0 = None
        if int(inst.g.deg) > 0:
            Dg = int(inst.g.deg)
            consW = np.zeros((d * D, Dg), dtype=np.int64)
            for i in range(d):
                for u in range(D):
                    red = (2 * lamA[i].shift(u)) % inst.g
                    for e, cf in enumerate(red.coeffs):
                        consW[i * D + u, e] = cf
            cons0 = np.zeros(Dg, dtype=np.int64)
            for e, cf in enumerate(((-inst.k) % inst.g).coeffs):
                cons0[e] = cf
        total = q ** (d * D)
        if workers > 1 and total > chunk_rows:
            span = -(-total // workers)
            spans = [(q, d, D, w * span, min((w + 1) * span, total),
                      chunk_rows, BW, LIN, K0, Rtab, FW, consW, cons0)
                     for w in range(workers)]
            with ProcessPoolExecutor(max_workers=workers) as pool:
                parts = list(pool.map(_family_span, spans))
            self.tensor = sum(parts[1:], parts[0])
        else:
            self.tensor = _family_span((q, d, D, 0, total, chunk_rows, BW,
                                        LIN, K0, Rtab, FW, consW, cons0))
        # digit counts of a * M / gr per residue class of M, over units a
        units = _units_mod(r)
        self.aprof = np.zeros((q**D, q), dtype=np.int64)
        for mi in range(q**D):
            digs = [(mi // q**e) % q for e in range(D)]
            mpoly = Poly(q, tuple(digs))
            for a in units:
                self.aprof[mi, _psi_digit(a * mpoly, gr)] += 1
        ncls = q ** (d * self.cw)
        self.FUdec = np.empty((ncls, d * self.cw), dtype=np.int64)
        for j in range(d * self.cw):
            self.FUdec[:, j] = (np.arange(ncls) // q**j) % q

    def eval(self, c) -> Cyclo:
        q = self.q
        c = _cvec(self.inst, c)
        gamma = np.zeros(self.d * self.cw, dtype=np.int64)
        for i, ci in enumerate(c):
            red = ci % self.gr
            if len(red.coeffs) > self.cw:
                raise ValueError("c exceeds this family's degree budget")
            for u, cf in enumerate(red.coeffs):
                gamma[i * self.cw + u] = cf
        offs = (self.FUdec @ gamma) % q
        counts = np.zeros(q, dtype=np.int64)
        for ov in range(q):
            cols = np.nonzero(offs == ov)[0]
            if cols.size == 0:
                continue
            tsub = self.tensor[:, cols].sum(axis=1)
            for s in range(q):
                counts[s] += int(tsub @ self.aprof[:, (s + ov) % q])
        return _counts_to_cyclo(q, counts, scale=q ** int(self.inst.g.deg))

    def eval_many(self, cs) -> list[Cyclo]:
        return [self.eval(c) for c in cs]


def s_full_many_c(inst: Instance, r: Poly, cs, workers: int = 1) -> list[Cyclo]:
    cs = [_cvec(inst, c) for c in cs]
    cmax = 0
    for c in cs:
        for ci in c:
            cmax = max(cmax, len((ci % (inst.g * r)).coeffs) - 1)
    fam = SFamily(inst, r, cmax_deg=max(cmax, 0), workers=workers)
    return fam.eval_many(cs)


# -- the S1 S2 factorization ----------------------------------------------------------


def split_r(r: Poly, g: Poly, delta: Poly) -> tuple[Poly, Poly]:
    """r = r1 * r2 with gcd(r1, delta*g) = 1 and every prime of r2 dividing
    delta*g."""
    if r.is_zero():
        raise ValueError("r must be nonzero")
    q = r.q
    r2 = Poly.one(q)
    for p, e in factor(r).items():
        if not coprime(p, delta * g):
            r2 = r2 * p**e
    r1 = (r.monic() // r2)
    return r1, r2


def s1_s2(inst: Instance, r: Poly, c=None, workers: int = 1
          ) -> tuple[Cyclo, Cyclo]:
    """The two factors with S_{g,r}(c) = S1 * S2, evaluated independently.

    S1 lives mod r1 (the part of r coprime to delta*g) and S2 mod g*r2; the
    coupling constant k is split as k = g*r2*k1 + r1*k2.
    """
    q, d = inst.q, inst.d
    c = _cvec(inst, c)
    g, k = inst.g, inst.k
    r1, r2 = split_r(r, g, inst.form.disc())
    gr2 = g * r2
    lamA = inst.lam_gram()
    if r1.is_one():
        S1 = Cyclo.one(q)
    else:
        k1 = (k * inv_mod(gr2 % r1, r1)) % r1
        queries = [(a1 * (g * r2) ** 2,
                    [2 * r2 * a1 * lamA[j] - c[j] for j in range(d)],
                    -(r2 * a1 * k1)) for a1 in _units_mod(r1)]
        counts = quad_digit_counts(q, r1, inst.form.gram, queries,
                                   workers=workers)
        S1 = _counts_to_cyclo(q, counts.sum(axis=0))
    if gr2.is_one():
        S2 = Cyclo.one(q)
    else:
        k2 = (k * inv_mod(r1 % gr2, gr2)) % gr2
        queries = [(a2 * g * r1 * r1,
                    [2 * r1 * a2 * lamA[j] - c[j] for j in range(d)],
                    -(r1 * a2 * k2)) for a2 in _units_mod(r2)]
        cons = None
        if int(g.deg) > 0:
            kr1bar = (k * inv_mod(r1 % g, g)) % g
            cons = (g, [2 * lamA[j] for j in range(d)], -kr1bar)
        counts = quad_digit_counts(q, gr2, inst.form.gram, queries,
                                   constraint=cons, workers=workers)
        S2 = _counts_to_cyclo(q, counts.sum(axis=0), scale=q ** int(g.deg))
    return S1, S2


# -- quadratic character machinery ---------------------------------------------------


def _pow_mod(b: Poly, e: int, m: Poly) -> Poly:
    out = Poly.one(b.q)
    b = b % m
    while e:
        if e & 1:
            out = (out * b) % m
        b = (b * b) % m
        e >>= 1
    return out


def legendre(u: Poly, p: Poly) -> int:
    """Quadratic residue symbol mod an irreducible p, by Euler's criterion."""
    q = u.q
    u = u % p
    if u.is_zero():
        return 0
    res = _pow_mod(u, (q ** int(p.deg) - 1) // 2, p)
    if res.is_one():
        return 1
    if (res + Poly.one(q)) % p == Poly.zero(q):
        return -1
    raise ArithmeticError("p is not irreducible")


def jacobi(u: Poly, r: Poly) -> int:
    """Jacobi symbol (u/r), multiplicative over the factorization of r."""
    if r.is_one() or int(r.deg) == 0:
        return 1
    out = 1
    for p, e in factor(r).items():
        if e % 2 == 0:
            if legendre(u, p) == 0:
                return 0
            continue
        s = legendre(u, p)
        if s == 0:
            return 0
        out *= s
    return out


def tau_gauss(q: int, r: Poly) -> Cyclo:
    """The Gauss sum of x^2/r over residues x mod r."""
    total = Cyclo.zero(q)
    for x in enumerate_polys(q, int(r.deg) - 1):
        total = total + psi_ratio(x * x, r)
    return total


def s_quadratic(form: QuadForm, r: Poly, c=None, c_prime=None, e=None,
                workers: int = 1) -> Cyclo:
    """Direct evaluation of the unconstrained quadratic character sum
    sum*_a sum_b psi((a(G(b) + <c', b> + e) - <c, b>)/r)."""
    q, d = form.q, form.d
    _check_quad_modulus(form, r)
    c = list(c) if c is not None else [Poly.zero(q)] * d
    cp = list(c_prime) if c_prime is not None else [Poly.zero(q)] * d
    e = e if e is not None else Poly.zero(q)
    if r.is_one():
        return Cyclo.one(q)
    queries = [(a, [a * cp[j] - c[j] for j in range(d)], a * e)
               for a in _units_mod(r)]
    counts = quad_digit_counts(q, r, form.gram, queries, workers=workers)
    return _counts_to_cyclo(q, counts.sum(axis=0))


def s_quadratic_closed(form: QuadForm, r: Poly, c=None, c_prime=None,
                       e=None) -> Cyclo:
    """Closed form: Jacobi symbol of det, Gauss sum power, and a twisted
    Kloosterman (even dimension) or Salie (odd dimension) sum."""
    q, d = form.q, form.d
    _check_quad_modulus(form, r)
    c = list(c) if c is not None else [Poly.zero(q)] * d
    cp = list(c_prime) if c_prime is not None else [Poly.zero(q)] * d
    e = e if e is not None else Poly.zero(q)
    if r.is_one():
        return Cyclo.one(q)
    U, alphas = form.diagonalize_mod(r)
    # the substitution b = U y carries c and c' to U^T c, U^T c'
    ct = [sum((U[i][j] * c[i] for i in range(d)), Poly.zero(q)) % r
          for j in range(d)]
    cpt = [sum((U[i][j] * cp[i] for i in range(d)), Poly.zero(q)) % r
           for j in range(d)]
    two = Poly.const(q, 2)
    pre = Poly.zero(q)
    eprime = e
    h = Poly.zero(q)
    for j in range(d):
        inv2a = inv_mod(two * alphas[j], r)
        inv4a = inv_mod(two * two * alphas[j], r)
        pre = (pre + inv2a * ct[j] * cpt[j]) % r
        eprime = (eprime - inv4a * cpt[j] * cpt[j]) % r
        h = (h + inv4a * ct[j] * ct[j]) % r
    twisted = d % 2 == 1
    inner = Cyclo.zero(q)
    for a in _units_mod(r):
        abar = inv_mod(a, r)
        term = psi_ratio(a * eprime - abar * h, r)
        if twisted:
            term = term * jacobi(a, r)
        inner = inner + term
    tau = tau_gauss(q, r)
    taud = Cyclo.one(q)
    for _ in range(d):
        taud = taud * tau
    return jacobi(mat_det(form.gram), r) * taud * psi_ratio(pre, r) * inner


def _check_quad_modulus(form: QuadForm, r: Poly):
    if r.is_zero():
        raise ValueError("r must be nonzero")
    if not coprime(r, mat_det(form.gram)):
        raise ValueError("modulus must be coprime to the determinant")


# -- Weil bound -----------------------------------------------------------------------


def weil_sum(m: Poly, n: Poly, c: Poly, theta: int = 0) -> Cyclo:
    """sum*_{x mod c} (x/c)^theta psi((m x + n xbar)/c), exactly."""
    q = c.q
    if c.is_zero():
        raise ValueError("c must be nonzero")
    total = Cyclo.zero(q)
    for x in _units_mod(c) if int(c.deg) > 0 else [Poly.zero(q)]:
        xbar = inv_mod(x, c) if int(c.deg) > 0 else Poly.zero(q)
        term = psi_ratio(m * x + n * xbar, c)
        if theta:
            term = term * jacobi(x, c)
        total = total + term
    return total


def weil_check(m: Poly, n: Poly, c: Poly, theta: int = 0
               ) -> tuple[Cyclo, float, bool]:
    """The Kloosterman/Salie sum, its square-root bound, and the comparison
    (magnitude through the complex embedding, tolerance 1e-9)."""
    q = c.q
    value = weil_sum(m, n, c, theta)
    g3 = poly_gcd(poly_gcd(m, n), c)
    bound = divisor_count(c) * math.sqrt(q ** int(c.deg)) * math.sqrt(
        q ** int(g3.deg))
    ok = value.abs_embed() <= bound + 1e-9
    return value, bound, ok


# -- averaged upper-bound scan --------------------------------------------------------


def average_scan(inst: Instance, c=None, x_max: int = 2, workers: int = 1):
    """Rows (X, L(X)) with L(X) = sum over monic r, deg r <= X, of
    |g|^-d |r|^-(d+1)/2 |S_{g,r}(c)|, plus the fitted growth exponent of
    L against q^X.
    """
    q, d = inst.q, inst.d
    c = _cvec(inst, c)
    gnorm = float(q ** (int(inst.g.deg) * d))
    rows = []
    running = 0.0
    for X in range(x_max + 1):
        for r in monic_of_degree(q, X):
            s = s_full(inst, r, c, workers=workers)
            running += s.abs_embed() / (gnorm * float(q**X) ** ((d + 1) / 2))
        rows.append((X, running))
    pts = [(X, math.log(L)) for X, L in rows if L > 0]
    slope = None
    if len(pts) >= 2:
        n = len(pts)
        mx = sum(p[0] for p in pts) / n
        my = sum(p[1] for p in pts) / n
        denom = sum((p[0] - mx) ** 2 for p in pts)
        if denom > 0:
            slope = sum((p[0] - mx) * (p[1] - my) for p in pts) / denom
            slope /= math.log(q)
    return rows, slope
