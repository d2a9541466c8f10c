"""Local densities and the partial singular series.

The complete-sum identity

    sum over monic r dividing (N)! of |r|^-d S_{g,r}(0)
      = |g| #{b mod g(N)! : g^2 (N)! divides F(g b + lambda) - f} / |(N)!|^(d-1)

turns the archimedean-free part of the count into congruence counting, and
the right side splits over prime powers.  Everything here is exact rational
arithmetic; floats appear only in tail_report, which is diagnostic output.

Congruence counts themselves run through two independent routes: a dense
residue walk, and a character-sum expansion over unit multipliers (diagonal
Gram matrices only).  Tests hold the two equal.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .basefield import Cyclo
from .expsums import Instance, _units_mod, quad_digit_counts, s_full
from .laurent import psi_ratio
from .polyring import (
    Poly,
    factor,
    is_irreducible,
    monic_divisors,
    monic_irreducibles,
    monic_of_degree,
    poly_factorial,
)
from .quadform import QuadForm

MAX_DENSE_POINTS = 100_000_000


@dataclass(frozen=True)
class DensityProfile:
    """Observed levels of one local density and where they flatten out.

    levels holds (k, raw count, count / |varpi|^((d-1)k)) for k = 1..k_max;
    k_stable is the first k whose normalized count equals the next one, or
    None when no plateau was seen, in which case sigma is None too rather
    than a guess.
    """

    instance: Instance
    prime: Poly
    levels: tuple[tuple[int, int, Fraction], ...]
    k_stable: int | None
    sigma: Fraction | None

    @property
    def stable(self) -> bool:
        return self.k_stable is not None

    def to_json(self) -> dict:
        return {
            "prime": str(self.prime),
            "levels": [{"k": k, "count": n, "normalized": str(v)}
                       for k, n, v in self.levels],
            "stable_at": self.k_stable,
            "sigma": str(self.sigma) if self.sigma is not None else None,
        }


def _dense_count(q: int, m: Poly, gram, mult: Poly, lin, const: Poly,
                 chunk_rows: int = 1 << 17) -> int:
    """#{b mod m : m | mult*F(b) + <lin, b> + const} by walking residues."""
    d = len(gram)
    D = int(m.deg)
    total = q ** (d * D)
    if total > MAX_DENSE_POINTS:
        raise ValueError(
            f"dense count needs {total} residue points; limit is "
            f"{MAX_DENSE_POINTS}")
    if D == 0:
        return 1
    LN = 3 * D - 2
    BW = np.zeros((d, d, D), dtype=np.int64)
    for i in range(d):
        for j in range(d):
            red = (mult * gram[i][j]) % m
            for s, cf in enumerate(red.coeffs):
                BW[i, j, s] = cf
    LIN = np.zeros((d, D), dtype=np.int64)
    for i in range(d):
        red = lin[i] % m
        for s, cf in enumerate(red.coeffs):
            LIN[i, s] = cf
    K0 = np.zeros(LN, dtype=np.int64)
    for s, cf in enumerate((const % m).coeffs):
        K0[s] = cf
    Rtab = np.zeros((LN, D), dtype=np.int64)
    for s in range(LN):
        red = Poly.monomial(q, 1, s) % m
        for e, cf in enumerate(red.coeffs):
            Rtab[s, e] = cf
    hits = 0
    pos = 0
    while pos < total:
        n = min(chunk_rows, total - pos)
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
        Mco = (Mco + K0) % q
        mres = (Mco @ Rtab) % q
        hits += int((~mres.any(axis=1)).sum())
        pos += n
    return hits


def _char_count(q: int, varpi: Poly, e: int, alphas, mult: Poly, lin,
                const: Poly) -> int:
    """The same count through complete character sums, diagonal forms only.

    #{b mod varpi^e : divisible} |varpi^e| = sum over j <= e of
    |varpi|^{(e-j)d} sum over units u mod varpi^j of psi(u Psi(b)/varpi^j)
    summed over b, and the b-sum splits per coordinate.
    """
    d = len(alphas)
    m = varpi**e
    acc = Cyclo.from_int(q, q ** (int(m.deg) * d))  # j = 0 term
    for j in range(1, e + 1):
        mj = varpi**j
        units = _units_mod(mj)
        classes: dict[tuple[Poly, Poly], list[int]] = {}
        for i in range(d):
            classes.setdefault((alphas[i], lin[i]), []).append(i)
        tables = {}
        for (alpha, li), members in classes.items():
            queries = [(u * mult * alpha, [u * li], Poly.zero(q))
                       for u in units]
            counts = quad_digit_counts(q, mj, [[Poly.one(q)]], queries)
            tables[(alpha, li)] = [
                Cyclo.from_counts(q, [int(v) for v in row]) for row in counts]
        inner = Cyclo.zero(q)
        for ui, u in enumerate(units):
            term = psi_ratio(u * const, mj)
            for key, members in classes.items():
                for _ in members:
                    term = term * tables[key][ui]
            inner = inner + term
        acc = acc + inner.mul_q_pow(2 * (e - j) * int(varpi.deg) * d)
    val = acc.mul_q_pow(-2 * int(m.deg)).to_fraction()
    if val.denominator != 1:
        raise ArithmeticError("character-sum count did not come out integral")
    return int(val)


def congruence_count(form: QuadForm, m: Poly, mult: Poly, lin, const: Poly,
                     method: str = "auto") -> int:
    """#{b in (O/m)^d : mult*F(b) + <lin, b> + const = 0 mod m}.

    method "dense" walks all residues, "chars" expands in complete character
    sums (m must be a prime power and the form diagonal), "auto" picks chars
    whenever legal.
    """
    q = form.q
    diag = all(form.gram[i][j].is_zero()
               for i in range(form.d) for j in range(form.d) if i != j)
    fac = factor(m) if not m.is_const() else {}
    if method == "auto":
        method = "chars" if diag and len(fac) == 1 else "dense"
    if method == "chars":
        if not diag:
            raise ValueError("character route needs a diagonal Gram matrix")
        if len(fac) != 1:
            raise ValueError("character route needs a prime-power modulus")
        (varpi, e), = fac.items()
        alphas = [form.gram[i][i] for i in range(form.d)]
        return _char_count(q, varpi, e, alphas, mult, lin, const)
    if method != "dense":
        raise ValueError(f"unknown method {method!r}")
    return _dense_count(q, m, form.gram, mult, lin, const)


def sigma_local(inst: Instance, varpi: Poly, k_max: int,
                method: str = "auto") -> DensityProfile:
    """Levels of the local density at one monic irreducible.

    Counts x mod varpi^(k + v) with F(x) = f there and x = lambda mod
    varpi^v, v the multiplicity of varpi in g, normalized by
    |varpi|^((d-1)k).  Substituting x = lambda + varpi^v y makes each level
    a plain congruence count in y mod varpi^k.
    """
    if not (varpi.is_monic() and is_irreducible(varpi)):
        raise ValueError("varpi must be monic irreducible")
    if k_max < 1:
        raise ValueError("k_max must be at least 1")
    q, d = inst.q, inst.d
    nu = 0
    g = inst.g
    while (g % varpi).is_zero():
        nu += 1
        g = g // varpi
    pv = varpi**nu
    lamA = inst.lam_gram()
    # F(lambda + pv y) - f = pv (2 lambda^T A y + pv F(y) - c0)
    c0 = (inst.f - inst.form.evaluate(inst.lam)) // pv
    levels = []
    for k in range(1, k_max + 1):
        count = congruence_count(inst.form, varpi**k, pv,
                                 [2 * a for a in lamA], -c0, method=method)
        norm = Fraction(count, q ** (int(varpi.deg) * (d - 1) * k))
        levels.append((k, count, norm))
    k_stable = None
    for (k, _, v1), (_, _, v2) in zip(levels, levels[1:]):
        if v1 == v2:
            k_stable = k
            break
    sigma = levels[k_stable - 1][2] if k_stable is not None else None
    return DensityProfile(inst, varpi, tuple(levels), k_stable, sigma)


def _factorial_valuations(q: int, N: int) -> dict[Poly, int]:
    """Multiplicity of each monic irreducible in the product of all monic
    polynomials of degree at most N, without factoring the product."""
    out = {}
    for varpi in monic_irreducibles(q, N):
        dp = int(varpi.deg)
        e, j = 0, 1
        while j * dp <= N:
            # monic multiples of varpi^j of degree at most N
            e += (q ** (N - j * dp + 1) - 1) // (q - 1)
            j += 1
        out[varpi] = e
    return out


def partial_identity_check(inst: Instance, N: int, workers: int = 1
                           ) -> tuple[Fraction, Fraction, bool]:
    """Both sides of the divisor-sum identity at level (N)!, exactly.

    Left: sum of |r|^-d S_{g,r}(0) over monic r dividing (N)!.  Right: the
    congruence count |g| #{b mod g(N)! : F(gb+lambda) = f mod g^2 (N)!}
    divided by |(N)!|^(d-1), evaluated prime power by prime power.
    """
    q, d = inst.q, inst.d
    if d < 4:
        raise ValueError("the identity is maintained for d >= 4 only")
    if N < 0:
        raise ValueError("N must be nonnegative")
    blocks = _factorial_valuations(q, N)
    if not inst.g.is_const():
        for p, e in factor(inst.g).items():
            blocks[p] = blocks.get(p, 0) + e
    worst = max((int(p.deg) * e for p, e in blocks.items()), default=0)
    if q ** (d * worst) > MAX_DENSE_POINTS:
        raise ValueError(
            f"largest prime-power block needs {q ** (d * worst)} points; "
            f"limit is {MAX_DENSE_POINTS}; reduce N")
    nfact = poly_factorial(q, N)
    acc = Cyclo.zero(q)
    for r in monic_divisors(nfact):
        acc = acc + s_full(inst, r, workers=workers).mul_q_pow(
            -2 * d * int(r.deg))
    lhs = acc.to_fraction()
    # g^2 (N)! | F(gb+lambda) - f is g(N)! | gF(b) + 2 lambda^T A b - k,
    # and that congruence splits over the prime powers of g (N)!
    count = 1
    lamA = inst.lam_gram()
    for p, e in blocks.items():
        count *= congruence_count(inst.form, p**e, inst.g,
                                  [2 * a for a in lamA], -inst.k)
    rhs = Fraction(q ** int(inst.g.deg) * count,
                   q ** (int(nfact.deg) * (d - 1)))
    return lhs, rhs, lhs == rhs


def singular_series(inst: Instance, deg_bound: int, k_limit: int = 4
                    ) -> tuple[Fraction, list[DensityProfile]]:
    """Product of local densities over monic irreducibles of degree at most
    deg_bound.  A factor that fails to stabilize by k_limit raises; a zero
    factor is a local obstruction and is returned, not raised."""
    if deg_bound < 1:
        raise ValueError("deg_bound must be at least 1")
    factors = []
    product = Fraction(1)
    for varpi in monic_irreducibles(inst.q, deg_bound):
        prof = None
        for k_max in range(2, k_limit + 1):
            prof = sigma_local(inst, varpi, k_max)
            if prof.stable:
                break
        if not prof.stable:
            raise ValueError(
                f"density at {varpi} did not stabilize by k_max={k_limit}")
        factors.append(prof)
        product *= prof.sigma
    return product, factors


def tail_report(inst: Instance, T_deg: int, workers: int = 1) -> dict:
    """Per-degree increments of sum |r|^-d |S_{g,r}(0)| and a fitted decay
    exponent (base-q slope of log increments), for eyeballing the tail."""
    import math

    q, d = inst.q, inst.d
    rows = []
    cumulative = 0.0
    for X in range(T_deg + 1):
        inc = 0.0
        for r in monic_of_degree(q, X):
            s = s_full(inst, r, workers=workers)
            inc += s.abs_embed() / float(q ** (d * X))
        cumulative += inc
        rows.append({"deg": X, "increment": inc, "cumulative": cumulative})
    pts = [(row["deg"], math.log(row["increment"], q))
           for row in rows if row["increment"] > 0 and row["deg"] > 0]
    slope = None
    if len(pts) >= 2:
        n = len(pts)
        mx = sum(p[0] for p in pts) / n
        my = sum(p[1] for p in pts) / n
        den = sum((p[0] - mx) ** 2 for p in pts)
        if den > 0:
            slope = sum((p[0] - mx) * (p[1] - my) for p in pts) / den
    return {"rows": rows, "fitted_exponent": slope}
