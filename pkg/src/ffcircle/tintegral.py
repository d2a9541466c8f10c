"""Oscillatory sums and integrals at the infinite place.

Haar measure is normalized so the open unit ball T = {|x| < 1} has volume 1;
a ball {|x - c| < q**rho} then has volume q**rho.  Everything here returns
exact ``Cyclo`` values, and every "closed form vs direct evaluation" pair is
kept separate so tests can compare the two routes.

Contents: locally-constant box integration, the two orthogonality laws
(character sums over polynomial boxes, character integrals over balls), the
Farey dissection of the unit ball, the delta kernel built from it, Gauss
factors of one-variable quadratic phases, Kloosterman- and Salie-type shell
integrals with their closed case tables, truncated multivariate series,
Morse normal form, and stationary phase in several variables.
"""

from __future__ import annotations

import itertools
from typing import Callable, Sequence

import numpy as np

from .basefield import Cyclo, Fq, eq_char, gauss_sum, kloosterman, salie, tau_psi
from .laurent import Laurent, PrecisionError, psi_ratio
from .polyring import NEG_INF, Poly, coprime, enumerate_polys, monic_of_degree


# -- locally constant integration ---------------------------------------------


def ball_cells(q: int, scale: int) -> list[Laurent]:
    """Centers of the cells of radius q**scale tiling T (scale <= 0)."""
    if scale > 0:
        raise ValueError("cells must be at least as fine as the ball")
    out = []
    for digits in itertools.product(range(q), repeat=-scale):
        out.append(Laurent(q, scale, list(reversed(digits)), exact=True))
    return out


def integrate_unit_ball(q: int, d: int, scale: int,
                        func: Callable[[list[Laurent]], Cyclo]) -> Cyclo:
    """Integrate a function over T^d that is constant on cells of radius
    q**scale; func sees the exact cell centers."""
    cells = ball_cells(q, scale)
    total = Cyclo.zero(q)
    for pt in itertools.product(cells, repeat=d):
        total = total + func(list(pt))
    return total.mul_q_pow(2 * scale * d)


# -- orthogonality, both routes -----------------------------------------------


def poly_char_sum_direct(gamma: Laurent, deg_lt: int) -> Cyclo:
    """sum of psi(gamma * b) over polynomials b with deg b < deg_lt."""
    q = gamma.q
    total = Cyclo.zero(q)
    for b in enumerate_polys(q, deg_lt - 1):
        total = total + (gamma * b).psi()
    return total


def poly_char_sum_closed(gamma: Laurent, deg_lt: int) -> Cyclo:
    """q**deg_lt when |((gamma))| < q**-deg_lt, else 0."""
    q = gamma.q
    if gamma.small_frac(deg_lt):
        return Cyclo.from_int(q, 1).mul_q_pow(2 * deg_lt)
    return Cyclo.zero(q)


def ball_char_integral_direct(gamma: Laurent, radius_exp: int) -> Cyclo:
    """integral of psi(alpha * gamma) over {|alpha| < q**radius_exp}."""
    q = gamma.q
    if gamma.exact and gamma.known_zero():
        return Cyclo.from_int(q, 1).mul_q_pow(2 * radius_exp)
    dg = int(gamma.deg)
    # psi(alpha gamma) only sees digits of alpha at exponents >= -1 - dg
    scale = min(-1 - dg, radius_exp - 1)
    shift = radius_exp  # map T onto the ball by alpha -> t^radius_exp alpha
    total = Cyclo.zero(q)
    for c in ball_cells(q, scale - shift):
        total = total + (c.shift(shift) * gamma).psi()
    return total.mul_q_pow(2 * scale)


def ball_char_integral_closed(gamma: Laurent, radius_exp: int) -> Cyclo:
    """q**radius_exp when |gamma| < q**-radius_exp, else 0."""
    q = gamma.q
    hi = gamma.deg_bound()
    small = True
    if hi != NEG_INF:
        # scan downward so a visible top digit settles the answer before any
        # untracked read can raise
        for k in range(int(hi), -radius_exp - 1, -1):
            if gamma[k] != 0:
                small = False
                break
    return Cyclo.from_int(q, 1).mul_q_pow(2 * radius_exp) if small else Cyclo.zero(q)


# -- Farey dissection of the unit ball -----------------------------------------


def dissection_centers(q: int, level: int) -> list[tuple[Poly, Poly]]:
    """All reduced pairs (a, r): r monic of degree <= level, deg a < deg r,
    gcd(a, r) = 1.  (a = 0 pairs only with r = 1.)"""
    out = []
    for dr in range(level + 1):
        for r in monic_of_degree(q, dr):
            for a in enumerate_polys(q, dr - 1):
                if a.is_zero() and not r.is_one():
                    continue
                if coprime(a, r):
                    out.append((a, r))
    return out


def dissection_locate(alpha: Laurent, level: int) -> list[tuple[Poly, Poly]]:
    """The reduced pairs whose ball {|r alpha - a| < q**-level} contains alpha."""
    q = alpha.q
    hits = []
    for a, r in dissection_centers(q, level):
        y = alpha * r - a
        if all(y[-j] == 0 for j in range(1, level + 1)) and y.deg_bound() < 0:
            hits.append((a, r))
    return hits


# -- the delta kernel ------------------------------------------------------------


def delta_eval(n: Poly, level: int) -> Cyclo:
    """The dissection identity's detector: 1 at n = 0, else 0.

    q**-2Q sum over monic r (deg <= Q) and units a mod r of
    psi(a n / r) * q**(Q - deg r) * [deg n < Q + deg r].
    """
    q = n.q
    total = Cyclo.zero(q)
    dn = n.deg
    for dr in range(level + 1):
        if not (dn == NEG_INF or dn < level + dr):
            continue
        weight = q ** (level - dr)
        for r in monic_of_degree(q, dr):
            for a in enumerate_polys(q, dr - 1):
                if a.is_zero() and not r.is_one():
                    continue
                if coprime(a, r):
                    total = total + psi_ratio(a * n, r) * weight
    return total.mul_q_pow(-4 * level)


def _residue_functional(q: int, r: Poly) -> np.ndarray:
    """w with psi(s/r) = e_q(w . coeffs(s)) for deg s < deg r."""
    dr = int(r.deg)
    w = np.zeros(dr, dtype=np.int64)
    for j in range(dr):
        w[j] = Laurent.from_ratio(Poly.monomial(q, 1, j), r, floor=-1)[-1]
    return w


def delta_scan(q: int, level: int, deg_bound: int) -> tuple[int, int]:
    """Evaluate the delta kernel on every n with deg n <= deg_bound at once.

    Returns (checked, failures): failures counts n where the kernel is not
    the indicator of n = 0.
    """
    ncoef = deg_bound + 1
    grid = np.array(
        list(itertools.product(range(q), repeat=ncoef)), dtype=np.int64
    )[:, ::-1]  # column j = coefficient of t^j
    m = grid.shape[0]
    degs = np.full(m, -1, dtype=np.int64)  # -1 for n = 0
    for j in range(ncoef):
        degs[grid[:, j] != 0] = j
    counts = np.zeros((m, q), dtype=np.int64)
    for dr in range(level + 1):
        weight = q ** (level - dr)
        mask = degs < level + dr
        rows = np.nonzero(mask)[0]
        if rows.size == 0:
            continue
        for r in monic_of_degree(q, dr):
            w = _residue_functional(q, r)
            for a in enumerate_polys(q, dr - 1):
                if a.is_zero() and not r.is_one():
                    continue
                if not coprime(a, r):
                    continue
                # theta(n) = w . coeffs(a n mod r), linear in the digits of n
                tvec = np.zeros(ncoef, dtype=np.int64)
                if not r.is_one():
                    for j in range(ncoef):
                        s = (a * Poly.monomial(q, 1, j)) % r
                        tvec[j] = sum(int(w[i]) * s[i] for i in range(int(r.deg))) % q
                theta = (grid[rows] @ tvec) % q
                np.add.at(counts.reshape(-1), rows * q + theta, weight)
    failures = 0
    for i in range(m):
        val = Cyclo.from_counts(q, counts[i].tolist()).mul_q_pow(-4 * level)
        want = Cyclo.one(q) if degs[i] < 0 else Cyclo.zero(q)
        if val != want:
            failures += 1
    return m, failures


# -- Gauss factor of a one-variable quadratic phase -------------------------------


def gauss_factor_closed(lam: Laurent) -> Cyclo:
    """integral over T of psi(lam * u^2) du, from the case table."""
    q = lam.q
    if lam.known_zero():
        if lam.exact:
            return Cyclo.one(q)
        if lam.floor <= -1:
            return Cyclo.one(q)
        raise PrecisionError("sign of the phase order is untracked")
    o = int(lam.deg)
    if o <= -1:
        return Cyclo.one(q)
    if o % 2 == 0:
        return Cyclo.from_int(q, 1).mul_q_pow(-o)
    return gauss_sum(q, lam[o]).mul_q_pow(-(o + 1))


def gauss_factor_direct(lam: Laurent) -> Cyclo:
    q = lam.q
    if lam.known_zero() and lam.exact:
        return Cyclo.one(q)
    o = int(lam.deg)
    scale = min(-o - 1, -1)
    return integrate_unit_ball(q, 1, scale, lambda u: (lam * u[0] * u[0]).psi())


def gauss_product_closed(lams: Sequence[Laurent]) -> Cyclo:
    out = Cyclo.one(lams[0].q)
    for lam in lams:
        out = out * gauss_factor_closed(lam)
    return out


def gauss_product_direct(lams: Sequence[Laurent]) -> Cyclo:
    q = lams[0].q
    scale = min(min(-int(l.deg) - 1 if not l.known_zero() else -1 for l in lams), -1)

    def phase(u: list[Laurent]) -> Cyclo:
        acc = Laurent.zero(q)
        for lam, ui in zip(lams, u):
            acc = acc + lam * ui * ui
        return acc.psi()

    return integrate_unit_ball(q, len(lams), scale, phase)


# -- shell integrals of Kloosterman and Salie type ---------------------------------


def _shell_sign(F: Fq, l: int, top: int, twisted: bool) -> int:
    # the twist weights a point by chi(leading digit) on odd-degree shells
    if not twisted or l % 2 == 0:
        return 1
    return F.chi(top)


def shell_integral_direct(l: int, k: int, alpha_prime: int,
                          alpha_tilde: Laurent, twisted: bool = False) -> Cyclo:
    """integral over {deg x = l} of [twist] psi(x + alpha/x) dx, evaluated
    cell by cell, with alpha = t**(2l+k) alpha' (1 + alpha_tilde)."""
    q = alpha_tilde.q
    F = Fq(q)
    if alpha_prime % q == 0:
        raise ValueError("alpha' must be a unit")
    if not alpha_tilde.known_zero() and int(alpha_tilde.deg) >= 0:
        raise ValueError("alpha_tilde must be small")
    one = Laurent.one(q)
    alpha = (one + alpha_tilde) * Laurent.monomial(q, alpha_prime, 2 * l + k)
    depth = max(l + 1, l + k + 1, 0)
    total = Cyclo.zero(q)
    # 1/x to enough digits that (alpha/x) still has a tracked t^-1 digit
    inv_floor = min(-2 * l - k - 4, l - 4)
    for top in range(1, q):
        sign = _shell_sign(F, l, top, twisted)
        for digits in itertools.product(range(q), repeat=depth):
            x = Laurent(q, l - depth,
                        list(reversed(digits)) + [top], exact=True)
            xinv = x.reciprocal(floor=inv_floor)
            val = (x + alpha * xinv).psi()
            total = total + (val * sign if sign != 1 else val)
    return total.mul_q_pow(2 * (l - depth))


def shell_integral_closed(l: int, k: int, alpha_prime: int,
                          alpha_tilde: Laurent, twisted: bool = False) -> Cyclo:
    """The case table for the shell integral; matches the direct route."""
    q = alpha_tilde.q
    F = Fq(q)
    a1 = alpha_prime % q
    if a1 == 0:
        raise ValueError("alpha' must be a unit")
    big = max(l, l + k)
    lhat = lambda c: Cyclo.from_int(q, c).mul_q_pow(2 * l)  # c * q^l

    if k != 0:
        if big < -1:
            if twisted and l % 2:
                return Cyclo.zero(q)
            return lhat(q - 1)
        if big == -1:
            if not twisted or l % 2 == 0:
                return lhat(-1)
            # twisted on an odd shell
            if k < 0:  # the x term carries the oscillation
                return tau_psi(q).mul_q_pow(2 * l)
            return (tau_psi(q) * F.chi(a1)).mul_q_pow(2 * l)
        return Cyclo.zero(q)

    # k = 0
    if l < -1:
        if twisted and l % 2:
            return Cyclo.zero(q)
        return lhat(q - 1)
    if l == -1:
        base = salie(q, a1) if twisted else kloosterman(q, a1)
        return base.mul_q_pow(2 * l)
    # l >= 0: stationary points exist iff alpha' is a square
    if F.chi(a1) != 1:
        return Cyclo.zero(q)
    s = F.sqrt(a1)
    u = (Laurent.one(q) + alpha_tilde)
    root = u.sqrt(floor=-(l + 3)) if u.exact else u.sqrt()
    total = Cyclo.zero(q)
    for sgn in (1, -1):
        xc = root * Laurent.monomial(q, (sgn * s) % q, l)
        phase = (2 * xc).psi()
        lam = xc.reciprocal().shift(2 * l)
        term = phase * gauss_factor_closed(lam)
        if twisted and l % 2:
            term = term * F.chi((sgn * s) % q)
        total = total + term
    return total.mul_q_pow(2 * l)


# -- truncated multivariate series --------------------------------------------------


class TruncSeries:
    """Power series in nvars variables, coefficients in F_q((1/t)), truncated
    beyond total degree ``order``.  Exponent tuples index the terms."""

    def __init__(self, q: int, nvars: int, order: int,
                 terms: dict[tuple[int, ...], Laurent] | None = None):
        self.q = q
        self.nvars = nvars
        self.order = order
        self.terms: dict[tuple[int, ...], Laurent] = {}
        if terms:
            for e, c in terms.items():
                if sum(e) > order:
                    continue
                if not (c.exact and c.known_zero()):
                    self.terms[tuple(e)] = c

    @classmethod
    def constant(cls, q: int, nvars: int, order: int, c) -> "TruncSeries":
        c = _as_laurent(q, c)
        z = (0,) * nvars
        return cls(q, nvars, order, {z: c})

    @classmethod
    def var(cls, q: int, nvars: int, order: int, i: int) -> "TruncSeries":
        e = tuple(1 if j == i else 0 for j in range(nvars))
        return cls(q, nvars, order, {e: Laurent.one(q)})

    def _like(self, terms) -> "TruncSeries":
        return TruncSeries(self.q, self.nvars, self.order, terms)

    def __add__(self, other) -> "TruncSeries":
        if isinstance(other, (int, Laurent, Poly)):
            other = TruncSeries.constant(self.q, self.nvars, self.order, other)
        out = dict(self.terms)
        for e, c in other.terms.items():
            out[e] = out[e] + c if e in out else c
        return self._like(out)

    __radd__ = __add__

    def __neg__(self) -> "TruncSeries":
        return self._like({e: -c for e, c in self.terms.items()})

    def __sub__(self, other) -> "TruncSeries":
        if isinstance(other, (int, Laurent, Poly)):
            other = TruncSeries.constant(self.q, self.nvars, self.order, other)
        return self + (-other)

    def __mul__(self, other) -> "TruncSeries":
        if isinstance(other, (int, Laurent, Poly)):
            c = _as_laurent(self.q, other)
            return self._like({e: v * c for e, v in self.terms.items()})
        out: dict[tuple[int, ...], Laurent] = {}
        for e1, c1 in self.terms.items():
            d1 = sum(e1)
            for e2, c2 in other.terms.items():
                if d1 + sum(e2) > self.order:
                    continue
                e = tuple(a + b for a, b in zip(e1, e2))
                v = c1 * c2
                out[e] = out[e] + v if e in out else v
        return self._like(out)

    __rmul__ = __mul__

    def coeff(self, e: tuple[int, ...]) -> Laurent:
        return self.terms.get(tuple(e), Laurent.zero(self.q))

    def constant_term(self) -> Laurent:
        return self.coeff((0,) * self.nvars)

    def homogeneous(self, n: int) -> dict[tuple[int, ...], Laurent]:
        return {e: c for e, c in self.terms.items() if sum(e) == n}

    def max_degree(self) -> int:
        return max((sum(e) for e in self.terms), default=0)

    def is_known_zero(self) -> bool:
        return all(c.known_zero() for c in self.terms.values())

    def substitute(self, maps: Sequence["TruncSeries"]) -> "TruncSeries":
        """Plug series in for the variables.  Maps must have no constant term."""
        for m in maps:
            if not m.constant_term().known_zero():
                raise ValueError("substitution must fix the origin")
        # Horner-free: expand each monomial by repeated multiplication
        out = TruncSeries(self.q, self.nvars, self.order, {})
        pow_cache: dict[tuple[int, int], TruncSeries] = {}

        def var_pow(i: int, n: int) -> TruncSeries:
            if n == 0:
                return TruncSeries.constant(self.q, self.nvars, self.order, 1)
            key = (i, n)
            if key not in pow_cache:
                pow_cache[key] = var_pow(i, n - 1) * maps[i]
            return pow_cache[key]

        for e, c in self.terms.items():
            term = TruncSeries.constant(self.q, self.nvars, self.order, c)
            for i, n in enumerate(e):
                if n:
                    term = term * var_pow(i, n)
            out = out + term
        return out

    def evaluate(self, point: Sequence[Laurent]) -> Laurent:
        acc = Laurent.zero(self.q)
        for e, c in self.terms.items():
            v = c
            for i, n in enumerate(e):
                for _ in range(n):
                    v = v * point[i]
            acc = acc + v
        return acc

    def __repr__(self) -> str:
        items = ", ".join(f"{e}: {c}" for e, c in sorted(self.terms.items()))
        return f"TruncSeries(order={self.order}, {{{items}}})"


def _as_laurent(q: int, c) -> Laurent:
    if isinstance(c, Laurent):
        return c
    if isinstance(c, int):
        return Laurent.from_int(q, c)
    if isinstance(c, Poly):
        return Laurent.from_poly(c)
    raise TypeError(f"cannot coerce {c!r}")


def series_inverse(maps: Sequence[TruncSeries]) -> list[TruncSeries]:
    """Invert a substitution with invertible linear part, by degree-by-degree
    correction: the inverse's degree-n error feeds back through the inverse
    of the linear part."""
    q = maps[0].q
    d = maps[0].nvars
    order = maps[0].order
    # linear part as a matrix of Laurent
    lin = [[maps[i].coeff(tuple(1 if k == j else 0 for k in range(d)))
            for j in range(d)] for i in range(d)]
    linv = _mat_inv_laurent(lin)
    ident = [TruncSeries.var(q, d, order, i) for i in range(d)]
    # first guess: inverse of the linear part
    inv = [sum((ident[j] * linv[i][j] for j in range(d)),
               TruncSeries(q, d, order, {})) for i in range(d)]
    for _ in range(order):
        err = [m.substitute(inv) - ident[i] for i, m in enumerate(maps)]
        if all(e.is_known_zero() for e in err):
            break
        corr = [sum((err[j] * linv[i][j] for j in range(d)),
                    TruncSeries(q, d, order, {})) for i in range(d)]
        inv = [inv[i] - corr[i] for i in range(d)]
    return inv


def _mat_inv_laurent(m: list[list[Laurent]]) -> list[list[Laurent]]:
    d = len(m)
    q = m[0][0].q
    if d == 1:
        return [[_recip(m[0][0])]]
    # cofactor inverse; d stays tiny here
    det = _det_laurent(m)
    out = [[None] * d for _ in range(d)]
    dinv = _recip(det)
    for i in range(d):
        for j in range(d):
            minor = [[m[r][c] for c in range(d) if c != j]
                     for r in range(d) if r != i]
            cof = _det_laurent(minor) if minor else Laurent.one(q)
            if (i + j) % 2:
                cof = -cof
            out[j][i] = cof * dinv
    return out


def _det_laurent(m: list[list[Laurent]]) -> Laurent:
    d = len(m)
    if d == 1:
        return m[0][0]
    q = m[0][0].q
    acc = Laurent.zero(q)
    for j in range(d):
        if m[0][j].known_zero():
            continue
        minor = [[m[r][c] for c in range(d) if c != j] for r in range(1, d)]
        term = m[0][j] * (_det_laurent(minor) if minor else Laurent.one(q))
        acc = acc + (term if j % 2 == 0 else -term)
    return acc


def _recip(x: Laurent) -> Laurent:
    try:
        return x.reciprocal()
    except PrecisionError:
        return x.reciprocal(floor=-int(x.deg) - 24)


def morse_normal_form(phi: TruncSeries
                      ) -> tuple[list[TruncSeries], list[Laurent], Laurent]:
    """Substitution u = Phi(v) with phi(Phi(v)) = phi(0) + sum lam_i v_i^2
    through the truncation order.

    Needs a vanishing linear part and every higher coefficient no larger
    than the smallest diagonalized quadratic coefficient, so the shears stay
    integral and measure preserving on the unit ball.
    """
    from .quadform import QuadForm

    q, d, order = phi.q, phi.nvars, phi.order
    for i in range(d):
        e = tuple(1 if j == i else 0 for j in range(d))
        if not phi.coeff(e).known_zero():
            raise ValueError("linear part must vanish at the expansion point")
    F = Fq(q)
    half = F.inv(2)
    # quadratic part -> symmetric matrix
    H = [[Laurent.zero(q) for _ in range(d)] for _ in range(d)]
    for e, c in phi.homogeneous(2).items():
        idx = [i for i, n in enumerate(e) for _ in range(n)]
        i, j = idx[0], idx[1]
        if i == j:
            H[i][i] = H[i][i] + c
        else:
            H[i][j] = H[i][j] + c * half
            H[j][i] = H[j][i] + c * half
    carrier = QuadForm.diagonal(q, [1] * d)
    U, lams = carrier.diagonalize_oinf(H)
    maps = [sum((TruncSeries.var(q, d, order, j) * U[i][j] for j in range(d)),
                TruncSeries(q, d, order, {}))
            for i in range(d)]
    cur = phi.substitute(maps)
    inv2lam = [_recip(2 * l) for l in lams]
    for n in range(3, order + 1):
        for _ in range(order + 1):  # safety sweep; one pass should clear n
            targets = {e: c for e, c in cur.homogeneous(n).items()
                       if not c.known_zero()}
            if not targets:
                break
            shear = [TruncSeries.var(q, d, order, i) for i in range(d)]
            for e, c in targets.items():
                i = next(i for i, ni in enumerate(e) if ni)
                if int(c.deg) > int(lams[i].deg):
                    raise ValueError(
                        "phase is not dominated by its quadratic part")
                rest = tuple(ni - (1 if j == i else 0)
                             for j, ni in enumerate(e))
                mono = TruncSeries(q, d, order, {rest: c * inv2lam[i]})
                shear[i] = shear[i] - mono
            maps = [m.substitute(shear) for m in maps]
            cur = cur.substitute(shear)
    leftover = {e: c for nn in range(3, order + 1)
                for e, c in cur.homogeneous(nn).items() if not c.known_zero()}
    if leftover:
        raise ValueError("normal form did not terminate")
    return maps, lams, phi.constant_term()


def stationary_phase_closed(phi: TruncSeries) -> Cyclo:
    """integral over T^d of psi(phi(u)) du for a phase whose only critical
    point in the ball is the origin: psi(phi(0)) times the Gauss factors of
    the diagonalized quadratic part."""
    from .quadform import QuadForm

    q, d = phi.q, phi.nvars
    for i in range(d):
        e = tuple(1 if j == i else 0 for j in range(d))
        if not phi.coeff(e).known_zero():
            raise ValueError("linear part must vanish")
    F = Fq(q)
    half = F.inv(2)
    H = [[Laurent.zero(q) for _ in range(d)] for _ in range(d)]
    for e, c in phi.homogeneous(2).items():
        idx = [i for i, n in enumerate(e) for _ in range(n)]
        i, j = idx[0], idx[1]
        if i == j:
            H[i][i] = H[i][i] + c
        else:
            H[i][j] = H[i][j] + c * half
            H[j][i] = H[j][i] + c * half
    carrier = QuadForm.diagonal(q, [1] * d)
    _, lams = carrier.diagonalize_oinf(H)
    return phi.constant_term().psi() * gauss_product_closed(lams)


def stationary_phase_direct(phi: TruncSeries, scale: int | None = None) -> Cyclo:
    q, d = phi.q, phi.nvars
    if scale is None:
        # the constant term never moves, so it does not constrain the grid
        top = max((int(c.deg) for e, c in phi.terms.items()
                   if sum(e) >= 1 and not c.known_zero()), default=0)
        scale = -top - 1 if top >= 0 else -1
    return integrate_unit_ball(q, d, scale,
                               lambda u: phi.evaluate(u).psi())
