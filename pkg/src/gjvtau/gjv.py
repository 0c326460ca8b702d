"""Tau assemblies, the triangular T-basis, and intersection-number extraction.

Two independent routes build the same tau: a closed-form operator exponential
acting on c(u) + q_1/u, and the transposition-count generating series pushed
through the u-weighted change of variables with a triangular solve for G.
Each route certifies a region of (weight, u-exponent) pairs; every equality
is asserted coefficient by coefficient where both certificates overlap.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from math import comb, factorial, prod

from .exactalg import (
    FamilyError,
    Rat,
    TruncatedSeries,
    UPoly,
    band_for_weight,
    mono,
    mono_key,
    mono_str,
    mono_var,
    mono_weight,
    substitute_linear,
)
from .hurwitz import (
    DCAP_DEFAULT,
    HurwitzIndex,
    cutjoin_series,
    extract_hurwitz,
    hurwitz_number,
)
from .operators import (
    CutJoin,
    Lambda,
    OperatorExponential,
    Sum,
    exponential_apply,
    scaled,
)
from .report import CheckReport, residual_report

_U = UPoly.u()
_U_INV = UPoly.u(-1)


def _clip_u_above(s: TruncatedSeries, hi: int) -> TruncatedSeries:
    """Drop u-exponents above hi and narrow the band accordingly."""
    out = s.map_coeffs(lambda c: c.clip_above(hi)).with_band(s.umin, hi)
    u_hi = hi if s.u_hi is None else min(s.u_hi, hi)
    return out.with_u_hi(u_hi)


# ---------------------------------------------------------------------------
# Change of variables between the p- and q-families
# ---------------------------------------------------------------------------


def change_of_variables(
    s: TruncatedSeries,
    W: int | None = None,
    *,
    umin: int | None = None,
    umax: int | None = None,
) -> TruncatedSeries:
    """p_b -> sum_{i>=b} u^-i (-1)^(i-b) C(i-1, b-1) q_i, truncated at W.

    Exact on the truncation: every image term has weight >= b, so dropped
    source monomials only touch weights beyond W.  beta is already carried
    as u^2 in the coefficients, so no rewriting is needed here.
    """
    if s.family != "p":
        raise FamilyError("change of variables expects a p-family series")
    W = s.W if W is None else W
    lo, hi = band_for_weight(W)
    mn = min((c.min_exp() for c in s.terms.values()), default=0)
    mx = max((c.max_exp() for c in s.terms.values()), default=0)
    lo = min(lo, mn - W) if umin is None else umin
    hi = max(hi, mx) if umax is None else umax
    rule = {
        b: TruncatedSeries(
            "q",
            W,
            {
                mono_var(i): UPoly.u(-i, (-1) ** (i - b) * comb(i - 1, b - 1))
                for i in range(b, W + 1)
            },
            umin=lo,
            umax=hi,
        )
        for b in range(1, W + 1)
    }
    return substitute_linear(s, rule, W=W, umin=lo, umax=hi)


def inverse_change_of_variables(
    s: TruncatedSeries,
    W: int | None = None,
    *,
    umin: int | None = None,
    umax: int | None = None,
) -> TruncatedSeries:
    """q_b -> u^b sum_{i>=b} C(i-1, b-1) p_i; exact inverse up to weight W."""
    if s.family != "q":
        raise FamilyError("inverse change of variables expects a q-family series")
    W = s.W if W is None else W
    lo, hi = band_for_weight(W)
    mn = min((c.min_exp() for c in s.terms.values()), default=0)
    mx = max((c.max_exp() for c in s.terms.values()), default=0)
    lo = min(lo, mn) if umin is None else umin
    hi = max(hi, mx + W) if umax is None else umax
    rule = {
        b: TruncatedSeries(
            "p",
            W,
            {mono_var(i): UPoly.u(b, comb(i - 1, b - 1)) for i in range(b, W + 1)},
            umin=lo,
            umax=hi,
        )
        for b in range(1, W + 1)
    }
    return substitute_linear(s, rule, W=W, umin=lo, umax=hi)


# ---------------------------------------------------------------------------
# T-basis and the two tau assemblies
# ---------------------------------------------------------------------------


def build_tbasis(K: int, W: int) -> list[TruncatedSeries]:
    """T_0 = q_1, T_{k+1} = (u*Lambda_0 + Lambda_1) T_k, up to index K."""
    if K + 1 > W:
        raise ValueError("need K + 1 <= W so the leading term stays in truncation")
    step = Sum(scaled(Lambda(0), _U), Lambda(1))
    basis = [TruncatedSeries.variable("q", W, 1)]
    for _ in range(K):
        basis.append(step.apply(basis[-1]))
    return basis


def assemble_tau_exponential(
    c: UPoly,
    W: int,
    *,
    umin: int | None = None,
    umax: int | None = None,
) -> TruncatedSeries:
    """exp(M2 + 2u*M1 + u^2*M0) applied to c(u) + q_1/u.

    Every summand raises weight + u-exponent by exactly 2 and lowers neither,
    so the expansion terminates inside the weight x band box and the top of
    the band is clipped (recorded in u_hi).
    """
    lo, hi = band_for_weight(W)
    if c:
        lo, hi = min(lo, c.min_exp()), max(hi, c.max_exp())
    lo = lo if umin is None else umin
    hi = hi if umax is None else umax
    seed = TruncatedSeries("q", W, {mono_var(1): _U_INV}, umin=lo, umax=hi)
    if c:
        seed = seed + TruncatedSeries.const("q", W, c, umin=lo, umax=hi)
    mixed = Sum(
        CutJoin(2),
        scaled(CutJoin(1), UPoly.u(1, 2)),
        scaled(CutJoin(0), UPoly.u(2)),
    )
    return exponential_apply(OperatorExponential(mixed), seed)


def assemble_tau_from_g(
    c: UPoly, G: TruncatedSeries, W: int | None = None
) -> TruncatedSeries:
    """c + (q_1 + q_1 q_2)/u + q_1^2 + (Lambda_0 + Lambda_1/u)^2 G."""
    W = G.W if W is None else W
    lo = min(G.umin, -1, c.min_exp() if c else 0)
    hi = max(G.umax, 0, c.max_exp() if c else 0)
    g = G.with_band(lo, hi)
    head = TruncatedSeries(
        "q",
        W,
        {
            mono_var(1): _U_INV,
            mono((1, 1), (2, 1)): _U_INV,
            mono((1, 2)): UPoly.const(1),
        },
        umin=lo,
        umax=hi,
    )
    if c:
        head = head + TruncatedSeries.const("q", W, c, umin=lo, umax=hi)
    square = Sum(Lambda(0), scaled(Lambda(1), _U_INV))
    return head + square.apply(square.apply(g))


def extract_G(W: int, Mmax: int) -> TruncatedSeries:
    """Invert (Lambda_0 + Lambda_1/u)^2 against the transformed count series.

    The solve runs weight layer by weight layer: Lambda_0^2 scales weight w by
    w^2 and Lambda_1 strictly raises weight, so each layer is determined by
    the two below it.  Entries are complete wherever weight + u-exponent
    <= 2*Mmax (both the source layers and Lambda_1/u preserve that diagonal);
    the flat u_hi = 2*Mmax - W recorded on the result is the safe minimum
    over all weights.
    """
    X = change_of_variables(cutjoin_series(W, Mmax), W)
    head = TruncatedSeries(
        "q",
        W,
        {
            mono_var(1): _U_INV,
            mono((1, 1), (2, 1)): _U_INV,
            mono((1, 2)): UPoly.const(1),
        },
        umin=X.umin,
        umax=X.umax,
    )
    X = X - head
    if X.weight_slice(0):
        raise ArithmeticError("weight-0 component left over; cannot invert on it")
    raise_w = scaled(Lambda(1), _U_INV)
    G = TruncatedSeries.zero("q", W, umin=X.umin, umax=X.umax)
    prev = prev2 = G
    for w in range(1, W + 1):
        rhs = X.weight_slice(w)
        if prev:
            rhs = rhs - raise_w.apply(prev).scale(Fraction(2 * w - 1))
        if prev2:
            rhs = rhs - raise_w.apply(raise_w.apply(prev2))
        layer = rhs.scale(Fraction(1, w * w))
        G = G + layer
        prev2, prev = prev, layer
    return G.with_reliable(W).with_u_hi(X.u_hi)


def verify_tau_routes(
    c: UPoly, W: int, *, G: TruncatedSeries | None = None
) -> CheckReport:
    """Exact per-coefficient equality of the two tau assemblies at weight W.

    With Mmax = W + 1 the G-route is complete on weight + u-exponent
    <= 2W + 2, which covers the whole default band box {w <= W, e <= W+2};
    clipping it to that band makes both routes exact on everything stored.
    """
    if G is None:
        G = extract_G(W, Mmax=W + 1)
    _, hi = band_for_weight(W)
    t1 = _clip_u_above(assemble_tau_from_g(c, G), hi)
    t2 = assemble_tau_exponential(c, W)
    return residual_report(
        "tau_routes", t1 - t2, reliable=W, detail={"c": str(c), "W": W}
    )


# ---------------------------------------------------------------------------
# Intersection numbers, two extraction routes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IntersectionNumber:
    """<lambda_{2j} tau_{d_1} ... tau_{d_n}> with sorted degree multiset."""

    j: int
    degrees: tuple[int, ...]
    value: Rat

    def __post_init__(self):
        if self.j < 0:
            raise ValueError("lambda-index must be >= 0")
        degrees = tuple(sorted(self.degrees))
        if not degrees or any(d < 0 for d in degrees):
            raise ValueError("degrees must be a nonempty tuple of ints >= 0")
        object.__setattr__(self, "degrees", degrees)
        num = 2 * self.j + sum(degrees) + 3 - len(degrees)
        if num % 4:
            raise ValueError(
                f"no integer genus for j={self.j}, degrees={degrees}"
            )
        if num < 0:
            raise ValueError("negative genus")

    @property
    def n(self) -> int:
        return len(self.degrees)

    @property
    def g(self) -> int:
        return (2 * self.j + sum(self.degrees) + 3 - self.n) // 4

    def key(self) -> tuple[int, tuple[int, ...]]:
        return (self.j, self.degrees)

    def to_json_obj(self) -> dict:
        return {
            "degrees": list(self.degrees),
            "g": self.g,
            "j": self.j,
            "value": str(self.value),
        }


def _record_sort_key(r: IntersectionNumber) -> tuple:
    return (2 * r.j + sum(r.degrees), r.n, r.j, r.degrees)


def extract_intersections_tbasis(
    G: TruncatedSeries, K: int | None = None, *, emit_cap: int | None = None
) -> list[IntersectionNumber]:
    """Greedy triangular reduction of G against T-monomials.

    Needs G from extract_G(W, Mmax) with 2*Mmax >= W + 1: an emitted record
    reads the u^(2j+1) layer of a weight-w coefficient with 2j + w <= W, and
    those entries are complete once weight + u-exponent <= 2*Mmax.
    """
    W = G.W
    K = W - 1 if K is None else K
    emit_cap = G.reliable if emit_cap is None else min(emit_cap, G.reliable)
    basis = build_tbasis(W - 1, W)
    residue = G
    records: list[IntersectionNumber] = []
    while residue:
        m, coef = max(residue.terms.items(), key=lambda mc: mono_key(mc[0]))
        ks = tuple(sorted(i - 1 for i, e in m for _ in range(e)))
        lead = prod(factorial(k) for k in ks)
        c_k = coef.scale(Fraction(1, lead))
        block = TruncatedSeries.const("q", W, UPoly.const(1),
                                      umin=G.umin, umax=G.umax)
        for k in ks:
            block = block.mul(basis[k], umin=G.umin, umax=G.umax)
        residue = residue - block.scale(c_k)
        mults: dict[int, int] = {}
        for k in ks:
            mults[k] = mults.get(k, 0) + 1
        aut = prod(factorial(r) for r in mults.values())
        for exp, val in c_k.terms:
            # only layers inside the emit region are certified; beyond it the
            # coefficients may be truncation artifacts and are dropped
            if exp + mono_weight(m) - 1 > emit_cap:
                continue
            if exp < 1 or exp % 2 == 0:
                raise ArithmeticError(
                    f"residue not expressible in T-monomials: {mono_str(m)} "
                    f"carries u^{exp}"
                )
            j = (exp - 1) // 2
            if any(k > K for k in ks):
                continue
            records.append(IntersectionNumber(j, ks, (-1) ** j * val * aut))
    return sorted(records, key=_record_sort_key)


def _partitions_padded(total: int, n: int) -> list[tuple[int, ...]]:
    """Degree multisets: n nonnegative ints summing to total, sorted."""
    out: set[tuple[int, ...]] = set()

    def gen(rest: int, slots: int, cap: int, acc: tuple[int, ...]):
        if slots == 0:
            if rest == 0:
                out.add(tuple(sorted(acc)))
            return
        for d in range(min(rest, cap), -1, -1):
            gen(rest - d, slots - 1, d, acc + (d,))

    gen(total, n, total, ())
    return sorted(out)


def _monomial_symmetric(lam: tuple[int, ...], b: tuple[int, ...]) -> Rat:
    return Fraction(
        sum(
            prod(bi**d for bi, d in zip(b, perm))
            for perm in set(itertools.permutations(lam))
        )
    )


def hurwitz_grid(
    g: int,
    n: int,
    *,
    dmax: int = DCAP_DEFAULT,
    brute_cap: int = 5,
    table: dict | None = None,
) -> dict[tuple[int, tuple[int, ...]], Rat]:
    """Counts for every nondecreasing profile of length n with sum <= dmax.

    Degrees above brute_cap come from the cut-and-join series instead of the
    factorisation count; the overlap region is asserted equal in the tests.
    """
    out: dict[tuple[int, tuple[int, ...]], Rat] = {}
    series: TruncatedSeries | None = None
    m = 2 * g - 1 + n
    for parts in itertools.combinations_with_replacement(range(1, dmax + 1), n):
        if sum(parts) > dmax:
            continue
        idx = HurwitzIndex(g, parts)
        if idx.d <= brute_cap:
            out[idx.key()] = hurwitz_number(idx, table)
        else:
            if series is None:
                series = cutjoin_series(dmax, m)
            out[idx.key()] = extract_hurwitz(series, idx).h
    return out


def extract_intersections_polyfit(
    g: int,
    n: int,
    hvalues: dict[tuple[int, tuple[int, ...]], Rat] | None = None,
    *,
    dmax: int = DCAP_DEFAULT,
) -> list[IntersectionNumber]:
    """Solve for the numbers from counts on a profile grid, exactly.

    h_{g,b} / (d * m!) is a polynomial in b with homogeneous layers of degree
    4g - 3 + n - 2j carrying sign (-1)^j; the unknowns are its coefficients
    on monomial symmetric functions.  The system must be uniquely solvable
    and exactly consistent, anything else is reported, not patched.
    """
    D = 4 * g - 3 + n
    if D < 0:
        return []
    if hvalues is None:
        hvalues = hurwitz_grid(g, n, dmax=dmax)
    unknowns: list[tuple[int, tuple[int, ...]]] = []
    for j in range(g + 1):
        if D - 2 * j < 0:
            break
        unknowns.extend((j, lam) for lam in _partitions_padded(D - 2 * j, n))
    m = 2 * g - 1 + n
    rows: list[tuple[tuple[int, ...], list[Rat], Rat]] = []
    for parts in itertools.combinations_with_replacement(range(1, dmax + 1), n):
        if sum(parts) > dmax:
            continue
        h = hvalues.get((g, parts))
        if h is None:
            raise KeyError(f"missing count for g={g}, profile {parts}")
        coeffs = [
            (-1) ** j * _monomial_symmetric(lam, parts) for j, lam in unknowns
        ]
        rows.append((parts, coeffs, h / (sum(parts) * factorial(m))))
    work = [coeffs + [rhs] for _, coeffs, rhs in rows]
    ncols = len(unknowns)
    for col in range(ncols):
        hit = next((i for i in range(col, len(work)) if work[i][col]), None)
        if hit is None:
            raise ValueError(
                f"underdetermined grid for g={g}, n={n}: no pivot in column {col}"
            )
        work[col], work[hit] = work[hit], work[col]
        inv = 1 / work[col][col]
        work[col] = [x * inv for x in work[col]]
        for i in range(len(work)):
            if i != col and work[i][col]:
                f = work[i][col]
                work[i] = [a - f * b for a, b in zip(work[i], work[col])]
    solution = {unknowns[c]: work[c][-1] for c in range(ncols)}
    for parts, coeffs, rhs in rows:
        lhs = sum(cf * solution[u] for cf, u in zip(coeffs, unknowns))
        if lhs != rhs:
            raise ValueError(
                f"inconsistent system at profile {parts}: fit gives {lhs}, "
                f"counts give {rhs}"
            )
    return sorted(
        (IntersectionNumber(j, lam, v) for (j, lam), v in solution.items()),
        key=_record_sort_key,
    )


# ---------------------------------------------------------------------------
# F and its identities
# ---------------------------------------------------------------------------


def _exp_join(s: TruncatedSeries) -> TruncatedSeries:
    return exponential_apply(OperatorExponential(CutJoin(2)), s)


def exp_join_of_q1(W: int) -> TruncatedSeries:
    """exp(M2) q_1 at truncation W; the right-hand side of the F identities."""
    return _exp_join(TruncatedSeries.variable("q", W, 1))


def extract_F(records, W: int) -> TruncatedSeries:
    """Assemble F from the j = 0 records: tau_d becomes d! * q_{d+1}.

    The term for a degree multiset {d^k_d} is value * prod (d!)^{k_d} / k_d!
    on prod q_{d+1}^{k_d}; weights above W are skipped.
    """
    terms: dict = {}
    for rec in records:
        if rec.j != 0:
            continue
        w = sum(d + 1 for d in rec.degrees)
        if w > W:
            continue
        mults: dict[int, int] = {}
        for d in rec.degrees:
            mults[d] = mults.get(d, 0) + 1
        coef = rec.value * prod(
            Fraction(factorial(d) ** k, factorial(k)) for d, k in mults.items()
        )
        m = mono(*((d + 1, k) for d, k in mults.items()))
        cur = terms.get(m)
        terms[m] = (cur + UPoly.const(coef)) if cur else UPoly.const(coef)
    return TruncatedSeries("q", W, terms)


def verify_string(F: TruncatedSeries) -> CheckReport:
    """dF/dq_1 = Lambda_1 F + q_1^2 / 2, to reliable weight W - 1."""
    half_sq = TruncatedSeries.monomial(
        F.family, F.W, mono((1, 2)), UPoly.const(Fraction(1, 2)),
        umin=F.umin, umax=F.umax,
    )
    residual = F.partial(1) - Lambda(1).apply(F) - half_sq
    return residual_report("string_equation", residual, detail={"W": F.W})


def verify_lambda_square(F: TruncatedSeries) -> CheckReport:
    """Lambda_1^2 F + q_1 + q_1 q_2 = exp(M2) q_1."""
    head = TruncatedSeries(
        F.family, F.W, {mono_var(1): UPoly.const(1),
                        mono((1, 1), (2, 1)): UPoly.const(1)},
        umin=F.umin, umax=F.umax,
    )
    residual = Lambda(1).apply(Lambda(1).apply(F)) + head - exp_join_of_q1(F.W)
    return residual_report("lambda_square", residual, detail={"W": F.W})


def verify_second_derivative(F: TruncatedSeries) -> CheckReport:
    """d^2 F / dq_1^2 = exp(M2) q_1, to reliable weight W - 2."""
    residual = F.partial(1).partial(1) - exp_join_of_q1(F.W)
    return residual_report("q1_second_derivative", residual, detail={"W": F.W})


def intersection_F(W: int, *, Mmax: int | None = None) -> TruncatedSeries:
    """F to weight W via the count series, the G solve and the T-reduction."""
    if Mmax is None:
        Mmax = W // 2 + 1  # smallest order making every emitted record exact
    records = extract_intersections_tbasis(extract_G(W, Mmax))
    return extract_F(records, W)


def verify_proposition(n: int, W: int) -> CheckReport:
    """n * d/dq_n exp(M2) q_1 = Lambda_{2-n} exp(M2) q_1 + exp(M2) q_1^{n-1}.

    Reported to the reliable weight of the n-th derivative, W - n.  The
    n = 1 case carries the string equation's content, n = 2 the dilaton one.
    """
    if n < 1:
        raise ValueError("need n >= 1")
    if W < n + 2:
        raise ValueError("need W >= n + 2 to see anything")
    E = exp_join_of_q1(W)
    power = TruncatedSeries.monomial(
        "q", W, mono((1, n - 1)) if n > 1 else (), UPoly.const(1)
    )
    lhs = E.partial(n).scale(n)
    rhs = Lambda(2 - n).apply(E) + _exp_join(power)
    return residual_report(
        f"proposition_n{n}", lhs - rhs, detail={"n": n, "W": W}
    )
