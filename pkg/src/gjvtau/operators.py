"""Weight-graded differential operators on :class:`TruncatedSeries`.

Operators are immutable AST nodes (single-variable derivative, the lowering
family Lambda(a), the three cut-and-join operators, scalar multiplication by a
Laurent polynomial in u, plus Sum/Compose).  Application streams term by term:
for every monomial we enumerate the finitely many index pairs that act
nontrivially, so no infinite operator sum is ever materialized.

Every node declares its weight-shift and u-shift envelopes.  Application
propagates the reliability metadata of the series: an operator whose minimum
weight shift is negative (a derivative) lowers the weight up to which the
result is exact, and a scalar with negative u-powers lowers ``u_hi``.

Operator equality is extensional: two operators are considered equal at
truncation W iff their actions agree on every monomial of weight <= W,
compared over the common reliable region.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from math import comb, factorial
from typing import Callable

from gjvtau.exactalg import (
    Monomial,
    Rat,
    TruncatedSeries,
    UPoly,
    mono,
    mono_div_var,
    mono_exp,
    mono_mul,
    mono_var,
    mono_weight,
    monomials_up_to_weight,
)

Terms = dict[Monomial, UPoly]


class OperatorGradingError(ValueError):
    """An operator exponential cannot be truncated soundly as requested."""


def _acc(out: Terms, m: Monomial, c: UPoly) -> None:
    if c:
        prev = out.get(m)
        s = c if prev is None else prev + c
        if s:
            out[m] = s
        elif prev is not None:
            del out[m]


class Operator:
    """Base class; subclasses implement act_terms and the shift envelopes."""

    def act_terms(self, terms: Terms, W: int) -> Terms:
        raise NotImplementedError

    def weight_shift(self) -> tuple[int, int]:
        """(min, max) weight shift over all summands."""
        raise NotImplementedError

    def u_shift(self) -> tuple[int, int]:
        raise NotImplementedError

    def to_json_obj(self) -> dict:
        raise NotImplementedError

    def apply(self, s: TruncatedSeries) -> TruncatedSeries:
        out = self.act_terms(s.terms, s.W)
        wlo, _ = self.weight_shift()
        ulo, _ = self.u_shift()
        u_hi = None if s.u_hi is None else s.u_hi + ulo
        return TruncatedSeries(
            s.family, s.W, out, umin=s.umin, umax=s.umax,
            reliable=s.reliable + wlo, u_hi=u_hi,
        )

    def __call__(self, s: TruncatedSeries) -> TruncatedSeries:
        return self.apply(s)


@dataclass(frozen=True)
class Partial(Operator):
    """d/dx_n; weight shift -n."""

    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("derivative index must be >= 1")

    def act_terms(self, terms: Terms, W: int) -> Terms:
        out: Terms = {}
        for m, c in terms.items():
            e = mono_exp(m, self.n)
            if e:
                _acc(out, mono_div_var(m, self.n), c.scale(Fraction(e)))
        return out

    def weight_shift(self):
        return (-self.n, -self.n)

    def u_shift(self):
        return (0, 0)

    def to_json_obj(self):
        return {"kind": "Partial", "n": self.n}


@dataclass(frozen=True)
class Lambda(Operator):
    """Sum_i x_{i+a} * i * d/dx_i over i >= 1 with i + a >= 1; requires a <= 1.

    a = 0 is the weight (Euler) operator, a = 1 raises every index by one.
    """

    a: int

    def __post_init__(self):
        if self.a > 1:
            raise ValueError("index shift must be <= 1")

    def act_terms(self, terms: Terms, W: int) -> Terms:
        out: Terms = {}
        for m, c in terms.items():
            w = mono_weight(m)
            if w + self.a > W:
                continue
            for v, e in m:
                t = v + self.a
                if t >= 1:
                    _acc(out, mono_mul(mono_div_var(m, v), mono_var(t)),
                         c.scale(Fraction(v * e)))
        return out

    def weight_shift(self):
        return (self.a, self.a)

    def u_shift(self):
        return (0, 0)

    def to_json_obj(self):
        return {"kind": "Lambda", "a": self.a}


@dataclass(frozen=True)
class CutPart(Operator):
    """First (two-x, one-derivative) sum of the cut-and-join operator:
    (1/2) Sum_{i,j>=1} x_i x_j (i+j-k) d/dx_{i+j-k}."""

    k: int

    def act_terms(self, terms: Terms, W: int) -> Terms:
        out: Terms = {}
        for m, c in terms.items():
            if mono_weight(m) + self.k > W:
                continue
            for v, e in m:
                # derivative slot v, replaced by all ordered (i, j), i+j = v+k
                base = mono_div_var(m, v)
                f = c.scale(Fraction(v * e, 2))
                for i in range(1, v + self.k):
                    j = v + self.k - i
                    _acc(out, mono_mul(base, mono((i, 1), (j, 1))), f)
        return out

    def weight_shift(self):
        return (self.k, self.k)

    def u_shift(self):
        return (0, 0)

    def to_json_obj(self):
        return {"kind": "CutPart", "k": self.k}


@dataclass(frozen=True)
class JoinPart(Operator):
    """Second (one-x, two-derivative) sum of the cut-and-join operator:
    (1/2) Sum_{i,j>=1} x_{i+j+k} * ij * d2/dx_i dx_j."""

    k: int

    def act_terms(self, terms: Terms, W: int) -> Terms:
        out: Terms = {}
        for m, c in terms.items():
            if mono_weight(m) + self.k > W:
                continue
            items = list(m)
            for vi, ei in items:
                for vj, ej in items:
                    n = ei * (ej - 1) if vi == vj else ei * ej
                    if n <= 0:
                        continue
                    base = mono_div_var(mono_div_var(m, vi), vj)
                    _acc(out, mono_mul(base, mono_var(vi + vj + self.k)),
                         c.scale(Fraction(vi * vj * n, 2)))
        return out

    def weight_shift(self):
        return (self.k, self.k)

    def u_shift(self):
        return (0, 0)

    def to_json_obj(self):
        return {"kind": "JoinPart", "k": self.k}


@dataclass(frozen=True)
class CutJoin(Operator):
    """Full cut-and-join operator of shift k in {0, 1, 2}."""

    k: int

    def __post_init__(self):
        if self.k not in (0, 1, 2):
            raise ValueError("cut-and-join shift must be 0, 1 or 2")

    def act_terms(self, terms: Terms, W: int) -> Terms:
        out = CutPart(self.k).act_terms(terms, W)
        for m, c in JoinPart(self.k).act_terms(terms, W).items():
            _acc(out, m, c)
        return out

    def weight_shift(self):
        return (self.k, self.k)

    def u_shift(self):
        return (0, 0)

    def to_json_obj(self):
        return {"kind": f"M{self.k}"}


@dataclass(frozen=True)
class ScalarMul(Operator):
    """Multiplication by a fixed Laurent polynomial in u."""

    c: UPoly

    def act_terms(self, terms: Terms, W: int) -> Terms:
        if not self.c:
            return {}
        return {m: v * self.c for m, v in terms.items()}

    def weight_shift(self):
        return (0, 0)

    def u_shift(self):
        if not self.c:
            return (0, 0)
        return (self.c.min_exp(), self.c.max_exp())

    def to_json_obj(self):
        return {"kind": "ScalarMul", "c": self.c.to_json()}


@dataclass(frozen=True)
class MulVar(Operator):
    """Multiplication by the variable x_i (used to spell out closed forms)."""

    i: int

    def act_terms(self, terms: Terms, W: int) -> Terms:
        out: Terms = {}
        for m, c in terms.items():
            if mono_weight(m) + self.i <= W:
                _acc(out, mono_mul(m, mono_var(self.i)), c)
        return out

    def weight_shift(self):
        return (self.i, self.i)

    def u_shift(self):
        return (0, 0)

    def to_json_obj(self):
        return {"kind": "MulVar", "i": self.i}


class Sum(Operator):
    """Pointwise sum of operators; the empty sum is the zero operator."""

    __slots__ = ("ops",)

    def __init__(self, *ops: Operator):
        object.__setattr__(self, "ops", tuple(ops))

    def act_terms(self, terms: Terms, W: int) -> Terms:
        out: Terms = {}
        for op in self.ops:
            for m, c in op.act_terms(terms, W).items():
                _acc(out, m, c)
        return out

    def apply(self, s: TruncatedSeries) -> TruncatedSeries:
        # summand by summand, so reliability folds through the series add
        out = TruncatedSeries.zero(s.family, s.W, umin=s.umin, umax=s.umax,
                                   reliable=s.reliable, u_hi=s.u_hi)
        for op in self.ops:
            out = out + op.apply(s)
        return out

    def weight_shift(self):
        if not self.ops:
            return (0, 0)
        los, his = zip(*(op.weight_shift() for op in self.ops))
        return (min(los), max(his))

    def u_shift(self):
        if not self.ops:
            return (0, 0)
        los, his = zip(*(op.u_shift() for op in self.ops))
        return (min(los), max(his))

    def to_json_obj(self):
        return {"kind": "Sum", "ops": [op.to_json_obj() for op in self.ops]}

    def __eq__(self, other):
        return isinstance(other, Sum) and self.ops == other.ops

    def __hash__(self):
        return hash(("Sum", self.ops))


class Compose(Operator):
    """Composition, applied right to left: Compose(a, b)(s) = a(b(s))."""

    __slots__ = ("ops",)

    def __init__(self, *ops: Operator):
        if not ops:
            raise ValueError("composition of zero operators is not defined")
        object.__setattr__(self, "ops", tuple(ops))

    def act_terms(self, terms: Terms, W: int) -> Terms:
        for op in reversed(self.ops):
            terms = op.act_terms(terms, W)
            if not terms:
                break
        return dict(terms)

    def apply(self, s: TruncatedSeries) -> TruncatedSeries:
        # step by step: an intermediate that leaves the truncation box and
        # would be pulled back by a later derivative must cost reliability,
        # which the total shift envelope cannot see
        for op in reversed(self.ops):
            s = op.apply(s)
        return s

    def weight_shift(self):
        lo = hi = 0
        for op in self.ops:
            l, h = op.weight_shift()
            lo, hi = lo + l, hi + h
        return (lo, hi)

    def u_shift(self):
        lo = hi = 0
        for op in self.ops:
            l, h = op.u_shift()
            lo, hi = lo + l, hi + h
        return (lo, hi)

    def to_json_obj(self):
        return {"kind": "Compose", "ops": [op.to_json_obj() for op in self.ops]}

    def __eq__(self, other):
        return isinstance(other, Compose) and self.ops == other.ops

    def __hash__(self):
        return hash(("Compose", self.ops))


ZERO_OP = Sum()


def scaled(op: Operator, c: Rat | int | UPoly) -> Operator:
    if not isinstance(c, UPoly):
        c = UPoly.const(Fraction(c))
    return Compose(ScalarMul(c), op)


def commutator(a: Operator, b: Operator) -> Operator:
    return Sum(Compose(a, b), scaled(Compose(b, a), -1))


def ops_equal(
    f: Callable[[TruncatedSeries], TruncatedSeries],
    g: Callable[[TruncatedSeries], TruncatedSeries],
    *,
    W: int,
    headroom: int = 0,
    family: str = "q",
    umin: int | None = None,
    umax: int | None = None,
) -> bool:
    """Extensional equality on every monomial of weight <= W, compared over
    the common reliable weight of the two results.

    headroom widens the internal truncation so that operators whose composites
    dip through derivatives still compare at full strength up to W: pass the
    largest single-step weight raise that precedes a derivative.
    """
    Wi = W + headroom
    for m in monomials_up_to_weight(W):
        s = TruncatedSeries.monomial(family, Wi, m, umin=umin, umax=umax)
        fa, fb = f(s), g(s)
        rel = min(fa.reliable, fb.reliable)
        if fa.up_to_weight(rel) != fb.up_to_weight(rel):
            return False
    return True


# ---------------------------------------------------------------------------
# Graded exponentials
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OperatorExponential:
    """exp(t * base) with an optional explicit order cap."""

    base: Operator
    t: UPoly | None = None
    cap: int | None = None

    def operator(self) -> Operator:
        if self.t is None:
            return self.base
        return scaled(self.base, self.t)


def _summands(op: Operator) -> list[Operator]:
    if isinstance(op, Sum):
        out: list[Operator] = []
        for o in op.ops:
            out.extend(_summands(o))
        return out
    return [op]


def exponential_apply(
    e: OperatorExponential | Operator,
    s: TruncatedSeries,
    *,
    max_order: int | None = None,
) -> TruncatedSeries:
    """Apply exp(op) to s, summing op^k(s)/k! until the term vanishes.

    Truncation is sound without an order cap in two gradings: every summand
    raises weight + u-degree by >= 1 while lowering neither (terms leave the
    finite weight x u-band box, and the high u side is clipped, recorded in
    u_hi), or every summand raises weight by >= 1 without raising u (terms
    leave through the weight ceiling).  Anything else needs max_order.
    """
    if isinstance(e, OperatorExponential):
        op = e.operator()
        if max_order is None:
            max_order = e.cap
    else:
        op = e
    parts = _summands(op)
    shifts = [(p.weight_shift(), p.u_shift()) for p in parts]
    clip = False
    if max_order is None:
        box = all(wl >= 0 and ul >= 0 and wl + ul >= 1 for (wl, _), (ul, _) in shifts)
        raising = all(wl >= 1 and uh <= 0 for (wl, _), (_, uh) in shifts)
        if not (box or raising):
            probe = op.apply(s)
            if probe.is_zero():
                return s
            raise OperatorGradingError(
                "exponential needs an explicit order cap: summand shifts "
                f"{shifts} give no sound truncation grading"
            )
        clip = box and any(uh > 0 for _, (_, uh) in shifts)
        cap = s.W + (s.umax - s.umin) + 2
    else:
        cap = max_order
    step_up = max((uh for _, (_, uh) in shifts), default=0)
    total = cur = s
    for k in range(1, cap + 1):
        if clip:
            wide = cur.with_band(s.umin, s.umax + step_up)
            nxt = op.apply(wide).scale(Fraction(1, k))
            nxt = nxt.map_coeffs(lambda c: c.clip_above(s.umax)).with_band(s.umin, s.umax)
        else:
            nxt = op.apply(cur).scale(Fraction(1, k))
        if nxt.is_zero():
            cur = nxt
            break
        total = total + nxt
        cur = nxt
    else:
        if max_order is None and not cur.is_zero():
            raise OperatorGradingError("exponential did not terminate within the box cap")
    wlo = min((wl for (wl, _), _ in shifts), default=0)
    rel = s.reliable if wlo >= 0 else s.reliable + wlo * cap
    u_hi = total.u_hi
    if clip:
        u_hi = s.umax if u_hi is None else min(u_hi, s.umax)
    return total.with_reliable(min(rel, total.reliable)).with_u_hi(u_hi)


def conjugate(
    e: OperatorExponential, a: Operator, *, W: int, depth_cap: int = 8
) -> Operator:
    """exp(-X) a exp(X) for X = t*base, as Sum_k (ad_X)^k(a) / k! where
    ad_X(y) = [y, X]; the chain must vanish extensionally within depth_cap."""
    x = e.operator()
    out: list[Operator] = [a]
    cur = a
    for k in range(1, depth_cap + 1):
        cur = commutator(cur, x)
        if ops_equal(cur, ZERO_OP, W=W, headroom=2):
            return Sum(*out)
        out.append(scaled(cur, Fraction(1, factorial(k))))
    raise OperatorGradingError(
        f"conjugation bracket chain did not vanish within depth {depth_cap}"
    )


# ---------------------------------------------------------------------------
# Linear part and the iterated-bracket machinery
# ---------------------------------------------------------------------------


def linear_part(op: Operator) -> Operator:
    """The two-x one-derivative sum of a cut-and-join operator.

    Adjudicated by machine check: of the two sums, only this one satisfies the
    closed form that iterated brackets against n*d/dx_n are required to
    reproduce (see bracket_closed_form and the tests), so it is the "linear
    part" in the sense that downstream derivations rely on.
    """
    if isinstance(op, CutJoin):
        return CutPart(op.k)
    raise ValueError("linear part is defined for cut-and-join operators only")


def n_partial(n: int) -> Operator:
    """n * d/dx_n, the basic block of the proposition machinery."""
    return scaled(Partial(n), n)


def bracket_closed_form(n: int, i: int, W: int) -> Operator:
    """Claimed closed form of the i-fold bracket of n*d/dx_n with the linear
    part of the shift-2 cut-and-join operator:

        prod_{j<i}(n-j) * Sum_{k_1..k_i >= 1} x_{k_1}..x_{k_i} * (K+n-2i) d/dx_{K+n-2i}

    with K = k_1+..+k_i, spelled out over all index tuples with K <= W (terms
    with larger K cannot act below the truncation).
    """
    pref = 1
    for j in range(i):
        pref *= n - j
    if pref == 0:
        return ZERO_OP
    parts: list[Operator] = []
    for ks in itertools.product(range(1, W + 1), repeat=i):
        K = sum(ks)
        idx = K + n - 2 * i
        if K > W or idx < 1:
            continue
        muls = [MulVar(k) for k in ks]
        parts.append(Compose(*muls, scaled(Partial(idx), pref * idx)))
    return Sum(*parts)


def iterated_bracket(n: int, r: int) -> Operator:
    """(ad M)^r (n d/dx_n) for M the shift-2 cut-and-join operator, with
    ad_M(y) = [y, M]; expanded binomially to keep the tree linear in r."""
    m2 = CutJoin(2)
    parts = []
    for a in range(r + 1):
        chain: list[Operator] = [ScalarMul(UPoly.const(Fraction((-1) ** a * comb(r, a) * n)))]
        chain += [m2] * a + [Partial(n)] + [m2] * (r - a)
        parts.append(Compose(*chain))
    return Sum(*parts)


def bracket_order_bound(n: int, W: int) -> int:
    """Largest r for which (ad M)^r(n d/dx_n) can act nontrivially at
    truncation W: the net weight shift is 2r - n and constants are killed."""
    return (W + n - 1) // 2


def o_operator(n: int, i: int, W: int) -> Operator:
    """O_i = exp(-ad M)(ad M)^i(n d/dx_n)/i!, truncated to the bracket orders
    that can act at weight <= W (sound, not an approximation)."""
    rmax = bracket_order_bound(n, W)
    parts = [
        scaled(iterated_bracket(n, i + k), Fraction((-1) ** k, factorial(k) * factorial(i)))
        for k in range(0, rmax - i + 1)
    ]
    return Sum(*parts)


def bracket_actions(n: int, s: TruncatedSeries, rmax: int) -> list[TruncatedSeries]:
    """[(ad M)^r(n d/dx_n)](s) for r = 0..rmax, via one shared cache of
    M^a (n d/dx_n (M^b s)) instead of 2^r bracket expansions."""
    m2 = CutJoin(2)
    powers = [s]
    for _ in range(rmax):
        powers.append(m2.apply(powers[-1]))
    table: dict[tuple[int, int], TruncatedSeries] = {}
    for b, p in enumerate(powers):
        cur = p.partial(n).scale(n)
        table[(0, b)] = cur
        for a in range(1, rmax - b + 1):
            cur = m2.apply(cur)
            table[(a, b)] = cur

    out = []
    for r in range(rmax + 1):
        acc = TruncatedSeries.zero(s.family, s.W, umin=s.umin, umax=s.umax)
        for a in range(r + 1):
            acc = acc + table[(a, r - a)].scale(Fraction((-1) ** a * comb(r, a)))
        out.append(acc)
    return out


def o_actions(n: int, s: TruncatedSeries, W_out: int) -> list[TruncatedSeries]:
    """[O_i](s) for i = 0..bracket_order_bound(n, W_out), each exact to the
    reliable weight it reports (truncated to W_out)."""
    rmax = bracket_order_bound(n, W_out)
    acts = bracket_actions(n, s, rmax)
    out = []
    for i in range(rmax + 1):
        acc = TruncatedSeries.zero(s.family, s.W, umin=s.umin, umax=s.umax)
        for k in range(rmax - i + 1):
            acc = acc + acts[i + k].scale(
                Fraction((-1) ** k, factorial(k) * factorial(i)))
        out.append(acc.truncate(W_out))
    return out


def verify_O_operators(n: int, W: int) -> dict[str, bool]:
    """Machine checks for the O-operator family at truncation W.

    Returns named booleans:
      * action_vanishes_off_peak: O_i applied to exp(M2)x1 is zero for every
        i not in {n-1, n} (all orders that can act at weight <= W);
      * penultimate_action: O_{n-1} exp(M2)x1 = n * exp(M2) x1^(n-1);
      * weighted_sum_is_bracket: Sum_i i*O_i = [n d/dx_n, M2] extensionally;
      * weighted_sum_is_lambda_shift: Sum_i i*O_i = n*Lambda(2-n)
        extensionally.  This is the form the derivation quotes; it is strictly
        weaker than the bracket form and fails for n >= 4, where the bracket
        picks up the two-derivative term (n/2) Sum_{i+j=n-2} ij d/dx_i d/dx_j.

    Actions are computed at internal truncation W + n so that the reported
    comparisons are exact through weight W despite the derivative dip.
    """
    m2 = CutJoin(2)
    Wi = W + n
    e_full = exponential_apply(m2, TruncatedSeries.variable("q", Wi, 1))
    acts = o_actions(n, e_full, W)

    vanish = True
    for i, act in enumerate(acts):
        if i in (n - 1, n):
            continue
        vanish = vanish and act.up_to_weight(act.reliable).is_zero()

    lhs = acts[n - 1]
    rhs = exponential_apply(
        m2, TruncatedSeries.monomial("q", W, mono_var(1, n - 1))
    ).scale(n)
    rel = min(lhs.reliable, rhs.reliable)
    penult = lhs.up_to_weight(rel) == rhs.up_to_weight(rel)

    # the weighted sum collapses order by order onto the single bracket, so
    # evaluate it through the same cached route on every basis monomial
    def sum_io(s: TruncatedSeries) -> TruncatedSeries:
        per = o_actions(n, s, W)
        out = TruncatedSeries.zero(s.family, s.W, umin=s.umin, umax=s.umax)
        for i, act in enumerate(per):
            if i:
                out = out + act.scale(i)
        return out

    bracket = commutator(n_partial(n), m2)
    return {
        "action_vanishes_off_peak": vanish,
        "penultimate_action": penult,
        "weighted_sum_is_bracket": ops_equal(sum_io, bracket, W=W, headroom=n),
        "weighted_sum_is_lambda_shift": ops_equal(
            sum_io, scaled(Lambda(2 - n), n), W=W, headroom=n),
    }


# ---------------------------------------------------------------------------
# Named identity suites
# ---------------------------------------------------------------------------


def verify_commutators(W: int) -> dict[str, bool]:
    """The bracket identities the conjugation trick rests on, extensionally."""
    l0, l1 = Lambda(0), Lambda(1)
    m0, m1, m2 = CutJoin(0), CutJoin(1), CutJoin(2)
    # headroom 2: the d/dx_1 bracket dips through a weight-2 raise
    return {
        "m0_l1_is_2m1": ops_equal(commutator(m0, l1), scaled(m1, 2), W=W, headroom=2),
        "m1_l1_is_m2": ops_equal(commutator(m1, l1), m2, W=W, headroom=2),
        "m2_l1_is_zero": ops_equal(commutator(m2, l1), ZERO_OP, W=W, headroom=2),
        "l0_l1_is_l1": ops_equal(commutator(l0, l1), l1, W=W, headroom=2),
        "d1_m2_is_l1": ops_equal(commutator(Partial(1), m2), l1, W=W, headroom=2),
        "m0_l0_is_zero": ops_equal(commutator(m0, l0), ZERO_OP, W=W, headroom=2),
    }


def verify_conjugations(W: int) -> dict[str, bool]:
    """exp(-L1/u) (.) exp(L1/u) moves u^2*M0 onto M2 + 2u*M1 + u^2*M0 and
    u*Lambda0 onto u*Lambda0 + Lambda1; checked both through the bracket
    chain and by direct three-step application to every basis monomial."""
    x = OperatorExponential(Lambda(1), UPoly.u(-1))
    xm = OperatorExponential(Lambda(1), UPoly.u(-1, -1))
    m0c = conjugate(x, scaled(CutJoin(0), UPoly.u(2)), W=W)
    l0c = conjugate(x, scaled(Lambda(0), UPoly.u(1)), W=W)
    target_m = Sum(scaled(CutJoin(0), UPoly.u(2)), scaled(CutJoin(1), UPoly.u(1, 2)),
                   CutJoin(2))
    target_l = Sum(scaled(Lambda(0), UPoly.u(1)), Lambda(1))

    def sandwich(op: Operator) -> Callable[[TruncatedSeries], TruncatedSeries]:
        def go(s: TruncatedSeries) -> TruncatedSeries:
            return exponential_apply(xm, op.apply(exponential_apply(x, s)))
        return go

    return {
        "conj_m0_chain": ops_equal(m0c, target_m, W=W),
        "conj_l0_chain": ops_equal(l0c, target_l, W=W),
        "conj_m0_sandwich": ops_equal(sandwich(scaled(CutJoin(0), UPoly.u(2))),
                                      target_m, W=W),
        "conj_l0_sandwich": ops_equal(sandwich(scaled(Lambda(0), UPoly.u(1))),
                                      target_l, W=W),
    }
