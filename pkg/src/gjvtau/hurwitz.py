"""Transposition-factorisation counts and the cut-and-join series.

The brute-force route fixes a base permutation and counts tuples of
transpositions whose product with it is a full cycle; the series route reads
the same numbers off exp(beta*M0) applied to sum(p_i).  Both normalisations
are frozen against the anchor values h_{0,(1)} = 1 and h_{0,(2)} = 1/2 and
must stay in exact agreement (the tests enforce this on a d <= 5 grid).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from math import factorial, prod
from pathlib import Path

from .exactalg import (
    Rat,
    TruncatedSeries,
    TruncationError,
    UPoly,
    UPOLY_ZERO,
    mono,
)
from .operators import CutJoin, OperatorExponential, exponential_apply

DCAP_DEFAULT = 6
DCAP_HARD = 7


@dataclass(frozen=True)
class HurwitzIndex:
    """Genus g and ramification profile ``parts`` over the marked point."""

    g: int
    parts: tuple[int, ...]

    def __post_init__(self):
        if self.g < 0:
            raise ValueError("genus must be >= 0")
        parts = tuple(sorted(self.parts))
        if not parts or any(b < 1 for b in parts):
            raise ValueError("profile parts must be positive integers")
        object.__setattr__(self, "parts", parts)
        if self.m < 0:
            raise ValueError("negative transposition count")

    @property
    def d(self) -> int:
        return sum(self.parts)

    @property
    def n(self) -> int:
        return len(self.parts)

    @property
    def m(self) -> int:
        # one full cycle over the second fixed point, so 2g - 1 + n simple
        # branch points close the Riemann-Hurwitz count
        return 2 * self.g - 1 + self.n

    def key(self) -> tuple[int, tuple[int, ...]]:
        return (self.g, self.parts)


@dataclass(frozen=True)
class HurwitzValue:
    index: HurwitzIndex
    h: Rat
    route: str = "bruteforce"

    def to_json_obj(self) -> dict:
        return {
            "g": self.index.g,
            "parts": list(self.index.parts),
            "h": str(self.h),
        }


def _cycle_type(perm: tuple[int, ...]) -> tuple[int, ...]:
    seen = [False] * len(perm)
    lens: list[int] = []
    for i in range(len(perm)):
        if seen[i]:
            continue
        j, size = i, 0
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            size += 1
        lens.append(size)
    return tuple(sorted(lens))


def _perm_of_type(parts: tuple[int, ...]) -> tuple[int, ...]:
    perm: list[int] = []
    base = 0
    for b in parts:
        perm.extend([base + (i + 1) % b for i in range(b)])
        base += b
    return tuple(perm)


def _count_factorisations(parts: tuple[int, ...], m: int) -> int:
    """Tuples (t_1..t_m) of transpositions with t_1...t_m*sigma a d-cycle."""
    d = sum(parts)
    swaps = [(a, b) for a in range(d) for b in range(a + 1, d)]
    memo: dict[tuple[tuple[int, ...], int], int] = {}

    def count(perm: tuple[int, ...], left: int) -> int:
        # a transposition moves the cycle count by exactly one, so the
        # distance to a single cycle prunes both by size and by parity
        need = len(_cycle_type(perm)) - 1
        if need > left or (left - need) % 2:
            return 0
        if left == 0:
            return 1
        key = (_cycle_type(perm), left)
        got = memo.get(key)
        if got is not None:
            return got
        total = 0
        for a, b in swaps:
            child = list(perm)
            for i, v in enumerate(perm):
                if v == a:
                    child[i] = b
                elif v == b:
                    child[i] = a
            total += count(tuple(child), left - 1)
        memo[key] = total
        return total

    return count(_perm_of_type(parts), m)


def hurwitz_bruteforce(idx: HurwitzIndex, *, dcap: int = DCAP_DEFAULT) -> HurwitzValue:
    """Count weighted covers with profile idx.parts over the marked point.

    The tuple count N is taken with one fixed base permutation; h is then
    N * |C(sigma)| / d! * |Aut(parts)|, which collapses to N / prod(parts).
    The normalisation was frozen empirically against the anchor identities
    (see the tests); do not retune it here.
    """
    if dcap > DCAP_HARD:
        raise ValueError(f"brute-force cap {dcap} exceeds hard limit {DCAP_HARD}")
    if idx.d > dcap:
        raise ValueError(f"degree {idx.d} over brute-force cap {dcap}")
    n = _count_factorisations(idx.parts, idx.m)
    return HurwitzValue(idx, Fraction(n, prod(idx.parts)))


def hurwitz_number(
    idx: HurwitzIndex,
    table: dict[tuple[int, tuple[int, ...]], Rat] | None = None,
    *,
    dcap: int = DCAP_DEFAULT,
) -> Rat:
    if table is not None:
        got = table.get(idx.key())
        if got is not None:
            return got
    h = hurwitz_bruteforce(idx, dcap=dcap).h
    if table is not None:
        table[idx.key()] = h
    return h


# ---------------------------------------------------------------------------
# Cache file (reused by the interpolation route and the CLI)
# ---------------------------------------------------------------------------


def load_hurwitz_cache(path: str | Path) -> dict[tuple[int, tuple[int, ...]], Rat]:
    p = Path(path)
    if not p.exists():
        return {}
    table: dict[tuple[int, tuple[int, ...]], Rat] = {}
    for rec in json.loads(p.read_text()):
        idx = HurwitzIndex(rec["g"], tuple(rec["parts"]))
        table[idx.key()] = Fraction(rec["h"])
    return table


def save_hurwitz_cache(
    path: str | Path, table: dict[tuple[int, tuple[int, ...]], Rat]
) -> None:
    recs = [
        HurwitzValue(HurwitzIndex(g, parts), h).to_json_obj()
        for (g, parts), h in sorted(table.items())
    ]
    Path(path).write_text(json.dumps(recs, sort_keys=True, separators=(",", ":")))


# ---------------------------------------------------------------------------
# Series route
# ---------------------------------------------------------------------------


def cutjoin_series(W: int, Mmax: int, c: UPoly = UPOLY_ZERO) -> TruncatedSeries:
    """c + sum_{k<=Mmax} beta^k M0^k (p_1+...+p_W) / k!, with beta kept as u^2."""
    if W < 1:
        raise ValueError("need W >= 1")
    if Mmax < 0:
        raise ValueError("need Mmax >= 0")
    umin = min(0, c.min_exp() if c else 0)
    umax = max(2 * Mmax, c.max_exp() if c else 0)
    seed = TruncatedSeries(
        "p",
        W,
        {mono((i, 1)): UPoly.const(1) for i in range(1, W + 1)},
        umin=umin,
        umax=umax,
    )
    if c:
        seed = seed + TruncatedSeries.const("p", W, c, umin=umin, umax=umax)
    e = OperatorExponential(CutJoin(0), UPoly.u(2))
    out = exponential_apply(e, seed, max_order=Mmax)
    # orders beyond Mmax are cut, so nothing above u^(2*Mmax) is trustworthy
    hi = 2 * Mmax if out.u_hi is None else min(out.u_hi, 2 * Mmax)
    return out.with_u_hi(hi)


def extract_hurwitz(series: TruncatedSeries, idx: HurwitzIndex) -> HurwitzValue:
    """Read h off the series: undo Lambda_0^2, then unscale by Aut, d and m!."""
    if series.family != "p":
        raise ValueError("expected a p-family series")
    d, m = idx.d, idx.m
    if series.u_hi is not None and 2 * m > series.u_hi:
        raise TruncationError(f"beta^{m} is beyond the series' trusted order")
    mults: dict[int, int] = {}
    for b in idx.parts:
        mults[b] = mults.get(b, 0) + 1
    coeff = series.coefficient_of(mono(*mults.items()))
    aut = prod(factorial(r) for r in mults.values())
    h = coeff.coeff(2 * m) / Fraction(d * d) * aut * d * factorial(m)
    return HurwitzValue(idx, h, route="cutjoin")


def h01_h02_closed_forms(
    W: int, *, dcap: int = DCAP_DEFAULT
) -> tuple[TruncatedSeries, TruncatedSeries]:
    """The two unstable legs of H, assembled from brute-force values.

    Coefficient of p_(b1..bn) * beta^m is h / (|Aut| * d * m!); the first
    series sits at beta^0, the second at beta^1 (kept as u^2).
    """
    if W < 2:
        raise ValueError("need W >= 2")
    h01: dict = {}
    for d in range(1, W + 1):
        h = hurwitz_number(HurwitzIndex(0, (d,)), dcap=dcap)
        h01[mono((d, 1))] = UPoly.const(h / d)
    h02: dict = {}
    for b1 in range(1, W):
        for b2 in range(b1, W - b1 + 1):
            h = hurwitz_number(HurwitzIndex(0, (b1, b2)), dcap=dcap)
            aut = 2 if b1 == b2 else 1
            m = mono((b1, 2)) if b1 == b2 else mono((b1, 1), (b2, 1))
            h02[m] = UPoly.u(2, h / (aut * (b1 + b2)))
    band = dict(umin=0, umax=2)
    return (
        TruncatedSeries("p", W, h01, **band),
        TruncatedSeries("p", W, h02, **band),
    )
