"""Exact weight-graded series algebra.

Everything downstream works over one concrete representation:

* coefficients are Laurent polynomials in a single parameter ``u`` with
  ``fractions.Fraction`` entries (:class:`UPoly`) -- no floating point anywhere;
* a monomial in the variables ``q_1, q_2, ...`` (or ``p_i``, ``t_i``) is a
  sorted tuple of ``(index, exponent)`` pairs, ``weight = sum(i * e)``;
* a :class:`TruncatedSeries` is a sparse ``monomial -> UPoly`` map truncated at
  a fixed total weight ``W``, tagged with the variable family so that ``q``-,
  ``p``- and ``t``-series can never be combined by accident.

Truncation discards weights above ``W`` silently (that is the ring we compute
in); the ``u``-exponent band, by contrast, is a hard error when exceeded,
because silently dropping ``u`` powers would corrupt the ``1/u`` structure the
downstream identities depend on.  Operations that *can* clip the band soundly
(graded exponentials) do so explicitly and record it in ``u_hi``.

Each series also carries ``reliable``: the weight up to which its entries are
known to be exact.  Operations that shift weight downward (derivatives by a
high-index variable) lower it; verification code compares series only up to the
minimum reliable weight of the operands.
"""

from __future__ import annotations

import json
import math
import re
from fractions import Fraction
from typing import Callable, Iterable, Iterator, Mapping

Rat = Fraction

FAMILIES = ("q", "p", "t")

# Band default: weight-W data in these pipelines never legitimately needs
# u-exponents outside [-(W+2), W+2] unless a caller widens on purpose.
BAND_MARGIN = 2


class FamilyError(ValueError):
    """Two different variable families were mixed."""


class UBandError(ArithmeticError):
    """A coefficient escaped the configured u-exponent band."""


class TruncationError(ValueError):
    """A query or operation reached beyond the truncation order."""


def band_for_weight(W: int) -> tuple[int, int]:
    return (-(W + BAND_MARGIN), W + BAND_MARGIN)


# ---------------------------------------------------------------------------
# Laurent polynomials in u
# ---------------------------------------------------------------------------

_UPOLY_TERM_RE = re.compile(
    r"""\s*(?P<sign>[+-])?\s*
        (?:
            (?P<coef>\d+(?:/\d+)?)\s*\*?\s*(?:u(?:\^(?P<exp1>-?\d+))?)?
          | u(?:\^(?P<exp2>-?\d+))?
        )\s*""",
    re.VERBOSE,
)


class UPoly:
    """Immutable Laurent polynomial in u over exact rationals.

    Stored as a tuple of (exponent, Fraction) pairs, ascending exponent, no
    zero entries.  Zero is the empty tuple.
    """

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[int, Rat] | Iterable[tuple[int, Rat]] = ()):
        if isinstance(terms, Mapping):
            items = terms.items()
        else:
            items = terms
        acc: dict[int, Rat] = {}
        for e, c in items:
            c = Fraction(c)
            if c:
                acc[e] = acc.get(e, Fraction(0)) + c
        object.__setattr__(
            self, "terms", tuple(sorted((e, c) for e, c in acc.items() if c))
        )

    def __setattr__(self, *a):  # pragma: no cover - immutability guard
        raise AttributeError("UPoly is immutable")

    # -- constructors -------------------------------------------------------

    @staticmethod
    def const(c: Rat | int | str) -> UPoly:
        return UPoly({0: Fraction(c)})

    @staticmethod
    def u(exp: int = 1, coef: Rat | int = 1) -> UPoly:
        return UPoly({exp: Fraction(coef)})

    @staticmethod
    def parse(text: str) -> UPoly:
        """Parse '2', 'u^-1+2', '3/2*u^2 - u', ...  Raises ValueError on junk."""
        text = text.strip()
        if not text:
            raise ValueError("empty UPoly literal")
        pos = 0
        acc: dict[int, Rat] = {}
        first = True
        while pos < len(text):
            m = _UPOLY_TERM_RE.match(text, pos)
            if not m or m.end() == pos:
                raise ValueError(f"cannot parse UPoly literal at: {text[pos:]!r}")
            sign = m.group("sign")
            if sign is None and not first:
                raise ValueError(f"missing +/- between terms in {text!r}")
            s = -1 if sign == "-" else 1
            coef = m.group("coef")
            has_u = ("u" in m.group(0)) or m.group("exp1") is not None
            exp_s = m.group("exp1") or m.group("exp2")
            c = Fraction(coef) if coef else Fraction(1)
            e = int(exp_s) if exp_s is not None else (1 if has_u else 0)
            if not has_u:
                e = 0
            acc[e] = acc.get(e, Fraction(0)) + s * c
            pos = m.end()
            first = False
        return UPoly(acc)

    # -- queries -------------------------------------------------------------

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __eq__(self, other) -> bool:
        return isinstance(other, UPoly) and self.terms == other.terms

    def __hash__(self) -> int:
        return hash(self.terms)

    def min_exp(self) -> int:
        if not self.terms:
            raise ValueError("zero UPoly has no exponents")
        return self.terms[0][0]

    def max_exp(self) -> int:
        if not self.terms:
            raise ValueError("zero UPoly has no exponents")
        return self.terms[-1][0]

    def coeff(self, exp: int) -> Rat:
        for e, c in self.terms:
            if e == exp:
                return c
        return Fraction(0)

    def is_const(self) -> bool:
        return not self.terms or self.terms == ((0, self.terms[0][1]),)

    # -- arithmetic ----------------------------------------------------------

    def __add__(self, other: UPoly) -> UPoly:
        acc = dict(self.terms)
        for e, c in other.terms:
            acc[e] = acc.get(e, Fraction(0)) + c
        return UPoly(acc)

    def __sub__(self, other: UPoly) -> UPoly:
        acc = dict(self.terms)
        for e, c in other.terms:
            acc[e] = acc.get(e, Fraction(0)) - c
        return UPoly(acc)

    def __neg__(self) -> UPoly:
        return UPoly({e: -c for e, c in self.terms})

    def __mul__(self, other: UPoly | Rat | int) -> UPoly:
        if isinstance(other, (Fraction, int)):
            return self.scale(Fraction(other))
        acc: dict[int, Rat] = {}
        for e1, c1 in self.terms:
            for e2, c2 in other.terms:
                e = e1 + e2
                acc[e] = acc.get(e, Fraction(0)) + c1 * c2
        return UPoly(acc)

    __rmul__ = __mul__

    def scale(self, c: Rat) -> UPoly:
        if not c:
            return UPoly()
        return UPoly({e: v * c for e, v in self.terms})

    def shift(self, k: int) -> UPoly:
        """Multiply by u^k."""
        return UPoly({e + k: c for e, c in self.terms})

    def clip_above(self, hi: int) -> UPoly:
        return UPoly({e: c for e, c in self.terms if e <= hi})

    def check_band(self, umin: int, umax: int) -> None:
        if self.terms and (self.terms[0][0] < umin or self.terms[-1][0] > umax):
            raise UBandError(
                f"u-exponent range [{self.terms[0][0]}, {self.terms[-1][0]}] "
                f"escapes band [{umin}, {umax}]"
            )

    # -- formatting ----------------------------------------------------------

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for e, c in reversed(self.terms):
            if e == 0:
                body = str(c)
            else:
                ustr = "u" if e == 1 else f"u^{e}"
                body = ustr if c == 1 else (f"-{ustr}" if c == -1 else f"{c}*{ustr}")
            parts.append(body)
        out = parts[0]
        for p in parts[1:]:
            out += f" - {p[1:]}" if p.startswith("-") else f" + {p}"
        return out

    def __repr__(self) -> str:
        return f"UPoly({str(self)})"

    def to_json(self) -> list[list]:
        return [[e, str(c)] for e, c in self.terms]

    @staticmethod
    def from_json(data: Iterable[Iterable]) -> UPoly:
        return UPoly({int(e): Fraction(c) for e, c in data})


UPOLY_ZERO = UPoly()
UPOLY_ONE = UPoly.const(1)
U = UPoly.u()


# ---------------------------------------------------------------------------
# Monomials
# ---------------------------------------------------------------------------

# A monomial is a tuple of (variable index, exponent) pairs, ascending index,
# all indices >= 1 and exponents >= 1.  The empty tuple is the constant.
Monomial = tuple[tuple[int, int], ...]

MONO_ONE: Monomial = ()


def mono(*pairs: tuple[int, int]) -> Monomial:
    """Build a monomial from (index, exponent) pairs, merging duplicates."""
    acc: dict[int, int] = {}
    for i, e in pairs:
        if i < 1:
            raise ValueError(f"variable index must be >= 1, got {i}")
        if e < 0:
            raise ValueError(f"exponent must be >= 0, got {e}")
        if e:
            acc[i] = acc.get(i, 0) + e
    return tuple(sorted(acc.items()))


def mono_var(i: int, e: int = 1) -> Monomial:
    return mono((i, e))


def mono_weight(m: Monomial) -> int:
    return sum(i * e for i, e in m)


def mono_degree(m: Monomial) -> int:
    return sum(e for _, e in m)


def mono_mul(a: Monomial, b: Monomial) -> Monomial:
    if not a:
        return b
    if not b:
        return a
    acc = dict(a)
    for i, e in b:
        acc[i] = acc.get(i, 0) + e
    return tuple(sorted(acc.items()))


def mono_exp(m: Monomial, i: int) -> int:
    for j, e in m:
        if j == i:
            return e
    return 0


def mono_div_var(m: Monomial, i: int, k: int = 1) -> Monomial:
    """Divide by x_i^k; the exponent must be present."""
    acc = dict(m)
    if acc.get(i, 0) < k:
        raise ValueError(f"monomial {m} not divisible by variable {i}^{k}")
    acc[i] -= k
    if acc[i] == 0:
        del acc[i]
    return tuple(sorted(acc.items()))


def mono_key(m: Monomial) -> tuple:
    """Canonical sort key: ascending weight, then lexicographic on the
    (index, exponent) pairs read from the highest index down."""
    return (mono_weight(m), tuple(reversed(m)))


def mono_str(m: Monomial, family: str = "q") -> str:
    if not m:
        return "1"
    return "*".join(
        f"{family}{i}" if e == 1 else f"{family}{i}^{e}" for i, e in m
    )


def monomials_of_weight(w: int, family_max_index: int | None = None) -> Iterator[Monomial]:
    """All monomials of total weight exactly w (partitions of w)."""
    cap = family_max_index if family_max_index is not None else w

    def gen(remaining: int, max_part: int) -> Iterator[list[int]]:
        if remaining == 0:
            yield []
            return
        for part in range(min(remaining, max_part), 0, -1):
            for rest in gen(remaining - part, part):
                yield [part] + rest

    for parts in gen(w, cap):
        acc: dict[int, int] = {}
        for p in parts:
            acc[p] = acc.get(p, 0) + 1
        yield tuple(sorted(acc.items()))


def monomials_up_to_weight(W: int) -> Iterator[Monomial]:
    for w in range(W + 1):
        yield from monomials_of_weight(w)


# ---------------------------------------------------------------------------
# Truncated series
# ---------------------------------------------------------------------------


class TruncatedSeries:
    """Sparse weight-truncated series with UPoly coefficients.

    Immutable after construction.  ``reliable`` is the weight up to which the
    entries are exact; ``u_hi`` is the u-exponent up to which they are exact
    (None = exact at every stored exponent).  Entries of weight > W are
    rejected, u-exponents outside [umin, umax] raise :class:`UBandError`.
    """

    __slots__ = ("family", "W", "terms", "umin", "umax", "reliable", "u_hi")

    def __init__(
        self,
        family: str,
        W: int,
        terms: Mapping[Monomial, UPoly] | Iterable[tuple[Monomial, UPoly]] = (),
        *,
        umin: int | None = None,
        umax: int | None = None,
        reliable: int | None = None,
        u_hi: int | None = None,
    ):
        if family not in FAMILIES:
            raise FamilyError(f"unknown variable family {family!r}")
        if W < 0:
            raise ValueError("truncation weight must be >= 0")
        lo, hi = band_for_weight(W)
        umin = lo if umin is None else umin
        umax = hi if umax is None else umax
        items = terms.items() if isinstance(terms, Mapping) else terms
        clean: dict[Monomial, UPoly] = {}
        for m, c in items:
            if not c:
                continue
            if mono_weight(m) > W:
                raise TruncationError(
                    f"monomial {mono_str(m, family)} has weight > W={W}"
                )
            c.check_band(umin, umax)
            clean[m] = c
        object.__setattr__(self, "family", family)
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "terms", clean)
        object.__setattr__(self, "umin", umin)
        object.__setattr__(self, "umax", umax)
        object.__setattr__(self, "reliable", W if reliable is None else min(reliable, W))
        object.__setattr__(self, "u_hi", u_hi)

    def __setattr__(self, *a):  # pragma: no cover - immutability guard
        raise AttributeError("TruncatedSeries is immutable")

    # -- constructors --------------------------------------------------------

    @staticmethod
    def zero(family: str, W: int, **kw) -> TruncatedSeries:
        return TruncatedSeries(family, W, (), **kw)

    @staticmethod
    def monomial(
        family: str, W: int, m: Monomial, coef: UPoly = UPOLY_ONE, **kw
    ) -> TruncatedSeries:
        return TruncatedSeries(family, W, {m: coef}, **kw)

    @staticmethod
    def variable(family: str, W: int, i: int, **kw) -> TruncatedSeries:
        return TruncatedSeries.monomial(family, W, mono_var(i), **kw)

    @staticmethod
    def const(family: str, W: int, c: UPoly, **kw) -> TruncatedSeries:
        return TruncatedSeries(family, W, {MONO_ONE: c}, **kw)

    # -- bookkeeping helpers -------------------------------------------------

    def _meta(self) -> dict:
        return dict(umin=self.umin, umax=self.umax, reliable=self.reliable,
                    u_hi=self.u_hi)

    def with_band(self, umin: int, umax: int) -> TruncatedSeries:
        """Re-declare the band (widening is lossless; narrowing re-validates)."""
        return TruncatedSeries(self.family, self.W, self.terms, umin=umin,
                               umax=umax, reliable=self.reliable, u_hi=self.u_hi)

    def with_reliable(self, reliable: int) -> TruncatedSeries:
        return TruncatedSeries(self.family, self.W, self.terms, umin=self.umin,
                               umax=self.umax, reliable=reliable, u_hi=self.u_hi)

    def with_u_hi(self, u_hi: int | None) -> TruncatedSeries:
        return TruncatedSeries(self.family, self.W, self.terms, umin=self.umin,
                               umax=self.umax, reliable=self.reliable, u_hi=u_hi)

    def _check_family(self, other: TruncatedSeries) -> None:
        if self.family != other.family:
            raise FamilyError(
                f"cannot combine {self.family}-series with {other.family}-series"
            )

    @staticmethod
    def _merge_u_hi(a: int | None, b: int | None) -> int | None:
        if a is None:
            return b
        if b is None:
            return a
        return min(a, b)

    # -- queries -------------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, TruncatedSeries)
            and self.family == other.family
            and self.terms == other.terms
        )

    def __hash__(self):
        raise TypeError("TruncatedSeries is not hashable")

    def coefficient_of(self, m: Monomial) -> UPoly:
        if mono_weight(m) > self.W:
            raise TruncationError(
                f"coefficient of {mono_str(m, self.family)} lies beyond W={self.W}"
            )
        return self.terms.get(m, UPOLY_ZERO)

    def min_weight(self) -> int | None:
        if not self.terms:
            return None
        return min(mono_weight(m) for m in self.terms)

    def max_weight(self) -> int:
        if not self.terms:
            return 0
        return max(mono_weight(m) for m in self.terms)

    def min_u_exp(self) -> int:
        """Smallest u-exponent appearing anywhere (0 for the zero series)."""
        exps = [c.min_exp() for c in self.terms.values()]
        return min(exps) if exps else 0

    def canonical_items(self) -> list[tuple[Monomial, UPoly]]:
        return sorted(self.terms.items(), key=lambda kv: mono_key(kv[0]))

    def weight_slice(self, w: int) -> TruncatedSeries:
        return TruncatedSeries(
            self.family, self.W,
            {m: c for m, c in self.terms.items() if mono_weight(m) == w},
            **self._meta(),
        )

    def up_to_weight(self, w: int) -> TruncatedSeries:
        """Restrict to weight <= w (keeps W and band unchanged)."""
        return TruncatedSeries(
            self.family, self.W,
            {m: c for m, c in self.terms.items() if mono_weight(m) <= w},
            **self._meta(),
        )

    def u_layer(self, e: int) -> TruncatedSeries:
        """The coefficient-of-u^e layer, as a series with rational coefficients."""
        out = {}
        for m, c in self.terms.items():
            v = c.coeff(e)
            if v:
                out[m] = UPoly.const(v)
        return TruncatedSeries(self.family, self.W, out, **self._meta())

    def map_coeffs(self, f: Callable[[UPoly], UPoly]) -> TruncatedSeries:
        return TruncatedSeries(
            self.family, self.W,
            {m: f(c) for m, c in self.terms.items()},
            **self._meta(),
        )

    # -- ring operations -----------------------------------------------------

    def __add__(self, other: TruncatedSeries) -> TruncatedSeries:
        self._check_family(other)
        W = min(self.W, other.W)
        acc: dict[Monomial, UPoly] = {
            m: c for m, c in self.terms.items() if mono_weight(m) <= W
        }
        for m, c in other.terms.items():
            if mono_weight(m) <= W:
                acc[m] = acc.get(m, UPOLY_ZERO) + c
        return TruncatedSeries(
            self.family, W, acc,
            umin=min(self.umin, other.umin), umax=max(self.umax, other.umax),
            reliable=min(self.reliable, other.reliable),
            u_hi=self._merge_u_hi(self.u_hi, other.u_hi),
        )

    def __sub__(self, other: TruncatedSeries) -> TruncatedSeries:
        return self + (-other)

    def __neg__(self) -> TruncatedSeries:
        return self.map_coeffs(lambda c: -c)

    def scale(self, c: UPoly | Rat | int) -> TruncatedSeries:
        if isinstance(c, (Fraction, int)):
            c = UPoly.const(Fraction(c))
        return self.map_coeffs(lambda v: v * c)

    def mul(self, other: TruncatedSeries, *,
            umin: int | None = None, umax: int | None = None) -> TruncatedSeries:
        """Truncated product.  The result is validated against the union of the
        operand bands unless a wider band is requested explicitly; escaping it
        is a :class:`UBandError`, never a silent clip."""
        self._check_family(other)
        W = min(self.W, other.W)
        lo = min(self.umin, other.umin) if umin is None else umin
        hi = max(self.umax, other.umax) if umax is None else umax
        acc: dict[Monomial, UPoly] = {}
        for m1, c1 in self.terms.items():
            w1 = mono_weight(m1)
            if w1 > W:
                continue
            for m2, c2 in other.terms.items():
                if w1 + mono_weight(m2) > W:
                    continue
                m = mono_mul(m1, m2)
                acc[m] = acc.get(m, UPOLY_ZERO) + c1 * c2
        # completeness of a product layer is limited by each factor's u_hi
        # plus the lowest exponent the other factor can supply
        u_hi = None
        if self.u_hi is not None and other:
            u_hi = self.u_hi + other.min_u_exp()
        if other.u_hi is not None and self:
            h2 = other.u_hi + self.min_u_exp()
            u_hi = h2 if u_hi is None else min(u_hi, h2)
        rel = W
        if self.terms and other.terms:
            rel = min(
                W,
                self.reliable + (other.min_weight() or 0),
                other.reliable + (self.min_weight() or 0),
            )
        return TruncatedSeries(self.family, W, acc, umin=lo, umax=hi,
                               reliable=rel, u_hi=u_hi)

    def __mul__(self, other: TruncatedSeries) -> TruncatedSeries:
        return self.mul(other)

    def pow(self, n: int, **band_kw) -> TruncatedSeries:
        if n < 0:
            raise ValueError("negative powers of a series are not defined here")
        out = TruncatedSeries.const(self.family, self.W, UPOLY_ONE,
                                    umin=self.umin, umax=self.umax)
        for _ in range(n):
            out = out.mul(self, **band_kw)
        return out

    def partial(self, i: int) -> TruncatedSeries:
        """d/dx_i.  Weight drops by i, so the reliable weight drops too."""
        if i < 1:
            raise ValueError("variable index must be >= 1")
        acc: dict[Monomial, UPoly] = {}
        for m, c in self.terms.items():
            e = mono_exp(m, i)
            if e:
                m2 = mono_div_var(m, i)
                acc[m2] = acc.get(m2, UPOLY_ZERO) + c.scale(Fraction(e))
        return TruncatedSeries(self.family, self.W, acc, umin=self.umin,
                               umax=self.umax, reliable=self.reliable - i,
                               u_hi=self.u_hi)

    def truncate(self, W: int) -> TruncatedSeries:
        if W >= self.W:
            return self
        return TruncatedSeries(
            self.family, W,
            {m: c for m, c in self.terms.items() if mono_weight(m) <= W},
            umin=self.umin, umax=self.umax,
            reliable=min(self.reliable, W), u_hi=self.u_hi,
        )

    # -- formatting ----------------------------------------------------------

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        bits = []
        for m, c in self.canonical_items():
            cs = str(c)
            if "+" in cs or " - " in cs or (cs.startswith("-") and m):
                cs = f"({cs})"
            bits.append(cs if not m else (mono_str(m, self.family) if cs == "1"
                                          else f"{cs}*{mono_str(m, self.family)}"))
        return " + ".join(bits)

    def __repr__(self) -> str:
        return (f"TruncatedSeries({self.family!r}, W={self.W}, "
                f"{len(self.terms)} terms)")

    def to_json_obj(self) -> dict:
        return {
            "family": self.family,
            "W": self.W,
            "terms": [
                {"mono": [list(p) for p in m], "coef": c.to_json()}
                for m, c in self.canonical_items()
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj(), separators=(",", ":"), sort_keys=True)

    @staticmethod
    def from_json_obj(data: dict, **kw) -> TruncatedSeries:
        terms = {
            mono(*[tuple(p) for p in t["mono"]]): UPoly.from_json(t["coef"])
            for t in data["terms"]
        }
        return TruncatedSeries(data["family"], data["W"], terms, **kw)

    @staticmethod
    def from_json(text: str, **kw) -> TruncatedSeries:
        return TruncatedSeries.from_json_obj(json.loads(text), **kw)


# ---------------------------------------------------------------------------
# Linear substitution (change of variables)
# ---------------------------------------------------------------------------


def substitute_linear(
    s: TruncatedSeries,
    rule: Mapping[int, TruncatedSeries],
    *,
    W: int | None = None,
    umin: int | None = None,
    umax: int | None = None,
) -> TruncatedSeries:
    """Substitute each source variable by a linear series in a target family.

    Every image must be linear (each monomial a single first-power variable)
    and weight-compatible: the image of variable ``b`` may only contain target
    weights >= b.  That makes the substitution exact on a weight-W truncation.
    """
    W = s.W if W is None else W
    target_family: str | None = None
    # slope: most negative u-exponent per unit of image weight, across all
    # image terms; a degree-d product then shifts u by >= slope * weight, and
    # the product weight is capped at W, so u_hi degrades by at most slope * W.
    slope = Fraction(0)
    for b, img in rule.items():
        if target_family is None:
            target_family = img.family
        elif img.family != target_family:
            raise FamilyError("substitution images mix variable families")
        for m, c in img.terms.items():
            if mono_degree(m) != 1:
                raise ValueError(
                    f"image of variable {b} is not linear: contains {mono_str(m)}"
                )
            w = mono_weight(m)
            if w < b:
                raise ValueError(
                    f"image of variable {b} contains weight {w} < {b}; "
                    "substitution would not respect truncation"
                )
            slope = min(slope, Fraction(c.min_exp(), w))
    if target_family is None:
        target_family = s.family
    lo, hi = band_for_weight(W)
    lo = lo if umin is None else umin
    hi = hi if umax is None else umax
    images = {
        b: TruncatedSeries(target_family, W,
                           {m: c for m, c in img.terms.items()
                            if mono_weight(m) <= W},
                           umin=lo, umax=hi)
        for b, img in rule.items()
    }
    out = TruncatedSeries.zero(target_family, W, umin=lo, umax=hi)
    for m, c in s.terms.items():
        term = TruncatedSeries.const(target_family, W, c, umin=lo, umax=hi)
        for i, e in m:
            if i not in images:
                raise KeyError(f"substitution rule missing variable {i}")
            for _ in range(e):
                term = term.mul(images[i], umin=lo, umax=hi)
        out = out + term
    rel = min(s.reliable, min((img.reliable for img in rule.values()), default=W), W)
    u_hi = s.u_hi
    if u_hi is not None:
        u_hi += math.floor(slope * W)  # slope <= 0, so this only lowers it
    return out.with_reliable(rel).with_u_hi(u_hi)
