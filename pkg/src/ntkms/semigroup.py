"""Lattice-ordered semigroups underlying the truncated series engine.

Two instances are built in:

* ``nat-mult`` -- the positive integers 1, 2, 3, ... under multiplication,
  sitting inside the positive rationals.  The order is divisibility, the
  join is lcm and the meet is gcd.
* ``nat-add`` -- the nonnegative integers under addition, sitting inside
  the integers.  The order is the usual one, join is max, meet is min.

Both are positive cones of abelian lattice-ordered groups, so any two
elements have a join and a meet and these satisfy glb(s, r) * lub(s, r)
== s * r.  Elements of the enveloping group are never materialised;
everything downstream works with pairs of cone elements instead.

Scaling homomorphisms N : P -> (0, oo) drive the dynamics.  The default
one attached to each product system sends a fiber to its basis count, and
carries a profile tag so that series tails admit closed-form bounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

__all__ = [
    "Semigroup",
    "SemigroupElement",
    "TruncationSet",
    "ScalingHomomorphism",
    "TailBound",
    "NAT_MULT",
    "NAT_ADD",
    "tail_bound",
]


class SemigroupMismatch(ValueError):
    """Raised when elements of different instances are combined."""


class Semigroup:
    """One of the two built-in lattice-ordered positive cones.

    Operations act on plain ``int`` values; :class:`SemigroupElement`
    wraps a value together with its instance for the user-facing API.
    """

    def __init__(self, name: str):
        if name not in ("nat-mult", "nat-add"):
            raise ValueError(f"unknown semigroup instance {name!r}")
        self.name = name
        self.is_multiplicative = name == "nat-mult"
        self.identity_value = 1 if self.is_multiplicative else 0

    def __repr__(self):
        return f"Semigroup({self.name!r})"

    def check_value(self, v: int) -> int:
        if not isinstance(v, int):
            raise TypeError(f"semigroup values are ints, got {type(v).__name__}")
        if self.is_multiplicative:
            if v < 1:
                raise ValueError(f"{v} is not a positive integer")
        elif v < 0:
            raise ValueError(f"{v} is not a nonnegative integer")
        return v

    def element(self, v: int) -> "SemigroupElement":
        return SemigroupElement(self, self.check_value(v))

    @property
    def identity(self) -> "SemigroupElement":
        return SemigroupElement(self, self.identity_value)

    # int-level operations; all downstream hot paths use these directly.

    def mul(self, s: int, r: int) -> int:
        return s * r if self.is_multiplicative else s + r

    def lub(self, s: int, r: int) -> int:
        return math.lcm(s, r) if self.is_multiplicative else max(s, r)

    def glb(self, s: int, r: int) -> int:
        return math.gcd(s, r) if self.is_multiplicative else min(s, r)

    def leq(self, s: int, r: int) -> bool:
        return r % s == 0 if self.is_multiplicative else s <= r

    def quotient(self, r: int, s: int) -> int:
        """The unique q with s * q == r; requires s <= r in the order."""
        if not self.leq(s, r):
            raise ValueError(f"{s} is not below {r} in {self.name}")
        return r // s if self.is_multiplicative else r - s

    def enumerate_values(self, bound: int) -> tuple[int, ...]:
        """All elements up to ``bound``, ascending.

        The result is divisor-complete: it contains every element below
        any of its members, and it contains the identity.
        """
        if self.is_multiplicative:
            if bound < 1:
                raise ValueError("bound must be >= 1")
            return tuple(range(1, bound + 1))
        if bound < 0:
            raise ValueError("bound must be >= 0")
        return tuple(range(0, bound + 1))

    @property
    def has_minimal_elements(self) -> bool:
        """Whether P has minimal elements strictly above the identity.

        True for both built-in cones (the primes, respectively 1).  Parts
        of the trace-reconstruction theory are stated for cones without
        such elements; callers get this flag so reports can record that
        the hypothesis fails here even when the checks themselves pass.
        """
        return True


NAT_MULT = Semigroup("nat-mult")
NAT_ADD = Semigroup("nat-add")


@dataclass(frozen=True)
class SemigroupElement:
    """A cone element tagged with its instance."""

    semigroup: Semigroup
    value: int

    def _same(self, other: "SemigroupElement") -> None:
        if self.semigroup is not other.semigroup:
            raise SemigroupMismatch(
                f"cannot combine {self.semigroup.name} with {other.semigroup.name}"
            )

    def __mul__(self, other: "SemigroupElement") -> "SemigroupElement":
        self._same(other)
        return SemigroupElement(self.semigroup, self.semigroup.mul(self.value, other.value))

    def lub(self, other: "SemigroupElement") -> "SemigroupElement":
        self._same(other)
        return SemigroupElement(self.semigroup, self.semigroup.lub(self.value, other.value))

    def glb(self, other: "SemigroupElement") -> "SemigroupElement":
        self._same(other)
        return SemigroupElement(self.semigroup, self.semigroup.glb(self.value, other.value))

    def __le__(self, other: "SemigroupElement") -> bool:
        self._same(other)
        return self.semigroup.leq(self.value, other.value)

    def quotient(self, other: "SemigroupElement") -> "SemigroupElement":
        """self = other * q; returns q.  Requires other <= self."""
        self._same(other)
        return SemigroupElement(
            self.semigroup, self.semigroup.quotient(self.value, other.value)
        )

    def is_identity(self) -> bool:
        return self.value == self.semigroup.identity_value

    def __repr__(self):
        return f"<{self.value} in {self.semigroup.name}>"


@dataclass(frozen=True)
class TruncationSet:
    """A finite, divisor-complete window of the cone, kept ascending."""

    semigroup: Semigroup
    bound: int
    values: tuple[int, ...] = field(default=())

    def __post_init__(self):
        if not self.values:
            object.__setattr__(
                self, "values", self.semigroup.enumerate_values(self.bound)
            )
        if self.values[0] != self.semigroup.identity_value:
            raise ValueError("truncation set must contain the identity first")

    def __len__(self):
        return len(self.values)

    def __iter__(self):
        return iter(self.values)

    def __contains__(self, v: int) -> bool:
        sg = self.semigroup
        if sg.is_multiplicative:
            return 1 <= v <= self.bound
        return 0 <= v <= self.bound

    def closure_violations(self, limit: int = 512) -> list[tuple[int, int, str]]:
        """Meet/join closure violations among members, for validation.

        Meets must always land back in the set; joins only when they stay
        within the bound.  Interval windows satisfy this by construction,
        so the quadratic scan is capped at ``limit`` elements and the
        interval structure is checked directly beyond that.
        """
        sg = self.semigroup
        vals = self.values
        expected = sg.enumerate_values(self.bound)
        if vals != expected:
            return [(self.bound, len(vals), "not the full interval below the bound")]
        out: list[tuple[int, int, str]] = []
        for s in vals[:limit]:
            for r in vals[:limit]:
                if sg.glb(s, r) not in self:
                    out.append((s, r, "meet escapes the set"))
                j = sg.lub(s, r)
                if j <= self.bound and j not in self:
                    out.append((s, r, "join within bound escapes the set"))
        return out


@dataclass(frozen=True)
class ScalingHomomorphism:
    """A multiplicative map N : P -> (0, oo) used by the dynamics.

    ``profile`` tags the closed-form family the map belongs to:

    * ``("power", d)`` on nat-mult: N(s) = s**d,
    * ``("geometric", k)`` on nat-add: N(n) = k**n,
    * ``("custom", 0)`` otherwise (generic, non-rigorous tail bounds).
    """

    semigroup: Semigroup
    fn: Callable[[int], float]
    profile: tuple[str, int]
    name: str = "N"

    def of(self, v: int) -> float:
        return self.fn(v)

    def validate(self, trunc: TruncationSet, tol: float = 1e-12) -> list[str]:
        """Check homomorphism law, positivity and injectivity on a window.

        Returns a list of human-readable violations (empty when clean).
        """
        sg = self.semigroup
        out = []
        if abs(self.of(sg.identity_value) - 1.0) > tol:
            out.append(f"N(e) = {self.of(sg.identity_value)} != 1")
        vals = trunc.values[: min(len(trunc), 64)]
        for s in vals:
            if self.of(s) <= 0:
                out.append(f"N({s}) = {self.of(s)} is not positive")
        for s in vals[:24]:
            for r in vals[:24]:
                lhs = self.of(sg.mul(s, r))
                rhs = self.of(s) * self.of(r)
                if abs(lhs - rhs) > tol * max(1.0, abs(rhs)):
                    out.append(f"N({s}*{r}) = {lhs} != N({s})N({r}) = {rhs}")
        seen: dict[float, int] = {}
        for s in trunc.values:
            x = self.of(s)
            if x in seen and seen[x] != s:
                out.append(f"N not injective: N({seen[x]}) == N({s}) == {x}")
                break
            seen[x] = s
        return out

    @property
    def injective_on_window(self) -> bool:
        # validated over a default window; recorded for reports
        return not any(
            "injective" in v for v in self.validate(TruncationSet(self.semigroup, 64))
        )


def power_scaling(d: int = 1) -> ScalingHomomorphism:
    return ScalingHomomorphism(NAT_MULT, lambda s: float(s) ** d, ("power", d), f"s^{d}")


def geometric_scaling(k: int) -> ScalingHomomorphism:
    return ScalingHomomorphism(NAT_ADD, lambda n: float(k) ** n, ("geometric", k), f"{k}^n")


@dataclass(frozen=True)
class TailBound:
    """An over-estimate of a dropped series tail.

    ``rigorous`` is False when the generic windowed fallback produced the
    number; the closed forms for the built-in profiles are rigorous.
    """

    value: float
    rigorous: bool

    def __float__(self):
        return self.value


def critical_exponent(profile: tuple[str, int]) -> float:
    kind, p = profile
    if kind == "power":
        return 1.0 + 1.0 / p
    if kind == "geometric":
        return 1.0
    return float("nan")


def tail_bound(
    scaling: ScalingHomomorphism,
    weights: Callable[[int], float],
    beta: float,
    bound: int,
) -> TailBound:
    """Bound sum of N(s)**(-beta) * weight(s) over elements beyond ``bound``.

    For the power profile (weights s**d on nat-mult) the integral test
    gives bound**(d*(1-beta)+1) / (d*(beta-1)-1).  For the geometric
    profile (weights k**n on nat-add) the geometric series starting at
    ``bound`` gives k**((1-beta)*bound) / (1 - k**(1-beta)); starting at
    the bound rather than just past it keeps the estimate an over-count.
    Anything else falls back to a doubled window sum which is labeled
    non-rigorous.
    """
    kind, p = scaling.profile
    if kind == "power":
        d = p
        if d * (beta - 1.0) <= 1.0:
            raise ValueError(
                f"beta = {beta} is at or below the critical exponent {1 + 1 / d}"
            )
        return TailBound(bound ** (d * (1.0 - beta) + 1.0) / (d * (beta - 1.0) - 1.0), True)
    if kind == "geometric":
        k = p
        ratio = float(k) ** (1.0 - beta)
        if ratio >= 1.0:
            raise ValueError(f"beta = {beta} is at or below the critical exponent 1")
        return TailBound(ratio**bound / (1.0 - ratio), True)
    sg = scaling.semigroup
    inner = TruncationSet(sg, bound)
    window = [v for v in sg.enumerate_values(4 * bound) if v not in inner]
    est = 2.0 * sum(scaling.of(v) ** (-beta) * weights(v) for v in window)
    return TailBound(est, False)
