"""Pairwise-independent hash constraints over sliced bitvector projections.

Wide projection variables are cut into slices of at most `ell` bits; a
hash constraint is a random function of the slice vector whose range has
size p, pinned to a random target value.  Three families:

  XOR    parity of a random subset of the individual projection bits
         (p = 2, operates on 1-bit slices)
  PRIME  (sum a_i x_i + b) mod p with p the smallest prime above 2^ell
  SHIFT  top ell bits of (sum a_i x_i + b) mod 2^wbar, p = 2^ell

Each accepted draw is uniform over its family; coefficients may be zero.
"""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass
from typing import Mapping

from .errors import RangeExceeded
from .smtlib import ProjectionSet


class Family(enum.Enum):
    XOR = "xor"
    PRIME = "prime"
    SHIFT = "shift"

    @classmethod
    def from_string(cls, name: str) -> "Family":
        return cls(name.lower())

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class Slice:
    """Bits [lo, hi) of a projection variable."""

    var: str
    parent_width: int
    lo: int
    hi: int

    @property
    def width(self) -> int:
        return self.hi - self.lo

    def value(self, assignment: int) -> int:
        return (assignment >> self.lo) & ((1 << self.width) - 1)


@dataclass(frozen=True)
class HashConstraint:
    family: Family
    slices: tuple[Slice, ...]
    coeffs: tuple[int, ...]
    offset: int | None  # b; absent for XOR
    range_size: int  # p: number of cells this constraint splits into
    target: int  # alpha
    ell: int  # range exponent the draw was made at
    widened_width: int | None = None  # arithmetic width for PRIME/SHIFT


def slice_projection(projection: ProjectionSet, ell: int) -> tuple[Slice, ...]:
    """Cut each projection variable into ceil(w/ell) slices, low bits first.

    The final slice of a variable keeps its natural (narrower) width.
    """
    if ell < 1:
        raise ValueError(f"slice width must be >= 1, got {ell}")
    out: list[Slice] = []
    for var in projection.variables:
        lo = 0
        while lo < var.width:
            hi = min(lo + ell, var.width)
            out.append(Slice(var.name, var.width, lo, hi))
            lo = hi
    return tuple(out)


# Deterministic Miller-Rabin witnesses, exact for all n < 2^64.
_MR_WITNESSES = (2, 325, 9375, 28178, 450775, 9780504, 1795265022)
_PRIME_LIMIT = 1 << 64


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    for small in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if n % small == 0:
            return n == small
    d, r = n - 1, 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for a in _MR_WITNESSES:
        a %= n
        if a == 0:
            continue
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def smallest_prime_above(n: int) -> int:
    """Smallest prime strictly greater than n; exact up to 2^64."""
    candidate = n + 1
    if candidate <= 2:
        return 2
    if candidate % 2 == 0:
        candidate += 1
    while True:
        if candidate >= _PRIME_LIMIT:
            raise RangeExceeded(
                f"prime search above {n} leaves the exact range (< 2^64)"
            )
        if _is_prime(candidate):
            return candidate
        candidate += 2


def _widened_width_prime(ell: int, d: int) -> int:
    # full sum fits in 2*ell + d bits: each term < 2^(2*ell+1), d terms
    return 2 * ell + d


def _widened_width_shift(slices: tuple[Slice, ...], ell: int) -> int:
    # 2*w_max in the normal case; the max() keeps the top-ell extract
    # well-formed (and the family precondition wbar >= w + ell - 1) when
    # every slice is narrower than ell
    w_max = max(s.width for s in slices)
    return max(2 * w_max, w_max + ell - 1)


def generate_hash(
    projection: ProjectionSet, ell: int, family: Family, rng: random.Random
) -> HashConstraint:
    """Draw one constraint; a fresh target is sampled with every call."""
    if family is Family.XOR:
        slices = slice_projection(projection, 1)
        coeffs = tuple(rng.getrandbits(1) for _ in slices)
        return HashConstraint(
            family=family,
            slices=slices,
            coeffs=coeffs,
            offset=None,
            range_size=2,
            target=rng.getrandbits(1),
            ell=1,
        )
    slices = slice_projection(projection, ell)
    if family is Family.PRIME:
        p = smallest_prime_above(1 << ell)
        return HashConstraint(
            family=family,
            slices=slices,
            coeffs=tuple(rng.randrange(p) for _ in slices),
            offset=rng.randrange(p),
            range_size=p,
            target=rng.randrange(p),
            ell=ell,
            widened_width=_widened_width_prime(ell, len(slices)),
        )
    if family is Family.SHIFT:
        wbar = _widened_width_shift(slices, ell)
        return HashConstraint(
            family=family,
            slices=slices,
            coeffs=tuple(rng.getrandbits(wbar) for _ in slices),
            offset=rng.getrandbits(wbar),
            range_size=1 << ell,
            target=rng.getrandbits(ell),
            ell=ell,
            widened_width=wbar,
        )
    raise ValueError(f"unknown hash family {family!r}")


def eval_hash(constraint: HashConstraint, model: Mapping[str, int]) -> int:
    """Evaluate the hash value (not the constraint) on a projected model.

    This is the reference semantics the InMemory oracle and the rendered
    SMT-LIB2 text must both agree with.
    """
    values = (s.value(model[s.var]) for s in constraint.slices)
    if constraint.family is Family.XOR:
        parity = 0
        for coeff, v in zip(constraint.coeffs, values):
            if coeff:
                parity ^= v
        return parity
    total = constraint.offset
    for coeff, v in zip(constraint.coeffs, values):
        total += coeff * v
    if constraint.family is Family.PRIME:
        return total % constraint.range_size
    # SHIFT: top ell bits of the wbar-bit wrap-around sum
    wbar = constraint.widened_width
    return (total % (1 << wbar)) >> (wbar - constraint.ell)


@dataclass(frozen=True)
class HashStack:
    """An ordered chain of constraints plus exact cumulative cell counts.

    cumulative_ranges[i] is the product of the first i range sizes, so the
    last entry is the total number of cells the chain partitions into.
    """

    constraints: tuple[HashConstraint, ...] = ()
    cumulative_ranges: tuple[int, ...] = (1,)

    @classmethod
    def from_constraints(cls, constraints) -> "HashStack":
        stack = cls()
        for c in constraints:
            stack = stack.extend(c)
        return stack

    def extend(self, constraint: HashConstraint) -> "HashStack":
        return HashStack(
            self.constraints + (constraint,),
            self.cumulative_ranges
            + (self.cumulative_ranges[-1] * constraint.range_size,),
        )

    def replace_last(self, constraint: HashConstraint) -> "HashStack":
        if not self.constraints:
            raise ValueError("replace_last on an empty stack")
        return HashStack(
            self.constraints[:-1] + (constraint,),
            self.cumulative_ranges[:-1]
            + (self.cumulative_ranges[-2] * constraint.range_size,),
        )

    @property
    def total_cells(self) -> int:
        return self.cumulative_ranges[-1]

    def __len__(self) -> int:
        return len(self.constraints)
