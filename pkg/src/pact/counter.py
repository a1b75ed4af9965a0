"""Approximate projected counting via random hash partitions.

One iteration drops hash constraints onto the assertion stack until a
cell's saturating count falls below the threshold, gallops to the exact
boundary index, optionally swaps the last constraint for a coarser one to
land the count as close under the threshold as possible, and scales the
cell count by the number of cells.  The reported estimate is the median
over many such iterations, which boosts the per-iteration confidence to
the requested level.
"""

from __future__ import annotations

import enum
import math
import random
import time
from dataclasses import dataclass

from .errors import (
    CounterFailed,
    ExhaustedIndices,
    InvalidParameters,
    OracleTimeout,
    SolverUnknown,
)
from .hashing import Family, HashStack, generate_hash, smallest_prime_above
from .oracle import Oracle, QueryStats, SolverResult
from .smtlib import BlockingClause, ProjectionSet


@dataclass(frozen=True)
class SaturatingCount:
    """Either an exact cell count below the threshold or "at least thresh"."""

    count: int | None = None

    @property
    def is_exact(self) -> bool:
        return self.count is not None

    @classmethod
    def exact(cls, n: int) -> "SaturatingCount":
        return cls(n)

    def __repr__(self) -> str:
        return f"Exact({self.count})" if self.is_exact else "Saturated"


SATURATED = SaturatingCount()


@dataclass(frozen=True)
class Constants:
    thresh: int
    itercount: int
    ell: int


def get_constants(
    epsilon: float, delta: float, family: Family, log_base: float = 2.0
) -> Constants:
    """Threshold, iteration count, and range exponent for the guarantee."""
    if epsilon <= 0:
        raise InvalidParameters(f"epsilon must be positive, got {epsilon}")
    if not 0 < delta < 1:
        raise InvalidParameters(f"delta must be in (0, 1), got {delta}")
    if log_base <= 1:
        raise InvalidParameters(f"log base must exceed 1, got {log_base}")
    thresh = math.ceil(
        1 + 9.84 * (1 + epsilon / (1 + epsilon)) * (1 + 1 / epsilon) ** 2
    )
    multiplier = 17 if family is Family.XOR else 23
    itercount = math.ceil(multiplier * math.log(3 / delta, log_base))
    ell = 1 if family is Family.XOR else 4
    return Constants(thresh=thresh, itercount=itercount, ell=ell)


def saturating_count(
    oracle: Oracle, projection: ProjectionSet, thresh: int
) -> SaturatingCount:
    """Enumerate-and-block up to thresh models inside a scratch frame."""
    if thresh < 1:
        raise InvalidParameters(f"threshold must be >= 1, got {thresh}")
    oracle.push()
    try:
        n = 0
        while True:
            result = oracle.check_sat()
            if result is SolverResult.UNSAT:
                return SaturatingCount.exact(n)
            if result is SolverResult.UNKNOWN:
                raise SolverUnknown(
                    "solver answered unknown while counting a cell; "
                    "the estimate would be unsound"
                )
            if result is SolverResult.TIMEOUT:
                raise OracleTimeout("solver timed out while counting a cell")
            model = oracle.get_projected_model(projection)
            n += 1
            if n >= thresh:
                return SATURATED
            oracle.assert_constraint(BlockingClause.from_model(projection, model))
    finally:
        oracle.pop()


class CellLedger:
    """Saturating counts remembered per constraint-chain length.

    Counts are non-increasing in the index (every added constraint can only
    shrink a cell); record() enforces that so an inconsistent oracle is
    caught instead of sending the boundary search in circles.
    """

    def __init__(self):
        self.entries: dict[int, SaturatingCount] = {}

    def record(self, index: int, count: SaturatingCount) -> None:
        for other, known in self.entries.items():
            if other == index:
                if known != count:
                    raise RuntimeError(
                        f"cell count at index {index} changed from {known} to {count}"
                    )
                continue
            shallow, deep = (count, known) if index < other else (known, count)
            bad = shallow.is_exact and (
                not deep.is_exact or deep.count > shallow.count
            )
            if bad:
                raise RuntimeError(
                    "cell counts are not non-increasing along the chain: "
                    f"index {min(index, other)} -> {shallow}, "
                    f"index {max(index, other)} -> {deep}"
                )
        self.entries[index] = count

    def get(self, index: int) -> SaturatingCount | None:
        return self.entries.get(index)

    def boundary(self) -> int | None:
        """Smallest index whose count is exact right above a saturated one."""
        for i in sorted(self.entries):
            if not self.entries[i].is_exact:
                continue
            below = self.entries.get(i - 1)
            if below is not None and not below.is_exact:
                return i
        return None

    def truncated(self, index: int) -> "CellLedger":
        """Copy keeping only entries strictly below index."""
        out = CellLedger()
        out.entries = {i: c for i, c in self.entries.items() if i < index}
        return out


def next_index(ledger: CellLedger, max_index: int) -> int:
    """Next chain length to probe: double past the deepest saturated index
    until an exact count caps the range, then bisect the gap."""
    saturated = [i for i, c in ledger.entries.items() if not c.is_exact]
    if not saturated:
        raise ValueError("need a saturated count at index 0 before searching")
    low = max(saturated)
    exact_above = [
        i for i, c in ledger.entries.items() if c.is_exact and i > low
    ]
    if exact_above:
        high = min(exact_above)
        if high - low <= 1:
            raise ValueError(f"boundary already identified at index {high}")
        return (low + high) // 2
    return min(max(1, 2 * low), max_index)


def max_hash_index(projection: ProjectionSet, family: Family, ell: int) -> int:
    """Deepest chain length worth probing: one past the point where the
    partition has at least as many cells as the whole projected domain."""
    if family is Family.XOR:
        p = 2
    elif family is Family.PRIME:
        p = smallest_prime_above(1 << ell)
    else:
        p = 1 << ell
    domain = 1 << projection.total_width
    m, cells = 0, 1
    while cells < domain:
        cells *= p
        m += 1
    return m + 1


def cell_estimate(count: SaturatingCount, stack: HashStack) -> int:
    """Scale an exact cell count by the number of cells in the partition."""
    if not count.is_exact:
        raise ValueError("cannot scale a saturated count")
    return count.count * stack.total_cells


def find_median(values) -> int:
    ordered = sorted(values)
    if not ordered:
        raise ValueError("median of an empty sequence")
    return ordered[(len(ordered) - 1) // 2]


class RefinementOutcome(enum.Enum):
    UNCHANGED_XOR = "unchanged-xor"
    KEPT_ORIGINAL = "kept-original"
    REFINED = "refined"
    EXHAUSTED = "exhausted"


@dataclass(frozen=True)
class FixResult:
    outcome: RefinementOutcome
    ledger: CellLedger
    stack: HashStack
    probes: int
    count: SaturatingCount


def _truncate(stack: HashStack, length: int) -> HashStack:
    return HashStack(stack.constraints[:length], stack.cumulative_ranges[: length + 1])


def _refinement_exponents(ell: int, exponent_halving: bool) -> list[int]:
    if exponent_halving:
        out = []
        e = ell // 2
        while e >= 1:
            out.append(e)
            e //= 2
        return out
    return list(range(ell - 1, 0, -1))


def fix_last_hash(
    oracle: Oracle,
    projection: ProjectionSet,
    ledger: CellLedger,
    stack: HashStack,
    index: int,
    family: Family,
    thresh: int,
    rng: random.Random,
    *,
    exponent_halving: bool = False,
) -> FixResult:
    """Swap the boundary constraint for coarser draws while counts stay exact.

    Entered with the oracle holding the first `index` constraints, one per
    frame.  For XOR nothing happens and the oracle is untouched; otherwise
    the last frame is popped, replacement candidates at decreasing range
    exponents are each tried in a scratch frame, and the oracle is left
    holding `index - 1` constraints.  The first saturating candidate stops
    the search and the previously kept constraint stands; running out of
    exponents with every candidate still exact reports EXHAUSTED, carrying
    the coarsest kept replacement.
    """
    count = ledger.get(index)
    below = ledger.get(index - 1)
    if count is None or not count.is_exact:
        raise ValueError(f"no exact count recorded at index {index}")
    if below is None or below.is_exact:
        raise ValueError(f"index {index - 1} must hold a saturated count")
    if len(stack) < index or index < 1:
        raise ValueError(f"stack holds {len(stack)} constraints, need {index}")
    if family is Family.XOR:
        return FixResult(
            RefinementOutcome.UNCHANGED_XOR, ledger, _truncate(stack, index), 0, count
        )
    kept = stack.constraints[index - 1]
    kept_count = count
    outcome = RefinementOutcome.KEPT_ORIGINAL
    probes = 0
    oracle.pop()  # remove the original boundary constraint
    exponents = _refinement_exponents(kept.ell, exponent_halving)
    exhausted = bool(exponents)
    for ell_prime in exponents:
        candidate = generate_hash(projection, ell_prime, family, rng)
        oracle.push()
        oracle.assert_constraint(candidate)
        try:
            candidate_count = saturating_count(oracle, projection, thresh)
        finally:
            oracle.pop()
        probes += 1
        if not candidate_count.is_exact:
            exhausted = False
            break
        kept, kept_count = candidate, candidate_count
        outcome = RefinementOutcome.REFINED
    if exhausted:
        outcome = RefinementOutcome.EXHAUSTED
    new_stack = _truncate(stack, index).replace_last(kept)
    new_ledger = ledger.truncated(index)
    new_ledger.record(index, kept_count)
    return FixResult(outcome, new_ledger, new_stack, probes, kept_count)


@dataclass(frozen=True)
class CountResult:
    estimate: int
    raw_estimates: tuple[int, ...]
    constants: Constants
    family: Family
    epsilon: float
    delta: float
    seed: int
    early_exit: bool
    probe_counts: tuple[int, ...]
    exhausted_refinements: int
    discarded_attempts: int
    stats: QueryStats
    wall_time: float


@dataclass(frozen=True)
class _IterationOutcome:
    estimate: int | None  # None means the iteration was discarded
    probes: int
    exhausted: bool


def _unwind(oracle: Oracle, entry_depth: int) -> None:
    from .errors import PactError

    try:
        while oracle.depth > entry_depth:
            oracle.pop()
    except PactError:
        pass  # a dead solver can't be unwound; the original error matters more


def _one_iteration(
    oracle: Oracle,
    projection: ProjectionSet,
    consts: Constants,
    family: Family,
    rng: random.Random,
    max_index: int,
    on_exhausted: str,
    exponent_halving: bool,
) -> _IterationOutcome:
    entry_depth = oracle.depth
    try:
        ledger = CellLedger()
        ledger.record(0, SATURATED)
        stack = HashStack()
        depth = 0  # constraints currently on the oracle stack
        probes = 0
        while True:
            target = next_index(ledger, max_index)
            while len(stack) < target:
                stack = stack.extend(generate_hash(projection, consts.ell, family, rng))
            if target > depth:
                for i in range(depth, target):
                    oracle.push()
                    oracle.assert_constraint(stack.constraints[i])
            else:
                for _ in range(depth - target):
                    oracle.pop()
            depth = target
            count = saturating_count(oracle, projection, consts.thresh)
            probes += 1
            ledger.record(target, count)
            if count.is_exact:
                below = ledger.get(target - 1)
                if below is not None and not below.is_exact:
                    index = target
                    break
            else:
                above = ledger.get(target + 1)
                if above is not None and above.is_exact:
                    index = target + 1
                    break
                if target >= max_index:
                    raise ExhaustedIndices(
                        f"cell still saturated with {target} constraints, more "
                        "than the projected domain supports; the oracle is "
                        "inconsistent"
                    )
        if depth < index:  # boundary met from below: restore the full chain
            oracle.push()
            oracle.assert_constraint(stack.constraints[index - 1])
            depth = index
        fixed = fix_last_hash(
            oracle,
            projection,
            ledger,
            stack,
            index,
            family,
            consts.thresh,
            rng,
            exponent_halving=exponent_halving,
        )
        probes += fixed.probes
        if fixed.outcome is RefinementOutcome.UNCHANGED_XOR:
            cleanup = index
        else:
            cleanup = index - 1
        exhausted = fixed.outcome is RefinementOutcome.EXHAUSTED
        if exhausted and on_exhausted == "discard":
            for _ in range(cleanup):
                oracle.pop()
            return _IterationOutcome(None, probes, True)
        estimate = cell_estimate(fixed.count, fixed.stack)
        for _ in range(cleanup):
            oracle.pop()
        return _IterationOutcome(estimate, probes, exhausted)
    except BaseException:
        _unwind(oracle, entry_depth)
        raise


def pact_count(
    oracle: Oracle,
    projection: ProjectionSet,
    *,
    epsilon: float = 0.8,
    delta: float = 0.2,
    family: Family = Family.XOR,
    seed: int | None = None,
    log_base: float = 2.0,
    exponent_halving: bool = False,
    on_exhausted: str = "keep",
    retry_budget: int = 3,
) -> CountResult:
    """Estimate the projected model count within a factor of 1 + epsilon,
    with confidence at least 1 - delta.

    `on_exhausted` picks what happens when the refinement runs out of
    coarser exponents with every candidate still exact: "keep" (default)
    uses the coarsest kept replacement, "discard" throws the iteration away
    and redraws, giving up after `retry_budget` consecutive discards.
    """
    t0 = time.perf_counter()
    if len(projection) == 0:
        raise InvalidParameters("projection set is empty")
    if on_exhausted not in ("keep", "discard"):
        raise InvalidParameters(f"on_exhausted must be keep or discard, got {on_exhausted!r}")
    if oracle.depth != 0:
        raise InvalidParameters(f"oracle must start at depth 0, is at {oracle.depth}")
    consts = get_constants(epsilon, delta, family, log_base)
    if seed is None:
        seed = random.SystemRandom().getrandbits(32)
    rng = random.Random(seed)
    base_stats = oracle.stats.copy()

    # the unconstrained count is shared by every iteration
    c0 = saturating_count(oracle, projection, consts.thresh)
    if c0.is_exact:
        return CountResult(
            estimate=c0.count,
            raw_estimates=(c0.count,),
            constants=consts,
            family=family,
            epsilon=epsilon,
            delta=delta,
            seed=seed,
            early_exit=True,
            probe_counts=(),
            exhausted_refinements=0,
            discarded_attempts=0,
            stats=oracle.stats.minus(base_stats),
            wall_time=time.perf_counter() - t0,
        )

    max_index = max_hash_index(projection, family, consts.ell)
    estimates: list[int] = []
    probe_counts: list[int] = []
    exhausted_refinements = 0
    discarded = 0
    for _ in range(consts.itercount):
        attempts = 0
        while True:
            outcome = _one_iteration(
                oracle,
                projection,
                consts,
                family,
                rng,
                max_index,
                on_exhausted,
                exponent_halving,
            )
            if outcome.estimate is not None:
                estimates.append(outcome.estimate)
                probe_counts.append(outcome.probes)
                exhausted_refinements += int(outcome.exhausted)
                break
            discarded += 1
            attempts += 1
            if attempts > retry_budget:
                raise CounterFailed(
                    f"{attempts} refinement attempts in a row exhausted every "
                    "coarser exponent; rerun with on_exhausted='keep'"
                )
    return CountResult(
        estimate=find_median(estimates),
        raw_estimates=tuple(estimates),
        constants=consts,
        family=family,
        epsilon=epsilon,
        delta=delta,
        seed=seed,
        early_exit=False,
        probe_counts=tuple(probe_counts),
        exhausted_refinements=exhausted_refinements,
        discarded_attempts=discarded,
        stats=oracle.stats.minus(base_stats),
        wall_time=time.perf_counter() - t0,
    )
