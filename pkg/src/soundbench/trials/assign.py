"""Greedy balanced assignment of raters to categories.

Each session of a category contributes one independent rating per sound,
so a category's expected ratings-per-sound equals the number of raters
assigned to it. The target band is [10, 15] by default.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..categories import CATEGORIES
from .plan import TrialError, derive_seed

MIN_CATEGORIES_PER_RATER = 4
MAX_CATEGORIES_PER_RATER = 7
DEFAULT_BAND = (10, 15)


@dataclass
class Rater:
    rater_id: str
    team_id: str = ""
    capacity: int = MIN_CATEGORIES_PER_RATER  # categories this rater will take, 4..7
    role: str = "rating"  # "rating" | "diversity"

    def __post_init__(self):
        if self.role not in ("rating", "diversity"):
            raise TrialError(f"rater {self.rater_id!r}: unknown role {self.role!r}")
        if self.role == "rating" and not (
            MIN_CATEGORIES_PER_RATER <= self.capacity <= MAX_CATEGORIES_PER_RATER
        ):
            raise TrialError(
                f"rater {self.rater_id!r}: capacity {self.capacity} outside "
                f"[{MIN_CATEGORIES_PER_RATER}, {MAX_CATEGORIES_PER_RATER}]"
            )


@dataclass
class AssignmentPlan:
    assignments: dict[str, list[str]]  # rater -> categories in assigned order
    coverage: dict[str, int]  # category -> session count (= ratings per sound)
    band: tuple[int, int]
    shortfall: dict[str, int] = field(default_factory=dict)  # below band minimum
    overshoot: dict[str, int] = field(default_factory=dict)  # above band maximum

    @property
    def feasible(self) -> bool:
        return not self.shortfall


def assign_categories(
    raters: list[Rater],
    band: tuple[int, int] = DEFAULT_BAND,
    seed: int = 0,
    categories: tuple[str, ...] = CATEGORIES,
) -> AssignmentPlan:
    """Assign categories so coverage lands inside the band where possible.

    Phase 1 brings every rater to the required minimum of 4 categories,
    always feeding the least-covered category. Phase 2 tops up categories
    below the band minimum from raters with spare capacity. An infeasible
    band yields a best-effort plan plus a shortfall report, not an error.
    """
    rating = [r for r in raters if r.role == "rating"]
    if not rating:
        raise TrialError("no rating raters supplied")
    ids = [r.rater_id for r in rating]
    if len(ids) != len(set(ids)):
        raise TrialError("duplicate rater ids")

    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([derive_seed(seed, "assign")])))
    assignments: dict[str, list[str]] = {r.rater_id: [] for r in rating}
    coverage: dict[str, int] = {c: 0 for c in categories}
    capacity = {r.rater_id: r.capacity for r in rating}

    def least_covered(exclude: set) -> str | None:
        candidates = [c for c in categories if c not in exclude]
        if not candidates:
            return None
        low = min(coverage[c] for c in candidates)
        return sorted(c for c in candidates if coverage[c] == low)[0]

    # phase 1: required minimum per rater, least-covered category first
    for _ in range(MIN_CATEGORIES_PER_RATER):
        order = sorted(assignments, key=lambda r: (len(assignments[r]), r))
        for rater_id in order:
            if len(assignments[rater_id]) >= MIN_CATEGORIES_PER_RATER:
                continue
            category = least_covered(set(assignments[rater_id]))
            if category is None:
                continue
            assignments[rater_id].append(category)
            coverage[category] += 1

    # phase 2: top up below-minimum categories from spare capacity
    unfillable: set[str] = set()
    while True:
        below = [
            c for c in categories if coverage[c] < band[0] and c not in unfillable
        ]
        if not below:
            break
        category = least_covered(set(categories) - set(below))
        takers = [
            r
            for r in assignments
            if category not in assignments[r] and len(assignments[r]) < capacity[r]
        ]
        if not takers:
            unfillable.add(category)
            continue
        fewest = min(len(assignments[r]) for r in takers)
        pool = sorted(r for r in takers if len(assignments[r]) == fewest)
        rater_id = pool[int(rng.integers(len(pool)))]
        assignments[rater_id].append(category)
        coverage[category] += 1

    shortfall = {c: band[0] - coverage[c] for c in categories if coverage[c] < band[0]}
    overshoot = {c: coverage[c] - band[1] for c in categories if coverage[c] > band[1]}
    return AssignmentPlan(
        assignments=assignments,
        coverage=coverage,
        band=band,
        shortfall=shortfall,
        overshoot=overshoot,
    )
