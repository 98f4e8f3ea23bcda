"""Listening-test scripts: referents, counterbalanced finalist blocks,
hidden anchors, breaks, and diversity-file sessions.

A sealed plan carries the hidden payload (clip, system, anchor poles) per
trial; the public plan strips those fields so raters and the UI never see
system identity. Audio is addressed by opaque 96-bit tokens.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from ..select.sequence import DiversitySequence
from .latin import OrderingCycle

REFERENTS_PER_CATEGORY = 6
ANCHORS_PER_TYPE = 4
POLE_COMBOS = (("high", "low"), ("high", "high"), ("low", "low"))
ANCHORS_PER_SESSION = ANCHORS_PER_TYPE * len(POLE_COMBOS)
TOKEN_BYTES = 12  # 96 bits

RATING_SCALES = ("quality", "fit")
DIVERSITY_SCALES = ("diversity",)


class TrialError(ValueError):
    pass


def derive_seed(seed: int, *parts: str) -> int:
    """Stable 64-bit sub-seed for an independent random stream."""
    tag = ":".join(parts)
    digest = hashlib.sha256(f"{seed}:{tag}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


@dataclass
class Finalist:
    system_id: str
    track: str


@dataclass
class AnchorSpec:
    clip_id: str
    quality_pole: str  # "high" | "low"
    fit_pole: str
    category: str

    def __post_init__(self):
        if (self.quality_pole, self.fit_pole) not in POLE_COMBOS:
            raise TrialError(
                f"anchor {self.clip_id!r}: pole combination "
                f"({self.quality_pole}, {self.fit_pole}) is not used"
            )

    @property
    def label(self) -> str:
        return f"{self.quality_pole}_{self.fit_pole}"


@dataclass
class Trial:
    trial_id: str
    kind: str  # referent | rating | diversity | break
    clip_token: str  # "" for break markers
    position: int
    scales: tuple
    # sealed payload, stripped from the public plan
    clip_id: str = ""
    system_id: str = ""
    anchor: str = ""  # "" or "<quality_pole>_<fit_pole>"

    def public_dict(self) -> dict:
        return {
            "trial_id": self.trial_id,
            "kind": self.kind,
            "clip_token": self.clip_token,
            "position": self.position,
            "scales": list(self.scales),
        }

    def sealed_dict(self) -> dict:
        d = self.public_dict()
        d.update(clip_id=self.clip_id, system_id=self.system_id, anchor=self.anchor)
        return d


@dataclass
class SessionPlan:
    session_id: str
    rater_id: str
    category: str
    kind: str  # "rating" | "diversity"
    seed: int
    trials: list[Trial] = field(default_factory=list)

    def counts(self) -> dict:
        out = {"referent": 0, "rating": 0, "diversity": 0, "break": 0, "anchor": 0}
        per_system: dict[str, int] = {}
        per_anchor_type: dict[str, int] = {}
        for t in self.trials:
            out[t.kind] += 1
            if t.anchor:
                out["anchor"] += 1
                per_anchor_type[t.anchor] = per_anchor_type.get(t.anchor, 0) + 1
            elif t.kind in ("rating", "diversity") and t.system_id:
                per_system[t.system_id] = per_system.get(t.system_id, 0) + 1
        out["per_system"] = per_system
        out["per_anchor_type"] = per_anchor_type
        return out

    def sealed_dict(self) -> dict:
        return {
            "session_id": self.session_id,
            "rater_id": self.rater_id,
            "category": self.category,
            "kind": self.kind,
            "seed": self.seed,
            "trials": [t.sealed_dict() for t in self.trials],
        }

    def public_dict(self) -> dict:
        return {
            "session_id": self.session_id,
            "rater_id": self.rater_id,
            "category": self.category,
            "kind": self.kind,
            "trials": [t.public_dict() for t in self.trials],
        }

    @staticmethod
    def from_sealed_dict(d: dict) -> "SessionPlan":
        trials = [
            Trial(
                trial_id=t["trial_id"],
                kind=t["kind"],
                clip_token=t["clip_token"],
                position=t["position"],
                scales=tuple(t["scales"]),
                clip_id=t.get("clip_id", ""),
                system_id=t.get("system_id", ""),
                anchor=t.get("anchor", ""),
            )
            for t in d["trials"]
        ]
        return SessionPlan(
            session_id=d["session_id"],
            rater_id=d["rater_id"],
            category=d["category"],
            kind=d["kind"],
            seed=d["seed"],
            trials=trials,
        )


@dataclass
class CategoryPlanTemplate:
    category: str
    finalists: list[Finalist]
    referents: list[str]  # 6 clip ids
    anchors: list[AnchorSpec]  # 12, 4 per pole combination
    medoids: dict[str, list[str]]  # system_id -> ordered medoid clip ids
    seed: int


def build_category_plan(
    category: str,
    finalists: list[Finalist],
    medoids: dict[str, list[str]],
    anchors: list[AnchorSpec],
    referents: list[str],
    seed: int,
) -> CategoryPlanTemplate:
    """Validate counts and freeze the per-category ingredients."""
    if len(referents) != REFERENTS_PER_CATEGORY:
        raise TrialError(
            f"{category}: expected {REFERENTS_PER_CATEGORY} referents, got {len(referents)}"
        )
    if len(anchors) != ANCHORS_PER_SESSION:
        raise TrialError(
            f"{category}: expected {ANCHORS_PER_SESSION} anchors, got {len(anchors)}"
        )
    per_type: dict[str, int] = {}
    for a in anchors:
        if a.category != category:
            raise TrialError(
                f"anchor {a.clip_id!r} belongs to {a.category!r}, not {category!r}"
            )
        per_type[a.label] = per_type.get(a.label, 0) + 1
    for q, f in POLE_COMBOS:
        label = f"{q}_{f}"
        if per_type.get(label, 0) != ANCHORS_PER_TYPE:
            raise TrialError(
                f"{category}: expected {ANCHORS_PER_TYPE} anchors of type {label}, "
                f"got {per_type.get(label, 0)}"
            )
    if not finalists:
        raise TrialError(f"{category}: no finalists")
    sizes = set()
    for fin in finalists:
        clips = medoids.get(fin.system_id)
        if not clips:
            raise TrialError(f"{category}: finalist {fin.system_id!r} has no medoids")
        sizes.add(len(clips))
    if len(sizes) != 1:
        raise TrialError(f"{category}: finalists have unequal medoid counts {sorted(sizes)}")
    return CategoryPlanTemplate(
        category=category,
        finalists=sorted(finalists, key=lambda f: f.system_id),
        referents=list(referents),
        anchors=list(anchors),
        medoids={f.system_id: list(medoids[f.system_id]) for f in finalists},
        seed=seed,
    )


@dataclass
class PlannedItem:
    kind: str
    clip_id: str
    system_id: str
    anchor: str


@dataclass
class SessionOrdering:
    block_order: list[str]  # system ids in block-presentation order
    items: list[PlannedItem]  # rating trials with anchors embedded


def counterbalance(
    template: CategoryPlanTemplate, n_instances: int, seed: int | None = None
) -> list[SessionOrdering]:
    """Per-instance rating-trial orders: Latin-square block order, seeded
    within-block shuffles, anchors scattered at seeded-random positions."""
    if n_instances < 1:
        raise TrialError(f"need at least one instance, got {n_instances}")
    base = template.seed if seed is None else seed
    master = np.random.SeedSequence([derive_seed(base, "order", template.category)])
    children = master.spawn(n_instances + 1)
    cycle = OrderingCycle(
        template.finalists, np.random.Generator(np.random.PCG64(children[0]))
    )

    orderings = []
    for i in range(n_instances):
        rng = np.random.Generator(np.random.PCG64(children[i + 1]))
        order = cycle.take()
        base_items: list[PlannedItem] = []
        for fin in order:
            clips = template.medoids[fin.system_id]
            for j in rng.permutation(len(clips)):
                base_items.append(
                    PlannedItem("rating", clips[int(j)], fin.system_id, "")
                )
        anchor_order = [template.anchors[int(j)] for j in rng.permutation(len(template.anchors))]
        total = len(base_items) + len(anchor_order)
        slots = sorted(int(s) for s in rng.choice(total, size=len(anchor_order), replace=False))
        items: list[PlannedItem] = []
        base_iter = iter(base_items)
        anchor_iter = iter(anchor_order)
        slot_set = set(slots)
        for pos in range(total):
            if pos in slot_set:
                a = next(anchor_iter)
                items.append(PlannedItem("rating", a.clip_id, "", a.label))
            else:
                items.append(next(base_iter))
        orderings.append(
            SessionOrdering(block_order=[f.system_id for f in order], items=items)
        )
    return orderings


def build_session_plans(
    template: CategoryPlanTemplate, rater_ids: list[str], seed: int | None = None
) -> list[SessionPlan]:
    """One rating session per rater for one category, tokens minted."""
    base = template.seed if seed is None else seed
    orderings = counterbalance(template, len(rater_ids), seed=base)
    token_rng = np.random.Generator(
        np.random.PCG64(np.random.SeedSequence([derive_seed(base, "tokens", template.category)]))
    )
    plans = []
    for rater_id, ordering in zip(rater_ids, orderings):
        session_id = f"s-{rater_id}-{template.category}"
        trials = []
        for clip_id in template.referents:
            trials.append(
                Trial(
                    trial_id=f"t{len(trials):03d}",
                    kind="referent",
                    clip_token=token_rng.bytes(TOKEN_BYTES).hex(),
                    position=len(trials),
                    scales=(),
                    clip_id=clip_id,
                )
            )
        for item in ordering.items:
            trials.append(
                Trial(
                    trial_id=f"t{len(trials):03d}",
                    kind="rating",
                    clip_token=token_rng.bytes(TOKEN_BYTES).hex(),
                    position=len(trials),
                    scales=RATING_SCALES,
                    clip_id=item.clip_id,
                    system_id=item.system_id,
                    anchor=item.anchor,
                )
            )
        plans.append(
            SessionPlan(
                session_id=session_id,
                rater_id=rater_id,
                category=template.category,
                kind="rating",
                seed=base,
                trials=trials,
            )
        )
    return plans


def build_diversity_plans(
    sequences_by_category: dict[str, list[DiversitySequence]],
    rater_ids: list[str],
    seed: int,
) -> list[SessionPlan]:
    """One diversity session per (rater, category), file order counterbalanced."""
    plans = []
    for category in sorted(sequences_by_category):
        sequences = sorted(sequences_by_category[category], key=lambda s: s.system_id)
        if not sequences:
            raise TrialError(f"{category}: no diversity sequences")
        cat_seed = derive_seed(seed, "diversity", category)
        master = np.random.SeedSequence([cat_seed])
        order_rng, token_seq = master.spawn(2)
        cycle = OrderingCycle(sequences, np.random.Generator(np.random.PCG64(order_rng)))
        token_rng = np.random.Generator(np.random.PCG64(token_seq))
        for rater_id in rater_ids:
            session_id = f"d-{rater_id}-{category}"
            trials = []
            for seq in cycle.take():
                trials.append(
                    Trial(
                        trial_id=f"t{len(trials):03d}",
                        kind="diversity",
                        clip_token=token_rng.bytes(TOKEN_BYTES).hex(),
                        position=len(trials),
                        scales=DIVERSITY_SCALES,
                        clip_id=seq.file_name,
                        system_id=seq.system_id,
                    )
                )
            plans.append(
                SessionPlan(
                    session_id=session_id,
                    rater_id=rater_id,
                    category=category,
                    kind="diversity",
                    seed=cat_seed,
                    trials=trials,
                )
            )
    return plans


def append_break(plan: SessionPlan) -> None:
    """Mark that the rater may rest after this session before the next category."""
    plan.trials.append(
        Trial(
            trial_id=f"t{len(plan.trials):03d}",
            kind="break",
            clip_token="",
            position=len(plan.trials),
            scales=(),
        )
    )


@dataclass
class PlanBundle:
    seed: int
    sessions: list[SessionPlan]
    clip_paths: dict[str, str]

    def session_by_pair(self) -> dict[tuple, SessionPlan]:
        return {(p.rater_id, p.category): p for p in self.sessions}

    def session_by_id(self) -> dict[str, SessionPlan]:
        return {p.session_id: p for p in self.sessions}

    def trial_lookup(self) -> dict[tuple, Trial]:
        out = {}
        for plan in self.sessions:
            for t in plan.trials:
                out[(plan.session_id, t.trial_id)] = t
        return out

    def audio_map(self) -> dict[str, str]:
        """Opaque token -> audio file path."""
        out = {}
        for plan in self.sessions:
            for t in plan.trials:
                if not t.clip_token:
                    continue
                if t.clip_id not in self.clip_paths:
                    raise TrialError(f"no audio path for clip {t.clip_id!r}")
                out[t.clip_token] = self.clip_paths[t.clip_id]
        return out

    def sealed_dict(self) -> dict:
        return {
            "version": 1,
            "seed": self.seed,
            "clip_paths": dict(sorted(self.clip_paths.items())),
            "sessions": [p.sealed_dict() for p in self.sessions],
        }

    def public_dict(self) -> dict:
        return {
            "version": 1,
            "sessions": [p.public_dict() for p in self.sessions],
        }

    @staticmethod
    def from_sealed_dict(d: dict) -> "PlanBundle":
        return PlanBundle(
            seed=d["seed"],
            sessions=[SessionPlan.from_sealed_dict(s) for s in d["sessions"]],
            clip_paths=d.get("clip_paths", {}),
        )

    @staticmethod
    def load_sealed(path: str) -> "PlanBundle":
        with open(path, "r", encoding="utf-8") as fh:
            return PlanBundle.from_sealed_dict(json.load(fh))


def assemble_plans(
    templates: dict[str, CategoryPlanTemplate],
    assignments: dict[str, list[str]],
    diversity_raters: list[str],
    diversity_sequences: dict[str, list[DiversitySequence]],
    clip_paths: dict[str, str],
    seed: int,
) -> PlanBundle:
    """Build every session for the whole test from per-category templates.

    Rating raters receive their assigned categories in assignment order;
    diversity raters (a distinct role) receive every category that has
    sequence files. Break markers separate consecutive categories.
    """
    overlap = set(assignments) & set(diversity_raters)
    if overlap:
        raise TrialError(f"raters cannot hold both roles: {sorted(overlap)}")

    sessions: list[SessionPlan] = []
    by_rater: dict[str, list[SessionPlan]] = {}

    for category in sorted(templates):
        template = templates[category]
        raters = sorted(r for r, cats in assignments.items() if category in cats)
        if not raters:
            continue
        for plan in build_session_plans(template, raters, seed=derive_seed(seed, "rating", category)):
            sessions.append(plan)
            by_rater.setdefault(plan.rater_id, []).append(plan)

    if diversity_raters:
        if not diversity_sequences:
            raise TrialError("diversity raters given but no sequences")
        for plan in build_diversity_plans(diversity_sequences, sorted(diversity_raters), seed):
            sessions.append(plan)
            by_rater.setdefault(plan.rater_id, []).append(plan)

    # order each rater's sessions by their assigned category order and
    # insert a break marker after every category but the last
    for rater_id, plans in by_rater.items():
        if rater_id in assignments:
            order = {c: i for i, c in enumerate(assignments[rater_id])}
            plans.sort(key=lambda p: order.get(p.category, len(order)))
        else:
            plans.sort(key=lambda p: p.category)
        for plan in plans[:-1]:
            append_break(plan)

    tokens = [t.clip_token for p in sessions for t in p.trials if t.clip_token]
    if len(tokens) != len(set(tokens)):
        raise TrialError("audio token collision across sessions")

    bundle = PlanBundle(seed=seed, sessions=sessions, clip_paths=dict(clip_paths))
    bundle.audio_map()  # raises early if any clip lacks an audio path
    return bundle
