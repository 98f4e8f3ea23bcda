from .assign import (
    DEFAULT_BAND,
    MAX_CATEGORIES_PER_RATER,
    MIN_CATEGORIES_PER_RATER,
    AssignmentPlan,
    Rater,
    assign_categories,
)
from .latin import OrderingCycle, williams_rows
from .plan import (
    ANCHORS_PER_SESSION,
    ANCHORS_PER_TYPE,
    DIVERSITY_SCALES,
    POLE_COMBOS,
    RATING_SCALES,
    REFERENTS_PER_CATEGORY,
    AnchorSpec,
    CategoryPlanTemplate,
    Finalist,
    PlanBundle,
    SessionOrdering,
    SessionPlan,
    Trial,
    TrialError,
    append_break,
    assemble_plans,
    build_category_plan,
    build_diversity_plans,
    build_session_plans,
    counterbalance,
    derive_seed,
)

__all__ = [
    "ANCHORS_PER_SESSION",
    "ANCHORS_PER_TYPE",
    "DEFAULT_BAND",
    "DIVERSITY_SCALES",
    "MAX_CATEGORIES_PER_RATER",
    "MIN_CATEGORIES_PER_RATER",
    "POLE_COMBOS",
    "RATING_SCALES",
    "REFERENTS_PER_CATEGORY",
    "AnchorSpec",
    "AssignmentPlan",
    "CategoryPlanTemplate",
    "Finalist",
    "OrderingCycle",
    "PlanBundle",
    "Rater",
    "SessionOrdering",
    "SessionPlan",
    "Trial",
    "TrialError",
    "append_break",
    "assemble_plans",
    "assign_categories",
    "build_category_plan",
    "build_diversity_plans",
    "build_session_plans",
    "counterbalance",
    "derive_seed",
    "williams_rows",
]
