"""The seven sound categories and their stable integer codes."""

from __future__ import annotations

CATEGORIES: tuple[str, ...] = (
    "dog_bark",
    "footstep",
    "gunshot",
    "keyboard",
    "moving_motor_vehicle",
    "rain",
    "sneeze_cough",
)

CATEGORY_CODES: dict[str, int] = {name: code for code, name in enumerate(CATEGORIES)}


class UnknownCategoryError(ValueError):
    def __init__(self, label: str):
        self.label = label
        super().__init__(
            f"unknown category {label!r}; valid categories are: {', '.join(CATEGORIES)}"
        )


def category_code(label: str) -> int:
    """Return the stable 0-6 code for a category label, or raise UnknownCategoryError."""
    try:
        return CATEGORY_CODES[label]
    except KeyError:
        raise UnknownCategoryError(label) from None


def check_category(label: str) -> str:
    category_code(label)
    return label
