"""Entity color assignments.

Each entity slot (1..3) owns a fixed color so that text references such as
"Entity #2" stay tied to one visual cue. Exact RGB values are pinned here
so renders are reproducible byte for byte.
"""

from __future__ import annotations

RGB = tuple[int, int, int]

# Filled (alpha-blended) style: purple, green, yellow.
FILLED_PALETTE: dict[int, RGB] = {
    1: (128, 0, 128),
    2: (0, 200, 0),
    3: (255, 215, 0),
}

# Outline style, also used for prompting hosted vision models:
# magenta, cyan, yellow.
OUTLINE_PALETTE: dict[int, RGB] = {
    1: (255, 0, 255),
    2: (0, 255, 255),
    3: (255, 215, 0),
}

OUTLINE_COLOR_NAMES: dict[int, str] = {1: "magenta", 2: "cyan", 3: "yellow"}

GRAY: RGB = (128, 128, 128)
