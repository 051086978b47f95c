from .palette import (
    FILLED_PALETTE,
    GRAY,
    OUTLINE_COLOR_NAMES,
    OUTLINE_PALETTE,
    RGB,
)
from .render import (
    AblationMode,
    RenderMode,
    RenderStyle,
    RenderedImage,
    apply_ablation_mode,
    render_entity_boxes,
)
from .geometry import (
    GeomConfig,
    JitterConfig,
    center_crop,
    color_jitter,
    prepare_image,
    random_crop,
    rescale_box,
    resize_square,
)
from .augment import (
    make_comprehensive_text,
    random_entity_permutation,
    shuffle_entities,
)

__all__ = [
    "RGB",
    "FILLED_PALETTE",
    "OUTLINE_PALETTE",
    "OUTLINE_COLOR_NAMES",
    "GRAY",
    "RenderMode",
    "RenderStyle",
    "RenderedImage",
    "AblationMode",
    "render_entity_boxes",
    "apply_ablation_mode",
    "GeomConfig",
    "JitterConfig",
    "color_jitter",
    "resize_square",
    "rescale_box",
    "random_crop",
    "center_crop",
    "prepare_image",
    "shuffle_entities",
    "random_entity_permutation",
    "make_comprehensive_text",
]
