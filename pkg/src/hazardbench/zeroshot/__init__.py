from .prompt import (
    OUTLINE_STYLE,
    ZEROSHOT_INSTRUCTION,
    ZEROSHOT_PROMPT_VERSION,
    ZeroShotContext,
    ZeroShotPrompt,
    build_zeroshot_prompt,
)
from .client import HttpVlmClient, MockVlmClient, VlmClient
from .run import (
    ZEROSHOT_TEMPERATURE,
    ZeroShotResult,
    ZeroShotRunConfig,
    image_digest,
    query_external_vlm,
    run_zeroshot,
)

__all__ = [
    "ZEROSHOT_PROMPT_VERSION",
    "ZEROSHOT_INSTRUCTION",
    "ZEROSHOT_TEMPERATURE",
    "OUTLINE_STYLE",
    "ZeroShotContext",
    "ZeroShotPrompt",
    "build_zeroshot_prompt",
    "VlmClient",
    "MockVlmClient",
    "HttpVlmClient",
    "ZeroShotRunConfig",
    "ZeroShotResult",
    "image_digest",
    "query_external_vlm",
    "run_zeroshot",
]
