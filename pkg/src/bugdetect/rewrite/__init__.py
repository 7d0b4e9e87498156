"""Bug-inducing rewrites and their inverses, plus augmentation rewrites."""
from .augment import AUGMENTATIONS, AugmentationConfig, augment, negate
from .engine import apply, enumerate_rewrites, invert, resolve_rewrite
from .rules import (
    BUG_KINDS,
    IDENTITY,
    LITERAL_DOMAIN,
    NonInvertibleError,
    PotentialRewrite,
    RewriteRule,
    RuleKind,
    StaleRewriteError,
)

__all__ = [
    "AUGMENTATIONS", "AugmentationConfig", "BUG_KINDS", "IDENTITY", "LITERAL_DOMAIN",
    "NonInvertibleError", "PotentialRewrite", "RewriteRule", "RuleKind", "StaleRewriteError",
    "apply", "augment", "enumerate_rewrites", "invert", "negate", "resolve_rewrite",
]
