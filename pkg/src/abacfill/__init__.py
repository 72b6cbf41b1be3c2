"""Infer missing attribute values in ABAC object models.

Pipeline: group similar objects on their known attributes, learn which
atomic conditions and constraints track each group pair's entitlements,
then read predicted values for missing cells off the top-ranked features.
"""

from .model import (
    MISSING,
    NULL,
    AbacError,
    AtomicCondition,
    AtomicConstraint,
    AttrKind,
    AttrSchema,
    ConfigError,
    Entitlement,
    InputError,
    InsufficientDataError,
    Obj,
    ObjectModel,
    Policy,
    Rule,
    Schema,
    SchemaError,
    Side,
)
from .evaluate import Tri, policy_meaning, rule_meaning

__version__ = "0.1.0"

__all__ = [
    "MISSING",
    "NULL",
    "AbacError",
    "AtomicCondition",
    "AtomicConstraint",
    "AttrKind",
    "AttrSchema",
    "ConfigError",
    "Entitlement",
    "InputError",
    "InsufficientDataError",
    "Obj",
    "ObjectModel",
    "Policy",
    "Rule",
    "Schema",
    "SchemaError",
    "Side",
    "Tri",
    "policy_meaning",
    "rule_meaning",
    "__version__",
]
