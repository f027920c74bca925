"""
Ego driving policies for the evaluation harness.
"""

from .base import EgoPolicy, PolicyRegistry, create_policy, policy_registry
from .no_reaction import NoReactionPolicy
from .aeb import AebPolicy
from .nieon_policy import NieonAsPolicy, ScheduledPolicy

# Register built-in policies
policy_registry.register(NoReactionPolicy)
policy_registry.register(AebPolicy)
policy_registry.register(NieonAsPolicy)

__all__ = [
    'EgoPolicy',
    'PolicyRegistry',
    'create_policy',
    'policy_registry',
    'NoReactionPolicy',
    'AebPolicy',
    'NieonAsPolicy',
    'ScheduledPolicy',
]
