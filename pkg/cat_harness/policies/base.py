"""
Base classes for ego driving policies.
"""

from abc import ABC, abstractmethod
from typing import Any, Dict, List, Optional

from ..models.data_models import ControlCommand, ObservedWorld, PolicyContext, VehicleLimits


class EgoPolicy(ABC):
    """Abstract base class for the driving policy under test.

    A policy sees only the delayed observation passed to ``step``; it never
    reads scenario ground truth. Internal state is reset per scenario.
    """

    # Policies that model a software stack run with the configured latency.
    uses_latency: bool = True

    def __init__(self):
        self.context: Optional[PolicyContext] = None

    @property
    @abstractmethod
    def name(self) -> str:
        """Return the registry name of this policy."""
        pass

    @property
    @abstractmethod
    def description(self) -> str:
        """Return a one-line description of this policy."""
        pass

    def configure(self, config: Any) -> None:
        """Apply harness settings (HarnessConfig). Default: nothing to configure."""
        pass

    def reset(self, context: PolicyContext) -> None:
        """Prepare for a new scenario."""
        self.context = context

    @abstractmethod
    def step(self, observed: ObservedWorld) -> ControlCommand:
        """
        Compute the control command for the current step.

        Args:
            observed: Delayed observation of the world

        Returns:
            Longitudinal acceleration and curvature command
        """
        pass

    def vehicle_limits(self, default: VehicleLimits) -> VehicleLimits:
        """Motion limits the simulator clamps commands to."""
        return default


class PolicyRegistry:
    """Registry for managing available ego policies."""

    def __init__(self):
        self._policies: Dict[str, type] = {}

    def register(self, policy_class: type) -> None:
        """
        Register a policy class.

        Args:
            policy_class: The EgoPolicy subclass to register
        """
        # Create a temporary instance to get the name
        temp_instance = policy_class()
        self._policies[temp_instance.name] = policy_class

    def unregister(self, name: str) -> bool:
        """Remove a policy by name. Returns False if it was not registered."""
        return self._policies.pop(name, None) is not None

    def __contains__(self, name: str) -> bool:
        return name in self._policies

    def get_policy(self, name: str) -> EgoPolicy:
        """
        Get a fresh policy instance by name.

        Raises:
            KeyError: If the policy is not registered
        """
        if name not in self._policies:
            raise KeyError(f"Policy '{name}' is not registered (known: {', '.join(self.list_policies())})")
        return self._policies[name]()

    def list_policies(self) -> List[str]:
        return sorted(self._policies)

    def get_policy_info(self, name: str) -> Dict[str, Any]:
        policy = self.get_policy(name)
        return {
            'name': policy.name,
            'description': policy.description,
            'uses_latency': policy.uses_latency,
        }


def create_policy(name: str, config: Any = None, registry: Optional[PolicyRegistry] = None) -> EgoPolicy:
    """Instantiate and configure a registered policy."""
    policy = (registry or policy_registry).get_policy(name)
    if config is not None:
        policy.configure(config)
    return policy


# Global registry instance
policy_registry = PolicyRegistry()
