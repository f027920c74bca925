"""
No-reaction policy: holds speed and follows the route.
"""

from ..models.data_models import ControlCommand, ObservedWorld
from .base import EgoPolicy


class NoReactionPolicy(EgoPolicy):
    """Constant-velocity policy that never reacts to other actors."""

    @property
    def name(self) -> str:
        return "no_reaction"

    @property
    def description(self) -> str:
        return "Constant velocity along the route, no reaction to conflicts"

    def step(self, observed: ObservedWorld) -> ControlCommand:
        return ControlCommand(0.0, observed.route_curvature)
