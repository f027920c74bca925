"""
NIEON参照ドライバをポリシーとして実行するためのクラス

ScheduledPolicy は1つの回避候補（制動・左右の回避操舵）を反応時刻から再生する。
NieonAsPolicy は評価時に選ばれた候補を再生し、ADSポリシーの代わりに参照ドライバ自身を
評価するときに使う（参照ドライバと同点になることの確認用）。
"""

from typing import Optional

from ..models.data_models import (
    ControlCommand,
    ManeuverLimits,
    ManeuverPlan,
    NieonManeuver,
    ObservedWorld,
    PolicyContext,
    SwerveDirection,
    VehicleLimits,
)
from ..services.nieon_planning import BrakeSchedule, SwerveSchedule, plan_brake, plan_swerve, reference_vehicle_limits
from .base import EgoPolicy


# 反応時刻の判定に使う許容差
REACTION_TOLERANCE = 1e-9

_DIRECTIONS = {
    NieonManeuver.SWERVE_LEFT: SwerveDirection.LEFT,
    NieonManeuver.SWERVE_RIGHT: SwerveDirection.RIGHT,
}


class ScheduledPolicy(EgoPolicy):
    """反応時刻までは経路追従、以降は計画した回避操作を再生する"""

    uses_latency = False

    def __init__(self, plan: Optional[ManeuverPlan] = None):
        super().__init__()
        self.plan = plan
        self._schedule = None
        self._start = 0.0

    @property
    def name(self) -> str:
        return "nieon_scheduled"

    @property
    def description(self) -> str:
        return "Replays one reference evasive maneuver from its reaction time"

    def reset(self, context: PolicyContext) -> None:
        super().reset(context)
        self._schedule = None
        self._start = 0.0

    def _build(self, observed: ObservedWorld):
        """反応時点の自車状態から回避スケジュールを作る

        Raises:
            DegenerateSpeed: 停止中に回避操舵を計画した場合
        """
        plan = self.plan
        if plan.maneuver is NieonManeuver.BRAKE_ONLY:
            return plan_brake(observed.ego, plan.limits)
        return plan_swerve(_DIRECTIONS[plan.maneuver], observed.ego, plan.limits, braking=plan.swerve_brakes)

    def step(self, observed: ObservedWorld) -> ControlCommand:
        if self.plan is None or (self._schedule is None
                                 and observed.t < self.plan.reaction_time - REACTION_TOLERANCE):
            return ControlCommand(0.0, observed.route_curvature)
        if self._schedule is None:
            self._schedule = self._build(observed)
            self._start = observed.t

        tau = observed.t - self._start
        half_step = 0.5 * (self.context.step if self.context is not None else 0.0)
        schedule = self._schedule
        accel = schedule.accel_at(tau + half_step)
        if isinstance(schedule, BrakeSchedule):
            return ControlCommand(accel, schedule.curvature)
        assert isinstance(schedule, SwerveSchedule)
        return ControlCommand(accel, schedule.curvature_at(tau, observed.ego.speed))

    def vehicle_limits(self, default: VehicleLimits) -> VehicleLimits:
        if self.plan is None:
            return default
        return reference_vehicle_limits(self.plan.limits)


class NieonAsPolicy(EgoPolicy):
    """評価済みの参照ドライバの選択をそのまま再生するポリシー"""

    uses_latency = False

    def __init__(self):
        super().__init__()
        self.limits = ManeuverLimits()
        self._delegate = ScheduledPolicy()

    @property
    def name(self) -> str:
        return "nieon_as_policy"

    @property
    def description(self) -> str:
        return "The reference driver itself, replaying its chosen evasive maneuver"

    def configure(self, config) -> None:
        self.limits = config.nieon.limits

    def reset(self, context: PolicyContext) -> None:
        super().reset(context)
        self._delegate = ScheduledPolicy(context.nieon_plan)
        self._delegate.reset(context)

    def step(self, observed: ObservedWorld) -> ControlCommand:
        return self._delegate.step(observed)

    def vehicle_limits(self, default: VehicleLimits) -> VehicleLimits:
        return reference_vehicle_limits(self.limits)
