"""
自動緊急ブレーキ（AEB）ポリシー

観測された自車と他アクターを等速で先読みし、予測時間内に重なりが見つかったら
ジャーク制限付きで最大減速度まで制動する。制動は一度始めたら解除しない。
"""

import numpy as np

from ..models.data_models import ControlCommand, ObservedWorld, PolicyContext
from ..services.collision_geometry import batch_overlap, corners_along
from ..services.logging_config import get_harness_logger
from .base import EgoPolicy


logger = get_harness_logger("policy.aeb")


def predict_arc(x: float, y: float, heading: float, speed: float, curvature: float,
                times: np.ndarray):
    """一定速度・一定曲率で進んだときの (x, y, heading) 配列"""
    s = speed * times
    headings = heading + curvature * s
    if abs(curvature) < 1e-9:
        return x + s * np.cos(heading), y + s * np.sin(heading), headings
    xs = x + (np.sin(headings) - np.sin(heading)) / curvature
    ys = y - (np.cos(headings) - np.cos(heading)) / curvature
    return xs, ys, headings


class AebPolicy(EgoPolicy):
    """予測衝突時間がしきい値を下回ったら全制動する参照ADS"""

    def __init__(self, horizon: float = 4.0, horizon_step: float = 0.1,
                 max_decel: float = 8.0, jerk: float = 30.0):
        super().__init__()
        self.horizon = horizon
        self.horizon_step = horizon_step
        self.max_decel = max_decel
        self.jerk = jerk
        self._braking = False
        self._accel = 0.0

    @property
    def name(self) -> str:
        return "aeb"

    @property
    def description(self) -> str:
        return "Constant-velocity collision prediction with latched jerk-limited braking"

    def configure(self, config) -> None:
        aeb = config.aeb
        self.horizon = aeb.ttc_threshold
        self.horizon_step = aeb.horizon_step
        self.max_decel = min(aeb.max_decel, config.ads_limits.max_brake)
        self.jerk = aeb.jerk

    def reset(self, context: PolicyContext) -> None:
        super().reset(context)
        self._braking = False
        self._accel = 0.0

    def predicts_conflict(self, observed: ObservedWorld) -> bool:
        """予測時間内にいずれかのアクターと重なるか"""
        if not observed.actors:
            return False
        times = np.arange(0.0, self.horizon + 1e-9, self.horizon_step)
        ego = observed.ego
        ego_corners = corners_along(*predict_arc(ego.x, ego.y, ego.heading, ego.speed,
                                                 observed.route_curvature, times),
                                    observed.ego_footprint)
        for actor in observed.actors:
            xs, ys, headings = predict_arc(actor.x, actor.y, actor.heading, actor.speed, 0.0, times)
            if batch_overlap(ego_corners, corners_along(xs, ys, headings, actor.footprint)).any():
                return True
        return False

    def step(self, observed: ObservedWorld) -> ControlCommand:
        if not self._braking and self.predicts_conflict(observed):
            self._braking = True
            logger.debug(f"衝突を予測したため制動を開始します: t={observed.t:.2f}")
        if not self._braking:
            return ControlCommand(0.0, observed.route_curvature)

        step = self.context.step if self.context is not None else 0.01
        self._accel = max(-self.max_decel, self._accel - self.jerk * step)
        return ControlCommand(self._accel, observed.route_curvature)
