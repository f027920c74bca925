"""
NIEON参照ドライバの応答時間と回避操作スケジュール

制動はジャーク制限付きで最大減速度まで立ち上げ、停止まで保持する。
回避操舵は横加速度のバンバン入力で swerve_offset だけ横移動する。
"""

import math
from dataclasses import dataclass
from typing import List, Sequence

from ..models.data_models import (
    ManeuverLimits,
    ResponseTimeModel,
    StimulusAnnotation,
    SwerveDirection,
    VehicleLimits,
    VehicleState,
)
from .error_handling import DegenerateSpeed, NonPositiveIntercept


def ramp_up_time(stimulus: StimulusAnnotation) -> float:
    """刺激の立ち上がり時間（終了 - 開始）"""
    return stimulus.end_time - stimulus.onset_time


def response_time(model: ResponseTimeModel, ramp_up: float) -> float:
    """max(floor, intercept + slope * ramp_up)"""
    return max(model.floor, model.intercept + model.slope * ramp_up)


def stringency_variants(model: ResponseTimeModel, deltas: Sequence[float]) -> List[ResponseTimeModel]:
    """切片を deltas だけずらした応答時間モデル群

    Raises:
        NonPositiveIntercept: ずらした切片が0以下になる場合
    """
    variants = []
    for delta in deltas:
        intercept = round(model.intercept + delta, 12)
        if intercept <= 0.0:
            raise NonPositiveIntercept(model.intercept, delta)
        variants.append(ResponseTimeModel(intercept, model.slope, model.floor))
    return variants


def reference_vehicle_limits(limits: ManeuverLimits) -> VehicleLimits:
    """参照ドライバのシミュレーションで使う運動制限

    曲率は操舵の限界曲率で制限する。横加速度の制限は回避操舵の曲率指令（a_lat / v²）側で効く。
    """
    return VehicleLimits(max_brake=limits.max_decel, max_accel=3.0, max_curvature=limits.max_curvature)


@dataclass(frozen=True)
class BrakeSchedule:
    """反応時刻からの制動スケジュール（τ は反応時刻からの経過時間）

    減速度は現在値から jerk で max_decel まで立ち上がり、停止後は0。
    jerk = inf で瞬時に最大減速度となる。
    """
    initial_speed: float
    initial_accel: float
    max_decel: float
    jerk: float
    curvature: float = 0.0

    @property
    def _initial_decel(self) -> float:
        return min(-self.initial_accel, self.max_decel)

    @property
    def ramp_time(self) -> float:
        return max(0.0, (self.max_decel - self._initial_decel) / self.jerk)

    def _ramp(self, tau: float):
        """立ち上げ区間 0 <= τ <= ramp_time の (速度, 距離)"""
        if tau <= 0.0:
            return self.initial_speed, 0.0
        v0, d0, j = self.initial_speed, self._initial_decel, self.jerk
        return (v0 - d0 * tau - 0.5 * j * tau * tau,
                v0 * tau - 0.5 * d0 * tau * tau - j * tau ** 3 / 6.0)

    @property
    def stop_time(self) -> float:
        v0 = self.initial_speed
        if v0 <= 0.0:
            return 0.0
        t1 = self.ramp_time
        v1, _ = self._ramp(t1)
        if v1 <= 0.0:
            # 立ち上げ中に停止: j/2 τ² + d0 τ - v0 = 0
            d0, j = self._initial_decel, self.jerk
            return (-d0 + math.sqrt(d0 * d0 + 2.0 * j * v0)) / j
        return t1 + v1 / self.max_decel

    def accel_at(self, tau: float) -> float:
        if tau < 0.0:
            return self.initial_accel
        if tau >= self.stop_time:
            return 0.0
        if tau >= self.ramp_time:
            return -self.max_decel
        return -(self._initial_decel + self.jerk * tau)

    def speed_at(self, tau: float) -> float:
        tau = min(max(tau, 0.0), self.stop_time)
        t1 = self.ramp_time
        if tau <= t1:
            return max(0.0, self._ramp(tau)[0])
        v1, _ = self._ramp(t1)
        return max(0.0, v1 - self.max_decel * (tau - t1))

    def distance(self, tau: float = math.inf) -> float:
        """反応時刻から τ までの走行距離（省略時は停止距離）"""
        tau = min(max(tau, 0.0), self.stop_time)
        t1 = self.ramp_time
        if tau <= t1:
            return self._ramp(tau)[1]
        v1, x1 = self._ramp(t1)
        rest = tau - t1
        return x1 + v1 * rest - 0.5 * self.max_decel * rest * rest


def plan_brake(state: VehicleState, limits: ManeuverLimits) -> BrakeSchedule:
    """反応時点の状態から制動スケジュールを作る（曲率は反応前の値を保持）"""
    return BrakeSchedule(state.speed, state.accel, limits.max_decel, limits.jerk_limit, state.curvature)


@dataclass(frozen=True)
class SwerveSchedule:
    """横方向バンバン入力による車線オフセット"""
    direction: SwerveDirection
    lateral_accel: float
    offset: float
    brake: BrakeSchedule
    braking: bool = True
    base_curvature: float = 0.0
    max_curvature: float = 0.2

    @property
    def duration(self) -> float:
        return 2.0 * math.sqrt(self.offset / self.lateral_accel)

    def lateral_accel_at(self, tau: float) -> float:
        half = self.duration / 2.0
        if 0.0 <= tau < half:
            return self.direction.value * self.lateral_accel
        if half <= tau < self.duration:
            return -self.direction.value * self.lateral_accel
        return 0.0

    def lateral_offset_at(self, tau: float) -> float:
        a, total = self.lateral_accel, self.duration
        tau = min(max(tau, 0.0), total)
        if tau < total / 2.0:
            value = 0.5 * a * tau * tau
        else:
            value = self.offset - 0.5 * a * (total - tau) ** 2
        return self.direction.value * value

    def accel_at(self, tau: float) -> float:
        return self.brake.accel_at(tau) if self.braking else 0.0

    def curvature_at(self, tau: float, speed: float) -> float:
        """経路の横加速度と現在速度から曲率指令を求める

        指令は a_lat / v²（v は 1 m/s で下限）で、経路曲率との和を操舵の限界曲率で制限する。
        低速で限界曲率に達した後は横加速度が a_lat より小さくなる。
        """
        kappa = self.base_curvature + self.lateral_accel_at(tau) / max(speed, 1.0) ** 2
        return min(max(kappa, -self.max_curvature), self.max_curvature)


def plan_swerve(direction: SwerveDirection, state: VehicleState, limits: ManeuverLimits,
                braking: bool = True) -> SwerveSchedule:
    """回避操舵のスケジュール

    Raises:
        DegenerateSpeed: 速度が0の場合（制動のみと同じになる）
    """
    if state.speed <= 1e-9:
        raise DegenerateSpeed(state.speed)
    return SwerveSchedule(
        direction=direction,
        lateral_accel=limits.max_lateral_accel,
        offset=limits.swerve_offset,
        brake=plan_brake(state, limits),
        braking=braking,
        base_curvature=state.curvature,
        max_curvature=limits.max_curvature,
    )
