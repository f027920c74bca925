"""
固定ステップの2Dシミュレーション

自車はキネマティック単軌跡モデルで積分し、他アクターはシナリオの軌跡を線形補間で再生する。
ポリシーは遅延付きの観測だけを受け取り、指令は作動遅延のキューを通って適用される。
最初の接触でシミュレーションを停止する。
"""

import hashlib
import math
from collections import deque
from dataclasses import dataclass
from typing import TYPE_CHECKING, List, Optional, Sequence, Tuple

import numpy as np

from ..models.data_models import (
    ActorKind,
    ConcreteScenario,
    Contact,
    ControlCommand,
    Footprint,
    JitterConfig,
    LatencyConfig,
    ObservedActor,
    ObservedWorld,
    PolicyContext,
    SimTrace,
    TrajectorySample,
    VehicleLimits,
    VehicleState,
    wrap_angle,
)
from .collision_geometry import batch_overlap, classify_impact_zone, detect_contact, rectangle_corners, to_body_frame
from .error_handling import ConfigurationError, PolicyFault
from .logging_config import get_harness_logger

if TYPE_CHECKING:
    from ..policies.base import EgoPolicy


STATIONARY_SPEED = 0.1
MAX_STEP = 0.05

logger = get_harness_logger("simulation")


def stable_hash(text: str) -> int:
    """プロセスに依存しない文字列ハッシュ（乱数シード用）"""
    return int.from_bytes(hashlib.sha256(text.encode("utf-8")).digest()[:8], "big")


def integrate_step(state: VehicleState, command: ControlCommand, step: float) -> VehicleState:
    """一定加速度・一定曲率で1ステップ積分（停止をまたぐ場合は停止位置で止める）"""
    accel = command.longitudinal_accel
    speed = state.speed
    if accel < 0.0 and speed + accel * step <= 0.0:
        distance = speed * speed / (-2.0 * accel) if speed > 0.0 else 0.0
        new_speed = 0.0
        applied = accel if speed > 0.0 else 0.0
    else:
        new_speed = max(0.0, speed + accel * step)
        distance = 0.5 * (speed + new_speed) * step
        applied = accel
    mid_heading = state.heading + 0.5 * command.curvature * distance
    return VehicleState(
        x=state.x + distance * math.cos(mid_heading),
        y=state.y + distance * math.sin(mid_heading),
        heading=wrap_angle(state.heading + command.curvature * distance),
        speed=new_speed,
        accel=applied,
        curvature=command.curvature,
        odometer=state.odometer + distance,
    )


@dataclass(frozen=True)
class ActorTable:
    """シミュレーション時刻に再標本化したアクター状態（配列形状: actors × steps）"""
    kinds: Tuple[ActorKind, ...]
    footprints: Tuple[Footprint, ...]
    x: np.ndarray
    y: np.ndarray
    heading: np.ndarray
    speed: np.ndarray

    @classmethod
    def from_scenario(cls, scenario: ConcreteScenario, times: np.ndarray) -> 'ActorTable':
        rows = []
        for trajectory in scenario.actor_trajectories:
            samples = np.array([[s.t, s.x, s.y, s.heading, s.speed] for s in trajectory.samples], dtype=float)
            t = samples[:, 0]
            heading = np.interp(times, t, np.unwrap(samples[:, 3]))
            rows.append((np.interp(times, t, samples[:, 1]), np.interp(times, t, samples[:, 2]),
                         (heading + math.pi) % (2.0 * math.pi) - math.pi, np.interp(times, t, samples[:, 4])))
        if not rows:
            empty = np.zeros((0, len(times)))
            return cls((), (), empty, empty, empty, empty)
        x, y, heading, speed = (np.array(column) for column in zip(*rows))
        return cls(tuple(t.kind for t in scenario.actor_trajectories), tuple(scenario.footprints),
                   x, y, heading, speed)

    @property
    def count(self) -> int:
        return len(self.kinds)

    def corners(self, index: int) -> np.ndarray:
        """ステップ index における全アクターの頂点（actors × 4 × 2）"""
        return np.array([rectangle_corners(self.x[a, index], self.y[a, index], self.heading[a, index],
                                           self.footprints[a]) for a in range(self.count)])

    def observed(self, index: int) -> Tuple[ObservedActor, ...]:
        return tuple(
            ObservedActor(a, self.kinds[a], float(self.x[a, index]), float(self.y[a, index]),
                          float(self.heading[a, index]), float(self.speed[a, index]), self.footprints[a])
            for a in range(self.count)
        )

    def samples(self, times: Sequence[float]) -> Tuple[Tuple[TrajectorySample, ...], ...]:
        n = len(times)
        return tuple(
            tuple(TrajectorySample(float(times[k]), float(self.x[a, k]), float(self.y[a, k]),
                                   float(self.heading[a, k]), float(self.speed[a, k])) for k in range(n))
            for a in range(self.count)
        )


@dataclass
class WorldHistory:
    """これまでの真値の履歴（観測の遅延再生に使う）"""
    times: List[float]
    ego_states: List[VehicleState]
    actors: ActorTable
    ego_footprint: Footprint

    def observe(self, index: int, t: float, route_curvature: float) -> ObservedWorld:
        return ObservedWorld(
            t=t,
            observed_time=self.times[index],
            ego=self.ego_states[index],
            actors=self.actors.observed(index),
            ego_footprint=self.ego_footprint,
            route_curvature=route_curvature,
        )


def observation_index(k: int, latency: LatencyConfig, step: float, jitter: int = 0) -> int:
    """ステップ k で見える履歴のインデックス（0..k にクランプ）"""
    delay_steps = int(round(latency.observation_delay / step))
    return min(max(k - delay_steps + jitter, 0), k)


def delayed_observation(history: WorldHistory, latency: LatencyConfig, t: float, step: float,
                        route_curvature: float = 0.0) -> ObservedWorld:
    """時刻 t における遅延観測（時刻 max(0, t - 認識遅延 - 計画遅延) の真値）"""
    k = min(int(round(t / step)), len(history.times) - 1)
    return history.observe(observation_index(k, latency, step), t, route_curvature)


def _find_contact(ego: VehicleState, ego_footprint: Footprint, actors: ActorTable, index: int,
                  t: float) -> Optional[Contact]:
    if actors.count == 0:
        return None
    ego_corners = rectangle_corners(ego.x, ego.y, ego.heading, ego_footprint)
    actor_corners = actors.corners(index)
    # 外接円で粗く除外
    reach = math.hypot(ego_footprint.length, ego_footprint.width) / 2.0
    near = [a for a in range(actors.count)
            if math.hypot(actors.x[a, index] - ego.x, actors.y[a, index] - ego.y)
            <= reach + math.hypot(actors.footprints[a].length, actors.footprints[a].width) / 2.0 + 1e-9]
    if not near:
        return None
    hits = batch_overlap(np.repeat(ego_corners[None], len(near), axis=0), actor_corners[near])
    for a, hit in zip(near, hits):
        if not hit:
            continue
        geometry = detect_contact(ego_corners, actor_corners[a])
        if geometry is None:
            continue
        partner_heading = float(actors.heading[a, index])
        partner_speed = float(actors.speed[a, index])
        ego_velocity = ego.velocity
        partner_velocity = (partner_speed * math.cos(partner_heading), partner_speed * math.sin(partner_heading))
        local = to_body_frame(geometry.point, ego.x, ego.y, ego.heading)
        return Contact(
            time=t,
            point=geometry.point,
            ego_zone=classify_impact_zone(local, ego_footprint),
            relative_speed_at_impact=math.hypot(ego_velocity[0] - partner_velocity[0],
                                                ego_velocity[1] - partner_velocity[1]),
            ego_stationary=ego.speed < STATIONARY_SPEED,
            partner_index=a,
            normal=geometry.normal,
            ego_velocity=ego_velocity,
            partner_velocity=partner_velocity,
            ego_heading=ego.heading,
            partner_heading=partner_heading,
        )
    return None


def _clamp(command: ControlCommand, limits: VehicleLimits) -> ControlCommand:
    return ControlCommand(
        longitudinal_accel=min(max(command.longitudinal_accel, -limits.max_brake), limits.max_accel),
        curvature=min(max(command.curvature, -limits.max_curvature), limits.max_curvature),
    )


def run_scenario(scenario: ConcreteScenario, policy: 'EgoPolicy', latency: LatencyConfig,
                 step: float = 0.01, seed: int = 0, limits: VehicleLimits = VehicleLimits(),
                 jitter: JitterConfig = JitterConfig(), context: Optional[PolicyContext] = None) -> SimTrace:
    """1シナリオを実行して軌跡と最初の接触を返す

    Raises:
        PolicyFault: ポリシーが非有限の指令を返した場合
        ConfigurationError: step が (0, 0.05] にない、または遅延が step の倍数でない場合
    """
    if not (math.isfinite(step) and 0.0 < step <= MAX_STEP):
        raise ConfigurationError(f"step must be in (0, {MAX_STEP}], got {step}", "sim.step")
    latency.validate(step)

    n_steps = max(0, int(round(scenario.duration / step)))
    times = np.arange(n_steps + 1) * step
    actors = ActorTable.from_scenario(scenario, times)
    history = WorldHistory([0.0], [scenario.ego_start], actors, scenario.ego_footprint)

    rng = np.random.default_rng([seed, stable_hash(scenario.id)]) if jitter.enabled else None
    actuation_steps = int(round(latency.actuation_delay / step))
    pending: deque = deque()

    policy.reset(context or PolicyContext(scenario.id, step, limits, scenario.ego_footprint, seed=seed))
    state = scenario.ego_start
    contact = _find_contact(state, scenario.ego_footprint, actors, 0, 0.0)

    k = 0
    while contact is None and k < n_steps:
        t = float(times[k])
        offset = int(rng.integers(-jitter.steps, jitter.steps + 1)) if rng is not None else 0
        observed = history.observe(observation_index(k, latency, step, offset), t,
                                   scenario.route_curvature(history.ego_states[k].odometer))
        command = policy.step(observed)
        if not command.is_finite:
            logger.error(f"ポリシーが非有限の指令を返しました: {scenario.id} t={t:.3f} {command}")
            raise PolicyFault(scenario.id, t, command)
        pending.append(_clamp(command, limits))
        if len(pending) > actuation_steps:
            applied = pending.popleft()
        else:
            applied = ControlCommand(0.0, scenario.route_curvature(state.odometer))

        state = integrate_step(state, applied, step)
        k += 1
        history.times.append(float(times[k]))
        history.ego_states.append(state)
        contact = _find_contact(state, scenario.ego_footprint, actors, k, float(times[k]))

    return SimTrace(
        scenario_id=scenario.id,
        times=tuple(history.times),
        ego_states=tuple(history.ego_states),
        actor_states=actors.samples(history.times),
        contact=contact,
        seed=seed,
        step=step,
    )
