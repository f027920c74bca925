"""
操作テンプレートからの軌跡合成

衝突相手（actor1）は自車前端と同時に衝突点へ到達するように配置する。
時刻 t_c = 刺激開始 + trigger_ttc が名目の衝突時刻で、シナリオの長さは t_c + post_conflict_time。

運動モード:
    trigger   横断・飛び出し。刺激開始まで静止し、開始と同時に一定速度で動き出す
    lead      自車線前方の先行車。刺激開始時点の車間は ego.speed × trigger_ttc、以後 decel で停止まで減速
    oncoming  逆走車。t_c で両車の前端が出会う
    constant  一定速度で t_c に衝突点を通過する
"""

from dataclasses import dataclass
from typing import Dict, List, Mapping, Tuple

import numpy as np

from ..models.data_models import (
    ActorKind,
    ActorTrajectory,
    Footprint,
    FunctionalScenario,
    ManeuverSpec,
    RouteSegment,
    StimulusAnnotation,
    TrajectorySample,
    VehicleState,
    wrap_angle,
)
from .layout_library import Layout, LayoutLibrary, PathTemplate


EGO_FOOTPRINT = Footprint(4.8, 1.9)
ACTOR_FOOTPRINTS: Dict[ActorKind, Footprint] = {
    ActorKind.PASSENGER_VEHICLE: Footprint(4.8, 1.9),
    ActorKind.HEAVY_VEHICLE: Footprint(10.0, 2.5),
    ActorKind.MOTORCYCLIST: Footprint(2.2, 0.8),
    ActorKind.CYCLIST: Footprint(1.8, 0.6),
    ActorKind.PEDESTRIAN: Footprint(0.5, 0.5),
    ActorKind.PEDESTRIAN_CHILD: Footprint(0.5, 0.5),
    ActorKind.SCOOTER_RIDER: Footprint(1.2, 0.6),
}

DEFAULT_ONSET = 1.0
DEFAULT_DECEL = 6.0
TRIGGER_MANEUVERS = ("cross_path", "pull_out")
# 先行車・逆走車の基準位置（自車経路の弧長）。旋回区間より手前
LEAD_ANCHOR = 120.0
STIMULUS_GRID = 0.01


def motion_mode(spec: ManeuverSpec) -> str:
    if spec.maneuver in TRIGGER_MANEUVERS:
        return "trigger"
    if spec.maneuver == "sudden_stop" or (spec.maneuver == "go_straight" and spec.start_location == "within_lane"):
        return "lead"
    if spec.maneuver == "wrong_way":
        return "oncoming"
    return "constant"


@dataclass(frozen=True)
class SynthesizedMotion:
    ego_start: VehicleState
    ego_route: Tuple[RouteSegment, ...]
    actor_trajectories: Tuple[ActorTrajectory, ...]
    footprints: Tuple[Footprint, ...]
    stimulus: StimulusAnnotation
    duration: float


class TrajectorySynthesizer:
    """functional シナリオとパラメータ値から concrete な運動を作る"""

    def __init__(self, layouts: LayoutLibrary, sample_interval: float = 0.05, post_conflict_time: float = 3.0):
        self.layouts = layouts
        self.sample_interval = sample_interval
        self.post_conflict_time = post_conflict_time

    def synthesize(self, functional: FunctionalScenario, values: Mapping[str, float]) -> SynthesizedMotion:
        """
        Raises:
            LayoutUnavailable: レイアウトクラスがライブラリに無い場合
            UnmappedPair: 操作テンプレートが無い場合
        """
        layout = self.layouts.get(functional.layout_class)
        ego_path = layout.ego_path(functional.ego_maneuver.maneuver)
        v_e = values["ego.speed"]
        ttc = values["stimulus.trigger_ttc"]
        onset = values.get("stimulus.onset", DEFAULT_ONSET)
        t_c = onset + ttc
        duration = round(t_c + self.post_conflict_time, 9)
        half_l = EGO_FOOTPRINT.length / 2.0

        paths = [layout.actor_path(a.maneuver.maneuver, a.maneuver.start_location, a.maneuver.end_location)
                 for a in functional.actors]

        partner = functional.actors[0]
        if motion_mode(partner.maneuver) in ("lead", "oncoming"):
            s0 = LEAD_ANCHOR - half_l - v_e * (onset if motion_mode(partner.maneuver) == "lead" else t_c)
        else:
            point = self.layouts.conflict_point(ego_path, paths[0])
            s0 = ego_path.project(point) - half_l - v_e * t_c
        s0 = max(0.0, s0)

        times = self._sample_times(onset, duration)
        trajectories: List[ActorTrajectory] = []
        footprints: List[Footprint] = []
        for index, (actor, path) in enumerate(zip(functional.actors, paths), start=1):
            footprint = ACTOR_FOOTPRINTS[actor.kind]
            s, speed = self._actor_motion(actor.maneuver, path, ego_path, footprint, values, index,
                                          s0, v_e, ttc, onset, t_c, times)
            offset = values.get(f"actor{index}.lateral_offset", 0.0)
            trajectories.append(ActorTrajectory(actor.kind, _samples(path, times, s, speed, offset)))
            footprints.append(footprint)

        if "double_parked_vehicle" in functional.salient_factors:
            trajectories.append(self._parked_vehicle(layout, ego_path, s0 + half_l + v_e * t_c, times))
            footprints.append(ACTOR_FOOTPRINTS[ActorKind.PASSENGER_VEHICLE])

        stimulus = self._stimulus(partner.maneuver, ego_path, layout, footprints[0], values,
                                  onset, duration, trajectories[0])
        x, y, heading = ego_path.point_at(s0)
        route = ego_path.route_from(s0)
        ego_start = VehicleState(x, y, heading, v_e, 0.0, route[0].curvature, 0.0)
        return SynthesizedMotion(ego_start, route, tuple(trajectories), tuple(footprints), stimulus, duration)

    def _sample_times(self, onset: float, duration: float) -> np.ndarray:
        grid = np.arange(0.0, duration + 1e-9, self.sample_interval)
        return np.unique(np.round(np.concatenate([grid, [onset, duration]]), 9))

    def _actor_motion(self, spec: ManeuverSpec, path: PathTemplate, ego_path: PathTemplate,
                      footprint: Footprint, values: Mapping[str, float], index: int, s0: float,
                      v_e: float, ttc: float, onset: float, t_c: float,
                      times: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """弧長と速度の時系列"""
        v_a = values[f"actor{index}.speed"]
        mode = motion_mode(spec)
        half_ego = EGO_FOOTPRINT.length / 2.0
        if mode == "lead":
            decel = values.get(f"actor{index}.decel", DEFAULT_DECEL)
            front = ego_path.point_at(s0 + half_ego + v_e * onset)
            s_on = path.project(front[:2]) + v_e * ttc + footprint.length / 2.0
            tau = times - onset
            stop = v_a / decel
            braking = np.clip(tau, 0.0, stop)
            s = np.where(tau < 0.0, s_on + v_a * tau, s_on + v_a * braking - 0.5 * decel * braking ** 2)
            speed = np.where(tau < 0.0, v_a, np.maximum(0.0, v_a - decel * braking))
            return s, speed
        if mode == "oncoming":
            meet = ego_path.point_at(s0 + half_ego + v_e * t_c)
            s_c = path.project(meet[:2]) - footprint.length / 2.0
            return s_c - v_a * (t_c - times), np.full_like(times, v_a)

        point = self.layouts.conflict_point(ego_path, path)
        s_a = path.project(point)
        if mode == "trigger":
            start = max(0.0, s_a - v_a * ttc)
            moving = times >= onset
            return start + v_a * np.clip(times - onset, 0.0, None), np.where(moving, v_a, 0.0)
        return s_a - v_a * (t_c - times), np.full_like(times, v_a)

    def _parked_vehicle(self, layout: Layout, ego_path: PathTemplate, conflict_s: float,
                        times: np.ndarray) -> ActorTrajectory:
        """自車線の右隣に停車した車両（衝突点の手前8 m）"""
        x, _, _ = ego_path.point_at(conflict_s)
        y = -1.5 * layout.lane_width
        samples = tuple(TrajectorySample(float(t), x - 8.0, y, 0.0, 0.0) for t in times)
        return ActorTrajectory(ActorKind.PASSENGER_VEHICLE, samples)

    def _stimulus(self, spec: ManeuverSpec, ego_path: PathTemplate, layout: Layout,
                  footprint: Footprint, values: Mapping[str, float], onset: float, duration: float,
                  trajectory: ActorTrajectory) -> StimulusAnnotation:
        """刺激の終了時刻（立ち上がりの終わり）を求める"""
        mode = motion_mode(spec)
        if mode == "lead":
            decel = values.get("actor1.decel", DEFAULT_DECEL)
            return StimulusAnnotation(onset, min(duration, onset + values["actor1.speed"] / decel))
        if mode == "oncoming":
            return StimulusAnnotation(onset, onset)

        samples = np.array([[s.t, s.x, s.y] for s in trajectory.samples])
        grid = np.arange(onset, duration + 1e-9, STIMULUS_GRID)
        xs = np.interp(grid, samples[:, 0], samples[:, 1])
        ys = np.interp(grid, samples[:, 0], samples[:, 2])
        inside = ego_path.distance_to(xs, ys) <= layout.lane_width / 2.0 + footprint.length / 2.0
        end = float(grid[np.argmax(inside)]) if inside.any() else duration
        return StimulusAnnotation(onset, round(min(max(end, onset), duration), 9))


def _samples(path: PathTemplate, times: np.ndarray, s: np.ndarray, speed: np.ndarray,
             offset: float = 0.0) -> Tuple[TrajectorySample, ...]:
    xs, ys, headings = path.sample(s)
    if offset:
        xs = xs - offset * np.sin(headings)
        ys = ys + offset * np.cos(headings)
    return tuple(
        TrajectorySample(float(t), float(x), float(y), wrap_angle(float(h)), float(v))
        for t, x, y, h, v in zip(times, xs, ys, headings, speed)
    )
