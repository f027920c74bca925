"""
レイアウトライブラリ

レイアウトクラスごとに車線レベルの正準ジオメトリ（自車経路・アクター経路のテンプレート）を提供する。
座標系: 自車は東向き（+x）、自車車線の中心は y = -w/2（w は車線幅）。
交差点の中心は原点、南北方向の道路は x = ±w/2 に車線を持つ。
"""

import math
import threading
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import shapely
from shapely.geometry import LineString, Point
from shapely.ops import nearest_points

from ..models.data_models import RouteSegment, wrap_angle
from .error_handling import LayoutUnavailable, UnmappedPair
from .logging_config import get_harness_logger


# 経路の外側の長さ [m]
APPROACH_LENGTH = 200.0
# 経路が交差しうるとみなす回廊の半幅 [m]
CORRIDOR_HALF_WIDTH = 1.25


class PathTemplate:
    """折れ線で表した経路と、その弧長に沿った曲率区間"""

    def __init__(self, coords: Sequence[Tuple[float, float]],
                 route: Sequence[Tuple[float, float]] = ((0.0, 0.0),)):
        points = np.asarray(coords, dtype=float)
        steps = np.hypot(*np.diff(points, axis=0).T)
        keep = np.concatenate([[True], steps > 1e-12])
        self.coords = points[keep]
        lengths = np.hypot(*np.diff(self.coords, axis=0).T)
        self.cumulative = np.concatenate([[0.0], np.cumsum(lengths)])
        self._headings = np.arctan2(np.diff(self.coords[:, 1]), np.diff(self.coords[:, 0]))
        self.line = LineString(self.coords)
        self.route = tuple(RouteSegment(float(s), float(k)) for s, k in route)

    @property
    def length(self) -> float:
        return float(self.cumulative[-1])

    def sample(self, s) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """弧長 s（スカラーまたは配列）における位置と向き"""
        s = np.clip(np.asarray(s, dtype=float), 0.0, self.length)
        x = np.interp(s, self.cumulative, self.coords[:, 0])
        y = np.interp(s, self.cumulative, self.coords[:, 1])
        index = np.clip(np.searchsorted(self.cumulative, s, side="right") - 1, 0, len(self._headings) - 1)
        return x, y, self._headings[index]

    def point_at(self, s: float) -> Tuple[float, float, float]:
        x, y, heading = self.sample(s)
        return float(x), float(y), float(wrap_angle(float(heading)))

    def project(self, point: Tuple[float, float]) -> float:
        return float(self.line.project(Point(point)))

    def route_from(self, start: float) -> Tuple[RouteSegment, ...]:
        """start を走行距離0とした曲率区間"""
        segments: List[RouteSegment] = []
        for segment in self.route:
            offset = segment.start_odometer - start
            if offset <= 0.0:
                segments = [RouteSegment(0.0, segment.curvature)]
            else:
                segments.append(RouteSegment(round(offset, 9), segment.curvature))
        return tuple(segments)

    def distance_to(self, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        """点群から経路までの距離"""
        return shapely.distance(shapely.points(np.column_stack([xs, ys])), self.line)


def _arc(center: Tuple[float, float], radius: float, start_angle: float, end_angle: float) -> np.ndarray:
    # 1度刻みで離散化
    count = max(2, int(round(abs(math.degrees(end_angle - start_angle)))) + 1)
    angles = np.linspace(start_angle, end_angle, count)
    return np.column_stack([center[0] + radius * np.cos(angles), center[1] + radius * np.sin(angles)])


def _polyline(*parts) -> np.ndarray:
    return np.vstack([np.atleast_2d(np.asarray(p, dtype=float)) for p in parts])


@dataclass(frozen=True)
class Layout:
    """レイアウトクラス（道路トポロジと交通制御）"""
    layout_class: str
    traffic_control: str
    has_intersection: bool
    lane_width: float = 3.5

    @property
    def box(self) -> float:
        """交差点ボックスの半幅（片側3車線）"""
        return 3.0 * self.lane_width

    def ego_path(self, maneuver: str) -> PathTemplate:
        w, box, far = self.lane_width, self.box, APPROACH_LENGTH
        lane_y = -w / 2.0
        if maneuver == "go_straight":
            return PathTemplate([(-far, lane_y), (far, lane_y)])
        approach = far - box
        if maneuver == "turn_left":
            radius = box + w / 2.0
            arc = _arc((-box, box), radius, -math.pi / 2.0, 0.0)
            coords = _polyline((-far, lane_y), arc, (w / 2.0, far))
            return PathTemplate(coords, [(0.0, 0.0), (approach, 1.0 / radius),
                                         (approach + radius * math.pi / 2.0, 0.0)])
        if maneuver == "turn_right":
            radius = box - w / 2.0
            arc = _arc((-box, -box), radius, math.pi / 2.0, 0.0)
            coords = _polyline((-far, lane_y), arc, (-w / 2.0, -far))
            return PathTemplate(coords, [(0.0, 0.0), (approach, -1.0 / radius),
                                         (approach + radius * math.pi / 2.0, 0.0)])
        raise UnmappedPair(maneuver, "-", "-")

    def actor_path(self, maneuver: str, start: str, end: str) -> PathTemplate:
        """アクター操作テンプレート（存在しなければ UnmappedPair）"""
        coords = self._actor_coords(maneuver, start, end)
        if coords is None:
            raise UnmappedPair("-", maneuver, f"{start}->{end}")
        return PathTemplate(coords)

    def _actor_coords(self, maneuver: str, start: str, end: str) -> Optional[np.ndarray]:
        w, box, far = self.lane_width, self.box, APPROACH_LENGTH
        lanes = {"within_lane": -w / 2.0, "adjacent_lane": -1.5 * w, "far_lane": -2.5 * w}

        def eastbound(y):
            return _polyline((-far, y), (far, y))

        def westbound(y):
            return _polyline((far, y), (-far, y))

        def northbound(x):
            return _polyline((x, -30.0), (x, 30.0))

        def southbound(x):
            return _polyline((x, 30.0), (x, -30.0))

        if maneuver == "go_straight":
            if start == end and start in lanes:
                return eastbound(lanes[start])
            if start == end == "across_lane":
                return westbound(w / 2.0)
        elif maneuver == "turn_left" and (start, end) == ("across_lane", "across_lane"):
            arc = _arc((box, -box), box + w / 2.0, math.pi / 2.0, math.pi)
            return _polyline((far, w / 2.0), arc, (-w / 2.0, -far))
        elif maneuver == "turn_right" and (start, end) == ("across_lane", "across_lane"):
            arc = _arc((box, box), box - w / 2.0, -math.pi / 2.0, -math.pi)
            return _polyline((far, w / 2.0), arc, (w / 2.0, far))
        elif maneuver == "cut_in":
            if (start, end) in (("adjacent_lane", "within_lane"), ("far_lane", "adjacent_lane")):
                return _polyline((-far, lanes[start]), (20.0, lanes[start]), (40.0, lanes[end]),
                                 (far, lanes[end]))
        elif maneuver == "pull_out":
            if (start, end) == ("driveway", "across_lane"):
                return _polyline((25.0, -30.0), (25.0, -2.0), (23.0, w / 2.0), (-far, w / 2.0))
            if (start, end) == ("driveway", "within_lane"):
                return _polyline((25.0, -30.0), (25.0, -4.0), (29.0, -w / 2.0), (far, -w / 2.0))
            if (start, end) == ("curbside", "within_lane"):
                return _polyline((10.0, -2.5 * w), (30.0, -2.5 * w), (45.0, -w / 2.0), (far, -w / 2.0))
        elif maneuver == "cross_path":
            crossings = {
                ("curbside", "across_lane"): northbound(20.0),
                ("across_lane", "curbside"): southbound(20.0),
                ("crosswalk", "across_lane"): northbound(14.0),
                ("off_road", "across_lane"): northbound(27.5),
                ("driveway", "across_lane"): northbound(25.0),
            }
            return crossings.get((start, end))
        elif maneuver == "run_red_light":
            if (start, end) == ("curbside", "across_lane"):
                return _polyline((w / 2.0, -far), (w / 2.0, far))
            if (start, end) == ("across_lane", "curbside"):
                return _polyline((-w / 2.0, far), (-w / 2.0, -far))
        elif maneuver == "sudden_stop":
            if start == end and start in ("within_lane", "adjacent_lane"):
                return eastbound(lanes[start])
        elif maneuver == "wrong_way":
            if start == end and start in ("within_lane", "adjacent_lane"):
                return westbound(lanes[start])
        return None


def bundled_layouts() -> Dict[str, Layout]:
    return {
        "midblock": Layout("midblock", "none", False),
        "signalized_intersection": Layout("signalized_intersection", "signal", True),
        "unprotected_intersection": Layout("unprotected_intersection", "uncontrolled", True),
        "all_way_stop": Layout("all_way_stop", "stop", True),
        "roundabout": Layout("roundabout", "yield", True),
        "tunnel": Layout("tunnel", "none", False),
    }


class LayoutLibrary:
    """レイアウトクラスとジオメトリテンプレートの集合"""

    def __init__(self, layouts: Optional[Dict[str, Layout]] = None):
        self.layouts = dict(layouts) if layouts is not None else bundled_layouts()
        self.logger = get_harness_logger("generation")
        self._rules: Dict[Tuple, Dict[Tuple[str, str, str], bool]] = {}
        self._lock = threading.Lock()

    def __contains__(self, layout_class: str) -> bool:
        return layout_class in self.layouts

    def get(self, layout_class: str) -> Layout:
        if layout_class not in self.layouts:
            raise LayoutUnavailable(layout_class)
        return self.layouts[layout_class]

    def layout_classes(self) -> List[str]:
        return sorted(self.layouts)

    def feasibility_rules(self, ego_maneuvers: Iterable[str],
                          placements: Dict[str, Sequence[Tuple[str, str]]]) -> Dict[Tuple[str, str, str], bool]:
        """(自車操作, アクター操作, 開始位置) → 経路回廊が交差しうるか

        語彙ごとに一度だけテンプレートを掃引して構築し、以後はキャッシュを返す。
        """
        ego_maneuvers = tuple(sorted(set(ego_maneuvers)))
        key = (ego_maneuvers, tuple(sorted((m, tuple(map(tuple, pairs))) for m, pairs in placements.items())))
        with self._lock:
            if key not in self._rules:
                self._rules[key] = self._build_rules(ego_maneuvers, placements)
            return self._rules[key]

    def _build_rules(self, ego_maneuvers: Iterable[str],
                     placements: Dict[str, Sequence[Tuple[str, str]]]) -> Dict[Tuple[str, str, str], bool]:
        rules: Dict[Tuple[str, str, str], bool] = {}
        for layout in (self.layouts[name] for name in self.layout_classes()):
            for ego_maneuver in ego_maneuvers:
                try:
                    ego = layout.ego_path(ego_maneuver)
                except UnmappedPair:
                    continue
                ego_corridor = ego.line.buffer(CORRIDOR_HALF_WIDTH)
                for maneuver, pairs in placements.items():
                    for start, end in pairs:
                        try:
                            actor = layout.actor_path(maneuver, start, end)
                        except UnmappedPair:
                            continue
                        key = (ego_maneuver, maneuver, start)
                        hit = bool(ego_corridor.intersects(actor.line.buffer(CORRIDOR_HALF_WIDTH)))
                        rules[key] = rules.get(key, False) or hit
        self.logger.debug(f"実現可能性ルール表を構築しました: {len(rules)} 件")
        return rules

    def conflict_point(self, ego: PathTemplate, actor: PathTemplate) -> Tuple[float, float]:
        """自車経路に沿って最初の交点（交差しなければ最近接点）"""
        crossing = ego.line.intersection(actor.line)
        if crossing.is_empty:
            nearest, _ = nearest_points(ego.line, actor.line)
            return float(nearest.x), float(nearest.y)
        points = [Point(c) for geom in getattr(crossing, "geoms", [crossing]) for c in geom.coords]
        first = min(points, key=ego.line.project)
        return float(first.x), float(first.y)
