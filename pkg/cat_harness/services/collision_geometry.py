"""
接触判定のジオメトリ

向き付き矩形同士の分離軸判定（SAT）、接触点・法線の算出、自車フットプリント上の
衝突部位の分類を行います。境界上の接触（許容差 1e-9 m）は接触として扱います。
"""

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from shapely.geometry import Polygon
from shapely.ops import nearest_points

from ..models.data_models import Footprint, ImpactZone
from .error_handling import PointOutsideFootprint


OVERLAP_TOLERANCE = 1e-9
ZONE_TOLERANCE = 1e-6


@dataclass(frozen=True)
class ContactGeometry:
    """重なりの幾何情報（法線は自車から相手へ向く）"""
    point: Tuple[float, float]
    normal: Tuple[float, float]
    depth: float


def rectangle_corners(x: float, y: float, heading: float, footprint: Footprint) -> np.ndarray:
    """中心・向き・寸法から4頂点（反時計回り）を求める"""
    c, s = math.cos(heading), math.sin(heading)
    half_l, half_w = footprint.length / 2.0, footprint.width / 2.0
    local = np.array([[half_l, half_w], [-half_l, half_w], [-half_l, -half_w], [half_l, -half_w]])
    rotation = np.array([[c, -s], [s, c]])
    return local @ rotation.T + np.array([x, y])


def corners_along(x: np.ndarray, y: np.ndarray, heading: np.ndarray, footprint: Footprint) -> np.ndarray:
    """軌跡上の各姿勢の4頂点（N × 4 × 2）"""
    c, s = np.cos(heading), np.sin(heading)
    half_l, half_w = footprint.length / 2.0, footprint.width / 2.0
    local = np.array([[half_l, half_w], [-half_l, half_w], [-half_l, -half_w], [half_l, -half_w]])
    gx = x[:, None] + c[:, None] * local[:, 0] - s[:, None] * local[:, 1]
    gy = y[:, None] + s[:, None] * local[:, 0] + c[:, None] * local[:, 1]
    return np.stack([gx, gy], axis=-1)


def _axes(corners: np.ndarray) -> np.ndarray:
    # 矩形は平行な辺を持つので2本で十分
    edges = np.roll(corners, -1, axis=-2) - corners
    normals = np.stack([edges[..., :2, 1], -edges[..., :2, 0]], axis=-1)
    return normals / np.linalg.norm(normals, axis=-1, keepdims=True)


def _projected_overlap(a: np.ndarray, b: np.ndarray, axes: np.ndarray) -> np.ndarray:
    """各軸上での射影区間の重なり量（負なら分離）"""
    pa = np.einsum("...kj,...aj->...ak", a, axes)
    pb = np.einsum("...kj,...aj->...ak", b, axes)
    return np.minimum(pa.max(-1), pb.max(-1)) - np.maximum(pa.min(-1), pb.min(-1))


def rectangles_overlap(a: np.ndarray, b: np.ndarray, tolerance: float = OVERLAP_TOLERANCE) -> bool:
    """2つの凸矩形が重なるか（閉集合として判定）"""
    axes = np.concatenate([_axes(a), _axes(b)])
    return bool(np.all(_projected_overlap(a, b, axes) >= -tolerance))


def batch_overlap(a: np.ndarray, b: np.ndarray, tolerance: float = OVERLAP_TOLERANCE) -> np.ndarray:
    """(N, 4, 2) の矩形ペアをまとめて判定"""
    axes = np.concatenate([_axes(a), _axes(b)], axis=-2)
    return np.all(_projected_overlap(a, b, axes) >= -tolerance, axis=-1)


def detect_contact(ego_corners: np.ndarray, actor_corners: np.ndarray,
                   tolerance: float = OVERLAP_TOLERANCE) -> Optional[ContactGeometry]:
    """重なっていれば接触点（重なり多角形の重心）と最小重なり軸を返す"""
    axes = np.concatenate([_axes(ego_corners), _axes(actor_corners)])
    overlaps = _projected_overlap(ego_corners, actor_corners, axes)
    if np.any(overlaps < -tolerance):
        return None

    best = int(np.argmin(overlaps))
    normal = axes[best]
    if np.dot(normal, actor_corners.mean(axis=0) - ego_corners.mean(axis=0)) < 0:
        normal = -normal

    ego_poly, actor_poly = Polygon(ego_corners), Polygon(actor_corners)
    region = ego_poly.intersection(actor_poly)
    if not region.is_empty:
        point = region.centroid
        px, py = float(point.x), float(point.y)
    else:
        p1, p2 = nearest_points(ego_poly, actor_poly)
        px, py = (p1.x + p2.x) / 2.0, (p1.y + p2.y) / 2.0
    return ContactGeometry((px, py), (float(normal[0]), float(normal[1])), float(max(overlaps[best], 0.0)))


def to_body_frame(point: Tuple[float, float], x: float, y: float, heading: float) -> Tuple[float, float]:
    """世界座標の点を車体座標（前方 u, 左方 v）に変換"""
    dx, dy = point[0] - x, point[1] - y
    c, s = math.cos(heading), math.sin(heading)
    return (c * dx + s * dy, -s * dx + c * dy)


def classify_impact_zone(point: Tuple[float, float], footprint: Footprint,
                         tolerance: float = ZONE_TOLERANCE) -> ImpactZone:
    """車体座標の接触点から衝突部位を判定

    前方1/3（中心から length/6 以上前方、境界を含む）を Frontal とする。
    """
    u, v = point
    if abs(u) > footprint.length / 2.0 + tolerance or abs(v) > footprint.width / 2.0 + tolerance:
        raise PointOutsideFootprint((u, v))
    if u >= footprint.length / 6.0 - OVERLAP_TOLERANCE:
        return ImpactZone.FRONTAL
    return ImpactZone.REAR_TWO_THIRDS
