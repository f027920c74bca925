"""
評価ハーネスのコアデータモデル

シナリオの3階層（functional / logical / concrete）、シミュレーションの状態、
衝突・重症度の結果、集計スコアなどの値オブジェクトを定義します。
全ての型は構築後に不変として扱います。
"""

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Dict, FrozenSet, List, Mapping, Optional, Tuple

from ..services.error_handling import ConfigurationError, EmptyRange


TWO_PI = 2.0 * math.pi


def wrap_angle(angle: float) -> float:
    """角度を [-π, π) に正規化"""
    return (angle + math.pi) % TWO_PI - math.pi


class ActorKind(Enum):
    """シナリオに登場するアクターの種別"""
    PASSENGER_VEHICLE = "passenger_vehicle"
    HEAVY_VEHICLE = "heavy_vehicle"
    MOTORCYCLIST = "motorcyclist"
    CYCLIST = "cyclist"
    PEDESTRIAN = "pedestrian"
    PEDESTRIAN_CHILD = "pedestrian_child"
    SCOOTER_RIDER = "scooter_rider"

    @property
    def is_vehicle(self) -> bool:
        """乗員を持つ四輪以上の車両か"""
        return self in (ActorKind.PASSENGER_VEHICLE, ActorKind.HEAVY_VEHICLE)

    @property
    def actor_class(self) -> str:
        """ルール表のフォールバックに使うクラス名"""
        return _ACTOR_CLASSES[self]


_ACTOR_CLASSES = {
    ActorKind.PASSENGER_VEHICLE: "vehicle",
    ActorKind.HEAVY_VEHICLE: "vehicle",
    ActorKind.MOTORCYCLIST: "motorcyclist",
    ActorKind.CYCLIST: "cyclist",
    ActorKind.PEDESTRIAN: "pedestrian",
    ActorKind.PEDESTRIAN_CHILD: "pedestrian",
    ActorKind.SCOOTER_RIDER: "scooter",
}


class RoadUserGroup(Enum):
    """最上位の道路利用者グループ"""
    VEHICLE = "Vehicle"
    VRU = "VRU"


class ImpactZone(Enum):
    """自車フットプリント上の衝突部位"""
    FRONTAL = "Frontal"
    REAR_TWO_THIRDS = "RearTwoThirds"


class NieonManeuver(Enum):
    """NIEON参照ドライバの回避候補（定義順がタイブレーク順）"""
    BRAKE_ONLY = "BrakeOnly"
    SWERVE_LEFT = "SwerveLeft"
    SWERVE_RIGHT = "SwerveRight"

    @property
    def order(self) -> int:
        return list(NieonManeuver).index(self)


class SwerveDirection(Enum):
    """回避操舵の方向（左が正の曲率）"""
    LEFT = 1
    RIGHT = -1


class SamplingMode(Enum):
    GRID = "grid"
    LATIN_HYPERCUBE = "latin_hypercube"


class Party(Enum):
    """評価対象（ADSポリシー）と参照ドライバ"""
    ADS = "ADS"
    NIEON = "NIEON"


# ---------------------------------------------------------------------------
# シナリオ記述
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SourcePosition:
    """DSLソース上の位置（診断用）"""
    source: str = "<string>"
    line: int = 0
    column: int = 0

    def __str__(self) -> str:
        return f"{self.source}:{self.line}:{self.column}"


@dataclass(frozen=True)
class ManeuverSpec:
    """操作種別と開始・終了位置"""
    maneuver: str
    start_location: str = "within_lane"
    end_location: str = "within_lane"


@dataclass(frozen=True)
class ActorSpec:
    """functionalシナリオ中の非自車アクター"""
    kind: ActorKind
    maneuver: ManeuverSpec


@dataclass(frozen=True)
class FunctionalScenario:
    """
    抽象レベルのシナリオ記述

    actors[0] が衝突相手（conflict partner）で、セーフティグループの割り当てに使われる。
    """
    id: str
    ego_maneuver: ManeuverSpec
    actors: Tuple[ActorSpec, ...]
    layout_class: str
    salient_factors: FrozenSet[str] = frozenset()
    conflict_type: str = ""

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if not self.id:
            raise ValueError("functional scenario id must not be empty")
        if len(self.actors) < 1:
            raise ValueError(f"functional scenario '{self.id}' needs at least one non-ego actor")

    @property
    def partner(self) -> ActorSpec:
        return self.actors[0]

    def required_parameters(self) -> List[str]:
        """テンプレートが参照するパラメータ名"""
        names = ["ego.speed", "stimulus.trigger_ttc"]
        names.extend(f"actor{i}.speed" for i in range(1, len(self.actors) + 1))
        return sorted(names)


@dataclass(frozen=True)
class ParameterRange:
    """パラメータの範囲（min, max, step）"""
    minimum: float
    maximum: float
    step: float
    unit: str = ""

    def check(self, name: str) -> None:
        """範囲の妥当性を検証（不正なら EmptyRange）"""
        values = (self.minimum, self.maximum, self.step)
        if not all(math.isfinite(v) for v in values):
            raise EmptyRange(name, *values)
        if self.minimum > self.maximum or self.step <= 0:
            raise EmptyRange(name, *values)

    @property
    def count(self) -> int:
        """グリッド点の数 ceil((max-min)/step + 1)"""
        return max(1, math.ceil((self.maximum - self.minimum) / self.step + 1.0 - 1e-9))

    def grid_values(self) -> List[float]:
        return [round(min(self.minimum + i * self.step, self.maximum), 9) for i in range(self.count)]

    @property
    def is_point(self) -> bool:
        return self.minimum == self.maximum


@dataclass(frozen=True)
class LogicalScenario:
    """パラメータ範囲付きのシナリオ"""
    functional: FunctionalScenario
    parameter_ranges: Mapping[str, ParameterRange]
    positions: Mapping[str, SourcePosition] = field(default_factory=dict, compare=False)

    def validate(self) -> None:
        for name in sorted(self.parameter_ranges):
            self.parameter_ranges[name].check(name)
        for name in self.functional.required_parameters():
            if name not in self.parameter_ranges:
                # 範囲が存在しないパラメータは空範囲として扱う
                raise EmptyRange(name, math.nan, math.nan, math.nan)

    @property
    def id(self) -> str:
        return self.functional.id


@dataclass(frozen=True)
class OddProfile:
    """運行設計領域（ODD）プロファイル

    excluded_maneuvers は "turn_left" のような操作トークン、または
    "turn_left@unprotected_intersection" のようにレイアウトで限定したトークンを持つ。
    """
    name: str
    max_speed_limit: float
    allowed_layout_classes: FrozenSet[str]
    excluded_maneuvers: FrozenSet[str] = frozenset()
    present_salient_factors: FrozenSet[str] = frozenset()

    def excludes_maneuver(self, maneuver: str, layout_class: str) -> bool:
        return (maneuver in self.excluded_maneuvers
                or f"{maneuver}@{layout_class}" in self.excluded_maneuvers)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "max_speed_limit": self.max_speed_limit,
            "allowed_layout_classes": sorted(self.allowed_layout_classes),
            "excluded_maneuvers": sorted(self.excluded_maneuvers),
            "present_salient_factors": sorted(self.present_salient_factors),
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> 'OddProfile':
        return cls(
            name=str(data["name"]),
            max_speed_limit=float(data["max_speed_limit"]),
            allowed_layout_classes=frozenset(data.get("allowed_layout_classes", ())),
            excluded_maneuvers=frozenset(data.get("excluded_maneuvers", ())),
            present_salient_factors=frozenset(data.get("present_salient_factors", ())),
        )


@dataclass(frozen=True)
class SamplingPlan:
    """concreteシナリオのサンプリング計画"""
    mode: SamplingMode = SamplingMode.GRID
    seed: int = 0
    samples: int = 10
    overrides: Mapping[str, ParameterRange] = field(default_factory=dict)


@dataclass(frozen=True)
class TestRequest:
    """concreteシナリオ群を追跡するテストリクエスト"""
    __test__ = False

    id: str
    parent_group: str
    specification: str
    author: str = "cat-harness"
    status: str = "open"

    def to_dict(self) -> Dict[str, Any]:
        return {
            "id": self.id,
            "parent_group": self.parent_group,
            "specification": self.specification,
            "author": self.author,
            "status": self.status,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> 'TestRequest':
        return cls(**{k: str(data[k]) for k in ("id", "parent_group", "specification", "author", "status")
                      if k in data})


# ---------------------------------------------------------------------------
# concreteシナリオ
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Footprint:
    """矩形フットプリント（長さ・幅 [m]）"""
    length: float
    width: float


@dataclass(frozen=True)
class VehicleState:
    """車両の運動状態"""
    x: float
    y: float
    heading: float
    speed: float
    accel: float = 0.0
    curvature: float = 0.0
    odometer: float = 0.0

    @property
    def velocity(self) -> Tuple[float, float]:
        return (self.speed * math.cos(self.heading), self.speed * math.sin(self.heading))


@dataclass(frozen=True)
class TrajectorySample:
    t: float
    x: float
    y: float
    heading: float
    speed: float


@dataclass(frozen=True)
class ActorTrajectory:
    kind: ActorKind
    samples: Tuple[TrajectorySample, ...]


@dataclass(frozen=True)
class StimulusAnnotation:
    """刺激の開始・終了時刻 [s]"""
    onset_time: float
    end_time: float


@dataclass(frozen=True)
class RouteSegment:
    """自車経路の区間（走行距離 start_odometer から一定曲率）"""
    start_odometer: float
    curvature: float


@dataclass(frozen=True)
class ScenarioCategory:
    """concreteシナリオの由来カテゴリ（カバレッジ集計とODD差分に使用）"""
    functional_id: str
    conflict_type: str
    layout_class: str
    ego_maneuver: str
    actor_maneuvers: Tuple[str, ...]
    actor_start_locations: Tuple[str, ...]
    salient_factors: Tuple[str, ...] = ()


@dataclass(frozen=True)
class ConcreteScenario:
    """
    全パラメータが確定した再現可能なテストケース

    構築時には検証しない（validate_concrete が違反をデータとして報告する）。
    """
    id: str
    logical_parent: str
    test_request: str
    ego_start: VehicleState
    actor_trajectories: Tuple[ActorTrajectory, ...]
    stimulus: StimulusAnnotation
    safety_group: str
    footprints: Tuple[Footprint, ...]
    duration: float
    ego_footprint: Footprint = Footprint(4.8, 1.9)
    ego_route: Tuple[RouteSegment, ...] = (RouteSegment(0.0, 0.0),)
    parameters: Mapping[str, float] = field(default_factory=dict)
    category: Optional[ScenarioCategory] = None

    @property
    def partner_kind(self) -> ActorKind:
        return self.actor_trajectories[0].kind

    def route_curvature(self, odometer: float) -> float:
        """走行距離における経路曲率"""
        curvature = self.ego_route[0].curvature if self.ego_route else 0.0
        for segment in self.ego_route:
            if odometer + 1e-9 >= segment.start_odometer:
                curvature = segment.curvature
            else:
                break
        return curvature

    def with_safety_group(self, group_id: str) -> 'ConcreteScenario':
        return replace(self, safety_group=group_id)

    def to_dict(self) -> Dict[str, Any]:
        """交換フォーマット（JSON）用の辞書に変換"""
        return {
            "id": self.id,
            "logical_parent": self.logical_parent,
            "test_request": self.test_request,
            "ego_start": _state_to_dict(self.ego_start),
            "actor_trajectories": [
                {
                    "kind": trajectory.kind.value,
                    "samples": [[s.t, s.x, s.y, s.heading, s.speed] for s in trajectory.samples],
                }
                for trajectory in self.actor_trajectories
            ],
            "stimulus": {"onset_time": self.stimulus.onset_time, "end_time": self.stimulus.end_time},
            "safety_group": self.safety_group,
            "footprints": [[fp.length, fp.width] for fp in self.footprints],
            "duration": self.duration,
            "ego_footprint": [self.ego_footprint.length, self.ego_footprint.width],
            "ego_route": [[seg.start_odometer, seg.curvature] for seg in self.ego_route],
            "parameters": {k: self.parameters[k] for k in sorted(self.parameters)},
            "category": None if self.category is None else {
                "functional_id": self.category.functional_id,
                "conflict_type": self.category.conflict_type,
                "layout_class": self.category.layout_class,
                "ego_maneuver": self.category.ego_maneuver,
                "actor_maneuvers": list(self.category.actor_maneuvers),
                "actor_start_locations": list(self.category.actor_start_locations),
                "salient_factors": list(self.category.salient_factors),
            },
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> 'ConcreteScenario':
        """辞書から復元（不正なキー・型は KeyError / ValueError / TypeError）"""
        category = data.get("category")
        return cls(
            id=str(data["id"]),
            logical_parent=str(data["logical_parent"]),
            test_request=str(data["test_request"]),
            ego_start=VehicleState(**{k: float(v) for k, v in data["ego_start"].items()}),
            actor_trajectories=tuple(
                ActorTrajectory(
                    kind=ActorKind(item["kind"]),
                    samples=tuple(TrajectorySample(*map(float, s)) for s in item["samples"]),
                )
                for item in data["actor_trajectories"]
            ),
            stimulus=StimulusAnnotation(float(data["stimulus"]["onset_time"]),
                                        float(data["stimulus"]["end_time"])),
            safety_group=str(data["safety_group"]),
            footprints=tuple(Footprint(float(l), float(w)) for l, w in data["footprints"]),
            duration=float(data["duration"]),
            ego_footprint=Footprint(*map(float, data.get("ego_footprint", (4.8, 1.9)))),
            ego_route=tuple(RouteSegment(float(s), float(k)) for s, k in data.get("ego_route", [[0.0, 0.0]])),
            parameters={str(k): float(v) for k, v in data.get("parameters", {}).items()},
            category=None if not category else ScenarioCategory(
                functional_id=category["functional_id"],
                conflict_type=category["conflict_type"],
                layout_class=category["layout_class"],
                ego_maneuver=category["ego_maneuver"],
                actor_maneuvers=tuple(category["actor_maneuvers"]),
                actor_start_locations=tuple(category.get("actor_start_locations", ())),
                salient_factors=tuple(category.get("salient_factors", ())),
            ),
        )


def _state_to_dict(state: VehicleState) -> Dict[str, float]:
    return {
        "x": state.x, "y": state.y, "heading": state.heading, "speed": state.speed,
        "accel": state.accel, "curvature": state.curvature, "odometer": state.odometer,
    }


@dataclass(frozen=True)
class ValidationViolation:
    """検証違反（違反した不変条件とフィールドパス）"""
    invariant: str
    field_path: str
    message: str = ""


@dataclass(frozen=True)
class ValidationReport:
    scenario_id: str
    violations: Tuple[ValidationViolation, ...] = ()

    @property
    def is_valid(self) -> bool:
        return not self.violations

    def invariants(self) -> List[str]:
        return [v.invariant for v in self.violations]


# ---------------------------------------------------------------------------
# シミュレーション
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LatencyConfig:
    """モジュール遅延 [s]"""
    perception_delay: float = 0.1
    planning_delay: float = 0.1
    actuation_delay: float = 0.05

    def validate(self, step: Optional[float] = None) -> None:
        for name in ("perception_delay", "planning_delay", "actuation_delay"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise ConfigurationError(f"{name} must be non-negative, got {value}", f"latency.{name}")
            if step is not None and abs(value / step - round(value / step)) > 1e-6:
                raise ConfigurationError(f"{name}={value} is not a multiple of step {step}",
                                         f"latency.{name}")

    @property
    def observation_delay(self) -> float:
        return self.perception_delay + self.planning_delay

    @classmethod
    def zero(cls) -> 'LatencyConfig':
        return cls(0.0, 0.0, 0.0)


@dataclass(frozen=True)
class JitterConfig:
    """観測遅延の揺らぎ（±steps ステップ）"""
    enabled: bool = False
    steps: int = 1


@dataclass(frozen=True)
class VehicleLimits:
    """ADS自車の運動制限"""
    max_brake: float = 8.0
    max_accel: float = 3.0
    max_curvature: float = 0.2

    def validate(self) -> None:
        for name in ("max_brake", "max_accel", "max_curvature"):
            value = getattr(self, name)
            if not value > 0:
                raise ConfigurationError(f"{name} must be positive, got {value}", f"ads_limits.{name}")


@dataclass(frozen=True)
class ControlCommand:
    longitudinal_accel: float
    curvature: float

    @property
    def is_finite(self) -> bool:
        return math.isfinite(self.longitudinal_accel) and math.isfinite(self.curvature)


@dataclass(frozen=True)
class ObservedActor:
    index: int
    kind: ActorKind
    x: float
    y: float
    heading: float
    speed: float
    footprint: Footprint


@dataclass(frozen=True)
class ObservedWorld:
    """遅延を含む観測（ポリシーが参照できる唯一の世界状態）"""
    t: float
    observed_time: float
    ego: VehicleState
    actors: Tuple[ObservedActor, ...]
    ego_footprint: Footprint = Footprint(4.8, 1.9)
    route_curvature: float = 0.0


@dataclass(frozen=True)
class PolicyContext:
    """シナリオ開始時にポリシーへ渡す情報（真値の軌跡は含まない）"""
    scenario_id: str
    step: float
    limits: VehicleLimits = VehicleLimits()
    ego_footprint: Footprint = Footprint(4.8, 1.9)
    nieon_plan: Optional['ManeuverPlan'] = None
    seed: int = 0


@dataclass(frozen=True)
class Contact:
    """最初の接触"""
    time: float
    point: Tuple[float, float]
    ego_zone: ImpactZone
    relative_speed_at_impact: float
    ego_stationary: bool
    partner_index: int
    normal: Tuple[float, float] = (1.0, 0.0)
    ego_velocity: Tuple[float, float] = (0.0, 0.0)
    partner_velocity: Tuple[float, float] = (0.0, 0.0)
    ego_heading: float = 0.0
    partner_heading: float = 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "time": self.time,
            "point": list(self.point),
            "ego_zone": self.ego_zone.value,
            "relative_speed_at_impact": self.relative_speed_at_impact,
            "ego_stationary": self.ego_stationary,
            "partner_index": self.partner_index,
        }


@dataclass(frozen=True)
class SimTrace:
    """1シナリオのシミュレーション結果"""
    scenario_id: str
    times: Tuple[float, ...]
    ego_states: Tuple[VehicleState, ...]
    actor_states: Tuple[Tuple[TrajectorySample, ...], ...]
    contact: Optional[Contact]
    seed: int
    step: float

    @property
    def final_time(self) -> float:
        return self.times[-1] if self.times else 0.0


# ---------------------------------------------------------------------------
# 重症度
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ImpactConfig:
    """インパルス運動量モデルの入力"""
    mass_ego: float
    mass_partner: float
    velocity_ego: Tuple[float, float]
    velocity_partner: Tuple[float, float]
    restitution: float
    contact_normal: Tuple[float, float]
    pdof_ego: Optional[float] = None
    heading_ego: float = 0.0
    heading_partner: float = 0.0

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if not (self.mass_ego > 0 and self.mass_partner > 0):
            raise ValueError("masses must be positive")
        if not 0.0 <= self.restitution <= 1.0:
            raise ValueError(f"restitution must be in [0, 1], got {self.restitution}")
        norm = math.hypot(*self.contact_normal)
        if abs(norm - 1.0) > 1e-9:
            raise ValueError(f"contact normal must be a unit vector, |n|={norm}")


@dataclass(frozen=True)
class DeltaV:
    dv_ego: float
    dv_partner: float
    pdof_ego: float
    pdof_partner: float


@dataclass(frozen=True)
class InjuryRisk:
    p_mais3plus: float

    def __post_init__(self):
        if not 0.0 <= self.p_mais3plus <= 1.0:
            raise ValueError(f"p(MAIS3+) must be in [0, 1], got {self.p_mais3plus}")


@dataclass(frozen=True)
class SeriousInjuryThresholds:
    vehicle_to_vehicle: float = 0.05
    child_pedestrian: float = 0.015
    other_vru: float = 0.10

    def validate(self) -> None:
        for name in ("vehicle_to_vehicle", "child_pedestrian", "other_vru"):
            value = getattr(self, name)
            if not 0.0 < value < 1.0:
                raise ConfigurationError(f"threshold {name} must be in (0, 1), got {value}",
                                         f"severity.thresholds.{name}")
        if not self.child_pedestrian < self.other_vru:
            raise ConfigurationError("child_pedestrian threshold must be below other_vru",
                                     "severity.thresholds")


@dataclass(frozen=True)
class RiskCurve:
    """ロジスティック曲線 expit(intercept + slope*x + cos_coef*cos(pdof) + sin_coef*|sin(pdof)|)"""
    intercept: float
    slope: float
    cos_coef: float = 0.0
    sin_coef: float = 0.0

    def validate(self, key: str = "") -> None:
        if not self.slope > 0:
            raise ConfigurationError(f"risk curve slope must be positive, got {self.slope}", key)


@dataclass(frozen=True)
class ActorSeverity:
    """1人分の重症度評価"""
    label: str
    kind: ActorKind
    p_mais3plus: float
    serious_injury: bool

    def to_dict(self) -> Dict[str, Any]:
        return {"label": self.label, "kind": self.kind.value,
                "p_mais3plus": self.p_mais3plus, "serious_injury": self.serious_injury}


@dataclass(frozen=True)
class CollisionOutcome:
    """ADS側の衝突結果"""
    collided: bool
    contact: Optional[Contact] = None
    severities: Tuple[ActorSeverity, ...] = ()
    serious_injury: bool = False
    delta_v: Optional[DeltaV] = None

    @property
    def max_p(self) -> float:
        return max((s.p_mais3plus for s in self.severities), default=0.0)

    @property
    def ordering_key(self) -> Tuple[bool, bool, float, float]:
        rel = self.contact.relative_speed_at_impact if self.contact else 0.0
        return (self.collided, self.serious_injury, self.max_p, rel)

    @classmethod
    def no_collision(cls) -> 'CollisionOutcome':
        return cls(collided=False)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "collided": self.collided,
            "contact": None if self.contact is None else self.contact.to_dict(),
            "severities": [s.to_dict() for s in self.severities],
            "serious_injury": self.serious_injury,
        }


# ---------------------------------------------------------------------------
# NIEON
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ResponseTimeModel:
    """応答時間モデル max(floor, intercept + slope * ramp_up)"""
    intercept: float
    slope: float
    floor: float

    def validate(self, key: str = "nieon") -> None:
        if not self.intercept > 0:
            raise ConfigurationError(f"response time intercept must be positive, got {self.intercept}", key)
        if self.slope < 0 or self.floor < 0:
            raise ConfigurationError("response time slope and floor must be non-negative", key)


@dataclass(frozen=True)
class ManeuverLimits:
    max_decel: float = 8.0
    jerk_limit: float = 30.0
    max_lateral_accel: float = 5.0
    swerve_offset: float = 3.5
    # 操舵の限界曲率 [1/m]
    max_curvature: float = 0.2

    def validate(self, key: str = "nieon.limits") -> None:
        for name in ("max_decel", "jerk_limit", "max_lateral_accel", "swerve_offset", "max_curvature"):
            value = getattr(self, name)
            if not value > 0:
                raise ConfigurationError(f"{name} must be positive, got {value}", f"{key}.{name}")


@dataclass(frozen=True)
class ManeuverPlan:
    """NIEONの回避候補1つ（反応時刻と限界値）"""
    maneuver: NieonManeuver
    reaction_time: float
    limits: ManeuverLimits
    swerve_brakes: bool = True


@dataclass(frozen=True)
class NieonCandidate:
    plan: ManeuverPlan
    outcome: CollisionOutcome
    degenerate: bool = False


@dataclass(frozen=True)
class NieonOutcome:
    chosen_maneuver: NieonManeuver
    collided: bool
    contact: Optional[Contact]
    severity: Tuple[ActorSeverity, ...]
    serious_injury: bool
    response_time: float = 0.0
    plan: Optional[ManeuverPlan] = None
    candidates: Tuple[NieonCandidate, ...] = ()

    @property
    def max_p(self) -> float:
        return max((s.p_mais3plus for s in self.severity), default=0.0)

    @property
    def ordering_key(self) -> Tuple[bool, bool, float, float]:
        rel = self.contact.relative_speed_at_impact if self.contact else 0.0
        return (self.collided, self.serious_injury, self.max_p, rel)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "chosen_maneuver": self.chosen_maneuver.value,
            "collided": self.collided,
            "contact": None if self.contact is None else self.contact.to_dict(),
            "severity": [s.to_dict() for s in self.severity],
            "serious_injury": self.serious_injury,
            "response_time": self.response_time,
        }


# ---------------------------------------------------------------------------
# スコアリング
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScenarioResult:
    scenario_id: str
    ads_outcome: CollisionOutcome
    nieon_outcome: NieonOutcome
    safety_group: str
    road_user_group: RoadUserGroup
    inconclusive: bool = False
    fault: str = ""

    def to_dict(self) -> Dict[str, Any]:
        return {
            "scenario_id": self.scenario_id,
            "safety_group": self.safety_group,
            "road_user_group": self.road_user_group.value,
            "inconclusive": self.inconclusive,
            "fault": self.fault,
            "ads_outcome": self.ads_outcome.to_dict(),
            "nieon_outcome": self.nieon_outcome.to_dict(),
        }


@dataclass(frozen=True)
class GroupScore:
    group_id: str
    road_user_group: str
    n_scenarios: int
    ads_collisions: int = 0
    nieon_collisions: int = 0
    ads_serious: int = 0
    nieon_serious: int = 0
    inconclusive: int = 0

    def passes(self, slack: int = 0) -> bool:
        return (self.ads_collisions <= self.nieon_collisions + slack
                and self.ads_serious <= self.nieon_serious + slack)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> 'GroupScore':
        return cls(str(data["group_id"]), str(data["road_user_group"]), int(data["n"]),
                   int(data.get("ads_collisions", 0)), int(data.get("nieon_collisions", 0)),
                   int(data.get("ads_serious", 0)), int(data.get("nieon_serious", 0)),
                   int(data.get("inconclusive", 0)))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "group_id": self.group_id,
            "road_user_group": self.road_user_group,
            "n": self.n_scenarios,
            "ads_collisions": self.ads_collisions,
            "nieon_collisions": self.nieon_collisions,
            "ads_serious": self.ads_serious,
            "nieon_serious": self.nieon_serious,
            "inconclusive": self.inconclusive,
        }


@dataclass(frozen=True)
class ScoreTable:
    """セーフティグループ別スコアと道路利用者グループのロールアップ"""
    groups: Tuple[GroupScore, ...] = ()
    rollups: Tuple[GroupScore, ...] = ()

    def all_rows(self) -> Tuple[GroupScore, ...]:
        return self.groups + self.rollups

    def get(self, group_id: str) -> Optional[GroupScore]:
        for row in self.all_rows():
            if row.group_id == group_id:
                return row
        return None


@dataclass(frozen=True)
class GroupVerdict:
    group_id: str
    road_user_group: str
    collisions_pass: bool
    injuries_pass: bool

    @property
    def passed(self) -> bool:
        return self.collisions_pass and self.injuries_pass

    def to_dict(self) -> Dict[str, Any]:
        return {"group_id": self.group_id, "road_user_group": self.road_user_group,
                "collisions_pass": self.collisions_pass, "injuries_pass": self.injuries_pass,
                "pass": self.passed}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> 'GroupVerdict':
        return cls(str(data["group_id"]), str(data["road_user_group"]),
                   bool(data["collisions_pass"]), bool(data["injuries_pass"]))


@dataclass(frozen=True)
class AcceptanceReport:
    group_verdicts: Tuple[GroupVerdict, ...]
    road_user_verdicts: Tuple[GroupVerdict, ...]
    overall_pass: bool
    inconclusive_ids: Tuple[str, ...] = ()
    config_echo: Mapping[str, Any] = field(default_factory=dict)

    def failing_groups(self) -> List[str]:
        return [v.group_id for v in self.group_verdicts + self.road_user_verdicts if not v.passed]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "overall_pass": self.overall_pass,
            "group_verdicts": [v.to_dict() for v in self.group_verdicts],
            "road_user_verdicts": [v.to_dict() for v in self.road_user_verdicts],
            "inconclusive_ids": list(self.inconclusive_ids),
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any], config_echo: Optional[Mapping[str, Any]] = None) -> 'AcceptanceReport':
        return cls(
            group_verdicts=tuple(GroupVerdict.from_dict(v) for v in data.get("group_verdicts", ())),
            road_user_verdicts=tuple(GroupVerdict.from_dict(v) for v in data.get("road_user_verdicts", ())),
            overall_pass=bool(data["overall_pass"]),
            inconclusive_ids=tuple(data.get("inconclusive_ids", ())),
            config_echo=dict(config_echo or {}),
        )


@dataclass(frozen=True)
class EvaluationReport:
    """1回の評価実行の結果一式"""
    policy: str
    database_hash: str
    score_table: ScoreTable
    acceptance: AcceptanceReport
    results: Tuple[ScenarioResult, ...] = ()
    slack: int = 0
    wall_clock: float = 0.0
    metadata: Mapping[str, Any] = field(default_factory=dict)
    coverage: Mapping[str, Any] = field(default_factory=dict)

    @property
    def scenario_count(self) -> int:
        return sum(row.n_scenarios for row in self.score_table.rollups)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "policy": self.policy,
            "database_hash": self.database_hash,
            "scenario_count": self.scenario_count,
            "overall_pass": self.acceptance.overall_pass,
            "score_table": [dict(row.to_dict(), **{"pass": row.passes(self.slack)})
                            for row in self.score_table.all_rows()],
            "acceptance": self.acceptance.to_dict(),
            "coverage": dict(self.coverage),
            "config": dict(self.acceptance.config_echo),
            "wall_clock_seconds": self.wall_clock,
            "metadata": dict(self.metadata),
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> 'EvaluationReport':
        """保存済みの構造化ドキュメントから復元する（シナリオ単位の結果は含まれない）"""
        rows = [GroupScore.from_dict(row) for row in data.get("score_table", ())]
        rollup_ids = {g.value for g in RoadUserGroup}
        config = dict(data.get("config", {}))
        return cls(
            policy=str(data["policy"]),
            database_hash=str(data["database_hash"]),
            score_table=ScoreTable(tuple(r for r in rows if r.group_id not in rollup_ids),
                                   tuple(r for r in rows if r.group_id in rollup_ids)),
            acceptance=AcceptanceReport.from_dict(data["acceptance"], config),
            slack=int(config.get("scoring", {}).get("slack", 0)),
            wall_clock=float(data.get("wall_clock_seconds", 0.0)),
            metadata=dict(data.get("metadata", {})),
            coverage=dict(data.get("coverage", {})),
        )


@dataclass(frozen=True)
class ZTestResult:
    group_id: str
    z: float
    p_value: float
    discriminative: bool
    n: int
    failures_low: int
    failures_high: int
    degenerate: bool = False
    note: str = ""

    def to_dict(self) -> Dict[str, Any]:
        return {
            "group_id": self.group_id,
            "z": None if math.isnan(self.z) else self.z,
            "p_value": None if math.isnan(self.p_value) else self.p_value,
            "discriminative": self.discriminative,
            "n": self.n,
            "failures_low": self.failures_low,
            "failures_high": self.failures_high,
            "degenerate": self.degenerate,
            "note": self.note,
        }


@dataclass(frozen=True)
class RepeatabilityResult:
    k: int
    collision_p95: float
    injury_p95: float
    per_group_max: Mapping[str, Tuple[float, float]] = field(default_factory=dict)
    reference_collision_p95: float = 1.5
    reference_injury_p95: float = 0.6

    def to_dict(self) -> Dict[str, Any]:
        return {
            "k": self.k,
            "collision_p95_percent": self.collision_p95,
            "injury_p95_percent": self.injury_p95,
            "per_group_max_percent": {g: list(v) for g, v in sorted(self.per_group_max.items())},
            "reference_context_percent": {"collision": self.reference_collision_p95,
                                          "injury": self.reference_injury_p95},
        }


@dataclass(frozen=True)
class ArcLengthRecord:
    """時刻（刺激開始基準）と自車走行距離の記録"""
    scenario_id: str
    collided: bool
    times: Tuple[float, ...]
    positions: Tuple[float, ...]


@dataclass(frozen=True)
class TrackComparison:
    conservative: bool
    ahead_fraction: float
    sim_collisions: int
    track_collisions: int
    matched: int
    ahead_ids: Tuple[str, ...] = ()

    @property
    def majority_ahead(self) -> bool:
        return self.ahead_fraction > 0.5

    @property
    def passed(self) -> bool:
        return self.conservative and self.majority_ahead

    def to_dict(self) -> Dict[str, Any]:
        return {
            "conservative": self.conservative,
            "ahead_fraction": self.ahead_fraction,
            "majority_ahead": self.majority_ahead,
            "sim_collisions": self.sim_collisions,
            "track_collisions": self.track_collisions,
            "matched": self.matched,
            "pass": self.passed,
        }


@dataclass(frozen=True)
class GroupDelta:
    group_id: str
    d_ads_collisions: int
    d_nieon_collisions: int
    d_ads_serious: int
    d_nieon_serious: int

    @property
    def regression(self) -> bool:
        return self.d_ads_collisions > 0 or self.d_ads_serious > 0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "group_id": self.group_id,
            "d_ads_collisions": self.d_ads_collisions,
            "d_nieon_collisions": self.d_nieon_collisions,
            "d_ads_serious": self.d_ads_serious,
            "d_nieon_serious": self.d_nieon_serious,
            "regression": self.regression,
        }


@dataclass(frozen=True)
class ReleaseDiff:
    database_hash: str
    deltas: Tuple[GroupDelta, ...]

    @property
    def regressions(self) -> List[str]:
        return [d.group_id for d in self.deltas if d.regression]

    def to_dict(self) -> Dict[str, Any]:
        return {"database_hash": self.database_hash,
                "deltas": [d.to_dict() for d in self.deltas],
                "regressions": self.regressions}


@dataclass(frozen=True)
class CategoryKey:
    """語彙の組み合わせ（カバレッジ判定の単位）"""
    ego_maneuver: str
    actor_kind: str
    actor_maneuver: str
    start_location: str
    layout_class: str
    salient_factors: Tuple[str, ...] = ()

    def to_dict(self) -> Dict[str, Any]:
        return {
            "ego_maneuver": self.ego_maneuver,
            "actor_kind": self.actor_kind,
            "actor_maneuver": self.actor_maneuver,
            "start_location": self.start_location,
            "layout_class": self.layout_class,
            "salient_factors": list(self.salient_factors),
        }


@dataclass(frozen=True)
class CoverageDiff:
    carried_over: Tuple[str, ...]
    excluded: Tuple[str, ...]
    gap_categories: Tuple[CategoryKey, ...]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "carried_over": list(self.carried_over),
            "excluded": list(self.excluded),
            "gap_categories": [g.to_dict() for g in self.gap_categories],
        }
