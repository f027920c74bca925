"""
セーフティグループの分類体系

セーフティグループは衝突タイプ（conflict type）と衝突相手（conflict partner）で定義され、
各グループはちょうど1つの道路利用者グループ（Vehicle / VRU）に属する。
"""

from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Tuple

from ..services.error_handling import ConfigurationError, UnmappedConflict
from .data_models import ActorKind, RoadUserGroup


@dataclass(frozen=True)
class SafetyGroup:
    id: str
    conflict_type: str
    conflict_partner: str
    road_user_group: RoadUserGroup
    description: str = ""
    subcategories: Tuple[str, ...] = ()


class SafetyGroupRegistry:
    """登録済みセーフティグループと (conflict_type, partner) ルール表"""

    def __init__(self, groups: Iterable[SafetyGroup] = ()):
        self._groups: Dict[str, SafetyGroup] = {}
        self._rules: Dict[Tuple[str, str], str] = {}
        for group in groups:
            self.register(group)

    def register(self, group: SafetyGroup) -> None:
        """グループを登録し、(conflict_type, conflict_partner) のルールを追加"""
        if group.id in self._groups:
            raise ConfigurationError(f"safety group '{group.id}' is already registered", "taxonomy")
        key = (group.conflict_type, group.conflict_partner)
        if key in self._rules:
            raise ConfigurationError(f"rule {key} already maps to '{self._rules[key]}'", "taxonomy")
        self._groups[group.id] = group
        self._rules[key] = group.id

    def __contains__(self, group_id: str) -> bool:
        return group_id in self._groups

    def __len__(self) -> int:
        return len(self._groups)

    def get(self, group_id: str) -> SafetyGroup:
        if group_id not in self._groups:
            raise KeyError(f"safety group '{group_id}' is not registered")
        return self._groups[group_id]

    def ids(self) -> List[str]:
        return sorted(self._groups)

    def groups(self) -> List[SafetyGroup]:
        return [self._groups[i] for i in self.ids()]

    def road_user_group(self, group_id: str) -> RoadUserGroup:
        return self.get(group_id).road_user_group

    def lookup(self, conflict_type: str, partner: ActorKind) -> Optional[str]:
        """種別の完全一致、次にクラスでルールを引く"""
        for key in (partner.value, partner.actor_class):
            group_id = self._rules.get((conflict_type, key))
            if group_id is not None:
                return group_id
        return None

    def resolve(self, conflict_type: str, partner: ActorKind) -> str:
        group_id = self.lookup(conflict_type, partner)
        if group_id is None:
            raise UnmappedConflict(conflict_type, partner.value)
        return group_id


def default_taxonomy(motorcyclist_group: RoadUserGroup = RoadUserGroup.VEHICLE) -> SafetyGroupRegistry:
    """同梱のセーフティグループ体系を構築

    Args:
        motorcyclist_group: 二輪車グループを集計する道路利用者グループ
    """
    vru, vehicle = RoadUserGroup.VRU, RoadUserGroup.VEHICLE
    return SafetyGroupRegistry([
        SafetyGroup("ped_crossing_midblock", "crossing_pedestrian_midblock", "pedestrian", vru,
                    "Pedestrian crossing outside a crosswalk",
                    ("dart_out", "occluded_dart_out", "crowd_breakaway")),
        SafetyGroup("ped_crossing_crosswalk", "crossing_pedestrian_crosswalk", "pedestrian", vru,
                    "Pedestrian crossing in a crosswalk", ("near_side", "far_side")),
        SafetyGroup("scooter_crosswalk_exit", "crossing_pedestrian_crosswalk", "scooter", vru,
                    "Scooter or skateboard rider leaving a crosswalk"),
        SafetyGroup("scooter_cut_across_perp", "cutting_across_perpendicular", "scooter", vru,
                    "Scooter rider cutting across, perpendicular"),
        SafetyGroup("cyc_cut_across_perp", "cutting_across_perpendicular", "cyclist", vru,
                    "Cyclist cutting across, perpendicular"),
        SafetyGroup("veh_cut_across_perp", "cutting_across_perpendicular", "passenger_vehicle", vehicle,
                    "Vehicle cutting across, perpendicular",
                    ("straight_crossing_path", "red_light_runner")),
        SafetyGroup("heavy_cut_across_perp", "cutting_across_perpendicular", "heavy_vehicle", vehicle,
                    "Heavy vehicle cutting across, perpendicular"),
        SafetyGroup("moto_cut_across_perp", "cutting_across_perpendicular", "motorcyclist",
                    motorcyclist_group, "Motorcyclist cutting across, perpendicular"),
        SafetyGroup("veh_pull_out", "pulling_out", "vehicle", vehicle,
                    "Vehicle pulling out of a driveway or parking"),
        SafetyGroup("veh_cut_in", "cutting_in", "vehicle", vehicle, "Vehicle cutting in"),
        SafetyGroup("veh_lead_braking", "lead_braking", "vehicle", vehicle, "Lead vehicle braking"),
        SafetyGroup("veh_opposing_turn", "opposing_turn", "vehicle", vehicle,
                    "Turning across an opposing vehicle's path", ("LTAP", "RTAP")),
        SafetyGroup("veh_head_on", "head_on", "vehicle", vehicle, "Wrong-way vehicle, head on"),
    ])


# 操作種別から衝突タイプを導出する表（列挙生成したシナリオ用）
_CONFLICT_BY_MANEUVER = {
    "cross_path": "cutting_across_perpendicular",
    "run_red_light": "cutting_across_perpendicular",
    "pull_out": "pulling_out",
    "cut_in": "cutting_in",
    "sudden_stop": "lead_braking",
    "wrong_way": "head_on",
    "turn_left": "opposing_turn",
    "turn_right": "opposing_turn",
}


def derive_conflict_type(ego_maneuver: str, partner: ActorKind, actor_maneuver: str,
                         start_location: str) -> str:
    """操作の組み合わせから衝突タイプを決める"""
    if partner.actor_class == "pedestrian" and actor_maneuver == "cross_path":
        if start_location == "crosswalk":
            return "crossing_pedestrian_crosswalk"
        return "crossing_pedestrian_midblock"
    if partner.actor_class == "scooter" and start_location == "crosswalk":
        return "crossing_pedestrian_crosswalk"
    if actor_maneuver == "go_straight":
        if ego_maneuver in ("turn_left", "turn_right"):
            return "opposing_turn"
        return "lead_braking" if start_location == "within_lane" else "cutting_across_perpendicular"
    return _CONFLICT_BY_MANEUVER.get(actor_maneuver, actor_maneuver)
