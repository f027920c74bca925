"""
シナリオ記述言語の語彙レジストリ

操作種別・位置・顕著要因（salient factor）・レイアウトクラスは閉じた語彙で、
レジストリファイル（JSON）による登録でのみ拡張できる。
"""

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, Iterable, Mapping, Optional, Tuple

from ..models.data_models import ActorKind, OddProfile, SourcePosition
from .error_handling import ConfigurationError, UnknownToken
from .logging_config import get_harness_logger


BASE_MANEUVERS = (
    "go_straight", "turn_left", "turn_right", "cut_in", "pull_out",
    "cross_path", "run_red_light", "sudden_stop", "wrong_way",
)
BASE_EGO_MANEUVERS = ("go_straight", "turn_left", "turn_right")
BASE_LOCATIONS = ("within_lane", "across_lane", "off_road", "driveway", "crosswalk", "curbside")
BASE_SALIENT_FACTORS = (
    "occlusion", "high_grade", "low_sun_angle", "double_parked_vehicle",
    "crowd", "light_rail", "night_lighting",
)
BASE_CONFLICT_TYPES = (
    "crossing_pedestrian_midblock", "crossing_pedestrian_crosswalk", "cutting_across_perpendicular",
    "pulling_out", "cutting_in", "lead_braking", "opposing_turn", "head_on",
)

BUNDLED_VOCABULARY = Path(__file__).resolve().parent.parent / "data" / "vocabulary.json"


@dataclass(frozen=True)
class Vocabulary:
    """登録済み語彙一式"""
    maneuvers: Tuple[str, ...] = BASE_MANEUVERS
    ego_maneuvers: Tuple[str, ...] = BASE_EGO_MANEUVERS
    locations: Tuple[str, ...] = BASE_LOCATIONS
    salient_factors: Tuple[str, ...] = BASE_SALIENT_FACTORS
    layout_classes: Tuple[str, ...] = ()
    conflict_types: Tuple[str, ...] = BASE_CONFLICT_TYPES
    actor_kinds: Tuple[ActorKind, ...] = tuple(ActorKind)
    placements: Mapping[str, Tuple[Tuple[str, str], ...]] = field(default_factory=dict)
    odd_profiles: Mapping[str, OddProfile] = field(default_factory=dict)

    def _categories(self) -> Dict[str, Tuple[str, ...]]:
        return {
            "maneuver": self.maneuvers,
            "location": self.locations,
            "salient factor": self.salient_factors,
            "layout": self.layout_classes,
            "conflict type": self.conflict_types,
            "actor kind": tuple(k.value for k in self.actor_kinds),
        }

    def contains(self, category: str, token: str) -> bool:
        return token in self._categories()[category]

    def check(self, category: str, token: str, position: Optional[SourcePosition] = None) -> str:
        """トークンを検証（語彙外なら UnknownToken）"""
        if not self.contains(category, token):
            pos = position or SourcePosition()
            raise UnknownToken(token, category, pos.source, pos.line, pos.column)
        return token

    def placements_for(self, maneuver: str) -> Tuple[Tuple[str, str], ...]:
        """操作の開始・終了位置の候補（先頭が標準配置）"""
        return tuple(self.placements.get(maneuver, ())) or (("within_lane", "within_lane"),)

    def odd_profile(self, name: str) -> OddProfile:
        if name not in self.odd_profiles:
            raise ConfigurationError(f"unknown ODD profile '{name}' (known: {sorted(self.odd_profiles)})",
                                     "odd_profile")
        return self.odd_profiles[name]

    def restricted(self, **subsets: Iterable) -> 'Vocabulary':
        """一部の語彙だけに絞った複製（列挙の小規模検証用）"""
        values = {}
        for key, tokens in subsets.items():
            values[key] = tuple(tokens)
        return replace(self, **values)


def _extend(base: Tuple[str, ...], extra: Iterable[str]) -> Tuple[str, ...]:
    merged = list(base)
    for token in extra:
        if token not in merged:
            merged.append(token)
    return tuple(merged)


def load_vocabulary(registry_files: Iterable[str] = (), include_bundled: bool = True) -> Vocabulary:
    """同梱レジストリと追加レジストリファイルから語彙を構築

    Args:
        registry_files: 追加で読み込むレジストリ（JSON）のパス
        include_bundled: 同梱の vocabulary.json を読み込むか
    """
    logger = get_harness_logger("generation")
    vocab = Vocabulary()
    paths = ([BUNDLED_VOCABULARY] if include_bundled else []) + [Path(p) for p in registry_files]
    for path in paths:
        try:
            with open(path, 'r', encoding='utf-8') as f:
                data = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigurationError(f"語彙レジストリの読み込みに失敗しました: {path}: {e}", str(path)) from e

        placements = dict(vocab.placements)
        for maneuver, pairs in data.get("placements", {}).items():
            placements[maneuver] = tuple((str(a), str(b)) for a, b in pairs)
        profiles = dict(vocab.odd_profiles)
        for name, profile in data.get("odd_profiles", {}).items():
            profiles[name] = OddProfile.from_dict({"name": name, **profile})

        vocab = replace(
            vocab,
            maneuvers=_extend(vocab.maneuvers, data.get("maneuvers", ())),
            ego_maneuvers=_extend(vocab.ego_maneuvers, data.get("ego_maneuvers", ())),
            locations=_extend(vocab.locations, data.get("locations", ())),
            salient_factors=_extend(vocab.salient_factors, data.get("salient_factors", ())),
            layout_classes=_extend(vocab.layout_classes, data.get("layout_classes", ())),
            conflict_types=_extend(vocab.conflict_types, data.get("conflict_types", ())),
            placements=placements,
            odd_profiles=profiles,
        )
        logger.debug(f"語彙レジストリを読み込みました: {path}")
    return vocab
