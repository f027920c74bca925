"""
ハーネス設定管理モジュール

このモジュールは評価ハーネスの設定を管理し、JSON形式での永続化を提供します。
設定値はレポートにそのまま埋め込まれます（監査用のエコー）。
"""

import copy
import json
import math
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Tuple

from ..services.error_handling import ConfigurationError
from ..services.logging_config import get_harness_logger
from .data_models import (
    ActorKind,
    JitterConfig,
    LatencyConfig,
    ManeuverLimits,
    ResponseTimeModel,
    RiskCurve,
    RoadUserGroup,
    SeriousInjuryThresholds,
    VehicleLimits,
)


THREADS_ENV = "CAT_HARNESS_THREADS"


@dataclass(frozen=True)
class SimSettings:
    step: float = 0.01
    sample_interval: float = 0.05
    post_conflict_time: float = 3.0


@dataclass(frozen=True)
class NieonSettings:
    # 応答時間パラメータは順序関係のみを表すプレースホルダ（出典の値ではない）
    vehicle_response: ResponseTimeModel = ResponseTimeModel(0.6, 0.6, 0.25)
    vru_response: ResponseTimeModel = ResponseTimeModel(0.4, 0.6, 0.25)
    limits: ManeuverLimits = ManeuverLimits()
    swerve_brakes: bool = True
    stringency_deltas: Tuple[float, ...] = (-0.2, 0.0, 0.2)
    alpha: float = 0.05

    def response_model(self, group: RoadUserGroup) -> ResponseTimeModel:
        return self.vru_response if group is RoadUserGroup.VRU else self.vehicle_response


@dataclass(frozen=True)
class AebSettings:
    ttc_threshold: float = 4.0
    horizon_step: float = 0.1
    max_decel: float = 8.0
    jerk: float = 30.0


def _default_masses() -> Dict[str, float]:
    return {
        ActorKind.PASSENGER_VEHICLE.value: 1500.0,
        ActorKind.HEAVY_VEHICLE.value: 9000.0,
        ActorKind.MOTORCYCLIST.value: 250.0,
        ActorKind.CYCLIST.value: 90.0,
        ActorKind.PEDESTRIAN.value: 75.0,
        ActorKind.PEDESTRIAN_CHILD.value: 30.0,
        ActorKind.SCOOTER_RIDER.value: 90.0,
    }


def _default_vru_curves() -> Dict[str, RiskCurve]:
    # 非公式の較正値：ゼロ暴露でほぼ0、単調増加のみを満たす
    return {
        ActorKind.PEDESTRIAN.value: RiskCurve(-6.0, 0.45),
        ActorKind.PEDESTRIAN_CHILD.value: RiskCurve(-5.5, 0.45),
        ActorKind.CYCLIST.value: RiskCurve(-6.3, 0.42),
        ActorKind.SCOOTER_RIDER.value: RiskCurve(-6.2, 0.43),
        ActorKind.MOTORCYCLIST.value: RiskCurve(-5.0, 0.30),
    }


@dataclass(frozen=True)
class SeveritySettings:
    ego_mass: float = 1800.0
    masses: Dict[str, float] = field(default_factory=_default_masses)
    restitution: float = 0.1
    vehicle_curve: RiskCurve = RiskCurve(-6.0, 0.45, -0.3, 0.6)
    vru_curves: Dict[str, RiskCurve] = field(default_factory=_default_vru_curves)
    thresholds: SeriousInjuryThresholds = SeriousInjuryThresholds()

    def mass_of(self, kind: ActorKind) -> float:
        return float(self.masses[kind.value])


@dataclass(frozen=True)
class ScoringSettings:
    slack: int = 0
    motorcyclist_road_user_group: str = RoadUserGroup.VEHICLE.value


@dataclass(frozen=True)
class GenerationSettings:
    salient_subset_limit: int = 2
    sweep_placements: bool = False


def _default_variants() -> Dict[str, Dict[str, Any]]:
    return {
        "light_fog": {
            "latency": {"perception_delay": 0.2},
            "ads_limits": {"max_brake": 6.5},
        },
    }


@dataclass(frozen=True)
class HarnessConfig:
    """評価ハーネス全体の設定"""

    sim: SimSettings = SimSettings()
    latency: LatencyConfig = LatencyConfig()
    jitter: JitterConfig = JitterConfig()
    nieon: NieonSettings = NieonSettings()
    ads_limits: VehicleLimits = VehicleLimits()
    aeb: AebSettings = AebSettings()
    severity: SeveritySettings = field(default_factory=SeveritySettings)
    scoring: ScoringSettings = ScoringSettings()
    generation: GenerationSettings = GenerationSettings()
    parallelism: int = 1
    database_path: str = "scenario_db"
    policy: str = "aeb"
    seed: int = 0
    output_dir: str = "reports"
    formats: Tuple[str, ...] = ("csv", "json")
    variant: str = ""
    variants: Dict[str, Dict[str, Any]] = field(default_factory=_default_variants)

    def to_dict(self) -> Dict[str, Any]:
        """設定を辞書形式に変換"""
        data = asdict(self)
        return json.loads(json.dumps(data))

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> 'HarnessConfig':
        """辞書から設定オブジェクトを作成（未知のキーは無視）"""
        try:
            nieon = _section(data, "nieon")
            severity = _section(data, "severity")
            default_severity = SeveritySettings()
            kwargs: Dict[str, Any] = {
                "sim": _simple(SimSettings, _section(data, "sim")),
                "latency": _simple(LatencyConfig, _section(data, "latency")),
                "jitter": _simple(JitterConfig, _section(data, "jitter")),
                "nieon": NieonSettings(
                    vehicle_response=_simple(ResponseTimeModel, nieon.get("vehicle_response"),
                                             NieonSettings.vehicle_response),
                    vru_response=_simple(ResponseTimeModel, nieon.get("vru_response"),
                                         NieonSettings.vru_response),
                    limits=_simple(ManeuverLimits, nieon.get("limits")),
                    swerve_brakes=bool(nieon.get("swerve_brakes", True)),
                    stringency_deltas=tuple(float(d) for d in nieon.get("stringency_deltas",
                                                                        NieonSettings.stringency_deltas)),
                    alpha=float(nieon.get("alpha", NieonSettings.alpha)),
                ),
                "ads_limits": _simple(VehicleLimits, _section(data, "ads_limits")),
                "aeb": _simple(AebSettings, _section(data, "aeb")),
                "severity": SeveritySettings(
                    ego_mass=float(severity.get("ego_mass", default_severity.ego_mass)),
                    masses={**default_severity.masses,
                            **{k: float(v) for k, v in severity.get("masses", {}).items()}},
                    restitution=float(severity.get("restitution", default_severity.restitution)),
                    vehicle_curve=_simple(RiskCurve, severity.get("vehicle_curve"),
                                          default_severity.vehicle_curve),
                    vru_curves={**default_severity.vru_curves,
                                **{k: _simple(RiskCurve, v) for k, v in severity.get("vru_curves", {}).items()}},
                    thresholds=_simple(SeriousInjuryThresholds, severity.get("thresholds")),
                ),
                "scoring": _simple(ScoringSettings, _section(data, "scoring")),
                "generation": _simple(GenerationSettings, _section(data, "generation")),
            }
        except (TypeError, ValueError, AttributeError) as e:
            raise ConfigurationError(f"invalid configuration structure: {e}") from e

        for key in ("parallelism", "seed"):
            if key in data:
                kwargs[key] = int(data[key])
        for key in ("database_path", "policy", "output_dir", "variant"):
            if key in data:
                kwargs[key] = str(data[key])
        if "formats" in data:
            kwargs["formats"] = tuple(str(f) for f in data["formats"])
        if "variants" in data:
            kwargs["variants"] = {str(k): dict(v) for k, v in data["variants"].items()}
        return cls(**kwargs)

    def validate(self) -> None:
        """設定値の妥当性を検証（不正なら ConfigurationError）"""
        step = self.sim.step
        if not (math.isfinite(step) and 0 < step <= 0.05):
            raise ConfigurationError(f"sim.step must be in (0, 0.05], got {step}", "sim.step")
        if self.sim.sample_interval <= 0:
            raise ConfigurationError("sim.sample_interval must be positive", "sim.sample_interval")
        self.latency.validate(step)
        if self.jitter.steps < 0:
            raise ConfigurationError("jitter.steps must be non-negative", "jitter.steps")

        self.nieon.vehicle_response.validate("nieon.vehicle_response")
        self.nieon.vru_response.validate("nieon.vru_response")
        if self.nieon.vru_response.intercept > self.nieon.vehicle_response.intercept:
            raise ConfigurationError("VRU response intercept must not exceed the Vehicle intercept",
                                     "nieon.vru_response.intercept")
        self.nieon.limits.validate()
        if not all(math.isfinite(d) for d in self.nieon.stringency_deltas):
            raise ConfigurationError("stringency deltas must be finite", "nieon.stringency_deltas")
        if not 0 < self.nieon.alpha < 1:
            raise ConfigurationError("alpha must be in (0, 1)", "nieon.alpha")

        self.ads_limits.validate()
        for name in ("ttc_threshold", "horizon_step", "max_decel", "jerk"):
            if not getattr(self.aeb, name) > 0:
                raise ConfigurationError(f"aeb.{name} must be positive", f"aeb.{name}")

        sev = self.severity
        if sev.ego_mass <= 0 or any(m <= 0 for m in sev.masses.values()):
            raise ConfigurationError("masses must be positive", "severity.masses")
        missing = [k.value for k in ActorKind if k.value not in sev.masses]
        if missing:
            raise ConfigurationError(f"missing masses for {missing}", "severity.masses")
        if not 0 <= sev.restitution <= 1:
            raise ConfigurationError("restitution must be in [0, 1]", "severity.restitution")
        sev.vehicle_curve.validate("severity.vehicle_curve")
        for kind, curve in sev.vru_curves.items():
            curve.validate(f"severity.vru_curves.{kind}")
        sev.thresholds.validate()

        if self.scoring.slack < 0:
            raise ConfigurationError("scoring.slack must be non-negative", "scoring.slack")
        if self.scoring.motorcyclist_road_user_group not in {g.value for g in RoadUserGroup}:
            raise ConfigurationError("motorcyclist_road_user_group must be 'Vehicle' or 'VRU'",
                                     "scoring.motorcyclist_road_user_group")
        if self.generation.salient_subset_limit < 0:
            raise ConfigurationError("salient_subset_limit must be non-negative",
                                     "generation.salient_subset_limit")
        if self.parallelism < 1:
            raise ConfigurationError("parallelism must be at least 1", "parallelism")
        unknown = [f for f in self.formats if f not in ("csv", "json", "svg")]
        if unknown:
            raise ConfigurationError(f"unknown report formats {unknown}", "formats")

    @property
    def motorcyclist_group(self) -> RoadUserGroup:
        return RoadUserGroup(self.scoring.motorcyclist_road_user_group)

    def with_overrides(self, overrides: Mapping[str, Any]) -> 'HarnessConfig':
        """部分的な上書き辞書を深くマージした新しい設定を返す"""
        return HarnessConfig.from_dict(deep_merge(self.to_dict(), overrides))

    def with_variant(self, name: str) -> 'HarnessConfig':
        """名前付きの条件バリアント（例: light_fog）を適用"""
        if name not in self.variants:
            raise ConfigurationError(f"unknown variant '{name}' (known: {sorted(self.variants)})", "variant")
        merged = self.with_overrides(self.variants[name])
        return merged.with_overrides({"variant": name})


def _section(data: Mapping[str, Any], key: str) -> Dict[str, Any]:
    value = data.get(key) or {}
    if not isinstance(value, Mapping):
        raise TypeError(f"section '{key}' must be an object")
    return dict(value)


def _simple(cls, data: Optional[Mapping[str, Any]], default=None):
    """フラットなデータクラスを辞書から作成（不正なキーを除外）"""
    if data is None:
        return default if default is not None else cls()
    valid_keys = set(cls.__dataclass_fields__)
    base = asdict(default) if default is not None else {}
    base.update({k: v for k, v in data.items() if k in valid_keys})
    return cls(**base)


def deep_merge(base: Mapping[str, Any], overrides: Mapping[str, Any]) -> Dict[str, Any]:
    merged = copy.deepcopy(dict(base))
    for key, value in overrides.items():
        if isinstance(value, Mapping) and isinstance(merged.get(key), Mapping):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def apply_environment(config: HarnessConfig, environ: Optional[Mapping[str, str]] = None) -> HarnessConfig:
    """環境変数 CAT_HARNESS_THREADS で並列度を上書き"""
    environ = os.environ if environ is None else environ
    raw = environ.get(THREADS_ENV)
    if raw is None or raw == "":
        return config
    try:
        threads = int(raw)
    except ValueError as e:
        raise ConfigurationError(f"{THREADS_ENV} must be an integer, got '{raw}'", THREADS_ENV) from e
    if threads < 1:
        raise ConfigurationError(f"{THREADS_ENV} must be at least 1", THREADS_ENV)
    return config.with_overrides({"parallelism": threads})


class SettingsManager:
    """設定の保存・読み込みを管理するクラス"""

    def __init__(self, settings_file: Optional[str] = None):
        """
        設定マネージャーを初期化

        Args:
            settings_file: 設定ファイルのパス（Noneの場合は ./cat_harness.json）
        """
        self.settings_file = Path(settings_file) if settings_file else Path("cat_harness.json")
        self.logger = get_harness_logger("settings")
        self._config: Optional[HarnessConfig] = None

    def load(self) -> HarnessConfig:
        """設定をファイルから読み込み、検証する

        ファイルが無い場合はデフォルト設定を使用する。
        内容が不正な場合は ConfigurationError。
        """
        if not self.settings_file.exists():
            self.logger.warning(f"設定ファイルが見つかりません: {self.settings_file}。デフォルト設定を使用します")
            config = HarnessConfig()
        else:
            try:
                with open(self.settings_file, 'r', encoding='utf-8') as f:
                    data = json.load(f)
            except (json.JSONDecodeError, OSError) as e:
                raise ConfigurationError(f"設定ファイルの読み込みに失敗しました: {e}",
                                         str(self.settings_file)) from e
            if not isinstance(data, dict):
                raise ConfigurationError("設定ファイルのトップレベルはオブジェクトである必要があります",
                                         str(self.settings_file))
            config = HarnessConfig.from_dict(data)

        config.validate()
        self._config = config
        return config

    def save(self, config: HarnessConfig) -> None:
        """設定をファイルに保存"""
        config.validate()
        self.settings_file.parent.mkdir(parents=True, exist_ok=True)
        with open(self.settings_file, 'w', encoding='utf-8') as f:
            json.dump(config.to_dict(), f, indent=2, ensure_ascii=False, sort_keys=True)
        self._config = config
        self.logger.info(f"設定を保存しました: {self.settings_file}")

    def get_config(self) -> HarnessConfig:
        """現在の設定を取得（キャッシュされた設定または新規読み込み）"""
        if self._config is None:
            return self.load()
        return self._config

    def backup(self, backup_path: Optional[str] = None) -> Path:
        """設定のバックアップを作成"""
        target = Path(backup_path) if backup_path else self.settings_file.with_suffix('.json.backup')
        with open(target, 'w', encoding='utf-8') as f:
            json.dump(self.get_config().to_dict(), f, indent=2, ensure_ascii=False, sort_keys=True)
        self.logger.info(f"設定のバックアップを作成しました: {target}")
        return target

    def restore_from_backup(self, backup_path: str) -> HarnessConfig:
        """バックアップから設定を復元"""
        with open(backup_path, 'r', encoding='utf-8') as f:
            config = HarnessConfig.from_dict(json.load(f))
        self.save(config)
        return config


# グローバル設定マネージャーインスタンス
_settings_manager: Optional[SettingsManager] = None


def get_settings_manager() -> SettingsManager:
    """グローバル設定マネージャーを取得"""
    global _settings_manager
    if _settings_manager is None:
        _settings_manager = SettingsManager()
    return _settings_manager


def get_harness_config() -> HarnessConfig:
    """現在のハーネス設定を取得"""
    return get_settings_manager().get_config()
