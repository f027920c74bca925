"""
ハーネス設定のテスト

HarnessConfig と SettingsManager、環境変数による上書きの動作を検証します。
"""

import json
import tempfile
import unittest
from pathlib import Path

from cat_harness.models.data_models import RoadUserGroup
from cat_harness.models.harness_settings import (
    THREADS_ENV,
    HarnessConfig,
    SettingsManager,
    apply_environment,
    deep_merge,
)
from cat_harness.services.error_handling import ConfigurationError


class TestHarnessConfig(unittest.TestCase):
    """HarnessConfig のテスト"""

    def test_defaults(self):
        """デフォルト値をテスト"""
        config = HarnessConfig()
        self.assertEqual(config.sim.step, 0.01)
        self.assertEqual(config.latency.perception_delay, 0.1)
        self.assertEqual(config.latency.planning_delay, 0.1)
        self.assertEqual(config.latency.actuation_delay, 0.05)
        self.assertFalse(config.jitter.enabled)
        self.assertEqual(config.nieon.stringency_deltas, (-0.2, 0.0, 0.2))
        self.assertEqual(config.nieon.alpha, 0.05)
        self.assertEqual(config.aeb.ttc_threshold, 4.0)
        self.assertEqual(config.scoring.slack, 0)
        self.assertIs(config.motorcyclist_group, RoadUserGroup.VEHICLE)
        self.assertEqual(config.severity.thresholds.vehicle_to_vehicle, 0.05)
        self.assertEqual(config.severity.thresholds.child_pedestrian, 0.015)
        self.assertEqual(config.severity.thresholds.other_vru, 0.10)
        config.validate()

    def test_dict_round_trip(self):
        """辞書への変換と復元をテスト"""
        config = HarnessConfig().with_overrides({"seed": 7, "scoring": {"slack": 2}})
        data = config.to_dict()
        json.dumps(data)
        self.assertEqual(HarnessConfig.from_dict(data), config)

    def test_unknown_keys_are_ignored(self):
        """未知のキーを無視することをテスト"""
        config = HarnessConfig.from_dict({"sim": {"step": 0.02, "bogus": 1}, "extra": True})
        self.assertEqual(config.sim.step, 0.02)

    def test_invalid_structure(self):
        """セクションがオブジェクトでない場合をテスト"""
        with self.assertRaises(ConfigurationError):
            HarnessConfig.from_dict({"sim": [1, 2, 3]})

    def test_validation_failures(self):
        """不正な設定値の検証をテスト"""
        cases = {
            "sim.step": {"sim": {"step": 0.1}},
            "latency.perception_delay": {"latency": {"perception_delay": 0.015}},
            "nieon.vru_response.intercept": {"nieon": {"vru_response": {"intercept": 0.9}}},
            "nieon.alpha": {"nieon": {"alpha": 1.5}},
            "severity.thresholds": {"severity": {"thresholds": {"child_pedestrian": 0.2}}},
            "scoring.motorcyclist_road_user_group": {"scoring": {"motorcyclist_road_user_group": "Bus"}},
            "parallelism": {"parallelism": 0},
            "formats": {"formats": ["pdf"]},
        }
        for key, overrides in cases.items():
            with self.subTest(key=key):
                config = HarnessConfig().with_overrides(overrides)
                with self.assertRaises(ConfigurationError) as cm:
                    config.validate()
                self.assertEqual(cm.exception.key, key)

    def test_motorcyclist_group_is_configurable(self):
        """二輪車の道路利用者グループ設定をテスト"""
        config = HarnessConfig().with_overrides({"scoring": {"motorcyclist_road_user_group": "VRU"}})
        self.assertIs(config.motorcyclist_group, RoadUserGroup.VRU)

    def test_light_fog_variant(self):
        """条件バリアントの適用をテスト"""
        config = HarnessConfig().with_variant("light_fog")
        self.assertEqual(config.variant, "light_fog")
        self.assertAlmostEqual(config.latency.perception_delay, 0.2)
        self.assertAlmostEqual(config.ads_limits.max_brake, 6.5)
        self.assertEqual(config.latency.planning_delay, 0.1)

    def test_unknown_variant(self):
        with self.assertRaises(ConfigurationError):
            HarnessConfig().with_variant("blizzard")

    def test_deep_merge(self):
        """部分上書きのマージをテスト"""
        merged = deep_merge({"a": {"b": 1, "c": 2}, "d": 3}, {"a": {"b": 5}})
        self.assertEqual(merged, {"a": {"b": 5, "c": 2}, "d": 3})


class TestEnvironmentOverride(unittest.TestCase):
    """環境変数による並列度の上書きをテスト"""

    def test_threads_override(self):
        config = apply_environment(HarnessConfig(), {THREADS_ENV: "4"})
        self.assertEqual(config.parallelism, 4)

    def test_unset_keeps_config(self):
        config = HarnessConfig()
        self.assertIs(apply_environment(config, {}), config)
        self.assertIs(apply_environment(config, {THREADS_ENV: ""}), config)

    def test_invalid_values(self):
        for raw in ("four", "0", "-2"):
            with self.subTest(raw=raw):
                with self.assertRaises(ConfigurationError):
                    apply_environment(HarnessConfig(), {THREADS_ENV: raw})


class TestSettingsManager(unittest.TestCase):
    """SettingsManager のテスト"""

    def setUp(self):
        self.temp_dir = tempfile.TemporaryDirectory()
        self.path = Path(self.temp_dir.name) / "cat_harness.json"

    def tearDown(self):
        self.temp_dir.cleanup()

    def test_missing_file_falls_back_to_defaults(self):
        """設定ファイルが無い場合にデフォルト設定を使うことをテスト"""
        with self.assertLogs("cat_harness.settings", level="WARNING"):
            config = SettingsManager(str(self.path)).load()
        self.assertEqual(config, HarnessConfig())

    def test_save_and_load(self):
        """保存と読み込みをテスト"""
        manager = SettingsManager(str(self.path))
        config = HarnessConfig().with_overrides({"parallelism": 3, "policy": "no_reaction"})
        manager.save(config)
        loaded = SettingsManager(str(self.path)).load()
        self.assertEqual(loaded.parallelism, 3)
        self.assertEqual(loaded.policy, "no_reaction")

    def test_backup(self):
        """バックアップの作成をテスト"""
        manager = SettingsManager(str(self.path))
        manager.save(HarnessConfig())
        backup = manager.backup()
        self.assertTrue(backup.exists())
        with open(backup, 'r', encoding='utf-8') as f:
            self.assertEqual(json.load(f)["policy"], "aeb")

    def test_corrupted_file(self):
        """壊れた設定ファイルをテスト"""
        self.path.write_text("{ not json", encoding="utf-8")
        with self.assertRaises(ConfigurationError):
            SettingsManager(str(self.path)).load()

    def test_top_level_must_be_object(self):
        self.path.write_text("[1, 2]", encoding="utf-8")
        with self.assertRaises(ConfigurationError):
            SettingsManager(str(self.path)).load()

    def test_invalid_values_rejected_on_load(self):
        self.path.write_text(json.dumps({"sim": {"step": 0.5}}), encoding="utf-8")
        with self.assertRaises(ConfigurationError):
            SettingsManager(str(self.path)).load()


if __name__ == '__main__':
    unittest.main()
