"""
ポリシープラグインシステムのテスト。
ポリシーレジストリとプラグインの読み込み・アンロードを検証します。
"""
import tempfile
import unittest
from pathlib import Path

from cat_harness.models.data_models import ControlCommand
from cat_harness.models.harness_settings import HarnessConfig
from cat_harness.plugins.base import PluginManager, PluginMetadata, PolicyPlugin
from cat_harness.policies import AebPolicy, NoReactionPolicy, create_policy, policy_registry
from cat_harness.policies.base import EgoPolicy, PolicyRegistry
from cat_harness.services.error_handling import PolicyLoadError


SAMPLES_DIR = Path(__file__).resolve().parent / "cat_harness" / "plugins" / "samples"


class FullBrakePolicy(EgoPolicy):

    @property
    def name(self) -> str:
        return "full_brake"

    @property
    def description(self) -> str:
        return "Always brakes"

    def step(self, observed):
        return ControlCommand(-8.0, observed.route_curvature)


class FullBrakePlugin(PolicyPlugin):

    def __init__(self):
        self.cleaned_up = False

    @property
    def metadata(self) -> PluginMetadata:
        return PluginMetadata("Full Brake", "0.1.0", "tester", "Always brakes")

    @property
    def policy_class(self) -> type:
        return FullBrakePolicy


class ShadowingAebPolicy(AebPolicy):
    """組み込みの aeb と同じ名前のポリシー"""


class ShadowingPlugin(FullBrakePlugin):

    @property
    def metadata(self) -> PluginMetadata:
        return PluginMetadata("Shadowing", "0.1.0", "tester", "Reuses a built-in name")

    @property
    def policy_class(self) -> type:
        return ShadowingAebPolicy


class AnonymousPlugin(FullBrakePlugin):

    @property
    def metadata(self) -> PluginMetadata:
        return PluginMetadata("Anonymous", "0.1.0", " ", "No author")


class NotAPolicyPlugin(FullBrakePlugin):

    @property
    def policy_class(self) -> type:
        return dict


class FailingInitPlugin(FullBrakePlugin):

    def initialize(self) -> bool:
        return False


class TestPolicyRegistry(unittest.TestCase):
    """ポリシーレジストリのテスト"""

    def test_builtin_policies(self):
        self.assertLessEqual({"aeb", "nieon_as_policy", "no_reaction"}, set(policy_registry.list_policies()))
        info = policy_registry.get_policy_info("no_reaction")
        self.assertEqual(info["name"], "no_reaction")
        self.assertTrue(info["uses_latency"])
        self.assertFalse(policy_registry.get_policy_info("nieon_as_policy")["uses_latency"])

    def test_fresh_instances(self):
        self.assertIsNot(policy_registry.get_policy("aeb"), policy_registry.get_policy("aeb"))

    def test_unknown_policy(self):
        with self.assertRaises(KeyError):
            policy_registry.get_policy("missing")

    def test_create_policy_applies_config(self):
        """設定の AEB パラメータがポリシーに反映されることをテスト"""
        config = HarnessConfig.from_dict({"aeb": {"ttc_threshold": 2.5, "max_decel": 9.0}})
        policy = create_policy("aeb", config)
        self.assertEqual(policy.horizon, 2.5)
        self.assertEqual(policy.max_decel, min(9.0, config.ads_limits.max_brake))

    def test_register_and_unregister(self):
        registry = PolicyRegistry()
        registry.register(NoReactionPolicy)
        self.assertIn("no_reaction", registry)
        self.assertTrue(registry.unregister("no_reaction"))
        self.assertFalse(registry.unregister("no_reaction"))


class TestPluginManager(unittest.TestCase):
    """プラグインマネージャーのテスト"""

    def setUp(self):
        self.registry = PolicyRegistry()
        self.registry.register(AebPolicy)
        self.manager = PluginManager(self.registry)

    def test_load_and_unload(self):
        self.assertTrue(self.manager.load_plugin(FullBrakePlugin))
        self.assertIn("full_brake", self.registry)
        self.assertEqual(self.manager.get_loaded_plugins(), ["Full Brake"])
        self.assertEqual(self.manager.get_plugin_info("Full Brake").author, "tester")

        # 2回目は何もしない
        self.assertFalse(self.manager.load_plugin(FullBrakePlugin))

        self.assertTrue(self.manager.unload_plugin("Full Brake"))
        self.assertNotIn("full_brake", self.registry)
        self.assertFalse(self.manager.unload_plugin("Full Brake"))

    def test_disabled_plugin_is_skipped(self):
        self.manager.load_plugin(FullBrakePlugin)
        self.manager.disable_plugin("Full Brake")
        self.assertNotIn("full_brake", self.registry)
        self.assertFalse(self.manager.load_plugin(FullBrakePlugin))

        self.manager.enable_plugin("Full Brake")
        self.assertTrue(self.manager.load_plugin(FullBrakePlugin))

    def test_invalid_plugins(self):
        """検証に失敗するプラグインは PolicyLoadError になることをテスト"""
        for plugin_class in (ShadowingPlugin, AnonymousPlugin, NotAPolicyPlugin, FailingInitPlugin):
            with self.subTest(plugin=plugin_class.__name__):
                with self.assertRaises(PolicyLoadError):
                    self.manager.load_plugin(plugin_class)
        self.assertEqual(self.registry.list_policies(), ["aeb"])

    def test_load_sample_directory(self):
        """サンプルディレクトリのプラグインがファイルから読み込めることをテスト"""
        self.manager.add_plugin_path(str(SAMPLES_DIR))
        results = self.manager.load_all_plugins()
        self.assertEqual(list(results.values()), [True])
        self.assertIn("cautious_aeb", self.registry)

        policy = create_policy("cautious_aeb", HarnessConfig(), self.registry)
        self.assertEqual(policy.horizon, HarnessConfig().aeb.ttc_threshold + 1.0)
        self.assertLessEqual(policy.jerk, 20.0)

    def test_broken_files_are_recorded(self):
        with tempfile.TemporaryDirectory() as temp_dir:
            root = Path(temp_dir)
            (root / "a_syntax_error.py").write_text("def broken(:\n", encoding="utf-8")
            (root / "b_no_plugin.py").write_text("VALUE = 1\n", encoding="utf-8")
            self.manager.add_plugin_path(temp_dir)
            results = self.manager.load_all_plugins()

        self.assertEqual(list(results.values()), [False, False])
        self.assertEqual(len(self.manager.get_plugin_errors()), 2)
        self.assertEqual(self.registry.list_policies(), ["aeb"])

    def test_missing_directory(self):
        self.manager.add_plugin_path("/nonexistent/plugins")
        with self.assertLogs("cat_harness.plugins", level="WARNING"):
            self.assertEqual(self.manager.discover_plugins(), [])


if __name__ == '__main__':
    unittest.main()
