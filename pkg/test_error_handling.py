"""
エラーハンドリングのテスト

例外クラスのコンテキスト情報、ErrorHandlingService の記録、
error_context によるエラー変換を検証します。
"""

import os
import tempfile
import unittest

from cat_harness.services.error_context import (
    error_context,
    handle_database_errors,
    handle_export_errors,
    safe_execute,
)
from cat_harness.services.error_handling import (
    ConfigurationError,
    DatabaseMismatch,
    DatabaseValidationError,
    DegenerateGroup,
    EmptyRange,
    ErrorHandlingService,
    HarnessError,
    IoFailure,
    PolicyFault,
    PolicyLoadError,
    ScenarioSyntaxError,
    UnknownToken,
    UnmatchedScenario,
)


class TestHarnessExceptions(unittest.TestCase):
    """例外クラスのテスト"""

    def test_syntax_error_carries_position(self):
        error = ScenarioSyntaxError("expected ';'", "demo.scn", 3, 14)
        self.assertEqual(str(error), "demo.scn:3:14: expected ';'")
        self.assertEqual((error.line, error.column), (3, 14))
        self.assertIsInstance(error, HarnessError)

    def test_unknown_token(self):
        error = UnknownToken("hover", "maneuver", "demo.scn", 5, 14)
        self.assertIn("demo.scn:5:14", str(error))
        self.assertEqual(error.token, "hover")
        self.assertEqual(error.category, "maneuver")

    def test_context_attributes(self):
        """各例外がコンテキスト属性を持つことをテスト"""
        self.assertEqual(EmptyRange("ego.speed", 5.0, 1.0, 1.0).parameter, "ego.speed")
        self.assertEqual(PolicyFault("s-1", 1.25).scenario_id, "s-1")
        self.assertEqual(DegenerateGroup("veh_cut_in", "n < 2").group_id, "veh_cut_in")
        self.assertEqual(UnmatchedScenario(["b", "a"]).scenario_ids, ["a", "b"])
        self.assertEqual(DatabaseMismatch("a" * 64, "b" * 64).hash_b, "b" * 64)
        self.assertEqual(IoFailure("disk full", "out/report.csv", "csv").format_type, "csv")
        self.assertEqual(ConfigurationError("bad", "sim.step").key, "sim.step")
        self.assertEqual(PolicyLoadError("missing", "fancy").policy_name, "fancy")


class TestErrorHandlingService(unittest.TestCase):
    """ErrorHandlingService のテスト"""

    def setUp(self):
        self.service = ErrorHandlingService()
        self.service.clear_error_history()

    def test_singleton(self):
        self.assertIs(ErrorHandlingService(), self.service)

    def test_records_handled_errors(self):
        """エラーの記録と統計をテスト"""
        self.service.handle_policy_fault(PolicyFault("s-1", 0.5))
        self.service.handle_configuration_error(ConfigurationError("bad", "sim.step"))
        self.service.handle_io_failure(IoFailure("nope", "x.csv", "csv"))

        stats = self.service.get_error_statistics()
        self.assertEqual(stats['total_errors'], 3)
        self.assertEqual(stats['error_types'], {'PolicyFault': 1, 'Configuration': 1, 'IoFailure': 1})

    def test_history_is_capped(self):
        """履歴が100件に制限されることをテスト"""
        for i in range(120):
            self.service.handle_scenario_error(ValueError(str(i)), f"s-{i}")
        self.assertEqual(len(self.service.error_history), 100)
        self.assertEqual(self.service.error_count, 120)
        self.assertEqual(self.service.error_history[0]['message'], "20")

    def test_empty_statistics(self):
        self.assertEqual(self.service.get_error_statistics(), {'total_errors': 0, 'error_types': {}})

    def test_export_error_log(self):
        """エラーログのエクスポートをテスト"""
        self.service.handle_language_error(ScenarioSyntaxError("oops", "a.scn", 1, 1))
        with tempfile.TemporaryDirectory() as temp_dir:
            path = os.path.join(temp_dir, "errors.txt")
            self.assertTrue(self.service.export_error_log(path))
            with open(path, 'r', encoding='utf-8') as f:
                content = f.read()
        self.assertIn("ScenarioSyntax", content)
        self.assertIn("a.scn:1:1: oops", content)


class TestErrorContext(unittest.TestCase):
    """error_context のテスト"""

    def setUp(self):
        self.service = ErrorHandlingService()
        self.service.clear_error_history()

    def test_database_operation_converts_os_errors(self):
        with self.assertRaises(DatabaseValidationError) as cm:
            with error_context.database_operation("db/x.json"):
                raise FileNotFoundError("db/x.json")
        self.assertEqual(cm.exception.file_path, "db/x.json")
        self.assertIsInstance(cm.exception.__cause__, FileNotFoundError)

    def test_report_export_converts_os_errors(self):
        with self.assertRaises(IoFailure) as cm:
            with error_context.report_export("out/report.svg", "svg"):
                raise PermissionError("read-only")
        self.assertEqual(cm.exception.format_type, "svg")

    def test_policy_operation_wraps_anything(self):
        with self.assertRaises(PolicyLoadError) as cm:
            with error_context.policy_operation("fancy", "plugins/fancy.py"):
                raise ImportError("no module named fancy_dep")
        self.assertEqual(cm.exception.plugin_path, "plugins/fancy.py")

    def test_config_loading(self):
        with self.assertRaises(ConfigurationError):
            with error_context.config_loading("nieon"):
                raise KeyError("nieon")

    def test_scenario_simulation_reraises_policy_fault(self):
        """PolicyFault はそのまま再送出されることをテスト"""
        with self.assertRaises(PolicyFault):
            with error_context.scenario_simulation("s-1"):
                raise PolicyFault("s-1", 0.1, None)
        self.assertEqual(self.service.get_error_statistics()['error_types'], {'PolicyFault': 1})

    def test_scenario_language(self):
        with self.assertRaises(UnknownToken):
            with error_context.scenario_language():
                raise UnknownToken("hover", "maneuver")
        self.assertEqual(self.service.get_error_statistics()['error_types'], {'UnknownToken': 1})

    def test_decorators(self):
        """デコレータ版のエラー変換をテスト"""
        @handle_database_errors("db")
        def broken_read():
            raise ValueError("bad json")

        @handle_export_errors("csv")
        def broken_write():
            raise OSError("disk full")

        with self.assertRaises(DatabaseValidationError):
            broken_read()
        with self.assertRaises(IoFailure):
            broken_write()

    def test_safe_execute(self):
        """ハーネスエラー時にデフォルト値を返すことをテスト"""
        def fails():
            raise ConfigurationError("bad")

        self.assertEqual(safe_execute(fails, default_return="fallback", context="test"), "fallback")
        self.assertEqual(safe_execute(lambda x: x * 2, 21), 42)


if __name__ == '__main__':
    unittest.main()
