"""
シナリオデータベースのテスト
"""

import json
import tempfile
import unittest
from dataclasses import replace
from pathlib import Path

from cat_harness.models.data_models import SamplingPlan, TestRequest
from cat_harness.models.taxonomy import default_taxonomy
from cat_harness.services.error_handling import DatabaseValidationError
from cat_harness.services.layout_library import LayoutLibrary
from cat_harness.services.scenario_database import ScenarioDatabase
from cat_harness.services.scenario_generator import instantiate_concrete
from cat_harness.services.scenario_parser import parse_file


SCENARIOS_DIR = Path(__file__).resolve().parent / "cat_harness" / "data" / "scenarios"


class TestScenarioDatabase(unittest.TestCase):
    """ScenarioDatabase のテスト"""

    @classmethod
    def setUpClass(cls):
        cls.registry = default_taxonomy()
        logical = parse_file(str(SCENARIOS_DIR / "cyclist_crossing.scn"))[0]
        cls.scenarios = instantiate_concrete(logical, SamplingPlan(), LayoutLibrary(), cls.registry)
        cls.request = TestRequest("TR-cyclist_crossing", "cyc_cut_across_perp", "scenario ...")

    def setUp(self):
        self.temp_dir = tempfile.TemporaryDirectory()
        self.root = Path(self.temp_dir.name) / "db"
        self.database = ScenarioDatabase(str(self.root))

    def tearDown(self):
        self.temp_dir.cleanup()

    def test_write_and_load(self):
        """保存したシナリオが同じ値で読み込めることをテスト"""
        self.assertEqual(self.database.write(self.scenarios, [self.request]), 18)
        self.assertTrue((self.root / "cyc_cut_across_perp" / "cyclist_crossing-0000.json").exists())
        self.assertEqual(self.database.load(), self.scenarios)
        self.assertEqual(self.database.load_test_requests(), [self.request])

    def test_validate(self):
        self.database.write(self.scenarios, [self.request])
        self.assertEqual(len(self.database.validate(self.registry)), 18)

    def test_missing_test_request_fails_validation(self):
        self.database.write(self.scenarios)
        with self.assertRaises(DatabaseValidationError) as cm:
            self.database.validate(self.registry)
        self.assertEqual(len(cm.exception.violations), 18)

    def test_empty_database(self):
        """空のデータベースは検証エラーになることをテスト"""
        self.root.mkdir(parents=True)
        with self.assertRaises(DatabaseValidationError):
            self.database.validate(self.registry)

    def test_missing_directory(self):
        with self.assertRaises(DatabaseValidationError):
            self.database.load()

    def test_duplicate_ids(self):
        with self.assertRaises(DatabaseValidationError):
            self.database.write([self.scenarios[0], self.scenarios[0]])

    def test_duplicate_ids_across_groups(self):
        self.database.write([self.scenarios[0], replace(self.scenarios[1], id=self.scenarios[0].id,
                                                        safety_group="veh_cut_across_perp")])
        with self.assertRaises(DatabaseValidationError):
            self.database.load()

    def test_corrupted_file(self):
        """壊れたファイルが検証エラーに変換されることをテスト"""
        self.database.write(self.scenarios[:2], [self.request])
        path = self.root / "cyc_cut_across_perp" / "cyclist_crossing-0001.json"
        path.write_text("{ not json", encoding="utf-8")
        with self.assertRaises(DatabaseValidationError) as cm:
            self.database.load()
        self.assertEqual(cm.exception.file_path, str(path))

    def test_missing_field(self):
        self.database.write(self.scenarios[:1], [self.request])
        path = self.root / "cyc_cut_across_perp" / "cyclist_crossing-0000.json"
        data = json.loads(path.read_text(encoding="utf-8"))
        del data["ego_start"]
        path.write_text(json.dumps(data), encoding="utf-8")
        with self.assertRaises(DatabaseValidationError):
            self.database.load()

    def test_content_hash(self):
        """内容ハッシュが内容にだけ依存することをテスト"""
        self.database.write(self.scenarios, [self.request])
        first = self.database.content_hash()
        self.assertEqual(len(first), 64)

        other = ScenarioDatabase(str(Path(self.temp_dir.name) / "copy"))
        other.write(self.scenarios, [self.request])
        self.assertEqual(other.content_hash(), first)

        other.write([replace(self.scenarios[0], duration=self.scenarios[0].duration + 1.0)])
        self.assertNotEqual(other.content_hash(), first)

    def test_requests_are_merged(self):
        self.database.write(self.scenarios[:1], [self.request])
        extra = TestRequest("TR-extra", "cyc_cut_across_perp", "scenario ...")
        self.database.write(self.scenarios[1:2], [extra], append=True)
        self.assertEqual([r.id for r in self.database.load_test_requests()], ["TR-cyclist_crossing", "TR-extra"])

    def test_regenerate_replaces_previous_generation(self):
        """再生成すると前回のシナリオが残らず、ハッシュも新しい内容だけから計算されることをテスト"""
        self.database.write(self.scenarios, [self.request])
        (self.root / "notes.txt").write_text("kept", encoding="utf-8")
        self.database.write(self.scenarios[:2], [self.request])

        self.assertEqual([s.id for s in self.database.load()], ["cyclist_crossing-0000", "cyclist_crossing-0001"])
        self.assertEqual(len(self.database.validate(self.registry)), 2)
        fresh = ScenarioDatabase(str(Path(self.temp_dir.name) / "fresh"))
        fresh.write(self.scenarios[:2], [self.request])
        self.assertEqual(self.database.content_hash(), fresh.content_hash())
        self.assertTrue((self.root / "notes.txt").exists())

    def test_regenerate_into_other_group(self):
        """グループが変わると古いグループのディレクトリが消えることをテスト"""
        self.database.write(self.scenarios[:1], [self.request])
        moved = replace(self.scenarios[1], safety_group="veh_cut_across_perp")
        self.database.write([moved])
        self.assertFalse((self.root / "cyc_cut_across_perp").exists())
        self.assertEqual(self.database.load(), [moved])
        self.assertEqual(self.database.load_test_requests(), [])

    def test_clear(self):
        self.database.write(self.scenarios, [self.request])
        self.assertEqual(self.database.clear(), 18)
        self.assertEqual(self.database.scenario_files(), [])
        self.assertFalse((self.root / ScenarioDatabase.TEST_REQUESTS_FILE).exists())
        self.assertEqual(ScenarioDatabase(str(self.root / "nowhere")).clear(), 0)


if __name__ == '__main__':
    unittest.main()
