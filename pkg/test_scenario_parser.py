"""
シナリオ記述言語パーサーのテスト
"""

import json
import tempfile
import unittest
from pathlib import Path

from cat_harness.models.data_models import ActorKind, ParameterRange
from cat_harness.services.error_handling import ConfigurationError, ScenarioSyntaxError, UnknownToken
from cat_harness.services.scenario_parser import (
    ScenarioParser,
    parse_file,
    parse_functional,
    serialize_logical,
    tokenize,
)
from cat_harness.services.vocabulary import load_vocabulary


SCENARIOS_DIR = Path(__file__).resolve().parent / "cat_harness" / "data" / "scenarios"

PEDESTRIAN_SOURCE = '''# midblock dart-out
scenario "ped_demo" {
  ego {
    maneuver go_straight;
    speed: range(8, 12, step 2);
  }
  actor pedestrian {
    maneuver cross_path;
    from curbside;
    to across_lane;
    speed: range(1.2, 1.8, step 0.6);
  }
  layout midblock;
  salient {
    occlusion;
  }
  stimulus {
    trigger_ttc: range(1.5, 3.0, step 0.5);
    onset: 1.0;
  }
  group crossing_pedestrian_midblock;
}
'''


def scenario_with_ego(ego_body: str) -> str:
    return (
        'scenario "x" {\n'
        '  ego {\n'
        f'{ego_body}'
        '  }\n'
        '  actor pedestrian { maneuver cross_path; speed: 1.5; }\n'
        '  layout midblock;\n'
        '  stimulus { trigger_ttc: 2.0; }\n'
        '  group crossing_pedestrian_midblock;\n'
        '}\n'
    )


class TestTokenizer(unittest.TestCase):
    """トークナイザーのテスト"""

    def test_comments_and_positions(self):
        tokens = tokenize('# header\nscenario "a" {\n')
        self.assertEqual([t.kind for t in tokens], ["IDENT", "STRING", "PUNCT", "EOF"])
        self.assertEqual((tokens[0].line, tokens[0].column), (2, 1))
        self.assertEqual((tokens[1].line, tokens[1].column), (2, 10))

    def test_negative_and_exponent_numbers(self):
        tokens = tokenize("-1.5 2e3")
        self.assertEqual([t.value for t in tokens[:2]], ["-1.5", "2e3"])

    def test_unexpected_character(self):
        with self.assertRaises(ScenarioSyntaxError) as cm:
            tokenize("scenario @", "bad.scn")
        self.assertEqual((cm.exception.line, cm.exception.column), (1, 10))
        self.assertTrue(str(cm.exception).startswith("bad.scn:1:10:"))


class TestScenarioParser(unittest.TestCase):
    """ScenarioParser のテスト"""

    def test_parse_pedestrian_scenario(self):
        """典型的なシナリオの解析をテスト"""
        logical = parse_functional(PEDESTRIAN_SOURCE, "demo.scn")
        functional = logical.functional
        self.assertEqual(functional.id, "ped_demo")
        self.assertEqual(functional.ego_maneuver.maneuver, "go_straight")
        self.assertEqual(functional.partner.kind, ActorKind.PEDESTRIAN)
        self.assertEqual(functional.partner.maneuver.start_location, "curbside")
        self.assertEqual(functional.partner.maneuver.end_location, "across_lane")
        self.assertEqual(functional.layout_class, "midblock")
        self.assertEqual(functional.salient_factors, frozenset({"occlusion"}))
        self.assertEqual(functional.conflict_type, "crossing_pedestrian_midblock")

        ranges = logical.parameter_ranges
        self.assertEqual(ranges["ego.speed"], ParameterRange(8.0, 12.0, 2.0, "m/s"))
        self.assertEqual(ranges["actor1.speed"], ParameterRange(1.2, 1.8, 0.6, "m/s"))
        self.assertEqual(ranges["stimulus.trigger_ttc"], ParameterRange(1.5, 3.0, 0.5, "s"))
        self.assertEqual(ranges["stimulus.onset"], ParameterRange(1.0, 1.0, 1.0, "s"))
        logical.validate()

    def test_positions_are_recorded(self):
        logical = parse_functional(PEDESTRIAN_SOURCE, "demo.scn")
        self.assertEqual(str(logical.positions["scenario"]), "demo.scn:2:1")
        self.assertEqual(str(logical.positions["ego.speed"]), "demo.scn:5:5")

    def test_default_placement(self):
        """from/to を省略した場合に標準配置を使うことをテスト"""
        logical = parse_functional(scenario_with_ego("    maneuver go_straight;\n    speed: 10;\n"))
        self.assertEqual(logical.functional.ego_maneuver.start_location, "within_lane")
        self.assertEqual(logical.functional.partner.maneuver.start_location, "curbside")
        self.assertEqual(logical.functional.partner.maneuver.end_location, "across_lane")

    def test_missing_colon_position(self):
        """構文エラーの位置（ファイル:行:列）をテスト"""
        source = scenario_with_ego("    maneuver go_straight;\n    speed 10;\n")
        with self.assertRaises(ScenarioSyntaxError) as cm:
            ScenarioParser().parse(source, "broken.scn")
        self.assertEqual(str(cm.exception), "broken.scn:4:11: expected ':', found '10'")

    def test_unknown_maneuver(self):
        source = scenario_with_ego("    maneuver hover;\n")
        with self.assertRaises(UnknownToken) as cm:
            ScenarioParser().parse(source, "x.scn")
        self.assertEqual(cm.exception.token, "hover")
        self.assertEqual((cm.exception.line, cm.exception.column), (3, 14))

    def test_actor_only_maneuver_for_ego(self):
        """自車に使えない操作をテスト"""
        source = scenario_with_ego("    maneuver cut_in;\n    speed: 10;\n")
        with self.assertRaises(UnknownToken) as cm:
            ScenarioParser().parse(source)
        self.assertEqual(cm.exception.category, "ego maneuver")
        self.assertEqual(cm.exception.line, 2)

    def test_unknown_actor_kind(self):
        source = PEDESTRIAN_SOURCE.replace("actor pedestrian", "actor robot")
        with self.assertRaises(UnknownToken) as cm:
            ScenarioParser().parse(source)
        self.assertEqual(cm.exception.category, "actor kind")

    def test_unknown_salient_factor(self):
        source = PEDESTRIAN_SOURCE.replace("occlusion;", "fog_bank;")
        with self.assertRaises(UnknownToken) as cm:
            ScenarioParser().parse(source)
        self.assertEqual(cm.exception.category, "salient factor")

    def test_duplicate_parameter(self):
        source = scenario_with_ego("    maneuver go_straight;\n    speed: 10;\n    speed: 12;\n")
        with self.assertRaises(ScenarioSyntaxError) as cm:
            ScenarioParser().parse(source)
        self.assertIn("defined twice", str(cm.exception))
        self.assertEqual(cm.exception.line, 5)

    def test_missing_actor(self):
        source = PEDESTRIAN_SOURCE.split("  actor pedestrian")[0] + "  layout midblock;\n}\n"
        with self.assertRaises(ScenarioSyntaxError) as cm:
            ScenarioParser().parse(source)
        self.assertIn("expected at least one 'actor' block", str(cm.exception))

    def test_empty_source(self):
        with self.assertRaises(ScenarioSyntaxError) as cm:
            ScenarioParser().parse("# only a comment\n", "empty.scn")
        self.assertIn("found end of input", str(cm.exception))

    def test_parse_functional_requires_single_scenario(self):
        with self.assertRaises(ScenarioSyntaxError):
            parse_functional(PEDESTRIAN_SOURCE + PEDESTRIAN_SOURCE.replace("ped_demo", "ped_demo_2"))

    def test_serialize_round_trip(self):
        """シリアライズ結果を再解析すると同じシナリオになることをテスト"""
        logical = parse_functional(PEDESTRIAN_SOURCE)
        self.assertEqual(parse_functional(serialize_logical(logical)), logical)


class TestBundledScenarios(unittest.TestCase):
    """同梱デモシナリオのテスト"""

    def test_all_bundled_files_parse(self):
        paths = sorted(SCENARIOS_DIR.glob("*.scn"))
        self.assertEqual(len(paths), 10)
        for path in paths:
            with self.subTest(path=path.name):
                scenarios = parse_file(str(path))
                self.assertEqual(len(scenarios), 1)
                self.assertEqual(scenarios[0].id, path.stem)
                scenarios[0].validate()


class TestVocabulary(unittest.TestCase):
    """語彙レジストリのテスト"""

    def test_bundled_layouts(self):
        vocabulary = load_vocabulary()
        self.assertIn("signalized_intersection", vocabulary.layout_classes)
        self.assertIn("adjacent_lane", vocabulary.locations)
        self.assertEqual(vocabulary.placements_for("cut_in")[0], ("adjacent_lane", "within_lane"))

    def test_registry_extends_vocabulary(self):
        """レジストリファイルによる語彙の拡張をテスト"""
        with tempfile.TemporaryDirectory() as temp_dir:
            path = Path(temp_dir) / "extra.json"
            path.write_text(json.dumps({"maneuvers": ["u_turn"], "ego_maneuvers": ["u_turn"]}),
                            encoding="utf-8")
            vocabulary = load_vocabulary([str(path)])

        source = scenario_with_ego("    maneuver u_turn;\n    speed: 8;\n")
        with self.assertRaises(UnknownToken):
            ScenarioParser().parse(source)
        logical = ScenarioParser(vocabulary).parse(source)[0]
        self.assertEqual(logical.functional.ego_maneuver.maneuver, "u_turn")

    def test_unreadable_registry(self):
        with self.assertRaises(ConfigurationError):
            load_vocabulary(["/nonexistent/registry.json"])

    def test_odd_profiles(self):
        vocabulary = load_vocabulary()
        self.assertAlmostEqual(vocabulary.odd_profile("sf_phx_urban").max_speed_limit, 13.4)
        with self.assertRaises(ConfigurationError):
            vocabulary.odd_profile("atlantis")


if __name__ == '__main__':
    unittest.main()
