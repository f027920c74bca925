"""
シナリオ生成のテスト

パラメータのサンプリング、concrete シナリオの生成、組み合わせ列挙、
実現可能性フィルタ、ODD差分を検証します。
"""

import math
import unittest
from dataclasses import replace
from pathlib import Path

from cat_harness.models.data_models import (
    ActorKind,
    ActorSpec,
    FunctionalScenario,
    ManeuverSpec,
    OddProfile,
    ParameterRange,
    SamplingMode,
    SamplingPlan,
)
from cat_harness.models.taxonomy import default_taxonomy
from cat_harness.services.error_handling import EmptyRange, LayoutUnavailable, UnmappedConflict, UnmappedPair
from cat_harness.services.layout_library import CORRIDOR_HALF_WIDTH, LayoutLibrary
from cat_harness.services.scenario_generator import (
    assign_safety_group,
    consistent_with,
    diff_odd_coverage,
    enumerate_combinations,
    filter_conflict_feasible,
    instantiate_concrete,
    lookup_feasibility,
    parameter_valuations,
    salient_subsets,
)
from cat_harness.services.scenario_parser import parse_file
from cat_harness.services.scenario_validation import validate_concrete
from cat_harness.services.vocabulary import load_vocabulary


SCENARIOS_DIR = Path(__file__).resolve().parent / "cat_harness" / "data" / "scenarios"

EXPECTED_GROUPS = {
    "ped_midblock_dart": "ped_crossing_midblock",
    "child_dartout_double_parked": "ped_crossing_midblock",
    "ped_crowd_breakaway": "ped_crossing_midblock",
    "ped_crosswalk_far_side": "ped_crossing_crosswalk",
    "scooter_crosswalk_exit": "scooter_crosswalk_exit",
    "cyclist_crossing": "cyc_cut_across_perp",
    "red_light_runner_right": "veh_cut_across_perp",
    "red_light_runner_left": "veh_cut_across_perp",
    "driveway_pull_out": "veh_pull_out",
    "motorcycle_crossing": "moto_cut_across_perp",
}


def load_bundled(name: str):
    return parse_file(str(SCENARIOS_DIR / f"{name}.scn"))[0]


class TestParameterValuations(unittest.TestCase):
    """パラメータ値のサンプリングをテスト"""

    def setUp(self):
        self.ranges = {
            "ego.speed": ParameterRange(8.0, 12.0, 2.0),
            "actor1.speed": ParameterRange(1.2, 1.8, 0.6),
            "stimulus.trigger_ttc": ParameterRange(1.5, 3.0, 0.5),
        }

    def test_grid_cardinality(self):
        """グリッドの組み合わせ数が各範囲の点数の積になることをテスト"""
        values = parameter_valuations(self.ranges, SamplingPlan())
        self.assertEqual(len(values), 3 * 2 * 4)
        self.assertEqual(len({tuple(sorted(v.items())) for v in values}), 24)

    def test_grid_ignores_seed(self):
        self.assertEqual(parameter_valuations(self.ranges, SamplingPlan(seed=1)),
                         parameter_valuations(self.ranges, SamplingPlan(seed=99)))

    def test_latin_hypercube(self):
        """ラテン超方格サンプリングをテスト"""
        plan = SamplingPlan(mode=SamplingMode.LATIN_HYPERCUBE, seed=5, samples=12)
        values = parameter_valuations(self.ranges, plan)
        self.assertEqual(len(values), 12)
        self.assertEqual(values, parameter_valuations(self.ranges, plan))
        for sample in values:
            for name, parameter in self.ranges.items():
                self.assertGreaterEqual(sample[name], parameter.minimum)
                self.assertLessEqual(sample[name], parameter.maximum)

        # 各次元で区間ごとにちょうど1点
        speeds = sorted(v["ego.speed"] for v in values)
        bins = [min(11, int((s - 8.0) / (4.0 / 12))) for s in speeds]
        self.assertEqual(bins, list(range(12)))


class TestInstantiateConcrete(unittest.TestCase):
    """concrete シナリオ生成をテスト"""

    def setUp(self):
        self.layouts = LayoutLibrary()
        self.registry = default_taxonomy()

    def test_pedestrian_dart_out(self):
        logical = load_bundled("ped_midblock_dart")
        scenarios = instantiate_concrete(logical, SamplingPlan(), self.layouts, self.registry)

        self.assertEqual(len(scenarios), 24)
        self.assertEqual(scenarios[0].id, "ped_midblock_dart-0000")
        self.assertEqual([s.id for s in scenarios], sorted(s.id for s in scenarios))
        for scenario in scenarios:
            self.assertEqual(scenario.test_request, "TR-ped_midblock_dart")
            self.assertEqual(scenario.safety_group, "ped_crossing_midblock")
            self.assertEqual(scenario.partner_kind, ActorKind.PEDESTRIAN)
            self.assertEqual(scenario.stimulus.onset_time, 1.0)
            t_c = 1.0 + scenario.parameters["stimulus.trigger_ttc"]
            self.assertAlmostEqual(scenario.duration, t_c + 3.0)
            self.assertEqual(scenario.ego_start.speed, scenario.parameters["ego.speed"])

    def test_partner_reaches_conflict_point_with_ego(self):
        """自車前端とアクターが t_c に衝突点へ到達することをテスト"""
        logical = load_bundled("ped_midblock_dart")
        scenario = instantiate_concrete(logical, SamplingPlan(), self.layouts, self.registry)[0]
        v = scenario.parameters["ego.speed"]
        t_c = 1.0 + scenario.parameters["stimulus.trigger_ttc"]

        # 横断経路は x = 20 の南北線、自車線の中心は y = -1.75
        self.assertAlmostEqual(scenario.ego_start.x + 2.4 + v * t_c, 20.0, places=6)
        at_conflict = [s for s in scenario.actor_trajectories[0].samples if math.isclose(s.t, t_c)]
        self.assertEqual(len(at_conflict), 1)
        self.assertAlmostEqual(at_conflict[0].y, -1.75, places=6)

        before_onset = scenario.actor_trajectories[0].samples[0]
        self.assertEqual(before_onset.speed, 0.0)

    def test_double_parked_vehicle_adds_occluder(self):
        scenarios = instantiate_concrete(load_bundled("child_dartout_double_parked"), SamplingPlan(),
                                         self.layouts, self.registry)
        for scenario in scenarios:
            kinds = [t.kind for t in scenario.actor_trajectories]
            self.assertEqual(kinds, [ActorKind.PEDESTRIAN_CHILD, ActorKind.PASSENGER_VEHICLE])
            self.assertEqual(len(scenario.footprints), 2)
            self.assertTrue(all(s.speed == 0.0 for s in scenario.actor_trajectories[1].samples))

    def test_overrides_replace_ranges(self):
        plan = SamplingPlan(overrides={"ego.speed": ParameterRange(9.0, 9.0, 1.0)})
        scenarios = instantiate_concrete(load_bundled("ped_midblock_dart"), plan, self.layouts)
        self.assertEqual(len(scenarios), 8)
        self.assertTrue(all(s.ego_start.speed == 9.0 for s in scenarios))
        self.assertTrue(all(s.safety_group == "" for s in scenarios))

    def test_invalid_override(self):
        plan = SamplingPlan(overrides={"ego.speed": ParameterRange(9.0, 5.0, 1.0)})
        with self.assertRaises(EmptyRange):
            instantiate_concrete(load_bundled("ped_midblock_dart"), plan, self.layouts)

    def test_missing_parameter(self):
        logical = load_bundled("ped_midblock_dart")
        ranges = dict(logical.parameter_ranges)
        del ranges["actor1.speed"]
        with self.assertRaises(EmptyRange):
            instantiate_concrete(replace(logical, parameter_ranges=ranges), SamplingPlan(), self.layouts)

    def test_layout_unavailable(self):
        with self.assertRaises(LayoutUnavailable):
            instantiate_concrete(load_bundled("ped_midblock_dart"), SamplingPlan(), LayoutLibrary({}))

    def test_generated_scenarios_validate(self):
        logical = load_bundled("driveway_pull_out")
        for scenario in instantiate_concrete(logical, SamplingPlan(), self.layouts, self.registry):
            report = validate_concrete(scenario, self.registry, {"TR-driveway_pull_out"})
            self.assertTrue(report.is_valid, report.violations)

    def test_assign_safety_group(self):
        """衝突タイプと相手の種別からグループが一意に決まることをテスト"""
        scenario = instantiate_concrete(load_bundled("cyclist_crossing"), SamplingPlan(), self.layouts,
                                        self.registry)[0]
        self.assertEqual(assign_safety_group(scenario, self.registry), "cyc_cut_across_perp")
        self.assertEqual(assign_safety_group(scenario, self.registry), scenario.safety_group)

        with self.assertRaises(UnmappedConflict):
            assign_safety_group(replace(scenario, category=None), self.registry)
        unknown = replace(scenario, category=replace(scenario.category, conflict_type="reversing_out"))
        with self.assertRaises(UnmappedConflict):
            assign_safety_group(unknown, self.registry)


class TestDemoSuite(unittest.TestCase):
    """同梱デモスイートの生成をテスト"""

    def test_demo_suite(self):
        """10ファイルから200件、想定どおりのセーフティグループになることをテスト"""
        layouts = LayoutLibrary()
        registry = default_taxonomy()
        total = 0
        for name, group in EXPECTED_GROUPS.items():
            with self.subTest(name=name):
                scenarios = instantiate_concrete(load_bundled(name), SamplingPlan(), layouts, registry)
                self.assertTrue(scenarios)
                self.assertEqual({s.safety_group for s in scenarios}, {group})
                total += len(scenarios)
        self.assertEqual(total, 200)


class TestValidation(unittest.TestCase):
    """concrete シナリオの検証をテスト"""

    def setUp(self):
        self.registry = default_taxonomy()
        self.scenario = instantiate_concrete(load_bundled("ped_midblock_dart"), SamplingPlan(),
                                             LayoutLibrary(), self.registry)[0]

    def test_violations(self):
        """不変条件の違反がデータとして報告されることをテスト"""
        cases = {
            "positive duration": replace(self.scenario, duration=-1.0),
            "registered safety group": replace(self.scenario, safety_group="bogus"),
            "footprint per actor": replace(self.scenario, footprints=()),
            "non-empty id": replace(self.scenario, id=""),
        }
        for invariant, scenario in cases.items():
            with self.subTest(invariant=invariant):
                report = validate_concrete(scenario, self.registry)
                self.assertFalse(report.is_valid)
                self.assertIn(invariant, report.invariants())

    def test_stimulus_ordering(self):
        stimulus = replace(self.scenario.stimulus, end_time=0.5)
        report = validate_concrete(replace(self.scenario, stimulus=stimulus), self.registry)
        self.assertIn("stimulus ordering", report.invariants())

    def test_non_monotone_trajectory(self):
        trajectory = self.scenario.actor_trajectories[0]
        samples = list(trajectory.samples)
        samples[3], samples[4] = samples[4], samples[3]
        broken = replace(self.scenario, actor_trajectories=(replace(trajectory, samples=tuple(samples)),))
        report = validate_concrete(broken, self.registry)
        self.assertIn("non-monotone time", report.invariants())

    def test_unknown_test_request(self):
        report = validate_concrete(self.scenario, self.registry, {"TR-other"})
        self.assertEqual(report.invariants(), ["test request reference"])


class TestCombinations(unittest.TestCase):
    """組み合わせ列挙と実現可能性フィルタをテスト"""

    def setUp(self):
        self.vocab = load_vocabulary()
        self.layouts = LayoutLibrary()
        self.odd = OddProfile(
            name="test_odd",
            max_speed_limit=13.4,
            allowed_layout_classes=frozenset({"midblock"}),
            present_salient_factors=frozenset({"occlusion", "crowd"}),
        )

    def test_salient_subsets(self):
        subsets = salient_subsets(["b", "a", "c"], 2)
        self.assertEqual(len(subsets), 7)
        self.assertEqual(subsets[0], ())
        self.assertIn(("a", "c"), subsets)

    def test_enumerate_cardinality(self):
        """列挙数が語彙の直積になることをテスト"""
        vocab = self.vocab.restricted(ego_maneuvers=["go_straight"], actor_kinds=[ActorKind.PEDESTRIAN],
                                      maneuvers=["cross_path", "sudden_stop"])
        scenarios = enumerate_combinations(vocab, self.odd, salient_limit=2)
        self.assertEqual(len(scenarios), 1 * 1 * 2 * 1 * 4)
        self.assertEqual(len({s.id for s in scenarios}), len(scenarios))
        self.assertEqual([s.id for s in scenarios], sorted(s.id for s in scenarios))

    def test_excluded_maneuver(self):
        odd = replace(self.odd, excluded_maneuvers=frozenset({"go_straight@midblock"}))
        vocab = self.vocab.restricted(ego_maneuvers=["go_straight"], maneuvers=["cross_path"])
        self.assertEqual(enumerate_combinations(vocab, odd), [])

    def test_feasibility(self):
        """経路が交差しうる組み合わせだけを残すことをテスト"""
        crossing = FunctionalScenario(
            "crossing", ManeuverSpec("go_straight"),
            (ActorSpec(ActorKind.PEDESTRIAN, ManeuverSpec("cross_path", "curbside", "across_lane")),),
            "midblock")
        parallel = FunctionalScenario(
            "parallel", ManeuverSpec("go_straight"),
            (ActorSpec(ActorKind.PASSENGER_VEHICLE, ManeuverSpec("wrong_way", "adjacent_lane", "adjacent_lane")),),
            "midblock")
        self.assertTrue(filter_conflict_feasible(crossing, self.vocab, self.layouts))
        self.assertFalse(filter_conflict_feasible(parallel, self.vocab, self.layouts))

    def test_unmapped_pair_is_kept(self):
        unknown = FunctionalScenario(
            "unknown", ManeuverSpec("go_straight"),
            (ActorSpec(ActorKind.PEDESTRIAN, ManeuverSpec("hover", "off_road", "off_road")),),
            "midblock")
        with self.assertRaises(UnmappedPair):
            lookup_feasibility(unknown, self.vocab, self.layouts)
        with self.assertLogs("cat_harness.generation", level="WARNING"):
            self.assertTrue(filter_conflict_feasible(unknown, self.vocab, self.layouts))


def brute_force_combinations(vocab, odd, salient_limit, sweep_placements):
    """語彙の直積を素直な多重ループで数え上げる"""
    factors = sorted(f for f in set(vocab.salient_factors) if f in odd.present_salient_factors)
    subsets = []
    for mask in range(2 ** len(factors)):
        chosen = frozenset(f for i, f in enumerate(factors) if mask >> i & 1)
        if len(chosen) <= salient_limit:
            subsets.append(chosen)

    found = set()
    for ego in vocab.ego_maneuvers:
        for kind in vocab.actor_kinds:
            for maneuver in vocab.maneuvers:
                placements = vocab.placements_for(maneuver)
                if not sweep_placements:
                    placements = placements[:1]
                for start, end in placements:
                    for layout in vocab.layout_classes:
                        if layout not in odd.allowed_layout_classes or odd.excludes_maneuver(ego, layout):
                            continue
                        for subset in subsets:
                            found.add((ego, kind, maneuver, start, end, layout, subset))
    return found


def combination_tuple(scenario):
    spec = scenario.partner.maneuver
    return (scenario.ego_maneuver.maneuver, scenario.partner.kind, spec.maneuver, spec.start_location,
            spec.end_location, scenario.layout_class, scenario.salient_factors)


class TestCombinationsExhaustive(unittest.TestCase):
    """同梱語彙全体での列挙と実現可能性フィルタを独立な計算と突き合わせる"""

    @classmethod
    def setUpClass(cls):
        cls.vocab = load_vocabulary()
        cls.layouts = LayoutLibrary()
        cls.odd = cls.vocab.odd_profile("chandler_suburban")

    def test_matches_brute_force(self):
        for sweep in (False, True):
            for limit in (0, 1, 2):
                with self.subTest(sweep_placements=sweep, salient_limit=limit):
                    scenarios = enumerate_combinations(self.vocab, self.odd, limit, sweep)
                    expected = brute_force_combinations(self.vocab, self.odd, limit, sweep)
                    self.assertEqual(len(scenarios), len(expected))
                    self.assertEqual({combination_tuple(s) for s in scenarios}, expected)
                    self.assertEqual(len({s.id for s in scenarios}), len(scenarios))

    def test_excluded_maneuvers_match_brute_force(self):
        odd = replace(self.odd, excluded_maneuvers=frozenset({"turn_left", "turn_right@roundabout"}))
        scenarios = enumerate_combinations(self.vocab, odd, 1, True)
        self.assertEqual({combination_tuple(s) for s in scenarios},
                         brute_force_combinations(self.vocab, odd, 1, True))
        self.assertFalse(any(s.ego_maneuver.maneuver == "turn_left" for s in scenarios))

    def test_feasibility_matches_path_intersection(self):
        """ルール表が各レイアウトの経路同士の距離から求めた交差判定と一致することをテスト"""
        reach = 2.0 * CORRIDOR_HALF_WIDTH
        oracle = {}
        for name in self.layouts.layout_classes():
            layout = self.layouts.get(name)
            for ego_maneuver in self.vocab.ego_maneuvers:
                ego_line = layout.ego_path(ego_maneuver).line
                for maneuver in self.vocab.maneuvers:
                    for start, end in self.vocab.placements_for(maneuver):
                        try:
                            actor_line = layout.actor_path(maneuver, start, end).line
                        except UnmappedPair:
                            continue
                        key = (ego_maneuver, maneuver, start)
                        hit = ego_line.distance(actor_line) <= reach
                        oracle[key] = oracle.get(key, False) or hit

        self.assertIn(True, oracle.values())
        self.assertIn(False, oracle.values())
        scenarios = enumerate_combinations(self.vocab, self.odd, 0, True)
        for scenario in scenarios:
            spec = scenario.partner.maneuver
            key = (scenario.ego_maneuver.maneuver, spec.maneuver, spec.start_location)
            with self.subTest(scenario=scenario.id):
                self.assertEqual(filter_conflict_feasible(scenario, self.vocab, self.layouts),
                                 oracle.get(key, True))


class TestFeasibilityCache(unittest.TestCase):
    """実現可能性ルール表のキャッシュが引数ごとに分かれることをテスト"""

    def setUp(self):
        self.vocab = load_vocabulary()
        self.layouts = LayoutLibrary()

    def test_cache_is_keyed_by_ego_maneuvers(self):
        straight = self.layouts.feasibility_rules(["go_straight"], self.vocab.placements)
        full = self.layouts.feasibility_rules(self.vocab.ego_maneuvers, self.vocab.placements)
        self.assertEqual({key[0] for key in straight}, {"go_straight"})
        self.assertEqual({key[0] for key in full}, set(self.vocab.ego_maneuvers))
        self.assertEqual({k: v for k, v in full.items() if k[0] == "go_straight"}, straight)

    def test_cache_is_keyed_by_placements(self):
        crossing = {"cross_path": self.vocab.placements["cross_path"]}
        rules = self.layouts.feasibility_rules(self.vocab.ego_maneuvers, crossing)
        self.assertEqual({key[1] for key in rules}, {"cross_path"})
        full = self.layouts.feasibility_rules(self.vocab.ego_maneuvers, self.vocab.placements)
        self.assertIn("sudden_stop", {key[1] for key in full})

    def test_same_arguments_hit_the_cache(self):
        first = self.layouts.feasibility_rules(("turn_left", "go_straight"), self.vocab.placements)
        again = self.layouts.feasibility_rules(["go_straight", "turn_left", "go_straight"],
                                               dict(self.vocab.placements))
        self.assertIs(first, again)

    def test_restricted_vocabulary_lookup(self):
        """絞った語彙で引いた後でも、全語彙の組が未定義扱いにならないことをテスト"""
        left_only = self.vocab.restricted(ego_maneuvers=["turn_left"])
        turning = FunctionalScenario(
            "turning", ManeuverSpec("turn_left"),
            (ActorSpec(ActorKind.PASSENGER_VEHICLE, ManeuverSpec("go_straight", "across_lane", "across_lane")),),
            "signalized_intersection")
        straight = FunctionalScenario(
            "straight", ManeuverSpec("go_straight"),
            (ActorSpec(ActorKind.PEDESTRIAN, ManeuverSpec("cross_path", "curbside", "across_lane")),),
            "midblock")
        self.assertTrue(lookup_feasibility(turning, left_only, self.layouts))
        self.assertTrue(lookup_feasibility(straight, self.vocab, self.layouts))


class TestOddCoverage(unittest.TestCase):
    """ODD変更時のカバレッジ差分をテスト"""

    def setUp(self):
        self.layouts = LayoutLibrary()
        self.scenarios = instantiate_concrete(load_bundled("ped_midblock_dart"), SamplingPlan(),
                                              self.layouts, default_taxonomy())
        self.old = OddProfile("old", 20.0, frozenset({"midblock"}))
        self.new = OddProfile("new", 11.0, frozenset({"midblock", "signalized_intersection"}))

    def test_consistent_with(self):
        scenario = self.scenarios[0]
        self.assertTrue(consistent_with(scenario, self.old))
        self.assertFalse(consistent_with(scenario, replace(self.old, max_speed_limit=5.0)))
        self.assertFalse(consistent_with(scenario, replace(self.old, allowed_layout_classes=frozenset())))
        self.assertFalse(consistent_with(scenario, replace(self.old, excluded_maneuvers=frozenset({"go_straight"}))))

    def test_diff(self):
        """引き継ぎ・除外・不足カテゴリをテスト"""
        vocab = load_vocabulary().restricted(ego_maneuvers=["go_straight"], actor_kinds=[ActorKind.PEDESTRIAN],
                                             maneuvers=["cross_path"], salient_factors=[])
        diff = diff_odd_coverage(self.scenarios, self.old, self.new, vocab, self.layouts)

        self.assertEqual(len(diff.carried_over), 16)
        self.assertEqual(len(diff.excluded), 8)
        self.assertEqual(len(diff.gap_categories), 1)
        gap = diff.gap_categories[0]
        self.assertEqual(gap.layout_class, "signalized_intersection")
        self.assertEqual((gap.actor_kind, gap.actor_maneuver, gap.start_location),
                         ("pedestrian", "cross_path", "curbside"))


if __name__ == '__main__':
    unittest.main()
