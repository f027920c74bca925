"""
評価ワークフローのコントローラー
シナリオデータベース、ポリシー、並列評価、スコアリング、診断をつなぐ
"""

import time
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import psutil

from .base import BaseController
from ..models.data_models import (
    ConcreteScenario,
    CoverageDiff,
    EvaluationReport,
    ReleaseDiff,
    RepeatabilityResult,
    SamplingPlan,
    ScoreTable,
    SimTrace,
    TestRequest,
    TrackComparison,
    ZTestResult,
)
from ..models.harness_settings import HarnessConfig
from ..models.taxonomy import SafetyGroupRegistry, default_taxonomy
from ..plugins.base import PluginManager
from ..policies import policy_registry
from ..services.diagnostics import (
    coverage_summary,
    discriminability_ztest,
    load_track_records,
    release_diff,
    repeatability_analysis,
    sim_arc_records,
    track_comparison,
)
from ..services.error_handling import PolicyLoadError
from ..services.layout_library import LayoutLibrary
from ..services.logging_config import log_method_call
from ..services.parallel_evaluator import ParallelEvaluator, ScenarioEvaluation, build_tasks, split_results
from ..services.report_writer import load_report
from ..services.scenario_database import ScenarioDatabase
from ..services.scenario_generator import diff_odd_coverage, instantiate_concrete
from ..services.scenario_parser import ScenarioParser, serialize_logical
from ..services.scoring import score_results
from ..services.vocabulary import Vocabulary, load_vocabulary


class EvaluationController(BaseController):
    """
    評価ハーネスのコントローラー

    - DSL から concrete シナリオを生成してデータベースに保存
    - 評価対象ポリシーと NIEON 参照ドライバでデータベース全体を評価
    - z検定・再現性・テストコース比較・リリース差分・ODD差分の診断
    """

    def __init__(self, config: HarnessConfig, plugin_dirs: Sequence[str] = (),
                 registry: Optional[SafetyGroupRegistry] = None):
        super().__init__(config)
        self.plugin_dirs = tuple(plugin_dirs)
        self.registry = registry
        self.plugin_manager = PluginManager(policy_registry)

    def _setup(self) -> None:
        """セーフティグループ体系を用意し、ポリシープラグインを読み込む"""
        if self.registry is None:
            self.registry = default_taxonomy(self.config.motorcyclist_group)
        for path in self.plugin_dirs:
            self.plugin_manager.add_plugin_path(path)
        results = self.plugin_manager.load_all_plugins()
        failed = [path for path, ok in results.items() if not ok]
        if failed:
            self.logger.error(f"読み込めなかったプラグイン: {', '.join(failed)}")

    # -- 生成 ---------------------------------------------------------------

    @log_method_call
    def generate(self, scenario_files: Iterable[str], database_path: Optional[str] = None,
                 plan: Optional[SamplingPlan] = None, vocabulary: Optional[Vocabulary] = None,
                 author: str = "cat-harness", append: bool = False) -> int:
        """.scn ファイルを読み込み、concrete シナリオとテストリクエストをデータベースに書く

        append が False の場合、データベースの前回生成分は置き換えられる。

        Returns:
            書き込んだシナリオ数
        """
        self._require_initialized()
        vocabulary = vocabulary or load_vocabulary()
        plan = plan or SamplingPlan(seed=self.config.seed)
        layouts = LayoutLibrary()
        parser = ScenarioParser(vocabulary)
        sim = self.config.sim

        scenarios: List[ConcreteScenario] = []
        requests: List[TestRequest] = []
        for path in sorted(scenario_files):
            for logical in parser.parse(Path(path).read_text(encoding="utf-8"), str(path)):
                concrete = instantiate_concrete(logical, plan, layouts, self.registry,
                                                sample_interval=sim.sample_interval,
                                                post_conflict_time=sim.post_conflict_time)
                if not concrete:
                    continue
                scenarios.extend(concrete)
                requests.append(TestRequest(concrete[0].test_request, concrete[0].safety_group,
                                            serialize_logical(logical), author))
                self.logger.info(f"{logical.id}: {len(concrete)} 件 -> {concrete[0].safety_group}")

        database = ScenarioDatabase(database_path or self.config.database_path)
        return database.write(scenarios, requests, append=append)

    # -- 評価 ---------------------------------------------------------------

    def load_database(self, database_path: Optional[str] = None) -> Tuple[ScenarioDatabase, List[ConcreteScenario]]:
        """データベースを読み込んで検証する（DatabaseValidationError を送出しうる）"""
        self._require_initialized()
        database = ScenarioDatabase(database_path or self.config.database_path)
        return database, database.validate(self.registry)

    def _check_policy(self, policy_name: str) -> None:
        if policy_name not in policy_registry:
            raise PolicyLoadError(
                f"policy '{policy_name}' is not registered (known: {', '.join(policy_registry.list_policies())})",
                policy_name)

    def evaluate(self, scenarios: Sequence[ConcreteScenario], policy_name: str,
                 config: Optional[HarnessConfig] = None, keep_traces: bool = False) -> List[ScenarioEvaluation]:
        """シナリオ群を評価する（結果はシナリオ id 順）"""
        self._require_initialized()
        self._check_policy(policy_name)
        config = config or self.config
        groups = [self.registry.road_user_group(s.safety_group) for s in scenarios]
        tasks = build_tasks(scenarios, groups, policy_name, config, keep_traces)
        with ParallelEvaluator(config.parallelism, self.plugin_dirs) as evaluator:
            return evaluator.evaluate(tasks)

    @log_method_call
    def run_evaluation(self, policy_name: Optional[str] = None, database_path: Optional[str] = None,
                       keep_traces: bool = False) -> Tuple[EvaluationReport, List[SimTrace]]:
        """データベース全体を評価して受け入れ判定まで行う"""
        policy_name = policy_name or self.config.policy
        self._require_initialized()
        self._check_policy(policy_name)
        database, scenarios = self.load_database(database_path)

        self.logger.info(f"評価を開始します: policy={policy_name}, scenarios={len(scenarios)}")
        started = time.perf_counter()
        evaluations = self.evaluate(scenarios, policy_name, keep_traces=keep_traces)
        results, traces = split_results(evaluations)
        table, acceptance = score_results(results, self.config.scoring.slack, self.config.to_dict())
        wall_clock = time.perf_counter() - started

        report = EvaluationReport(
            policy=policy_name,
            database_hash=database.content_hash(),
            score_table=table,
            acceptance=acceptance,
            results=tuple(results),
            slack=self.config.scoring.slack,
            wall_clock=round(wall_clock, 3),
            metadata={
                "variant": self.config.variant,
                "parallelism": self.config.parallelism,
                "peak_rss_bytes": psutil.Process().memory_info().rss,
            },
            coverage=coverage_summary(scenarios, self.registry),
        )
        verdict = "合格" if acceptance.overall_pass else "不合格"
        self.logger.info(f"評価が終了しました: {len(results)} 件、{wall_clock:.1f} 秒、{verdict}")
        return report, traces

    def score_run(self, scenarios: Sequence[ConcreteScenario], policy_name: str, seed: int) -> ScoreTable:
        """指定したシードで1回評価し、スコア表だけを返す"""
        config = self.config.with_overrides({"seed": seed})
        results, _ = split_results(self.evaluate(scenarios, policy_name, config))
        table, _ = score_results(results, config.scoring.slack)
        return table

    # -- 診断 ---------------------------------------------------------------

    @log_method_call
    def run_ztest(self, deltas: Optional[Sequence[float]] = None, alpha: Optional[float] = None,
                  database_path: Optional[str] = None) -> List[ZTestResult]:
        _, scenarios = self.load_database(database_path)
        return discriminability_ztest(scenarios, self.config, self.registry, deltas, alpha,
                                      parallelism=self.config.parallelism)

    @log_method_call
    def run_repeatability(self, k: int, policy_name: Optional[str] = None,
                          database_path: Optional[str] = None) -> RepeatabilityResult:
        """シードを変えて k 回評価する（ジッタは設定に従う）"""
        policy_name = policy_name or self.config.policy
        self._check_policy(policy_name)
        _, scenarios = self.load_database(database_path)
        seeds = [self.config.seed + i for i in range(k)]

        def run(seed: int) -> ScoreTable:
            return self.score_run(scenarios, policy_name, seed)

        return repeatability_analysis(run, k, seeds)

    def run_track_comparison(self, track_index: str, policy_name: Optional[str] = None,
                             database_path: Optional[str] = None) -> TrackComparison:
        """テストコースで実施したシナリオだけをシミュレーションして比較する"""
        policy_name = policy_name or self.config.policy
        track_records = load_track_records(track_index)
        _, scenarios = self.load_database(database_path)
        wanted = {r.scenario_id for r in track_records}
        selected = [s for s in scenarios if s.id in wanted]
        _, traces = split_results(self.evaluate(selected, policy_name, keep_traces=True))
        return track_comparison(sim_arc_records(traces, selected), track_records)

    def diff_reports(self, baseline_path: str, candidate_path: str) -> ReleaseDiff:
        return release_diff(load_report(baseline_path), load_report(candidate_path))

    def diff_odd(self, old_profile: str, new_profile: str, vocabulary: Optional[Vocabulary] = None,
                 database_path: Optional[str] = None) -> CoverageDiff:
        """ODD変更時の引き継ぎ・除外・不足カテゴリ"""
        vocabulary = vocabulary or load_vocabulary()
        _, scenarios = self.load_database(database_path)
        generation = self.config.generation
        return diff_odd_coverage(scenarios, vocabulary.odd_profile(old_profile),
                                 vocabulary.odd_profile(new_profile), vocabulary, LayoutLibrary(),
                                 generation.salient_subset_limit, generation.sweep_placements)

    def summary(self, report: EvaluationReport) -> Dict[str, object]:
        """コンソール表示用の要約"""
        return {
            "policy": report.policy,
            "scenarios": report.scenario_count,
            "overall_pass": report.acceptance.overall_pass,
            "failing_groups": report.acceptance.failing_groups(),
            "inconclusive": len(report.acceptance.inconclusive_ids),
        }
