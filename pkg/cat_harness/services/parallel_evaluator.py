"""
シナリオ評価の並列実行サービス

各シナリオについて評価対象ポリシーのシミュレーションと NIEON 参照ドライバの評価を行う。
ワーカー間で状態は共有せず、結果は最後にシナリオ id 順に並べ替えるので
並列度によらず同じ結果になる。
"""

import os
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

from ..models.data_models import (
    CollisionOutcome,
    ConcreteScenario,
    JitterConfig,
    LatencyConfig,
    PolicyContext,
    RoadUserGroup,
    ScenarioResult,
    SimTrace,
)
from ..models.harness_settings import HarnessConfig
from ..policies import create_policy
from .error_context import error_context
from .error_handling import PolicyFault
from .logging_config import get_harness_logger, log_performance
from .nieon_reference import evaluate_nieon_for
from .severity import score_trace_contact
from .simulation import run_scenario


logger = get_harness_logger("simulation.parallel")


@dataclass(frozen=True)
class EvaluationTask:
    """1シナリオ分の評価依頼（ワーカープロセスへ渡すためピクル可能）"""
    scenario: ConcreteScenario
    road_user_group: RoadUserGroup
    policy_name: str
    config: HarnessConfig
    keep_trace: bool = False


@dataclass(frozen=True)
class ScenarioEvaluation:
    result: ScenarioResult
    trace: Optional[SimTrace] = None


def _load_plugins(plugin_dirs: Sequence[str]) -> None:
    """ワーカープロセスでもプラグインのポリシーを登録する"""
    if not plugin_dirs:
        return
    from ..plugins.base import PluginManager
    manager = PluginManager()
    for path in plugin_dirs:
        manager.add_plugin_path(path)
    manager.load_all_plugins()


def evaluate_scenario(task: EvaluationTask) -> ScenarioEvaluation:
    """評価対象ポリシーと参照ドライバで1シナリオを評価する

    ポリシーが非有限の指令を返した場合は不確定（inconclusive）な結果を返す。
    """
    scenario, config = task.scenario, task.config
    nieon = evaluate_nieon_for(scenario, config, task.road_user_group)

    policy = create_policy(task.policy_name, config)
    limits = policy.vehicle_limits(config.ads_limits)
    latency = config.latency if policy.uses_latency else LatencyConfig.zero()
    jitter = config.jitter if policy.uses_latency else JitterConfig(enabled=False)
    context = PolicyContext(scenario.id, config.sim.step, limits, scenario.ego_footprint,
                            nieon_plan=nieon.plan, seed=config.seed)

    trace = None
    try:
        with error_context.scenario_simulation(scenario.id):
            trace = run_scenario(scenario, policy, latency, step=config.sim.step, seed=config.seed,
                                 limits=limits, jitter=jitter, context=context)
    except PolicyFault as e:
        result = ScenarioResult(scenario.id, CollisionOutcome.no_collision(), nieon, scenario.safety_group,
                                task.road_user_group, inconclusive=True, fault=str(e))
        return ScenarioEvaluation(result)

    partner_kinds = tuple(t.kind for t in scenario.actor_trajectories)
    ads = score_trace_contact(trace.contact, partner_kinds, config.severity)
    result = ScenarioResult(scenario.id, ads, nieon, scenario.safety_group, task.road_user_group)
    return ScenarioEvaluation(result, trace if task.keep_trace else None)


class ParallelEvaluator:
    """プロセスプールでシナリオを評価するサービス"""

    def __init__(self, max_workers: Optional[int] = None, plugin_dirs: Sequence[str] = ()):
        """
        Args:
            max_workers: ワーカープロセス数。None なら CPU 数。1 ならプロセスを使わない
            plugin_dirs: ワーカーで読み込むポリシープラグインのディレクトリ
        """
        self.max_workers = max_workers or os.cpu_count() or 4
        self.plugin_dirs = tuple(plugin_dirs)
        self._executor: Optional[ProcessPoolExecutor] = None
        self._is_cancelled = False

    def start(self) -> None:
        if self._executor is None and self.max_workers > 1:
            self._executor = ProcessPoolExecutor(max_workers=self.max_workers, initializer=_load_plugins,
                                                 initargs=(self.plugin_dirs,))

    def stop(self) -> None:
        if self._executor:
            self._executor.shutdown(wait=True)
            self._executor = None

    def cancel(self) -> None:
        self._is_cancelled = True

    @property
    def is_cancelled(self) -> bool:
        return self._is_cancelled

    @log_performance
    def evaluate(self, tasks: Sequence[EvaluationTask],
                 progress_callback: Optional[Callable[[float], None]] = None) -> List[ScenarioEvaluation]:
        """全タスクを評価し、シナリオ id 順で返す

        Args:
            tasks: 評価依頼
            progress_callback: 進捗（0〜1）を受け取るコールバック
        """
        self._is_cancelled = False
        total = len(tasks)
        logger.info(f"{total} 件のシナリオを評価します（並列度 {self.max_workers}）")
        evaluations: List[ScenarioEvaluation] = []
        if total == 0:
            return evaluations

        if self.max_workers == 1:
            for done, task in enumerate(tasks, start=1):
                if self._is_cancelled:
                    break
                evaluations.append(evaluate_scenario(task))
                if progress_callback:
                    progress_callback(done / total)
        else:
            self.start()
            futures = {self._executor.submit(evaluate_scenario, task): task for task in tasks}
            for done, future in enumerate(as_completed(futures), start=1):
                if self._is_cancelled:
                    for f in futures:
                        f.cancel()
                    break
                evaluations.append(future.result())
                if progress_callback:
                    progress_callback(done / total)

        evaluations.sort(key=lambda e: e.result.scenario_id)
        inconclusive = sum(e.result.inconclusive for e in evaluations)
        logger.info(f"評価が完了しました: {len(evaluations)} 件（不確定 {inconclusive} 件）")
        return evaluations

    def __enter__(self):
        self.start()
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        self.stop()


def build_tasks(scenarios: Sequence[ConcreteScenario], groups: Sequence[RoadUserGroup], policy_name: str,
                config: HarnessConfig, keep_traces: bool = False) -> List[EvaluationTask]:
    return [EvaluationTask(s, g, policy_name, config, keep_traces) for s, g in zip(scenarios, groups)]


def split_results(evaluations: Sequence[ScenarioEvaluation]) -> Tuple[List[ScenarioResult], List[SimTrace]]:
    results = [e.result for e in evaluations]
    traces = [e.trace for e in evaluations if e.trace is not None]
    return results, traces
