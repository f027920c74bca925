"""
評価結果の診断

参照ドライバの厳しさを変えたときの識別力（z検定）、ジッタによる再現性、
テストコースとの比較、前回リリースとの差分、シナリオのカバレッジ集計を提供する。
"""

import csv
import math
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from statsmodels.stats.proportion import proportions_ztest

from ..models.data_models import (
    ArcLengthRecord,
    ConcreteScenario,
    GroupDelta,
    ReleaseDiff,
    RepeatabilityResult,
    RoadUserGroup,
    ScoreTable,
    SimTrace,
    TrackComparison,
    ZTestResult,
)
from ..models.harness_settings import HarnessConfig
from ..models.taxonomy import SafetyGroupRegistry
from .error_context import error_context
from .error_handling import ConfigurationError, DatabaseMismatch, DegenerateGroup, UnmatchedScenario
from .logging_config import get_harness_logger, log_performance
from .nieon_reference import evaluate_stringency


logger = get_harness_logger("scoring.diagnostics")

COLLECT_MORE = "collect additional scenarios"
# 位置の同着は「前にいる」とみなす
POSITION_TOLERANCE = 1e-9


# ---------------------------------------------------------------------------
# 識別力のz検定
# ---------------------------------------------------------------------------

def pooled_ztest(failures_a: int, n_a: int, failures_b: int, n_b: int,
                 group_id: str = "") -> Tuple[float, float]:
    """プールした2標本比率のz検定（両側）

    z = (p_a − p_b) / sqrt(p̂(1−p̂)(1/n_a + 1/n_b))

    Raises:
        DegenerateGroup: 標本数が2未満、またはプールした比率が0か1の場合
    """
    if n_a < 2 or n_b < 2:
        raise DegenerateGroup(group_id, f"too few scenarios (n={min(n_a, n_b)})")
    pooled = (failures_a + failures_b) / (n_a + n_b)
    if pooled <= 0.0 or pooled >= 1.0:
        raise DegenerateGroup(group_id, f"pooled failure proportion is {pooled:g}")
    z, p_value = proportions_ztest(np.array([failures_a, failures_b]), np.array([n_a, n_b]))
    return float(z), float(p_value)


def _stringency_failures(args: Tuple[ConcreteScenario, HarnessConfig, RoadUserGroup, Tuple[float, float]]
                         ) -> Tuple[str, bool, bool]:
    scenario, config, group, deltas = args
    low, high = evaluate_stringency(scenario, config, group, deltas)
    return scenario.safety_group, low.collided, high.collided


def group_ztest(group_id: str, n: int, failures_low: int, failures_high: int, alpha: float) -> ZTestResult:
    """1グループの判定（退化したグループは非識別として印を付ける）"""
    try:
        z, p_value = pooled_ztest(failures_high, n, failures_low, n, group_id)
    except DegenerateGroup as e:
        logger.warning(f"{group_id}: z検定が定義できません ({e.reason})")
        return ZTestResult(group_id, math.nan, math.nan, False, n, failures_low, failures_high,
                           degenerate=True, note=COLLECT_MORE)
    discriminative = p_value < alpha
    return ZTestResult(group_id, z, p_value, discriminative, n, failures_low, failures_high,
                       note="" if discriminative else COLLECT_MORE)


@log_performance
def discriminability_ztest(scenarios: Sequence[ConcreteScenario], config: HarnessConfig,
                           registry: SafetyGroupRegistry, deltas: Optional[Sequence[float]] = None,
                           alpha: Optional[float] = None, parallelism: int = 1) -> List[ZTestResult]:
    """最も緩い水準と最も厳しい水準の参照ドライバの失敗率をグループごとに比較する

    失敗は参照ドライバの衝突。厳しい（切片が大きい）水準を先にして z を計算するので、
    厳しい水準の方が失敗が多ければ z は正になる。

    Raises:
        ConfigurationError: 水準が2つ未満の場合
        NonPositiveIntercept: ずらした切片が0以下になる場合
    """
    deltas = tuple(config.nieon.stringency_deltas if deltas is None else deltas)
    alpha = config.nieon.alpha if alpha is None else alpha
    if len(set(deltas)) < 2:
        raise ConfigurationError("the z-test needs at least two stringency levels", "nieon.stringency_deltas")
    extremes = (min(deltas), max(deltas))

    jobs = [(s, config, registry.road_user_group(s.safety_group), extremes) for s in scenarios]
    if parallelism > 1:
        with ProcessPoolExecutor(max_workers=parallelism) as executor:
            outcomes = list(executor.map(_stringency_failures, jobs, chunksize=8))
    else:
        outcomes = [_stringency_failures(job) for job in jobs]

    totals: Counter = Counter()
    low_failures: Counter = Counter()
    high_failures: Counter = Counter()
    for group_id, low, high in outcomes:
        totals[group_id] += 1
        low_failures[group_id] += int(low)
        high_failures[group_id] += int(high)

    results = [group_ztest(g, totals[g], low_failures[g], high_failures[g], alpha) for g in sorted(totals)]
    flagged = [r.group_id for r in results if not r.discriminative]
    if flagged:
        logger.info(f"識別力の無いグループ（追加シナリオが必要）: {', '.join(flagged)}")
    return results


# ---------------------------------------------------------------------------
# 再現性
# ---------------------------------------------------------------------------

def _counts(table: ScoreTable) -> Dict[str, Tuple[int, int, int]]:
    return {g.group_id: (g.n_scenarios, g.ads_collisions, g.ads_serious) for g in table.groups}


def repeatability_analysis(run: Callable[[int], ScoreTable], k: int, seeds: Optional[Sequence[int]] = None
                           ) -> RepeatabilityResult:
    """評価を k 回繰り返し、1回目からの変化率（%）の95パーセンタイルを求める

    変化率 = |count_i − count_1| / グループのシナリオ数 × 100。

    Args:
        run: ジッタ用のシードを受け取り、評価全体を実行してスコア表を返す関数
        k: 実行回数（2以上）
        seeds: 各回のシード（省略時は 0..k-1）
    """
    if k < 2:
        raise ConfigurationError(f"repeatability needs at least two runs, got k={k}", "k")
    seeds = list(range(k)) if seeds is None else list(seeds)
    if len(seeds) != k:
        raise ConfigurationError(f"expected {k} seeds, got {len(seeds)}", "seeds")

    baseline = _counts(run(seeds[0]))
    collision_changes: List[float] = []
    injury_changes: List[float] = []
    per_group: Dict[str, List[float]] = {g: [0.0, 0.0] for g in baseline}
    for seed in seeds[1:]:
        counts = _counts(run(seed))
        for group_id, (n, collisions, serious) in sorted(baseline.items()):
            _, c_i, s_i = counts.get(group_id, (n, collisions, serious))
            d_collision = 100.0 * abs(c_i - collisions) / n if n else 0.0
            d_injury = 100.0 * abs(s_i - serious) / n if n else 0.0
            collision_changes.append(d_collision)
            injury_changes.append(d_injury)
            per_group[group_id][0] = max(per_group[group_id][0], d_collision)
            per_group[group_id][1] = max(per_group[group_id][1], d_injury)

    result = RepeatabilityResult(
        k=k,
        collision_p95=float(np.percentile(collision_changes, 95)) if collision_changes else 0.0,
        injury_p95=float(np.percentile(injury_changes, 95)) if injury_changes else 0.0,
        per_group_max={g: (v[0], v[1]) for g, v in per_group.items()},
    )
    logger.info(f"再現性: 衝突 {result.collision_p95:.3f}%、重傷 {result.injury_p95:.3f}%（95パーセンタイル）")
    return result


# ---------------------------------------------------------------------------
# テストコースとの比較
# ---------------------------------------------------------------------------

def sim_arc_records(traces: Iterable[SimTrace], scenarios: Iterable[ConcreteScenario]) -> List[ArcLengthRecord]:
    """シミュレーション軌跡を刺激開始基準の走行距離記録に変換"""
    onsets = {s.id: s.stimulus.onset_time for s in scenarios}
    records = []
    for trace in traces:
        onset = onsets.get(trace.scenario_id, 0.0)
        start = trace.ego_states[0].odometer
        records.append(ArcLengthRecord(
            trace.scenario_id,
            trace.contact is not None,
            tuple(t - onset for t in trace.times),
            tuple(s.odometer - start for s in trace.ego_states),
        ))
    return records


def is_even_or_ahead(sim: ArcLengthRecord, track: ArcLengthRecord) -> bool:
    """共通の時刻すべてでシミュレーションの自車位置がテストコース以上か"""
    sim_t = np.asarray(sim.times)
    track_t = np.asarray(track.times)
    if sim_t.size == 0 or track_t.size == 0:
        return False
    common = (track_t >= sim_t[0] - POSITION_TOLERANCE) & (track_t <= sim_t[-1] + POSITION_TOLERANCE)
    if not common.any():
        return False
    sim_s = np.interp(track_t[common], sim_t, np.asarray(sim.positions))
    return bool(np.all(sim_s >= np.asarray(track.positions)[common] - POSITION_TOLERANCE))


def track_comparison(sim_records: Sequence[ArcLengthRecord], track_records: Sequence[ArcLengthRecord]
                     ) -> TrackComparison:
    """テストコースの結果と比較する

    conservative: シミュレーションの衝突数がテストコース以上
    ahead_fraction: シミュレーションの自車がテストコースと同着か前にいたシナリオの割合

    Raises:
        UnmatchedScenario: テストコースの記録に対応するシミュレーションが無い場合
    """
    sims = {r.scenario_id: r for r in sim_records}
    missing = sorted(r.scenario_id for r in track_records if r.scenario_id not in sims)
    if missing:
        raise UnmatchedScenario(missing)

    matched = sorted(track_records, key=lambda r: r.scenario_id)
    sim_collisions = sum(sims[r.scenario_id].collided for r in matched)
    track_collisions = sum(r.collided for r in matched)
    ahead = [r.scenario_id for r in matched if is_even_or_ahead(sims[r.scenario_id], r)]
    fraction = len(ahead) / len(matched) if matched else 0.0
    return TrackComparison(sim_collisions >= track_collisions, fraction, sim_collisions, track_collisions,
                           len(matched), tuple(ahead))


def _read_trajectory(path: Path) -> Tuple[Tuple[float, ...], Tuple[float, ...]]:
    times, positions = [], []
    with open(path, 'r', encoding='utf-8', newline='') as f:
        for row in csv.DictReader(f):
            times.append(float(row["t"]))
            positions.append(float(row["s"]))
    return tuple(times), tuple(positions)


def load_track_records(index_path: str) -> List[ArcLengthRecord]:
    """テストコース結果のCSVを読み込む

    列: scenario_id, collided (0/1/true/false), trajectory（t, s 列を持つCSVへの相対パス）。
    t は刺激開始基準の時刻、s は自車の走行距離。
    """
    index = Path(index_path)
    records = []
    with error_context.database_operation(str(index)):
        with open(index, 'r', encoding='utf-8', newline='') as f:
            rows = list(csv.DictReader(f))
        for row in rows:
            collided = row["collided"].strip().lower() in ("1", "true", "yes")
            times, positions = _read_trajectory(index.parent / row["trajectory"])
            records.append(ArcLengthRecord(row["scenario_id"], collided, times, positions))
    return records


# ---------------------------------------------------------------------------
# リリース間差分
# ---------------------------------------------------------------------------

def _rows(report: Mapping[str, Any]) -> Dict[str, Mapping[str, Any]]:
    return {row["group_id"]: row for row in report.get("score_table", [])}


def release_diff(report_a: Mapping[str, Any], report_b: Mapping[str, Any]) -> ReleaseDiff:
    """前回リリース（a）と今回（b）のレポートをグループごとに比較する

    ADS の衝突数か重傷数が増えたグループを回帰として印を付ける（受け入れ判定は変えない）。

    Raises:
        DatabaseMismatch: ハッシュが異なる、またはどちらかのハッシュが欠けている場合
    """
    hash_a = str(report_a.get("database_hash") or "")
    hash_b = str(report_b.get("database_hash") or "")
    if not hash_a or not hash_b or hash_a != hash_b:
        raise DatabaseMismatch(hash_a, hash_b)

    rows_a, rows_b = _rows(report_a), _rows(report_b)
    empty: Mapping[str, Any] = {}
    deltas = []
    for group_id in sorted(set(rows_a) | set(rows_b)):
        a, b = rows_a.get(group_id, empty), rows_b.get(group_id, empty)

        def delta(key: str) -> int:
            return int(b.get(key, 0)) - int(a.get(key, 0))

        deltas.append(GroupDelta(group_id, delta("ads_collisions"), delta("nieon_collisions"),
                                 delta("ads_serious"), delta("nieon_serious")))
    diff = ReleaseDiff(hash_a, tuple(deltas))
    if diff.regressions:
        logger.warning(f"前回リリースより悪化したグループ: {', '.join(diff.regressions)}")
    return diff


# ---------------------------------------------------------------------------
# カバレッジ集計
# ---------------------------------------------------------------------------

def coverage_summary(scenarios: Iterable[ConcreteScenario], registry: SafetyGroupRegistry) -> Dict[str, Any]:
    """グループ別・顕著要因別のシナリオ数と、シナリオが無い登録済みグループ"""
    per_group: Counter = Counter()
    per_factor: Counter = Counter()
    for scenario in scenarios:
        per_group[scenario.safety_group] += 1
        if scenario.category is not None:
            per_factor.update(scenario.category.salient_factors)
    return {
        "scenarios_per_group": dict(sorted(per_group.items())),
        "scenarios_per_salient_factor": dict(sorted(per_factor.items())),
        "groups_without_scenarios": [g for g in registry.ids() if per_group[g] == 0],
    }
