"""
スコアリング

衝突指標と重傷指標の判定、セーフティグループ・道路利用者グループ単位の集計、
受け入れ基準の判定を提供する。
"""

from collections import defaultdict
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from ..models.data_models import (
    AcceptanceReport,
    GroupScore,
    GroupVerdict,
    ImpactZone,
    NieonOutcome,
    Party,
    RoadUserGroup,
    ScenarioResult,
    ScoreTable,
)
from .logging_config import get_harness_logger


logger = get_harness_logger("scoring")


def _outcome(result: ScenarioResult, party: Party):
    return result.ads_outcome if party is Party.ADS else result.nieon_outcome


def collision_metric_counts(result: ScenarioResult, party: Party) -> bool:
    """衝突指標に数えるか

    自車前方ゾーン以外（後方2/3）への衝突と、自車停止中の衝突は除外する。
    同じ規則を参照ドライバの結果にも適用する。
    """
    contact = _outcome(result, party).contact
    if contact is None:
        return False
    return contact.ego_zone is ImpactZone.FRONTAL and not contact.ego_stationary


def injury_metric_counts(result: ScenarioResult, party: Party) -> bool:
    """重傷指標に数えるか（ゾーン・停止の除外は無い）"""
    outcome = _outcome(result, party)
    severities = outcome.severity if isinstance(outcome, NieonOutcome) else outcome.severities
    return outcome.serious_injury or any(s.serious_injury for s in severities)


def _score(group_id: str, road_user_group: str, results: Sequence[ScenarioResult]) -> GroupScore:
    scored = [r for r in results if not r.inconclusive]
    return GroupScore(
        group_id=group_id,
        road_user_group=road_user_group,
        n_scenarios=len(results),
        ads_collisions=sum(collision_metric_counts(r, Party.ADS) for r in scored),
        nieon_collisions=sum(collision_metric_counts(r, Party.NIEON) for r in scored),
        ads_serious=sum(injury_metric_counts(r, Party.ADS) for r in scored),
        nieon_serious=sum(injury_metric_counts(r, Party.NIEON) for r in scored),
        inconclusive=len(results) - len(scored),
    )


def _rollup(road_user_group: RoadUserGroup, members: Iterable[GroupScore]) -> GroupScore:
    members = list(members)
    return GroupScore(
        group_id=road_user_group.value,
        road_user_group=road_user_group.value,
        n_scenarios=sum(m.n_scenarios for m in members),
        ads_collisions=sum(m.ads_collisions for m in members),
        nieon_collisions=sum(m.nieon_collisions for m in members),
        ads_serious=sum(m.ads_serious for m in members),
        nieon_serious=sum(m.nieon_serious for m in members),
        inconclusive=sum(m.inconclusive for m in members),
    )


def aggregate_groups(results: Iterable[ScenarioResult]) -> ScoreTable:
    """セーフティグループ別に集計し、Vehicle / VRU のロールアップを付ける

    結果の並び順に依存しない。結果が空なら空の表を返す。
    不確定（ポリシー障害）の結果はシナリオ数には含めるが指標には数えない。
    """
    by_group: Dict[str, List[ScenarioResult]] = defaultdict(list)
    road_user: Dict[str, RoadUserGroup] = {}
    for result in results:
        by_group[result.safety_group].append(result)
        road_user[result.safety_group] = result.road_user_group
    if not by_group:
        return ScoreTable()

    groups = tuple(_score(g, road_user[g].value, by_group[g]) for g in sorted(by_group))
    rollups = tuple(
        _rollup(rug, (s for s in groups if s.road_user_group == rug.value))
        for rug in (RoadUserGroup.VEHICLE, RoadUserGroup.VRU)
    )
    return ScoreTable(groups, rollups)


def _verdict(score: GroupScore, slack: int) -> GroupVerdict:
    return GroupVerdict(
        group_id=score.group_id,
        road_user_group=score.road_user_group,
        collisions_pass=score.ads_collisions <= score.nieon_collisions + slack,
        injuries_pass=score.ads_serious <= score.nieon_serious + slack,
    )


def acceptance_check(scores: ScoreTable, slack: int = 0, inconclusive_ids: Sequence[str] = (),
                     config_echo: Optional[Mapping[str, Any]] = None) -> AcceptanceReport:
    """受け入れ基準を判定する

    各セーフティグループと2つの道路利用者グループで、ADSの衝突数・重傷数が
    どちらも参照ドライバ以下（slack だけ許容）なら合格。不確定な結果が
    1件でもあれば全体としては合格にしない。
    """
    group_verdicts = tuple(_verdict(s, slack) for s in scores.groups)
    road_user_verdicts = tuple(_verdict(s, slack) for s in scores.rollups)
    inconclusive = tuple(sorted(inconclusive_ids))
    overall = (all(v.passed for v in group_verdicts + road_user_verdicts) and not inconclusive)
    if inconclusive:
        logger.warning(f"{len(inconclusive)} 件の不確定なシナリオがあるため合格と判定しません")

    report = AcceptanceReport(group_verdicts, road_user_verdicts, overall, inconclusive,
                              dict(config_echo or {}))
    failing = report.failing_groups()
    if failing:
        logger.info(f"不合格のグループ: {', '.join(failing)}")
    return report


def score_results(results: Sequence[ScenarioResult], slack: int = 0,
                  config_echo: Optional[Mapping[str, Any]] = None) -> Tuple[ScoreTable, AcceptanceReport]:
    """集計と受け入れ判定をまとめて行う"""
    table = aggregate_groups(results)
    inconclusive = [r.scenario_id for r in results if r.inconclusive]
    return table, acceptance_check(table, slack, inconclusive, config_echo)

