"""
NIEON参照ドライバの評価

刺激開始 + 応答時間までは名目の自車運動を再生し、その後の3候補
（制動のみ・左回避・右回避）をそれぞれシミュレーションして最良の結果を選ぶ。
参照ドライバは遅延注入を受けない（応答時間が遅れを表す）。
"""

from typing import List, Optional, Sequence, Tuple

from ..models.data_models import (
    ConcreteScenario,
    CollisionOutcome,
    JitterConfig,
    LatencyConfig,
    ManeuverLimits,
    ManeuverPlan,
    NieonCandidate,
    NieonManeuver,
    NieonOutcome,
    PolicyContext,
    ResponseTimeModel,
    RoadUserGroup,
    SimTrace,
)
from ..models.harness_settings import HarnessConfig, SeveritySettings
from ..policies.nieon_policy import ScheduledPolicy
from .error_handling import DegenerateSpeed
from .logging_config import get_harness_logger
from .nieon_planning import ramp_up_time, reference_vehicle_limits, response_time, stringency_variants
from .severity import score_trace_contact
from .simulation import run_scenario


logger = get_harness_logger("simulation.nieon")


def reaction_time(scenario: ConcreteScenario, rt_model: ResponseTimeModel) -> float:
    """反応時刻 = 刺激開始 + 応答時間"""
    stimulus = scenario.stimulus
    return stimulus.onset_time + response_time(rt_model, ramp_up_time(stimulus))


def simulate_plan(scenario: ConcreteScenario, plan: ManeuverPlan, step: float = 0.01, seed: int = 0) -> SimTrace:
    """1つの回避候補を遅延なしでシミュレーション"""
    policy = ScheduledPolicy(plan)
    limits = reference_vehicle_limits(plan.limits)
    context = PolicyContext(scenario.id, step, limits, scenario.ego_footprint, nieon_plan=plan, seed=seed)
    return run_scenario(scenario, policy, LatencyConfig.zero(), step=step, seed=seed, limits=limits,
                        jitter=JitterConfig(enabled=False), context=context)


def _candidate_key(candidate: NieonCandidate) -> Tuple:
    return candidate.outcome.ordering_key + (candidate.plan.maneuver.order,)


def evaluate_nieon(scenario: ConcreteScenario, rt_model: ResponseTimeModel, limits: ManeuverLimits,
                   step: float = 0.01, severity: Optional[SeveritySettings] = None,
                   swerve_brakes: bool = True, debug: bool = False, seed: int = 0) -> NieonOutcome:
    """3候補の中から最良の結果を参照結果として返す

    候補は (衝突, 重傷, 最大 p(MAIS3+), 衝突時相対速度) の辞書順で比較し、
    同点は BrakeOnly < SwerveLeft < SwerveRight の順で決める。
    停止中で回避操舵が成立しない候補は制動のみの結果で代用する。

    Raises:
        PolicyFault: シミュレーションが失敗した場合（そのまま伝播）
    """
    severity = severity or SeveritySettings()
    reaction = reaction_time(scenario, rt_model)
    partner_kinds = tuple(t.kind for t in scenario.actor_trajectories)

    candidates: List[NieonCandidate] = []
    brake_outcome: Optional[CollisionOutcome] = None
    for maneuver in NieonManeuver:
        plan = ManeuverPlan(maneuver, reaction, limits, swerve_brakes)
        try:
            trace = simulate_plan(scenario, plan, step, seed)
        except DegenerateSpeed:
            logger.debug(f"{scenario.id}: 停止中のため {maneuver.value} は制動のみとして扱います")
            candidates.append(NieonCandidate(plan, brake_outcome or CollisionOutcome.no_collision(), True))
            continue
        outcome = score_trace_contact(trace.contact, partner_kinds, severity)
        if maneuver is NieonManeuver.BRAKE_ONLY:
            brake_outcome = outcome
        candidates.append(NieonCandidate(plan, outcome))

    best = min(candidates, key=_candidate_key)
    outcome = best.outcome
    return NieonOutcome(
        chosen_maneuver=best.plan.maneuver,
        collided=outcome.collided,
        contact=outcome.contact,
        severity=outcome.severities,
        serious_injury=outcome.serious_injury,
        response_time=reaction - scenario.stimulus.onset_time,
        plan=best.plan,
        candidates=tuple(candidates) if debug else (),
    )


def evaluate_nieon_for(scenario: ConcreteScenario, config: HarnessConfig, group: RoadUserGroup,
                       rt_model: Optional[ResponseTimeModel] = None, debug: bool = False) -> NieonOutcome:
    """ハーネス設定から道路利用者グループに応じた応答時間モデルで評価"""
    nieon = config.nieon
    return evaluate_nieon(
        scenario,
        rt_model or nieon.response_model(group),
        nieon.limits,
        step=config.sim.step,
        severity=config.severity,
        swerve_brakes=nieon.swerve_brakes,
        debug=debug,
        seed=config.seed,
    )


def evaluate_stringency(scenario: ConcreteScenario, config: HarnessConfig, group: RoadUserGroup,
                        deltas: Optional[Sequence[float]] = None) -> List[NieonOutcome]:
    """切片をずらした各応答時間モデルで参照結果を求める（z検定用）

    Raises:
        NonPositiveIntercept: ずらした切片が0以下になる場合
    """
    deltas = config.nieon.stringency_deltas if deltas is None else deltas
    models = stringency_variants(config.nieon.response_model(group), deltas)
    return [evaluate_nieon_for(scenario, config, group, model) for model in models]
