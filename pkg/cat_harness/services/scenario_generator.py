"""
シナリオ生成

語彙とODDプロファイルからの functional シナリオの組み合わせ列挙、衝突不可能な組み合わせの除外、
logical シナリオからの concrete シナリオ生成（グリッド / ラテン超方格）、
ODD変更時のカバレッジ差分を提供する。
"""

import itertools
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

import numpy as np
from scipy.stats import qmc

from ..models.data_models import (
    ActorSpec,
    CategoryKey,
    ConcreteScenario,
    CoverageDiff,
    FunctionalScenario,
    LogicalScenario,
    ManeuverSpec,
    OddProfile,
    ParameterRange,
    SamplingMode,
    SamplingPlan,
    ScenarioCategory,
)
from ..models.taxonomy import SafetyGroupRegistry, derive_conflict_type
from .error_handling import UnmappedConflict, UnmappedPair
from .layout_library import LayoutLibrary
from .logging_config import get_harness_logger, log_performance
from .trajectory_templates import EGO_FOOTPRINT, TrajectorySynthesizer
from .vocabulary import Vocabulary


logger = get_harness_logger("generation")


# ---------------------------------------------------------------------------
# 組み合わせ列挙
# ---------------------------------------------------------------------------

def salient_subsets(factors: Sequence[str], limit: int) -> List[Tuple[str, ...]]:
    """サイズ limit 以下の顕著要因の部分集合（空集合を含む）"""
    ordered = sorted(set(factors))
    subsets: List[Tuple[str, ...]] = []
    for size in range(0, min(limit, len(ordered)) + 1):
        subsets.extend(itertools.combinations(ordered, size))
    return subsets


def combination_id(ego: str, actor: ActorSpec, layout: str, salient: Sequence[str]) -> str:
    spec = actor.maneuver
    placement = spec.start_location
    if spec.end_location != spec.start_location:
        placement += f"-{spec.end_location}"
    parts = [ego, f"{actor.kind.value}_{spec.maneuver}_{placement}", layout]
    if salient:
        parts.append("+".join(salient))
    return "__".join(parts)


def enumerate_combinations(vocab: Vocabulary, odd: OddProfile, salient_limit: int = 2,
                           sweep_placements: bool = False) -> List[FunctionalScenario]:
    """ODDで許される語彙の直積を functional シナリオとして列挙

    自車操作 × アクター種別 × アクター操作（× 配置）× レイアウト × 顕著要因の部分集合。
    sweep_placements が False のときアクター操作は標準配置のみ。結果は id 順で重複なし。
    """
    layouts = [layout for layout in vocab.layout_classes if layout in odd.allowed_layout_classes]
    factors = [f for f in vocab.salient_factors if f in odd.present_salient_factors]
    subsets = salient_subsets(factors, salient_limit)

    scenarios: Dict[str, FunctionalScenario] = {}
    for ego, kind, maneuver, layout in itertools.product(vocab.ego_maneuvers, vocab.actor_kinds,
                                                         vocab.maneuvers, layouts):
        if odd.excludes_maneuver(ego, layout):
            continue
        placements = vocab.placements_for(maneuver)
        for start, end in (placements if sweep_placements else placements[:1]):
            actor = ActorSpec(kind, ManeuverSpec(maneuver, start, end))
            conflict_type = derive_conflict_type(ego, kind, maneuver, start)
            for subset in subsets:
                scenario_id = combination_id(ego, actor, layout, subset)
                scenarios[scenario_id] = FunctionalScenario(
                    id=scenario_id,
                    ego_maneuver=ManeuverSpec(ego, "within_lane", "within_lane"),
                    actors=(actor,),
                    layout_class=layout,
                    salient_factors=frozenset(subset),
                    conflict_type=conflict_type,
                )
    return [scenarios[key] for key in sorted(scenarios)]


# ---------------------------------------------------------------------------
# 衝突可能性フィルタ
# ---------------------------------------------------------------------------

def lookup_feasibility(scenario: FunctionalScenario, vocab: Vocabulary, layouts: LayoutLibrary) -> bool:
    """(自車操作, アクター操作, 開始位置) をルール表で引く

    Raises:
        UnmappedPair: ルール表に組が無い場合
    """
    rules = layouts.feasibility_rules(vocab.ego_maneuvers, vocab.placements)
    spec = scenario.partner.maneuver
    key = (scenario.ego_maneuver.maneuver, spec.maneuver, spec.start_location)
    if key not in rules:
        raise UnmappedPair(*key)
    return rules[key]


def filter_conflict_feasible(scenario: FunctionalScenario, vocab: Vocabulary, layouts: LayoutLibrary) -> bool:
    """経路が交差しうる組み合わせなら True（ルール表に無い組は保守的に True）"""
    try:
        return lookup_feasibility(scenario, vocab, layouts)
    except UnmappedPair as e:
        logger.warning(f"実現可能性ルールが未定義のため含めます: {scenario.id}: {e}")
        return True


# ---------------------------------------------------------------------------
# concreteシナリオ生成
# ---------------------------------------------------------------------------

def parameter_valuations(ranges: Dict[str, ParameterRange], plan: SamplingPlan) -> List[Dict[str, float]]:
    """サンプリング計画に従うパラメータ値の組（グリッドでは seed を使わない）"""
    names = sorted(ranges)
    if plan.mode is SamplingMode.GRID:
        grids = [ranges[name].grid_values() for name in names]
        return [dict(zip(names, combo)) for combo in itertools.product(*grids)]

    sampler = qmc.LatinHypercube(d=len(names), seed=plan.seed)
    unit = sampler.random(n=plan.samples)
    lower = np.array([ranges[name].minimum for name in names])
    upper = np.array([ranges[name].maximum for name in names])
    points = lower + unit * (upper - lower)
    return [{name: round(float(value), 9) for name, value in zip(names, row)} for row in points]


def category_of(functional: FunctionalScenario) -> ScenarioCategory:
    return ScenarioCategory(
        functional_id=functional.id,
        conflict_type=functional.conflict_type,
        layout_class=functional.layout_class,
        ego_maneuver=functional.ego_maneuver.maneuver,
        actor_maneuvers=tuple(a.maneuver.maneuver for a in functional.actors),
        actor_start_locations=tuple(a.maneuver.start_location for a in functional.actors),
        salient_factors=tuple(sorted(functional.salient_factors)),
    )


def assign_safety_group(scenario: ConcreteScenario, registry: SafetyGroupRegistry) -> str:
    """(衝突タイプ, 衝突相手) からセーフティグループを決める

    Raises:
        UnmappedConflict: 対応するルールが無い場合
    """
    conflict_type = scenario.category.conflict_type if scenario.category is not None else ""
    if not conflict_type:
        raise UnmappedConflict("<none>", scenario.partner_kind.value)
    return registry.resolve(conflict_type, scenario.partner_kind)


@log_performance
def instantiate_concrete(logical: LogicalScenario, plan: SamplingPlan, layouts: LayoutLibrary,
                         registry: Optional[SafetyGroupRegistry] = None, test_request: str = "",
                         sample_interval: float = 0.05, post_conflict_time: float = 3.0) -> List[ConcreteScenario]:
    """logical シナリオから concrete シナリオを生成（id 順）

    Raises:
        EmptyRange: 範囲が不正、または必要なパラメータが無い場合
        LayoutUnavailable: レイアウトクラスがライブラリに無い場合
        UnmappedConflict: registry を渡したときにグループが決まらない場合
    """
    logical.validate()
    ranges = {**logical.parameter_ranges, **plan.overrides}
    for name in sorted(plan.overrides):
        ranges[name].check(name)
    functional = logical.functional
    layouts.get(functional.layout_class)

    synthesizer = TrajectorySynthesizer(layouts, sample_interval, post_conflict_time)
    category = category_of(functional)
    request = test_request or f"TR-{logical.id}"

    scenarios = []
    for index, values in enumerate(parameter_valuations(ranges, plan)):
        motion = synthesizer.synthesize(functional, values)
        scenario = ConcreteScenario(
            id=f"{logical.id}-{index:04d}",
            logical_parent=logical.id,
            test_request=request,
            ego_start=motion.ego_start,
            actor_trajectories=motion.actor_trajectories,
            stimulus=motion.stimulus,
            safety_group="",
            footprints=motion.footprints,
            duration=motion.duration,
            ego_footprint=EGO_FOOTPRINT,
            ego_route=motion.ego_route,
            parameters=dict(values),
            category=category,
        )
        if registry is not None:
            scenario = scenario.with_safety_group(assign_safety_group(scenario, registry))
        scenarios.append(scenario)
    logger.debug(f"{logical.id}: {len(scenarios)} 件の concrete シナリオを生成しました")
    return sorted(scenarios, key=lambda s: s.id)


# ---------------------------------------------------------------------------
# ODD差分
# ---------------------------------------------------------------------------

def category_key(scenario: ConcreteScenario) -> Optional[CategoryKey]:
    category = scenario.category
    if category is None:
        return None
    return CategoryKey(category.ego_maneuver, scenario.partner_kind.value, category.actor_maneuvers[0],
                       category.actor_start_locations[0] if category.actor_start_locations else "",
                       category.layout_class, tuple(category.salient_factors))


def functional_key(functional: FunctionalScenario) -> CategoryKey:
    spec = functional.partner.maneuver
    return CategoryKey(functional.ego_maneuver.maneuver, functional.partner.kind.value, spec.maneuver,
                       spec.start_location, functional.layout_class, tuple(sorted(functional.salient_factors)))


def consistent_with(scenario: ConcreteScenario, odd: OddProfile) -> bool:
    """シナリオが ODD の範囲内か（速度上限・レイアウト・除外操作・顕著要因）"""
    if scenario.ego_start.speed > odd.max_speed_limit + 1e-9:
        return False
    category = scenario.category
    if category is None:
        return True
    if category.layout_class not in odd.allowed_layout_classes:
        return False
    if odd.excludes_maneuver(category.ego_maneuver, category.layout_class):
        return False
    return set(category.salient_factors) <= odd.present_salient_factors


def _feasible_keys(vocab: Vocabulary, odd: OddProfile, layouts: LayoutLibrary, salient_limit: int,
                   sweep_placements: bool) -> Set[CategoryKey]:
    return {functional_key(f) for f in enumerate_combinations(vocab, odd, salient_limit, sweep_placements)
            if filter_conflict_feasible(f, vocab, layouts)}


def diff_odd_coverage(scenarios: Iterable[ConcreteScenario], old_odd: OddProfile, new_odd: OddProfile,
                      vocab: Vocabulary, layouts: LayoutLibrary, salient_limit: int = 2,
                      sweep_placements: bool = False) -> CoverageDiff:
    """ODD変更時のカバレッジ差分

    既存シナリオを新ODDに引き継げるもの（carried_over）と外れるもの（excluded）に分け、
    新ODDで初めて実現可能になった組み合わせのうちシナリオが1件も無いものを gap_categories に挙げる。
    """
    scenarios = list(scenarios)
    carried, excluded = [], []
    for scenario in scenarios:
        (carried if consistent_with(scenario, new_odd) else excluded).append(scenario.id)

    present = {key for key in (category_key(s) for s in scenarios) if key is not None}
    new_keys = _feasible_keys(vocab, new_odd, layouts, salient_limit, sweep_placements)
    old_keys = _feasible_keys(vocab, old_odd, layouts, salient_limit, sweep_placements)
    gaps = sorted(new_keys - old_keys - present,
                  key=lambda k: (k.ego_maneuver, k.actor_kind, k.actor_maneuver, k.start_location,
                                 k.layout_class, k.salient_factors))
    return CoverageDiff(tuple(sorted(carried)), tuple(sorted(excluded)), tuple(gaps))
