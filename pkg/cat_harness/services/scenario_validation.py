"""
concreteシナリオの構造検証

違反は例外ではなくデータ（ValidationViolation）として報告する。
"""

import math
from typing import Collection, List, Optional

from ..models.data_models import ConcreteScenario, ValidationReport, ValidationViolation
from ..models.taxonomy import SafetyGroupRegistry


TIME_TOLERANCE = 1e-9


def _trajectory_violations(scenario: ConcreteScenario) -> List[ValidationViolation]:
    violations = []
    for a, trajectory in enumerate(scenario.actor_trajectories):
        path = f"actor_trajectories[{a}]"
        samples = trajectory.samples
        if not samples:
            violations.append(ValidationViolation("trajectory coverage", f"{path}.samples", "no samples"))
            continue
        times = [s.t for s in samples]
        for k in range(1, len(times)):
            if not times[k] > times[k - 1]:
                violations.append(ValidationViolation(
                    "non-monotone time", f"{path}.samples[{k}].t",
                    f"t={times[k]} does not increase over t={times[k - 1]}"))
                break
        if abs(times[0]) > TIME_TOLERANCE or times[-1] < scenario.duration - TIME_TOLERANCE:
            violations.append(ValidationViolation(
                "trajectory coverage", f"{path}.samples",
                f"samples cover [{times[0]}, {times[-1]}], duration is {scenario.duration}"))
        for k, sample in enumerate(samples):
            values = (sample.t, sample.x, sample.y, sample.heading, sample.speed)
            if not all(math.isfinite(v) for v in values):
                violations.append(ValidationViolation("finite values", f"{path}.samples[{k}]"))
                break
            if sample.speed < 0.0:
                violations.append(ValidationViolation("non-negative speed", f"{path}.samples[{k}].speed"))
                break
            if not -math.pi <= sample.heading < math.pi:
                violations.append(ValidationViolation("heading range", f"{path}.samples[{k}].heading"))
                break
    return violations


def validate_concrete(scenario: ConcreteScenario, registry: SafetyGroupRegistry,
                      test_requests: Optional[Collection[str]] = None) -> ValidationReport:
    """型の不変条件と参照の解決を検証する

    Args:
        scenario: 検証するシナリオ
        registry: セーフティグループのレジストリ
        test_requests: 既知のテストリクエストID（None なら参照を検証しない）
    """
    violations: List[ValidationViolation] = []

    if not scenario.id:
        violations.append(ValidationViolation("non-empty id", "id"))
    if not (math.isfinite(scenario.duration) and scenario.duration > 0.0):
        violations.append(ValidationViolation("positive duration", "duration", f"duration={scenario.duration}"))
    if not scenario.actor_trajectories:
        violations.append(ValidationViolation("at least one actor", "actor_trajectories"))
    if len(scenario.footprints) != len(scenario.actor_trajectories):
        violations.append(ValidationViolation(
            "footprint per actor", "footprints",
            f"{len(scenario.footprints)} footprints for {len(scenario.actor_trajectories)} actors"))
    for index, footprint in enumerate(scenario.footprints):
        if not (footprint.length > 0.0 and footprint.width > 0.0):
            violations.append(ValidationViolation("positive footprint", f"footprints[{index}]"))

    ego = scenario.ego_start
    if not all(math.isfinite(v) for v in (ego.x, ego.y, ego.heading, ego.speed, ego.accel, ego.curvature)):
        violations.append(ValidationViolation("finite values", "ego_start"))
    elif ego.speed < 0.0:
        violations.append(ValidationViolation("non-negative speed", "ego_start.speed"))

    stimulus = scenario.stimulus
    if stimulus.end_time < stimulus.onset_time:
        violations.append(ValidationViolation(
            "stimulus ordering", "stimulus.end_time",
            f"end {stimulus.end_time} precedes onset {stimulus.onset_time}"))
    for name in ("onset_time", "end_time"):
        value = getattr(stimulus, name)
        if not (-TIME_TOLERANCE <= value <= scenario.duration + TIME_TOLERANCE):
            violations.append(ValidationViolation(
                "stimulus within duration", f"stimulus.{name}", f"{value} outside [0, {scenario.duration}]"))

    violations.extend(_trajectory_violations(scenario))

    if scenario.safety_group not in registry:
        violations.append(ValidationViolation(
            "registered safety group", "safety_group", f"'{scenario.safety_group}' is not registered"))
    if test_requests is not None and scenario.test_request not in test_requests:
        violations.append(ValidationViolation(
            "test request reference", "test_request", f"'{scenario.test_request}' is not in the database"))

    return ValidationReport(scenario.id, tuple(violations))
