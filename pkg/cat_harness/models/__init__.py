"""
Domain types for the evaluation harness.
"""

from .data_models import (
    ActorKind,
    RoadUserGroup,
    ImpactZone,
    FunctionalScenario,
    LogicalScenario,
    ParameterRange,
    OddProfile,
    SamplingPlan,
    ConcreteScenario,
    TestRequest,
    SimTrace,
    CollisionOutcome,
    NieonOutcome,
    ScenarioResult,
    GroupScore,
    ScoreTable,
    AcceptanceReport,
    EvaluationReport,
)

from .taxonomy import SafetyGroup, SafetyGroupRegistry, default_taxonomy
from .harness_settings import HarnessConfig, SettingsManager, get_harness_config

__all__ = [
    'ActorKind',
    'RoadUserGroup',
    'ImpactZone',
    'FunctionalScenario',
    'LogicalScenario',
    'ParameterRange',
    'OddProfile',
    'SamplingPlan',
    'ConcreteScenario',
    'TestRequest',
    'SimTrace',
    'CollisionOutcome',
    'NieonOutcome',
    'ScenarioResult',
    'GroupScore',
    'ScoreTable',
    'AcceptanceReport',
    'EvaluationReport',
    'SafetyGroup',
    'SafetyGroupRegistry',
    'default_taxonomy',
    'HarnessConfig',
    'SettingsManager',
    'get_harness_config',
]
