"""
CAT Harness - scenario-based collision avoidance testing for automated driving policies.

This package provides:
- A scenario description language and combinatorial scenario generation
- Deterministic kinematic simulation of ego policies against scripted actors
- A non-impaired, eyes-on-conflict (NIEON) reference driver
- Collision severity scoring, acceptance checks and statistical diagnostics
- A plugin system for external ego policies
"""

__version__ = "1.0.0"
__author__ = "CAT Harness Team"

from .models.data_models import (
    ActorKind,
    RoadUserGroup,
    LogicalScenario,
    ConcreteScenario,
    TestRequest,
    ScenarioResult,
    ScoreTable,
    AcceptanceReport,
    EvaluationReport,
)

from .models.harness_settings import HarnessConfig, SettingsManager
from .models.taxonomy import SafetyGroup, SafetyGroupRegistry, default_taxonomy

from .services.error_handling import (
    HarnessError,
    ScenarioSyntaxError,
    ConfigurationError,
    DatabaseValidationError,
    PolicyFault,
    PolicyLoadError,
    IoFailure,
    ErrorHandlingService,
)

__all__ = [
    # Data models
    'ActorKind',
    'RoadUserGroup',
    'LogicalScenario',
    'ConcreteScenario',
    'TestRequest',
    'ScenarioResult',
    'ScoreTable',
    'AcceptanceReport',
    'EvaluationReport',

    # Settings and taxonomy
    'HarnessConfig',
    'SettingsManager',
    'SafetyGroup',
    'SafetyGroupRegistry',
    'default_taxonomy',

    # Services
    'ErrorHandlingService',

    # Exceptions
    'HarnessError',
    'ScenarioSyntaxError',
    'ConfigurationError',
    'DatabaseValidationError',
    'PolicyFault',
    'PolicyLoadError',
    'IoFailure',
]
