"""
Controllers that orchestrate harness workflows.
"""

from .base import BaseController
from .evaluation_controller import EvaluationController

__all__ = ['BaseController', 'EvaluationController']
