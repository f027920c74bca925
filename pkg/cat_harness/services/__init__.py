"""
Services module for the evaluation harness.
Contains the scenario pipeline, simulation, scoring and reporting services.

Submodules are imported directly (e.g. ``cat_harness.services.scoring``) so that
worker processes and light-weight tools only load what they use.
"""
