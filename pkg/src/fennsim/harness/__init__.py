"""Experiment harness and the ``fenn-sim`` command line."""

from .experiments import ExperimentResult, ExperimentSpec, run_experiment

__all__ = ["ExperimentResult", "ExperimentSpec", "run_experiment"]
