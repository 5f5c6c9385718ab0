"""Experiment orchestration: configs, rate studies and the command line."""
