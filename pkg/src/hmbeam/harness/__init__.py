"""Experiment configuration, Monte Carlo sweeps, CSV output and the CLI."""
