"""Experiment harness: configs, runs, sweeps, persisted artifacts and figures."""
from .config import RunConfig, load_config, parse_config
from .runner import RunArtifactSet, run, sweep, verify
