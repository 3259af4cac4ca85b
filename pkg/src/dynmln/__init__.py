"""Bayesian dynamic multilayer latent space models for binary networks."""
from .netdata import CellTable, DynMultiNet, HoldoutSpec, apply_holdout, load_network, write_network
from .sampler import FitConfig, PosteriorChain, competitor_configs, run_chain

__version__ = "0.1.0"

__all__ = [
    "CellTable", "DynMultiNet", "HoldoutSpec", "apply_holdout", "load_network", "write_network",
    "FitConfig", "PosteriorChain", "competitor_configs", "run_chain",
]
