"""Validator incentive model and one-slot Bayesian game for Ethereum PoS."""

__version__ = "0.1.0"
