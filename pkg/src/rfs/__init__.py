"""Random-feature spectral regularization: filters, estimators and experiment harness."""

__version__ = "0.1.0"
