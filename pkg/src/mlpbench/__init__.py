"""mlpbench: a benchmark lab for from-scratch MLP training strategies."""

__version__ = "0.1.0"
