"""relnet - network reliability estimation and reliability-optimal design."""

__version__ = "0.1.0"
