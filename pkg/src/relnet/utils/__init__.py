"""Utility modules."""

from relnet.utils.logging import setup_logging

__all__ = ["setup_logging"]
