"""Cases module - bundled case study configuration."""

from relnet.cases.models import CaseConfig, DesignMode
from relnet.cases.registry import CaseNotFoundError, CaseRegistry

__all__ = ["CaseConfig", "CaseNotFoundError", "CaseRegistry", "DesignMode"]
