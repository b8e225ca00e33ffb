"""Case study configuration models."""

from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path


class DesignMode(str, Enum):
    CAPACITY = "capacity"
    TOPOLOGY = "topology"


@dataclass
class CaseConfig:
    """A bundled case study: which network, at which threshold, over which budgets."""

    name: str
    network: Path
    threshold: float
    description: str = ""
    samples: int = 1000
    design: DesignMode | None = None
    budgets: list[float] = field(default_factory=list)
    rbd: Path | None = None

    def __post_init__(self):
        """Ensure paths and the design mode have their proper types."""
        if isinstance(self.network, str):
            self.network = Path(self.network)
        if isinstance(self.rbd, str):
            self.rbd = Path(self.rbd)
        if isinstance(self.design, str):
            self.design = DesignMode(self.design)
        self.budgets = [float(b) for b in self.budgets]

    @property
    def topology(self) -> bool:
        """Whether the case designs candidate edges as well."""
        return self.design == DesignMode.TOPOLOGY

    def validate(self) -> tuple[bool, str]:
        """Validate the case configuration."""
        if not self.network.exists():
            return False, f"Network file does not exist: {self.network}"

        if self.rbd is not None and not self.rbd.exists():
            return False, f"RBD file does not exist: {self.rbd}"

        if self.threshold < 0:
            return False, f"Threshold must be non-negative: {self.threshold}"

        if self.samples < 1:
            return False, f"Samples must be at least 1: {self.samples}"

        if any(b < a for a, b in zip(self.budgets, self.budgets[1:])):
            return False, "Budgets must be sorted ascending"

        return True, "OK"
