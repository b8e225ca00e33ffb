"""Registry of bundled case studies."""

from pathlib import Path

import structlog
import yaml

from relnet.cases.models import CaseConfig

logger = structlog.get_logger()


class CaseNotFoundError(ValueError):
    """Raised when a case is not found in the registry."""

    pass


class CaseRegistry:
    """Case studies declared in a YAML file; relative paths resolve against that file."""

    def __init__(self):
        self.cases: dict[str, CaseConfig] = {}
        self.default_case: str | None = None

    def load_from_yaml(self, config_path: str | Path) -> None:
        """Load cases from YAML configuration file."""
        config_path = Path(config_path)

        if not config_path.exists():
            raise FileNotFoundError(f"Cases config file not found: {config_path}")

        with open(config_path, encoding="utf-8") as f:
            config = yaml.safe_load(f)

        if not config:
            raise ValueError("Empty cases configuration file")

        base = config_path.parent
        self.default_case = config.get("default_case")

        for case_data in config.get("cases", []):
            try:
                case = CaseConfig(
                    name=case_data["name"],
                    network=base / case_data["network"],
                    threshold=float(case_data["threshold"]),
                    description=case_data.get("description", ""),
                    samples=int(case_data.get("samples", 1000)),
                    design=case_data.get("design"),
                    budgets=case_data.get("budgets", []),
                    rbd=base / case_data["rbd"] if case_data.get("rbd") else None,
                )
            except KeyError as e:
                raise ValueError(f"Case entry is missing field {e}") from e

            # Validate case configuration
            is_valid, error_msg = case.validate()
            if not is_valid:
                logger.warning("Invalid case configuration", case=case.name, error=error_msg)

            self.cases[case.name] = case
            logger.debug("Registered case", case=case.name, network=str(case.network))

        if not self.cases:
            raise ValueError("No cases configured")

        if self.default_case is None:
            self.default_case = next(iter(self.cases.keys()))

    def get(self, name: str | None = None) -> CaseConfig:
        """Get case by name or return default."""
        if name is None:
            name = self.default_case

        if name not in self.cases:
            available = ", ".join(self.cases.keys())
            raise CaseNotFoundError(f"Unknown case: '{name}'. Available cases: {available}")

        return self.cases[name]

    def __len__(self) -> int:
        return len(self.cases)

    def __contains__(self, name: str) -> bool:
        return name in self.cases
