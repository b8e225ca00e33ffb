"""Network module - graph data model, incidence matrices and JSON io."""

from relnet.network.graph import (
    NetworkValidationError,
    ensure_valid,
    incidence,
    promote_to_candidates,
    validate,
    with_candidates,
)
from relnet.network.io import SchemaError, load_network, parse_network, save_network
from relnet.network.models import (
    AlwaysOn,
    Bernoulli,
    Edge,
    Exponential,
    Lifetime,
    Network,
    Node,
    NodeRole,
)

__all__ = [
    "AlwaysOn",
    "Bernoulli",
    "Edge",
    "Exponential",
    "Lifetime",
    "Network",
    "NetworkValidationError",
    "Node",
    "NodeRole",
    "SchemaError",
    "ensure_valid",
    "incidence",
    "load_network",
    "parse_network",
    "promote_to_candidates",
    "save_network",
    "validate",
    "with_candidates",
]
