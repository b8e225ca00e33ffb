"""Monte-Carlo failure scenarios and the perturbed incidence structure."""

import itertools
import math
from dataclasses import dataclass

import numpy as np
import structlog

from relnet.network.graph import incidence
from relnet.network.io import SchemaError
from relnet.network.models import Bernoulli, Exponential, Lifetime, Network

logger = structlog.get_logger()

MAX_ENUMERATED_COMPONENTS = 20


@dataclass(frozen=True, eq=False)
class Scenario:
    """One joint binary survival realization (1 = survives)."""

    index: int
    xi_nodes: np.ndarray
    xi_edges: np.ndarray

    def __eq__(self, other) -> bool:
        if not isinstance(other, Scenario):
            return NotImplemented
        return (
            self.index == other.index
            and np.array_equal(self.xi_nodes, other.xi_nodes)
            and np.array_equal(self.xi_edges, other.xi_edges)
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class ScenarioSet:
    """The sample set K, stored as K x |N| and K x |E| survival matrices.

    `weights` are scenario probabilities (uniform when None). `node_lifetimes` and
    `edge_lifetimes` keep the sampled lifetimes so the set can be re-thresholded.
    """

    xi_nodes: np.ndarray
    xi_edges: np.ndarray
    seed: int | None
    threshold: float
    weights: np.ndarray | None = None
    node_lifetimes: np.ndarray | None = None
    edge_lifetimes: np.ndarray | None = None

    def __len__(self) -> int:
        return int(self.xi_nodes.shape[0])

    def __getitem__(self, k: int) -> Scenario:
        return Scenario(index=k, xi_nodes=self.xi_nodes[k], xi_edges=self.xi_edges[k])

    def __iter__(self):
        return (self[k] for k in range(len(self)))

    def __eq__(self, other) -> bool:
        if not isinstance(other, ScenarioSet):
            return NotImplemented
        return (
            self.seed == other.seed
            and self.threshold == other.threshold
            and np.array_equal(self.xi_nodes, other.xi_nodes)
            and np.array_equal(self.xi_edges, other.xi_edges)
            and np.array_equal(self.probabilities, other.probabilities)
        )

    __hash__ = None

    @property
    def probabilities(self) -> np.ndarray:
        """p_k per scenario: the weights, or uniform 1/K."""
        if self.weights is not None:
            return self.weights
        return np.full(len(self), 1.0 / len(self))

    def rethreshold(self, threshold: float) -> "ScenarioSet":
        """Masks for another threshold over the same lifetime draw."""
        if self.node_lifetimes is None or self.edge_lifetimes is None:
            raise ValueError("scenario set carries no lifetimes")
        return ScenarioSet(
            xi_nodes=(self.node_lifetimes > threshold).astype(np.uint8),
            xi_edges=(self.edge_lifetimes > threshold).astype(np.uint8),
            seed=self.seed,
            threshold=threshold,
            weights=self.weights,
            node_lifetimes=self.node_lifetimes,
            edge_lifetimes=self.edge_lifetimes,
        )

    def check_dimensions(self, network: Network) -> None:
        """Raise ValueError unless the masks match the network sizes."""
        if self.xi_nodes.shape[1] != len(network.nodes):
            raise ValueError(
                f"scenario node vectors have length {self.xi_nodes.shape[1]}, "
                f"network has {len(network.nodes)} nodes"
            )
        if self.xi_edges.shape[1] != len(network.edges):
            raise ValueError(
                f"scenario edge vectors have length {self.xi_edges.shape[1]}, "
                f"network has {len(network.edges)} edges"
            )


def scenario_rng(seed: int, k: int) -> np.random.Generator:
    """Counter-based stream for scenario k, independent of generation order."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(k,))))


def _draw_lifetimes(lifetimes: list[Lifetime], uniforms: np.ndarray) -> np.ndarray:
    draws = np.empty(len(lifetimes))
    for i, (lifetime, u) in enumerate(zip(lifetimes, uniforms)):
        if isinstance(lifetime, Exponential):
            draws[i] = -lifetime.mean * math.log1p(-u)
        elif isinstance(lifetime, Bernoulli):
            draws[i] = math.inf if u < lifetime.survive_prob else 0.0
        else:
            draws[i] = math.inf
    return draws


def sample_scenarios(
    network: Network,
    count: int,
    threshold_years: float,
    seed: int,
) -> ScenarioSet:
    """Draw `count` scenarios; a component survives iff its lifetime exceeds the threshold."""
    if count < 1:
        raise ValueError("scenario count must be at least 1")
    if threshold_years < 0:
        raise ValueError("threshold must be non-negative")

    lifetimes = [n.lifetime for n in network.nodes] + [e.lifetime for e in network.edges]
    n_nodes = len(network.nodes)
    draws = np.empty((count, len(lifetimes)))
    for k in range(count):
        uniforms = scenario_rng(seed, k).random(len(lifetimes))
        draws[k] = _draw_lifetimes(lifetimes, uniforms)

    node_lifetimes, edge_lifetimes = draws[:, :n_nodes], draws[:, n_nodes:]
    scenarios = ScenarioSet(
        xi_nodes=(node_lifetimes > threshold_years).astype(np.uint8),
        xi_edges=(edge_lifetimes > threshold_years).astype(np.uint8),
        seed=seed,
        threshold=threshold_years,
        node_lifetimes=node_lifetimes,
        edge_lifetimes=edge_lifetimes,
    )
    logger.info(
        "Sampled scenarios",
        network=network.name,
        count=count,
        threshold=threshold_years,
        seed=seed,
        node_survival=round(float(scenarios.xi_nodes.mean()), 4) if n_nodes else 1.0,
    )
    return scenarios


def enumerate_scenarios(network: Network, threshold_years: float) -> ScenarioSet:
    """Every survival mask of the uncertain components, weighted by its exact probability."""
    lifetimes = [n.lifetime for n in network.nodes] + [e.lifetime for e in network.edges]
    probs = np.array([lt.survival(threshold_years) for lt in lifetimes])
    uncertain = [i for i, p in enumerate(probs) if 0.0 < p < 1.0]
    if len(uncertain) > MAX_ENUMERATED_COMPONENTS:
        raise ValueError(
            f"{len(uncertain)} uncertain components; enumeration supports at most "
            f"{MAX_ENUMERATED_COMPONENTS}"
        )

    base = (probs >= 1.0).astype(np.uint8)
    states = np.array(list(itertools.product((1, 0), repeat=len(uncertain))), dtype=np.uint8)
    states = states.reshape(2 ** len(uncertain), len(uncertain))
    masks = np.tile(base, (len(states), 1))
    masks[:, uncertain] = states

    p = probs[uncertain]
    weights = np.prod(np.where(states == 1, p, 1.0 - p), axis=1)

    n_nodes = len(network.nodes)
    logger.debug("Enumerated scenarios", network=network.name, masks=len(masks))
    return ScenarioSet(
        xi_nodes=masks[:, :n_nodes],
        xi_edges=masks[:, n_nodes:],
        seed=None,
        threshold=threshold_years,
        weights=weights,
    )


def candidate_mask(network: Network, active_candidates: np.ndarray | None) -> np.ndarray:
    """Column mask over Ē: 1 for base edges, v_e for candidate edges."""
    mask = np.ones(len(network.edges))
    candidates = [j for j, e in enumerate(network.edges) if e.is_candidate]
    if active_candidates is not None:
        active_candidates = np.asarray(active_candidates, dtype=float)
        if active_candidates.shape != (len(candidates),):
            raise ValueError(
                f"expected {len(candidates)} candidate indicators, got {active_candidates.shape}"
            )
        mask[candidates] = active_candidates
    return mask


def perturbed_incidence(
    network: Network,
    scenario: Scenario,
    active_candidates: np.ndarray | None = None,
) -> np.ndarray:
    """Ξ_N Ā Ξ_E with candidate columns additionally scaled by v."""
    matrix = incidence(network)
    columns = np.asarray(scenario.xi_edges, dtype=float)
    columns = columns * candidate_mask(network, active_candidates)
    return matrix * np.asarray(scenario.xi_nodes, dtype=float)[:, None] * columns[None, :]


def effective_edge_mask(network: Network, scenario: Scenario) -> np.ndarray:
    """Edges able to carry flow: the edge and both of its endpoints survive."""
    index = network.node_index
    tails = np.array([index[e.tail] for e in network.edges], dtype=int)
    heads = np.array([index[e.head] for e in network.edges], dtype=int)
    xi_nodes = np.asarray(scenario.xi_nodes)
    if len(network.edges) == 0:
        return np.zeros(0, dtype=np.uint8)
    return (np.asarray(scenario.xi_edges) & xi_nodes[tails] & xi_nodes[heads]).astype(np.uint8)


def unique_patterns(scenarios: ScenarioSet) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Distinct (ξ_N, ξ_E) rows, the pattern index of every scenario, and pattern weights."""
    stacked = np.hstack([scenarios.xi_nodes, scenarios.xi_edges])
    patterns, inverse = np.unique(stacked, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    weights = np.bincount(inverse, weights=scenarios.probabilities, minlength=len(patterns))
    return patterns, inverse, weights


def scenarios_to_json(scenarios: ScenarioSet) -> list[dict]:
    """One {k, xi_nodes, xi_edges} entry per scenario."""
    return [
        {
            "k": k,
            "xi_nodes": [int(x) for x in scenarios.xi_nodes[k]],
            "xi_edges": [int(x) for x in scenarios.xi_edges[k]],
        }
        for k in range(len(scenarios))
    ]


def scenarios_from_json(
    data: list[dict],
    network: Network,
    threshold: float = math.nan,
    seed: int | None = None,
) -> ScenarioSet:
    """Rebuild a ScenarioSet exported by `scenarios_to_json`, checking dimensions."""
    if not isinstance(data, list) or not data:
        raise SchemaError("scenarios", "expected a nonempty list")
    rows_n, rows_e = [], []
    for i, entry in enumerate(sorted(data, key=lambda item: item.get("k", 0))):
        xi_n, xi_e = entry.get("xi_nodes"), entry.get("xi_edges")
        if not isinstance(xi_n, list) or len(xi_n) != len(network.nodes):
            raise SchemaError(f"scenarios[{i}].xi_nodes", f"expected {len(network.nodes)} entries")
        if not isinstance(xi_e, list) or len(xi_e) != len(network.edges):
            raise SchemaError(f"scenarios[{i}].xi_edges", f"expected {len(network.edges)} entries")
        if any(x not in (0, 1) for x in xi_n + xi_e):
            raise SchemaError(f"scenarios[{i}]", "entries must be 0 or 1")
        rows_n.append(xi_n)
        rows_e.append(xi_e)
    return ScenarioSet(
        xi_nodes=np.array(rows_n, dtype=np.uint8).reshape(len(rows_n), len(network.nodes)),
        xi_edges=np.array(rows_e, dtype=np.uint8).reshape(len(rows_e), len(network.edges)),
        seed=seed,
        threshold=threshold,
    )

