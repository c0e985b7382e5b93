"""Graph-convolutional actor-critic network.

Three GCN layers ``H <- elu(D^-1/2 (A + I) D^-1/2 H W)`` over inverse-degree
node features, followed by a weight-shared two-layer head that scores every
node and a two-layer value head over the mean node embedding.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .graph import Graph, make_rng

FEATURE_VERSION = "inverse-degree-v1"

# ties within this relative distance of the best logit count as equal
GREEDY_TIE_RTOL = 1e-12


@dataclass(frozen=True)
class NetConfig:
    in_dim: int = 1
    hidden: int = 64
    gcn_layers: int = 3
    feature: str = FEATURE_VERSION

    def to_json(self) -> str:
        return json.dumps(
            {"in_dim": self.in_dim, "hidden": self.hidden, "gcn_layers": self.gcn_layers, "feature": self.feature},
            indent=2,
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "NetConfig":
        return cls(**json.loads(text))


def _glorot(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


class PolicyNet:
    """Parameters live in :attr:`params`, an insertion-ordered name -> Tensor map."""

    def __init__(self, config: NetConfig | None = None, seed: int = 0):
        self.config = config or NetConfig()
        c = self.config
        rng = make_rng(seed)
        p: dict[str, Tensor] = {}
        dims = [c.in_dim] + [c.hidden] * c.gcn_layers
        for i in range(c.gcn_layers):
            p[f"gcn.{i}.weight"] = _glorot(rng, dims[i], dims[i + 1])
        for head in ("policy", "value"):
            p[f"{head}.0.weight"] = _glorot(rng, c.hidden, c.hidden)
            p[f"{head}.0.bias"] = np.zeros((1, c.hidden))
            p[f"{head}.1.weight"] = _glorot(rng, c.hidden, 1)
            p[f"{head}.1.bias"] = np.zeros((1, 1))
        self.params = {k: Tensor(v, requires_grad=True, name=k) for k, v in p.items()}

    def parameters(self) -> list[Tensor]:
        return list(self.params.values())

    def zero_grad(self) -> None:
        for t in self.params.values():
            t.zero_grad()

    def state_dict(self) -> dict[str, np.ndarray]:
        return {k: t.data.copy() for k, t in self.params.items()}

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        missing = set(self.params) - set(state)
        if missing:
            raise ValueError(f"checkpoint lacks parameters {sorted(missing)}")
        for k, t in self.params.items():
            if state[k].shape != t.shape:
                raise ValueError(f"shape mismatch for {k}: {state[k].shape} vs {t.shape}")
            t.data = np.array(state[k], dtype=ad.DTYPE)
            t.zero_grad()

    def num_parameters(self) -> int:
        return sum(t.data.size for t in self.params.values())


# ---------------------------------------------------------------------------


@dataclass
class GraphInputs:
    adjacency: np.ndarray  # D^-1/2 (A + I) D^-1/2
    features: np.ndarray  # (n, 1) inverse degrees
    node_ids: list[int]
    index: dict[int, int] = field(default_factory=dict)


def build_inputs(g: Graph) -> GraphInputs:
    """Dense normalized adjacency and inverse-degree features, rows in node order.

    Isolated nodes get feature 1.0.
    """
    n = g.num_nodes()
    if n == 0:
        raise ValueError("cannot build inputs for an empty graph")
    ids = g.nodes
    index = {u: i for i, u in enumerate(ids)}
    a = np.eye(n)
    deg = np.empty(n)
    for u in ids:
        i = index[u]
        nbrs = g.neighbors(u)
        for v in nbrs:
            a[i, index[v]] = 1.0
        deg[i] = len(nbrs)
    d = 1.0 / np.sqrt(a.sum(axis=1))
    norm = a * d[:, None] * d[None, :]
    feats = (1.0 / np.maximum(deg, 1.0)).reshape(n, 1)
    return GraphInputs(norm, feats, ids, index)


@dataclass
class PolicyOutput:
    logits: Tensor  # (n,)
    value: Tensor  # (1, 1)
    node_ids: list[int]


def _mlp(x: Tensor, p: dict[str, Tensor], head: str) -> Tensor:
    h = ad.elu(ad.add(ad.matmul(x, p[f"{head}.0.weight"]), p[f"{head}.0.bias"]))
    return ad.add(ad.matmul(h, p[f"{head}.1.weight"]), p[f"{head}.1.bias"])


def embed(net: PolicyNet, inputs: GraphInputs) -> Tensor:
    adj = Tensor(inputs.adjacency)
    h = Tensor(inputs.features)
    for i in range(net.config.gcn_layers):
        h = ad.elu(ad.matmul(adj, ad.matmul(h, net.params[f"gcn.{i}.weight"])))
    return h


def forward(net: PolicyNet, g: Graph) -> PolicyOutput:
    inputs = build_inputs(g)
    h = embed(net, inputs)
    logits = ad.reshape(_mlp(h, net.params, "policy"), (len(inputs.node_ids),))
    value = _mlp(ad.mean_rows(h), net.params, "value")
    return PolicyOutput(logits, value, inputs.node_ids)


def action_distribution(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max()
    e = np.exp(z)
    return e / e.sum()


def entropy(p: np.ndarray) -> float:
    nz = p[p > 0]
    return float(-(nz * np.log(nz)).sum())


def sample_index(p: np.ndarray, rng: np.random.Generator) -> int:
    """Inverse-CDF draw of one index from ``p``; consumes exactly one uniform."""
    i = int(np.searchsorted(np.cumsum(p), rng.random() * p.sum(), side="right"))
    return min(i, len(p) - 1)


@dataclass
class Action:
    node: int
    log_prob: float
    value: float
    entropy: float
    probs: np.ndarray
    node_ids: list[int]


def act(net: PolicyNet, g: Graph, mode: str = "sample", rng: np.random.Generator | int | None = None) -> Action:
    """Pick the next node to eliminate.

    ``sample`` draws from the softmax over node logits using ``rng``;
    ``greedy`` takes the highest logit, lowest node id on ties.
    """
    out = forward(net, g)
    logits = out.logits.data
    p = action_distribution(logits)
    z = logits - logits.max()
    logp = z - np.log(np.exp(z).sum())
    ids = out.node_ids
    if mode == "greedy":
        best = logits.max()
        tol = GREEDY_TIE_RTOL * max(1.0, abs(best))
        i = min((k for k in range(len(ids)) if logits[k] >= best - tol), key=lambda k: ids[k])
    elif mode == "sample":
        if rng is None:
            raise ValueError("sampling needs an rng or seed")
        if not isinstance(rng, np.random.Generator):
            rng = make_rng(rng)
        i = sample_index(p, rng)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return Action(ids[i], float(logp[i]), out.value.item(), entropy(p), p, ids)


# ---------------------------------------------------------------------------
# persistence


def save_net(net: PolicyNet, path: str | Path, extra: dict[str, np.ndarray] | None = None) -> None:
    """Write the binary checkpoint plus a ``.json`` config sidecar next to it."""
    path = Path(path)
    arrays = net.state_dict()
    if extra:
        arrays.update(extra)
    with open(path, "wb") as f:
        ad.save_arrays(f, arrays)
    sidecar(path).write_text(net.config.to_json() + "\n")


def sidecar(path: str | Path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".json")


def load_net(path: str | Path) -> tuple[PolicyNet, dict[str, np.ndarray]]:
    """Returns the net and any non-parameter blocks stored alongside it."""
    path = Path(path)
    side = sidecar(path)
    config = NetConfig.from_json(side.read_text()) if side.exists() else NetConfig()
    if config.feature != FEATURE_VERSION:
        raise ValueError(f"unsupported feature definition {config.feature!r}")
    with open(path, "rb") as f:
        arrays = ad.load_arrays(f)
    net = PolicyNet(config)
    net.load_state_dict(arrays)
    extra = {k: v for k, v in arrays.items() if k not in net.params}
    return net, extra
