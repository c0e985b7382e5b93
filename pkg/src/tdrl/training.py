"""Elimination MDP, advantage estimation, actor-critic losses and the training loop."""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence, Union

import numpy as np

from . import autodiff as ad
from .autodiff import Adam, Tensor
from .graph import Graph, make_rng
from .policy import NetConfig, PolicyNet, act, forward

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib


class EliminationEnv:
    """One elimination episode on a copy of ``graph``.

    Reward for eliminating ``u`` at step ``t`` with running maximum degree
    ``c_t = max(deg(u), c_{t-1})`` is ``-c_t`` on the last step and
    ``-log(max(c_t, 1))`` otherwise.
    """

    def __init__(self, graph: Graph):
        self.original = graph
        self.reset()

    def reset(self) -> Graph:
        self.graph = self.original
        self.cmax = 0
        self.t = 0
        return self.graph

    @property
    def done(self) -> bool:
        return self.graph.num_nodes() == 0

    def step(self, u: int) -> tuple[float, bool]:
        if u not in self.graph:
            raise KeyError(f"node {u} is not in the current graph")
        deg = self.graph.degree(u)
        self.cmax = max(self.cmax, deg)
        self.graph = self.graph.eliminate(u)
        self.t += 1
        done = self.graph.num_nodes() == 0
        reward = -float(self.cmax) if done else -math.log(max(self.cmax, 1))
        return reward, done


@dataclass
class Episode:
    actions: list[int] = field(default_factory=list)
    rewards: list[float] = field(default_factory=list)
    log_probs: list[float] = field(default_factory=list)
    values: list[float] = field(default_factory=list)
    entropies: list[float] = field(default_factory=list)
    degrees: list[int] = field(default_factory=list)

    @property
    def width(self) -> int:
        return max(self.degrees, default=0)

    @property
    def total_return(self) -> float:
        return float(sum(self.rewards))

    def __len__(self) -> int:
        return len(self.actions)


def rollout(net: PolicyNet, g: Graph, rng: np.random.Generator | None = None, mode: str = "sample") -> Episode:
    """Run the policy until the graph is empty."""
    env = EliminationEnv(g)
    ep = Episode()
    done = g.num_nodes() == 0
    while not done:
        a = act(net, env.graph, mode=mode, rng=rng)
        ep.degrees.append(env.graph.degree(a.node))
        reward, done = env.step(a.node)
        ep.actions.append(a.node)
        ep.rewards.append(reward)
        ep.log_probs.append(a.log_prob)
        ep.values.append(a.value)
        ep.entropies.append(a.entropy)
    return ep


def gae(rewards: Sequence[float], values: Sequence[float], gamma: float, lam: float) -> np.ndarray:
    """Generalized advantage estimates by the backward recursion.

    ``values`` holds ``V(s_0..s_T)``; the last entry is the terminal value
    (normally 0).
    """
    r = np.asarray(rewards, dtype=float)
    v = np.asarray(values, dtype=float)
    if v.shape != (r.shape[0] + 1,):
        raise ValueError(f"need {r.shape[0] + 1} values for {r.shape[0]} rewards, got {v.shape[0]}")
    adv = np.zeros_like(r)
    acc = 0.0
    for t in range(len(r) - 1, -1, -1):
        delta = r[t] + gamma * v[t + 1] - v[t]
        acc = delta + gamma * lam * acc
        adv[t] = acc
    return adv


@dataclass
class TrainConfig:
    gamma: float = 0.999
    lam: float = 0.85
    beta_value: float = 1.0
    beta_entropy: float = 0.001
    lr: float = 0.008
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    episodes_per_update: int = 8
    updates_per_epoch: int = 25
    epochs: int = 10
    seed: int = 0
    hidden: int = 64
    # "gae_return" regresses V on A + V; "advantage" is the literal (A - V)^2 form
    value_target: str = "gae_return"
    # "full" uses the entropy of the whole action distribution, "action" only -p log p of the taken action
    entropy_form: str = "full"
    normalize_advantages: bool = False

    def __post_init__(self):
        if not (0.0 <= self.gamma <= 1.0 and 0.0 <= self.lam <= 1.0):
            raise ValueError("gamma and lam must lie in [0, 1]")
        if self.lr <= 0:
            raise ValueError("lr must be positive")
        if self.value_target not in ("gae_return", "advantage"):
            raise ValueError(f"unknown value_target {self.value_target!r}")
        if self.entropy_form not in ("full", "action"):
            raise ValueError(f"unknown entropy_form {self.entropy_form!r}")
        for name in ("episodes_per_update", "updates_per_epoch", "epochs"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")

    @classmethod
    def from_mapping(cls, data: dict) -> "TrainConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def load(cls, path: str | Path) -> "TrainConfig":
        path = Path(path)
        if path.suffix == ".toml":
            data = tomllib.loads(path.read_text())
        else:
            data = json.loads(path.read_text())
        return cls.from_mapping(data)

    def replace(self, **changes) -> "TrainConfig":
        return dataclasses.replace(self, **{k: v for k, v in changes.items() if v is not None})


@dataclass
class LossTerms:
    policy: Tensor
    value: Tensor
    entropy: Tensor
    total: Tensor


def _scalar_sum(terms: list[Tensor]) -> Tensor:
    out = terms[0]
    for t in terms[1:]:
        out = ad.add(out, t)
    return out


def losses(
    net: PolicyNet,
    g: Graph,
    episode: Episode,
    advantages: np.ndarray,
    config: TrainConfig,
    value_targets: np.ndarray | None = None,
) -> LossTerms:
    """Replay ``episode`` on ``g`` with a fresh tape and build the loss terms.

    Advantages and value targets are constants. Without ``value_targets`` they
    are derived from ``config.value_target`` and the episode's recorded values.
    """
    adv = np.asarray(advantages, dtype=float)
    if adv.shape != (len(episode),):
        raise ValueError("advantages must align with episode steps")
    if value_targets is None:
        value_targets = adv + np.asarray(episode.values) if config.value_target == "gae_return" else adv
    pol, val, ent = [], [], []
    graph = g
    for t, u in enumerate(episode.actions):
        out = forward(net, graph)
        logp = ad.log_softmax_masked(out.logits)
        i = out.node_ids.index(u)
        chosen = ad.gather_rows(logp, [i])
        pol.append(ad.scale(chosen, -adv[t]))
        diff = ad.sub(Tensor(np.full((1, 1), value_targets[t])), out.value)
        val.append(ad.total(ad.mul(diff, diff)))
        if config.entropy_form == "full":
            p = ad.softmax_masked(out.logits)
            ent.append(ad.scale(ad.total(ad.mul(p, logp)), -1.0))
        else:
            ent.append(ad.scale(ad.mul(ad.exp(chosen), chosen), -1.0))
        graph = graph.eliminate(u)
    policy = ad.reshape(_scalar_sum(pol), ())
    value = _scalar_sum(val)
    entropy = ad.reshape(_scalar_sum(ent), ())
    total = ad.add(ad.add(policy, ad.scale(value, config.beta_value)), ad.scale(entropy, -config.beta_entropy))
    return LossTerms(policy, value, entropy, total)


def episode_advantages(episode: Episode, config: TrainConfig) -> np.ndarray:
    return gae(episode.rewards, list(episode.values) + [0.0], config.gamma, config.lam)


LOG_FIELDS = ["update_idx", "mean_width", "mean_return", "policy_loss", "value_loss", "entropy", "wall_ms"]

GraphSource = Union[Graph, Callable[[int], Graph]]


@dataclass
class TrainResult:
    net: PolicyNet
    optimizer: Adam
    log: list[dict] = field(default_factory=list)
    updates_done: int = 0


def train(
    source: GraphSource,
    config: TrainConfig,
    net: PolicyNet | None = None,
    optimizer: Adam | None = None,
    start_update: int = 0,
    record_time: bool = True,
    on_update: Callable[[dict], None] | None = None,
) -> TrainResult:
    """Actor-critic training with GAE on a single graph or a graph generator.

    ``source`` is either a fixed graph or a callable mapping the global update
    index to a training graph. Episode ``e`` of update ``k`` samples with the
    stream ``(seed, k, e)``, so a run resumed at ``start_update`` continues
    exactly where an uninterrupted run would be.
    """
    if net is None:
        net = PolicyNet(NetConfig(hidden=config.hidden), seed=config.seed)
    if optimizer is None:
        optimizer = Adam(net.parameters(), lr=config.lr, betas=(config.beta1, config.beta2), eps=config.eps)
    log: list[dict] = []
    total_updates = config.epochs * config.updates_per_epoch
    for k in range(start_update, start_update + total_updates):
        t0 = time.perf_counter()
        g = source(k) if callable(source) else source
        episodes = [
            rollout(net, g, make_rng([config.seed, k, e])) for e in range(config.episodes_per_update)
        ]
        raw = [episode_advantages(ep, config) for ep in episodes]
        advs = raw
        if config.normalize_advantages:
            flat = np.concatenate(raw)
            mu, sd = flat.mean(), flat.std()
            advs = [(a - mu) / (sd + 1e-8) for a in raw]
        # value targets always use the raw advantages
        m = len(episodes)
        pl = vl = el = 0.0
        net.zero_grad()
        for ep, a, r in zip(episodes, advs, raw):
            targets = r + np.asarray(ep.values) if config.value_target == "gae_return" else r
            terms = losses(net, g, ep, a, config, value_targets=targets)
            ad.backward(ad.scale(terms.total, 1.0 / m))
            pl += terms.policy.item() / m
            vl += terms.value.item() / m
            el += terms.entropy.item() / m
        optimizer.step()
        row = {
            "update_idx": k,
            "mean_width": float(np.mean([ep.width for ep in episodes])),
            "mean_return": float(np.mean([ep.total_return for ep in episodes])),
            "policy_loss": pl,
            "value_loss": vl,
            "entropy": float(np.mean([np.mean(ep.entropies) for ep in episodes])),
            "wall_ms": round((time.perf_counter() - t0) * 1000.0, 3) if record_time else 0.0,
        }
        log.append(row)
        if on_update is not None:
            on_update(row)
    return TrainResult(net, optimizer, log, start_update + total_updates)


def format_log(rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=LOG_FIELDS, lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow({k: repr(row[k]) if isinstance(row[k], float) else row[k] for k in LOG_FIELDS})
    return buf.getvalue()


def parse_log(text: str) -> list[dict]:
    rows = []
    for rec in csv.DictReader(io.StringIO(text)):
        row = {k: float(v) for k, v in rec.items()}
        row["update_idx"] = int(row["update_idx"])
        rows.append(row)
    return rows


# ---------------------------------------------------------------------------
# checkpoints with optimizer state


def training_state(result: TrainResult) -> dict[str, np.ndarray]:
    opt = result.optimizer
    extra = {"train.updates_done": np.array([float(result.updates_done)]), "adam.t": np.array([float(opt.t)])}
    for name, m, v in zip(result.net.params, opt.m, opt.v):
        extra[f"adam.m.{name}"] = m
        extra[f"adam.v.{name}"] = v
    return extra


def restore_optimizer(net: PolicyNet, extra: dict[str, np.ndarray], config: TrainConfig) -> tuple[Adam, int]:
    opt = Adam(net.parameters(), lr=config.lr, betas=(config.beta1, config.beta2), eps=config.eps)
    if "adam.t" not in extra:
        return opt, 0
    opt.t = int(extra["adam.t"][0])
    opt.m = [np.array(extra[f"adam.m.{name}"]) for name in net.params]
    opt.v = [np.array(extra[f"adam.v.{name}"]) for name in net.params]
    return opt, int(extra["train.updates_done"][0])
