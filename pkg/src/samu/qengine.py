"""Q-learning over triplet actions.

One value approximator per action (a perceptron, or a plain lookup table for
the baseline learner). The engine reads one triplet at a time, scores the
prediction it made on the previous call, updates the value of the previous
state-action pair and returns its prediction for the next triplet.
"""

from __future__ import annotations

import hashlib
import logging
from collections import defaultdict
from dataclasses import asdict, dataclass, field, fields
from typing import Callable, Iterable, Optional

import numpy as np

from .imagery import Imagery, MentalImage, StatementWindow
from .lzw import LzwTree
from .mlp import Perceptron, sigmoid
from .triplet import REWARD_POLICIES, RewardPolicy, Triplet

log = logging.getLogger(__name__)

RewardFn = Callable[[Triplet, Optional[Triplet]], float]


@dataclass
class EngineConfig:
    backend: str = "nn"  # nn | table
    mode: str = "q_max"  # q_max | sarsa
    narrowing: str = "off"  # off | lzw
    reward: str = "partial"  # partial | strict
    gamma: float = 0.9
    alpha: float = 0.2
    alpha_schedule: str = "constant"  # constant | decaying
    alpha_c1: float = 60.0
    alpha_c2: float = 59.0
    n_e: int = 5
    r_plus: Optional[float] = None  # None: best reward / (1 - gamma)
    n_hidden: int = 32
    mlp_lr: float = 0.01
    mlp_bias: bool = False
    seed: int = 0
    state_key: str = "image"  # image | triplet
    lzw_depth: int = 10
    window: int = 10
    imagery: str = "char"  # char | pixel
    arrangement: str = "justified"
    ca_steps: int = 1

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        choices = {
            "backend": ("nn", "table"),
            "mode": ("q_max", "sarsa"),
            "narrowing": ("off", "lzw"),
            "reward": tuple(REWARD_POLICIES),
            "alpha_schedule": ("constant", "decaying"),
            "state_key": ("image", "triplet"),
            "imagery": ("char", "pixel"),
            "arrangement": ("justified", "pyramid"),
        }
        for name, allowed in choices.items():
            if getattr(self, name) not in allowed:
                raise ValueError(f"{name} must be one of {allowed}, got {getattr(self, name)!r}")
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError(f"gamma must be in [0, 1), got {self.gamma}")
        if self.alpha_schedule == "constant" and not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"alpha must be in (0, 1], got {self.alpha}")
        if self.alpha_schedule == "decaying" and (self.alpha_c1 <= 0 or self.alpha_c2 + 1 <= 0):
            raise ValueError("decaying alpha needs c1 > 0 and c2 > -1")
        for name in ("n_hidden", "lzw_depth", "window"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.n_e < 0 or self.ca_steps < 0:
            raise ValueError("n_e and ca_steps must be >= 0")
        if self.mlp_lr <= 0:
            raise ValueError("mlp_lr must be > 0")

    @property
    def reward_policy(self) -> RewardPolicy:
        return REWARD_POLICIES[self.reward]

    def to_params(self) -> dict[str, str]:
        out = {}
        for k, v in asdict(self).items():
            if v is None:
                out[k] = "none"
            elif isinstance(v, bool):
                out[k] = "1" if v else "0"
            elif isinstance(v, float):
                out[k] = repr(v)
            else:
                out[k] = str(v)
        return out

    @classmethod
    def from_params(cls, params: dict[str, str]) -> EngineConfig:
        kwargs = {}
        for f in fields(cls):
            if f.name not in params:
                continue
            raw = params[f.name]
            default = f.default
            if raw == "none":
                kwargs[f.name] = None
            elif isinstance(default, bool):
                kwargs[f.name] = raw.lower() in ("1", "true", "yes", "on")
            elif isinstance(default, int):
                kwargs[f.name] = int(raw)
            elif isinstance(default, float) or f.name == "r_plus":
                kwargs[f.name] = float(raw)
            else:
                kwargs[f.name] = raw
        return cls(**kwargs)


@dataclass(frozen=True)
class State:
    """A learner state: a table key plus the input vector for the networks."""

    key: str
    x: Optional[np.ndarray] = field(default=None, repr=False, compare=False)

    @classmethod
    def of(cls, img: MentalImage) -> State:
        return cls(img.key(), img.flat())


@dataclass
class StepInfo:
    actual: Triplet
    predicted: Triplet
    reward: float
    trained: bool
    candidates: int
    relevance: float


def action_seed(seed: int, t: Triplet) -> int:
    """Initialisation seed for an action's network, independent of arrival order."""
    h = hashlib.blake2b(f"{seed}\x1f{t.key[0]}\x1f{t.key[1]}\x1f{t.key[2]}".encode(), digest_size=8)
    return int.from_bytes(h.digest(), "little")


class PerceptronValues:
    """Q(s, a) as the output of the perceptron dedicated to action a.

    The networks' weights live in one preallocated block (each perceptron
    holds views into it) so that every action can be evaluated with a single
    batched product.
    """

    def __init__(self, n_in: int, n_hidden: int = 32, learning_rate: float = 0.01, bias: bool = False, seed: int = 0):
        self.n_in = n_in
        self.n_hidden = n_hidden
        self.learning_rate = learning_rate
        self.bias = bias
        self.seed = seed
        self.nets: dict[Triplet, Perceptron] = {}
        self.index: dict[Triplet, int] = {}
        self._w_ih = np.zeros((0, n_hidden, n_in))
        self._w_ho = np.zeros((0, n_hidden))

    def _grow(self) -> None:
        old = self._w_ih.shape[0]
        # big pixel-mode nets grow one at a time
        cap = old + max(1, old // 2) if self.n_in * self.n_hidden > 1 << 18 else max(8, 2 * old)
        w_ih = np.zeros((cap, self.n_hidden, self.n_in))
        w_ho = np.zeros((cap, self.n_hidden))
        n = len(self.nets)
        w_ih[:n] = self._w_ih[:n]
        w_ho[:n] = self._w_ho[:n]
        self._w_ih, self._w_ho = w_ih, w_ho
        for t, i in self.index.items():
            self.nets[t].weights_ih = w_ih[i]
            self.nets[t].weights_ho = w_ho[i]

    def add(self, t: Triplet, net: Perceptron) -> None:
        if (net.n_in, net.n_hidden) != (self.n_in, self.n_hidden):
            raise ValueError(f"network for {t} is {net.n_in}x{net.n_hidden}, expected {self.n_in}x{self.n_hidden}")
        if t in self.nets:
            i = self.index[t]
        else:
            i = len(self.nets)
            if i == self._w_ih.shape[0]:
                self._grow()
            self.index[t] = i
        self._w_ih[i] = net.weights_ih
        self._w_ho[i] = net.weights_ho
        net.weights_ih = self._w_ih[i]
        net.weights_ho = self._w_ho[i]
        self.nets[t] = net

    def register(self, t: Triplet) -> None:
        if t not in self.nets:
            self.add(t, Perceptron.init(self.n_in, self.n_hidden, action_seed(self.seed, t), self.learning_rate, self.bias))

    def value(self, key: str, state: State, t: Triplet) -> float:
        return self.nets[t].forward(state.x)

    def values(self, key: str, state: State, actions: Iterable[Triplet]) -> dict[Triplet, float]:
        actions = list(actions)
        n = len(self.nets)
        if self.bias or 4 * len(actions) < n:
            return {a: self.nets[a].forward(state.x) for a in actions}
        x = np.asarray(state.x, dtype=np.float64).reshape(-1)
        h = sigmoid(self._w_ih[:n] @ x)
        out = np.einsum("ij,ij->i", self._w_ho[:n], h)
        return {a: float(out[self.index[a]]) for a in actions}

    def train(self, key: str, state: State, t: Triplet, q: float, nn: float) -> None:
        self.nets[t].train_to_target(state.x, q, nn)


class TableValues:
    """The classical lookup table: Q(s, a) stored directly, default 0."""

    def __init__(self):
        self.q: dict[tuple[str, Triplet], float] = {}

    def register(self, t: Triplet) -> None:
        pass

    def value(self, key: str, state: State, t: Triplet) -> float:
        return self.q.get((key, t), 0.0)

    def values(self, key: str, state: State, actions: Iterable[Triplet]) -> dict[Triplet, float]:
        return {a: self.q.get((key, a), 0.0) for a in actions}

    def train(self, key: str, state: State, t: Triplet, q: float, nn: float) -> None:
        if not np.isfinite(q):
            raise FloatingPointError(f"non-finite Q target {q} for {t}")
        self.q[(key, t)] = q


def bogo_relevance(values: dict[Triplet, float], q: Triplet) -> float:
    """How far the value of ``q`` sits above the candidate mean, scaled by the value range.

    Translation invariant; 0 when there are fewer than two candidates or all
    values are equal.
    """
    if len(values) < 2:
        return 0.0
    v = np.fromiter(values.values(), dtype=np.float64, count=len(values))
    spread = v.max() - v.min()
    if spread == 0.0:
        return 0.0
    return float((values[q] - v.mean()) / spread)


class QEngine:
    """The persistent Q-learner of the agent.

    ``perceive`` is the usual entry point: it pushes the triplet into the
    statement window, renders the state image and runs one learning step.
    ``step`` and ``step_lzw`` take an already rendered state.
    """

    def __init__(self, config: EngineConfig | None = None, input_size: int | None = None):
        self.config = cfg = config or EngineConfig()
        self.imagery = Imagery(cfg.imagery, cfg.arrangement, cfg.ca_steps)
        self.window = StatementWindow(cfg.window)
        self.lzw = LzwTree(cfg.lzw_depth)
        if cfg.backend == "nn":
            n_in = input_size or self.imagery.input_size
            self.values: PerceptronValues | TableValues = PerceptronValues(n_in, cfg.n_hidden, cfg.mlp_lr, cfg.mlp_bias, cfg.seed)
        else:
            self.values = TableValues()
        self.actions: dict[Triplet, None] = {}
        self.nsa: dict[tuple[str, Triplet], int] = defaultdict(int)
        self.prev_state: Optional[State] = None
        self.prev_key: Optional[str] = None
        self.prev_reward: Optional[float] = None
        self.prev_action: Optional[Triplet] = None
        self.steps = 0
        self.last: Optional[StepInfo] = None

    # schedule and exploration

    @property
    def r_plus(self) -> float:
        if self.config.r_plus is not None:
            return self.config.r_plus
        return self.config.reward_policy.best / (1.0 - self.config.gamma)

    def alpha(self, n: int) -> float:
        cfg = self.config
        if cfg.alpha_schedule == "constant":
            return cfg.alpha
        return cfg.alpha_c1 / (cfg.alpha_c2 + n)

    def explore_f(self, q_value: float, n: int) -> float:
        """Optimistic value for actions tried fewer than ``n_e`` times in a state."""
        return self.r_plus if n < self.config.n_e else q_value

    # bookkeeping

    def register(self, t: Triplet) -> None:
        if t not in self.actions:
            self.actions[t] = None
            self.values.register(t)

    @property
    def known_actions(self) -> list[Triplet]:
        return list(self.actions)

    def state_key(self, state: State, t: Triplet) -> str:
        if self.config.state_key == "triplet":
            return "t:" + "|".join(t.key)
        return state.key

    def render_state(self, window: StatementWindow | None = None) -> State:
        return State.of(self.imagery.render(self.window if window is None else window))

    def q_values(self, state: State, actions: Iterable[Triplet], key: str | None = None) -> dict[Triplet, float]:
        return self.values.values(state.key if key is None else key, state, actions)

    def _argmax(self, key: str, values: dict[Triplet, float]) -> Triplet:
        # ties: lowest visit count first, then triplet order
        def rank(p):
            n = self.nsa.get((key, p), 0)
            return (-self.explore_f(values[p], n), n, p.key)

        return min(values, key=rank)

    def target(self, nn: float, n: int, reward: float, next_value: float) -> float:
        return nn + self.alpha(n) * (reward + self.config.gamma * next_value - nn)

    def sarsa_target(self, reward: float, state: State, action: Triplet, key: str | None = None) -> float:
        """Target for the previous state-action pair using the value of ``action`` in ``state``."""
        if self.prev_action is None or self.prev_state is None:
            raise RuntimeError("no previous step to build a target for")
        prev = (self.prev_key, self.prev_action)
        nn = self.values.value(self.prev_key, self.prev_state, self.prev_action)
        n = max(self.nsa.get(prev, 0), 1)
        next_value = self.values.value(state.key if key is None else key, state, action)
        return self.target(nn, n, reward, next_value)

    # learning steps

    def step(self, state: State, t: Triplet, reward_fn: RewardFn | None = None) -> Triplet:
        return self._step(state, t, reward_fn, None)

    def step_lzw(self, state: State, t: Triplet, reward_fn: RewardFn | None = None) -> Triplet:
        node = self.lzw.build_step(t)
        return self._step(state, t, reward_fn, list(node.children))

    def table_step(self, state: State, t: Triplet, reward_fn: RewardFn | None = None) -> Triplet:
        if self.config.backend != "table":
            raise RuntimeError("table_step needs an engine with backend='table'")
        return self.perceive_state(state, t, reward_fn)

    def perceive_state(self, state: State, t: Triplet, reward_fn: RewardFn | None = None) -> Triplet:
        if self.config.narrowing == "lzw":
            return self.step_lzw(state, t, reward_fn)
        return self.step(state, t, reward_fn)

    def perceive(self, t: Triplet, reward_fn: RewardFn | None = None) -> Triplet:
        """Read one triplet: extend the statement window, render, learn, predict."""
        self.window = self.window.push(t)
        return self.perceive_state(self.render_state(), t, reward_fn)

    def _step(self, state: State, t: Triplet, reward_fn: RewardFn | None, narrowed: list[Triplet] | None) -> Triplet:
        reward_fn = reward_fn or self.config.reward_policy
        reward = reward_fn(t, self.prev_action)
        self.register(t)
        key = self.state_key(state, t)
        candidates = narrowed if narrowed else list(self.actions)
        action = t
        trained = False
        relevance = 0.0

        if self.prev_reward is not None:
            prev = (self.prev_key, self.prev_action)
            self.nsa[prev] += 1
            n = self.nsa[prev]
            nn = self.values.value(self.prev_key, self.prev_state, self.prev_action)
            values = self.values.values(key, state, candidates)
            if self.config.mode == "q_max":
                q = self.target(nn, n, reward, max(values.values()))
                self.values.train(self.prev_key, self.prev_state, self.prev_action, q, nn)
                if self.prev_action in values:
                    values[self.prev_action] = self.values.value(key, state, self.prev_action)
                action = self._argmax(key, values)
            else:
                action = self._argmax(key, values)
                q = self.target(nn, n, reward, values[action])
                self.values.train(self.prev_key, self.prev_state, self.prev_action, q, nn)
            trained = True
            relevance = bogo_relevance(values, action)

        self.prev_state, self.prev_key = state, key
        self.prev_reward = reward
        self.prev_action = action
        self.steps += 1
        self.last = StepInfo(t, action, reward, trained, len(candidates), relevance)
        log.debug("step %d %s -> %s reward=%.3f |B|=%d rel=%.1f", self.steps, t, action, reward, len(candidates), 100 * relevance)
        return action

    def predict(self, state: State | None = None, t: Triplet | None = None) -> Triplet | None:
        """Greedy choice for ``state`` without learning or counting anything."""
        if not self.actions:
            return None
        if state is None:
            state = self.render_state()
        if t is None and self.window.statements:
            t = self.window.statements[-1]
        key = self.state_key(state, t) if t is not None else state.key
        candidates = list(self.actions)
        if self.config.narrowing == "lzw" and self.lzw.cursor.children:
            candidates = list(self.lzw.cursor.children)
        values = self.values.values(key, state, candidates)
        return min(values, key=lambda p: (-values[p], p.key))

    def relevance(self) -> float:
        return self.last.relevance if self.last else 0.0

    def new_pass(self) -> None:
        """Mark the start of another pass over a training text (restarts the LZW phrase)."""
        self.lzw.reset()
