"""The soul file: a text snapshot of everything the engine has learned.

Layout::

    SAMU-SOUL 1
    key=value key=value ...            hyperparameters and section counts
    ACTION <S> <P> <O> <n_in> <n_hidden>
    <n_hidden rows of n_in input->hidden weights>
    <one row of n_hidden hidden->output weights>
    [<one row: n_hidden hidden biases then the output bias>]   only with mlp_bias=1
    END
    ...                                one ACTION block per known action
    KNOWN <S> <P> <O>                    actions of a lookup-table learner
    QVALUE <state> <S> <P> <O> <value>   lookup-table entries
    NSA <state> <S> <P> <O> <count>      state-action visit counts
    WINDOW <S> <P> <O>                   statement window, oldest first
    LZW <parent> <S> <P> <O>             LZW nodes in creation order
    LZWCURSOR <node>
    PREV <reward|none> <state|-> <S> <P> <O>

The header's ``actions=`` and ``records=`` counts let a truncated file be
told apart from a complete one; a fresh engine saves as the two header lines.
Weights are written with 17 significant digits so a save/load round trip is
exact for double precision.
"""

from __future__ import annotations

import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import ParseError
from .imagery import StatementWindow
from .lzw import LzwTree
from .mlp import Perceptron
from .qengine import EngineConfig, PerceptronValues, QEngine, State, TableValues
from .triplet import Triplet

MAGIC = "SAMU-SOUL"
VERSION = 1
DEFAULT_SOUL_NAME = "samu.soul.txt"


@dataclass
class SoulFile:
    version: int = VERSION
    params: dict[str, str] = field(default_factory=dict)
    actions: list[tuple[Triplet, Perceptron]] = field(default_factory=list)
    known: list[Triplet] = field(default_factory=list)
    qtable: dict[tuple[str, Triplet], float] = field(default_factory=dict)
    nsa: dict[tuple[str, Triplet], int] = field(default_factory=dict)
    window: list[Triplet] = field(default_factory=list)
    lzw: list[tuple[int, Triplet]] = field(default_factory=list)
    lzw_cursor: int = 0
    prev_reward: Optional[float] = None
    prev_key: Optional[str] = None
    prev_action: Optional[Triplet] = None
    steps: int = 0


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def _row(values) -> str:
    return " ".join(_fmt(v) for v in values)


def _tokens(t: Triplet) -> str:
    for token in t:
        if any(ch.isspace() for ch in token):
            raise ValueError(f"cannot store token {token!r} with whitespace")
    return f"{t.s} {t.p} {t.o}"


def format_soul(soul: SoulFile) -> str:
    blocks = []
    for t, net in soul.actions:
        blocks.append(f"ACTION {_tokens(t)} {net.n_in} {net.n_hidden}")
        blocks.extend(_row(r) for r in net.weights_ih)
        blocks.append(_row(net.weights_ho))
        if net.has_bias:
            blocks.append(_row(list(net.bias_h) + [net.bias_o]))
        blocks.append("END")
    records = [f"KNOWN {_tokens(t)}" for t in soul.known]
    records += [f"QVALUE {key} {_tokens(t)} {_fmt(v)}" for (key, t), v in soul.qtable.items()]
    records += [f"NSA {key} {_tokens(t)} {n}" for (key, t), n in soul.nsa.items()]
    records += [f"WINDOW {_tokens(t)}" for t in soul.window]
    records += [f"LZW {parent} {_tokens(t)}" for parent, t in soul.lzw]
    if soul.lzw:
        records.append(f"LZWCURSOR {soul.lzw_cursor}")
    if soul.prev_action is not None:
        reward = "none" if soul.prev_reward is None else _fmt(soul.prev_reward)
        records.append(f"PREV {reward} {soul.prev_key or '-'} {_tokens(soul.prev_action)}")
    params = {**soul.params, "steps": str(soul.steps), "actions": str(len(soul.actions)), "records": str(len(records))}
    for k, v in params.items():
        if not k or any(ch.isspace() or ch == "=" for ch in k) or any(ch.isspace() for ch in v):
            raise ValueError(f"hyperparameter {k}={v!r} cannot be stored")
    head = [f"{MAGIC} {soul.version}", " ".join(f"{k}={v}" for k, v in params.items())]
    return "\n".join(head + blocks + records) + "\n"


def save_soul(path, soul: SoulFile) -> None:
    """Write atomically: a temporary file in the same directory, then rename."""
    path = Path(path)
    text = format_soul(soul)
    fd, tmp = tempfile.mkstemp(prefix=path.name + ".", suffix=".tmp", dir=path.parent or ".")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def parse_soul(text: str, path=None) -> SoulFile:
    lines = text.splitlines()
    if not lines:
        raise ParseError("empty soul file", path, 1)
    head = lines[0].split()
    if len(head) != 2 or head[0] != MAGIC:
        raise ParseError(f"not a soul file (expected '{MAGIC} {VERSION}')", path, 1)
    try:
        version = int(head[1])
    except ValueError:
        raise ParseError(f"bad version {head[1]!r}", path, 1) from None
    if version != VERSION:
        raise ParseError(f"soul version {version} is not supported (expected {VERSION})", path, 1)
    if len(lines) < 2:
        raise ParseError("missing hyperparameter line", path, 2)
    params = {}
    for item in lines[1].split():
        if "=" not in item:
            raise ParseError(f"expected key=value, got {item!r}", path, 2)
        k, v = item.split("=", 1)
        params[k] = v
    try:
        n_actions = int(params.pop("actions", "0"))
        n_records = int(params.pop("records", "0"))
        steps = int(params.pop("steps", "0"))
    except ValueError:
        raise ParseError("bad section counts", path, 2) from None
    soul = SoulFile(version, params, steps=steps)
    bias = params.get("mlp_bias", "0") in ("1", "true")
    seen_records = 0

    i = 2

    def numbers(lineno: int, expected: int) -> np.ndarray:
        if lineno >= len(lines):
            raise ParseError("unexpected end of file inside an ACTION block", path, lineno + 1)
        try:
            row = np.array(lines[lineno].split(), dtype=np.float64)
        except ValueError:
            raise ParseError("non-numeric weight", path, lineno + 1) from None
        if row.shape[0] != expected:
            raise ParseError(f"expected {expected} weights, got {row.shape[0]}", path, lineno + 1)
        return row

    while i < len(lines):
        lineno = i + 1
        parts = lines[i].split()
        if not parts:
            i += 1
            continue
        tag = parts[0]
        try:
            if tag == "ACTION":
                if len(parts) != 6:
                    raise ParseError("expected 'ACTION S P O n_in n_hidden'", path, lineno)
                t = Triplet(*parts[1:4])
                n_in, n_hidden = int(parts[4]), int(parts[5])
                w_ih = np.stack([numbers(i + 1 + r, n_in) for r in range(n_hidden)]) if n_hidden else None
                j = i + 1 + n_hidden
                w_ho = numbers(j, n_hidden)
                j += 1
                bias_h = bias_o = None
                if bias:
                    b = numbers(j, n_hidden + 1)
                    bias_h, bias_o = b[:-1], float(b[-1])
                    j += 1
                if j >= len(lines) or lines[j].strip() != "END":
                    raise ParseError("missing END after ACTION weights", path, j + 1)
                lr = float(params.get("mlp_lr", "0.01"))
                soul.actions.append((t, Perceptron(w_ih, w_ho, lr, bias_h, bias_o)))
                i = j + 1
                continue
            seen_records += 1
            if tag == "KNOWN" and len(parts) == 4:
                soul.known.append(Triplet(*parts[1:4]))
            elif tag == "QVALUE" and len(parts) == 6:
                soul.qtable[(parts[1], Triplet(*parts[2:5]))] = float(parts[5])
            elif tag == "NSA" and len(parts) == 6:
                soul.nsa[(parts[1], Triplet(*parts[2:5]))] = int(parts[5])
            elif tag == "WINDOW" and len(parts) == 4:
                soul.window.append(Triplet(*parts[1:4]))
            elif tag == "LZW" and len(parts) == 5:
                soul.lzw.append((int(parts[1]), Triplet(*parts[2:5])))
            elif tag == "LZWCURSOR" and len(parts) == 2:
                soul.lzw_cursor = int(parts[1])
            elif tag == "PREV" and len(parts) == 6:
                soul.prev_reward = None if parts[1] == "none" else float(parts[1])
                soul.prev_key = None if parts[2] == "-" else parts[2]
                soul.prev_action = Triplet(*parts[3:6])
            else:
                raise ParseError(f"unrecognised line {lines[i]!r}", path, lineno)
        except ParseError:
            raise
        except ValueError as exc:
            raise ParseError(str(exc), path, lineno) from None
        i += 1
    if len(soul.actions) != n_actions or seen_records != n_records:
        raise ParseError(
            f"truncated soul file: {len(soul.actions)}/{n_actions} actions, {seen_records}/{n_records} records",
            path,
            len(lines),
        )
    return soul


def load_soul(path) -> SoulFile:
    path = Path(path)
    return parse_soul(path.read_text(encoding="utf-8"), path)


def engine_to_soul(engine: QEngine) -> SoulFile:
    soul = SoulFile(params=engine.config.to_params())
    soul.params["n_in"] = str(getattr(engine.values, "n_in", 0))
    if isinstance(engine.values, PerceptronValues):
        soul.actions = [(t, engine.values.nets[t]) for t in engine.actions]
    else:
        soul.known = list(engine.actions)
        soul.qtable = dict(engine.values.q)
    soul.nsa = {k: v for k, v in engine.nsa.items() if v}
    soul.window = list(engine.window.statements)
    soul.lzw = engine.lzw.to_records()
    soul.lzw_cursor = engine.lzw.cursor.index
    soul.prev_reward = engine.prev_reward
    soul.prev_key = engine.prev_key
    soul.prev_action = engine.prev_action
    soul.steps = engine.steps
    return soul


def engine_from_soul(soul: SoulFile) -> QEngine:
    params = dict(soul.params)
    n_in = int(params.pop("n_in", "0")) or None
    config = EngineConfig.from_params(params)
    engine = QEngine(config, input_size=n_in)
    if isinstance(engine.values, PerceptronValues):
        for t, net in soul.actions:
            engine.actions[t] = None
            engine.values.add(t, net)
    else:
        for t in soul.known:
            engine.register(t)
        engine.values.q.update(soul.qtable)
    engine.nsa.update(soul.nsa)
    engine.window = StatementWindow(config.window, tuple(soul.window))
    engine.lzw = LzwTree.from_records(soul.lzw, config.lzw_depth, soul.lzw_cursor)
    engine.prev_reward = soul.prev_reward
    engine.prev_action = soul.prev_action
    engine.prev_key = soul.prev_key
    if soul.prev_action is not None:
        if engine.window.statements:
            state = engine.render_state()
            engine.prev_state = State(soul.prev_key or state.key, state.x)
        else:
            engine.prev_state = State(soul.prev_key or "")
    engine.steps = soul.steps
    return engine


def save_engine(path, engine: QEngine) -> None:
    save_soul(path, engine_to_soul(engine))


def load_engine(path) -> QEngine:
    return engine_from_soul(load_soul(path))
