"""Deterministic learning-curve experiments and the ``samu-harness`` CLI.

Three protocols are provided:

* ``exp1``: loop a short story and score every prediction with the partial
  reward (the caption corpus by default),
* ``exp2``: the same with the strict reward, optionally after pretraining on a
  larger corpus (the introductory dialogue by default),
* ``incremental``: train on the first chunk of a long corpus and add the next
  chunk whenever a pass is predicted well enough.

Each trial or pass becomes one CSV row ``trial,reward,good,bad,ratio,learned``.
Nothing depends on the wall clock, so a config and a seed fix the output bytes.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import sys
from dataclasses import dataclass, field, fields, replace
from importlib import resources
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import LoadError, ParseError, SamuError
from .imagery import dump_text
from .qengine import EngineConfig, QEngine
from .triplet import Corpus, Triplet, load_corpus

log = logging.getLogger(__name__)

CSV_HEADER = ("trial", "reward", "good", "bad", "ratio", "learned")

BUNDLED_CORPORA = ("caption", "intro")


@dataclass
class ExperimentConfig:
    corpus: str = "caption"  # caption | intro | genealogy | <path>
    triplet_cache: Optional[str] = None
    pretrain_corpus: Optional[str] = None
    pretrain_passes: int = 0
    trials: int = 200
    chunk: int = 7
    threshold: float = 0.95
    step_budget: int = 20000
    corpus_size: int = 210
    seed: int = 0
    engine: EngineConfig = field(default_factory=EngineConfig)

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.trials < 0 or self.pretrain_passes < 0:
            raise ValueError("trials and pretrain_passes must be >= 0")
        if self.chunk < 1 or self.step_budget < 1 or self.corpus_size < 1:
            raise ValueError("chunk, step_budget and corpus_size must be >= 1")
        if not 0.0 < self.threshold <= 1.0:
            raise ValueError(f"threshold must be in (0, 1], got {self.threshold}")
        self.engine.validate()

    def engine_config(self) -> EngineConfig:
        return replace(self.engine, seed=self.seed)


_OWN_FIELDS = {f.name: f for f in fields(ExperimentConfig) if f.name != "engine"}
_ENGINE_FIELDS = {f.name: f for f in fields(EngineConfig) if f.name != "seed"}


def _convert(f, raw: str):
    if raw.lower() == "none":
        return None
    default = f.default
    if isinstance(default, bool):
        if raw.lower() not in ("0", "1", "true", "false", "yes", "no", "on", "off"):
            raise ValueError(f"expected a boolean, got {raw!r}")
        return raw.lower() in ("1", "true", "yes", "on")
    if isinstance(default, int):
        return int(raw)
    if isinstance(default, float) or f.name == "r_plus":
        return float(raw)
    return raw


def apply_settings(config: ExperimentConfig, items: Iterable[tuple[str, str]], path=None) -> ExperimentConfig:
    """Return ``config`` with overrides given as ``(lineno, (key, value))`` items."""
    own, eng = {}, {}
    for lineno, (key, raw) in items:
        try:
            if key in _OWN_FIELDS:
                own[key] = _convert(_OWN_FIELDS[key], raw)
            elif key in _ENGINE_FIELDS:
                eng[key] = _convert(_ENGINE_FIELDS[key], raw)
            else:
                raise ValueError(f"unknown setting {key!r}")
        except ValueError as exc:
            raise ParseError(str(exc), path, lineno) from None
    try:
        return replace(config, engine=replace(config.engine, **eng), **own)
    except ValueError as exc:
        raise ParseError(str(exc), path) from None


def parse_config(text: str, path=None, base: ExperimentConfig | None = None) -> ExperimentConfig:
    """Parse the flat ``key = value`` format; ``#`` starts a comment line."""
    items = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ParseError(f"expected key = value, got {line!r}", path, lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        items.append((lineno, (key, value)))
    return apply_settings(base or ExperimentConfig(), items, path)


def format_config(config: ExperimentConfig) -> str:
    lines = []
    for name in _OWN_FIELDS:
        value = getattr(config, name)
        lines.append(f"{name} = {'none' if value is None else value}")
    for name, value in config.engine.to_params().items():
        if name != "seed":
            lines.append(f"{name} = {value}")
    return "\n".join(lines) + "\n"


def bundled_config_names() -> list[str]:
    root = resources.files("samu") / "data" / "configs"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".conf"))


def load_config(name_or_path) -> ExperimentConfig:
    """Read a config file, or a bundled one by name (``exp1-nn``, ``incremental``, ...)."""
    path = Path(name_or_path)
    if not path.exists():
        bundled = resources.files("samu") / "data" / "configs" / f"{name_or_path}.conf"
        if not bundled.is_file():
            raise LoadError(f"no config file {name_or_path!r} (bundled: {', '.join(bundled_config_names())})")
        return parse_config(bundled.read_text(encoding="utf-8"), f"{name_or_path}.conf")
    return parse_config(path.read_text(encoding="utf-8"), path)


# corpora

GENEALOGY_NAMES = (
    "Abraham Isaac Jacob Judah Perez Zerah Hezron Ram Amminadab Nahshon Salmon Boaz Obed Jesse David "
    "Solomon Rehoboam Abijah Asa Jehoshaphat Joram Uzziah Jotham Ahaz Hezekiah Manasseh Amon Josiah "
    "Shealtiel Zerubbabel Abiud Eliakim Azor Zadok Achim Eliud Eleazar Matthan Reuben Simeon Levi "
    "Issachar Zebulun Dan Naphtali Gad Asher Joseph Benjamin Ephraim Caleb Jerahmeel Onan Shelah"
).split()


def genealogy_corpus(size: int = 210, seed: int = 0) -> Corpus:
    """A synthetic chained genealogy: runs of ``A begat B``, ``B begat C``, ...

    Each run walks three to eight generations of distinct names drawn from a
    fixed pool, so names (and sometimes whole triplets) recur across runs the
    way they do in real genealogies.
    """
    rng = np.random.default_rng(seed)
    sentences: list[str] = []
    triplets: list[Triplet] = []
    while len(triplets) < size:
        length = int(rng.integers(3, 9))
        names = rng.choice(GENEALOGY_NAMES, size=length + 1, replace=False)
        for a, b in zip(names, names[1:]):
            sentences.append(f"{a} begat {b}")
            triplets.append(Triplet(str(a), "begat", str(b)))
    return Corpus("genealogy", sentences[:size], triplets[:size])


def resolve_corpus(name: str, cache: str | None = None, size: int = 210, seed: int = 0) -> Corpus:
    if name == "genealogy":
        return genealogy_corpus(size, seed)
    if name in BUNDLED_CORPORA:
        data = resources.files("samu") / "data"
        cached = data / f"{name}.triplets"
        return load_corpus(Path(str(data / f"{name}.txt")), Path(str(cached)) if cached.is_file() else None)
    return load_corpus(name, cache)


# curves


@dataclass(frozen=True)
class CurvePoint:
    trial: int
    reward: float
    good: int
    bad: int
    ratio: float
    learned: int = 0

    def __post_init__(self):
        if self.good < 0 or self.bad < 0 or self.learned < 0:
            raise ValueError("counts must be nonnegative")
        if not 0.0 <= self.ratio <= 1.0:
            raise ValueError(f"ratio {self.ratio} outside [0, 1]")


def pass_ratio(good: int, bad: int) -> float:
    """Share of good predictions; 14 good against 690 bad gives about 0.0199."""
    total = good + bad
    return good / total if total else 0.0


@dataclass
class PassResult:
    reward: float = 0.0
    good: int = 0
    bad: int = 0
    steps: int = 0

    @property
    def ratio(self) -> float:
        return pass_ratio(self.good, self.bad)


def run_pass(engine: QEngine, triplets: Sequence[Triplet]) -> PassResult:
    """Feed ``triplets`` once; a prediction is good when it equals the triplet read next."""
    engine.new_pass()
    out = PassResult()
    for t in triplets:
        predicted = engine.prev_action
        engine.perceive(t)
        out.reward += engine.last.reward
        if predicted is not None and predicted == t:
            out.good += 1
        else:
            out.bad += 1
        out.steps += 1
    return out


def _point(trial: int, res: PassResult, learned: int = 0) -> CurvePoint:
    return CurvePoint(trial, res.reward, res.good, res.bad, res.ratio, learned)


def _corpus(config: ExperimentConfig) -> Corpus:
    corpus = resolve_corpus(config.corpus, config.triplet_cache, config.corpus_size, config.seed)
    if not corpus.triplets:
        raise SamuError(f"corpus {config.corpus!r} yielded no triplets")
    return corpus


def run_looped(config: ExperimentConfig, engine: QEngine | None = None, corpus: Corpus | None = None) -> list[CurvePoint]:
    engine = engine or QEngine(config.engine_config())
    corpus = corpus or _corpus(config)
    return [_point(trial, run_pass(engine, corpus.triplets)) for trial in range(1, config.trials + 1)]


def run_experiment1(config: ExperimentConfig, engine: QEngine | None = None, corpus: Corpus | None = None) -> list[CurvePoint]:
    """Loop the story; one curve point per pass."""
    corpus = corpus or _corpus(config)
    if len(corpus) != 7:
        log.warning("experiment 1 expects 7 triplets, corpus %s has %d", corpus.name, len(corpus))
    return run_looped(config, engine, corpus)


def run_experiment2(config: ExperimentConfig, engine: QEngine | None = None, corpus: Corpus | None = None) -> list[CurvePoint]:
    """Like experiment 1, after ``pretrain_passes`` unrecorded passes over ``pretrain_corpus``."""
    engine = engine or QEngine(config.engine_config())
    corpus = corpus or _corpus(config)
    if len(corpus) != 10:
        log.warning("experiment 2 expects 10 triplets, corpus %s has %d", corpus.name, len(corpus))
    if config.pretrain_corpus and config.pretrain_passes:
        pre = resolve_corpus(config.pretrain_corpus, None, config.corpus_size, config.seed)
        for _ in range(config.pretrain_passes):
            run_pass(engine, pre.triplets)
    return run_looped(config, engine, corpus)


def run_incremental(config: ExperimentConfig, engine: QEngine | None = None, corpus: Corpus | None = None) -> list[CurvePoint]:
    """Grow the taught prefix one chunk at a time.

    Passes run over the first ``k * chunk`` triplets; a pass whose good ratio
    exceeds ``threshold`` marks that prefix as learned and adds the next chunk.
    Stops when the next pass would not fit in ``step_budget``.
    """
    engine = engine or QEngine(config.engine_config())
    corpus = corpus or _corpus(config)
    triplets = corpus.triplets
    k, learned, steps = 1, 0, 0
    curve = []
    while True:
        active = triplets[: k * config.chunk]
        if steps + len(active) > config.step_budget:
            break
        res = run_pass(engine, active)
        steps += res.steps
        if res.ratio > config.threshold:
            learned = max(learned, len(active))
            if len(active) < len(triplets):
                k += 1
        curve.append(_point(len(curve) + 1, res, learned))
    return curve


def learned_count(curve: Sequence[CurvePoint]) -> int:
    return curve[-1].learned if curve else 0


def format_csv(curve: Iterable[CurvePoint]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for p in curve:
        writer.writerow([p.trial, f"{p.reward:g}", p.good, p.bad, f"{p.ratio:.6f}", p.learned])
    return buf.getvalue()


def emit_csv(curve: Iterable[CurvePoint], path) -> None:
    Path(path).write_text(format_csv(curve), encoding="utf-8")


# command line

EXPERIMENTS = {
    "exp1": (run_experiment1, "exp1-table"),
    "exp2": (run_experiment2, "exp2"),
    "incremental": (run_incremental, "incremental"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="samu-harness", description="Run learning-curve experiments and write CSV curves.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, default) in EXPERIMENTS.items():
        p = sub.add_parser(name, help=f"run {name} (default config: {default})")
        p.add_argument("--config", default=default, help="config file, or the name of a bundled one")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", default="-", help="CSV output path ('-' for stdout)")
        p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE")
        p.add_argument("--dump-imagery", metavar="PATH", help="write the final mental image")
        p.add_argument("--dump-lzw", metavar="PATH", help="write the final LZW tree")
        p.add_argument("-v", "--verbose", action="store_true")
    g = sub.add_parser("genealogy", help="write the synthetic genealogy corpus")
    g.add_argument("--size", type=int, default=210)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", default="-")
    sub.add_parser("configs", help="list the bundled configs")
    return parser


def _write(path: str, text: str) -> None:
    if path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "configs":
        print("\n".join(bundled_config_names()))
        return 0
    if args.command == "genealogy":
        corpus = genealogy_corpus(args.size, args.seed)
        _write(args.out, "".join(f"{s}.\n" for s in corpus.sentences))
        return 0

    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        config = load_config(args.config)
        items = []
        for i, item in enumerate(args.overrides, 1):
            if "=" not in item:
                raise ParseError(f"expected KEY=VALUE, got {item!r}", "--set", i)
            key, value = item.split("=", 1)
            items.append((i, (key.strip(), value.strip())))
        if args.seed is not None:
            items.append((len(items) + 1, ("seed", str(args.seed))))
        config = apply_settings(config, items, "--set")
        run, _ = EXPERIMENTS[args.command]
        engine = QEngine(config.engine_config())
        curve = run(config, engine)
    except SamuError as exc:
        print(f"samu-harness: {exc}", file=sys.stderr)
        return 2
    _write(args.out, format_csv(curve))
    if args.dump_imagery:
        Path(args.dump_imagery).write_text(dump_text(engine.imagery.render(engine.window)) + "\n", encoding="utf-8")
    if args.dump_lzw:
        Path(args.dump_lzw).write_text(engine.lzw.dump(), encoding="utf-8")
    return 0


if __name__ == "__main__":
    sys.exit(main())
