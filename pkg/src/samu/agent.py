"""The agent facade: caregiver channels, listen/sleep states, logging, persistence.

Every input line is either a command (it starts with ``___``) or something a
caregiver said. Sentences are appended to a conversation training file,
turned into triplets and fed to the engine one at a time; the reply is the
engine's guess at the next triplet.
"""

from __future__ import annotations

import logging
import re
import signal
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, TextIO

from .errors import SamuError
from .harness import PassResult, resolve_corpus, run_pass
from .nlp import default_extractor
from .qengine import EngineConfig, QEngine
from .soul import DEFAULT_SOUL_NAME, load_engine, save_engine
from .triplet import Corpus, Triplet, load_corpus, preprocess_raw

log = logging.getLogger(__name__)

COMMAND_PREFIX = "___"
LISTEN, SLEEP = "listen", "sleep"
AUTOSAVE_EVERY = 1000

_INTRODUCTION = re.compile(r"^\s*(?:i\s+am|i'm|my\s+name\s+is|this\s+is)\s+([^\s.,!?;:]+)", re.IGNORECASE)


def default_agent_config() -> EngineConfig:
    # the larger network step keeps the char-mode learner out of early lock-in
    return EngineConfig(mlp_lr=0.3)


@dataclass
class AgentResponse:
    text: str
    prompt: str
    predictions: list[Triplet] = field(default_factory=list)
    command: bool = False
    error: bool = False
    quit: bool = False


def caregiver_name(line: str) -> str:
    """The name a caregiver introduces themselves with (``I am Nandi`` gives ``Nandi``)."""
    m = _INTRODUCTION.match(line)
    if m:
        return m.group(1)
    words = re.findall(r"[^\s.,!?;:]+", line)
    return words[-1] if words else "Caregiver"


class ConversationLog:
    """Append-only training file of caregiver sentences.

    A ``#`` header names the caregiver and the time whenever the speaker
    changes, so the file can be read back as an ordinary corpus.
    """

    def __init__(self, directory, clock: Callable[[], float] = time.time):
        self.directory = Path(directory)
        self.clock = clock
        self.path: Optional[Path] = None
        self.entries: list[tuple[str, str]] = []
        self._fh: Optional[TextIO] = None
        self._speaker: Optional[str] = None

    def _open(self) -> TextIO:
        self.directory.mkdir(parents=True, exist_ok=True)
        stamp = time.strftime("%Y%m%d-%H%M%S", time.gmtime(self.clock()))
        path = self.directory / f"conversation-{stamp}.txt"
        n = 1
        while path.exists():
            n += 1
            path = self.directory / f"conversation-{stamp}-{n}.txt"
        self.path = path
        return open(path, "a", encoding="utf-8")

    def append(self, caregiver: str, sentence: str) -> None:
        self.entries.append((caregiver, sentence))
        if self._fh is None:
            self._fh = self._open()
        if caregiver != self._speaker:
            stamp = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(self.clock()))
            self._fh.write(f"# caregiver {caregiver} {stamp}\n")
            self._speaker = caregiver
        self._fh.write(sentence + "\n")
        self._fh.flush()

    def flush(self) -> None:
        if self._fh is not None:
            self._fh.flush()

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None

    def sentences(self) -> list[str]:
        return [s for _, s in self.entries]


class AgentSession:
    def __init__(
        self,
        name: str = "Samu",
        caregiver: str = "Caregiver",
        engine: QEngine | None = None,
        data_dir=".",
        soul_path=None,
        extractor: Callable[[str], list[Triplet]] | None = None,
        autosave_every: int = AUTOSAVE_EVERY,
        clock: Callable[[], float] = time.time,
    ):
        self.name = name
        self.caregiver = caregiver
        self.state = LISTEN
        self.data_dir = Path(data_dir)
        self.soul_path = Path(soul_path) if soul_path else self.data_dir / DEFAULT_SOUL_NAME
        self.engine = engine or QEngine(default_agent_config())
        self.extractor = extractor or default_extractor()
        self.log = ConversationLog(self.data_dir / "conversations", clock)
        self.autosave_every = autosave_every
        self.awaiting_caregiver = False
        self.busy = False
        self.pending_signal: Optional[int] = None
        self._since_save = 0

    @classmethod
    def open(cls, data_dir=".", soul_path=None, **kwargs) -> AgentSession:
        """A session that resumes from the soul file when one exists."""
        soul = Path(soul_path) if soul_path else Path(data_dir) / DEFAULT_SOUL_NAME
        engine = load_engine(soul) if soul.exists() else None
        return cls(engine=engine, data_dir=data_dir, soul_path=soul, **kwargs)

    # prompt and persistence

    def format_prompt(self) -> str:
        return format_prompt(self.name, self.state, len(self.engine.actions), self.engine.relevance())

    def save(self) -> Path:
        """Write the soul atomically and flush the conversation file."""
        self.soul_path.parent.mkdir(parents=True, exist_ok=True)
        save_engine(self.soul_path, self.engine)
        self.log.flush()
        self._since_save = 0
        return self.soul_path

    def close(self) -> None:
        self.log.close()

    def _after_step(self) -> bool:
        """Autosave and pending-signal handling at a step boundary; True means stop."""
        self._since_save += 1
        if self.pending_signal is not None:
            self._save_logged()
            return True
        if self.autosave_every and self._since_save >= self.autosave_every:
            self._save_logged()
        return False

    def _save_logged(self) -> None:
        try:
            self.save()
        except OSError as exc:
            log.error("could not save the soul to %s: %s", self.soul_path, exc)

    # input

    def response(self, text: str, **kwargs) -> AgentResponse:
        return AgentResponse(text, self.format_prompt(), **kwargs)

    def handle_line(self, line: str) -> AgentResponse:
        line = line.rstrip("\n")
        if line.startswith(COMMAND_PREFIX):
            return self.handle_command(line[len(COMMAND_PREFIX) :])
        if not line.strip():
            return self.response("")
        if self.awaiting_caregiver:
            self.caregiver = caregiver_name(line)
            self.awaiting_caregiver = False
        self.log.append(self.caregiver, line)
        triplets = [t for sentence in preprocess_raw(line) for t in self.extractor(sentence)]
        if not triplets:
            return self.response("(no triplet found)")
        predictions = []
        self.busy = True
        try:
            for t in triplets:
                predictions.append(self.engine.perceive(t))
                if self._after_step():
                    return self.response(str(predictions[-1]), predictions=predictions, quit=True)
        finally:
            self.busy = False
        return self.response(str(predictions[-1]), predictions=predictions)

    def handle_command(self, body: str) -> AgentResponse:
        words = body.split()
        cmd = words[0] if words else ""
        if cmd == "next" and words[1:] == ["caregiver"]:
            self.awaiting_caregiver = True
            return self.response("next caregiver, please introduce yourself", command=True)
        if cmd == "save" and len(words) == 1:
            try:
                path = self.save()
            except OSError as exc:
                return self.response(f"save failed: {exc}", command=True, error=True)
            return self.response(f"soul saved to {path}", command=True)
        if cmd == "sleep" and len(words) in (2, 3):
            try:
                passes = int(words[2]) if len(words) == 3 else 1
                corpus = self.find_corpus(words[1])
                results = self.sleep_train(corpus, passes)
            except (SamuError, OSError, ValueError) as exc:
                return self.response(f"sleep failed: {exc}", command=True, error=True)
            if not results:
                return self.response("slept 0 passes", command=True)
            last = results[-1]
            text = f"slept {len(results)} passes over {len(corpus)} triplets: last reward {last.reward:g}, ratio {last.ratio:.3f}"
            return self.response(text, command=True)
        if cmd == "stat" and len(words) == 1:
            return self.response(self.stat(), command=True)
        if cmd == "quit" and len(words) == 1:
            self._save_logged()
            self.close()
            return self.response("bye", command=True, quit=True)
        return self.response(f"unknown command: {COMMAND_PREFIX}{body}", command=True, error=True)

    def stat(self) -> str:
        e = self.engine
        return (
            f"steps={e.steps} triplets={len(e.actions)} visits={len(e.nsa)} lzw_nodes={len(e.lzw)} "
            f"relevance={100 * e.relevance():.1f}% caregiver={self.caregiver} log={self.log.path or '-'}"
        )

    # sleep

    def find_corpus(self, name: str) -> Corpus:
        path = Path(name)
        if not path.is_absolute() and not path.exists() and (self.data_dir / name).exists():
            path = self.data_dir / name
        if path.exists():
            return load_corpus(path, extractor=self.extractor)
        return resolve_corpus(name)

    def sleep_train(self, corpus: Corpus | list[Triplet], passes: int) -> list[PassResult]:
        """Loop a corpus through the engine; the session shows ``sleep`` meanwhile."""
        triplets = corpus.triplets if isinstance(corpus, Corpus) else list(corpus)
        if not triplets:
            raise SamuError("cannot sleep on an empty corpus")
        if passes < 0:
            raise ValueError("passes must be >= 0")
        results = []
        self.state = SLEEP
        self.busy = True
        try:
            for _ in range(passes):
                results.append(run_pass(self.engine, triplets))
                self._since_save += len(triplets) - 1
                if self._after_step():
                    break
        finally:
            self.state = LISTEN
            self.busy = False
        return results


def format_prompt(name: str, state: str, known: int, relevance: float) -> str:
    """``Judah@sleep.5.99.9%``: name, state, known triplets, bogo-relevance in percent."""
    return f"{name}@{state}.{known}.{100 * relevance:.1f}%"


def install_signal_handlers(session: AgentSession, signals=(signal.SIGINT, signal.SIGTERM, signal.SIGHUP)):
    """Save the soul on INT/TERM/HUP.

    The handler only records the signal while a step is running; the session
    saves at the next step boundary. When idle it saves at once and exits.
    SIGKILL cannot be caught, which is why the session also autosaves.
    """

    def handler(signum, frame):
        session.pending_signal = signum
        if not session.busy:
            session._save_logged()
            session.close()
            raise SystemExit(128 + signum)

    previous = {}
    for sig in signals:
        previous[sig] = signal.signal(sig, handler)
    return previous
