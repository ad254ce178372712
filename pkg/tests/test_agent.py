import os
import signal

import pytest

from samu.agent import AgentSession, caregiver_name, format_prompt, install_signal_handlers
from samu.errors import SamuError
from samu.qengine import EngineConfig, QEngine
from samu.soul import load_engine
from samu.triplet import Triplet, load_corpus


def session(tmp_path, **kwargs):
    kwargs.setdefault("engine", QEngine(EngineConfig(n_hidden=4, mlp_lr=0.3)))
    return AgentSession(data_dir=tmp_path, clock=lambda: 0.0, **kwargs)


def recorded(s: AgentSession):
    fed = []
    original = s.engine.perceive

    def spy(t, reward_fn=None):
        fed.append(t)
        return original(t, reward_fn)

    s.engine.perceive = spy
    return fed


@pytest.mark.parametrize(
    "args, expected",
    [
        (("Judah", "sleep", 5, 0.999), "Judah@sleep.5.99.9%"),
        (("Samu", "listen", 0, 0.0), "Samu@listen.0.0.0%"),
        (("Samu", "listen", 3, -0.25), "Samu@listen.3.-25.0%"),
    ],
)
def test_format_prompt(args, expected):
    assert format_prompt(*args) == expected


def test_session_prompt_starts_empty(tmp_path):
    assert session(tmp_path).format_prompt() == "Samu@listen.0.0.0%"


@pytest.mark.parametrize(
    "line, name", [("I am Nandi", "Nandi"), ("i'm Bea.", "Bea"), ("My name is Norbi", "Norbi"), ("Nandi", "Nandi")]
)
def test_caregiver_name(line, name):
    assert caregiver_name(line) == name


def test_next_caregiver_transcript(tmp_path):
    s = session(tmp_path, caregiver="Norbi")
    fed = recorded(s)
    resp = s.handle_line("___next caregiver\n")
    assert resp.command and s.caregiver == "Norbi"
    assert fed == []
    s.handle_line("I am Nandi\n")
    assert s.caregiver == "Nandi"
    assert fed == [Triplet("I", "am", "Nandi")]
    text = s.log.path.read_text()
    assert text.splitlines() == ["# caregiver Nandi 1970-01-01T00:00:00Z", "I am Nandi"]


def test_commands_never_reach_log_or_engine(tmp_path):
    s = session(tmp_path)
    for line in ["___stat", "___save", "___bogus thing", "___next caregiver"]:
        s.handle_line(line)
    assert s.log.entries == []
    assert s.engine.steps == 0


def test_empty_line_is_a_no_op(tmp_path):
    s = session(tmp_path)
    resp = s.handle_line("   \n")
    assert resp.text == "" and s.log.entries == [] and s.engine.steps == 0


def test_sentence_without_triplet_is_logged_only(tmp_path):
    s = session(tmp_path)
    resp = s.handle_line("hello")
    assert "no triplet" in resp.text
    assert s.log.sentences() == ["hello"]
    assert s.engine.steps == 0


def test_sentence_response_is_prediction(tmp_path):
    s = session(tmp_path)
    resp = s.handle_line("I love Samu.")
    assert resp.predictions == [Triplet("I", "love", "Samu")]
    assert resp.text == "I love Samu"
    assert resp.prompt == "Samu@listen.1.0.0%"


def test_unknown_command(tmp_path):
    s = session(tmp_path)
    before = (s.state, s.caregiver)
    resp = s.handle_line("___dance")
    assert resp.error and "unknown command" in resp.text
    assert (s.state, s.caregiver) == before


def test_save_command_and_resume(tmp_path):
    s = session(tmp_path)
    for line in ["I love Samu", "I have a car", "this is car"]:
        s.handle_line(line)
    resp = s.handle_line("___save")
    assert not resp.error
    back = load_engine(tmp_path / "samu.soul.txt")
    assert back.steps == 3 and back.known_actions == s.engine.known_actions
    s.handle_line("sky is blue")
    assert s.engine.steps == 4


def test_resume_gives_identical_predictions(tmp_path):
    lines = ["I love Samu", "I have a car", "this is car", "car is mine", "sky is blue"] * 4
    a = session(tmp_path / "a")
    expected = [a.handle_line(line).text for line in lines]
    b = session(tmp_path / "b")
    got = [b.handle_line(line).text for line in lines[:7]]
    b.save()
    c = AgentSession.open(tmp_path / "b", clock=lambda: 0.0)
    got += [c.handle_line(line).text for line in lines[7:]]
    assert got == expected


def test_sleep_zero_passes_changes_nothing(tmp_path):
    s = session(tmp_path)
    assert s.sleep_train([Triplet("a", "b", "c")], 0) == []
    assert s.engine.steps == 0


def test_sleep_one_pass_one_triplet(tmp_path):
    s = session(tmp_path)
    results = s.sleep_train([Triplet("a", "b", "c")], 1)
    assert s.engine.steps == 1 and len(results) == 1
    assert s.state == "listen"


def test_sleep_empty_corpus(tmp_path):
    with pytest.raises(SamuError):
        session(tmp_path).sleep_train([], 3)


def test_sleep_command(tmp_path, data_dir):
    s = session(tmp_path)
    resp = s.handle_line(f"___sleep {data_dir / 'caption.txt'} 2")
    assert not resp.error, resp.text
    assert s.engine.steps == 14
    assert s.handle_line("___sleep caption 1").text.startswith("slept 1 passes")
    assert s.handle_line("___sleep nowhere.txt 1").error


def test_conversation_file_replays_the_live_stream(tmp_path):
    s = session(tmp_path)
    fed = recorded(s)
    for line in ["I love Samu. I have a car", "hello", "___next caregiver", "I am Nandi", "sky is blue"]:
        s.handle_line(line)
    s.log.flush()
    replay = load_corpus(s.log.path, extractor=s.extractor)
    assert replay.triplets == fed
    assert len(fed) == 4


def test_autosave(tmp_path):
    s = session(tmp_path, autosave_every=2)
    s.handle_line("I love Samu")
    assert not (tmp_path / "samu.soul.txt").exists()
    s.handle_line("sky is blue")
    assert load_engine(tmp_path / "samu.soul.txt").steps == 2


def test_signal_while_busy_saves_at_step_boundary(tmp_path):
    s = session(tmp_path)
    s.handle_line("I love Samu")
    s.pending_signal = signal.SIGTERM
    resp = s.handle_line("I have a car. this is car")
    assert resp.quit
    assert s.engine.steps == 2  # stopped after the first triplet of the line
    assert load_engine(tmp_path / "samu.soul.txt").steps == 2


@pytest.mark.parametrize("sig", [signal.SIGINT, signal.SIGTERM, signal.SIGHUP])
def test_signal_when_idle_saves_and_exits(tmp_path, sig):
    s = session(tmp_path)
    s.handle_line("I love Samu")
    previous = install_signal_handlers(s)
    try:
        with pytest.raises(SystemExit):
            os.kill(os.getpid(), sig)
    finally:
        for k, v in previous.items():
            signal.signal(k, v)
    assert load_engine(tmp_path / "samu.soul.txt").steps == 1


def test_quit_saves(tmp_path):
    s = session(tmp_path)
    s.handle_line("I love Samu")
    assert s.handle_line("___quit").quit
    assert (tmp_path / "samu.soul.txt").exists()
