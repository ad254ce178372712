import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from samu.errors import ParseError
from samu.mlp import Perceptron
from samu.qengine import EngineConfig, QEngine
from samu.soul import (
    SoulFile,
    engine_from_soul,
    engine_to_soul,
    format_soul,
    load_engine,
    load_soul,
    parse_soul,
    save_engine,
    save_soul,
)
from samu.triplet import Triplet, load_corpus


def script(data_dir, n=50):
    ts = load_corpus(data_dir / "caption.txt").triplets
    return [ts[i % len(ts)] for i in range(n)]


@pytest.mark.parametrize(
    "cfg",
    [
        EngineConfig(n_hidden=6, mlp_lr=0.3, seed=4),
        EngineConfig(n_hidden=6, mlp_bias=True, narrowing="lzw", mode="sarsa"),
        EngineConfig(backend="table", narrowing="lzw", state_key="triplet"),
    ],
    ids=["nn", "nn-bias-lzw-sarsa", "table"],
)
def test_resume_matches_uninterrupted_run(cfg, data_dir, tmp_path):
    steps = script(data_dir)
    straight = QEngine(cfg)
    expected = [straight.perceive(t) for t in steps]

    first = QEngine(cfg)
    got = [first.perceive(t) for t in steps[:23]]
    save_engine(tmp_path / "samu.soul.txt", first)
    resumed = load_engine(tmp_path / "samu.soul.txt")
    got += [resumed.perceive(t) for t in steps[23:]]
    assert got == expected
    assert resumed.steps == straight.steps


def test_round_trip_forward_outputs(data_dir, tmp_path):
    e = QEngine(EngineConfig(n_hidden=8, mlp_lr=0.3))
    for t in script(data_dir, 30):
        e.perceive(t)
    save_engine(tmp_path / "s.txt", e)
    back = load_engine(tmp_path / "s.txt")
    x = np.random.default_rng(0).random(800)
    for t in e.known_actions:
        assert abs(e.values.nets[t].forward(x) - back.values.nets[t].forward(x)) <= 1e-12
    assert back.nsa == e.nsa
    assert back.lzw.dump() == e.lzw.dump()
    assert back.window == e.window


def test_fresh_engine_is_header_only():
    text = format_soul(engine_to_soul(QEngine(EngineConfig(n_hidden=4))))
    assert len(text.splitlines()) == 2
    assert text.startswith("SAMU-SOUL 1\n")
    back = engine_from_soul(parse_soul(text))
    assert back.known_actions == [] and back.prev_action is None


def test_truncated_file_is_rejected(data_dir, tmp_path):
    e = QEngine(EngineConfig(n_hidden=4))
    for t in script(data_dir, 10):
        e.perceive(t)
    text = format_soul(engine_to_soul(e))
    lines = text.splitlines()
    for cut in (len(lines) - 1, len(lines) // 2, 3):
        with pytest.raises(ParseError):
            parse_soul("\n".join(lines[:cut]) + "\n")


def test_version_mismatch():
    with pytest.raises(ParseError) as err:
        parse_soul("SAMU-SOUL 2\nsteps=0 actions=0 records=0\n")
    assert err.value.lineno == 1
    with pytest.raises(ParseError):
        parse_soul("hello\n")
    with pytest.raises(ParseError):
        parse_soul("")


def test_bad_weight_reports_line():
    soul = SoulFile(params={"mlp_bias": "0"})
    soul.actions.append((Triplet("a", "b", "c"), Perceptron.init(3, 2, seed=0)))
    lines = format_soul(soul).splitlines()
    lines[3] = "0.1 oops 0.3"
    with pytest.raises(ParseError) as err:
        parse_soul("\n".join(lines))
    assert err.value.lineno == 4


def test_save_is_atomic_on_failure(tmp_path):
    path = tmp_path / "samu.soul.txt"
    save_soul(path, SoulFile(params={"a": "1"}))
    before = path.read_text()
    with pytest.raises(ValueError):
        save_soul(path, SoulFile(params={"bad key": "1"}))
    assert path.read_text() == before
    assert sorted(p.name for p in tmp_path.iterdir()) == ["samu.soul.txt"]


def test_load_missing_file(tmp_path):
    with pytest.raises(OSError):
        load_soul(tmp_path / "none.txt")


values = st.floats(allow_nan=False, allow_infinity=False, width=64)


@settings(max_examples=30)
@given(st.lists(values, min_size=6, max_size=6), st.lists(values, min_size=2, max_size=2))
def test_weights_round_trip_exactly(w_ih, w_ho):
    net = Perceptron(np.array(w_ih).reshape(2, 3), np.array(w_ho))
    soul = SoulFile(actions=[(Triplet("a", "b", "c"), net)])
    back = parse_soul(format_soul(soul)).actions[0][1]
    np.testing.assert_array_equal(back.weights_ih, net.weights_ih)
    np.testing.assert_array_equal(back.weights_ho, net.weights_ho)
