import pytest

from samu.errors import ParseError
from samu.harness import (
    CSV_HEADER,
    CurvePoint,
    ExperimentConfig,
    bundled_config_names,
    emit_csv,
    format_config,
    format_csv,
    genealogy_corpus,
    learned_count,
    load_config,
    main,
    parse_config,
    pass_ratio,
    resolve_corpus,
    run_experiment1,
    run_experiment2,
    run_incremental,
    run_looped,
    run_pass,
)
from samu.nlp import naive_triplets
from samu.qengine import EngineConfig, QEngine
from samu.triplet import Corpus, Triplet


def table(**kwargs):
    return EngineConfig(backend="table", **kwargs)


# configs


def test_parse_config_mixes_experiment_and_engine_keys():
    cfg = parse_config("# comment\n\ncorpus = intro\ntrials=12\nbackend = table\nreward = strict\nmlp_bias = yes\nr_plus = none\n")
    assert cfg.corpus == "intro" and cfg.trials == 12
    assert cfg.engine.backend == "table" and cfg.engine.reward == "strict"
    assert cfg.engine.mlp_bias is True and cfg.engine.r_plus is None


@pytest.mark.parametrize(
    "text, lineno",
    [("trials = 5\nwhat = 1\n", 2), ("trials = many\n", 1), ("\n\njust words\n", 3), ("mlp_bias = maybe\n", 1)],
)
def test_config_errors_carry_line_numbers(text, lineno):
    with pytest.raises(ParseError) as err:
        parse_config(text, "x.conf")
    assert err.value.lineno == lineno


@pytest.mark.parametrize("text", ["threshold = 1.5\n", "chunk = 0\n", "gamma = 1\n", "backend = gpu\n", "trials = -1\n"])
def test_config_range_validation(text):
    with pytest.raises(ParseError):
        parse_config(text)


def test_format_parse_round_trip():
    cfg = ExperimentConfig(corpus="genealogy", trials=3, threshold=0.9, engine=table(narrowing="lzw", r_plus=2.5))
    assert parse_config(format_config(cfg)) == cfg


def test_bundled_configs_load():
    names = bundled_config_names()
    assert {"exp1-table", "exp1-nn", "exp2", "incremental"} <= set(names)
    for name in names:
        load_config(name)


# corpora


def test_bundled_corpora():
    assert len(resolve_corpus("caption")) == 7
    assert len(resolve_corpus("intro")) == 10


def test_genealogy_corpus():
    c = genealogy_corpus(210, seed=3)
    assert len(c.sentences) == len(c.triplets) == 210
    assert genealogy_corpus(210, seed=3) == c
    assert genealogy_corpus(210, seed=4) != c
    chained = sum(a.o == b.s for a, b in zip(c.triplets, c.triplets[1:]))
    assert chained > 150
    for sentence, t in zip(c.sentences, c.triplets):
        assert naive_triplets(sentence) == [t]


# curves


def test_pass_ratio():
    assert pass_ratio(14, 690) == pytest.approx(0.0199, abs=1e-4)
    assert pass_ratio(0, 0) == 0.0
    assert pass_ratio(7, 0) == 1.0


def test_curve_point_invariants():
    with pytest.raises(ValueError):
        CurvePoint(1, 0.0, -1, 0, 0.0)
    with pytest.raises(ValueError):
        CurvePoint(1, 0.0, 1, 0, 1.5)


def test_empty_csv_is_header_only(tmp_path):
    emit_csv([], tmp_path / "c.csv")
    assert (tmp_path / "c.csv").read_text() == ",".join(CSV_HEADER) + "\n"


def test_csv_rows_and_determinism():
    cfg = ExperimentConfig(trials=15, engine=table())
    a = format_csv(run_experiment1(cfg))
    b = format_csv(run_experiment1(cfg))
    assert a == b
    assert len(a.splitlines()) == 16


def test_first_pass_over_unseen_triplets_is_all_wrong():
    ts = [Triplet(f"s{i}", "p", f"o{i}") for i in range(10)]
    e = QEngine(table(reward="strict"))
    res = run_pass(e, ts)
    assert (res.reward, res.good, res.bad) == (-20.0, 0, 10)


def test_experiment1_bounds_and_convergence():
    curve = run_experiment1(ExperimentConfig(trials=200, engine=table()))
    assert all(-10.5 <= p.reward <= 10.5 for p in curve)
    assert curve[-1].reward == 10.5 and curve[-1].ratio == 1.0


def test_experiment2_bounds_and_convergence():
    curve = run_experiment2(ExperimentConfig(corpus="intro", trials=300, engine=table(reward="strict")))
    assert all(-20 <= p.reward <= 10 for p in curve)
    assert sum(p.reward for p in curve[-100:]) / 100 >= 5


def test_experiment2_pretraining_changes_the_start():
    base = ExperimentConfig(corpus="intro", trials=3, engine=table(reward="strict"))
    plain = run_experiment2(base)
    pre = run_experiment2(ExperimentConfig(corpus="intro", trials=3, pretrain_corpus="caption", pretrain_passes=5, engine=table(reward="strict")))
    assert [p.reward for p in plain] != [p.reward for p in pre]


def test_n_e_changes_early_curve_but_not_the_policy():
    corpus = resolve_corpus("intro")
    engines, curves = [], []
    for n_e in (1, 5):
        e = QEngine(table(reward="strict", n_e=n_e))
        curves.append(run_experiment2(ExperimentConfig(corpus="intro", trials=400), e, corpus))
        engines.append(e)
    assert [p.reward for p in curves[0][:20]] != [p.reward for p in curves[1][:20]]
    final = [[e.perceive(t) for t in corpus.triplets] for e in engines]
    assert final[0] == final[1]


def test_single_chunk_incremental_is_looped_training():
    cfg = ExperimentConfig(chunk=7, step_budget=7 * 30, trials=30, engine=table())
    inc = run_incremental(cfg)
    loop = run_looped(cfg)
    assert [(p.reward, p.good) for p in inc] == [(p.reward, p.good) for p in loop]


def test_incremental_learned_count_grows_by_chunks():
    cfg = ExperimentConfig(corpus="genealogy", step_budget=6000, engine=table(reward="strict"))
    curve = run_incremental(cfg)
    learned = [p.learned for p in curve]
    assert learned == sorted(learned)
    assert all(n % 7 == 0 or n == 210 for n in learned)
    assert learned_count(curve) >= 14


def test_incremental_respects_budget():
    cfg = ExperimentConfig(corpus="genealogy", step_budget=500, engine=table())
    curve = run_incremental(cfg)
    assert sum(p.good + p.bad for p in curve) <= 500


def test_incremental_on_tiny_corpus():
    corpus = Corpus("tiny", [], [Triplet("a", "b", "c"), Triplet("d", "e", "f")])
    curve = run_incremental(ExperimentConfig(step_budget=40, engine=table()), corpus=corpus)
    assert learned_count(curve) == 2


# command line


def test_cli_writes_csv_and_dumps(tmp_path, capsys):
    out = tmp_path / "c.csv"
    rc = main(
        [
            "exp1",
            "--set", "trials=4",
            "--set", "narrowing=lzw",
            "--seed", "2",
            "--out", str(out),
            "--dump-imagery", str(tmp_path / "img.txt"),
            "--dump-lzw", str(tmp_path / "lzw.txt"),
        ]
    )
    assert rc == 0
    assert len(out.read_text().splitlines()) == 5
    assert (tmp_path / "lzw.txt").read_text().endswith("0__ \n")
    assert (tmp_path / "img.txt").read_text().strip()


def test_cli_config_file(tmp_path):
    conf = tmp_path / "x.conf"
    conf.write_text("corpus = intro\nbackend = table\nreward = strict\ntrials = 3\n")
    rc = main(["exp2", "--config", str(conf), "--out", str(tmp_path / "o.csv")])
    assert rc == 0
    rows = (tmp_path / "o.csv").read_text().splitlines()[1:]
    assert len(rows) == 3


def test_cli_errors(tmp_path, capsys):
    assert main(["exp1", "--config", "nope", "--out", str(tmp_path / "o.csv")]) == 2
    assert main(["exp1", "--set", "trials=x", "--out", str(tmp_path / "o.csv")]) == 2
    assert "samu-harness" in capsys.readouterr().err


def test_cli_genealogy(tmp_path):
    assert main(["genealogy", "--size", "20", "--out", str(tmp_path / "g.txt")]) == 0
    assert len((tmp_path / "g.txt").read_text().splitlines()) == 20
