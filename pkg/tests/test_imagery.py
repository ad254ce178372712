import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from samu.imagery import (
    CHAR_COLS,
    CHAR_ROWS,
    Imagery,
    MentalImage,
    StatementWindow,
    ca_step,
    decode_text,
    dump_text,
    encode_text,
    layout_text,
    push_statement,
    render_char,
    render_pixel,
)
from samu.triplet import Triplet

A, B, C = Triplet("a", "b", "c"), Triplet("d", "e", "f"), Triplet("g", "h", "i")
word = st.text(alphabet="abcdefghijklmnopqrstuvwxyzAB", min_size=1, max_size=12)
triplets = st.builds(Triplet, word, word, word)
windows = st.lists(triplets, max_size=12).map(lambda ts: StatementWindow(10, tuple(ts)))


def test_push_into_empty_window():
    assert push_statement(StatementWindow(3), A).statements == (A,)


def test_fifo_eviction():
    w = StatementWindow(2, (A, B))
    assert push_statement(w, C).statements == (B, C)
    assert w.statements == (A, B)  # the original is untouched


def test_capacity_ten_keeps_order():
    ts = [Triplet(f"s{i}", "p", "o") for i in range(10)]
    w = StatementWindow(10)
    for t in ts:
        w = w.push(t)
    assert list(w.statements) == ts


def test_empty_window_renders_blank():
    assert not render_char(StatementWindow()).cells.any()
    assert not render_pixel(StatementWindow()).cells.any()


def test_single_statement_row_zero():
    img = render_char(StatementWindow().push(Triplet("I", "love", "Samu")))
    text = "I.love(Samu);"
    assert img.rows == CHAR_ROWS and img.cols == CHAR_COLS
    np.testing.assert_array_equal(img.cells[0, : len(text)], [ord(ch) / 255 for ch in text])
    assert not img.cells[0, len(text) :].any()
    assert not img.cells[1:].any()


def test_char_image_size_matches_800_inputs():
    assert Imagery("char").input_size == 800
    assert Imagery("pixel").input_size == 65536
    assert render_char(StatementWindow()).size == 800
    assert render_pixel(StatementWindow()).size == 65536


def test_justified_rows_fill_the_width():
    w = StatementWindow(10, tuple(Triplet(f"subject{i}", "p", "object") for i in range(10)))
    lines = layout_text(w.statements, CHAR_ROWS, CHAR_COLS, "justified")
    assert all(len(line) == CHAR_COLS for line in lines[:-1])
    assert " ".join(" ".join(lines).split()) == " ".join(t.statement() for t in w.statements)


def test_pyramid_rows_grow():
    w = StatementWindow(10, tuple(Triplet("a", "b", str(i)) for i in range(6)))
    lines = layout_text(w.statements, CHAR_ROWS, CHAR_COLS, "pyramid")
    assert [len(line.split()) for line in lines] == [1, 2, 3]
    assert lines[0].strip() == "a.b(0);"
    assert lines[0].startswith(" ")


def test_overflow_drops_oldest():
    long = [Triplet("x" * 30, "y" * 30, f"z{i}") for i in range(10)]
    lines = layout_text(long, 2, 80, "justified")
    assert len(lines) <= 2
    assert "z9" in lines[-1]
    assert "z0" not in "".join(lines)


@given(windows)
def test_render_is_pure_and_bounded(w):
    for render in (render_char, render_pixel):
        a, b = render(w), render(w)
        assert a == b
        assert a.cells.min() >= 0.0 and a.cells.max() <= 1.0


@settings(max_examples=25)
@given(windows)
def test_pixel_image_is_binary(w):
    cells = render_pixel(w).cells
    assert set(np.unique(cells)) <= {0.0, 1.0}


def test_ca_constant_images_are_fixed_points():
    zeros = MentalImage.zeros(5, 6)
    assert ca_step(zeros) == zeros
    ones = MentalImage(5, 6, np.ones((5, 6)))
    assert ca_step(ones) == ones


def test_ca_hand_example():
    img = MentalImage(3, 3, [[0, 0, 0], [1, 1, 1], [0, 0, 0]])
    out = ca_step(img)
    # centre: (up 0 + left 1 + down 0 + right 1) / 4
    assert out.cells[1, 1] == 0.5
    np.testing.assert_array_equal(out.cells[0], [0, 0, 0])
    np.testing.assert_array_equal(out.cells[1, [0, 2]], [1, 1])


def test_ca_rejects_small_images():
    with pytest.raises(ValueError):
        ca_step(MentalImage.zeros(2, 5))


@given(st.integers(3, 8), st.integers(3, 8), st.integers(0, 2**32 - 1))
def test_ca_preserves_range_and_shape(rows, cols, seed):
    img = MentalImage(rows, cols, np.random.default_rng(seed).random((rows, cols)))
    out = ca_step(img)
    assert (out.rows, out.cols) == (rows, cols)
    assert out.cells.min() >= 0.0 and out.cells.max() <= 1.0


def test_decode_inverts_encode():
    lines = ["Samu.is(robot);", "", "  x.y(z);"]
    decoded = decode_text(encode_text(lines))
    assert [d.rstrip() for d in decoded[:3]] == [l.rstrip() for l in lines]


def test_key_distinguishes_images():
    a = render_char(StatementWindow().push(A))
    b = render_char(StatementWindow().push(B))
    assert a.key() != b.key()
    assert a.key() == render_char(StatementWindow().push(A)).key()
    assert len(a.key()) == 16


def test_dump_formats():
    w = StatementWindow().push(Triplet("I", "love", "Samu"))
    assert dump_text(render_char(w)).splitlines()[0].rstrip() == "I.love(Samu);"
    pbm = dump_text(render_pixel(w)).splitlines()
    assert pbm[:2] == ["P1", "256 256"]
    assert len(pbm) == 258


def test_imagery_applies_ca_steps():
    w = StatementWindow().push(Triplet("I", "love", "Samu"))
    raw = Imagery("char", ca_steps=0).render(w)
    assert raw == render_char(w)
    assert Imagery("char", ca_steps=1).render(w) == ca_step(raw)
