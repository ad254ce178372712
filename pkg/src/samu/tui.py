"""Character-terminal front end: imagery pane, response pane, input line.

Without an interactive terminal (or with ``--line``) the same session runs as
a plain REPL that reads stdin and writes one prompt-prefixed reply per line,
which is also how scripts drive the agent.
"""

from __future__ import annotations

import argparse
import logging
import sys
from typing import Optional, Sequence, TextIO

import numpy as np

from .agent import AgentResponse, AgentSession, install_signal_handlers
from .errors import SamuError
from .imagery import CHAR_COLS, CHAR_ROWS, Imagery, MentalImage, decode_text
from .qengine import QEngine

IMAGERY_ROWS = 10
_SHADES = " ░▒▓█"


def render_imagery_pane(img: MentalImage) -> list[str]:
    """Text lines for the top pane.

    A character image is decoded back to its 10x80 grid; anything else is
    shown as a coarse block-character preview.
    """
    if (img.rows, img.cols) == (CHAR_ROWS, CHAR_COLS):
        return [line.rstrip() for line in decode_text(img)]
    rows, cols = min(img.rows, 16), min(img.cols, 64)
    h, w = img.rows // rows, img.cols // cols
    blocks = img.cells[: rows * h, : cols * w].reshape(rows, h, cols, w).mean(axis=(1, 3))
    levels = np.minimum((blocks * 4 * len(_SHADES)).astype(int), len(_SHADES) - 1)
    return ["".join(_SHADES[v] for v in row).rstrip() for row in levels]


def imagery_of(engine: QEngine) -> MentalImage:
    # the raw layout without CA smoothing, so text stays readable
    cfg = engine.config
    return Imagery(cfg.imagery, cfg.arrangement, 0).render(engine.window)


def format_reply(resp: AgentResponse) -> str:
    return f"{resp.prompt}> {resp.text}"


def run_line_mode(session: AgentSession, stdin: TextIO = sys.stdin, stdout: TextIO = sys.stdout, echo_prompt: bool = False) -> int:
    while True:
        if echo_prompt:
            stdout.write(f"{session.caregiver}@Caregiver> ")
            stdout.flush()
        line = stdin.readline()
        if not line:
            session._save_logged()
            session.close()
            return 0
        resp = session.handle_line(line)
        if resp.text or resp.command:
            stdout.write(format_reply(resp) + "\n")
            stdout.flush()
        if resp.quit:
            return 0


class Screen:
    """Three panes laid out on every redraw, so a resize just repaints."""

    def __init__(self, stdscr, session: AgentSession):
        self.stdscr = stdscr
        self.session = session
        self.history: list[str] = []
        self.buffer = ""

    def layout(self):
        height, width = self.stdscr.getmaxyx()
        top = min(IMAGERY_ROWS, max(0, height - 3))
        return height, width, top

    def draw(self) -> None:
        import curses

        scr = self.stdscr
        height, width, top = self.layout()
        scr.erase()
        for y, line in enumerate(render_imagery_pane(imagery_of(self.session.engine))[:top]):
            scr.addnstr(y, 0, line, width - 1)
        if top < height - 2:
            scr.hline(top, 0, curses.ACS_HLINE, width)
        middle = max(0, height - top - 3)
        for i, line in enumerate(self.history[-middle:] if middle else []):
            scr.addnstr(top + 1 + i, 0, line, width - 1)
        if height >= 2:
            scr.hline(height - 2, 0, curses.ACS_HLINE, width)
        prompt = f"{self.session.caregiver}@Caregiver> "
        scr.addnstr(height - 1, 0, (prompt + self.buffer)[-(width - 1) :], width - 1)
        scr.refresh()

    def run(self) -> int:
        import curses

        self.draw()
        while True:
            try:
                ch = self.stdscr.get_wch()
            except curses.error:
                continue
            if ch == curses.KEY_RESIZE:
                curses.update_lines_cols()
            elif ch in ("\n", "\r", curses.KEY_ENTER):
                line, self.buffer = self.buffer, ""
                resp = self.session.handle_line(line)
                if resp.text or resp.command:
                    self.history.append(format_reply(resp))
                if resp.quit:
                    return 0
            elif ch in (curses.KEY_BACKSPACE, "\b", "\x7f"):
                self.buffer = self.buffer[:-1]
            elif isinstance(ch, str) and ch.isprintable():
                self.buffer += ch
            self.draw()


def run_tui(session: AgentSession, force_line_mode: bool = False) -> int:
    if force_line_mode or not (sys.stdin.isatty() and sys.stdout.isatty()):
        return run_line_mode(session, echo_prompt=sys.stdin.isatty())
    try:
        import curses
    except ImportError:
        return run_line_mode(session, echo_prompt=True)
    return curses.wrapper(lambda stdscr: Screen(stdscr, session).run())


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="samu", description="Talk to the agent from a character terminal.")
    p.add_argument("--name", default="Samu")
    p.add_argument("--caregiver", default="Caregiver")
    p.add_argument("--soul", default=None, help="soul file (default: <data-dir>/samu.soul.txt)")
    p.add_argument("--data-dir", default=".", help="where the soul and the conversation files live")
    p.add_argument("--line", action="store_true", help="plain line mode even on a terminal")
    p.add_argument("--autosave", type=int, default=1000, metavar="STEPS")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        session = AgentSession.open(args.data_dir, args.soul, name=args.name, caregiver=args.caregiver, autosave_every=args.autosave)
    except (SamuError, OSError) as exc:
        print(f"samu: {exc}", file=sys.stderr)
        return 2
    install_signal_handlers(session)
    return run_tui(session, args.line)


if __name__ == "__main__":
    sys.exit(main())
