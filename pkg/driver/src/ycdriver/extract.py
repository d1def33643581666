"""Pull command lines out of free-form model text.

Two emission styles count: fenced code blocks, where every non-comment
line is a command, and bare lines starting with ``yc-bench ``. Lines are
returned verbatim in document order; the benchmark's own parser strips
the ``yc-bench`` prefix, so both styles round-trip unchanged.
"""

import re

_FENCE = re.compile(r"```[^\n]*\n(.*?)```", re.DOTALL)
PREFIX = "yc-bench "


def _scan_bare(text: str, out: list[str]) -> None:
    for raw in text.splitlines():
        line = raw.strip()
        if line.startswith(PREFIX):
            out.append(line)


def extract_commands(text: str) -> list[str]:
    lines: list[str] = []
    position = 0
    for match in _FENCE.finditer(text):
        _scan_bare(text[position:match.start()], lines)
        for raw in match.group(1).splitlines():
            line = raw.strip()
            if line and not line.startswith("#"):
                lines.append(line)
        position = match.end()
    _scan_bare(text[position:], lines)
    return lines
