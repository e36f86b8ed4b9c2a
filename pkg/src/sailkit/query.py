"""Path expressions over a published state tree.

Grammar: ``$`` root, ``.name`` child, ``.*`` wildcard.  No filters, no
recursion.  Evaluation returns every matched value in document order.
"""

from __future__ import annotations

import re
from typing import Any

_SEGMENT = re.compile(r"\.([A-Za-z0-9_\-]+|\*)")


class MalformedQuery(Exception):
    def __init__(self, expr: str, reason: str):
        self.expr = expr
        self.reason = reason
        super().__init__(f"bad query {expr!r}: {reason}")


def parse_path(expr: str) -> list[str]:
    if not expr.startswith("$"):
        raise MalformedQuery(expr, "must start with '$'")
    rest = expr[1:]
    segments: list[str] = []
    pos = 0
    while pos < len(rest):
        m = _SEGMENT.match(rest, pos)
        if m is None:
            raise MalformedQuery(expr, f"unparseable at offset {pos + 1}")
        segments.append(m.group(1))
        pos = m.end()
    return segments


def evaluate_path(tree: Any, expr: str) -> list[Any]:
    segments = parse_path(expr)
    current = [tree]
    for seg in segments:
        nxt: list[Any] = []
        for node in current:
            if not isinstance(node, dict):
                continue
            if seg == "*":
                nxt.extend(node.values())
            elif seg in node:
                nxt.append(node[seg])
        current = nxt
    return current


def subscription_concept(expr: str) -> str | None:
    """Topic named by a subscription pattern ``$.<Concept>``; None for ``$.*``."""
    segments = parse_path(expr)
    if len(segments) != 1:
        raise MalformedQuery(expr, "subscription patterns have exactly one segment")
    return None if segments[0] == "*" else segments[0]
