"""LZW dictionary tree over a stream of triplets.

Each node is a triplet; the path from the root spells a phrase already seen in
the stream. Reading a triplet either extends the current phrase (the cursor
descends) or records a new phrase and restarts at the root. The children of
the cursor are the triplets that have followed the current phrase before,
which is what the engine uses to narrow its candidate actions.
"""

from __future__ import annotations

from typing import Iterator, Optional

from .triplet import Triplet

DEFAULT_MAX_DEPTH = 10


class LzwNode:
    __slots__ = ("triplet", "depth", "parent", "children", "index")

    def __init__(self, triplet: Optional[Triplet], depth: int, parent: Optional[LzwNode], index: int):
        self.triplet = triplet
        self.depth = depth
        self.parent = parent
        self.children: dict[Triplet, LzwNode] = {}
        self.index = index

    @property
    def is_root(self) -> bool:
        return self.parent is None

    def path(self) -> tuple[Triplet, ...]:
        out = []
        node = self
        while node.parent is not None:
            out.append(node.triplet)
            node = node.parent
        return tuple(reversed(out))

    def __repr__(self):
        return f"LzwNode({self.triplet}, depth={self.depth})"


class LzwTree:
    def __init__(self, max_depth: int = DEFAULT_MAX_DEPTH):
        if max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        self.max_depth = max_depth
        self.root = LzwNode(None, 0, None, 0)
        self.nodes: list[LzwNode] = [self.root]
        self.cursor = self.root

    def build_step(self, t: Triplet) -> LzwNode:
        """Feed one triplet and return the cursor after the update."""
        child = self.cursor.children.get(t)
        if child is not None:
            self.cursor = child
        else:
            if self.cursor.depth + 1 <= self.max_depth:
                self._add(self.cursor, t)
            self.cursor = self.root
        return self.cursor

    def _add(self, parent: LzwNode, t: Triplet) -> LzwNode:
        node = LzwNode(t, parent.depth + 1, parent, len(self.nodes))
        parent.children[t] = node
        self.nodes.append(node)
        return node

    def reset(self) -> None:
        self.cursor = self.root

    def __len__(self):
        return len(self.nodes) - 1

    def walk(self) -> Iterator[LzwNode]:
        """Post-order: every node after its subtree, the root last."""
        stack = [(self.root, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                yield node
            else:
                stack.append((node, True))
                for child in reversed(list(node.children.values())):
                    stack.append((child, False))

    def depth(self) -> int:
        return max(n.depth for n in self.nodes)

    def dump(self) -> str:
        return "\n".join(dump_line(n) for n in self.walk()) + "\n"

    # persistence: nodes in creation order, each naming its parent
    def to_records(self) -> list[tuple[int, Triplet]]:
        return [(n.parent.index, n.triplet) for n in self.nodes[1:]]

    @classmethod
    def from_records(cls, records, max_depth: int = DEFAULT_MAX_DEPTH, cursor: int = 0) -> LzwTree:
        tree = cls(max_depth)
        for parent_index, t in records:
            if not 0 <= parent_index < len(tree.nodes):
                raise ValueError(f"LZW record names unknown parent {parent_index}")
            parent = tree.nodes[parent_index]
            if t in parent.children or parent.depth + 1 > max_depth:
                raise ValueError(f"invalid LZW record ({parent_index}, {t})")
            tree._add(parent, t)
        if not 0 <= cursor < len(tree.nodes):
            raise ValueError(f"LZW cursor {cursor} out of range")
        tree.cursor = tree.nodes[cursor]
        return tree


def children(node: LzwNode) -> set[Triplet]:
    return set(node.children)


def dump_line(node: LzwNode) -> str:
    prefix = "_" * (2 * node.depth) + f"{node.depth}__ "
    if node.triplet is None:
        return prefix
    return prefix + f"{node.triplet.s} {node.triplet.p} {node.triplet.o}"
