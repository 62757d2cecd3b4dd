"""Rooted class trees: parsing, validation and structural queries.

A hierarchy file lists one ``parent child`` edge per line. The root is the
single node that never appears as a child; leaves are the class labels.
"""

from __future__ import annotations

from collections.abc import Iterable, Mapping, Sequence
from types import MappingProxyType

from .errors import CycleDetected, DuplicateParent, EmptyInput, MalformedLine, MultipleRoots, UnknownNode


class Hierarchy:
    """Immutable tree over non-negative integer node ids.

    Children keep the order in which their edges first appeared, which fixes
    every downstream tie-break.
    """

    __slots__ = ("parent_of", "children_of", "root", "leaves", "depth", "preorder", "_leaf_desc")

    def __init__(self, edges: Iterable[tuple[int, int]]):
        parent_of: dict[int, int] = {}
        children: dict[int, list[int]] = {}
        nodes: dict[int, None] = {}
        for p, c in edges:
            if p < 0 or c < 0:
                raise ValueError(f"node ids must be non-negative, got edge {p} {c}")
            if c in parent_of:
                if parent_of[c] == p:
                    raise DuplicateParent(f"edge {p} {c} listed twice")
                raise DuplicateParent(f"node {c} has two parents: {parent_of[c]} and {p}")
            parent_of[c] = p
            children.setdefault(p, []).append(c)
            nodes.setdefault(p)
            nodes.setdefault(c)
        if not nodes:
            raise EmptyInput("hierarchy has no edges")

        roots = [n for n in nodes if n not in parent_of]
        if not roots:
            raise CycleDetected("every node has a parent")
        if len(roots) > 1:
            raise MultipleRoots(f"candidate roots: {sorted(roots)}")
        root = roots[0]

        # Each node has at most one parent, so anything unreachable from the
        # root sits on a cycle.
        depth = {root: 0}
        preorder = []
        stack = [root]
        while stack:
            n = stack.pop()
            preorder.append(n)
            kids = children.get(n, ())
            for c in reversed(kids):
                depth[c] = depth[n] + 1
                stack.append(c)
        if len(depth) != len(nodes):
            stray = sorted(set(nodes) - set(depth))
            raise CycleDetected(f"nodes on a cycle: {stray[:10]}")

        self.root = root
        self.parent_of = MappingProxyType(parent_of)
        self.children_of = MappingProxyType({n: tuple(children.get(n, ())) for n in preorder})
        self.leaves = frozenset(n for n in preorder if not children.get(n))
        self.depth = MappingProxyType(depth)
        self.preorder = tuple(preorder)
        self._leaf_desc: dict[int, frozenset[int]] = {}

    def __contains__(self, n) -> bool:
        return n in self.depth

    def __len__(self) -> int:
        return len(self.preorder)

    def __repr__(self) -> str:
        return f"Hierarchy(nodes={len(self)}, leaves={len(self.leaves)}, root={self.root})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, Hierarchy):
            return NotImplemented
        return self.root == other.root and dict(self.children_of) == dict(other.children_of)

    def __hash__(self):
        return hash((self.root, self.preorder))

    @property
    def nodes(self) -> tuple[int, ...]:
        return self.preorder

    def is_leaf(self, n: int) -> bool:
        self._check(n)
        return n in self.leaves

    def edges(self) -> list[tuple[int, int]]:
        """Edges in preorder, children in their stored order."""
        return [(p, c) for p in self.preorder for c in self.children_of[p]]

    def siblings(self, n: int) -> tuple[int, ...]:
        self._check(n)
        if n == self.root:
            return ()
        return tuple(s for s in self.children_of[self.parent_of[n]] if s != n)

    def _check(self, n):
        if n not in self.depth:
            raise UnknownNode(f"unknown node {n!r}")


def parse_hierarchy(lines: Iterable[str]) -> Hierarchy:
    edges = []
    for line_no, line in enumerate(lines, start=1):
        parts = line.split()
        if not parts:
            continue
        if len(parts) != 2:
            raise MalformedLine(line_no, "expected 'parent child'")
        try:
            p, c = int(parts[0]), int(parts[1])
        except ValueError:
            raise MalformedLine(line_no, "node ids must be integers") from None
        if p < 0 or c < 0:
            raise MalformedLine(line_no, "node ids must be non-negative")
        edges.append((p, c))
    if not edges:
        raise EmptyInput("hierarchy input has no edges")
    return Hierarchy(edges)


def read_hierarchy(path) -> Hierarchy:
    with open(path, encoding="utf-8") as fh:
        return parse_hierarchy(fh)


def serialize_hierarchy(h: Hierarchy) -> list[str]:
    return [f"{p} {c}" for p, c in h.edges()]


def write_hierarchy(h: Hierarchy, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for line in serialize_hierarchy(h):
            fh.write(line + "\n")


def leaf_descendants(h: Hierarchy, n: int) -> frozenset[int]:
    h._check(n)
    cached = h._leaf_desc.get(n)
    if cached is not None:
        return cached
    out = []
    stack = [n]
    while stack:
        m = stack.pop()
        kids = h.children_of[m]
        if kids:
            stack.extend(kids)
        else:
            out.append(m)
    result = frozenset(out)
    h._leaf_desc[n] = result
    return result


def ancestors(h: Hierarchy, n: int) -> list[int]:
    """Parent chain of ``n`` up to and including the root."""
    h._check(n)
    out = []
    parent_of = h.parent_of
    while n in parent_of:
        n = parent_of[n]
        out.append(n)
    return out


def path_from_root(h: Hierarchy, n: int) -> list[int]:
    """Nodes from the root's child down to ``n`` (empty for the root)."""
    if n == h.root:
        h._check(n)
        return []
    chain = ancestors(h, n)
    chain.pop()
    chain.reverse()
    chain.append(n)
    return chain


def lca(h: Hierarchy, a: int, b: int) -> int:
    h._check(a)
    h._check(b)
    depth, parent_of = h.depth, h.parent_of
    while depth[a] > depth[b]:
        a = parent_of[a]
    while depth[b] > depth[a]:
        b = parent_of[b]
    while a != b:
        a = parent_of[a]
        b = parent_of[b]
    return a


def tree_distance(h: Hierarchy, a: int, b: int) -> int:
    """Number of edges on the path between ``a`` and ``b``."""
    top = lca(h, a, b)
    return h.depth[a] + h.depth[b] - 2 * h.depth[top]


def from_parent_map(parent_of: Mapping[int, int], order: Sequence[int] | None = None) -> Hierarchy:
    """Build a tree from a child->parent mapping, iterating children in ``order``."""
    keys = order if order is not None else list(parent_of)
    return Hierarchy((parent_of[c], c) for c in keys)
