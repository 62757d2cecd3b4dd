"""Synthetic hierarchical corpora for desk-scale experiments.

The tree is a complete ``branching``-ary tree of the given depth, numbered
breadth-first from root 0. Every non-root node owns a disjoint block of
characteristic features. A document of leaf L draws a few tokens from each
node on L's root-to-leaf path; with probability ``noise`` a token is
replaced by one from a random node at the same depth (cross-talk), which
blurs decisions at that level.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .corpus import format_document
from .hierarchy import Hierarchy, serialize_hierarchy


@dataclass(frozen=True)
class SynthConfig:
    depth: int = 3
    branching: int = 4
    docs_per_leaf: int = 50
    test_docs_per_leaf: int = 20
    vocab_size: int = 20000
    noise: float = 0.4
    tokens_per_node: float = 4.0
    seed: int = 0

    def __post_init__(self):
        if self.depth < 1:
            raise ValueError("depth must be >= 1")
        if self.branching < 1:
            raise ValueError("branching must be >= 1")
        if self.docs_per_leaf < 1 or self.test_docs_per_leaf < 0:
            raise ValueError("docs_per_leaf must be >= 1 and test_docs_per_leaf >= 0")
        if not 0.0 <= self.noise <= 1.0:
            raise ValueError("noise must lie in [0, 1]")
        if self.tokens_per_node < 1:
            raise ValueError("tokens_per_node must be >= 1")
        if self.vocab_size < self.num_nodes - 1:
            raise ValueError(f"vocab_size must be at least the number of non-root nodes ({self.num_nodes - 1})")

    @property
    def num_nodes(self) -> int:
        b = self.branching
        return sum(b**k for k in range(self.depth + 1))

    @property
    def num_leaves(self) -> int:
        return self.branching**self.depth


@dataclass(frozen=True)
class SynthData:
    hierarchy: Hierarchy
    train: list[tuple[int, list[tuple[int, int]]]]
    test: list[tuple[int, list[tuple[int, int]]]]
    node_features: dict[int, np.ndarray]

    def hierarchy_lines(self) -> list[str]:
        return serialize_hierarchy(self.hierarchy)

    @staticmethod
    def corpus_lines(docs) -> list[str]:
        return [format_document(label, feats) for label, feats in docs]


def complete_tree(depth: int, branching: int) -> Hierarchy:
    edges = []
    frontier = [0]
    next_id = 1
    for _ in range(depth):
        nxt = []
        for p in frontier:
            for _ in range(branching):
                edges.append((p, next_id))
                nxt.append(next_id)
                next_id += 1
        frontier = nxt
    return Hierarchy(edges)


def generate(cfg: SynthConfig) -> SynthData:
    rng = np.random.default_rng(cfg.seed)
    h = complete_tree(cfg.depth, cfg.branching)
    nodes = [n for n in h.preorder if n != h.root]
    per_node = cfg.vocab_size // len(nodes)
    perm = rng.permutation(cfg.vocab_size)
    owned = {n: np.sort(perm[i * per_node : (i + 1) * per_node]) for i, n in enumerate(sorted(nodes))}
    by_depth: dict[int, list[int]] = {}
    for n in sorted(nodes):
        by_depth.setdefault(h.depth[n], []).append(n)

    paths = {}
    for leaf in sorted(h.leaves):
        chain = [leaf]
        while h.parent_of[chain[-1]] != h.root:
            chain.append(h.parent_of[chain[-1]])
        paths[leaf] = chain[::-1]

    def document(leaf):
        counts: dict[int, int] = {}
        for node in paths[leaf]:
            peers = by_depth[h.depth[node]]
            n_tok = 1 + rng.poisson(cfg.tokens_per_node - 1)
            for _ in range(n_tok):
                src = node
                if cfg.noise > 0 and rng.random() < cfg.noise:
                    src = peers[rng.integers(len(peers))]
                feats = owned[src]
                f = int(feats[rng.integers(len(feats))])
                counts[f] = counts.get(f, 0) + 1
        return sorted(counts.items())

    def sample(n_per_leaf):
        docs = [(leaf, document(leaf)) for leaf in sorted(h.leaves) for _ in range(n_per_leaf)]
        order = rng.permutation(len(docs))
        return [docs[i] for i in order]

    train = sample(cfg.docs_per_leaf)
    test = sample(cfg.test_docs_per_leaf)
    return SynthData(h, train, test, owned)


def write(data: SynthData, out_dir: str | os.PathLike) -> dict[str, str]:
    os.makedirs(out_dir, exist_ok=True)
    paths = {
        "hierarchy": os.path.join(out_dir, "hierarchy.txt"),
        "train": os.path.join(out_dir, "train.txt"),
        "test": os.path.join(out_dir, "test.txt"),
    }
    contents = {
        "hierarchy": data.hierarchy_lines(),
        "train": data.corpus_lines(data.train),
        "test": data.corpus_lines(data.test),
    }
    for key, path in paths.items():
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.writelines(line + "\n" for line in contents[key])
    return paths
