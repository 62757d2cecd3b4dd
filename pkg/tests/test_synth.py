import hashlib

import pytest

from probcascade import synth
from probcascade.corpus import parse_corpus
from probcascade.evaluation import evaluate
from probcascade.hierarchy import parse_hierarchy
from probcascade.linear import TrainConfig
from probcascade.strategies import (
    build_features,
    cascade_predict_batch,
    flat_predict_batch,
    ppath_predict_batch,
    train_flat,
    train_hierarchical,
)


def digest(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


def test_counts():
    data = synth.generate(synth.SynthConfig(depth=2, branching=2, docs_per_leaf=10, test_docs_per_leaf=3, vocab_size=60))
    assert len(data.hierarchy.leaves) == 4
    assert len(data.train) == 40 and len(data.test) == 12
    assert sorted(data.hierarchy.nodes) == list(range(7))


def test_documents_carry_path_features():
    cfg = synth.SynthConfig(depth=2, branching=3, docs_per_leaf=5, vocab_size=120, noise=0.0)
    data = synth.generate(cfg)
    h = data.hierarchy
    for leaf, feats in data.train:
        allowed = set(data.node_features[leaf].tolist()) | set(data.node_features[h.parent_of[leaf]].tolist())
        assert {f for f, _ in feats} <= allowed
        assert all(v > 0 for _, v in feats)


def test_same_seed_byte_identical(tmp_path):
    cfg = synth.SynthConfig(depth=2, branching=3, docs_per_leaf=7, vocab_size=500, seed=11)
    a = synth.write(synth.generate(cfg), tmp_path / "a")
    b = synth.write(synth.generate(cfg), tmp_path / "b")
    for key in ("hierarchy", "train", "test"):
        assert (tmp_path / "a" / f"{key}.txt").read_bytes() == (tmp_path / "b" / f"{key}.txt").read_bytes()
    assert a.keys() == b.keys()
    other = synth.SynthConfig(depth=2, branching=3, docs_per_leaf=7, vocab_size=500, seed=12)
    synth.write(synth.generate(other), tmp_path / "c")
    assert digest(tmp_path / "a" / "train.txt") != digest(tmp_path / "c" / "train.txt")


def test_written_files_parse(tmp_path):
    paths = synth.write(synth.generate(synth.SynthConfig(depth=2, branching=2, docs_per_leaf=4, vocab_size=50)), tmp_path)
    h = parse_hierarchy(open(paths["hierarchy"]))
    c = parse_corpus(open(paths["train"]))
    c.check_labels(h, require=True)
    assert len(c) == 16


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_noise_free_data_is_perfectly_separated(seed):
    # two features per node keeps every test token inside the training vocabulary
    cfg = synth.SynthConfig(depth=2, branching=2, docs_per_leaf=10, test_docs_per_leaf=10, vocab_size=12, noise=0.0, seed=seed)
    data = synth.generate(cfg)
    h = data.hierarchy
    raw = parse_corpus(data.corpus_lines(data.train))
    test = parse_corpus(data.corpus_lines(data.test))
    X, idf = build_features(raw)
    hier = train_hierarchical(h, X, TrainConfig(), feature_mode="tfidf", idf=idf)
    flat = train_flat(h, X, TrainConfig(), feature_mode="tfidf", idf=idf)
    Xt = hier.prepare(test)
    gold = test.labels.tolist()
    for pred in (ppath_predict_batch(hier, Xt), cascade_predict_batch(hier, Xt), flat_predict_batch(flat, Xt)):
        assert evaluate(h, gold, pred.tolist()).accuracy == 1.0


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(depth=0),
        dict(branching=0),
        dict(docs_per_leaf=0),
        dict(test_docs_per_leaf=-1),
        dict(noise=1.5),
        dict(noise=-0.1),
        dict(tokens_per_node=0.5),
        dict(depth=3, branching=4, vocab_size=10),
    ],
)
def test_invalid_parameters(kwargs):
    with pytest.raises(ValueError):
        synth.SynthConfig(**kwargs)
