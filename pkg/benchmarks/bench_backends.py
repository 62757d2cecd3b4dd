"""Time the compiled and pure-Python kernels side by side.

    python3 benchmarks/bench_backends.py [--repeat 5] [--seed 0]

Each row is the best of ``--repeat`` runs. The last row trains a full
hierarchical model on a synthetic corpus with each backend.
"""

import argparse
import time

import numpy as np
import scipy.sparse as sp

from probcascade import _backend, synth
from probcascade.corpus import parse_corpus
from probcascade.linear import TrainConfig
from probcascade.strategies import build_features, ppath_log_scores, train_hierarchical


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def kernel_cases(rng):
    X = sp.random(20000, 5000, density=0.002, random_state=rng, format="csr", dtype=np.float64)
    ip, ix, dv = X.indptr.astype(np.int64), X.indices.astype(np.int32), X.data
    y = np.where(rng.random(X.shape[0]) < 0.3, 1.0, -1.0)
    w = rng.normal(size=X.shape[1]) * 0.1
    v = rng.normal(size=X.shape[1])
    logits = rng.normal(size=(2000, 340)) * 4
    # complete 4-ary tree of depth 4 in preorder, minus the root
    parent = []
    stack = [(-1, 0)]
    while stack:
        par, depth = stack.pop()
        if depth:
            parent.append(par)
        if depth < 4:
            me = len(parent) - 1 if depth else -1
            stack.extend((me, depth + 1) for _ in range(4))
    parent = np.array(parent[:340], dtype=np.int64)

    def cases(k):
        curv = k.loss_grad(ip, ix, dv, y, w, 0.1, 1.0)[3]
        return {
            "loss_grad (20k x 5k)": lambda: k.loss_grad(ip, ix, dv, y, w, 0.1, 1.0),
            "hess_vec (20k x 5k)": lambda: k.hess_vec(ip, ix, dv, curv, v, 0.2, 1.0),
            "path_log_scores (2000 x 340)": lambda: k.path_log_scores(logits, parent),
        }

    return cases


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    names = _backend.available()
    rng = np.random.default_rng(args.seed)
    cases = kernel_cases(rng)
    rows = {}
    for name in names:
        for label, fn in cases(_backend.load(name)).items():
            rows.setdefault(label, {})[name] = best_of(fn, args.repeat)

    data = synth.generate(synth.SynthConfig(seed=args.seed))
    raw = parse_corpus(data.corpus_lines(data.train))
    X, idf = build_features(raw)
    Xt = idf.transform(parse_corpus(data.corpus_lines(data.test))).X
    for name in names:
        k = _backend.load(name)

        def train():
            m = train_hierarchical(data.hierarchy, X, TrainConfig(), feature_mode="tfidf", idf=idf, kernels=k)
            ppath_log_scores(m, Xt, kernels=k)

        rows.setdefault("train + score synthetic (84 nodes)", {})[name] = best_of(train, max(1, args.repeat // 2))

    width = max(len(r) for r in rows)
    print(f"{'case':<{width}}  " + "  ".join(f"{n:>10}" for n in names) + ("  speedup" if len(names) > 1 else ""))
    for label, t in rows.items():
        line = f"{label:<{width}}  " + "  ".join(f"{t[n] * 1e3:>8.2f}ms" for n in names)
        if len(names) > 1:
            line += f"  {t['python'] / t['cython']:>6.1f}x"
        print(line)


if __name__ == "__main__":
    main()
