"""Compare the compiled kernels with the pure-Python fallback.

Runs the same SGD chunk, alias draws and batched Viterbi decode through both
backends on a small synthetic problem, reports wall time and the largest
difference between their outputs.

    python benchmarks/bench_kernels.py [--sentences 2000] [--iters 20000]
"""

import argparse
import time

import numpy as np

from jointtype import kernels
from jointtype.embedder import (TrainConfig, _space_tuple, _triple_tuple, build_graph,
                                init_model)
from jointtype.features import featurize_corpus
from jointtype.labeler import build_labeled_corpus
from jointtype.segmenter import run_segmentation
from jointtype.synthetic import generate_synthetic


def _timed(fn, repeat=1):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def bench_sgd(graph, cfg, n_iters, backend):
    impl = kernels.get_backend(backend)
    model = init_model(graph, cfg)
    flags = impl.FLAG_RELATION | impl.FLAG_ENTITY | impl.FLAG_TRIPLES
    args = (_space_tuple(model, graph, "rel"), _space_tuple(model, graph, "ent"),
            _triple_tuple(graph), cfg.d, cfg.alpha, cfg.lam, cfg.V, n_iters, 12345, flags,
            impl.LOSS_PARTIAL, 1, 0, n_iters, False)
    secs, _ = _timed(lambda: impl.train_chunk(*args))
    return secs, np.concatenate([m.ravel() for _, m in model.matrices()])


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--sentences", type=int, default=2000)
    ap.add_argument("--iters", type=int, default=20000)
    ap.add_argument("--draws", type=int, default=200000)
    args = ap.parse_args(argv)

    ds = generate_synthetic(n_sentences=args.sentences, seed=0)
    seg = run_segmentation(ds.corpus, ds.kb)
    docs = ds.train.doc_ids()
    lab = build_labeled_corpus([m for m in seg.mentions if m.doc_id in docs], ds.train, ds.kb)
    graph = build_graph(lab, featurize_corpus(lab, ds.train), ds.kb.hierarchy)
    cfg = TrainConfig()

    try:
        kernels.get_backend("cython")
        backends = ["cython", "python"]
    except ImportError:
        print("compiled extension not built; timing the Python fallback only")
        backends = ["python"]

    rows = []
    sgd = {b: bench_sgd(graph, cfg, args.iters, b) for b in backends}
    rows.append(("sgd iterations", args.iters, {b: s for b, (s, _) in sgd.items()},
                 float(np.max(np.abs(sgd[backends[0]][1] - sgd[backends[-1]][1])))))

    table = graph.ent.noise_table
    draws = {}
    for b in backends:
        impl = kernels.get_backend(b)
        draws[b] = _timed(lambda: impl.alias_draw_many(table.prob, table.alias, args.draws, 7))
    rows.append(("alias draws", args.draws, {b: s for b, (s, _) in draws.items()},
                 float(np.max(np.abs(draws[backends[0]][1] - draws[backends[-1]][1])))))

    rng = np.random.default_rng(0)
    lengths = rng.integers(1, 30, size=2000)
    offsets = np.concatenate([[0], np.cumsum(lengths)]).astype(np.int64)
    scores = rng.normal(size=(int(offsets[-1]), 6))
    vit = {}
    for b in backends:
        impl = kernels.get_backend(b)
        vit[b] = _timed(lambda: impl.viterbi_batch(scores, offsets))
    diff = float(np.max(np.abs(np.asarray(vit[backends[0]][1][0]) - np.asarray(vit[backends[-1]][1][0]))))
    rows.append(("viterbi sentences", len(lengths), {b: s for b, (s, _) in vit.items()}, diff))

    print(f"{'kernel':<18}{'n':>9}" + "".join(f"{b + ' s':>12}" for b in backends)
          + ("     speedup  max|diff|" if len(backends) == 2 else ""))
    for name, n, secs, diff in rows:
        line = f"{name:<18}{n:>9}" + "".join(f"{secs[b]:>12.4f}" for b in backends)
        if len(backends) == 2:
            line += f"{secs['python'] / secs['cython']:>12.1f}x  {diff:.1e}"
        print(line)


if __name__ == "__main__":
    main()
