#!/usr/bin/env python3
"""Compare the numba and pure-numpy kernel backends on training-shaped data.

Usage:
    python benchmarks/bench_kernels.py [--sentences 2000] [--dim 300]
                                       [--vocab 30000] [--repeats 5] [--train]

Each kernel is timed on both backends after a warmup call (so numba
compilation is excluded) and results are cross-checked with allclose.
"""

import argparse
import statistics
import time

import numpy as np

from paravec import kernels
from paravec.corpus import ParaphrasePair, tokenize
from paravec.encoders import Encoder
from paravec.store import WORD, build_vocab, init_matrix
from paravec.trainer import TrainingConfig, train


def make_ragged(rng, n_sentences, vocab_size, min_len=5, max_len=30):
    lengths = rng.integers(min_len, max_len + 1, size=n_sentences)
    offsets = np.zeros(n_sentences + 1, dtype=np.int64)
    np.cumsum(lengths, out=offsets[1:])
    idx = rng.integers(0, vocab_size, size=int(lengths.sum())).astype(np.int64)
    return idx, offsets


def timed(fn, repeats):
    fn()  # warmup (also triggers numba compilation once)
    samples = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - t0)
    return statistics.median(samples)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sentences", type=int, default=2000)
    parser.add_argument("--dim", type=int, default=300)
    parser.add_argument("--vocab", type=int, default=30000)
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--train", action="store_true", help="also time a full training epoch")
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    emb = rng.uniform(-0.1, 0.1, size=(args.vocab, args.dim))
    idx, offsets = make_ragged(rng, args.sentences, args.vocab)
    vectors = rng.normal(size=(args.sentences, args.dim))
    upstream = rng.normal(size=(args.sentences, args.dim))
    grad = rng.normal(size=(args.vocab, args.dim))
    m = np.zeros_like(grad)
    v = np.zeros_like(grad)

    cases = {
        "mean_rows": lambda: kernels.mean_rows(emb, idx, offsets),
        "scatter_rows": lambda: kernels.scatter_rows(np.zeros_like(emb), idx, offsets, upstream),
        "adam_update": lambda: kernels.adam_update(
            emb.copy(), grad, m.copy(), v.copy(), 0.001, 0.9, 0.999, 1e-8, 1
        ),
    }

    print(f"sentences={args.sentences} dim={args.dim} vocab={args.vocab} repeats={args.repeats}")
    print(f"{'kernel':<16}{'numpy (ms)':>12}{'numba (ms)':>12}{'speedup':>9}")
    results = {}
    for name, fn in cases.items():
        row = {}
        for backend in (kernels.NUMPY, kernels.NUMBA):
            kernels.set_backend(backend)
            row[backend] = timed(fn, args.repeats)
        results[name] = row
        print(
            f"{name:<16}{row[kernels.NUMPY] * 1e3:>12.2f}{row[kernels.NUMBA] * 1e3:>12.2f}"
            f"{row[kernels.NUMPY] / row[kernels.NUMBA]:>8.1f}x"
        )
    cos_ms = timed(lambda: kernels.cosine_matrix(vectors, vectors), args.repeats) * 1e3
    print(f"{'cosine_matrix':<16}{cos_ms:>12.2f}{'(BLAS, shared by both backends)':>33}")

    # cross-check the backends on one kernel output
    kernels.set_backend(kernels.NUMPY)
    a = kernels.mean_rows(emb, idx, offsets)
    kernels.set_backend(kernels.NUMBA)
    b = kernels.mean_rows(emb, idx, offsets)
    assert np.allclose(a, b, rtol=1e-12), "backends disagree"
    print("backend agreement: mean_rows allclose at rtol=1e-12")

    if args.train:
        words = [f"w{i}" for i in range(2000)]

        def sent():
            return tokenize(" ".join(rng.choice(words, size=int(rng.integers(5, 20)))))

        pairs = [ParaphrasePair(sent(), sent()) for _ in range(2000)]
        corpus = [p.reference for p in pairs] + [p.translation for p in pairs]
        cfg = TrainingConfig(batch_size=100, megabatch_multiplier=5, epochs=1, seed=0)
        print(f"\n{'train epoch':<16}{'seconds':>12}")
        for backend in (kernels.NUMPY, kernels.NUMBA):
            kernels.set_backend(backend)
            enc = Encoder(kind="word_avg", word_store=init_matrix(build_vocab(corpus, WORD), args.dim, 0))
            train(pairs, enc, cfg)  # warm
            enc = Encoder(kind="word_avg", word_store=init_matrix(build_vocab(corpus, WORD), args.dim, 0))
            t0 = time.perf_counter()
            train(pairs, enc, cfg)
            print(f"{backend:<16}{time.perf_counter() - t0:>12.2f}")


if __name__ == "__main__":
    main()
