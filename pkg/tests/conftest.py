"""Shared helpers for the test suite.

`make_template_corpus` builds the interchangeable-token corpus used by
the CBOW synonym-recovery checks: sentence templates whose slot is
filled with token X or token Y uniformly at random, so X and Y acquire
identical context distributions.
"""

import numpy as np

from opcaug.corpus import build_corpus, make_sample
from opcaug.rng import substream

TOKEN_X = 5
TOKEN_Y = 6


def make_template_corpus(seed, vocab_size=30, n_templates=200, instances_per_template=10,
                         sentence_len=9):
    rng = substream(seed, "templates")
    background = [t for t in range(1, vocab_size) if t not in (TOKEN_X, TOKEN_Y)]
    slot = sentence_len // 2
    samples = []
    counter = 0
    for t in range(n_templates):
        template = rng.choice(background, size=sentence_len, replace=True)
        for _ in range(instances_per_template):
            sentence = template.copy()
            sentence[slot] = TOKEN_X if rng.random() < 0.5 else TOKEN_Y
            samples.append(make_sample(f"s{counter:05d}", sentence, counter % 2))
            counter += 1
    return build_corpus(samples, vocab_size)


def brute_force_neighbours(rows, k):
    """O(|V|^2) nearest-neighbour oracle: explicit pair loop, squared
    Euclidean distances, ties broken toward the smaller index."""
    v = rows.shape[0]
    table = {}
    for i in range(1, v):
        scored = []
        for j in range(1, v):
            if j == i:
                continue
            d2 = float(np.sum((rows[i] - rows[j]) ** 2))
            scored.append((d2, j))
        scored.sort()
        table[i] = tuple(j for _, j in scored[:k])
    return table
