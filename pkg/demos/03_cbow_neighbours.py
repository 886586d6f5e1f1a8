"""Train the CBOW language model on a corpus with two interchangeable
tokens and watch them become each other's nearest neighbours.

Token 5 and token 6 fill the same slot of every sentence template, so
they see identical contexts; the embedding should place them together.
"""

import numpy as np

from opcaug import CbowConfig, similarity_table, train_cbow
from opcaug.corpus import build_corpus, make_sample
from opcaug.rng import substream

VOCAB_SIZE = 30
X, Y = 5, 6

rng = substream(0, "demo-templates")
background = [t for t in range(1, VOCAB_SIZE) if t not in (X, Y)]
samples = []
for t in range(200):
    template = rng.choice(background, size=9, replace=True)
    for j in range(10):
        sentence = template.copy()
        sentence[4] = X if rng.random() < 0.5 else Y
        samples.append(make_sample(f"s{t:03d}-{j}", sentence, 0 if j % 2 else 1))
corpus = build_corpus(samples, VOCAB_SIZE)
print(f"corpus: {len(corpus)} sentences over {VOCAB_SIZE - 1} opcodes")

emb = train_cbow(corpus, CbowConfig(dim=8, window=5, epochs=5, seed=0))
print("per-epoch mean loss:", " ".join(f"{x:.3f}" for x in emb.epoch_losses))

table = similarity_table(emb, k=10)
print(f"\ntop-10 of token {X}: {table.neighbours[X]}")
print(f"top-10 of token {Y}: {table.neighbours[Y]}")
print(f"\nmutual neighbours: {Y in table.neighbours[X] and X in table.neighbours[Y]}")

d_xy = float(np.linalg.norm(emb.rows[X] - emb.rows[Y]))
others = [float(np.linalg.norm(emb.rows[X] - emb.rows[t])) for t in background]
print(f"distance X-Y: {d_xy:.3f}  vs median X-background: {np.median(others):.3f}")
