"""Apply each augmentation method to the same opcode sequence and show
what changes. All methods take a strength alpha (fraction modified) and
fire only when a Bernoulli(beta) gate passes."""

import numpy as np

from opcaug import (
    AugmentationSpec,
    AugmentContext,
    apply_augmentation,
    build_prefix_table,
    build_vocabulary,
    similarity_table,
)
from opcaug.cbow import EmbeddingMatrix
from opcaug.rng import substream

vocab = build_vocabulary(
    ["move", "move/16", "move-wide", "const", "const/4", "goto", "if-eq", "if-ne",
     "add-int", "sub-int", "mul-int", "invoke-virtual"]
)
ctx = AugmentContext(vocab=vocab, prefix_table=build_prefix_table(vocab))

# a toy embedding gives the two adaptive methods something to look up
emb = EmbeddingMatrix(rows=np.random.default_rng(7).normal(size=(vocab.size, 8)), d=8)
ctx.lm_table = similarity_table(emb, k=3)
ctx.self_table = ctx.lm_table

rng = substream(0, "demo")
seq = rng.integers(1, vocab.size, size=16)
names = lambda s: " ".join(vocab.mnemonics[i][:7] for i in s)
print("original:           ", names(seq))

for method in ("input_dropout", "random_replacement", "similar_instructions",
               "correlated_input_dropout", "language_model", "self_embedding"):
    spec = AugmentationSpec(method=method, alpha=0.25, beta=1.0)
    out = apply_augmentation(spec, seq, ctx, substream(4, method))
    marked = " ".join(
        f"*{vocab.mnemonics[o][:6]}" if o != s else vocab.mnemonics[o][:7]
        for s, o in zip(seq, out)
    )
    print(f"{method:24s} {marked}")

print("\n'*' marks replaced positions; '<blank>' entries are the reserved")
print("index-0 token the dropout methods emit.")

composite = AugmentationSpec(
    method="composite",
    parts=(
        AugmentationSpec(method="self_embedding", alpha=0.15, beta=1.0),
        AugmentationSpec(method="input_dropout", alpha=0.15, beta=1.0),
    ),
)
counts = {}
out = apply_augmentation(composite, seq, ctx, substream(2, "composite"), counts=counts)
print("\ncomposite (self_embedding + input_dropout):", names(out))
print("application counts:", counts)
