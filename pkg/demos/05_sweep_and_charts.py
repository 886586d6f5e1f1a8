"""Strength sweep at demo scale: vary alpha for one augmentation method,
compare each run against the no-augmentation baseline, and emit the
text table plus an SVG chart of %-difference-from-baseline.

The same flow is available from the command line:

    opcaug gen-synth --config demo.json --out corpus.tsv
    opcaug sweep --config demo.json --alphas 0.05,0.1,0.2,0.3,0.4,0.5
"""

from pathlib import Path

from opcaug import (
    AugmentationSpec,
    ModelShape,
    SynthConfig,
    TrainConfig,
    generate_synthetic,
    make_folds,
    sweep,
)
from opcaug.report import sweep_table
from opcaug.svgchart import Series, render_chart
from opcaug.vocab import synthetic_vocabulary

synth = SynthConfig(vocab_size=20, seq_len=96, n_malware=40, n_benign=40,
                    motifs=((4, 9, 14, 2),), plant_rate=0.85)
corpus = generate_synthetic(synth, seed=3)
vocab = synthetic_vocabulary(synth.vocab_size - 1)
folds = make_folds(corpus, 3, seed=3)

config = TrainConfig(
    shape=ModelShape(vocab_size=synth.vocab_size, emb_dim=8, num_filters=16, filter_len=8),
    epochs=15,
    seed=3,
    max_seq_len=synth.seq_len,
    augmentation=AugmentationSpec(method="input_dropout", alpha=0.2, beta=0.5),
)

alphas = [0.05, 0.1, 0.2, 0.3, 0.4, 0.5]
print(f"sweeping input_dropout over alpha={alphas} (3-fold CV each, plus baseline)...")
report = sweep(config, alphas, corpus, folds, vocab)
print()
print(sweep_table(report))

pct = [100.0 * (f1 - report.baseline_f1) / report.baseline_f1 for _, f1 in report.rows]
chart = render_chart(
    [Series(label="input_dropout", xs=alphas, ys=pct)],
    title="f1 difference from baseline",
    x_label="augmentation strength (alpha)",
    y_label="% difference from baseline f1",
)
out = Path("demo_sweep_chart.svg")
out.write_text(chart)
print(f"chart written to {out.resolve()}")
