"""Command-line surface.

Subcommands: gen-synth, build-vocab, cbow, train, cv, sweep, size-study,
preview-aug, report. One JSON config file plus flag overrides (flags
win); OPCAUG_OUT_DIR overrides the configured output directory. Exit
codes: 0 success, 1 usage/config error, 2 data error, 3 training
divergence. Output files are written atomically (temp + rename).
"""

import argparse
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .augment import AugmentationSpec, AugmentContext, apply_counting_changes, methods_in
from .cbow import load_embedding, save_embedding, similarity_table, train_cbow
from .config import RunConfig, load_config
from .corpus import generate_synthetic, load_corpus, make_folds, truncate
from .errors import ConfigError, OpcaugError, exit_code
from .net import count_parameters, load_checkpoint, save_checkpoint, snapshot_embedding
from .rng import substream
from .report import (
    cv_records,
    cv_table,
    parse_records,
    render_records,
    size_study_records,
    size_study_table,
    sweep_records,
    sweep_table,
)
from .svgchart import Series, render_chart
from .trainer import cross_validate, sweep, train, with_alpha
from .vocab import (
    build_prefix_table,
    build_vocabulary,
    decode,
    load_vocabulary,
    synthetic_vocabulary,
)

DEFAULT_ALPHAS = "0.05,0.1,0.2,0.3,0.4,0.5"
DEFAULT_FILTERS = "32,64,128,256"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + f".tmp{os.getpid()}")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def _with_beta(spec: AugmentationSpec, beta: float) -> AugmentationSpec:
    if spec.method == "composite":
        return replace(spec, beta=beta, parts=tuple(replace(p, beta=beta) for p in spec.parts))
    return replace(spec, beta=beta)


def _load_run_config(args) -> RunConfig:
    cfg = load_config(args.config) if getattr(args, "config", None) else RunConfig()
    env_out = os.environ.get("OPCAUG_OUT_DIR")
    if env_out:
        cfg = replace(cfg, out_dir=env_out)
    simple = {
        "seed": "seed", "out_dir": "out_dir", "epochs": "epochs", "k": "k",
        "corpus": "corpus", "vocab": "vocab", "format": "corpus_format",
    }
    for flag, fieldname in simple.items():
        value = getattr(args, flag, None)
        if value is not None:
            cfg = replace(cfg, **{fieldname: value})
    method = getattr(args, "method", None)
    if method is not None:
        cfg = replace(cfg, augmentation=AugmentationSpec(method=method, alpha=0.2, beta=0.5))
    if getattr(args, "alpha", None) is not None:
        if cfg.augmentation is None:
            raise ConfigError("--alpha given but no augmentation configured")
        cfg = replace(cfg, augmentation=with_alpha(cfg.augmentation, args.alpha))
    if getattr(args, "beta", None) is not None:
        if cfg.augmentation is None:
            raise ConfigError("--beta given but no augmentation configured")
        cfg = replace(cfg, augmentation=_with_beta(cfg.augmentation, args.beta))
    return cfg


def _out_dir(cfg: RunConfig) -> Path:
    path = Path(cfg.out_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _load_data(cfg: RunConfig):
    if not cfg.vocab:
        raise ConfigError("a vocabulary path is required (config key 'vocab' or --vocab)")
    if not cfg.corpus:
        raise ConfigError("a corpus path is required (config key 'corpus' or --corpus)")
    if not Path(cfg.vocab).exists():
        raise ConfigError(f"vocabulary file not found: {cfg.vocab}")
    if not Path(cfg.corpus).exists():
        raise ConfigError(f"corpus file not found: {cfg.corpus}")
    vocab = load_vocabulary(cfg.vocab)
    corpus = load_corpus(cfg.corpus, vocab, fmt=cfg.corpus_format)
    if corpus.duplicates_dropped:
        print(f"dropped {corpus.duplicates_dropped} duplicate sequence(s) from {cfg.corpus}",
              file=sys.stderr)
    return vocab, corpus


def cmd_gen_synth(args) -> None:
    cfg = _load_run_config(args)
    out_dir = _out_dir(cfg)
    corpus = generate_synthetic(cfg.synth, cfg.seed)
    vocab = synthetic_vocabulary(cfg.synth.vocab_size - 1)
    out = Path(args.out) if args.out else out_dir / "synth_corpus.tsv"
    fmt = args.format or "mnemonic"
    lines = []
    for s in corpus.samples:
        if fmt == "mnemonic":
            body = " ".join(decode(vocab, s.opcodes))
        else:
            body = " ".join(str(int(i)) for i in s.opcodes)
        lines.append(f"{s.id}\t{s.label}\t{body}")
    _write_atomic(out, "\n".join(lines) + "\n")
    vocab_path = Path(str(out) + ".vocab")
    _write_atomic(vocab_path, "\n".join(vocab.mnemonics[1:]) + "\n")
    n_mal = sum(1 for s in corpus.samples if s.label == 1)
    n_ben = len(corpus) - n_mal
    print(f"wrote {out} ({len(corpus)} samples: {n_mal} malware, {n_ben} benign)")
    print(f"wrote {vocab_path} ({vocab.size - 1} mnemonics)")


def cmd_build_vocab(args) -> None:
    source = Path(args.corpus_file)
    if not source.exists():
        raise ConfigError(f"corpus file not found: {source}")
    seen = set()
    ordered = []
    with open(source, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise ConfigError(f"malformed corpus line {source}:{line_no}")
            for tok in parts[2].split():
                if tok not in seen:
                    seen.add(tok)
                    ordered.append(tok)
    vocab = build_vocabulary(ordered)
    _write_atomic(Path(args.out), "\n".join(vocab.mnemonics[1:]) + "\n")
    print(f"wrote {args.out} ({vocab.size - 1} mnemonics)")


def cmd_cbow(args) -> None:
    cfg = _load_run_config(args)
    vocab, corpus = _load_data(cfg)
    emb = train_cbow(corpus, cfg.cbow)
    out = Path(args.out) if args.out else _out_dir(cfg) / "cbow_embedding.txt"
    out.parent.mkdir(parents=True, exist_ok=True)
    tmp = out.with_name(out.name + f".tmp{os.getpid()}")
    save_embedding(emb, tmp)
    os.replace(tmp, out)
    losses = " ".join(f"{x:.5f}" for x in emb.epoch_losses)
    print(f"wrote {out} ({emb.vocab_size} x {emb.d}); per-epoch loss: {losses}")


def cmd_train(args) -> None:
    cfg = _load_run_config(args)
    vocab, corpus = _load_data(cfg)
    out_dir = _out_dir(cfg)
    tc = cfg.train_config(vocab.size)
    prefix_table = build_prefix_table(vocab)
    params, history = train(tc, corpus.samples, vocab, prefix_table)
    ckpt = out_dir / "model.ckpt"
    tmp = ckpt.with_name(ckpt.name + f".tmp{os.getpid()}")
    save_checkpoint(params, tmp)
    os.replace(tmp, ckpt)
    lines = ["# train history"]
    for i, loss in enumerate(history.epoch_losses):
        lines.append(f"epoch index={i} mean_loss={loss!r}")
    for method, count in sorted(history.augment_counts.items()):
        lines.append(f"augmented method={method} count={count}")
    _write_atomic(out_dir / "train_records.txt", "\n".join(lines) + "\n")
    print(f"wrote {ckpt} ({history.adam_steps} optimizer steps,"
          f" final loss {history.epoch_losses[-1]:.5f})")


def cmd_cv(args) -> None:
    cfg = _load_run_config(args)
    vocab, corpus = _load_data(cfg)
    out_dir = _out_dir(cfg)
    tc = cfg.train_config(vocab.size)
    folds = make_folds(corpus, cfg.k, cfg.seed)
    report = cross_validate(tc, corpus, folds, vocab, build_prefix_table(vocab))
    _write_atomic(out_dir / "cv_records.txt", cv_records(report))
    table = cv_table(report)
    _write_atomic(out_dir / "cv_table.txt", table)
    print(table, end="")
    print(f"wrote {out_dir / 'cv_records.txt'}")


def cmd_sweep(args) -> None:
    cfg = _load_run_config(args)
    if cfg.augmentation is None:
        raise ConfigError("sweep needs an augmentation spec (config key 'augmentation' or --method)")
    vocab, corpus = _load_data(cfg)
    out_dir = _out_dir(cfg)
    tc = cfg.train_config(vocab.size)
    alphas = [float(x) for x in args.alphas.split(",") if x.strip()]
    folds = make_folds(corpus, cfg.k, cfg.seed)
    report = sweep(tc, alphas, corpus, folds, vocab, build_prefix_table(vocab))
    _write_atomic(out_dir / "sweep_records.txt", sweep_records(report))
    table = sweep_table(report)
    _write_atomic(out_dir / "sweep_table.txt", table)
    if cfg.charts:
        base = report.baseline_f1
        pct = [100.0 * (f1 - base) / base for _, f1 in report.rows]
        chart = render_chart(
            [Series(label=report.method, xs=[a for a, _ in report.rows], ys=pct)],
            title="f1 difference from baseline",
            x_label="augmentation strength (alpha)",
            y_label="% difference from baseline f1",
        )
        _write_atomic(out_dir / "sweep_chart.svg", chart)
    print(table, end="")
    print(f"wrote {out_dir / 'sweep_records.txt'}")


def cmd_size_study(args) -> None:
    cfg = _load_run_config(args)
    vocab, corpus = _load_data(cfg)
    out_dir = _out_dir(cfg)
    filter_counts = [int(x) for x in args.filters.split(",") if x.strip()]
    if not filter_counts:
        raise ConfigError("size study needs at least one filter count")
    folds = make_folds(corpus, cfg.k, cfg.seed)
    prefix_table = build_prefix_table(vocab)

    rows = []
    for f_count in filter_counts:
        run_cfg = replace(cfg, num_filters=f_count, augmentation=None)
        tc = run_cfg.train_config(vocab.size)
        result = cross_validate(tc, corpus, folds, vocab, prefix_table)
        rows.append((f_count, count_parameters(tc.shape), result.mean_f1,
                     float(np.mean(result.train_seconds)),
                     float(np.mean(result.infer_seconds_per_example))))

    augmented_row = None
    if cfg.augmentation is not None:
        tc = cfg.train_config(vocab.size)
        result = cross_validate(tc, corpus, folds, vocab, prefix_table)
        augmented_row = (cfg.num_filters, count_parameters(tc.shape), result.mean_f1,
                         float(np.mean(result.train_seconds)),
                         float(np.mean(result.infer_seconds_per_example)))
    else:
        print("warning: no augmentation configured; augmented reference point omitted",
              file=sys.stderr)

    _write_atomic(out_dir / "size_study_records.txt", size_study_records(rows, augmented_row))
    table = size_study_table(rows, augmented_row)
    _write_atomic(out_dir / "size_study_table.txt", table)
    if cfg.charts:
        series = [Series(label="no augmentation", xs=[r[1] for r in rows], ys=[r[2] for r in rows])]
        if augmented_row:
            series.append(Series(label="augmented", xs=[augmented_row[1]], ys=[augmented_row[2]],
                                 draw_line=False))
        _write_atomic(out_dir / "size_params_chart.svg", render_chart(
            series, title="f1 vs parameter count", x_label="parameters", y_label="mean f1"))
        time_series = [
            Series(label="train time (no aug)", xs=[r[3] for r in rows], ys=[r[2] for r in rows]),
            Series(label="inference ms/example (no aug)",
                   xs=[r[4] * 1e3 for r in rows], ys=[r[2] for r in rows]),
        ]
        if augmented_row:
            time_series.append(Series(label="train time (augmented)", xs=[augmented_row[3]],
                                      ys=[augmented_row[2]], draw_line=False))
        _write_atomic(out_dir / "size_time_chart.svg", render_chart(
            time_series, title="f1 vs time", x_label="seconds (train) / ms (inference)",
            y_label="mean f1"))
    print(table, end="")
    print(f"wrote {out_dir / 'size_study_records.txt'}")


def _preview_context(cfg: RunConfig, vocab, args) -> AugmentContext:
    ctx = AugmentContext(vocab=vocab, prefix_table=build_prefix_table(vocab))
    needed = methods_in(cfg.augmentation)
    table = None
    if args.embedding:
        table = similarity_table(load_embedding(args.embedding), k=cfg.sim_table_k)
    elif args.checkpoint:
        params = load_checkpoint(args.checkpoint)
        table = similarity_table(snapshot_embedding(params), k=cfg.sim_table_k)
    if "language_model" in needed or "self_embedding" in needed:
        if table is None:
            raise ConfigError(
                "previewing language_model/self_embedding needs opcode similarities: "
                "pass a trained model checkpoint (--checkpoint) or a cbow embedding "
                "file (--embedding)"
            )
    ctx.lm_table = table
    ctx.self_table = table
    return ctx


def cmd_preview_aug(args) -> None:
    cfg = _load_run_config(args)
    if cfg.augmentation is None:
        raise ConfigError("preview needs an augmentation spec (config key 'augmentation' or --method)")
    vocab, corpus = _load_data(cfg)
    sample = next((s for s in corpus.samples if s.id == args.sample_id), None)
    if sample is None:
        raise ConfigError(f"unknown sample id {args.sample_id!r}")
    sample = truncate(sample, cfg.max_seq_len)
    ctx = _preview_context(cfg, vocab, args)
    seq = sample.opcodes
    limit = args.width
    print(f"sample {sample.id} label={sample.label} length={len(seq)}")
    for i in range(args.n):
        rng_stream = substream(cfg.seed, "preview", i, sample.id)
        out, changes = apply_counting_changes(cfg.augmentation, seq, ctx, rng_stream)
        changed = out != seq
        shown = []
        for j in range(min(len(seq), limit)):
            tok = vocab.mnemonics[int(out[j])]
            shown.append(f"[{tok}]" if changed[j] else tok)
        suffix = " ..." if len(seq) > limit else ""
        replaced = " ".join(f"{m}:{c}" for m, c in sorted(changes.items())) or "gated-off"
        print(f"variant {i}: changed={int(changed.sum())}/{len(seq)} replaced={replaced}")
        print("  " + " ".join(shown) + suffix)


def cmd_report(args) -> None:
    path = Path(args.records)
    if not path.exists():
        raise ConfigError(f"records file not found: {path}")
    text = path.read_text(encoding="utf-8")
    records = parse_records(text)
    kinds = {kind for kind, _ in records}
    if "sweeprow" in kinds:
        meta = next(fields for kind, fields in records if kind == "sweepmeta")
        base = float(next(fields for kind, fields in records if kind == "baseline")["mean_f1"])
        print(f"method: {meta['method']}   beta: {float(meta['beta']):g}")
        print(f"{'row':<12} {'alpha':>6}  {'mean_f1':>8}")
        print("-" * 30)
        print(f"{'Baseline':<12} {'-':>6}  {base:>8.5f}")
        for kind, fields in records:
            if kind != "sweeprow":
                continue
            mark = " *" if fields["improved"] == "true" else ""
            print(f"{'alpha':<12} {float(fields['alpha']):>6.2f}  {float(fields['mean_f1']):>8.5f}{mark}")
        print("-" * 30)
        max_f1 = float(next(fields for kind, fields in records if kind == "max")["mean_f1"])
        delta = float(next(fields for kind, fields in records if kind == "delta")["value"])
        print(f"{'Max':<12} {'-':>6}  {max_f1:>8.5f}")
        print(f"{'Delta':<12} {'-':>6}  {delta:>8.5f}")
    else:
        print(render_records(text), end="")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="opcaug", description=__doc__)
    sub = parser.add_subparsers(dest="command")

    def add(name, func, help_text):
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(func=func)
        p.add_argument("--config", help="JSON run configuration")
        p.add_argument("--seed", type=int, help="override random seed")
        p.add_argument("--out-dir", dest="out_dir", help="override output directory")
        p.add_argument("--epochs", type=int, help="override training epochs")
        p.add_argument("--k", type=int, help="override fold count")
        p.add_argument("--corpus", help="override corpus path")
        p.add_argument("--vocab", help="override vocabulary path")
        p.add_argument("--format", choices=("mnemonic", "indices"),
                       help="corpus file format")
        p.add_argument("--method", help="augmentation method override")
        p.add_argument("--alpha", type=float, help="augmentation strength override")
        p.add_argument("--beta", type=float, help="augmentation gate probability override")
        return p

    p = add("gen-synth", cmd_gen_synth, "generate a synthetic planted-motif corpus")
    p.add_argument("--out", help="corpus output path")

    p = sub.add_parser("build-vocab", help="extract a vocabulary from a corpus file")
    p.set_defaults(func=cmd_build_vocab)
    p.add_argument("--corpus", dest="corpus_file", required=True)
    p.add_argument("--out", required=True)

    p = add("cbow", cmd_cbow, "train the offline CBOW language model")
    p.add_argument("--out", help="embedding output path")

    add("train", cmd_train, "train a classifier on the whole corpus")
    add("cv", cmd_cv, "k-fold cross-validated training and evaluation")

    p = add("sweep", cmd_sweep, "cross-validate over a range of augmentation strengths")
    p.add_argument("--alphas", default=DEFAULT_ALPHAS, help="comma-separated alpha values")

    p = add("size-study", cmd_size_study, "compare filter counts without augmentation")
    p.add_argument("--filters", default=DEFAULT_FILTERS, help="comma-separated filter counts")

    p = add("preview-aug", cmd_preview_aug, "print augmented variants of one sample")
    p.add_argument("--sample-id", required=True)
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--width", type=int, default=40, help="tokens shown per variant")
    p.add_argument("--checkpoint", help="model checkpoint for embedding-based methods")
    p.add_argument("--embedding", help="cbow embedding file for embedding-based methods")

    p = sub.add_parser("report", help="re-render a machine records file")
    p.set_defaults(func=cmd_report)
    p.add_argument("--records", required=True)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not hasattr(args, "func"):
            parser.print_help()
            return 1
        args.func(args)
        return 0
    except OpcaugError as err:
        message = str(err).replace("\n", " ").replace('"', "'")
        print(f'error category={type(err).__name__} message="{message}"', file=sys.stderr)
        return exit_code(err)
    except OSError as err:
        message = str(err).replace("\n", " ").replace('"', "'")
        print(f'error category=IOError message="{message}"', file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
