"""Command line: train / evaluate / predict / synth / export-embeddings.

A corpus directory holds ``train.jsonl``, ``valid.jsonl``, ``test.jsonl``
(and usually ``taxonomy.json``).  Checkpoints embed config, vocabulary and
taxonomy, so evaluate/predict/export need only the checkpoint plus data.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .checkpoint import load_model
from .config import ModelConfig, config_from_file
from .corpus import CorpusSplit, encode_records, load_corpus
from .errors import ConfigError
from .metrics import rank_codes
from .synth import SynthSpec, generate_synthetic
from .taxonomy import Taxonomy
from .tensor import no_grad
from .trainer import evaluate_model, histories_for, train, usable_ks

SPLIT_FILES = {"train": "train.jsonl", "valid": "valid.jsonl", "test": "test.jsonl"}


def _load_split_dir(corpus_dir: Path, taxonomy: Taxonomy) -> CorpusSplit:
    parts = {}
    for name, fname in SPLIT_FILES.items():
        path = corpus_dir / fname
        parts[name] = load_corpus(path, taxonomy) if path.exists() else []
    if not parts["train"]:
        raise ConfigError(f"{corpus_dir}: no train.jsonl found (or it is empty)")
    return CorpusSplit(train=parts["train"], validation=parts["valid"], test=parts["test"])


def _cmd_synth(args) -> int:
    spec = SynthSpec()
    if args.spec:
        with open(args.spec, encoding="utf-8") as f:
            spec = SynthSpec.from_dict(json.load(f))
    tax, split = generate_synthetic(spec, seed=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    tax.save(out / "taxonomy.json")
    from .corpus import save_corpus

    save_corpus(out / "train.jsonl", split.train, tax.depth)
    save_corpus(out / "valid.jsonl", split.validation, tax.depth)
    save_corpus(out / "test.jsonl", split.test, tax.depth)
    print(
        f"wrote {len(split.train)}/{len(split.validation)}/{len(split.test)} "
        f"train/valid/test patents to {out}"
    )
    return 0


def _cmd_train(args) -> int:
    corpus_dir = Path(args.corpus)
    tax_path = Path(args.taxonomy) if args.taxonomy else corpus_dir / "taxonomy.json"
    taxonomy = Taxonomy.load(tax_path)
    split = _load_split_dir(corpus_dir, taxonomy)

    overrides = {
        "seed": args.seed,
        "icl_mode": args.icl,
        "level": args.level,
    }
    if args.history is not None:
        overrides["history"] = args.history == "on"
    if args.no_pe:
        overrides["use_pe"] = False
    if args.no_text:
        overrides["use_text"] = False
    if args.no_label:
        overrides["use_label"] = False
    if args.config:
        config = config_from_file(args.config, **overrides)
    else:
        merged = {**ModelConfig().to_dict(), **{k: v for k, v in overrides.items() if v is not None}}
        config = ModelConfig.from_dict(merged)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ckpt = out / "model.ckpt"
    model, report = train(
        config,
        split,
        taxonomy,
        min_count=args.min_count,
        checkpoint_path=ckpt,
        log=print if not args.quiet else None,
    )
    with open(out / "report.json", "w", encoding="utf-8") as f:
        json.dump(report.summary(), f, indent=2)
        f.write("\n")
    print(f"best epoch {report.best_epoch} ({report.selection_metric} "
          f"{report.best_val_metric:.4f}); checkpoint at {ckpt}")
    return 0


def _cmd_evaluate(args) -> int:
    model = load_model(args.checkpoint)
    corpus_dir = Path(args.corpus)
    split = _load_split_dir(corpus_dir, model.taxonomy)
    for part in (split.train, split.validation, split.test):
        encode_records(part, model.vocab, n_max=model.config.N)
    records = {"train": split.train, "valid": split.validation, "test": split.test}[args.split]
    if not records:
        raise ConfigError(f"split '{args.split}' is empty")
    ks = usable_ks(model.n_codes, tuple(int(k) for k in args.k.split(",")))
    table = evaluate_model(model, records, split, ks=ks)
    print(table.to_csv() if args.csv else table.to_text())
    return 0


def _cmd_predict(args) -> int:
    model = load_model(args.checkpoint)
    taxonomy = model.taxonomy
    records = load_corpus(args.input, taxonomy)
    encode_records(records, model.vocab, n_max=model.config.N)
    # the history pool is the checkpoint owner's responsibility; predictions
    # on a standalone file use each record's own file as its training pool
    split = CorpusSplit(train=records, validation=[], test=[])
    hists = histories_for(records, split, model.config.D, enabled=model.config.history)
    out = open(args.out, "w", encoding="utf-8") if args.out else sys.stdout
    try:
        with no_grad():
            bs = model.config.batch_size
            for start in range(0, len(records), bs):
                chunk = records[start : start + bs]
                chunk_h = hists[start : start + bs]
                probs = model.forward_batch(chunk, chunk_h, train=False).numpy()
                for r, row in zip(chunk, probs):
                    ranked = rank_codes(row, model.codes)[: args.k]
                    index = {c: i for i, c in enumerate(model.codes)}
                    line = {
                        "id": r.id,
                        "topk": [
                            {"code": c, "prob": float(row[index[c]])} for c in ranked
                        ],
                    }
                    out.write(json.dumps(line) + "\n")
    finally:
        if args.out:
            out.close()
    return 0


def _cmd_export_embeddings(args) -> int:
    model = load_model(args.checkpoint)
    lines = []
    with no_grad():
        reprs = model.code_reprs(train=False)
    if reprs:
        for lvl, mat in enumerate(reprs, start=1):
            codes = model.taxonomy.codes(lvl)
            data = mat.numpy()
            for code, row in zip(codes, data):
                lines.append({"code": code, "level": lvl, "vector": [float(v) for v in row]})
    else:
        data = model.static_codes.numpy()
        for code, row in zip(model.codes, data):
            lines.append(
                {"code": code, "level": model.config.level, "vector": [float(v) for v in row]}
            )
    with open(args.out, "w", encoding="utf-8") as f:
        for line in lines:
            f.write(json.dumps(line) + "\n")
    print(f"exported {len(lines)} code vectors to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="patentclf",
        description="Patent-code classification: taxonomy correlations + assignee history",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a planted-structure synthetic corpus")
    p.add_argument("--spec", help="JSON file of generator knobs (defaults otherwise)")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True, help="output corpus directory")
    p.set_defaults(fn=_cmd_synth)

    p = sub.add_parser("train", help="train a model on a corpus directory")
    p.add_argument("--config", help="key=value config file")
    p.add_argument("--corpus", required=True, help="directory with train/valid/test.jsonl")
    p.add_argument("--taxonomy", help="taxonomy JSON (default: <corpus>/taxonomy.json)")
    p.add_argument("--out", required=True, help="output directory for checkpoint + report")
    p.add_argument("--seed", type=int)
    p.add_argument("--icl", choices=["none", "fixed", "adaptive_h", "adaptive_v", "adaptive_hv"])
    p.add_argument("--history", choices=["on", "off"])
    p.add_argument("--no-pe", action="store_true")
    p.add_argument("--no-text", action="store_true")
    p.add_argument("--no-label", action="store_true")
    p.add_argument("--level", type=int, choices=[1, 2, 3])
    p.add_argument("--min-count", type=int, default=5, help="vocabulary frequency cutoff")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(fn=_cmd_train)

    p = sub.add_parser("evaluate", help="metric table for a stored checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--corpus", required=True, help="directory with train/valid/test.jsonl")
    p.add_argument("--split", choices=["train", "valid", "test"], default="test")
    p.add_argument("--k", default="1,3,5", help="comma-separated ranking cutoffs")
    p.add_argument("--csv", action="store_true")
    p.set_defaults(fn=_cmd_evaluate)

    p = sub.add_parser("predict", help="top-k codes per patent as JSON Lines")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--input", required=True, help="JSONL corpus file")
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--out", help="output file (default: stdout)")
    p.set_defaults(fn=_cmd_predict)

    p = sub.add_parser("export-embeddings", help="write learned code vectors as JSON Lines")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_export_embeddings)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
