"""Implementations behind the CLI subcommands.

Each command logs to stderr only and writes data to files, including an echo
of its resolved configuration so any run can be reproduced bit-exactly.
"""

from __future__ import annotations

import json
import logging
import platform
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .data import (
    KIND_CLASSIFICATION,
    KIND_GENERATION,
    GenerationExample,
    TaskSpec,
    gen_synthetic,
    label_set,
    load_task,
    save_examples,
    split_811,
    subsample,
)
from .decoding import BeamConfig, generate_file
from .errors import ConfigError, DataError
from .manifest import RunManifest, Variant, load_manifest
from .metrics import build_report, classification_scores
from .model import ModelBundle, ModelConfig, init_parameters, load_checkpoint
from .text import Vocab, encode, pad_batch
from .trainer import TrainPlan, build_shared_vocab, train
from . import tensor as T

log = logging.getLogger("emogen.cli")

_SYNTH_KINDS = (("gen", KIND_GENERATION), ("e6", "e6"), ("e2", "e2"), ("e12", "e12"))


def _versions() -> dict:
    return {
        "emogen": __version__,
        "numpy": np.__version__,
        "python": platform.python_version(),
    }


def _write_echo(path: Path, command: str, payload: dict) -> None:
    doc = {"command": command, "versions": _versions(), **payload}
    path.write_text(json.dumps(doc, sort_keys=True, indent=2, default=str) + "\n")


# -- synth -------------------------------------------------------------------

_MANIFEST_TEMPLATE = """\
# generated run manifest; paths are relative to this file
[model]
d_model = 128
n_heads = 4
n_enc_layers = 2
n_dec_layers = 2
d_ff = 512
max_len = 64
dropout = 0.1

[train]
batch_size = 32
epochs = 64
seed = {seed}
label_smoothing = 0.1
lr = 0.001
weight_decay = 0.01
grad_clip = 1.0

[beam]
beam_width = 5
max_len = 64
no_repeat_ngram = 3
length_penalty = 1.0

[task response]
kind = generation
train = gen.train.tsv
valid = gen.valid.tsv
test = gen.test.tsv

[task e6]
kind = classification
labels = {e6_labels}
weight = 1.0
train = e6.train.tsv
valid = e6.valid.tsv
test = e6.test.tsv

[task e2]
kind = classification
labels = {e2_labels}
weight = 1.0
train = e2.train.tsv
valid = e2.valid.tsv
test = e2.test.tsv

[task e12]
kind = classification
labels = {e12_labels}
weight = 1.0
train = e12.train.tsv
valid = e12.valid.tsv
test = e12.test.tsv

[matrix]
variants = R | R+e6 | R+e6+e2 | R+e6+e12 | R+e6+e2+e12
"""


def cmd_synth(out_dir, seed: int, size: int, cls_size: int | None = None) -> None:
    """Write synthetic TSVs with 8:1:1 splits, label files, and a manifest."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cls_size = cls_size if cls_size is not None else max(10, size // 2)
    for idx, (stem, kind) in enumerate(_SYNTH_KINDS):
        n = size if kind == KIND_GENERATION else cls_size
        examples = gen_synthetic(kind, n, [seed, idx])
        tr, va, te = split_811(examples, seed)
        for split_name, chunk in (("train", tr), ("valid", va), ("test", te)):
            save_examples(out / f"{stem}.{split_name}.tsv", chunk)
        if kind != KIND_GENERATION:
            (out / f"{stem}.labels.txt").write_text(
                "\n".join(label_set(kind)) + "\n"
            )
        log.info("synth: wrote %s (%d examples)", stem, n)
    (out / "manifest.ini").write_text(
        _MANIFEST_TEMPLATE.format(
            seed=seed,
            e6_labels=", ".join(label_set("e6")),
            e2_labels=", ".join(label_set("e2")),
            e12_labels=", ".join(label_set("e12")),
        )
    )
    _write_echo(out / "echo.json", "synth",
                {"args": {"out": str(out), "seed": seed, "size": size, "cls_size": cls_size}})


# -- splits ------------------------------------------------------------------


def cmd_splits(input_path, out_dir, seed: int, subsample_fraction: float = 1.0,
               subsample_scope: str = "none") -> None:
    """Split a two-column TSV into train/valid/test files at 8:1:1.

    ``subsample_scope`` is ``total`` (sample before splitting) or ``train``
    (sample the train split only).
    """
    input_path = Path(input_path)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(input_path, encoding="utf-8") as f:
        lines = []
        for lineno, raw in enumerate(f, start=1):
            line = raw.rstrip("\n")
            if not line:
                continue
            if line.count("\t") != 1:
                raise DataError(f"{input_path}:{lineno}: expected 2 tab-separated fields")
            lines.append(line)
    if subsample_scope not in ("none", "total", "train"):
        raise ConfigError(f"unknown subsample scope '{subsample_scope}'")
    if subsample_scope == "total":
        lines = subsample(lines, subsample_fraction, seed)
    tr, va, te = split_811(lines, seed)
    if subsample_scope == "train":
        tr = subsample(tr, subsample_fraction, seed)
    stem = input_path.stem
    for split_name, chunk in (("train", tr), ("valid", va), ("test", te)):
        (out / f"{stem}.{split_name}.tsv").write_text(
            "".join(line + "\n" for line in chunk)
        )
    _write_echo(out / f"{stem}.echo.json", "splits", {
        "args": {"input": str(input_path), "out": str(out), "seed": seed,
                 "subsample_fraction": subsample_fraction,
                 "subsample_scope": subsample_scope}})


# -- train -------------------------------------------------------------------


def _model_config(manifest: RunManifest, vocab: Vocab) -> ModelConfig:
    heads = tuple(
        (t.name, len(t.labels)) for t in manifest.classification_tasks()
    )
    return ModelConfig(vocab_size=vocab.size, cls_heads=heads, **manifest.model)


def _load_all_tasks(manifest: RunManifest) -> dict:
    return {spec.name: load_task(spec) for spec in manifest.tasks}


def _train_one(manifest: RunManifest, plan: TrainPlan, task_data, out_dir: Path,
               seed: int) -> tuple[ModelBundle, Vocab, object]:
    # Vocabulary and model cover every declared task so all variants share
    # identical shapes and initialization.
    vocab = build_shared_vocab(task_data, manifest.tasks, manifest.vocab_min_count)
    out_dir.mkdir(parents=True, exist_ok=True)
    vocab.save(out_dir / "vocab.txt")
    config = _model_config(manifest, vocab)
    plan.max_len = min(plan.max_len, config.max_len)
    model = init_parameters(config, seed)
    model, report = train(plan, task_data, model, vocab, out_dir=out_dir)
    return model, vocab, report


def cmd_train(manifest_path, out_dir) -> None:
    manifest = load_manifest(manifest_path)
    out = Path(out_dir)
    task_data = _load_all_tasks(manifest)
    plan = manifest.build_plan()
    _train_one(manifest, plan, task_data, out, plan.seed)
    _write_echo(out / "echo.json", "train",
                {"args": {"config": str(manifest.path), "out": str(out)},
                 "manifest": manifest.to_dict()})


# -- generate ----------------------------------------------------------------


def cmd_generate(checkpoint_path, input_path, output_path,
                 beam_width=5, no_repeat_ngram=3, max_len=64,
                 length_penalty=1.0, vocab_path=None) -> None:
    checkpoint_path = Path(checkpoint_path)
    model, meta = load_checkpoint(checkpoint_path)
    if vocab_path is None:
        vocab_path = checkpoint_path.parent / meta.get("vocab", "vocab.txt")
    vocab = Vocab.load(vocab_path)
    if vocab.size != model.config.vocab_size:
        raise ConfigError(
            f"vocab size {vocab.size} does not match checkpoint "
            f"vocab_size {model.config.vocab_size}"
        )
    config = BeamConfig(
        beam_width=beam_width, max_len=max_len,
        no_repeat_ngram=no_repeat_ngram, length_penalty=length_penalty,
    )
    n = generate_file(model, vocab, input_path, output_path, config)
    log.info("generate: wrote %d responses to %s", n, output_path)
    _write_echo(Path(str(output_path) + ".echo.json"), "generate", {
        "args": {"checkpoint": str(checkpoint_path), "input": str(input_path),
                 "output": str(output_path), "beams": beam_width,
                 "no_repeat_ngram": no_repeat_ngram, "max_len": max_len,
                 "length_penalty": length_penalty, "vocab": str(vocab_path)},
        "checkpoint_meta": meta})


# -- evaluate ------------------------------------------------------------------


def _read_lines(path) -> list[str]:
    with open(path, encoding="utf-8") as f:
        return [line.rstrip("\n") for line in f]


def _read_label_column(path) -> list[str]:
    # Accepts plain label-per-line files and two-column TSVs (label last).
    return [line.split("\t")[-1].strip() for line in _read_lines(path) if line.strip()]


def cmd_evaluate(hyp_path, ref_path, out_path, pred_path=None, gold_path=None,
                 labels_path=None) -> dict:
    hyps = _read_lines(hyp_path)
    refs = _read_lines(ref_path)
    pred = gold = labels = None
    if pred_path is not None:
        if gold_path is None or labels_path is None:
            raise ConfigError("--pred requires --gold and --labels")
        pred = _read_label_column(pred_path)
        gold = _read_label_column(gold_path)
        labels = [l for l in _read_lines(labels_path) if l.strip()]
    report = build_report(hyps, refs, pred=pred, gold=gold, labels=labels)
    doc = report.to_dict()
    out_path = Path(out_path)
    out_path.write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")
    log.info("evaluate: %s", doc)
    _write_echo(Path(str(out_path) + ".echo.json"), "evaluate", {
        "args": {"hyp": str(hyp_path), "ref": str(ref_path), "out": str(out_path),
                 "pred": str(pred_path), "gold": str(gold_path),
                 "labels": str(labels_path)}})
    return doc


# -- matrix --------------------------------------------------------------------


def predict_labels(model: ModelBundle, spec: TaskSpec, examples, vocab: Vocab,
                   max_len: int, batch_size: int = 64) -> list[str]:
    """Argmax labels for a classification task over a list of examples."""
    was_training = model.training
    model.eval()
    out: list[str] = []
    try:
        with T.no_grad():
            for start in range(0, len(examples), batch_size):
                chunk = examples[start : start + batch_size]
                seqs = [encode(ex.text, vocab, max_len) for ex in chunk]
                enc_ids, enc_mask = pad_batch(seqs)
                logits = model.forward_classification(enc_ids, enc_mask, spec.name)
                for row in np.argmax(logits.data, axis=1):
                    out.append(spec.labels[int(row)])
    finally:
        model.training = was_training
    return out


def _variant_dirname(name: str) -> str:
    return name.replace(" ", "").replace("/", "_")


def evaluate_variant(model: ModelBundle, manifest: RunManifest, task_data,
                     vocab: Vocab, variant_dir: Path) -> dict:
    """Decode the shared generation test split and score every task."""
    gen_spec = manifest.generation_task
    test_examples = task_data[gen_spec.name]["test"]
    src = variant_dir / "test.src.txt"
    ref = variant_dir / "test.ref.txt"
    hyp = variant_dir / "test.hyp.txt"
    src.write_text("".join(ex.utterance + "\n" for ex in test_examples))
    ref.write_text("".join(ex.response + "\n" for ex in test_examples))
    beam = replace(manifest.beam,
                   max_len=min(manifest.beam.max_len, model.config.max_len))
    generate_file(model, vocab, src, hyp, beam)
    hyps = _read_lines(hyp)
    refs = _read_lines(ref)
    row = build_report(hyps, refs).to_dict()
    max_len = min(manifest.train.get("max_len", 64), model.config.max_len)
    for spec in manifest.classification_tasks():
        test = task_data[spec.name].get("test", [])
        if not test:
            continue
        pred = predict_labels(model, spec, test, vocab, max_len)
        gold = [ex.label for ex in test]
        acc, f1 = classification_scores(pred, gold, spec.labels)
        row[f"{spec.name}_accuracy"] = acc
        row[f"{spec.name}_macro_f1"] = f1
    return row


def _report_tsv(rows: list[dict]) -> str:
    keys: list[str] = []
    for row in rows:
        for key in row:
            if key not in keys and key not in ("counts", "variant"):
                keys.append(key)
    lines = ["\t".join(["variant"] + keys)]
    for row in rows:
        cells = [row["variant"]]
        for key in keys:
            value = row.get(key)
            cells.append("" if value is None else (
                f"{value:.4f}" if isinstance(value, float) else str(value)))
        lines.append("\t".join(cells))
    return "\n".join(lines) + "\n"


def cmd_matrix(manifest_path, out_dir) -> list[dict]:
    """Train and evaluate every variant with a shared seed and test split."""
    manifest = load_manifest(manifest_path)
    if not manifest.variants:
        raise ConfigError("manifest declares no [matrix] variants")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    task_data = _load_all_tasks(manifest)
    rows: list[dict] = []
    failure: Exception | None = None
    for variant in manifest.variants:
        vdir = out / _variant_dirname(variant.name)
        try:
            plan = manifest.build_plan(variant)
            log.info("matrix: training variant %s (tasks: %s)",
                     variant.name, [t.name for t in plan.tasks])
            model, vocab, _ = _train_one(manifest, plan, task_data, vdir, plan.seed)
            row = {"variant": variant.name}
            row.update(evaluate_variant(model, manifest, task_data, vocab, vdir))
            rows.append(row)
        except Exception as e:
            failure = e
            log.error("matrix: variant %s failed: %s", variant.name, e)
            break
    (out / "report.json").write_text(
        json.dumps(rows, sort_keys=True, indent=2) + "\n"
    )
    (out / "report.tsv").write_text(_report_tsv(rows))
    _write_echo(out / "echo.json", "matrix",
                {"args": {"config": str(manifest.path), "out": str(out)},
                 "manifest": manifest.to_dict()})
    if failure is not None:
        raise failure
    return rows
