"""Orchestration: config files, the training loop, evaluation, and the
six-regime transfer suite (scratch reference, transfer with 0-4 frozen
layers) with learning-curve and results emission.

Every run directory receives a frozen copy of its effective config, one
checkpoint per epoch, the learning-curve CSV, a rendered curve figure and a
best-epoch symlink. The whole pipeline is deterministic given (config,
seed): rerunning a suite reproduces the curve CSVs byte for byte.
"""

from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .ctc import AlphabetMismatch, ctc_forward_backward
from .data import (
    Batch,
    InvalidTranscriptChar,
    Manifest,
    featurize_manifest,
    load_wav,
    make_batches,
    parse_manifest,
)
from .decoder import DecodeParams, beam_decode, greedy_decode
from .features import FeatureConfig, featurize
from .lm import NGramLM, train_ngram
from .metrics import EvalReport, score_pairs
from .model import DropoutSpec, ModelDims, ModelParams, backward, forward, init_params
from .numerics import Rng
from .optim import AdamHyper, AdamState, FreezePlan, adam_step, build_freeze_mask, trainable_param_count
from .report import (
    ExperimentReport,
    LearningCurve,
    plot_curve,
    plot_curve_comparison,
    plot_results,
    read_curve_csv,
    write_curve_csv,
    write_results_csv,
)
from .transfer import Alphabet, CheckpointMeta, ShapeMismatch, load_checkpoint, remap_output_layer, save_checkpoint

log = logging.getLogger("asrkit")

SUITE_PLANS = (FreezePlan.REFERENCE, FreezePlan.F0, FreezePlan.F1,
               FreezePlan.F2, FreezePlan.F3, FreezePlan.F4)


class NonFiniteLoss(RuntimeError):
    """Training hit a NaN/Inf loss; aborts with the offending batch."""


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    alphabet: Path
    train_manifest: Path
    dev_manifest: Path
    run_dir: Path
    test_manifest: Path | None = None
    lm_corpus: Path | None = None
    seed: int = 42
    epochs: int = 30
    batch_size: int = 24
    lr: float = 0.0005
    dropout: float = 0.4
    hidden: int = 64
    relu_cap: float = 20.0
    window_ms: int = 32
    hop_ms: int = 20
    n_mel_filters: int = 26
    n_cepstra: int = 26
    preemphasis: float = 0.97
    context_radius: int = 9
    keep_checkpoints: int = 0  # 0 keeps every epoch
    lm_order: int = 3
    lm_discount: float = 0.75
    alpha: float = 0.75
    beta: float = 1.5
    beam_width: int = 64

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ConfigError("epochs and batch_size must be positive")

    def feature_config(self) -> FeatureConfig:
        return FeatureConfig(self.window_ms, self.hop_ms, self.n_mel_filters,
                             self.n_cepstra, self.preemphasis, self.context_radius)

    def decode_params(self) -> DecodeParams:
        return DecodeParams(self.beam_width, self.alpha, self.beta)

    @classmethod
    def from_file(cls, path) -> "TrainConfig":
        """Parse a UTF-8 key=value config; relative paths resolve against
        the config file's directory."""
        path = Path(path)
        fields = {f.name: f for f in dataclasses.fields(cls)}
        kwargs: dict = {}
        for lineno, raw in enumerate(path.read_text(encoding="utf-8").split("\n"), 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            key = key.strip()
            value = value.strip()
            if not sep or key not in fields:
                raise ConfigError(f"{path}:{lineno}: unknown or malformed entry {raw!r}")
            ftype = fields[key].type
            if "Path" in ftype:
                kwargs[key] = (path.parent / value).resolve() if value else None
            elif ftype == "int":
                kwargs[key] = int(value)
            else:
                kwargs[key] = float(value)
        missing = {"alphabet", "train_manifest", "dev_manifest", "run_dir"} - set(kwargs)
        if missing:
            raise ConfigError(f"{path}: missing required keys {sorted(missing)}")
        return cls(**kwargs)

    def to_file(self, path) -> None:
        lines = []
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            if value is None:
                continue
            lines.append(f"{f.name}={value!r}" if isinstance(value, float)
                         else f"{f.name}={value}")
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def utterance_loss_and_grads(params: ModelParams, feats: np.ndarray, target,
                             dropout: DropoutSpec, rng: Rng,
                             relu_cap: float) -> tuple[float, ModelParams]:
    logprobs, cache = forward(params, feats, dropout, mode="train", rng=rng,
                              relu_cap=relu_cap)
    result = ctc_forward_backward(logprobs, target)
    return result.loss, backward(cache, params, result.dlogprobs)


def batch_loss_and_grads(params: ModelParams, batch: Batch,
                         dropout: DropoutSpec, rng: Rng,
                         relu_cap: float) -> tuple[float, ModelParams]:
    """Mean per-utterance CTC loss and matching mean gradients. Padded
    frames are sliced off per true length, so they contribute nothing."""
    total = params.zeros_like()
    loss_sum = 0.0
    for i in range(len(batch)):
        loss, grads = utterance_loss_and_grads(
            params, batch.utterance_features(i), batch.targets[i],
            dropout, rng, relu_cap)
        loss_sum += loss
        for name in total.names():
            total.tensors[name] += grads.tensors[name]
    n = len(batch)
    for name in total.names():
        total.tensors[name] /= n
    return loss_sum / n, total


def manifest_loss(params: ModelParams, manifest: Manifest, cfg: FeatureConfig,
                  alphabet: Alphabet, relu_cap: float,
                  cache: dict | None = None) -> float:
    """Mean CTC loss over a manifest with dropout off (inference forward)."""
    feats = featurize_manifest(manifest, cfg, cache)
    total = 0.0
    for entry, f in zip(manifest.entries, feats):
        logprobs, _ = forward(params, f, DropoutSpec(0.0), mode="infer",
                              relu_cap=relu_cap)
        total += ctc_forward_backward(logprobs, alphabet.encode(entry.transcript)).loss
    return total / len(manifest)


def checkpoint_path(run_dir: Path, epoch: int) -> Path:
    return run_dir / f"epoch_{epoch:03d}.ckpt"


def _init_model(config: TrainConfig, dims: ModelDims, alphabet: Alphabet,
                init_checkpoint, plan: FreezePlan, rng: Rng) -> ModelParams:
    if plan.uses_source_checkpoint and init_checkpoint is None:
        raise ConfigError(f"plan {plan.method_name!r} needs an init checkpoint")
    if not plan.uses_source_checkpoint and init_checkpoint is not None:
        raise ConfigError("the scratch reference starts from random weights")
    if init_checkpoint is None:
        return init_params(dims, rng)
    source_params, source_meta = load_checkpoint(init_checkpoint)
    if (source_meta.dims.input_width, source_meta.dims.hidden) != (dims.input_width, dims.hidden):
        raise ShapeMismatch(
            f"checkpoint trained at {source_meta.dims}, config wants {dims}")
    if source_meta.feature_config != config.feature_config():
        raise ConfigError(
            f"checkpoint was trained on features {source_meta.feature_config}, "
            f"config asks for {config.feature_config()}")
    return remap_output_layer(source_params, alphabet, rng)


def train(config: TrainConfig, init_checkpoint=None,
          plan: FreezePlan = FreezePlan.REFERENCE) -> Path:
    """Run one training regime; returns the run directory.

    Per epoch: duration-bucketed batches, forward, CTC, backward, one Adam
    step per batch under the plan's freeze mask, then a validation pass and
    a checkpoint. The best epoch (lowest validation loss, earliest on ties)
    ends up symlinked as best.ckpt.
    """
    run_dir = Path(config.run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    config.to_file(run_dir / "config.txt")

    alphabet = Alphabet.from_file(config.alphabet)
    cfg = config.feature_config()
    dims = ModelDims(cfg.feature_width, config.hidden, alphabet.n_labels)
    train_manifest = parse_manifest(config.train_manifest, alphabet)
    dev_manifest = parse_manifest(config.dev_manifest, alphabet)

    seed_rng = Rng(config.seed)
    params = _init_model(config, dims, alphabet, init_checkpoint, plan, seed_rng)
    dropout_rng = Rng(seed_rng.next_u64())
    mask = build_freeze_mask(plan)
    n_trainable = trainable_param_count(dims, mask)
    log.info("%s: %d trainable parameters", plan.method_name, n_trainable)

    state = AdamState.fresh(params)
    hyper = AdamHyper(lr=config.lr)
    dropout = DropoutSpec(config.dropout)
    feature_cache: dict = {}

    rows = []
    for epoch in range(1, config.epochs + 1):
        batches = make_batches(train_manifest, cfg, config.batch_size, alphabet,
                               Rng(config.seed), epoch, feature_cache)
        loss_sum = 0.0
        n_utts = 0
        for batch_index, batch in enumerate(batches):
            loss, grads = batch_loss_and_grads(params, batch, dropout,
                                               dropout_rng, config.relu_cap)
            if not np.isfinite(loss):
                raise NonFiniteLoss(
                    f"epoch {epoch}, batch {batch_index}: loss={loss}; "
                    f"utterances: {[str(p) for p in batch.paths]}")
            adam_step(params, grads, state, hyper, mask)
            loss_sum += loss * len(batch)
            n_utts += len(batch)
        train_loss = loss_sum / n_utts
        val_loss = manifest_loss(params, dev_manifest, cfg, alphabet,
                                 config.relu_cap, feature_cache)
        rows.append((epoch, train_loss, val_loss))
        meta = CheckpointMeta(dims, alphabet, cfg, epoch=epoch, val_loss=val_loss)
        save_checkpoint(params, meta, checkpoint_path(run_dir, epoch))
        # rewritten every epoch so an interrupted run keeps its history
        write_curve_csv(LearningCurve(tuple(rows)), run_dir / "curve.csv")
        log.info("%s epoch %d: train %.4f val %.4f", plan.method_name, epoch,
                 train_loss, val_loss)

    curve = LearningCurve(tuple(rows))
    plot_curve(curve, run_dir / "curve.png", title=plan.method_name)

    best = curve.best_epoch
    best_link = run_dir / "best.ckpt"
    best_link.unlink(missing_ok=True)
    best_link.symlink_to(checkpoint_path(run_dir, best).name)
    (run_dir / "runinfo.txt").write_text(
        f"method={plan.method_name}\n"
        f"plan={plan.value}\n"
        f"init_checkpoint={init_checkpoint or ''}\n"
        f"best_epoch={best}\n"
        f"trainable_params={n_trainable}\n",
        encoding="utf-8")

    if config.keep_checkpoints > 0:
        ranked = sorted(rows, key=lambda r: (r[2], r[0]))
        keep = {e for e, _, _ in ranked[:config.keep_checkpoints]} | {best}
        for epoch, _, _ in rows:
            if epoch not in keep:
                checkpoint_path(run_dir, epoch).unlink()
    return run_dir


def evaluate(checkpoint, manifest_path, lm: NGramLM | None,
             decode_params: DecodeParams, lowercase: bool = False,
             relu_cap: float = 20.0) -> EvalReport:
    """Beam-decode every utterance of a manifest and pool WER/CER."""
    params, meta = load_checkpoint(checkpoint)
    try:
        manifest = parse_manifest(manifest_path, meta.alphabet)
    except InvalidTranscriptChar as e:
        raise AlphabetMismatch(
            f"manifest {manifest_path} does not fit the checkpoint alphabet: {e}") from e
    refs, hyps = [], []
    for entry in manifest.entries:
        feats = featurize(load_wav(entry.audio_path), meta.feature_config)
        logprobs, _ = forward(params, feats, DropoutSpec(0.0), mode="infer",
                              relu_cap=relu_cap)
        hyps.append(beam_decode(logprobs, lm, decode_params, meta.alphabet))
        refs.append(entry.transcript)
    return score_pairs(refs, hyps, lowercase)


def greedy_wer(checkpoint, manifest_path, relu_cap: float = 20.0) -> float:
    """WER of plain best-path decoding, no language model."""
    params, meta = load_checkpoint(checkpoint)
    manifest = parse_manifest(manifest_path, meta.alphabet)
    refs, hyps = [], []
    for entry in manifest.entries:
        feats = featurize(load_wav(entry.audio_path), meta.feature_config)
        logprobs, _ = forward(params, feats, DropoutSpec(0.0), mode="infer",
                              relu_cap=relu_cap)
        hyps.append(greedy_decode(logprobs, meta.alphabet))
        refs.append(entry.transcript)
    return score_pairs(refs, hyps).wer


def _plan_slug(plan: FreezePlan) -> str:
    return plan.value


def suite_lm(config: TrainConfig, alphabet: Alphabet) -> NGramLM:
    """Decoding LM for the suite: the configured corpus file, or the
    training transcripts when none is given."""
    if config.lm_corpus is not None:
        lines = Path(config.lm_corpus).read_text(encoding="utf-8").split("\n")
    else:
        manifest = parse_manifest(config.train_manifest, alphabet)
        lines = [e.transcript for e in manifest.entries]
    return train_ngram([l for l in lines if l], config.lm_order,
                       alphabet.chars, config.lm_discount)


def run_suite(config: TrainConfig, source_checkpoint) -> ExperimentReport:
    """All six regimes on identical data and seed, each evaluated at its
    best-validation epoch; emits results.csv, trainable_params.csv, six
    curve CSVs and the comparison figures under config.run_dir."""
    suite_dir = Path(config.run_dir)
    suite_dir.mkdir(parents=True, exist_ok=True)
    if config.test_manifest is None:
        raise ConfigError("the suite needs test_manifest")
    config.to_file(suite_dir / "config.txt")
    alphabet = Alphabet.from_file(config.alphabet)
    lm = suite_lm(config, alphabet)
    decode_params = config.decode_params()

    curves_dir = suite_dir / "curves"
    figures_dir = suite_dir / "figures"
    curves_dir.mkdir(exist_ok=True)
    figures_dir.mkdir(exist_ok=True)

    results = []
    counts = []
    curves: dict[str, LearningCurve] = {}
    for plan in SUITE_PLANS:
        run_config = dataclasses.replace(config,
                                         run_dir=suite_dir / "runs" / _plan_slug(plan))
        init = source_checkpoint if plan.uses_source_checkpoint else None
        run_dir = train(run_config, init, plan)

        curve_csv = run_dir / "curve.csv"
        (curves_dir / f"{_plan_slug(plan)}.csv").write_bytes(curve_csv.read_bytes())
        curve = read_curve_csv(curve_csv)
        curves[plan.method_name] = curve

        report = evaluate(run_dir / "best.ckpt", config.test_manifest, lm,
                          decode_params, relu_cap=config.relu_cap)
        results.append((plan.method_name, report.wer, report.cer))

        cfg = config.feature_config()
        dims = ModelDims(cfg.feature_width, config.hidden, alphabet.n_labels)
        n_trainable = trainable_param_count(dims, build_freeze_mask(plan))
        counts.append((plan.method_name, n_trainable))
        log.info("%s: best epoch %d, WER %.4f, CER %.4f, %d trainable",
                 plan.method_name, curve.best_epoch, report.wer, report.cer,
                 n_trainable)

    experiment = ExperimentReport(tuple(results))
    write_results_csv(experiment, suite_dir / "results.csv")
    (suite_dir / "trainable_params.csv").write_text(
        "method,trainable_params\n" +
        "".join(f"{m},{n}\n" for m, n in counts), encoding="utf-8")
    plot_curve_comparison(curves, figures_dir / "learning_curves.png",
                          title="validation loss per regime")
    plot_results(experiment, figures_dir / "results.png",
                 title="test error rates per regime")
    return experiment
