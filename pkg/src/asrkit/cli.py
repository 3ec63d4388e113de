"""Command-line entry points.

Subcommands: train, finetune, eval, decode, lm-train, suite, synth-data.
The ASR_NUM_THREADS environment variable caps featurization worker threads.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .data import load_wav
from .decoder import DecodeParams, beam_decode, greedy_decode
from .features import featurize
from .harness import TrainConfig, evaluate, run_suite, train
from .lm import read_arpa, train_ngram, write_arpa
from .model import DropoutSpec, forward
from .optim import FreezePlan
from .synth import generate_scenario
from .transfer import Alphabet, load_checkpoint


def _add_decode_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--lm", help="ARPA language model file")
    p.add_argument("--alpha", type=float, default=0.75, help="LM weight")
    p.add_argument("--beta", type=float, default=1.5, help="per-character bonus")
    p.add_argument("--beam-width", type=int, default=64)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="asrkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train from random initialization")
    p.add_argument("--config", required=True)

    p = sub.add_parser("finetune", help="train from a source checkpoint with frozen layers")
    p.add_argument("--config", required=True)
    p.add_argument("--init", required=True, help="source checkpoint")
    p.add_argument("--freeze", type=int, choices=range(5), default=0)

    p = sub.add_parser("eval", help="beam-decode a manifest and report WER/CER")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--manifest", required=True)
    _add_decode_flags(p)
    p.add_argument("--method", default="eval", help="label for the report row")
    p.add_argument("--out", help="write the report CSV here")
    p.add_argument("--lowercase", action="store_true")

    p = sub.add_parser("decode", help="transcribe a single wav file")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--wav", required=True)
    _add_decode_flags(p)

    p = sub.add_parser("lm-train", help="train a character n-gram LM, write ARPA")
    p.add_argument("--corpus", required=True)
    p.add_argument("--order", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--alphabet", help="alphabet file; default: corpus characters")
    p.add_argument("--discount", type=float, default=0.75)

    p = sub.add_parser("suite", help="run all six training regimes and report")
    p.add_argument("--config", required=True)
    p.add_argument("--source-checkpoint", required=True)

    p = sub.add_parser("synth-data", help="generate the synthetic source/target languages")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--train", type=int, default=48)
    p.add_argument("--dev", type=int, default=6)
    p.add_argument("--test", type=int, default=6)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)

    if args.command == "train":
        run_dir = train(TrainConfig.from_file(args.config))
        print(run_dir)

    elif args.command == "finetune":
        run_dir = train(TrainConfig.from_file(args.config), args.init,
                        FreezePlan.from_frozen_count(args.freeze))
        print(run_dir)

    elif args.command == "eval":
        lm = read_arpa(args.lm) if args.lm else None
        params = DecodeParams(args.beam_width, args.alpha, args.beta)
        report = evaluate(args.checkpoint, args.manifest, lm, params,
                          lowercase=args.lowercase)
        row = f"{args.method},{report.wer:.4f},{report.cer:.4f}"
        print("method,wer,cer")
        print(row)
        if args.out:
            Path(args.out).write_text(f"method,wer,cer\n{row}\n", encoding="utf-8")

    elif args.command == "decode":
        params_model, meta = load_checkpoint(args.checkpoint)
        feats = featurize(load_wav(args.wav), meta.feature_config)
        logprobs, _ = forward(params_model, feats, DropoutSpec(0.0), mode="infer")
        if args.lm:
            decode = beam_decode(logprobs, read_arpa(args.lm),
                                 DecodeParams(args.beam_width, args.alpha, args.beta),
                                 meta.alphabet)
        else:
            decode = greedy_decode(logprobs, meta.alphabet)
        print(decode)

    elif args.command == "lm-train":
        lines = Path(args.corpus).read_text(encoding="utf-8").split("\n")
        lines = [l for l in lines if l]
        if args.alphabet:
            chars = Alphabet.from_file(args.alphabet).chars
        else:
            chars = tuple(sorted(set("".join(lines))))
        lm = train_ngram(lines, args.order, chars, args.discount)
        write_arpa(lm, args.out)
        print(args.out)

    elif args.command == "suite":
        report = run_suite(TrainConfig.from_file(args.config), args.source_checkpoint)
        for method, wer, cer in report.rows:
            print(f"{method},{wer:.4f},{cer:.4f}")

    elif args.command == "synth-data":
        dirs = generate_scenario(args.out_dir, args.seed, args.train, args.dev, args.test)
        for name, lang in dirs.items():
            print(f"{name}: {lang.root}")

    return 0


if __name__ == "__main__":
    sys.exit(main())
