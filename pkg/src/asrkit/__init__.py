"""Desk-scale end-to-end speech recognition with CTC training, cross-lingual
transfer via per-layer weight freezing, and n-gram language-model decoding."""

from .ctc import CtcResult, collapse, ctc_forward_backward, ctc_oracle
from .decoder import DecodeParams, beam_decode, greedy_decode, oracle_decode
from .features import AudioClip, FeatureConfig, featurize, mfcc, stack_context
from .harness import TrainConfig, evaluate, run_suite, train
from .lm import NGramLM, read_arpa, train_ngram, write_arpa
from .metrics import EvalReport, cer, edit_distance, wer
from .model import DropoutSpec, ModelDims, ModelParams, backward, forward, init_params
from .numerics import Rng
from .optim import AdamHyper, AdamState, FreezePlan, adam_step, build_freeze_mask
from .transfer import Alphabet, load_checkpoint, remap_output_layer, save_checkpoint

__all__ = [
    "AdamHyper", "AdamState", "Alphabet", "AudioClip", "CtcResult",
    "DecodeParams", "DropoutSpec", "EvalReport", "FeatureConfig", "FreezePlan",
    "ModelDims", "ModelParams", "NGramLM", "Rng", "TrainConfig",
    "adam_step", "backward", "beam_decode", "build_freeze_mask", "cer",
    "collapse", "ctc_forward_backward", "ctc_oracle", "edit_distance",
    "evaluate", "featurize", "forward", "greedy_decode", "init_params",
    "load_checkpoint", "mfcc", "oracle_decode", "read_arpa",
    "remap_output_layer", "run_suite", "save_checkpoint", "stack_context",
    "train", "train_ngram", "wer", "write_arpa",
]

__version__ = "0.1.0"
