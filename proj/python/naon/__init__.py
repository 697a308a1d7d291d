"""Non-autoregressive sentence ordering: model, decoders and metrics."""

from ._core import (
    ConfigError,
    ContractError,
    DimensionError,
    InputError,
    IoError,
    LoadError,
    Model,
    NumericalError,
    ScaleError,
    accuracy,
    brute_force_assign,
    evaluate,
    exclusive_loss,
    greedy_assign,
    hungarian_assign,
    kendall_tau,
    load_jsonl,
    log_objective,
    metrics,
    pointer_loss,
    positional_encoding,
    raw_argmax,
    repetition_ratios,
    shuffle_paragraph,
    synth,
    train,
    write_synth,
)

__version__ = "0.1.0"
