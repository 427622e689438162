"""Streaming matrix sketching and online hashing.

Sketching keeps a small fixed-row summary B of a tall row stream A with
a deterministic bound on the Gram mismatch A'A - B'B.  On top of the
sketches sit online-trained binary hash models for approximate nearest
neighbor retrieval, including a buffered fast trainer and a distributed
merge of independent worker sketches.
"""
__version__ = "0.1.0"

from .matrix import SvdError, SvdResult, fwht, hadamard_sign, spectral_norm, svd
from .rng import derive_seed
from .srht import SrhtOperator, WorkspaceProbe, new_srht
from .fd import SketchState, fd_insert, new_sketch, shrink
from .ffd import FfdSketcher
from .centering import CenteringState, center_chunk
from .frosh import (
    BinaryCodes,
    HashModel,
    StreamTrainer,
    TrainConfig,
    extract_model,
    hamming_distances,
    hamming_rank,
    hash_codes,
    lsh_model,
    train_stream,
)
from .dfrosh import WorkerSummary, merge, train_distributed, worker_sketch
from .datagen import SynthConfig, synth_clusters, synth_lowrank
from .evaluate import (
    RetrievalTask,
    average_precision,
    centered_relative_error,
    evaluate_map,
    make_task,
    map_score,
    pr_curve,
    relative_error,
    task_rankings,
)
from .io import FormatError, load_matrix, save_matrix

__all__ = [
    "__version__",
    "SvdError",
    "SvdResult",
    "fwht",
    "hadamard_sign",
    "spectral_norm",
    "svd",
    "derive_seed",
    "SrhtOperator",
    "WorkspaceProbe",
    "new_srht",
    "SketchState",
    "fd_insert",
    "new_sketch",
    "shrink",
    "FfdSketcher",
    "CenteringState",
    "center_chunk",
    "BinaryCodes",
    "HashModel",
    "StreamTrainer",
    "TrainConfig",
    "extract_model",
    "hamming_distances",
    "hamming_rank",
    "hash_codes",
    "lsh_model",
    "train_stream",
    "WorkerSummary",
    "merge",
    "train_distributed",
    "worker_sketch",
    "SynthConfig",
    "synth_clusters",
    "synth_lowrank",
    "RetrievalTask",
    "average_precision",
    "centered_relative_error",
    "evaluate_map",
    "make_task",
    "map_score",
    "pr_curve",
    "relative_error",
    "task_rankings",
    "FormatError",
    "load_matrix",
    "save_matrix",
]
