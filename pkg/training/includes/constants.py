"""Constants

Ablation names, rng stream tags and log layout
"""

ABLATIONS = ("full", "no_tcl", "no_abs_mhar", "no_rel_mhar", "no_mhar", "transformer_t")

DEFAULT_EPOCHS = 20
MIN_TAU = 0.01

# rng streams, one per purpose and step
STREAM_INIT = 0
STREAM_SHUFFLE = 1
STREAM_MASK = 2
STREAM_DROPOUT = 3
STREAM_PSEUDO = 4

METRICS_LOG = "metrics.jsonl"
CHECKPOINT_NAME = "checkpoint.npz"
BEST_CHECKPOINT_NAME = "best.npz"
SWEEP_CSV = "sweep.csv"
