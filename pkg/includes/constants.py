"""Constants

A file store constants shared by every package of the project
"""

# Time
SECONDS_PER_DAY = 86400

# Vocabulary
PAD = 0
MASK_OFFSET = 1  # MASK index = num_items + MASK_OFFSET

# Numerics
FD_EPS = 1e-5
REL_ERR_FLOOR = 1e-8
FD_NOISE_FLOOR = 1e-9  # finite-difference rounding noise on an exactly-zero gradient
LAYER_NORM_EPS = 1e-12
INIT_STD = 0.02
INIT_TRUNC = 0.02
GELU_COEF = 0.044715

# Parameter setting defaults
BATCH_SIZE = 128
MAX_LEN = 50
HIDDEN_DIM = 64
NUM_LAYERS = 2
DROPOUT = 0.2
LEARNING_RATE = 1e-3
ADAM_BETAS = (0.9, 0.999)
ADAM_EPS = 1e-8
WEIGHT_DECAY = 0.0
MASK_PROB = 0.2
TCL_DELTA = 30
TCL_TAU = 0.1
TCL_LAMBDA = 0.3
CLIP_TIME = 256
CLIP_POSITION = 2
PATIENCE = 5

# Evaluation
TOP_K = 10
NUM_NEGATIVES = 100

# Analysis
OVERLAP_DELTA = 30
OVERLAP_TOP_U = 100

# Grid search ranges
GRID_HIDDEN_DIM = (16, 32, 64, 128)
GRID_WEIGHT_DECAY = (0.0, 1e-5)
GRID_LEARNING_RATE = (1e-3, 1e-4)
GRID_DROPOUT = (0.1, 0.2, 0.3, 0.4, 0.5)
GRID_TAU = (0.05, 0.1)
GRID_DELTA = (7, 15, 30, 60, 100)
GRID_LAMBDA = (0.1, 0.2, 0.3, 0.4, 0.5)
GRID_CLIP_TIME = (128, 256, 512, 1024)
