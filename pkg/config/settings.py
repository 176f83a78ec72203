"""
Post-processing configuration
"""
import os
from pathlib import Path

# Base paths
BASE_DIR = Path(__file__).parent.parent
DATA_DIR = Path(os.getenv("FAIRPOST_DATA_DIR", str(BASE_DIR / "data")))

# Logging
LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO")
LOG_FILE = os.getenv("FAIRPOST_LOG_FILE", "")  # empty = no file handler

# Smoothing width of the randomized rule
DEFAULT_GAMMA = float(os.getenv("FAIRPOST_GAMMA", "0.01"))

# SGD defaults
DEFAULT_STEPS = int(os.getenv("FAIRPOST_STEPS", "100000"))
DEFAULT_SEED = int(os.getenv("FAIRPOST_SEED", "0"))
DEFAULT_LEARNING_RATE = os.getenv("FAIRPOST_LR", "auto")
TRACE_POINTS = int(os.getenv("FAIRPOST_TRACE_POINTS", "100"))

# Learning rate presets: factor c in alpha = c * sqrt(K/T).
# "auto" is resolved separately as ((1+gamma)/(1+b)) * sqrt(K/T).
LEARNING_RATE_PRESETS = {
    "small": 0.1,
}

# Scores outside [-1, 1]: "clamp" (with warning) or "strict" (reject)
SCORE_POLICY = os.getenv("FAIRPOST_SCORE_POLICY", "clamp")

# Accepted boolean encodings (case-insensitive)
TRUE_VALUES = ("1", "true", "yes")
FALSE_VALUES = ("0", "false", "no")

# Model file
MODEL_FORMAT_VERSION = 1

# Oracle bisection
ORACLE_RESIDUAL_TOL = 1e-10
ORACLE_WIDTH_TOL = 1e-12
ORACLE_MAX_ITER = 200
ORACLE_GRID_POINTS = 33

# gamma -> 0+ sequence used by the discrete Bayes-optimal solver
EXTRAPOLATION_GAMMAS = (1e-2, 1e-3, 1e-4, 1e-5, 1e-6)

# Platt scaling
CALIBRATION_MAX_ITER = 50
CALIBRATION_GRAD_TOL = 1e-8

# Train / calibration / test split
SPLIT_FRACTIONS = (0.6, 0.2, 0.2)
SPLIT_NAMES = ("train", "calibration", "test")

# Default column names of the scored CSV
DEFAULT_COLUMNS = {
    "score": "score",
    "group": "group",
    "sensitive": "sensitive",
    "label": "label",
}
