"""caimbench configuration constants.

This module contains all configuration defaults and constants used throughout caimbench.
Users can override these values through an experiment config file or CLI flags.
"""

from pathlib import Path


def get_project_root() -> Path:
    """Get the absolute path to the caimbench project root directory.

    The project root is identified by the presence of pyproject.toml.
    This ensures results are saved to a consistent location regardless of
    where caimbench commands are run from.

    Returns:
        Path: Absolute path to project root directory

    Raises:
        RuntimeError: If pyproject.toml cannot be found
    """
    current = Path(__file__).resolve().parent

    for parent in [current] + list(current.parents):
        if (parent / "pyproject.toml").exists():
            return parent

    # Installed wheel: src/ layout is gone, fall back to the working directory
    if current.name == "caimbench" and current.parent.name == "src":
        return current.parent.parent
    return Path.cwd()


RESULTS_DIR = get_project_root() / "results"
"""Absolute path to the default results directory."""

DEFAULT_OUTPUT_DIR = str(RESULTS_DIR / "caim")
"""Default experiment output directory."""

# Numerics
DEFAULT_EPSILON = 1e-5
"""Variance stabilizer inside every instance-statistics square root."""

EMBEDDING_EPSILON = 1e-24
"""Added to squared embedding norms before the square root of L2 normalization."""

# Backbone geometry
DEFAULT_CHANNEL_PLAN = (16, 32, 64, 128, 128)
"""Output channels of the five stride-2 backbone stages."""

DEFAULT_EMBEDDING_DIM = 64
"""Dimension of the backbone embedding."""

DEFAULT_RESOLUTION = 32
"""Square input resolution of the backbone."""

DEFAULT_INSERTION_PLAN = (1, 2, 3)
"""Stages after which a CAIM block is inserted by default."""

# Contrastive training
DEFAULT_MARGIN = 2.0
"""Contrastive hinge margin."""

DEFAULT_LEARNING_RATE = 1e-4
"""Adam learning rate for CAIM training."""

DEFAULT_EPOCHS = 50
"""Number of CAIM training epochs."""

DEFAULT_BATCH_SIZE = 90
"""Pairs per CAIM training batch."""

DEFAULT_GENUINE_FRACTION = 0.5
"""Share of genuine pairs in every training batch."""

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8

# Backbone pretraining
DEFAULT_PRETRAIN_EPOCHS = 20
DEFAULT_PRETRAIN_LEARNING_RATE = 1e-3
DEFAULT_PRETRAIN_BATCH_SIZE = 64

# Synthetic benchmark
DEFAULT_IDENTITIES = 60
"""Benchmark identities (train + eval)."""

DEFAULT_SAMPLES_PER_IDENTITY = 4
"""Samples per identity per modality."""

DEFAULT_GAP_STRENGTH = 0.8
"""Strength of the synthetic domain gap in [0, 1]."""

DEFAULT_LATENT_DIM = 16
"""Dimension of identity latents."""

DEFAULT_PRETRAIN_IDENTITIES = 200
"""Source-only identities in the pretraining pool."""

DEFAULT_PRETRAIN_SAMPLES = 8
"""Samples per pretraining identity."""

DEFAULT_FOLDS = 5
DEFAULT_TRAIN_FRACTION = 25 / 60
"""25 training identities out of 60."""

# Evaluation
DEFAULT_FAR_TARGETS = (0.01, 0.1, 1.0, 5.0)
"""False acceptance rates (percent) at which verification rates are reported."""

# Execution
DEFAULT_WORKERS = 1
"""Default number of ablation rows run concurrently."""

MAX_WORKERS = 32
"""Maximum recommended number of worker processes."""
