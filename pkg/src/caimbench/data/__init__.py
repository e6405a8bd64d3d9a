"""caimbench synthetic data and protocols."""

from caimbench.data.loader import DatasetLoader, SampleSet
from caimbench.data.protocol import (
    load_protocol,
    make_protocol,
    source_sanity_split,
    split_sizes,
    write_protocol,
)
from caimbench.data.synth import (
    PRESETS,
    Decoder,
    IdentityLatent,
    SyntheticDataset,
    apply_transform,
    gaussian_blur,
    generate_dataset,
    sample_identity_latents,
    synthesize,
    target_transform,
    write_dataset,
)

__all__ = [
    "IdentityLatent",
    "Decoder",
    "SyntheticDataset",
    "PRESETS",
    "sample_identity_latents",
    "target_transform",
    "apply_transform",
    "gaussian_blur",
    "synthesize",
    "write_dataset",
    "generate_dataset",
    "DatasetLoader",
    "SampleSet",
    "make_protocol",
    "source_sanity_split",
    "split_sizes",
    "write_protocol",
    "load_protocol",
]
