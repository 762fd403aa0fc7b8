"""relightkit: build, distill, pack, and evaluate relightable images.

Pipeline at a glance: load or synthesize a multi-light image collection,
train a teacher autoencoder on its pixels, distill the teacher into a
lightweight student decoder, quantize the latent codes into a relightable
file, and score relights against held-out directions. Classical PTM/HSH
baselines and a CPU decode path round out the benchmark surface.
"""

from .classical import HSHMap, PTMMap, fit_hsh, fit_ptm, hsh_basis, ptm_design_row, relight_classical
from .codec import (
    QuantSpec,
    RelightableFile,
    cpu_relight_file,
    quantize,
    read_classical_map,
    read_relightable,
    write_classical_map,
    write_relightable,
)
from .metrics import QualityReport, delta_e, psnr, ssim
from .mlic import (
    MLIC,
    LightDirection,
    PixelSampleSet,
    SplitSpec,
    TrainingTable,
    gather_training_rows,
    load_mlic,
    sample_pixels,
    save_mlic,
    split_by_elevation,
)
from .neural import (
    DecoderSpec,
    DistillConfig,
    EncoderSpec,
    LatentImage,
    NeuralRTIModel,
    build_model,
    decoder_param_count,
    distill_student,
    encode_latents,
    relight,
    relight_image,
    train_teacher,
)
from .nn import AdamState, DenseLayer, Network, TrainConfig, adam_step, backward, forward, train
from .synth import DomeSpec, SyntheticScene, dome_directions, make_scene, render_mlic

__version__ = "0.1.0"

__all__ = [
    "AdamState",
    "DecoderSpec",
    "DenseLayer",
    "DistillConfig",
    "DomeSpec",
    "EncoderSpec",
    "HSHMap",
    "LatentImage",
    "LightDirection",
    "MLIC",
    "Network",
    "NeuralRTIModel",
    "PTMMap",
    "PixelSampleSet",
    "QualityReport",
    "QuantSpec",
    "RelightableFile",
    "SplitSpec",
    "SyntheticScene",
    "TrainConfig",
    "TrainingTable",
    "adam_step",
    "backward",
    "build_model",
    "cpu_relight_file",
    "decoder_param_count",
    "delta_e",
    "distill_student",
    "dome_directions",
    "encode_latents",
    "fit_hsh",
    "fit_ptm",
    "forward",
    "gather_training_rows",
    "hsh_basis",
    "load_mlic",
    "make_scene",
    "psnr",
    "ptm_design_row",
    "quantize",
    "read_classical_map",
    "read_relightable",
    "relight",
    "relight_classical",
    "relight_image",
    "render_mlic",
    "sample_pixels",
    "save_mlic",
    "split_by_elevation",
    "ssim",
    "train",
    "train_teacher",
    "write_classical_map",
    "write_relightable",
]
