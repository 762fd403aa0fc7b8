"""Shared fixtures: small synthetic collections and one trained model.

The trained fixture is session-scoped because training even a small
teacher takes tens of seconds; every test that needs a realistic model
(latent statistics, codec parity, relight self-consistency) shares it.
"""

import numpy as np
import pytest

from relightkit import bench, mlic, neural, nn, synth


@pytest.fixture(scope="session")
def flat_mlic():
    """16x16 flat Lambertian scene under the full 49+20 light protocol."""
    return synth.make_benchmark_mlic("flat", size=16, seed=0)


@pytest.fixture(scope="session")
def bumps_mlic():
    """24x24 bumpy glossy scene with shadows under the full protocol."""
    return synth.make_benchmark_mlic("bumps", size=24, seed=3)


@pytest.fixture(scope="session")
def mixed_mlic():
    """32x32 multi-material scene with shadows under the full protocol."""
    return synth.make_benchmark_mlic("mixed", size=32, seed=0)


@pytest.fixture(scope="session")
def dome_split(flat_mlic):
    return mlic.split_by_elevation(flat_mlic, [20, 40, 60, 80], 5.0)


@pytest.fixture(scope="session")
def trained_setup(bumps_mlic):
    """A well-fit teacher trained to convergence on the bumpy scene.

    Returns (mlic, split, model, latent image); reused wherever a test
    needs realistic trained weights rather than random ones. Annealed
    training, since these tests probe converged-model behavior.
    """
    split = mlic.split_by_elevation(bumps_mlic, [20, 40, 60, 80], 5.0)
    cfg = nn.TrainConfig(max_epochs=300, patience=300, seed=0, lr_floor=1e-3)
    model, _, _ = bench.train_teacher_pipeline(
        bumps_mlic,
        split,
        encoder_spec=neural.EncoderSpec(hidden_layers=3),
        decoder_spec=neural.DecoderSpec(50),
        fraction=1.0,
        cfg=cfg,
    )
    latent = neural.encode_latents(model, bumps_mlic, split)
    return bumps_mlic, split, model, latent


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
