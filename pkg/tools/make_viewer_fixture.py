#!/usr/bin/env python3
"""Regenerate the frontend's cross-component parity fixture.

Builds a small seeded relightable file, decodes it at five light
directions with the reference CPU path, and writes everything the
TypeScript tests need into frontend/test/fixtures/viewer_fixture.json:
the header, the raw plane bytes (pixel-major, K per pixel), and the
expected float RGB images.
"""

import json
from pathlib import Path

import numpy as np

from relightkit import codec, nn
from relightkit.mlic import LightDirection
from relightkit.neural import LatentImage

OUT = Path(__file__).resolve().parent.parent / "frontend" / "test" / "fixtures"

LIGHTS = [
    (0.0, 0.0),
    (0.5, 0.0),
    (0.0, -0.5),
    (-0.6, 0.35),
    (0.7071067811865476, 0.7071067811865476),  # disc boundary
]


def main() -> None:
    rng = np.random.default_rng(20240817)
    latent = LatentImage(codes=rng.normal(0.0, 1.3, size=(8, 8, 9)))
    planes, quant = codec.quantize(latent)
    decoder = nn.build_network([11, 20, 20, 3], ["elu", "elu", "identity"], seed=99)

    tmp = OUT / "_packed"
    codec.write_relightable(
        decoder, quant, planes,
        {"method": "disk-neuralrti", "lights_trained": 49},
        tmp,
    )
    packed = codec.read_relightable(tmp)
    header = json.loads((tmp / "info.json").read_text(encoding="utf-8"))

    expected = []
    for lx, ly in LIGHTS:
        lz = float(np.sqrt(max(0.0, 1.0 - lx * lx - ly * ly)))
        img = codec.cpu_relight_file(packed, LightDirection(lx, ly, lz))
        expected.append(np.round(img, 10).ravel().tolist())

    fixture = {
        "header": header,
        "planes": packed.planes.ravel().tolist(),  # pixel-major, K per pixel
        "lights": [[lx, ly] for lx, ly in LIGHTS],
        "expected_rgb": expected,
        "tolerance": 2.0 / 255.0,
    }
    OUT.mkdir(parents=True, exist_ok=True)
    (OUT / "viewer_fixture.json").write_text(
        json.dumps(fixture) + "\n", encoding="utf-8"
    )
    for p in sorted(tmp.iterdir()):
        p.unlink()
    tmp.rmdir()
    print(f"wrote {OUT / 'viewer_fixture.json'}")


if __name__ == "__main__":
    main()
