#!/usr/bin/env python3
"""Regenerate tests/data/vgg19_reference.json.

Builds the 16-conv VGG19 feature stack in PyTorch, fills it with synthetic
weights from a small deterministic integer PRNG (reproduced bit-for-bit by the
acceptance test), runs one forward pass on a synthetic input, and freezes a
per-tap fingerprint (elementwise sum and max) of the five encoder taps.

The fingerprints verify that the archive import path feeds the encoder the
same features an independent implementation computes from the same weights.
Requires torch; the checked-in JSON means tests do not.
"""

import json
import math
import pathlib

import numpy as np
import torch
import torch.nn as nn

LAYOUT = [
    ("block1_conv1", 3, 64), ("block1_conv2", 64, 64),
    ("block2_conv1", 64, 128), ("block2_conv2", 128, 128),
    ("block3_conv1", 128, 256), ("block3_conv2", 256, 256),
    ("block3_conv3", 256, 256), ("block3_conv4", 256, 256),
    ("block4_conv1", 256, 512), ("block4_conv2", 512, 512),
    ("block4_conv3", 512, 512), ("block4_conv4", 512, 512),
    ("block5_conv1", 512, 512), ("block5_conv2", 512, 512),
    ("block5_conv3", 512, 512), ("block5_conv4", 512, 512),
]
BLOCK_SIZES = [2, 2, 4, 4, 4]
INPUT_SHAPE = (1, 3, 64, 64)


def fnv1a32(name: str) -> int:
    h = 2166136261
    for b in name.encode("utf-8"):
        h = ((h ^ b) * 16777619) & 0xFFFFFFFF
    return h or 0x9E3779B9


def unit_stream(name: str, count: int) -> np.ndarray:
    """xorshift32 seeded by FNV-1a of the tensor name; values in [0,1) with a
    24-bit mantissa, so they are exact in float32."""
    x = fnv1a32(name)
    out = np.empty(count, dtype=np.float32)
    for i in range(count):
        x ^= (x << 13) & 0xFFFFFFFF
        x ^= x >> 17
        x ^= (x << 5) & 0xFFFFFFFF
        out[i] = np.float32(x >> 8) * np.float32(2.0**-24)
    return out


def synth_weight(name: str, out_ch: int, in_ch: int) -> np.ndarray:
    scale = np.float32(math.sqrt(2.0 / (in_ch * 9)))
    u = unit_stream(name + ".weight", out_ch * in_ch * 9)
    return ((u - np.float32(0.5)) * scale).reshape(out_ch, in_ch, 3, 3)


def synth_bias(name: str, out_ch: int) -> np.ndarray:
    u = unit_stream(name + ".bias", out_ch)
    return (u - np.float32(0.5)) * np.float32(0.1)


def main() -> None:
    convs = {}
    layers = []
    li = 0
    tap_indices = []
    for blk, size in enumerate(BLOCK_SIZES):
        for _ in range(size):
            name, in_ch, out_ch = LAYOUT[li]
            conv = nn.Conv2d(in_ch, out_ch, 3, padding=1)
            with torch.no_grad():
                conv.weight.copy_(torch.from_numpy(synth_weight(name, out_ch, in_ch)))
                conv.bias.copy_(torch.from_numpy(synth_bias(name, out_ch)))
            convs[name] = conv
            layers += [conv, nn.ReLU(inplace=False)]
            li += 1
        tap_indices.append(len(layers) - 1)
        if blk < 4:
            layers.append(nn.MaxPool2d(2))

    model = nn.Sequential(*layers).eval()

    x = torch.from_numpy(
        unit_stream("input", int(np.prod(INPUT_SHAPE))).reshape(INPUT_SHAPE)
    )

    taps = {}
    names = ["s1", "s2", "s3", "s4", "bottleneck"]
    with torch.no_grad():
        a = x
        next_tap = 0
        for i, layer in enumerate(layers):
            a = layer(a)
            if next_tap < len(tap_indices) and i == tap_indices[next_tap]:
                taps[names[next_tap]] = {
                    "shape": list(a.shape),
                    "sum": float(a.double().sum().item()),
                    "max": float(a.max().item()),
                }
                next_tap += 1

    out = {
        "input_shape": list(INPUT_SHAPE),
        "taps": taps,
    }
    dest = pathlib.Path(__file__).resolve().parent.parent / "tests" / "data" / "vgg19_reference.json"
    dest.parent.mkdir(parents=True, exist_ok=True)
    dest.write_text(json.dumps(out, indent=2) + "\n")
    print(f"wrote {dest}")
    for k, v in taps.items():
        print(f"  {k}: shape={v['shape']} sum={v['sum']:.6f} max={v['max']:.6f}")


if __name__ == "__main__":
    main()
