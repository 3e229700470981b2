#!/usr/bin/env python3
"""Convert VGG19 ImageNet weights into the archive format read by the trainer.

Input is either a torch state-dict file (.pth) as distributed with torchvision
(keys `features.N.weight` / `features.N.bias`), or `--torchvision` to download
the published weights through torchvision itself. Only the 16 convolution
layers of the feature stack are kept; classifier weights are dropped.

Archive layout: 8-byte little-endian manifest length, UTF-8 JSON manifest
([{name, shape, offset}]), then the concatenated little-endian float32 payload.
"""

import argparse
import json
import struct
import sys

# torchvision feature indices of the 16 conv layers, in forward order
FEATURE_INDICES = [0, 2, 5, 7, 10, 12, 14, 16, 19, 21, 23, 25, 28, 30, 32, 34]
NAMES = [
    "block1_conv1", "block1_conv2",
    "block2_conv1", "block2_conv2",
    "block3_conv1", "block3_conv2", "block3_conv3", "block3_conv4",
    "block4_conv1", "block4_conv2", "block4_conv3", "block4_conv4",
    "block5_conv1", "block5_conv2", "block5_conv3", "block5_conv4",
]


def write_archive(entries, out_path):
    manifest = []
    payload = bytearray()
    for name, arr in entries:
        manifest.append({"name": name, "shape": list(arr.shape),
                         "offset": len(payload) // 4})
        payload += arr.astype("<f4").tobytes()
    blob = json.dumps(manifest).encode("utf-8")
    with open(out_path, "wb") as f:
        f.write(struct.pack("<Q", len(blob)))
        f.write(blob)
        f.write(payload)


def main():
    ap = argparse.ArgumentParser(description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    src = ap.add_mutually_exclusive_group(required=True)
    src.add_argument("--state-dict", help="path to a VGG19 state-dict .pth file")
    src.add_argument("--torchvision", action="store_true",
                     help="download the published weights via torchvision")
    ap.add_argument("output", help="archive file to write")
    args = ap.parse_args()

    import torch

    if args.torchvision:
        from torchvision.models import vgg19, VGG19_Weights
        state = vgg19(weights=VGG19_Weights.IMAGENET1K_V1).state_dict()
    else:
        state = torch.load(args.state_dict, map_location="cpu", weights_only=True)
        if hasattr(state, "state_dict"):
            state = state.state_dict()

    entries = []
    for name, idx in zip(NAMES, FEATURE_INDICES):
        for kind in ("weight", "bias"):
            key = f"features.{idx}.{kind}"
            if key not in state:
                sys.exit(f"error: '{key}' not found in state dict "
                         f"(is this a VGG19 checkpoint?)")
            entries.append((f"{name}.{kind}", state[key].numpy()))

    write_archive(entries, args.output)
    total = sum(a.size for _, a in entries)
    print(f"wrote {args.output}: {len(entries)} tensors, {total} values")


if __name__ == "__main__":
    main()
