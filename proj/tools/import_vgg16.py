#!/usr/bin/env python3
"""Convert a torchvision VGG16 checkpoint into the feature-extractor archive.

Downloads (or reads from --checkpoint) the public ImageNet VGG16 weights and
writes the conv1_1..conv3_3 prefix in the repo's manifest+tensors format,
kernels transposed from OIHW to HWIO. Point the trainer at the output with
the vgg_weights config entry.

    python3 tools/import_vgg16.py --out data/vgg16
"""

import argparse
import json
import struct
import zlib
from pathlib import Path

import numpy as np

CONV_KEYS = [
    ("conv1_1", "features.0"),
    ("conv1_2", "features.2"),
    ("conv2_1", "features.5"),
    ("conv2_2", "features.7"),
    ("conv3_1", "features.10"),
    ("conv3_2", "features.12"),
    ("conv3_3", "features.14"),
]


def write_archive(out_dir: Path, tensors: list[tuple[str, np.ndarray]], meta: dict) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    payload = b""
    entries = []
    for name, arr in tensors:
        arr = np.ascontiguousarray(arr, dtype="<f4")
        entries.append({"name": name, "shape": list(arr.shape), "offset": len(payload)})
        payload += arr.tobytes()
    manifest = {
        "format_version": 1,
        "meta": meta,
        "crc32": zlib.crc32(payload) & 0xFFFFFFFF,
        "payload_bytes": len(payload),
        "tensors": entries,
    }
    (out_dir / "tensors.bin").write_bytes(payload)
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default=Path("data/vgg16"), type=Path)
    parser.add_argument("--checkpoint", type=Path, default=None,
                        help="local vgg16-397923af.pth; downloaded via torchvision if omitted")
    args = parser.parse_args()

    import torch

    if args.checkpoint:
        state = torch.load(args.checkpoint, map_location="cpu", weights_only=True)
    else:
        from torchvision.models import VGG16_Weights, vgg16

        state = vgg16(weights=VGG16_Weights.IMAGENET1K_V1).state_dict()

    tensors = []
    for name, key in CONV_KEYS:
        w = state[key + ".weight"].numpy()  # OIHW
        b = state[key + ".bias"].numpy()
        hwio = np.transpose(w, (2, 3, 1, 0))
        tensors.append((name + "/w", hwio))
        tensors.append((name + "/b", b))
        print(f"{name}: {hwio.shape}")

    meta = {
        "kind": "vgg16_conv33",
        "provenance": "torchvision vgg16 IMAGENET1K_V1, conv prefix through conv3_3",
        "preprocessing": "input in [-1,1] -> [0,1] -> (x - mean)/std with the "
                         "ImageNet channel statistics",
    }
    write_archive(args.out, tensors, meta)
    print(f"feature weights -> {args.out}")


if __name__ == "__main__":
    main()
