#!/usr/bin/env python3
"""Export the scikit-image sample photographs as the pristine PNG corpus.

The corpus under data/corpus feeds tools/fit_nr_models (NIQE pristine model)
and tools/train_brisque_svr.py. Run once; the outputs are committed.
"""

import argparse
from pathlib import Path

import numpy as np
import skimage.data as data
from PIL import Image

NAMES = [
    "astronaut", "camera", "chelsea", "coffee", "brick", "grass", "gravel",
    "moon", "rocket", "coins", "page", "text",
]


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="data/corpus", type=Path)
    args = parser.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)

    images = {name: getattr(data, name)() for name in NAMES}
    stereo = data.stereo_motorcycle()
    images["motorcycle_left"] = stereo[0]
    images["motorcycle_right"] = stereo[1]

    for name, img in images.items():
        if img.ndim == 2:
            img = np.stack([img] * 3, axis=-1)
        if img.dtype != np.uint8:
            img = (np.clip(img, 0, 1) * 255).astype(np.uint8)
        path = args.out / f"{name}.png"
        Image.fromarray(img).save(path, optimize=True)
        print(f"{path}  {img.shape[1]}x{img.shape[0]}")


if __name__ == "__main__":
    main()
