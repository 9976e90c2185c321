#!/usr/bin/env python3
"""Convert the published BRISQUE LIVE model (libsvm format) into the archive.

The original release ships `allmodel` (an epsilon-SVR in libsvm text format)
and `allrange` (svm-scale ranges). This produces a drop-in replacement for
the surrogate model under data/brisque:

    python3 tools/import_brisque_live.py --model allmodel --range allrange --out data/brisque

libsvm predicts sum(coef_i * K(x, sv_i)) - rho, so rho is stored negated as
the intercept.
"""

import argparse
import json
import zlib
from pathlib import Path

import numpy as np


def write_archive(out_dir: Path, tensors, meta) -> None:
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


def parse_libsvm_model(path: Path, dim: int):
    lines = path.read_text().splitlines()
    header = {}
    sv_start = 0
    for i, line in enumerate(lines):
        if line.strip() == "SV":
            sv_start = i + 1
            break
        parts = line.split()
        if parts:
            header[parts[0]] = parts[1:]
    if header.get("svm_type", [""])[0] != "epsilon_svr":
        raise SystemExit(f"expected epsilon_svr, got {header.get('svm_type')}")
    if header.get("kernel_type", [""])[0] != "rbf":
        raise SystemExit(f"expected rbf kernel, got {header.get('kernel_type')}")
    gamma = float(header["gamma"][0])
    rho = float(header["rho"][0])

    coefs, vectors = [], []
    for line in lines[sv_start:]:
        parts = line.split()
        if not parts:
            continue
        coefs.append(float(parts[0]))
        vec = np.zeros(dim)
        for tok in parts[1:]:
            idx, val = tok.split(":")
            vec[int(idx) - 1] = float(val)
        vectors.append(vec)
    return gamma, rho, np.array(coefs), np.array(vectors)


def parse_range(path: Path, dim: int):
    fmin = np.zeros(dim)
    fmax = np.ones(dim)
    lower, upper = -1.0, 1.0
    for line in path.read_text().splitlines():
        parts = line.split()
        if not parts or parts[0] == "x":
            continue
        if len(parts) == 2:
            lower, upper = float(parts[0]), float(parts[1])
            continue
        idx = int(parts[0]) - 1
        fmin[idx], fmax[idx] = float(parts[1]), float(parts[2])
    if (lower, upper) != (-1.0, 1.0):
        raise SystemExit(f"expected scaling to [-1,1], range file says [{lower},{upper}]")
    return fmin, fmax


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--model", required=True, type=Path)
    parser.add_argument("--range", dest="range_file", required=True, type=Path)
    parser.add_argument("--out", default=Path("data/brisque"), type=Path)
    args = parser.parse_args()

    gamma, rho, coefs, vectors = parse_libsvm_model(args.model, 36)
    fmin, fmax = parse_range(args.range_file, 36)
    print(f"SVs: {len(coefs)}, gamma: {gamma}, rho: {rho}")

    meta = {
        "kind": "brisque_model",
        "gamma": gamma,
        "intercept": -rho,
        "provenance": f"published LIVE model converted from {args.model.name}/{args.range_file.name}",
    }
    write_archive(
        args.out,
        [
            ("support_vectors", vectors),
            ("coefficients", coefs),
            ("feature_min", fmin),
            ("feature_max", fmax),
        ],
        meta,
    )
    print(f"model -> {args.out}")


if __name__ == "__main__":
    main()
