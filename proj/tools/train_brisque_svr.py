#!/usr/bin/env python3
"""Train the shipped BRISQUE RBF-SVR from labeled distortion features.

Input: the CSV written by `fit_nr_models brisque-features`. Output: the model
archive under data/brisque plus golden predictions used by the tests. Run
once; the outputs are committed. See tools/import_brisque_live.py for
converting the original published model instead.
"""

import argparse
import json
import struct
import zlib
from pathlib import Path

import numpy as np
from sklearn.svm import SVR


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
    parser.add_argument("--features", required=True, type=Path)
    parser.add_argument("--out", default=Path("data/brisque"), type=Path)
    parser.add_argument("--c", dest="c_param", default=128.0, type=float)
    parser.add_argument("--gamma", default=0.08, type=float)
    parser.add_argument("--epsilon", default=2.0, type=float)
    args = parser.parse_args()

    rows = np.loadtxt(args.features, delimiter=",", skiprows=1)
    labels, feats = rows[:, 0], rows[:, 1:]
    assert feats.shape[1] == 36, feats.shape

    # A horizontal flip swaps the two diagonal pairwise-product groups
    # (features 10-13 <-> 14-17 and 28-31 <-> 32-35); augmenting with the
    # swapped rows and exporting a swap-symmetrized SV set makes the score
    # exactly flip-invariant.
    def swap_diag(x: np.ndarray) -> np.ndarray:
        y = x.copy()
        y[..., 10:14], y[..., 14:18] = x[..., 14:18], x[..., 10:14]
        y[..., 28:32], y[..., 32:36] = x[..., 32:36], x[..., 28:32]
        return y

    feats = np.concatenate([feats, swap_diag(feats)])
    labels = np.concatenate([labels, labels])

    fmin = feats.min(axis=0)
    fmax = feats.max(axis=0)
    span = np.where(fmax > fmin, fmax - fmin, 1.0)
    scaled = -1.0 + 2.0 * (feats - fmin) / span

    svr = SVR(kernel="rbf", C=args.c_param, gamma=args.gamma, epsilon=args.epsilon)
    svr.fit(scaled, labels)
    pred = svr.predict(scaled)
    err = np.abs(pred - labels)
    print(f"train rows: {len(labels)}, SVs: {len(svr.support_)}, "
          f"mae: {err.mean():.2f}, max: {err.max():.2f}")

    # symmetrized export: g(x) = (f(x) + f(swap x)) / 2
    sv = np.concatenate([svr.support_vectors_, swap_diag(svr.support_vectors_)])
    coef = np.concatenate([svr.dual_coef_[0] / 2.0, svr.dual_coef_[0] / 2.0])

    meta = {
        "kind": "brisque_model",
        "gamma": float(svr.gamma if isinstance(svr.gamma, float) else svr._gamma),
        "intercept": float(svr.intercept_[0]),
        "provenance": (
            "epsilon-SVR trained on synthetic noise/blur/low-light distortions of the "
            "data/corpus images; labels are severity pseudo-scores on a 0-100 scale"
        ),
        "training": {"C": args.c_param, "gamma": args.gamma, "epsilon": args.epsilon},
    }
    write_archive(
        args.out,
        [
            ("support_vectors", sv),
            ("coefficients", coef),
            ("feature_min", fmin),
            ("feature_max", fmax),
        ],
        meta,
    )

    # golden raw-feature -> score pairs for the C++ evaluator test, computed
    # with the exported (symmetrized, float32) model
    def predict_exported(x36: np.ndarray) -> float:
        xs = -1.0 + 2.0 * (x36 - fmin) / span
        sv32 = sv.astype(np.float32).astype(np.float64)
        d2 = ((xs - sv32) ** 2).sum(axis=1)
        gamma = float(svr.gamma if np.isscalar(svr.gamma) else svr._gamma)
        return float((coef.astype(np.float32).astype(np.float64) * np.exp(-gamma * d2)).sum()
                     + svr.intercept_[0])

    # the exported model must equal the symmetrized regressor
    for i in range(0, len(feats), 37):
        want = 0.5 * (svr.predict(scaled[i : i + 1])[0] +
                      svr.predict(-1.0 + 2.0 * (swap_diag(feats[i : i + 1]) - fmin) / span)[0])
        got = predict_exported(feats[i])
        assert abs(want - got) < 1e-3, (i, want, got)

    golden_idx = [0, len(labels) // 3, len(labels) // 2, 2 * len(labels) // 3, len(labels) - 1]
    golden = {
        "features": [feats[i].tolist() for i in golden_idx],
        "scores": [predict_exported(feats[i]) for i in golden_idx],
    }
    (args.out / "golden.json").write_text(json.dumps(golden, indent=2) + "\n")
    print(f"model -> {args.out}")


if __name__ == "__main__":
    main()
