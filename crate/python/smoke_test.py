"""Smoke test for the despeckle_rs extension.

Build first:
    cargo build --release -p despeckle-py
    cp target/release/libdespeckle_rs.so python/despeckle_rs.so
"""

import math
import os
import sys
import tempfile

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import despeckle_rs as ds


def main():
    clean = ds.ImageGrid.phantom("parrots", 64, 7)
    assert (clean.width, clean.height) == (64, 64)

    noisy = ds.apply_speckle(clean, looks=3, seed=42)
    again = ds.apply_speckle(clean, looks=3, seed=42)
    assert noisy.to_list() == again.to_list(), "same seed must reproduce"
    assert abs(noisy.mean() / clean.mean() - 1.0) < 0.05

    params = ds.SolverParams("model1", preset="parrots", looks=3)
    assert params.gamma == 4.0 and params.lambda_ == 0.07
    restored, trace = ds.denoise(noisy, params, reference=clean)
    assert trace["iterations"] >= 1
    assert len(trace["psnr"]) == trace["iterations"]

    before = ds.psnr(clean, noisy.clamped())
    after = ds.psnr(clean, restored)
    print(f"psnr {before:.2f} -> {after:.2f} dB, mssim {ds.mssim(clean, restored):.4f}, "
          f"iterations {trace['iterations']} ({trace['stop_reason']})")
    assert after > before
    assert ds.speckle_index(restored) < ds.speckle_index(noisy)

    custom = ds.SolverParams("tdm", alpha=1.0, k=2.0, gamma=5.0, max_iters=10)
    out, trace = ds.denoise(noisy, custom)
    assert trace["iterations"] <= 10 and "psnr" not in trace

    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "r.pgm")
        ds.save_pgm(restored, path)
        back = ds.load_pgm(path)
        assert max(abs(a - b) for a, b in zip(back.to_list(), restored.to_list())) <= 0.5

    for bad in (lambda: ds.apply_speckle(clean, looks=0),
                lambda: ds.SolverParams("model1", weight_a=1.5),
                lambda: ds.SolverParams("model1", bogus=1)):
        try:
            bad()
        except ValueError:
            pass
        else:
            raise AssertionError("expected ValueError")
    try:
        ds.load_pgm("/nonexistent.pgm")
    except OSError:
        pass
    else:
        raise AssertionError("expected OSError")

    g = ds.ImageGrid.from_rows([[1.0, 2.0, 3.0]] * 3)
    assert g.get(2, 1) == 2.0 and not math.isnan(g.mean())
    print("smoke test ok")


if __name__ == "__main__":
    main()
