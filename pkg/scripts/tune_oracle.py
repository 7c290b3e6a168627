#!/usr/bin/env python3
"""Brute-force the synthetic MOS oracle over all 144 cells.

Re-derives every cell from the raw source table with plain loops (nothing is
imported from the package), prints the span for candidate weight sets, and
writes the fixture that ``tests/test_synth.py`` checks ``true_mos`` against.

    python scripts/tune_oracle.py                       # print spans
    python scripts/tune_oracle.py --write-fixture       # refresh the fixture
"""

import argparse
import json
import math
from pathlib import Path

# resolution -> (pixels, [(class, overall kbps, audio kbps), ...])
SOURCES = {
    "HD1080": (1920 * 1080, [("HQ", 13100, 128), ("MQ", 7457, 128), ("LQ", 2871, 128)]),
    "HD720": (1280 * 720, [("HQ", 8040, 128), ("MQ", 3461, 128), ("LQ", 1389, 128)]),
}
FPS = 25.0
BPP_SCALE = 0.25
PLR = [0.0, 0.1, 0.5]
JITTER = [0, 10, 50, 100]

DEFAULT = {"plr": 1.4, "jitter": 0.0036, "bw": 0.13, "codec": 0.45}
CANDIDATES = [
    DEFAULT,
    {"plr": 1.0, "jitter": 0.003, "bw": 0.10, "codec": 0.40},
    {"plr": 2.0, "jitter": 0.006, "bw": 0.22, "codec": 0.56},
]

FIXTURE = Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "oracle_matrix.json"


def cells(w):
    for res, (pixels, rates) in SOURCES.items():
        for cls, overall, audio in rates:
            bpp = (overall - audio) * 1000.0 / (pixels * FPS)
            q_codec = math.exp(-w["codec"] * math.exp(-bpp / BPP_SCALE))
            for bw in ("High", "Low"):
                q_bw = 1.0 if bw == "High" else math.exp(-w["bw"])
                for plr in PLR:
                    for jit in JITTER:
                        q = q_codec * q_bw * math.exp(-w["plr"] * plr) * math.exp(-w["jitter"] * jit)
                        cid = f"{res}_{cls}_{bw}_p{plr:g}_j{jit}"
                        yield cid, 1.0 + 4.0 * q


def summarize(w):
    values = dict(cells(w))
    lo = min(values, key=values.get)
    hi = max(values, key=values.get)
    return {
        "weights": w,
        "n": len(values),
        "mean": sum(values.values()) / len(values),
        "min": values[lo],
        "argmin": lo,
        "max": values[hi],
        "argmax": hi,
        "values": values,
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--write-fixture", action="store_true")
    args = ap.parse_args()
    for w in CANDIDATES:
        s = summarize(w)
        print(f"{w}: mean {s['mean']:.4f}  min {s['min']:.4f} ({s['argmin']})  "
              f"max {s['max']:.4f} ({s['argmax']})")
    if args.write_fixture:
        FIXTURE.parent.mkdir(parents=True, exist_ok=True)
        FIXTURE.write_text(json.dumps(summarize(DEFAULT), indent=1) + "\n")
        print(f"wrote {FIXTURE}")


if __name__ == "__main__":
    main()
