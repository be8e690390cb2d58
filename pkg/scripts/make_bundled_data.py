"""Regenerate the bundled synthetic class specs in src/cupsense/data.

Beverage classes share one topology, Series(Rs, Parallel(Rct, CPE)). Solution
resistance Rs falls geometrically with a conductivity rank (still water and
iced tea most resistive, juices least); Rct is a fixed multiple of Rs; the
CPE is sized so the Rct||CPE corner sits between roughly 13 and 68 Hz.
Freshness profiles drift Rs down, Rct up and Q down linearly with storage time.

    python3 scripts/make_bundled_data.py [--out-dir src/cupsense/data]
"""
import argparse
import json
import math
from pathlib import Path

NAMES = ["Mineral water", "Cola Zero 1", "Orange Zero", "Cola Light", "Cola Mix",
         "Cola Classic 1", "Cola Zero 2", "Sprite", "7 UP", "Fanta", "Colar classic 2",
         "Cola Zero 3", "Eistee Pfirsch", "Apfel Schorle", "Banana juice", "Pineapple juice",
         "Currants juice", "Orange juice", "Carrots juice", "Mixed vegetable juice"]
# conductivity rank, most resistive first
RANK = [0, 9, 4, 8, 11, 10, 7, 3, 2, 6, 12, 5, 1, 13, 15, 14, 16, 17, 18, 19]
RS_TOP, STEP = 2400.0, 1.12
ALPHAS = [0.78, 0.82, 0.86, 0.90, 0.94]
RATIOS = [5, 8, 12, 18]
JITTER = {"R0": 0.015, "R1": 0.015, "Q2": 0.015, "alpha2": 0.002}
NOISE = 0.01

# name, Rs, Rct, corner Hz, alpha, drift per hour (R0, R1, Q2)
FRESHNESS = [
    ("Milk 1", 150, 1500, 25, 0.84, (-0.006, 0.006, -0.0075)),
    ("Milk 2", 180, 2000, 20, 0.86, (-0.0045, 0.0075, -0.0075)),
    ("Juice 1", 230, 1900, 35, 0.82, (-0.0075, 0.0075, -0.006)),
    ("Juice 2", 320, 2900, 30, 0.88, (-0.0045, 0.006, -0.009)),
]


def sig(x, n=3):
    return float(f"{x:.{n}g}")


def randles(rs, rct, fc, alpha):
    q = (1 / (2 * math.pi * fc)) ** alpha / rct
    return {"type": "series", "children": [
        {"type": "R", "R": sig(rs)},
        {"type": "parallel", "children": [{"type": "R", "R": sig(rct)},
                                          {"type": "CPE", "Q": sig(q), "alpha": alpha}]}]}


def beverages():
    classes = []
    for i, name in enumerate(NAMES):
        rs = RS_TOP / STEP ** RANK[i]
        rct = rs * RATIOS[(i // 5 + i % 5) % 4]
        fc = 30 * 1.5 ** ((3 * i) % 5 - 2)
        classes.append({"label": str(i), "name": name,
                        "circuit": randles(rs, rct, fc, ALPHAS[i % 5]),
                        "param_jitter": dict(JITTER), "noise_relative": NOISE})
    return {"schema_version": 1, "classes": classes}


def freshness():
    out = []
    for name, rs, rct, fc, alpha, (d0, d1, dq) in FRESHNESS:
        out.append({"name": name, "hours": [0, 24, 48],
                    "rates": {"R0": sig(d0), "R1": sig(d1), "Q2": sig(dq)},
                    "base": {"label": name, "circuit": randles(rs, rct, fc, alpha),
                             "param_jitter": dict(JITTER), "noise_relative": NOISE}})
    return {"schema_version": 1, "profiles": out}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out-dir", default=Path(__file__).resolve().parents[1] / "src/cupsense/data")
    args = ap.parse_args()
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "beverages.json").write_text(json.dumps(beverages(), indent=1))
    (out / "freshness.json").write_text(json.dumps(freshness(), indent=1))


if __name__ == "__main__":
    main()
