"""Independent fixed-point evaluation of the shipped real-valued models.

Re-derives the integer model from the real coefficients (symmetric per-sum
scaling, round half away from zero, ReLU then shift then saturate) and
scores it on the seeded split. Used once to record reference accuracies in
fixtures/manifest.json.
"""

import argparse
import json
import math
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))
from splitmix import round_half_away, split_normalize  # noqa: E402


def load_csv(path, delimiter, label_column, label_offset):
    with open(path) as fh:
        rows = [line.strip() for line in fh if line.strip()]
    header = [t.strip().strip('"') for t in rows[0].split(delimiter)]
    li = header.index(label_column)
    feats, labels = [], []
    for line in rows[1:]:
        toks = [float(t) for t in line.split(delimiter)]
        labels.append(toks[li] - label_offset)
        feats.append([v for k, v in enumerate(toks) if k != li])
    return feats, labels


def sym_scale(ws, c):
    m = max(abs(w) for w in ws)
    return 1.0 if m == 0.0 else float((1 << (c - 1)) - 1) / m


def qweights(ws, s, c):
    lo, hi = -(1 << (c - 1)), (1 << (c - 1)) - 1
    return [min(max(round_half_away(w * s), lo), hi) for w in ws]


def quantize(model, u, c, h):
    top = float((1 << u) - 1)
    kind = model["kind"]
    if kind.startswith("svm"):
        sums = []
        for cl in model["classifiers"]:
            s = sym_scale(cl["weights"], c)
            sums.append((qweights(cl["weights"], s, c), round_half_away(cl["intercept"] * s * top), cl.get("classes"), s))
        return {"kind": kind, "layers": [sums], "shift": 0, "out_scale": sums[0][3] * top, "h": h}

    hid, out = model["layers"]
    hsums, reach_max = [], 0
    for ws, b in zip(hid["weights"], hid["intercepts"]):
        s = sym_scale(ws, c)
        q = qweights(ws, s, c)
        ib = round_half_away(b * s * top)
        reach = max(ib, 0) + sum(max(w, 0) * int(top) for w in q)
        reach_max = max(reach_max, reach)
        hsums.append((q, ib, None, s))
    shift = 0
    while (reach_max >> shift) > (1 << h) - 1:
        shift += 1
    folded = []
    for ws in out["weights"]:
        folded.append([w * (math.ldexp(1.0, shift) / (hsums[j][3] * top)) for j, w in enumerate(ws)])
    s2 = sym_scale([w for row in folded for w in row], c)
    osums = [(qweights(row, s2, c), round_half_away(b * s2), None, s2) for row, b in zip(folded, out["intercepts"])]
    return {"kind": kind, "layers": [hsums, osums], "shift": shift, "out_scale": s2, "h": h}


def infer(q, x):
    vals = list(x)
    for li, layer in enumerate(q["layers"]):
        nxt = []
        for ws, b, _, _ in layer:
            acc = b + sum(a * w for a, w in zip(vals, ws))
            if len(q["layers"]) == 2 and li == 0:
                acc = min(max(acc, 0) >> q["shift"], (1 << q["h"]) - 1)
            nxt.append(acc)
        vals = nxt
    kind = q["kind"]
    if kind == "mlp_c":
        return vals.index(max(vals))
    if kind == "svm_c":
        k = max(max(cl[2]) for cl in q["layers"][0]) + 1
        votes = [0] * k
        for acc, (_, _, pair, _) in zip(vals, q["layers"][0]):
            votes[pair[0] if acc >= 0 else pair[1]] += 1
        return votes.index(max(votes))
    return round_half_away(vals[0] / q["out_scale"])


def score(q, xs, ys, u):
    top = (1 << u) - 1
    hits = 0
    for x, y in zip(xs, ys):
        xq = [min(max(round_half_away(v * top), 0), top) for v in x]
        hits += infer(q, xq) == round_half_away(y)
    return hits / len(xs)


def evaluate(config_path):
    base = os.path.dirname(os.path.abspath(config_path))
    with open(config_path) as fh:
        cfg = json.load(fh)
    ds = cfg["dataset"]
    feats, labels = load_csv(os.path.join(base, ds["path"]), ds.get("delimiter", ","), ds["label_column"],
                             ds.get("label_offset", 0.0))
    tx, ty, vx, vy = split_normalize(feats, labels, cfg.get("split_ratio", 0.7), cfg.get("seed", 42))
    with open(os.path.join(base, cfg["model"])) as fh:
        model = json.load(fh)
    spec = cfg.get("spec", {})
    u, c, h = spec.get("input_bits", 4), spec.get("coeff_bits", 8), spec.get("hidden_bits", 8)
    q = quantize(model, u, c, h)
    return {"train_accuracy": score(q, tx, ty, u), "test_accuracy": score(q, vx, vy, u),
            "train_size": len(tx), "test_size": len(vx)}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("configs", nargs="+")
    args = ap.parse_args()
    print(json.dumps({os.path.basename(p): evaluate(p) for p in args.configs}, indent=2))


if __name__ == "__main__":
    main()
