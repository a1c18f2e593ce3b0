"""Regenerates the fixture pack: a wine-quality-like dataset, four trained
models (one per family), run configs, and the reference-accuracy manifest.

The dataset is synthetic but mirrors the UCI red wine file: 1599 rows, the
same eleven physicochemical columns and value ranges, ';' separated, and
quality grades 3..8 with the original class counts.
"""

import json
import os
import sys

import numpy as np
from sklearn.neural_network import MLPClassifier, MLPRegressor
from sklearn.svm import LinearSVC, LinearSVR

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))
import reference_eval  # noqa: E402
from splitmix import split_normalize  # noqa: E402

ROOT = os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "fixtures")

# name, mean, std, min, max, decimals, loading on quality
COLUMNS = [
    ("fixed acidity", 8.32, 1.74, 4.6, 15.9, 1, 0.12),
    ("volatile acidity", 0.53, 0.18, 0.12, 1.58, 3, -0.39),
    ("citric acid", 0.27, 0.19, 0.0, 1.0, 2, 0.23),
    ("residual sugar", 2.54, 1.41, 0.9, 15.5, 1, 0.01),
    ("chlorides", 0.087, 0.047, 0.012, 0.611, 3, -0.13),
    ("free sulfur dioxide", 15.9, 10.5, 1.0, 72.0, 0, -0.05),
    ("total sulfur dioxide", 46.5, 32.9, 6.0, 289.0, 0, -0.19),
    ("density", 0.9967, 0.0019, 0.990, 1.004, 5, -0.17),
    ("pH", 3.31, 0.15, 2.74, 4.01, 2, -0.06),
    ("sulphates", 0.66, 0.17, 0.33, 2.0, 2, 0.25),
    ("alcohol", 10.42, 1.07, 8.4, 14.9, 1, 0.48),
]
COUNTS = {3: 10, 4: 53, 5: 681, 6: 638, 7: 199, 8: 18}
SEED = 42


def make_dataset(path):
    rng = np.random.default_rng(SEED)
    quality = np.concatenate([np.full(n, q) for q, n in COUNTS.items()])
    rng.shuffle(quality)
    z = (quality - quality.mean()) / quality.std()
    shared = rng.normal(size=len(quality))
    cols = []
    for _, mean, std, lo, hi, dec, load in COLUMNS:
        a = min(abs(load) * 1.1, 0.9) * np.sign(load)
        noise = 0.3 * shared + np.sqrt(max(1.0 - a * a - 0.09, 0.05)) * rng.normal(size=len(quality))
        v = mean + std * (a * z + noise)
        cols.append(np.round(np.clip(v, lo, hi), dec))
    with open(path, "w") as fh:
        fh.write(";".join(f'"{c[0]}"' for c in COLUMNS) + ';"quality"\n')
        for r in range(len(quality)):
            fields = [f"{cols[k][r]:.{COLUMNS[k][5]}f}" for k in range(len(COLUMNS))]
            fh.write(";".join(fields) + f";{quality[r]}\n")


def load_split():
    feats, labels = reference_eval.load_csv(os.path.join(ROOT, "redwine.csv"), ";", "quality", 3.0)
    tx, ty, _, _ = split_normalize(feats, labels, 0.7, SEED)
    return np.array(tx), np.array(ty)


def mlp_json(kind, n_classes, clf):
    w1, w2 = clf.coefs_
    b1, b2 = clf.intercepts_
    return {
        "format": "bespoke-model", "version": 1, "kind": kind, "n_features": int(w1.shape[0]),
        "n_classes": n_classes,
        "layers": [
            {"weights": w1.T.tolist(), "intercepts": b1.tolist(), "activation": "relu"},
            {"weights": w2.T.tolist(), "intercepts": b2.tolist(), "activation": "none"},
        ],
    }


def train_models(x, y):
    k = int(y.max()) + 1
    assert sorted(set(y.astype(int))) == list(range(k)), "every class must occur in the training split"
    models = {}

    mlp_c = MLPClassifier(hidden_layer_sizes=(2,), activation="relu", max_iter=4000, random_state=0, solver="lbfgs").fit(x, y.astype(int))
    models["mlp_c"] = mlp_json("mlp_c", k, mlp_c)

    mlp_r = MLPRegressor(hidden_layer_sizes=(2,), activation="relu", max_iter=4000, random_state=0, solver="lbfgs").fit(x, y)
    models["mlp_r"] = mlp_json("mlp_r", 1, mlp_r)

    classifiers = []
    for i in range(k):
        for j in range(i + 1, k):
            mask = (y == i) | (y == j)
            t = np.where(y[mask] == i, 1, -1)
            svc = LinearSVC(C=1.0, max_iter=20000, random_state=0).fit(x[mask], t)
            classifiers.append({"weights": svc.coef_[0].tolist(), "intercept": float(svc.intercept_[0]),
                                "classes": [i, j]})
    models["svm_c"] = {"format": "bespoke-model", "version": 1, "kind": "svm_c", "n_features": x.shape[1],
                       "n_classes": k, "classifiers": classifiers}

    svr = LinearSVR(C=1.0, epsilon=0.0, max_iter=20000, random_state=0).fit(x, y)
    models["svm_r"] = {"format": "bespoke-model", "version": 1, "kind": "svm_r", "n_features": x.shape[1],
                       "n_classes": 1,
                       "classifiers": [{"weights": svr.coef_.tolist(), "intercept": float(svr.intercept_[0]),
                                        "classes": None}]}
    return models


def main():
    os.makedirs(os.path.join(ROOT, "models"), exist_ok=True)
    make_dataset(os.path.join(ROOT, "redwine.csv"))
    x, y = load_split()
    models = train_models(x, y)

    manifest = {"dataset": "redwine.csv", "seed": SEED, "split_ratio": 0.7, "models": {}}
    for name, model in models.items():
        with open(os.path.join(ROOT, "models", f"redwine_{name}.json"), "w") as fh:
            json.dump(model, fh, indent=1)
            fh.write("\n")
        config = {
            "dataset": {"path": "redwine.csv", "delimiter": ";", "label_column": "quality", "label_offset": 3},
            "model": f"models/redwine_{name}.json",
            "spec": {"input_bits": 4, "coeff_bits": 8, "hidden_bits": 8},
            "seed": SEED,
            "split_ratio": 0.7,
            "e": 4,
            "output": f"../out/redwine_{name}",
        }
        cfg_path = os.path.join(ROOT, f"redwine_{name}.config.json")
        with open(cfg_path, "w") as fh:
            json.dump(config, fh, indent=2)
            fh.write("\n")
        manifest["models"][name] = {"config": os.path.basename(cfg_path), **reference_eval.evaluate(cfg_path)}

    with open(os.path.join(ROOT, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    print(json.dumps(manifest, indent=2))


if __name__ == "__main__":
    main()
