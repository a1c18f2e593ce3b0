"""Seeded split shared with the C++ loader (splitmix64 + Fisher-Yates)."""

MASK = (1 << 64) - 1


class SplitMix64:
    def __init__(self, seed):
        self.state = seed & MASK

    def __call__(self):
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
        return z ^ (z >> 31)


def round_half_away(v):
    import math

    return int(math.copysign(math.floor(abs(v) + 0.5), v))


def split_normalize(features, labels, ratio, seed):
    """Returns (train_x, train_y, test_x, test_y) with min/max fitted on train."""
    n = len(features)
    perm = list(range(n))
    rng = SplitMix64(seed)
    for i in range(n - 1, 0, -1):
        j = rng() % (i + 1)
        perm[i], perm[j] = perm[j], perm[i]
    n_train = round_half_away(ratio * n)
    train = perm[:n_train]
    test = perm[n_train:]

    nf = len(features[0])
    lo = [min(features[r][f] for r in train) for f in range(nf)]
    hi = [max(features[r][f] for r in train) for f in range(nf)]

    def norm(r):
        out = []
        for f in range(nf):
            rng_f = hi[f] - lo[f]
            v = (features[r][f] - lo[f]) / rng_f if rng_f > 0 else 0.0
            out.append(min(max(v, 0.0), 1.0))
        return out

    return ([norm(r) for r in train], [labels[r] for r in train],
            [norm(r) for r in test], [labels[r] for r in test])
