"""Feature-importance weight schemes learned from fault / no-fault samples.

Three schemes are produced:

* ``gini``    mean impurity decrease of a random forest's splits,
* ``oob``     out-of-bag error increase when a feature column is scrambled,
* ``entropy`` the entropy weight method on the raw feature matrix.

The forest is a plain CART ensemble (bootstrap samples, Gini criterion,
``floor(sqrt(m))`` candidate features per split) written with numpy so that
node impurities, sample counts and out-of-bag sets are all inspectable.
"""

import csv
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .feature_engine import DEFAULT_RANGES, FEATURES, normalize_matrix

log = logging.getLogger(__name__)


class SingleClassDataset(ValueError):
    pass


class EmptyOutOfBag(ValueError):
    pass


class AllColumnsConstant(ValueError):
    pass


@dataclass
class Dataset:
    X: np.ndarray
    y: np.ndarray
    provenance: str = "file"
    features: tuple = FEATURES

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        self.y = np.asarray(self.y, dtype=int)
        if self.X.ndim != 2 or len(self.X) != len(self.y):
            raise ValueError("X must be (n, m) with one label per row")
        if len(self.y) < 2:
            raise ValueError("dataset needs at least 2 rows")
        if not np.all(np.isfinite(self.X)):
            raise ValueError("dataset has missing or non-finite values")
        if not set(np.unique(self.y)) <= {0, 1}:
            raise ValueError("labels must be 0 (no fault) or 1 (fault)")

    def __len__(self):
        return len(self.y)


def load_dataset(path, delimiter=","):
    """Read a dataset with the seven feature columns and a ``label`` column."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader((ln for ln in fh if ln.strip() and not ln.startswith("#")),
                                   delimiter=delimiter))
    X = [[float(r[f]) for f in FEATURES] for r in rows]
    y = [int(float(r["label"])) for r in rows]
    return Dataset(np.array(X), np.array(y), provenance=f"file:{path}")


def save_dataset(data, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(data.features) + ["label"])
        for x, lab in zip(data.X, data.y):
            w.writerow([f"{v:.6g}" for v in x] + [int(lab)])


# --------------------------------------------------------------------------
# CART

def gini(counts):
    """Gini impurity ``1 - sum p_k^2`` of a class-count vector."""
    counts = np.asarray(counts, dtype=float)
    n = counts.sum()
    if n == 0:
        return 0.0
    p = counts / n
    return float(1.0 - np.sum(p * p))


@dataclass
class Tree:
    feature: np.ndarray    # -1 at leaves
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    counts: np.ndarray     # (nodes, 2) class counts of bootstrap samples
    impurity: np.ndarray
    bootstrap: np.ndarray  # row indices drawn (with repetition)
    oob: np.ndarray        # row indices never drawn

    @property
    def n_samples(self):
        return self.counts.sum(axis=1)

    def apply(self, X):
        node = np.zeros(len(X), dtype=int)
        active = self.feature[node] >= 0
        while np.any(active):
            idx = np.nonzero(active)[0]
            nd = node[idx]
            go_left = X[idx, self.feature[nd]] <= self.threshold[nd]
            node[idx] = np.where(go_left, self.left[nd], self.right[nd])
            active = self.feature[node] >= 0
        return node

    def predict(self, X):
        c = self.counts[self.apply(X)]
        return (c[:, 1] > c[:, 0]).astype(int)

    def structure(self):
        return (self.feature.tobytes(), self.threshold.tobytes(), self.left.tobytes(),
                self.right.tobytes(), self.counts.tobytes(), self.bootstrap.tobytes())


def _best_split(x, y, min_leaf):
    """Best threshold on one feature: (weighted child impurity, threshold) or None."""
    order = np.argsort(x, kind="stable")
    xs, ys = x[order], y[order]
    n = len(xs)
    nl = np.arange(1, n)
    ones_l = np.cumsum(ys)[:-1]
    ones_r = ys.sum() - ones_l
    nr = n - nl
    valid = (xs[:-1] < xs[1:]) & (nl >= min_leaf) & (nr >= min_leaf)
    if not np.any(valid):
        return None
    pl = ones_l / nl
    pr = ones_r / nr
    gl = 2.0 * pl * (1.0 - pl)
    gr = 2.0 * pr * (1.0 - pr)
    score = np.where(valid, (nl * gl + nr * gr) / n, np.inf)
    i = int(np.argmin(score))
    return score[i], 0.5 * (xs[i] + xs[i + 1])


def build_tree(X, y, rng, max_depth=None, min_leaf=1, max_features=None):
    n, m = X.shape
    mtry = max_features or max(1, int(math.sqrt(m)))
    boot = rng.integers(0, n, n)
    mask = np.ones(n, dtype=bool)
    mask[boot] = False
    oob = np.nonzero(mask)[0]
    feature, threshold, left, right, counts, impurity = [], [], [], [], [], []

    def new_node(idx):
        c = np.bincount(y[idx], minlength=2)
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        counts.append(c)
        impurity.append(gini(c))
        return len(feature) - 1

    stack = [(new_node(boot), boot, 0)]
    while stack:
        node, idx, depth = stack.pop()
        if impurity[node] == 0.0 or (max_depth is not None and depth >= max_depth) or len(idx) < 2 * min_leaf:
            continue
        best = None
        order = rng.permutation(m)
        for tried, f in enumerate(order):
            if tried >= mtry and best is not None:
                break
            s = _best_split(X[idx, f], y[idx], min_leaf)
            if s is not None and (best is None or s[0] < best[0]):
                best = (s[0], s[1], f)
        if best is None:
            continue
        _, thr, f = best
        go_left = X[idx, f] <= thr
        li, ri = idx[go_left], idx[~go_left]
        feature[node] = int(f)
        threshold[node] = float(thr)
        ln, rn = new_node(li), new_node(ri)
        left[node], right[node] = ln, rn
        stack.append((rn, ri, depth + 1))
        stack.append((ln, li, depth + 1))

    return Tree(
        feature=np.asarray(feature, dtype=int), threshold=np.asarray(threshold, dtype=float),
        left=np.asarray(left, dtype=int), right=np.asarray(right, dtype=int),
        counts=np.asarray(counts, dtype=int).reshape(-1, 2), impurity=np.asarray(impurity),
        bootstrap=boot, oob=oob,
    )


@dataclass
class Forest:
    trees: list
    n_features: int
    seed: int

    def predict(self, X):
        votes = np.mean([t.predict(X) for t in self.trees], axis=0)
        return (votes > 0.5).astype(int)

    def oob_error(self, X, y):
        """Majority-vote error over rows that are out-of-bag for at least one tree."""
        n = len(y)
        ones = np.zeros(n)
        total = np.zeros(n)
        for t in self.trees:
            if len(t.oob):
                ones[t.oob] += t.predict(X[t.oob])
                total[t.oob] += 1
        seen = total > 0
        pred = (ones[seen] / total[seen] > 0.5).astype(int)
        return float(np.mean(pred != y[seen]))


def train_forest(data, n_trees=100, max_depth=None, min_leaf=1, seed=0, max_features=None):
    if n_trees < 1:
        raise ValueError("n_trees must be >= 1")
    if len(np.unique(data.y)) < 2:
        raise SingleClassDataset("both fault and no-fault labels are required")
    children = np.random.SeedSequence(seed).spawn(n_trees)
    trees = [build_tree(data.X, data.y, np.random.default_rng(s), max_depth, min_leaf, max_features)
             for s in children]
    return Forest(trees=trees, n_features=data.X.shape[1], seed=seed)


# --------------------------------------------------------------------------
# weight schemes

@dataclass(frozen=True)
class WeightScheme:
    name: str
    weights: np.ndarray
    features: tuple = FEATURES

    def as_dict(self):
        return dict(zip(self.features, self.weights.tolist()))


def _normalized(raw, name):
    raw = np.maximum(np.asarray(raw, dtype=float), 0.0)
    total = raw.sum()
    if total <= 0:
        log.warning("%s importances are all zero; falling back to uniform weights", name)
        return np.full(len(raw), 1.0 / len(raw))
    return raw / total


def tree_gini_importance(tree, n_features):
    """Sample-weighted impurity decrease summed per feature for one tree."""
    imp = np.zeros(n_features)
    ns = tree.n_samples.astype(float)
    root = ns[0]
    for node in np.nonzero(tree.feature >= 0)[0]:
        l, r = tree.left[node], tree.right[node]
        dec = (ns[node] * tree.impurity[node] - ns[l] * tree.impurity[l] - ns[r] * tree.impurity[r]) / root
        imp[tree.feature[node]] += dec
    return imp


def gini_importance(forest):
    raw = np.mean([tree_gini_importance(t, forest.n_features) for t in forest.trees], axis=0)
    return WeightScheme("gini", _normalized(raw, "gini"))


def _scramble(mode, scale):
    if mode == "permute":
        return lambda col, rng: rng.permutation(col)
    if mode == "gaussian":
        return lambda col, rng: col + rng.normal(0.0, scale, size=len(col))
    raise ValueError(f"oob mode must be 'permute' or 'gaussian', got {mode!r}")


def oob_importance(forest, data, mode="permute", scramble=None):
    """Mean increase of per-tree OOB error after scrambling each feature.

    ``scramble(column, rng)`` overrides how a column is perturbed; by default
    it is permuted within the tree's out-of-bag rows using a generator seeded
    from (forest seed, tree, feature).
    """
    X, y = data.X, data.y
    m = forest.n_features
    diffs = np.zeros(m)
    for ti, tree in enumerate(forest.trees):
        if len(tree.oob) == 0:
            raise EmptyOutOfBag(f"tree {ti} has no out-of-bag rows")
        Xo, yo = X[tree.oob], y[tree.oob]
        e1 = np.mean(tree.predict(Xo) != yo)
        for j in range(m):
            rng = np.random.default_rng([forest.seed, ti, j])
            fn = scramble or _scramble(mode, X[:, j].std())
            Xp = Xo.copy()
            Xp[:, j] = fn(Xo[:, j], rng)
            diffs[j] += np.mean(tree.predict(Xp) != yo) - e1
    return WeightScheme("oob", _normalized(diffs / len(forest.trees), "oob"))


def entropy_weights(X, ranges=None):
    """Entropy weight method on an (n, m) indicator matrix.

    Columns are min-max normalised over the data (direction-aware when
    ``ranges`` gives feature signs); a constant column carries no
    information and gets weight 0.
    """
    X = np.asarray(X, dtype=float)
    n, m = X.shape
    if n < 2:
        raise ValueError("entropy weights need at least 2 rows")
    positive = np.ones(m, dtype=bool) if ranges is None else ranges.positive
    lo, hi = X.min(axis=0), X.max(axis=0)
    span = hi - lo
    const = span <= 0
    up = (X - lo) / np.where(const, 1.0, span)
    Z = np.where(positive, up, 1.0 - up)
    Z[:, const] = 1.0
    P = Z / Z.sum(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(P > 0, P * np.log(P), 0.0)
    e = np.clip(-terms.sum(axis=0) / math.log(n), 0.0, 1.0)
    e[const] = 1.0
    d = 1.0 - e
    if d.sum() <= 0:
        raise AllColumnsConstant("every indicator column is uninformative")
    return WeightScheme("entropy", d / d.sum())


def all_schemes(data, n_trees=100, max_depth=None, min_leaf=1, seed=0, oob_mode="permute",
                ranges=DEFAULT_RANGES):
    forest = train_forest(data, n_trees, max_depth, min_leaf, seed)
    return [gini_importance(forest), oob_importance(forest, data, oob_mode),
            entropy_weights(data.X, ranges)], forest


# --------------------------------------------------------------------------
# synthetic data

def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def synthesize_dataset(seed, size=640, planted=None, steepness=20.0, ranges=DEFAULT_RANGES):
    """Draw features uniformly over ``ranges`` and labels from a planted logistic model.

    The fault probability is ``sigmoid(steepness * (planted . x_norm) + b)``
    with ``b`` solved so the expected fault share of the draw is 1/2.
    """
    if size < 10:
        raise ValueError("size must be >= 10")
    m = len(FEATURES)
    w = np.full(m, 1.0 / m) if planted is None else np.asarray(planted, dtype=float)
    if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
        raise ValueError("planted weights must be non-negative and sum to 1")
    rng = np.random.default_rng(seed)
    X = rng.uniform(ranges.lo, ranges.hi, size=(size, m))
    z = normalize_matrix(X, ranges) @ w
    b = optimize.brentq(lambda b: np.mean(_sigmoid(steepness * z + b)) - 0.5, -10 * steepness, 10 * steepness)
    y = (rng.random(size) < _sigmoid(steepness * z + b)).astype(int)
    return Dataset(X, y, provenance=f"synthetic({seed})")


def planted_single(feature):
    w = np.zeros(len(FEATURES))
    w[FEATURES.index(feature)] = 1.0
    return w


# --------------------------------------------------------------------------
# (scheme, feature, weight) triples

def save_schemes(schemes, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["scheme", "feature", "weight"])
        for s in schemes:
            for f, v in zip(s.features, s.weights):
                w.writerow([s.name, f, f"{v:.6f}"])


def load_schemes(path):
    """Read (scheme, feature, weight) triples; scheme order follows first appearance."""
    table = {}
    with open(path, newline="") as fh:
        for r in csv.DictReader(ln for ln in fh if ln.strip() and not ln.startswith("#")):
            table.setdefault(r["scheme"].strip(), {})[r["feature"].strip()] = float(r["weight"])
    out = []
    for name, vals in table.items():
        missing = set(FEATURES) - set(vals)
        if missing:
            raise ValueError(f"scheme {name!r} lacks features {sorted(missing)}")
        out.append(WeightScheme(name, np.array([vals[f] for f in FEATURES])))
    return out
