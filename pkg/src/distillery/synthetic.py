"""Generative models for the four synthetic privileged-information setups.

All four share the same skeleton: a separating hyperplane alpha drawn
from N(0, I_d) defines the labels, and the privileged view exposes a
cleaner or more compact description of the decision than the regular
features do.

  1. noisy labels    -- x ~ N(0, I_d); x_star = <alpha, x> (the exact
                        margin); y flips near the boundary via unit noise.
  2. noisy features  -- x_star ~ N(0, I_d) clean; x = x_star + noise;
                        y = 1[<alpha, x_star> > 0].
  3. relevant subset -- one index set J (|J| = 3) shared by all samples;
                        x_star = x_J; y depends on the J coordinates only.
  4. per-sample subset -- J_i redrawn for every sample; the privileged
                        view is the three signed contributions
                        alpha_j * x_j for j in J_i, so a linear teacher
                        on it can realize the labels even though the
                        subset varies.

Per-sample draws come from the dataset's RngStream; the hyperplane (and
the shared J of setup 3) belong to the problem instance and are drawn
separately, so train and test sets of one repetition share them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import RngStream
from .distill import Dataset, DatasetHeader
from .models import CLASSIFICATION

__all__ = [
    "SyntheticSpec",
    "Hyperplane",
    "draw_hyperplane",
    "gen_exp1",
    "gen_exp2",
    "gen_exp3",
    "gen_exp4",
    "generate",
    "replay_labels",
    "dump_dataset",
    "load_dataset",
]


@dataclass(frozen=True)
class SyntheticSpec:
    experiment: int
    d: int = 50
    n_train: int = 200
    n_test: int = 10_000
    relevant_size: int = 3
    rng: RngStream = RngStream(0)

    def __post_init__(self):
        if self.experiment not in (1, 2, 3, 4):
            raise ValueError(f"experiment must be 1..4, got {self.experiment}")
        if not 1 <= self.relevant_size <= self.d:
            raise ValueError("need d >= relevant_size >= 1")
        if self.n_train < 1 or self.n_test < 1:
            raise ValueError("n_train and n_test must be >= 1")


@dataclass(frozen=True)
class Hyperplane:
    """Problem instance: the labeling direction, plus the shared relevant
    index set when the experiment uses one (setup 3)."""

    alpha: np.ndarray
    relevant: np.ndarray | None = None


def draw_hyperplane(spec: SyntheticSpec, rng: RngStream) -> Hyperplane:
    """alpha ~ N(0, I_d); setup 3 also draws its shared index set J."""
    g = rng.generator()
    alpha = g.standard_normal(spec.d)
    relevant = None
    if spec.experiment == 3:
        relevant = np.sort(g.choice(spec.d, size=spec.relevant_size, replace=False))
    return Hyperplane(alpha, relevant)


def _labels(signs: np.ndarray) -> np.ndarray:
    # one-hot rows: class 1 where the sign is positive
    n = signs.shape[0]
    y = np.zeros((n, 2))
    y[np.arange(n), signs.astype(int)] = 1.0
    return y


def gen_exp1(spec: SyntheticSpec, hp: Hyperplane, n: int | None = None,
             rng: RngStream | None = None, noiseless: bool = False) -> Dataset:
    """Noisy labels: x_star is the exact margin, y flips near the boundary.

    With noiseless=True the label noise is forced to zero (oracle mode).
    """
    n = spec.n_train if n is None else n
    g = (rng or spec.rng).generator()
    X = g.standard_normal((n, spec.d))
    margin = X @ hp.alpha
    eps = g.standard_normal(n)
    if noiseless:
        eps = np.zeros(n)
    y = _labels(margin + eps > 0)
    meta = {"experiment": 1, "alpha": hp.alpha, "label_noise": eps, "noiseless": noiseless}
    return Dataset.from_arrays(DatasetHeader(spec.d, 1, 2, CLASSIFICATION),
                               x=X, x_star=margin[:, None], y=y, meta=meta)


def gen_exp2(spec: SyntheticSpec, hp: Hyperplane, n: int | None = None,
             rng: RngStream | None = None) -> Dataset:
    """Noisy features: the label comes from the clean view x_star."""
    n = spec.n_train if n is None else n
    g = (rng or spec.rng).generator()
    Xs = g.standard_normal((n, spec.d))
    eps = g.standard_normal((n, spec.d))
    X = Xs + eps
    y = _labels(Xs @ hp.alpha > 0)
    meta = {"experiment": 2, "alpha": hp.alpha}
    return Dataset.from_arrays(DatasetHeader(spec.d, spec.d, 2, CLASSIFICATION),
                               x=X, x_star=Xs, y=y, meta=meta)


def gen_exp3(spec: SyntheticSpec, hp: Hyperplane, n: int | None = None,
             rng: RngStream | None = None) -> Dataset:
    """Shared relevant subset: x_star = x_J for one J common to all samples."""
    if hp.relevant is None:
        raise ValueError("setup 3 needs a hyperplane with a relevant index set")
    J = np.asarray(hp.relevant)
    n = spec.n_train if n is None else n
    g = (rng or spec.rng).generator()
    X = g.standard_normal((n, spec.d))
    Xs = X[:, J]
    y = _labels(Xs @ hp.alpha[J] > 0)
    meta = {"experiment": 3, "alpha": hp.alpha, "relevant": J}
    return Dataset.from_arrays(DatasetHeader(spec.d, len(J), 2, CLASSIFICATION),
                               x=X, x_star=Xs, y=y, meta=meta)


def gen_exp4(spec: SyntheticSpec, hp: Hyperplane, n: int | None = None,
             rng: RngStream | None = None) -> Dataset:
    """Per-sample relevant subset, J_i redrawn for each sample.

    The privileged view reports each relevant variable's signed
    contribution alpha_j * x_j (ascending j).  Because J_i varies per
    sample, the raw values x_{J_i} alone would not determine the label
    (the same three values mean different things under different J_i);
    the contributions are what the teacher's explanation singles out,
    and they make the label linearly realizable from x_star: the label
    is simply the sign of their sum.
    """
    n = spec.n_train if n is None else n
    k = spec.relevant_size
    g = (rng or spec.rng).generator()
    X = g.standard_normal((n, spec.d))
    # uniform k-subsets per row, without replacement
    J = np.argpartition(g.random((n, spec.d)), k - 1, axis=1)[:, :k]
    J.sort(axis=1)
    Xs = np.take_along_axis(X, J, axis=1) * hp.alpha[J]
    y = _labels(np.sum(Xs, axis=1) > 0)
    meta = {"experiment": 4, "alpha": hp.alpha, "relevant_sets": J}
    return Dataset.from_arrays(DatasetHeader(spec.d, k, 2, CLASSIFICATION),
                               x=X, x_star=Xs, y=y, meta=meta)


_GENERATORS = {1: gen_exp1, 2: gen_exp2, 3: gen_exp3, 4: gen_exp4}


def generate(spec: SyntheticSpec, hp: Hyperplane, n: int | None = None,
             rng: RngStream | None = None) -> Dataset:
    """Dispatch to the generator named by spec.experiment."""
    return _GENERATORS[spec.experiment](spec, hp, n=n, rng=rng)


def replay_labels(ds: Dataset) -> np.ndarray:
    """Recompute class indices from stored features and generation meta.

    For setup 1 the stored label noise is replayed, so the result matches
    the stored labels exactly in all four setups.
    """
    meta = ds.meta
    alpha = meta["alpha"]
    exp = meta["experiment"]
    if exp == 1:
        margin = np.array([t.x for t in ds.examples]) @ alpha
        return (margin + meta["label_noise"] > 0).astype(int)
    if exp == 2:
        Xs = np.array([t.x_star for t in ds.examples])
        return (Xs @ alpha > 0).astype(int)
    if exp == 3:
        J = meta["relevant"]
        X = np.array([t.x for t in ds.examples])
        return (X[:, J] @ alpha[J] > 0).astype(int)
    if exp == 4:
        J = meta["relevant_sets"]
        X = np.array([t.x for t in ds.examples])
        contrib = np.take_along_axis(X, J, axis=1) * alpha[J]
        return (np.sum(contrib, axis=1) > 0).astype(int)
    raise ValueError(f"unknown experiment {exp}")


# --- text dump -------------------------------------------------------------
#
# Line 1: d <sep> d_star <sep> c <sep> n.  Then one record per example:
# the x group, the x_star group, the y group, in that order; a present
# group is its values, a missing group is the single token "_".

def dump_dataset(ds: Dataset, path, delimiter: str = ",") -> None:
    h = ds.header
    with open(path, "w", encoding="ascii") as f:
        f.write(delimiter.join(str(v) for v in (h.d, h.d_star, h.c, len(ds))) + "\n")
        for t in ds.examples:
            groups = []
            for v in (t.x, t.x_star, t.y):
                groups.append("_" if v is None else delimiter.join(repr(float(u)) for u in v))
            f.write(delimiter.join(groups) + "\n")


def load_dataset(path, delimiter: str = ",", task: str = CLASSIFICATION) -> Dataset:
    from .distill import Triplet

    with open(path, "r", encoding="ascii") as f:
        d, d_star, c, n = (int(v) for v in f.readline().strip().split(delimiter))
        header = DatasetHeader(d, d_star, c, task)
        examples = []
        for line_no in range(n):
            tokens = f.readline().strip().split(delimiter)
            pos = 0
            groups = []
            for size in (d, d_star, c):
                if pos < len(tokens) and tokens[pos] == "_":
                    groups.append(None)
                    pos += 1
                else:
                    groups.append(np.array([float(v) for v in tokens[pos : pos + size]]))
                    pos += size
            if pos != len(tokens):
                raise ValueError(f"record {line_no + 1}: expected {pos} tokens, got {len(tokens)}")
            examples.append(Triplet(*groups))
    return Dataset(header, examples)
