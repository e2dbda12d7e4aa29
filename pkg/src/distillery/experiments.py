"""Experiment harness: three-arm runs, grids, and machine-readable reports.

Every run evaluates up to three arms per repetition: the teacher on the
privileged view (arm "privileged"), a plain student on the regular view
(arm "regular"), and distilled students per (temperature, imitation)
grid cell (arm "distilled", plus "distilled-labeled" for the
labeled-only variant of the semi-supervised run).

Randomness is a tree of forked streams keyed by purpose ("rep", r,
"teacher", ...).  Grid cells reuse one per-repetition student stream, so
an imitation = 0 cell reproduces the regular baseline bit for bit, and a
cell run alone equals its value inside a full-grid run.  Arms within a
repetition train on identical data draws, isolating the effect of the
soft labels.

Reports serialize to JSON (full nested structure, lossless round-trip)
and CSV (one aggregate row per experiment/arm/T/lambda).
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .core import RngStream, one_hot
from .datasets import downscale, load_cifar, load_idx, load_multitask_csv, pollute
from .distill import (
    Dataset,
    DatasetHeader,
    DistillConfig,
    Triplet,
    distill_student,
    multitask_views,
    soft_labels,
    train_teacher,
)
from .models import Arch, TrainConfig, TrainingDivergence, forward
from .synthetic import SyntheticSpec, draw_hyperplane, generate

__all__ = [
    "ArmResult",
    "ExperimentReport",
    "run_synthetic",
    "run_mnist",
    "run_cifar_semisup",
    "run_multitask",
    "run_from_config",
    "emit_report",
    "load_report_json",
    "load_report_csv",
    "DEFAULT_T_GRID",
    "DEFAULT_LAMBDA_GRID",
    "data_dir_from_env",
]

DEFAULT_T_GRID = (1.0, 2.0, 5.0, 10.0, 20.0, 50.0)
DEFAULT_LAMBDA_GRID = (0.0, 0.25, 0.5, 0.75, 1.0)

# Synthetic runs: the teacher trains at the base setting; students get a
# larger budget because the distilled fit (regression toward soft
# targets) converges more slowly than the accuracy of the plain
# baseline, which is flat in the extra epochs.
SYNTH_TEACHER_TRAIN = TrainConfig(learning_rate=0.1, epochs=200, batch_size=32, l2=1e-4)
SYNTH_STUDENT_TRAIN = TrainConfig(learning_rate=0.2, epochs=800, batch_size=32, l2=1e-4)
# Image and multitask runs share one MLP setting.
MLP_TRAIN = TrainConfig(learning_rate=0.01, epochs=100, batch_size=32, l2=1e-4)
MLP_ARCH = Arch.mlp(20, 20)

CSV_HEADER = ["experiment", "arm", "T", "lambda", "mean", "std", "reps", "status"]


@dataclass
class ArmResult:
    """Aggregate for one arm (or one grid cell of the distilled arm)."""

    arm: str
    metric: str  # "accuracy" | "mse"
    mean: float
    std: float
    reps: int
    temperature: float | None = None
    imitation: float | None = None
    values: list[float] = field(default_factory=list)
    status: str = "complete"


@dataclass
class ExperimentReport:
    experiment_id: str
    master_seed: int
    artifact_version: str
    config: dict
    results: list[ArmResult]
    errors: list[str] = field(default_factory=list)

    @property
    def status(self) -> str:
        ok = not self.errors and all(r.status == "complete" for r in self.results)
        return "complete" if ok else "incomplete"

    def arm(self, name: str, temperature=None, imitation=None) -> ArmResult:
        for r in self.results:
            if r.arm == name and r.temperature == temperature and r.imitation == imitation:
                return r
        raise KeyError(f"no result for arm={name!r} T={temperature} lambda={imitation}")

    def cells(self, arm: str = "distilled") -> list[ArmResult]:
        return [r for r in self.results if r.arm == arm and r.temperature is not None]

    def best_cell(self, arm: str = "distilled") -> ArmResult:
        cells = self.cells(arm)
        if not cells:
            raise KeyError(f"no grid cells for arm {arm!r}")
        lower_is_better = cells[0].metric == "mse"
        key = (lambda r: r.mean) if lower_is_better else (lambda r: -r.mean)
        return min(cells, key=key)


def _aggregate(arm, metric, values, expected_reps, T=None, lam=None) -> ArmResult:
    values = [float(v) for v in values]
    status = "complete" if len(values) == expected_reps else "incomplete"
    if values:
        mean = float(np.mean(values))
        std = float(np.std(values, ddof=1)) if len(values) > 1 else 0.0
    else:
        mean = std = float("nan")
    return ArmResult(arm, metric, mean, std, len(values), T, lam, values, status)


def _train_config_dict(cfg: TrainConfig) -> dict:
    return {
        "learning_rate": cfg.learning_rate,
        "epochs": cfg.epochs,
        "batch_size": cfg.batch_size,
        "l2": cfg.l2,
        "init_scale": cfg.init_scale,
    }


def _train_config_from_dict(d: dict) -> TrainConfig:
    return TrainConfig(
        learning_rate=d["learning_rate"],
        epochs=d["epochs"],
        batch_size=d["batch_size"],
        l2=d["l2"],
        init_scale=d.get("init_scale", "fan_in_normal"),
    )


def _arch_name(arch: Arch) -> str:
    if arch.kind == "linear":
        return "linear"
    return "mlp:" + ",".join(str(h) for h in arch.hidden)


def _arch_from_name(name: str) -> Arch:
    if name == "linear":
        return Arch("linear")
    if name.startswith("mlp:"):
        return Arch.mlp(*(int(h) for h in name[4:].split(",")))
    raise ValueError(f"unknown architecture name {name!r}")


def _features(ds: Dataset, view: str) -> np.ndarray:
    return np.asarray([getattr(t, view) for t in ds.examples])


def _class_labels(ds: Dataset) -> np.ndarray:
    return np.asarray([int(np.argmax(t.y)) for t in ds.examples])


def accuracy(model, ds: Dataset, view: str) -> float:
    """Fraction of examples whose argmax prediction matches the label."""
    out = forward(model, _features(ds, view))
    return float(np.mean(np.argmax(out, axis=1) == _class_labels(ds)))


def mse(model, ds: Dataset, view: str) -> float:
    """Mean squared error over examples and output components."""
    out = forward(model, _features(ds, view))
    target = np.asarray([t.y for t in ds.examples])
    return float(np.mean((out - target) ** 2))


# --- synthetic experiments ---------------------------------------------------


def run_synthetic(
    experiment: int,
    reps: int = 100,
    spec: SyntheticSpec | None = None,
    temperature: float = 1.0,
    imitation: float = 1.0,
    seed: int = 0,
    teacher_train: TrainConfig = SYNTH_TEACHER_TRAIN,
    student_train: TrainConfig = SYNTH_STUDENT_TRAIN,
) -> ExperimentReport:
    """Three-arm run of one synthetic setup over fresh repetitions.

    Each repetition draws a fresh problem instance (hyperplane), a fresh
    train set and a fresh test set; all three arms share them.
    """
    if spec is None:
        spec = SyntheticSpec(experiment)
    master = RngStream(seed)
    arms = {"privileged": [], "regular": [], "distilled": []}
    errors = []
    for r in range(reps):
        rep = master.fork("rep", r)
        hp = draw_hyperplane(spec, rep.fork("problem"))
        train_ds = generate(spec, hp, n=spec.n_train, rng=rep.fork("train"))
        test_ds = generate(spec, hp, n=spec.n_test, rng=rep.fork("test"))
        cfg = DistillConfig(
            temperature=temperature,
            imitation=imitation,
            teacher_train=replace(teacher_train, rng=rep.fork("teacher")),
            student_train=replace(student_train, rng=rep.fork("student")),
        )
        try:
            teacher = train_teacher(train_ds, cfg)
            regular = distill_student(train_ds, [], replace(cfg, imitation=0.0))
            soft = soft_labels(teacher, train_ds, cfg.temperature)
            distilled = distill_student(train_ds, soft, cfg)
        except TrainingDivergence as e:
            errors.append(f"rep {r}: {e}")
            continue
        arms["privileged"].append(accuracy(teacher, test_ds, "x_star"))
        arms["regular"].append(accuracy(regular, test_ds, "x"))
        arms["distilled"].append(accuracy(distilled, test_ds, "x"))
    config = {
        "kind": "synthetic",
        "experiment": experiment,
        "seed": seed,
        "reps": reps,
        "temperature": temperature,
        "imitation": imitation,
        "spec": {
            "d": spec.d,
            "n_train": spec.n_train,
            "n_test": spec.n_test,
            "relevant_size": spec.relevant_size,
        },
        "teacher_arch": "linear",
        "student_arch": "linear",
        "teacher_train": _train_config_dict(teacher_train),
        "student_train": _train_config_dict(student_train),
        "alpha_policy": "fresh hyperplane per repetition",
        "version": __version__,
    }
    results = [
        _aggregate("privileged", "accuracy", arms["privileged"], reps),
        _aggregate("regular", "accuracy", arms["regular"], reps),
        _aggregate("distilled", "accuracy", arms["distilled"], reps, temperature, imitation),
    ]
    return ExperimentReport(f"synthetic-{experiment}", seed, __version__, config, results, errors)


# --- image experiments -------------------------------------------------------


def data_dir_from_env(data_dir=None) -> Path:
    """Resolve the dataset root: explicit argument or DISTILLERY_DATA_DIR."""
    if data_dir is None:
        data_dir = os.environ.get("DISTILLERY_DATA_DIR")
    if data_dir is None:
        raise FileNotFoundError(
            "no data directory: pass data_dir or set DISTILLERY_DATA_DIR"
        )
    return Path(data_dir)


def _locate(root: Path, names, subdir: str) -> list[Path]:
    """Find the named files in root or root/subdir; all must exist."""
    for base in (root, root / subdir):
        paths = [base / n for n in names]
        if all(p.exists() for p in paths):
            return paths
    missing = [str(root / n) for n in names]
    raise FileNotFoundError(f"dataset files not found: looked for {missing} (and under {subdir}/)")


MNIST_FILES = (
    "train-images-idx3-ubyte",
    "train-labels-idx1-ubyte",
    "t10k-images-idx3-ubyte",
    "t10k-labels-idx1-ubyte",
)


def _one_hot_rows(labels: np.ndarray, c: int) -> list[np.ndarray]:
    eye = np.eye(c)
    return [eye[k] for k in labels]


def run_mnist(
    n_train: int = 300,
    T_grid=DEFAULT_T_GRID,
    lambda_grid=DEFAULT_LAMBDA_GRID,
    data_dir=None,
    reps: int = 5,
    seed: int = 0,
    train_config: TrainConfig = MLP_TRAIN,
    arch: Arch = MLP_ARCH,
) -> ExperimentReport:
    """Full-resolution teacher (28x28) distilled into a 7x7 student.

    Both are MLPs with two hidden ReLU layers; the distilled arm is
    evaluated per (T, lambda) grid cell on the full test set.
    """
    root = data_dir_from_env(data_dir)
    paths = _locate(root, MNIST_FILES, "mnist")
    train_set = load_idx(paths[0], paths[1])
    test_set = load_idx(paths[2], paths[3])

    full_te = test_set.to_features()
    small_te = downscale(test_set.images).reshape(test_set.n, -1)
    ds_te = Dataset.from_arrays(
        DatasetHeader(49, 784, 10),
        x=small_te,
        x_star=full_te,
        y=np.eye(10)[test_set.labels],
    )

    master = RngStream(seed)
    arms = {"privileged": [], "regular": []}
    cells = {(T, lam): [] for T in T_grid for lam in lambda_grid}
    errors = []
    for r in range(reps):
        rep = master.fork("rep", r)
        idx = rep.fork("sample").generator().choice(train_set.n, size=n_train, replace=False)
        picked = train_set.images[idx]
        full_tr = picked.reshape(n_train, -1).astype(np.float64) / 255.0
        small_tr = downscale(picked).reshape(n_train, -1)
        ds_tr = Dataset.from_arrays(
            DatasetHeader(49, 784, 10),
            x=small_tr,
            x_star=full_tr,
            y=np.eye(10)[train_set.labels[idx]],
        )
        base = DistillConfig(
            teacher_arch=arch,
            student_arch=arch,
            teacher_train=replace(train_config, rng=rep.fork("teacher")),
            student_train=replace(train_config, rng=rep.fork("student")),
        )
        try:
            teacher = train_teacher(ds_tr, base)
            regular = distill_student(ds_tr, [], replace(base, imitation=0.0))
        except TrainingDivergence as e:
            errors.append(f"rep {r}: {e}")
            continue
        arms["privileged"].append(accuracy(teacher, ds_te, "x_star"))
        arms["regular"].append(accuracy(regular, ds_te, "x"))
        for T in T_grid:
            soft = soft_labels(teacher, ds_tr, T)
            for lam in lambda_grid:
                cfg = replace(base, temperature=float(T), imitation=float(lam))
                try:
                    student = distill_student(ds_tr, soft, cfg)
                except TrainingDivergence as e:
                    errors.append(f"rep {r} cell T={T} lambda={lam}: {e}")
                    continue
                cells[(T, lam)].append(accuracy(student, ds_te, "x"))
    config = {
        "kind": "mnist",
        "n_train": n_train,
        "seed": seed,
        "reps": reps,
        "T_grid": [float(T) for T in T_grid],
        "lambda_grid": [float(l) for l in lambda_grid],
        "data_dir": str(root),
        "arch": _arch_name(arch),
        "train": _train_config_dict(train_config),
        "teacher_features": "28x28 pixels scaled to [0,1]",
        "student_features": "7x7 block means",
        "version": __version__,
    }
    results = [
        _aggregate("privileged", "accuracy", arms["privileged"], reps),
        _aggregate("regular", "accuracy", arms["regular"], reps),
    ]
    for (T, lam), vals in cells.items():
        results.append(_aggregate("distilled", "accuracy", vals, reps, float(T), float(lam)))
    return ExperimentReport(f"mnist-{n_train}", seed, __version__, config, results, errors)


CIFAR_TRAIN_FILES = tuple(f"data_batch_{i}.bin" for i in range(1, 6))
CIFAR_TEST_FILE = "test_batch.bin"


def run_cifar_semisup(
    n_labeled: int = 300,
    data_dir=None,
    sigma: float = 0.5,
    T_grid=DEFAULT_T_GRID,
    lambda_grid=DEFAULT_LAMBDA_GRID,
    max_unlabeled: int | None = None,
    unlabeled_weight: float = 1.0,
    seed: int = 0,
    reps: int = 1,
    train_config: TrainConfig = MLP_TRAIN,
    arch: Arch = MLP_ARCH,
) -> ExperimentReport:
    """Semi-supervised distillation on noisy images.

    The teacher sees clean pixels for the few labeled images; it then
    soft-labels the whole unlabeled pool (optionally subsampled with
    max_unlabeled for desk-scale runs).  The student trains on noisy
    pixels: hard labels for the labeled images plus soft labels for the
    pool ("distilled" arm), or the labeled images alone
    ("distilled-labeled" arm), against a supervised-only baseline.
    """
    root = data_dir_from_env(data_dir)
    paths = _locate(root, CIFAR_TRAIN_FILES + (CIFAR_TEST_FILE,), "cifar-10-batches-bin")
    train_set = load_cifar(paths[:-1])
    test_set = load_cifar([paths[-1]])

    master = RngStream(seed)
    test_clean = test_set.to_features()
    test_noisy = pollute(test_clean, sigma, master.fork("pollute-test"))
    d = test_clean.shape[1]
    ds_te = Dataset.from_arrays(
        DatasetHeader(d, d, 10), x=test_noisy, x_star=test_clean, y=np.eye(10)[test_set.labels]
    )

    arms = {"privileged": [], "regular": []}
    cells = {(T, lam): [] for T in T_grid for lam in lambda_grid}
    labeled_cells = {(T, lam): [] for T in T_grid for lam in lambda_grid}
    errors = []
    for r in range(reps):
        rep = master.fork("rep", r)
        g = rep.fork("labeled").generator()
        labeled_idx = g.choice(train_set.n, size=n_labeled, replace=False)
        rest = np.setdiff1d(np.arange(train_set.n), labeled_idx)
        if max_unlabeled is not None and len(rest) > max_unlabeled:
            rest = np.sort(rep.fork("pool").generator().choice(rest, size=max_unlabeled, replace=False))
        pool_idx = np.concatenate([labeled_idx, rest])
        clean = train_set.images[pool_idx].reshape(len(pool_idx), -1).astype(np.float64) / 255.0
        noisy = pollute(clean, sigma, rep.fork("pollute-train"))
        labels = train_set.labels[pool_idx]
        examples = [
            Triplet(noisy[i], clean[i], one_hot(int(labels[i]), 10) if i < n_labeled else None)
            for i in range(len(pool_idx))
        ]
        ds_tr = Dataset(DatasetHeader(d, d, 10), examples)
        base = DistillConfig(
            teacher_arch=arch,
            student_arch=arch,
            unlabeled_weight=unlabeled_weight,
            teacher_train=replace(train_config, rng=rep.fork("teacher")),
            student_train=replace(train_config, rng=rep.fork("student")),
        )
        try:
            teacher = train_teacher(ds_tr, base)
            regular = distill_student(ds_tr, [], replace(base, imitation=0.0))
        except TrainingDivergence as e:
            errors.append(f"rep {r}: {e}")
            continue
        arms["privileged"].append(accuracy(teacher, ds_te, "x_star"))
        arms["regular"].append(accuracy(regular, ds_te, "x"))
        for T in T_grid:
            soft = soft_labels(teacher, ds_tr, T)
            soft_labeled_only = [(i, s) for i, s in soft if i < n_labeled]
            for lam in lambda_grid:
                cfg = replace(base, temperature=float(T), imitation=float(lam))
                try:
                    semi = distill_student(ds_tr, soft, cfg)
                    lab = distill_student(ds_tr, soft_labeled_only, cfg)
                except TrainingDivergence as e:
                    errors.append(f"rep {r} cell T={T} lambda={lam}: {e}")
                    continue
                cells[(T, lam)].append(accuracy(semi, ds_te, "x"))
                labeled_cells[(T, lam)].append(accuracy(lab, ds_te, "x"))
    config = {
        "kind": "cifar",
        "n_labeled": n_labeled,
        "sigma": sigma,
        "max_unlabeled": max_unlabeled,
        "unlabeled_weight": unlabeled_weight,
        "seed": seed,
        "reps": reps,
        "T_grid": [float(T) for T in T_grid],
        "lambda_grid": [float(l) for l in lambda_grid],
        "data_dir": str(root),
        "arch": _arch_name(arch),
        "train": _train_config_dict(train_config),
        "noise": "additive N(0, sigma^2) on [0,1] pixels, train and test, no clipping",
        "version": __version__,
    }
    results = [
        _aggregate("privileged", "accuracy", arms["privileged"], reps),
        _aggregate("regular", "accuracy", arms["regular"], reps),
    ]
    for (T, lam), vals in cells.items():
        results.append(_aggregate("distilled", "accuracy", vals, reps, float(T), float(lam)))
    for (T, lam), vals in labeled_cells.items():
        results.append(_aggregate("distilled-labeled", "accuracy", vals, reps, float(T), float(lam)))
    return ExperimentReport("cifar-semisup", seed, __version__, config, results, errors)


# --- multitask regression ----------------------------------------------------


def run_multitask(
    path,
    n_train: int = 300,
    T_grid=(1.0,),
    lambda_grid=DEFAULT_LAMBDA_GRID,
    seed: int = 0,
    test_cap: int = 5000,
    delimiter: str = ",",
    train_config: TrainConfig = MLP_TRAIN,
    arch: Arch = MLP_ARCH,
) -> ExperimentReport:
    """Each task's teacher predicts its output from the other tasks' outputs.

    Inputs and each output are standardized from the training split;
    MSE is reported on the standardized scale, per task and averaged
    across tasks.  Temperature does not act on regression soft targets,
    so the default grid has a single T.
    """
    table = load_multitask_csv(path, delimiter)
    n_tasks = table.n_outputs
    master = RngStream(seed)
    perm = master.fork("split").generator().permutation(table.n)
    if table.n <= n_train:
        raise ValueError(f"table has {table.n} rows; need more than n_train={n_train}")
    train_idx = perm[:n_train]
    test_idx = perm[n_train : n_train + test_cap]

    X, Y = table.inputs, table.outputs
    x_mean, x_std = X[train_idx].mean(axis=0), X[train_idx].std(axis=0)
    y_mean, y_std = Y[train_idx].mean(axis=0), Y[train_idx].std(axis=0)
    x_std = np.where(x_std == 0, 1.0, x_std)
    y_std = np.where(y_std == 0, 1.0, y_std)
    Xs = (X - x_mean) / x_std
    Ys = (Y - y_mean) / y_std

    def base_dataset(rows):
        header = DatasetHeader(table.n_inputs, 0, n_tasks, "regression")
        return Dataset(header, [Triplet(x=Xs[i], y=Ys[i]) for i in rows])

    base_tr = base_dataset(train_idx)
    base_te = base_dataset(test_idx)

    per_task = {"privileged": [], "regular": []}
    cell_tasks = {(T, lam): [] for T in T_grid for lam in lambda_grid}
    errors = []
    for j in range(n_tasks):
        view_tr = multitask_views(base_tr, j)
        view_te = multitask_views(base_te, j)
        rep = master.fork("task", j)
        base = DistillConfig(
            teacher_arch=arch,
            student_arch=arch,
            teacher_train=replace(train_config, rng=rep.fork("teacher")),
            student_train=replace(train_config, rng=rep.fork("student")),
        )
        try:
            teacher = train_teacher(view_tr, base)
            regular = distill_student(view_tr, [], replace(base, imitation=0.0))
        except TrainingDivergence as e:
            errors.append(f"task {j}: {e}")
            continue
        per_task["privileged"].append(mse(teacher, view_te, "x_star"))
        per_task["regular"].append(mse(regular, view_te, "x"))
        for T in T_grid:
            soft = soft_labels(teacher, view_tr, T)
            for lam in lambda_grid:
                cfg = replace(base, temperature=float(T), imitation=float(lam))
                try:
                    student = distill_student(view_tr, soft, cfg)
                except TrainingDivergence as e:
                    errors.append(f"task {j} cell T={T} lambda={lam}: {e}")
                    continue
                cell_tasks[(T, lam)].append(mse(student, view_te, "x"))
    config = {
        "kind": "multitask",
        "path": str(path),
        "n_train": n_train,
        "test_cap": test_cap,
        "seed": seed,
        "delimiter": delimiter,
        "T_grid": [float(T) for T in T_grid],
        "lambda_grid": [float(l) for l in lambda_grid],
        "arch": _arch_name(arch),
        "train": _train_config_dict(train_config),
        "standardization": "inputs and each task output, train-split statistics",
        "temperature_note": "temperature is a no-op for regression soft targets",
        "version": __version__,
    }
    # aggregates are across tasks; per-task rows carry the task id in the arm
    results = []
    for name in ("privileged", "regular"):
        results.append(_aggregate(name, "mse", per_task[name], n_tasks))
        for j, v in enumerate(per_task[name]):
            results.append(_aggregate(f"{name}/task{j}", "mse", [v], 1))
    for (T, lam), vals in cell_tasks.items():
        results.append(_aggregate("distilled", "mse", vals, n_tasks, float(T), float(lam)))
        for j, v in enumerate(vals):
            results.append(_aggregate(f"distilled/task{j}", "mse", [v], 1, float(T), float(lam)))
    return ExperimentReport("multitask", seed, __version__, config, results, errors)


# --- config replay -----------------------------------------------------------


def run_from_config(config: dict) -> ExperimentReport:
    """Re-run an experiment from a report's config snapshot.

    With the same master seed this reproduces every aggregate bit for
    bit (dataset paths must still be present for the real-data runs).
    """
    kind = config["kind"]
    if kind == "synthetic":
        s = config["spec"]
        spec = SyntheticSpec(
            config["experiment"],
            d=s["d"],
            n_train=s["n_train"],
            n_test=s["n_test"],
            relevant_size=s["relevant_size"],
        )
        return run_synthetic(
            config["experiment"],
            reps=config["reps"],
            spec=spec,
            temperature=config["temperature"],
            imitation=config["imitation"],
            seed=config["seed"],
            teacher_train=_train_config_from_dict(config["teacher_train"]),
            student_train=_train_config_from_dict(config["student_train"]),
        )
    if kind == "mnist":
        return run_mnist(
            n_train=config["n_train"],
            T_grid=config["T_grid"],
            lambda_grid=config["lambda_grid"],
            data_dir=config["data_dir"],
            reps=config["reps"],
            seed=config["seed"],
            train_config=_train_config_from_dict(config["train"]),
            arch=_arch_from_name(config["arch"]),
        )
    if kind == "cifar":
        return run_cifar_semisup(
            n_labeled=config["n_labeled"],
            data_dir=config["data_dir"],
            sigma=config["sigma"],
            T_grid=config["T_grid"],
            lambda_grid=config["lambda_grid"],
            max_unlabeled=config["max_unlabeled"],
            unlabeled_weight=config.get("unlabeled_weight", 1.0),
            seed=config["seed"],
            reps=config["reps"],
            train_config=_train_config_from_dict(config["train"]),
            arch=_arch_from_name(config["arch"]),
        )
    if kind == "multitask":
        return run_multitask(
            config["path"],
            n_train=config["n_train"],
            T_grid=config["T_grid"],
            lambda_grid=config["lambda_grid"],
            seed=config["seed"],
            test_cap=config["test_cap"],
            delimiter=config["delimiter"],
            train_config=_train_config_from_dict(config["train"]),
            arch=_arch_from_name(config["arch"]),
        )
    raise ValueError(f"unknown experiment kind {kind!r}")


# --- report serialization ----------------------------------------------------


def _fmt(v) -> str:
    return "" if v is None else repr(float(v))


def emit_report(report: ExperimentReport, format: str, path) -> None:
    """Write the report as CSV (one aggregate row per arm/cell) or JSON.

    JSON carries the full nested report, including the config snapshot,
    and reloads structurally equal via load_report_json.
    """
    if format == "json":
        payload = asdict(report)
        payload["status"] = report.status
        with open(path, "w", encoding="utf-8") as f:
            json.dump(payload, f, indent=2)
            f.write("\n")
    elif format == "csv":
        with open(path, "w", encoding="utf-8", newline="") as f:
            w = csv.writer(f)
            w.writerow(CSV_HEADER)
            for r in report.results:
                w.writerow(
                    [
                        report.experiment_id,
                        r.arm,
                        _fmt(r.temperature),
                        _fmt(r.imitation),
                        repr(r.mean),
                        repr(r.std),
                        r.reps,
                        r.status,
                    ]
                )
    else:
        raise ValueError(f"unknown report format {format!r} (expected csv or json)")


def load_report_json(path) -> ExperimentReport:
    with open(path, "r", encoding="utf-8") as f:
        payload = json.load(f)
    payload.pop("status", None)
    results = [ArmResult(**r) for r in payload.pop("results")]
    return ExperimentReport(results=results, **payload)


def load_report_csv(path) -> list[dict]:
    """Rows of an emitted CSV, with numeric fields parsed back."""
    with open(path, "r", encoding="utf-8", newline="") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames != CSV_HEADER:
            raise ValueError(f"unexpected CSV header {reader.fieldnames}")
        rows = []
        for row in reader:
            rows.append(
                {
                    "experiment": row["experiment"],
                    "arm": row["arm"],
                    "T": float(row["T"]) if row["T"] else None,
                    "lambda": float(row["lambda"]) if row["lambda"] else None,
                    "mean": float(row["mean"]),
                    "std": float(row["std"]),
                    "reps": int(row["reps"]),
                    "status": row["status"],
                }
            )
    return rows
