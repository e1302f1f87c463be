"""Metrics, the multi-run experiment harness, and report aggregation."""

from __future__ import annotations

import dataclasses
import time
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import aggregators
from .graphdata import Graph, SbmSpec, generate_sbm, load_graph, randomize_features, reduce_features

FAMILIES = ("dad", "da", "agnn", "gat_sym", "gat_asym", "rl_sym", "rl_am", "appnp", "poly")

VARIANT_FLAGS = ("linear", "relu1", "general", "w")

# Families whose aggregator depends on neither the features nor a per-run
# seed, so one build serves every run.
_TOPOLOGY_ONLY = ("dad", "da", "appnp", "poly")

SWEEP_AXES = ("k", "beta", "feature_dim", "model_family")


def accuracy(logits: np.ndarray, labels: np.ndarray, mask: np.ndarray) -> float:
    """Fraction of mask rows whose argmax logit matches the label.

    Ties break toward the lowest class index. Raises on an empty mask.
    """
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        raise ValueError("empty mask")
    pred = np.argmax(logits[mask], axis=1)
    return float(np.mean(pred == np.asarray(labels)[mask]))


def micro_f1(probabilities: np.ndarray, labels: np.ndarray, mask: np.ndarray, threshold: float = 0.5) -> float:
    """Micro-averaged F1 = 2TP / (2TP + FP + FN) pooled over (node, class).

    Predictions are probabilities >= threshold. A pool with no positives on
    either side counts as perfect (1.0). Raises on an empty mask.
    """
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        raise ValueError("empty mask")
    pred = probabilities[mask] >= threshold
    true = np.asarray(labels)[mask] > 0
    tp = int(np.sum(pred & true))
    fp = int(np.sum(pred & ~true))
    fn = int(np.sum(~pred & true))
    denom = 2 * tp + fp + fn
    if denom == 0:
        return 1.0
    return 2.0 * tp / denom


@dataclass
class RunReport:
    """Aggregated result of one experiment (possibly many runs).

    mean and std are always recomputable from samples; std is the sample
    standard deviation (n - 1), defined as 0 for a single run. val_metric
    carries the mean validation score of the selected epochs and stays out
    of the CSV schema.
    """

    model: str
    dataset: str
    k: int
    beta: float
    metric: str
    samples: list[float]
    mean: float
    std: float
    epochs: int
    runs: int
    seed_base: int
    seconds_per_run: float
    val_metric: float = float("nan")

    @staticmethod
    def _aggregate(samples: list[float]) -> tuple[float, float]:
        mean = float(np.mean(samples))
        std = float(np.std(samples, ddof=1)) if len(samples) > 1 else 0.0
        return mean, std

    @classmethod
    def from_samples(
        cls,
        model: str,
        dataset: str,
        k: int,
        beta: float,
        metric: str,
        samples: list[float],
        epochs: int,
        runs: int,
        seed_base: int,
        seconds_per_run: float,
        val_metric: float = float("nan"),
    ) -> "RunReport":
        mean, std = cls._aggregate(samples)
        report = cls(
            model=model, dataset=dataset, k=k, beta=beta, metric=metric,
            samples=[float(s) for s in samples], mean=mean, std=std,
            epochs=epochs, runs=runs, seed_base=seed_base,
            seconds_per_run=seconds_per_run, val_metric=val_metric,
        )
        report.validate()
        return report

    def validate(self) -> None:
        if self.runs < 1:
            raise ValueError("runs must be >= 1")
        if len(self.samples) != self.runs:
            raise ValueError(f"{len(self.samples)} samples for {self.runs} runs")
        mean, std = self._aggregate(self.samples)
        if abs(mean - self.mean) > 1e-12 or abs(std - self.std) > 1e-12:
            raise ValueError("stored mean/std disagree with samples")


@dataclass(frozen=True)
class ModelSpec:
    """What to train: aggregator family, head variant, and their knobs.

    k=None sweeps k over {2, 3} per run and keeps the better validation
    score. alpha only applies to appnp, epsilon to agnn, attention_width to
    the gat families. Families appnp, poly, rl_sym and rl_am require
    beta=0: the first two operate on the raw operator and the random
    Laplacians already bake in their identity term.
    """

    family: str
    variant: str = "linear"
    k: int | None = None
    beta: float = 0.0
    alpha: float = 0.1
    epsilon: float = 1.0
    hidden: int = 64
    normalize: bool | None = None
    attention_width: int = 8

    def model_id(self) -> str:
        if self.variant == "linear":
            return self.family
        return f"{self.family}_{self.variant}"

    def validate(self) -> None:
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        if self.variant not in VARIANT_FLAGS:
            raise ValueError(f"unknown variant {self.variant!r}; expected one of {VARIANT_FLAGS}")
        if self.k is not None and self.k < 1:
            raise ValueError("k must be >= 1 (or None to sweep {2, 3})")
        if self.family in ("appnp", "poly") and self.variant != "linear":
            raise ValueError(f"{self.family} defines its own head; use variant linear")
        if self.family == "appnp" and not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must be in (0,1)")
        if self.family in ("appnp", "poly", "rl_sym", "rl_am") and self.beta != 0.0:
            raise ValueError(f"beta must be 0 for family {self.family}")
        if self.hidden < 1:
            raise ValueError("hidden must be >= 1")
        if self.attention_width < 1:
            raise ValueError("attention_width must be >= 1")


@dataclass(frozen=True)
class DataSpec:
    """Where the graph comes from: a directory or an inline block model.

    reduce_dim keeps only the leading feature columns of a loaded graph;
    randomize_dim replaces features with fresh U[0,1) draws per run (seeded
    by the run seed), the random-feature protocol.
    """

    path: str | Path | None = None
    sbm: SbmSpec | None = None
    reduce_dim: int | None = None
    randomize_dim: int | None = None
    name: str | None = None

    def validate(self) -> None:
        if (self.path is None) == (self.sbm is None):
            raise ValueError("exactly one of path or sbm must be set")
        if self.reduce_dim is not None and self.randomize_dim is not None:
            raise ValueError("reduce_dim is pointless when randomize_dim replaces the features")

    def resolve(self) -> Graph:
        self.validate()
        g = load_graph(self.path) if self.path is not None else generate_sbm(self.sbm)
        if self.reduce_dim is not None:
            g = reduce_features(g, self.reduce_dim)
        return g

    def dataset_id(self) -> str:
        if self.name:
            base = self.name
        elif self.path is not None:
            base = Path(self.path).name
        else:
            base = f"sbm{self.sbm.blocks}x{self.sbm.block_size}"
        if self.reduce_dim is not None:
            base += f"_first{self.reduce_dim}"
        if self.randomize_dim is not None:
            base += f"_rand{self.randomize_dim}"
        return base


def build_aggregator(model: ModelSpec, g: Graph, seed: int) -> aggregators.Aggregator:
    """The aggregator a model spec asks for; seed feeds the random families."""
    family = model.family
    if family in ("dad", "appnp", "poly"):
        return aggregators.build_dad(g, shift=model.beta)
    if family == "da":
        return aggregators.build_da(g, shift=model.beta)
    if family == "agnn":
        return aggregators.build_agnn(g, epsilon=model.epsilon, shift=model.beta)
    if family in ("gat_sym", "gat_asym"):
        params = aggregators.AttentionParams.random(g.num_features, model.attention_width, seed=seed)
        return aggregators.build_gat(g, params, symmetric=family == "gat_sym", shift=model.beta)
    if family in ("rl_sym", "rl_am"):
        return aggregators.build_random_laplacian(g, seed=seed, symmetric=family == "rl_sym")
    raise ValueError(f"unknown family {family!r}")


def run_experiment(model: ModelSpec, data: DataSpec, config) -> RunReport:
    """config.runs independent trainings with seeds seed..seed+runs-1.

    The graph is resolved once; random-family aggregators, randomized
    features, and weight initializations are redrawn per run from the run
    seed. When model.k is None each run trains k=2 and k=3 and keeps the
    better validation score; the report's k column then records the most
    frequently chosen depth (ties toward the smaller).
    """
    from . import learn

    model.validate()
    data.validate()
    config.validate()
    base = data.resolve()
    variant_tag = "POLY" if model.family == "poly" else model.variant.upper()
    alpha = model.alpha if model.family == "appnp" else None
    static_agg = None
    samples: list[float] = []
    chosen_ks: list[int] = []
    val_scores: list[float] = []
    metric = ""
    started = time.perf_counter()
    for run in range(config.runs):
        run_seed = config.seed + run
        g_run = base
        if data.randomize_dim is not None:
            g_run = randomize_features(base, data.randomize_dim, run_seed)
        reusable = model.family in _TOPOLOGY_ONLY or (
            model.family == "agnn" and data.randomize_dim is None
        )
        if reusable:
            if static_agg is None:
                static_agg = build_aggregator(model, g_run, run_seed)
            agg = static_agg
        else:
            agg = build_aggregator(model, g_run, run_seed)
        run_config = dataclasses.replace(config, seed=run_seed, runs=1)
        best = None
        best_k = None
        for k in (model.k,) if model.k is not None else (2, 3):
            _, report = learn.train(
                variant_tag, agg, g_run, run_config,
                k=k, hidden=model.hidden, normalize=model.normalize,
                appnp_alpha=alpha, model_id=model.model_id(), dataset_id=data.dataset_id(),
            )
            if best is None or report.val_metric > best.val_metric:
                best, best_k = report, k
        samples.append(best.samples[0])
        chosen_ks.append(best_k)
        val_scores.append(best.val_metric)
        metric = best.metric
    seconds_per_run = (time.perf_counter() - started) / config.runs
    if model.k is not None:
        k_report = model.k
    else:
        counts = Counter(chosen_ks)
        k_report = min(counts, key=lambda k: (-counts[k], k))
    return RunReport.from_samples(
        model=model.model_id(),
        dataset=data.dataset_id(),
        k=k_report,
        beta=model.beta,
        metric=metric,
        samples=samples,
        epochs=config.epochs,
        runs=config.runs,
        seed_base=config.seed,
        seconds_per_run=seconds_per_run,
        val_metric=float(np.mean(val_scores)),
    )


def sweep(axis: str, values, model: ModelSpec, data: DataSpec, config, out_csv=None) -> list[RunReport]:
    """One run_experiment per axis value; numeric axes run in ascending order.

    When out_csv is given the combined report table is written there.
    """
    if axis not in SWEEP_AXES:
        raise ValueError(f"unknown sweep axis {axis!r}; expected one of {SWEEP_AXES}")
    values = list(values)
    if not values:
        raise ValueError("empty value list")
    if axis == "k":
        cases = [(dataclasses.replace(model, k=int(v)), data) for v in sorted(int(v) for v in values)]
    elif axis == "beta":
        cases = [(dataclasses.replace(model, beta=float(v)), data) for v in sorted(float(v) for v in values)]
    elif axis == "feature_dim":
        cases = [
            (model, dataclasses.replace(data, randomize_dim=int(v)))
            for v in sorted(int(v) for v in values)
        ]
    else:
        cases = [(dataclasses.replace(model, family=str(v)), data) for v in values]
    reports = [run_experiment(m, d, config) for m, d in cases]
    if out_csv is not None:
        from . import reporting

        reporting.write_report_csv(reports, out_csv)
    return reports
