"""Experiment runner: many permuted trials per method, bands, exports.

A method descriptor names one of the four explorers (uniform RRT, weighted RRT,
HS-RRT, CA-RRT) with its parameters.  ``run_experiment`` executes N trials,
each on its own permuted instance (HS-RRT is the exception: it is tied to
the single instance its demonstration was recorded on), and everything
derives deterministically from one master seed.  Exports are byte-stable:
wall-clock timings stay in memory and are never written into result files.
"""

from __future__ import annotations

import concurrent.futures
import hashlib
import json
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import templates as tpl
from .clone import PolicyModel, Trajectory, load_model, load_trajectory
from .rrt import (
    ClonePriorSampler,
    DEFAULT_WEIGHTS,
    ExplorerConfig,
    UniformSampler,
    WeightedSampler,
    ca_rollout,
    run,
)
from .statespace import CoverageCurve

MANIFEST_SCHEMA_VERSION = 1
RESULTS_SCHEMA_VERSION = 1

METHOD_KINDS = ("rrt", "wrrt", "hsrrt", "carrt")


class TemplateMismatch(Exception):
    """HS-RRT trajectory was recorded on a different template."""


class MissingModel(Exception):
    """CA-RRT was requested without a trained policy."""


class BudgetMismatch(Exception):
    """Comparison across different templates or iteration budgets."""


def derive_seed(master_seed: int, *parts) -> int:
    """Stable 63-bit sub-seed from a master seed and a label path."""
    text = ":".join([str(master_seed), *map(str, parts)])
    digest = hashlib.blake2b(text.encode(), digest_size=8).digest()
    return int.from_bytes(digest, "big") >> 1


@dataclass(frozen=True)
class MethodSpec:
    kind: str
    weights: tuple[float, ...] = DEFAULT_WEIGHTS
    trajectory: Optional[Trajectory] = None
    model: Optional[PolicyModel] = None
    alpha0: float = 0.1
    growth: float = 1e-5
    rollout_cap: int = 200
    label: Optional[str] = None

    def __post_init__(self):
        if self.kind not in METHOD_KINDS:
            raise ValueError(f"unknown method kind {self.kind!r}")
        if self.kind == "hsrrt" and self.trajectory is None:
            raise ValueError("hsrrt needs a seed trajectory")
        if self.kind == "carrt" and self.model is None:
            raise MissingModel("carrt needs a trained policy model")

    @property
    def name(self) -> str:
        return self.label or self.kind


@dataclass(frozen=True)
class TrialResult:
    instance_seed: int
    curve: CoverageCurve
    ground_truth_total: int
    saturation: Optional[int]
    wall_clock: float  # seconds; in-memory only, never exported


@dataclass(frozen=True)
class ExperimentResult:
    template_name: str
    method: MethodSpec
    max_iterations: int
    trials: tuple[TrialResult, ...]


def saturation_iteration(curve: CoverageCurve, total: int) -> Optional[int]:
    """First iteration where the cumulative count reaches ``total``."""
    if total <= 0:
        raise ValueError("total must be positive")
    for iteration, count in curve.points:
        if count >= total:
            return iteration
    return None


def _run_trial(
    template: tpl.EnvTemplate,
    method: MethodSpec,
    trial_index: int,
    max_iterations: int,
    master_seed: int,
) -> TrialResult:
    if method.kind == "hsrrt":
        instance_seed = method.trajectory.seed
    else:
        instance_seed = derive_seed(master_seed, "instance", trial_index)
    rng_seed = derive_seed(master_seed, "rng", trial_index)
    instance = tpl.instantiate(template, instance_seed)

    seeds: Optional[Trajectory] = None
    if method.kind == "hsrrt":
        if method.trajectory.template != template.name:
            raise TemplateMismatch(
                f"trajectory is for {method.trajectory.template!r}, template is {template.name!r}"
            )
        seeds = method.trajectory
        sampler = UniformSampler()
    elif method.kind == "carrt":
        seeds = ca_rollout(method.model, instance, max_steps=method.rollout_cap)
        sampler = ClonePriorSampler(
            method.model,
            alpha0=method.alpha0,
            growth=method.growth,
            fallback=WeightedSampler(method.weights),
        )
    elif method.kind == "wrrt":
        sampler = WeightedSampler(method.weights)
    else:
        sampler = UniformSampler()

    config = ExplorerConfig(max_iterations=max_iterations, rng_seed=rng_seed)
    started = time.perf_counter()
    tree, curve = run(instance, sampler, seeds=seeds, config=config)
    elapsed = time.perf_counter() - started
    total = tree.tracker.ground_truth_total
    return TrialResult(
        instance_seed=instance_seed,
        curve=curve,
        ground_truth_total=total,
        saturation=saturation_iteration(curve, total),
        wall_clock=elapsed,
    )


def run_experiment(
    template: tpl.EnvTemplate,
    method: MethodSpec,
    trials: int = 50,
    max_iterations: int = 20_000,
    master_seed: int = 0,
    workers: int = 1,
) -> ExperimentResult:
    """Run ``trials`` independent explorations of one method.

    Results are ordered by trial index, so the worker count never changes
    the outcome, only the wall-clock.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    if workers <= 1:
        results = [
            _run_trial(template, method, i, max_iterations, master_seed)
            for i in range(trials)
        ]
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(_run_trial, template, method, i, max_iterations, master_seed)
                for i in range(trials)
            ]
            results = [f.result() for f in futures]
    return ExperimentResult(
        template_name=template.name,
        method=method,
        max_iterations=max_iterations,
        trials=tuple(results),
    )


# ---------------------------------------------------------------------------
# Statistics


def nearest_rank(values: Sequence[float], percentile: float) -> float:
    """Nearest-rank percentile (no interpolation)."""
    data = sorted(values)
    if not data:
        raise ValueError("no values")
    rank = max(1, int(np.ceil(percentile / 100.0 * len(data))))
    return data[rank - 1]


def percentile_bands(
    result: ExperimentResult, percentiles: Sequence[int] = (5, 50, 95)
) -> dict[int, np.ndarray]:
    """Per-iteration coverage percentiles across trials (nearest rank)."""
    if not result.trials:
        raise ValueError("experiment has no trials")
    matrix = np.stack(
        [t.curve.densify(result.max_iterations) for t in result.trials]
    )
    matrix.sort(axis=0)
    n = matrix.shape[0]
    bands: dict[int, np.ndarray] = {}
    for p in percentiles:
        rank = max(1, int(np.ceil(p / 100.0 * n)))
        bands[p] = matrix[rank - 1]
    return bands


@dataclass(frozen=True)
class MethodSummary:
    name: str
    trials: int
    saturation_rate: float
    median_saturation: Optional[int]  # over saturated trials only
    censored_median: int  # unsaturated trials counted at budget


@dataclass(frozen=True)
class ComparisonSummary:
    template_name: str
    max_iterations: int
    a: MethodSummary
    b: MethodSummary
    median_delta: Optional[int]
    reduction_pct: Optional[float]

    def to_json(self) -> dict:
        return {
            "schema_version": RESULTS_SCHEMA_VERSION,
            "template": self.template_name,
            "max_iterations": self.max_iterations,
            "a": self.a.__dict__,
            "b": self.b.__dict__,
            "median_delta": self.median_delta,
            "reduction_pct": self.reduction_pct,
        }


def _summarize(result: ExperimentResult) -> MethodSummary:
    saturations = [t.saturation for t in result.trials]
    reached = [s for s in saturations if s is not None]
    censored = [s if s is not None else result.max_iterations for s in saturations]
    return MethodSummary(
        name=result.method.name,
        trials=len(result.trials),
        saturation_rate=len(reached) / len(result.trials),
        median_saturation=int(nearest_rank(reached, 50)) if reached else None,
        censored_median=int(nearest_rank(censored, 50)),
    )


def compare(a: ExperimentResult, b: ExperimentResult) -> ComparisonSummary:
    """Median saturation difference of ``a`` relative to baseline ``b``.

    Medians use only trials that saturated; trials stopped by the budget are
    reported through the saturation rate and the censored median, never
    silently mixed into the reduction percentage.
    """
    if a.template_name != b.template_name or a.max_iterations != b.max_iterations:
        raise BudgetMismatch("experiments ran on different templates or budgets")
    sa, sb = _summarize(a), _summarize(b)
    delta = None
    reduction = None
    if sa.median_saturation is not None and sb.median_saturation is not None:
        delta = sb.median_saturation - sa.median_saturation
        if sb.median_saturation > 0:
            reduction = 100.0 * delta / sb.median_saturation
        elif delta == 0:
            reduction = 0.0
    return ComparisonSummary(
        template_name=a.template_name,
        max_iterations=a.max_iterations,
        a=sa,
        b=sb,
        median_delta=delta,
        reduction_pct=reduction,
    )


# ---------------------------------------------------------------------------
# Exports


def export_curve_csv(curve: CoverageCurve, path) -> None:
    Path(path).write_text(curve.to_csv(), encoding="utf-8")


def export_bands_csv(bands: dict[int, np.ndarray], path) -> None:
    """Band CSV: one row per change point plus the final iteration."""
    keys = sorted(bands)
    arrays = [bands[k] for k in keys]
    n = len(arrays[0])
    lines = ["iteration," + ",".join(f"p{k}" for k in keys)]
    prev = None
    for i in range(n):
        row = tuple(int(a[i]) for a in arrays)
        if row != prev or i == n - 1:
            lines.append(f"{i}," + ",".join(str(v) for v in row))
            prev = row
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def import_bands_csv(path) -> dict[int, np.ndarray]:
    lines = Path(path).read_text(encoding="utf-8").strip().splitlines()
    header = lines[0].split(",")
    keys = [int(h[1:]) for h in header[1:]]
    rows = [[int(v) for v in line.split(",")] for line in lines[1:]]
    last_iter = rows[-1][0]
    bands = {k: np.zeros(last_iter + 1, dtype=np.int64) for k in keys}
    for row in rows:
        it = row[0]
        for k, v in zip(keys, row[1:]):
            bands[k][it:] = v
    return bands


_SVG_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def export_svg(
    named_bands: dict[str, dict[int, np.ndarray]],
    path,
    title: str = "coverage",
    low: int = 5,
    mid: int = 50,
    high: int = 95,
) -> None:
    """Line plot with a shaded percentile band per method.

    Hand-rolled SVG so identical inputs always produce identical bytes.
    """
    if not named_bands:
        raise ValueError("nothing to plot")
    width, height = 860, 520
    ml, mr, mt, mb = 70, 170, 40, 50
    pw, ph = width - ml - mr, height - mt - mb
    max_iter = max(len(next(iter(b.values()))) - 1 for b in named_bands.values())
    max_count = max(int(b[high].max()) for b in named_bands.values())
    max_iter = max(max_iter, 1)
    max_count = max(max_count, 1)

    def sx(it: float) -> float:
        return ml + pw * it / max_iter

    def sy(c: float) -> float:
        return mt + ph * (1.0 - c / max_count)

    def fmt(v: float) -> str:
        return f"{v:.2f}"

    def series_points(values: np.ndarray) -> list[tuple[float, float]]:
        idx = np.linspace(0, len(values) - 1, min(len(values), 400)).astype(int)
        return [(sx(int(i)), sy(int(values[i]))) for i in idx]

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{ml}" y="24" font-family="sans-serif" font-size="16">{title}</text>',
        # axes
        f'<line x1="{ml}" y1="{mt + ph}" x2="{ml + pw}" y2="{mt + ph}" stroke="black"/>',
        f'<line x1="{ml}" y1="{mt}" x2="{ml}" y2="{mt + ph}" stroke="black"/>',
        f'<text x="{ml + pw / 2:.0f}" y="{height - 12}" font-family="sans-serif" '
        f'font-size="13" text-anchor="middle">iterations</text>',
        f'<text x="18" y="{mt + ph / 2:.0f}" font-family="sans-serif" font-size="13" '
        f'transform="rotate(-90 18 {mt + ph / 2:.0f})" text-anchor="middle">novel states</text>',
        f'<text x="{ml}" y="{mt + ph + 16}" font-family="sans-serif" font-size="11">0</text>',
        f'<text x="{ml + pw}" y="{mt + ph + 16}" font-family="sans-serif" font-size="11" '
        f'text-anchor="end">{max_iter}</text>',
        f'<text x="{ml - 6}" y="{mt + 4}" font-family="sans-serif" font-size="11" '
        f'text-anchor="end">{max_count}</text>',
        f'<text x="{ml - 6}" y="{mt + ph + 4}" font-family="sans-serif" font-size="11" '
        f'text-anchor="end">0</text>',
    ]
    for i, (name, bands) in enumerate(named_bands.items()):
        color = _SVG_COLORS[i % len(_SVG_COLORS)]
        lo_pts = series_points(bands[low])
        hi_pts = series_points(bands[high])
        polygon = " ".join(f"{fmt(x)},{fmt(y)}" for x, y in lo_pts + hi_pts[::-1])
        parts.append(f'<polygon points="{polygon}" fill="{color}" opacity="0.2"/>')
        med_pts = series_points(bands[mid])
        polyline = " ".join(f"{fmt(x)},{fmt(y)}" for x, y in med_pts)
        parts.append(
            f'<polyline points="{polyline}" fill="none" stroke="{color}" stroke-width="1.5"/>'
        )
        ly = mt + 16 + 18 * i
        parts.append(
            f'<rect x="{ml + pw + 12}" y="{ly - 10}" width="12" height="12" fill="{color}"/>'
        )
        parts.append(
            f'<text x="{ml + pw + 30}" y="{ly}" font-family="sans-serif" font-size="12">{name}</text>'
        )
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# Manifest-driven runs


@dataclass(frozen=True)
class Manifest:
    template_name: str
    trials: int
    max_iterations: int
    master_seed: int
    methods: tuple[dict, ...]
    out_dir: str


def load_manifest(path) -> Manifest:
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    if data.get("schema_version") != MANIFEST_SCHEMA_VERSION:
        raise ValueError(f"unsupported manifest schema {data.get('schema_version')!r}")
    return Manifest(
        template_name=data["template"],
        trials=int(data["trials"]),
        max_iterations=int(data["max_iterations"]),
        master_seed=int(data["master_seed"]),
        methods=tuple(data["methods"]),
        out_dir=data["out"],
    )


def _method_from_manifest(entry: dict, base_dir: Path) -> MethodSpec:
    kind = entry["kind"]
    kwargs: dict = {"kind": kind}
    if "weights" in entry:
        kwargs["weights"] = tuple(entry["weights"])
    if "alpha0" in entry:
        kwargs["alpha0"] = float(entry["alpha0"])
    if "growth" in entry:
        kwargs["growth"] = float(entry["growth"])
    if "rollout_cap" in entry:
        kwargs["rollout_cap"] = int(entry["rollout_cap"])
    if "label" in entry:
        kwargs["label"] = entry["label"]
    if kind == "hsrrt":
        traj_path = Path(entry["trajectory"])
        if not traj_path.is_absolute():
            traj_path = base_dir / traj_path
        kwargs["trajectory"] = load_trajectory(traj_path)
    if kind == "carrt":
        model_path = Path(entry["model"])
        if not model_path.is_absolute():
            model_path = base_dir / model_path
        if not model_path.exists():
            raise MissingModel(f"model file not found: {model_path}")
        kwargs["model"] = load_model(model_path)
    return MethodSpec(**kwargs)


def run_manifest(manifest: Manifest, base_dir=".", workers: int = 1) -> Path:
    """Execute a manifest and write the results directory.

    Validation (template lookup, trajectory/model loading) happens before
    any trial runs.  Every produced byte is a pure function of the manifest.
    """
    base = Path(base_dir)
    template = tpl.get_template(manifest.template_name)
    methods = [_method_from_manifest(m, base) for m in manifest.methods]
    names = [f"m{i}_{m.name}" for i, m in enumerate(methods)]
    if len(set(names)) != len(names):
        raise ValueError("method labels must be unique")

    out = base / manifest.out_dir
    out.mkdir(parents=True, exist_ok=True)

    results: list[ExperimentResult] = []
    all_bands: dict[str, dict[int, np.ndarray]] = {}
    for name, method in zip(names, methods):
        result = run_experiment(
            template,
            method,
            trials=manifest.trials,
            max_iterations=manifest.max_iterations,
            master_seed=manifest.master_seed,
            workers=workers,
        )
        results.append(result)
        method_dir = out / name
        method_dir.mkdir(exist_ok=True)
        for i, trial in enumerate(result.trials):
            export_curve_csv(trial.curve, method_dir / f"trial_{i:03d}.csv")
        bands = percentile_bands(result)
        export_bands_csv(bands, method_dir / "bands.csv")
        all_bands[method.name] = bands

    comparisons = []
    for i in range(len(results)):
        for j in range(i + 1, len(results)):
            comparisons.append(compare(results[i], results[j]).to_json())
    summary = {
        "schema_version": RESULTS_SCHEMA_VERSION,
        "template": manifest.template_name,
        "trials": manifest.trials,
        "max_iterations": manifest.max_iterations,
        "master_seed": manifest.master_seed,
        "methods": [
            {
                "name": name,
                "saturation_rate": _summarize(r).saturation_rate,
                "median_saturation": _summarize(r).median_saturation,
                "censored_median": _summarize(r).censored_median,
                "ground_truth_totals": [t.ground_truth_total for t in r.trials],
                "instance_seeds": [t.instance_seed for t in r.trials],
            }
            for name, r in zip(names, results)
        ],
        "comparisons": comparisons,
    }
    (out / "comparison.json").write_text(
        json.dumps(summary, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    export_svg(all_bands, out / "coverage.svg", title=manifest.template_name)
    return out
