"""Config-driven experiment orchestration.

A single JSON document describes an experiment; "auto" sentinels are
resolved against the defaults in `dynamics` before anything runs and the
resolved values are frozen into the output manifest, so every CSV is
reproducible from the manifest alone. Trajectory seeds for one config are
integrated together in one vectorized batch; `--workers` parallelizes
across sweep points, never inside a batch, which keeps outputs
byte-identical for any worker count.
"""

import dataclasses
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from math import ceil
from pathlib import Path

import numpy as np

from ._version import __version__
from . import dynamics, estimators, hermite, models
from .sphere import sample_uniform

LARGE_BYTES = 5 * 10**8

_INT_FIELDS = {"d", "n", "sgd_steps", "refine_samples", "record_stride", "max_steps", "noise_seed", "theta_star_seed"}
_SWEEPABLE = {"epsilon", "eta", "horizon", "dt", "d", "n", "noise_std", "sgd_steps", "refine_eta", "refine_samples"}


class ConfigError(ValueError):
    """Invalid experiment configuration; names the offending field."""

    def __init__(self, field: str, message: str):
        super().__init__(f"config field '{field}': {message}")
        self.field = field


@dataclass
class ExperimentConfig:
    problem: str
    k_or_link: object
    d: int
    n: object
    algorithm: str = "langevin_avg"
    epsilon: object = "auto"
    eta: object = "auto"
    horizon: object = "auto"
    dt: object = "auto"
    seeds: tuple = (0,)
    output_dir: str = "runs"
    record_stride: object = "auto"
    finalize: str = "auto"
    couple_brownian: bool = False
    noise_std: float = 1.0
    noise_seed: int = 0
    theta_star_seed: int = 0
    sgd_steps: object = "auto"
    refine_samples: object = "auto"
    refine_eta: object = "auto"
    max_steps: int = dynamics.DEFAULT_STEP_BUDGET

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        raw = json.loads(Path(path).read_text())
        return cls.from_dict(raw)

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        for key in raw:
            if key not in known:
                raise ConfigError(key, "unknown field")
        missing = {"problem", "k_or_link", "d", "n"} - set(raw)
        if missing:
            raise ConfigError(sorted(missing)[0], "required field missing")
        cfg = cls(**raw)
        cfg = dataclasses.replace(cfg, seeds=tuple(cfg.seeds))
        return cfg


def _resolve(config: ExperimentConfig) -> dict:
    """Freeze all 'auto' sentinels into concrete values."""
    if config.problem not in ("tensor_pca", "single_index"):
        raise ConfigError("problem", f"must be tensor_pca or single_index, got {config.problem!r}")
    if config.algorithm not in ("langevin_avg", "minibatch_avg", "langevin_avg_then_online_sgd"):
        raise ConfigError("algorithm", f"unknown algorithm {config.algorithm!r}")
    if config.d < 2:
        raise ConfigError("d", f"need d >= 2, got {config.d}")

    if config.problem == "tensor_pca":
        if not isinstance(config.k_or_link, int):
            raise ConfigError("k_or_link", "tensor_pca needs an integer order")
        k_star = int(config.k_or_link)
        link_kind = None
        if k_star < 2:
            raise ConfigError("k_or_link", f"tensor order must be >= 2, got {k_star}")
        if config.algorithm != "langevin_avg":
            raise ConfigError("algorithm", f"{config.algorithm} requires problem=single_index")
    else:
        if isinstance(config.k_or_link, int):
            link = hermite.LinkFunction.hermite(config.k_or_link)
        else:
            link = models.link_from_name(str(config.k_or_link))
        link_kind = link.kind
        k_star = hermite.information_exponent(hermite.expand(link))

    if isinstance(config.n, dict):
        if set(config.n) != {"paper_scale"}:
            raise ConfigError("n", "formula form is {\"paper_scale\": c}")
        n = int(config.n["paper_scale"] * config.d ** ceil(k_star / 2))
    else:
        n = int(config.n)
    if n < 1:
        raise ConfigError("n", f"need n >= 1, got {n}")

    finalize = config.finalize
    if finalize == "auto":
        finalize = "odd" if k_star % 2 == 1 else "even"
    if finalize not in ("odd", "even"):
        raise ConfigError("finalize", f"must be auto, odd or even, got {finalize!r}")
    if finalize == "odd" and k_star % 2 == 0:
        raise ConfigError("finalize", f"odd finalization requested but k_star={k_star} is even")
    if finalize == "even" and k_star % 2 == 1:
        raise ConfigError("finalize", f"even finalization requested but k_star={k_star} is odd")
    if config.algorithm == "langevin_avg_then_online_sgd" and k_star % 2 == 0:
        raise ConfigError("algorithm", "online SGD refinement needs an odd information exponent")

    dt = dynamics.default_dt(config.d) if config.dt == "auto" else float(config.dt)
    epsilon = dynamics.default_epsilon(k_star, config.d) if config.epsilon == "auto" else float(config.epsilon)
    sgd_steps = 40 * config.d**2 if config.sgd_steps == "auto" else int(config.sgd_steps)
    if config.algorithm == "minibatch_avg":
        horizon, steps = None, sgd_steps
    else:
        horizon = (
            dynamics.default_horizon(k_star, config.d, epsilon, dt, max_steps=config.max_steps)
            if config.horizon == "auto"
            else float(config.horizon)
        )
        steps = int(round(horizon / dt))
    stride = max(1, steps // 256) if config.record_stride == "auto" else int(config.record_stride)
    eta = 0.2 / np.sqrt(config.d) if config.eta == "auto" else float(config.eta)
    refine_samples = 20 * config.d if config.refine_samples == "auto" else int(config.refine_samples)
    refine_eta = 0.15 / config.d if config.refine_eta == "auto" else float(config.refine_eta)

    return {
        "problem": config.problem,
        "algorithm": config.algorithm,
        "k_star": k_star,
        "link_kind": link_kind,
        "d": config.d,
        "n": n,
        "epsilon": epsilon,
        "dt": dt,
        "horizon": horizon,
        "steps": steps,
        "record_stride": stride,
        "eta": eta,
        "sgd_steps": sgd_steps,
        "refine_samples": refine_samples,
        "refine_eta": refine_eta,
        "seeds": list(config.seeds),
        "finalize": finalize,
        "couple_brownian": config.couple_brownian,
        "noise_std": config.noise_std,
        "noise_seed": config.noise_seed,
        "theta_star_seed": config.theta_star_seed,
        "output_dir": str(config.output_dir),
    }


def _memory_estimate_bytes(resolved: dict) -> int:
    if resolved["problem"] == "tensor_pca":
        entries = resolved["d"] ** resolved["k_star"]
        if entries > models.MATERIALIZE_LIMIT:
            # implicit storage: the cost is streaming time, not memory;
            # still gate it behind --large
            return entries * 8
        return 2 * entries * 8
    return resolved["n"] * resolved["d"] * 8


def _build_instance(resolved: dict):
    rng = np.random.default_rng([resolved["theta_star_seed"], 0xA5])
    theta_star = sample_uniform(resolved["d"], rng)
    if resolved["problem"] == "tensor_pca":
        return models.TensorPcaInstance.from_sample_count(
            resolved["k_star"], resolved["d"], theta_star, resolved["n"], noise_seed=resolved["noise_seed"]
        )
    link = models.link_from_name(resolved["link_kind"])
    return models.make_single_index(
        resolved["n"], resolved["d"], link, theta_star, resolved["noise_std"], seed=resolved["noise_seed"]
    )


def run(config: ExperimentConfig, *, seed_offset: int = 0, large: bool = False,
        workers: int = 1) -> dict:
    """Execute one experiment; returns (and writes) the manifest."""
    resolved = _resolve(config)
    seeds = [s + seed_offset for s in resolved["seeds"]]
    resolved["seeds"] = seeds

    est = _memory_estimate_bytes(resolved)
    if est > LARGE_BYTES:
        msg = f"estimated working set {est / 1e9:.2f} GB for this config"
        if not large:
            raise ValueError(msg + "; pass --large to proceed")
        print(msg + " (proceeding under --large)")

    out_dir = Path(resolved["output_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    instance = _build_instance(resolved)

    per_seed = []
    csv_files = []
    if config.algorithm in ("langevin_avg", "langevin_avg_then_online_sgd"):
        sde = dynamics.SdeConfig(
            dimension=resolved["d"],
            epsilon=resolved["epsilon"],
            dt=resolved["dt"],
            horizon_T=resolved["horizon"],
            seed=seeds[0],
            record_stride=resolved["record_stride"],
            couple_brownian=resolved["couple_brownian"],
        )
        summaries = dynamics.run_batch(
            sde, instance, seeds, record_eig=(resolved["finalize"] == "even")
        )
        for seed, summary in zip(seeds, summaries):
            path = out_dir / f"seed_{seed}.csv"
            summary.to_csv(path)
            csv_files.append(path.name)
            per_seed.append(_seed_metrics(seed, summary, instance, resolved))
        if config.algorithm == "langevin_avg_then_online_sgd":
            for seed, summary, row in zip(seeds, summaries, per_seed):
                warm = dynamics.finalize_odd(summary)
                stream = models.FreshSampleStream(
                    instance.link, instance.theta_star, resolved["noise_std"],
                    seed=seed + 982_451_653, limit=resolved["refine_samples"],
                )
                refined = dynamics.online_sgd_refine(
                    warm, stream, resolved["refine_eta"], resolved["refine_samples"]
                )
                row["final_corr_refined"] = float(refined @ instance.theta_star)
    else:  # minibatch_avg
        for seed in seeds:
            trace = dynamics.run_minibatch_sgd(
                instance, resolved["eta"], resolved["sgd_steps"], seed,
                record_stride=resolved["record_stride"],
            )
            path = out_dir / f"seed_{seed}.csv"
            _trace_to_csv(trace, path)
            csv_files.append(path.name)
            nrm = float(np.linalg.norm(trace["theta_hat"]))
            per_seed.append({
                "seed": seed,
                "final_corr_iterate": float(trace["final_theta"] @ instance.theta_star),
                "final_corr_avg": float(trace["theta_hat"] @ instance.theta_star) / (nrm or 1.0),
                "max_abs_corr_iterate": trace["max_abs_corr_iterate"],
                "theta_hat_norm": nrm,
            })

    manifest = {
        "version": __version__,
        "resolved": resolved,
        "csv_files": csv_files,
        "per_seed": per_seed,
        "wall_time_s": time.perf_counter() - t0,
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2))
    return manifest


def _seed_metrics(seed: int, summary: dynamics.TrajectorySummary, instance, resolved: dict) -> dict:
    theta_star = instance.theta_star
    nrm = float(np.linalg.norm(summary.theta_hat))
    row = {
        "seed": seed,
        "final_corr_iterate": float(summary.final_theta @ theta_star),
        "final_corr_avg": float(summary.theta_hat @ theta_star) / (nrm or 1.0),
        "theta_hat_norm": nrm,
        "max_abs_corr_iterate": float(np.max(np.abs(summary.records["corr_iterate"]))),
    }
    if summary.error_sup is not None:
        row["err_sup"] = summary.error_sup
    if summary.max_drift_norm is not None:
        row["max_drift_norm"] = summary.max_drift_norm
    if resolved["finalize"] == "even" and summary.second_moment is not None:
        try:
            v, lam, gap = estimators.top_eigenvector(summary.second_moment, seed=seed)
            row["final_corr_eig"] = abs(float(v @ theta_star))
            row["top_eigenvalue"] = lam
            row["eigengap"] = gap
        except estimators.PowerIterationError as err:
            row["final_corr_eig"] = None
            row["top_eigenvalue"] = err.rayleigh
    return row


def _trace_to_csv(trace: dict, path) -> None:
    cols = list(trace["columns"])
    rows = zip(*(trace["records"][c] for c in cols))
    with open(path, "w", newline="") as fh:
        fh.write(",".join(cols) + "\n")
        for row in rows:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def _run_sweep_point(args: tuple) -> dict:
    raw, parameter, value, seed_offset, large = args
    cfg = ExperimentConfig.from_dict(raw)
    value = int(value) if parameter in _INT_FIELDS else float(value)
    cfg = dataclasses.replace(cfg, **{parameter: value})
    cfg = dataclasses.replace(cfg, output_dir=str(Path(cfg.output_dir) / f"{parameter}={value:g}"))
    return run(cfg, seed_offset=seed_offset, large=large)


def sweep(config: ExperimentConfig, parameter: str, values, *, seed_offset: int = 0,
          large: bool = False, workers: int = 1) -> list[dict]:
    """Run the config once per parameter value; emit a tidy long-format CSV.

    Rows are merged in the order of ``values`` regardless of worker
    completion order.
    """
    if parameter not in _SWEEPABLE:
        raise ConfigError(parameter, f"not a sweepable numeric field (choose from {sorted(_SWEEPABLE)})")
    raw = dataclasses.asdict(config)
    raw["seeds"] = list(raw["seeds"])
    jobs = [(raw, parameter, v, seed_offset, large) for v in values]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            manifests = list(pool.map(_run_sweep_point, jobs))
    else:
        manifests = [_run_sweep_point(j) for j in jobs]

    keys = sorted({k for m in manifests for row in m["per_seed"] for k in row if k != "seed"})
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    table = out_dir / "sweep.csv"
    rows = []
    with open(table, "w", newline="") as fh:
        fh.write(",".join(["parameter", "value", "seed"] + keys) + "\n")
        for value, manifest in zip(values, manifests):
            for row in manifest["per_seed"]:
                cells = [parameter, repr(float(value)), str(row["seed"])]
                cells += ["" if row.get(k) is None else repr(float(row.get(k))) for k in keys]
                fh.write(",".join(cells) + "\n")
                rows.append(dict(zip(["parameter", "value", "seed"] + keys, cells)))
    return rows
