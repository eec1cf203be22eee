"""Experiment configuration, run orchestration, sweeps, and trace checking."""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError
from .features import tabular_features
from .linear_ac import run_linear_ac
from .mdp import build_mdp
from .neural_ac import run_neural_ac
from .sampling import RNG_ID
from .trace import RunTrace, load_trace

ALGORITHMS = ("linear_exact", "linear_sampled", "linear_offpolicy", "neural")
RHO_EVALS = ("rho_star", "uniform")

_KNOWN_KEYS = {
    "mdp",
    "algorithm",
    "K",
    "N",
    "N_a",
    "N_c",
    "arch",
    "R",
    "beta",
    "rho_eval",
    "seeds",
    "out_dir",
    "ridge",
    "shared_batch",
    "offpolicy_batch_n",
}
_ARCH_KEYS = {"d", "m", "H"}


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated experiment description; mirrors the JSON config schema."""

    mdp: str
    algorithm: str
    K: int
    seeds: tuple[int, ...] = (0,)
    N: int | None = None
    N_a: int | None = None
    N_c: int | None = None
    arch: tuple[int, int] | None = None  # (m, H); d is fixed by the encoding
    R: float | None = None
    beta: float | None = None
    rho_eval: str = "rho_star"
    out_dir: str | None = None
    ridge: float = 0.0
    shared_batch: bool = False
    offpolicy_batch_n: int | None = None

    def to_dict(self) -> dict:
        doc = {
            "mdp": self.mdp,
            "algorithm": self.algorithm,
            "K": self.K,
            "seeds": list(self.seeds),
            "rho_eval": self.rho_eval,
        }
        if self.N is not None:
            doc["N"] = self.N
        if self.N_a is not None:
            doc["N_a"] = self.N_a
        if self.N_c is not None:
            doc["N_c"] = self.N_c
        if self.arch is not None:
            doc["arch"] = {"m": self.arch[0], "H": self.arch[1]}
        if self.R is not None:
            doc["R"] = self.R
        if self.beta is not None:
            doc["beta"] = self.beta
        if self.out_dir is not None:
            doc["out_dir"] = self.out_dir
        if self.ridge:
            doc["ridge"] = self.ridge
        if self.shared_batch:
            doc["shared_batch"] = self.shared_batch
        if self.offpolicy_batch_n is not None:
            doc["offpolicy_batch_n"] = self.offpolicy_batch_n
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(doc) - _KNOWN_KEYS
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        for key in ("mdp", "algorithm", "K"):
            if key not in doc:
                raise ConfigError(f"config is missing required key {key!r}")

        algorithm = doc["algorithm"]
        if algorithm not in ALGORITHMS:
            raise ConfigError(f"algorithm must be one of {ALGORITHMS}, got {algorithm!r}")
        K = _require_int(doc, "K", minimum=1)
        seeds = doc.get("seeds", [0])
        if not isinstance(seeds, list) or not seeds or not all(isinstance(s, int) for s in seeds):
            raise ConfigError("seeds must be a non-empty list of integers")

        mdp_source = doc["mdp"]
        if not isinstance(mdp_source, str):
            raise ConfigError("mdp must be a builtin name, random(S,A,seed), or a JSON path")
        if mdp_source not in ("chain2", "gridworld5") and not mdp_source.startswith("random("):
            if not Path(mdp_source).is_file():
                raise ConfigError(f"mdp file does not exist: {mdp_source}")

        rho_eval = doc.get("rho_eval", "rho_star")
        if rho_eval not in RHO_EVALS:
            raise ConfigError(f"rho_eval must be one of {RHO_EVALS}, got {rho_eval!r}")

        arch = None
        if "arch" in doc:
            arch_doc = doc["arch"]
            if not isinstance(arch_doc, dict) or not set(arch_doc) <= _ARCH_KEYS:
                raise ConfigError("arch must be an object with keys among {d, m, H}")
            arch = (_require_int(arch_doc, "m", minimum=1), _require_int(arch_doc, "H", minimum=1))
        if algorithm == "neural" and arch is None:
            raise ConfigError("neural runs require an arch entry with m and H")

        n = _optional_int(doc, "N", minimum=1)
        if algorithm == "linear_sampled" and n is None:
            raise ConfigError("linear_sampled requires N")

        radius = _optional_float(doc, "R", minimum=0.0)
        beta = _optional_float(doc, "beta", minimum=0.0, strict=True)
        ridge = _optional_float(doc, "ridge", minimum=0.0) or 0.0
        shared_batch = doc.get("shared_batch", False)
        if not isinstance(shared_batch, bool):
            raise ConfigError("shared_batch must be a boolean")

        return cls(
            mdp=mdp_source,
            algorithm=algorithm,
            K=K,
            seeds=tuple(seeds),
            N=n,
            N_a=_optional_int(doc, "N_a", minimum=1),
            N_c=_optional_int(doc, "N_c", minimum=1),
            arch=arch,
            R=radius,
            beta=beta,
            rho_eval=rho_eval,
            out_dir=doc.get("out_dir"),
            ridge=ridge,
            shared_batch=shared_batch,
            offpolicy_batch_n=_optional_int(doc, "offpolicy_batch_n", minimum=1),
        )


def _require_int(doc: dict, key: str, minimum: int) -> int:
    value = doc.get(key)
    if not isinstance(value, int) or isinstance(value, bool) or value < minimum:
        raise ConfigError(f"{key} must be an integer >= {minimum}, got {value!r}")
    return value


def _optional_int(doc: dict, key: str, minimum: int) -> int | None:
    if key not in doc:
        return None
    return _require_int(doc, key, minimum)


def _optional_float(doc: dict, key: str, minimum: float, strict: bool = False) -> float | None:
    if key not in doc:
        return None
    value = doc[key]
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise ConfigError(f"{key} must be a number, got {value!r}")
    value = float(value)
    if value < minimum or (strict and value <= minimum):
        raise ConfigError(f"{key} must be {'>' if strict else '>='} {minimum}, got {value}")
    return value


def _mdp_label(source: str) -> str:
    if source in ("chain2", "gridworld5"):
        return source
    if source.startswith("random("):
        return source.replace("(", "-").replace(",", "-").rstrip(")")
    return Path(source).stem


def run_id(config: ExperimentConfig, seed: int) -> str:
    return f"{config.algorithm}-{_mdp_label(config.mdp)}-K{config.K}-seed{seed}"


def execute_run(config: ExperimentConfig, seed: int) -> RunTrace:
    """Run one seed of an experiment and attach the full manifest."""
    started = datetime.now(timezone.utc)
    t0 = time.perf_counter()
    mdp = build_mdp(config.mdp)
    if config.algorithm == "neural":
        m, depth = config.arch
        trace = run_neural_ac(
            mdp,
            m,
            depth,
            config.K,
            n_actor=config.N_a if config.N_a is not None else (config.N or 400),
            n_critic=config.N_c if config.N_c is not None else (config.N or 400),
            seed=seed,
            radius=config.R if config.R is not None else 10.0,
            rho_eval=config.rho_eval,
            beta=config.beta,
        )
    else:
        mode = config.algorithm.removeprefix("linear_")
        features = tabular_features(mdp.n_states, mdp.n_actions)
        trace = run_linear_ac(
            mdp,
            features,
            config.K,
            mode=mode,
            N=config.N if config.N is not None else 1024,
            seed=seed,
            radius=config.R,
            rho_eval=config.rho_eval,
            beta=config.beta,
            ridge=config.ridge,
            shared_batch=config.shared_batch,
            offpolicy_batch_n=config.offpolicy_batch_n,
        )
    params = trace.manifest.get("params", {})
    trace.manifest = {
        "config": config.to_dict(),
        "rng_id": RNG_ID,
        "version": __version__,
        "started_at": started.isoformat(),
        "duration_s": time.perf_counter() - t0,
        "seed": seed,
        "run_id": run_id(config, seed),
        "params": params,
    }
    return trace


def run_command(config: ExperimentConfig, out_dir: str | None = None) -> list[Path]:
    """Execute every seed of a config and persist each trace; returns the directories."""
    base = Path(out_dir or config.out_dir or "runs")
    dirs = []
    for seed in config.seeds:
        trace = execute_run(config, seed)
        dirs.append(trace.save(base / run_id(config, seed)))
    return dirs


SWEEPABLE = ("K", "N", "N_a", "N_c")


def sweep_command(
    config: ExperimentConfig, param: str, values: list[int], out_dir: str | None = None
) -> tuple[Path, list[dict]]:
    """One run per (value, seed); children may run in parallel under SSTAC_THREADS.

    Writes summary.csv with one row per run and returns its path plus rows.
    """
    if param not in SWEEPABLE:
        raise ConfigError(f"sweep parameter must be one of {SWEEPABLE}, got {param!r}")
    base = Path(out_dir or config.out_dir or "sweep")
    jobs = []
    for value in values:
        derived = ExperimentConfig.from_dict({**config.to_dict(), param: value, "out_dir": str(base)})
        for seed in derived.seeds:
            jobs.append((value, seed, derived))

    def _one(job):
        value, seed, derived = job
        trace = execute_run(derived, seed)
        trace.save(base / run_id(derived, seed))
        final_gap = trace.rows[-1][trace.columns.index("gap")]
        cum = trace.rows[-1][trace.columns.index("cum_regret")]
        return {
            "param_value": value,
            "seed": seed,
            "final_gap": final_gap,
            "cum_regret": cum,
            "regret_over_sqrtK": cum / math.sqrt(derived.K),
        }

    workers = max(1, int(os.environ.get("SSTAC_THREADS", "1")))
    if workers == 1:
        results = [_one(job) for job in jobs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_one, jobs))

    results.sort(key=lambda row: (row["param_value"], row["seed"]))
    base.mkdir(parents=True, exist_ok=True)
    lines = ["param_value,seed,final_gap,cum_regret,regret_over_sqrtK"]
    for row in results:
        lines.append(
            f"{row['param_value']},{row['seed']},{row['final_gap']!r},"
            f"{row['cum_regret']!r},{row['regret_over_sqrtK']!r}"
        )
    summary = base / "summary.csv"
    summary.write_text("\n".join(lines) + "\n")
    return summary, results


# ---------------------------------------------------------------------------
# Trace checking (the `diag` verb)
# ---------------------------------------------------------------------------

DIAG_SERIES = ("gap", "e_norm", "eps_c", "theta_kl")
_SERIES_SOURCE = {"gap": "gap", "e_norm": "e_sup", "eps_c": "eps_c_l2", "theta_kl": "theta_kl"}


@dataclass
class DiagCheck:
    name: str
    ok: bool
    detail: str = ""


def diag_checks(trace: RunTrace) -> list[DiagCheck]:
    """Recompute the stored-trace identities and report pass/fail per invariant."""
    checks = []
    k_expected = trace.manifest.get("config", {}).get("K")
    if k_expected is not None:
        ok = len(trace.rows) == k_expected + 1
        checks.append(
            DiagCheck("row-count", ok, "" if ok else f"expected {k_expected + 1} rows, found {len(trace.rows)}")
        )

    gap = trace.column("gap")
    cum = trace.column("cum_regret")
    bad_row = None
    running = 0.0
    for k, g in enumerate(gap):
        running += g
        if abs(running - cum[k]) > 1e-9 * max(1.0, abs(running)):
            bad_row = k
            break
        running = cum[k]
    checks.append(
        DiagCheck(
            "regret-consistency",
            bad_row is None,
            "" if bad_row is None else f"cum_regret mismatch at row k={bad_row}",
        )
    )

    a_resid = trace.column("a_resid")
    worst = int(np.argmax(a_resid))
    ok = a_resid[worst] <= 1e-10
    checks.append(
        DiagCheck(
            "decomposition-identity",
            ok,
            "" if ok else f"A1+A2+A3 residual {a_resid[worst]:.3e} at row k={worst}",
        )
    )

    theta_kl = trace.column("theta_kl")
    kl_to_opt = trace.column("kl_to_opt")
    kl_initial = theta_kl[0] + kl_to_opt[0]
    partial = 0.0
    bad_row = None
    for k in range(len(theta_kl)):
        partial += theta_kl[k]
        if abs(partial - (kl_initial - kl_to_opt[k])) > 1e-9:
            bad_row = k
            break
    checks.append(
        DiagCheck(
            "kl-telescoping",
            bad_row is None,
            "" if bad_row is None else f"telescoped KL mismatch at row k={bad_row}",
        )
    )

    algorithm = trace.manifest.get("config", {}).get("algorithm")
    if algorithm in ("linear_exact", "linear_offpolicy"):
        eps_sup = max(trace.column("eps_c_sup"))
        ok = eps_sup <= 1e-9
        checks.append(
            DiagCheck(
                "exact-critic-eps-c",
                ok,
                "" if ok else f"eps_c sup norm {eps_sup:.3e} exceeds 1e-9",
            )
        )
    return checks


def diag_series_csv(trace: RunTrace) -> str:
    """Long-format (series, iter, value) CSV for the four headline diagnostics."""
    lines = ["series,iter,value"]
    ks = trace.column("k")
    for series in DIAG_SERIES:
        values = trace.column(_SERIES_SOURCE[series])
        for k, v in zip(ks, values):
            lines.append(f"{series},{int(k)},{v!r}")
    return "\n".join(lines) + "\n"


def diag_command(trace_dir) -> tuple[list[DiagCheck], Path]:
    trace = load_trace(trace_dir)
    checks = diag_checks(trace)
    out_path = Path(trace_dir) / "diag_series.csv"
    out_path.write_text(diag_series_csv(trace))
    return checks, out_path
