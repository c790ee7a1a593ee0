"""Monte Carlo singularity estimates, scaling runs and their on-disk records."""

from __future__ import annotations

import csv
import json
import math
import os
import subprocess
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .configmodel import perm_to_matrix, sample_simple_adjacency
from .core import SeededRng, is_prime, make_params, random_primes
from .errors import IoError, NotPrimeError
from .modlinalg import Certification, is_singular_rational, rank_mod_p

THREADS_ENV = "REGDIG_THREADS"
VOLATILE_FIELDS = ("wall_ms", "git_rev")
CSV_COLUMNS = ("n", "d", "trials", "singular", "estimate", "ci_lo", "ci_hi", "undetermined")


def wilson_interval(k: int, n: int, z: float = 1.96) -> tuple[float, float]:
    if n <= 0:
        raise ValueError("need at least one trial")
    phat = k / n
    denom = 1 + z * z / n
    centre = (phat + z * z / (2 * n)) / denom
    half = z * math.sqrt(phat * (1 - phat) / n + z * z / (4 * n * n)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


def git_revision(cwd: str | None = None) -> str:
    try:
        out = subprocess.run(["git", "rev-parse", "--short", "HEAD"], cwd=cwd or os.getcwd(),
                             capture_output=True, text=True, timeout=5)
        return out.stdout.strip() or "unknown"
    except (OSError, subprocess.SubprocessError):
        return "unknown"


def worker_count() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return os.cpu_count() or 1


@dataclass
class ExperimentRecord:
    kind: str
    params: dict
    trials: int
    singular_count: int
    undetermined_count: int
    estimate: float
    ci95: float
    ci_lo: float
    ci_hi: float
    seed: int
    wall_ms: int = 0
    git_rev: str = "unknown"

    def to_json(self) -> str:
        return json.dumps(asdict(self), ensure_ascii=False, separators=(", ", ": "))

    @classmethod
    def from_json(cls, line: str) -> "ExperimentRecord":
        return cls(**json.loads(line))

    def stable_dict(self) -> dict:
        out = asdict(self)
        for k in VOLATILE_FIELDS:
            out.pop(k, None)
        return out


def _parse_mode(mode, p):
    """Normalize the mode into ("rational", None) or ("modp", prime)."""
    if isinstance(mode, tuple):
        mode, p = mode
    if mode == "rational":
        return "rational", None
    if mode == "modp":
        if p is None or not is_prime(int(p)):
            raise NotPrimeError(f"modp mode needs a prime p, got {p}")
        return "modp", int(p)
    raise ValueError(f"unknown mode {mode!r}")


def _trial_matrix(n: int, d: int, gen: np.random.Generator, model: str) -> np.ndarray:
    if model == "multigraph":
        return perm_to_matrix(gen.permutation(n * d), n, d)
    if model == "simple":
        return sample_simple_adjacency(n, d, gen).matrix
    raise ValueError(f"unknown model {model!r}")


def run_trials(n: int, d: int, seed: int, indices: Sequence[int], mode: str, p: int | None,
               model: str) -> tuple[int, int]:
    """(singular, undetermined) counts over the given trial indices."""
    singular = undetermined = 0
    for i in indices:
        gen = SeededRng(seed, int(i)).generator()
        m = _trial_matrix(n, d, gen, model)
        if mode == "modp":
            if rank_mod_p(m, p, kernel=False, check_prime=False).rank < n:
                singular += 1
            continue
        res = is_singular_rational(m, random_primes(gen, 3), rng=gen)
        if res.status is Certification.SINGULAR:
            singular += 1
        elif res.status is Certification.UNDETERMINED:
            undetermined += 1
    return singular, undetermined


def _run_chunk(args):
    return run_trials(*args)


def estimate_singularity(n: int, d: int, trials: int, seed: int, mode="rational",
                         model: str = "multigraph", p: int | None = None, eps: float = 0.01,
                         b: float = 10.0, workers: int | None = None) -> ExperimentRecord:
    """Estimate P(adjacency matrix singular) from ``trials`` independent samples.

    Trial ``i`` draws everything from the stream ``(seed, i)``, so the counts do
    not depend on how trials are split between workers.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    if n < 1 or d < 1:
        raise ValueError("n and d must be positive")
    mode, p = _parse_mode(mode, p)
    start = time.perf_counter()
    workers = worker_count() if workers is None else max(1, workers)
    if workers == 1 or trials < 64:
        sing, und = run_trials(n, d, seed, range(trials), mode, p, model)
    else:
        bounds = np.linspace(0, trials, workers * 4 + 1).astype(int)
        jobs = [(n, d, seed, range(lo, hi), mode, p, model)
                for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_chunk, jobs))
        sing = sum(x[0] for x in parts)
        und = sum(x[1] for x in parts)
    wall = int(round((time.perf_counter() - start) * 1000))
    lo, hi = wilson_interval(sing, trials)
    if p is not None:
        prm = make_params(n, d, p, eps, b).as_dict()
    else:
        prm = {"n": n, "d": d, "p": None, "eps": eps, "b": b, "delta": None}
    prm.update(mode=mode, model=model)
    return ExperimentRecord(kind="singularity", params=prm, trials=trials, singular_count=sing,
                            undetermined_count=und, estimate=sing / trials,
                            ci95=(hi - lo) / 2, ci_lo=lo, ci_hi=hi, seed=seed,
                            wall_ms=wall, git_rev=git_revision())


# scaling experiments ------------------------------------------------------------

@dataclass
class ScalingResult:
    records: list
    slope: float | None
    files: dict = field(default_factory=dict)


def fit_loglog_slope(ns: Sequence[int], estimates: Sequence[float]) -> float | None:
    pts = [(math.log(n), math.log(e)) for n, e in zip(ns, estimates) if e > 0]
    if len(pts) < 2:
        return None
    x, y = np.array(pts).T
    return float(np.polyfit(x, y, 1)[0])


def write_jsonl(records: Sequence[ExperimentRecord], path) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for r in records:
                fh.write(r.to_json() + "\n")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def read_jsonl(path) -> list[ExperimentRecord]:
    try:
        with open(path, encoding="utf-8") as fh:
            return [ExperimentRecord.from_json(line) for line in fh if line.strip()]
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc


def write_csv(records: Sequence[ExperimentRecord], path) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_COLUMNS)
            for r in records:
                w.writerow([r.params["n"], r.params["d"], r.trials, r.singular_count,
                            repr(r.estimate), repr(r.ci_lo), repr(r.ci_hi), r.undetermined_count])
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def write_svg(records: Sequence[ExperimentRecord], slope: float | None, path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    ns = np.array([r.params["n"] for r in records], dtype=float)
    est = np.array([r.estimate for r in records])
    lo = np.array([r.ci_lo for r in records])
    hi = np.array([r.ci_hi for r in records])
    d = records[0].params["d"]
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.errorbar(ns, est, yerr=[est - lo, hi - est], fmt="o", label="estimate")
    pos = est > 0
    if pos.any():
        anchor_n, anchor_e = ns[pos][0], est[pos][0]
        grid = np.geomspace(ns.min(), ns.max(), 50)
        if slope is not None:
            ax.plot(grid, anchor_e * (grid / anchor_n) ** slope, label=f"fit {slope:.2f}")
        ax.plot(grid, anchor_e * (grid / anchor_n) ** (-1 / 3), "--", label="slope -1/3")
        ax.plot(grid, anchor_e * (grid / anchor_n) ** (-(d - 2)), ":", label=f"slope -{d - 2}")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("n")
    ax.set_ylabel("P(singular)")
    ax.legend()
    fig.tight_layout()
    try:
        fig.savefig(path, format="svg")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc
    finally:
        plt.close(fig)


def run_scaling_experiment(d: int, n_list: Sequence[int], trials: int, seed: int, out_path,
                           csv_out: bool = True, svg: bool = False, mode="rational",
                           model: str = "multigraph", p: int | None = None,
                           workers: int | None = None) -> ScalingResult:
    n_list = [int(n) for n in n_list]
    if not n_list:
        raise ValueError("n_list must be nonempty")
    if any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise ValueError("n_list must be strictly ascending")
    out = Path(out_path)
    if out.parent and not out.parent.exists():
        raise IoError(f"directory {out.parent} does not exist")
    records = [estimate_singularity(n, d, trials, seed, mode=mode, model=model, p=p,
                                    workers=workers) for n in n_list]
    for r in records:
        r.kind = "scaling"
    slope = fit_loglog_slope(n_list, [r.estimate for r in records])
    files = {"jsonl": str(out)}
    write_jsonl(records, out)
    if csv_out:
        files["csv"] = str(out.with_suffix(".csv"))
        write_csv(records, files["csv"])
    if svg:
        files["svg"] = str(out.with_suffix(".svg"))
        write_svg(records, slope, files["svg"])
    return ScalingResult(records, slope, files)
