"""Monte Carlo comparison of covariance estimators on prior-drawn scenarios.

For each (nu, n) scenario and replicate: draw Sigma from the separable
inverse-Wishart prior with identity mean, sample n matrix-normal
observations, fit the four estimators (sample covariance, separable fit,
core shrinkage, oracle Bayes), and record squared-error losses and
fitted weights as tidy rows.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .kcd import FactorSingular, KCDOptions, kcd
from .linalg import Covariance, Dims, NotPositiveDefinite
from .sampling import ScenarioPrior, derive_seed, sample_matrix_normal, sample_prior_sigma
from .shrink import PriorSpec, fit_weight, oracle_bayes, shrink_combine, shrink_weight

ESTIMATORS = ("MLE", "KMLE", "CSE", "OBAYES")
CSV_HEADER = "p1,p2,nu,n,rep,estimator,loss,w_hat,w_true,converged"


@dataclass(frozen=True)
class SimConfig:
    """Scenario grid for one study; nu = math.inf marks the separable scenario."""

    dims: Dims
    nu_list: tuple[float, ...]
    n_list: tuple[int, ...]
    reps: int
    seed: int
    output_path: str | None = None

    def __post_init__(self):
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        if not self.nu_list or not self.n_list:
            raise ValueError("nu_list and n_list must be nonempty")
        for n in self.n_list:
            if n < 1:
                raise ValueError(f"sample sizes must be >= 1, got {n}")
        for nu in self.nu_list:
            if not math.isinf(nu) and nu <= self.dims.p + 1:
                raise ValueError(f"nu must exceed p+1 = {self.dims.p + 1} or be inf, got {nu}")


@dataclass(frozen=True)
class SimRecord:
    p1: int
    p2: int
    nu: float
    n: int
    rep: int
    estimator: str
    loss: float
    w_hat: float | None
    w_true: float | None
    converged: bool


@dataclass(frozen=True)
class ScenarioSummary:
    nu: float
    n: int
    estimator: str
    mean_log_loss: float
    mean_w_hat: float | None
    reps: int


def desk_config(seed: int = 0, reps: int = 50, output_path: str | None = None) -> SimConfig:
    """Default desk-scale study: (p1, p2) = (5, 7), nu in {p+2, 2p, 3p+1, inf}."""
    dims = Dims(5, 7)
    p = dims.p
    return SimConfig(
        dims=dims,
        nu_list=(p + 2.0, 2.0 * p, 3.0 * p + 1.0, math.inf),
        n_list=(7, 18, 35, 52),
        reps=reps,
        seed=seed,
        output_path=output_path,
    )


def scenarios(config: SimConfig) -> list[tuple[float, int]]:
    """Scenario enumeration (nu-major) fixing the replicate stream indices."""
    return [(nu, n) for nu in config.nu_list for n in config.n_list]


def replicate_seeds(config: SimConfig, scenario_index: int, rep: int) -> tuple[int, int]:
    """(prior draw, data draw) seeds for one replicate, derived from config.seed."""
    return (
        derive_seed(config.seed, scenario_index, rep, 0),
        derive_seed(config.seed, scenario_index, rep, 1),
    )


def loss_sq(est: Covariance, truth: Covariance) -> float:
    """Squared Frobenius error sum_ij (est - truth)_ij^2."""
    if est.dim != truth.dim:
        raise ValueError(f"dimension mismatch: {est.dim} vs {truth.dim}")
    return float(np.sum((est.mat - truth.mat) ** 2))


def _record_key(r: SimRecord) -> tuple:
    return (r.p1, r.p2, r.nu, r.n, r.rep, r.estimator)


def _run_replicate(
    config: SimConfig, scenario_index: int, nu: float, n: int, rep: int, opts: KCDOptions
) -> list[SimRecord]:
    dims = config.dims
    p = dims.p
    prior = ScenarioPrior(dims, nu, Covariance(np.eye(dims.p1)), Covariance(np.eye(dims.p2)))
    seed_sigma, seed_data = replicate_seeds(config, scenario_index, rep)
    sigma = sample_prior_sigma(prior, seed_sigma)
    y = sample_matrix_normal(sigma, dims, n, seed_data)
    s = Covariance(y.T @ y / n)
    w_true = shrink_weight(nu, n, p)

    def record(estimator, loss, w_hat, converged):
        return SimRecord(dims.p1, dims.p2, nu, n, rep, estimator, loss, w_hat, w_true, converged)

    out = [record("MLE", loss_sq(s, sigma), None, True)]

    result = None
    try:
        result = kcd(s, dims, opts)
    except (FactorSingular, NotPositiveDefinite, np.linalg.LinAlgError):
        pass
    if result is not None:
        out.append(record("KMLE", loss_sq(result.k_factor.to_covariance(), sigma), None, result.converged))
        try:
            fit = fit_weight(result.core, n, dims)
            est = shrink_combine(s, result.k_factor, fit.w_hat)
            out.append(record("CSE", loss_sq(est, sigma), fit.w_hat, result.converged))
        except (ValueError, np.linalg.LinAlgError):
            out.append(record("CSE", math.nan, None, False))
    else:
        out.append(record("KMLE", math.nan, None, False))
        out.append(record("CSE", math.nan, None, False))

    if math.isinf(nu):
        est_ob = sigma  # oracle weight 1 on the prior mean, which is Sigma itself
    else:
        est_ob = oracle_bayes(s, n, PriorSpec(nu, prior.k_mean))
    out.append(record("OBAYES", loss_sq(est_ob, sigma), w_true, True))
    return out


def run_study(
    config: SimConfig,
    opts: KCDOptions | None = None,
    max_workers: int | None = None,
) -> list[SimRecord]:
    """Run the full scenario grid and return records in canonical order.

    Estimator failures on a replicate (e.g. no separable fit at tiny n)
    are recorded with converged=False and a NaN loss; the run continues.
    Replicates are independent through derived seeds, so the output is a
    pure function of config regardless of max_workers.  Writes the CSV
    to config.output_path when set.
    """
    opts = opts or KCDOptions()
    if max_workers is None:
        max_workers = int(os.environ.get("KCD_THREADS", "1"))
    tasks = [
        (idx, nu, n, rep)
        for idx, (nu, n) in enumerate(scenarios(config))
        for rep in range(config.reps)
    ]
    if max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            chunks = list(
                pool.map(lambda t: _run_replicate(config, t[0], t[1], t[2], t[3], opts), tasks)
            )
    else:
        chunks = [_run_replicate(config, idx, nu, n, rep, opts) for idx, nu, n, rep in tasks]
    records = sorted((r for chunk in chunks for r in chunk), key=_record_key)
    if config.output_path is not None:
        write_records(records, config.output_path)
    return records


def summarize(records: list[SimRecord]) -> list[ScenarioSummary]:
    """One row per (nu, n, estimator): mean log-loss over reps and mean w_hat.

    A zero loss contributes -inf to the log-loss mean and a failed
    replicate (NaN loss) propagates NaN; both are reported as-is.
    """
    if not records:
        raise ValueError("no records to summarize")
    groups: dict[tuple, list[SimRecord]] = {}
    for r in records:
        groups.setdefault((r.nu, r.n, r.estimator), []).append(r)
    out = []
    for (nu, n, estimator), grp in sorted(groups.items(), key=lambda kv: kv[0]):
        logs = [math.log(r.loss) if r.loss > 0 else -math.inf for r in grp]
        weights = [r.w_hat for r in grp if r.w_hat is not None]
        out.append(
            ScenarioSummary(
                nu=nu,
                n=n,
                estimator=estimator,
                mean_log_loss=float(np.mean(logs)),
                mean_w_hat=float(np.mean(weights)) if weights else None,
                reps=len(grp),
            )
        )
    return out


def _fmt(x: float) -> str:
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def write_records(records: list[SimRecord], path: str) -> None:
    """Write tidy CSV rows in canonical order, floats at 17 significant digits."""
    rows = sorted(records, key=_record_key)
    with open(path, "w", newline="") as fh:
        fh.write(CSV_HEADER + "\n")
        for r in rows:
            fh.write(
                ",".join(
                    [
                        str(r.p1),
                        str(r.p2),
                        _fmt(r.nu),
                        str(r.n),
                        str(r.rep),
                        r.estimator,
                        _fmt(r.loss),
                        "" if r.w_hat is None else _fmt(r.w_hat),
                        "" if r.w_true is None else _fmt(r.w_true),
                        "true" if r.converged else "false",
                    ]
                )
                + "\n"
            )


def read_records(path: str) -> list[SimRecord]:
    """Read back a records CSV written by :func:`write_records`."""
    records = []
    with open(path, newline="") as fh:
        header = fh.readline().strip()
        if header != CSV_HEADER:
            raise ValueError(f"unexpected header: {header!r}")
        for line in fh:
            parts = line.rstrip("\n").split(",")
            if len(parts) != 10:
                raise ValueError(f"malformed row: {line!r}")
            records.append(
                SimRecord(
                    p1=int(parts[0]),
                    p2=int(parts[1]),
                    nu=float(parts[2]),
                    n=int(parts[3]),
                    rep=int(parts[4]),
                    estimator=parts[5],
                    loss=float(parts[6]),
                    w_hat=None if parts[7] == "" else float(parts[7]),
                    w_true=None if parts[8] == "" else float(parts[8]),
                    converged=parts[9] == "true",
                )
            )
    return records
