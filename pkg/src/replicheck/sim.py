"""Synthetic GRBD data, a within-batch permutation test and Monte Carlo calibration.

Random numbers come from numpy's PCG64 bit generator seeded through
``SeedSequence``. Simulation replicate ``i`` of a study seeded with ``s``
draws from ``SeedSequence(s, spawn_key=(i,))``, so results do not depend
on execution order or on how replicates are split across workers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .anova import grbd_anova
from .domain import Dataset, Observation
from .errors import ConfigurationError, DegenerateDataError
from .linmodel import INTERACTION, TREATMENT, SequentialProjector, encode_columns

STATISTICS = ("eq1_treatment", "interaction")


@dataclass(frozen=True)
class SimParams:
    t: int
    b: int
    r: int
    treatment_effects: tuple[float, ...] | None = None
    batch_effects: tuple[float, ...] | None = None
    interaction_sd: float = 0.0
    sigma: float = 1.0
    seed: int = 0

    def __post_init__(self):
        for name in ("t", "b", "r"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise ConfigurationError(f"{name} must be a positive integer, got {value!r}")
        if self.t < 2 or self.b < 2:
            raise ConfigurationError("need t >= 2 and b >= 2")
        tau = (0.0,) * self.t if self.treatment_effects is None else tuple(map(float, self.treatment_effects))
        beta = (0.0,) * self.b if self.batch_effects is None else tuple(map(float, self.batch_effects))
        if len(tau) != self.t:
            raise ConfigurationError(f"expected {self.t} treatment effects, got {len(tau)}")
        if len(beta) != self.b:
            raise ConfigurationError(f"expected {self.b} batch effects, got {len(beta)}")
        if not self.sigma > 0:
            raise ConfigurationError(f"sigma must be > 0, got {self.sigma}")
        if self.interaction_sd < 0:
            raise ConfigurationError(f"interaction_sd must be >= 0, got {self.interaction_sd}")
        object.__setattr__(self, "treatment_effects", tau)
        object.__setattr__(self, "batch_effects", beta)


def replicate_rng(seed: int, index: int | None = None) -> np.random.Generator:
    ss = np.random.SeedSequence(seed) if index is None else np.random.SeedSequence(seed, spawn_key=(index,))
    return np.random.Generator(np.random.PCG64(ss))


def _labels(prefix: str, k: int) -> list[str]:
    width = len(str(k))
    return [f"{prefix}{i + 1:0{width}d}" for i in range(k)]


def _layout(params: SimParams):
    treatments = _labels("T", params.t)
    batches = _labels("B", params.b)
    tr = [treatments[i] for i in range(params.t) for j in range(params.b) for _ in range(params.r)]
    bt = [batches[j] for i in range(params.t) for j in range(params.b) for _ in range(params.r)]
    return tr, bt


def _draw(params: SimParams, rng: np.random.Generator) -> np.ndarray:
    tau = np.asarray(params.treatment_effects)
    beta = np.asarray(params.batch_effects)
    inter = rng.normal(0.0, params.interaction_sd, size=(params.t, params.b)) if params.interaction_sd > 0 \
        else np.zeros((params.t, params.b))
    cell_mean = tau[:, None] + beta[None, :] + inter
    noise = rng.normal(0.0, params.sigma, size=(params.t, params.b, params.r))
    return (cell_mean[:, :, None] + noise).ravel()


def _dataset(params: SimParams, y: np.ndarray, name: str) -> Dataset:
    tr, bt = _layout(params)
    return Dataset(tuple(Observation(float(v), a, c) for v, a, c in zip(y, tr, bt)), name=name)


def generate_grbd(params: SimParams) -> Dataset:
    """Balanced dataset with ``r`` replicates per cell, reproducible per seed.

    Outcome = treatment effect + batch effect + cell interaction + noise,
    where interactions are drawn once per cell from Normal(0, interaction_sd).
    Treatment labels are ``T1..Tt`` and batches ``B1..Bb`` (zero-padded).
    """
    y = _draw(params, replicate_rng(params.seed))
    return _dataset(params, y, f"simulated(seed={params.seed})")


def _f_stats(proj: SequentialProjector, ymat: np.ndarray, statistic: str) -> np.ndarray:
    term_ss, err_ss, _ = proj.ss(ymat)
    df_err = proj.n - proj.rank
    term = TREATMENT if statistic == "eq1_treatment" else INTERACTION
    num = term_ss[term] / proj.df(term)
    den = err_ss / df_err
    with np.errstate(divide="ignore", invalid="ignore"):
        return num / den


def permutation_pvalue(dataset: Dataset, statistic: str = "eq1_treatment", n_perm: int = 9999,
                       seed: int = 0, chunk: int = 2000) -> float:
    """Monte Carlo permutation p-value with treatment labels shuffled within batches.

    Shuffling labels within a batch is the same as shuffling outcomes among
    that batch's rows, which keeps the design matrix (and its QR) fixed.
    ``p = (1 + #{F_perm >= F_obs}) / (n_perm + 1)``; a degenerate observed
    statistic (no within-cell variation) gives ``p = 1``.
    """
    if statistic not in STATISTICS:
        raise ConfigurationError(f"statistic must be one of {STATISTICS}, got {statistic!r}")
    if int(n_perm) != n_perm or n_perm < 99:
        raise ConfigurationError(f"n_perm must be an integer >= 99, got {n_perm!r}")
    y, tr, bt = dataset.columns()
    y = np.asarray(y, dtype=float)
    proj = SequentialProjector.from_design(encode_columns(tr, bt))
    if statistic == "interaction" and proj.df(INTERACTION) == 0:
        raise ConfigurationError("interaction statistic needs a fully crossed design")

    f_obs = float(_f_stats(proj, y[:, None], statistic)[0])
    if not math.isfinite(f_obs):
        return 1.0

    rng = replicate_rng(seed)
    bt_arr = np.asarray(bt, dtype=object)
    blocks = [np.flatnonzero(bt_arr == lev) for lev in sorted(set(bt))]
    # tolerate round-off so that permutations reproducing the observed F count
    threshold = f_obs * (1.0 - 1e-9)
    hits = 0
    done = 0
    while done < n_perm:
        k = min(chunk, n_perm - done)
        # one uniform row per permutation keeps the stream independent of chunk size
        keys = rng.random((k, y.size))
        ymat = np.empty((y.size, k))
        for idx in blocks:
            order = np.argsort(keys[:, idx], axis=1)
            ymat[idx, :] = y[idx][order].T
        f_perm = _f_stats(proj, ymat, statistic)
        hits += int(np.count_nonzero(f_perm >= threshold))
        done += k
    return (1 + hits) / (n_perm + 1)


@dataclass(frozen=True)
class CalibrationResult:
    n_sims: int
    alpha: float
    rejection_rate_eq1: float
    rejection_rate_eq2: float
    rejection_rate_interaction: float

    @staticmethod
    def _se(rate: float, n: int) -> float:
        return math.sqrt(rate * (1.0 - rate) / n)

    @property
    def monte_carlo_se(self) -> dict[str, float]:
        return {
            "eq1": self._se(self.rejection_rate_eq1, self.n_sims),
            "eq2": self._se(self.rejection_rate_eq2, self.n_sims),
            "interaction": self._se(self.rejection_rate_interaction, self.n_sims),
        }


def _simulate_one(params: SimParams, index: int, alpha: float) -> tuple[bool, bool, bool]:
    y = _draw(params, replicate_rng(params.seed, index))
    try:
        table = grbd_anova(_dataset(params, y, f"sim{index}"))
    except DegenerateDataError:
        return False, False, False
    trt = table[TREATMENT]
    inter = table[INTERACTION]

    def rej(p):
        return p is not None and p < alpha

    return rej(trt.p_error), rej(trt.p_interaction_denom), rej(inter.p_error)


def calibration_study(params: SimParams, n_sims: int = 2000, alpha: float = 0.05,
                      n_jobs: int | None = None) -> CalibrationResult:
    """Rejection rates of the three GRBD tests over simulated datasets.

    ``n_jobs`` > 1 spreads replicates over worker processes (joblib); the
    result is identical for any value.
    """
    if int(n_sims) != n_sims or n_sims < 100:
        raise ConfigurationError(f"n_sims must be an integer >= 100, got {n_sims!r}")
    if not 0 < alpha < 1:
        raise ConfigurationError(f"alpha must lie in (0, 1), got {alpha}")
    if n_jobs is not None and n_jobs != 1:
        from joblib import Parallel, delayed

        outcomes = Parallel(n_jobs=n_jobs)(
            delayed(_simulate_one)(params, i, alpha) for i in range(n_sims))
    else:
        outcomes = [_simulate_one(params, i, alpha) for i in range(n_sims)]
    arr = np.asarray(outcomes, dtype=float)
    eq1, eq2, inter = arr.mean(axis=0)
    return CalibrationResult(int(n_sims), float(alpha), float(eq1), float(eq2), float(inter))


def simulate_many(params: SimParams, n: int) -> list[Dataset]:
    """Independent datasets from replicate sub-streams 0..n-1 of ``params.seed``."""
    return [_dataset(params, _draw(params, replicate_rng(params.seed, i)), f"sim{i}") for i in range(n)]


def null_params(t: int = 2, b: int = 3, r: int = 10, sigma: float = 1.0, seed: int = 0) -> SimParams:
    return SimParams(t, b, r, sigma=sigma, seed=seed)

