"""Synthetic co-evolving series with known shared AR regimes and switch
schedules; the ground-truth harness for validating the pipeline."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import errors
from .armodel import ARModel, score, spectral_radius
from .data import SeriesSet, TimeGrid, slice_segment
from .identify import AssignmentMatrix, ModelLibrary

MAX_DRAW_ATTEMPTS = 10_000
MIN_COEFF_SEPARATION = 0.3
# unit-noise stationary variance window: high enough that a matching model's
# one-step error is a small fraction of the segment variance, capped so
# empirical segment variances stay concentrated
_MIN_VAR_RATIO = 12.0
_MAX_VAR_RATIO = 80.0
# a mismatched model's expected excess error, as a fraction of the process
# variance; keeps regimes distinguishable at realistic segment lengths
_MIN_CROSS_EXCESS = 0.4


@dataclass(frozen=True)
class SynthSpec:
    n: int
    regime_models: tuple[ARModel, ...]
    schedule: np.ndarray  # (n, m) regime indices
    noise_std: float
    seed: int
    grid: TimeGrid  # non-overlapping: stride == interval_length
    init_values: Optional[np.ndarray] = None  # (n, p) explicit first values

    def __post_init__(self):
        object.__setattr__(self, "schedule", np.asarray(self.schedule, dtype=int))
        if self.grid.stride != self.grid.interval_length:
            raise ValueError("generation grid must be non-overlapping (stride == L)")
        if self.schedule.shape != (self.n, self.grid.interval_count):
            raise ValueError("schedule must be n x m")
        if self.schedule.min() < 0 or self.schedule.max() >= len(self.regime_models):
            raise ValueError("schedule entries must index regime_models")


def stationary_autocov(coefficients, max_lag: int) -> np.ndarray:
    """Autocovariances gamma_0..gamma_max_lag of the stationary AR process
    with unit noise variance, via the Yule-Walker linear system."""
    w = np.asarray(coefficients, dtype=float)
    p = len(w)
    size = max(max_lag, p) + 1
    A = np.zeros((size, size))
    rhs = np.zeros(size)
    rhs[0] = 1.0
    for k in range(size):
        A[k, k] += 1.0
        for l in range(1, p + 1):
            A[k, abs(k - l)] -= w[l - 1]
    gamma = np.linalg.solve(A, rhs)
    return gamma[: max_lag + 1]


def _check_stable(model: ARModel) -> None:
    radius = spectral_radius(model.coefficients)
    if radius >= 1.0:
        raise errors.UnstableModel(radius)


def generate_set(spec: SynthSpec) -> tuple[SeriesSet, ModelLibrary, AssignmentMatrix]:
    """Generate the series plus the ground-truth library and assignments.

    Each series is one continuous recursion whose coefficients switch at
    interval boundaries per the schedule; per-series RNG streams are derived
    from (seed, series index) so generation is reproducible and order free.
    """
    for model in spec.regime_models:
        _check_stable(model)
    grid = spec.grid
    L, m = grid.interval_length, grid.interval_count
    N = grid.series_length
    p_max = max(mdl.lag for mdl in spec.regime_models)
    values = np.zeros((spec.n, N))
    for i in range(spec.n):
        rng = np.random.default_rng([spec.seed, i])
        if spec.init_values is not None:
            init = np.asarray(spec.init_values[i], dtype=float)
        else:
            scale = spec.noise_std if spec.noise_std > 0 else 1.0
            init = rng.normal(0.0, scale, size=p_max)
        values[i, : len(init)] = init
        noise = (
            rng.normal(0.0, spec.noise_std, size=N)
            if spec.noise_std > 0
            else np.zeros(N)
        )
        for t in range(len(init), N):
            model = spec.regime_models[spec.schedule[i, t // L]]
            w = model.coefficients
            values[i, t] = (
                sum(w[l] * values[i, t - l - 1] for l in range(model.lag)) + noise[t]
            )
    sset = SeriesSet(
        series_ids=tuple(f"S{i + 1}" for i in range(spec.n)), values=values
    )
    library = ModelLibrary(
        models=list(spec.regime_models),
        birth_intervals=[1] * len(spec.regime_models),
    )
    fit_errors = np.zeros((spec.n, m))
    for i in range(spec.n):
        for j in range(1, m + 1):
            seg = slice_segment(sset, grid, i, j).values
            fit_errors[i, j - 1] = score(spec.regime_models[spec.schedule[i, j - 1]], seg)
    truth = AssignmentMatrix(
        entries=spec.schedule,
        fit_errors=fit_errors,
        eps_bounds=np.full((spec.n, m), np.inf),
    )
    return sset, library, truth


def _draw_stable_coeffs(rng: np.random.Generator, p: int) -> np.ndarray:
    """Coefficients whose characteristic roots have modulus in a persistent
    band; complex roots come in conjugate pairs."""
    roots: list[complex] = []
    remaining = p
    if remaining % 2 == 1:
        r = rng.uniform(0.88, 0.96)
        roots.append(r * (1 if rng.random() < 0.5 else -1))
        remaining -= 1
    while remaining > 0:
        r = rng.uniform(0.85, 0.95)
        theta = rng.uniform(0.25, np.pi - 0.25)
        roots.extend([r * np.exp(1j * theta), r * np.exp(-1j * theta)])
        remaining -= 2
    poly = np.real(np.poly(roots))
    return -poly[1:]


def _distinguishable(coeff_list: list[np.ndarray]) -> bool:
    p = len(coeff_list[0])
    gammas = [stationary_autocov(w, p) for w in coeff_list]
    for g in gammas:
        if not (_MIN_VAR_RATIO <= g[0] <= _MAX_VAR_RATIO):
            return False
    for a, wa in enumerate(coeff_list):
        for b, wb in enumerate(coeff_list):
            if a == b:
                continue
            if float(np.linalg.norm(wa - wb)) < MIN_COEFF_SEPARATION:
                return False
            g = gammas[b]
            Gamma = np.array([[g[abs(r - c)] for c in range(p)] for r in range(p)])
            delta = wa - wb
            if float(delta @ Gamma @ delta) < _MIN_CROSS_EXCESS * g[0]:
                return False
    return True


def random_spec(
    n: int,
    K: int,
    p: int,
    m: int,
    L: int,
    noise_std: float,
    seed: int,
) -> SynthSpec:
    """Draw K distinguishable stable regimes and a schedule where every
    series holds a regime for at least two consecutive intervals and every
    regime is used somewhere."""
    if K < 1:
        raise ValueError("K must be >= 1")
    rng = np.random.default_rng(seed)
    coeffs: list[np.ndarray] = []
    for _ in range(MAX_DRAW_ATTEMPTS):
        candidate = _draw_stable_coeffs(rng, p)
        if spectral_radius(candidate) >= 1.0:
            continue
        if _distinguishable(coeffs + [candidate]):
            coeffs.append(candidate)
            if len(coeffs) == K:
                break
    else:
        raise errors.GenerationFailure(
            f"could not draw {K} distinguishable stable regimes in "
            f"{MAX_DRAW_ATTEMPTS} attempts"
        )
    if len(coeffs) < K:
        raise errors.GenerationFailure(
            f"only drew {len(coeffs)} of {K} regimes in {MAX_DRAW_ATTEMPTS} attempts"
        )
    models = tuple(
        ARModel(lag=p, coefficients=tuple(w), noise_variance=noise_std**2)
        for w in coeffs
    )
    schedule = np.zeros((n, m), dtype=int)
    for _ in range(MAX_DRAW_ATTEMPTS):
        for i in range(n):
            t = 0
            while t < m:
                regime = int(rng.integers(K))
                run = int(rng.integers(2, m + 1))
                if m - (t + run) == 1:  # never leave a trailing run of 1
                    run += 1
                schedule[i, t: t + run] = regime
                t += run
        if len(np.unique(schedule)) == K:
            break
    else:
        raise errors.GenerationFailure("schedule never covered all regimes")
    grid = TimeGrid(
        interval_length=L, stride=L, interval_count=m, series_length=m * L
    )
    return SynthSpec(
        n=n,
        regime_models=models,
        schedule=schedule,
        noise_std=noise_std,
        seed=seed,
        grid=grid,
    )
