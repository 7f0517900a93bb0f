"""Interval-local autoregressive models: fitting, simulation, scoring.

An AR(p) model predicts each value as a linear combination of its p past
values, with no intercept. ``coefficients[0]`` multiplies the value one step
back, ``coefficients[l-1]`` the value l steps back.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import errors

RIDGE_LAMBDA = 1e-8
# rank / conditioning cutoff for falling back to the ridge solve
_COND_MAX = 1e12


@dataclass(frozen=True)
class ARModel:
    lag: int
    coefficients: tuple[float, ...]
    noise_variance: float
    regularized: bool = False  # ridge fallback was needed during fitting

    def __post_init__(self):
        coeffs = tuple(float(c) for c in self.coefficients)
        object.__setattr__(self, "coefficients", coeffs)
        if len(coeffs) != self.lag:
            raise ValueError("coefficients length must equal lag")
        if not all(np.isfinite(coeffs)) or not np.isfinite(self.noise_variance):
            raise ValueError("coefficients and noise variance must be finite")
        if self.noise_variance < 0:
            raise ValueError("noise variance must be nonnegative")

    def to_json(self) -> dict:
        return {
            "lag": self.lag,
            "coefficients": list(self.coefficients),
            "noise_variance": self.noise_variance,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ARModel":
        return cls(
            lag=int(obj["lag"]),
            coefficients=tuple(float(c) for c in obj["coefficients"]),
            noise_variance=float(obj["noise_variance"]),
        )


def _design(values: np.ndarray, p: int) -> tuple[np.ndarray, np.ndarray]:
    """Lagged design matrix X (rows t = p..L-1) and target vector y."""
    L = len(values)
    y = values[p:]
    X = np.column_stack([values[p - l: L - l] for l in range(1, p + 1)])
    return X, y


def fit_ar(values, p: int) -> ARModel:
    """Least-squares AR(p) fit without intercept.

    Minimizes the sum of squared one-step errors over t = p+1..L. Rank
    deficient normal equations fall back to a ridge solve with a tiny
    diagonal bump; the returned model is then marked ``regularized``.
    """
    values = np.asarray(values, dtype=float)
    if p < 1:
        raise ValueError("lag must be >= 1")
    if len(values) < 2 * p + 1:
        raise errors.TooShort(
            f"need at least {2 * p + 1} values for an AR({p}) fit, got {len(values)}"
        )
    X, y = _design(values, p)
    XtX = X.T @ X
    Xty = X.T @ y
    regularized = False
    cond_ok = np.linalg.matrix_rank(XtX) == p and np.linalg.cond(XtX) < _COND_MAX
    if cond_ok:
        coeffs = np.linalg.solve(XtX, Xty)
    else:
        regularized = True
        try:
            coeffs = np.linalg.solve(XtX + RIDGE_LAMBDA * np.eye(p), Xty)
        except np.linalg.LinAlgError as exc:
            raise errors.SingularDesign(str(exc)) from exc
    resid = y - X @ coeffs
    noise_variance = float(resid @ resid) / (len(values) - p)
    return ARModel(
        lag=p,
        coefficients=tuple(float(c) for c in coeffs),
        noise_variance=noise_variance,
        regularized=regularized,
    )


def generate(model: ARModel, seed, horizon: int):
    """Roll the AR recursion forward ``horizon`` steps (noise-free).

    ``seed`` is ordered oldest to newest; generated values feed back into
    the recursion.
    """
    seed = np.asarray(seed, dtype=float)
    p = model.lag
    if len(seed) < p:
        raise errors.SeedTooShort(f"seed of length {len(seed)} < lag {p}")
    if horizon < 0:
        raise ValueError("horizon must be nonnegative")
    buf = list(seed[-p:]) if p > 0 else []
    w = model.coefficients
    out = []
    for _ in range(horizon):
        nxt = sum(w[l] * buf[-(l + 1)] for l in range(p))
        out.append(nxt)
        buf.append(nxt)
    return np.array(out, dtype=float)


def score(model: ARModel, segment) -> float:
    """Mean squared one-step-ahead error of the model on the segment.

    Predictions use the segment's true past values (no feedback).
    """
    segment = np.asarray(segment, dtype=float)
    p = model.lag
    if len(segment) <= p:
        raise errors.TooShort(f"segment of length {len(segment)} <= lag {p}")
    X, y = _design(segment, p)
    pred = X @ np.asarray(model.coefficients)
    err = y - pred
    return float(err @ err) / len(y)


def spectral_radius(coefficients) -> float:
    """Largest eigenvalue modulus of the AR companion matrix."""
    w = np.asarray(coefficients, dtype=float)
    p = len(w)
    if p == 1:
        return abs(float(w[0]))
    companion = np.zeros((p, p))
    companion[0, :] = w
    companion[1:, :-1] = np.eye(p - 1)
    return float(np.max(np.abs(np.linalg.eigvals(companion))))
