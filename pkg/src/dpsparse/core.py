"""Domain types, feature clipping, ball projection, data splitting and metrics.

Everything here is a pure function over immutable inputs. Dataset arrays are
copied on construction and marked read-only so values can be shared freely
across workers.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import CsvParseError, InvalidConfigError, InvalidInputError

# Norms within this tolerance of the radius count as inside the ball, so that
# repeated projections do not churn on floating-point rounding.
PROJECTION_TOL = 1e-12


@dataclass(frozen=True)
class Sample:
    """One observation: a feature vector and its scalar response."""

    features: np.ndarray
    response: float


@dataclass(frozen=True)
class Dataset:
    """n samples of (feature vector in R^d, response).

    ``x`` has shape (n, d), ``y`` shape (n,). Arrays are copied to float64,
    validated to be finite, and frozen (read-only).
    """

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.ascontiguousarray(self.x, dtype=np.float64)
        y = np.ascontiguousarray(self.y, dtype=np.float64)
        if x.ndim != 2:
            raise InvalidInputError(f"features must be 2-d, got shape {x.shape}")
        if y.ndim != 1 or y.shape[0] != x.shape[0]:
            raise InvalidInputError(
                f"responses must be 1-d with length {x.shape[0]}, got shape {y.shape}"
            )
        if x.shape[0] < 1 or x.shape[1] < 1:
            raise InvalidInputError("dataset needs n >= 1 and d >= 1")
        if not np.isfinite(x).all() or not np.isfinite(y).all():
            raise InvalidInputError("dataset contains non-finite entries")
        if x is self.x:
            x = x.copy()
        if y is self.y:
            y = y.copy()
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def d(self) -> int:
        return self.x.shape[1]

    def sample(self, i: int) -> Sample:
        return Sample(features=self.x[i], response=float(self.y[i]))

    @property
    def samples(self) -> list[Sample]:
        return [self.sample(i) for i in range(self.n)]


@dataclass(frozen=True)
class PrivacyParams:
    """(epsilon, delta) budget; ``epsilon=None`` is the non-private sentinel.

    In non-private mode every noise draw is forced to exactly 0.
    """

    epsilon: float | None
    delta: float

    def __post_init__(self):
        if self.epsilon is not None and not self.epsilon > 0:
            raise InvalidConfigError(f"epsilon must be > 0, got {self.epsilon}")
        if not (0.0 < self.delta < 1.0):
            raise InvalidConfigError(f"delta must lie in (0, 1), got {self.delta}")

    @property
    def is_private(self) -> bool:
        return self.epsilon is not None

    @classmethod
    def non_private(cls, delta: float = 0.5) -> "PrivacyParams":
        return cls(epsilon=None, delta=delta)


@dataclass(frozen=True)
class ConstantStep:
    """Constant step size eta for every iteration."""

    eta: float

    def __post_init__(self):
        if not self.eta > 0:
            raise InvalidConfigError(f"eta must be > 0, got {self.eta}")

    def step(self, t: int) -> float:
        return self.eta


@dataclass(frozen=True)
class TwoPhaseStep:
    """Geometrically decaying step, then a constant step.

    step(t) = (1 - decay)^t * eta0 for t < switch_iter, eta_const afterwards.
    """

    eta0: float
    decay: float
    switch_iter: int
    eta_const: float

    def __post_init__(self):
        if not self.eta0 > 0:
            raise InvalidConfigError(f"eta0 must be > 0, got {self.eta0}")
        if not (0.0 < self.decay < 1.0):
            raise InvalidConfigError(f"decay must lie in (0, 1), got {self.decay}")
        if self.switch_iter < 0:
            raise InvalidConfigError(f"switch_iter must be >= 0, got {self.switch_iter}")
        if not self.eta_const > 0:
            raise InvalidConfigError(f"eta_const must be > 0, got {self.eta_const}")

    def step(self, t: int) -> float:
        if t < self.switch_iter:
            return self.eta0 * (1.0 - self.decay) ** t
        return self.eta_const


StepSchedule = ConstantStep | TwoPhaseStep


@dataclass(frozen=True)
class EstimatorConfig:
    """Knobs shared by every iterative-hard-thresholding estimator.

    ``K=None`` disables feature clipping (allowed only without privacy).
    ``tau`` is consulted by the Huber estimators only; ``response_clip`` by
    the squared-loss baseline only.
    """

    s: int
    T: int
    K: float | None
    L: float
    schedule: StepSchedule
    tau: float | None = None
    response_clip: float | None = None
    sign_on_clipped: bool = False
    seed: int = 0

    def __post_init__(self):
        problems = []
        if self.s < 1:
            problems.append(f"s must be >= 1, got {self.s}")
        if self.T < 1:
            problems.append(f"T must be >= 1, got {self.T}")
        if self.K is not None and not self.K > 0:
            problems.append(f"K must be > 0 or None, got {self.K}")
        if not self.L > 0:
            problems.append(f"L must be > 0, got {self.L}")
        if self.tau is not None and not self.tau > 0:
            problems.append(f"tau must be > 0, got {self.tau}")
        if self.response_clip is not None and not self.response_clip >= 0:
            problems.append(f"response_clip must be >= 0, got {self.response_clip}")
        if problems:
            raise InvalidConfigError("; ".join(problems))


@dataclass(frozen=True)
class Estimate:
    """Fitted coefficient vector with its support and optional error trace.

    ``trace`` holds per-iteration l2 errors and is populated only when a
    reference coefficient vector was supplied to the fit.
    """

    beta: np.ndarray
    support: np.ndarray
    trace: list[float] | None = field(default=None)

    def __post_init__(self):
        beta = np.asarray(self.beta, dtype=np.float64)
        support = np.asarray(np.sort(np.asarray(self.support, dtype=np.int64)))
        beta = beta.copy()
        beta.setflags(write=False)
        support.setflags(write=False)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "support", support)


def clip_features(x: np.ndarray, K: float) -> np.ndarray:
    """Truncate each entry to [-K, K], preserving sign.

    out[j] = sign(x[j]) * min(|x[j]|, K). Accepts vectors or matrices.
    """
    if not K > 0:
        raise InvalidInputError(f"clip level K must be > 0, got {K}")
    x = np.asarray(x, dtype=np.float64)
    if not np.isfinite(x).all():
        raise InvalidInputError("clip_features requires finite input")
    return np.clip(x, -K, K)


def project_l2(v: np.ndarray, L: float) -> np.ndarray:
    """Project onto the l2 ball of radius L; interior points pass through."""
    if not L > 0:
        raise InvalidInputError(f"radius L must be > 0, got {L}")
    v = np.asarray(v, dtype=np.float64)
    if not np.isfinite(v).all():
        raise InvalidInputError("project_l2 requires finite input")
    peak = float(np.max(np.abs(v))) if v.size else 0.0
    if peak == 0.0:
        return v
    # normalize by the peak so the squared sum cannot overflow
    unit = v / peak
    unit_norm = float(np.linalg.norm(unit))
    if peak * unit_norm <= L + PROJECTION_TOL:
        return v
    return unit * (L / unit_norm)


def split_folds(ds: Dataset, T: int) -> list[Dataset]:
    """Split into T disjoint folds of size floor(n/T), in original order.

    The trailing n mod T samples are discarded so every fold has the same
    size (that keeps the per-fold sensitivity uniform across iterations).
    """
    if T < 1 or T > ds.n:
        raise InvalidConfigError(f"fold count T={T} must satisfy 1 <= T <= n={ds.n}")
    m = ds.n // T
    return [Dataset(ds.x[t * m : (t + 1) * m], ds.y[t * m : (t + 1) * m]) for t in range(T)]


def l2_error(beta_hat: np.ndarray, beta_star: np.ndarray) -> float:
    """Euclidean norm of the difference between two coefficient vectors."""
    beta_hat = np.asarray(beta_hat, dtype=np.float64)
    beta_star = np.asarray(beta_star, dtype=np.float64)
    if beta_hat.shape != beta_star.shape:
        raise InvalidInputError(
            f"length mismatch: {beta_hat.shape} vs {beta_star.shape}"
        )
    return float(np.linalg.norm(beta_hat - beta_star))


def mae(predictions: np.ndarray, responses: np.ndarray) -> float:
    """Mean absolute residual between predictions and responses."""
    predictions = np.asarray(predictions, dtype=np.float64)
    responses = np.asarray(responses, dtype=np.float64)
    if predictions.shape != responses.shape:
        raise InvalidInputError(
            f"length mismatch: {predictions.shape} vs {responses.shape}"
        )
    if predictions.size == 0:
        raise InvalidInputError("mae requires nonempty input")
    return float(np.mean(np.abs(predictions - responses)))


def save_csv(ds: Dataset, path, feature_names: list[str] | None = None) -> None:
    """Write a dataset as CSV with header ``x1..xd,y``."""
    if feature_names is None:
        feature_names = [f"x{j + 1}" for j in range(ds.d)]
    if len(feature_names) != ds.d:
        raise InvalidInputError("feature_names length must equal d")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(list(feature_names) + ["y"])
        for i in range(ds.n):
            writer.writerow([repr(float(v)) for v in ds.x[i]] + [repr(float(ds.y[i]))])


def load_csv(path, response_col: str = "y") -> tuple[Dataset, list[str]]:
    """Read a dataset CSV (one header row, columns ``x1..xd`` plus response).

    Returns the dataset and the feature column names. Malformed rows raise
    CsvParseError carrying the 1-based line number; missing values are not
    permitted.
    """
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CsvParseError("empty CSV file", line=1) from None
        header = [h.strip() for h in header]
        if response_col not in header:
            raise CsvParseError(f"response column {response_col!r} not in header", line=1)
        resp_idx = header.index(response_col)
        feature_names = [h for j, h in enumerate(header) if j != resp_idx]
        rows_x: list[list[float]] = []
        rows_y: list[float] = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise CsvParseError(
                    f"expected {len(header)} fields, got {len(row)}", line=lineno
                )
            try:
                vals = [float(v) for v in row]
            except ValueError as exc:
                raise CsvParseError(f"non-numeric value: {exc}", line=lineno) from None
            rows_y.append(vals.pop(resp_idx))
            rows_x.append(vals)
    if not rows_x:
        raise CsvParseError("CSV has a header but no data rows", line=2)
    return Dataset(np.array(rows_x), np.array(rows_y)), feature_names
