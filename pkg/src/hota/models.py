"""Model abstraction, the three built-in models, and dataset ingestion.

Each model binds a dataset and exposes its log-likelihood on the natural
parameter scale. Optimizers work on an unconstrained scale through the
per-coordinate transform attached to the model; everything reported to the
user (estimates, information matrices, priors) lives on the natural scale.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.special import expit, log_ndtr, logit

from .errors import DatasetError, ValidationError

_LOG_SQRT_2PI = 0.5 * np.log(2.0 * np.pi)

_DATA_DIR = Path(__file__).parent / "data"

# Built-in fixture names accepted by the CLI's --data flag.
FIXTURES = {
    "linkage-paper": ("linkage_paper.csv", "linkage"),
    "motorette": ("motorette.csv", "censreg"),
    "urine": ("urine.csv", "logistic"),
}

SCHEMA_COLUMNS = {
    "linkage": ("y1", "y2", "y3", "y4"),
    "censreg": ("time", "x", "censored"),
    "logistic": ("gravity", "ph", "osmo", "conduct", "urea", "calc", "y"),
}


class Transform:
    """Per-coordinate bijection between an unconstrained working scale
    and the natural scale. Kinds: identity, log, logit."""

    _KINDS = ("identity", "log", "logit")

    def __init__(self, kinds: tuple[str, ...]):
        for k in kinds:
            if k not in self._KINDS:
                raise ValidationError(f"unknown transform kind {k!r}")
        self.kinds = tuple(kinds)

    def __len__(self) -> int:
        return len(self.kinds)

    def to_working(self, natural: np.ndarray) -> np.ndarray:
        natural = np.asarray(natural, dtype=float)
        out = np.empty_like(natural)
        for i, k in enumerate(self.kinds):
            if k == "identity":
                out[i] = natural[i]
            elif k == "log":
                out[i] = np.log(natural[i])
            else:
                out[i] = logit(natural[i])
        return out

    def to_natural(self, working: np.ndarray) -> np.ndarray:
        working = np.asarray(working, dtype=float)
        out = np.empty_like(working)
        for i, k in enumerate(self.kinds):
            if k == "identity":
                out[i] = working[i]
            elif k == "log":
                out[i] = np.exp(working[i])
            else:
                out[i] = expit(working[i])
        return out

    def bounds(self, i: int) -> tuple[float, float]:
        """Natural-scale domain of coordinate i (open interval)."""
        k = self.kinds[i]
        if k == "identity":
            return (-np.inf, np.inf)
        if k == "log":
            return (0.0, np.inf)
        return (0.0, 1.0)

    def in_domain(self, natural: np.ndarray) -> bool:
        for i in range(len(self.kinds)):
            lo, hi = self.bounds(i)
            if not (lo < natural[i] < hi):
                return False
        return True


@dataclass(frozen=True, eq=False)
class ModelSpec:
    """A statistical model bound to a dataset.

    loglik and score take (and return gradients on) the natural scale.
    score is optional; finite differences are used when it is absent.
    """

    name: str
    dim: int
    param_names: tuple[str, ...]
    loglik: Callable[[np.ndarray], float]
    transform: Transform
    data_ref: object
    score: Callable[[np.ndarray], np.ndarray] | None = None
    start: np.ndarray | None = None
    supports_matching: bool = False

    def __post_init__(self):
        if len(self.param_names) != self.dim or len(self.transform) != self.dim:
            raise ValidationError("param_names/transform length must equal dim")

    def param_index(self, param: str | int) -> int:
        """Resolve a parameter name or integer index to a coordinate index."""
        if isinstance(param, int) or (isinstance(param, str) and param.lstrip("-").isdigit()):
            idx = int(param)
            if not 0 <= idx < self.dim:
                raise ValidationError(f"parameter index {idx} out of range for {self.name}")
            return idx
        try:
            return self.param_names.index(param)
        except ValueError:
            raise ValidationError(
                f"unknown parameter {param!r} for model {self.name}; "
                f"choose from {', '.join(self.param_names)}"
            ) from None


@dataclass(frozen=True)
class LinkageData:
    """Four multinomial cell counts."""

    counts: tuple[int, int, int, int]

    def __post_init__(self):
        if len(self.counts) != 4 or any(c < 0 for c in self.counts):
            raise DatasetError("linkage data needs 4 nonnegative counts")
        if self.n <= 0:
            raise DatasetError("linkage data has zero total count")

    @property
    def n(self) -> int:
        return int(sum(self.counts))


@dataclass(frozen=True)
class CensoredRegData:
    """Censored regression rows: (time_value, covariate, censored).

    time_value is the observed log10 failure time for uncensored rows and
    the log10 censoring point otherwise.
    """

    rows: tuple[tuple[float, float, bool], ...]

    def __post_init__(self):
        if self.m < 1:
            raise DatasetError("censored regression data needs at least one uncensored row")

    @property
    def m(self) -> int:
        return sum(1 for r in self.rows if not r[2])

    @cached_property
    def _arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        t = np.array([r[0] for r in self.rows])
        x = np.array([r[1] for r in self.rows])
        c = np.array([r[2] for r in self.rows], dtype=bool)
        return t[~c], x[~c], t[c], x[c]


@dataclass(frozen=True, eq=False)
class LogisticData:
    """Binary-response design: X is n x 7 with a leading column of ones."""

    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        y = np.asarray(self.y, dtype=float)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        if X.ndim != 2 or X.shape[1] != 7:
            raise DatasetError("logistic design matrix must be n x 7")
        if X.shape[0] != y.shape[0]:
            raise DatasetError("design and response lengths differ")
        if not np.all(X[:, 0] == 1.0):
            raise DatasetError("first design column must be all ones")
        if not np.all((y == 0.0) | (y == 1.0)):
            raise DatasetError("logistic response must be binary")

    @cached_property
    def _yx(self) -> np.ndarray:
        return self.y @ self.X


def loglik_linkage(theta: float, data: LinkageData) -> float:
    """Log-likelihood of the linkage cell-probability model, up to a constant.

    Cell probabilities are (1/2 + t/4, (1-t)/4, (1-t)/4, t/4); all terms not
    involving t are dropped.
    """
    if not 0.0 < theta < 1.0:
        raise ValidationError(f"theta={theta} outside (0, 1)")
    y1, y2, y3, y4 = data.counts
    out = y1 * np.log(2.0 + theta)
    if y2 + y3:
        out += (y2 + y3) * np.log1p(-theta)
    if y4:
        out += y4 * np.log(theta)
    return float(out)


def score_linkage(theta: float, data: LinkageData) -> float:
    if not 0.0 < theta < 1.0:
        raise ValidationError(f"theta={theta} outside (0, 1)")
    y1, y2, y3, y4 = data.counts
    return y1 / (2.0 + theta) - (y2 + y3) / (1.0 - theta) + y4 / theta


def loglik_censreg(theta: np.ndarray, data: CensoredRegData) -> float:
    """Censored normal regression on the log10-time scale.

    theta = (beta0, beta1, tau) with sigma = exp(tau). Censored rows
    contribute log survival probabilities, evaluated through the stable
    log normal-CDF (never log(1 - Phi) directly).
    """
    b0, b1, tau = theta
    if tau < -500.0:
        # exp(-tau) would overflow; the squared-residual term already
        # dominates at far smaller scales unless the fit is exact
        return -np.inf
    y_u, x_u, u_c, x_c = data._arrays
    inv_sigma = np.exp(-tau)
    resid = (y_u - b0 - b1 * x_u) * inv_sigma
    out = -data.m * tau - 0.5 * np.dot(resid, resid)
    if u_c.size:
        z = (u_c - b0 - b1 * x_c) * inv_sigma
        out += np.sum(log_ndtr(-z))
    return float(out)


def score_censreg(theta: np.ndarray, data: CensoredRegData) -> np.ndarray:
    b0, b1, tau = theta
    if tau < -500.0:
        # matches the loglik guard; only the climb-back direction matters here
        return np.array([0.0, 0.0, float(data.m)])
    y_u, x_u, u_c, x_c = data._arrays
    inv_sigma = np.exp(-tau)
    z_u = (y_u - b0 - b1 * x_u) * inv_sigma
    g0 = np.sum(z_u) * inv_sigma
    g1 = np.sum(z_u * x_u) * inv_sigma
    gt = -data.m + np.dot(z_u, z_u)
    if u_c.size:
        z = (u_c - b0 - b1 * x_c) * inv_sigma
        # hazard of the standard normal at z, computed on the log scale
        haz = np.exp(-0.5 * z * z - _LOG_SQRT_2PI - log_ndtr(-z))
        g0 += np.sum(haz) * inv_sigma
        g1 += np.sum(haz * x_c) * inv_sigma
        gt += np.dot(haz, z)
    return np.array([g0, g1, gt])


def loglik_logistic(beta: np.ndarray, data: LogisticData) -> float:
    """Bernoulli log-likelihood with logit link; log(1+exp) is overflow-safe."""
    eta = data.X @ np.asarray(beta, dtype=float)
    return float(data._yx @ beta - np.sum(np.logaddexp(0.0, eta)))


def score_logistic(beta: np.ndarray, data: LogisticData) -> np.ndarray:
    eta = data.X @ np.asarray(beta, dtype=float)
    return data.X.T @ (data.y - expit(eta))


def linkage_model(data: LinkageData) -> ModelSpec:
    return ModelSpec(
        name="linkage",
        dim=1,
        param_names=("theta",),
        loglik=lambda th: loglik_linkage(float(th[0]), data),
        transform=Transform(("logit",)),
        data_ref=data,
        score=lambda th: np.array([score_linkage(float(th[0]), data)]),
        start=np.array([0.5]),
    )


def censreg_model(data: CensoredRegData) -> ModelSpec:
    y_u, x_u, _, _ = data._arrays
    if y_u.size >= 2 and np.ptp(x_u) > 0:
        b1, b0 = np.polyfit(x_u, y_u, 1)
        resid_sd = max(float(np.std(y_u - b0 - b1 * x_u)), 1e-2)
    else:
        b0, b1, resid_sd = float(np.mean(y_u)), 0.0, 1.0
    return ModelSpec(
        name="censreg",
        dim=3,
        param_names=("beta0", "beta1", "tau"),
        loglik=lambda th: loglik_censreg(th, data),
        transform=Transform(("identity", "identity", "identity")),
        data_ref=data,
        score=lambda th: score_censreg(th, data),
        start=np.array([b0, b1, np.log(resid_sd)]),
    )


def logistic_model(data: LogisticData) -> ModelSpec:
    return ModelSpec(
        name="logistic",
        dim=7,
        param_names=tuple(f"beta{i}" for i in range(7)),
        loglik=lambda b: loglik_logistic(b, data),
        transform=Transform(("identity",) * 7),
        data_ref=data,
        score=lambda b: score_logistic(b, data),
        start=np.zeros(7),
        supports_matching=True,
    )


_BUILDERS = {"linkage": linkage_model, "censreg": censreg_model, "logistic": logistic_model}


def build_model(schema: str, data) -> ModelSpec:
    try:
        return _BUILDERS[schema](data)
    except KeyError:
        raise ValidationError(f"unknown model {schema!r}") from None


def _parse_rows(path: Path, expected: tuple[str, ...]) -> list[tuple[int, list[str]]]:
    try:
        with open(path, newline="") as fh:
            rows = [
                (lineno, [c.strip() for c in row])
                for lineno, row in enumerate(csv.reader(fh), start=1)
                if row and any(c.strip() for c in row)
            ]
    except OSError as exc:
        raise DatasetError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise DatasetError(f"{path}: empty file")
    if rows[0][1][0].startswith("#"):
        rows = rows[1:]
        if not rows:
            raise DatasetError(f"{path}: empty file")
    header_line, header = rows[0]
    if tuple(h.lower() for h in header) != expected:
        raise DatasetError(
            f"{path}:{header_line}: expected header {','.join(expected)}, got {','.join(header)}"
        )
    return rows[1:]


def _cell_float(path: Path, lineno: int, name: str, value: str) -> float:
    try:
        return float(value)
    except ValueError:
        raise DatasetError(f"{path}:{lineno}: column {name!r} is not a number: {value!r}") from None


def load_dataset(path: str | Path, schema: str):
    """Parse and validate a CSV dataset (see SCHEMA_COLUMNS for layouts)."""
    if schema not in SCHEMA_COLUMNS:
        raise ValidationError(f"unknown schema {schema!r}")
    path = Path(path)
    cols = SCHEMA_COLUMNS[schema]
    rows = _parse_rows(path, cols)
    if not rows:
        raise DatasetError(f"{path}: no data rows")
    for lineno, row in rows:
        if len(row) != len(cols):
            raise DatasetError(f"{path}:{lineno}: expected {len(cols)} columns, got {len(row)}")

    if schema == "linkage":
        if len(rows) != 1:
            raise DatasetError(f"{path}: linkage data must have exactly one row")
        lineno, row = rows[0]
        counts = []
        for name, cell in zip(cols, row):
            v = _cell_float(path, lineno, name, cell)
            if v < 0 or v != int(v):
                raise DatasetError(f"{path}:{lineno}: count {name!r} must be a nonnegative integer")
            counts.append(int(v))
        return LinkageData(counts=tuple(counts))

    if schema == "censreg":
        parsed = []
        for lineno, row in rows:
            t = _cell_float(path, lineno, "time", row[0])
            x = _cell_float(path, lineno, "x", row[1])
            if row[2] not in ("0", "1"):
                raise DatasetError(f"{path}:{lineno}: censored flag must be 0 or 1")
            parsed.append((t, x, row[2] == "1"))
        if all(c for _, _, c in parsed):
            raise DatasetError(f"{path}: every row is censored (m=0)")
        return CensoredRegData(rows=tuple(parsed))

    # logistic
    X = np.ones((len(rows), 7))
    y = np.empty(len(rows))
    for i, (lineno, row) in enumerate(rows):
        for j, name in enumerate(cols[:-1]):
            X[i, j + 1] = _cell_float(path, lineno, name, row[j])
        if row[-1] not in ("0", "1"):
            raise DatasetError(f"{path}:{lineno}: response y must be 0 or 1")
        y[i] = float(row[-1])
    return LogisticData(X=X, y=y)


def resolve_dataset(name_or_path: str, schema: str):
    """Load a built-in fixture by name, or any CSV by path."""
    if name_or_path in FIXTURES:
        filename, fixture_schema = FIXTURES[name_or_path]
        if fixture_schema != schema:
            raise ValidationError(
                f"fixture {name_or_path!r} holds {fixture_schema} data, not {schema}"
            )
        path = _DATA_DIR / filename
        if not path.exists():
            raise DatasetError(
                f"fixture {name_or_path!r} is not bundled with this package "
                f"(the source data are not redistributable here); supply a CSV with "
                f"columns {','.join(SCHEMA_COLUMNS[schema])} via --data <path>"
            )
        return load_dataset(path, schema)
    return load_dataset(name_or_path, schema)
