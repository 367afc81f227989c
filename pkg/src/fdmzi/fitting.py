"""Least-squares fits of conversion curves and background-rate polynomials."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

LAMBDA0 = 1e-3
LAMBDA_UP = 10.0
LAMBDA_DOWN = 0.5
MAX_ITER = 200
A_MAX = 1.05
N_STARTS = 16
RATE_GRID = (1e-4, 1.0)


class DataError(ValueError):
    """Malformed or insufficient data series."""


@dataclass(frozen=True)
class DataSeries:
    x: np.ndarray
    y: np.ndarray
    weight: np.ndarray | None = None

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float).ravel()
        y = np.asarray(self.y, dtype=float).ravel()
        if x.shape != y.shape:
            raise DataError("x and y lengths differ")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise DataError("non-finite values in data")
        if np.any(x < 0):
            raise DataError("x (pump power) must be non-negative")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        if self.weight is not None:
            w = np.asarray(self.weight, dtype=float).ravel()
            if w.shape != x.shape or np.any(~np.isfinite(w)) or np.any(w < 0):
                raise DataError("weights must be finite, non-negative and match x")
            object.__setattr__(self, "weight", w)

    def __len__(self):
        return self.x.size

    @property
    def w(self) -> np.ndarray:
        return np.ones_like(self.x) if self.weight is None else self.weight

    @classmethod
    def from_csv(cls, path) -> "DataSeries":
        """Read ``power_mw,value[,weight]`` CSV; ``#`` lines are ignored."""
        text = Path(path).read_text(encoding="utf-8")
        return cls.from_csv_text(text)

    @classmethod
    def from_csv_text(cls, text: str) -> "DataSeries":
        lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
        if not lines:
            raise DataError("empty CSV")
        reader = csv.reader(lines)
        header = [h.strip() for h in next(reader)]
        if header[:2] != ["power_mw", "value"] or len(header) > 3 or (
                len(header) == 3 and header[2] != "weight"):
            raise DataError(f"expected header power_mw,value[,weight], got {','.join(header)}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise DataError(f"line {lineno}: expected {len(header)} fields")
            try:
                rows.append([float(v) for v in row])
            except ValueError as exc:
                raise DataError(f"line {lineno}: {exc}") from None
        arr = np.array(rows, dtype=float).reshape(-1, len(header))
        weight = arr[:, 2] if len(header) == 3 else None
        return cls(arr[:, 0], arr[:, 1], weight)

    def to_csv_text(self) -> str:
        buf = io.StringIO()
        cols = ["power_mw", "value"] + (["weight"] if self.weight is not None else [])
        buf.write(",".join(cols) + "\n")
        for i in range(len(self)):
            vals = [self.x[i], self.y[i]] + ([self.weight[i]] if self.weight is not None else [])
            buf.write(",".join(f"{v:.17g}" for v in vals) + "\n")
        return buf.getvalue()


@dataclass
class FitReport:
    model: str
    params: dict[str, float]
    stderr: dict[str, float]
    residual_rms: float
    converged: bool
    iterations: int
    degenerate: bool = False
    message: str = ""
    cost_history: list[float] = field(default_factory=list, repr=False)

    def predict(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.model == "sin2":
            return sin2_model(x, self.params["A"], self.params["eta"])
        coeffs = [self.params[k] for k in _poly_names(int(self.model[-1]))]
        return np.polyval(coeffs, x)


def sin2_model(x, amplitude, rate):
    return amplitude * np.sin(np.sqrt(rate * np.asarray(x, dtype=float))) ** 2


def sin2_jacobian(x, amplitude, rate) -> np.ndarray:
    """Columns d/dA and d/d(eta) of ``A sin^2(sqrt(eta x))``."""
    x = np.asarray(x, dtype=float)
    s = np.sqrt(rate * x)
    d_a = np.sin(s) ** 2
    # d/d eta = A sin(2s) x / (2s); sinc keeps x = 0 finite.
    d_eta = amplitude * x * np.sinc(2.0 * s / math.pi)
    return np.column_stack([d_a, d_eta])


def _lm_sin2(x, y, w, a0, eta0):
    """Weighted Levenberg-Marquardt in (A, log eta).

    Returns (A, eta, converged, iterations, cost_history).
    """
    theta = np.array([min(max(a0, 0.0), A_MAX), math.log(eta0)])

    def cost(th):
        r = y - sin2_model(x, th[0], math.exp(th[1]))
        return float(np.sum(w * r * r))

    c = cost(theta)
    history = [c]
    lam = LAMBDA0
    converged = False
    it = 0
    for it in range(1, MAX_ITER + 1):
        eta = math.exp(theta[1])
        j = sin2_jacobian(x, theta[0], eta)
        j[:, 1] *= eta
        r = y - sin2_model(x, theta[0], eta)
        jtw = j.T * w
        g = jtw @ r
        h = jtw @ j
        if np.max(np.abs(g)) <= 1e-30 + 1e-15 * max(c, 1e-300) ** 0.5:
            converged = True
            break
        accepted = False
        while lam < 1e16:
            a = h + lam * np.diag(np.maximum(np.diag(h), 1e-300))
            try:
                step = np.linalg.solve(a, g)
            except np.linalg.LinAlgError:
                lam *= LAMBDA_UP
                continue
            trial = theta + step
            trial[0] = min(max(trial[0], 0.0), A_MAX)
            trial[1] = min(max(trial[1], math.log(1e-8)), math.log(1e3))
            ct = cost(trial)
            if ct <= c:
                accepted = True
                small = np.all(np.abs(trial - theta) <= 1e-13 * (np.abs(theta) + 1e-10))
                drop = c - ct
                theta, c = trial, ct
                history.append(c)
                lam *= LAMBDA_DOWN
                if small or drop <= 1e-15 * c or c == 0.0:
                    converged = True
                break
            lam *= LAMBDA_UP
        if not accepted:
            # Damping exhausted without improvement: at a minimum to precision.
            converged = True
            break
        if converged:
            break
    return float(theta[0]), math.exp(theta[1]), converged, it, history


def _covariance(j, w, resid, n_params):
    dof = max(resid.size - n_params, 1)
    s2 = float(np.sum(w * resid * resid)) / dof
    h = (j.T * w) @ j
    try:
        cov = np.linalg.inv(h) * s2
    except np.linalg.LinAlgError:
        return None
    if not np.all(np.isfinite(cov)):
        return None
    return cov


def fit_sin2(data: DataSeries, init: tuple[float, float] | None = None) -> FitReport:
    """Fit ``A sin^2(sqrt(eta P))`` to (power, efficiency) data.

    Without ``init`` the fit is restarted from 16 log-spaced rates between
    1e-4 and 1 /mW with ``A0 = max(y)``; the lowest residual wins, ties going
    to the smaller rate.
    """
    if len(data) < 3:
        raise DataError("sin2 fit needs at least 3 points")
    if np.any(data.y < 0) or np.any(data.y > 1):
        raise DataError("efficiency values must lie in [0, 1]")
    x, y, w = data.x, data.y, data.w
    if init is not None:
        starts = [(float(init[0]), float(init[1]))]
        if not (starts[0][1] > 0):
            raise DataError("initial rate must be positive")
    else:
        a0 = float(np.max(y))
        starts = [(a0, float(e)) for e in np.logspace(math.log10(RATE_GRID[0]),
                                                      math.log10(RATE_GRID[1]), N_STARTS)]
    results = []
    for a0, e0 in starts:
        a, eta, conv, it, hist = _lm_sin2(x, y, w, a0, e0)
        results.append((hist[-1], eta, a, conv, it, hist))

    best_cost = min(r[0] for r in results)
    tol = 1e-9 * best_cost + 1e-300
    candidates = [r for r in results if r[0] <= best_cost + tol]
    cost, eta, a, conv, it, hist = min(candidates, key=lambda r: (r[1], r[0]))
    total_iters = sum(r[4] for r in results)

    resid = y - sin2_model(x, a, eta)
    rms = float(math.sqrt(np.mean(resid ** 2)))
    params = {"A": a, "eta": eta}
    if a < 1e-8 or np.max(np.abs(y)) == 0.0:
        return FitReport("sin2", params, {"A": math.nan, "eta": math.nan}, rms, False,
                         total_iters, degenerate=True, message="amplitude vanishes; rate unidentifiable",
                         cost_history=hist)
    cov = _covariance(sin2_jacobian(x, a, eta), w, resid, 2)
    if cov is None or np.any(np.diag(cov) < 0):
        return FitReport("sin2", params, {"A": math.nan, "eta": math.nan}, rms, False,
                         total_iters, degenerate=True, message="singular normal matrix",
                         cost_history=hist)
    se = np.sqrt(np.diag(cov))
    msg = "" if conv else f"no convergence within {MAX_ITER} iterations"
    return FitReport("sin2", params, {"A": float(se[0]), "eta": float(se[1])}, rms, conv, it,
                     message=msg, cost_history=hist)


def _poly_names(degree: int) -> list[str]:
    return ["a", "b", "c"][:degree + 1]


def fit_poly(data: DataSeries, degree: int) -> FitReport:
    """Weighted linear least squares for ``a x^2 + b x + c`` or ``a x + b``.

    Rows are put in a canonical order (so the result does not depend on the
    input order) and the column-scaled weighted design is solved by SVD
    least squares; coefficients are reported highest power first.
    """
    if degree not in (1, 2):
        raise DataError("degree must be 1 or 2")
    if len(data) < degree + 1:
        raise DataError(f"degree-{degree} fit needs at least {degree + 1} points")
    order = np.lexsort((data.w, data.y, data.x))
    x, y, w = data.x[order], data.y[order], data.w[order]
    names = _poly_names(degree)
    design = np.vander(x, degree + 1)
    sw = np.sqrt(w)
    scale = np.sqrt(np.sum(w[:, None] * design ** 2, axis=0))
    if np.any(scale == 0):
        return _degenerate_poly(degree, names, y)
    ds = design / scale * sw[:, None]
    sol, _, rank, sv = np.linalg.lstsq(ds, sw * y, rcond=None)
    if rank < degree + 1 or sv[0] / sv[-1] > 1e6:
        return _degenerate_poly(degree, names, y)
    coef = sol / scale
    resid = y - design @ coef
    rms = float(math.sqrt(np.mean(resid ** 2)))
    cov = _covariance(design, w, resid, degree + 1)
    se = np.sqrt(np.clip(np.diag(cov), 0.0, None)) if cov is not None else np.full(degree + 1, math.nan)
    return FitReport(f"poly{degree}", dict(zip(names, map(float, coef))),
                     dict(zip(names, map(float, se))), rms, True, 1)


def _degenerate_poly(degree, names, y):
    nan = {k: math.nan for k in names}
    return FitReport(f"poly{degree}", dict(nan), dict(nan), math.nan, False, 0, degenerate=True,
                     message="rank-deficient design matrix")


@dataclass(frozen=True)
class FitDiagnostics:
    fitted: np.ndarray
    residuals: np.ndarray
    r_squared: float
    residual_rms: float


def fit_quality(report: FitReport, data: DataSeries) -> FitDiagnostics:
    fitted = report.predict(data.x)
    resid = data.y - fitted
    ss_res = float(np.sum(resid ** 2))
    ss_tot = float(np.sum((data.y - np.mean(data.y)) ** 2))
    if ss_tot == 0.0:
        r2 = 1.0 if ss_res == 0.0 else 0.0
    else:
        r2 = 1.0 - ss_res / ss_tot
    return FitDiagnostics(fitted, resid, r2, float(math.sqrt(np.mean(resid ** 2))))


def synthetic_sin2(amplitude: float, rate: float, n: int = 20, p_max: float = 400.0,
                   sigma: float = 0.0, rng: np.random.Generator | None = None,
                   p_min: float = 0.0) -> DataSeries:
    """``n`` equally spaced points on ``[p_min, p_max]`` with optional Gaussian noise."""
    x = np.linspace(p_min, p_max, n)
    y = sin2_model(x, amplitude, rate)
    if sigma:
        y = y + (rng or np.random.default_rng()).normal(0.0, sigma, n)
    return DataSeries(x, y)
