"""ARX least-squares estimation.

The model is the difference equation

    y(t) + a_1 y(t-1) + ... + a_n y(t-n) = b_1 u(t-1) + ... + b_m u(t-m)

written as a linear regression ``y(t) = phi(t)^T theta`` with
``phi(t) = [-y(t-1) .. -y(t-n), u(t-1) .. u(t-m)]`` and
``theta = [a_1 .. a_n, b_1 .. b_m]``.

Two parameterisations share :class:`ArxModel`:

``structure="arx"``
    the plain form above (:func:`fit_arx`).
``structure="bilinear"``
    the input polynomial is constrained to ``(1 + q^-1)^(n-m) B'(q^-1)``
    with ``B'`` of degree ``m`` (``m + 1`` free coefficients, lags 1..m+1).
    Under the bilinear map, after removing the one-sample logging delay,
    such a model is exactly a continuous transfer function with ``n`` poles
    and ``m`` zeros (:func:`fit_tf_arx`).
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from math import comb
from typing import Optional

import numpy as np
import scipy.linalg
from scipy import signal as sps

from .errors import InsufficientData, NumericalOverflow, RankDeficient, ValidationError
from .timeseries import Signal, SignalPair

__all__ = [
    "MAX_ORDER",
    "ModelOrder",
    "ArxModel",
    "RegressionSystem",
    "build_regressors",
    "fit_arx",
    "fit_tf_arx",
    "predict_one_step",
    "prediction_residuals",
    "loss",
    "simulate_free_run",
]

MAX_ORDER = 5
#: condition number (column-equilibrated regressors) above which a fit is refused
MAX_CONDITION = 1e12
#: free-run magnitude treated as divergence
OVERFLOW_LIMIT = 1e30

STRUCTURES = ("arx", "bilinear")


@dataclass(frozen=True)
class ModelOrder:
    """``n`` poles / output lags and ``m`` zeros / input lags."""

    n: int
    m: int

    def __post_init__(self):
        for name in ("n", "m"):
            v = getattr(self, name)
            if isinstance(v, bool) or int(v) != v:
                raise ValidationError(f"order {name} must be an integer, got {v!r}")
            object.__setattr__(self, name, int(v))
        if self.n < 1:
            raise ValidationError(f"n must be >= 1, got {self.n}")
        if self.m < 0:
            raise ValidationError(f"m must be >= 0, got {self.m}")
        if self.m > self.n:
            raise ValidationError(f"improper order: m={self.m} > n={self.n}")
        if self.n > MAX_ORDER:
            raise ValidationError(f"n={self.n} exceeds the reduced-order cap {MAX_ORDER}")

    def __str__(self):
        return f"(n={self.n}, m={self.m})"


def binomial_filter(k: int) -> np.ndarray:
    """Coefficients of ``(1 + q^-1)^k``."""
    return np.array([comb(k, j) for j in range(k + 1)], dtype=float)


@dataclass(frozen=True, eq=False)
class ArxModel:
    order: ModelOrder
    a: np.ndarray
    b: np.ndarray
    ts: float
    noise_variance: float = 0.0
    covariance: Optional[np.ndarray] = None
    structure: str = "arx"

    def __post_init__(self):
        if self.structure not in STRUCTURES:
            raise ValidationError(f"unknown structure {self.structure!r}")
        a = np.array(self.a, dtype=float).reshape(-1)
        b = np.array(self.b, dtype=float).reshape(-1)
        n, m = self.order.n, self.order.m
        nb = m if self.structure == "arx" else m + 1
        if a.size != n or b.size != nb:
            raise ValidationError(
                f"{self.structure} model of order {self.order} needs {n} a- and {nb} b-coefficients, "
                f"got {a.size} and {b.size}")
        d = a.size + b.size
        cov = np.zeros((d, d)) if self.covariance is None else np.array(self.covariance, dtype=float)
        if cov.shape != (d, d):
            raise ValidationError(f"covariance must be {d}x{d}, got {cov.shape}")
        scale = max(np.max(np.abs(cov)), np.finfo(float).tiny)
        if np.max(np.abs(cov - cov.T)) > 1e-10 * scale:
            raise ValidationError("covariance is not symmetric")
        if np.any(np.diag(cov) < 0):
            raise ValidationError("covariance has negative variances")
        if self.noise_variance < 0:
            raise ValidationError("noise_variance must be >= 0")
        if self.ts <= 0:
            raise ValidationError("ts must be > 0")
        for arr in (a, b, cov):
            arr.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "covariance", cov)
        object.__setattr__(self, "ts", float(self.ts))
        object.__setattr__(self, "noise_variance", float(self.noise_variance))

    @property
    def theta(self) -> np.ndarray:
        return np.concatenate([self.a, self.b])

    @property
    def d(self) -> int:
        """Number of free (estimated) parameters."""
        return self.a.size + self.b.size

    @property
    def input_polynomial(self) -> np.ndarray:
        """Effective b-coefficients on lags ``1 .. len(result)``."""
        if self.structure == "arx":
            return self.b
        return np.convolve(binomial_filter(self.order.n - self.order.m), self.b)

    @property
    def lag_span(self) -> int:
        """Samples of history the recursion needs (first predictable index)."""
        return max(self.a.size, self.input_polynomial.size)

    def with_theta(self, theta) -> "ArxModel":
        theta = np.asarray(theta, dtype=float)
        n = self.a.size
        return replace(self, a=theta[:n], b=theta[n:])

    def to_dict(self) -> dict:
        return {
            "n": self.order.n,
            "m": self.order.m,
            "structure": self.structure,
            "a": self.a.tolist(),
            "b": self.b.tolist(),
            "ts": self.ts,
            "noise_variance": self.noise_variance,
            "covariance": self.covariance.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ArxModel":
        return cls(
            order=ModelOrder(d["n"], d["m"]),
            a=d["a"],
            b=d["b"],
            ts=d["ts"],
            noise_variance=d.get("noise_variance", 0.0),
            covariance=d.get("covariance"),
            structure=d.get("structure", "arx"),
        )


@dataclass(frozen=True, eq=False)
class RegressionSystem:
    phi: np.ndarray
    targets: np.ndarray
    first_index: int

    @property
    def rows(self) -> int:
        return self.targets.shape[0]


def _lag_matrix(x: np.ndarray, lags: int, start: int) -> np.ndarray:
    """Columns ``x[t-1], ..., x[t-lags]`` for ``t = start .. len(x)-1``."""
    n = x.shape[0]
    return np.column_stack([x[start - k:n - k] for k in range(1, lags + 1)]) if lags else np.empty((n - start, 0))


def _system(u: np.ndarray, y: np.ndarray, na: int, nb: int, start: int) -> RegressionSystem:
    phi = np.hstack([-_lag_matrix(y, na, start), _lag_matrix(u, nb, start)])
    return RegressionSystem(phi, y[start:].copy(), start)


def build_regressors(pair: SignalPair, order: ModelOrder) -> RegressionSystem:
    """Regressor rows ``[-y(t-1)..-y(t-n), u(t-1)..u(t-m)]`` for ``t >= max(n, m)``."""
    start = max(order.n, order.m)
    if len(pair) <= start:
        raise InsufficientData(f"need N > {start} samples for order {order}, got {len(pair)}",
                               required=start + 1)
    return _system(pair.u.samples, pair.y.samples, order.n, order.m, start)


def _tf_system(pair: SignalPair, order: ModelOrder) -> RegressionSystem:
    n, m = order.n, order.m
    # prefiltered input is only valid once its full (n - m)-sample history exists
    uf = np.convolve(pair.u.samples, binomial_filter(n - m))[:len(pair)]
    start = n + 1
    if len(pair) <= start:
        raise InsufficientData(f"need N > {start} samples for order {order}, got {len(pair)}",
                               required=start + 1)
    return _system(uf, pair.y.samples, n, m + 1, start)


def _solve(system: RegressionSystem):
    """Least squares by column-equilibrated, column-pivoted QR.

    Returns ``theta, (Phi^T Phi)^-1, rss, condition``.
    """
    phi, target = system.phi, system.targets
    d = phi.shape[1]
    norms = np.linalg.norm(phi, axis=0)
    if np.any(norms == 0) or not np.all(np.isfinite(norms)):
        raise RankDeficient("regressor matrix has an all-zero column: input insufficiently exciting",
                            condition=np.inf)
    q, r, piv = scipy.linalg.qr(phi / norms, mode="economic", pivoting=True)
    sv = np.linalg.svd(r, compute_uv=False)
    cond = sv[0] / sv[-1] if sv[-1] > 0 else np.inf
    if cond > MAX_CONDITION:
        raise RankDeficient(
            f"regressor condition number {cond:.3g} exceeds {MAX_CONDITION:.0e}: "
            "input insufficiently exciting or model order redundant", condition=cond)
    z = scipy.linalg.solve_triangular(r, q.T @ target)
    theta = np.empty(d)
    theta[piv] = z
    theta /= norms
    rinv = scipy.linalg.solve_triangular(r, np.eye(d))
    inv_scaled = np.empty((d, d))
    inv_scaled[np.ix_(piv, piv)] = rinv @ rinv.T
    cov_unit = inv_scaled / np.outer(norms, norms)
    cov_unit = 0.5 * (cov_unit + cov_unit.T)
    resid = target - phi @ theta
    return theta, cov_unit, float(resid @ resid), cond


def _fit(system: RegressionSystem, order: ModelOrder, ts: float, structure: str) -> ArxModel:
    d = system.phi.shape[1]
    if system.rows <= d:
        raise InsufficientData(
            f"{system.rows} regression rows for {d} parameters; need more data",
            required=system.first_index + d + 1)
    theta, cov_unit, rss, _ = _solve(system)
    sigma2 = rss / (system.rows - d)
    n = order.n
    return ArxModel(order, theta[:n], theta[n:], ts, sigma2, sigma2 * cov_unit, structure)


def fit_arx(pair: SignalPair, order: ModelOrder) -> ArxModel:
    """Plain ARX least-squares fit.

    Raises
    ------
    InsufficientData
        fewer than ``d + 1`` regression rows.
    RankDeficient
        the column-equilibrated regressor matrix has condition number above
        ``1e12`` (unexcited input or a redundant order).
    """
    if order.m < 1:
        raise ValidationError("plain ARX needs at least one input lag (m >= 1)")
    return _fit(build_regressors(pair, order), order, pair.ts, "arx")


def fit_tf_arx(pair: SignalPair, order: ModelOrder) -> ArxModel:
    """ARX fit whose bilinear image has exactly ``order.n`` poles and ``order.m`` zeros.

    The data are assumed to carry a single sample of delay between input and
    output (as the emulator logs them); see :func:`gridsysid.tf.arx_to_continuous`.
    """
    return _fit(_tf_system(pair, order), order, pair.ts, "bilinear")


def _effective_system(model: ArxModel, pair: SignalPair) -> RegressionSystem:
    bfull = model.input_polynomial
    start = model.lag_span
    if len(pair) <= start:
        raise InsufficientData(f"need N > {start} samples, got {len(pair)}", required=start + 1)
    return _system(pair.u.samples, pair.y.samples, model.a.size, bfull.size, start)


def predict_one_step(model: ArxModel, pair: SignalPair) -> Signal:
    """``y_hat(t | theta) = phi(t)^T theta`` from measured past data, for ``t >= lag_span``."""
    sys_ = _effective_system(model, pair)
    yhat = sys_.phi @ np.concatenate([model.a, model.input_polynomial])
    return Signal(yhat, pair.ts, pair.start_time + sys_.first_index * pair.ts)


def prediction_residuals(model: ArxModel, pair: SignalPair) -> np.ndarray:
    sys_ = _effective_system(model, pair)
    return sys_.targets - sys_.phi @ np.concatenate([model.a, model.input_polynomial])


def loss(model: ArxModel, pair: SignalPair) -> float:
    """Mean squared one-step prediction error over the available regression rows."""
    e = prediction_residuals(model, pair)
    return float(e @ e) / e.size


def simulate_free_run(model: ArxModel, u: Signal, y_init=None) -> Signal:
    """Drive the model with ``u`` only, feeding back its own outputs.

    The first ``model.lag_span`` outputs are taken from ``y_init`` (zero-padded).

    Raises
    ------
    NumericalOverflow
        when any output exceeds ``1e30`` in magnitude; ``.index`` is the
        first offending sample.
    """
    x = u.samples
    k0 = model.lag_span
    if len(x) <= k0:
        raise InsufficientData(f"need more than {k0} input samples, got {len(x)}", required=k0 + 1)
    seed = np.zeros(k0)
    if y_init is not None:
        yi = np.asarray(y_init, dtype=float).reshape(-1)[:k0]
        seed[:yi.size] = yi
    bpoly = np.concatenate([[0.0], model.input_polynomial])
    apoly = np.concatenate([[1.0], model.a])
    zi = sps.lfiltic(bpoly, apoly, seed[::-1], x[:k0][::-1])
    with np.errstate(all="ignore"):
        tail, _ = sps.lfilter(bpoly, apoly, x[k0:], zi=zi)
    y = np.concatenate([seed, tail])
    bad = ~np.isfinite(y) | (np.abs(y) > OVERFLOW_LIMIT)
    if bad.any():
        idx = int(np.argmax(bad))
        raise NumericalOverflow(f"free-run simulation diverged at sample {idx}", index=idx)
    return Signal(y, u.ts, u.start_time)
