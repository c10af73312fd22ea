"""Model quality: NRMSE fit, Akaike FPE and Monte Carlo confidence bands."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    ConstantReference,
    CovarianceNotPSD,
    LengthMismatch,
    NumericalOverflow,
    TooManyDivergentDraws,
    TooManyParameters,
    ValidationError,
)
from .estimation import ArxModel, simulate_free_run
from .timeseries import Signal

__all__ = ["FitScore", "FpeScore", "ConfidenceBand", "nrmse_fit", "fpe", "confidence_band"]


@dataclass(frozen=True)
class FitScore:
    nrmse: float
    fit_percent: float
    rss: float
    rows: int

    def to_dict(self) -> dict:
        return {"nrmse": self.nrmse, "fit_percent": self.fit_percent, "rss": self.rss, "rows": self.rows}


@dataclass(frozen=True)
class FpeScore:
    fpe: float
    d: int
    n_samples: int

    def to_dict(self) -> dict:
        return {"fpe": self.fpe, "d": self.d, "n_samples": self.n_samples}


@dataclass(frozen=True, eq=False)
class ConfidenceBand:
    lower: Signal
    upper: Signal
    level: float
    draws: int
    dropped: int = 0


def _values(x) -> np.ndarray:
    return np.asarray(x.samples if isinstance(x, Signal) else x, dtype=float).reshape(-1)


def nrmse_fit(measured, simulated) -> FitScore:
    """``1 - ||y - y_hat|| / ||y - mean(y)||``.

    Normalises by the mean of the *measured* signal.
    """
    y, yhat = _values(measured), _values(simulated)
    if y.size != yhat.size:
        raise LengthMismatch(f"measured has {y.size} samples, simulated {yhat.size}")
    if y.size < 2:
        raise ValidationError("need at least 2 samples")
    ref = np.linalg.norm(y - y.mean())
    if ref == 0:
        raise ConstantReference("measured signal is constant; fit is undefined")
    resid = y - yhat
    rss = float(resid @ resid)
    nrmse = 1.0 - np.sqrt(rss) / ref
    return FitScore(float(nrmse), float(100.0 * nrmse), rss, int(y.size))


def fpe(residuals, d: int) -> FpeScore:
    """Akaike's final prediction error for a single output.

    ``mean(e^2) * (1 + d/N) / (1 - d/N)``
    """
    e = _values(residuals)
    n = e.size
    if n < 2:
        raise ValidationError("need at least 2 residuals")
    if d < 1:
        raise ValidationError(f"d must be >= 1, got {d}")
    if d >= n:
        raise TooManyParameters(f"d={d} parameters with only {n} residuals")
    v = float(e @ e) / n
    return FpeScore(v * (1.0 + d / n) / (1.0 - d / n), int(d), int(n))


def _sqrt_psd(cov: np.ndarray) -> np.ndarray:
    """Factor ``L`` with ``L @ L.T == cov`` for a symmetric PSD matrix."""
    if not np.allclose(cov, cov.T, rtol=1e-10, atol=0):
        raise CovarianceNotPSD("covariance is not symmetric")
    w, v = np.linalg.eigh(cov)
    scale = max(float(np.max(np.abs(w))), np.finfo(float).tiny)
    if w.min() < -1e-10 * scale:
        raise CovarianceNotPSD(f"covariance has negative eigenvalue {w.min():.3g}")
    return v * np.sqrt(np.clip(w, 0.0, None))


def confidence_band(model: ArxModel, u: Signal, y_init=None, level: float = 0.95,
                    draws: int = 1000, seed: int = 0) -> ConfidenceBand:
    """Pointwise band of free-run responses under parameter uncertainty.

    Draws ``theta ~ N(theta_hat, covariance)``, simulates each draw on ``u``
    and takes per-sample empirical quantiles. Diverging draws are dropped;
    more than 10 % dropped raises :class:`TooManyDivergentDraws`.
    """
    if not 0.0 < level < 1.0:
        raise ValidationError(f"level must lie in (0, 1), got {level}")
    if draws < 100:
        raise ValidationError(f"need at least 100 draws, got {draws}")
    factor = _sqrt_psd(model.covariance)
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((draws, model.d))
    thetas = model.theta + z @ factor.T

    runs = []
    dropped = 0
    for theta in thetas:
        try:
            runs.append(simulate_free_run(model.with_theta(theta), u, y_init).samples)
        except NumericalOverflow:
            dropped += 1
    if dropped > 0.1 * draws:
        raise TooManyDivergentDraws(f"{dropped} of {draws} parameter draws diverged",
                                    dropped=dropped, draws=draws)
    runs = np.vstack(runs)
    alpha = (1.0 - level) / 2.0
    lo, hi = np.quantile(runs, [alpha, 1.0 - alpha], axis=0)
    return ConfidenceBand(u.replace(lo), u.replace(hi), level, draws, dropped)
