"""Fit a grid of candidate orders and rank them (train fit, test fit, FPE)."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import AllCandidatesFailed, IdentificationError, NoSuccessfulCandidates, ValidationError
from .estimation import MAX_ORDER, ArxModel, ModelOrder, fit_tf_arx, prediction_residuals, simulate_free_run
from .metrics import FitScore, FpeScore, fpe, nrmse_fit
from .tf import ContinuousTf, PoleZeroSet, arx_to_continuous, is_stable, poles_zeros
from .timeseries import Signal, SignalPair

__all__ = [
    "SELECTIONS",
    "FPE_RESOLUTION",
    "FIT_DECIMALS",
    "FitReport",
    "SweepConfig",
    "evaluate_order",
    "sort_reports",
    "sweep",
    "select_best",
    "format_table",
]

SELECTIONS = ("best_test_fit", "best_fpe")
#: FPE values below this fraction of the training output's mean square rank as equal
FPE_RESOLUTION = 1e-18
#: fit percentages are ranked after rounding to this many decimals
FIT_DECIMALS = 6


@dataclass(frozen=True, eq=False)
class FitReport:
    order: ModelOrder
    arx: Optional[ArxModel] = None
    continuous: Optional[ContinuousTf] = None
    train_fit: Optional[FitScore] = None
    test_fit: Optional[FitScore] = None
    fpe: Optional[FpeScore] = None
    stable: Optional[bool] = None
    poles_zeros: Optional[PoleZeroSet] = None
    fpe_floor: float = 0.0
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None

    @property
    def d(self) -> int:
        if self.arx is not None:
            return self.arx.d
        return self.order.n + self.order.m + 1

    def simulated(self, segment: SignalPair) -> Signal:
        """Free-run response on ``segment.u`` seeded with its first measured outputs."""
        k0 = self.arx.lag_span
        return simulate_free_run(self.arx, segment.u, segment.y.samples[:k0])

    def to_dict(self) -> dict:
        out = {"n": self.order.n, "m": self.order.m, "d": self.d, "error": self.error}
        if not self.ok:
            return out

        def cplx(v):
            return [[float(z.real), float(z.imag)] for z in v]

        out.update(
            arx=self.arx.to_dict(),
            continuous=self.continuous.to_dict(),
            continuous_text=str(self.continuous),
            train_fit=self.train_fit.to_dict(),
            test_fit=self.test_fit.to_dict(),
            fpe=self.fpe.to_dict(),
            fpe_floor=self.fpe_floor,
            stable=bool(self.stable),
            poles=cplx(self.poles_zeros.poles),
            zeros=cplx(self.poles_zeros.zeros),
            gain=self.poles_zeros.gain,
        )
        return out


def _parse_range(r, name):
    lo, hi = (int(v) for v in r)
    if lo > hi:
        raise ValidationError(f"{name} is empty: {r}")
    return lo, hi


@dataclass(frozen=True)
class SweepConfig:
    """Candidate grid.  ``m_range=None`` means every ``0 <= m <= n``."""

    n_range: tuple = (1, 4)
    m_range: Optional[tuple] = None
    selection: str = "best_fpe"

    def __post_init__(self):
        lo, hi = _parse_range(self.n_range, "n_range")
        if lo < 1 or hi > MAX_ORDER:
            raise ValidationError(f"n_range must lie within 1..{MAX_ORDER}, got {self.n_range}")
        object.__setattr__(self, "n_range", (lo, hi))
        if self.m_range is not None:
            mlo, mhi = _parse_range(self.m_range, "m_range")
            if mlo < 0:
                raise ValidationError("m_range must be >= 0")
            object.__setattr__(self, "m_range", (mlo, mhi))
        if self.selection not in SELECTIONS:
            raise ValidationError(f"selection must be one of {SELECTIONS}, got {self.selection!r}")
        if not self.candidates():
            raise ValidationError("sweep grid has no candidate with m <= n")

    def candidates(self) -> list[ModelOrder]:
        out = []
        for n in range(self.n_range[0], self.n_range[1] + 1):
            mlo, mhi = self.m_range if self.m_range is not None else (0, n)
            out.extend(ModelOrder(n, m) for m in range(mlo, min(mhi, n) + 1))
        return out

    def to_dict(self) -> dict:
        return {"n_range": list(self.n_range),
                "m_range": None if self.m_range is None else list(self.m_range),
                "selection": self.selection}

    @classmethod
    def from_dict(cls, d: dict) -> "SweepConfig":
        unknown = set(d) - {"n_range", "m_range", "selection"}
        if unknown:
            raise ValidationError(f"unknown sweep keys: {sorted(unknown)}")
        return cls(**d)


def _score(report_arx: ArxModel, seg: SignalPair) -> FitScore:
    k0 = report_arx.lag_span
    sim = simulate_free_run(report_arx, seg.u, seg.y.samples[:k0])
    return nrmse_fit(seg.y.samples[k0:], sim.samples[k0:])


def evaluate_order(train: SignalPair, test: SignalPair, order: ModelOrder) -> FitReport:
    """Fit one candidate on ``train`` and score it on both segments.

    Failures (rank deficiency, divergence, too little data) come back as a
    report with ``error`` set rather than an exception.
    """
    try:
        arx = fit_tf_arx(train, order)
        cont = arx_to_continuous(arx)
        pz = poles_zeros(cont)
        stable = is_stable(cont).stable
        train_fit = _score(arx, train)
        test_fit = _score(arx, test)
        score = fpe(prediction_residuals(arx, train), arx.d)
    except IdentificationError as exc:
        return FitReport(order, error=f"{type(exc).__name__}: {exc}")
    floor = FPE_RESOLUTION * float(np.mean(np.square(train.y.samples)))
    return FitReport(order, arx, cont, train_fit, test_fit, score, stable, pz, floor)


def _key(r: FitReport, selection: str):
    if not r.ok:
        return (1, 0.0, r.d, r.order.n, r.order.m)
    if selection == "best_fpe":
        primary = max(r.fpe.fpe, r.fpe_floor)
    else:
        primary = -round(r.test_fit.fit_percent, FIT_DECIMALS)
    return (0, primary, r.d, r.order.n, r.order.m)


def sort_reports(reports: Sequence[FitReport], selection: str = "best_fpe") -> list[FitReport]:
    """Successful reports first, best first; ties go to fewer parameters, then smaller n."""
    if selection not in SELECTIONS:
        raise ValidationError(f"selection must be one of {SELECTIONS}, got {selection!r}")
    return sorted(reports, key=lambda r: _key(r, selection))


def sweep(train: SignalPair, test: SignalPair, cfg: SweepConfig | None = None) -> list[FitReport]:
    cfg = cfg or SweepConfig()
    reports = [evaluate_order(train, test, order) for order in cfg.candidates()]
    if not any(r.ok for r in reports):
        detail = "; ".join(f"{r.order}: {r.error}" for r in reports)
        raise AllCandidatesFailed(f"every candidate failed ({detail})")
    return sort_reports(reports, cfg.selection)


def select_best(reports: Sequence[FitReport], selection: str = "best_fpe") -> FitReport:
    ranked = sort_reports(reports, selection)
    if not ranked or not ranked[0].ok:
        raise NoSuccessfulCandidates("no successful candidate to select")
    return ranked[0]


def _coefficients_text(g: ContinuousTf) -> str:
    nb, na = g.num.size - 1, g.den.size - 1
    parts = [f"b{nb - i}={c:.4g}" for i, c in enumerate(g.num)]
    parts += [f"a{na - i}={c:.4g}" for i, c in enumerate(g.den)]
    return " ".join(parts)


def format_table(reports: Sequence[FitReport]) -> str:
    """Plain-text summary with one row per candidate."""
    head = f"{'Model Order':<12} {'Fit to Training Data':>21} {'Fit to Test Data':>17} {'FPE':>11}  Model Coefficients"
    lines = [head, "-" * len(head)]
    for r in reports:
        label = f"n={r.order.n} m={r.order.m}"
        if not r.ok:
            lines.append(f"{label:<12} {'failed':>21} {'':>17} {'':>11}  {r.error}")
            continue
        lines.append(
            f"{label:<12} {r.train_fit.fit_percent:>20.2f}% {r.test_fit.fit_percent:>16.2f}% "
            f"{r.fpe.fpe:>11.4g}  {_coefficients_text(r.continuous)}")
    return "\n".join(lines) + "\n"
