"""Transfer-function algebra.

Continuous ``G(s)`` and discrete ``H(z)`` rational functions with monic
denominators, the bilinear (Tustin) map between them, companion-matrix
pole/zero extraction, stability checks and step responses.

Polynomials are coefficient arrays in descending powers, as in
:func:`numpy.polyval`.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Union

import numpy as np
from scipy import signal as sps

from .errors import DegenerateLeadingCoefficient, PoleAtMinusOne, PoleAtNyquistWarp, ValidationError
from .estimation import ArxModel, ModelOrder, binomial_filter
from .timeseries import Signal

__all__ = [
    "ContinuousTf",
    "DiscreteTf",
    "PoleZeroSet",
    "Stability",
    "arx_to_discrete_tf",
    "arx_to_continuous",
    "continuous_to_arx",
    "discrete_to_continuous",
    "continuous_to_discrete",
    "polynomial_roots",
    "poles_zeros",
    "is_stable",
    "step_response",
    "format_polynomial",
]

_EPS = np.finfo(float).eps


def _strip(p) -> np.ndarray:
    p = np.atleast_1d(np.asarray(p, dtype=float))
    if p.ndim != 1 or p.size == 0:
        raise ValidationError("polynomial must be a non-empty 1-D coefficient list")
    nz = np.flatnonzero(p)
    return p[nz[0]:].copy() if nz.size else np.zeros(1)


def _normalize(num, den):
    num, den = _strip(num), _strip(den)
    if den[0] == 0:
        raise DegenerateLeadingCoefficient("denominator is identically zero")
    if num.size > den.size:
        raise ValidationError(f"improper transfer function: deg num {num.size - 1} > deg den {den.size - 1}")
    lead = den[0]
    return num / lead, den / lead


def format_polynomial(p, var: str = "s") -> str:
    p = np.asarray(p, dtype=float)
    deg = p.size - 1
    parts = []
    for i, c in enumerate(p):
        if c == 0:
            continue
        k = deg - i
        mag = abs(c)
        mono = "" if k == 0 else (var if k == 1 else f"{var}^{k}")
        if k == 0:
            body = f"{mag:.4g}"
        elif mag == 1:
            body = mono
        else:
            body = f"{mag:.4g} {mono}"
        if not parts:
            parts.append(("-" if c < 0 else "") + body)
        else:
            parts.append(("- " if c < 0 else "+ ") + body)
    return " ".join(parts) if parts else "0"


@dataclass(frozen=True, eq=False)
class ContinuousTf:
    num: np.ndarray
    den: np.ndarray

    def __post_init__(self):
        num, den = _normalize(self.num, self.den)
        num.setflags(write=False)
        den.setflags(write=False)
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "den", den)

    @property
    def order(self) -> tuple[int, int]:
        """(poles, zeros)"""
        zeros = 0 if not np.any(self.num) else self.num.size - 1
        return self.den.size - 1, zeros

    def __call__(self, s):
        return np.polyval(self.num, s) / np.polyval(self.den, s)

    def dc_gain(self) -> float:
        return float(self(0.0))

    def to_dict(self) -> dict:
        return {"num": self.num.tolist(), "den": self.den.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "ContinuousTf":
        return cls(d["num"], d["den"])

    def __str__(self):
        return f"({format_polynomial(self.num, 's')}) / ({format_polynomial(self.den, 's')})"


@dataclass(frozen=True, eq=False)
class DiscreteTf:
    num: np.ndarray
    den: np.ndarray
    ts: float

    def __post_init__(self):
        if not self.ts > 0:
            raise ValidationError(f"ts must be > 0, got {self.ts!r}")
        num, den = _normalize(self.num, self.den)
        num.setflags(write=False)
        den.setflags(write=False)
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "den", den)
        object.__setattr__(self, "ts", float(self.ts))

    def __call__(self, z):
        return np.polyval(self.num, z) / np.polyval(self.den, z)

    def dc_gain(self) -> float:
        return float(self(1.0))

    def filter_coefficients(self):
        """``(b, a)`` in powers of ``z^-1`` for :func:`scipy.signal.lfilter`."""
        b = np.zeros(self.den.size)
        b[self.den.size - self.num.size:] = self.num
        return b, self.den.copy()

    def to_dict(self) -> dict:
        return {"num": self.num.tolist(), "den": self.den.tolist(), "ts": self.ts}

    def __str__(self):
        return f"({format_polynomial(self.num, 'z')}) / ({format_polynomial(self.den, 'z')})"


def _substitute(p: np.ndarray, degree: int, lin_num, lin_den) -> np.ndarray:
    """``sum_j p_j * lin_num^(degree-j) * lin_den^j`` for ``p`` padded to ``degree + 1`` coefficients.

    This is ``P(x) * lin_den^degree`` after substituting ``x = lin_num / lin_den``.
    """
    p = np.concatenate([np.zeros(degree + 1 - p.size), p])
    out = np.zeros(degree + 1)
    for j, c in enumerate(p):
        if c == 0:
            continue
        term = np.array([c])
        for _ in range(degree - j):
            term = np.convolve(term, lin_num)
        for _ in range(j):
            term = np.convolve(term, lin_den)
        out[degree + 1 - term.size:] += term
    return out


def _trim_leading(w: np.ndarray, bound: float) -> np.ndarray:
    """Drop leading coefficients that are rounding residue of an exact cancellation."""
    i = 0
    while i < w.size - 1 and abs(w[i]) <= bound:
        i += 1
    return w[i:]


def _w_to_s(w: np.ndarray, ts: float) -> np.ndarray:
    # w = s*ts/2, so the coefficient of w^k scales by (ts/2)^k
    k = np.arange(w.size - 1, -1, -1)
    return w * (ts / 2.0) ** k


def _s_to_w(c: np.ndarray, ts: float) -> np.ndarray:
    k = np.arange(c.size - 1, -1, -1)
    return c * (2.0 / ts) ** k


def _rounding_bound(p: np.ndarray, degree: int) -> float:
    return 64 * _EPS * float(np.sum(np.abs(p))) * 2.0 ** degree


def discrete_to_continuous(h: DiscreteTf) -> ContinuousTf:
    """Inverse bilinear map ``z = (1 + s*ts/2) / (1 - s*ts/2)``."""
    degree = h.den.size - 1
    dw = _substitute(h.den, degree, [1.0, 1.0], [-1.0, 1.0])
    if abs(dw[0]) <= _rounding_bound(h.den, degree):
        raise PoleAtMinusOne("discrete pole at z = -1 has no bilinear pre-image")
    nw = _substitute(h.num, degree, [1.0, 1.0], [-1.0, 1.0])
    nw = _trim_leading(nw, _rounding_bound(h.num, degree))
    return ContinuousTf(_w_to_s(nw, h.ts), _w_to_s(dw, h.ts))


def continuous_to_discrete(g: ContinuousTf, ts: float) -> DiscreteTf:
    """Bilinear map ``s = (2/ts) (z - 1) / (z + 1)``."""
    if not ts > 0:
        raise ValidationError(f"ts must be > 0, got {ts!r}")
    degree = g.den.size - 1
    dw = _s_to_w(g.den, ts)
    nw = _s_to_w(g.num, ts)
    dz = _substitute(dw, degree, [1.0, -1.0], [1.0, 1.0])
    if abs(dz[0]) <= _rounding_bound(dw, degree):
        raise PoleAtNyquistWarp(f"continuous pole at s = 2/ts = {2 / ts:g} maps to z = infinity")
    nz = _substitute(nw, degree, [1.0, -1.0], [1.0, 1.0])
    return DiscreteTf(nz, dz, ts)


def arx_to_discrete_tf(model: ArxModel) -> DiscreteTf:
    """``H(z) = (b_1 z^-1 + ... ) / (1 + a_1 z^-1 + ...)`` in positive powers of ``z``."""
    a, b = model.a, model.input_polynomial
    k = max(a.size, b.size)
    num = np.zeros(k + 1)
    num[1:b.size + 1] = b
    den = np.zeros(k + 1)
    den[0] = 1.0
    den[1:a.size + 1] = a
    return DiscreteTf(num, den, model.ts)


def arx_to_continuous(model: ArxModel) -> ContinuousTf:
    """Continuous model reported for a fitted ARX.

    ``structure="bilinear"``: the one-sample logging delay is removed and the
    remaining ``(1 + z^-1)^(n-m) B'(z^-1) / A(z^-1)`` is mapped through the
    inverse bilinear transform; the ``(z + 1)`` factors cancel exactly, so
    the result has ``n`` poles and ``m`` zeros.

    ``structure="arx"``: plain inverse bilinear map of :func:`arx_to_discrete_tf`.
    """
    if model.structure == "arx":
        return discrete_to_continuous(arx_to_discrete_tf(model))
    n, m = model.order.n, model.order.m
    den_z = np.concatenate([[1.0], model.a])
    dw = _substitute(den_z, n, [1.0, 1.0], [-1.0, 1.0])
    if abs(dw[0]) <= _rounding_bound(den_z, n):
        raise PoleAtMinusOne("discrete pole at z = -1 has no bilinear pre-image")
    # (z + 1) -> 2 / (1 - w) after clearing denominators
    nw = 2.0 ** (n - m) * _substitute(model.b, m, [1.0, 1.0], [-1.0, 1.0])
    return ContinuousTf(_w_to_s(nw, model.ts), _w_to_s(dw, model.ts))


def continuous_to_arx(g: ContinuousTf, ts: float) -> ArxModel:
    """Inverse of :func:`arx_to_continuous` for the bilinear structure (no covariance)."""
    n, m = g.order
    order = ModelOrder(n, m)
    h = continuous_to_discrete(g, ts)
    num = np.concatenate([np.zeros(n + 1 - h.num.size), h.num])
    bprime, rem = np.polydiv(num, binomial_filter(n - m))
    bprime = np.concatenate([np.zeros(m + 1 - bprime.size), bprime])[-(m + 1):]
    return ArxModel(order, h.den[1:], bprime, ts, structure="bilinear")


class PoleZeroSet(NamedTuple):
    poles: np.ndarray
    zeros: np.ndarray
    gain: float


class Stability(NamedTuple):
    stable: bool
    margin: float


def _pair_conjugates(r: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    r = r.astype(complex)
    scale = np.maximum(1.0, np.abs(r))
    r[np.abs(r.imag) <= tol * scale] = r[np.abs(r.imag) <= tol * scale].real
    upper = np.flatnonzero(r.imag > 0)
    lower = list(np.flatnonzero(r.imag < 0))
    for i in upper:
        if not lower:
            break
        j = min(lower, key=lambda k: abs(r[k] - np.conj(r[i])))
        lower.remove(j)
        mid = 0.5 * (r[i] + np.conj(r[j]))
        r[i], r[j] = mid, np.conj(mid)
    return r[np.lexsort((r.imag, r.real))]


def polynomial_roots(p) -> np.ndarray:
    """Roots as eigenvalues of the companion matrix of ``p``."""
    p = np.asarray(p, dtype=float)
    if p.size == 0 or p[0] == 0:
        raise DegenerateLeadingCoefficient("leading coefficient is zero")
    deg = p.size - 1
    if deg == 0:
        return np.zeros(0, dtype=complex)
    comp = np.zeros((deg, deg))
    comp[0, :] = -p[1:] / p[0]
    comp[np.arange(1, deg), np.arange(deg - 1)] = 1.0
    return _pair_conjugates(np.linalg.eigvals(comp))


def poles_zeros(g: Union[ContinuousTf, DiscreteTf]) -> PoleZeroSet:
    poles = polynomial_roots(g.den)
    if not np.any(g.num):
        return PoleZeroSet(poles, np.zeros(0, dtype=complex), 0.0)
    return PoleZeroSet(poles, polynomial_roots(g.num), float(g.num[0] / g.den[0]))


def is_stable(g: Union[ContinuousTf, DiscreteTf]) -> Stability:
    """Stability and the worst pole's distance to the boundary (negative when unstable)."""
    poles = poles_zeros(g).poles
    if poles.size == 0:
        return Stability(True, float("inf"))
    if isinstance(g, DiscreteTf):
        margin = 1.0 - float(np.max(np.abs(poles)))
    else:
        margin = -float(np.max(poles.real))
    return Stability(margin > 0, margin)


def step_response(g: ContinuousTf, ts: float, duration: float) -> Signal:
    """Unit-step response of the bilinear discretisation of ``g`` on ``[0, duration]``."""
    if not ts > 0 or duration < ts:
        raise ValidationError("need ts > 0 and duration >= ts")
    h = continuous_to_discrete(g, ts)
    n = int(np.floor(duration / ts + 1e-9)) + 1
    b, a = h.filter_coefficients()
    return Signal(sps.lfilter(b, a, np.ones(n)), ts, 0.0)
