"""Nonlinear least-squares extraction of (zeta, eta, theta0, rate) from
variance traces, plus dB conversion of squeezed variances.

Models fitted (n = bin_center_index, in sample units):

* single mode:    V(n) = (eta/2)(cosh 2z - cos(2 theta0 + 2 rate n) sinh 2z) + (1 - eta)/2
* sum/difference: V(n) = (eta/2)(cosh 2z +/- cos(theta0 + rate n) sinh 2z) + (1 - eta)/2

The optimizer is damped least squares (MINPACK Levenberg-Marquardt) with
analytic Jacobians; eta is kept in [0, 1] by a logistic reparameterization
and zeta kept non-negative by a softplus.  Initial values come from the
trace extrema and the FFT peak, which makes clean fits land in the right
basin from anywhere in the supported parameter range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from .errors import IllPosedFitError
from .homodyne import VarianceTrace

_FLAT_TOL = 1e-9


@dataclass(frozen=True)
class FitResult:
    zeta: float
    eta: float
    theta0: float
    rate: float
    rss: float
    converged: bool
    degenerate: bool = False

    def to_json_dict(self) -> dict:
        return {
            "zeta": self.zeta,
            "eta": self.eta,
            "theta0": self.theta0,
            "rate": self.rate,
            "rss": self.rss,
            "converged": self.converged,
            "degenerate": self.degenerate,
        }


def squeezing_db(variance: float) -> float:
    """Squeezing below vacuum in dB: -10 log10(V / 0.5)."""
    if variance <= 0:
        raise ValueError(f"variance must be > 0, got {variance}")
    return -10.0 * math.log10(variance / 0.5)


def _softplus(s):
    return np.logaddexp(0.0, s)


def _softplus_inv(z: float) -> float:
    if z <= 0:
        raise ValueError("softplus inverse needs a positive argument")
    return z + math.log(-math.expm1(-z)) if z > 1e-10 else math.log(z)


def _sigmoid(q):
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(q, dtype=float)))


def _logit(p: float) -> float:
    return math.log(p / (1.0 - p))


def _fft_tone(values: np.ndarray) -> tuple[float, float]:
    """Dominant angular frequency (per bin) and its phase at the first bin.

    The FFT peak is refined by maximizing the periodogram on a fine grid
    around it; spectral leakage at half-bin offsets would otherwise bias the
    phase enough to start the optimizer a full cycle off.
    """
    demeaned = values - values.mean()
    n_bins = len(values)
    spectrum = np.fft.rfft(demeaned)
    mags = np.abs(spectrum)
    if len(mags) < 2:
        raise IllPosedFitError("trace too short to locate an oscillation")
    k = 1 + int(np.argmax(mags[1:]))
    grid = 2.0 * math.pi * (k + np.linspace(-1.0, 1.0, 81)) / n_bins
    grid = grid[grid > 0]
    tones = np.exp(-1j * np.outer(grid, np.arange(n_bins)))
    response = tones @ demeaned
    best = int(np.argmax(np.abs(response)))
    return float(grid[best]), float(np.angle(response[best]))


def _amplitude_offset_init(mid: float, amp: float) -> tuple[float, float]:
    """(zeta0, eta0) from the trace midline and peak-to-peak amplitude,
    inverting mid = (eta cosh 2z + 1 - eta)/2 and amp = eta sinh 2z."""
    gamma = 2.0 * mid - 1.0
    if gamma > 1e-9 and amp > gamma:
        eta0 = (amp * amp - gamma * gamma) / (2.0 * gamma)
    else:
        eta0 = 0.8
    eta0 = float(np.clip(eta0, 1e-3, 1.0 - 1e-9))
    zeta0 = 0.5 * math.asinh(max(amp, 1e-12) / eta0)
    return zeta0, eta0


def _run_lm(residual_jac, x0: np.ndarray) -> tuple[np.ndarray, float, bool]:
    result = least_squares(
        lambda x: residual_jac(x)[0],
        x0,
        jac=lambda x: residual_jac(x)[1],
        method="lm",
        xtol=1e-15,
        ftol=1e-15,
        gtol=1e-13,
        max_nfev=2000,
    )
    rss = float(np.sum(result.fun**2))
    return result.x, rss, bool(result.status > 0)


def _normalize_phase(theta0: float, rate: float, period: float) -> tuple[float, float]:
    if rate < 0:
        theta0, rate = -theta0, -rate
    return theta0 % period, rate


def _flat_result(values: np.ndarray) -> FitResult:
    rss = float(np.sum((values - 0.5) ** 2))
    return FitResult(
        zeta=0.0, eta=1.0, theta0=0.0, rate=0.0, rss=rss, converged=False, degenerate=True
    )


def _unresolvable(zeta: float, eta: float, rss: float, n_residuals: int) -> bool:
    """True when the fitted oscillation amplitude is buried in the residual
    noise, i.e. the data cannot identify (zeta, eta)."""
    noise = math.sqrt(rss / max(n_residuals - 4, 1))
    return eta * math.sinh(2.0 * zeta) < 4.0 * noise


def fit_single(trace: VarianceTrace) -> FitResult:
    """Fit the single-mode variance model to a trace.

    Raises IllPosedFitError when fewer than 8 bins are supplied or the fitted
    sweep covers less than one full period of 2 theta.  A flat trace cannot
    identify eta and is returned with the degenerate flag instead.
    """
    n = np.asarray(trace.bin_center_index, dtype=float)
    v = np.asarray(trace.variance, dtype=float)
    if len(v) < 8:
        raise IllPosedFitError(f"need at least 8 bins, got {len(v)}")
    if np.ptp(v) < _FLAT_TOL * max(1.0, abs(v.mean())):
        return _flat_result(v)

    omega_bin, phase = _fft_tone(v)
    spacing = float(n[1] - n[0])
    rate0 = omega_bin / (2.0 * spacing)
    theta0_0 = 0.5 * ((phase + math.pi) - 2.0 * rate0 * n[0])
    # std of a pure cosine is amplitude/sqrt(2); peak-to-peak = eta sinh 2z
    zeta0, eta0 = _amplitude_offset_init(float(v.mean()), float(2.0 * math.sqrt(2.0) * v.std()))

    def residual_jac(x):
        zeta = float(_softplus(x[0]))
        eta = float(_sigmoid(x[1]))
        theta = x[2] + x[3] * n
        cos2t, sin2t = np.cos(2 * theta), np.sin(2 * theta)
        ch, sh = math.cosh(2 * zeta), math.sinh(2 * zeta)
        model = 0.5 * eta * (ch - cos2t * sh) + 0.5 * (1.0 - eta)
        r = model - v
        d_zeta = eta * (sh - cos2t * ch)
        d_eta = 0.5 * (ch - cos2t * sh) - 0.5
        d_theta0 = eta * sh * sin2t
        d_rate = d_theta0 * n
        jac = np.column_stack(
            [
                d_zeta * _sigmoid(x[0]),
                d_eta * eta * (1.0 - eta),
                d_theta0,
                d_rate,
            ]
        )
        return r, jac

    x0 = np.array([_softplus_inv(max(zeta0, 1e-6)), _logit(eta0), theta0_0, rate0])
    x, rss, converged = _run_lm(residual_jac, x0)
    zeta = float(_softplus(x[0]))
    eta = float(_sigmoid(x[1]))
    theta0, rate = _normalize_phase(float(x[2]), float(x[3]), math.pi)
    if _unresolvable(zeta, eta, rss, len(v)):
        return FitResult(
            zeta=zeta, eta=eta, theta0=theta0, rate=rate, rss=rss,
            converged=False, degenerate=True,
        )
    cycles = 2.0 * rate * (n[-1] - n[0]) / (2.0 * math.pi)
    if cycles < 0.999:
        raise IllPosedFitError(
            f"trace covers {cycles:.3f} periods of 2*theta; need at least one"
        )
    return FitResult(zeta=zeta, eta=eta, theta0=theta0, rate=rate, rss=rss, converged=converged)


def fit_epr(trace_sum: VarianceTrace, trace_diff: VarianceTrace) -> FitResult:
    """Joint fit of the sum and difference variance traces with shared
    (zeta, eta, theta0, rate); theta0 is the offset of theta1 + theta2."""
    n_sum = np.asarray(trace_sum.bin_center_index, dtype=float)
    n_diff = np.asarray(trace_diff.bin_center_index, dtype=float)
    if len(n_sum) != len(n_diff) or np.max(np.abs(n_sum - n_diff)) > 1e-9:
        raise ValueError("sum and difference traces must share their binning")
    n = n_sum
    v_sum = np.asarray(trace_sum.variance, dtype=float)
    v_diff = np.asarray(trace_diff.variance, dtype=float)
    if len(n) < 8:
        raise IllPosedFitError(f"need at least 8 bins, got {len(n)}")

    half_diff = 0.5 * (v_sum - v_diff)
    if np.ptp(half_diff) < _FLAT_TOL * max(1.0, abs(v_sum.mean())):
        return _flat_result(np.concatenate([v_sum, v_diff]))

    omega_bin, phase = _fft_tone(half_diff)
    spacing = float(n[1] - n[0])
    rate0 = omega_bin / spacing
    theta0_0 = phase - rate0 * n[0]
    mid = float(0.5 * (v_sum + v_diff).mean())
    amp = float(2.0 * math.sqrt(2.0) * half_diff.std())
    zeta0, eta0 = _amplitude_offset_init(mid, amp)

    def residual_jac(x):
        zeta = float(_softplus(x[0]))
        eta = float(_sigmoid(x[1]))
        theta = x[2] + x[3] * n
        cost, sint = np.cos(theta), np.sin(theta)
        ch, sh = math.cosh(2 * zeta), math.sinh(2 * zeta)
        r_parts, jac_parts = [], []
        for s, v in ((1.0, v_sum), (-1.0, v_diff)):
            model = 0.5 * eta * (ch + s * cost * sh) + 0.5 * (1.0 - eta)
            r_parts.append(model - v)
            d_zeta = eta * (sh + s * cost * ch)
            d_eta = 0.5 * (ch + s * cost * sh) - 0.5
            d_theta0 = -0.5 * s * eta * sh * sint
            jac_parts.append(
                np.column_stack(
                    [
                        d_zeta * _sigmoid(x[0]),
                        d_eta * eta * (1.0 - eta),
                        d_theta0,
                        d_theta0 * n,
                    ]
                )
            )
        return np.concatenate(r_parts), np.vstack(jac_parts)

    x0 = np.array([_softplus_inv(max(zeta0, 1e-6)), _logit(eta0), theta0_0, rate0])
    x, rss, converged = _run_lm(residual_jac, x0)
    zeta = float(_softplus(x[0]))
    eta = float(_sigmoid(x[1]))
    theta0, rate = _normalize_phase(float(x[2]), float(x[3]), 2.0 * math.pi)
    if _unresolvable(zeta, eta, rss, 2 * len(n)):
        return FitResult(
            zeta=zeta, eta=eta, theta0=theta0, rate=rate, rss=rss,
            converged=False, degenerate=True,
        )
    return FitResult(zeta=zeta, eta=eta, theta0=theta0, rate=rate, rss=rss, converged=converged)


@dataclass(frozen=True)
class SinusoidFit:
    offset: float
    amplitude: float
    omega: float
    phase: float
    rss: float
    converged: bool


def fit_sinusoid(n_index, values) -> SinusoidFit:
    """Fit y = offset + amplitude * cos(omega * n + phase) to a series.

    Utility for frequency/flatness checks on variance traces; `n_index` is
    in sample units, so `omega` is radians per sample.
    """
    n = np.asarray(n_index, dtype=float)
    y = np.asarray(values, dtype=float)
    if len(n) < 4:
        raise IllPosedFitError("need at least 4 points for a sinusoid fit")
    if np.ptp(y) == 0.0:
        return SinusoidFit(float(y[0]), 0.0, 0.0, 0.0, 0.0, True)
    omega_bin, phase = _fft_tone(y)
    spacing = float(n[1] - n[0])
    x0 = np.array(
        [y.mean(), math.sqrt(2.0) * y.std(), omega_bin / spacing, phase - (omega_bin / spacing) * n[0]]
    )

    def residual_jac(x):
        arg = x[2] * n + x[3]
        cos_a, sin_a = np.cos(arg), np.sin(arg)
        r = x[0] + x[1] * cos_a - y
        jac = np.column_stack([np.ones_like(n), cos_a, -x[1] * sin_a * n, -x[1] * sin_a])
        return r, jac

    x, rss, converged = _run_lm(residual_jac, x0)
    offset, amplitude, omega, phase = (float(t) for t in x)
    if amplitude < 0:
        amplitude, phase = -amplitude, phase + math.pi
    if omega < 0:
        omega, phase = -omega, -phase
    return SinusoidFit(offset, amplitude, omega, phase % (2 * math.pi), rss, converged)
