"""Iterative maximum-likelihood reconstruction from homodyne records.

The estimator is the fixed-point iteration rho <- N[G rho G] with
G = (1 - d) I + d R(rho),  R(rho) = (1/M) sum_j Pi_j / Tr(rho Pi_j),
where Pi_j projects onto the quadrature eigenstate of datum j and d is the
dilution factor (d = 1 is the plain, undiluted map).  The log-likelihood is
checked every step; if a step would decrease it, the step is retried with a
smaller d, so accepted iterations are never worse than their predecessor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import IllConditionedDatumError
from .fock import FockDensityMatrix
from .homodyne import QuadratureDataset

_LIKELIHOOD_FLOOR = 1e-300


def quad_wavefunction(n: int, x) -> np.ndarray | float:
    """Harmonic-oscillator eigenfunction psi_n(x) in the vacuum-variance-0.5
    convention, computed by the stable upward recurrence
    psi_{n+1} = (sqrt(2) x psi_n - sqrt(n) psi_{n-1}) / sqrt(n+1)."""
    if n < 0:
        raise ValueError("n must be >= 0")
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    psi = _wavefunction_table(n, x)[n]
    return float(psi[0]) if scalar else psi


def _wavefunction_table(n_max: int, x: np.ndarray) -> np.ndarray:
    """psi_n(x) for all n = 0..n_max, shape (n_max + 1, len(x))."""
    table = np.empty((n_max + 1, len(x)))
    table[0] = math.pi ** -0.25 * np.exp(-0.5 * x * x)
    if n_max >= 1:
        table[1] = math.sqrt(2.0) * x * table[0]
    for k in range(1, n_max):
        table[k + 1] = (math.sqrt(2.0) * x * table[k] - math.sqrt(k) * table[k - 1]) / math.sqrt(k + 1)
    return table


def projector_overlaps(theta: float, x: float, cutoff: int) -> np.ndarray:
    """Overlap vector <n|theta, x> = e^{i n theta} psi_n(x), n = 0..cutoff."""
    if cutoff < 2:
        raise ValueError("cutoff must be >= 2")
    psi = _wavefunction_table(cutoff, np.atleast_1d(float(x)))[:, 0]
    return np.exp(1j * theta * np.arange(cutoff + 1)) * psi


@dataclass(frozen=True, eq=False)
class ProjectorCache:
    """Per-datum overlap vectors (tensor products for two modes), computed
    once per dataset; everything downstream is matrix algebra against it."""

    overlaps: np.ndarray  # (n_records, dim), complex

    @property
    def n_records(self) -> int:
        return self.overlaps.shape[0]

    @property
    def dim(self) -> int:
        return self.overlaps.shape[1]


def build_projector_cache(data: QuadratureDataset, cutoff: int) -> ProjectorCache:
    per_mode = []
    ns = np.arange(cutoff + 1)
    for m in range(data.n_modes):
        psi = _wavefunction_table(cutoff, data.xs[:, m])  # (N+1, M)
        phases = np.exp(1j * np.outer(data.thetas[:, m], ns))  # (M, N+1)
        per_mode.append(phases * psi.T)
    if data.n_modes == 1:
        overlaps = per_mode[0]
    else:
        overlaps = np.einsum("ma,mb->mab", per_mode[0], per_mode[1]).reshape(
            data.n_samples, (cutoff + 1) ** 2
        )
    return ProjectorCache(overlaps)


@dataclass(frozen=True)
class TomographyConfig:
    cutoff: int = 5
    max_iterations: int = 2000
    stop_tol: float = 1e-8
    dilution: float = 1.0

    def __post_init__(self):
        if self.cutoff < 2:
            raise ValueError("cutoff must be >= 2")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.stop_tol <= 0:
            raise ValueError("stop_tol must be > 0")
        if not 0.0 < self.dilution <= 1.0:
            raise ValueError("dilution must be in (0, 1]")


@dataclass
class TomographyDiagnostics:
    iterations: int
    loglik: float
    phase_deficient: bool
    converged: bool
    loglik_history: list[float] = field(default_factory=list, repr=False)

    def to_json_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "loglik": self.loglik,
            "phase_deficient": self.phase_deficient,
        }


def _phase_deficient(data: QuadratureDataset) -> bool:
    for m in range(data.n_modes):
        if len(np.unique(np.round(data.thetas[:, m], 9))) < 3:
            return True
    return False


def reconstruct(
    data: QuadratureDataset, config: TomographyConfig
) -> tuple[FockDensityMatrix, TomographyDiagnostics]:
    """Maximum-likelihood density matrix from a quadrature dataset.

    Starts from the maximally mixed state and iterates the (optionally
    diluted) fixed-point map until the relative log-likelihood gain drops
    below config.stop_tol or config.max_iterations is reached.  Raises
    IllConditionedDatumError, naming the datum, if some record has
    effectively zero likelihood under the current iterate.
    """
    if data.n_samples == 0:
        raise ValueError("dataset is empty")
    cache = build_projector_cache(data, config.cutoff)
    overlaps = cache.overlaps
    conj_overlaps = overlaps.conj()
    m_records, dim = overlaps.shape
    identity = np.eye(dim, dtype=complex)
    rho = identity / dim

    def checked_likelihoods(candidate: np.ndarray) -> np.ndarray:
        p = np.einsum("md,md->m", conj_overlaps @ candidate, overlaps).real
        if p.min() < _LIKELIHOOD_FLOOR:
            bad = int(np.argmin(p))
            raise IllConditionedDatumError(bad, float(p[bad]))
        return p

    p = checked_likelihoods(rho)
    loglik = float(np.sum(np.log(p)))
    history = [loglik]
    converged = False
    iterations = 0

    for _ in range(config.max_iterations):
        weights = 1.0 / (m_records * p)
        r_op = (overlaps * weights[:, None]).T @ conj_overlaps
        r_op = 0.5 * (r_op + r_op.conj().T)

        dilution = config.dilution
        accepted = False
        for _attempt in range(60):
            g = (1.0 - dilution) * identity + dilution * r_op
            candidate = g @ rho @ g.conj().T
            candidate = 0.5 * (candidate + candidate.conj().T)
            candidate /= np.trace(candidate).real
            p_new = checked_likelihoods(candidate)
            loglik_new = float(np.sum(np.log(p_new)))
            if loglik_new >= loglik:
                accepted = True
                break
            dilution *= 0.5
        if not accepted:
            # fixed point reached to machine precision; no admissible step
            converged = True
            break
        iterations += 1
        rho, p = candidate, p_new
        gain = loglik_new - loglik
        loglik = loglik_new
        history.append(loglik)
        if gain <= config.stop_tol * max(1.0, abs(loglik)):
            converged = True
            break

    state = FockDensityMatrix(data.n_modes, config.cutoff, rho)
    diagnostics = TomographyDiagnostics(
        iterations=iterations,
        loglik=loglik,
        phase_deficient=_phase_deficient(data),
        converged=converged,
        loglik_history=history,
    )
    return state, diagnostics
