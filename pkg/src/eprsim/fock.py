"""Truncated photon-number representation of the squeezed-state family.

Density matrices are stored over the basis |n1> (one mode) or |n1 n2>
(two modes, lexicographic, index = n1*(cutoff+1) + n2) with photon numbers
0..cutoff per mode.  The phase convention makes squeezed-vacuum amplitudes
real with alternating sign, which squeezes x for zeta > 0; this matches the
theta = 0 convention of the covariance module.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import UnsupportedStateError
from .gaussian import VACUUM_VARIANCE, GaussianState

_HERMITICITY_TOL = 1e-10
_POSITIVITY_TOL = 1e-10

FOCK_BASIS_LABEL = "fock |n1 n2> lexicographic"


@dataclass(frozen=True, eq=False)
class FockDensityMatrix:
    """Truncated Fock-basis density operator for 1 or 2 modes.

    `tail_tol` is the declared truncation budget: the trace may fall short of
    one by at most this amount.  Hermiticity and positivity are validated on
    construction.
    """

    n_modes: int
    cutoff: int
    matrix: np.ndarray
    tail_tol: float = 1e-3

    def __post_init__(self):
        if self.n_modes not in (1, 2):
            raise ValueError("n_modes must be 1 or 2")
        if self.cutoff < 2:
            raise ValueError("cutoff must be >= 2")
        dim = (self.cutoff + 1) ** self.n_modes
        matrix = np.array(self.matrix, dtype=complex)
        if matrix.shape != (dim, dim):
            raise ValueError(f"matrix must be {dim}x{dim}, got {matrix.shape}")
        if np.max(np.abs(matrix - matrix.conj().T)) > _HERMITICITY_TOL:
            raise ValueError("density matrix is not Hermitian")
        matrix = 0.5 * (matrix + matrix.conj().T)
        eigs = np.linalg.eigvalsh(matrix)
        if eigs.min() < -_POSITIVITY_TOL:
            raise ValueError(f"density matrix has negative eigenvalue {eigs.min():.3e}")
        trace = float(np.trace(matrix).real)
        if not (1.0 - self.tail_tol <= trace <= 1.0 + 1e-9):
            raise ValueError(
                f"trace {trace:.6f} outside [1 - {self.tail_tol:g}, 1]; "
                "raise the cutoff or declare a larger truncation budget"
            )
        matrix.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)

    @property
    def dim(self) -> int:
        return (self.cutoff + 1) ** self.n_modes

    def population(self, *ns: int) -> float:
        """Diagonal occupation of |n1> or |n1 n2>."""
        if len(ns) != self.n_modes:
            raise ValueError(f"expected {self.n_modes} photon number(s)")
        idx = 0
        for n in ns:
            if not 0 <= n <= self.cutoff:
                raise ValueError(f"photon number {n} above cutoff {self.cutoff}")
            idx = idx * (self.cutoff + 1) + n
        return float(self.matrix[idx, idx].real)

    def purity(self) -> float:
        return float(np.trace(self.matrix @ self.matrix).real)

    def to_json_dict(self) -> dict:
        entries = [[float(v.real), float(v.imag)] for v in self.matrix.ravel()]
        return {
            "n_modes": self.n_modes,
            "cutoff": self.cutoff,
            "basis": FOCK_BASIS_LABEL,
            "entries": entries,
        }

    @classmethod
    def from_json_dict(cls, payload: dict, tail_tol: float = 1e-3) -> "FockDensityMatrix":
        if payload.get("basis") != FOCK_BASIS_LABEL:
            raise ValueError(f"unknown basis {payload.get('basis')!r}")
        n_modes = int(payload["n_modes"])
        cutoff = int(payload["cutoff"])
        dim = (cutoff + 1) ** n_modes
        flat = np.array([complex(re, im) for re, im in payload["entries"]])
        return cls(n_modes, cutoff, flat.reshape(dim, dim), tail_tol)


@dataclass(frozen=True)
class TruncationReport:
    """What a Fock-space conversion threw away."""

    trace_deficit: float
    largest_discarded_population: float


def destroy(dim: int) -> np.ndarray:
    """Annihilation operator truncated to `dim` levels."""
    return np.diag(np.sqrt(np.arange(1, dim)), 1).astype(complex)


def number_operator(dim: int) -> np.ndarray:
    return np.diag(np.arange(dim, dtype=float)).astype(complex)


def _lift(op: np.ndarray, mode: int, n_modes: int) -> np.ndarray:
    """Embed a single-mode operator into the 1- or 2-mode product space."""
    if n_modes == 1:
        return op
    eye = np.eye(op.shape[0], dtype=complex)
    return np.kron(op, eye) if mode == 0 else np.kron(eye, op)


def _squeezed_amplitudes(zeta: float, cutoff: int) -> np.ndarray:
    """Fock amplitudes of the x-squeezed vacuum: even levels only,
    c_{2k} = (-tanh z)^k sqrt((2k)!)/(2^k k!) / sqrt(cosh z)."""
    amps = np.zeros(cutoff + 1)
    amps[0] = 1.0 / math.sqrt(math.cosh(zeta))
    t = math.tanh(zeta)
    for k in range(1, cutoff // 2 + 1):
        amps[2 * k] = amps[2 * k - 2] * (-t) * math.sqrt((2 * k - 1) / (2 * k))
    return amps


def squeezed_vacuum_fock(zeta: float, cutoff: int, tail_tol: float = 1e-3) -> FockDensityMatrix:
    """Single-mode squeezed vacuum as a truncated pure-state density matrix."""
    if cutoff < 2:
        raise ValueError("cutoff must be >= 2")
    if zeta < 0:
        raise ValueError("zeta must be >= 0")
    amps = _squeezed_amplitudes(zeta, cutoff)
    return FockDensityMatrix(1, cutoff, np.outer(amps, amps).astype(complex), tail_tol)


def tmsv_fock(zeta: float, cutoff: int, tail_tol: float = 1e-3) -> FockDensityMatrix:
    """Two-mode squeezed vacuum, Schmidt form sqrt(1-L^2) sum_n L^n |nn> with
    L = tanh(zeta); positions correlated, momenta anticorrelated."""
    if cutoff < 2:
        raise ValueError("cutoff must be >= 2")
    if zeta < 0:
        raise ValueError("zeta must be >= 0")
    lam = math.tanh(zeta)
    dim = cutoff + 1
    vec = np.zeros(dim * dim)
    norm = math.sqrt(1.0 - lam * lam)
    for n in range(dim):
        vec[n * dim + n] = norm * lam**n
    return FockDensityMatrix(2, cutoff, np.outer(vec, vec).astype(complex), tail_tol)


def _loss_kraus(dim: int, eta: float) -> list[np.ndarray]:
    """Photon-loss Kraus operators A_k = sum_n sqrt(C(n,k) eta^(n-k) (1-eta)^k)
    |n-k><n|; the set is exactly trace-preserving on the truncated space."""
    ops = []
    ns = np.arange(dim)
    for k in range(dim):
        coeff = np.zeros(dim)
        for n in range(k, dim):
            coeff[n] = math.sqrt(
                math.comb(n, k) * eta ** (n - k) * (1.0 - eta) ** k
            )
        ops.append(np.diag(coeff[k:], k).astype(complex) if k else np.diag(coeff).astype(complex))
    return ops


def loss_fock(rho: FockDensityMatrix, mode: int, eta: float) -> FockDensityMatrix:
    """Apply a loss channel of transmissivity eta to one mode."""
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"transmissivity must be in [0, 1], got {eta}")
    if not 0 <= mode < rho.n_modes:
        raise ValueError(f"mode {mode} out of range")
    dim = rho.cutoff + 1
    out = np.zeros_like(rho.matrix)
    for a in _loss_kraus(dim, eta):
        full = _lift(a, mode, rho.n_modes)
        out += full @ rho.matrix @ full.conj().T
    return FockDensityMatrix(rho.n_modes, rho.cutoff, out, rho.tail_tol)


def rotate_fock(rho: FockDensityMatrix, mode: int, phi: float) -> FockDensityMatrix:
    """Phase-space rotation by phi on one mode: entries pick up e^{i phi (n - m)}.

    Matches the covariance-module convention V'(theta) = V(theta - phi).
    """
    if not 0 <= mode < rho.n_modes:
        raise ValueError(f"mode {mode} out of range")
    dim = rho.cutoff + 1
    phases = np.exp(1j * phi * np.arange(dim))
    u = _lift(np.diag(phases), mode, rho.n_modes)
    return FockDensityMatrix(rho.n_modes, rho.cutoff, u @ rho.matrix @ u.conj().T, rho.tail_tol)


def mean_photon(rho: FockDensityMatrix, mode: int) -> float:
    """Tr(rho n_mode)."""
    if not 0 <= mode < rho.n_modes:
        raise ValueError(f"mode {mode} out of range")
    n_op = _lift(number_operator(rho.cutoff + 1), mode, rho.n_modes)
    return float(np.trace(rho.matrix @ n_op).real)


def _psd_sqrt(matrix: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(matrix)
    # eigh resolves true zeros only to ~eps * ||M||; flooring them before the
    # square root keeps spurious sqrt(eps) directions out of the support
    floor = max(float(vals.max()), 0.0) * len(vals) * np.finfo(float).eps
    vals = np.where(vals > floor, vals, 0.0)
    return (vecs * np.sqrt(vals)) @ vecs.conj().T


def fidelity(rho: FockDensityMatrix, sigma: FockDensityMatrix) -> float:
    """Uhlmann fidelity F = (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2,
    evaluated as the squared nuclear norm of sqrt(sigma) sqrt(rho)."""
    if rho.n_modes != sigma.n_modes or rho.cutoff != sigma.cutoff:
        raise ValueError("states must share mode count and cutoff")
    product = _psd_sqrt(sigma.matrix) @ _psd_sqrt(rho.matrix)
    singular_values = np.linalg.svd(product, compute_uv=False)
    return float(np.sum(singular_values) ** 2)


def quad_covariance(rho: FockDensityMatrix) -> np.ndarray:
    """Symmetrized covariance matrix of (x1, p1[, x2, p2]) computed from the
    truncated quadrature operators.  Used to cross-check Fock-side states
    against their covariance-side sources."""
    dim = rho.cutoff + 1
    a = destroy(dim)
    x = (a + a.conj().T) / math.sqrt(2.0)
    p = (a - a.conj().T) / (1j * math.sqrt(2.0))
    quads = []
    for mode in range(rho.n_modes):
        quads.append(_lift(x, mode, rho.n_modes))
        quads.append(_lift(p, mode, rho.n_modes))
    size = 2 * rho.n_modes
    cov = np.zeros((size, size))
    for i in range(size):
        for j in range(i, size):
            sym = 0.5 * (quads[i] @ quads[j] + quads[j] @ quads[i])
            cov[i, j] = cov[j, i] = float(np.trace(rho.matrix @ sym).real)
    return cov


_FAMILY_TOL = 1e-8


def _single_mode_family(cov: np.ndarray) -> tuple[float, float, float]:
    """Recover (zeta, eta, angle) of a squeezed-then-lossy mode from its 2x2
    covariance, or raise UnsupportedStateError."""
    vals, vecs = np.linalg.eigh(cov)
    v_min, v_max = float(vals[0]), float(vals[1])
    if abs(v_min - VACUUM_VARIANCE) < _FAMILY_TOL and abs(v_max - VACUUM_VARIANCE) < _FAMILY_TOL:
        return 0.0, 1.0, 0.0
    alpha = 2.0 * v_min - 1.0
    beta = 2.0 * v_max - 1.0
    if alpha >= 0.0:
        raise UnsupportedStateError(
            "mode has no squeezed quadrature; not a squeezed vacuum plus loss"
        )
    eta = -alpha * beta / (alpha + beta)
    if not 0.0 < eta <= 1.0 + _FAMILY_TOL:
        raise UnsupportedStateError(f"recovered transmissivity {eta:.6f} is unphysical")
    eta = min(eta, 1.0)
    zeta = 0.5 * math.log((2.0 * v_max - (1.0 - eta)) / eta)
    # eigenvector of the squeezed (smallest) eigenvalue gives the axis
    angle = math.atan2(vecs[1, 0], vecs[0, 0])
    return zeta, eta, angle


def _predicted_single_cov(zeta: float, eta: float, angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    rot = np.array([[c, -s], [s, c]])
    diag = np.diag([
        0.5 * eta * math.exp(-2.0 * zeta) + 0.5 * (1.0 - eta),
        0.5 * eta * math.exp(2.0 * zeta) + 0.5 * (1.0 - eta),
    ])
    return rot @ diag @ rot.T


def _two_mode_family(cov: np.ndarray) -> tuple[float, float]:
    """Recover (zeta, eta) of a symmetric two-mode squeezed state after equal
    loss on both modes, or raise UnsupportedStateError."""
    d = float(cov[0, 0])
    c = float(cov[0, 2])
    pattern = np.array(
        [
            [d, 0.0, c, 0.0],
            [0.0, d, 0.0, -c],
            [c, 0.0, d, 0.0],
            [0.0, -c, 0.0, d],
        ]
    )
    if np.max(np.abs(cov - pattern)) > _FAMILY_TOL:
        raise UnsupportedStateError(
            "covariance does not match the lossy two-mode-squeezed pattern"
        )
    gamma = 2.0 * d - 1.0
    if abs(gamma) < _FAMILY_TOL and abs(c) < _FAMILY_TOL:
        return 0.0, 1.0
    if c < 0:
        raise UnsupportedStateError("positions anticorrelated; outside the family")
    if gamma <= _FAMILY_TOL:
        raise UnsupportedStateError("no thermal excess; outside the family")
    eta = (4.0 * c * c - gamma * gamma) / (2.0 * gamma)
    if not 0.0 < eta <= 1.0 + _FAMILY_TOL:
        raise UnsupportedStateError(f"recovered transmissivity {eta:.6f} is unphysical")
    eta = min(eta, 1.0)
    zeta = 0.5 * math.asinh(2.0 * c / eta)
    return zeta, eta


def _predicted_two_mode_cov(zeta: float, eta: float) -> np.ndarray:
    d = 0.5 * eta * math.cosh(2.0 * zeta) + 0.5 * (1.0 - eta)
    c = 0.5 * eta * math.sinh(2.0 * zeta)
    return np.array(
        [
            [d, 0.0, c, 0.0],
            [0.0, d, 0.0, -c],
            [c, 0.0, d, 0.0],
            [0.0, -c, 0.0, d],
        ]
    )


def gaussian_to_fock(
    state: GaussianState, cutoff: int, tail_tol: float = 1e-3
) -> tuple[FockDensityMatrix, TruncationReport]:
    """Convert a covariance-matrix state of the pipeline family to Fock form.

    Supported states: single-mode squeezed vacuum plus loss (any squeezing
    axis) and the symmetric two-mode squeezed state after equal loss on both
    modes.  Anything else raises UnsupportedStateError.  The state is built
    at a working cutoff above the requested one, the discarded tail is
    measured, and the result is truncated down, so every conversion comes
    with an explicit TruncationReport.
    """
    if state.n_modes not in (1, 2):
        raise UnsupportedStateError("only 1- and 2-mode states are supported")
    if cutoff < 2:
        raise ValueError("cutoff must be >= 2")
    margin = 8
    work = cutoff + margin

    if state.n_modes == 1:
        zeta, eta, angle = _single_mode_family(state.cov)
        if np.max(np.abs(state.cov - _predicted_single_cov(zeta, eta, angle))) > 1e-8:
            raise UnsupportedStateError("covariance not reproduced by the family fit")
        rho = squeezed_vacuum_fock(zeta, work, tail_tol=1.0)
        if angle != 0.0:
            rho = rotate_fock(rho, 0, angle)
        if eta < 1.0:
            rho = loss_fock(rho, 0, eta)
    else:
        zeta, eta = _two_mode_family(state.cov)
        if np.max(np.abs(state.cov - _predicted_two_mode_cov(zeta, eta))) > 1e-8:
            raise UnsupportedStateError("covariance not reproduced by the family fit")
        rho = tmsv_fock(zeta, work, tail_tol=1.0)
        if eta < 1.0:
            rho = loss_fock(rho, 0, eta)
            rho = loss_fock(rho, 1, eta)

    full = rho.matrix
    dim = cutoff + 1
    if state.n_modes == 1:
        kept = full[:dim, :dim]
        discarded_diag = np.diag(full).real[dim:]
    else:
        wdim = work + 1
        four = full.reshape(wdim, wdim, wdim, wdim)
        kept = four[:dim, :dim, :dim, :dim].reshape(dim * dim, dim * dim)
        diag = np.einsum("ijij->ij", four).real
        mask = np.zeros_like(diag, dtype=bool)
        mask[dim:, :] = True
        mask[:, dim:] = True
        discarded_diag = diag[mask]
    trace_kept = float(np.trace(kept).real)
    report = TruncationReport(
        trace_deficit=max(0.0, 1.0 - trace_kept),
        largest_discarded_population=float(discarded_diag.max()) if discarded_diag.size else 0.0,
    )
    out = FockDensityMatrix(state.n_modes, cutoff, kept, tail_tol)
    return out, report
