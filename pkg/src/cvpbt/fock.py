"""Dense truncated Fock-space primitives.

Everything in this package lives on k bosonic modes truncated to D Fock
levels each (states |0> .. |D-1>).  Multimode arrays are flattened
row-major with the first-listed mode slowest; the mode order used
throughout is (C, A_1, ..., A_N, B_1).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Cutoff",
    "FockVector",
    "FockOperator",
    "DensityOperator",
    "as_cutoff",
    "adaptive_cutoff",
    "coherent_cutoff",
    "chi",
    "coherent_ket",
    "tmsv_ket",
    "thermal_state",
    "number_ket",
    "pure_density",
    "trace_norm",
    "fidelity",
    "mean_photon_number",
    "partial_trace",
    "permute_modes",
    "hermitian_sqrt",
    "hermitian_inv_sqrt",
]

KERNEL_TOL = 1e-10  # relative eigenvalue threshold below which a mode counts as kernel


@dataclass(frozen=True)
class Cutoff:
    """Number of retained Fock levels per mode."""

    levels: int

    def __post_init__(self):
        if not isinstance(self.levels, (int, np.integer)) or self.levels < 2:
            raise ValueError(f"cutoff must retain at least two Fock levels, got {self.levels}")


def as_cutoff(cutoff) -> Cutoff:
    return cutoff if isinstance(cutoff, Cutoff) else Cutoff(int(cutoff))


def adaptive_cutoff(lam: float, tol: float = 1e-12, minimum: int = 2) -> Cutoff:
    """Smallest cutoff whose geometric tail lam**(2 D) falls below tol."""
    if not 0 <= lam < 1:
        raise ValueError(f"squeezing parameter must lie in [0, 1), got {lam}")
    if lam == 0:
        return Cutoff(minimum)
    need = math.ceil(math.log(tol) / (2 * math.log(lam)))
    return Cutoff(max(minimum, need))


def coherent_cutoff(alpha: complex, tol: float = 1e-12, minimum: int = 2) -> Cutoff:
    """Smallest cutoff whose Poisson tail for |alpha|**2 falls below tol."""
    mu = abs(alpha) ** 2
    if mu == 0:
        return Cutoff(minimum)
    term = math.exp(-mu)
    cum = term
    k = 0
    while 1 - cum >= tol and k < 100_000:
        k += 1
        term *= mu / k
        cum += term
    return Cutoff(max(minimum, k + 1))


@dataclass(frozen=True)
class FockVector:
    """Ket on `modes` modes, amplitudes flattened row-major (first mode slowest)."""

    amplitudes: np.ndarray
    modes: int
    cutoff: Cutoff

    def __post_init__(self):
        d = self.cutoff.levels ** self.modes
        if self.amplitudes.shape != (d,):
            raise ValueError(f"expected {d} amplitudes, got shape {self.amplitudes.shape}")
        if not np.all(np.isfinite(self.amplitudes)):
            raise ValueError("non-finite amplitudes")

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


@dataclass
class FockOperator:
    """Square operator on `modes` modes with a shared per-mode cutoff.

    `meta` carries optional numerical provenance (declared truncation
    tails, suspect-eigenvalue counts, ...); it never affects equality
    of the numerical content.
    """

    matrix: np.ndarray
    modes: int
    cutoff: Cutoff
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        d = self.cutoff.levels ** self.modes
        if self.matrix.shape != (d, d):
            raise ValueError(f"expected {d}x{d} matrix, got shape {self.matrix.shape}")

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        return bool(np.abs(self.matrix - self.matrix.conj().T).max() <= tol)

    def trace(self) -> complex:
        return complex(np.trace(self.matrix))


@dataclass
class DensityOperator:
    """Quantum state with an explicit bound on the trace mass lost to truncation."""

    op: FockOperator
    trace_deficit: float = 0.0

    def __post_init__(self):
        if self.trace_deficit < 0:
            raise ValueError("trace_deficit must be nonnegative")
        if not self.op.is_hermitian(tol=1e-10 * max(1.0, float(np.abs(self.op.matrix).max()))):
            raise ValueError("density operator must be Hermitian")

    @property
    def matrix(self) -> np.ndarray:
        return self.op.matrix

    @property
    def cutoff(self) -> Cutoff:
        return self.op.cutoff

    def trace(self) -> float:
        return float(np.trace(self.op.matrix).real)


def chi(lam: float, r: int) -> float:
    """Geometric weight (1 - lam**2) lam**(2 r) of the r-th Fock level."""
    if not 0 <= lam < 1:
        raise ValueError(f"squeezing parameter must lie in [0, 1), got {lam}")
    if r < 0:
        raise ValueError("level index must be nonnegative")
    return (1 - lam**2) * lam ** (2 * r)


def chi_vector(lam: float, levels: int) -> np.ndarray:
    if not 0 <= lam < 1:
        raise ValueError(f"squeezing parameter must lie in [0, 1), got {lam}")
    return (1 - lam**2) * lam ** (2 * np.arange(levels))


def coherent_ket(alpha: complex, cutoff) -> FockVector:
    """Coherent state |alpha>, amplitudes exp(-|a|^2/2) a^n / sqrt(n!).

    The Poisson tail beyond the cutoff shows up as a squared norm
    slightly below one; callers pick the cutoff accordingly.
    """
    cutoff = as_cutoff(cutoff)
    d = cutoff.levels
    amps = np.zeros(d, dtype=complex)
    amps[0] = math.exp(-abs(alpha) ** 2 / 2)
    for n in range(1, d):
        amps[n] = amps[n - 1] * alpha / math.sqrt(n)
    return FockVector(amps, 1, cutoff)


def tmsv_ket(lam: float, cutoff) -> FockVector:
    """Two-mode squeezed vacuum sqrt(1-lam^2) sum_n (-lam)^n |n,n>."""
    if not 0 <= lam < 1:
        raise ValueError(f"squeezing parameter must lie in [0, 1), got {lam}")
    cutoff = as_cutoff(cutoff)
    d = cutoff.levels
    amps = np.zeros(d * d, dtype=complex)
    amps[:: d + 1] = math.sqrt(1 - lam**2) * (-lam) ** np.arange(d)
    return FockVector(amps, 2, cutoff)


def thermal_state(lam: float, cutoff) -> DensityOperator:
    """Thermal state with mean photon number lam^2/(1-lam^2), diagonal weights chi(lam, m)."""
    cutoff = as_cutoff(cutoff)
    d = cutoff.levels
    op = FockOperator(np.diag(chi_vector(lam, d)).astype(complex), 1, cutoff)
    return DensityOperator(op, trace_deficit=lam ** (2 * d))


def number_ket(n: int, cutoff) -> FockVector:
    cutoff = as_cutoff(cutoff)
    if not 0 <= n < cutoff.levels:
        raise ValueError(f"level {n} outside cutoff {cutoff.levels}")
    amps = np.zeros(cutoff.levels, dtype=complex)
    amps[n] = 1.0
    return FockVector(amps, 1, cutoff)


def pure_density(ket: FockVector) -> DensityOperator:
    """|psi><psi| with the truncation-tail deficit 1 - <psi|psi>."""
    mat = np.outer(ket.amplitudes, ket.amplitudes.conj())
    deficit = max(0.0, 1.0 - ket.norm() ** 2)
    return DensityOperator(FockOperator(mat, ket.modes, ket.cutoff), trace_deficit=deficit)


def _as_matrix(a) -> np.ndarray:
    if isinstance(a, DensityOperator):
        return a.op.matrix
    if isinstance(a, FockOperator):
        return a.matrix
    return np.asarray(a)


def trace_norm(a) -> float:
    """Sum of singular values; for a Hermitian input, the sum of |eigenvalues|."""
    mat = _as_matrix(a)
    if not np.all(np.isfinite(mat)):
        raise ValueError("trace_norm input contains non-finite entries")
    if np.abs(mat - mat.conj().T).max() <= 1e-12 * max(1.0, float(np.abs(mat).max())):
        return float(np.abs(np.linalg.eigvalsh(mat)).sum())
    return float(np.linalg.svd(mat, compute_uv=False).sum())


def _psd_root(mat: np.ndarray, tol: float) -> np.ndarray:
    evals, vecs = np.linalg.eigh(mat)
    if evals.min() < -tol:
        raise ValueError(f"state has negative eigenvalue {evals.min():.3e} beyond tolerance {tol:.1e}")
    return (vecs * np.sqrt(np.clip(evals, 0, None))) @ vecs.conj().T


def fidelity(rho: DensityOperator, sigma: DensityOperator, tol: float = 1e-8) -> float:
    """Uhlmann fidelity Tr[sqrt(sqrt(s) r sqrt(s))]^2 of two (near-)PSD states.

    Evaluated as the squared nuclear norm of sqrt(r) sqrt(s), which avoids
    squaring roundoff noise from near-kernel eigenvalues.
    """
    r, s = _as_matrix(rho), _as_matrix(sigma)
    if r.shape != s.shape:
        raise ValueError("fidelity requires states on the same truncated space")
    product = _psd_root(r, tol) @ _psd_root(s, tol)
    return float(np.linalg.svd(product, compute_uv=False).sum() ** 2)


def mean_photon_number(rho: DensityOperator) -> float:
    """First moment sum_n n <n|rho|n> of a single-mode state."""
    if rho.op.modes != 1:
        raise ValueError("mean_photon_number expects a single-mode state")
    diag = np.diag(rho.op.matrix).real
    return float(np.dot(np.arange(diag.size), diag))


def partial_trace(op: FockOperator, keep) -> FockOperator:
    """Trace out all modes not listed in `keep` (indices into the mode order)."""
    keep = sorted(keep)
    k, d = op.modes, op.cutoff.levels
    if any(not 0 <= m < k for m in keep):
        raise ValueError("keep indices outside mode range")
    tensor = op.matrix.reshape((d,) * (2 * k))
    drop = [m for m in range(k) if m not in keep]
    for n_done, m in enumerate(drop):
        ax = m - n_done
        kk = k - n_done
        tensor = np.trace(tensor, axis1=ax, axis2=ax + kk)
    kept = len(keep)
    dim = d**kept
    return FockOperator(tensor.reshape(dim, dim), kept, op.cutoff)


def permute_modes(matrix: np.ndarray, perm, levels: int) -> np.ndarray:
    """Reorder tensor factors: output mode i is input mode perm[i]."""
    k = len(perm)
    tensor = matrix.reshape((levels,) * (2 * k))
    axes = list(perm) + [p + k for p in perm]
    out = np.transpose(tensor, axes)
    dim = levels**k
    return np.ascontiguousarray(out.reshape(dim, dim))


def hermitian_sqrt(mat: np.ndarray, kernel_tol: float = KERNEL_TOL) -> np.ndarray:
    """PSD square root via eigendecomposition; eigenvalues below the relative
    kernel threshold are treated as exact zeros."""
    w, v = np.linalg.eigh(mat)
    scale = max(w.max(), 0.0)
    w = np.where(w > kernel_tol * scale, w, 0.0)
    return (v * np.sqrt(w)) @ v.conj().T


def hermitian_inv_sqrt(mat: np.ndarray, kernel_tol: float = KERNEL_TOL):
    """Pseudo-inverse square root and kernel projector of a PSD matrix.

    Returns (inv_sqrt, kernel_projector); the kernel share is decided by
    the same relative threshold used everywhere in the package.
    """
    w, v = np.linalg.eigh(mat)
    scale = max(w.max(), 0.0)
    support = w > kernel_tol * scale
    inv = np.where(support, 1.0 / np.sqrt(np.where(support, w, 1.0)), 0.0)
    inv_sqrt = (v * inv) @ v.conj().T
    kernel = (v * (~support)) @ v.conj().T
    return inv_sqrt, kernel
