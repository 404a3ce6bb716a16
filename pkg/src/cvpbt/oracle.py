"""Brute-force protocol construction of the teleportation channel.

Everything here is built directly from the protocol definition in a
truncated multimode Fock space: the port resource, the summed overlap
operator rho, the square-root measurement, and the channel as a
partial trace.  No closed-form channel expression enters, which makes
this module the independent ground truth for the analytic ones.

Mode order is (C, A_1, ..., A_N), C slowest; the receiver mode B_1
joins only in the reduced resource.
"""
from __future__ import annotations

import os
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.csgraph as csgraph

from .fock import Cutoff, FockOperator, as_cutoff, chi_vector, permute_modes
from .two_port import ChannelParams

__all__ = [
    "MemoryBudgetError",
    "TruncatedProtocol",
    "build_sigma",
    "build_rho",
    "build_povm_element",
    "povm_element_explicit",
    "reduced_resource",
    "brute_channel_element",
    "verification_report",
]

DEFAULT_BUDGET_MB = 2048.0
SUSPECT_BAND = 1e-6  # relative; eigenvalues between kernel_tol and this are flagged


class MemoryBudgetError(RuntimeError):
    def __init__(self, required_mb: float, budget_mb: float, what: str):
        super().__init__(
            f"{what} needs about {required_mb:.0f} MiB, budget is {budget_mb:.0f} MiB "
            "(raise CVPBT_MEM_BUDGET_MB to override)"
        )
        self.required_mb = required_mb
        self.budget_mb = budget_mb


def _env_budget() -> float:
    raw = os.environ.get("CVPBT_MEM_BUDGET_MB")
    if raw is None:
        return DEFAULT_BUDGET_MB
    try:
        return float(raw)
    except ValueError as exc:
        raise ValueError(f"CVPBT_MEM_BUDGET_MB must be numeric, got {raw!r}") from exc


@dataclass
class TruncatedProtocol:
    """Protocol objects for N ports at a common per-mode cutoff.

    kernel_tol is the relative eigenvalue threshold separating the kernel
    of rho from its support; eigenvalues between kernel_tol and the
    suspect band limit are counted and reported rather than silently
    classified.
    """

    params: ChannelParams
    cutoff: Cutoff
    kernel_tol: float = 1e-10
    mem_budget_mb: float | None = None
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.cutoff = as_cutoff(self.cutoff)
        if not 0 < self.kernel_tol <= 1e-6:
            raise ValueError("kernel_tol must lie in (0, 1e-6]")
        if self.mem_budget_mb is None:
            self.mem_budget_mb = _env_budget()

    # -- dimensions ---------------------------------------------------------

    @property
    def levels(self) -> int:
        return self.cutoff.levels

    @property
    def ports(self) -> int:
        return self.params.ports

    @property
    def dim(self) -> int:
        return self.levels ** (self.ports + 1)

    def dense_mb(self, extra_modes: int = 0) -> float:
        d = self.levels ** (self.ports + 1 + extra_modes)
        return d * d * 8 / 2**20

    def working_set_mb(self) -> float:
        """Rough peak for the sparse-block route: the measurement blocks plus
        one dense (levels^N)^2 slice during the channel gather."""
        dn = self.levels**self.ports
        return 3 * dn * dn * 8 / 2**20

    def _require(self, mb: float, what: str):
        if mb > self.mem_budget_mb:
            raise MemoryBudgetError(mb, self.mem_budget_mb, what)

    # -- sparse protocol objects --------------------------------------------

    def _port_layout(self, i: int):
        """Flat-index offsets of the spectator A modes and the weight of A_i."""
        d, n = self.levels, self.ports
        weights = [d ** (n - j) for j in range(1, n + 1)]  # A_1 .. A_N
        spectators = [w for j, w in enumerate(weights, start=1) if j != i]
        rest = np.arange(d ** (n - 1))
        offs = np.zeros(d ** (n - 1), dtype=np.int64)
        r = rest.copy()
        for w in reversed(spectators):
            offs += (r % d) * w
            r //= d
        return offs, weights[i - 1]

    def sigma_sparse(self, i: int) -> sp.csr_matrix:
        if not 1 <= i <= self.ports:
            raise ValueError(f"port index {i} outside 1..{self.ports}")
        key = ("sigma", i)
        if key not in self._cache:
            d = self.levels
            ly = self.params.lambda_y
            offs, w_i = self._port_layout(i)
            c = np.arange(d)
            amps = (1 - ly**2) * np.outer((-ly) ** c, (-ly) ** c)  # (c, c')
            base_row = (c * d**self.ports + c * w_i)[:, None, None]
            base_col = (c * d**self.ports + c * w_i)[None, :, None]
            rows = (base_row + offs[None, None, :]).repeat(d, axis=1)
            cols = (base_col + offs[None, None, :]).repeat(d, axis=0)
            vals = np.broadcast_to(amps[:, :, None], rows.shape)
            mat = sp.coo_matrix(
                (vals.ravel(), (rows.ravel(), cols.ravel())), shape=(self.dim, self.dim)
            )
            self._cache[key] = mat.tocsr()
        return self._cache[key]

    def rho_sparse(self) -> sp.csr_matrix:
        if "rho" not in self._cache:
            total = self.sigma_sparse(1)
            for i in range(2, self.ports + 1):
                total = total + self.sigma_sparse(i)
            self._cache["rho"] = total.tocsr()
        return self._cache["rho"]

    # -- spectral decomposition over connected components --------------------

    def _components(self):
        """Invariant blocks of rho discovered from its sparsity pattern alone."""
        if "components" not in self._cache:
            rho = self.rho_sparse()
            pattern = rho.copy()
            pattern.data = np.ones_like(pattern.data)
            n_comp, labels = csgraph.connected_components(pattern, directed=False)
            groups: dict[int, list[int]] = {}
            for idx, lab in enumerate(labels):
                groups.setdefault(int(lab), []).append(idx)
            blocks = []
            max_eig = 0.0
            for members in groups.values():
                if len(members) == 1:
                    continue  # untouched by rho: exact kernel
                idx = np.asarray(members, dtype=np.int64)
                sub = rho[idx][:, idx].toarray()
                w, v = np.linalg.eigh(sub)
                blocks.append((idx, w, v))
                max_eig = max(max_eig, float(w.max()))
            self._cache["components"] = (blocks, max_eig)
        return self._cache["components"]

    def eigenvalue_census(self) -> dict:
        """Counts of kernel / suspect-band / support eigenvalues of rho."""
        blocks, max_eig = self._components()
        kernel = suspect = support = 0
        for _, w, _ in blocks:
            kernel += int((w <= self.kernel_tol * max_eig).sum())
            band = (w > self.kernel_tol * max_eig) & (w <= SUSPECT_BAND * max_eig)
            suspect += int(band.sum())
            support += int((w > SUSPECT_BAND * max_eig).sum())
        explicit = sum(len(idx) for idx, _, _ in blocks)
        kernel += self.dim - explicit  # singleton components
        return {"kernel": kernel, "suspect": suspect, "support": support, "max_eigenvalue": max_eig}

    def povm_sparse(self) -> sp.csr_matrix:
        """First measurement element: inverse-root sandwich of sigma_1 plus the
        uniform kernel share, assembled block by block."""
        if "povm" not in self._cache:
            blocks, max_eig = self._components()
            s1 = self.sigma_sparse(1)
            n = self.ports
            rows, cols, vals = [], [], []
            for idx, w, v in blocks:
                keep = w > self.kernel_tol * max_eig
                vk = v[:, keep]
                inv_root = (vk / np.sqrt(w[keep])) @ vk.T
                support = vk @ vk.T
                s1_block = s1[idx][:, idx].toarray()
                block = inv_root @ s1_block @ inv_root - support / n
                rr, cc = np.meshgrid(idx, idx, indexing="ij")
                rows.append(rr.ravel())
                cols.append(cc.ravel())
                vals.append(block.ravel())
            mat = sp.coo_matrix(
                (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                shape=(self.dim, self.dim),
            ).tocsr()
            mat = mat + sp.identity(self.dim, format="csr") / n
            self._cache["povm"] = mat
        return self._cache["povm"]


# ---------------------------------------------------------------------------
# dense protocol surfaces
# ---------------------------------------------------------------------------


def build_sigma(i: int, proto: TruncatedProtocol) -> FockOperator:
    """Port overlap operator for port i on modes (C, A_1..A_N), dense."""
    proto._require(proto.dense_mb(), "dense sigma")
    mat = proto.sigma_sparse(i).toarray()
    return FockOperator(mat, proto.ports + 1, proto.cutoff)


def build_rho(proto: TruncatedProtocol) -> FockOperator:
    proto._require(proto.dense_mb(), "dense rho")
    mat = proto.rho_sparse().toarray()
    return FockOperator(mat, proto.ports + 1, proto.cutoff)


def build_povm_element(proto: TruncatedProtocol) -> FockOperator:
    """First POVM element, dense, with the eigenvalue census in `meta`."""
    proto._require(proto.dense_mb(), "dense measurement element")
    mat = proto.povm_sparse().toarray()
    return FockOperator(mat, proto.ports + 1, proto.cutoff, meta=proto.eigenvalue_census())


def povm_element_explicit(proto: TruncatedProtocol) -> FockOperator:
    """Independent two-port construction of the first POVM element from the
    explicit resolved form (no eigendecomposition involved)."""
    if proto.ports != 2:
        raise ValueError("the explicit measurement form is the two-port case")
    proto._require(proto.dense_mb(), "dense measurement element")
    d = proto.levels
    ly = proto.params.lambda_y
    chi_y = chi_vector(ly, d)
    inv = 1 / np.sqrt(1 - chi_y**2)
    mat = np.eye(proto.dim) / 2
    signs = (-ly) ** np.arange(d)
    w = (1 - ly**2) / 2 * np.outer(signs, signs)  # (p, q)
    p, q = np.meshgrid(np.arange(d), np.arange(d), indexing="ij")
    for m in range(d):
        r1 = (p * d + p) * d + m
        c1 = (q * d + q) * d + m
        mat[r1.ravel(), c1.ravel()] += (w * inv[m]).ravel()
        r2 = (p * d + m) * d + p
        c2 = (q * d + m) * d + q
        mat[r2.ravel(), c2.ravel()] -= (w * inv[m]).ravel()
    return FockOperator(mat, 3, proto.cutoff)


def reduced_resource(a: int, b: int, proto: TruncatedProtocol) -> FockOperator:
    """Signal element |a><b| with the port resource, spectator receiver modes
    already traced out: an operator on (C, A_1..A_N, B_1)."""
    d, n = proto.levels, proto.ports
    if not (0 <= a < d and 0 <= b < d):
        raise ValueError(f"indices ({a}, {b}) outside cutoff {d}")
    proto._require(proto.dense_mb(extra_modes=1), "dense reduced resource")
    lx = proto.params.lambda_x
    signal = np.zeros((d, d))
    signal[a, b] = 1.0
    amps = (-lx) ** np.arange(d)
    pair = (1 - lx**2) * np.einsum("p,q->pq", amps, amps)
    tmsv = np.zeros((d * d, d * d))
    for pp in range(d):
        for qq in range(d):
            tmsv[pp * d + pp, qq * d + qq] = pair[pp, qq]
    mat = np.kron(signal, tmsv)
    th = np.diag(chi_vector(lx, d))
    for _ in range(n - 1):
        mat = np.kron(mat, th)
    # modes currently (C, A_1, B_1, A_2..A_N) -> reorder to (C, A_1..A_N, B_1)
    perm = [0, 1] + list(range(3, n + 2)) + [2]
    return FockOperator(permute_modes(mat, perm, d), n + 2, proto.cutoff)


def _gather_subscripts(n: int) -> str:
    rest = "".join(chr(ord("r") + k) for k in range(n - 1))
    return f"p{rest}q{rest},{','.join(rest)}->qp" if rest else "pq->qp"


def brute_channel_element(a: int, b: int, proto: TruncatedProtocol) -> FockOperator:
    """Channel output for |a><b| straight from the protocol: N times the
    partial trace of the measurement against the reduced resource.

    The spectator thermal factors are contracted index-wise instead of
    materializing the resource on all N+2 modes, which is the same trace
    evaluated in a fixed basis.
    """
    d, n = proto.levels, proto.ports
    if not (0 <= a < d and 0 <= b < d):
        raise ValueError(f"indices ({a}, {b}) outside cutoff {d}")
    proto._require(proto.working_set_mb(), "channel gather")
    m = proto.povm_sparse()
    dn = d**n
    block = m[b * dn : (b + 1) * dn, a * dn : (a + 1) * dn].toarray()
    tensor = block.reshape((d,) * (2 * n))
    lx = proto.params.lambda_x
    chi_x = chi_vector(lx, d)
    if n == 1:
        raise ValueError("at least two ports are required")
    operands = [tensor] + [chi_x] * (n - 1)
    gathered = np.einsum(_gather_subscripts(n), *operands)
    signs = (-lx) ** np.arange(d)
    out = n * (1 - lx**2) * np.outer(signs, signs) * gathered
    return FockOperator(out.astype(complex), 1, proto.cutoff, meta=proto.eigenvalue_census())


def _analytic_reference(proto: TruncatedProtocol):
    from . import nport, two_port

    cap = proto.levels - 1
    if proto.ports == 2:

        def element(a, b):
            return two_port.apply_number_element(a, b, proto.params, proto.cutoff).matrix

        return element
    channel = nport.make_channel(proto.params, cap=cap)

    def element(a, b):
        return channel.number_element(a, b, proto.cutoff).matrix

    return element


def verification_report(proto: TruncatedProtocol, a_max: int, b_max: int, tol: float = 1e-6) -> dict:
    """Compare the protocol channel against the analytic one element by element.

    Returns a JSON-ready report: per-element deviations, trace deviations,
    eigenvalue census, dimensions, and runtimes.
    """
    if a_max >= proto.levels or b_max >= proto.levels:
        raise ValueError("element range exceeds the cutoff")
    t0 = time.perf_counter()
    analytic = _analytic_reference(proto)
    rows = []
    worst = 0.0
    for a in range(a_max + 1):
        for b in range(b_max + 1):
            t1 = time.perf_counter()
            brute = brute_channel_element(a, b, proto).matrix
            dev = float(np.abs(brute - analytic(a, b)).max())
            entry = {
                "a": a,
                "b": b,
                "max_deviation": dev,
                "trace_deviation": abs(float(brute.trace().real) - 1.0) if a == b else None,
                "seconds": time.perf_counter() - t1,
            }
            rows.append(entry)
            worst = max(worst, dev)
    census = proto.eigenvalue_census()
    return {
        "ports": proto.ports,
        "levels": proto.levels,
        "lambda_x": proto.params.lambda_x,
        "lambda_y": proto.params.lambda_y,
        "kernel_tol": proto.kernel_tol,
        "dimension": proto.dim,
        "tolerance": tol,
        "max_deviation": worst,
        "passed": bool(worst <= tol),
        "eigenvalue_census": census,
        "elements": rows,
        "total_seconds": time.perf_counter() - t0,
    }
