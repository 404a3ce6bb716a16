"""Generic N-port channel machinery and the three-port closed forms.

The measurement operator decomposes over invariant sectors labelled by
multisets of N-1 level indices.  Within a sector, the resource overlap
structure reduces to a finite Hermitian contraction matrix Gamma built
from the sector eigenproblem; channel outputs are weighted sums of
specific Gamma entries over all multisets up to a truncation cap.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .fock import DensityOperator, FockOperator, as_cutoff
from .two_port import ChannelParams

__all__ = [
    "MARKER",
    "Arrangements",
    "SectorBasis",
    "enumerate_multisets",
    "arrangements",
    "sector_matrix",
    "eta_basis",
    "gamma",
    "gamma_from_basis",
    "gamma_mm_closed",
    "gamma_lm_closed",
    "lm_closed_basis",
    "default_cap",
    "NPortChannel",
    "ThreePortChannel",
    "TwoPortChannel",
    "make_channel",
    "apply_number_element_nport",
    "three_port_apply_number_element",
    "apply_state_nport",
    "input_output_fidelity",
]

MARKER = -1  # slot that carries the summed level index in an arrangement
CLUSTER_TOL = 1e-9  # relative eigenvalue separation treated as degenerate


def enumerate_multisets(ports: int, cap: int) -> list[tuple[int, ...]]:
    """All multisets of ports-1 levels drawn from 0..cap, sorted ascending,
    listed once each in lexicographic order."""
    if ports < 2:
        raise ValueError("at least two ports are required")
    if cap < 0:
        raise ValueError("cap must be nonnegative")
    return list(itertools.combinations_with_replacement(range(cap + 1), ports - 1))


class Arrangements:
    """Distinct orderings of the marker slot together with the multiset values.

    Arrangements are stored in lexicographic order of their slot
    sequences, with the marker sorting before any level value.  This
    fixes the row/column convention of every Gamma matrix.
    """

    def __init__(self, multiset):
        self.multiset = tuple(sorted(multiset))
        base = (MARKER,) + self.multiset
        self.seqs = tuple(sorted(set(itertools.permutations(base))))
        self.index = {s: i for i, s in enumerate(self.seqs)}
        self.ptilde = tuple(i for i, s in enumerate(self.seqs) if s[0] == MARKER)
        self.marker_pos = tuple(s.index(MARKER) for s in self.seqs)
        # swaps[i][v] = arrangements reached from i by exchanging the marker
        # with one slot holding value v (identity excluded)
        uniq = set(self.multiset)
        self.swaps = []
        for i, s in enumerate(self.seqs):
            p = self.marker_pos[i]
            table = {v: [] for v in uniq}
            for q, v in enumerate(s):
                if v in table:
                    t = list(s)
                    t[p], t[q] = t[q], t[p]
                    table[v].append(self.index[tuple(t)])
            self.swaps.append({v: tuple(ix) for v, ix in table.items()})

    @property
    def size(self) -> int:
        return len(self.seqs)

    @property
    def ports(self) -> int:
        return len(self.multiset) + 1


def arrangements(multiset) -> Arrangements:
    return Arrangements(multiset)


def sector_matrix(multiset, lam_y: float) -> np.ndarray:
    """Finite Hermitian matrix whose spectrum gives the sector eigenvalues.

    Row Phi of H c reads g(M) c_Phi plus, for each unique value m, the
    weight (1-lam_y^2) lam_y^(2m) times the sum of c over the marker-swap
    orbit of Phi (identity included).
    """
    if not 0 < lam_y < 1:
        raise ValueError("lambda_y must lie in (0, 1)")
    arr = multiset if isinstance(multiset, Arrangements) else Arrangements(multiset)
    uniq = sorted(set(arr.multiset))
    ly2 = lam_y**2
    g = 1 - (1 - ly2) * sum(ly2**m for m in uniq)
    h = g * np.eye(arr.size)
    for m in uniq:
        w = (1 - ly2) * ly2**m
        for i in range(arr.size):
            h[i, i] += w
            for j in arr.swaps[i][m]:
                h[i, j] += w
    return h


@dataclass
class SectorBasis:
    """Orthonormal sector eigenbasis: column i of `etas` has eigenvalue
    `eigenvalues[i]`, coordinates indexed by the canonical arrangements."""

    multiset: tuple
    etas: np.ndarray
    eigenvalues: np.ndarray
    arrangements: Arrangements

    def __post_init__(self):
        if self.etas.shape != (self.arrangements.size, self.arrangements.size):
            raise ValueError("basis shape does not match the arrangement count")


def _canonical_subspace_basis(block: np.ndarray) -> np.ndarray:
    """Deterministic orthonormal basis of span(block): Gram-Schmidt of the
    subspace projector applied to the standard basis."""
    proj = block @ block.conj().T
    dim, k = block.shape
    out = []
    for i in range(dim):
        v = proj[:, i].copy()
        for u in out:
            v -= u * (u.conj() @ v)
        n = np.linalg.norm(v)
        if n > 1e-8:
            v /= n
            lead = v[np.argmax(np.abs(v) > 1e-8)]
            v *= np.conj(lead) / abs(lead)
            out.append(v)
        if len(out) == k:
            break
    if len(out) != k:
        raise RuntimeError("degenerate-cluster orthogonalization failed")
    return np.column_stack(out)


def eta_basis(multiset, lam_y: float) -> SectorBasis:
    """Sector eigenbasis with deterministic ordering (descending eigenvalue,
    construction order within degenerate clusters).

    Multisets with a single unique value get the discrete-Fourier
    eigenvectors exactly; three-port two-value sectors get the analytic
    basis; everything else is diagonalized numerically with a
    deterministic within-cluster orthonormalization.
    """
    arr = Arrangements(multiset)
    n = arr.ports
    uniq = sorted(set(arr.multiset))
    if len(uniq) == 1:
        m = uniq[0]
        chi_m = (1 - lam_y**2) * lam_y ** (2 * m)
        js = np.arange(n)
        etas = np.exp(2j * np.pi * np.outer(js, js) / n) / math.sqrt(n)
        eigenvalues = np.full(n, 1 - chi_m)
        eigenvalues[0] = 1 + (n - 1) * chi_m
        return SectorBasis(arr.multiset, etas, eigenvalues, arr)
    if n == 3 and len(uniq) == 2:
        return lm_closed_basis(uniq[1], uniq[0], lam_y)
    h = sector_matrix(arr, lam_y)
    w, v = np.linalg.eigh(h)
    order = np.argsort(-w)
    w, v = w[order], v[:, order].astype(complex)
    scale = max(1.0, float(np.abs(w).max()))
    i = 0
    while i < len(w):
        j = i + 1
        while j < len(w) and abs(w[j] - w[i]) <= CLUSTER_TOL * scale:
            j += 1
        if j - i > 1:
            v[:, i:j] = _canonical_subspace_basis(v[:, i:j])
        else:
            lead = v[np.argmax(np.abs(v[:, i]) > 1e-8), i]
            v[:, i] *= np.conj(lead) / abs(lead)
        i = j
    return SectorBasis(arr.multiset, v, w, arr)


def gamma(multiset, lam_y: float) -> np.ndarray:
    """Hermitian sector contraction matrix.

    Basis-free form: H^(-1/2) P~ H^(-1/2) - H^(-1)/N, with P~ the diagonal
    projector onto marker-first arrangements.  This equals the eigenbasis
    contraction for any orthonormal eigenbasis, which resolves the
    degenerate-cluster ambiguity of the pairwise form.
    """
    arr = multiset if isinstance(multiset, Arrangements) else Arrangements(multiset)
    n = arr.ports
    h = sector_matrix(arr, lam_y)
    w, v = np.linalg.eigh(h)
    if w.min() <= 0:
        raise RuntimeError(f"sector matrix for {arr.multiset} is not positive definite")
    inv_sqrt = (v / np.sqrt(w)) @ v.T
    inv = (v / w) @ v.T
    pt = list(arr.ptilde)
    return inv_sqrt[:, pt] @ inv_sqrt[pt, :] - inv / n


def gamma_from_basis(basis: SectorBasis) -> np.ndarray:
    """Gamma contracted from an explicit eigenbasis.

    The uniform 1/N share of each eigenvector's marker-first weight is
    subtracted; with rotation-covariant bases that weight is exactly 1/N
    and the subtraction reduces to excluding the diagonal pairs.
    """
    arr = basis.arrangements
    n = arr.ports
    pt = list(arr.ptilde)
    e = basis.etas
    s = e[pt, :].conj().T @ e[pt, :]  # s[alpha, beta]
    w = (s - np.eye(arr.size) / n) / np.sqrt(np.outer(basis.eigenvalues, basis.eigenvalues))
    return e @ w @ e.conj().T


# ---------------------------------------------------------------------------
# three-port closed forms, written in the analytic label order; the mapping
# to the canonical arrangement order lives in lm_closed_basis
# ---------------------------------------------------------------------------

_MM_NUM = np.array([[4, 1, 1], [1, -2, -2], [1, -2, -2]], dtype=float)
_MM_DEN = np.array([[2, -1, -1], [-1, -1, 2], [-1, 2, -1]], dtype=float)


def gamma_mm_closed(m: int, lam_y: float) -> np.ndarray:
    """Closed-form Gamma for a repeated-value three-port sector {m, m}."""
    chi_m = (1 - lam_y**2) * lam_y ** (2 * m)
    xi1, xi2 = 1 + 2 * chi_m, 1 - chi_m
    return (_MM_NUM / math.sqrt(xi1 * xi2) + _MM_DEN / xi2) / 9


def _lm_phase(l: int, m: int, lam_y: float) -> float:
    expo = 2.0 * (l - m) * math.log(lam_y)
    if expo > 300:  # lam_y^(2(l-m)) overflows; the phase saturates
        return 4 * math.pi / 3 - 2 * math.pi / 3
    t = math.exp(expo)
    return 4 * math.pi / 3 - math.atan2(t * math.sin(2 * math.pi / 3), 1 + t * math.cos(2 * math.pi / 3))


_LM_LABEL_ORDER = lambda l, m: [
    (MARKER, l, m),
    (l, m, MARKER),
    (m, MARKER, l),
    (MARKER, m, l),
    (m, l, MARKER),
    (l, MARKER, m),
]


def _lm_vectors(l: int, m: int, lam_y: float):
    om = np.exp(2j * np.pi / 3)
    phi = _lm_phase(l, m, lam_y)
    e = np.exp(1j * phi)
    root6 = math.sqrt(6)
    eta = {
        1: np.array([1, 1, 1, 1, 1, 1], complex),
        2: np.array([1, 1, 1, -1, -1, -1], complex),
        3: np.array([1, om, om**2, e, om * e, om**2 * e]),
        4: np.array([1, om, om**2, -e, -om * e, -(om**2) * e]),
        5: np.array([1, om**2, om, e.conjugate(), om**2 * e.conjugate(), om * e.conjugate()]),
        6: np.array([1, om**2, om, -e.conjugate(), -(om**2) * e.conjugate(), -om * e.conjugate()]),
    }
    eta = {k: v / root6 for k, v in eta.items()}
    ly2 = lam_y**2
    s = math.sqrt(ly2 ** (2 * l) - ly2 ** (l + m) + ly2 ** (2 * m))
    big, small = (1 - ly2) * (ly2**l + ly2**m), (1 - ly2) * s
    xi = {1: 1 + big, 2: 1 - big, 3: 1 + small, 5: 1 + small, 4: 1 - small, 6: 1 - small}
    return eta, xi, e


def gamma_lm_closed(l: int, m: int, lam_y: float) -> np.ndarray:
    """Closed-form Gamma for a distinct-value three-port sector {l, m}.

    Assembled from the analytic eigenbasis pair by pair; all twelve
    eigenvector pairs with nonzero marker-first overlap contribute,
    including the pair between the two degenerate minus-branches.
    """
    if l == m:
        raise ValueError("use gamma_mm_closed for repeated values")
    eta, xi, e = _lm_vectors(l, m, lam_y)

    def pair(a, b):  # ordered (alpha, beta) contribution
        return np.outer(eta[a], eta[b].conj())

    g = (
        (1 + e) * (pair(1, 3) + pair(5, 1)) / math.sqrt(xi[1] * xi[3])
        + (1 - e) * (pair(1, 4) + pair(6, 1)) / math.sqrt(xi[1] * xi[4])
        + (1 - e) * (pair(2, 3) + pair(5, 2)) / math.sqrt(xi[2] * xi[3])
        + (1 + e) * (pair(2, 4) + pair(6, 2)) / math.sqrt(xi[2] * xi[4])
        + (1 + e**2) * pair(5, 3) / xi[3]
        + (1 - e**2) * pair(6, 3) / math.sqrt(xi[3] * xi[4])
        + (1 + e**2) * pair(6, 4) / xi[4]
        + (1 - e**2) * pair(5, 4) / math.sqrt(xi[3] * xi[4])
    ) / 6
    return g + g.conj().T


def lm_closed_basis(l: int, m: int, lam_y: float) -> SectorBasis:
    """Analytic eigenbasis of a three-port {l, m} sector in canonical
    arrangement coordinates, ordered by descending eigenvalue."""
    if l == m:
        raise ValueError("values must be distinct")
    arr = Arrangements((min(l, m), max(l, m)))
    eta, xi, _ = _lm_vectors(l, m, lam_y)
    perm = [arr.index[s] for s in _LM_LABEL_ORDER(l, m)]
    order = (1, 3, 5, 4, 6, 2)  # descending eigenvalue, construction order in ties
    etas = np.zeros((6, 6), complex)
    eigenvalues = np.zeros(6)
    for col, label in enumerate(order):
        etas[perm, col] = eta[label]
        eigenvalues[col] = xi[label]
    return SectorBasis(arr.multiset, etas, eigenvalues, arr)


# ---------------------------------------------------------------------------
# channel evaluators
# ---------------------------------------------------------------------------


def default_cap(params: ChannelParams, tol: float = 1e-10) -> int:
    """Smallest multiset cap whose geometric remainder falls below tol."""
    lx, n = params.lambda_x, params.ports
    if lx == 0:
        return 0
    cap = 0
    while (n - 1) * lx ** (2 * (cap + 1)) / (1 - lx**2) >= tol:
        cap += 1
        if cap > 100_000:
            raise RuntimeError("cap search failed to converge")
    return cap


class NPortChannel:
    """Generic N-port channel on number-basis elements.

    Precomputes the sector data (arrangements and Gamma matrices) for all
    multisets up to `cap`; evaluation of any element is then a weighted
    gather of Gamma entries.
    """

    def __init__(self, params: ChannelParams, cap: int | None = None, gammas=None):
        self.params = params
        self.cap = default_cap(params) if cap is None else int(cap)
        self.sectors = []
        self._gamma_max = 0.0
        for ms in enumerate_multisets(params.ports, self.cap):
            arr = Arrangements(ms)
            g = gammas[ms] if gammas is not None else gamma(arr, params.lambda_y)
            self.sectors.append((ms, arr, g))
            self._gamma_max = max(self._gamma_max, float(np.abs(g).max()))

    def _prefactor(self, a: int, b: int) -> float:
        p = self.params
        n = p.ports
        return n * (1 - p.lambda_x**2) ** n * (1 - p.lambda_y**2) * (p.lambda_x * p.lambda_y) ** (a + b)

    def offdiag_coefficient(self, a: int, b: int) -> float:
        """Real scaling of |a><b| in the output for an |a><b| input, a != b."""
        if a == b:
            raise ValueError("offdiag_coefficient requires a != b")
        lx = self.params.lambda_x
        total = 0.0 + 0.0j
        for ms, arr, g in self.sectors:
            w = lx ** (2 * sum(ms))
            a_in, b_in = a in ms, b in ms
            s = 0.0 + 0.0j
            for i in arr.ptilde:
                rows = (i, *arr.swaps[i][b]) if b_in else (i,)
                cols = (i, *arr.swaps[i][a]) if a_in else (i,)
                s += g[np.ix_(rows, cols)].sum()
            total += w * s
        coeff = self._prefactor(a, b) * total
        if abs(coeff.imag) > 1e-10 * max(1.0, abs(coeff.real)):
            raise RuntimeError(f"element coefficient unexpectedly complex: {coeff}")
        return float(coeff.real)

    def diagonal_profile(self, a: int, levels: int) -> np.ndarray:
        """Diagonal of the output for an |a><a| input, truncated to `levels`."""
        p = self.params
        lx, n = p.lambda_x, p.ports
        diag = (1 - lx**2) * lx ** (2 * np.arange(levels))
        acc_aa = 0.0
        acc_n = np.zeros(levels)
        for ms, arr, g in self.sectors:
            w = lx ** (2 * sum(ms))
            a_in = a in ms
            for i in arr.ptilde:
                if a_in:
                    orbit = (i, *arr.swaps[i][a])
                    acc_aa += w * g[np.ix_(orbit, orbit)].sum().real
                else:
                    acc_aa += w * g[i, i].real
                seq = arr.seqs[i]
                for q in range(1, n):
                    n_val = seq[q]
                    if n_val == a or n_val >= levels:
                        continue
                    t = list(seq)
                    t[0], t[q] = t[q], t[0]
                    t1 = arr.index[tuple(t)]
                    if a_in:
                        orbit = (t1, *arr.swaps[t1][a])
                        acc_n[n_val] += w * g[t1, orbit].sum().real
                    else:
                        acc_n[n_val] += w * g[t1, t1].real
        pref = self._prefactor(a, a)
        diag[a] += pref * acc_aa
        diag += pref * acc_n
        return diag

    def tail_bound(self, levels: int) -> float:
        """Declared bound on the output mass missed by the cap and level cutoffs."""
        p = self.params
        lx, n = p.lambda_x, p.ports
        if lx == 0:
            return 0.0
        geo = (n - 1) * (lx ** (2 * (self.cap + 1)) + lx ** (2 * levels)) / (1 - lx**2) ** (n - 1)
        per_sector = self._gamma_max * math.factorial(n - 1) * (n + 1) ** 2
        pref = n * (1 - lx**2) ** n * (1 - p.lambda_y**2)
        return pref * per_sector * geo + lx ** (2 * levels)

    def number_element(self, a: int, b: int, cutoff) -> FockOperator:
        cutoff = as_cutoff(cutoff)
        d = cutoff.levels
        if not (0 <= a < d and 0 <= b < d):
            raise ValueError(f"indices ({a}, {b}) outside cutoff {d}")
        mat = np.zeros((d, d), dtype=complex)
        if a != b:
            mat[a, b] = self.offdiag_coefficient(a, b)
        else:
            np.fill_diagonal(mat, self.diagonal_profile(a, d))
        return FockOperator(mat, 1, cutoff, meta={"tail_bound": self.tail_bound(d), "cap": self.cap})


class ThreePortChannel:
    """Three-port channel evaluated from the closed-form sector matrices.

    Tabulates the handful of Gamma entries the reduced level sums use,
    for all sector labels up to `cap`.
    """

    def __init__(self, params: ChannelParams, cap: int | None = None):
        if params.ports != 3:
            raise ValueError("ThreePortChannel requires ports == 3")
        self.params = params
        self.cap = default_cap(params) if cap is None else int(cap)
        lx, ly = params.lambda_x, params.lambda_y
        k = self.cap + 1
        self._lx2 = lx ** (2 * np.arange(k))
        self._g11_mm = np.array([gamma_mm_closed(m, ly)[0, 0] for m in range(k)])
        self._g12_mm = np.array([gamma_mm_closed(m, ly)[0, 1] for m in range(k)])
        self._p11_44 = np.zeros((k, k))
        self._r16_42 = np.zeros((k, k))
        self._p33_55 = np.zeros((k, k))
        self._r35 = np.zeros((k, k))
        self._r56_32 = np.zeros((k, k))
        gmax = max(np.abs(self._g11_mm).max(), np.abs(self._g12_mm).max())
        for l in range(k):
            for m in range(k):
                if l == m:
                    continue
                g = gamma_lm_closed(l, m, ly)
                self._p11_44[l, m] = (g[0, 0] + g[3, 3]).real
                self._r16_42[l, m] = (g[0, 5] + g[3, 1]).real
                self._p33_55[l, m] = (g[2, 2] + g[4, 4]).real
                self._r35[l, m] = g[2, 4].real
                self._r56_32[l, m] = (g[4, 5] + g[2, 1]).real
                gmax = max(gmax, float(np.abs(g).max()))
        self._gamma_max = gmax
        w = self._lx2
        self._sum_mm = float(np.dot(w**2, self._g11_mm))
        pair_w = np.outer(w, w)
        np.fill_diagonal(pair_w, 0.0)
        self._sum_lm = 0.5 * float((pair_w * self._p11_44).sum())
        # c16[a] = sum_{m != a} lx^(2m) Re[Gamma({a,m})_{1,6} + Gamma({a,m})_{4,2}]
        self._c16 = self._r16_42 @ w
        # t33[n] = sum_{l != n} lx^(2l) (Gamma({l,n})_{3,3} + Gamma({l,n})_{5,5})
        self._t33 = w @ self._p33_55

    def _prefactor(self, a: int, b: int) -> float:
        p = self.params
        return 3 * (1 - p.lambda_x**2) ** 3 * (1 - p.lambda_y**2) * (p.lambda_x * p.lambda_y) ** (a + b)

    # levels beyond the cap have no tabulated sector of their own; those
    # sector-specific terms are part of the declared geometric tail
    def _w(self, a: int) -> float:
        return self.params.lambda_x ** (2 * a)

    def _g11(self, a: int) -> float:
        return self._g11_mm[a] if a <= self.cap else 0.0

    def _g12(self, a: int) -> float:
        return self._g12_mm[a] if a <= self.cap else 0.0

    def _c16a(self, a: int) -> float:
        return self._c16[a] if a <= self.cap else 0.0

    def _r56(self, a: int, b: int) -> float:
        return self._r56_32[a, b] if a <= self.cap and b <= self.cap else 0.0

    def offdiag_coefficient(self, a: int, b: int) -> float:
        if a == b:
            raise ValueError("offdiag_coefficient requires a != b")
        wa, wb = self._w(a), self._w(b)
        mm = self._sum_mm + 2 * wa**2 * self._g12(a) + 2 * wb**2 * self._g12(b)
        lm = self._sum_lm + wa * self._c16a(a) + wb * self._c16a(b) + wa * wb * self._r56(a, b)
        return self._prefactor(a, b) * (mm + lm)

    def diagonal_profile(self, a: int, levels: int) -> np.ndarray:
        p = self.params
        lx = p.lambda_x
        w = self._lx2
        wa = self._w(a)
        diag = (1 - lx**2) * lx ** (2 * np.arange(levels))
        pref = self._prefactor(a, a)
        aa = (self._sum_mm - wa**2 * self._g11(a)) + (self._sum_lm + 2 * wa * self._c16a(a))
        diag[a] += pref * aa
        upto = min(levels, self.cap + 1)
        r35_row = self._r35[a, :upto] if a <= self.cap else np.zeros(upto)
        corr = w[:upto] * (self._t33[:upto] + 2 * wa * r35_row)
        mm_corr = -(w[:upto] ** 2) * self._g11_mm[:upto]
        if a < upto:
            corr[a] = w[a] * self._t33[a]  # no r35 self term
            mm_corr[a] = 0.0
        diag[:upto] += pref * (corr + mm_corr)
        return diag

    def tail_bound(self, levels: int) -> float:
        p = self.params
        lx = p.lambda_x
        if lx == 0:
            return 0.0
        geo = 2 * (lx ** (2 * (self.cap + 1)) + lx ** (2 * levels)) / (1 - lx**2) ** 2
        pref = 3 * (1 - lx**2) ** 3 * (1 - p.lambda_y**2)
        return pref * self._gamma_max * 32 * geo + lx ** (2 * levels)

    def number_element(self, a: int, b: int, cutoff) -> FockOperator:
        cutoff = as_cutoff(cutoff)
        d = cutoff.levels
        if not (0 <= a < d and 0 <= b < d):
            raise ValueError(f"indices ({a}, {b}) outside cutoff {d}")
        mat = np.zeros((d, d), dtype=complex)
        if a != b:
            mat[a, b] = self.offdiag_coefficient(a, b)
        else:
            np.fill_diagonal(mat, self.diagonal_profile(a, d))
        return FockOperator(mat, 1, cutoff, meta={"tail_bound": self.tail_bound(d), "cap": self.cap})


class TwoPortChannel:
    """Closed-form two-port channel behind the same evaluator interface."""

    def __init__(self, params: ChannelParams):
        from .two_port import omega

        if params.ports != 2:
            raise ValueError("TwoPortChannel requires ports == 2")
        self.params = params
        self.cap = None
        self._omega, self._omega_tail = omega(params)

    def offdiag_coefficient(self, a: int, b: int) -> float:
        p = self.params
        return p.g * self._omega * (p.lambda_x * p.lambda_y) ** (a + b)

    def diagonal_profile(self, a: int, levels: int) -> np.ndarray:
        p = self.params
        lx, ly = p.lambda_x, p.lambda_y
        m = np.arange(levels)
        chi_y = (1 - ly**2) * ly ** (2 * m)
        inv = 1 / np.sqrt(1 - chi_y**2)
        scale = (lx * ly) ** (2 * a)
        diag = (1 - lx**2) * lx ** (2 * m) * (1 - p.g * scale * inv)
        diag[a] += p.g * self._omega * scale
        return diag

    def tail_bound(self, levels: int) -> float:
        from .two_port import _diag_tail_bound

        return _diag_tail_bound(self.params, levels) + self.params.g * self._omega_tail

    def number_element(self, a: int, b: int, cutoff) -> FockOperator:
        from .two_port import apply_number_element

        return apply_number_element(a, b, self.params, cutoff)


def make_channel(params: ChannelParams, cap: int | None = None):
    if params.ports == 2:
        return TwoPortChannel(params)
    if params.ports == 3:
        return ThreePortChannel(params, cap)
    return NPortChannel(params, cap)


def apply_number_element_nport(a: int, b: int, params: ChannelParams, cap: int | None, cutoff) -> FockOperator:
    """Generic-N channel action on |a><b| (multiset sums truncated at `cap`)."""
    return NPortChannel(params, cap).number_element(a, b, cutoff)


def three_port_apply_number_element(a: int, b: int, params: ChannelParams, cap: int | None, cutoff) -> FockOperator:
    """Three-port channel action on |a><b| via the closed sector forms."""
    return ThreePortChannel(params, cap).number_element(a, b, cutoff)


def apply_state_nport(
    rho_in: DensityOperator,
    params: ChannelParams,
    cap: int | None = None,
    cutoff=None,
    channel=None,
) -> DensityOperator:
    """Apply the channel to a one-mode state, or to the first (signal) mode
    of a signal-idler pair while leaving the idler untouched."""
    if channel is None:
        channel = make_channel(params, cap)
    if not rho_in.op.is_hermitian(tol=1e-10 * max(1.0, float(np.abs(rho_in.matrix).max()))):
        raise ValueError("input state must be Hermitian")
    modes = rho_in.op.modes
    d_in = rho_in.cutoff.levels
    out_cut = rho_in.cutoff if cutoff is None else as_cutoff(cutoff)
    levels = out_cut.levels
    if modes == 1:
        if levels < d_in:
            raise ValueError("output cutoff must cover the input")
        rho = rho_in.matrix
        out = np.zeros((levels, levels), dtype=complex)
        for p in range(d_in):
            for q in range(d_in):
                if p != q and rho[p, q] != 0:
                    out[p, q] = channel.offdiag_coefficient(p, q) * rho[p, q]
        for s in range(d_in):
            out[np.diag_indices(levels)] += rho[s, s].real * channel.diagonal_profile(s, levels)
        deficit = rho_in.trace_deficit + channel.tail_bound(levels)
        return DensityOperator(FockOperator(out, 1, out_cut), trace_deficit=deficit)
    if modes == 2:
        if levels != d_in:
            raise ValueError("signal and idler keep a common cutoff for two-mode inputs")
        rho = rho_in.matrix.reshape(d_in, d_in, d_in, d_in)  # (s, i, s', j)
        out = np.zeros_like(rho)
        for p in range(d_in):
            for q in range(d_in):
                if p != q:
                    out[p, :, q, :] = channel.offdiag_coefficient(p, q) * rho[p, :, q, :]
        profiles = np.stack([channel.diagonal_profile(s, d_in) for s in range(d_in)])
        for n in range(d_in):
            out[n, :, n, :] = np.tensordot(profiles[:, n], rho[np.arange(d_in), :, np.arange(d_in), :], axes=(0, 0))
        deficit = rho_in.trace_deficit + channel.tail_bound(levels)
        mat = out.reshape(d_in * d_in, d_in * d_in)
        return DensityOperator(FockOperator(mat, 2, out_cut), trace_deficit=deficit)
    raise ValueError("apply_state_nport expects a one- or two-mode input")


def input_output_fidelity(
    kind: str,
    params: ChannelParams,
    lambda_in: float | None = None,
    levels: int | None = None,
    cap: int | None = None,
    channel=None,
):
    """Fidelity between an entangled input and the output after the signal
    half passes through the channel.

    kind 'tmsv' needs `lambda_in` and an output truncation; 'bell2' and
    'bell3' compare on the exact code subspace, which the channel maps
    outside of only diagonally.  Returns (fidelity, metadata).
    """
    if channel is None:
        channel = make_channel(params, cap)
    if kind == "tmsv":
        if lambda_in is None or levels is None:
            raise ValueError("tmsv fidelity needs lambda_in and a level cutoff")
        lam2 = lambda_in**2
        w = lam2 ** np.arange(levels)
        total = 0.0
        for a in range(levels):
            prof = channel.diagonal_profile(a, levels)
            total += w[a] * w[a] * prof[a]
            for b in range(levels):
                if b != a:
                    total += w[a] * w[b] * channel.offdiag_coefficient(a, b)
        fid = (1 - lam2) ** 2 * total
        meta = {"levels": levels, "cap": channel.cap, "input_tail": lam2**levels}
    elif kind in ("bell2", "bell3"):
        d = 2 if kind == "bell2" else 3
        total = 0.0
        for a in range(d):
            total += channel.diagonal_profile(a, d)[a]
            for b in range(d):
                if b != a:
                    total += channel.offdiag_coefficient(a, b)
        fid = total / d**2
        meta = {"levels": d, "cap": channel.cap, "input_tail": 0.0}
    else:
        raise ValueError(f"unknown input kind {kind!r}")
    return float(fid), meta
