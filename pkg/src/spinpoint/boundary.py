"""Boundary pairs (A, B) selecting a self-adjoint realization.

A pair of m x m complex matrices (A, B), with m the defect dimension of
the model, fixes the interface condition A q = B f between the singular
charges q and the regular boundary values f of wavefunctions at the
spin sites. The pair is admissible when A B* - B A* vanishes (* is the
conjugate transpose) and the m x 2m block (A | B) has maximal rank.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .spins import ModelSpec, index_dimension

__all__ = [
    "BoundaryPair",
    "ValidationReport",
    "validate",
    "is_local",
    "preset_free",
    "preset_delta",
    "preset_offdiag",
    "preset_delta_prime",
    "random_valid_pair",
]

RANK_RTOL = 1e-10
HERMITICITY_TOL_FLOOR = 1e-10


@dataclass
class BoundaryPair:
    """Interface matrices for a given dimension and spin count.

    Arrays are stored read-only; the validation report is cached after
    the first call to validate().
    """

    dimension: int
    n_spins: int
    A: np.ndarray
    B: np.ndarray
    _report: "ValidationReport | None" = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        m = index_dimension(self.dimension, self.n_spins)
        A = np.array(self.A, dtype=complex)
        B = np.array(self.B, dtype=complex)
        if A.shape != (m, m) or B.shape != (m, m):
            raise ValueError(f"A and B must be {m} x {m}, got {A.shape} and {B.shape}")
        A.setflags(write=False)
        B.setflags(write=False)
        self.A = A
        self.B = B

    @property
    def defect_dim(self) -> int:
        return self.A.shape[0]

    def validation(self, tol: float | None = None) -> "ValidationReport":
        if self._report is None or tol is not None:
            report = validate(self, tol=tol)
            if tol is not None:
                return report
            self._report = report
        return self._report


@dataclass(frozen=True)
class ValidationReport:
    is_valid: bool
    hermiticity_defect: float
    rank: int
    is_local: bool
    singular_values: np.ndarray
    tol: float

    def __str__(self):
        verdict = "valid" if self.is_valid else "INVALID"
        return (
            f"{verdict}: hermiticity defect {self.hermiticity_defect:.3e} (tol {self.tol:.3e}), "
            f"rank {self.rank}/{self.singular_values.size}, local={self.is_local}"
        )


def validate(pair: BoundaryPair, tol: float | None = None) -> ValidationReport:
    """Check self-adjointness of the interface condition.

    hermiticity_defect is the max-abs entry of A B* - B A*; the default
    tolerance is 1e-10 * max(1, ||A|| ||B||) in the max-abs norms. The
    rank of (A | B) is counted from singular values above a relative
    threshold of 1e-10.
    """
    A, B = pair.A, pair.B
    m = pair.defect_dim
    defect = float(np.max(np.abs(A @ B.conj().T - B @ A.conj().T))) if m else 0.0
    if tol is None:
        scale = float(np.max(np.abs(A)) * np.max(np.abs(B)))
        tol = HERMITICITY_TOL_FLOOR * max(1.0, scale)
    sv = np.linalg.svd(np.hstack([A, B]), compute_uv=False)
    rank = int(np.sum(sv > RANK_RTOL * sv[0])) if sv[0] > 0.0 else 0
    ok = defect <= tol and rank == m
    return ValidationReport(
        is_valid=ok,
        hermiticity_defect=defect,
        rank=rank,
        is_local=is_local(pair),
        singular_values=sv,
        tol=tol,
    )


def _entry_indices(dimension: int, n_spins: int):
    """Per flat index: (parity, site 1-based, spin code)."""
    n = n_spins
    m = index_dimension(dimension, n)
    flat = np.arange(m)
    code = flat % 2**n
    j = (flat % (n * 2**n)) // 2**n + 1
    p = flat // (n * 2**n) if dimension == 1 else np.zeros(m, dtype=int)
    return p, j, code


def is_local(pair: BoundaryPair) -> bool:
    """True when the condition couples each spin only at its own site.

    Requires (i) no coupling across distinct sites, (ii) no dependence
    on spins other than the one at the shared site, and (iii) surviving
    entries identical across the spectator spins' configurations.
    """
    n = pair.n_spins
    p, j, code = _entry_indices(pair.dimension, n)
    for M in (pair.A, pair.B):
        m = M.shape[0]
        site_mask = j[:, None] != j[None, :]
        if np.any(M[site_mask] != 0.0):
            return False
        # spectator spins must match between row and column
        spect = (code[:, None] ^ code[None, :]) & ~(1 << (j - 1))[:, None]
        if np.any(M[(~site_mask) & (spect != 0)] != 0.0):
            return False
        # surviving entries may depend only on (p, p', sigma_j, sigma'_j)
        seen: dict[tuple, complex] = {}
        rows, cols = np.nonzero(~site_mask & (spect == 0))
        for r, c in zip(rows, cols):
            key = (
                p[r],
                p[c],
                j[r],
                (code[r] >> (j[r] - 1)) & 1,
                (code[c] >> (j[c] - 1)) & 1,
            )
            val = M[r, c]
            if key in seen:
                if seen[key] != val:
                    return False
            else:
                seen[key] = val
    return True


def _local_tables(dimension: int, n_spins: int):
    """Index arrays for filling site-local entries of A or B."""
    p, j, code = _entry_indices(dimension, n_spins)
    return p, j, code


def _beta_table(values, n_spins: int, name: str) -> np.ndarray:
    table = np.asarray(values, dtype=float)
    if table.shape == ():
        table = np.full((n_spins, 2), float(table))
    elif table.shape == (n_spins,):
        table = np.repeat(table[:, None], 2, axis=1)
    if table.shape != (n_spins, 2):
        raise ValueError(f"{name} must be a scalar, shape ({n_spins},) or ({n_spins}, 2) table")
    return table


def preset_free(model: ModelSpec) -> BoundaryPair:
    """No interaction: A = I, B = 0 forces all charges to vanish."""
    m = model.defect_dim
    return BoundaryPair(model.dimension, model.n_spins, np.eye(m), np.zeros((m, m)))


def preset_delta(model: ModelSpec, beta, paper_literal: bool = False) -> BoundaryPair:
    """Spin-dependent contact interaction of strength beta[j, sigma_j].

    beta may be a scalar, per-site vector, or (N, 2) table indexed by
    site and sigma_j (+1 column first). For d=1 the default realizes the
    derivative jump psi'(y+) - psi'(y-) = beta * psi(y); paper_literal
    keeps the alternative convention with the coupling doubled.
    """
    n = model.n_spins
    m = model.defect_dim
    table = _beta_table(beta, n, "beta")
    p, j, code = _local_tables(model.dimension, n)
    spin_col = (code >> (j - 1)) & 1  # 0 for sigma_j = +1
    if model.dimension == 3:
        A = np.diag(table[j - 1, spin_col]).astype(complex)
        B = np.eye(m, dtype=complex)
        return BoundaryPair(3, n, A, B)
    A = np.eye(m, dtype=complex)
    B = np.zeros((m, m), dtype=complex)
    factor = -2.0 if paper_literal else -1.0
    idx = np.flatnonzero(p == 0)
    B[idx, idx] = factor * table[j[idx] - 1, spin_col[idx]]
    return BoundaryPair(1, n, A, B)


def preset_offdiag(model: ModelSpec, betahat) -> BoundaryPair:
    """Spin-flip contact interaction with strengths betahat[j, sigma_j].

    The condition links the charge in one spin channel to the boundary
    value in the channel with sigma_j flipped. Hermiticity requires
    betahat[j, +] == betahat[j, -]; unequal tables are still assembled
    (validate() then reports the defect |betahat_+ - betahat_-|).
    """
    n = model.n_spins
    m = model.defect_dim
    table = _beta_table(betahat, n, "betahat")
    p, j, code = _local_tables(model.dimension, n)
    spin_col = (code >> (j - 1)) & 1
    sigma_j = 1 - 2 * spin_col
    # column partner: same flat index with sigma_j flipped
    partner = np.arange(m) ^ (1 << (j - 1))
    if model.dimension == 3:
        A = np.zeros((m, m), dtype=complex)
        A[np.arange(m), partner] = sigma_j * 1j * table[j - 1, spin_col]
        B = np.eye(m, dtype=complex)
        return BoundaryPair(3, n, A, B)
    A = np.eye(m, dtype=complex)
    B = np.zeros((m, m), dtype=complex)
    idx = np.flatnonzero(p == 0)
    B[idx, partner[idx]] = -2.0 * sigma_j[idx] * 1j * table[j[idx] - 1, spin_col[idx]]
    return BoundaryPair(1, n, A, B)


def preset_delta_prime(model: ModelSpec, gamma) -> BoundaryPair:
    """d=1 dipole-layer interaction: psi(y_j+) - psi(y_j-) = gamma_j psi'(y_j)."""
    if model.dimension != 1:
        raise ValueError("the dipole-layer preset exists only in d=1")
    n = model.n_spins
    m = model.defect_dim
    gamma = np.asarray(gamma, dtype=float)
    if gamma.shape == ():
        gamma = np.full(n, float(gamma))
    if gamma.shape != (n,):
        raise ValueError(f"gamma must be a scalar or shape ({n},)")
    p, j, _ = _local_tables(1, n)
    A = np.eye(m, dtype=complex)
    B = np.zeros((m, m), dtype=complex)
    idx = np.flatnonzero(p == 1)
    B[idx, idx] = gamma[j[idx] - 1]
    return BoundaryPair(1, n, A, B)


def random_valid_pair(model: ModelSpec, rng) -> BoundaryPair:
    """Random admissible pair from a Haar-distributed unitary U.

    A = i(I + U), B = I - U satisfies A B* = i(U - U*) (Hermitian) and
    (A | B) has full rank for every unitary U. Generically dense, hence
    nonlocal; useful for stress tests.
    """
    m = model.defect_dim
    ginibre = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
    q, r = np.linalg.qr(ginibre)
    u = q * (np.diag(r) / np.abs(np.diag(r)))[None, :]
    A = 1j * (np.eye(m) + u)
    B = np.eye(m) - u
    return BoundaryPair(model.dimension, model.n_spins, A, B)
