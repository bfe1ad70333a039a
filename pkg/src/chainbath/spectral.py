"""Mapping an independent-oscillator bath onto a nearest-neighbor chain.

The bath is a set of uncoupled oscillators with frequencies omega_k, each
coupled linearly to the system with strength c_k.  An orthogonal change of
coordinates X = O q turns it into a chain whose frequency matrix T is
symmetric tridiagonal with the same spectrum {omega_k^2}; the system then
couples only to the first chain mode, with strength D0 = ||c||.  The
construction is Lanczos tridiagonalization of diag(omega^2) seeded with
c/||c||, with full reorthogonalization, and with row signs chosen so that
every nearest-neighbor coupling D_j is positive while T carries -D_j on the
off-diagonal.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    Breakdown,
    DimensionMismatch,
    IndexOutOfRange,
    NonincreasingSpectrum,
    NonpositiveParameter,
)


def _frozen_array(values, dtype=float):
    arr = np.array(values, dtype=dtype)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class IOModel:
    """Independent-oscillator bath: frequencies omega_k, couplings c_k,
    system frequency Omega0.  Unit masses throughout."""

    omega: np.ndarray
    c: np.ndarray
    Omega0: float

    @property
    def N(self) -> int:
        return len(self.omega)


@dataclass(frozen=True)
class ChainModel:
    """Chain picture: mode frequencies Omega_j, nearest-neighbor couplings
    D_j (length N-1), system-chain coupling D0, system frequency Omega0."""

    Omega: np.ndarray
    D: np.ndarray
    D0: float
    Omega0: float

    @property
    def N(self) -> int:
        return len(self.Omega)

    def tridiagonal(self) -> np.ndarray:
        """The N x N symmetric tridiagonal frequency matrix (off-diag -D_j)."""
        T = np.diag(self.Omega**2)
        idx = np.arange(self.N - 1)
        T[idx, idx + 1] = -self.D
        T[idx + 1, idx] = -self.D
        return T


@dataclass(frozen=True)
class OrthogonalMap:
    """Row j holds the coefficients of chain mode j in bath coordinates:
    X_j = sum_k O[j, k] q_k.  Row 0 is c/||c|| by construction."""

    O: np.ndarray

    @property
    def N(self) -> int:
        return self.O.shape[0]


@dataclass(frozen=True)
class EquivalenceReport:
    """Residual diagnostics for a (bath, chain, map) triple."""

    orthogonality: float
    tridiagonal_residual: float
    eigenvalue_mismatch: float
    tolerance: float
    passed: bool


def build_io_model(omega, c, Omega0) -> IOModel:
    """Validate and freeze an independent-oscillator bath description.

    Raises NonincreasingSpectrum if omega is not strictly increasing and
    NonpositiveParameter if any frequency or coupling is <= 0.
    """
    omega = np.asarray(omega, dtype=float)
    c = np.asarray(c, dtype=float)
    if omega.ndim != 1 or c.ndim != 1 or len(omega) == 0:
        raise DimensionMismatch("omega and c must be nonempty 1-d sequences")
    if len(omega) != len(c):
        raise DimensionMismatch(
            f"len(omega)={len(omega)} differs from len(c)={len(c)}"
        )
    if not (np.all(np.isfinite(omega)) and np.all(np.isfinite(c)) and np.isfinite(Omega0)):
        raise NonpositiveParameter("all parameters must be finite")
    if np.any(omega <= 0) or np.any(c <= 0) or Omega0 <= 0:
        raise NonpositiveParameter("omega_k, c_k and Omega0 must all be positive")
    if np.any(np.diff(omega) <= 0):
        raise NonincreasingSpectrum("bath frequencies must be strictly increasing")
    return IOModel(_frozen_array(omega), _frozen_array(c), float(Omega0))


def chain_from_io(io: IOModel) -> tuple[ChainModel, OrthogonalMap]:
    """Construct the equivalent chain by Lanczos tridiagonalization.

    Runs Lanczos on diag(omega^2) seeded with v1 = c/||c||, with full
    reorthogonalization at every step (twice, which restores orthogonality
    to working precision).  Row signs alternate so that the assembled T has
    -D_j off the diagonal with D_j > 0 while row 0 stays +c/||c||.

    Returns (ChainModel, OrthogonalMap).  Raises Breakdown when an
    intermediate coupling falls below 1e-12 * max(omega^2), which signals an
    effectively reducible spectrum/coupling combination.
    """
    w2 = io.omega**2
    N = io.N
    scale = w2.max()

    V = np.zeros((N, N))
    diag = np.zeros(N)
    offdiag = np.zeros(max(N - 1, 0))

    v = io.c / np.linalg.norm(io.c)
    V[0] = v
    u = w2 * v
    diag[0] = v @ u
    v_prev = np.zeros(N)
    beta = 0.0
    for j in range(1, N):
        r = u - diag[j - 1] * v - beta * v_prev
        # full reorthogonalization, applied twice
        r -= V[:j].T @ (V[:j] @ r)
        r -= V[:j].T @ (V[:j] @ r)
        beta = np.linalg.norm(r)
        if beta < 1e-12 * scale:
            raise Breakdown(
                f"coupling D_{j} = {beta:.3e} below 1e-12*max(omega^2); "
                "spectrum/coupling combination is effectively reducible"
            )
        v_prev, v = v, r / beta
        V[j] = v
        u = w2 * v
        diag[j] = v @ u
        offdiag[j - 1] = beta

    signs = np.where(np.arange(N) % 2 == 0, 1.0, -1.0)
    O = V * signs[:, None]

    chain = ChainModel(
        Omega=_frozen_array(np.sqrt(diag)),
        D=_frozen_array(offdiag),
        D0=float(np.linalg.norm(io.c)),
        Omega0=io.Omega0,
    )
    return chain, OrthogonalMap(_frozen_array(O))


def char_poly_eval(chain: ChainModel, j: int, lam):
    """Characteristic polynomial P_j of the j-th leading principal minor of
    the chain's tridiagonal matrix, evaluated at lam.

    Three-term recurrence P_{j+1} = (Omega_{j+1}^2 - lam) P_j - D_j^2 P_{j-1}
    with P_0 = 1, P_{-1} = 0.  lam may be a scalar or an array.
    """
    if not 0 <= j <= chain.N:
        raise IndexOutOfRange(f"minor index {j} outside [0, {chain.N}]")
    lam = np.asarray(lam, dtype=float)
    p_prev = np.zeros_like(lam)
    p = np.ones_like(lam)
    for m in range(j):
        d2 = chain.D[m - 1] ** 2 if m >= 1 else 0.0
        p, p_prev = (chain.Omega[m] ** 2 - lam) * p - d2 * p_prev, p
    return p if p.ndim else float(p)


def verify_equivalence(io: IOModel, chain: ChainModel, omap: OrthogonalMap,
                       rtol: float = 1e-9) -> EquivalenceReport:
    """Residuals of the defining relations of the chain map.

    Checks ||O O^T - I||_max, ||T - O diag(omega^2) O^T||_max, and the
    largest eigenvalue mismatch between T and {omega_k^2}; all but the
    orthogonality residual are compared against rtol * max(omega^2).
    """
    if not (io.N == chain.N == omap.N):
        raise DimensionMismatch(
            f"sizes disagree: io N={io.N}, chain N={chain.N}, map N={omap.N}"
        )
    O = omap.O
    w2 = io.omega**2
    scale = w2.max()

    ortho = np.abs(O @ O.T - np.eye(io.N)).max()
    T = chain.tridiagonal()
    tri_res = np.abs(T - O @ np.diag(w2) @ O.T).max()
    eig_mis = np.abs(np.sort(np.linalg.eigvalsh(T)) - w2).max()

    passed = (ortho <= max(rtol, 1e-10)
              and tri_res <= rtol * scale
              and eig_mis <= rtol * scale)
    return EquivalenceReport(
        orthogonality=float(ortho),
        tridiagonal_residual=float(tri_res),
        eigenvalue_mismatch=float(eig_mis),
        tolerance=rtol,
        passed=bool(passed),
    )
