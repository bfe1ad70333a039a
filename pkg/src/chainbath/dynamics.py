"""Exact evolution of the coupled system+chain as a linear second-order system.

Everything here is y'' = -A y with A symmetric positive definite, solved by
spectral decomposition:

    y(t) = V cos(sqrt(L) t) V^T y(0) + V sin(sqrt(L) t) L^{-1/2} V^T y'(0),

which is exact up to eigensolver precision, has no time-step error, and can
be sampled on any grid.  Truncating the chain after mode n means dropping
the coupling D_n, i.e. keeping the leading (n+1) x (n+1) block of the
extended matrix.

Sign conventions: the extended chain matrix carries -D0 and -D_j off the
diagonal (so the equations of motion read x'' = -Omega0^2 x + D0 X_1 with
positive couplings), while the extended independent-oscillator matrix
carries +c_k.  The two are similar via diag(1, -O), so chain initial data
are X(0) = -O q(0); `chain_initial_conditions` applies that once.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, IndexOutOfRange, UnstableMode
from .spectral import ChainModel, IOModel, OrthogonalMap


@dataclass(frozen=True)
class InitialState:
    """Bath positions/velocities and system position/velocity at t = 0,
    in the independent-oscillator picture."""

    q0: np.ndarray
    qdot0: np.ndarray
    x0: float = 0.0
    xdot0: float = 0.0

    def __post_init__(self):
        q0 = np.asarray(self.q0, dtype=float)
        qdot0 = np.asarray(self.qdot0, dtype=float)
        if q0.shape != qdot0.shape or q0.ndim != 1:
            raise DimensionMismatch("q0 and qdot0 must be 1-d arrays of equal length")
        if not (np.all(np.isfinite(q0)) and np.all(np.isfinite(qdot0))
                and np.isfinite(self.x0) and np.isfinite(self.xdot0)):
            raise ValueError("initial state entries must be finite")
        q0.flags.writeable = False
        qdot0.flags.writeable = False
        object.__setattr__(self, "q0", q0)
        object.__setattr__(self, "qdot0", qdot0)

    @property
    def N(self) -> int:
        return len(self.q0)


@dataclass(frozen=True)
class Trajectory:
    """Sampled evolution on a uniform grid: system coordinate x(t) and the
    chain coordinates X[i, m] = X_{i+1}(t_m), with velocities."""

    times: np.ndarray
    x: np.ndarray
    xdot: np.ndarray
    X: np.ndarray
    Xdot: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        dt = np.diff(t)
        if len(t) < 2 or np.any(dt <= 0):
            raise ValueError("time grid must be strictly increasing")
        if not np.allclose(dt, dt[0], rtol=1e-9, atol=0.0):
            raise ValueError("time grid must have uniform step")
        if not (self.x.shape == self.xdot.shape == t.shape
                and self.X.shape == self.Xdot.shape
                and self.X.shape[1:] == t.shape):
            raise DimensionMismatch("trajectory array shapes are inconsistent")

    @property
    def n_modes(self) -> int:
        return self.X.shape[0]

    def mode(self, i: int) -> np.ndarray:
        """Samples of X_i(t); mode(0) is the system coordinate x."""
        if i == 0:
            return self.x
        if not 1 <= i <= self.n_modes:
            raise IndexOutOfRange(f"mode index {i} outside [0, {self.n_modes}]")
        return self.X[i - 1]


def assemble_extended_matrix(chain: ChainModel, n: int) -> np.ndarray:
    """(n+1)-dimensional evolution matrix of the system plus the first n
    chain modes: diagonal (Omega0^2, Omega_1^2, ..., Omega_n^2),
    off-diagonal (-D0, -D_1, ..., -D_{n-1}).  n = 0 is the isolated system;
    truncation at n < N just drops the rows/columns past mode n."""
    if not 0 <= n <= chain.N:
        raise IndexOutOfRange(f"truncation index {n} outside [0, {chain.N}]")
    A = np.zeros((n + 1, n + 1))
    A[0, 0] = chain.Omega0**2
    for i in range(1, n + 1):
        A[i, i] = chain.Omega[i - 1] ** 2
    if n >= 1:
        A[0, 1] = A[1, 0] = -chain.D0
    for i in range(1, n):
        A[i, i + 1] = A[i + 1, i] = -chain.D[i - 1]
    return A


def assemble_io_matrix(io: IOModel) -> np.ndarray:
    """(N+1)-dimensional evolution matrix in the independent-oscillator
    picture: diag(Omega0^2, omega_k^2) with +c_k in the system row/column."""
    A = np.zeros((io.N + 1, io.N + 1))
    A[0, 0] = io.Omega0**2
    A[1:, 1:] = np.diag(io.omega**2)
    A[0, 1:] = io.c
    A[1:, 0] = io.c
    return A


def _decompose(A: np.ndarray):
    lam, V = np.linalg.eigh(np.asarray(A, dtype=float))
    if lam.min() <= 0:
        raise UnstableMode(
            f"evolution matrix has eigenvalue {lam.min():.6g} <= 0; "
            "outside the oscillatory regime"
        )
    return np.sqrt(lam), V


def evolve_raw(A, y0, ydot0, times):
    """Positions and velocities of y'' = -A y at arbitrary increasing times.

    Returns (Y, Ydot) with shape (len(times), dim).  Raises UnstableMode if
    A has a non-positive eigenvalue.
    """
    w, V = _decompose(A)
    times = np.asarray(times, dtype=float)
    y0 = np.asarray(y0, dtype=float)
    ydot0 = np.asarray(ydot0, dtype=float)
    a = V.T @ y0
    b = (V.T @ ydot0) / w
    wt = np.multiply.outer(times, w)
    cosm1_wt, sin_wt = np.cos(wt) - 1.0, np.sin(wt)
    # written as increments from the initial data so that t = 0 is bit-exact
    Y = y0 + (cosm1_wt * a + sin_wt * b) @ V.T
    Ydot = ydot0 + ((cosm1_wt * b - sin_wt * a) * w) @ V.T
    return Y, Ydot


def evolve_exact(A, y0, ydot0, times) -> Trajectory:
    """Trajectory of the extended linear system on a uniform grid.

    Coordinate 0 is the system; the rest are chain modes.  Total energy
    along the returned trajectory is conserved to eigensolver precision.
    """
    Y, Ydot = evolve_raw(A, y0, ydot0, times)
    return Trajectory(
        times=np.asarray(times, dtype=float),
        x=Y[:, 0], xdot=Ydot[:, 0],
        X=Y[:, 1:].T, Xdot=Ydot[:, 1:].T,
    )


def chain_initial_conditions(omap: OrthogonalMap, init: InitialState):
    """Chain-mode initial data equivalent to the given bath initial data.

    X(0) = -O q(0) and likewise for velocities; the sign matches the
    extended matrix convention, where the system-chain coupling enters as
    -D0 while the oscillator picture carries +c_k.
    """
    if omap.N != init.N:
        raise DimensionMismatch(f"map size {omap.N} != initial-state size {init.N}")
    return -omap.O @ init.q0, -omap.O @ init.qdot0


def evolve_truncated(chain: ChainModel, n: int, init: InitialState,
                     omap: OrthogonalMap, times) -> Trajectory:
    """Evolution with the chain cut after mode n (coupling D_n dropped).

    Initial chain data come from the bath initial data through the
    orthogonal map; n = chain.N gives the untruncated dynamics.
    """
    A = assemble_extended_matrix(chain, n)
    X0, Xdot0 = chain_initial_conditions(omap, init)
    y0 = np.concatenate([[init.x0], X0[:n]])
    ydot0 = np.concatenate([[init.xdot0], Xdot0[:n]])
    return evolve_exact(A, y0, ydot0, times)


def evolve_io(io: IOModel, init: InitialState, times) -> Trajectory:
    """Evolution in the independent-oscillator picture (X holds the bath
    coordinates q here).  Used to cross-check picture equivalence."""
    A = assemble_io_matrix(io)
    y0 = np.concatenate([[init.x0], init.q0])
    ydot0 = np.concatenate([[init.xdot0], init.qdot0])
    return evolve_exact(A, y0, ydot0, times)


def free_mode_evolution(Omega_i: float, X0: float, Xdot0: float, t):
    """Uncoupled mode: X0 cos(Omega t) + Xdot0 sin(Omega t)/Omega."""
    if Omega_i <= 0:
        raise ValueError("mode frequency must be positive")
    t = np.asarray(t, dtype=float)
    out = X0 * np.cos(Omega_i * t) + Xdot0 * np.sin(Omega_i * t) / Omega_i
    return out if out.ndim else float(out)


def total_energy(A, traj: Trajectory) -> np.ndarray:
    """H(t) = (|ydot|^2 + y^T A y) / 2 along a trajectory; constant for the
    exact solver."""
    Y = np.concatenate([traj.x[None, :], traj.X]).T
    Ydot = np.concatenate([traj.xdot[None, :], traj.Xdot]).T
    return 0.5 * (np.sum(Ydot**2, axis=1) + np.sum(Y * (Y @ np.asarray(A)), axis=1))


def system_response(A, times):
    """Linear response of coordinate 0 to initial data: x(t) = Gq(t) . y0 + Gv(t) . ydot0.

    Returns (Gq, Gv), each (len(times), dim).  These rows let many initial
    conditions be propagated with one matrix product (used by the thermal
    Monte-Carlo machinery).
    """
    w, V = _decompose(A)
    times = np.asarray(times, dtype=float)
    wt = np.multiply.outer(times, w)
    Gq = (np.cos(wt) * V[0]) @ V.T
    Gv = (np.sin(wt) * (V[0] / w)) @ V.T
    return Gq, Gv
