"""Reduced description of the system coordinate.

Substituting the chain-mode equations into the system equation turns the
dynamics into a Volterra equation of the second kind,

    x(t) = (D0^2 / (Omega0 Omega1)) int_0^t K_1(t-s) x(s) ds + F(t),

whose source F collects everything independent of x: the free-mode ladder
f-tilde plus convolutions of higher kernels with the chain trajectories.
Because K_1 is a two-sine kernel the equation solves in closed form with the
resolvent kernel

    R(tau) = D0^2 [mu2 sin(mu1 tau) - mu1 sin(mu2 tau)] / (mu1 mu2 (mu2^2 - mu1^2)),

where mu_{1,2}^2 = (Omega0^2 + Omega1^2 +- sqrt(Delta))/2 and
Delta = (Omega0^2 - Omega1^2)^2 + 4 D0^2.  (Laplace analysis fixes the +4D0^2:
the resolvent poles must satisfy mu1^2 mu2^2 = Omega0^2 Omega1^2 - D0^2, and
the closed solution then reproduces the exact dynamics to quadrature
precision.)  Both mu are real and distinct iff Omega0 Omega1 > D0.

A plain product-integration marching solver is kept as an independent check
of the closed form.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import InitialState, Trajectory, chain_initial_conditions
from .errors import (
    ComplexResolvent,
    DegenerateFrequencies,
    DegenerateResolvent,
    GridTooCoarse,
    IndexOutOfRange,
    NonpositiveParameter,
)
from .kernels import (
    KernelRep,
    convolve_on_grid,
    kernel_closed_form,
    spline_quadrature_error_estimate,
)
from .spectral import ChainModel, OrthogonalMap


@dataclass(frozen=True)
class VolterraParams:
    """Resolvent frequencies mu1 > mu2 > 0 and discriminant for the closed
    solution of the system's integral equation."""

    mu1: float
    mu2: float
    Delta: float
    Omega0: float
    Omega1: float
    D0: float


def mu_delta(Omega0: float, Omega1: float, D0: float) -> VolterraParams:
    """Resolvent frequencies of the closed Volterra solution.

    Raises ComplexResolvent when D0 >= Omega0*Omega1 (the lower frequency
    would not be real) and DegenerateResolvent when the two frequencies
    coincide to rounding.
    """
    if Omega0 <= 0 or Omega1 <= 0 or D0 <= 0:
        raise NonpositiveParameter("Omega0, Omega1 and D0 must be positive")
    s = Omega0**2 + Omega1**2
    Delta = (Omega0**2 - Omega1**2) ** 2 + 4 * D0**2
    if D0 >= Omega0 * Omega1:
        raise ComplexResolvent(
            f"D0 = {D0:g} >= Omega0*Omega1 = {Omega0 * Omega1:g}; "
            "lower resolvent frequency is not real"
        )
    if Delta < 1e-12 * s**2:
        raise DegenerateResolvent("resolvent frequencies coincide to rounding")
    root = np.sqrt(Delta)
    return VolterraParams(
        mu1=float(np.sqrt((s + root) / 2)),
        mu2=float(np.sqrt((s - root) / 2)),
        Delta=float(Delta),
        Omega0=float(Omega0),
        Omega1=float(Omega1),
        D0=float(D0),
    )


def resolvent_series(params: VolterraParams):
    """Sine-series (freqs, coeffs) of the resolvent kernel R."""
    m1, m2, D = params.mu1, params.mu2, params.D0
    pref = D**2 / (m1 * m2 * (m2**2 - m1**2))
    return np.array([m1, m2]), np.array([pref * m2, -pref * m1])


def coupling(chain: ChainModel, l: int) -> float:
    """D_l with the boundary conventions: D_0 is the system coupling and
    D_N = 0 terminates sums."""
    if l == 0:
        return chain.D0
    if l == chain.N:
        return 0.0
    if not 1 <= l < chain.N:
        raise IndexOutOfRange(f"coupling index {l} outside [0, {chain.N}]")
    return float(chain.D[l - 1])


def _mode_freqs(chain: ChainModel) -> np.ndarray:
    """(Omega_0, Omega_1, ..., Omega_N) with Omega_0 the system frequency."""
    return np.concatenate([[chain.Omega0], chain.Omega])


def _check_distinct(freqs):
    w2 = np.asarray(freqs) ** 2
    gap = np.abs(w2[:, None] - w2[None, :]) + np.diag(np.full(len(w2), np.inf))
    if gap.min() < 1e-9 * w2.max():
        raise DegenerateFrequencies(
            "coincident mode frequencies; closed-form source not available"
        )


class _TrigSeries:
    """Finite sum a_j sin(w_j t) + b_j cos(w_j t), closed under convolution
    with a sine.  Internal helper for the free-mode source ladder."""

    def __init__(self, freqs=(), sin_coeffs=(), cos_coeffs=()):
        self.terms = {}
        for w, a, b in zip(freqs, sin_coeffs, cos_coeffs):
            self.add(w, a, b)

    def add(self, w, a=0.0, b=0.0):
        sa, sb = self.terms.get(w, (0.0, 0.0))
        self.terms[w] = (sa + a, sb + b)

    def update(self, other, scale=1.0):
        for w, (a, b) in other.terms.items():
            self.add(w, scale * a, scale * b)

    def eval(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        for w, (a, b) in self.terms.items():
            out += a * np.sin(w * t) + b * np.cos(w * t)
        return out


def _convolve_series_with_trig(ker_freqs, ker_coeffs, series: _TrigSeries) -> _TrigSeries:
    """Exact convolution of a sine-series kernel with a trig series:
    int_0^t K(t-s) g(s) ds for g = sum a sin(w s) + b cos(w s).

    Uses, for a != b,
        sin(a.) * sin(b.) -> [a sin(b t) - b sin(a t)] / (a^2 - b^2)
        sin(a.) * cos(b.) -> a [cos(b t) - cos(a t)] / (a^2 - b^2).
    """
    out = _TrigSeries()
    for wk, alpha in zip(ker_freqs, ker_coeffs):
        for wg, (a, b) in series.terms.items():
            den = wk**2 - wg**2
            if abs(den) < 1e-12 * max(wk**2, wg**2):
                raise DegenerateFrequencies(
                    f"kernel frequency {wk:g} coincides with source frequency {wg:g}"
                )
            # sine part of g
            out.add(wg, a * alpha * wk / den, 0.0)
            out.add(wk, -a * alpha * wg / den, 0.0)
            # cosine part of g
            out.add(wg, 0.0, b * alpha * wk / den)
            out.add(wk, 0.0, -b * alpha * wk / den)
    return out


def free_source_series(chain: ChainModel, n: int, init: InitialState,
                       omap: OrthogonalMap) -> _TrigSeries:
    """The ladder f-tilde_n as an exact trig series.

    f-tilde_0 = f_0 and
    f-tilde_i = f-tilde_{i-1} + (prod_{l<i} D_l/Omega_l) K_{i-1} * f_i,
    where f_i is the free evolution of mode i from its initial data.
    """
    if not 0 <= n <= chain.N:
        raise IndexOutOfRange(f"level {n} outside [0, {chain.N}]")
    freqs = _mode_freqs(chain)
    _check_distinct(freqs[: n + 1])
    X0, Xdot0 = chain_initial_conditions(omap, init)
    mode0 = np.concatenate([[init.x0], X0])
    modedot0 = np.concatenate([[init.xdot0], Xdot0])

    total = _TrigSeries([freqs[0]], [modedot0[0] / freqs[0]], [mode0[0]])
    pref = 1.0
    for i in range(1, n + 1):
        pref *= coupling(chain, i - 1) / freqs[i - 1]
        ker = kernel_closed_form(freqs[:i])
        f_i = _TrigSeries([freqs[i]], [modedot0[i] / freqs[i]], [mode0[i]])
        total.update(_convolve_series_with_trig(ker.freqs, ker.coeffs, f_i), pref)
    return total


def _mode_convolution_terms(chain, n, traj: Trajectory, lo: int):
    """Sum over i = lo..n of
    (prod_{l<i} D_l/Omega_l)(D_{i-1}/Omega_i) int K_i(t-s) X_{i-1}(s) ds,
    with the chain-mode trajectories injected from `traj`."""
    freqs = _mode_freqs(chain)
    times = traj.times
    total = np.zeros_like(times)
    pref = 1.0
    for i in range(1, n + 1):
        pref *= coupling(chain, i - 1) / freqs[i - 1]
        if i < lo:
            continue
        ker = kernel_closed_form(freqs[: i + 1])
        vals = traj.mode(i - 1)
        total += pref * (coupling(chain, i - 1) / freqs[i]) * convolve_on_grid(
            ker.freqs, ker.coeffs, vals, times
        )
    return total


def _check_grid(chain: ChainModel, traj: Trajectory, rel_tol: float = 1e-7):
    freqs = _mode_freqs(chain)
    vmax = max(np.abs(traj.x).max(), np.abs(traj.X).max() if traj.X.size else 0.0)
    est = spline_quadrature_error_estimate(traj.times, [vmax], float(freqs.max()))
    if est > rel_tol * max(vmax, 1e-300):
        raise GridTooCoarse(
            f"estimated spline-quadrature error {est:.3e} exceeds "
            f"{rel_tol:g} * max|X| = {rel_tol * vmax:.3e}; refine the grid"
        )


def source_term(chain: ChainModel, n_used: int, traj: Trajectory,
                init: InitialState, omap: OrthogonalMap) -> np.ndarray:
    """Source F_n of the system's Volterra equation, sampled on traj.times.

    F_n(t) = f-tilde_n(t)
           + sum_{i=2}^{n} (prod_{l<i} D_l/Omega_l)(D_{i-1}/Omega_i)
                           int_0^t K_i(t-s) X_{i-1}(s) ds,

    with the X_{i-1} taken from the supplied (exact) trajectories.  The
    free-mode part is evaluated in closed form; the trajectory convolutions
    use per-interval Gauss-Legendre on a cubic-spline reconstruction.
    Raises GridTooCoarse when the estimated quadrature error exceeds
    1e-7 * max|X|.
    """
    if not 0 <= n_used <= chain.N:
        raise IndexOutOfRange(f"level {n_used} outside [0, {chain.N}]")
    _check_grid(chain, traj)
    F = free_source_series(chain, n_used, init, omap).eval(traj.times)
    if n_used >= 2:
        F = F + _mode_convolution_terms(chain, n_used, traj, lo=2)
    return F


def x_reduced_form(chain: ChainModel, n: int, traj: Trajectory,
                   init: InitialState, omap: OrthogonalMap) -> np.ndarray:
    """Level-n rewriting of x(t) from injected trajectories (identity check).

    x(t) = f-tilde_n(t)
         + sum_{i=1}^{n} (prod_{l<i} D_l/Omega_l)(D_{i-1}/Omega_i) K_i * X_{i-1}
         + (prod_{l<=n} D_l/Omega_l) K_n * X_{n+1},

    where the last term vanishes for n = N (D_N = 0).  With exact
    trajectories this reproduces traj.x to quadrature precision for every n.
    """
    if not 1 <= n <= chain.N:
        raise IndexOutOfRange(f"level {n} outside [1, {chain.N}]")
    _check_grid(chain, traj)
    freqs = _mode_freqs(chain)
    rhs = free_source_series(chain, n, init, omap).eval(traj.times)
    rhs = rhs + _mode_convolution_terms(chain, n, traj, lo=1)
    if n < chain.N:
        p_n = np.prod([coupling(chain, l) / freqs[l] for l in range(n + 1)])
        ker = kernel_closed_form(freqs[: n + 1])
        rhs = rhs + p_n * convolve_on_grid(ker.freqs, ker.coeffs,
                                           traj.mode(n + 1), traj.times)
    return rhs


def solve_volterra_closed(params: VolterraParams, F, times) -> np.ndarray:
    """Closed solution x = F + R * F with the two-sine resolvent kernel.

    F is sampled on `times`; the convolution uses the same spline +
    Gauss-Legendre machinery as the source construction.
    """
    freqs, coeffs = resolvent_series(params)
    F = np.asarray(F, dtype=float)
    return F + convolve_on_grid(freqs, coeffs, F, times)


def solve_volterra_numeric(k1: KernelRep, prefactor: float, F, times) -> np.ndarray:
    """Trapezoidal product-integration marching solver for
    x(t) = prefactor * int_0^t K_1(t-s) x(s) ds + F(t).

    Independent of the closed form; second-order accurate in the grid step.
    K_1(0) = 0 makes the marching explicit.
    """
    times = np.asarray(times, dtype=float)
    F = np.asarray(F, dtype=float)
    M = len(times)
    h = times[1] - times[0]
    K = k1.eval(times)  # K[m] = K_1(m h) on the uniform grid
    x = np.empty(M)
    x[0] = F[0]
    for m in range(1, M):
        conv = K[m] * 0.5 * x[0] + np.dot(K[m - 1:0:-1], x[1:m])
        x[m] = F[m] + prefactor * h * conv
    return x
