"""Adjoint (occupation density) solvers for the linearized transport operator.

Given a solved u and its drift b_j = dH/dp(x_j, Du_j), the stationary adjoint
density solves

    lambda*theta - D[b*theta] = eps*L*theta + lambda*delta_{x0},

where D[.] is a conservative flux-form divergence: differences of half-node
fluxes F_{j+1/2} = b_{j+1/2} * (theta_j + theta_{j+1})/2 with the drift
averaged onto half nodes, and L the periodic Laplacian stencil. Row sums of
the discrete divergence telescope to zero, so h * sum(theta) = 1 holds
exactly up to linear-solver roundoff.

The same operator drives the Fokker-Planck evolution

    d rho/dt = D[b*rho] + eps*L*rho,   rho(., 0) = delta_{x0}/h,

stepped by implicit Euler (mass-exact), and theta is recovered from it by the
discounted time average lim_T int_0^T lambda*exp(-lambda*t) rho(., t) dt.
"""

from __future__ import annotations

import math
from typing import Iterable, Iterator

import numpy as np

from .core import (ConvergenceError, DensityField, Grid1D, HamiltonianModel,
                   ScalarField)
from .tridiag import CyclicTridiagonalMatrix, solve_cyclic_tridiagonal

NEGATIVITY_REJECT = -1e-8


def drift_field(model: HamiltonianModel, u: ScalarField) -> ScalarField:
    """b_j = dH/dp(x_j, Du_j) with the central gradient of u."""
    v = u.values
    du = (np.roll(v, -1) - np.roll(v, 1)) / (2.0 * u.grid.h)
    return ScalarField(u.grid, np.asarray(model.dhdp(u.grid.x, du), dtype=float))


def divergence_operator_bands(grid: Grid1D, b: np.ndarray) -> CyclicTridiagonalMatrix:
    """Flux-form matrix A with (A theta)_j = (F_{j+1/2} - F_{j-1/2}) / h.

    F_{j+1/2} = 0.5*(b_j + b_{j+1}) * 0.5*(theta_j + theta_{j+1}). Column sums
    vanish identically (each flux enters two rows with opposite signs), which
    is what makes both the stationary solve and the evolution mass-exact.
    """
    b = np.asarray(b, dtype=float)
    if b.shape != (grid.n,):
        raise ValueError("drift length does not match the grid")
    h = grid.h
    b_plus = 0.5 * (b + np.roll(b, -1))   # b at j + 1/2
    b_minus = np.roll(b_plus, 1)          # b at j - 1/2
    sup = b_plus / (2.0 * h)
    sub = -b_minus / (2.0 * h)
    diag = (b_plus - b_minus) / (2.0 * h)
    return CyclicTridiagonalMatrix(diag=diag, sub=sub, super=sup)


def _system_bands(grid: Grid1D, b: np.ndarray, lam: float, eps: float
                  ) -> CyclicTridiagonalMatrix:
    """Bands of lambda*I - A - eps*L."""
    a = divergence_operator_bands(grid, b)
    visc = eps / (grid.h ** 2)
    diag = lam - a.diag + 2.0 * visc
    sub = -a.sub - visc
    sup = -a.super - visc
    return CyclicTridiagonalMatrix(diag=diag, sub=sub, super=sup)


def solve_adjoint_stationary(model: HamiltonianModel, u: ScalarField, lam: float,
                             eps: float, x0_index: int = 0) -> DensityField:
    """Stationary adjoint density with a unit Dirac source at node x0_index.

    The Dirac is the discrete delta 1/h at one node. Entries below -1e-8 mean
    the centered flux discretization stopped being monotone at this h and the
    solve is rejected (refine the grid or raise eps); milder negative dips are
    roundoff and are clamped before the final renormalization, whose factor
    must stay within 1e-6 of 1 and is recorded on the returned field.
    """
    grid = u.grid
    if not (lam > 0.0 and eps > 0.0):
        raise ValueError("lambda and eps must be positive")
    if not (0 <= x0_index < grid.n):
        raise ValueError(f"x0_index {x0_index} outside 0..{grid.n - 1}")

    system = _system_bands(grid, drift_field(model, u).values, lam, eps)
    rhs = np.zeros(grid.n)
    rhs[x0_index] = lam / grid.h
    theta = solve_cyclic_tridiagonal(system, rhs)

    lo = float(theta.min())
    if lo < NEGATIVITY_REJECT:
        raise ConvergenceError(
            f"stationary adjoint density has entry {lo:.3e} < {NEGATIVITY_REJECT:.0e}: "
            "non-monotone discretization at this resolution, refine the grid")
    theta = np.maximum(theta, 0.0)
    mass = grid.h * float(theta.sum())
    factor = 1.0 / mass
    if abs(factor - 1.0) > 1e-6:
        raise ConvergenceError(
            f"adjoint renormalization factor {factor!r} deviates from 1 beyond 1e-6")
    return DensityField(grid, theta * factor, renorm_factor=factor)


def evolve_fokker_planck(drift: ScalarField, eps: float, x0_index: int,
                         t_final: float, dt: float | None = None
                         ) -> Iterator[tuple[float, DensityField]]:
    """Implicit-Euler Fokker-Planck evolution from a discrete Dirac.

    The drift is any nodal field b (dH/dp of a solved u, or an averaged
    drift); dt defaults to the grid spacing h. Yields (t_k, rho_k) lazily,
    starting with (0, delta/h), so long horizons never materialize in memory;
    wrap in list() for short runs. The stepping matrix is factorized once.
    Every snapshot is validated through DensityField (mass within 1e-8 of 1,
    entries >= -1e-12).
    """
    grid = drift.grid
    if dt is None:
        dt = grid.h
    if not (eps > 0.0 and dt > 0.0):
        raise ValueError("eps and dt must be positive")
    if t_final < dt:
        raise ValueError("horizon shorter than one step")
    if not (0 <= x0_index < grid.n):
        raise ValueError(f"x0_index {x0_index} outside 0..{grid.n - 1}")

    from scipy.sparse import csc_matrix
    from scipy.sparse.linalg import splu

    a = divergence_operator_bands(grid, drift.values)
    visc = eps / (grid.h ** 2)
    # rows of I - dt*(A + eps*L)
    diag = 1.0 - dt * (a.diag - 2.0 * visc)
    sub = -dt * (a.sub + visc)
    sup = -dt * (a.super + visc)
    n = grid.n
    idx = np.arange(n)
    rows = np.concatenate([idx, idx, idx])
    cols = np.concatenate([idx, (idx + 1) % n, (idx - 1) % n])
    data = np.concatenate([diag, sup, sub])
    try:
        lu = splu(csc_matrix((data, (rows, cols)), shape=(n, n)))
    except RuntimeError as exc:  # singular factorization
        raise ConvergenceError(f"Fokker-Planck step matrix not factorizable: {exc}")

    rho = np.zeros(n)
    rho[x0_index] = 1.0 / grid.h
    yield 0.0, DensityField(grid, rho)
    steps = int(round(t_final / dt))
    for k in range(1, steps + 1):
        rho = lu.solve(rho)
        yield k * dt, DensityField(grid, rho)


def fokker_planck_snapshots(drift: ScalarField, eps: float, x0_index: int,
                            t_final: float, dt: float | None = None
                            ) -> list[tuple[float, DensityField]]:
    """Materialized evolve_fokker_planck, for short horizons."""
    return list(evolve_fokker_planck(drift, eps, x0_index, t_final, dt))


def stationary_from_transient(rho_sequence: Iterable[tuple[float, DensityField]],
                              lam: float) -> DensityField:
    """Discounted time average of an evolution, int_0^T lambda e^{-lambda t} rho dt.

    Piecewise-linear-in-time rho against the exactly integrated exponential
    weight (product trapezoid), plus the tail estimate e^{-lambda*T} rho(., T).
    Applied to rho == 1 the weights sum to exactly 1 - e^{-lambda T}, so the
    output inherits unit mass. A horizon with e^{-lambda T} > 1e-6 (T below
    roughly 14/lambda) is rejected as too short to truncate.
    """
    if not (lam > 0.0 and math.isfinite(lam)):
        raise ValueError(f"lambda must be positive, got {lam!r}")

    it = iter(rho_sequence)
    try:
        t_prev, rho_prev = next(it)
    except StopIteration:
        raise ValueError("empty evolution sequence") from None
    grid = rho_prev.grid
    acc = np.zeros(grid.n)
    coef_a = coef_b = None
    dt_ref = None
    count = 1
    for t, rho in it:
        dt = t - t_prev
        if dt <= 0.0:
            raise ValueError("snapshot times must increase")
        if dt_ref is None:
            dt_ref = dt
            e = math.exp(-lam * dt)
            # int_0^dt lam e^{-lam s} (1 - s/dt) ds and the mirrored weight
            coef_b = (1.0 - e) / (lam * dt) - e
            coef_a = (1.0 - e) - coef_b
        elif abs(dt - dt_ref) > 1e-9 * dt_ref:
            raise ValueError("discounted averaging expects a uniform time step")
        w = math.exp(-lam * t_prev)
        acc += (w * coef_a) * rho_prev.values + (w * coef_b) * rho.values
        t_prev, rho_prev = t, rho
        count += 1
    if count < 2:
        raise ValueError("evolution sequence needs at least two snapshots")
    tail = math.exp(-lam * t_prev)
    if tail > 1e-6:
        raise ConvergenceError(
            f"horizon T = {t_prev:.6g} too short: e^(-lambda T) = {tail:.3e} > 1e-6, "
            "extend to at least 20/lambda")
    acc += tail * rho_prev.values
    return DensityField(grid, acc)


def averaged_drift(u_eps: ScalarField, u_delta: ScalarField,
                   model: HamiltonianModel, quad_points: int = 4) -> ScalarField:
    """vartheta_j = int_0^1 dH/dp(x_j, r*Du_eps_j + (1-r)*Du_delta_j) dr.

    Gauss-Legendre on [0, 1]; four points already integrate the separable
    (linear in p) case exactly, more are allowed for strongly nonlinear dH/dp.
    """
    if u_eps.grid != u_delta.grid:
        raise ValueError("fields live on different grids")
    if quad_points < 4:
        raise ValueError("use at least 4 Gauss-Legendre points")
    grid = u_eps.grid
    h = grid.h

    def grad(f: ScalarField) -> np.ndarray:
        v = f.values
        return (np.roll(v, -1) - np.roll(v, 1)) / (2.0 * h)

    ga = grad(u_eps)
    gb = grad(u_delta)
    nodes, weights = np.polynomial.legendre.leggauss(quad_points)
    r = 0.5 * (nodes + 1.0)
    w = 0.5 * weights
    out = np.zeros(grid.n)
    for ri, wi in zip(r, w):
        out += wi * np.asarray(model.dhdp(grid.x, ri * ga + (1.0 - ri) * gb), dtype=float)
    return ScalarField(grid, out)


def entropy_diagnostic(rho: DensityField, clamp: float = 1e-300) -> float:
    """h * sum_j |log rho_j| * rho_j with rho clamped below at 1e-300.

    A crude information-size gauge: log(1/h) for a one-node spike, log(2*pi)
    for the uniform density on the default torus.
    """
    vals = np.maximum(rho.values, clamp)
    return float(rho.grid.h * np.sum(np.abs(np.log(vals)) * rho.values))
