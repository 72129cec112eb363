"""Path-conservative Lax-Friedrichs transport, split into a macro update for
(h, hu) and a micro update for the moments.

Interface matrices are evaluated at arithmetic means of the primitive
variables (h, u_m, alpha_1) of the two adjacent cells.  All state arrays are
interior-only; one ghost layer per side is built on every call.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DepthError
from .model import BoundaryCondition, Grid, ModelParams, apply_offdiag, offdiag_entries


def pad(a: np.ndarray, bc: BoundaryCondition) -> np.ndarray:
    """Add one ghost cell on each side along axis 0."""
    if bc is BoundaryCondition.PERIODIC:
        return np.concatenate([a[-1:], a, a[:1]])
    return np.concatenate([a[:1], a, a[-1:]])


def check_depth(h: np.ndarray, step=None) -> None:
    bad = ~(h > 0)
    if np.any(bad):
        cell = int(np.argmax(bad))
        raise DepthError(f"non-positive or invalid water height {h[cell]!r} in cell {cell}", cell=cell, step=step)


class TimeStep(NamedTuple):
    dt: float
    lambda_max: float


def max_wave_speed(U: np.ndarray, alpha1: np.ndarray, params: ModelParams) -> float:
    """Upper bound max |u_m| + sqrt(g h + alpha_1^2) on the characteristic speeds."""
    h = U[:, 0]
    check_depth(h)
    u = U[:, 1] / h
    return float(np.max(np.abs(u) + np.sqrt(params.g * h + alpha1**2)))


def time_step(U, alpha1, grid: Grid, params: ModelParams, remaining: float = np.inf) -> TimeStep:
    lam = max_wave_speed(U, alpha1, params)
    dt = params.cfl * grid.dx / lam
    return TimeStep(min(dt, remaining), lam)


# --------------------------------------------------------------------------
# macro step
# --------------------------------------------------------------------------

def macro_transport_update(U: np.ndarray, hv1: np.ndarray, dt: float, grid: Grid, params: ModelParams) -> np.ndarray:
    """Macro update driven only by the first moment column ``hv1 = h alpha_1``.

    This is the single code path used by the full model and both reduced
    models; only alpha_1 couples the micro block into (h, hu).
    """
    Up = pad(U, grid.bc)
    vp = pad(hv1, grid.bc)
    h = Up[:, 0]
    check_depth(h)
    u = Up[:, 1] / h
    a = vp / h
    hb = 0.5 * (h[1:] + h[:-1])
    ub = 0.5 * (u[1:] + u[:-1])
    ab = 0.5 * (a[1:] + a[:-1])
    dU = np.diff(Up, axis=0)
    dv = np.diff(vp)

    flux = np.empty_like(dU)
    flux[:, 0] = dU[:, 1]
    flux[:, 1] = (params.g * hb - ub**2 - ab**2 / 3.0) * dU[:, 0] + 2.0 * ub * dU[:, 1] + (2.0 / 3.0) * ab * dv

    out = 0.5 * (Up[2:] + Up[:-2]) - dt / (2.0 * grid.dx) * (flux[1:] + flux[:-1])
    check_depth(out[:, 0])
    return out


def first_moment(V: np.ndarray) -> np.ndarray:
    return V[:, 0] if V.shape[1] else np.zeros(V.shape[0])


def macro_transport_step(U, V, dt, grid: Grid, params: ModelParams) -> np.ndarray:
    return macro_transport_update(U, first_moment(V), dt, grid, params)


# --------------------------------------------------------------------------
# micro step
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class InterfaceCoefficients:
    """Per-interface data of the micro transport, interfaces j-1/2 for j = 0..Nx.

    ``ubar``/``abar`` are the interface means of u_m and alpha_1, ``g`` holds
    the two non-zero rows of A_vu(interface) applied to the macro jump.
    """

    ubar: np.ndarray
    abar: np.ndarray
    g: np.ndarray


def interface_coefficients(U_tilde: np.ndarray, alpha1: np.ndarray, grid: Grid) -> InterfaceCoefficients:
    Up = pad(U_tilde, grid.bc)
    h = Up[:, 0]
    check_depth(h)
    u = Up[:, 1] / h
    a = pad(alpha1, grid.bc)
    ub = 0.5 * (u[1:] + u[:-1])
    ab = 0.5 * (a[1:] + a[:-1])
    dU = np.diff(Up, axis=0)
    g = np.empty((len(ub), 2))
    g[:, 0] = -2.0 * ub * ab * dU[:, 0] + 2.0 * ab * dU[:, 1]
    g[:, 1] = -(2.0 / 3.0) * ab**2 * dU[:, 0]
    return InterfaceCoefficients(ub, ab, g)


def _micro_fluctuations(coef: InterfaceCoefficients, Vp: np.ndarray, sup, sub) -> np.ndarray:
    """A_vu dU + A_vv dV at every interface, shape (Nx + 1, N)."""
    dV = np.diff(Vp, axis=0)
    flux = coef.ubar[:, None] * dV + coef.abar[:, None] * apply_offdiag(dV, sup, sub)
    n = Vp.shape[1]
    flux[:, 0] += coef.g[:, 0]
    if n >= 2:
        flux[:, 1] += coef.g[:, 1]
    return flux


def micro_transport_rhs(U_tilde, alpha1, V, dt, grid: Grid) -> np.ndarray:
    """Semi-discrete micro right-hand side F(V) with alpha_1 frozen.

    The micro step is ``V + dt * F(V)``; F is affine in V, which is what the
    reduced solvers project.
    """
    coef = interface_coefficients(U_tilde, alpha1, grid)
    return micro_rhs_from_coefficients(coef, V, dt, grid)


def micro_rhs_from_coefficients(coef: InterfaceCoefficients, V, dt, grid: Grid) -> np.ndarray:
    sup, sub = offdiag_entries(V.shape[1])
    Vp = pad(V, grid.bc)
    flux = _micro_fluctuations(coef, Vp, sup, sub)
    lap = Vp[2:] - 2.0 * V + Vp[:-2]
    return lap / (2.0 * dt) - (flux[1:] + flux[:-1]) / (2.0 * grid.dx)


def micro_transport_step(U_tilde, U_old, V, dt, grid: Grid, params: ModelParams) -> np.ndarray:
    """Micro update with h, u_m from the post-macro state and alpha_1 from (U_old, V)."""
    U_tilde = np.asarray(U_tilde)
    V = np.asarray(V)
    if V.shape[0] != U_tilde.shape[0] or U_old.shape != U_tilde.shape or V.shape[1] != params.n_moments:
        raise ValueError(f"shape mismatch: U~ {U_tilde.shape}, U {U_old.shape}, V {V.shape}")
    if V.shape[1] == 0:
        return V.copy()
    check_depth(U_old[:, 0])
    alpha1 = V[:, 0] / U_old[:, 0]
    coef = interface_coefficients(U_tilde, alpha1, grid)
    sup, sub = offdiag_entries(V.shape[1])
    Vp = pad(V, grid.bc)
    flux = _micro_fluctuations(coef, Vp, sup, sub)
    return 0.5 * (Vp[2:] + Vp[:-2]) - dt / (2.0 * grid.dx) * (flux[1:] + flux[:-1])


def transport_step(U, V, dt, grid: Grid, params: ModelParams, staging: str = "sequential"):
    """Macro then micro transport.

    ``staging="sequential"`` feeds the micro step the post-macro (h, u_m);
    ``"simultaneous"`` evaluates both from the old state, which coincides
    with the unsplit full-system Lax-Friedrichs step.
    """
    U_tilde = macro_transport_step(U, V, dt, grid, params)
    if staging == "sequential":
        V_tilde = micro_transport_step(U_tilde, U, V, dt, grid, params)
    elif staging == "simultaneous":
        V_tilde = micro_transport_step(U, U, V, dt, grid, params)
    else:
        raise ValueError(f"unknown staging {staging!r}")
    return U_tilde, V_tilde
