"""True impulse responses and the population coefficients of each LP design.

The true h-step conditional response decomposes into a baseline term, a
state interaction, and a quadratic shock term:

    response(s, delta; h) = baseline_h*delta + a_h*s*delta + q_h*delta^2

Each regression specification recovers a different projection of that
object; the closed forms here are what OLS converges to under the model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .models import (
    QarParams,
    QvarParams,
    asym_m,
    horizon_coeffs,
    qar_moments,
    stationary_state_variance,
    vech_indices,
)
from .simulate import make_rng

__all__ = [
    "SpecKind",
    "PopulationIrf",
    "car",
    "cmr",
    "girf",
    "pop_irf",
    "irf_value",
    "kp_weight",
    "qvar_car",
    "qvar_linear_pop_irf",
    "ccar_region",
    "ccar_slice",
]


class SpecKind(str, Enum):
    """Regression specifications the lab knows how to build and analyze."""

    LINEAR = "linear"
    ASYM = "asym"          # shock interacted with its sign
    LAG = "lag"            # shock interacted with the lagged observable
    MIXED = "mixed"        # sign split of the lag-based design
    FEAS = "feas"          # lag interaction plus squared shock
    INFEAS = "infeas"      # true-state interaction plus squared shock
    INFEAS_COND1 = "infeas-cond1"
    INFEAS_COND2 = "infeas-cond2"


@dataclass(frozen=True)
class PopulationIrf:
    spec: SpecKind
    h: int
    coefficients: dict[str, float]


def car(p: QarParams, s, delta, h: int):
    """True conditional average response to a one-time shock of size delta."""
    c = horizon_coeffs(p, h)
    return c.baseline * delta + c.a_h * np.multiply(s, delta) + c.q_h * np.square(delta)


def cmr(p: QarParams, s, h: int):
    """Marginal response: the delta -> 0 limit of car/delta."""
    c = horizon_coeffs(p, h)
    return c.baseline + c.a_h * np.asarray(s, dtype=float)


def girf(p: QarParams, s, delta, h: int):
    """Generalized impulse response: car minus a state-free constant.

    The offset phi2*phi1^(h-1)*(1-phi1^h)/(1-phi1)*sigma^2 equals q_h,
    so the two notions share all state and shock dependence; at h=0 the
    offset is zero.
    """
    return car(p, s, delta, h) - horizon_coeffs(p, h).q_h


def pop_irf(spec: SpecKind, p: QarParams, h: int) -> PopulationIrf:
    """Population regression coefficients implied by the model for `spec`."""
    spec = SpecKind(spec)
    c = horizon_coeffs(p, h)
    if spec == SpecKind.LINEAR:
        coeffs = {"beta": c.baseline}
    elif spec == SpecKind.ASYM:
        m = asym_m()
        coeffs = {"beta_plus": c.baseline + m * c.q_h, "beta_minus": c.baseline - m * c.q_h}
    elif spec == SpecKind.LAG:
        mom = qar_moments(p)
        beta1 = c.a_h * mom.var_s / mom.var_y
        coeffs = {"beta0": c.baseline - beta1 * mom.mean_y, "beta1": beta1}
    elif spec == SpecKind.FEAS:
        mom = qar_moments(p)
        beta1 = c.a_h * mom.var_s / mom.var_y
        coeffs = {
            "theta1": c.baseline - beta1 * mom.mean_y,
            "theta2": beta1,
            "theta3": c.q_h,
        }
    elif spec == SpecKind.INFEAS:
        coeffs = {"kappa1": c.baseline, "kappa2": c.a_h, "kappa3": c.q_h}
    elif spec == SpecKind.MIXED:
        raise ValueError(
            "mixed specification has no closed-form population coefficients; "
            "it is supported for estimation only"
        )
    else:
        raise ValueError(f"no univariate population coefficients for {spec.value}")
    return PopulationIrf(spec=spec, h=h, coefficients=coeffs)


def irf_value(
    spec: SpecKind,
    p: QarParams,
    delta,
    h: int,
    *,
    y=None,
    s=None,
    sign=None,
):
    """Evaluate the population response of `spec` at its conditioning value.

    Conditioning must match the specification: linear takes none, the
    sign-split design takes the sign of delta (or an explicit 0/1 state),
    lag-based designs take the lagged observable y, and the true-state
    design takes s.  Inputs broadcast.
    """
    spec = SpecKind(spec)
    delta = np.asarray(delta, dtype=float)
    if spec == SpecKind.LINEAR:
        if y is not None or s is not None or sign is not None:
            raise ValueError("linear specification takes no conditioning value")
        return pop_irf(spec, p, h).coefficients["beta"] * delta
    if spec == SpecKind.ASYM:
        if y is not None or s is not None:
            raise ValueError("sign-split specification conditions only on the shock sign")
        co = pop_irf(spec, p, h).coefficients
        pos = (delta > 0) if sign is None else np.asarray(sign, dtype=bool)
        return np.where(pos, co["beta_plus"], co["beta_minus"]) * delta
    if spec == SpecKind.LAG:
        if y is None:
            raise ValueError("lag specification requires the lagged observable y")
        co = pop_irf(spec, p, h).coefficients
        return (co["beta0"] + co["beta1"] * np.asarray(y, dtype=float)) * delta
    if spec == SpecKind.FEAS:
        if y is None:
            raise ValueError("feasible specification requires the lagged observable y")
        co = pop_irf(spec, p, h).coefficients
        return (
            co["theta1"] * delta
            + co["theta2"] * np.asarray(y, dtype=float) * delta
            + co["theta3"] * np.square(delta)
        )
    if spec == SpecKind.INFEAS:
        if s is None:
            raise ValueError("infeasible specification requires the latent state s")
        return car(p, s, delta, h)
    raise ValueError(f"irf_value does not support {spec.value}")


def kp_weight(u):
    """Weight attached to marginal effects at baseline shock value u.

    Defined as Cov(1{u_t >= u}, u_t)/Var(u_t); for a standard normal
    shock this is the N(0,1) density at u.  It integrates to one and is
    symmetric, so quadratic marginal effects average out to zero.
    """
    u = np.asarray(u, dtype=float)
    return np.exp(-0.5 * u**2) / math.sqrt(2 * math.pi)


def _matrix_powers(A: np.ndarray, h: int) -> list[np.ndarray]:
    out = [np.eye(A.shape[0])]
    for _ in range(h):
        out.append(A @ out[-1])
    return out


def qvar_car(p: QvarParams, s: np.ndarray, delta: float, shock_index: int, h: int) -> np.ndarray:
    """True multivariate response vector to a size-delta shock in one component.

    For h >= 1 the response is the propagated heteroskedastic impact plus
    two quadratic-channel sums over intermediate dates; at h = 0 only the
    impact term is present.  The shock index is 0-based.
    """
    n = p.n
    if not 0 <= shock_index < n:
        raise ValueError(f"shock_index must be in [0, {n}), got {shock_index}")
    if h < 0:
        raise ValueError(f"horizon must be >= 0, got {h}")
    s = np.asarray(s, dtype=float)
    impact = np.zeros(n)
    impact[shock_index] = delta
    impact = p.Sigma_tr @ impact
    base0 = (1.0 + p.Gamma @ s) * impact
    if h == 0:
        return base0
    ri, ci = vech_indices(n)
    P = _matrix_powers(p.Phi1, h)
    out = P[h] @ base0
    e_i = np.zeros(n)
    e_i[shock_index] = 1.0
    for k in range(1, h + 1):
        Bk_ei = P[k - 1] @ p.Sigma_tr @ e_i
        ps = P[k] @ s
        cross = np.outer(ps, delta * Bk_ei)
        cross = cross + cross.T
        quad = delta * delta * np.outer(Bk_ei, Bk_ei)
        out += P[h - k] @ (p.Phi2 @ (cross[ri, ci] + quad[ri, ci]))
    return out


def qvar_linear_pop_irf(p: QvarParams, shock_index: int, outcome_index: int, h: int) -> float:
    """Slope a purely linear projection recovers: e_j' Phi1^h Sigma_tr e_i."""
    n = p.n
    if not 0 <= shock_index < n or not 0 <= outcome_index < n:
        raise ValueError("indices must be in [0, n)")
    M = np.linalg.matrix_power(p.Phi1, h) @ p.Sigma_tr
    return float(M[outcome_index, shock_index])


def _affine_response(p: QvarParams, delta: float, shock_index: int, h: int):
    """qvar_car is affine in s: return (value at 0, Jacobian in s)."""
    n = p.n
    base = qvar_car(p, np.zeros(n), delta, shock_index, h)
    jac = np.column_stack(
        [qvar_car(p, e, delta, shock_index, h) - base for e in np.eye(n)]
    )
    return base, jac


def ccar_region(
    p: QvarParams,
    predicate,
    delta: float,
    shock_index: int,
    h: int,
    n_draws: int = 1_000_000,
    seed: int = 0,
    min_prob: float = 1e-4,
) -> tuple[np.ndarray, np.ndarray]:
    """Response averaged over a positive-probability region of the state space.

    Draws states from their stationary N(0, V) law, keeps those where
    ``predicate(draws)`` is true, and averages the exact response.  The
    response is affine in the state, so the average and its MC error
    reduce to moments of the retained draws.

    Returns (value vector, mc_se vector); rejects regions with estimated
    probability below `min_prob`.
    """
    V = stationary_state_variance(p)
    L = np.linalg.cholesky(V)
    rng = make_rng(seed, "region")
    draws = rng.standard_normal((n_draws, p.n)) @ L.T
    keep = np.asarray(predicate(draws), dtype=bool)
    n_keep = int(keep.sum())
    if n_keep < min_prob * n_draws:
        raise ValueError(
            f"region probability estimate {n_keep/n_draws:.2e} below {min_prob:.0e}; "
            "Monte Carlo average would be unreliable"
        )
    sel = draws[keep]
    base, jac = _affine_response(p, delta, shock_index, h)
    vals = sel @ jac.T + base
    return vals.mean(axis=0), vals.std(axis=0, ddof=1) / math.sqrt(n_keep)


def ccar_slice(
    p: QvarParams,
    indices: list[int],
    values: np.ndarray,
    delta: float,
    shock_index: int,
    h: int,
) -> np.ndarray:
    """Response averaged over the zero-probability slice {s_I = values}.

    The conditional mean of the full state given the subvector is
    E[s s_I'] E[s_I s_I']^{-1} values under the stationary Gaussian law,
    and affinity of the response in s makes the slice average exact.
    """
    values = np.atleast_1d(np.asarray(values, dtype=float))
    idx = list(indices)
    if len(idx) != values.size:
        raise ValueError("indices and values must have equal length")
    V = stationary_state_variance(p)
    cond_mean = V[:, idx] @ np.linalg.solve(V[np.ix_(idx, idx)], values)
    cond_mean[idx] = values
    return qvar_car(p, cond_mean, delta, shock_index, h)
