"""Variational integrators for fractionally damped mechanical systems.

The Lobatto scheme solves the discrete Euler-Lagrange equations with a
fractional force assembled by matrix convolution quadrature; the midpoint
variant uses the scalar midpoint weights.  The damping operator is applied to
the increment x - x(0), which reproduces the classical damped update in the
half-order-squared limit and removes the start-up jump a zero-extended
history would inject for nonzero initial positions.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .cq import (
    StageTrajectory,
    WeightSequence,
    apply_advanced,
    apply_retarded,
    compute_weights,
    midcq_weights,
)
from .galerkin import (
    LagrangianProblem,
    basis_for,
    d_all_lagrangian,
    hessian_blocks,
)
from .models import energy
from .tableau import ButcherTableau, midpoint

__all__ = [
    "FviConfig",
    "FviSolution",
    "NewtonError",
    "init_step",
    "step",
    "legendre_minus",
    "legendre_plus",
    "qp_closed_form",
    "run",
    "run_midcq",
    "companion_residuals",
    "solve_companion",
    "action_variation",
]

_JACOBIAN_MODES = ("analytic", "finite-difference")
_PREDICTORS = ("previous-stage-values", "constant-extrapolation")


@dataclass(frozen=True)
class FviConfig:
    """Run parameters: step size, step count and Newton policy."""

    h: float
    N: int
    newton_tol: float = 1e-12
    newton_max_iter: int = 50
    jacobian_mode: str = "analytic"
    predictor: str = "previous-stage-values"

    def __post_init__(self):
        if self.h <= 0:
            raise ValueError("h must be positive")
        if self.N < 1:
            raise ValueError("N must be >= 1")
        if self.newton_tol <= 0:
            raise ValueError("newton_tol must be positive")
        if self.jacobian_mode not in _JACOBIAN_MODES:
            raise ValueError(f"jacobian_mode must be one of {_JACOBIAN_MODES}")
        if self.predictor not in _PREDICTORS:
            raise ValueError(f"predictor must be one of {_PREDICTORS}")


@dataclass(frozen=True)
class FviSolution:
    """Integrator output: stage trajectory, node momenta, times, diagnostics.

    newton_stats holds one (solve count, final residual) pair per nonlinear
    system; run guarantees every residual is at or below newton_tol.
    """

    trajectory: StageTrajectory
    momenta: np.ndarray
    times: np.ndarray
    newton_stats: tuple
    energy: Optional[np.ndarray] = None

    def __post_init__(self):
        for name in ("momenta", "times", "energy"):
            arr = getattr(self, name)
            if arr is None:
                continue
            arr = np.asarray(arr, dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def node_positions(self) -> np.ndarray:
        """Main-node positions, shape (N+1, d)."""
        vals = self.trajectory.values
        return np.vstack([vals[:, 0, :], vals[-1:, -1, :]])


class NewtonError(RuntimeError):
    """Newton iteration failed; carries the last iterate and residual norm."""

    def __init__(self, message, residual_norm, iterate, iterations):
        super().__init__(message)
        self.residual_norm = residual_norm
        self.iterate = iterate
        self.iterations = iterations


def _newton(residual, jacobian, u0, tol, max_iter):
    """Undamped Newton; returns (solution, solve count, final residual norm)."""
    u = np.array(u0, dtype=float)
    for solves in range(max_iter + 1):
        F = residual(u)
        norm = float(np.abs(F).max()) if F.size else 0.0
        if norm <= tol:
            return u, solves, norm
        if solves == max_iter:
            raise NewtonError(
                f"newton stalled at residual {norm:.3e} after {solves} iterations",
                norm, u, solves)
        u = u - np.linalg.solve(jacobian(u), F)
    raise AssertionError("unreachable")


def _fd_jacobian(residual, u):
    # central difference columns, step scaled by the iterate magnitude
    step = 1e-7 * (1.0 + float(np.abs(u).max()))
    n = u.size
    J = np.empty((n, n))
    for j in range(n):
        up = u.copy()
        dn = u.copy()
        up[j] += step
        dn[j] -= step
        J[:, j] = (residual(up) - residual(dn)) / (2.0 * step)
    return J


def _check_weights(prob, tab, cfg, weights):
    if abs(weights.exponent + 2.0 * prob.alpha) > 1e-12:
        raise ValueError("weights exponent does not match the damping order")
    if weights.h != cfg.h:
        raise ValueError("weights step size does not match the configuration")
    if weights.tableau_label != tab.label:
        raise ValueError("weights were computed for another tableau")


def _analytic_jacobian(prob, tab, basis, stages_full, t_k, h, W0, negate_first):
    """Stage Jacobian of the nonlinear system; rows follow the equation order."""
    s = tab.r - 1
    d = prob.d
    hess = hessian_blocks(prob, tab, basis, stages_full, t_k, h)
    eye = np.eye(d)
    J = np.empty((s * d, s * d))
    for e in range(s):
        sign = -1.0 if (negate_first and e == 0) else 1.0
        for m in range(s):
            block = hess[e, m + 1] - prob.rho * h * tab.b[e] * W0[e, m + 1] * eye
            J[e * d:(e + 1) * d, m * d:(m + 1) * d] = sign * block
    return J


def init_step(prob: LagrangianProblem, tab: ButcherTableau,
              weights: WeightSequence, cfg: FviConfig,
              x0, p0, stats_out: Optional[list] = None) -> np.ndarray:
    """First-step stages from the momentum boundary condition at t=0.

    Solves p0 = -D_1 L_d + rho h b_1 [CQ x]^1 together with the inner stage
    equations i = 2..s for the unknowns x_0^2..x_0^{s+1}; x_0^1 = x0 is fixed.
    """
    if tab.r < 2:
        raise ValueError("init_step needs at least two stages")
    _check_weights(prob, tab, cfg, weights)
    x0 = np.asarray(x0, dtype=float).ravel()
    p0 = np.asarray(p0, dtype=float).ravel()
    basis = basis_for(tab)
    s = tab.r - 1
    d = prob.d
    h = cfg.h
    rho = prob.rho
    W0 = weights.W[0]
    b = tab.b

    def build(u):
        return np.vstack([x0, u.reshape(s, d)])

    def residual(u):
        stages = build(u)
        dL = d_all_lagrangian(prob, tab, basis, stages, 0.0, h)
        dcq = W0 @ (stages - x0)
        rows = [-dL[0] + rho * h * b[0] * dcq[0] - p0]
        for i in range(2, s + 1):
            rows.append(dL[i - 1] - rho * h * b[i - 1] * dcq[i - 1])
        return np.concatenate(rows)

    def jacobian(u):
        return _analytic_jacobian(prob, tab, basis, build(u), 0.0, h, W0,
                                  negate_first=True)

    v0 = np.linalg.solve(prob.mass_matrix, p0)
    guess = (x0[None, :] + tab.c[1:, None] * h * v0[None, :]).ravel()
    if cfg.jacobian_mode == "analytic" and prob.hess_potential is not None:
        jac = jacobian
    else:
        jac = lambda u: _fd_jacobian(residual, u)
    u, solves, norm = _newton(residual, jac, guess, cfg.newton_tol,
                              cfg.newton_max_iter)
    if stats_out is not None:
        stats_out.append((solves, norm))
    return build(u)


def step(prob: LagrangianProblem, tab: ButcherTableau, weights: WeightSequence,
         cfg: FviConfig, history: StageTrajectory, k: int,
         stats_out: Optional[list] = None) -> np.ndarray:
    """Stages of block k from the discrete Euler-Lagrange closure.

    history must hold blocks 0..k-1; the new block's first stage is the last
    stage of block k-1.  The damping history sum over n >= 1 is evaluated
    once, only the W_0 coupling enters the Newton system.
    """
    if k < 1 or history.nblocks != k:
        raise ValueError(f"history must hold exactly blocks 0..{k - 1}")
    _check_weights(prob, tab, cfg, weights)
    if weights.count <= k:
        raise ValueError(f"need weights up to index {k}, have {weights.count - 1}")
    basis = basis_for(tab)
    s = tab.r - 1
    d = prob.d
    h = cfg.h
    rho = prob.rho
    W0 = weights.W[0]
    b = tab.b
    vals = history.values
    x_init = vals[0, 0]
    incr = vals - x_init
    x_k1 = vals[k - 1, -1]
    t_k = k * h
    # history part of the damping at block k (weights n = 1..k)
    S_k = np.tensordot(weights.W[1:k + 1], incr[::-1], axes=([0, 2], [0, 1]))
    # full damping stages at block k-1, all known
    dcq_prev = np.tensordot(weights.W[:k][::-1], incr, axes=([0, 2], [0, 1]))
    dL_prev = d_all_lagrangian(prob, tab, basis, vals[k - 1], t_k - h, h)
    closure_known = dL_prev[-1] - rho * h * b[-1] * dcq_prev[-1]

    def build(u):
        return np.vstack([x_k1, u.reshape(s, d)])

    def residual(u):
        stages = build(u)
        dL = d_all_lagrangian(prob, tab, basis, stages, t_k, h)
        dcq = W0 @ (stages - x_init) + S_k
        rows = [closure_known + dL[0] - rho * h * b[0] * dcq[0]]
        for i in range(2, s + 1):
            rows.append(dL[i - 1] - rho * h * b[i - 1] * dcq[i - 1])
        return np.concatenate(rows)

    def jacobian(u):
        return _analytic_jacobian(prob, tab, basis, build(u), t_k, h, W0,
                                  negate_first=False)

    if cfg.predictor == "previous-stage-values":
        guess = vals[k - 1, 1:].ravel()
    else:
        guess = np.tile(x_k1, s)
    if cfg.jacobian_mode == "analytic" and prob.hess_potential is not None:
        jac = jacobian
    else:
        jac = lambda u: _fd_jacobian(residual, u)
    u, solves, norm = _newton(residual, jac, guess, cfg.newton_tol,
                              cfg.newton_max_iter)
    if stats_out is not None:
        stats_out.append((solves, norm))
    return build(u)


def _node_momentum(prob, tab, weights, history, k, plus):
    if not 0 <= k < history.nblocks:
        raise IndexError(f"block index {k} out of range")
    if weights.count <= k:
        raise IndexError(f"need weights up to index {k}, have {weights.count - 1}")
    basis = basis_for(tab)
    vals = history.values
    incr = vals[:k + 1] - vals[0, 0]
    dcq = np.tensordot(weights.W[:k + 1][::-1], incr, axes=([0, 2], [0, 1]))
    dL = d_all_lagrangian(prob, tab, basis, vals[k], k * history.h, history.h)
    rho_h = prob.rho * history.h
    if plus:
        return dL[-1] - rho_h * tab.b[-1] * dcq[-1]
    return -dL[0] + rho_h * tab.b[0] * dcq[0]


def legendre_minus(prob: LagrangianProblem, tab: ButcherTableau,
                   weights: WeightSequence, history: StageTrajectory,
                   k: int) -> np.ndarray:
    """Pre-node momentum p_k^- = -D_1 L_d(block k) + rho h b_1 [CQ x]_k^1."""
    return _node_momentum(prob, tab, weights, history, k, plus=False)


def legendre_plus(prob: LagrangianProblem, tab: ButcherTableau,
                  weights: WeightSequence, history: StageTrajectory,
                  k: int) -> np.ndarray:
    """Post-node momentum p_{k+1}^+ = D_{s+1} L_d(block k) - rho h b_{s+1} [CQ x]_k^{s+1}."""
    return _node_momentum(prob, tab, weights, history, k, plus=True)


def qp_closed_form(prob: LagrangianProblem, h: float, x_k, p_k,
                   t_k: float = 0.0) -> tuple:
    """One step of the two-stage closed-form position-momentum map.

    Valid for alpha = 1/2 and identity mass, where the damping weights are
    local and the stage system collapses to an explicit update.
    """
    if abs(prob.alpha - 0.5) > 1e-12:
        raise ValueError("closed-form map requires alpha = 1/2")
    if not np.array_equal(prob.mass_matrix, np.eye(prob.d)):
        raise ValueError("closed-form map requires identity mass")
    if h <= 0:
        raise ValueError("h must be positive")
    x_k = np.asarray(x_k, dtype=float).ravel()
    p_k = np.asarray(p_k, dtype=float).ravel()
    rho = prob.rho
    impulse = p_k - 0.5 * h * prob.grad_potential(t_k, x_k)
    x_next = x_k + (2.0 * h / (2.0 + rho * h)) * impulse
    p_next = ((2.0 - rho * h) / (2.0 + rho * h)) * impulse \
        - 0.5 * h * prob.grad_potential(t_k + h, x_next)
    return x_next, p_next


def run(prob: LagrangianProblem, tab: ButcherTableau, cfg: FviConfig,
        x0, p0) -> FviSolution:
    """Full forward integration: init step, N-1 closure steps, node momenta.

    The weight contour gets four points per step instead of the default two,
    which keeps the accumulated weight error below the local truncation error
    of the higher-stage schemes over long horizons.
    """
    weights = compute_weights(tab, -2.0 * prob.alpha, cfg.h, cfg.N,
                              contour_points=4 * (cfg.N + 1))
    d = prob.d
    blocks = np.empty((cfg.N, tab.r, d))
    stats: list = []
    try:
        blocks[0] = init_step(prob, tab, weights, cfg, x0, p0, stats_out=stats)
    except NewtonError as exc:
        raise NewtonError(f"init step failed: {exc}", exc.residual_norm,
                          exc.iterate, exc.iterations) from exc
    for k in range(1, cfg.N):
        history = StageTrajectory(values=blocks[:k], h=cfg.h,
                                  continuity_flag=True)
        try:
            blocks[k] = step(prob, tab, weights, cfg, history, k,
                             stats_out=stats)
        except NewtonError as exc:
            raise NewtonError(f"step {k} failed: {exc}", exc.residual_norm,
                              exc.iterate, exc.iterations) from exc
    trajectory = StageTrajectory(values=blocks, h=cfg.h, continuity_flag=True)
    momenta = np.empty((cfg.N + 1, d))
    for k in range(cfg.N):
        momenta[k] = legendre_minus(prob, tab, weights, trajectory, k)
    momenta[cfg.N] = legendre_plus(prob, tab, weights, trajectory, cfg.N - 1)
    times = cfg.h * np.arange(cfg.N + 1)
    nodes = np.vstack([blocks[:, 0, :], blocks[-1:, -1, :]])
    energies = np.array([energy(prob, nodes[k], momenta[k])
                         for k in range(cfg.N + 1)])
    return FviSolution(trajectory=trajectory, momenta=momenta, times=times,
                       newton_stats=tuple(stats), energy=energies)


def run_midcq(prob: LagrangianProblem, cfg: FviConfig, x0, p0) -> FviSolution:
    """Midpoint-rule variational integrator with scalar damping weights.

    Initialization solves p0 = -D_1 L_d(x_0, x_1) + (rho h / 2) w_0 (x_1 - x_0)/2;
    each further step closes the discrete Euler-Lagrange equation with the
    damping average (rho h / 2)(D x_k + D x_{k-1}) assembled from midpoint
    weights on increment midpoints.  The factor rho h / 2 matches the
    half-weight the midpoint variation assigns to each node; with a full
    rho h weight the initial velocity picks up an O(h) bias and the scheme
    drops to first order whenever the damping order reaches one.
    """
    tab = midpoint()
    basis = basis_for(tab)
    w = midcq_weights(-2.0 * prob.alpha, cfg.h, cfg.N).w
    d = prob.d
    h = cfg.h
    rho = prob.rho
    x0 = np.asarray(x0, dtype=float).ravel()
    p0 = np.asarray(p0, dtype=float).ravel()
    nodes = np.empty((cfg.N + 1, d))
    nodes[0] = x0
    stats: list = []
    use_analytic = (cfg.jacobian_mode == "analytic"
                    and prob.hess_potential is not None)

    def d_all(left, right, t_k):
        return d_all_lagrangian(prob, tab, basis, np.vstack([left, right]),
                                t_k, h)

    def hess(left, right, t_k):
        return hessian_blocks(prob, tab, basis, np.vstack([left, right]),
                              t_k, h)

    def residual_init(u):
        dL = d_all(x0, u, 0.0)
        return -dL[0] + 0.5 * rho * h * w[0] * (u - x0) / 2.0 - p0

    def jacobian_init(u):
        return -hess(x0, u, 0.0)[0, 1] + 0.25 * rho * h * w[0] * np.eye(d)

    jac = jacobian_init if use_analytic \
        else (lambda u: _fd_jacobian(residual_init, u))
    v0 = np.linalg.solve(prob.mass_matrix, p0)
    u, solves, norm = _newton(residual_init, jac, x0 + h * v0,
                              cfg.newton_tol, cfg.newton_max_iter)
    nodes[1] = u
    stats.append((solves, norm))

    mids = np.empty((cfg.N, d))
    mids[0] = 0.5 * (nodes[0] + nodes[1]) - x0
    for k in range(1, cfg.N):
        t_k = k * h
        # damping at block k-1 and the n >= 1 history part at block k
        d_prev = w[k - 1::-1] @ mids[:k]
        hist_k = w[k:0:-1] @ mids[:k]
        dL_prev = d_all(nodes[k - 1], nodes[k], t_k - h)
        known = dL_prev[1] - 0.5 * rho * h * d_prev

        def residual(u):
            dL = d_all(nodes[k], u, t_k)
            d_k = hist_k + w[0] * 0.5 * ((nodes[k] - x0) + (u - x0))
            return known + dL[0] - 0.5 * rho * h * d_k

        def jacobian(u):
            return hess(nodes[k], u, t_k)[0, 1] \
                - 0.25 * rho * h * w[0] * np.eye(d)

        jac = jacobian if use_analytic \
            else (lambda u: _fd_jacobian(residual, u))
        try:
            u, solves, norm = _newton(residual, jac, 2 * nodes[k] - nodes[k - 1],
                                      cfg.newton_tol, cfg.newton_max_iter)
        except NewtonError as exc:
            raise NewtonError(f"step {k} failed: {exc}", exc.residual_norm,
                              exc.iterate, exc.iterations) from exc
        nodes[k + 1] = u
        mids[k] = 0.5 * (nodes[k] + nodes[k + 1]) - x0
        stats.append((solves, norm))

    blocks = np.stack([nodes[:-1], nodes[1:]], axis=1)
    trajectory = StageTrajectory(values=blocks, h=h, continuity_flag=True)
    momenta = np.empty((cfg.N + 1, d))
    momenta[0] = p0
    for k in range(1, cfg.N):
        d_k = w[k::-1] @ mids[:k + 1]
        momenta[k] = -d_all(nodes[k], nodes[k + 1], k * h)[0] \
            + 0.5 * rho * h * d_k
    d_last = w[cfg.N - 1::-1] @ mids
    momenta[cfg.N] = d_all(nodes[-2], nodes[-1], (cfg.N - 1) * h)[1] \
        - 0.5 * rho * h * d_last
    times = h * np.arange(cfg.N + 1)
    energies = np.array([energy(prob, nodes[k], momenta[k])
                         for k in range(cfg.N + 1)])
    return FviSolution(trajectory=trajectory, momenta=momenta, times=times,
                       newton_stats=tuple(stats), energy=energies)


def _advanced_weighted(weights, y_blocks, b):
    """Advanced operator applied to the b-weighted blocks, all k at once."""
    by = StageTrajectory(values=b[None, :, None] * y_blocks, h=weights.h)
    return np.stack([apply_advanced(weights, by, k)
                     for k in range(y_blocks.shape[0])])


def companion_residuals(prob: LagrangianProblem, tab: ButcherTableau,
                        weights: WeightSequence, y_blocks: np.ndarray,
                        h: float) -> np.ndarray:
    """Residuals of the anti-causal companion equations on blocks 0..N.

    y_blocks has N+1 blocks; block N is the terminal block whose stages
    beyond the first are zero.  The damping uses the advanced operator on
    b-weighted stages, with no additional quadrature factor.
    """
    basis = basis_for(tab)
    n_steps = y_blocks.shape[0] - 1
    s = tab.r - 1
    adv = _advanced_weighted(weights, y_blocks, tab.b)
    dL = np.stack([d_all_lagrangian(prob, tab, basis, y_blocks[k], k * h, h)
                   for k in range(n_steps)])
    rows = []
    for k in range(1, n_steps):
        rows.append(dL[k - 1][-1] + dL[k][0]
                    - prob.rho * h * (adv[k][0] + adv[k - 1][-1]))
    for k in range(n_steps):
        for i in range(2, s + 1):
            rows.append(dL[k][i - 1] - prob.rho * h * adv[k][i - 1])
    return np.concatenate(rows) if rows else np.zeros(0)


def solve_companion(prob: LagrangianProblem, tab: ButcherTableau,
                    cfg: FviConfig, y_start, y_end) -> np.ndarray:
    """Two-stage companion series with fixed endpoint values, as blocks 0..N.

    Solves the anti-causal closure equations for the interior main nodes by
    Newton iteration with a finite-difference Jacobian; returns the N+1
    blocks including the zero-padded terminal block.
    """
    if tab.r != 2:
        raise ValueError("companion solve is implemented for two stages")
    weights = compute_weights(tab, -2.0 * prob.alpha, cfg.h, cfg.N)
    d = prob.d
    y_start = np.asarray(y_start, dtype=float).ravel()
    y_end = np.asarray(y_end, dtype=float).ravel()

    def build(u):
        main = np.vstack([y_start, u.reshape(cfg.N - 1, d), y_end])
        blocks = np.stack([main[:-1], main[1:]], axis=1)
        terminal = np.zeros((1, 2, d))
        terminal[0, 0] = y_end
        return np.concatenate([blocks, terminal])

    def residual(u):
        return companion_residuals(prob, tab, weights, build(u), cfg.h)

    guess = np.linspace(y_start, y_end, cfg.N + 1)[1:-1].ravel()
    u, _, _ = _newton(residual, lambda v: _fd_jacobian(residual, v), guess,
                      cfg.newton_tol, cfg.newton_max_iter)
    return build(u)


def action_variation(prob: LagrangianProblem, tab: ButcherTableau,
                     x_blocks: np.ndarray, y_blocks: np.ndarray,
                     delta_blocks: np.ndarray, h: float) -> float:
    """Directional derivative of the doubled discrete action.

    The same variation is applied to both series; the damping pairing uses
    half-order weights on the raw trajectories, so the result vanishes on
    solutions of the forward and companion equations when the forward series
    starts at the origin.  All block arrays carry N+1 blocks including the
    zero-padded terminal block.
    """
    basis = basis_for(tab)
    n_steps = x_blocks.shape[0] - 1
    conservative = 0.0
    for k in range(n_steps):
        dLx = d_all_lagrangian(prob, tab, basis, x_blocks[k], k * h, h)
        dLy = d_all_lagrangian(prob, tab, basis, y_blocks[k], k * h, h)
        conservative += float(((dLx + dLy) * delta_blocks[k]).sum())
    weights = compute_weights(tab, -prob.alpha, h, n_steps)
    x_traj = StageTrajectory(values=x_blocks, h=h)
    delta_traj = StageTrajectory(values=delta_blocks, h=h)
    adv_delta = _advanced_weighted(weights, delta_blocks, tab.b)
    adv_y = _advanced_weighted(weights, y_blocks, tab.b)
    fractional = 0.0
    for k in range(n_steps + 1):
        ret_x = apply_retarded(weights, x_traj, k)
        ret_delta = apply_retarded(weights, delta_traj, k)
        fractional += float((adv_delta[k] * ret_x).sum())
        fractional += float((adv_y[k] * ret_delta).sum())
    return conservative - prob.rho * h * fractional
