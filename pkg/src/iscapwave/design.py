"""Input-distribution design: maximize harvested power under rate and
sidelobe constraints.

The rank-relaxed problem is split by consensus ADMM over (P) and (U, sigma)
with the coupling P = U + diag(sigma):

* P-step: the harvested-power objective is convex in P, so its negative is
  linearized (SCA); together with the tangent majorizer of the sidelobe
  bound the subproblem is a convex QCQP solved in closed form -- off-diagonal
  entries directly, diagonal entries through a bordered linear system with a
  bisection on the sidelobe multiplier.
* (U, sigma)-step: the concave/indefinite parts of the objective are
  linearized while the convex quadratic trace terms are kept exact; the
  sidelobe constraint becomes a half-space through a parametric inner
  approximation of ||diag(U)||^2 >= r.  The resulting convex program is
  solved with cvxpy.
* The rank-1 mean is recovered from the relaxed U by Gaussian randomization.

Internally the solver works in normalized units: powers are expressed as
fractions of the budget (channel factors absorb sqrt(P_max)) and the
objective is scaled to order one, so the default step size rho = 1 is
meaningful across path losses.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field

import cvxpy as cp
import numpy as np

from .channels import CommChannel, PoweringChannel
from .ofdm import GaussianInput, OFDMConfig
from .powering import PoweringCoefficients, RectennaModel, build_powering_coefficients, zdc_total
from .rate import achievable_rate, max_rate_at_power, snr_gains, waterfill_min_power
from .sensing import SensingGrid, normalized_ub, peak_scale, ub_fap

__all__ = [
    "Constraints",
    "SolverConfig",
    "ADMMState",
    "DesignResult",
    "InfeasibleError",
    "RandomizationError",
    "taylor_grad_p",
    "taylor_grad_u",
    "grad_u_total",
    "build_linearized_ub",
    "solve_p_step",
    "sensing_radius",
    "solve_u_sigma_step",
    "gaussian_randomization",
    "optimize",
    "baseline",
    "coexist_input",
]

RATE_TOL = 1e-6
UB_TOL = 1e-6
POWER_TOL = 1e-9

FAMILIES = ("opt", "symmetric", "cscg")


class InfeasibleError(Exception):
    """The constraint pair cannot be met by any input of the family."""


class RandomizationError(Exception):
    """No feasible rank-1 candidate found among the randomization draws."""


@dataclass(frozen=True)
class Constraints:
    """Transmit power budget (W), rate floor (bits/s/Hz), normalized sidelobe cap."""

    p_max: float
    c_min: float = 0.0
    s_max: float = 0.0

    def __post_init__(self):
        if self.p_max <= 0:
            raise ValueError("transmit power budget must be positive")
        if self.c_min < 0:
            raise ValueError("rate floor must be non-negative")
        if self.s_max < -1:
            raise ValueError("normalized sidelobe cap cannot lie below -1")


@dataclass(frozen=True)
class SolverConfig:
    rho: float = 1.0
    eps0: float = 1e-4
    max_admm_iters: int = 20
    max_sca_iters: int = 15
    u2_lo: float = 0.0
    u2_hi: float = 1e6
    randomization_count: int = 100
    inner_tol: float = 1e-7
    bisect_tol: float = 1e-8
    # consensus-penalty continuation: after `rho_growth_start` sweeps the
    # penalty grows by `rho_growth` each sweep, forcing tight consensus
    # within the sweep budget while the early sweeps optimize freely
    rho_growth: float = 1.6
    rho_growth_start: int = 3
    seed: int = 0

    def __post_init__(self):
        if self.rho <= 0 or self.eps0 <= 0:
            raise ValueError("rho and eps0 must be positive")
        if self.u2_lo >= self.u2_hi:
            raise ValueError("bisection bracket must satisfy u2_lo < u2_hi")
        if self.randomization_count < 1:
            raise ValueError("randomization_count must be >= 1")
        if self.rho_growth < 1.0:
            raise ValueError("rho_growth must be >= 1")
        if self.max_admm_iters < 1 or self.max_sca_iters < 1:
            raise ValueError("iteration caps must be >= 1")


@dataclass
class ADMMState:
    p: np.ndarray
    u: np.ndarray
    sigma: np.ndarray
    v: np.ndarray
    primal_residuals: list = field(default_factory=list)
    objectives: list = field(default_factory=list)


@dataclass(frozen=True)
class DesignResult:
    input: GaussianInput
    achieved_zdc: float
    achieved_rate: float
    achieved_ub: float  # normalized
    feasible: bool
    iterations: int
    diagnostics: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# objective derivatives


def taylor_grad_p(
    coeffs: PoweringCoefficients,
    rect: RectennaModel,
    p_op: np.ndarray,
    u_fixed: np.ndarray,
) -> np.ndarray:
    """Gradient of the DC scaling term with respect to P at (p_op, u_fixed)."""
    p_op = np.asarray(p_op, dtype=float)
    u_fixed = np.asarray(u_fixed, dtype=float)
    d = coeffs.dim
    if p_op.shape != (d, d) or u_fixed.shape != (d, d):
        raise ValueError(f"operating matrices must be {d}x{d}")
    s2 = coeffs.noise_var
    w4 = 0.75 * rect.k4
    g = np.zeros((d, d))

    for mats in (coeffs.a, coeffs.a_half):
        for a in mats:
            t = np.trace(a @ p_op)
            g += rect.k2 * a if mats is coeffs.a else 0.0
            g += w4 * (2.0 * t * a + 6.0 * s2 * a + 4.0 * a @ p_op @ a)

    for sets in (coeffs.cp, coeffs.cp_half):
        for cset in sets:
            b1, b2, dd = cset.b1, cset.b2, cset.d
            bn = cset.b
            t = np.trace(bn @ p_op) + 2.0 * np.trace(dd @ u_fixed)
            if sets is coeffs.cp:
                g += rect.k2 * bn
            g += w4 * (2.0 * t * bn + 6.0 * s2 * bn)
            g += (
                3.0
                * rect.k4
                * (
                    b1 @ (p_op @ b1 + u_fixed @ dd.T)
                    + dd.T @ (p_op @ dd + u_fixed @ b2)
                    + dd @ (p_op @ dd.T + u_fixed @ b1)
                    + b2 @ (p_op @ b2 + u_fixed @ dd)
                )
            )
    return 0.5 * (g + g.T)


def _grad_u_kept_quadratic(
    coeffs: PoweringCoefficients, rect: RectennaModel, u: np.ndarray
) -> np.ndarray:
    """Gradient of the convex trace terms kept exact in the (U, sigma)-step."""
    out = np.zeros_like(u)
    for mats in (coeffs.a, coeffs.a_half):
        for a in mats:
            out += a @ u @ a
    for sets in (coeffs.cp, coeffs.cp_half):
        for cset in sets:
            e = cset.e
            out += e @ u @ e
    return 3.0 * rect.k4 * out


def taylor_grad_u(
    coeffs: PoweringCoefficients,
    rect: RectennaModel,
    p_fixed: np.ndarray,
    u_op: np.ndarray,
) -> np.ndarray:
    """Linearization coefficient J of the (U, sigma)-step at u_op.

    J is the gradient of [z_dc + kept-convex-quadratic] with respect to U, so
    that J - grad(kept quadratic) equals the true U-gradient of z_dc.  Only CP
    sub-pulses contribute: the data-duration U-terms cancel against the kept
    quadratic exactly.
    """
    p_fixed = np.asarray(p_fixed, dtype=float)
    u_op = np.asarray(u_op, dtype=float)
    s2 = coeffs.noise_var
    j = np.zeros_like(u_op)
    for sets in (coeffs.cp, coeffs.cp_half):
        for cset in sets:
            b1, b2, dd = cset.b1, cset.b2, cset.d
            t = np.trace(cset.b @ p_fixed) + 2.0 * np.trace(dd @ u_op)
            if sets is coeffs.cp:
                j += 2.0 * rect.k2 * dd.T
            j += 3.0 * rect.k4 * (t * dd.T + 3.0 * s2 * dd.T)
            j += 3.0 * rect.k4 * (
                2.0 * dd.T @ u_op @ dd.T
                + b1 @ u_op @ b2
                + b2 @ u_op @ b1
                + dd.T @ p_fixed @ b1
                + dd @ p_fixed @ b2
                + b1 @ p_fixed @ dd
                + b2 @ p_fixed @ dd.T
            )
    return j


def grad_u_total(
    coeffs: PoweringCoefficients,
    rect: RectennaModel,
    p_fixed: np.ndarray,
    u_op: np.ndarray,
) -> np.ndarray:
    """Exact U-gradient of the DC scaling term (J minus the kept quadratic)."""
    return taylor_grad_u(coeffs, rect, p_fixed, u_op) - _grad_u_kept_quadratic(
        coeffs, rect, u_op
    )


# ---------------------------------------------------------------------------
# sidelobe surrogate


@dataclass(frozen=True)
class _GridOps:
    """Precomputed sensing-grid quantities used by the P-step closed forms."""

    grid: SensingGrid
    peak: float  # M (K_G M - 1)
    rows_r: np.ndarray  # (K_G-1, 2K) real parts of M * [f_r; f_r]
    rows_i: np.ndarray
    outer_sum: np.ndarray  # per range bin: outer(rows_r) + outer(rows_i)
    n_offpeak_v: int

    @classmethod
    def build(cls, grid: SensingGrid) -> "_GridOps":
        rows = grid.zero_velocity_rows()
        rows_r = grid.m * rows.real
        rows_i = grid.m * rows.imag
        outer = np.array(
            [np.outer(rr, rr) + np.outer(ri, ri) for rr, ri in zip(rows_r, rows_i)]
        ) if len(rows) else np.zeros((0, 2 * grid.k, 2 * grid.k))
        return cls(
            grid=grid,
            peak=grid.m * (grid.k_g * grid.m - 1),
            rows_r=rows_r,
            rows_i=rows_i,
            outer_sum=outer,
            n_offpeak_v=(grid.m - 1) * grid.k_g,
        )

    def radicands(self, p_diag: np.ndarray, quartic: float) -> tuple[np.ndarray, float]:
        """Per zero-velocity-cell radicands and the shared off-velocity radicand."""
        base = 2.0 * self.grid.m * float(p_diag @ p_diag) + quartic
        if len(self.rows_r):
            coh = (self.rows_r @ p_diag) ** 2 + (self.rows_i @ p_diag) ** 2
        else:
            coh = np.zeros(0)
        return coh + base, base


@dataclass(frozen=True)
class LinearizedUB:
    """Tangent majorizer of the sidelobe bound at a fixed operating point.

    value(P) = const - peak * Tr(P) + sum_cells g(diag P) / alpha_cell, which
    touches the true bound at the operating point and upper-bounds it
    elsewhere (concavity of the square root).
    """

    ops: _GridOps
    const: float
    alphas_r: np.ndarray
    alpha_off: float

    def value(self, p_mat: np.ndarray) -> float:
        p_diag = np.diag(p_mat)
        ops = self.ops
        total = self.const - ops.peak * np.trace(p_mat)
        if len(ops.rows_r):
            coh = (ops.rows_r @ p_diag) ** 2 + (ops.rows_i @ p_diag) ** 2
            base = 2.0 * ops.grid.m * float(p_diag @ p_diag)
            total += float(np.sum((coh + base) / self.alphas_r))
        else:
            base = 2.0 * ops.grid.m * float(p_diag @ p_diag)
        total += ops.n_offpeak_v * base / self.alpha_off
        return float(total)

    def curvature(self) -> np.ndarray:
        """S with d(sum g/alpha)/d p = S p: used inside the bordered system."""
        ops = self.ops
        d = 2 * ops.grid.k
        inv_sum = float(np.sum(1.0 / self.alphas_r)) + ops.n_offpeak_v / self.alpha_off
        s = 4.0 * ops.grid.m * inv_sum * np.eye(d)
        for outer, alpha in zip(ops.outer_sum, self.alphas_r):
            s += (2.0 / alpha) * outer
        return s


def build_linearized_ub(
    p_op: np.ndarray, u_fixed: np.ndarray, ops: _GridOps, perturb: float = 1e-10
) -> LinearizedUB:
    """Linearize the sidelobe bound at (p_op, u_fixed).

    Zero radicands have no tangent; the operating diagonal is nudged by
    ``perturb`` when that happens and the slopes are floored accordingly.
    """
    p_diag = np.diag(p_op).astype(float)
    quartic = -2.0 * ops.grid.m * float(np.diag(u_fixed) @ np.diag(u_fixed))
    rad_r, rad_off = ops.radicands(p_diag, quartic)
    if (len(rad_r) and rad_r.min() <= 0.0) or rad_off <= 0.0:
        p_diag = p_diag + perturb
        rad_r, rad_off = ops.radicands(p_diag, quartic)
    floor = 2.0 * ops.grid.m * perturb**2
    rad_r = np.maximum(rad_r, floor)
    rad_off = max(rad_off, floor)

    alphas_r = 2.0 * np.sqrt(rad_r)
    alpha_off = 2.0 * np.sqrt(rad_off)
    const = float(np.sum((rad_r + quartic) / alphas_r))
    const += ops.n_offpeak_v * (rad_off + quartic) / alpha_off
    return LinearizedUB(ops=ops, const=const, alphas_r=alphas_r, alpha_off=alpha_off)


# ---------------------------------------------------------------------------
# P-step


def _p_candidate(
    u2: float,
    lin: LinearizedUB,
    grad: np.ndarray,
    anchor: np.ndarray,
    rho: float,
    budget: float,
    ops: _GridOps,
) -> np.ndarray:
    """Minimizer of the linearized P subproblem for a fixed sidelobe multiplier.

    Off-diagonals are unconstrained and solved directly; the diagonal solves
    a dense linear system, with a budget border row appended only when the
    unconstrained solution overshoots the power budget.
    """
    d = grad.shape[0]
    p_new = grad / rho + anchor
    q_mat = rho * np.eye(d) + u2 * lin.curvature()
    q_vec = -u2 * ops.peak * np.ones(d) - np.diag(grad) - rho * np.diag(anchor)
    diag_free = np.linalg.solve(q_mat, -q_vec)
    if diag_free.sum() > budget:
        bordered = np.zeros((d + 1, d + 1))
        bordered[:d, :d] = q_mat
        bordered[:d, d] = 1.0
        bordered[d, :d] = 1.0
        rhs = np.concatenate([-q_vec, [budget]])
        diag_free = np.linalg.solve(bordered, rhs)[:d]
    np.fill_diagonal(p_new, diag_free)
    return 0.5 * (p_new + p_new.T)


def solve_p_step(
    state: ADMMState,
    coeffs: PoweringCoefficients,
    rect: RectennaModel,
    ops: _GridOps,
    budget: float,
    s_max_internal: float,
    scfg: SolverConfig,
    obj_scale: float = 1.0,
    rho: float | None = None,
) -> tuple[np.ndarray, dict]:
    """SCA loop for the power-allocation matrix P (normalized units)."""
    rho = scfg.rho if rho is None else rho
    anchor = state.u + np.diag(state.sigma) - state.v
    p_op = state.p.copy()
    info = {"sca_iters": 0, "u2": 0.0, "surrogate_objectives": []}

    for it in range(scfg.max_sca_iters):
        grad = taylor_grad_p(coeffs, rect, p_op, state.u) / obj_scale
        lin = build_linearized_ub(p_op, state.u, ops)

        def candidate(u2):
            return _p_candidate(u2, lin, grad, anchor, rho, budget, ops)

        p_new = candidate(0.0)
        u2 = 0.0
        if lin.value(p_new) > s_max_internal:
            lo, hi = scfg.u2_lo, scfg.u2_hi
            if lin.value(candidate(hi)) > s_max_internal + scfg.bisect_tol * max(
                1.0, abs(s_max_internal)
            ):
                raise InfeasibleError("sidelobe cap unreachable in P-step bracket")
            for _ in range(200):
                u2 = 0.5 * (lo + hi)
                p_new = candidate(u2)
                gap = lin.value(p_new) - s_max_internal
                if abs(gap) <= scfg.bisect_tol * max(1.0, abs(s_max_internal)):
                    break
                if gap > 0:
                    lo = u2
                else:
                    hi = u2
            else:
                p_new = candidate(hi)
                u2 = hi

        # safeguard: cap the inner step so a strong objective pull cannot run
        # away from the operating point between linearizations
        step = np.linalg.norm(p_new - p_op)
        cap = 2.0 * max(1.0, np.linalg.norm(p_op))
        if step > cap:
            p_new = p_op + (p_new - p_op) * (cap / step)

        info["surrogate_objectives"].append(
            float(-np.sum(grad * p_new) + 0.5 * rho * np.sum((p_new - anchor) ** 2))
        )
        info["sca_iters"] = it + 1
        info["u2"] = u2
        if np.linalg.norm(p_new - p_op) <= scfg.eps0 * np.linalg.norm(p_new):
            p_op = p_new
            break
        p_op = p_new
    return p_op, info


# ---------------------------------------------------------------------------
# (U, sigma)-step


def sensing_radius(
    p_fixed: np.ndarray,
    ops: _GridOps,
    s_max_internal: float,
    tol: float = 1e-8,
) -> float:
    """Smallest r with sum sqrt(max(g(diag P) - 2r, 0)) - peak Tr(P) <= cap.

    Returns 0 when the cap is already met at r = 0; raises when even driving
    every radicand to zero cannot reach it.
    """
    p_diag = np.diag(p_fixed).astype(float)
    rad_r, rad_off = ops.radicands(p_diag, 0.0)
    rhs = s_max_internal + ops.peak * float(np.trace(p_fixed))

    def lhs(r):
        total = 0.0
        if len(rad_r):
            total += float(np.sum(np.sqrt(np.maximum(rad_r - 2.0 * r, 0.0))))
        total += ops.n_offpeak_v * np.sqrt(max(rad_off - 2.0 * r, 0.0))
        return total

    if rhs < -tol:
        raise InfeasibleError("sidelobe cap below the attainable floor")
    if lhs(0.0) <= rhs:
        return 0.0
    hi = 0.5 * max(float(rad_r.max(initial=0.0)), rad_off)
    if lhs(hi) > rhs + tol:
        raise InfeasibleError("sidelobe cap unreachable for the current P")
    lo = 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if lhs(mid) > rhs:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol * max(1.0, hi):
            break
    if abs(lhs(hi) - rhs) > 1e-6 * max(1.0, abs(rhs)) and lhs(hi) > rhs:
        raise InfeasibleError("sensing radius bisection failed to meet residual")
    return hi


# cvxpy expression building and canonicalization mutate global state and are
# not thread-safe; all subproblem construction/solves take this lock.  The
# solves themselves are deterministic, so results do not depend on thread
# interleaving.
_CVXPY_LOCK = threading.Lock()


class _USigmaSubproblem:
    """Parametrized convex program of the (U, sigma)-step, compiled once.

    family 'opt' uses a full 2K x 2K PSD U; 'symmetric' ties real and
    imaginary rails through a K x K PSD block W with U = [[W, W], [W, W]];
    'cscg' drops U entirely and only projects the tied variances.
    """

    def __init__(
        self,
        coeffs: PoweringCoefficients,
        rect: RectennaModel,
        rate_slopes: np.ndarray,
        c_min: float,
        obj_scale: float,
        family: str,
    ):
        if family not in FAMILIES:
            raise ValueError(f"unknown family {family!r}")
        self.family = family
        k = coeffs.cfg.k
        self.dim = d = 2 * k

        if family == "symmetric":
            w = cp.Variable((k, k), PSD=True)
            u_expr = cp.bmat([[w, w], [w, w]])
            s_half = cp.Variable(k, nonneg=True)
            sigma_expr = cp.hstack([s_half, s_half])
        elif family == "cscg":
            u_expr = None
            s_half = cp.Variable(k, nonneg=True)
            sigma_expr = cp.hstack([s_half, s_half])
        else:
            u_expr = cp.Variable((d, d), PSD=True)
            sigma_expr = cp.Variable(d, nonneg=True)
        self._u_expr = u_expr
        self._sigma_expr = sigma_expr

        # rho enters as sqrt so the penalty stays parameter-affine in the
        # variables (keeps the compiled program reusable across rho updates)
        self.sqrt_rho = cp.Parameter(nonneg=True)
        self.anchor_scaled = cp.Parameter((d, d))  # sqrt(rho) * (P^{l+1} + V^l)
        consensus = self.sqrt_rho * (
            (u_expr if u_expr is not None else 0) + cp.diag(sigma_expr)
        ) - self.anchor_scaled
        objective = 0.5 * cp.sum_squares(consensus)

        constraints = []
        if u_expr is not None:
            self.j_param = cp.Parameter((d, d))
            objective += -cp.sum(cp.multiply(self.j_param, u_expr)) / obj_scale
            scale = (3.0 * rect.k4 / 2.0 / obj_scale) ** 0.25
            quad_terms = []
            for factors in list(coeffs.a_factors) + list(coeffs.a_half_factors):
                fs = [scale * f for f in factors]
                for fa in fs:
                    for fb in fs:
                        quad_terms.append(cp.square(fa @ u_expr @ fb))
            for cset in list(coeffs.cp) + list(coeffs.cp_half):
                fs = [scale * f for f in cset.e_factors]
                for fa in fs:
                    for fb in fs:
                        quad_terms.append(cp.square(fa @ u_expr @ fb))
            objective += cp.sum(cp.hstack(quad_terms))

            self.psca_dir = cp.Parameter(d)
            self.psca_rhs = cp.Parameter()
            constraints.append(self.psca_dir @ cp.diag(u_expr) >= self.psca_rhs)

        if c_min > 0:
            active = rate_slopes > 0
            if not np.any(active):
                raise InfeasibleError("positive rate floor with an all-zero channel")
            constraints.append(
                cp.sum(cp.log1p(cp.multiply(rate_slopes[active], sigma_expr[active])))
                >= c_min * d * np.log(2.0)
            )

        self.problem = cp.Problem(cp.Minimize(objective), constraints)

    def solve(self, p_anchor, rho, j=None, psca_dir=None, psca_rhs=0.0, tol=1e-7):
        with _CVXPY_LOCK:
            self.sqrt_rho.value = np.sqrt(rho)
            self.anchor_scaled.value = np.sqrt(rho) * p_anchor
            if self._u_expr is not None:
                self.j_param.value = j
                self.psca_dir.value = psca_dir
                self.psca_rhs.value = psca_rhs
            try:
                self.problem.solve(solver=cp.CLARABEL)
            except cp.error.SolverError:
                self.problem.solve(solver=cp.SCS, eps=tol)
            if self.problem.status not in ("optimal", "optimal_inaccurate"):
                raise InfeasibleError(
                    f"(U, sigma) subproblem status: {self.problem.status}"
                )

        d = self.dim
        if self.family == "symmetric":
            w = self._u_expr.value[: d // 2, : d // 2]
            w = 0.5 * (w + w.T)
            u = np.block([[w, w], [w, w]])
        elif self.family == "cscg":
            u = np.zeros((d, d))
        else:
            u = 0.5 * (self._u_expr.value + self._u_expr.value.T)
        sigma = np.maximum(np.asarray(self._sigma_expr.value).ravel(), 0.0)
        return u, sigma


def solve_u_sigma_step(
    state: ADMMState,
    subproblem: _USigmaSubproblem,
    coeffs: PoweringCoefficients,
    rect: RectennaModel,
    ops: _GridOps,
    s_max_internal: float,
    scfg: SolverConfig,
    obj_scale: float = 1.0,
    rho: float | None = None,
) -> tuple[np.ndarray, np.ndarray, dict]:
    """SCA loop over the linearization point of the (U, sigma) subproblem."""
    rho = scfg.rho if rho is None else rho
    p_anchor = state.p + state.v
    r_needed = sensing_radius(state.p, ops, s_max_internal)
    # constraint is ||diag(U)||^2 >= r / (2M): radicands carry g - 2r with
    # g's quartic term -2M ||diag U||^2
    r_u = r_needed / (2.0 * ops.grid.m)
    if subproblem.family == "cscg":
        # a marginal radius is bisection noise from the P-step's own cap
        # enforcement; a substantial one means the cap truly needs means
        d = state.p.shape[0]
        r_scale = max(float(np.trace(state.p)) ** 2 / d, 1e-30)
        if r_u > 1e-6 * r_scale:
            raise InfeasibleError("sidelobe cap requires nonzero symbol means")
        u_new, sigma_new = subproblem.solve(p_anchor, rho, tol=scfg.inner_tol)
        return u_new, sigma_new, {"sca_iters": 1, "r_u": 0.0}

    u_op = state.u.copy()
    info = {"sca_iters": 0, "r_u": r_u}
    for it in range(scfg.max_sca_iters):
        j = taylor_grad_u(coeffs, rect, state.p, u_op)
        v_dir = np.diag(u_op).copy()
        norm_v = np.linalg.norm(v_dir)
        if norm_v < 1e-14:
            v_dir = np.ones_like(v_dir)
            norm_v = np.linalg.norm(v_dir)
        rhs = np.sqrt(max(r_u, 0.0)) * norm_v
        u_new, sigma_new = subproblem.solve(
            p_anchor, rho, j=j, psca_dir=v_dir, psca_rhs=rhs, tol=scfg.inner_tol
        )
        info["sca_iters"] = it + 1
        if np.linalg.norm(u_new - u_op) <= scfg.eps0 * max(np.linalg.norm(u_new), 1e-30):
            u_op = u_new
            break
        u_op = u_new
    return u_op, sigma_new, info


# ---------------------------------------------------------------------------
# randomization and the outer loop


def gaussian_randomization(
    u_relaxed: np.ndarray,
    sigma: np.ndarray,
    *,
    coeffs: PoweringCoefficients,
    rect: RectennaModel,
    grid: SensingGrid,
    cons: Constraints,
    cchan: CommChannel,
    cfg: OFDMConfig,
    count: int,
    seed,
    symmetric: bool = False,
    extra_means: tuple = (),
    sigma_variants: tuple = (),
) -> tuple[np.ndarray, np.ndarray, float]:
    """Recover a rank-1 mean vector from the relaxed U (physical units).

    Mean candidates are drawn from N(0, U) (plus the scaled principal
    eigenvector and any caller-provided means).  Each is paired with the
    relaxed variance vector and with every entry of ``sigma_variants``
    (typically the minimum-rate water-filling vector, freeing power for the
    mean), shrunk onto the power budget, filtered by the rate/sidelobe/power
    contracts and ranked by harvested power.  Returns (mu, sigma, zdc).
    """
    d = u_relaxed.shape[0]
    sym = 0.5 * (u_relaxed + u_relaxed.T)
    if symmetric:
        k = d // 2
        w_block = 0.25 * (sym[:k, :k] + sym[:k, k:] + sym[k:, :k] + sym[k:, k:])
        eigvals, eigvecs = np.linalg.eigh(w_block)
    else:
        eigvals, eigvecs = np.linalg.eigh(sym)
    eigvals = np.maximum(eigvals, 0.0)

    def lift(vec):
        return np.concatenate([vec, vec]) if symmetric else vec

    rng = np.random.default_rng(seed)
    root = eigvecs * np.sqrt(eigvals)
    principal = root[:, -1]
    if np.abs(principal).max() > 0:
        principal = principal * np.sign(principal[np.argmax(np.abs(principal))])

    directions = [lift(principal)]
    draws = rng.standard_normal((count, root.shape[1]))
    for row in draws:
        directions.append(lift(root @ row))
    directions.extend(np.asarray(m, dtype=float) for m in extra_means)

    sigmas = [np.asarray(sigma, dtype=float)]
    for sv in sigma_variants:
        sv = np.asarray(sv, dtype=float)
        if not any(np.array_equal(sv, s) for s in sigmas):
            sigmas.append(sv)

    best = None
    best_zdc = -np.inf
    for sig in sigmas:
        if achievable_rate(sig, cchan, cfg) < cons.c_min - RATE_TOL:
            continue
        budget_mu = cons.p_max - float(np.sum(sig))
        if budget_mu < -POWER_TOL * cons.p_max:
            continue
        budget_mu = max(budget_mu, 0.0)
        diag_sig = np.diag(sig)
        for mu in directions:
            power = float(mu @ mu)
            if power > budget_mu > 0:
                scaled = [mu * np.sqrt(budget_mu / power)]
            elif 0 < power < budget_mu:
                scaled = [mu * np.sqrt(budget_mu / power), mu]
            else:
                scaled = [mu]
            for mu_c in scaled:
                p_vec = mu_c**2 + sig
                total = float(np.sum(p_vec))
                if total > cons.p_max * (1.0 + POWER_TOL):
                    continue
                if total > 0:
                    ub_norm = normalized_ub(ub_fap(p_vec, mu_c, grid), total, grid)
                    if ub_norm > cons.s_max + UB_TOL:
                        continue
                u_c = np.outer(mu_c, mu_c)
                z = zdc_total(coeffs, rect, u_c + diag_sig, u_c)
                if z > best_zdc:
                    best_zdc, best = z, (mu_c, sig)
    if best is None:
        raise RandomizationError("no feasible rank-1 candidate found")
    return best[0], best[1], best_zdc


def _evaluate(
    inp: GaussianInput,
    coeffs: PoweringCoefficients,
    rect: RectennaModel,
    grid: SensingGrid,
    cons: Constraints,
    cchan: CommChannel,
    cfg: OFDMConfig,
    iterations: int,
    diagnostics: dict,
) -> DesignResult:
    alloc = inp.allocation()
    zdc = zdc_total(coeffs, rect, alloc.p, alloc.u)
    rate = achievable_rate(inp.sigma, cchan, cfg)
    total = inp.total_power
    ub_norm = normalized_ub(ub_fap(inp.power, inp.mu, grid), total, grid) if total > 0 else 0.0
    feasible = (
        rate >= cons.c_min - RATE_TOL
        and ub_norm <= cons.s_max + UB_TOL
        and total <= cons.p_max * (1.0 + POWER_TOL)
    )
    return DesignResult(
        input=inp,
        achieved_zdc=zdc if feasible else 0.0,
        achieved_rate=rate,
        achieved_ub=ub_norm,
        feasible=feasible,
        iterations=iterations,
        diagnostics=diagnostics,
    )


def _infeasible_result(cfg: OFDMConfig, reason: str, iterations: int = 0) -> DesignResult:
    zero = GaussianInput(mu=np.zeros(2 * cfg.k), sigma=np.zeros(2 * cfg.k))
    return DesignResult(
        input=zero,
        achieved_zdc=0.0,
        achieved_rate=0.0,
        achieved_ub=0.0,
        feasible=False,
        iterations=iterations,
        diagnostics={"reason": reason},
    )


def _scaled_channel(pchan: PoweringChannel, cfg: OFDMConfig, p_max: float) -> PoweringChannel:
    # absorbing sqrt(P_max) into the taps makes zdc(P_max * P') evaluable at
    # the normalized P'; the noise floor is untouched by the transmit budget
    return PoweringChannel.from_taps(pchan.taps * np.sqrt(p_max), cfg.k, pchan.noise_var)


def optimize(
    cfg: OFDMConfig,
    pchan: PoweringChannel,
    cchan: CommChannel,
    cons: Constraints,
    scfg: SolverConfig | None = None,
    rect: RectennaModel | None = None,
    family: str = "opt",
) -> DesignResult:
    """Full ADMM design of one input distribution for one constraint point."""
    scfg = scfg or SolverConfig()
    rect = rect or RectennaModel()
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}; use one of {FAMILIES}")
    d = 2 * cfg.k
    grid = SensingGrid(k=cfg.k, k_g=cfg.k_g, m=cfg.m)
    coeffs_phys = build_powering_coefficients(pchan, cfg)

    if cons.c_min > 0 and max_rate_at_power(cchan, cfg, cons.p_max) < cons.c_min - RATE_TOL:
        return _infeasible_result(cfg, "rate floor above channel capacity")

    scaled = _scaled_channel(pchan, cfg, cons.p_max)
    coeffs = build_powering_coefficients(scaled, cfg)
    ops = _GridOps.build(grid)
    s_internal = cons.s_max * peak_scale(grid, 1.0)
    rate_slopes = snr_gains(cchan, cfg) * cons.p_max  # slopes for normalized sigma

    p_unif = 1.0 / d
    mu0 = np.full(d, np.sqrt(p_unif / 2.0))
    if family == "cscg":
        mu0 = np.zeros(d)
    sigma0 = np.full(d, p_unif if family == "cscg" else p_unif / 2.0)
    u0 = np.outer(mu0, mu0)
    state = ADMMState(p=u0 + np.diag(sigma0), u=u0, sigma=sigma0, v=np.zeros((d, d)))

    # scale the objective so its gradient is O(1/d) per entry at the start:
    # the default rho = 1 then gives gentle, well-conditioned consensus steps
    grad0 = taylor_grad_p(coeffs, rect, state.p, state.u)
    obj_scale = d * float(np.abs(grad0).max())
    if not np.isfinite(obj_scale) or obj_scale <= 0:
        obj_scale = max(abs(zdc_total(coeffs, rect, state.p, state.u)), 1.0)

    try:
        with _CVXPY_LOCK:
            subproblem = _USigmaSubproblem(
                coeffs, rect, rate_slopes, cons.c_min, obj_scale, family
            )
    except InfeasibleError as err:
        return _infeasible_result(cfg, str(err))

    iterations = 0
    rho = scfg.rho
    diagnostics: dict = {"family": family, "p_step": [], "u_step": [], "rho": []}
    try:
        for it in range(scfg.max_admm_iters):
            iterations = it + 1
            state.p, p_info = solve_p_step(
                state, coeffs, rect, ops, 1.0, s_internal, scfg, obj_scale, rho
            )
            state.u, state.sigma, u_info = solve_u_sigma_step(
                state, subproblem, coeffs, rect, ops, s_internal, scfg, obj_scale, rho
            )
            state.v = state.v + state.p - state.u - np.diag(state.sigma)
            residual = float(np.linalg.norm(state.u + np.diag(state.sigma) - state.p))
            state.primal_residuals.append(residual)
            state.objectives.append(float(zdc_total(coeffs, rect, state.p, state.u)))
            diagnostics["p_step"].append(p_info)
            diagnostics["u_step"].append(u_info)
            diagnostics["rho"].append(rho)
            diagnostics["relative_residual"] = residual / max(
                float(np.linalg.norm(state.p)), 1e-30
            )
            if residual < scfg.eps0 * max(np.linalg.norm(state.p), 1e-30):
                break
            if it >= scfg.rho_growth_start and scfg.rho_growth > 1.0:
                rho *= scfg.rho_growth
                state.v /= scfg.rho_growth  # scaled dual shrinks as rho grows
    except InfeasibleError as err:
        diagnostics["admm_error"] = str(err)
        state = None  # fall through to candidate-only recovery below

    diagnostics["primal_residuals"] = state.primal_residuals if state else []
    diagnostics["objectives"] = state.objectives if state else []

    # physical-scale relaxed solution
    if state is not None:
        u_phys = cons.p_max * state.u
        sigma_phys = cons.p_max * np.maximum(state.sigma, 0.0)
    else:
        u_phys = np.zeros((d, d))
        sigma_phys = np.zeros(d)

    # minimum-rate variance frees the rest of the budget for the mean
    try:
        sigma_min = (
            waterfill_min_power(cchan, cfg, cons.c_min) if cons.c_min > 0 else np.zeros(d)
        )
    except ValueError:
        return _infeasible_result(cfg, "rate floor unreachable", iterations)
    if family in ("symmetric", "cscg"):
        half = 0.5 * (sigma_min[: cfg.k] + sigma_min[cfg.k :])
        sigma_min = np.concatenate([half, half])

    if family == "cscg":
        inp = GaussianInput(mu=np.zeros(d), sigma=sigma_phys)
        best = _evaluate(inp, coeffs_phys, rect, grid, cons, cchan, cfg, iterations, diagnostics)
        if not best.feasible:
            alt = GaussianInput(mu=np.zeros(d), sigma=sigma_min)
            best = _evaluate(alt, coeffs_phys, rect, grid, cons, cchan, cfg, iterations, diagnostics)
        if not best.feasible:
            return _infeasible_result(cfg, "no feasible zero-mean allocation", iterations)
        return best

    # deterministic mean directions complementing the random draws: the
    # sensing-optimal uniform direction and the strongest coherent powering
    # direction (top eigenvector of the initial objective gradient)
    det_dirs = [np.ones(d)]
    eigvec = np.linalg.eigh(0.5 * (grad0 + grad0.T))[1][:, -1]
    det_dirs.append(eigvec)
    if family == "symmetric":
        det_dirs = [np.tile(0.5 * (v[: cfg.k] + v[cfg.k :]), 2) for v in det_dirs]

    kwargs = dict(
        coeffs=coeffs_phys,
        rect=rect,
        grid=grid,
        cons=cons,
        cchan=cchan,
        cfg=cfg,
        symmetric=(family == "symmetric"),
        extra_means=tuple(det_dirs),
        sigma_variants=(sigma_min,),
    )
    try:
        mu_phys, sigma_phys, _ = gaussian_randomization(
            u_phys, sigma_phys, count=scfg.randomization_count, seed=scfg.seed, **kwargs
        )
    except RandomizationError:
        try:
            mu_phys, sigma_phys, _ = gaussian_randomization(
                u_phys,
                sigma_phys,
                count=10 * scfg.randomization_count,
                seed=scfg.seed + 1,
                **kwargs,
            )
        except RandomizationError as err:
            return _infeasible_result(cfg, str(err), iterations)

    inp = GaussianInput(mu=mu_phys, sigma=sigma_phys)
    return _evaluate(inp, coeffs_phys, rect, grid, cons, cchan, cfg, iterations, diagnostics)


def coexist_input(
    cfg: OFDMConfig, cchan: CommChannel, cons: Constraints
) -> GaussianInput:
    """Superposition baseline: minimum-power communication variance plus a
    uniform deterministic remainder for sensing."""
    sigma = waterfill_min_power(cchan, cfg, cons.c_min) if cons.c_min > 0 else np.zeros(2 * cfg.k)
    used = float(np.sum(sigma))
    if used > cons.p_max * (1.0 + POWER_TOL):
        raise InfeasibleError("rate floor needs more than the power budget")
    residual = max(cons.p_max - used, 0.0)
    mu = np.full(2 * cfg.k, np.sqrt(residual / (2 * cfg.k)))
    return GaussianInput(mu=mu, sigma=sigma)


def baseline(
    kind: str,
    cfg: OFDMConfig,
    pchan: PoweringChannel,
    cchan: CommChannel,
    cons: Constraints,
    scfg: SolverConfig | None = None,
    rect: RectennaModel | None = None,
) -> DesignResult:
    """Reference input families: 'symmetric', 'cscg' or 'coexist'."""
    kind = kind.lower()
    if kind in ("symmetric", "cscg"):
        return optimize(cfg, pchan, cchan, cons, scfg, rect, family=kind)
    if kind != "coexist":
        raise ValueError(f"unknown baseline {kind!r}")
    rect = rect or RectennaModel()
    grid = SensingGrid(k=cfg.k, k_g=cfg.k_g, m=cfg.m)
    coeffs = build_powering_coefficients(pchan, cfg)
    try:
        inp = coexist_input(cfg, cchan, cons)
    except (InfeasibleError, ValueError) as err:
        return _infeasible_result(cfg, str(err))
    return _evaluate(inp, coeffs, rect, grid, cons, cchan, cfg, 0, {"family": "coexist"})
