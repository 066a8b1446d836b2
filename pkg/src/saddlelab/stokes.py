"""Discrete Stokes / Navier-Stokes systems and their dual (semi) norms.

Velocity always lives in continuous vector P2.  The pressure space selects the
pair: continuous P1 (Taylor-Hood) or elementwise P1 (Scott-Vogelius; exactly
divergence-free on barycentrically refined meshes).  The zero-mean pressure
condition is enforced with one scalar Lagrange multiplier, which keeps the
block system symmetric and mesh independent.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.linalg import eigh, null_space

from .errors import NonlinearDivergence, SingularSystem, UnstablePairWarning
from .fem2d.assembly import (
    LOAD_DEGREE,
    apply_dirichlet,
    assemble_convection,
    assemble_convection_jacobian,
    assemble_divergence,
    assemble_load,
    assemble_pressure_gradient,
    assemble_stiffness,
    assemble_vector_mass,
    divergence_at_quadrature,
    physical_gradients,
    pressure_integral_row,
    scalar_mass,
    scalar_stiffness,
    velocity_at_quadrature,
)
from .fem2d.mesh import Mesh2D
from .fem2d.quadrature import QuadratureRule, triangle_rule
from .fem2d.spaces import (
    FESpace,
    P1_CONTINUOUS,
    P2_CONTINUOUS_VECTOR,
    scott_vogelius_spaces,
    taylor_hood_spaces,
)

TAYLOR_HOOD = "TaylorHood"
SCOTT_VOGELIUS = "ScottVogelius"


def _refined_solve(lu, K: sp.spmatrix, rhs: np.ndarray, rounds: int = 2) -> np.ndarray:
    """LU solve plus iterative refinement.

    The saddle blocks mix scales mu and 1, so a single factored solve can
    leave a constraint residual well above machine precision; one or two
    refinement rounds restore it.
    """
    sol = lu.solve(rhs)
    for _ in range(rounds):
        residual = rhs - K @ sol
        if not np.isfinite(residual).all():
            break
        sol = sol + lu.solve(residual)
    return sol


def build_pair(mesh: Mesh2D, pair_tag: str) -> tuple[FESpace, FESpace]:
    if pair_tag == TAYLOR_HOOD:
        return taylor_hood_spaces(mesh)
    if pair_tag == SCOTT_VOGELIUS:
        if not mesh.alfeld:
            warnings.warn(
                "Scott-Vogelius requested on a mesh without barycentric "
                "refinement; the pair may be unstable",
                UnstablePairWarning,
            )
        return scott_vogelius_spaces(mesh)
    raise ValueError(f"unknown pair tag {pair_tag!r}")


@dataclass
class DiscreteStokesSystem:
    """Assembled blocks for one mesh/pair combination."""

    mesh: Mesh2D
    pair_tag: str
    v_space: FESpace
    q_space: FESpace
    mu: float
    stiffness: sp.csr_matrix  # unit-viscosity vector stiffness
    divergence: sp.csr_matrix
    velocity_mass: sp.csr_matrix
    pressure_mass: sp.csr_matrix
    mean_row: np.ndarray
    bdofs: np.ndarray
    bvals: np.ndarray
    interior: np.ndarray
    _lu: object = field(default=None, repr=False)
    _saddle: sp.csc_matrix | None = field(default=None, repr=False)

    # -- norms ---------------------------------------------------------------

    def grad_norm(self, u: np.ndarray) -> float:
        return float(np.sqrt(max(u @ (self.stiffness @ u), 0.0)))

    def l2_norm(self, u: np.ndarray) -> float:
        return float(np.sqrt(max(u @ (self.velocity_mass @ u), 0.0)))

    def div_norm(self, u: np.ndarray) -> float:
        # pointwise evaluation instead of the u^T D u quadratic form: the
        # latter sums O(||u||^2) terms that cancel, flooring the result near
        # the rounding level of ||u||^2 rather than of the divergence itself
        rule = triangle_rule(2)
        div = divergence_at_quadrature(self.v_space, u, rule)
        areas = self.mesh.signed_areas()
        sq = np.einsum("q,tq->t", rule.weights, div**2) * areas
        return float(np.sqrt(max(sq.sum(), 0.0)))

    def pressure_norm(self, p: np.ndarray) -> float:
        return float(np.sqrt(max(p @ (self.pressure_mass @ p), 0.0)))

    def max_cellwise_div(self, u: np.ndarray) -> float:
        # divergence of a P2 field is linear per triangle: the max over each
        # triangle is attained at a corner
        corners = QuadratureRule(1, np.eye(3), np.full(3, 1.0 / 3.0))
        return float(np.max(np.abs(divergence_at_quadrature(self.v_space, u, corners))))

    # -- solving ---------------------------------------------------------------

    def _saddle_matrix(self) -> sp.csc_matrix:
        if self._saddle is None:
            B_i = self.divergence.tocsr()[:, self.interior]
            A_ii = self.stiffness.tocsr()[self.interior][:, self.interior] * self.mu
            m = self.mean_row[:, None]
            self._saddle = sp.bmat(
                [
                    [A_ii, B_i.T, None],
                    [B_i, None, m],
                    [None, m.T, None],
                ],
                format="csc",
            )
        return self._saddle

    def factorize(self):
        if self._lu is None:
            try:
                self._lu = spla.splu(self._saddle_matrix())
            except RuntimeError as exc:
                raise SingularSystem(f"saddle factorization failed: {exc}") from exc
        return self._lu

    def solve(self, load: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Solve with the given full-length load; returns (u_full, p)."""
        lu = self.factorize()
        ni = self.interior.size
        nq = self.q_space.dof_count
        F_i = load[self.interior]
        if self.bdofs.size and np.any(self.bvals != 0.0):
            A = self.stiffness.tocsr()
            F_i = F_i - (A[self.interior][:, self.bdofs] @ self.bvals) * self.mu
            G = -(self.divergence.tocsr()[:, self.bdofs] @ self.bvals)
        else:
            G = np.zeros(nq)
        rhs = np.concatenate([F_i, G, [0.0]])
        sol = _refined_solve(lu, self._saddle_matrix(), rhs)
        if not np.isfinite(sol).all():
            raise SingularSystem("saddle solve produced non-finite values")
        res = self._saddle_matrix() @ sol - rhs
        if np.linalg.norm(res) > 1e-10 * max(1.0, np.linalg.norm(rhs)):
            raise SingularSystem(
                f"saddle solve residual {np.linalg.norm(res):.3e} exceeds tolerance"
            )
        u = np.zeros(self.v_space.dof_count)
        u[self.interior] = sol[:ni]
        u[self.bdofs] = self.bvals
        p = sol[ni:ni + nq]
        mean = self.mean_row @ p
        if abs(mean) > 1e-12 * max(1.0, self.pressure_norm(p)):
            raise SingularSystem(f"pressure mean {mean:.3e} not eliminated")
        return u, p


def assemble_stokes(mesh: Mesh2D, pair_tag: str, mu: float,
                    g_D=None) -> DiscreteStokesSystem:
    """Assemble all blocks; g_D is a boundary velocity callable or None."""
    if mu <= 0:
        raise ValueError("viscosity must be positive")
    v, q = build_pair(mesh, pair_tag)
    bdofs = v.boundary_dofs()
    bvals = v.boundary_values(g_D) if g_D is not None else np.zeros(bdofs.size)
    interior = np.setdiff1d(np.arange(v.dof_count), bdofs)
    M_q = scalar_mass(q, degree=2)
    return DiscreteStokesSystem(
        mesh=mesh,
        pair_tag=pair_tag,
        v_space=v,
        q_space=q,
        mu=mu,
        stiffness=assemble_stiffness(v, mu=1.0),
        divergence=assemble_divergence(v, q),
        velocity_mass=assemble_vector_mass(v),
        pressure_mass=M_q,
        mean_row=pressure_integral_row(q),
        bdofs=bdofs,
        bvals=bvals,
        interior=interior,
    )


def _load_vector(system: DiscreteStokesSystem, f, quad_degree=LOAD_DEGREE) -> np.ndarray:
    if f is None:
        return np.zeros(system.v_space.dof_count)
    if callable(f):
        return assemble_load(system.v_space, f, quad_degree=quad_degree)
    return np.asarray(f, dtype=float)


def solve_stokes(mesh: Mesh2D, pair_tag: str, mu: float, f=None, g_D=None):
    """One-shot Stokes solve; returns (u, p, system)."""
    system = assemble_stokes(mesh, pair_tag, mu, g_D=g_D)
    u, p = system.solve(_load_vector(system, f))
    return u, p, system


# ---------------------------------------------------------------------------
# discrete dual (semi) norms
# ---------------------------------------------------------------------------

def discrete_dual_seminorm_Kh(mesh: Mesh2D, pair_tag: str, f,
                              system: DiscreteStokesSystem | None = None) -> float:
    """sup over the discretely divergence-free kernel of <f, v> / ||grad v||.

    Realized through the constrained Riesz representative: a Stokes solve with
    unit viscosity and homogeneous boundary values.
    """
    if system is None:
        system = assemble_stokes(mesh, pair_tag, mu=1.0)
    z, _ = system.solve(_load_vector(system, f))
    return system.grad_norm(z)


def discrete_dual_norm_Vh(mesh: Mesh2D, f,
                          cache: dict | None = None) -> float:
    """Unconstrained counterpart: Riesz representative in the full velocity
    space with zero boundary values."""
    v = FESpace(P2_CONTINUOUS_VECTOR, mesh)
    S = assemble_stiffness(v, mu=1.0)
    F = f if isinstance(f, np.ndarray) else assemble_load(v, f)
    bdofs = v.boundary_dofs()
    S_ii, F_i, interior = apply_dirichlet(S, F, bdofs, np.zeros(bdofs.size))
    if cache is not None:
        lu = cache.get("lu")
        if lu is None:
            lu = cache["lu"] = spla.splu(S_ii.tocsc())
    else:
        lu = spla.splu(S_ii.tocsc())
    z = lu.solve(F_i)
    return float(np.sqrt(max(z @ F_i, 0.0)))


def discrete_inf_sup(mesh: Mesh2D, pair_tag: str) -> float:
    """Discrete inf-sup constant of the pair in the H1_0 x L2_0 setting.

    Smallest generalized singular value of the divergence operator: the
    minimum eigenvalue of B S^-1 B^T against the pressure mass matrix, after
    deflating the constant pressure mode.
    """
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UnstablePairWarning)
        system = assemble_stokes(mesh, pair_tag, mu=1.0)
    S_ii = system.stiffness.tocsr()[system.interior][:, system.interior]
    B_i = system.divergence.tocsr()[:, system.interior]
    lu = spla.splu(S_ii.tocsc())
    X = lu.solve(B_i.T.toarray())
    C = B_i @ X
    M_q = system.pressure_mass.toarray()
    weights = M_q @ np.ones(M_q.shape[0])
    Z = null_space(weights[None, :])
    lam = eigh(Z.T @ C @ Z, Z.T @ M_q @ Z, eigvals_only=True)
    return float(np.sqrt(max(lam[0], 0.0)))


# ---------------------------------------------------------------------------
# Helmholtz-Hodge decomposition
# ---------------------------------------------------------------------------

@dataclass
class HodgeResult:
    u: np.ndarray
    p: np.ndarray
    v_space: FESpace
    q_space: FESpace
    orthogonality: float  # max |(u_h, grad q_h)| over the potential basis
    u_l2: float
    p_grad_norm: float


def helmholtz_hodge_decompose(mesh: Mesh2D, f, variant: str = "gradient",
                              quad_degree: int = LOAD_DEGREE) -> HodgeResult:
    """Split an L2 field into a solenoidal part and a potential part.

    ``variant="gradient"`` computes f = u + grad p; ``variant="curl"``
    computes f = u + curl p with the rotated gradient.  The velocity space is
    unconstrained vector P2 (an L2 field), the potential is zero-mean P1.
    """
    if variant not in ("gradient", "curl"):
        raise ValueError(f"unknown decomposition variant {variant!r}")
    v = FESpace(P2_CONTINUOUS_VECTOR, mesh)
    q = FESpace(P1_CONTINUOUS, mesh)
    M = assemble_vector_mass(v)
    G = assemble_pressure_gradient(v, q, rotated=(variant == "curl"))
    mean = pressure_integral_row(q)[:, None]
    F = f if isinstance(f, np.ndarray) else assemble_load(v, f, quad_degree=quad_degree)
    K = sp.bmat(
        [
            [M, G.T, None],
            [G, None, mean],
            [None, mean.T, None],
        ],
        format="csc",
    )
    rhs = np.concatenate([F, np.zeros(q.dof_count), [0.0]])
    try:
        sol = spla.splu(K).solve(rhs)
    except RuntimeError as exc:
        raise SingularSystem(f"decomposition system singular: {exc}") from exc
    if not np.isfinite(sol).all():
        raise SingularSystem("decomposition solve produced non-finite values")
    n = v.dof_count
    u = sol[:n]
    p = sol[n:n + q.dof_count]
    Sq = scalar_stiffness(q, degree=2)
    return HodgeResult(
        u=u,
        p=p,
        v_space=v,
        q_space=q,
        orthogonality=float(np.max(np.abs(G @ u))),
        u_l2=float(np.sqrt(max(u @ (M @ u), 0.0))),
        p_grad_norm=float(np.sqrt(max(p @ (Sq @ p), 0.0))),
    )


def hodge_residual_l2(result: HodgeResult, f, variant: str = "gradient",
                      quad_degree: int = LOAD_DEGREE) -> float:
    """L2 norm of f - u_h - grad p_h sampled at quadrature points."""
    mesh = result.v_space.mesh
    rule = triangle_rule(quad_degree)
    pts = rule.physical_points(mesh.triangle_vertices())
    nt, nq = pts.shape[:2]
    fv = np.asarray(f(pts.reshape(-1, 2)), dtype=float).reshape(nt, nq, 2)
    uv = velocity_at_quadrature(result.v_space, result.u, rule)
    qg = physical_gradients(result.q_space, rule)
    grad_p = np.einsum("tqkd,tk->tqd", qg, result.p[result.q_space.cell_dofs])
    if variant == "curl":
        grad_p = np.stack([grad_p[..., 1], -grad_p[..., 0]], axis=-1)
    err = fv - uv - grad_p
    areas = mesh.signed_areas()
    sq = np.einsum("q,tqd,tqd->t", rule.weights, err, err) * areas
    return float(np.sqrt(max(sq.sum(), 0.0)))


# ---------------------------------------------------------------------------
# transient Navier-Stokes (implicit Euler, Picard linearization)
# ---------------------------------------------------------------------------

@dataclass
class TransientResult:
    times: np.ndarray
    l2_errors: np.ndarray  # against the initial field
    pressure_norms: np.ndarray
    kinetic_energy: np.ndarray
    u_final: np.ndarray
    p_final: np.ndarray
    system: DiscreteStokesSystem


def solve_navier_stokes_transient(
    mesh: Mesh2D,
    pair_tag: str,
    mu: float,
    dt: float,
    T: float,
    u0,
    g_D=None,
    f=None,
    picard_tol: float = 1e-12,
    max_iterations: int = 50,
) -> TransientResult:
    """March u_t + (u.grad)u - mu Lap u + grad p = f, div u = 0 in time.

    Each implicit Euler step is linearized by Picard (Oseen) iteration until
    the nonlinear residual drops below ``picard_tol`` times the initial-data
    scale.  The reference for the recorded L2 error is the interpolant of u0.
    """
    if dt <= 0 or T <= 0:
        raise ValueError("need positive dt and T")
    nsteps = int(round(T / dt))
    if abs(nsteps * dt - T) > 1e-12 * max(1.0, T):
        raise ValueError("T must be an integer multiple of dt")
    system = assemble_stokes(mesh, pair_tag, mu, g_D=g_D)
    v = system.v_space
    u_ref = v.interpolate(u0)
    u = u_ref.copy()
    if system.bdofs.size:
        u[system.bdofs] = system.bvals
    M = system.velocity_mass
    S = system.stiffness
    B = system.divergence.tocsr()
    B_i = B[:, system.interior]
    m = system.mean_row[:, None]
    F_ext = _load_vector(system, f)
    scale = 1.0 + system.l2_norm(u_ref)
    interior = system.interior
    bdofs, bvals = system.bdofs, system.bvals
    G_bc = -(B[:, bdofs] @ bvals) if bdofs.size else np.zeros(system.q_space.dof_count)

    times = np.zeros(nsteps + 1)
    errors = np.zeros(nsteps + 1)
    pnorms = np.zeros(nsteps + 1)
    energy = np.zeros(nsteps + 1)
    errors[0] = 0.0
    energy[0] = system.l2_norm(u)
    p = np.zeros(system.q_space.dof_count)

    picard_warmup = 3
    nq = system.q_space.dof_count

    def nonlinear_residual(u_vec, p_vec, s_val, rhs_time):
        # the constraint on full vectors is B u + m s = 0 (the boundary
        # contribution already sits inside u_vec)
        Op_u = (M / dt + mu * S + assemble_convection(v, u_vec)).tocsr()
        r_mom = (Op_u @ u_vec + B.T @ p_vec - rhs_time)[interior]
        r_div = B @ u_vec + system.mean_row * s_val
        return float(np.sqrt(np.linalg.norm(r_mom) ** 2 + np.linalg.norm(r_div) ** 2))

    for k in range(1, nsteps + 1):
        rhs_time = M @ u / dt + F_ext
        w, p_w, s_w = u.copy(), p.copy(), 0.0
        res = nonlinear_residual(w, p_w, s_w, rhs_time)
        converged = res <= picard_tol * scale / dt
        for it in range(max_iterations):
            if converged:
                break
            # Picard (Oseen) sweeps first; damped Newton afterwards, which
            # keeps converging once dt * ||grad w|| is no longer small
            newton = it >= picard_warmup
            N_w = assemble_convection(v, w)
            Op = (M / dt + mu * S + N_w).tocsr()
            rhs_full = rhs_time
            if newton:
                J_w = assemble_convection_jacobian(v, w)
                Op = (Op + J_w).tocsr()
                rhs_full = rhs_time + J_w @ w
            Op_ii, R_i, _ = apply_dirichlet(Op, rhs_full, bdofs, bvals)
            K = sp.bmat(
                [
                    [Op_ii, B_i.T, None],
                    [B_i, None, m],
                    [None, m.T, None],
                ],
                format="csc",
            )
            rhs = np.concatenate([R_i, G_bc, [0.0]])
            sol = _refined_solve(spla.splu(K), K, rhs)
            u_cand = np.zeros(v.dof_count)
            u_cand[interior] = sol[:interior.size]
            u_cand[bdofs] = bvals
            p_cand = sol[interior.size:interior.size + nq]
            s_cand = sol[-1]
            # backtracking on the update: blending keeps B u + m s = 0 exact,
            # so only the momentum residual is traded off
            du, dp, ds = u_cand - w, p_cand - p_w, s_cand - s_w
            best = None
            theta = 1.0
            for _ in range(6):
                trial = (w + theta * du, p_w + theta * dp, s_w + theta * ds)
                r_trial = nonlinear_residual(*trial, rhs_time)
                if best is None or r_trial < best[0]:
                    best = (r_trial, trial)
                if r_trial < res or not newton:
                    break
                theta *= 0.5
            res, (w, p_w, s_w) = best
            if res <= picard_tol * scale / dt:
                converged = True
        if not converged:
            raise NonlinearDivergence(
                f"nonlinear iteration did not converge at step {k} (residual {res:.3e})"
            )
        u, p = w, p_w
        times[k] = k * dt
        diff = u - u_ref
        errors[k] = system.l2_norm(diff)
        pnorms[k] = system.pressure_norm(p)
        energy[k] = system.l2_norm(u)
    return TransientResult(times, errors, pnorms, energy, u, p, system)
