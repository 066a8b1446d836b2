"""Exact finite-dimensional saddle-point problems and their stability bounds.

Everything here works on the Euclidean realization: the primal space is R^n,
the multiplier space is R^m, functionals are identified with vectors, and all
dual (semi) norms become projected Euclidean norms.  Operators are dense
matrices; problems of this kind stay small (n + m up to a few hundred), so
direct factorizations are used throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la
from scipy.optimize import minimize

from .errors import (
    DegenerateKernelOperator,
    NotCoercive,
    NotSymmetric,
    RankDeficient,
    SingularSystem,
)

RANK_RTOL = 1e-12  # singular values below RANK_RTOL * sigma_max count as zero


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Subspace:
    """Orthonormal basis of a subspace of R^n.

    Attributes
    ----------
    basis : (n, k) ndarray
        Columns form an orthonormal basis; ``k = 0`` encodes the trivial
        subspace.
    ambient_dim : int
    tag : str
        One of ``kernel_K``, ``polar_K0``, ``a_orth_complement``, ``range_AK``.
    """

    basis: np.ndarray
    ambient_dim: int
    tag: str

    def __post_init__(self):
        b = np.asarray(self.basis, dtype=float)
        if b.ndim != 2 or b.shape[0] != self.ambient_dim:
            raise ValueError("basis must be an (ambient_dim, k) array")
        if b.shape[1] > 0:
            gram = b.T @ b
            if not np.allclose(gram, np.eye(b.shape[1]), atol=1e-12):
                raise ValueError("basis columns are not orthonormal")
        object.__setattr__(self, "basis", b)

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    def project(self, v: np.ndarray) -> np.ndarray:
        """Euclidean-orthogonal projection of ``v`` onto the subspace."""
        if self.dim == 0:
            return np.zeros_like(np.asarray(v, dtype=float))
        return self.basis @ (self.basis.T @ v)


@dataclass(frozen=True)
class MixedProblem:
    """A finite-dimensional saddle-point instance ``[[A, B^T], [B, 0]]``.

    ``B`` must have full row rank (the constraint operator is surjective);
    this is checked at construction.
    """

    a_matrix: np.ndarray
    b_matrix: np.ndarray
    f: np.ndarray
    g: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.a_matrix, dtype=float))
        B = np.atleast_2d(np.asarray(self.b_matrix, dtype=float))
        f = np.asarray(self.f, dtype=float).ravel()
        g = np.asarray(self.g, dtype=float).ravel()
        n = A.shape[0]
        m = B.shape[0]
        if A.shape != (n, n):
            raise ValueError("a_matrix must be square")
        if B.shape[1] != n:
            raise ValueError("b_matrix must have n columns")
        if not (n >= 1 and 1 <= m <= n):
            raise ValueError("need 1 <= m <= n")
        if f.shape != (n,) or g.shape != (m,):
            raise ValueError("f must have length n and g length m")
        sig = la.svdvals(B)
        if sig[-1] <= RANK_RTOL * sig[0]:
            raise RankDeficient(
                f"b_matrix is rank deficient: sigma_min/sigma_max = {sig[-1] / sig[0]:.3e}"
            )
        object.__setattr__(self, "a_matrix", A)
        object.__setattr__(self, "b_matrix", B)
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "g", g)

    @property
    def n(self) -> int:
        return self.a_matrix.shape[0]

    @property
    def m(self) -> int:
        return self.b_matrix.shape[0]

    def with_data(self, f=None, g=None) -> "MixedProblem":
        """Same operators with replaced right-hand-side data."""
        return MixedProblem(
            self.a_matrix,
            self.b_matrix,
            self.f if f is None else f,
            self.g if g is None else g,
        )


@dataclass(frozen=True)
class ProblemConstants:
    """Operator constants entering the stability bounds."""

    alpha0: float
    beta: float
    norm_a: float
    norm_b: float
    alpha: float | None = None  # global coercivity, symmetric case only


@dataclass
class StabilityReport:
    """Solution norms of one instance together with its bound values."""

    u_norm: float
    p_norm: float
    seminorm_f_Kdual: float
    norm_f: float
    norm_g: float
    theta_u_refined: float
    theta_p_refined: float
    theta_u_classical: float
    theta_p_classical: float
    seminorm_f_KaPerpDual: float | None = None
    theta_p_refined2: float | None = None
    symmetric: bool = field(default=False)

    def check(self, rtol: float = 1e-9) -> None:
        """Raise AssertionError if a bound fails to dominate its norm.

        The cross comparison refined <= classical holds termwise only for the
        general-case pair (identical g terms, seminorm <= norm), so it is
        enforced only there.
        """
        scale = max(1.0, self.norm_f + self.norm_g)
        assert self.u_norm <= self.theta_u_refined + rtol * scale
        assert self.u_norm <= self.theta_u_classical + rtol * scale
        assert self.p_norm <= self.theta_p_refined + rtol * scale
        if not self.symmetric:
            assert self.theta_u_refined <= self.theta_u_classical + rtol * scale
        if self.theta_p_refined2 is not None:
            assert self.p_norm <= self.theta_p_refined2 + rtol * scale


# ---------------------------------------------------------------------------
# subspaces
# ---------------------------------------------------------------------------

def kernel_basis(B: np.ndarray, tol: float = RANK_RTOL) -> Subspace:
    """Orthonormal basis of ker B (dimension n - m for full-rank B)."""
    B = np.atleast_2d(np.asarray(B, dtype=float))
    m, n = B.shape
    U, s, Vt = la.svd(B)
    if s[min(m, n) - 1] <= tol * s[0]:
        raise RankDeficient("numerical rank of B is below its row count")
    basis = Vt[m:].T
    return Subspace(basis, n, "kernel_K")


def polar_basis(B: np.ndarray, tol: float = RANK_RTOL) -> Subspace:
    """Orthonormal basis of range B^T, i.e. the polar space K^0 of ker B."""
    B = np.atleast_2d(np.asarray(B, dtype=float))
    m, n = B.shape
    U, s, Vt = la.svd(B)
    if s[min(m, n) - 1] <= tol * s[0]:
        raise RankDeficient("numerical rank of B is below its row count")
    basis = Vt[:m].T
    return Subspace(basis, n, "polar_K0")


# ---------------------------------------------------------------------------
# constants and solves
# ---------------------------------------------------------------------------

def _sym_part(M: np.ndarray) -> np.ndarray:
    return 0.5 * (M + M.T)


def compute_constants(p: MixedProblem, symmetric: bool = False) -> ProblemConstants:
    """Compute beta, ||a||, ||b|| and the kernel constant alpha0.

    In the general case alpha0 is the smallest singular value of the operator
    restricted to the kernel; in the symmetric case it is the smallest
    eigenvalue of the symmetric part of that restriction, and the global
    coercivity constant alpha is reported as well.
    """
    A, B = p.a_matrix, p.b_matrix
    sig_b = la.svdvals(B)
    beta = float(sig_b[-1])
    norm_b = float(sig_b[0])
    norm_a = float(la.svdvals(A)[0]) if A.size else 0.0

    K = kernel_basis(B)
    alpha = None
    if K.dim == 0:
        # trivial kernel: the seminorm term vanishes, any positive value keeps
        # the bounds valid; norm_a respects alpha0 <= ||a||
        alpha0 = norm_a
        if symmetric:
            alpha = float(np.min(la.eigvalsh(_sym_part(A))))
    else:
        AKK = K.basis.T @ A @ K.basis
        if symmetric:
            alpha0 = float(np.min(la.eigvalsh(_sym_part(AKK))))
            alpha = float(np.min(la.eigvalsh(_sym_part(A))))
        else:
            alpha0 = float(la.svdvals(AKK)[-1])
        if alpha0 <= RANK_RTOL * max(norm_a, 1.0):
            raise DegenerateKernelOperator(
                "operator restricted to the kernel is singular"
            )
    return ProblemConstants(alpha0=alpha0, beta=beta, norm_a=norm_a,
                            norm_b=norm_b, alpha=alpha)


def system_matrix(p: MixedProblem) -> np.ndarray:
    """The (n+m) x (n+m) block matrix [[A, B^T], [B, 0]]."""
    n, m = p.n, p.m
    M = np.zeros((n + m, n + m))
    M[:n, :n] = p.a_matrix
    M[:n, n:] = p.b_matrix.T
    M[n:, :n] = p.b_matrix
    return M


def solve_mixed(p: MixedProblem) -> tuple[np.ndarray, np.ndarray]:
    """Solve the block system; returns (u, p)."""
    n = p.n
    M = system_matrix(p)
    rhs = np.concatenate([p.f, p.g])
    try:
        sol = la.solve(M, rhs)
    except la.LinAlgError as exc:
        raise SingularSystem("saddle-point matrix is singular") from exc
    scale = la.norm(p.f) + la.norm(p.g) + 1.0
    res = la.norm(M @ sol - rhs)
    if not np.isfinite(sol).all() or res > 1e-10 * scale:
        raise SingularSystem(f"block solve residual {res:.3e} exceeds tolerance")
    return sol[:n], sol[n:]


def dual_seminorm(f: np.ndarray, S: Subspace) -> float:
    """Dual (semi) norm of the functional f over the subspace S.

    Equals ``||S.basis^T f||_2``; zero iff f annihilates S (and by convention
    zero for the trivial subspace).
    """
    f = np.asarray(f, dtype=float).ravel()
    if f.shape[0] != S.ambient_dim:
        raise ValueError("functional dimension does not match the subspace")
    if S.dim == 0:
        return 0.0
    return float(la.norm(S.basis.T @ f))


# ---------------------------------------------------------------------------
# a-orthogonal splitting (symmetric case)
# ---------------------------------------------------------------------------

def _require_spd(A: np.ndarray, tol: float = 1e-10) -> None:
    scale = max(1.0, float(la.norm(A, 2)))
    if la.norm(A - A.T, 2) > tol * scale:
        raise NotSymmetric("operator is not symmetric")
    lam_min = float(np.min(la.eigvalsh(_sym_part(A))))
    if lam_min <= tol * scale:
        raise NotCoercive(f"operator not positive definite (lambda_min = {lam_min:.3e})")


def a_orthogonal_split(p: MixedProblem) -> tuple[Subspace, Subspace, np.ndarray]:
    """Split R^n into K and its a-orthogonal complement K_a^perp.

    Returns ``(K, KaPerp, proj_K)`` where proj_K is the a-orthogonal projector
    onto K.  Requires a symmetric positive definite operator.
    """
    A = p.a_matrix
    _require_spd(A)
    K = kernel_basis(p.b_matrix)
    n = p.n
    if K.dim == 0:
        perp = Subspace(np.eye(n), n, "a_orth_complement")
        return K, perp, np.zeros((n, n))
    if K.dim == n:
        return K, Subspace(np.zeros((n, 0)), n, "a_orth_complement"), np.eye(n)
    # K_a^perp = null space of K^T A (dimension m); orthonormalized in the
    # Euclidean sense as required by the Subspace invariant
    perp_raw = la.null_space(K.basis.T @ A)
    perp = Subspace(la.orth(perp_raw), n, "a_orth_complement")
    AKK = K.basis.T @ A @ K.basis
    proj_K = K.basis @ la.solve(AKK, K.basis.T @ A, assume_a="pos")
    return K, perp, proj_K


# ---------------------------------------------------------------------------
# stability bounds
# ---------------------------------------------------------------------------

def _infimum_p_term(p: MixedProblem, c: ProblemConstants, K: Subspace) -> float:
    """inf over w0 in K of ||f - A w0|| + (||a||/alpha0) ||f - A w0||_{K'}.

    Convex but nonsmooth in the kernel coefficients; minimized by Powell's
    derivative-free direction-set search from two seeds (the least-squares
    minimizer of the first term and the solution putting the residual into
    K^0), followed by a per-coordinate polish.
    """
    f = p.f
    weight = c.norm_a / c.alpha0
    if K.dim == 0:
        return float(la.norm(f))
    AK = p.a_matrix @ K.basis

    def objective(lam: np.ndarray) -> float:
        r = f - AK @ lam
        return float(la.norm(r) + weight * la.norm(K.basis.T @ r))

    seeds = [np.linalg.lstsq(AK, f, rcond=None)[0]]
    AKK = K.basis.T @ AK
    try:
        seeds.append(la.solve(AKK, K.basis.T @ f))
    except la.LinAlgError:
        pass
    best = min(seeds, key=objective)
    res = minimize(objective, best, method="Powell",
                   options={"xtol": 1e-12, "ftol": 1e-14, "maxiter": 2000})
    lam = res.x if objective(res.x) <= objective(best) else best

    # coordinate polish with shrinking steps; cheap insurance against Powell
    # stalling on the nonsmooth seam where one of the norms vanishes
    val = objective(lam)
    scale = max(1.0, float(la.norm(lam)))
    step = 0.1 * scale
    while step > 1e-11 * scale:
        improved = False
        for i in range(lam.size):
            for s in (step, -step):
                trial = lam.copy()
                trial[i] += s
                tv = objective(trial)
                if tv < val:
                    lam, val = trial, tv
                    improved = True
        if not improved:
            step *= 0.5
    return val


def bounds_general_refined(p: MixedProblem, c: ProblemConstants) -> tuple[float, float]:
    """Refined bounds for the general (possibly nonsymmetric) case."""
    K = kernel_basis(p.b_matrix)
    f_K = dual_seminorm(p.f, K)
    g_norm = float(la.norm(p.g))
    ratio = c.norm_a / c.alpha0
    theta_u = f_K / c.alpha0 + (1.0 + ratio) * g_norm / c.beta
    theta_p = (_infimum_p_term(p, c, K) / c.beta
               + c.norm_a / c.beta**2 * (1.0 + ratio) * g_norm)
    return theta_u, theta_p


def bounds_symmetric_refined(
    p: MixedProblem,
    c: ProblemConstants,
    split: tuple[Subspace, Subspace, np.ndarray] | None = None,
) -> tuple[float, float, float]:
    """Refined bounds for the symmetric coercive case.

    Returns ``(theta_u, theta_p, theta_p2)`` where theta_p2 is the sharper
    variant using the a-orthogonal projector instead of the complement's dual
    seminorm.
    """
    if c.alpha is None:
        raise NotSymmetric("constants were not computed with symmetric=True")
    if split is None:
        split = a_orthogonal_split(p)
    K, perp, proj_K = split
    f_K = dual_seminorm(p.f, K)
    f_perp = dual_seminorm(p.f, perp)
    g_norm = float(la.norm(p.g))
    root = np.sqrt(c.norm_a / c.alpha)
    theta_u = f_K / c.alpha0 + root * g_norm / c.beta
    theta_p = root * f_perp / c.beta + c.norm_a / c.beta**2 * g_norm
    f_proj = p.f - proj_K.T @ p.f  # the functional f o Pi_{K_a^perp}
    theta_p2 = float(la.norm(f_proj)) / c.beta + c.norm_a / c.beta**2 * g_norm
    return theta_u, theta_p, theta_p2


def bounds_classical(
    p: MixedProblem, c: ProblemConstants, symmetric: bool = False
) -> tuple[float, float]:
    """Classical bounds: full norms of f in place of the seminorms."""
    f_norm = float(la.norm(p.f))
    g_norm = float(la.norm(p.g))
    if symmetric:
        root = np.sqrt(c.norm_a / c.alpha0)
        theta_u = f_norm / c.alpha0 + 2.0 * root * g_norm / c.beta
        theta_p = 2.0 * root * f_norm / c.beta + c.norm_a / c.beta**2 * g_norm
    else:
        ratio = c.norm_a / c.alpha0
        theta_u = f_norm / c.alpha0 + (1.0 + ratio) * g_norm / c.beta
        theta_p = ((1.0 + ratio) * f_norm / c.beta
                   + c.norm_a / c.beta**2 * (1.0 + ratio) * g_norm)
    return theta_u, theta_p


def bounds_perturbed_limit(p: MixedProblem, c: ProblemConstants) -> tuple[float, float]:
    """Bounds inherited from the perturbed saddle-point problem as the
    perturbation vanishes.

    Uses the Euclidean orthogonal complement K^perp (the polar space), not the
    a-orthogonal one.  Requires a symmetric operator.
    """
    scale = max(1.0, c.norm_a)
    if la.norm(p.a_matrix - p.a_matrix.T, 2) > 1e-10 * scale:
        raise NotSymmetric("operator is not symmetric")
    K = kernel_basis(p.b_matrix)
    Kperp = polar_basis(p.b_matrix)
    f_K = dual_seminorm(p.f, K)
    f_perp = dual_seminorm(p.f, Kperp)
    g_norm = float(la.norm(p.g))
    root = np.sqrt(c.norm_a / c.alpha0)
    theta_u = 2.0 * f_K / c.alpha0 + (1.0 + root) * g_norm / c.beta
    theta_p = f_perp / c.beta + 3.0 * root * f_K / c.beta + c.norm_a / c.beta**2 * g_norm
    return theta_u, theta_p


# ---------------------------------------------------------------------------
# functional decomposition
# ---------------------------------------------------------------------------

def decompose_functional(p: MixedProblem, f: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Split f = A w0 + B^T q with w0 in ker B (unique by well-posedness)."""
    f = np.asarray(f, dtype=float).ravel()
    hom = p.with_data(f=f, g=np.zeros(p.m))
    w0, q = solve_mixed(hom)
    res = la.norm(p.a_matrix @ w0 + p.b_matrix.T @ q - f)
    if res > 1e-10 * max(1.0, la.norm(f)):
        raise SingularSystem(f"decomposition residual {res:.3e} exceeds tolerance")
    return w0, q


# ---------------------------------------------------------------------------
# reports and random instances
# ---------------------------------------------------------------------------

def stability_report(p: MixedProblem, symmetric: bool = False) -> StabilityReport:
    """Solve the instance and evaluate refined and classical bounds."""
    c = compute_constants(p, symmetric=symmetric)
    u, pp = solve_mixed(p)
    K = kernel_basis(p.b_matrix)
    report_kwargs = dict(
        u_norm=float(la.norm(u)),
        p_norm=float(la.norm(pp)),
        seminorm_f_Kdual=dual_seminorm(p.f, K),
        norm_f=float(la.norm(p.f)),
        norm_g=float(la.norm(p.g)),
        symmetric=symmetric,
    )
    if symmetric:
        split = a_orthogonal_split(p)
        tu, tp, tp2 = bounds_symmetric_refined(p, c, split)
        tuc, tpc = bounds_classical(p, c, symmetric=True)
        report = StabilityReport(
            theta_u_refined=tu, theta_p_refined=tp,
            theta_u_classical=tuc, theta_p_classical=tpc,
            seminorm_f_KaPerpDual=dual_seminorm(p.f, split[1]),
            theta_p_refined2=tp2,
            **report_kwargs,
        )
    else:
        tu, tp = bounds_general_refined(p, c)
        tuc, tpc = bounds_classical(p, c, symmetric=False)
        report = StabilityReport(
            theta_u_refined=tu, theta_p_refined=tp,
            theta_u_classical=tuc, theta_p_classical=tpc,
            **report_kwargs,
        )
    report.check()
    return report


def random_instance(
    rng: np.random.Generator,
    n: int,
    m: int,
    symmetric: bool = False,
    cond_cap: float = 1e6,
) -> MixedProblem:
    """Well-posed random instance: SPD (plus a small skew part if general).

    The SPD part has its condition number capped; B rows are re-orthogonalized
    Gaussian vectors so the inf-sup constant stays O(1).
    """
    R = rng.standard_normal((n, n))
    A = R.T @ R
    lam, V = la.eigh(A)
    lam = np.clip(lam, lam[-1] / cond_cap, None)
    A = (V * lam) @ V.T
    if not symmetric:
        S = rng.standard_normal((n, n))
        A = A + 0.1 * (S - S.T)
    B = la.orth(rng.standard_normal((n, m))).T * (0.5 + rng.random())
    f = rng.standard_normal(n)
    g = rng.standard_normal(m)
    return MixedProblem(A, B, f, g)
