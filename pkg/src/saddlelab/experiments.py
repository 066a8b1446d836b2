"""Experiment drivers: the four figure reproductions plus supporting suites.

Each driver returns ``(header, rows, metadata)`` and the CSV writer renders
rows with 17 significant digits, '.' decimals and LF endings, so repeated runs
with the same configuration are byte identical.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import saddle_core as sc
from .fem2d.mesh import Mesh2D, barycentric_refine, structured_mesh, uniform_refine
from .stokes import (
    SCOTT_VOGELIUS,
    TAYLOR_HOOD,
    assemble_stokes,
    discrete_dual_norm_Vh,
    discrete_dual_seminorm_Kh,
    helmholtz_hodge_decompose,
    hodge_residual_l2,
    solve_navier_stokes_transient,
)

UNIT_SQUARE_INF_SUP = 0.382683  # reference lower bound for the continuous problem


# ---------------------------------------------------------------------------
# polynomial data of the experiments
# ---------------------------------------------------------------------------

def _bump(x):
    """x^2 (x-1)^2 and its first three derivatives."""
    return (
        x**2 * (x - 1.0) ** 2,
        4.0 * x**3 - 6.0 * x**2 + 2.0 * x,
        12.0 * x**2 - 12.0 * x + 2.0,
        24.0 * x - 12.0,
    )


def curl_potential_field(pts: np.ndarray) -> np.ndarray:
    """curl of x^2(x-1)^2 y^2(y-1)^2: the exact velocity at lambda = 1."""
    X, Xp, _, _ = _bump(pts[:, 0])
    Y, Yp, _, _ = _bump(pts[:, 1])
    return np.column_stack([X * Yp, -Xp * Y])


def neg_laplacian_curl_potential(pts: np.ndarray) -> np.ndarray:
    """-Laplace(curl potential); times lambda*mu this is the fig3 f_u part."""
    x, y = pts[:, 0], pts[:, 1]
    X, Xp, Xpp, Xppp = _bump(x)
    Y, Yp, Ypp, Yppp = _bump(y)
    return -np.column_stack([Xpp * Yp + X * Yppp, -(Xppp * Y + Xp * Ypp)])


def grad_x_cubed(pts: np.ndarray) -> np.ndarray:
    """grad(x^3): the hydrostatic fig3 forcing f_p."""
    out = np.zeros_like(pts)
    out[:, 0] = 3.0 * pts[:, 0] ** 2
    return out


def potential_flow_field(pts: np.ndarray) -> np.ndarray:
    """grad(x^3 - 3 x y^2), gradient of a harmonic polynomial (fig4 data)."""
    x, y = pts[:, 0], pts[:, 1]
    return np.column_stack([3.0 * x**2 - 3.0 * y**2, -6.0 * x * y])


def convection_of_potential_flow(pts: np.ndarray) -> np.ndarray:
    """(u . grad) u for the potential flow above; equals grad(|u|^2)/2."""
    x, y = pts[:, 0], pts[:, 1]
    return 18.0 * (x**2 + y**2)[:, None] * pts


def square_gauss(n: int = 16):
    """Tensor Gauss-Legendre rule on the unit square (exact to degree 2n-1)."""
    x, w = np.polynomial.legendre.leggauss(n)
    x = 0.5 * (x + 1.0)
    w = 0.5 * w
    X, Y = np.meshgrid(x, x, indexing="ij")
    W = np.outer(w, w)
    return np.column_stack([X.ravel(), Y.ravel()]), W.ravel()


def exact_velocity_grad_norm() -> float:
    """H1 seminorm of the lambda = 1 velocity, by exact tensor quadrature."""
    pts, w = square_gauss(16)
    x, y = pts[:, 0], pts[:, 1]
    X, Xp, Xpp, _ = _bump(x)
    Y, Yp, Ypp, _ = _bump(y)
    frob = 2.0 * (Xp * Yp) ** 2 + (X * Ypp) ** 2 + (Xpp * Y) ** 2
    return float(np.sqrt(w @ frob))


def exact_pressure_norm() -> float:
    """L2 norm of the zero-mean lambda = 0 pressure x^3 - 1/4 (= sqrt(9/112))."""
    pts, w = square_gauss(8)
    q = pts[:, 0] ** 3 - 0.25
    return float(np.sqrt(w @ q**2))


# ---------------------------------------------------------------------------
# CSV / metadata output
# ---------------------------------------------------------------------------

def format_value(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.17g}"


def write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    lines = [",".join(header)]
    lines += [",".join(format_value(v) for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n", newline="\n")


def write_meta(path: Path, meta: dict) -> None:
    path.write_text(json.dumps(meta, sort_keys=True, indent=2) + "\n", newline="\n")


def emit(out_dir: Path, name: str, header, rows, meta) -> list[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / f"{name}.csv"
    meta_path = out_dir / f"{name}.meta.json"
    write_csv(csv_path, header, rows)
    write_meta(meta_path, meta)
    return [csv_path, meta_path]


# ---------------------------------------------------------------------------
# figures 1 and 2: the finite-dimensional phi sweeps
# ---------------------------------------------------------------------------

def fig1_problem(a: float = 0.01, b: float = 0.1, g: float = -0.01) -> sc.MixedProblem:
    A = np.array([[1.0, -1.0], [1.0, a]])
    B = np.array([[b, 0.0]])
    return sc.MixedProblem(A, B, np.array([1.0, 0.0]), np.array([g]))


def fig2_problem(a: float = 0.001, b: float = 0.1, g: float = 0.5) -> sc.MixedProblem:
    r = np.sqrt(a)
    A = np.array([[2.0, r], [r, a]])
    B = np.array([[b, 0.0]])
    return sc.MixedProblem(A, B, np.array([1.0, 0.0]), np.array([g]))


def run_fig1(a: float = 0.01, b: float = 0.1, g: float = -0.01, npoints: int = 200):
    base = fig1_problem(a, b, g)
    constants = sc.compute_constants(base)
    header = ["phi", "u_norm", "p_norm", "theta_u_r", "theta_u_c",
              "theta_p_r", "theta_p_c"]
    rows = []
    for phi in np.linspace(0.0, np.pi, npoints):
        p = base.with_data(f=np.array([np.cos(phi), np.sin(phi)]))
        u, pp = sc.solve_mixed(p)
        tu_r, tp_r = sc.bounds_general_refined(p, constants)
        tu_c, tp_c = sc.bounds_classical(p, constants)
        rows.append([phi, np.linalg.norm(u), abs(pp[0]), tu_r, tu_c, tp_r, tp_c])
    meta = {
        "experiment": "fig1",
        "a": a, "b": b, "g": g,
        "phi_range": [0.0, float(np.pi)],
        "npoints": npoints,
        "alpha0": constants.alpha0,
        "beta": constants.beta,
        "norm_a": constants.norm_a,
    }
    return header, rows, meta


def run_fig2(a: float = 0.001, b: float = 0.1, g: float = 0.5, npoints: int = 200):
    base = fig2_problem(a, b, g)
    constants = sc.compute_constants(base, symmetric=True)
    split = sc.a_orthogonal_split(base)
    header = ["phi", "u_norm", "p_norm", "theta_u_r", "theta_u_c",
              "theta_p_r", "theta_p_r2", "theta_p_c"]
    rows = []
    for phi in np.linspace(0.0, np.pi / 2.0, npoints):
        p = base.with_data(f=np.array([np.cos(phi), np.sin(phi)]))
        u, pp = sc.solve_mixed(p)
        tu_r, tp_r, tp_r2 = sc.bounds_symmetric_refined(p, constants, split)
        tu_c, tp_c = sc.bounds_classical(p, constants, symmetric=True)
        rows.append([phi, np.linalg.norm(u), abs(pp[0]),
                     tu_r, tu_c, tp_r, tp_r2, tp_c])
    meta = {
        "experiment": "fig2",
        "a": a, "b": b, "g": g,
        "phi_range": [0.0, float(np.pi / 2.0)],
        "npoints": npoints,
        "alpha0": constants.alpha0,
        "alpha": constants.alpha,
        "beta": constants.beta,
        "norm_a": constants.norm_a,
    }
    return header, rows, meta


# ---------------------------------------------------------------------------
# figure 3: the lambda sweep on the unit square
# ---------------------------------------------------------------------------

def fig3_meshes(level: int = 4, uniform_refinements: int = 0) -> tuple[Mesh2D, Mesh2D]:
    mesh = structured_mesh(level)
    for _ in range(uniform_refinements):
        mesh = uniform_refine(mesh)
    return mesh, barycentric_refine(mesh)


def lambda_sweep(mesh_th: Mesh2D, mesh_sv: Mesh2D, mu: float,
                 lambdas: np.ndarray, jobs: int = 1):
    """Solve both pairs for every lambda and evaluate the four bound curves."""
    sys_th = assemble_stokes(mesh_th, TAYLOR_HOOD, mu)
    sys_sv = assemble_stokes(mesh_sv, SCOTT_VOGELIUS, mu)
    sys_th.factorize()
    sys_sv.factorize()
    from .fem2d.assembly import assemble_load

    loads = {}
    for tag, system in (("th", sys_th), ("sv", sys_sv)):
        loads[tag, "u"] = assemble_load(system.v_space, neg_laplacian_curl_potential,
                                        quad_degree=8, f_degree=5)
        loads[tag, "p"] = assemble_load(system.v_space, grad_x_cubed,
                                        quad_degree=8, f_degree=2)
    grad_u1 = exact_velocity_grad_norm()
    p0_norm = exact_pressure_norm()
    beta = UNIT_SQUARE_INF_SUP
    dual_cache: dict = {}

    def solve_point(lam: float):
        f_th = lam * mu * loads["th", "u"] + (1.0 - lam) * loads["th", "p"]
        f_sv = lam * mu * loads["sv", "u"] + (1.0 - lam) * loads["sv", "p"]
        u_th, p_th = sys_th.solve(f_th)
        u_sv, p_sv = sys_sv.solve(f_sv)
        f_dual = discrete_dual_norm_Vh(mesh_sv, f_sv, cache=dual_cache)
        return {
            "lam": lam,
            "u_norm_TH": sys_th.grad_norm(u_th),
            "u_norm_SV": sys_sv.grad_norm(u_sv),
            "p_norm_TH": sys_th.pressure_norm(p_th),
            "p_norm_SV": sys_sv.pressure_norm(p_sv),
            "div_u_SV": sys_sv.div_norm(u_sv),
            "div_u_TH": sys_th.div_norm(u_th),
            "theta_u_c": f_dual / mu,
            "theta_u_r": lam * grad_u1,
            "theta_p_c": f_dual / beta,
            "theta_p_r": (1.0 - lam) * p0_norm / beta,
        }

    if jobs > 1:
        # the shared LU solve is not guaranteed reentrant: parallel workers
        # get their own systems
        def solve_point_isolated(lam: float):
            s_th = assemble_stokes(mesh_th, TAYLOR_HOOD, mu)
            s_sv = assemble_stokes(mesh_sv, SCOTT_VOGELIUS, mu)
            f_th = lam * mu * loads["th", "u"] + (1.0 - lam) * loads["th", "p"]
            f_sv = lam * mu * loads["sv", "u"] + (1.0 - lam) * loads["sv", "p"]
            u_th, p_th = s_th.solve(f_th)
            u_sv, p_sv = s_sv.solve(f_sv)
            f_dual = discrete_dual_norm_Vh(mesh_sv, f_sv)
            return {
                "lam": lam,
                "u_norm_TH": s_th.grad_norm(u_th),
                "u_norm_SV": s_sv.grad_norm(u_sv),
                "p_norm_TH": s_th.pressure_norm(p_th),
                "p_norm_SV": s_sv.pressure_norm(p_sv),
                "div_u_SV": s_sv.div_norm(u_sv),
                "div_u_TH": s_th.div_norm(u_th),
                "theta_u_c": f_dual / mu,
                "theta_u_r": lam * grad_u1,
                "theta_p_c": f_dual / beta,
                "theta_p_r": (1.0 - lam) * p0_norm / beta,
            }

        with ThreadPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(solve_point_isolated, lambdas))
    else:
        records = [solve_point(lam) for lam in lambdas]
    return records


def run_fig3(mu: float = 1e-3, level: int = 4, nlambda: int = 101,
             uniform_refinements: int = 0, jobs: int = 1):
    mesh_th, mesh_sv = fig3_meshes(level, uniform_refinements)
    lambdas = np.linspace(0.0, 1.0, nlambda)
    records = lambda_sweep(mesh_th, mesh_sv, mu, lambdas, jobs=jobs)
    header = ["lam", "u_norm_TH", "u_norm_SV", "p_norm_TH", "p_norm_SV",
              "div_u_TH", "div_u_SV", "theta_u_c", "theta_u_r",
              "theta_p_c", "theta_p_r"]
    rows = [[r[k] for k in header] for r in records]
    meta = {
        "experiment": "fig3",
        "mu": mu,
        "mesh_level": level,
        "uniform_refinements": uniform_refinements,
        "nlambda": nlambda,
        "beta": UNIT_SQUARE_INF_SUP,
        "grad_norm_exact_velocity": exact_velocity_grad_norm(),
        "l2_norm_exact_pressure": exact_pressure_norm(),
        "mesh_TH": {"vertices": mesh_th.num_vertices, "triangles": mesh_th.num_triangles},
        "mesh_SV": {"vertices": mesh_sv.num_vertices, "triangles": mesh_sv.num_triangles},
        "pairs": [TAYLOR_HOOD, SCOTT_VOGELIUS],
    }
    return header, rows, meta


# ---------------------------------------------------------------------------
# figure 4: transient potential flow
# ---------------------------------------------------------------------------

def run_fig4(mu: float = 1e-4, dt: float = 0.01, T: float = 1.0, level: int = 4,
             uniform_refinements: int = 1, picard_tol: float = 1e-12):
    mesh = structured_mesh(level)
    for _ in range(uniform_refinements):
        mesh = uniform_refine(mesh)
    mesh = barycentric_refine(mesh)
    results = {}
    seminorms = {}
    for tag, pair in (("TH", TAYLOR_HOOD), ("SV", SCOTT_VOGELIUS)):
        results[tag] = solve_navier_stokes_transient(
            mesh, pair, mu=mu, dt=dt, T=T,
            u0=potential_flow_field, g_D=potential_flow_field,
            picard_tol=picard_tol,
        )
        seminorms[tag] = discrete_dual_seminorm_Kh(
            mesh, pair, convection_of_potential_flow)
    header = ["t", "err_TH", "err_SV", "p_norm_TH", "p_norm_SV"]
    th, sv = results["TH"], results["SV"]
    rows = [
        [th.times[k], th.l2_errors[k], sv.l2_errors[k],
         th.pressure_norms[k], sv.pressure_norms[k]]
        for k in range(len(th.times))
    ]
    meta = {
        "experiment": "fig4",
        "mu": mu,
        "dt": dt,
        "T": T,
        "mesh_level": level,
        "uniform_refinements": uniform_refinements,
        "mesh": {"vertices": mesh.num_vertices, "triangles": mesh.num_triangles},
        "picard_tol": picard_tol,
        "pairs": [TAYLOR_HOOD, SCOTT_VOGELIUS],
        "convection_seminorm_Kh": {
            "TH": seminorms["TH"], "SV": seminorms["SV"],
        },
    }
    return header, rows, meta


# ---------------------------------------------------------------------------
# Helmholtz-Hodge refinement study
# ---------------------------------------------------------------------------

def hhd_test_field(pts: np.ndarray) -> np.ndarray:
    """A smooth non-polynomial field with both solenoidal and gradient parts."""
    x, y = pts[:, 0], pts[:, 1]
    return np.column_stack([
        np.sin(np.pi * x) * np.cos(np.pi * y) + x * y,
        -np.cos(np.pi * x) * np.sin(np.pi * y) + 0.5 * x**2,
    ])


def run_hhd(levels: tuple[int, ...] = (2, 4, 8)):
    header = ["level", "h", "variant_code", "u_l2", "p_grad_norm",
              "orthogonality", "residual_l2"]
    rows = []
    for level in levels:
        mesh = structured_mesh(level)
        for code, variant in ((0, "gradient"), (1, "curl")):
            res = helmholtz_hodge_decompose(mesh, hhd_test_field, variant=variant)
            rows.append([
                level, 1.0 / level, code, res.u_l2, res.p_grad_norm,
                res.orthogonality,
                hodge_residual_l2(res, hhd_test_field, variant=variant),
            ])
    meta = {
        "experiment": "hhd",
        "levels": list(levels),
        "variants": {"0": "gradient", "1": "curl"},
        "field": "sin/cos vortex plus polynomial gradient",
    }
    return header, rows, meta


# ---------------------------------------------------------------------------
# random property suite
# ---------------------------------------------------------------------------

def run_random_suite(seed: int = 0, count: int = 100, n_max: int = 12, m_max: int = 6):
    rng = np.random.default_rng(seed)
    header = ["index", "n", "m", "symmetric", "u_norm", "p_norm",
              "theta_u_r", "theta_p_r", "u_slack", "p_slack"]
    rows = []
    max_u_slack = -np.inf
    max_p_slack = -np.inf
    failures = 0
    for i in range(count):
        n = int(rng.integers(2, n_max + 1))
        m = int(rng.integers(1, min(n, m_max) + 1))
        symmetric = bool(i % 2)
        p = sc.random_instance(rng, n, m, symmetric=symmetric)
        try:
            report = sc.stability_report(p, symmetric=symmetric)
        except AssertionError:
            failures += 1
            continue
        u_slack = (report.theta_u_refined - report.u_norm) / max(report.u_norm, 1e-30)
        p_slack = (report.theta_p_refined - report.p_norm) / max(report.p_norm, 1e-30)
        max_u_slack = max(max_u_slack, u_slack)
        max_p_slack = max(max_p_slack, p_slack)
        rows.append([i, n, m, int(symmetric), report.u_norm, report.p_norm,
                     report.theta_u_refined, report.theta_p_refined,
                     u_slack, p_slack])
    meta = {
        "experiment": "random_suite",
        "seed": seed,
        "count": count,
        "n_max": n_max,
        "m_max": m_max,
        "bound_failures": failures,
        "max_relative_u_slack": max_u_slack,
        "max_relative_p_slack": max_p_slack,
        "all_checks_passed": failures == 0,
    }
    return header, rows, meta
