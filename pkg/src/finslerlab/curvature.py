"""Riemann curvature in spray form, flag curvature, Ricci data, Einstein fits.

Everything is evaluated through the jet engine, with the spray as an
intermediate jet-valued function:

    R^i_k = 2 dG^i/dx^k - y^j d2G^i/(dy^k dx^j)
            + 2 G^j d2G^i/(dy^k dy^j) - (dG^i/dy^j)(dG^j/dy^k)

The Ricci tensor is the fibre Hessian of R^k_k / 2, which costs two more
derivative orders on top of the spray.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateFlagError
from .geodesics import spray_jet_functions
from .metrics import FinslerStructure, fundamental_tensor
from .jets import jet_space


def _riemann_jet_matrix(S: FinslerStructure, x, y, r_order: int, via: str):
    """R^i_k as jets of total order r_order over the 2n phase seeds."""
    n = S.dimension
    G = spray_jet_functions(S, x, y, g_order=r_order + 2, via=via)
    space = G[0].space
    yj = [space.variable(n + i, float(v)) for i, v in enumerate(np.atleast_1d(y))]
    Gx = [[G[i].partial(j) for j in range(n)] for i in range(n)]
    Gy = [[G[i].partial(n + j) for j in range(n)] for i in range(n)]
    R = [[None] * n for _ in range(n)]
    for i in range(n):
        for k in range(n):
            term = 2.0 * Gx[i][k]
            for j in range(n):
                term = term - yj[j] * Gy[i][k].partial(j)
                term = term + 2.0 * (G[j] * Gy[i][k].partial(n + j))
                term = term - Gy[i][j] * Gy[j][k]
            R[i][k] = term
    return R


@dataclass
class RiemannCurvature:
    """R^i_k values at one (x, y)."""

    matrix: np.ndarray
    x: np.ndarray
    y: np.ndarray

    def flagpole_residual(self) -> float:
        """max |R^i_k y^k|, zero for an exact curvature operator."""
        return float(np.max(np.abs(self.matrix @ self.y)))


def riemann_curvature(S: FinslerStructure, x, y, via: str = "auto") -> RiemannCurvature:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    R = _riemann_jet_matrix(S, x, y, r_order=0, via=via)
    n = S.dimension
    mat = np.array([[R[i][k].value for k in range(n)] for i in range(n)])
    return RiemannCurvature(matrix=mat, x=x, y=y)


def flag_curvature(S: FinslerStructure, x, y, u, via: str = "auto") -> float:
    """Sectional curvature of the flag (y; u).

    K = g_y(u, R_y u) / ( g_y(y,y) g_y(u,u) - g_y(y,u)^2 ).
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    u = np.atleast_1d(np.asarray(u, dtype=float))
    ft = fundamental_tensor(S, x, y)
    gyy = ft.inner(y, y)
    guu = ft.inner(u, u)
    gyu = ft.inner(y, u)
    denom = gyy * guu - gyu * gyu
    if denom <= 1e-12 * max(1.0, gyy * guu):
        raise DegenerateFlagError("flag plane degenerate: u is parallel to the flagpole")
    R = riemann_curvature(S, x, y, via=via)
    return float(ft.inner(u, R.matrix @ u) / denom)


def ricci_scalar(S: FinslerStructure, x, y, via: str = "auto") -> float:
    """Ric(x, y) = R^k_k / F^2; zero-homogeneous in y."""
    R = riemann_curvature(S, x, y, via=via)
    f2 = float(S.F2(np.atleast_1d(np.asarray(x, float)), np.atleast_1d(np.asarray(y, float))))
    return float(np.trace(R.matrix) / f2)


@dataclass
class RicciData:
    """Ricci scalar and tensor at one (x, y)."""

    ric: float
    ric_tensor: np.ndarray
    x: np.ndarray
    y: np.ndarray


def ricci_tensor(S: FinslerStructure, x, y, via: str = "auto") -> RicciData:
    """Ric_ij = (R^k_k / 2)_{y^i y^j} at (x, y), plus the scalar from the trace."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    n = S.dimension
    R = _riemann_jet_matrix(S, x, y, r_order=2, via=via)
    trace = R[0][0]
    for i in range(1, n):
        trace = trace + R[i][i]
    ric_ij = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            val = 0.5 * trace.partial(n + i).partial(n + j).value
            ric_ij[i, j] = ric_ij[j, i] = val
    f2 = float(S.F2(x, y))
    return RicciData(ric=float(trace.value / f2), ric_tensor=ric_ij, x=x, y=y)


def scalar_curvature_residual(S: FinslerStructure, x, y, lam: float, via: str = "auto") -> float:
    """Relative deviation of R^i_k from the scalar-curvature shape.

    Constant flag curvature lam forces
        R^i_k = lam F^2 { delta^i_k - F^{-1} F_{y^k} y^i }.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    n = S.dimension
    R = riemann_curvature(S, x, y, via=via).matrix
    space = jet_space(n, 1)
    yj = [space.variable(i, float(v)) for i, v in enumerate(y)]
    fjet = S.F(list(x), yj)
    fval = fjet.value
    f_y = np.array([fjet.partial(i).value for i in range(n)])
    shape = lam * fval * fval * (np.eye(n) - np.outer(y, f_y) / fval)
    scale = float(np.max(np.abs(R))) + abs(lam) * fval * fval * n
    return float(np.max(np.abs(R - shape)) / max(scale, 1e-300))


@dataclass
class EinsteinReport:
    """Sampled Einstein test: is Ric a function of x alone, and which one."""

    family: str
    dimension: int
    is_einstein: bool
    y_spread: float
    ric_mean: float
    ric_x_spread: float
    fit_factor: float | None
    fit_residual: float
    flag_constant: float | None
    einstein_constant_c: float | None
    tolerance: float
    matrix_tolerance: float
    x_samples: int
    y_directions: int
    seed: int
    ric_values: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "dimension": self.dimension,
            "is_einstein": self.is_einstein,
            "y_spread": self.y_spread,
            "ric_mean": self.ric_mean,
            "ric_x_spread": self.ric_x_spread,
            "fit_factor": self.fit_factor,
            "fit_residual": self.fit_residual,
            "flag_constant": self.flag_constant,
            "einstein_constant_c": self.einstein_constant_c,
            "tolerance": self.tolerance,
            "matrix_tolerance": self.matrix_tolerance,
            "x_samples": self.x_samples,
            "y_directions": self.y_directions,
            "seed": self.seed,
        }


def einstein_classify(
    S: FinslerStructure,
    x_samples: int = 10,
    seed: int = 0,
    tolerance: float = 1e-6,
    matrix_tolerance: float = 1e-4,
    y_directions: int = 12,
    via: str = "auto",
) -> EinsteinReport:
    """Sampled classification: Einstein iff Ric(x, y) has no y-dependence.

    Additionally fits Ric_ij against Ric(x) g_ij; when the fitted factor is
    x-independent and negative the Einstein constant c = sqrt(-factor) of the
    normal form Ric_ij = -c^2 g_ij is reported.
    """
    if x_samples < 2:
        raise ValueError("need at least two base points")
    if not 8 <= y_directions <= 16:
        raise ValueError("y_directions should stay between 8 and 16")
    if S.dimension < 2:
        raise ValueError("classification needs dimension >= 2")
    rng = np.random.default_rng(seed)
    radius = 0.8 * S.sampling_radius
    per_x_means = []
    y_spread = 0.0
    ric_values = []
    xs = []
    for _ in range(x_samples):
        x = S.sample_point(rng, radius)
        xs.append(x)
        vals = []
        for _ in range(y_directions):
            y = S.sample_direction(rng)
            vals.append(ricci_scalar(S, x, y, via=via))
        vals = np.asarray(vals)
        ric_values.append(vals.tolist())
        y_spread = max(y_spread, float(vals.max() - vals.min()))
        per_x_means.append(float(vals.mean()))
    per_x_means = np.asarray(per_x_means)
    ric_mean = float(per_x_means.mean())
    ric_x_spread = float(per_x_means.max() - per_x_means.min())
    is_einstein = y_spread <= tolerance

    # least-squares proportionality of Ric_ij against g_ij at a subsample
    fit_vals = []
    fit_resid = 0.0
    for x in xs[: min(len(xs), 6)]:
        for _ in range(2):
            y = S.sample_direction(rng)
            data = ricci_tensor(S, x, y, via=via)
            g = fundamental_tensor(S, x, y).g
            lam = float(np.sum(data.ric_tensor * g) / np.sum(g * g))
            fit_vals.append(lam)
            fit_resid = max(
                fit_resid,
                float(np.max(np.abs(data.ric_tensor - lam * g)) / np.max(np.abs(g))),
            )
    fit_vals = np.asarray(fit_vals)
    fit_spread = float(fit_vals.max() - fit_vals.min())
    fit_factor = float(fit_vals.mean())
    matrix_ok = fit_resid <= matrix_tolerance and fit_spread <= matrix_tolerance * max(
        1.0, abs(fit_factor)
    )

    c = None
    x_independent = ric_x_spread <= matrix_tolerance * max(1.0, abs(ric_mean))
    if is_einstein and matrix_ok and x_independent and fit_factor < -tolerance:
        c = float(np.sqrt(-fit_factor))

    # sampled flag curvatures; a constant value is reported when the spread allows
    flags = []
    for _ in range(10):
        x = S.sample_point(rng, radius)
        y = S.sample_direction(rng)
        u = S.sample_direction(rng)
        gy = fundamental_tensor(S, x, y)
        denom = gy.inner(y, y) * gy.inner(u, u) - gy.inner(y, u) ** 2
        if denom <= 1e-8:
            continue
        flags.append(flag_curvature(S, x, y, u, via=via))
    flag_constant = None
    if flags:
        flags = np.asarray(flags)
        if float(flags.max() - flags.min()) <= matrix_tolerance * max(1.0, float(np.abs(flags).max())):
            flag_constant = float(flags.mean())

    return EinsteinReport(
        family=S.family,
        dimension=S.dimension,
        is_einstein=is_einstein,
        y_spread=y_spread,
        ric_mean=ric_mean,
        ric_x_spread=ric_x_spread,
        fit_factor=fit_factor if matrix_ok else None,
        fit_residual=fit_resid,
        flag_constant=flag_constant,
        einstein_constant_c=c,
        tolerance=tolerance,
        matrix_tolerance=matrix_tolerance,
        x_samples=x_samples,
        y_directions=y_directions,
        seed=seed,
        ric_values=ric_values,
    )
