"""Finsler metric families, the fundamental tensor and structure validation.

Every family exposes F^2 as a scalar-like evaluator: it accepts plain floats
or jets and therefore feeds both ordinary evaluation and the derivative
machinery.  Built-in families live on the open unit ball (the interval
(-1, 1) in dimension one); sampling for validation stays inside radius 0.95.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConfigError, EvaluationDomainError, StrongConvexityError
from .jets import Jet, jet_abs, jet_space, jet_sqrt, scalar_value

FAMILIES = ("riemannian", "randers", "funk_ball", "klein_ball", "interval_funk")
MAX_POLY_DEGREE = 4
SAMPLING_RADIUS = 0.95


def _dot(u, v):
    total = u[0] * v[0]
    for i in range(1, len(u)):
        total = total + u[i] * v[i]
    return total


class Polynomial:
    """Multivariate polynomial in the chart coordinates; exact on jets."""

    __slots__ = ("nvars", "terms")

    def __init__(self, nvars: int, terms):
        self.nvars = nvars
        self.terms = tuple((float(c), tuple(int(e) for e in exps)) for c, exps in terms)

    def __call__(self, x):
        total = 0.0
        for c, exps in self.terms:
            term = c
            for i, e in enumerate(exps):
                for _ in range(e):
                    term = term * x[i]
            total = total + term
        return total

    def partial(self, v: int) -> "Polynomial":
        out = []
        for c, exps in self.terms:
            if exps[v] == 0:
                continue
            new = list(exps)
            new[v] -= 1
            out.append((c * exps[v], tuple(new)))
        return Polynomial(self.nvars, out)

    @property
    def is_constant(self) -> bool:
        return all(all(e == 0 for e in exps) for _, exps in self.terms)

    @staticmethod
    def from_json(obj, nvars: int, where: str) -> "Polynomial":
        if not isinstance(obj, list):
            raise ConfigError(f"{where}: polynomial must be a list of terms")
        terms = []
        for t in obj:
            if not isinstance(t, list) or len(t) != nvars + 1:
                raise ConfigError(f"{where}: each term must be [coeff, e1..e{nvars}]")
            coeff = t[0]
            if not isinstance(coeff, (int, float)):
                raise ConfigError(f"{where}: coefficient must be a number")
            exps = t[1:]
            for e in exps:
                if not isinstance(e, int) or e < 0:
                    raise ConfigError(f"{where}: exponents must be non-negative integers")
            if sum(exps) > MAX_POLY_DEGREE:
                raise ConfigError(f"{where}: total degree exceeds {MAX_POLY_DEGREE}")
            terms.append((coeff, exps))
        return Polynomial(nvars, terms)


def _poly_matrix_from_json(obj, n: int, where: str):
    if not isinstance(obj, list) or len(obj) != n:
        raise ConfigError(f"{where}: expected an {n}x{n} matrix of polynomials")
    mat = []
    for i, row in enumerate(obj):
        if not isinstance(row, list) or len(row) != n:
            raise ConfigError(f"{where}: row {i} must have {n} entries")
        mat.append([Polynomial.from_json(cell, n, f"{where}[{i}][{j}]") for j, cell in enumerate(row)])
    return mat


def _poly_vector_from_json(obj, n: int, where: str):
    if not isinstance(obj, list) or len(obj) != n:
        raise ConfigError(f"{where}: expected {n} polynomial entries")
    return [Polynomial.from_json(cell, n, f"{where}[{i}]") for i, cell in enumerate(obj)]


@dataclass(frozen=True)
class MetricConfig:
    """Parsed, validated description of one metric instance."""

    family: str
    dimension: int
    k: float = 1.0
    scale: float = 1.0
    riemannian_metric: tuple | None = None
    randers_metric: tuple | None = None
    randers_form: tuple | None = None

    @staticmethod
    def from_dict(doc: dict) -> "MetricConfig":
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
        allowed = {"family", "dimension", "k", "scale", "riemannian", "randers"}
        unknown = set(doc) - allowed
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        family = doc.get("family")
        if family not in FAMILIES:
            raise ConfigError(f"family must be one of {FAMILIES}, got {family!r}")
        dim = doc.get("dimension")
        if not isinstance(dim, int) or dim < 1:
            raise ConfigError("dimension must be a positive integer")
        if family == "interval_funk":
            if dim != 1:
                raise ConfigError("interval_funk is one-dimensional")
        elif dim < 2:
            raise ConfigError(f"{family} needs dimension >= 2")
        k = doc.get("k", 1.0)
        if not isinstance(k, (int, float)) or k <= 0:
            raise ConfigError("k must be a positive number")
        if "k" in doc and family != "interval_funk":
            raise ConfigError("k applies only to the interval_funk family")
        scale = doc.get("scale", 1.0)
        if not isinstance(scale, (int, float)) or scale <= 0:
            raise ConfigError("scale must be a positive number")
        riem = None
        rmet = None
        rform = None
        if family == "riemannian":
            block = doc.get("riemannian")
            if not isinstance(block, dict):
                raise ConfigError("riemannian family needs a 'riemannian' block")
            extra = set(block) - {"metric"}
            if extra:
                raise ConfigError(f"unknown riemannian fields: {sorted(extra)}")
            riem = tuple(tuple(r) for r in _poly_matrix_from_json(block.get("metric"), dim, "riemannian.metric"))
        elif "riemannian" in doc:
            raise ConfigError("'riemannian' block is only valid for the riemannian family")
        if family == "randers":
            block = doc.get("randers")
            if not isinstance(block, dict):
                raise ConfigError("randers family needs a 'randers' block")
            extra = set(block) - {"metric", "one_form"}
            if extra:
                raise ConfigError(f"unknown randers fields: {sorted(extra)}")
            rmet = tuple(tuple(r) for r in _poly_matrix_from_json(block.get("metric"), dim, "randers.metric"))
            rform = tuple(_poly_vector_from_json(block.get("one_form"), dim, "randers.one_form"))
        elif "randers" in doc:
            raise ConfigError("'randers' block is only valid for the randers family")
        return MetricConfig(
            family=family,
            dimension=dim,
            k=float(k),
            scale=float(scale),
            riemannian_metric=riem,
            randers_metric=rmet,
            randers_form=rform,
        )

    @staticmethod
    def from_json(text: str) -> "MetricConfig":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}") from exc
        return MetricConfig.from_dict(doc)


def load_config(path: str) -> MetricConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return MetricConfig.from_json(fh.read())


@dataclass
class FinslerStructure:
    """A metric instance: scalar-like F^2 evaluator plus optional fast paths."""

    dimension: int
    family: str
    reversible: bool
    config: MetricConfig
    f2: Callable
    domain_fn: Callable
    spray_fast: Callable | None = None
    g_fast: Callable | None = None
    unique_geodesics: bool = False
    sampling_radius: float = SAMPLING_RADIUS

    @property
    def n(self) -> int:
        return self.dimension

    def domain(self, x) -> bool:
        return bool(self.domain_fn(np.atleast_1d(np.asarray(x, dtype=float))))

    def F2(self, x, y):
        return self.f2(x, y)

    def F(self, x, y):
        val = self.f2(x, y)
        return jet_sqrt(val)

    def sample_point(self, rng, radius: float | None = None) -> np.ndarray:
        """Uniform point of the chart ball, inside the sampling margin."""
        r_cap = self.sampling_radius if radius is None else radius
        n = self.dimension
        v = rng.standard_normal(n)
        v /= np.linalg.norm(v)
        r = r_cap * rng.uniform() ** (1.0 / n)
        return r * v

    def sample_direction(self, rng) -> np.ndarray:
        while True:
            v = rng.standard_normal(self.dimension)
            nv = np.linalg.norm(v)
            if nv > 1e-8:
                return v / nv


def _require_chart(d):
    if scalar_value(d) <= 0.0:
        raise EvaluationDomainError("point outside the unit-ball chart")


def _klein_structure(config: MetricConfig) -> FinslerStructure:
    s2 = config.scale * config.scale

    def f2(x, y):
        D = 1.0 - _dot(x, x)
        _require_chart(D)
        return s2 * (_dot(y, y) * D + _dot(x, y) ** 2) / (D * D)

    def spray_fast(x, y):
        D = 1.0 - _dot(x, x)
        _require_chart(D)
        P = _dot(x, y) / D
        return [P * y[i] for i in range(len(y))]

    def g_fast(x, y):
        x = np.asarray(x, dtype=float)
        D = 1.0 - float(x @ x)
        _require_chart(D)
        n = x.size
        return s2 * (D * np.eye(n) + np.outer(x, x)) / (D * D)

    return FinslerStructure(
        dimension=config.dimension,
        family="klein_ball",
        reversible=True,
        config=config,
        f2=f2,
        domain_fn=lambda x: float(x @ x) < 1.0,
        spray_fast=spray_fast,
        g_fast=g_fast,
        unique_geodesics=True,
    )


def _funk_structure(config: MetricConfig) -> FinslerStructure:
    scale = config.scale

    def f_raw(x, y):
        D = 1.0 - _dot(x, x)
        _require_chart(D)
        xy = _dot(x, y)
        rad = xy * xy + _dot(y, y) * D
        return (jet_sqrt(rad) + xy) / D

    def f2(x, y):
        F = f_raw(x, y)
        return (scale * scale) * F * F

    def spray_fast(x, y):
        # Funk metrics solve F_{x^k} = F F_{y^k}; the spray collapses to F y / 2.
        # Constant rescalings of F leave the spray unchanged, so use raw F.
        F = f_raw(x, y)
        return [0.5 * F * y[i] for i in range(len(y))]

    return FinslerStructure(
        dimension=config.dimension,
        family="funk_ball",
        reversible=False,
        config=config,
        f2=f2,
        domain_fn=lambda x: float(x @ x) < 1.0,
        spray_fast=spray_fast,
        g_fast=None,
        unique_geodesics=True,
    )


def _interval_funk_structure(config: MetricConfig) -> FinslerStructure:
    k = config.k
    scale = config.scale

    def f2(x, y):
        u = x[0]
        w = y[0]
        D = 1.0 - u * u
        _require_chart(D)
        F = (jet_abs(w) + u * w) / (k * D)
        return (scale * scale) * F * F

    return FinslerStructure(
        dimension=1,
        family="interval_funk",
        reversible=False,
        config=config,
        f2=f2,
        domain_fn=lambda x: abs(float(x[0])) < 1.0,
        unique_geodesics=True,
    )


def _riemannian_structure(config: MetricConfig) -> FinslerStructure:
    n = config.dimension
    gpoly = config.riemannian_metric
    s2 = config.scale * config.scale
    _check_symmetric_tables(gpoly, n, "riemannian.metric")
    # x-derivatives of the coefficient tables, for the Christoffel fast path
    dg = [[[gpoly[i][j].partial(l) for j in range(n)] for i in range(n)] for l in range(n)]

    def eval_matrix(x):
        return [[gpoly[i][j](x) for j in range(n)] for i in range(n)]

    def f2(x, y):
        g = eval_matrix(x)
        total = 0.0
        for i in range(n):
            row = 0.0
            for j in range(n):
                row = row + g[i][j] * y[j]
            total = total + y[i] * row
        return s2 * total

    def spray_fast(x, y):
        # G^i = (1/2) Gamma^i_jk y^j y^k with Gamma from the coefficient tables
        g = eval_matrix(x)
        ginv = invert_scalarlike_matrix(g)
        dgx = [[[dg[l][i][j](x) for j in range(n)] for i in range(n)] for l in range(n)]
        out = []
        for i in range(n):
            acc = 0.0
            for l in range(n):
                inner = 0.0
                for j in range(n):
                    for kk in range(n):
                        inner = inner + (2.0 * dgx[kk][l][j] - dgx[l][j][kk]) * y[j] * y[kk]
                acc = acc + ginv[i][l] * inner
            out.append(0.25 * acc)
        return out

    def g_fast(x, y):
        return s2 * np.array([[scalar_value(gpoly[i][j](x)) for j in range(n)] for i in range(n)])

    structure = FinslerStructure(
        dimension=n,
        family="riemannian",
        reversible=True,
        config=config,
        f2=f2,
        domain_fn=lambda x: float(x @ x) < 1.0,
        spray_fast=spray_fast,
        g_fast=g_fast,
        unique_geodesics=False,
    )
    _check_riemannian_positive(structure)
    return structure


def _randers_structure(config: MetricConfig) -> FinslerStructure:
    n = config.dimension
    apoly = config.randers_metric
    bpoly = config.randers_form
    scale = config.scale
    _check_symmetric_tables(apoly, n, "randers.metric")

    def f2(x, y):
        a = [[apoly[i][j](x) for j in range(n)] for i in range(n)]
        quad = 0.0
        for i in range(n):
            row = 0.0
            for j in range(n):
                row = row + a[i][j] * y[j]
            quad = quad + y[i] * row
        alpha = jet_sqrt(quad)
        beta = 0.0
        for i in range(n):
            beta = beta + bpoly[i](x) * y[i]
        F = alpha + beta
        return (scale * scale) * F * F

    reversible = all(not p.terms for p in bpoly)
    structure = FinslerStructure(
        dimension=n,
        family="randers",
        reversible=reversible,
        config=config,
        f2=f2,
        domain_fn=lambda x: float(x @ x) < 1.0,
        unique_geodesics=False,
    )
    _check_randers_convexity(structure)
    return structure


def _check_symmetric_tables(mat, n, where):
    rng = np.random.default_rng(12345)
    for _ in range(16):
        x = rng.uniform(-SAMPLING_RADIUS, SAMPLING_RADIUS, size=n) / np.sqrt(n)
        for i in range(n):
            for j in range(i + 1, n):
                a = float(mat[i][j](x))
                b = float(mat[j][i](x))
                if abs(a - b) > 1e-12 * max(1.0, abs(a)):
                    raise ConfigError(f"{where} must be symmetric: entry ({i},{j}) differs")


def _check_riemannian_positive(S: FinslerStructure, samples: int = 200):
    rng = np.random.default_rng(98765)
    for _ in range(samples):
        x = S.sample_point(rng)
        g = S.g_fast(x, None)
        if float(np.min(np.linalg.eigvalsh(g))) <= 0.0:
            raise StrongConvexityError(f"riemannian coefficient matrix not positive definite at x={x}")


def _check_randers_convexity(S: FinslerStructure, samples: int = 200):
    n = S.dimension
    apoly = S.config.randers_metric
    bpoly = S.config.randers_form
    rng = np.random.default_rng(56789)
    for _ in range(samples):
        x = S.sample_point(rng)
        a = np.array([[float(apoly[i][j](x)) for j in range(n)] for i in range(n)])
        eig = np.linalg.eigvalsh(a)
        if float(eig[0]) <= 0.0:
            raise StrongConvexityError(f"randers base metric not positive definite at x={x}")
        b = np.array([float(bpoly[i](x)) for i in range(n)])
        norm2 = float(b @ np.linalg.solve(a, b))
        if norm2 >= (1.0 - 1e-6) ** 2:
            raise StrongConvexityError(
                f"randers one-form too large at x={x}: ||beta||_alpha = {np.sqrt(norm2):.6f} >= 1"
            )


_FACTORIES = {
    "klein_ball": _klein_structure,
    "funk_ball": _funk_structure,
    "interval_funk": _interval_funk_structure,
    "riemannian": _riemannian_structure,
    "randers": _randers_structure,
}


def make_metric(config: MetricConfig | dict) -> FinslerStructure:
    """Build the structure for a validated config (dicts are parsed first)."""
    if isinstance(config, dict):
        config = MetricConfig.from_dict(config)
    return _FACTORIES[config.family](config)


def invert_scalarlike_matrix(M):
    """Gauss-Jordan inverse for matrices of floats or jets (n <= 4 expected)."""
    n = len(M)
    a = [[M[i][j] for j in range(n)] for i in range(n)]
    inv = [[1.0 if i == j else 0.0 for j in range(n)] for i in range(n)]
    for col in range(n):
        pivot = max(range(col, n), key=lambda r: abs(scalar_value(a[r][col])))
        if abs(scalar_value(a[pivot][col])) < 1e-300:
            raise EvaluationDomainError("singular matrix in scalar-like inverse")
        if pivot != col:
            a[pivot], a[col] = a[col], a[pivot]
            inv[pivot], inv[col] = inv[col], inv[pivot]
        piv = a[col][col]
        for j in range(n):
            a[col][j] = a[col][j] / piv
            inv[col][j] = inv[col][j] / piv
        for r in range(n):
            if r == col:
                continue
            factor = a[r][col]
            if isinstance(factor, (int, float)) and factor == 0.0:
                continue
            for j in range(n):
                a[r][j] = a[r][j] - factor * a[col][j]
                inv[r][j] = inv[r][j] - factor * inv[col][j]
    return inv


@dataclass
class FundamentalTensor:
    """g_ij at one (x, y) plus its verified inverse."""

    g: np.ndarray
    g_inv: np.ndarray
    x: np.ndarray
    y: np.ndarray

    def inner(self, u, v) -> float:
        return float(np.asarray(u) @ self.g @ np.asarray(v))


def _hessian_half_f2(S: FinslerStructure, x, y) -> np.ndarray:
    """y-Hessian of F^2/2 through order-2 jets in the fibre directions."""
    n = S.dimension
    space = jet_space(n, 2)
    xs = [float(v) for v in np.atleast_1d(x)]
    ys = [space.variable(i, float(v)) for i, v in enumerate(np.atleast_1d(y))]
    w = S.F2(xs, ys)
    g = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            alpha = [0] * n
            alpha[i] += 1
            alpha[j] += 1
            g[i, j] = g[j, i] = 0.5 * w.derivative(alpha)
    return g


def fundamental_tensor(S: FinslerStructure, x, y) -> FundamentalTensor:
    """Fundamental tensor g_ij = (F^2/2)_{y^i y^j}; raises if not positive definite."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if float(y @ y) == 0.0:
        raise EvaluationDomainError("fundamental tensor undefined at y = 0")
    if S.g_fast is not None:
        g = np.asarray(S.g_fast(x, y), dtype=float)
    else:
        g = _hessian_half_f2(S, x, y)
    eig = np.linalg.eigvalsh(g)
    if float(eig[0]) <= 0.0:
        raise StrongConvexityError(f"fundamental tensor not positive definite: min eig = {eig[0]:.3e}")
    g_inv = np.linalg.inv(g)
    resid = float(np.max(np.abs(g @ g_inv - np.eye(S.dimension))))
    if resid > 1e-10:
        raise StrongConvexityError(f"fundamental tensor too ill-conditioned: inverse residual {resid:.3e}")
    return FundamentalTensor(g=g, g_inv=g_inv, x=x, y=y)


@dataclass
class StructureValidation:
    """Sampled axiom checks for one structure."""

    family: str
    dimension: int
    samples: int
    seed: int
    homogeneity_residual: float
    min_hessian_eigenvalue: float
    positivity_ok: bool
    euler_residual: float
    g_homogeneity_residual: float
    reversible_observed: bool
    reversible_declared: bool
    passed: bool
    failures: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "dimension": self.dimension,
            "samples": self.samples,
            "seed": self.seed,
            "homogeneity_residual": self.homogeneity_residual,
            "min_hessian_eigenvalue": self.min_hessian_eigenvalue,
            "positivity_ok": self.positivity_ok,
            "euler_residual": self.euler_residual,
            "g_homogeneity_residual": self.g_homogeneity_residual,
            "reversible_observed": self.reversible_observed,
            "reversible_declared": self.reversible_declared,
            "passed": self.passed,
            "failures": list(self.failures),
        }


def validate_structure(S: FinslerStructure, samples: int = 100, seed: int = 0) -> StructureValidation:
    """Sampled check of positive 1-homogeneity, strong convexity and reversibility."""
    rng = np.random.default_rng(seed)
    lambdas = (0.5, 2.0, 10.0)
    worst_hom = 0.0
    worst_euler = 0.0
    worst_ghom = 0.0
    min_eig = np.inf
    positivity = True
    rev_dev = 0.0
    failures: list[str] = []
    for _ in range(samples):
        x = S.sample_point(rng)
        y = S.sample_direction(rng) * rng.uniform(0.5, 2.0)
        try:
            fval = float(S.F(x, y))
        except EvaluationDomainError:
            failures.append(f"F failed inside chart at x={x}")
            positivity = False
            continue
        if not np.isfinite(fval) or fval <= 0.0:
            positivity = False
            failures.append(f"F not positive at x={x}, y={y}")
            continue
        for lam in lambdas:
            scaled = float(S.F(x, lam * y))
            worst_hom = max(worst_hom, abs(scaled - lam * fval) / (lam * fval))
        g = _hessian_half_f2(S, x, y)
        eig = float(np.min(np.linalg.eigvalsh(g)))
        min_eig = min(min_eig, eig)
        # Euler: g_ij y^i y^j = F^2 for 1-homogeneous F
        euler = abs(float(y @ g @ y) - fval * fval) / (fval * fval)
        worst_euler = max(worst_euler, euler)
        g2 = _hessian_half_f2(S, x, 2.0 * y)
        worst_ghom = max(worst_ghom, float(np.max(np.abs(g2 - g))) / max(1.0, float(np.max(np.abs(g)))))
        rev = abs(float(S.F(x, -y)) - fval) / fval
        rev_dev = max(rev_dev, rev)
    reversible_observed = rev_dev <= 1e-9
    convex_ok = np.isfinite(min_eig) and min_eig > 0.0
    if not convex_ok:
        failures.append(f"fundamental tensor not positive definite: min eig {min_eig:.3e}")
    if worst_hom > 1e-10:
        failures.append(f"homogeneity residual {worst_hom:.3e} exceeds 1e-10")
    if reversible_observed != S.reversible:
        failures.append(
            f"reversibility mismatch: declared {S.reversible}, observed {reversible_observed}"
        )
    passed = positivity and convex_ok and worst_hom <= 1e-10 and reversible_observed == S.reversible
    return StructureValidation(
        family=S.family,
        dimension=S.dimension,
        samples=samples,
        seed=seed,
        homogeneity_residual=worst_hom,
        min_hessian_eigenvalue=float(min_eig if np.isfinite(min_eig) else np.nan),
        positivity_ok=positivity,
        euler_residual=worst_euler,
        g_homogeneity_residual=worst_ghom,
        reversible_observed=reversible_observed,
        reversible_declared=S.reversible,
        passed=passed,
        failures=failures,
    )
