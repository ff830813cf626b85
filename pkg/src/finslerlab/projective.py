"""Projective parameters, the interval Funk gauge and the pseudo-distance.

The pipeline: a unit-speed geodesic carries a projective parameter pi(s)
solving {pi, s} = (2/(n-1)) Ric_jk x'^j x'^k.  Reparameterizing geodesics
into the interval I = (-1, 1) and measuring parameter gaps with the Funk
gauge L_f = (|y| + u y) / (k (1 - u^2)) yields a chain length whose infimum
over chains is projectively invariant.  On Einstein structures with
Ric_ij = -c^2 g_ij the infimum is proportional to the Finslerian distance
with factor 2c / (sqrt(n-1) k), which theorem1_verify checks numerically.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .curvature import EinsteinReport, einstein_classify, ricci_scalar
from .errors import (
    CriticalPointError,
    DegenerateFitError,
    EvaluationDomainError,
    MalformedChainError,
    NotEinsteinError,
    PoleError,
)
from .geodesics import DistanceResult, Geodesic, finsler_distance, geodesic_ivp
from .jets import Jet, jet_exp, jet_space
from .metrics import FinslerStructure
from .ode import integrate_ivp


def schwarzian(f, t: float) -> float:
    """Schwarzian derivative {f, t} = f'''/f' - (3/2)(f''/f')^2.

    f must accept a scalar-like argument (order-3 jets are passed in).
    Moebius maps have Schwarzian zero, and {m o f, t} = {f, t}.
    """
    space = jet_space(1, 3)
    out = f(space.variable(0, float(t)))
    if not isinstance(out, Jet):
        raise ValueError("function must be evaluatable on jets")
    d1 = out.derivative((1,))
    d2 = out.derivative((2,))
    d3 = out.derivative((3,))
    if abs(d1) <= 1e-12:
        raise CriticalPointError(f"f'({t}) = {d1:.3e} is numerically zero")
    ratio = d2 / d1
    return d3 / d1 - 1.5 * ratio * ratio


@dataclass(frozen=True)
class FunkGauge:
    """Funk structure on the interval I = (-1, 1) with constant k > 0."""

    k: float = 1.0

    def __post_init__(self):
        if not self.k > 0:
            raise ValueError("gauge constant k must be positive")

    def metric_value(self, u: float, y: float) -> float:
        """L_f(u, y) = (|y| + u y) / (k (1 - u^2))."""
        if not -1.0 < u < 1.0:
            raise EvaluationDomainError(f"gauge point {u} outside (-1, 1)")
        return (abs(y) + u * y) / (self.k * (1.0 - u * u))


def funk_distance(gauge: FunkGauge, a: float, b: float) -> float:
    """Ordered Funk distance on I in closed form.

    D_f(a, b) = (1/2k) ( |ln ((1-a)(1+b) / ((1-b)(1+a)))| + ln ((1-a^2)/(1-b^2)) ).
    """
    for v in (a, b):
        if not -1.0 < v < 1.0:
            raise EvaluationDomainError(f"endpoint {v} outside (-1, 1)")
    cross = abs(math.log((1.0 - a) * (1.0 + b) / ((1.0 - b) * (1.0 + a))))
    sym = math.log((1.0 - a * a) / (1.0 - b * b))
    return (cross + sym) / (2.0 * gauge.k)


@dataclass
class ProjectiveParameter:
    """pi(s) on [0, L] from the linear reduction u'' + (q/2) u = 0.

    pi = u1/u2 with u1(0)=0, u1'(0)=1, u2(0)=1, u2'(0)=0, which makes pi
    increasing with pi(0)=0 and pi'(0)=1 (Wronskian is 1).
    """

    geodesic: Geodesic
    s: np.ndarray
    pi: np.ndarray
    q: np.ndarray
    einstein_j: float | None = None
    mobius: tuple | None = None
    mobius_residual: float | None = None

    def __call__(self, s):
        """Local degree-6 Lagrange interpolation; accepts floats or jets."""
        grid = self.s
        sval = s.value if isinstance(s, Jet) else float(s)
        i = int(np.searchsorted(grid, sval))
        lo = max(0, min(i - 3, len(grid) - 7))
        nodes = [float(t) for t in grid[lo : lo + 7]]
        # Newton form; only + and * so jets pass through
        coef = [float(v) for v in self.pi[lo : lo + 7]]
        for lev in range(1, 7):
            for m in range(6, lev - 1, -1):
                coef[m] = (coef[m] - coef[m - 1]) / (nodes[m] - nodes[m - lev])
        acc = coef[6]
        for m in range(5, -1, -1):
            acc = acc * (s - nodes[m]) + coef[m]
        return acc

    def schwarzian_residual(self) -> float:
        """max |{pi, s} - q(s)| over interior grid points."""
        worst = 0.0
        for i in range(3, len(self.s) - 3, max(1, len(self.s) // 64)):
            worst = max(worst, abs(schwarzian(self, float(self.s[i])) - float(self.q[i])))
        return worst


def projective_parameter(
    S: FinslerStructure,
    geodesic: Geodesic,
    tolerance: float = 1e-13,
    grid: int = 129,
    einstein_c: float | None = None,
    via: str = "auto",
) -> ProjectiveParameter:
    """Solve for the projective parameter along a unit-speed geodesic.

    q(s) = (2/(n-1)) Ric_jk x'^j x'^k.  Along a unit-speed geodesic the
    quadratic form collapses to the Ricci scalar: the trace R^k_k is
    2-homogeneous in y, so Ric_jk y^j y^k = R^k_k = F^2 Ric = Ric.  (The
    identity is exercised against the full tensor in the test-suite.)
    """
    n = S.dimension
    if n < 2:
        raise ValueError("projective parameters need dimension >= 2")
    L = abs(geodesic.length)

    def qfun(s: float) -> float:
        x = geodesic.x(s)
        v = geodesic.v(s)
        return (2.0 / (n - 1.0)) * ricci_scalar(S, x, v, via=via)

    def rhs(z):
        # z = (u1, u1', u2, u2', s); carrying s keeps the system autonomous
        q = qfun(min(max(z[4], 0.0), L))
        return np.array([z[1], -0.5 * q * z[0], z[3], -0.5 * q * z[2], 1.0])

    z0 = np.array([0.0, 1.0, 1.0, 0.0, 0.0])
    traj = integrate_ivp(rhs, z0, (0.0, L), tolerance=tolerance)
    svals = np.linspace(0.0, L, grid)
    states = traj(svals)
    u1 = states[:, 0]
    u2 = states[:, 2]
    if np.any(u2 <= 0.0):
        raise PoleError("u2 crossed zero: projective parameter has a pole in [0, L]")
    pi = u1 / u2
    if np.any(np.diff(pi) <= 0.0):
        raise PoleError("projective parameter is not strictly increasing")
    qgrid = np.array([qfun(float(s)) for s in svals])
    param = ProjectiveParameter(geodesic=geodesic, s=svals, pi=pi, q=qgrid)
    if einstein_c is not None:
        j = einstein_c / math.sqrt(n - 1.0)
        param.einstein_j = j
        base = np.exp(2.0 * j * svals)
        fit = mobius_fit(base, pi)
        param.mobius = fit.coefficients
        param.mobius_residual = fit.residual
    return param


@dataclass
class MobiusFit:
    coefficients: tuple  # (a, b, c, d) for z -> (a z + b) / (c z + d)
    residual: float

    def __call__(self, z):
        a, b, c, d = self.coefficients
        return (a * z + b) / (c * z + d)


def mobius_fit(pi1, pi2) -> MobiusFit:
    """Fit pi2 ~ m(pi1) across aligned samples; residual is the max deviation.

    Three anchor samples pin the map (via the nullspace of the incidence
    system), the rest measure the residual.
    """
    pi1 = np.asarray(pi1, dtype=float)
    pi2 = np.asarray(pi2, dtype=float)
    if pi1.shape != pi2.shape or pi1.size < 4:
        raise ValueError("need at least four aligned samples")
    if not (np.all(np.diff(pi1) > 0) or np.all(np.diff(pi1) < 0)):
        raise ValueError("pi1 samples must be strictly monotone")
    idx = [0, pi1.size // 2, pi1.size - 1]
    rows = []
    for i in idx:
        z, w = pi1[i], pi2[i]
        rows.append([z, 1.0, -z * w, -w])
    _, sing, vt = np.linalg.svd(np.asarray(rows))
    if sing[2] < 1e-12 * max(sing[0], 1.0):
        raise DegenerateFitError("anchor samples do not determine a Moebius map")
    a, b, c, d = vt[-1]
    det = a * d - b * c
    if abs(det) < 1e-14 * max(1.0, a * a + b * b + c * c + d * d):
        raise DegenerateFitError("fitted Moebius map is singular")
    denom = c * pi1 + d
    if np.any(np.abs(denom) < 1e-12):
        raise DegenerateFitError("fitted Moebius map has a pole among the samples")
    pred = (a * pi1 + b) / denom
    residual = float(np.max(np.abs(pred - pi2)))
    return MobiusFit(coefficients=(float(a), float(b), float(c), float(d)), residual=residual)


@dataclass
class GeodesicProjectiveMap:
    """Projective map f: (subinterval of) I -> M along a unit-speed geodesic.

    The canonical parameter is pi0(s) = 1 - exp(-2 j s), composed with an
    orientation-preserving Moebius map m; f(t) = geodesic.x(s(t)) with
    s(t) = pi0^{-1}(m^{-1}(t)).  {pi0, s} = -2 j^2, and Moebius composition
    leaves the Schwarzian untouched, so these stay projective parameters.
    """

    geodesic: Geodesic
    j: float
    mobius: tuple = (1.0, 0.0, 0.0, 1.0)

    def parameter(self, s: float) -> float:
        # jet_exp keeps the map evaluatable by schwarzian(), which feeds jets
        w = 1.0 - jet_exp(-2.0 * self.j * s)
        a, b, c, d = self.mobius
        return (a * w + b) / (c * w + d)

    def arc_of(self, t: float) -> float:
        a, b, c, d = self.mobius
        w = (d * t - b) / (-c * t + a)
        if w >= 1.0:
            raise EvaluationDomainError(f"parameter {t} beyond the forward range")
        return -math.log(1.0 - w) / (2.0 * self.j)

    def point(self, t: float) -> np.ndarray:
        return self.geodesic.x(self.arc_of(t))

    def interval(self) -> tuple[float, float]:
        return self.parameter(0.0), self.parameter(abs(self.geodesic.length))


def canonical_projective_map(
    S: FinslerStructure, geodesic: Geodesic, c: float
) -> tuple[GeodesicProjectiveMap, tuple[float, float]]:
    """Canonical map for an Einstein structure: pi(s) = 1 - exp(-2 j s).

    Maps [0, L] into [0, 1 - exp(-2 j L)) inside I, with f(0) the start
    point; j = c / sqrt(n - 1).
    """
    if c is None or not np.isfinite(c) or c <= 0.0:
        raise NotEinsteinError("canonical map needs a verified Einstein constant c > 0")
    n = S.dimension
    if n < 2:
        raise ValueError("canonical map needs dimension >= 2")
    j = c / math.sqrt(n - 1.0)
    pmap = GeodesicProjectiveMap(geodesic=geodesic, j=j)
    return pmap, pmap.interval()


@dataclass
class NumericalProjectiveMap:
    """Projective map built from a numerically solved parameter.

    Used when no Einstein constant is available.  The default Moebius
    renormalization w -> w / (w + 1) squeezes the forward image into [0, 1)
    whatever the span of pi, keeping the map inside I.
    """

    parameterization: ProjectiveParameter
    mobius: tuple = (1.0, 0.0, 1.0, 1.0)

    @property
    def geodesic(self) -> Geodesic:
        return self.parameterization.geodesic

    def parameter(self, s: float) -> float:
        w = float(self.parameterization(s))
        a, b, c, d = self.mobius
        return (a * w + b) / (c * w + d)

    def arc_of(self, t: float) -> float:
        a, b, c, d = self.mobius
        w = (d * t - b) / (-c * t + a)
        grid = self.parameterization.pi
        if w <= grid[0]:
            return float(self.parameterization.s[0])
        if w >= grid[-1]:
            return float(self.parameterization.s[-1])
        return float(np.interp(w, grid, self.parameterization.s))

    def point(self, t: float) -> np.ndarray:
        return self.geodesic.x(self.arc_of(t))

    def interval(self) -> tuple[float, float]:
        s = self.parameterization.s
        return self.parameter(float(s[0])), self.parameter(float(s[-1]))


def _segment_for(S: FinslerStructure, geodesic: Geodesic, c: float | None):
    """Projective map plus endpoint parameters for one geodesic leg."""
    if c is not None:
        pmap, (t0, t1) = canonical_projective_map(S, geodesic, c)
        return pmap, t0, t1
    param = projective_parameter(S, geodesic)
    pmap = NumericalProjectiveMap(parameterization=param)
    t0, t1 = pmap.interval()
    return pmap, t0, t1


@dataclass
class ChainSegment:
    pmap: GeodesicProjectiveMap | NumericalProjectiveMap
    a: float
    b: float


@dataclass
class Chain:
    points: list
    segments: list

    @property
    def legs(self) -> int:
        return len(self.segments)


def chain_length(gauge: FunkGauge, chain: Chain, stitch_tolerance: float = 1e-8) -> float:
    """Sum of Funk gaps over the segments, after validating the stitching."""
    if len(chain.points) != len(chain.segments) + 1:
        raise MalformedChainError("chain needs one more point than segments")
    total = 0.0
    for i, seg in enumerate(chain.segments):
        start = np.asarray(chain.points[i], dtype=float)
        end = np.asarray(chain.points[i + 1], dtype=float)
        fa = seg.pmap.point(seg.a)
        fb = seg.pmap.point(seg.b)
        if float(np.max(np.abs(fa - start))) > stitch_tolerance:
            raise MalformedChainError(f"segment {i} does not start at x_{i}")
        if float(np.max(np.abs(fb - end))) > stitch_tolerance:
            raise MalformedChainError(f"segment {i} does not end at x_{i + 1}")
        total += funk_distance(gauge, seg.a, seg.b)
    return float(total)


def build_canonical_chain(
    S: FinslerStructure,
    gauge: FunkGauge,
    points,
    c: float | None,
    *,
    distance_kwargs: dict | None = None,
) -> Chain:
    """Chain through the given points, one projective segment per leg.

    Legs use the canonical exponential map when c is given and the
    numerically solved parameter otherwise.
    """
    distance_kwargs = distance_kwargs or {}
    pts = [np.atleast_1d(np.asarray(p, dtype=float)) for p in points]
    if len(pts) < 2:
        raise MalformedChainError("a chain needs at least two points")
    segments = []
    for i in range(len(pts) - 1):
        res = finsler_distance(S, pts[i], pts[i + 1], **distance_kwargs)
        if res.geodesic is None:
            raise MalformedChainError("degenerate leg: identical consecutive points")
        pmap, t0, t1 = _segment_for(S, res.geodesic, c)
        segments.append(ChainSegment(pmap=pmap, a=t0, b=t1))
    return Chain(points=pts, segments=segments)


@dataclass
class Lemma2Result:
    ok: bool
    margin: float
    funk_gap: float
    finsler_gap: float


def lemma2_check(
    S: FinslerStructure,
    gauge: FunkGauge,
    pmap: GeodesicProjectiveMap,
    a: float,
    b: float,
    factor: float,
    slack: float = 1e-6,
) -> Lemma2Result:
    """Check D_f(a, b) >= factor * d_F(f(a), f(b)) for a projective map.

    The Finslerian gap is the arc-length difference along the host geodesic,
    which realizes the distance on these uniquely-geodesic ball charts.
    """
    if not b > a:
        raise ValueError("need b > a")
    d_funk = funk_distance(gauge, a, b)
    s_a = pmap.arc_of(a)
    s_b = pmap.arc_of(b)
    d_fins = s_b - s_a
    if d_fins < 0:
        raise ValueError("map is orientation reversing on [a, b]")
    margin = d_funk - factor * d_fins
    return Lemma2Result(ok=margin >= -slack, margin=float(margin), funk_gap=float(d_funk), finsler_gap=float(d_fins))


@dataclass
class PseudoDistanceResult:
    d_finsler: float
    canonical_length: float
    theoretical: float | None
    theoretical_available: bool
    best_random_chain: float | None
    discrepancy: float | None
    distance: DistanceResult
    einstein: EinsteinReport

    def to_dict(self) -> dict:
        return {
            "d_finsler": self.d_finsler,
            "canonical_length": self.canonical_length,
            "theoretical": self.theoretical,
            "theoretical_available": self.theoretical_available,
            "best_random_chain": self.best_random_chain,
            "discrepancy": self.discrepancy,
        }


def pseudo_distance(
    S: FinslerStructure,
    p,
    q,
    gauge: FunkGauge,
    *,
    einstein: EinsteinReport | None = None,
    random_chains: int = 0,
    max_intermediate: int = 2,
    seed: int = 0,
    classify_samples: int = 6,
    distance_kwargs: dict | None = None,
) -> PseudoDistanceResult:
    """Upper bound for the projectively invariant pseudo-distance d_M(p, q).

    A single-segment chain gives the bound: canonical on Einstein structures
    (where it matches the theoretical value factor * d_F), built from the
    numerically solved parameter otherwise (upper bound only, flagged via
    theoretical_available).  Optional random multi-segment chains probe the
    infimum from above.
    """
    distance_kwargs = distance_kwargs or {}
    if einstein is None:
        einstein = einstein_classify(S, x_samples=classify_samples, seed=seed)
    c = einstein.einstein_constant_c
    n = S.dimension
    factor = None if c is None else 2.0 * c / (math.sqrt(n - 1.0) * gauge.k)
    res = finsler_distance(S, p, q, **distance_kwargs)
    if res.geodesic is None:
        return PseudoDistanceResult(
            d_finsler=0.0,
            canonical_length=0.0,
            theoretical=0.0 if c is not None else None,
            theoretical_available=c is not None,
            best_random_chain=None,
            discrepancy=0.0 if c is not None else None,
            distance=res,
            einstein=einstein,
        )
    pmap, t0, t1 = _segment_for(S, res.geodesic, c)
    bound = funk_distance(gauge, t0, t1)
    theoretical = None if factor is None else factor * res.distance
    best_random = None
    if random_chains > 0:
        rng = np.random.default_rng(seed)
        p_arr = np.atleast_1d(np.asarray(p, dtype=float))
        q_arr = np.atleast_1d(np.asarray(q, dtype=float))
        best_random = math.inf
        for _ in range(random_chains):
            kmid = int(rng.integers(1, max_intermediate + 1))
            pts = [p_arr]
            for _ in range(kmid):
                pts.append(S.sample_point(rng, 0.8 * S.sampling_radius))
            pts.append(q_arr)
            try:
                chain = build_canonical_chain(
                    S, gauge, pts, c, distance_kwargs=distance_kwargs
                )
                best_random = min(best_random, chain_length(gauge, chain))
            except (MalformedChainError, EvaluationDomainError, PoleError):
                continue
        if not np.isfinite(best_random):
            best_random = None
    discrepancy = None
    if theoretical is not None:
        discrepancy = abs(bound - theoretical) / max(theoretical, 1e-300)
    return PseudoDistanceResult(
        d_finsler=res.distance,
        canonical_length=bound,
        theoretical=theoretical,
        theoretical_available=theoretical is not None,
        best_random_chain=best_random,
        discrepancy=discrepancy,
        distance=res,
        einstein=einstein,
    )


@dataclass
class ProjectiveRelation:
    """Sampled comparison of two sprays on a shared chart."""

    related: bool
    homothetic: bool
    scale_ratio: float | None
    factor_samples: list
    quotient_spread: float
    samples: int
    seed: int

    def to_dict(self) -> dict:
        return {
            "related": self.related,
            "homothetic": self.homothetic,
            "scale_ratio": self.scale_ratio,
            "quotient_spread": self.quotient_spread,
            "samples": self.samples,
            "seed": self.seed,
        }


def projective_relation(
    A: FinslerStructure,
    B: FinslerStructure,
    samples: int = 40,
    seed: int = 0,
    tolerance: float = 1e-6,
) -> ProjectiveRelation:
    """Are the sprays related by G_B = G_A + P y (same unparameterized geodesics)?

    Tests the per-component quotients (G_B - G_A)^i / y^i for agreement, with
    y sampled away from the coordinate planes.  Homothety additionally needs
    a constant ratio F_B / F_A.
    """
    from .geodesics import spray_coefficients

    if A.dimension != B.dimension:
        raise ValueError("structures live on different chart dimensions")
    n = A.dimension
    rng = np.random.default_rng(seed)
    radius = 0.8 * min(A.sampling_radius, B.sampling_radius)
    related = True
    spread = 0.0
    factors = []
    ratios = []
    for _ in range(samples):
        x = A.sample_point(rng, radius)
        while True:
            y = A.sample_direction(rng)
            if float(np.min(np.abs(y))) > 0.15 / math.sqrt(n):
                break
        Ga = spray_coefficients(A, x, y)
        Gb = spray_coefficients(B, x, y)
        quot = (Gb - Ga) / y
        scale = max(1.0, float(np.max(np.abs(quot))))
        dev = float(quot.max() - quot.min())
        spread = max(spread, dev / scale)
        if dev > tolerance * scale:
            related = False
        factors.append(float(quot.mean()))
        ratios.append(float(B.F(x, y)) / float(A.F(x, y)))
    ratios = np.asarray(ratios)
    ratio_spread = float(ratios.max() - ratios.min())
    homothetic = related and ratio_spread <= 1e-8 * max(1.0, float(ratios.mean()))
    return ProjectiveRelation(
        related=related,
        homothetic=homothetic,
        scale_ratio=float(ratios.mean()) if homothetic else None,
        factor_samples=factors,
        quotient_spread=spread,
        samples=samples,
        seed=seed,
    )


@dataclass
class Theorem1Report:
    family: str
    dimension: int
    gauge_k: float
    c: float
    factor: float
    pair_count: int
    seed: int
    tolerance: float
    max_discrepancy: float
    min_lemma2_margin: float
    passed: bool
    records: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "summary": {
                "family": self.family,
                "dimension": self.dimension,
                "gauge_k": self.gauge_k,
                "c": self.c,
                "factor": self.factor,
                "pair_count": self.pair_count,
                "seed": self.seed,
                "tolerance": self.tolerance,
                "max_discrepancy": self.max_discrepancy,
                "min_lemma2_margin": self.min_lemma2_margin,
                "passed": self.passed,
            },
            "pairs": self.records,
        }


def theorem1_verify(
    S: FinslerStructure,
    gauge: FunkGauge,
    pairs: int = 20,
    seed: int = 0,
    tolerance: float = 1e-4,
    *,
    einstein: EinsteinReport | None = None,
    threads: int = 1,
    radius: float = 0.7,
    min_separation: float = 0.05,
    classify_samples: int = 6,
    distance_kwargs: dict | None = None,
) -> Theorem1Report:
    """Numerical check of d_M = (2c / (sqrt(n-1) k)) d_F over sampled pairs.

    Pairs are ordered (forward-oriented), which keeps positively complete
    non-reversible structures inside their forward geodesic range.
    """
    if einstein is None:
        einstein = einstein_classify(S, x_samples=classify_samples, seed=seed)
    c = einstein.einstein_constant_c
    if c is None:
        raise NotEinsteinError(
            "theorem verification requires the Einstein normal form Ric_ij = -c^2 g_ij"
        )
    n = S.dimension
    factor = 2.0 * c / (math.sqrt(n - 1.0) * gauge.k)
    rng = np.random.default_rng(seed)
    pair_list = []
    while len(pair_list) < pairs:
        p = S.sample_point(rng, radius)
        q = S.sample_point(rng, radius)
        if float(np.linalg.norm(q - p)) >= min_separation:
            pair_list.append((p, q))
    dk = distance_kwargs or {}

    def run_pair(pq):
        p, q = pq
        res = finsler_distance(S, p, q, **dk)
        pmap, (t0, t1) = canonical_projective_map(S, res.geodesic, c)
        canonical = funk_distance(gauge, t0, t1)
        theoretical = factor * res.distance
        disc = abs(canonical - theoretical) / max(theoretical, 1e-300)
        full = lemma2_check(S, gauge, pmap, t0, t1, factor)
        L = res.distance
        s1, s2 = 0.25 * L, 0.75 * L
        sub = lemma2_check(
            S, gauge, pmap, pmap.parameter(s1), pmap.parameter(s2), factor
        )
        return {
            "p": [float(v) for v in p],
            "q": [float(v) for v in q],
            "d_F": float(res.distance),
            "d_M_theoretical": float(theoretical),
            "d_M_canonical": float(canonical),
            "discrepancy": float(disc),
            "lemma2_margin": float(min(full.margin, sub.margin)),
        }

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            records = list(pool.map(run_pair, pair_list))
    else:
        records = [run_pair(pq) for pq in pair_list]

    max_disc = max(r["discrepancy"] for r in records)
    min_margin = min(r["lemma2_margin"] for r in records)
    return Theorem1Report(
        family=S.family,
        dimension=n,
        gauge_k=gauge.k,
        c=c,
        factor=factor,
        pair_count=pairs,
        seed=seed,
        tolerance=tolerance,
        max_discrepancy=float(max_disc),
        min_lemma2_margin=float(min_margin),
        passed=bool(max_disc <= tolerance and min_margin >= -1e-6),
        records=records,
    )
