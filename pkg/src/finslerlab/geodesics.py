"""Spray coefficients, geodesic initial/boundary value solving, path length.

The spray is always available through the jet engine from F^2 alone;
families that carry a closed-form fast path (Christoffel contraction for
Riemannian tables, projective factors for the ball models) use it for
integration speed, and the two routes are required to agree.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicSpline
from scipy.optimize import minimize, minimize_scalar

from .errors import DomainExitError, EvaluationDomainError, SearchFailureError
from .jets import Jet, jet_space
from .metrics import FinslerStructure, invert_scalarlike_matrix
from .ode import OdeTrajectory, integrate_ivp


def phase_jet_args(S: FinslerStructure, x, y, order: int):
    """Jets for (x + xi, y + eta): seeds 0..n-1 are base, n..2n-1 are fibre."""
    n = S.dimension
    space = jet_space(2 * n, order)
    xj = [space.variable(i, float(v)) for i, v in enumerate(np.atleast_1d(x))]
    yj = [space.variable(n + i, float(v)) for i, v in enumerate(np.atleast_1d(y))]
    return space, xj, yj


def spray_from_f2_jets(S: FinslerStructure, xj, yj):
    """G^i as jets, two orders below the F^2 jet, via the defining formula.

    G^i = (1/4) g^{il} { [F^2]_{x^k y^l} y^k - [F^2]_{x^l} }.
    """
    n = S.dimension
    w = S.F2(xj, yj)
    wx = [w.partial(l) for l in range(n)]
    g = [[0.5 * w.partial(n + i).partial(n + j) for j in range(n)] for i in range(n)]
    ginv = invert_scalarlike_matrix(g)
    b = []
    for l in range(n):
        acc = wx[0].partial(n + l) * yj[0]
        for k in range(1, n):
            acc = acc + wx[k].partial(n + l) * yj[k]
        b.append(acc - wx[l])
    out = []
    for i in range(n):
        acc = ginv[i][0] * b[0]
        for l in range(1, n):
            acc = acc + ginv[i][l] * b[l]
        out.append(0.25 * acc)
    return out


def spray_coefficients(S: FinslerStructure, x, y) -> np.ndarray:
    """Spray values G^i(x, y) from the jet-engine formula."""
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if float(y @ y) == 0.0:
        raise EvaluationDomainError("spray undefined at y = 0")
    _, xj, yj = phase_jet_args(S, x, y, 2)
    G = spray_from_f2_jets(S, xj, yj)
    return np.array([gi.value for gi in G])


def spray_jet_functions(S: FinslerStructure, x, y, g_order: int, via: str = "auto"):
    """G^i as jets of total order `g_order` over the 2n phase seeds."""
    if via not in ("auto", "fast", "f2"):
        raise ValueError("via must be auto, fast or f2")
    use_fast = S.spray_fast is not None and via in ("auto", "fast")
    if via == "fast" and S.spray_fast is None:
        raise ValueError(f"family {S.family} has no closed-form spray")
    if use_fast:
        _, xj, yj = phase_jet_args(S, x, y, g_order)
        return list(S.spray_fast(xj, yj))
    _, xj, yj = phase_jet_args(S, x, y, g_order + 2)
    return spray_from_f2_jets(S, xj, yj)


@dataclass
class SprayField:
    """Callable spray evaluator for one structure."""

    structure: FinslerStructure
    via: str = "auto"

    def __call__(self, x, y) -> np.ndarray:
        S = self.structure
        if self.via in ("auto", "fast") and S.spray_fast is not None:
            y = np.atleast_1d(np.asarray(y, dtype=float))
            if float(y @ y) == 0.0:
                raise EvaluationDomainError("spray undefined at y = 0")
            return np.asarray(
                [float(v) for v in S.spray_fast(np.atleast_1d(np.asarray(x, dtype=float)), y)]
            )
        return spray_coefficients(S, x, y)


def _spray_values(S: FinslerStructure, x, y) -> np.ndarray:
    if S.spray_fast is not None:
        return np.asarray([float(v) for v in S.spray_fast(x, y)])
    return spray_coefficients(S, x, y)


@dataclass
class Geodesic:
    """Unit-speed geodesic wrapped around a phase-space trajectory.

    For backward runs (length < 0) the trajectory parameter is |s| and the
    exposed arc length s runs negative.
    """

    structure: FinslerStructure
    trajectory: OdeTrajectory
    length: float
    x0: np.ndarray
    v0: np.ndarray
    backward: bool = False

    @property
    def n(self) -> int:
        return self.structure.dimension

    def _param(self, s: float) -> float:
        return -s if self.backward else s

    def state(self, s):
        return self.trajectory(self._param(s))

    def x(self, s) -> np.ndarray:
        return self.state(s)[: self.n]

    def v(self, s) -> np.ndarray:
        vel = self.state(s)[self.n :]
        return -vel if self.backward else vel

    @property
    def s_grid(self) -> np.ndarray:
        sign = -1.0 if self.backward else 1.0
        return sign * self.trajectory.ts

    def unit_speed_residual(self) -> float:
        worst = 0.0
        for state in self.trajectory.states:
            f = float(self.structure.F(state[: self.n], state[self.n :]))
            worst = max(worst, abs(f - 1.0))
        return worst

    def write_csv(self, fh) -> None:
        n = self.n
        writer = csv.writer(fh)
        writer.writerow(
            ["s"] + [f"x{i+1}" for i in range(n)] + [f"y{i+1}" for i in range(n)] + ["F_residual"]
        )
        sign = -1.0 if self.backward else 1.0
        for t, state in zip(self.trajectory.ts, self.trajectory.states):
            xx = state[:n]
            vv = sign * state[n:]
            resid = float(self.structure.F(xx, sign * vv)) - 1.0
            writer.writerow(
                [repr(float(sign * t))]
                + [repr(float(v)) for v in xx]
                + [repr(float(v)) for v in vv]
                + [repr(resid)]
            )

    def resample_csv(self, fh, step: float) -> None:
        n = self.n
        writer = csv.writer(fh)
        writer.writerow(
            ["s"] + [f"x{i+1}" for i in range(n)] + [f"y{i+1}" for i in range(n)] + ["F_residual"]
        )
        total = abs(self.length)
        count = max(2, int(math.floor(total / step)) + 1)
        svals = [min(i * step, total) for i in range(count)]
        if svals[-1] < total:
            svals.append(total)
        sign = -1.0 if self.backward else 1.0
        for sv in svals:
            s = sign * sv
            xx = self.x(s)
            vv = self.v(s)
            resid = float(self.structure.F(xx, vv)) - 1.0
            writer.writerow(
                [repr(float(s))]
                + [repr(float(v)) for v in xx]
                + [repr(float(v)) for v in vv]
                + [repr(resid)]
            )


def geodesic_ivp(
    S: FinslerStructure, x0, y0, length: float, tolerance: float = 1e-10
) -> Geodesic:
    """Integrate the geodesic ODE x'' + 2G(x, x') = 0 at unit speed.

    y0 is rescaled so that F(x0, y0) = 1.  Negative length integrates the
    backward extension; leaving the chart raises DomainExitError with the
    exit arc length.
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    y0 = np.atleast_1d(np.asarray(y0, dtype=float))
    n = S.dimension
    if not S.domain(x0):
        raise EvaluationDomainError(f"start point outside the chart: {x0}")
    if float(y0 @ y0) == 0.0:
        raise EvaluationDomainError("zero initial direction")
    if length == 0.0:
        raise ValueError("length must be nonzero")
    f0 = float(S.F(x0, y0))
    v0 = y0 / f0
    backward = length < 0.0

    if backward:
        def rhs(z):
            x, v = z[:n], z[n:]
            return np.concatenate((-v, 2.0 * _spray_values(S, x, v)))
    else:
        def rhs(z):
            x, v = z[:n], z[n:]
            return np.concatenate((v, -2.0 * _spray_values(S, x, v)))

    z0 = np.concatenate((x0, v0))
    span = (0.0, abs(length))

    def in_domain(z):
        return S.domain(z[:n])

    try:
        traj = integrate_ivp(rhs, z0, span, tolerance=tolerance, domain=in_domain)
    except DomainExitError as exc:
        sign = -1.0 if backward else 1.0
        exc.t_exit = sign * exc.t_exit if exc.t_exit is not None else None
        raise
    return Geodesic(
        structure=S, trajectory=traj, length=length, x0=x0, v0=v0, backward=backward
    )


@dataclass
class DistanceResult:
    distance: float
    geodesic: Geodesic | None
    diagnostics: dict = field(default_factory=dict)


def path_length(S: FinslerStructure, points, params=None, interpolation: str = "cubic") -> float:
    """Finslerian length of a sampled path by adaptive quadrature.

    interpolation is "cubic" (natural spline through the samples) or
    "linear" (polyline; each straight segment integrated separately, which
    avoids smoothing corners of competitor paths).
    """
    if isinstance(points, Geodesic):
        geo = points
        total = abs(geo.length)
        val, _ = quad(
            lambda t: float(S.F(geo.trajectory(t)[: geo.n], geo.trajectory(t)[geo.n :])),
            0.0,
            total,
            epsabs=1e-12,
            epsrel=1e-12,
            limit=400,
        )
        return float(val)
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2:
        raise ValueError("points must be a (k, n) array")
    k = pts.shape[0]
    if k < 2:
        raise ValueError("need at least two samples")
    for row in pts:
        if not S.domain(row):
            raise EvaluationDomainError(f"path sample outside the chart: {row}")
    if params is None:
        params = np.arange(k, dtype=float)
    else:
        params = np.asarray(params, dtype=float)
        if params.shape != (k,) or np.any(np.diff(params) <= 0):
            raise ValueError("params must be strictly increasing and match samples")
    if interpolation == "linear":
        total = 0.0
        for i in range(k - 1):
            a, b = pts[i], pts[i + 1]
            d = b - a
            seg, _ = quad(
                lambda t: float(S.F(a + t * d, d)), 0.0, 1.0, epsabs=1e-12, epsrel=1e-12, limit=200
            )
            total += seg
        return float(total)
    if interpolation != "cubic":
        raise ValueError("interpolation must be 'cubic' or 'linear'")
    spline = CubicSpline(params, pts, axis=0)
    dspline = spline.derivative()
    total = 0.0
    for i in range(k - 1):
        seg, _ = quad(
            lambda t: float(S.F(spline(t), dspline(t))),
            params[i],
            params[i + 1],
            epsabs=1e-12,
            epsrel=1e-12,
            limit=200,
        )
        total += seg
    return float(total)


# ----- boundary value problem -----------------------------------------------


def _closest_approach(traj: OdeTrajectory, q: np.ndarray, n: int):
    """Arc parameter of the closest dense-output approach to q."""
    d2 = np.sum((traj.states[:, :n] - q) ** 2, axis=1)
    i = int(np.argmin(d2))
    lo = traj.ts[max(0, i - 1)]
    hi = traj.ts[min(len(traj.ts) - 1, i + 1)]
    if hi <= lo:
        return float(traj.ts[i]), float(math.sqrt(d2[i]))
    res = minimize_scalar(
        lambda s: float(np.sum((traj(s)[:n] - q) ** 2)),
        bounds=(lo, hi),
        method="bounded",
        options={"xatol": 1e-13},
    )
    s_star = float(res.x)
    miss = float(math.sqrt(max(0.0, res.fun)))
    if d2[i] < res.fun:
        return float(traj.ts[i]), float(math.sqrt(d2[i]))
    return s_star, miss


def _unit_against_F(S, p, v):
    f = float(S.F(p, v))
    return v / f


def _integrate_shot(S, p, v, s_max, tol):
    n = S.dimension

    def rhs(z):
        return np.concatenate((z[n:], -2.0 * _spray_values(S, z[:n], z[n:])))

    z0 = np.concatenate((p, v))
    return integrate_ivp(rhs, z0, (0.0, s_max), tolerance=tol, domain=lambda z: S.domain(z[:n]))


def _shoot_miss(S, p, v, q, s_max, tol):
    """(s*, miss, trajectory); a domain exit counts as a failed shot."""
    try:
        traj = _integrate_shot(S, p, v, s_max, tol)
    except DomainExitError:
        return None
    s_star, miss = _closest_approach(traj, q, S.dimension)
    return s_star, miss, traj


def _direction_basis(p_dim: int, d0: np.ndarray) -> np.ndarray:
    """Orthonormal complement of d0, columns spanning the search space."""
    mat = np.eye(p_dim)
    qmat, _ = np.linalg.qr(np.column_stack([d0] + [mat[:, i] for i in range(p_dim)]))
    return qmat[:, 1:p_dim]


def _newton_polish(S, p, d0, basis, s0, q, tol_int, max_iter=25):
    """Square-system Newton on (direction offsets, arc length) -> x(s) - q."""
    n = S.dimension
    m = n - 1
    u = np.zeros(m)
    s = s0

    def endpoint(u_loc, s_loc):
        if s_loc <= 0.0:
            return None
        v = d0 + basis @ u_loc if m else d0.copy()
        nv = np.linalg.norm(v)
        if nv < 1e-10:
            return None
        v = _unit_against_F(S, p, v)
        try:
            traj = _integrate_shot(S, p, v, s_loc, tol_int)
        except DomainExitError:
            return None
        z = traj(s_loc)
        return z[:n], z[n:]

    cur = endpoint(u, s)
    if cur is None:
        return None
    r = cur[0] - q
    best = float(np.max(np.abs(r)))
    iters = 0
    for _ in range(max_iter):
        if best <= 1e-12:
            break
        J = np.empty((n, n))
        h = 1e-7
        for a in range(m):
            up = u.copy()
            up[a] += h
            um = u.copy()
            um[a] -= h
            ep = endpoint(up, s)
            em = endpoint(um, s)
            if ep is None or em is None:
                return None
            J[:, a] = (ep[0] - em[0]) / (2.0 * h)
        J[:, n - 1] = cur[1]
        try:
            delta = np.linalg.solve(J, r)
        except np.linalg.LinAlgError:
            return None
        step = 1.0
        for _ in range(8):
            u_new = u - step * delta[:m]
            s_new = s - step * delta[n - 1]
            cand = endpoint(u_new, s_new)
            if cand is not None:
                r_new = cand[0] - q
                if float(np.max(np.abs(r_new))) < best:
                    u, s, cur, r = u_new, s_new, cand, r_new
                    best = float(np.max(np.abs(r_new)))
                    break
            step *= 0.5
        else:
            break
        iters += 1
    v = d0 + basis @ u if m else d0.copy()
    v = _unit_against_F(S, p, v)
    return v, s, best, iters


def _golden_section(fun, lo, hi, iters=60):
    phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - phi * (b - a)
    d = a + phi * (b - a)
    fc, fd = fun(c), fun(d)
    for _ in range(iters):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - phi * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + phi * (b - a)
            fd = fun(d)
        if b - a < 1e-12:
            break
    return 0.5 * (a + b)


def finsler_distance(
    S: FinslerStructure,
    p,
    q,
    *,
    starts: int = 12,
    miss_tolerance: float = 1e-8,
    integration_tolerance: float = 1e-10,
    seed: int = 0,
) -> DistanceResult:
    """Ordered Finslerian distance d_F(p, q) by geodesic shooting.

    Multi-start over initial directions (the chord first, then a spread over
    the indicatrix), derivative-free refinement of the squared miss
    (golden-section in dimension 2, Nelder-Mead above) and a final Newton
    polish of the endpoint map.  The infimum over joining curves is realized
    by the best connecting geodesic on these convex ball charts.
    """
    p = np.atleast_1d(np.asarray(p, dtype=float))
    q = np.atleast_1d(np.asarray(q, dtype=float))
    n = S.dimension
    if not S.domain(p) or not S.domain(q):
        raise EvaluationDomainError("endpoints must lie inside the chart")
    if float(np.max(np.abs(q - p))) < 1e-14:
        return DistanceResult(0.0, None, {"trivial": True})

    if n == 1:
        return _distance_dim1(S, p, q, integration_tolerance)

    chord = q - p
    chord_dir = _unit_against_F(S, p, chord)
    chord_len = path_length(S, np.stack([p, q]), interpolation="linear")
    s_max = 1.05 * chord_len + 0.05

    rng = np.random.default_rng(seed)
    candidates = [chord_dir]
    if n == 2:
        base_angle = math.atan2(chord_dir[1], chord_dir[0])
        for i in range(max(starts, 8)):
            ang = base_angle + 2.0 * math.pi * (i + 1) / (starts + 1)
            candidates.append(_unit_against_F(S, p, np.array([math.cos(ang), math.sin(ang)])))
    else:
        for _ in range(max(starts, 8)):
            v = rng.standard_normal(n)
            candidates.append(_unit_against_F(S, p, v))

    coarse = []
    for idx, v in enumerate(candidates):
        shot = _shoot_miss(S, p, v, q, s_max, 1e-8)
        if shot is not None:
            coarse.append((shot[1], idx, v, shot[0]))
    if not coarse:
        raise SearchFailureError("all shooting starts left the domain")
    coarse.sort(key=lambda item: item[0])

    hits = []
    spacing = 2.0 * math.pi / (starts + 1)
    tried = 0
    for miss0, idx, v, s0 in coarse:
        if tried >= 3 and hits:
            break
        tried += 1
        refined_v, refined_s = v, s0
        if miss0 > 1e-10:
            refined_v, refined_s = _refine_direction(
                S, p, q, v, s_max, spacing, n, miss0, integration_tolerance
            )
        basis = _direction_basis(n, refined_v)
        polished = _newton_polish(S, p, refined_v, basis, refined_s, q, integration_tolerance)
        if polished is None:
            continue
        v_fin, s_fin, miss_fin, iters = polished
        if miss_fin <= miss_tolerance and s_fin > 0:
            hits.append((s_fin, v_fin, miss_fin, iters))
            if S.unique_geodesics:
                break
    if not hits:
        raise SearchFailureError(
            f"no connecting geodesic found from {p} to {q} (best miss {coarse[0][0]:.3e})"
        )
    hits.sort(key=lambda item: item[0])
    s_best, v_best, miss_best, iters = hits[0]
    geo = geodesic_ivp(S, p, v_best, s_best, tolerance=1e-11)
    return DistanceResult(
        float(s_best),
        geo,
        {
            "miss": miss_best,
            "starts": len(candidates),
            "newton_iterations": iters,
            "candidates_polished": tried,
        },
    )


def _refine_direction(S, p, q, v, s_max, spacing, n, miss0, tol_int):
    """Golden-section (n=2) or Nelder-Mead (n>=3) on the squared miss."""
    best_state = {"s": None}

    if n == 2:
        ang0 = math.atan2(v[1], v[0])

        def fun(ang):
            d = np.array([math.cos(ang), math.sin(ang)])
            shot = _shoot_miss(S, p, _unit_against_F(S, p, d), q, s_max, 1e-9)
            if shot is None:
                return 1e6
            best_state["s"] = shot[0]
            return shot[1] ** 2

        ang = _golden_section(fun, ang0 - 0.75 * spacing, ang0 + 0.75 * spacing, iters=48)
        d = np.array([math.cos(ang), math.sin(ang)])
        v_ref = _unit_against_F(S, p, d)
    else:
        basis = _direction_basis(n, v)

        def fun(u):
            d = v + basis @ u
            if np.linalg.norm(d) < 1e-8:
                return 1e6
            shot = _shoot_miss(S, p, _unit_against_F(S, p, d), q, s_max, 1e-9)
            if shot is None:
                return 1e6
            best_state["s"] = shot[0]
            return shot[1] ** 2

        res = minimize(
            fun,
            np.zeros(n - 1),
            method="Nelder-Mead",
            options={"xatol": 1e-10, "fatol": 1e-20, "maxiter": 400},
        )
        d = v + basis @ res.x
        v_ref = _unit_against_F(S, p, d)
    shot = _shoot_miss(S, p, v_ref, q, s_max, tol_int)
    if shot is None:
        return v, best_state["s"] if best_state["s"] else s_max / 2.0
    return v_ref, shot[0]


def _distance_dim1(S, p, q, tol_int):
    from .ode import solve_scalar_root

    direction = np.array([1.0 if q[0] > p[0] else -1.0])
    v = _unit_against_F(S, p, direction)
    gap = abs(float(q[0] - p[0]))
    s_hi = 1.0
    traj = None
    for _ in range(60):
        try:
            traj = _integrate_shot(S, p, v, s_hi, tol_int)
        except DomainExitError as exc:
            traj = exc.trajectory
            break
        if (traj.states[-1][0] - q[0]) * direction[0] > 0:
            break
        s_hi *= 2.0
        if s_hi > 1e6:
            raise SearchFailureError("target not reachable in forward direction")

    def resid(s):
        return float(traj(s)[0] - q[0])

    lo, hi = traj.t0, traj.t1
    s_star = solve_scalar_root(resid, bracket=(lo, hi), tolerance=1e-14 * max(1.0, gap))
    geo = geodesic_ivp(S, p, v, s_star, tolerance=1e-11)
    miss = abs(float(geo.x(s_star)[0] - q[0]))
    return DistanceResult(float(s_star), geo, {"miss": miss, "starts": 1})
