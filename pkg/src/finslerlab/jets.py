"""Truncated multivariate Taylor arithmetic ("jets") and derivative extraction.

A jet stores the Taylor coefficients of a smooth expression at a base point,
up to a fixed total order, with respect to a declared set of seed directions.
Arithmetic on jets propagates coefficients exactly, so after one ordinary
evaluation of an expression every mixed directional derivative up to the
truncation order can be read off.  A central-difference oracle with
Richardson extrapolation is provided as an independent cross-check path; it
is deliberately not used anywhere in the production formulas.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from .errors import DegenerateSeedsError, EvaluationDomainError

# The Ricci tensor consumes six total derivative orders of F^2; keep a little
# headroom for oracles that go deeper.
MAX_JET_ORDER = 10


def _degree_indices(nvars, degree):
    if nvars == 1:
        yield (degree,)
        return
    for head in range(degree, -1, -1):
        for tail in _degree_indices(nvars - 1, degree - head):
            yield (head,) + tail


class JetSpace:
    """Coefficient layout and cached operation tables for one (nvars, order).

    Multi-indices are listed degree by degree (lexicographic within a
    degree), so the coefficient vector of any lower order is a prefix of the
    higher-order one.  Truncation is therefore a slice and never reshuffles.
    """

    def __init__(self, nvars: int, order: int):
        self.nvars = nvars
        self.order = order
        indices: list[tuple[int, ...]] = []
        for deg in range(order + 1):
            indices.extend(_degree_indices(nvars, deg))
        self.indices = tuple(indices)
        self.index_of = {alpha: i for i, alpha in enumerate(self.indices)}
        self.ncoef = len(self.indices)
        self._mul = None
        self._partials: dict[int, tuple] = {}

    def constant(self, c) -> "Jet":
        coef = np.zeros(self.ncoef)
        coef[0] = c
        return Jet(self, coef)

    def variable(self, v: int, value) -> "Jet":
        """Jet of value + xi_v, where xi_v is the v-th seed direction."""
        coef = np.zeros(self.ncoef)
        coef[0] = value
        if self.order >= 1:
            coef[1 + v] = 1.0
        return Jet(self, coef)

    def _mul_table(self):
        if self._mul is None:
            I, J, K = [], [], []
            for i, a in enumerate(self.indices):
                da = sum(a)
                for j, b in enumerate(self.indices):
                    if da + sum(b) <= self.order:
                        I.append(i)
                        J.append(j)
                        K.append(self.index_of[tuple(u + v for u, v in zip(a, b))])
            self._mul = (
                np.asarray(I, dtype=np.intp),
                np.asarray(J, dtype=np.intp),
                np.asarray(K, dtype=np.intp),
            )
        return self._mul

    def _partial_table(self, v: int):
        tab = self._partials.get(v)
        if tab is None:
            lower = jet_space(self.nvars, self.order - 1)
            src = np.empty(lower.ncoef, dtype=np.intp)
            fac = np.empty(lower.ncoef)
            for t, alpha in enumerate(lower.indices):
                bumped = list(alpha)
                bumped[v] += 1
                src[t] = self.index_of[tuple(bumped)]
                fac[t] = alpha[v] + 1
            tab = (lower, src, fac)
            self._partials[v] = tab
        return tab


@lru_cache(maxsize=None)
def jet_space(nvars: int, order: int) -> JetSpace:
    if nvars < 1:
        raise ValueError("jet space needs at least one seed direction")
    if not 0 <= order <= MAX_JET_ORDER:
        raise ValueError(f"jet order must lie in [0, {MAX_JET_ORDER}], got {order}")
    return JetSpace(nvars, order)


class Jet:
    """A truncated Taylor expansion; treat instances as immutable."""

    __slots__ = ("space", "coef")

    def __init__(self, space: JetSpace, coef: np.ndarray):
        self.space = space
        self.coef = coef

    @property
    def value(self) -> float:
        return float(self.coef[0])

    def truncated(self, order: int) -> "Jet":
        if order == self.space.order:
            return self
        if order > self.space.order:
            raise ValueError("cannot extend a jet to higher order")
        lower = jet_space(self.space.nvars, order)
        return Jet(lower, self.coef[: lower.ncoef])

    def partial(self, v: int) -> "Jet":
        """Derivative jet along seed v; lives one order lower."""
        if self.space.order == 0:
            raise ValueError("cannot differentiate an order-0 jet")
        lower, src, fac = self.space._partial_table(v)
        return Jet(lower, self.coef[src] * fac)

    def derivative(self, alpha) -> float:
        """Mixed partial d^alpha f at the base point (coefficient times alpha!)."""
        alpha = tuple(int(a) for a in alpha)
        idx = self.space.index_of.get(alpha)
        if idx is None:
            raise ValueError(f"multi-index {alpha} outside jet space")
        scale = 1.0
        for a in alpha:
            scale *= math.factorial(a)
        return float(self.coef[idx]) * scale

    # ----- arithmetic ------------------------------------------------------

    def _align(self, other: "Jet"):
        if self.space.nvars != other.space.nvars:
            raise ValueError("jets built over different seed sets")
        order = min(self.space.order, other.space.order)
        return self.truncated(order), other.truncated(order)

    def __add__(self, other):
        if isinstance(other, Jet):
            a, b = self._align(other)
            return Jet(a.space, a.coef + b.coef)
        coef = self.coef.copy()
        coef[0] += other
        return Jet(self.space, coef)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Jet):
            a, b = self._align(other)
            return Jet(a.space, a.coef - b.coef)
        coef = self.coef.copy()
        coef[0] -= other
        return Jet(self.space, coef)

    def __rsub__(self, other):
        coef = -self.coef
        coef[0] += other
        return Jet(self.space, coef)

    def __neg__(self):
        return Jet(self.space, -self.coef)

    def __mul__(self, other):
        if isinstance(other, Jet):
            a, b = self._align(other)
            I, J, K = a.space._mul_table()
            coef = np.bincount(K, weights=a.coef[I] * b.coef[J], minlength=a.space.ncoef)
            return Jet(a.space, coef)
        return Jet(self.space, self.coef * other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            a, b = self._align(other)
            return a * b._reciprocal()
        return Jet(self.space, self.coef / other)

    def __rtruediv__(self, other):
        return self._reciprocal() * other

    def __pow__(self, p):
        if isinstance(p, int) or (isinstance(p, float) and p.is_integer()):
            p = int(p)
            if p < 0:
                return (self ** (-p))._reciprocal()
            result = self.space.constant(1.0)
            base = self
            while p:
                if p & 1:
                    result = result * base
                base = base * base
                p >>= 1
            return result
        if p == 0.5:
            return self.sqrt()
        # general real exponent via the binomial series around the value
        c0 = self.value
        if c0 <= 0.0:
            raise EvaluationDomainError(f"jet power {p} needs positive value, got {c0}")
        coeffs = [c0 ** p]
        b = 1.0
        for k in range(1, self.space.order + 1):
            b *= (p - (k - 1)) / k
            coeffs.append(b * c0 ** (p - k))
        return self._series(coeffs)

    # ----- analytic functions ---------------------------------------------

    def _series(self, coeffs) -> "Jet":
        """Evaluate sum coeffs[k] * w^k with w = self - value (Horner)."""
        w_coef = self.coef.copy()
        w_coef[0] = 0.0
        w = Jet(self.space, w_coef)
        acc = self.space.constant(coeffs[-1])
        for k in range(len(coeffs) - 2, -1, -1):
            acc = acc * w + coeffs[k]
        return acc

    def _reciprocal(self) -> "Jet":
        c0 = self.value
        if c0 == 0.0:
            raise EvaluationDomainError("division by a jet with zero value")
        coeffs = [((-1.0) ** k) / c0 ** (k + 1) for k in range(self.space.order + 1)]
        return self._series(coeffs)

    def sqrt(self) -> "Jet":
        c0 = self.value
        if c0 <= 0.0:
            raise EvaluationDomainError(f"jet sqrt needs positive value, got {c0}")
        s = math.sqrt(c0)
        coeffs = [s]
        b = 1.0
        for k in range(1, self.space.order + 1):
            b *= (0.5 - (k - 1)) / k
            coeffs.append(s * b / c0 ** k)
        return self._series(coeffs)

    def exp(self) -> "Jet":
        e = math.exp(self.value)
        coeffs = [e / math.factorial(k) for k in range(self.space.order + 1)]
        return self._series(coeffs)

    def log(self) -> "Jet":
        c0 = self.value
        if c0 <= 0.0:
            raise EvaluationDomainError(f"jet log needs positive value, got {c0}")
        coeffs = [math.log(c0)]
        for k in range(1, self.space.order + 1):
            coeffs.append(((-1.0) ** (k + 1)) / (k * c0 ** k))
        return self._series(coeffs)

    def __abs__(self) -> "Jet":
        c0 = self.value
        if c0 > 0.0:
            return self
        if c0 < 0.0:
            return -self
        raise EvaluationDomainError("abs of a jet with zero value is not differentiable")

    # comparisons act on the scalar part, which keeps branchy evaluators usable
    def __lt__(self, other):
        return self.value < (other.value if isinstance(other, Jet) else other)

    def __le__(self, other):
        return self.value <= (other.value if isinstance(other, Jet) else other)

    def __gt__(self, other):
        return self.value > (other.value if isinstance(other, Jet) else other)

    def __ge__(self, other):
        return self.value >= (other.value if isinstance(other, Jet) else other)

    def __repr__(self):
        return f"Jet(nvars={self.space.nvars}, order={self.space.order}, value={self.value!r})"


# ----- scalar-or-jet helpers used by metric evaluators ----------------------


def jet_sqrt(v):
    if isinstance(v, Jet):
        return v.sqrt()
    if v <= 0.0:
        raise EvaluationDomainError(f"sqrt domain violation: {v}")
    return math.sqrt(v)


def jet_exp(v):
    return v.exp() if isinstance(v, Jet) else math.exp(v)


def jet_log(v):
    if isinstance(v, Jet):
        return v.log()
    if v <= 0.0:
        raise EvaluationDomainError(f"log domain violation: {v}")
    return math.log(v)


def jet_abs(v):
    if isinstance(v, Jet):
        return abs(v)
    return abs(float(v))


def scalar_value(v) -> float:
    return v.value if isinstance(v, Jet) else float(v)


class DerivativeTable:
    """Read-only view of the mixed partial derivatives of one evaluation."""

    def __init__(self, jet: Jet):
        self._jet = jet
        self.order = jet.space.order
        self.nseeds = jet.space.nvars

    @property
    def value(self) -> float:
        return self._jet.value

    @property
    def jet(self) -> Jet:
        return self._jet

    def derivative(self, alpha) -> float:
        """d^alpha f at the base point, alpha a multi-index over the seeds."""
        return self._jet.derivative(alpha)

    def univariate(self) -> tuple[float, ...]:
        """(f, f', f'', ...) for single-seed tables."""
        if self.nseeds != 1:
            raise ValueError("univariate() needs exactly one seed direction")
        return tuple(self.derivative((k,)) for k in range(self.order + 1))


def directional_derivatives(f, at, seeds, order: int, *, max_order: int = MAX_JET_ORDER) -> DerivativeTable:
    """Mixed directional derivatives of a scalar field.

    f is called once with a list of scalar-like arguments (floats or jets),
    one per coordinate of `at`.  `seeds` is a sequence of direction vectors;
    the returned table indexes derivatives by multi-indices over those seeds.
    """
    if order > max_order:
        raise ValueError(f"requested order {order} exceeds configured maximum {max_order}")
    at = np.atleast_1d(np.asarray(at, dtype=float))
    seed_mat = np.atleast_2d(np.asarray(seeds, dtype=float))
    if seed_mat.shape[1] != at.size:
        raise ValueError("seed directions must match the base point dimension")
    m = seed_mat.shape[0]
    if m < 1:
        raise ValueError("at least one seed direction is required")
    if np.linalg.matrix_rank(seed_mat) < m:
        raise DegenerateSeedsError("seed directions are linearly dependent")
    space = jet_space(m, order)
    args = []
    for i in range(at.size):
        coef = np.zeros(space.ncoef)
        coef[0] = at[i]
        if order >= 1:
            for a in range(m):
                coef[1 + a] = seed_mat[a, i]
        args.append(Jet(space, coef))
    out = f(args)
    if isinstance(out, Jet):
        jet = out if out.space is space else out.truncated(min(order, out.space.order))
    else:
        jet = space.constant(float(out))
    if not np.all(np.isfinite(jet.coef)):
        raise EvaluationDomainError("non-finite value in derivative evaluation")
    return DerivativeTable(jet)


_FD_STENCILS = {
    # order -> (offsets, weights, h-power); all central, even error expansion
    1: ((-1.0, 1.0), (-0.5, 0.5), 1),
    2: ((-1.0, 0.0, 1.0), (1.0, -2.0, 1.0), 2),
    3: ((-2.0, -1.0, 1.0, 2.0), (-0.5, 1.0, -1.0, 0.5), 3),
    4: ((-2.0, -1.0, 0.0, 1.0, 2.0), (1.0, -4.0, 6.0, -4.0, 1.0), 4),
}


def finite_difference_oracle(f, at, direction, order: int, base_step: float = 1e-2) -> float:
    """Directional derivative by central differences with Richardson extrapolation.

    Orders 1..4 only.  Test-oracle quality, not production: two step halvings
    remove the h^2 and h^4 error terms of the central stencils.
    """
    if order not in _FD_STENCILS:
        raise ValueError("finite-difference oracle supports orders 1..4")
    if base_step <= 0.0:
        raise ValueError("base step must be positive")
    at = np.atleast_1d(np.asarray(at, dtype=float))
    direction = np.atleast_1d(np.asarray(direction, dtype=float))
    offsets, weights, power = _FD_STENCILS[order]

    def stencil(h: float) -> float:
        total = 0.0
        for o, w in zip(offsets, weights):
            total += w * float(f(at + (o * h) * direction))
        return total / h ** power

    d0 = stencil(base_step)
    d1 = stencil(base_step / 2.0)
    d2 = stencil(base_step / 4.0)
    r0 = (4.0 * d1 - d0) / 3.0
    r1 = (4.0 * d2 - d1) / 3.0
    out = (16.0 * r1 - r0) / 15.0
    if not math.isfinite(out):
        raise EvaluationDomainError("non-finite value in finite-difference oracle")
    return out
