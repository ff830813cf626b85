"""finslerlab command line: validation, tracing, curvature and distance reports.

Exit codes: 0 success, 2 validation failure, 3 domain or integration
failure, 4 precondition failure, 64 usage or parse error.  Every command is
deterministic for a fixed (config, seed) pair; JSON floats are serialized
with repr so reports round-trip exactly.
"""

from __future__ import annotations

import io
import json
import os
import sys

import click
import numpy as np

from .curvature import (
    einstein_classify,
    flag_curvature,
    ricci_scalar,
    ricci_tensor,
    riemann_curvature,
    scalar_curvature_residual,
)
from .errors import (
    BracketError,
    ConfigError,
    CriticalPointError,
    DegenerateFitError,
    DegenerateFlagError,
    DegenerateSeedsError,
    DomainExitError,
    EvaluationDomainError,
    FinslerError,
    IterationLimitError,
    MalformedChainError,
    NotEinsteinError,
    PoleError,
    SearchFailureError,
    StiffnessError,
    StrongConvexityError,
)
from .geodesics import finsler_distance, geodesic_ivp
from .metrics import load_config, make_metric, validate_structure
from .projective import FunkGauge, projective_relation, pseudo_distance, theorem1_verify

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3
EXIT_PRECONDITION = 4
EXIT_USAGE = 64

_NUMERICAL_ERRORS = (
    DomainExitError,
    StiffnessError,
    IterationLimitError,
    BracketError,
    SearchFailureError,
    EvaluationDomainError,
    PoleError,
    DegenerateFlagError,
    DegenerateSeedsError,
    CriticalPointError,
    DegenerateFitError,
    MalformedChainError,
)


def _clean(obj):
    """Recursively convert numpy scalars/arrays so json can serialize them."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def _emit(payload: dict, out: str | None) -> None:
    text = json.dumps(_clean(payload), indent=2, sort_keys=True)
    if out and out != "-":
        with open(out, "w") as fh:
            fh.write(text + "\n")
    else:
        click.echo(text)


def _fail(code: int, error: Exception, **extra) -> int:
    payload = {"error": type(error).__name__, "message": str(error)}
    payload.update(extra)
    click.echo(json.dumps(_clean(payload), indent=2, sort_keys=True), err=True)
    return code


def _load_structure(config_path: str):
    try:
        cfg = load_config(config_path)
    except (json.JSONDecodeError, OSError, ConfigError) as exc:
        raise _UsageExit(f"config error in {config_path}: {exc}") from exc
    return make_metric(cfg)


class _UsageExit(click.UsageError):
    pass


def _parse_vector(text: str, dim: int, what: str) -> np.ndarray:
    try:
        vals = [float(v) for v in text.replace(" ", "").split(",") if v != ""]
    except ValueError as exc:
        raise _UsageExit(f"{what} must be comma-separated floats, got {text!r}") from exc
    if len(vals) != dim:
        raise _UsageExit(f"{what} needs {dim} components, got {len(vals)}")
    return np.asarray(vals)


def _threads_option(value: int | None) -> int:
    if value is not None:
        return max(1, value)
    env = os.environ.get("FINSLERLAB_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise _UsageExit(f"FINSLERLAB_THREADS must be an integer, got {env!r}")
    return 1


@click.group()
def cli() -> None:
    """Finsler geometry toolkit: metrics, geodesics, curvature, distances."""


@cli.group()
def metric() -> None:
    """Metric configuration commands."""


@metric.command("validate")
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--samples", default=100, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", default=None)
def metric_validate(config_path, samples, seed, out) -> int:
    """Sample the defining axioms and report pass/fail per property."""
    try:
        S = _load_structure(config_path)
    except StrongConvexityError as exc:
        _emit(
            {
                "passed": False,
                "failures": [f"strong convexity: {exc}"],
                "samples": samples,
                "seed": seed,
            },
            out,
        )
        return EXIT_VALIDATION
    report = validate_structure(S, samples=samples, seed=seed)
    _emit(report.to_dict(), out)
    return EXIT_OK if report.passed else EXIT_VALIDATION


@cli.group()
def geodesic() -> None:
    """Geodesic tracing commands."""


@geodesic.command("trace")
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--x0", required=True, help="start point, comma separated")
@click.option("--y0", required=True, help="start direction, comma separated")
@click.option("--length", required=True, type=float, help="signed arc length")
@click.option("--step", default=None, type=float, help="resample spacing for the CSV")
@click.option("--tolerance", default=1e-10, show_default=True, type=float)
@click.option("--out", default="-", show_default=True)
def geodesic_trace(config_path, x0, y0, length, step, tolerance, out) -> int:
    """Integrate x'' + 2G(x, x') = 0 and write the trace as CSV."""
    S = _load_structure(config_path)
    x0v = _parse_vector(x0, S.dimension, "--x0")
    y0v = _parse_vector(y0, S.dimension, "--y0")
    try:
        geo = geodesic_ivp(S, x0v, y0v, length, tolerance=tolerance)
    except DomainExitError as exc:
        return _fail(EXIT_NUMERICAL, exc, exit_arc_length=exc.t_exit)
    buf = io.StringIO()
    if step is not None:
        geo.resample_csv(buf, step)
    else:
        geo.write_csv(buf)
    text = buf.getvalue()
    if out and out != "-":
        with open(out, "w") as fh:
            fh.write(text)
    else:
        click.echo(text, nl=False)
    return EXIT_OK


@cli.group()
def curvature() -> None:
    """Curvature computations at a point."""


@curvature.command("report")
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--x", required=True, help="base point, comma separated")
@click.option("--y", required=True, help="flagpole direction, comma separated")
@click.option("--u", default=None, help="transverse flag edge, comma separated")
@click.option("--out", default=None)
def curvature_report(config_path, x, y, u, out) -> int:
    """Riemann curvature, flag curvature and Ricci data at (x, y)."""
    S = _load_structure(config_path)
    xv = _parse_vector(x, S.dimension, "--x")
    yv = _parse_vector(y, S.dimension, "--y")
    R = riemann_curvature(S, xv, yv)
    ric = ricci_scalar(S, xv, yv)
    n = S.dimension
    payload = {
        "x": list(xv),
        "y": list(yv),
        "riemann_matrix": R.matrix,
        "flagpole_residual": R.flagpole_residual(),
        "ricci_scalar": ric,
        "ricci_tensor": ricci_tensor(S, xv, yv).ric_tensor,
    }
    if n >= 2:
        lam = ric / (n - 1.0)
        payload["scalar_shape_lambda"] = lam
        payload["scalar_shape_residual"] = scalar_curvature_residual(S, xv, yv, lam)
        if u is not None:
            uv = _parse_vector(u, n, "--u")
        else:
            uv = None
            for k in range(n):
                cand = np.zeros(n)
                cand[k] = 1.0
                if float(np.max(np.abs(cand - yv))) > 1e-9:
                    uv = cand
                    break
        try:
            payload["flag_curvature"] = flag_curvature(S, xv, yv, uv)
            payload["flag_edge"] = list(uv)
        except DegenerateFlagError as exc:
            return _fail(EXIT_NUMERICAL, exc)
    _emit(payload, out)
    return EXIT_OK


@cli.group()
def einstein() -> None:
    """Einstein classification commands."""


@einstein.command("check")
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--samples", default=10, show_default=True)
@click.option("--directions", default=12, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", default=None)
def einstein_check(config_path, samples, directions, seed, out) -> int:
    """Sample Ric and test for the normal form Ric_ij = -c^2 g_ij."""
    S = _load_structure(config_path)
    report = einstein_classify(S, x_samples=samples, y_directions=directions, seed=seed)
    _emit(report.to_dict(), out)
    return EXIT_OK


@cli.command("distance")
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--from", "from_", required=True, help="start point, comma separated")
@click.option("--to", required=True, help="end point, comma separated")
@click.option("--pseudo", is_flag=True, help="also bound the projective pseudo-distance")
@click.option("--funk-k", default=1.0, show_default=True, type=float)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", default=None)
def distance(config_path, from_, to, pseudo, funk_k, seed, out) -> int:
    """Ordered Finslerian distance d_F, optionally with the d_M bound."""
    S = _load_structure(config_path)
    p = _parse_vector(from_, S.dimension, "--from")
    q = _parse_vector(to, S.dimension, "--to")
    payload = {"from": list(p), "to": list(q), "seed": seed}
    if pseudo:
        if S.dimension < 2:
            raise _UsageExit("--pseudo needs dimension >= 2")
        gauge = FunkGauge(k=funk_k)
        result = pseudo_distance(S, p, q, gauge, seed=seed)
        payload["d_F"] = result.d_finsler
        payload["gauge_k"] = funk_k
        payload["d_M"] = result.canonical_length
        payload.update(result.to_dict())
        payload["einstein_c"] = result.einstein.einstein_constant_c
    else:
        result = finsler_distance(S, p, q, seed=seed)
        payload["d_F"] = result.distance
        payload["diagnostics"] = result.diagnostics
    _emit(payload, out)
    return EXIT_OK


@cli.group()
def theorem1() -> None:
    """Proportionality verification commands."""


@theorem1.command("verify")
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--pairs", default=20, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--tol", default=1e-4, show_default=True, type=float)
@click.option("--funk-k", default=1.0, show_default=True, type=float)
@click.option("--threads", default=None, type=int)
@click.option("--out", default=None)
def theorem1_verify_cmd(config_path, pairs, seed, tol, funk_k, threads, out) -> int:
    """Check d_M = (2c / (sqrt(n-1) k)) d_F over random ordered pairs."""
    S = _load_structure(config_path)
    gauge = FunkGauge(k=funk_k)
    nthreads = _threads_option(threads)
    try:
        report = theorem1_verify(
            S, gauge, pairs=pairs, seed=seed, tolerance=tol, threads=nthreads
        )
    except NotEinsteinError as exc:
        return _fail(
            EXIT_PRECONDITION,
            exc,
            detail="theoretical value unavailable without the Einstein normal form",
        )
    _emit(report.to_dict(), out)
    return EXIT_OK if report.passed else EXIT_VALIDATION


@cli.group()
def projective() -> None:
    """Projective comparison commands."""


@projective.command("compare")
@click.option("--config-a", "config_a", required=True, type=click.Path())
@click.option("--config-b", "config_b", required=True, type=click.Path())
@click.option("--samples", default=40, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", default=None)
def projective_compare(config_a, config_b, samples, seed, out) -> int:
    """Spray comparison: same unparameterized geodesics? homothetic?"""
    A = _load_structure(config_a)
    B = _load_structure(config_b)
    report = projective_relation(A, B, samples=samples, seed=seed)
    _emit(report.to_dict(), out)
    return EXIT_OK


def main(argv=None) -> int:
    """Dispatch and translate exceptions into the documented exit codes."""
    try:
        rv = cli.main(args=argv, standalone_mode=False)
        return int(rv) if isinstance(rv, int) else EXIT_OK
    except _UsageExit as exc:
        click.echo(f"usage error: {exc.format_message()}", err=True)
        return EXIT_USAGE
    except click.UsageError as exc:
        click.echo(f"usage error: {exc.format_message()}", err=True)
        return EXIT_USAGE
    except click.ClickException as exc:
        exc.show()
        return EXIT_USAGE
    except click.exceptions.Abort:
        return EXIT_USAGE
    except NotEinsteinError as exc:
        return _fail(EXIT_PRECONDITION, exc)
    except StrongConvexityError as exc:
        return _fail(EXIT_VALIDATION, exc)
    except _NUMERICAL_ERRORS as exc:
        extra = {}
        if isinstance(exc, DomainExitError) and exc.t_exit is not None:
            extra["exit_arc_length"] = exc.t_exit
        return _fail(EXIT_NUMERICAL, exc, **extra)
    except ConfigError as exc:
        click.echo(f"usage error: {exc}", err=True)
        return EXIT_USAGE
    except FinslerError as exc:
        return _fail(EXIT_NUMERICAL, exc)


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
