"""Command-line front end: convergence runs, inf-sup sweeps and property checks.

Exit codes: 0 success, 1 a property or coercivity failure, 2 configuration
error, 3 point source on the mesh skeleton.
"""

import argparse
import io
import json
import math
import sys
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .analysis import (
    MIN_DEGREE,
    eoc,
    infsup_sweep,
    loglog_slope,
    proof_construction_check,
    proof_construction_constants,
    random_coefficients,
    reconstruction_constants,
    ritz_projection_stability,
)
from .dgspace import DgSpace
from .exceptions import CoercivityError, SkeletonCollisionError
from .forms import PenaltyParams, assemble_ip, coercivity_constant, export_matrix_market
from .mesh import perturbed_mesh, uniform_mesh
from .problems import check_off_skeleton, exact_solution, measure_errors, point_source_problem, sine_problem, solve
from .reconstruct import bound_ratios, operator_matrices, orthogonality_residuals

EXIT_OK, EXIT_FAILURE, EXIT_CONFIG, EXIT_SKELETON = 0, 1, 2, 3

RUN_COLUMNS = (
    "n_elements",
    "h_max",
    "dofs",
    "err_znorm",
    "err_enorm",
    "err_eenorm",
    "err_l2",
    "eoc_znorm",
    "eoc_l2",
    "solve_seconds",
)
INFSUP_COLUMNS = ("n_elements", "h_max", "gamma_V", "gamma_W", "lambda_coercivity", "sigma_max_continuity")

DEFAULTS = {
    "problem": "smooth",
    "k": 2,
    "sigma0": None,  # 10 k^2
    "sigma1": 1.0,
    "meshes": "8,16,32,64",
    "xbar": 0.6366,
    "seed": 7,
    "samples": 100,
    "output": None,
    "format": "csv",
    "dump_matrices": None,
    "timing": False,
}
PROBLEMS = ("smooth", "delta", "delta-prime")


class ConfigError(ValueError):
    def __init__(self, name, message):
        self.name = name
        super().__init__(f"{name}: {message}")


@dataclass
class RunConfig:
    command: str
    problem: str = "smooth"
    k: int = 2
    sigma0: float = 40.0
    sigma1: float = 1.0
    meshes: tuple = (8, 16, 32, 64)
    xbar: float = 0.6366
    seed: int = 7
    samples: int = 100
    output: str = None
    format: str = "csv"
    dump_matrices: str = None
    timing: bool = False

    @property
    def params(self):
        return PenaltyParams(self.sigma0, self.sigma1)

    def header(self):
        return (
            f"# k={self.k} sigma0={self.sigma0:g} sigma1={self.sigma1:g} "
            f"xbar={self.xbar:g} seed={self.seed} version={__version__}"
        )

    def header_fields(self):
        return {
            "command": self.command,
            "problem": self.problem,
            "k": self.k,
            "sigma0": self.sigma0,
            "sigma1": self.sigma1,
            "xbar": self.xbar,
            "seed": self.seed,
            "version": __version__,
        }


def _parse_meshes(value):
    if isinstance(value, str):
        items = [s for s in value.replace(" ", "").split(",") if s]
    else:
        items = list(value)
    try:
        counts = tuple(int(s) for s in items)
    except (TypeError, ValueError):
        raise ConfigError("meshes", f"expected a comma-separated list of element counts, got {value!r}") from None
    if not counts:
        raise ConfigError("meshes", "at least one mesh is required")
    if min(counts) < 1:
        raise ConfigError("meshes", "element counts must be positive")
    if any(b <= a for a, b in zip(counts, counts[1:])):
        raise ConfigError("meshes", "element counts must be strictly increasing")
    return counts


def _coerce(name, value, kind):
    try:
        out = kind(value)
    except (TypeError, ValueError):
        raise ConfigError(name, f"expected {kind.__name__}, got {value!r}") from None
    if kind is float and not math.isfinite(out):
        raise ConfigError(name, "must be finite")
    return out


def build_config(args):
    """Merge flags over an optional JSON file over built-in defaults, then validate."""
    file_values = {}
    if args.config is not None:
        try:
            with open(args.config) as fh:
                file_values = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError("config", str(exc)) from None
        if not isinstance(file_values, dict):
            raise ConfigError("config", "expected a JSON object")
        file_values = {k.replace("-", "_"): v for k, v in file_values.items()}
        unknown = sorted(set(file_values) - set(DEFAULTS))
        if unknown:
            raise ConfigError(unknown[0], "unknown configuration key")

    def pick(name):
        flag = getattr(args, name)
        if flag is not None and flag is not False:
            return flag
        return file_values.get(name, DEFAULTS[name])

    k = _coerce("k", pick("k"), int)
    min_k = MIN_DEGREE if args.command in ("infsup", "check") else 1
    if k < min_k:
        if min_k == MIN_DEGREE:
            raise ConfigError("k", f"the inf-sup theory requires polynomial degree k >= {MIN_DEGREE}, got k={k}")
        raise ConfigError("k", f"polynomial degree must be >= 1, got k={k}")
    sigma0 = pick("sigma0")
    sigma0 = 10.0 * k**2 if sigma0 is None else _coerce("sigma0", sigma0, float)
    if not sigma0 > 0:
        raise ConfigError("sigma0", f"must be positive, got {sigma0!r}")
    sigma1 = _coerce("sigma1", pick("sigma1"), float)
    if sigma1 < 0:
        raise ConfigError("sigma1", f"must be non-negative, got {sigma1!r}")
    problem = pick("problem")
    if problem not in PROBLEMS:
        raise ConfigError("problem", f"expected one of {', '.join(PROBLEMS)}, got {problem!r}")
    xbar = _coerce("xbar", pick("xbar"), float)
    if not 0.0 < xbar < 1.0:
        raise ConfigError("xbar", f"must lie strictly inside (0, 1), got {xbar!r}")
    samples = _coerce("samples", pick("samples"), int)
    if samples < 1:
        raise ConfigError("samples", "must be at least 1")
    fmt = pick("format")
    if fmt not in ("csv", "json"):
        raise ConfigError("format", f"expected csv or json, got {fmt!r}")
    return RunConfig(
        command=args.command,
        problem=problem,
        k=k,
        sigma0=sigma0,
        sigma1=sigma1,
        meshes=_parse_meshes(pick("meshes")),
        xbar=xbar,
        seed=_coerce("seed", pick("seed"), int),
        samples=samples,
        output=pick("output"),
        format=fmt,
        dump_matrices=pick("dump_matrices"),
        timing=bool(pick("timing")),
    )


def _fmt(value):
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


def render_table(config, columns, rows):
    if config.format == "json":
        clean = [[None if isinstance(v, float) and not math.isfinite(v) else v for v in row] for row in rows]
        doc = {"header": config.header_fields(), "columns": list(columns), "rows": clean}
        return json.dumps(doc, indent=2) + "\n"
    buf = io.StringIO()
    buf.write(config.header() + "\n")
    buf.write(",".join(columns) + "\n")
    for row in rows:
        buf.write(",".join(_fmt(v) for v in row) + "\n")
    return buf.getvalue()


def _emit(config, text):
    if config.output:
        with open(config.output, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _problem(config):
    if config.problem == "smooth":
        return sine_problem()
    c0, c1 = (1.0, 0.0) if config.problem == "delta" else (0.0, 1.0)
    return point_source_problem(config.xbar, c0, c1)


def cmd_run(config):
    spec = _problem(config)
    meshes = [uniform_mesh(n) for n in config.meshes]
    if spec.kind == "point_source":
        for mesh in meshes:
            check_off_skeleton(mesh, spec.xbar)
    exact = exact_solution(spec)
    records = []
    for mesh in meshes:
        forms = assemble_ip(DgSpace(mesh, config.k), config.params)
        if config.dump_matrices:
            export_matrix_market(forms, f"{config.dump_matrices}/n{mesh.n_elements}")
        u_h, seconds = solve(spec, mesh, config.k, config.params, forms=forms)
        records.append(measure_errors(u_h, exact, seconds if config.timing else float("nan")))
    h = [r.h_max for r in records]
    eoc_z = eoc(list(zip(h, [r.err_znorm for r in records]))).rates if len(records) > 1 else (float("nan"),)
    eoc_l2 = eoc(list(zip(h, [r.err_l2 for r in records]))).rates if len(records) > 1 else (float("nan"),)
    rows = [
        (r.n_elements, r.h_max, r.dofs, r.err_znorm, r.err_enorm, r.err_eenorm, r.err_l2, ez, el, r.solve_seconds)
        for r, ez, el in zip(records, eoc_z, eoc_l2)
    ]
    _emit(config, render_table(config, RUN_COLUMNS, rows))
    last = rows[-1]
    print(
        f"{spec.name}: k={config.k} n={last[0]} err_l2={last[6]:.3e} eoc_znorm={last[7]:.3f} eoc_l2={last[8]:.3f}",
        file=sys.stderr,
    )
    return EXIT_OK


def cmd_infsup(config):
    report = infsup_sweep(config.meshes, config.k, config.params)
    rows = report.rows()
    _emit(config, render_table(config, INFSUP_COLUMNS, rows))
    lam = min(report.lambda_coercivity)
    if lam <= 0:
        print(
            f"coercivity fails: lambda_coercivity={lam:.6g} <= 0 for sigma0={config.sigma0:g}; increase sigma0",
            file=sys.stderr,
        )
        return EXIT_FAILURE
    return EXIT_OK


@dataclass
class PropertyResult:
    name: str
    passed: bool
    values: dict = field(default_factory=dict)
    detail: str = ""

    def line(self):
        vals = " ".join(f"{k}={_fmt_value(v)}" for k, v in self.values.items())
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name} {vals}".rstrip() + (f" ({self.detail})" if self.detail else "")


def _fmt_value(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".6g")


def _ratio(values):
    values = np.asarray(values, dtype=float)
    return float(values.max() / values.min())


def check_dual_assembly(config, levels):
    rng = np.random.default_rng(config.seed)
    worst = 0.0
    meshes = [lv["mesh"] for lv in levels]
    meshes += [perturbed_mesh(int(rng.integers(2, 40)), jitter=0.3, seed=int(rng.integers(2**31))) for _ in range(20)]
    for mesh in meshes:
        forms = assemble_ip(DgSpace(mesh, config.k), config.params)
        gap = abs(forms.A_primal - forms.A_ibp).max() / abs(forms.A_primal).max()
        worst = max(worst, gap)
    return PropertyResult("dual_assembly", worst <= 1e-10, {"max_relative_gap": worst})


def check_coercivity_property(config, levels):
    lam = [coercivity_constant(lv["forms"]) for lv in levels]
    ok = min(lam) > 0 and _ratio(lam) <= 2.0
    return PropertyResult("coercivity", ok, {"lambda_min": min(lam), "lambda_max": max(lam)})


def check_orthogonality(config, levels):
    worst = 0.0
    for lv in levels:
        worst = max(worst, float(np.abs(orthogonality_residuals(lv["ops"], lv["U"])).max()))
    return PropertyResult("orthogonality", worst <= 1e-9, {"max_residual": worst})


def check_bound_ratios(config, levels):
    h = [lv["mesh"].h_max for lv in levels]
    sharp = [reconstruction_constants(lv["ops"]) for lv in levels]
    mean = [{k: float(np.mean(v)) for k, v in bound_ratios(lv["ops"], lv["U"]).items()} for lv in levels]
    values, ok = {}, True
    for key in sharp[0]:
        if len(levels) > 1:
            s = loglog_slope(h, [c[key] for c in sharp])
            values[f"slope_{key}"] = s
            values[f"mean_slope_{key}"] = loglog_slope(h, [m[key] for m in mean])
            ok &= abs(s) <= 0.2
        values[key] = sharp[-1][key]
    return PropertyResult("reconstruction_bounds", bool(ok), values)


def check_proof_construction(config, levels):
    lower_min, upper_max, sharp_lo, sharp_up = [], [], [], []
    for lv in levels:
        lo, up = proof_construction_check(lv["ops"], lv["U"])
        lower_min.append(float(lo.min()))
        upper_max.append(float(up.max()))
        a, b = proof_construction_constants(lv["ops"])
        sharp_lo.append(a)
        sharp_up.append(b)
    ok = (
        min(lower_min) > 0
        and _ratio(lower_min) <= 2.0
        and min(sharp_lo) > 0
        and _ratio(sharp_lo) <= 2.0
        and _ratio(sharp_up) <= 2.0
        and max(upper_max) <= 2.0 * upper_max[0]
    )
    values = {
        "lower_min": min(lower_min),
        "lower_ratio": _ratio(lower_min),
        "upper_max": max(upper_max),
        "sharp_lower": min(sharp_lo),
        "sharp_upper": max(sharp_up),
        "sharp_upper_ratio": _ratio(sharp_up),
    }
    return PropertyResult("proof_construction", bool(ok), values)


def check_ritz_stability(config, levels):
    ratios = []
    for i, lv in enumerate(levels):
        S = random_coefficients(lv["ops"].c1space.dim, config.samples, config.seed + i)
        ratios.append(ritz_projection_stability(lv["ops"], S))
    return PropertyResult("ritz_projection_stability", _ratio(ratios) <= 2.0, {"max": max(ratios), "ratio": _ratio(ratios)})


def check_infsup(config, levels):
    report = infsup_sweep([lv["mesh"] for lv in levels], config.k, config.params)
    gv, gw = report.gamma_V, report.gamma_W
    ok = min(gv) > 0 and min(gw) > 0 and _ratio(gv) <= 2.0 and _ratio(gw) <= 2.0
    values = {"gamma_V_min": min(gv), "gamma_V_ratio": _ratio(gv), "gamma_W_min": min(gw), "gamma_W_ratio": _ratio(gw)}
    return PropertyResult("infsup", bool(ok), values)


PROPERTY_CHECKS = (
    check_dual_assembly,
    check_coercivity_property,
    check_orthogonality,
    check_bound_ratios,
    check_proof_construction,
    check_ritz_stability,
    check_infsup,
)


def run_property_suite(config):
    levels = []
    for i, n in enumerate(config.meshes):
        mesh = uniform_mesh(n)
        space = DgSpace(mesh, config.k)
        ops = operator_matrices(space, params=config.params)
        levels.append(
            {
                "mesh": mesh,
                "forms": assemble_ip(space, config.params),
                "ops": ops,
                "U": random_coefficients(space.ndofs, config.samples, config.seed + i),
            }
        )
    results = []
    for check in PROPERTY_CHECKS:
        name = check.__name__.removeprefix("check_")
        try:
            results.append(check(config, levels))
        except (np.linalg.LinAlgError, ValueError, ArithmeticError) as exc:
            results.append(PropertyResult(name, False, detail=f"{type(exc).__name__}: {exc}"))
    return results


def cmd_check(config):
    results = run_property_suite(config)
    if config.format == "json":
        doc = {
            "header": config.header_fields(),
            "properties": [
                {"name": r.name, "passed": bool(r.passed), "values": {k: float(v) for k, v in r.values.items()}, "detail": r.detail}
                for r in results
            ],
        }
        text = json.dumps(doc, indent=2) + "\n"
    else:
        text = config.header() + "\n" + "".join(r.line() + "\n" for r in results)
    _emit(config, text)
    failed = [r for r in results if not r.passed]
    for r in failed:
        print(f"property failed: {r.line()}", file=sys.stderr)
    return EXIT_FAILURE if failed else EXIT_OK


COMMANDS = {"run": cmd_run, "infsup": cmd_infsup, "check": cmd_check}


def build_parser():
    parser = argparse.ArgumentParser(prog="ipdg1d", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--problem", help="smooth | delta | delta-prime (default smooth)")
    common.add_argument("--k", type=int, help="polynomial degree (default 2)")
    common.add_argument("--sigma0", type=float, help="value-jump penalty (default 10 k^2)")
    common.add_argument("--sigma1", type=float, help="gradient-jump penalty (default 1)")
    common.add_argument("--meshes", help="comma-separated element counts (default 8,16,32,64)")
    common.add_argument("--xbar", type=float, help="point source location (default 0.6366)")
    common.add_argument("--seed", type=int, help="random seed for sampled checks (default 7)")
    common.add_argument("--samples", type=int, help="random samples per level (default 100)")
    common.add_argument("--output", help="write results here instead of stdout")
    common.add_argument("--format", help="csv | json (default csv)")
    common.add_argument("--config", help="JSON file with any of the options above; flags win")
    common.add_argument("--dump-matrices", dest="dump_matrices", help="directory for MatrixMarket dumps")
    common.add_argument("--timing", action="store_true", default=None, help="record wall-clock solve times")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common], help="convergence study")
    sub.add_parser("infsup", parents=[common], help="inf-sup and coercivity sweep")
    sub.add_parser("check", parents=[common], help="property suite")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        config = build_config(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return COMMANDS[config.command](config)
    except SkeletonCollisionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SKELETON
    except CoercivityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
