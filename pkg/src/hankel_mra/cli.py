"""Command-line driver: ``hankel-mra <command> [options]``.

Exit codes: 0 all checks pass, 1 a numerical check failed, 2 usage or parse
error.  Reports are JSON with sorted keys and no timestamps, so a rerun with
the same configuration is byte-identical.  Settings resolve as command-line
flags over the ``--config`` JSON file over built-in defaults.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import warnings
from importlib import resources

import numpy as np

from . import cuntz, filter_bank, frames, multiresolution, special, transforms

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
OUTPUT_ENV = "HANKEL_MRA_OUTPUT_DIR"


class UsageError(Exception):
    pass


DEFAULTS = {
    "specfun-check": {"tol": 1e-10, "K": 40},
    "transform": {
        "direction": "forward",
        "alpha": 0.0,
        "q": None,
        "input": None,
        "round_trip": False,
        "support": None,
        "tol": 1e-6,
    },
    "build-bank": {
        "nu": 1,
        "variant": "roots_of_unity",
        "q": None,
        "m0": "haar",
        "coeffs": None,
        "seed": 0,
        "grid": 64,
        "tol": 1e-12,
        "perturb": None,
    },
    "check-cuntz": {"bank": None, "n_tests": 20, "seed": 0, "levels": 4, "tol": 1e-10, "perturb": None},
    "frame-bounds": {
        "nu": 1,
        "J": 4,
        "K": 32,
        "n_tests": 10,
        "seed": 0,
        "family": "haar",
        "coeffs": None,
        "tol": 1e-8,
    },
}


# ---------------------------------------------------------------------------
# Sample files
# ---------------------------------------------------------------------------

SAMPLE_HEADER = ["index", "node", "re", "im"]


def read_samples(text):
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or [h.strip() for h in rows[0]] != SAMPLE_HEADER:
        raise UsageError(f"sample file must start with header {','.join(SAMPLE_HEADER)}")
    nodes, vals = [], []
    for i, row in enumerate(rows[1:]):
        if not row:
            continue
        try:
            idx, node, re, im = row
            if int(idx) != i:
                raise ValueError("indices must run 0, 1, 2, ...")
            nodes.append(float(node))
            vals.append(complex(float(re), float(im)))
        except ValueError as exc:
            raise UsageError(f"bad sample row {i + 1}: {exc}") from None
    return np.array(nodes), np.array(vals, dtype=np.complex128)


def write_samples(nodes, vals):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SAMPLE_HEADER)
    for i, (x, v) in enumerate(zip(nodes, vals)):
        w.writerow([i, repr(float(x)), repr(float(v.real)), repr(float(v.imag))])
    return buf.getvalue()


def bundled_gaussian():
    return resources.files("hankel_mra").joinpath("data/gaussian.csv").read_text()


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def _check(name, residual, threshold, **params):
    residual = float(residual)
    return {"name": name, "residual": residual, "threshold": threshold, "passed": residual <= threshold, "params": params}


def cmd_specfun_check(cfg):
    tol, K = cfg["tol"], int(cfg["K"])
    checks = []
    g = np.linspace(0.0, 5.0, 11)
    X, Y = np.meshgrid(g, g)
    for n in range(5):
        res = np.max(np.abs(special.bessel_addition(n, X, Y, K) - special.bessel_j(n, X + Y)))
        checks.append(_check("bessel_addition", res, tol, n=n, K=K))
    rng = np.random.default_rng(0)
    z = rng.uniform(0.1, 6, 100) * np.exp(1j * rng.uniform(-math.pi, math.pi, 100))
    for n in (0, 1, 2, 3):
        for k in (1, 2, 3):
            rotated = z * np.exp(1j * math.pi * k)
            lhs = special.bessel_j_complex(n, rotated)
            rhs = (-1) ** (n * k) * special.bessel_j_complex(n, z)
            scale = np.maximum(1.0, np.abs(rhs))
            checks.append(_check("multiplicative_periodicity", np.max(np.abs(lhs - rhs) / scale), tol, order=n, k=k))
    x = np.linspace(0.5, 20, 40)
    for nu in (0.5, 1.0, 2.0, 3.5):
        lhs = special.bessel_j(nu - 1, x) + special.bessel_j(nu + 1, x)
        rhs = 2 * nu / x * special.bessel_j(nu, x)
        checks.append(_check("bessel_recurrence", np.max(np.abs(lhs - rhs)), tol, order=nu))
    zg = np.linspace(0.05, 10, 60)
    gz1 = np.array([special.gamma(v + 1) for v in zg])
    gz = np.array([special.gamma(v) for v in zg])
    checks.append(_check("gamma_recurrence", np.max(np.abs(gz1 - zg * gz) / gz1), tol))
    for q in (0.5, 0.6):
        for a in (0.5, 1.0, 2.0):
            worst = max(
                abs(transforms.lattice_orthogonality_delta(m, n, q**a, q * q, 80) - (m == n)) for m in range(-3, 4) for n in range(-3, 4)
            )
            checks.append(_check("q_bessel_orthogonality", worst, tol, q=q, alpha=a))
    for q in (0.3, 0.5, 0.9):
        for nu in range(1, 6):
            val = transforms.jackson_q_integral(lambda t, nu=nu: t ** (nu + 1), q)
            exact = (1 - q) / (1 - q ** (nu + 2))
            checks.append(_check("jackson_integral", abs(val - exact), tol, q=q, nu=nu))
    return {"checks": checks}


def _classical_transform(nodes, vals, alpha, out_nodes, support):
    grid = transforms.RadialGrid(nodes)
    f = transforms.SampledRadialFunction(grid, vals)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", transforms.AccuracyWarning)
        cfg = transforms.QuadratureConfig(support_end=support)
        return np.asarray(transforms.hankel_forward(f, alpha, out_nodes, cfg))


def _lattice_exponents(nodes, q):
    ks = np.round(np.log(nodes) / math.log(q)).astype(int)
    if np.any(np.abs(q ** ks.astype(float) - nodes) > 1e-12 * nodes):
        raise UsageError("nodes are not on the q-lattice")
    if np.any(np.diff(ks) != -1):
        raise UsageError("lattice nodes must be consecutive powers of q in ascending order")
    return ks


def cmd_transform(cfg):
    alpha = cfg["alpha"]
    try:
        special.check_order(alpha)
    except special.DomainError as exc:
        raise UsageError(str(exc)) from None
    text = bundled_gaussian() if cfg["input"] in (None, "gaussian") else _read_file(cfg["input"])
    nodes, vals = read_samples(text)
    q = cfg["q"]
    direction = cfg["direction"]
    if direction not in ("forward", "inverse"):
        raise UsageError(f"unknown direction {direction!r}")
    if q is not None and not 0 < q < 1:
        raise UsageError("q must lie in (0, 1)")
    if nodes.size == 0:
        return {"checks": [], "samples": write_samples([], []), "n": 0}
    if np.any(nodes <= 0) or np.any(np.diff(nodes) <= 0):
        raise UsageError("nodes must be positive and strictly increasing")
    checks = []
    if q is None:
        support = float(cfg["support"] or nodes[-1])
        out = _classical_transform(nodes, vals, alpha, nodes, support)
        if cfg["round_trip"]:
            back = _classical_transform(nodes, out, alpha, nodes, support)
            checks.append(_check("round_trip", np.max(np.abs(back - vals)), cfg["tol"], alpha=alpha))
    else:
        ks = _lattice_exponents(nodes, q)
        f = transforms.SampledRadialFunction(transforms.RadialGrid.q_geometric(q, int(ks.min()), int(ks.max())), vals)
        out = np.asarray(transforms.q_hankel_forward(f, alpha, q, ks))
        if cfg["round_trip"]:
            g = transforms.SampledRadialFunction(f.grid, out)
            back = np.asarray(transforms.q_hankel_inverse(g, alpha, q, ks))
            # the lattice is truncated, so only report the error
            checks.append(_check("round_trip", np.max(np.abs(back - vals)), cfg["tol"], alpha=alpha, q=q))
    return {"checks": checks, "samples": write_samples(nodes, out), "n": int(nodes.size)}


def _parse_coeffs(text):
    if text is None:
        return None
    try:
        raw = json.loads(text) if isinstance(text, str) else text
    except json.JSONDecodeError as exc:
        raise UsageError(f"coefficients must be JSON: {exc}") from None
    if isinstance(raw, dict):
        return {int(k): complex(v) if not isinstance(v, list) else complex(*v) for k, v in raw.items()}
    return {k: complex(v) for k, v in enumerate(raw)}


def _make_bank(cfg):
    nu = int(cfg["nu"])
    variant = cfg["variant"]
    q = cfg["q"]
    try:
        sys_ = filter_bank.BranchSystem(nu, variant, q if variant == "q_spiral" else None)
    except (ValueError, special.DomainError) as exc:
        raise UsageError(str(exc)) from None
    source = cfg["m0"]
    if source == "haar":
        if variant == "q_spiral":
            rho, nc = filter_bank.annular_bank_constants(nu, q)
            m0 = multiresolution.constant_annular_filter(nu, q)
            bank = filter_bank.complete_from_m0(m0, sys_, rho, nc, label="haar")
        else:
            offsets, G = frames.haar_taps(nu)
            bank = frames.tap_bank(offsets, G, sys_)
    elif source in ("annular", "annular-bessel"):
        if variant != "q_spiral":
            raise UsageError("annular filters live on the q_spiral variant")
        rho, nc = filter_bank.annular_bank_constants(nu, q)
        m0 = (
            multiresolution.constant_annular_filter(nu, q)
            if source == "annular"
            else multiresolution.build_m0_annular(nu, q, _parse_coeffs(cfg["coeffs"]))
        )
        bank = filter_bank.complete_from_m0(m0, sys_, rho, nc, label=source)
    elif source == "random":
        rho, nc = filter_bank.annular_bank_constants(nu, q) if variant == "q_spiral" else (np.ones(nu + 1), 1.0)
        m0 = filter_bank.random_qmf_filter(sys_, rho, nc, seed=int(cfg["seed"]))
        bank = filter_bank.complete_from_m0(m0, sys_, rho, nc, label="random")
    elif source == "bessel-series":
        b = _parse_coeffs(cfg["coeffs"]) or {0: 1 / math.sqrt(2)}
        bank = filter_bank.bessel_series_filters(b, nu, q, variant)
    else:
        raise UsageError(f"unknown m0 source {source!r}")
    if cfg.get("perturb") is not None:
        bank = cuntz.perturbed(bank, index=min(1, nu), factor=float(cfg["perturb"]))
    return bank


def cmd_build_bank(cfg):
    try:
        bank = _make_bank(cfg)
    except filter_bank.PreconditionError as exc:
        return {"checks": [_check("qmf_precondition", math.inf, cfg["tol"], detail=str(exc))], "bank": None}
    grid = filter_bank.default_grid(bank.branch, int(cfg["grid"]))
    mats = filter_bank.polyphase_matrices(bank, grid)
    per_point = np.linalg.norm(np.conj(np.transpose(mats, (0, 2, 1))) @ mats - np.eye(bank.N), ord=2, axis=(1, 2))
    checks = [_check("unitarity", per_point.max(), cfg["tol"])]
    if bank.branch.variant == "q_spiral":
        q = bank.branch.q
        ts = np.linspace(q, 1.0, int(cfg["grid"]) + 1)[1:]
        checks.append(_check("weighted_orthogonality", filter_bank.weighted_orthogonality_residual(bank, ts), 1e-10))
    if bank.label == "bessel_series":
        b = _parse_coeffs(cfg["coeffs"]) or {0: 1 / math.sqrt(2)}
        try:
            checks.append(_check("residue_diagonal", filter_bank.residue_diagonal_condition(b, bank.nu), 1e-12))
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    bad = np.flatnonzero(per_point > cfg["tol"])
    return {
        "checks": checks,
        "bank": json.loads(filter_bank.bank_to_json(bank, grid)),
        "failing_points": [[float(grid[i].real), float(grid[i].imag)] for i in bad[:20]],
        "recipe": {k: cfg[k] for k in ("nu", "variant", "q", "m0", "coeffs", "seed", "perturb")},
    }


def _read_file(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def cmd_check_cuntz(cfg):
    if not cfg["bank"]:
        raise UsageError("check-cuntz needs --bank FILE (a build-bank report)")
    try:
        doc = json.loads(_read_file(cfg["bank"]))
        recipe = dict(doc["recipe"])
        stored = doc["bank"]
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise UsageError(f"invalid bank file: {exc}") from None
    if stored is None:
        raise UsageError("bank file holds no bank (its build failed)")
    if cfg["perturb"] is not None:
        recipe["perturb"] = cfg["perturb"]
    recipe.setdefault("perturb", None)
    bank = _make_bank(recipe)
    # the rebuilt filters must reproduce the stored samples
    sb = filter_bank.bank_from_json(json.dumps(stored))
    vals = bank.evaluate(bank.branch.branch_points(sb.grid))
    drift = float(np.max(np.abs(vals - sb.samples))) if recipe.get("perturb") == doc["recipe"].get("perturb") else 0.0
    rep = cuntz.Representation(bank, levels=int(cfg["levels"]))
    report = cuntz.relation_report(rep, n_tests=int(cfg["n_tests"]), seed=int(cfg["seed"]))
    tol = cfg["tol"]
    checks = [
        _check("stored_samples", drift, 1e-12),
        _check("isometry", report.max_isometry_residual, tol),
        _check("completeness", report.completeness_residual, tol),
        _check("adjointness", report.adjointness_residual, tol),
    ]
    return {"checks": checks, "relations": report.as_dict()}


def cmd_frame_bounds(cfg):
    nu, J, K = int(cfg["nu"]), int(cfg["J"]), int(cfg["K"])
    if J < 0 or K < 0:
        raise UsageError("J and K must be non-negative")
    kind = cfg["family"]
    if kind == "haar":
        fam = frames.haar_family(nu, J, K)
    elif kind == "zero":
        fam = frames.generate_wavelets(taps=(np.arange(nu + 1), np.zeros((nu + 1, nu + 1))), J=J, K=K)
    elif kind == "bessel-series":
        b = _parse_coeffs(cfg["coeffs"]) or {0: 1 / math.sqrt(2)}
        fam = frames.generate_wavelets(filter_bank.bessel_series_filters(b, nu), J, K)
    else:
        raise UsageError(f"unknown family {kind!r}")
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", frames.TruncationWarning)
        rep = frames.frame_bounds_estimate(fam, int(cfg["n_tests"]), int(cfg["seed"]))
    member = fam.member(1, 0, 0)
    parseval = frames.frame_sum(frames.step_test_function(*member), fam) if kind != "zero" else 0.0
    checks = [_check("member_parseval", abs(parseval - 1), cfg["tol"])]
    if kind == "zero" or rep.ratio_max == 0:
        checks.append(_check("nonzero_family", math.inf, 0.0))
    return {
        "checks": checks,
        "frame": rep.as_dict(),
        "warnings": sorted({str(w.message) for w in caught}),
    }


COMMANDS = {
    "specfun-check": cmd_specfun_check,
    "transform": cmd_transform,
    "build-bank": cmd_build_bank,
    "check-cuntz": cmd_check_cuntz,
    "frame-bounds": cmd_frame_bounds,
}


# ---------------------------------------------------------------------------
# Plumbing
# ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser():
    p = _Parser(prog="hankel-mra", description="Hankel-transform multiresolution toolkit")
    p.add_argument("--config", help="JSON file with settings (per command or flat)")
    p.add_argument("--output", help="write the report here instead of stdout")
    p.add_argument("--format", choices=("json", "csv"), default=None)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("specfun-check", help="special-function identity suite")
    s.add_argument("--tol", type=float)
    s.add_argument("--K", type=int)

    s = sub.add_parser("transform", help="Hankel or q-Hankel transform of a sample file")
    s.add_argument("--direction", choices=("forward", "inverse"))
    s.add_argument("--alpha", type=float)
    s.add_argument("--q", type=float)
    s.add_argument("--input", help="CSV with header index,node,re,im ('gaussian' for the bundled sample)")
    s.add_argument("--round-trip", dest="round_trip", action="store_true", default=None)
    s.add_argument("--support", type=float)
    s.add_argument("--tol", type=float)

    s = sub.add_parser("build-bank", help="build, complete and certify a filter bank")
    s.add_argument("--nu", type=int)
    s.add_argument("--variant", choices=filter_bank.VARIANTS)
    s.add_argument("--q", type=float)
    s.add_argument("--m0", choices=("haar", "annular", "annular-bessel", "random", "bessel-series"))
    s.add_argument("--coeffs", help='JSON coefficients, e.g. {"0": 0.7071}')
    s.add_argument("--seed", type=int)
    s.add_argument("--grid", type=int)
    s.add_argument("--tol", type=float)
    s.add_argument("--perturb", type=float, help="scale filter 1 by this factor")

    s = sub.add_parser("check-cuntz", help="Cuntz relations for a bank built by build-bank")
    s.add_argument("--bank")
    s.add_argument("--n-tests", dest="n_tests", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--levels", type=int)
    s.add_argument("--tol", type=float)
    s.add_argument("--perturb", type=float)

    s = sub.add_parser("frame-bounds", help="frame bounds of a wavelet family")
    s.add_argument("--nu", type=int)
    s.add_argument("--J", type=int)
    s.add_argument("--K", type=int)
    s.add_argument("--n-tests", dest="n_tests", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--family", choices=("haar", "zero", "bessel-series"))
    s.add_argument("--coeffs")
    s.add_argument("--tol", type=float)
    return p


def resolve_config(args):
    """defaults < config file < command-line flags."""
    cmd = args.command
    cfg = dict(DEFAULTS[cmd])
    fmt = "json"
    if args.config:
        try:
            doc = json.loads(_read_file(args.config))
        except json.JSONDecodeError as exc:
            raise UsageError(f"malformed config file: {exc}") from None
        if not isinstance(doc, dict):
            raise UsageError("config file must hold a JSON object")
        section = doc.get(cmd, doc)
        if not isinstance(section, dict):
            raise UsageError(f"config section {cmd!r} must be an object")
        unknown = set(section) - set(cfg) - set(COMMANDS) - {"format"}
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        fmt = section.get("format", doc.get("format", fmt))
        cfg.update({k: v for k, v in section.items() if k in cfg})
    for k in cfg:
        v = getattr(args, k, None)
        if v is not None:
            cfg[k] = v
    if args.format:
        fmt = args.format
    _validate(cmd, cfg)
    return cfg, fmt


def _validate(cmd, cfg):
    for k in ("tol",):
        if k in cfg and not (isinstance(cfg[k], (int, float)) and cfg[k] > 0):
            raise UsageError("tolerances must be positive")
    q = cfg.get("q")
    if q is not None and not (isinstance(q, (int, float)) and 0 < q < 1):
        raise UsageError("q must lie in (0, 1)")
    if "nu" in cfg and not (isinstance(cfg["nu"], int) and cfg["nu"] >= 0):
        raise UsageError("nu must be a non-negative integer")
    if cmd == "build-bank" and cfg["variant"] == "q_spiral" and q is None:
        raise UsageError("q_spiral needs --q")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    return obj


def render(report, fmt):
    if fmt == "json":
        return json.dumps(_jsonable(report), sort_keys=True, indent=2) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["command", "identity", "params", "residual", "threshold", "passed"])
    for c in report["checks"]:
        w.writerow([report["command"], c["name"], json.dumps(_jsonable(c["params"]), sort_keys=True),
                    repr(c["residual"]), repr(c["threshold"]), c["passed"]])
    return buf.getvalue()


def _destination(path, command, fmt):
    base = os.environ.get(OUTPUT_ENV)
    if path is None:
        return None if not base else os.path.join(base, f"{command}.{fmt}")
    if base and not os.path.isabs(path):
        return os.path.join(base, path)
    return path


def run(argv=None, stdout=None):
    stdout = sys.stdout if stdout is None else stdout
    try:
        args = build_parser().parse_args(argv)
        cfg, fmt = resolve_config(args)
        with np.errstate(all="ignore"):
            body = COMMANDS[args.command](cfg)
    except UsageError as exc:
        print(f"hankel-mra: error: {exc}", file=sys.stderr)
        return EXIT_USAGE, None
    report = {"command": args.command, "config": cfg, **body}
    report["passed"] = all(c["passed"] for c in report["checks"])
    text = render(report, fmt)
    dest = _destination(args.output, args.command, fmt)
    if dest is None:
        stdout.write(text)
    else:
        os.makedirs(os.path.dirname(os.path.abspath(dest)), exist_ok=True)
        with open(dest, "w", encoding="utf-8") as fh:
            fh.write(text)
    return (EXIT_OK if report["passed"] else EXIT_FAIL), report


def main(argv=None):
    code, _ = run(argv)
    return code


if __name__ == "__main__":
    sys.exit(main())
