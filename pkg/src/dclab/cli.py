"""Command-line front end.

    dclab <command> [--config FILE] [--a --b --nu --eps --c EXPR --beta EXPR
                     --J --M --P --R --tol --threads --seed --out DIR]

Every run writes ``<out>/<command>.json`` (a versioned record holding the
resolved configuration and the results), CSV tables next to it, and
``<out>/config.json``, which re-runs the same job when passed to --config.

Exit codes: 0 success, 1 numeric failure, 2 invalid input, 3 invariant
violation (including a failed ``verify`` suite).
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import traceback
from pathlib import Path

SCHEMA = "dclab.result/1"
COMMANDS = ("spectrum", "basic", "kernel", "solve-homogeneous", "solve-T", "semilinear",
            "second-order", "normalize", "verify")

# name -> (type, default, help)
OPTIONS = {
    "a": (float, 1.0, "Re λ"),
    "b": (float, 1.0, "coefficient of ε in Im λ_ε"),
    "nu": (float, 0.0, "shift ν in [0, 1)"),
    "eps": (float, 1.0, "ε"),
    "c": (str, "0.5*i*exp(i*t)", "c(t) as an expression in t, or @FILE"),
    "beta": (str, "0", "β(t) for second-order, expression in t"),
    "J": (int, 8, "truncation level; spectrum window is [-J, J]"),
    "M": (int, 128, "angular samples"),
    "P": (int, 64, "radial samples"),
    "R": (float, 1.0, "outer radius"),
    "tol": (float, 1e-10, "tolerance"),
    "threads": (int, 1, "BLAS/OpenMP worker threads"),
    "seed": (int, 0, "seed for randomized data"),
    "out": (str, "dclab-out", "output directory"),
    # command-specific
    "F": (str, "r^2*(1-r)^2*exp(i*t)", "solve-T right-hand side in (r, t)"),
    "G": (str, "0.5", "semilinear factor G(r, t) in r^tau |v| G"),
    "tau": (float, 0.5, "semilinear weight exponent"),
    "j0": (int, 1, "level of the seed basic solution / modified kernel"),
    "branch": (str, "+", "branch of the seed basic solution"),
    "mode": (str, "plain", "kernel variant: plain, modified or hat"),
    "a11": (str, "x^2+y^2", "normalize: coefficient of u_xx"),
    "a12": (str, "0", "normalize: half the coefficient of u_xy"),
    "a22": (str, "", "normalize: coefficient of u_yy (default: a11)"),
    "a1": (str, "0", "normalize: coefficient of u_x"),
    "a2": (str, "0", "normalize: coefficient of u_y"),
    "rho0": (float, 0.1, "normalize: outer radius of the Richardson sequence"),
}


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dclab", description="Degenerate elliptic equations on a circle.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", help="JSON or TOML file whose keys mirror the flags")
    for name, (typ, _, text) in OPTIONS.items():
        ap.add_argument(f"--{name}", type=typ, default=None, help=text)
    return ap


def _load_config(path: str) -> dict:
    from .errors import InvalidInput

    p = Path(path)
    try:
        raw = p.read_bytes()
    except OSError as exc:
        raise InvalidInput(f"cannot read config {path}: {exc.strerror}") from None
    try:
        if p.suffix.lower() == ".toml":
            try:
                import tomllib
            except ModuleNotFoundError:   # Python < 3.11
                import tomli as tomllib
            data = tomllib.loads(raw.decode())
        else:
            data = json.loads(raw)
    except Exception as exc:  # noqa: BLE001  (any decoder error is bad input)
        raise InvalidInput(f"malformed config {path}: {exc}") from None
    if not isinstance(data, dict):
        raise InvalidInput("config must be a table of option values")
    data = dict(data)
    data.pop("command", None)
    unknown = sorted(set(data) - set(OPTIONS))
    if unknown:
        raise InvalidInput(f"unknown config keys: {', '.join(unknown)}")
    out = {}
    for k, v in data.items():
        typ = OPTIONS[k][0]
        try:
            if typ is int and (isinstance(v, bool) or float(v) != int(v)):
                raise ValueError
            out[k] = typ(v)
        except (TypeError, ValueError):
            raise InvalidInput(f"config key {k!r}: expected {typ.__name__}, got {v!r}") from None
    return out


def resolve(args: argparse.Namespace) -> dict:
    """Defaults < config file < explicit flags."""
    cfg = {k: spec[1] for k, spec in OPTIONS.items()}
    if args.config:
        cfg.update(_load_config(args.config))
    for k in OPTIONS:
        v = getattr(args, k)
        if v is not None:
            cfg[k] = v
    if not cfg["a22"]:
        cfg["a22"] = cfg["a11"]
    return cfg


# ---------------------------------------------------------------------------
# JSON / CSV output

def _jsonable(x):
    import numpy as np

    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (complex, np.complexfloating)):
        return {"re": _jsonable(float(x.real)), "im": _jsonable(float(x.imag))}
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if np.isfinite(x) else repr(x)
    return x


def _write_csv(path: Path, header, rows):
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, float) else v for v in row])


# ---------------------------------------------------------------------------
# ingestion

def _periodic(expr_src: str, what: str, M: int = 257):
    """Sample an expression in t and trim it to its numerical band."""
    import numpy as np

    from .errors import InvalidInput
    from .expr import parse_expression
    from .periodic import PeriodicFunction, grid

    if expr_src.startswith("@"):
        try:
            expr_src = Path(expr_src[1:]).read_text().strip()
        except OSError as exc:
            raise InvalidInput(f"cannot read {what} file: {exc.strerror}") from None
    e = parse_expression(expr_src)
    extra = e.variables() - {"t"}
    if extra:
        raise InvalidInput(f"{what} may only depend on t, found {sorted(extra)}")
    t = grid(M)
    vals = np.broadcast_to(np.asarray(e(t=t), dtype=complex), t.shape)
    if not np.all(np.isfinite(vals)):
        raise InvalidInput(f"{what} is not finite on the circle")
    f = PeriodicFunction(vals.copy())
    bw = f.bandwidth()
    if bw > M // 3:
        import warnings
        warnings.warn(f"{what} is not resolved by {M} samples (bandwidth {bw})", RuntimeWarning,
                      stacklevel=2)
        return f
    return f.resample(max(33, 4 * bw + 1))


def _spec(cfg):
    from .core import OperatorSpec

    c = _periodic(cfg["c"], "c")
    return OperatorSpec(cfg["a"], cfg["b"], cfg["nu"], cfg["eps"], c)


def _check_grid(cfg):
    from .errors import InvalidInput

    for k in ("J", "M", "P"):
        if cfg[k] < 1:
            raise InvalidInput(f"{k} must be positive")
    if cfg["M"] < 8 or cfg["P"] < 8:
        raise InvalidInput("M and P must be at least 8")
    if not cfg["R"] > 0:
        raise InvalidInput("R must be positive")
    if not cfg["tol"] > 0:
        raise InvalidInput("tol must be positive")
    if cfg["branch"] not in ("+", "-", "±"):
        raise InvalidInput("branch must be +, - or ±")
    if cfg["mode"] not in ("plain", "modified", "hat"):
        raise InvalidInput("mode must be plain, modified or hat")
    if cfg["M"] < 2 * cfg["J"] + 1:
        import warnings

        warnings.warn(f"M = {cfg['M']} < 2J+1: angular modes of the top levels alias", RuntimeWarning,
                      stacklevel=2)


def _sv_row(v):
    return [v.j, v.branch, float(v.sigma.real), float(v.sigma.imag), v.multiplicity, float(v.residual)]


# ---------------------------------------------------------------------------
# commands; each returns (results, {table name: (header, rows)}, ok)

def cmd_spectrum(cfg):
    from .spectrum import find_spectral_values

    spec = _spec(cfg)
    win = find_spectral_values(spec, -cfg["J"], cfg["J"], tol=min(cfg["tol"], 1e-8))
    rows = [_sv_row(v) for v in win.values]
    res = {"gamma": win.gamma, "J0": win.J0, "count": len(rows), "gaps": win.gaps,
           "max_residual": max((r[-1] for r in rows), default=0.0)}
    return res, {"spectrum": (["j", "branch", "re_sigma", "im_sigma", "multiplicity", "residual"], rows)}, True


def cmd_basic(cfg):
    from .basic import basic_family, character, system_residual
    from .periodic import winding_number
    from .spectrum import find_spectral_values

    spec = _spec(cfg)
    win = find_spectral_values(spec, -cfg["J"], cfg["J"], tol=min(cfg["tol"], 1e-8))
    rows = []
    worst = 0.0
    for sv in win.distinct():
        for w in basic_family(spec, sv):
            ch = character(w)
            res = system_residual(spec, w)
            worst = max(worst, res)
            ind_phi = winding_number(w.phi) if w.phi.abs_min() > 1e-10 else ""
            rows.append([w.j, w.branch, float(w.sigma.real), float(w.sigma.imag), w.kind, w.dominant,
                         float(ch[0].real), float(ch[0].imag), ch[1], ind_phi, res])
    header = ["j", "branch", "re_sigma", "im_sigma", "kind", "dominant",
              "char_re", "char_im", "char_index", "ind_phi", "system_residual"]
    return {"count": len(rows), "max_system_residual": worst, "gaps": win.gaps}, {"basic": (header, rows)}, True


def cmd_kernel(cfg):
    import numpy as np

    from .kernels import decomposed_tail_bound, kernel_context, kernel_decomposed

    spec = _spec(cfg)
    ctx = kernel_context(spec, J=cfg["J"], tol=min(cfg["tol"], 1e-8))
    rho, theta, t = cfg["R"] / 2, 0.0, 0.5
    d = np.linspace(-1.5, 1.5, cfg["P"])
    d = d[np.abs(d) >= 0.2]
    r = rho * np.exp(d)
    kv = kernel_decomposed(ctx, r, t, rho, theta)
    tail = np.broadcast_to(decomposed_tail_bound(ctx, r, t, rho, theta), r.shape)
    rows = [[float(r[i]), t, rho, theta, float(kv.omega1[i].real), float(kv.omega1[i].imag),
             float(kv.omega2[i].real), float(kv.omega2[i].imag), float(tail[i])] for i in range(r.size)]
    header = ["r", "t", "rho", "theta", "re_omega1", "im_omega1", "re_omega2", "im_omega2", "tail_bound"]
    res = {"terms": len(ctx.terms), "max_tail_bound": float(tail.max()),
           "imaginary_exponents": [t_.sigma for t_ in ctx.imaginary_terms()]}
    return res, {"kernel": (header, rows)}, True


def cmd_solve_homogeneous(cfg):
    """Laurent synthesis from seeded coefficients, recovery, and the Cauchy
    reconstruction from the two boundary circles of A(R/4, R)."""
    import numpy as np

    from .core import log_radii
    from .cylinder import (LaurentExpansion, cauchy_integral, circle_curve, laurent_coefficients,
                           laurent_evaluate, laurent_synthesize)
    from .kernels import kernel_context

    spec = _spec(cfg)
    ctx = kernel_context(spec, J=cfg["J"], tol=min(cfg["tol"], 1e-8))
    rng = np.random.default_rng(cfg["seed"])
    Jl = min(4, cfg["J"])
    coeffs = {(t.j, t.branch): float(rng.normal()) for t in ctx.terms if abs(t.j) <= Jl}
    R = cfg["R"]
    u = laurent_synthesize(ctx, coeffs, log_radii(R / 4, R, cfg["P"]), cfg["M"])
    ex = laurent_coefficients(ctx, u, R0=R / 2, J=Jl)
    coef_err = max(abs(ex[k] - coeffs.get(k, 0.0)) for k in ex.coefficients)
    exp = LaurentExpansion(coeffs, ctx, 1.0, Jl)
    f = lambda r, t: laurent_evaluate(exp, r, t)  # noqa: E731
    curves = [circle_curve(R, f, 512, 1), circle_curve(R / 4, f, 512, -1)]
    rt = R * np.array([0.35, 0.5, 0.7, 0.85])
    tt = np.array([0.3, 2.0, 4.0, 5.5])
    rec = cauchy_integral(ctx, curves, rt, tt)
    exact = f(rt, tt)
    err = float(np.abs(rec - exact).max())
    rows = [[k[0], k[1], coeffs.get(k, 0.0), ex[k]] for k in sorted(ex.coefficients)]
    pts = [[float(rt[i]), float(tt[i]), float(rec[i].real), float(rec[i].imag),
            float(exact[i].real), float(exact[i].imag)] for i in range(rt.size)]
    res = {"coefficient_error": coef_err, "drift": ex.drift, "cauchy_error": err, "R0": ex.R0}
    tables = {"laurent": (["j", "branch", "synthesized", "recovered"], rows),
              "cauchy": (["r", "t", "re_u", "im_u", "re_exact", "im_exact"], pts)}
    return res, tables, True


def _rt_expression(src, what):
    from .errors import InvalidInput
    from .expr import parse_expression

    e = parse_expression(src)
    extra = e.variables() - {"r", "t"}
    if extra:
        raise InvalidInput(f"{what} may only depend on r and t, found {sorted(extra)}")
    return e


def cmd_solve_T(cfg):
    import numpy as np

    from .core import CylinderFunction, log_radii
    from .cylinder import solve_T
    from .kernels import kernel_context

    spec = _spec(cfg)
    e = _rt_expression(cfg["F"], "F")
    ctx = kernel_context(spec, J=cfg["J"], tol=min(cfg["tol"], 1e-8))
    R = cfg["R"]
    radii = log_radii(R * 1e-3, R, cfg["P"])
    M = cfg["M"]
    rr, tt = np.meshgrid(radii, 2 * np.pi * np.arange(M) / M, indexing="ij")
    F = CylinderFunction(radii, np.broadcast_to(np.asarray(e(r=rr, t=tt), dtype=complex), rr.shape).copy())
    rep = solve_T(ctx, F, mode=cfg["mode"], j0=cfg["j0"], branch=cfg["branch"], tol=1e-4)
    u = rep.solution.values
    rows = [[float(radii[i]), float(np.abs(u[i]).max()), float(np.abs(F.values[i]).max())]
            for i in range(radii.size)]
    res = {"residual": rep.residual, "flagged": rep.flagged, "bound_check": rep.bound_check,
           "tf0_max": float(np.abs(rep.extra["tf0"]).max()), "tail": rep.extra["tail"],
           "norm_pa": rep.extra["norm_pa"], "p": rep.extra["p"]}
    return res, {"solve_T": (["r", "max_abs_TF", "max_abs_F"], rows)}, not rep.flagged


def cmd_semilinear(cfg):
    import numpy as np

    from .core import CylinderFunction, log_radii
    from .cylinder import semilinear_solve
    from .kernels import kernel_context

    spec = _spec(cfg)
    e = _rt_expression(cfg["G"], "G")
    ctx = kernel_context(spec, J=max(cfg["J"], abs(cfg["j0"])), tol=min(cfg["tol"], 1e-8))
    term = next((t for t in ctx.terms if t.j == cfg["j0"] and t.branch in (cfg["branch"], "±")), None)
    if term is None:
        from .errors import InvalidInput
        raise InvalidInput(f"no basic solution ({cfg['j0']}, {cfg['branch']}) in the window")
    R = cfg["R"]
    radii = log_radii(R * 1e-4, R, cfg["P"])
    u0 = CylinderFunction.sample(lambda r, t: term.direct(r, t), radii, cfg["M"])

    def G(v, r, t):
        return np.broadcast_to(np.asarray(e(r=r, t=t), dtype=complex), v.shape)

    rep = semilinear_solve(ctx, G, cfg["tau"], u0, mode=cfg["mode"], j0=cfg["j0"],
                           branch=cfg["branch"], tol=cfg["tol"], res_tol=1e-3)
    rows = [[i + 1, c] for i, c in enumerate(rep.extra["changes"])]
    res = {"iterations": rep.iterations, "residual": rep.residual, "flagged": rep.flagged,
           "sup": rep.bound_check, "ratio_min": rep.extra.get("ratio_min"),
           "ratio_max": rep.extra.get("ratio_max"), "seed": [term.j, term.branch, term.sigma]}
    return res, {"picard": (["iteration", "change"], rows)}, not rep.flagged


def cmd_second_order(cfg):
    import numpy as np

    from .core import CylinderFunction, log_radii
    from .second_order import apply_P, build_P, hypothesis_H_check, p_series, radial_solutions

    lam = complex(cfg["a"], cfg["b"] * cfg["eps"])
    beta = _periodic(cfg["beta"], "beta")
    p = build_P(lam, beta)
    rep = hypothesis_H_check(p, J=cfg["J"])
    rad = radial_solutions(p)
    # a seeded series solution and its P-residual
    rng = np.random.default_rng(cfg["seed"])
    radii = log_radii(cfg["R"] * 0.05, cfg["R"], cfg["P"])
    t = 2 * np.pi * np.arange(cfg["M"]) / cfg["M"]
    coeffs = {(j, br): float(rng.normal()) for j in (1, 2) for br in ("+", "-")}
    res_series = None
    try:
        vals = p_series(p, 0.0, coeffs, radii[:, None], t[None, :])
        Pu = apply_P(p, CylinderFunction(radii, vals.astype(complex))).values
        res_series = float(np.abs(Pu[4:-4]).max() / max(1.0, np.abs(vals).max()))
    except Exception as exc:  # noqa: BLE001
        from .errors import InvalidInput
        if not isinstance(exc, (KeyError, InvalidInput)):
            raise
    res = {"lam": lam, "k": p.k, "lb_residual": p.lb_residual, "hypothesis": rep.verdict,
           "witness": rep.witness, "notes": rep.notes,
           "radial": None if rad is None else {"k": rad.k, "kind": rad.kind},
           "series_P_residual": res_series}
    rows = [[k_[0], k_[1], v] for k_, v in sorted(coeffs.items())]
    return res, {"series": (["j", "branch", "coefficient"], rows)}, True


def cmd_normalize(cfg):
    from .normalizer import PlaneOperator, normalize

    op = PlaneOperator(cfg["a11"], cfg["a12"], cfg["a22"], cfg["a1"], cfg["a2"])
    rep = normalize(op, rho0=cfg["rho0"], tol=max(cfg["tol"], 1e-12))
    est = rep.estimate
    rows = [[float(r), complex(s).real, complex(s).imag] for r, s in zip(est.radii, est.sequence)]
    res = {"mu": rep.mu, "lam": rep.lam, "abs_mu": abs(rep.mu), "C1": rep.C1_est, "C2": rep.C2_est,
           "vector_field_invariant": rep.mu.conjugate(), "richardson_ratios": est.ratios,
           "notes": rep.notes}
    return res, {"mu_sequence": (["rho", "re_mu", "im_mu"], rows)}, True


def cmd_verify(cfg):
    from .verify import run_suite

    checks = run_suite(cfg, _spec(cfg))
    rows = [[c["name"], c["value"], c["tol"], "pass" if c["ok"] else "FAIL"] for c in checks]
    ok = all(c["ok"] for c in checks)
    res = {"passed": sum(c["ok"] for c in checks), "total": len(checks), "checks": checks}
    return res, {"verify": (["check", "value", "tolerance", "status"], rows)}, ok


HANDLERS = {
    "spectrum": cmd_spectrum,
    "basic": cmd_basic,
    "kernel": cmd_kernel,
    "solve-homogeneous": cmd_solve_homogeneous,
    "solve-T": cmd_solve_T,
    "semilinear": cmd_semilinear,
    "second-order": cmd_second_order,
    "normalize": cmd_normalize,
    "verify": cmd_verify,
}


def run(command: str, cfg: dict) -> int:
    """Dispatch one job and write its artifacts; returns the exit code."""
    import warnings

    import numpy as np

    from . import __version__
    from .errors import DclabError, InvalidInput

    if command not in HANDLERS:
        raise InvalidInput(f"unknown command {command!r}")
    out = Path(cfg["out"])
    with warnings.catch_warnings(record=True) as caught, np.errstate(all="ignore"):
        warnings.simplefilter("always")
        try:
            _check_grid(cfg)
            results, tables, ok = HANDLERS[command](cfg)
            status, code, error = ("ok" if ok else "invariant-violation"), (0 if ok else 3), None
        except DclabError as exc:
            results, tables = {}, {}
            status, code, error = type(exc).__name__, exc.exit_code, str(exc)
    record = {
        "schema": SCHEMA,
        "version": __version__,
        "command": command,
        "status": status,
        "exit_code": code,
        "error": error,
        "config": cfg,
        "results": results,
        "warnings": sorted({str(w.message) for w in caught}),
        "tables": [f"{name}.csv" for name in tables],
    }
    out.mkdir(parents=True, exist_ok=True)
    (out / f"{command}.json").write_text(json.dumps(_jsonable(record), indent=2, sort_keys=True) + "\n")
    (out / "config.json").write_text(json.dumps(dict(cfg, command=command), indent=2, sort_keys=True) + "\n")
    for name, (header, rows) in tables.items():
        _write_csv(out / f"{name}.csv", header, rows)
    summary = f"{command}: {status}"
    if error:
        summary += f" ({error})"
    print(summary, file=sys.stderr if code else sys.stdout)
    return code


def main(argv=None) -> int:
    ap = _parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:       # argparse usage errors exit with 2 already
        return int(exc.code or 0)
    from .errors import DclabError, InvalidInput

    try:
        cfg = resolve(args)
        if cfg["threads"] < 1:
            raise InvalidInput("threads must be positive")
        # only effective before numpy is first imported, as in the console script
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ[var] = str(cfg["threads"])
        return run(args.command, cfg)
    except DclabError as exc:
        print(f"dclab: {exc}", file=sys.stderr)
        return exc.exit_code
    except Exception:               # anything unexpected is an internal invariant failure
        traceback.print_exc()
        return 3


if __name__ == "__main__":
    sys.exit(main())
