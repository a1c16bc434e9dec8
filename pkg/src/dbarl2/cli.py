"""Config-driven verification runner.

    dbarl2 <identities|conditions|domains|approx|solve|majorant>
           --config path [--out dir] [--seed N]

One JSON config per invocation.  Each command emits a JSON-lines report plus
a CSV summary (columns check_id,lhs,rhs,stderr,margin,pass); identical
configs reproduce byte-identical report files.  Exit codes: 0 all checks
pass, 1 any check failed, 2 config error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import dbarops, domains, forms, gaussmeasure, multiindex, reduction, solver, weights
from .symfun import CylinderFn, delbar_op


@dataclass
class CheckRecord:
    check_id: str
    lhs: float
    rhs: float
    stderr: float
    margin: float
    passed: bool
    runtime_ms: float = 0.0

    def row(self):
        return [self.check_id, repr(float(self.lhs)), repr(float(self.rhs)),
                repr(float(self.stderr)), repr(float(self.margin)),
                "true" if self.passed else "false"]

    def json_obj(self):
        # runtime is console-only: reports must be byte-identical across runs
        return {"check_id": self.check_id, "lhs": float(self.lhs),
                "rhs": float(self.rhs), "stderr": float(self.stderr),
                "margin": float(self.margin), "pass": bool(self.passed)}


class ConfigError(ValueError):
    pass


def _spec_from(config) -> gaussmeasure.GaussianSpec:
    n = int(config.get("trunc_dim", 2))
    rule = config.get("a_rule", "default")
    if rule == "default":
        return gaussmeasure.GaussianSpec(trunc_dim=n)
    if isinstance(rule, list):
        vals = [float(v) for v in rule]
        if len(vals) < n:
            raise ConfigError("a_rule list shorter than trunc_dim")
        return gaussmeasure.GaussianSpec(trunc_dim=n, a_rule=lambda i: vals[i - 1])
    raise ConfigError(f"unknown a_rule {rule!r}")


def _quad_from(config, seed) -> gaussmeasure.Quadrature:
    q = config.get("quadrature", {"kind": "monte_carlo", "N": 50000})
    kind = q.get("kind", "monte_carlo")
    if kind == "monte_carlo":
        return gaussmeasure.Quadrature("monte_carlo", N=int(q.get("N", 50000)),
                                       seed=int(q.get("seed", seed)))
    if kind == "gauss_hermite":
        return gaussmeasure.Quadrature("gauss_hermite",
                                       nodes_per_axis=int(q.get("nodes_per_axis", 16)))
    raise ConfigError(f"unknown quadrature kind {kind!r}")


def _family_from(config) -> multiindex.WeightFamily:
    fam = config.get("family", {"kind": "constant", "value": 1.0})
    kind = fam.get("kind", "constant")
    if kind == "constant":
        return multiindex.constant_family(float(fam.get("value", 1.0)))
    if kind == "multiplicative":
        mu_expr = fam.get("mu", "1.0")
        mu = eval("lambda j: " + mu_expr, {"__builtins__": {}}, {})  # config-local rule
        return multiindex.multiplicative_family(mu=mu)
    if kind == "prior_work":
        spec = _spec_from(config)
        return multiindex.prior_work_family(spec.a)
    raise ConfigError(f"unknown family kind {kind!r}")


def _domain_from(config) -> domains.Domain:
    d = config.get("domain", {"kind": "ball", "r": 1.0})
    kind = d.get("kind", "ball")
    if kind == "ball":
        center = [complex(c[0], c[1]) for c in d.get("center", [])]
        return domains.ball(center=center, r=float(d.get("r", 1.0)))
    if kind == "polydisc":
        return domains.polydisc()
    if kind == "whole_space":
        return domains.whole_space()
    raise ConfigError(f"unknown domain kind {kind!r}")


def _forms_from(config, family) -> list:
    out = []
    for lit in config.get("forms", []):
        degree = tuple(lit.get("degree", (0, 1)))
        out.append(forms.parse_form_literal(lit["entries"], degree, family,
                                            support_radius=lit.get("support_radius")))
    return out


def _tol(config, name, default):
    return float(config.get("tolerances", {}).get(name, default))


def _pass_stat(margin, stderr, tol):
    if stderr > 0:
        return margin >= -3.0 * stderr
    return margin >= -tol


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_identities(config, seed) -> list:
    spec = _spec_from(config)
    quad = _quad_from(config, seed)
    family = _family_from(config)
    tol = _tol(config, "deterministic", 1e-8)
    recs = []
    fl = _forms_from(config, family)
    test_fns = []
    for f in fl:
        for key, fn in f.coeffs.items():
            test_fns.append(fn)
    if not test_fns:
        return recs

    rng = np.random.default_rng(seed)
    pts = gaussmeasure.sample(spec, 100, seed + 3)

    t0 = time.perf_counter()
    g0 = test_fns[0]
    wrong_a1 = config.get("perturb", {}).get("gauss_green_a1")
    if wrong_a1 is None:
        rep = gaussmeasure.gauss_green_residual(g0, 1, spec, quad)
        lhs, rhs = abs(rep.lhs), abs(rep.rhs)
        residual, stderr = rep.residual, rep.stderr
    else:
        # deliberately mismatched scale on the right side only
        pts, wq = quad.nodes_weights(spec)
        la = g0.d_dx(1)(pts)
        rb = (pts[:, 0] / float(wrong_a1) ** 2) * g0(pts)
        est = gaussmeasure.paired_residual(la, rb, wq, quad.deterministic)
        lhs = abs(float(np.sum(wq * la).real))
        rhs = abs(float(np.sum(wq * rb).real))
        residual, stderr = abs(est.mean), est.stderr
    recs.append(CheckRecord("gauss_green_x1", lhs, rhs, stderr,
                            -residual, _pass_stat(-residual, stderr, tol),
                            (time.perf_counter() - t0) * 1e3))

    g1 = test_fns[min(1, len(test_fns) - 1)]
    for weighted in (False, True):
        t0 = time.perf_counter()
        varphi = CylinderFn(config.get("varphi", "0"))
        est = dbarops.ibp_residual(g0, g1, 1, spec, quad, weighted=weighted,
                                   varphi=varphi)
        name = "ibp_sigma" if weighted else "ibp_delta"
        recs.append(CheckRecord(name, abs(est.mean), 0.0, est.stderr,
                                -abs(est.mean), _pass_stat(-abs(est.mean), est.stderr, tol),
                                (time.perf_counter() - t0) * 1e3))

    t0 = time.perf_counter()
    ctx = dbarops.OperatorContext(spec, family, CylinderFn(config.get("w1", "0")),
                                  CylinderFn(config.get("w2", "0")),
                                  CylinderFn(config.get("w3", "0")),
                                  CylinderFn(config.get("varphi", "0")))
    res = dbarops.commutator_residual(g0, 1, 1, ctx, pts)
    recs.append(CheckRecord("commutator", res, 0.0, 0.0, -res, res <= 1e-10,
                            (time.perf_counter() - t0) * 1e3))

    t0 = time.perf_counter()
    u = fl[0]
    st = dbarops.st_complex_residual(u, pts)
    recs.append(CheckRecord("s_after_t_zero", st, 0.0, 0.0, -st, st <= 1e-10,
                            (time.perf_counter() - t0) * 1e3))

    if len(fl) >= 2:
        t0 = time.perf_counter()
        est = dbarops.adjoint_residual(fl[0], fl[1], ctx, quad)
        recs.append(CheckRecord("adjoint", abs(est.mean), 0.0, est.stderr,
                                -abs(est.mean), _pass_stat(-abs(est.mean), est.stderr, tol),
                                (time.perf_counter() - t0) * 1e3))
        t0 = time.perf_counter()
        g = dbarops.dbar(fl[0])
        I = ()
        K = (1,) * (fl[0].degree[1] + 1) if fl[0].degree[1] == 0 else None
        if K is not None:
            est = dbarops.weak_dbar_residual(fl[0], g, g0, I, K, spec, quad)
            recs.append(CheckRecord("weak_dbar", abs(est.mean), 0.0, est.stderr,
                                    -abs(est.mean),
                                    _pass_stat(-abs(est.mean), est.stderr, tol),
                                    (time.perf_counter() - t0) * 1e3))

    t0 = time.perf_counter()
    m = CylinderFn(config.get("multiplier", "x(1)"))
    res = dbarops.multiplier_residual(m, fl[0], ctx, pts)
    recs.append(CheckRecord("multiplier", res, 0.0, 0.0, -res, res <= 1e-10,
                            (time.perf_counter() - t0) * 1e3))
    return recs


def cmd_conditions(config, seed) -> list:
    family = _family_from(config)
    s = int(config.get("s", 0))
    t = int(config.get("t", 0))
    max_index = int(config.get("max_index", 6))
    t0 = time.perf_counter()
    rep = multiindex.check_conditions(family, max_index, s, t)
    ms = (time.perf_counter() - t0) * 1e3
    return [
        CheckRecord("condition1_c1_finite", rep.c1_sup, float("inf"), 0.0,
                    float("inf") - 0 if rep.c1_sup < float("inf") else -1.0,
                    rep.c1_sup < float("inf"), ms),
        CheckRecord("condition2_c0_positive", rep.c0_inf, 0.0, 0.0, rep.c0_inf,
                    rep.c0_inf > 0.0, ms),
        CheckRecord("condition3_multiplicative", float(len(rep.violations)), 0.0,
                    0.0, -float(len(rep.violations)), rep.multiplicative_ok, ms),
    ]


def cmd_domains(config, seed) -> list:
    dom = _domain_from(config)
    n = int(config.get("trunc_dim", 2))
    N = int(config.get("scan_points", 50))
    t0 = time.perf_counter()
    pts = dom.sample_interior(n, N, seed)
    eig = domains.levi_min_eigs(dom, pts, n)
    ms = (time.perf_counter() - t0) * 1e3
    recs = [CheckRecord("levi_min_eig", float(np.min(eig)), -1e-9, 0.0,
                        float(np.min(eig)) + 1e-9, bool(np.min(eig) >= -1e-9), ms)]
    if dom.boundary_distance is not None:
        t0 = time.perf_counter()
        rep = domains.uniformly_included(dom, float(config.get("tau", 1.0)), n=n,
                                         seed=seed)
        recs.append(CheckRecord("sublevel_uniform_inclusion", rep.margin, 0.0, 0.0,
                                rep.margin, rep.included,
                                (time.perf_counter() - t0) * 1e3))
    return recs


def cmd_approx(config, seed, out_dir: Path) -> list:
    spec = _spec_from(config)
    family = _family_from(config)
    dom = _domain_from(config)
    fl = _forms_from(config, family)
    if not fl:
        return []
    t0 = time.perf_counter()
    report = reduction.approx_pipeline(
        fl[0], dom, rho=float(config.get("rho", 2.0)),
        n_ladder=[int(v) for v in config.get("n_ladder", [spec.trunc_dim])],
        delta_ladder=[float(v) for v in config.get("delta_ladder", [0.2, 0.1, 0.05])],
        spec=spec, quad=_quad_from(config, seed),
        grid_res=int(config.get("grid_res", 101)))
    ms = (time.perf_counter() - t0) * 1e3
    report.write_csv(str(out_dir / "approx_ladder.csv"))
    errs = [row.norm_error for row in report.ladder]
    ses = [row.stderr for row in report.ladder]
    ok = all(errs[i + 1] <= errs[i] + 3.0 * (ses[i] + ses[i + 1])
             for i in range(len(errs) - 1))
    return [CheckRecord("approx_ladder_monotone", errs[-1], errs[0], ses[-1],
                        errs[0] - errs[-1], ok, ms)]


def cmd_solve(config, seed, out_dir: Path) -> list:
    spec = _spec_from(config)
    family = _family_from(config)
    dom = _domain_from(config)
    tri, wdom, kappa = weights.recipe_weights_whole_space(spec)
    if config.get("weights", "recipe") == "quadratic":
        phi = CylinderFn(config.get("phi", "3*(x(1)^2+y(1)^2)"))
        zero = CylinderFn("0")
        tri = weights.weight_triple(phi, zero)
        wdom = dom
    ctx = dbarops.OperatorContext(spec, family, tri.w1, tri.w2, tri.w3, tri.phi)
    fl = _forms_from(config, family)
    if not fl:
        manufactured = config.get("manufactured",
                                  {"coeff": "x(1)*bump((x(1)^2+y(1)^2)/0.64)",
                                   "support_radius": 0.8})
        u0 = forms.Form((0, 0), {((), ()): CylinderFn(manufactured["coeff"],
                        support_radius=manufactured.get("support_radius"))}, family)
        target = dbarops.dbar(u0)
    else:
        target = fl[0]
    t0 = time.perf_counter()
    prob = solver.SolveProblem(ctx=ctx, domain=wdom, f=target,
                               degree=int(config.get("degree", 8)),
                               n=int(config.get("solve_dim", 1)),
                               radius=float(config.get("basis_radius", 0.8)))
    u, rep = solver.solve_min_norm(prob)
    ms = (time.perf_counter() - t0) * 1e3
    (out_dir / "solve_report.json").write_text(
        json.dumps(rep.as_dict(), sort_keys=True) + "\n")
    tol = _tol(config, "residual", 1e-3)
    return [
        CheckRecord("solve_residual", rep.residual, tol, 0.0, tol - rep.residual,
                    rep.residual <= tol, ms),
        CheckRecord("solve_norm_bound", float(np.sqrt(max(rep.c0, 0.0))) * rep.norm_u_w1,
                    rep.norm_f_w2, 0.0,
                    rep.norm_f_w2 - float(np.sqrt(max(rep.c0, 0.0))) * rep.norm_u_w1,
                    rep.bound_pass, ms),
    ]


def cmd_majorant(config, seed) -> list:
    t0 = time.perf_counter()
    kind = config.get("g0", "one")
    if kind == "one":
        g0 = lambda v: 1.0
    elif kind == "quadratic":
        g0 = lambda v: 1.0 + v * v
    elif kind == "staircase":
        g0 = lambda v: 1000.0 if v >= 5 else 1.0
    else:
        raise ConfigError(f"unknown g0 fixture {kind!r}")
    maj = weights.convex_majorant(g0, K_max=float(config.get("K_max", 10.0)),
                                  trunc_order=int(config.get("trunc_order", 320)))
    grid = np.linspace(0.0, float(config.get("K_max", 10.0)), 2001)
    margins = [float(np.min(maj.deriv(grid, 2) - maj.deriv(grid, 1))),
               float(np.min(maj.deriv(grid, 1) - maj(grid))),
               float(np.min(maj(grid) - np.array([g0(v) for v in grid])))]
    ms = (time.perf_counter() - t0) * 1e3
    worst = min(margins)
    return [CheckRecord("majorant_chain", worst, -1e-9, 0.0, worst + 1e-9,
                        worst >= -1e-9, ms)]


COMMANDS = {"identities": cmd_identities, "conditions": cmd_conditions,
            "domains": cmd_domains, "approx": cmd_approx, "solve": cmd_solve,
            "majorant": cmd_majorant}


def write_reports(records, out_dir: Path, command: str):
    out_dir.mkdir(parents=True, exist_ok=True)
    jsonl = out_dir / f"{command}_report.jsonl"
    with open(jsonl, "w") as fh:
        for rec in records:
            fh.write(json.dumps(rec.json_obj(), sort_keys=True) + "\n")
    summary = out_dir / f"{command}_summary.csv"
    with open(summary, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["check_id", "lhs", "rhs", "stderr", "margin", "pass"])
        for rec in records:
            w.writerow(rec.row())


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="dbarl2",
                                     description="verification runner")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True)
    parser.add_argument("--out", default="reports")
    parser.add_argument("--seed", type=int, default=None)
    args = parser.parse_args(argv)

    try:
        config = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    seed = args.seed if args.seed is not None else int(config.get("seed", 0))
    out_dir = Path(args.out)
    try:
        fn = COMMANDS[args.command]
        if args.command in ("approx", "solve"):
            out_dir.mkdir(parents=True, exist_ok=True)
            records = fn(config, seed, out_dir)
        else:
            records = fn(config, seed)
    except (ConfigError, KeyError, TypeError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    write_reports(records, out_dir, args.command)
    for rec in records:
        status = "pass" if rec.passed else "FAIL"
        print(f"{rec.check_id:32s} {status}  lhs={rec.lhs:.6g} rhs={rec.rhs:.6g} "
              f"margin={rec.margin:.3g} stderr={rec.stderr:.3g} "
              f"[{rec.runtime_ms:.0f} ms]")
    if not records:
        return 0
    return 0 if all(r.passed for r in records) else 1


if __name__ == "__main__":
    sys.exit(main())
