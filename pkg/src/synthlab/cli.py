"""``synthlab <command> --config <path> [--seed N] [--threads N] [--out DIR]``

Writes ``<command>.csv`` (one row per spectral line, per R, per trial...),
``<command>.jsonl`` (header, one line per assertion, summary) and
``<command>.png`` into the output directory.

Exit codes: 0 all assertions pass, 2 some assertion failed, 1 usage or
runtime error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import traceback
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from . import rng as rngmod
from .config import COMMANDS, ConfigError, ExperimentConfig, load_config
from .core import CoefficientSet, enumerate_spectrum, lp_hat_norm, weyl_check
from .errors import SynthlabError
from .measures import make_measure, manifold_from_id, minkowski_volume
from .ratio import (
    SLACK_TOL,
    converse_check,
    expected_error_exact,
    fourier_ratio,
    kuznecov_fit,
    local_fr,
    random_band_limited,
    sparse_approx,
    uncertainty_product,
)
from .sphere import legendre_at_zero_exact
from .synthesis import (
    bump_test_function,
    constant_test_function,
    endpoint_dyadic,
    make_window,
    stability_certificate,
)

SCHEMA_VERSION = 1


@dataclass
class Assertion:
    name: str
    value: float
    bound: float
    relation: str  # "<=", ">=" or "=="
    tolerance: float

    @property
    def slack(self):
        if self.relation == "<=":
            return self.bound - self.value
        if self.relation == ">=":
            return self.value - self.bound
        return -abs(self.value - self.bound)

    @property
    def passed(self):
        return bool(self.slack >= -self.tolerance)

    def as_dict(self):
        return {
            "type": "assertion", "name": self.name, "value": _num(self.value), "relation": self.relation,
            "bound": _num(self.bound), "tolerance": _num(self.tolerance), "slack": _num(self.slack),
            "pass": self.passed,
        }


@dataclass
class Report:
    command: str
    config: ExperimentConfig
    columns: list
    rows: list = field(default_factory=list)
    assertions: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(a.passed for a in self.assertions)

    def header(self):
        return {
            "type": "header", "tool": "synthlab", "version": __version__, "schema_version": SCHEMA_VERSION,
            "command": self.command, "seed": self.config.seed, "config": self.config.to_json(),
            "config_text": self.config.to_text(with_threads=False), "columns": list(self.columns),
        }

    def csv_text(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for row in self.rows:
            w.writerow([_cell(row.get(c, "")) for c in self.columns])
        return buf.getvalue()

    def jsonl_text(self):
        lines = [self.header()] + [a.as_dict() for a in self.assertions]
        summary = {"type": "summary", "passed": self.passed, "n_assertions": len(self.assertions),
                   "failed": [a.name for a in self.assertions if not a.passed]}
        summary.update({k: _jsonify(v) for k, v in self.summary.items()})
        lines.append(summary)
        return "".join(json.dumps(x, sort_keys=False, allow_nan=False) + "\n" for x in lines)


def _num(x):
    x = float(x)
    if math.isnan(x):
        return None
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def _jsonify(v):
    if isinstance(v, dict):
        return {str(k): _jsonify(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_jsonify(x) for x in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return _num(v)
    return v


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return int(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def _le(name, value, bound, tol=0.0):
    return Assertion(name, float(value), float(bound), "<=", float(tol))


def _ge(name, value, bound, tol=0.0):
    return Assertion(name, float(value), float(bound), ">=", float(tol))


# ---------------------------------------------------------------------------
# commands


def _setup(cfg):
    man = manifold_from_id(cfg.manifold)
    desc = cfg.measure_desc()
    measure = make_measure(desc, man) if desc else None
    return man, measure


def _function(cfg, man, measure, lambda_max):
    """The function f for fr / approx: measure coefficients, random lines, or unit lines."""
    table = enumerate_spectrum(man, lambda_max)
    source = cfg.get("function", "measure" if measure is not None else "random")
    if source == "measure":
        return measure.coefficients(table)
    if source == "lines":
        vals = np.zeros(table.weyl_count, dtype=complex)
        for i in cfg.get("lines"):
            i = int(i)
            if i >= len(table):
                raise SynthlabError(f"line {i} is above lambda_max")
            vals[table.offsets[i]] = 1.0
        return CoefficientSet(table, vals)
    gen = rngmod.stream(cfg.seed, 0)
    return random_band_limited(man, lambda_max, gen, cfg.get("n_lines"))


def cmd_spectrum(cfg):
    man, _ = _setup(cfg)
    lam_max = cfg.get("lambda_max")
    table = enumerate_spectrum(man, lam_max)
    counts = np.cumsum(table.multiplicities)
    rows = [
        {"key": int(table.keys[i]), "lambda": float(table.lambdas[i]), "multiplicity": int(table.multiplicities[i]),
         "count": int(counts[i]), "weyl_leading": float(man.weyl_leading_term(table.lambdas[i]))}
        for i in range(len(table))
    ]
    rep = Report("spectrum", cfg, ["key", "lambda", "multiplicity", "count", "weyl_leading"], rows)
    wc = weyl_check(table)
    d = man.dim
    ball = man.weyl_leading_term(1.0)
    if cfg.manifold == "sphere2":
        L = man.degree(table)
        rep.assertions.append(Assertion("sphere_count_exact", wc.count, (L + 1) ** 2, "==", 0.0))
    elif lam_max > 0:
        # lattice cubes inside the ball of radius lam + sqrt(d)/2 and covering the one of radius lam - sqrt(d)/2
        default = ball * ((1 + math.sqrt(d) / (2 * lam_max)) ** d - 1)
        tol = cfg.get("tolerance", default)
        rep.assertions.append(_le("weyl_ratio_deviation", abs(wc.count / lam_max**d - ball), tol))
    rep.summary = {"count": wc.count, "predicted": wc.predicted, "relative_deviation": wc.relative_deviation,
                   "n_lines": len(table)}
    return rep


def cmd_profile(cfg):
    man, measure = _setup(cfg)
    table = enumerate_spectrum(man, cfg.get("lambda_max"))
    quad = measure.coefficients(table, method="quadrature")
    qn = quad.line_norms() ** 2
    has_closed = measure.has_closed_form
    keyname = "l" if cfg.manifold == "sphere2" else "n"
    cols = [keyname, "lambda", "multiplicity"]
    cols += ["norm2_closed_form", "norm2_quadrature", "abs_diff"] if has_closed else ["norm2_quadrature"]
    rows = []
    if has_closed:
        closed = measure.coefficients(table, method="closed")
        cn = closed.line_norms() ** 2
        coef_diff = np.abs(closed.values - quad.values)
    for i in range(len(table)):
        row = {keyname: int(table.keys[i]), "lambda": float(table.lambdas[i]),
               "multiplicity": int(table.multiplicities[i]), "norm2_quadrature": float(qn[i])}
        if has_closed:
            row["norm2_closed_form"] = float(cn[i])
            row["abs_diff"] = float(abs(cn[i] - qn[i]))
        rows.append(row)
    rep = Report("profile", cfg, cols, rows)
    tol = cfg.get("tolerance", 1e-10)
    if has_closed:
        scale = max(1.0, float(np.max(np.abs(closed.values))) if len(closed.values) else 1.0)
        rep.assertions.append(_le("closed_vs_quadrature_coefficients", float(np.max(coef_diff, initial=0.0)) / scale, tol))
    if measure.kind == "equator" and measure.density is None:
        l = table.keys
        oracle = np.array([math.pi * (2 * int(x) + 1) * float(legendre_at_zero_exact(int(x))) ** 2 for x in l])
        rel = np.abs(qn - oracle) / np.maximum(oracle, 1.0)
        rep.assertions.append(_le("equator_identity", float(np.max(rel)), tol))
        labels = table.labels
        vanish = (labels[:, 0] % 2 == 1) | (labels[:, 1] != 0)
        rep.assertions.append(_le("odd_and_nonzonal_vanish", float(np.max(np.abs(quad.values[vanish]), initial=0.0)), 1e-12))
    rep.summary = {"provenance": measure.provenance(), "sup_norm": float(np.sqrt(np.max(qn)))}
    if cfg.get("p") is not None:
        lp = lp_hat_norm(quad.profile(), cfg.get("p"))
        rep.summary["lp_hat"] = {"p": lp.p, "value": lp.value, "cutoffs": lp.cutoffs, "partial_sums": lp.partial_sums}
    return rep


def cmd_fr(cfg):
    man, measure = _setup(cfg)
    f = _function(cfg, man, measure, cfg.get("lambda_max"))
    window = make_window(cfg.get("window", "bump"))
    base = fourier_ratio(f)
    rows = []
    for R in cfg.get("R", ()):
        r = local_fr(f, R, window)
        rows.append({"R": float(R), "num": r.num, "den": r.den, "fr_R": r.fr_R})
    rep = Report("fr", cfg, ["R", "num", "den", "fr_R"], rows)
    rep.assertions.append(_ge("fr_at_least_one", base.fr, 1.0, SLACK_TOL))
    for row in rows:
        rep.assertions.append(_ge(f"fr_R_at_least_one:R={row['R']:g}", row["fr_R"], 1.0, SLACK_TOL))
    rep.summary = {"l1": base.l1, "l2": base.l2, "fr": base.fr, "n_lines": base.n_lines,
                   "lambda_max": base.lambda_max}
    return rep


def cmd_approx(cfg):
    man, measure = _setup(cfg)
    f = _function(cfg, man, measure, cfg.get("lambda_max"))
    k, trials = cfg.get("k"), cfg.get("trials")
    res = sparse_approx(f, k, trials, seed=cfg.seed, threads=cfg.threads)
    rows = [{"trial": t, "error2": float(e)} for t, e in enumerate(res.errors)]
    rep = Report("approx", cfg, ["trial", "error2"], rows)
    exact = expected_error_exact(f, k)
    scale = max(abs(res.predicted_mean), res.l2**2)
    rep.assertions.append(_le("variance_identity", abs(exact - res.predicted_mean) / scale, 1e-12))
    if trials > 1:
        rep.assertions.append(_le("monte_carlo_mean", abs(res.mean_error - res.predicted_mean), 4.0 * res.stderr))
        z = res.bias_zscores()
        rep.assertions.append(_le("unbiased_componentwise", float(np.max(np.abs(z), initial=0.0)), 4.0))
    eta = cfg.get("eta")
    best = math.sqrt(float(res.errors[res.best_trial])) / res.l2
    if eta is not None and eta > 0 and k > (res.fr**2 - 1) / eta**2:
        rep.assertions.append(_le("best_trial_relative_error", best, eta))
    if best < 1.0:
        conv = converse_check(f, res.best)
        rep.assertions.append(_ge("converse_bound", conv.bound, conv.fr, SLACK_TOL * max(1.0, conv.bound)))
    rep.summary = {"fr": res.fr, "k": k, "trials": trials, "mean_error2": res.mean_error, "stderr": res.stderr,
                   "predicted_mean": res.predicted_mean, "exact_mean": exact, "best_trial": res.best_trial,
                   "best_relative_error": best, "threshold_k": (res.fr**2 - 1) / eta**2 if eta else None}
    return rep


def _volume_estimate(cfg, measure, deltas):
    if all(measure.neighborhood_volume(d) is not None for d in deltas):
        return None
    return minkowski_volume(measure, deltas, cfg.get("n_samples", 200_000), cfg.seed, cfg.threads)


def cmd_stability(cfg):
    man, measure = _setup(cfg)
    window = make_window(cfg.get("window", "bump"))
    R = sorted(cfg.get("R"))
    tests = [constant_test_function(man)]
    center = measure.support_points(0.1)[0]
    tests.append(bump_test_function(man, center))
    vol = _volume_estimate(cfg, measure, [1.0 / r for r in R])
    cert = stability_certificate(measure, cfg.get("p"), R, tests, window, cfg.get("band_factor", 4.0), vol)
    cols = ["R", "lambda_max", "l2_norm", "lp_norm", "ratio", "support_volume"]
    names = list(cert.pairings)
    cols += [f"pairing:{n}" for n in names] + [f"normalized_pairing:{n}" for n in names]
    rows = []
    for i, r in enumerate(cert.R):
        row = {"R": float(r), "lambda_max": float(cert.lambda_max[i]), "l2_norm": float(cert.l2_norm[i]),
               "lp_norm": float(cert.lp_norm[i]), "ratio": float(cert.ratio[i]),
               "support_volume": float(cert.support_volume[i])}
        for n in names:
            row[f"pairing:{n}"] = float(cert.pairings[n][i])
            row[f"normalized_pairing:{n}"] = float(cert.pairings[n][i] / cert.lp_norm[i])
        rows.append(row)
    rep = Report("stability", cfg, cols, rows)
    rep.assertions.append(_le("ratio_spread", cert.ratio_spread(), cfg.get("tolerance", 2.0)))
    for n in names:
        fit = cert.fits.get(f"normalized_pairing:{n}")
        if fit is not None:
            rep.assertions.append(_le(f"pairing_slope:{n}", fit[0], cert.exponent_pairing + 0.15))
        for i in range(len(cert.R)):
            bnd = float(cert.pairing_bounds[n][i])
            rep.assertions.append(_le(f"pairing_bound:{n}:R={cert.R[i]:g}", float(cert.pairings[n][i]), bnd,
                                      SLACK_TOL * max(1.0, bnd)))
    d, k = man.dim, measure.nominal_dim
    if cfg.get("deltas"):
        ve = minkowski_volume(measure, cfg.get("deltas"), cfg.get("n_samples", 200_000), cfg.seed, cfg.threads)
        rep.assertions.append(_le("minkowski_exponent", abs(ve.exponent - (d - k)), 0.15))
        rep.summary["minkowski"] = {"exponent": ve.exponent, "half_width": ve.half_width, "predicted": d - k}
    rep.summary.update({"exponent_l2": cert.exponent_l2, "exponent_pairing": cert.exponent_pairing,
                        "fits": {n: {"slope": s, "residual": r} for n, (s, r) in cert.fits.items()}})
    return rep


def cmd_endpoint(cfg):
    man, measure = _setup(cfg)
    window = make_window(cfg.get("window", "bump"))
    R = sorted(cfg.get("R"))
    lam = cfg.get("lambda_max")
    e = endpoint_dyadic(measure, R, window, lambda_max=lam)
    a_of = dict(zip(e.j_a.tolist(), e.a.tolist()))
    rows = []
    for r, Rv in enumerate(e.R):
        for c, j in enumerate(e.j_b):
            if np.isnan(e.b[r, c]):
                continue
            aj = a_of.get(int(j), float("nan"))
            rows.append({"R": float(Rv), "j": int(j), "a_j": aj, "b_j": float(e.b[r, c]), "a_j_b_j": aj * float(e.b[r, c])})
    rep = Report("endpoint", cfg, ["R", "j", "a_j", "b_j", "a_j_b_j"], rows)
    rep.assertions.append(_le("a_tail_after_6", e.tail_after(6), 1e-8))
    bound = cfg.get("b_bound")
    if bound is None:
        # pre-run at the smallest R; later R must stay within twice that level
        pre = endpoint_dyadic(measure, R[:1], window, lambda_max=lam if lam else 4.0 * R[-1])
        bound = 2.0 * pre.b_sup()
    rep.assertions.append(_le("b_uniform", e.b_sup(), bound, SLACK_TOL * bound))
    for r, Rv in enumerate(e.R):
        rep.assertions.append(_le(f"dyadic_bound:R={Rv:g}", e.scaled_energy[r], e.dyadic_bound[r],
                                  SLACK_TOL * max(1.0, e.dyadic_bound[r])))
    rep.summary = {"p0": e.p0, "d": e.d, "k": e.k, "a_j": {int(j): a for j, a in zip(e.j_a, e.a)},
                   "b_sup": e.b_sup(), "b_bound": bound, "zero_term": e.zero_term,
                   "scaled_energy": e.scaled_energy, "dyadic_bound": e.dyadic_bound, "lambda_max": e.lambda_max}
    return rep


UNCERTAINTY_COLUMNS = ["R", "instance", "num", "den", "fr_R", "A_R", "C3", "c0", "support_volume", "lower_bound",
                       "eta", "M_R", "upper_bound", "product", "rhs", "min_relative_slack"]


def _uncertainty_row(cert, R, instance):
    lo = cert.lower
    rel = min(s.slack / max(abs(s.lhs), abs(s.rhs), 1e-300) for s in cert.steps)
    return {"R": float(R), "instance": instance, "num": lo.num, "den": lo.den, "fr_R": lo.fr_R, "A_R": lo.A_R,
            "C3": lo.C3, "c0": lo.c0, "support_volume": lo.support_volume, "lower_bound": lo.lower_bound,
            "eta": cert.eta, "M_R": cert.M_R, "upper_bound": cert.upper_bound, "product": cert.product,
            "rhs": cert.rhs, "min_relative_slack": rel}


def cmd_uncertainty(cfg):
    man, measure = _setup(cfg)
    window = make_window(cfg.get("window", "bump"))
    R = sorted(cfg.get("R"))
    eta = cfg.get("eta", 0.1)
    n_inst = cfg.get("instances", 0 if measure is not None else 20)
    items = []
    if measure is not None:
        vol = _volume_estimate(cfg, measure, [1.0 / r for r in R])
        support = vol if vol is not None else measure
        top = measure.coefficients(enumerate_spectrum(man, window.C_psi * R[-1]))
        for Rv in R:
            items.append((Rv, "preset", top.truncate(window.C_psi * Rv), support))
    for i in range(n_inst):
        for Rv in R:
            gen = rngmod.stream(cfg.seed, i + 1)
            f = random_band_limited(man, window.C_psi * Rv, gen)
            items.append((Rv, f"random{i}", f, None))

    def work(item):
        Rv, name, f, support = item
        return uncertainty_product(f, Rv, window, support, eta_target=eta)

    certs = rngmod.ordered_map(work, items, cfg.threads)
    rows = [_uncertainty_row(c, it[0], it[1]) for c, it in zip(certs, items)]
    rep = Report("uncertainty", cfg, UNCERTAINTY_COLUMNS, rows)
    step_names = [s.name for s in certs[0].steps] if certs else []
    for j, name in enumerate(step_names):
        rel = min(c.steps[j].slack / max(abs(c.steps[j].lhs), abs(c.steps[j].rhs), 1e-300) for c in certs)
        rep.assertions.append(_ge(f"step:{name}", rel, 0.0, SLACK_TOL))
    rep.summary = {"instances": len(certs), "eta_target": eta, "C_psi": window.C_psi, "c_psi": window.c_psi}
    return rep


def cmd_kuznecov(cfg):
    man, measure = _setup(cfg)
    kf = kuznecov_fit(measure, cfg.get("lambda_max"), cfg.get("fit_from", 0.25))
    rows = [{"l": int(i), "lambda": float(kf.lambdas[i]), "norm": float(kf.line_norms[i]),
             "cumulative": float(kf.cumulative[i])} for i in range(len(kf.lambdas))]
    rep = Report("kuznecov", cfg, ["l", "lambda", "norm", "cumulative"], rows)
    tol = cfg.get("tolerance", 0.1 if kf.hypersurface else 0.2)
    rep.assertions.append(_le("growth_exponent", abs(kf.exponent - kf.predicted), tol))
    rep.assertions.append(Assertion("bounded_iff_hypersurface", float(kf.bounded), float(kf.hypersurface), "==", 0.0))
    if cfg.get("sup_bound") is not None:
        rep.assertions.append(_le("sup_norm", float(np.max(kf.line_norms)), cfg.get("sup_bound")))
    rep.summary = {"exponent": kf.exponent, "exponent_se": kf.exponent_se, "predicted": kf.predicted,
                   "fit_range": kf.fit_range, "hypersurface": kf.hypersurface, "bounded": kf.bounded,
                   "norm_growth": kf.norm_growth}
    return rep


def cmd_volume(cfg):
    man, measure = _setup(cfg)
    ve = minkowski_volume(measure, cfg.get("deltas"), cfg.get("n_samples", 200_000), cfg.seed, cfg.threads)
    rows = []
    for i, d in enumerate(ve.deltas):
        ex = ve.exact[i]
        rows.append({"delta": float(d), "hits": int(ve.hits[i]), "volume": float(ve.volumes[i]),
                     "exact": float(ex) if np.isfinite(ex) else "", "fitted": ve.constant * float(d) ** ve.exponent})
    rep = Report("volume", cfg, ["delta", "hits", "volume", "exact", "fitted"], rows)
    co = man.dim - measure.nominal_dim
    rep.assertions.append(_le("minkowski_exponent", abs(ve.exponent - co), cfg.get("tolerance", 0.15)))
    rep.summary = {"exponent": ve.exponent, "half_width": ve.half_width, "predicted": co, "constant": ve.constant,
                   "residual": ve.residual, "n_samples": ve.n_samples, "spacing": ve.spacing}
    return rep


RUNNERS = {
    "spectrum": cmd_spectrum, "profile": cmd_profile, "fr": cmd_fr, "approx": cmd_approx,
    "stability": cmd_stability, "endpoint": cmd_endpoint, "uncertainty": cmd_uncertainty,
    "kuznecov": cmd_kuznecov, "volume": cmd_volume,
}


def run_experiment(cfg: ExperimentConfig) -> Report:
    return RUNNERS[cfg.command](cfg)


def write_report(rep: Report, out_dir, plots=True):
    from .plotting import render

    os.makedirs(out_dir, exist_ok=True)
    base = os.path.join(out_dir, rep.command)
    paths = {"csv": base + ".csv", "jsonl": base + ".jsonl"}
    with open(paths["csv"], "w", encoding="utf-8", newline="") as fh:
        fh.write(rep.csv_text())
    with open(paths["jsonl"], "w", encoding="utf-8") as fh:
        fh.write(rep.jsonl_text())
    if plots and render(rep.command, rep.columns, rep.rows, base + ".png", title=f"{rep.command} ({rep.config.manifold})"):
        paths["png"] = base + ".png"
    return paths


# ---------------------------------------------------------------------------
# entry point


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"synthlab: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def build_parser():
    p = _Parser(prog="synthlab", description="Spectral synthesis experiments on tori and the 2-sphere.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, help="path to a key = value config file")
    p.add_argument("--seed", type=int, default=None, help="overrides the config seed")
    p.add_argument("--threads", type=int, default=None, help="worker threads (results do not depend on it)")
    p.add_argument("--out", default="synthlab-out", help="output directory")
    p.add_argument("--no-plots", action="store_true", help="skip the PNG figure")
    p.add_argument("--version", action="version", version=f"synthlab {__version__}")
    return p


def _where(exc):
    frames = [f for f in traceback.extract_tb(exc.__traceback__) if f"{os.sep}synthlab{os.sep}" in f.filename]
    frames = [f for f in frames if not f.filename.endswith("cli.py")] or frames
    if not frames:
        return "synthlab"
    f = frames[-1]
    mod = os.path.splitext(os.path.basename(f.filename))[0]
    return f"{mod}.{f.name}"


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.command)
    except ConfigError as exc:
        print(f"synthlab: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"synthlab: cannot read config: {exc}", file=sys.stderr)
        return 1
    if args.seed is not None:
        if not 0 <= args.seed < 2**64:
            print("synthlab: seed must be an unsigned 64-bit integer", file=sys.stderr)
            return 1
        cfg.seed = args.seed
    if args.threads is not None:
        if args.threads < 1:
            print("synthlab: threads must be at least 1", file=sys.stderr)
            return 1
        cfg.threads = args.threads
    try:
        rep = run_experiment(cfg)
    except (SynthlabError, ValueError, ArithmeticError) as exc:
        print(f"synthlab: {_where(exc)}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    paths = write_report(rep, args.out, plots=not args.no_plots)
    for a in rep.assertions:
        print(f"{'PASS' if a.passed else 'FAIL'} {a.name}: {a.value:.6g} {a.relation} {a.bound:.6g} (tol {a.tolerance:.3g})")
    print(f"wrote {', '.join(paths[k] for k in sorted(paths))}")
    return 0 if rep.passed else 2


if __name__ == "__main__":
    sys.exit(main())
