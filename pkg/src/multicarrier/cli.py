"""Command-line front end: figure tables, sweeps and the validation report.

Usage::

    multicarrier <command> [--config FILE] [key=value ...]

Parameters are merged from command defaults, then the config file (flat
``key=value`` lines, ``#`` comments), then ``MULTICARRIER_<KEY>`` environment
variables, then inline pairs.  Exit status is 0 on success, 1 when a
validation check fails and 2 on usage errors.
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import channel, orderstats as os_, randmat as rm, selection as sel, validation
from ._csv import write_csv, write_sidecar
from .exceptions import ParameterError
from .mgf import p_err_operator
from .montecarlo import derive_rng, write_histogram_csv

log = logging.getLogger("multicarrier")

ENV_PREFIX = "MULTICARRIER_"
EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
REQUIRED = object()


class UsageError(Exception):
    pass


def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _floats(s: str) -> tuple:
    vals = tuple(float(p) for p in s.split(",") if p.strip())
    if not vals:
        raise ValueError("empty list")
    return vals


def _choice(*options):
    def parse(s):
        if s not in options:
            raise ValueError(f"expected one of {', '.join(options)}")
        return s
    return parse


def _positive_int(s: str) -> int:
    v = int(s)
    if v < 1:
        raise ValueError("must be a positive integer")
    return v


def _seed(s: str) -> int:
    v = int(s)
    if v < 0:
        raise ValueError("seed must be nonnegative")
    return v


_COMMON = {"out": (str, REQUIRED), "seed": (_seed, "0"), "plot": (_bool, "false")}

SCHEMA = {
    "fig2": {"n": (_positive_int, "64"), "l": (_positive_int, "16"), "trials": (_positive_int, "200000"),
             "sigma_T_sq": (float, "1.0"), "ratios": (_floats, "0.25,0.5,0.75,1,1.25,1.5,1.75,2,2.25,2.5,2.75,3"),
             "chunk": (_positive_int, "50000")},
    "fig3": {"n": (_positive_int, "8"), "l": (_positive_int, "4"), "thr_ratio": (float, "0.2"),
             "mean": (float, "1.0"), "snr": (_floats, "0.5,1,2,4,8"), "mu": (float, "")},
    "fig4": {"n": (_positive_int, "8"), "l": (_positive_int, "4"), "thr_ratio": (float, "0.2"),
             "mean": (float, "1.0"), "snr": (_floats, "0.5,1,2,4,8")},
    "fig5": {"l": (_positive_int, "64"), "K": (_positive_int, "32"), "snr": (_floats, "0,1,2,5,10,20,50,100"),
             "r": (_floats, "0,0.25,0.5,0.75,1")},
    "fig6": {"chi": (_floats, "0.2,0.5,1"), "points": (_positive_int, "401")},
    "validate": {"out": (str, ""), "seed": (_seed, "42"), "trials": (_positive_int, "100000"),
                 "order_trials": (_positive_int, ""),
                 "suites": (str, "channel,order,mgf,selection,p_err,random_matrix")},
    "sweep": {"kind": (_choice("transform", "spectrum", "selection", "histogram", "density", "transmittance"),
                       REQUIRED),
              "n": (_positive_int, "8"), "l": (_positive_int, "4"), "K": (_positive_int, "128"),
              "trials": (_positive_int, "10000"), "operator": (_choice(*sel.OPERATORS), "lambda0"),
              "thr_ratio": (float, "1.0"), "mu": (float, ""), "gammas": (_floats, "0.1,1,10,100"),
              "bins": (_positive_int, "50"), "sigma_T_sq": (float, "1.0"), "clamp": (_bool, "false"),
              "density": (_choice("ordered", "lth_largest", "partial_sum", "top_sum"), "ordered"),
              "i": (_positive_int, "1"), "xmax": (float, "10"), "points": (_positive_int, "201")},
}


def _schema(command):
    spec = dict(_COMMON)
    spec.update(SCHEMA[command])
    if command != "validate":
        spec.setdefault("out", (str, REQUIRED))
    return spec


def _read_pairs(lines, origin):
    out = {}
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{origin}:{lineno}: expected key=value, got {line!r}")
        k, v = (p.strip() for p in line.split("=", 1))
        out[k] = v
    return out


def resolve_params(command: str, pairs: list[str], config: str | None = None, environ=None) -> dict:
    """Merge defaults, config file, environment and inline pairs, then parse."""
    spec = _schema(command)
    raw = {k: d for k, (_, d) in spec.items() if d is not REQUIRED}
    layers = []
    if config:
        try:
            with open(config, encoding="utf-8") as fh:
                layers.append((_read_pairs(fh, config), config, True))
        except OSError as exc:
            raise UsageError(f"cannot read config {config}: {exc}") from exc
    env = os.environ if environ is None else environ
    # environment names are matched case-insensitively; keys that do not apply
    # to this command are ignored
    by_lower = {k.lower(): k for k in spec}
    env_vals = {by_lower[k[len(ENV_PREFIX):].lower()]: v for k, v in sorted(env.items())
                if k.startswith(ENV_PREFIX) and k[len(ENV_PREFIX):].lower() in by_lower}
    layers.append((env_vals, "environment", False))
    layers.append((_read_pairs(pairs, "argument"), "argument", True))
    for values, origin, strict in layers:
        for k, v in values.items():
            if k not in spec:
                if strict:
                    raise UsageError(f"unknown key {k!r} for {command} ({origin})")
                continue
            raw[k] = v
    missing = [k for k, (_, d) in spec.items() if d is REQUIRED and k not in raw]
    if missing:
        raise UsageError(f"{command} needs {', '.join(missing)}")
    params = {}
    for k, v in raw.items():
        if v == "":
            params[k] = None
            continue
        try:
            params[k] = spec[k][0](v)
        except ValueError as exc:
            raise UsageError(f"bad value for {k}: {v!r} ({exc})") from exc
    return params


def _check_destination(path: str | None):
    if not path:
        return
    parent = Path(path).resolve().parent
    if not parent.is_dir():
        raise UsageError(f"output directory {parent} does not exist")
    if not os.access(parent, os.W_OK):
        raise UsageError(f"output directory {parent} is not writable")


def sibling(out: str, tag: str) -> str:
    """``<stem>_<tag>.csv`` next to ``out``."""
    p = Path(out)
    return str(p.with_name(f"{p.stem}_{tag}{p.suffix or '.csv'}"))


def _gnuplot(out: str, files: list[str], xcol: int, ycols: list[int], xlabel: str, ylabel: str,
             logy: bool = False) -> None:
    lines = ["set datafile separator ','", "set key autotitle columnhead", f"set xlabel '{xlabel}'",
             f"set ylabel '{ylabel}'"]
    if logy:
        lines.append("set logscale y")
    plots = [f"'{Path(f).name}' using {xcol}:{y} with linespoints" for f in files for y in ycols]
    lines.append("plot " + ", \\\n     ".join(plots))
    with open(str(Path(out).with_suffix(".gp")), "w", newline="\n", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# commands


def cmd_fig2(p: dict) -> int:
    n, l, trials = p["n"], p["l"], p["trials"]
    if l > n:
        raise UsageError("need l <= n")
    mean = n * p["sigma_T_sq"]
    base = os_.exponential(mean)
    ratios = p["ratios"]
    sums = {k: np.zeros(len(ratios)) for k in sel.OPERATORS}
    sq = {k: np.zeros(len(ratios)) for k in sel.OPERATORS}
    done, block = 0, 0
    while done < trials:
        m = min(p["chunk"], trials - done)
        mags = channel.sample_coefficient_magnitudes(m, n, p["sigma_T_sq"], derive_rng(p["seed"], block))
        for j, ratio in enumerate(ratios):
            for kind in sel.OPERATORS:
                it = sel.run_operator_batch(kind, mags, l, ratio * mean)["iterations"].astype(float)
                sums[kind][j] += math.fsum(it.tolist())
                sq[kind][j] += math.fsum((it * it).tolist())
        done += m
        block += 1
    emp = {k: sums[k] / trials for k in sel.OPERATORS}
    se = {k: np.sqrt(np.maximum(sq[k] / trials - emp[k] ** 2, 0.0) / max(trials - 1, 1)) for k in sel.OPERATORS}
    header = ["thr_ratio", "kappa_l0", "kappa_l", "kappa_lp"]
    write_csv(p["out"], header, ([r] + [emp[k][j] for k in sel.OPERATORS] for j, r in enumerate(ratios)))
    ana = {k: [sel.kappa_analytic(k, n, l, base, r * mean) for r in ratios] for k in sel.OPERATORS}
    write_csv(sibling(p["out"], "analytic"), header,
              ([r] + [ana[k][j] for k in sel.OPERATORS] for j, r in enumerate(ratios)))
    rows, flagged = [], 0
    for j, r in enumerate(ratios):
        for kind in sel.OPERATORS:
            gap = abs(ana[kind][j] - emp[kind][j]) / emp[kind][j]
            flag = gap > sel.KAPPA_GAP_TOL
            flagged += flag
            rows.append([r, kind, ana[kind][j], sel.kappa_exact(kind, n, l, base, r * mean), emp[kind][j],
                         se[kind][j], gap, flag])
    write_csv(sibling(p["out"], "gaps"),
              ["thr_ratio", "operator", "analytic", "exact", "empirical", "std_error", "rel_gap", "flagged"], rows)
    if flagged:
        log.warning("%d analytic/empirical iteration gaps above %.0f%% (see %s)", flagged,
                    100 * sel.KAPPA_GAP_TOL, sibling(p["out"], "gaps"))
    if p["plot"]:
        _gnuplot(p["out"], [p["out"], sibling(p["out"], "analytic")], 1, [2, 3, 4], "threshold / mean", "kappa")
    return EXIT_OK


def _p_err_curve(kind, p, mu=None):
    base = os_.exponential(p["mean"])
    thr = None if mu is not None else p["thr_ratio"] * p["mean"]
    rep = sel.operator_mgf_repr(kind, p["n"], p["l"], base, thr, mu)
    return [(s, p_err_operator(rep, s)) for s in p["snr"]]


def cmd_fig3(p: dict) -> int:
    if p["l"] > p["n"]:
        raise UsageError("need l <= n")
    write_csv(p["out"], ["snr_hat", "p_err"], _p_err_curve("lambda0", p, p["mu"]))
    if p["plot"]:
        _gnuplot(p["out"], [p["out"]], 1, [2], "snr_hat", "p_err", logy=True)
    return EXIT_OK


def cmd_fig4(p: dict) -> int:
    if p["l"] > p["n"]:
        raise UsageError("need l <= n")
    files = []
    for kind in ("lambda", "lambda_prime"):
        path = sibling(p["out"], kind)
        write_csv(path, ["snr_hat", "p_err"], _p_err_curve(kind, p))
        files.append(path)
    if p["plot"]:
        _gnuplot(p["out"], files, 1, [2], "snr_hat", "p_err", logy=True)
    return EXIT_OK


def cmd_fig5(p: dict) -> int:
    l, K = p["l"], p["K"]
    rows = []
    for r in p["r"]:
        model = rm.sample_model(l, K, "hadamard", p["seed"], coeffs=rm.allocation_mask(l, K, r))
        for s in p["snr"]:
            res = rm.p_sym_s_sym(model, s, check=False)
            rows.append([s, r, res.p_sym, res.s_sym_bound])
    write_csv(p["out"], ["snr", "r", "p_sym", "s_sym_bound"], rows)
    if p["plot"]:
        _gnuplot(p["out"], [p["out"]], 1, [3], "snr", "P_sym")
    return EXIT_OK


def cmd_fig6(p: dict) -> int:
    chis = p["chi"]
    files = []
    for chi in chis:
        if chi <= 0:
            raise UsageError("chi must be positive")
        u, v = rm.mp_support(chi)
        path = p["out"] if len(chis) == 1 else sibling(p["out"], f"chi{chi:g}")
        rm.write_mp_csv(path, chi, np.linspace(u, v, p["points"]))
        files.append(path)
    if p["plot"]:
        _gnuplot(p["out"], files, 1, [2], "x", "f_chi")
    return EXIT_OK


def cmd_validate(p: dict) -> int:
    wanted = [s.strip() for s in p["suites"].split(",") if s.strip()]
    seed, trials = p["seed"], p["trials"]
    runners = {
        "channel": lambda: validation.channel_suite(seed),
        "order": lambda: validation.order_statistics_suite(p["order_trials"] or trials, seed),
        "mgf": lambda: validation.mgf_suite(trials, seed),
        "selection": lambda: validation.selection_suite(trials, seed),
        "p_err": lambda: validation.p_err_suite(trials, seed),
        "random_matrix": lambda: validation.random_matrix_suite(seed),
    }
    unknown = [w for w in wanted if w not in runners]
    if unknown:
        raise UsageError(f"unknown suites: {', '.join(unknown)}")
    checks = []
    for name in wanted:
        checks += runners[name]()
    if p["out"]:
        write_csv(p["out"], ["suite", "check", "residual", "tolerance", "passed"],
                  ([c.suite, c.name, c.residual, c.tolerance, c.passed] for c in checks))
    sys.stdout.write(validation.report(checks))
    return EXIT_OK if all(c.passed for c in checks) else EXIT_FAIL


def cmd_sweep(p: dict) -> int:
    kind, out, seed = p["kind"], p["out"], p["seed"]
    if kind in ("transform", "spectrum"):
        model = rm.sample_model(p["l"], p["K"], "hadamard", seed)
        spec = rm.spectrum(model.matrix())
        if kind == "transform":
            rm.write_transform_csv(out, spec, p["gammas"])
        else:
            rm.write_spectrum_csv(out, spec)
    elif kind in ("selection", "histogram"):
        n, l = p["n"], p["l"]
        if l > n:
            raise UsageError("need l <= n")
        mags = channel.sample_coefficient_magnitudes(p["trials"], n, p["sigma_T_sq"], derive_rng(seed))
        mean = n * p["sigma_T_sq"]
        res = sel.run_operator_batch(p["operator"], mags, l, p["thr_ratio"] * mean, mu=p["mu"])
        if kind == "selection":
            sel.write_batch_csv(out, ([t, p["operator"], int(res["iterations"][t]), res["a_j_sq"][t],
                                       int(res["selected_count"][t])] for t in range(p["trials"])))
        else:
            counts, edges = np.histogram(res["a_j_sq"], bins=p["bins"])
            write_histogram_csv(out, edges, counts)
    elif kind == "density":
        n, l = p["n"], p["l"]
        if l > n:
            raise UsageError("need l <= n")
        base = os_.exponential(1.0)
        xs = np.linspace(0.0, p["xmax"], p["points"])
        which = p["density"]
        if which == "ordered":
            ens = os_.OrderedEnsemble(l, n, base)
            fn = lambda x: os_.ordered_pdf(ens, p["i"], x)
        elif which == "lth_largest":
            fn = lambda x: os_.lth_largest_pdf(base, n, l, x)
        elif which == "partial_sum":
            ens = os_.OrderedEnsemble(l, n, base)
            fn = lambda x: os_.partial_sum_pdf(ens, x)
        else:
            fn = lambda x: os_.alpha_sum("closed_pdf", n, l, 1.0, x)
        os_.write_density_csv(out, xs, fn)
    else:
        tv = channel.sample_transmittance_vector(p["n"], p["sigma_T_sq"], seed=seed, clamp=p["clamp"], l=p["l"])
        channel.write_transmittance_csv(out, tv)
    return EXIT_OK


COMMANDS = {"fig2": cmd_fig2, "fig3": cmd_fig3, "fig4": cmd_fig4, "fig5": cmd_fig5, "fig6": cmd_fig6,
            "validate": cmd_validate, "sweep": cmd_sweep}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="multicarrier",
                                 description="Sub-channel selection and multiuser capacity tables.")
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("params", nargs="*", metavar="key=value")
    ap.add_argument("--config", help="file of key=value lines")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        params = resolve_params(args.command, args.params, args.config)
        _check_destination(params.get("out"))
        code = COMMANDS[args.command](params)
    except (UsageError, ParameterError) as exc:
        sys.stderr.write(f"multicarrier: error: {exc}\n")
        return EXIT_USAGE
    except OSError as exc:
        sys.stderr.write(f"multicarrier: error: {exc}\n")
        return EXIT_USAGE
    if params.get("out"):
        write_sidecar(params["out"] + ".meta.json", {"command": args.command, **params})
    return code


if __name__ == "__main__":
    sys.exit(main())
