"""Config-driven experiment runner.

Subcommands: decay, strichartz, limit, lp, gns, solve.  Each reads a
JSON config, validates every field before any computation starts, and
writes its artifacts (CSV sweeps, JSON summaries, binary snapshots) plus
a manifest.json into the output directory.  Exit codes: 0 success, 2
config validation failure, 1 runtime failure (with error.json).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from .bands import DyadicScale, ensemble_bracket
from .evolve import NonlinearityParams, export_trajectory, solve
from .kernels import (
    DecayRecord,
    QuadratureError,
    QuadratureSpec,
    eval_K_unit,
    fit_loglog_slope,
    write_decay_csv,
)
from .lattice import ComplexField, LatticeError, LatticeGrid, gns_ratio
from .limits import (
    GaussianProfile,
    ReferenceSpec,
    ReferenceUnconverged,
    run_limit_experiment,
    write_report_csv,
    write_report_json,
)
from .strichartz import (
    BandLimitedProfile,
    strichartz_sweep,
    write_sweep_csv,
    write_sweep_json,
)

COMMANDS = ("decay", "strichartz", "limit", "lp", "gns", "solve")


class ConfigError(ValueError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


def _is_pow2(n) -> bool:
    return isinstance(n, int) and n >= 1 and (n & (n - 1)) == 0


def _check_physics(cfg, errs):
    lam = cfg.get("lambda", 1.0)
    p = cfg.get("p", 3.0)
    if not isinstance(lam, (int, float)):
        errs.append("lambda: must be a real number")
    if not isinstance(p, (int, float)) or not p > 1:
        errs.append(f"p: nonlinearity exponent must satisfy p > 1, got {p}")
    elif lam < 0 and not p < 5:
        errs.append(
            f"p: with lambda < 0 global existence requires the window 1 < p < 5, got p = {p}"
        )
    return float(lam), float(p)


def _check_gaussian(cfg, errs, default_center, key="gaussian"):
    g = cfg.get(key, {})
    width = g.get("width", 1.2)
    center = g.get("center", default_center)
    amp = g.get("amplitude", 1.0)
    if not (isinstance(width, (int, float)) and width > 0):
        errs.append(f"{key}.width: must be positive, got {width}")
    if not (isinstance(center, (list, tuple)) and len(center) == 2):
        errs.append(f"{key}.center: must be a 2-vector, got {center}")
        center = default_center
    return {"width": float(width), "center": tuple(float(c) for c in center), "amplitude": amp}


def _check_h_list(cfg, errs, default):
    h_list = cfg.get("h_list", default)
    if not (isinstance(h_list, list) and h_list and all(
        isinstance(h, (int, float)) and h > 0 for h in h_list
    )):
        errs.append(f"h_list: must be a nonempty list of positive meshes, got {h_list}")
        return default
    return [float(h) for h in h_list]


def _check_quadrature(cfg, errs):
    mq = cfg.get("M_q", 256)
    tol = cfg.get("tol", 1e-8)
    max_m = cfg.get("max_M", 8192)
    if not (_is_pow2(mq) and mq >= 64):
        errs.append(f"M_q: must be a power of two >= 64, got {mq}")
        mq = 256
    if not (isinstance(tol, (int, float)) and tol > 0):
        errs.append(f"tol: must be positive, got {tol}")
        tol = 1e-8
    if not (isinstance(max_m, int) and max_m >= mq):
        errs.append(f"max_M: must be an integer >= M_q, got {max_m}")
        max_m = max(8192, mq)
    return QuadratureSpec(M_q=mq, tol=float(tol), max_M=max_m)


def validate_config(command: str, raw: dict):
    """Returns the resolved config dict; raises ConfigError listing every
    violation, not just the first."""
    errs = []
    cfg = dict(raw)
    out = {"command": command}
    if command == "decay":
        n_list = cfg.get("N_list", [0.5, 0.25, 0.125, 0.0625, 0.03125])
        scales = []
        for N in n_list:
            try:
                scales.append(DyadicScale.from_value(float(N)))
            except (LatticeError, TypeError, ValueError):
                errs.append(f"N_list: {N} is not a dyadic scale in (0, 1]")
        s_list = cfg.get("s_list", [10.0, 20.0, 40.0])

        def _good_times(lst):
            return (isinstance(lst, list) and lst and all(
                isinstance(s, (int, float)) and s > 0 for s in lst
            ))

        s_map = {}
        if isinstance(s_list, dict):
            # per-band windows, keyed by the dyadic exponent k
            for key, lst in s_list.items():
                if not _good_times(lst):
                    errs.append(f"s_list[{key}]: must be a nonempty list of positive times")
                    continue
                try:
                    s_map[int(key)] = [float(s) for s in lst]
                except ValueError:
                    errs.append(f"s_list: key {key!r} is not an integer band exponent")
            for scale in scales:
                if scale.k not in s_map:
                    errs.append(f"s_list: no time window for N = 2^-{scale.k}")
        elif _good_times(s_list):
            s_map = {scale.k: [float(s) for s in s_list] for scale in scales}
        else:
            errs.append(f"s_list: must be a nonempty list of positive times, got {s_list}")
        try:
            spec = _check_quadrature(cfg, errs)
        except LatticeError as exc:
            errs.append(str(exc))
            spec = QuadratureSpec()
        out.update(N_list=[s.N for s in scales],
                   s_list={str(k): v for k, v in s_map.items()},
                   M_q=spec.M_q, tol=spec.tol, max_M=spec.max_M)
        out["_scales"], out["_spec"], out["_s_map"] = scales, spec, s_map
    elif command == "strichartz":
        L = cfg.get("L", 16.0)
        if not (isinstance(L, (int, float)) and L > 0):
            errs.append(f"L: period must be positive, got {L}")
            L = 16.0
        h_list = _check_h_list(cfg, errs, [1.0, 0.5, 0.25, 0.125, 0.0625, 0.03125])
        for h in h_list:
            if not _is_pow2(round(L / h)) or abs(round(L / h) * h - L) > 1e-9 * L:
                errs.append(f"h_list: L/h must be a power of two, got h = {h} with L = {L}")
        pairs = cfg.get("pairs", [["inf", 2], [8, 4], [4, "inf"]])
        parsed_pairs = []
        for pair in pairs:
            try:
                q, r = (math.inf if e == "inf" else float(e) for e in pair)
                from .strichartz import AdmissiblePair
                parsed_pairs.append(AdmissiblePair(q, r))
            except (LatticeError, TypeError, ValueError):
                errs.append(f"pairs: {pair} is not an admissible pair (1/q = (1/2)(1/2 - 1/r))")
        T = cfg.get("T", 10.0)
        if not (isinstance(T, (int, float)) and T > 0):
            errs.append(f"T: must be positive, got {T}")
            T = 10.0
        n_samples = cfg.get("n_samples", 512)
        if not (isinstance(n_samples, int) and n_samples >= 2):
            errs.append(f"n_samples: must be an integer >= 2, got {n_samples}")
            n_samples = 512
        gauss = _check_gaussian(cfg, errs, (L / 2.0, L / 2.0))
        out.update(L=float(L), h_list=h_list, T=float(T), n_samples=n_samples,
                   pairs=[[("inf" if p.q == math.inf else p.q),
                           ("inf" if p.r == math.inf else p.r)] for p in parsed_pairs],
                   gaussian=gauss, band=cfg.get("band", 4),
                   sup_ratio=bool(cfg.get("sup_ratio", True)))
        out["_pairs"] = parsed_pairs
    elif command == "limit":
        L = cfg.get("L", 16.0)
        if not (isinstance(L, (int, float)) and L > 0):
            errs.append(f"L: period must be positive, got {L}")
            L = 16.0
        lam, p = _check_physics(cfg, errs)
        T = cfg.get("T", 1.0)
        if not (isinstance(T, (int, float)) and T > 0):
            errs.append(f"T: must be positive, got {T}")
            T = 1.0
        k_list = cfg.get("k_list", [4, 5, 6, 7, 8])
        if not (isinstance(k_list, list) and k_list and all(
            isinstance(k, int) and k >= 1 for k in k_list
        )):
            errs.append(f"k_list: must be a nonempty list of integers >= 1, got {k_list}")
            k_list = [4, 5, 6]
        ref_M = cfg.get("reference_M", 1024)
        if not _is_pow2(ref_M):
            errs.append(f"reference_M: must be a power of two, got {ref_M}")
            ref_M = 1024
        ref_tau = cfg.get("reference_tau", 2.5e-4)
        lattice_tau = cfg.get("lattice_tau", 1e-3)
        for key, val in (("reference_tau", ref_tau), ("lattice_tau", lattice_tau)):
            if not (isinstance(val, (int, float)) and val > 0):
                errs.append(f"{key}: must be positive, got {val}")
        gauss = _check_gaussian(cfg, errs, (L / 2.0, L / 2.0))
        out.update(L=float(L), T=float(T), k_list=k_list, reference_M=ref_M,
                   reference_tau=ref_tau, lattice_tau=lattice_tau, gaussian=gauss)
        out["lambda"], out["p"] = lam, p
    elif command == "lp":
        M = cfg.get("M", 128)
        if not _is_pow2(M) or M < 8:
            errs.append(f"M: must be a power of two >= 8, got {M}")
            M = 128
        h_list = _check_h_list(cfg, errs, [1.0, 0.5, 0.25, 0.125])
        p = cfg.get("p", 4.0)
        if not (isinstance(p, (int, float)) and 1 < p < math.inf):
            errs.append(f"p: square-function exponent must lie in (1, inf), got {p}")
            p = 4.0
        count = cfg.get("ensemble", 100)
        if not (isinstance(count, int) and count >= 2):
            errs.append(f"ensemble: must be an integer >= 2, got {count}")
            count = 100
        out.update(M=M, h_list=h_list, p=float(p), ensemble=count)
    elif command == "gns":
        q = cfg.get("q", 4.0)
        s = cfg.get("s", 1.0)
        from .lattice import gns_theta
        try:
            gns_theta(math.inf if q == "inf" else float(q), float(s))
        except (LatticeError, TypeError, ValueError):
            errs.append(f"(q, s): incompatible exponents ({q}, {s}); need theta in (0, 1)")
        L = cfg.get("L", 16.0)
        h_list = _check_h_list(cfg, errs, [1.0, 0.5, 0.25, 0.125, 0.0625, 0.03125])
        count = cfg.get("ensemble", 100)
        if not (isinstance(count, int) and count >= 2):
            errs.append(f"ensemble: must be an integer >= 2, got {count}")
            count = 100
        out.update(q=q, s=float(s), L=float(L), h_list=h_list, ensemble=count,
                   band=cfg.get("band", 4))
    elif command == "solve":
        M = cfg.get("M", 64)
        h = cfg.get("h", 0.25)
        if not _is_pow2(M) or M < 4:
            errs.append(f"M: must be a power of two >= 4, got {M}")
            M = 64
        if not (isinstance(h, (int, float)) and h > 0):
            errs.append(f"h: mesh size must be positive, got {h}")
            h = 0.25
        lam, p = _check_physics(cfg, errs)
        T = cfg.get("T", 1.0)
        tau = cfg.get("tau", 1e-3)
        sample_every = cfg.get("sample_every", 100)
        kind = cfg.get("kind", "discrete")
        if kind not in ("discrete", "continuum"):
            errs.append(f"kind: must be 'discrete' or 'continuum', got {kind}")
            kind = "discrete"
        if not (isinstance(T, (int, float)) and T > 0):
            errs.append(f"T: must be positive, got {T}")
            T = 1.0
        if not (isinstance(tau, (int, float)) and 0 < tau <= T):
            errs.append(f"tau: must satisfy 0 < tau <= T, got {tau}")
            tau = min(1e-3, T)
        if not (isinstance(sample_every, int) and sample_every >= 1):
            errs.append(f"sample_every: must be an integer >= 1, got {sample_every}")
            sample_every = 100
        gauss = _check_gaussian(cfg, errs, (M * h / 2.0, M * h / 2.0))
        out.update(M=M, h=float(h), T=float(T), tau=float(tau),
                   sample_every=sample_every, kind=kind, gaussian=gauss)
        out["lambda"], out["p"] = lam, p
    else:
        errs.append(f"unknown command {command}")
    known = {k for k in cfg} - {
        "N_list", "s_list", "M_q", "tol", "max_M", "L", "h_list", "pairs", "T",
        "n_samples", "gaussian", "band", "sup_ratio", "lambda", "p", "k_list",
        "reference_M", "reference_tau", "lattice_tau", "M", "h", "tau",
        "sample_every", "kind", "q", "s", "ensemble", "seed",
    }
    for key in sorted(known):
        errs.append(f"{key}: unknown config key")
    if errs:
        raise ConfigError(errs)
    return out


def _run_decay(cfg, out_dir, threads, seed):
    spec = cfg["_spec"]

    def one(task):
        scale, s = task
        field = eval_K_unit(scale, s, spec)
        sup = float(np.abs(field.values).max())
        return DecayRecord(N=scale.N, k=scale.k, s=float(s),
                           sup_abs=sup, normalized=math.sqrt(abs(s)) * sup,
                           Mq_used=field.grid.M)

    tasks = [(scale, s) for scale in cfg["_scales"] for s in cfg["_s_map"][scale.k]]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            records = list(ex.map(one, tasks))
    else:
        records = [one(t) for t in tasks]
    write_decay_csv(records, os.path.join(out_dir, "decay.csv"))
    summary = {}
    for scale in cfg["_scales"]:
        mine = [(r.s, r.sup_abs) for r in records if r.k == scale.k]
        if len(mine) >= 3:
            slope, _ = fit_loglog_slope(mine)
            summary[f"slope_N_2^-{scale.k}"] = slope
    with open(os.path.join(out_dir, "decay_summary.json"), "w") as fh:
        json.dump(summary, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _run_strichartz(cfg, out_dir, threads, seed):
    L = cfg["L"]
    profiles = {
        "gaussian": GaussianProfile(center=cfg["gaussian"]["center"],
                                    width=cfg["gaussian"]["width"],
                                    amplitude=cfg["gaussian"]["amplitude"]),
        "band_limited": BandLimitedProfile(L=L, band=cfg["band"], seed=seed),
    }
    reports = strichartz_sweep(
        profiles, cfg["_pairs"], L, cfg["h_list"], T=cfg["T"],
        n_samples=cfg["n_samples"], sup_ratio=cfg["sup_ratio"],
    )
    write_sweep_csv(reports, os.path.join(out_dir, "strichartz.csv"))
    write_sweep_json(reports, os.path.join(out_dir, "strichartz_summary.json"))


def _run_limit(cfg, out_dir, threads, seed):
    L = cfg["L"]
    profile = GaussianProfile(center=cfg["gaussian"]["center"],
                              width=cfg["gaussian"]["width"],
                              amplitude=cfg["gaussian"]["amplitude"])
    params = NonlinearityParams(lam=cfg["lambda"], p=cfg["p"])
    report = run_limit_experiment(
        profile, params, cfg["T"], L,
        [L / 2**k for k in cfg["k_list"]],
        reference=ReferenceSpec(M=cfg["reference_M"], tau=cfg["reference_tau"]),
        lattice_tau=cfg["lattice_tau"],
    )
    write_report_csv(report, os.path.join(out_dir, "limit.csv"))
    write_report_json(report, os.path.join(out_dir, "limit_summary.json"))


def _run_lp(cfg, out_dir, threads, seed):
    brackets = ensemble_bracket(cfg["M"], cfg["h_list"], cfg["p"], cfg["ensemble"], seed)
    payload = {
        repr(h): {"c_p": lo, "C_p": hi, "spread": hi / lo}
        for h, (lo, hi) in brackets.items()
    }
    with open(os.path.join(out_dir, "lp_summary.json"), "w") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _run_gns(cfg, out_dir, threads, seed):
    q = math.inf if cfg["q"] == "inf" else float(cfg["q"])
    s = cfg["s"]
    payload = {}
    for i, h in enumerate(sorted(cfg["h_list"], reverse=True)):
        M = round(cfg["L"] / h)
        if not _is_pow2(M):
            raise LatticeError(f"L/h must be a power of two, got h = {h}")
        grid = LatticeGrid(d=2, M=M, h=h)
        ratios = []
        for j in range(cfg["ensemble"]):
            profile = BandLimitedProfile(L=cfg["L"], band=cfg["band"],
                                         seed=seed + 1000 * i + j)
            f = profile.sample(grid)
            vals = f.values - f.values.mean()
            ratios.append(gns_ratio(ComplexField(grid, vals), q, s))
        payload[repr(float(h))] = {"max_ratio": max(ratios), "mean_ratio": float(np.mean(ratios))}
    with open(os.path.join(out_dir, "gns_summary.json"), "w") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _run_solve(cfg, out_dir, threads, seed):
    grid = LatticeGrid(d=2, M=cfg["M"], h=cfg["h"])
    profile = GaussianProfile(center=cfg["gaussian"]["center"],
                              width=cfg["gaussian"]["width"],
                              amplitude=cfg["gaussian"]["amplitude"])
    from .limits import discretize
    f0 = discretize(profile, grid)
    params = NonlinearityParams(lam=cfg["lambda"], p=cfg["p"])
    traj = solve(f0, cfg["T"], cfg["tau"], params, kind=cfg["kind"],
                 sample_every=cfg["sample_every"])
    export_trajectory(traj, out_dir)


RUNNERS = {
    "decay": _run_decay,
    "strichartz": _run_strichartz,
    "limit": _run_limit,
    "lp": _run_lp,
    "gns": _run_gns,
    "solve": _run_solve,
}

ERROR_KINDS = {
    QuadratureError: "quadrature_cap",
    ReferenceUnconverged: "reference_unconverged",
}


def _error_kind(exc) -> str:
    for etype, kind in ERROR_KINDS.items():
        if isinstance(exc, etype):
            return kind
    if "non-finite" in str(exc):
        return "nan_detected"
    return "runtime_failure"


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="latdisp",
        description="Experiment runner for lattice dispersive-equation studies",
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="path to a JSON config file")
    parser.add_argument("--out", default=None,
                        help="output directory (default: $LATDISP_OUT or ./latdisp-out)")
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--seed", type=int, default=1)
    args = parser.parse_args(argv)

    out_dir = args.out or os.environ.get("LATDISP_OUT") or "latdisp-out"
    try:
        with open(args.config) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: cannot read config {args.config}: {exc}", file=sys.stderr)
        return 2
    if not isinstance(raw, dict):
        print("error: config must be a JSON object", file=sys.stderr)
        return 2
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return 2
    try:
        cfg = validate_config(args.command, raw)
    except ConfigError as exc:
        for v in exc.violations:
            print(f"config error: {v}", file=sys.stderr)
        return 2

    os.makedirs(out_dir, exist_ok=True)
    manifest = {
        "command": args.command,
        "config": {k: v for k, v in cfg.items() if not k.startswith("_")},
        "seed": args.seed,
        "threads": args.threads,
        "version": __version__,
    }
    with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=2)
        fh.write("\n")

    try:
        RUNNERS[args.command](cfg, out_dir, args.threads, args.seed)
    except (QuadratureError, ReferenceUnconverged, LatticeError) as exc:
        payload = {"error": _error_kind(exc), "detail": str(exc)}
        with open(os.path.join(out_dir, "error.json"), "w") as fh:
            json.dump(payload, fh, sort_keys=True, indent=2)
            fh.write("\n")
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
