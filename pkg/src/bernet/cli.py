"""Command-line front end.

Every subcommand resolves its parameters as flags > ``--config`` JSON >
defaults, writes its data (CSV or JSON) to ``--out`` or stdout, and writes a
run manifest next to ``--out``.  Data files never contain timestamps or the
thread count, so re-running a manifest reproduces them byte for byte.

Exit codes: 0 success, 1 usage error, 2 numerical or precondition failure.
"""
from __future__ import annotations

import argparse
import csv
import datetime as _dt
import hashlib
import io
import json
import math
import sys
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .parallel import resolve_threads

EXIT_OK, EXIT_USAGE, EXIT_FAILURE = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# ---------------------------------------------------------------------------
# Value parsers


def count(text) -> int:
    """Integer that also accepts scientific notation such as ``1e6``."""
    v = float(text)
    if v != int(v):
        raise argparse.ArgumentTypeError(f"not an integer: {text}")
    return int(v)


def int_list(text) -> list:
    if isinstance(text, (list, tuple)):
        return [int(x) for x in text]
    return [int(x) for x in str(text).split(",") if x.strip()]


def float_list(text) -> list:
    if isinstance(text, (list, tuple)):
        return [float(x) for x in text]
    return [float(x) for x in str(text).split(",") if x.strip()]


def size_list(text) -> list:
    """``64x64,128x128`` -> [[64, 64], [128, 128]] (m by n)."""
    if isinstance(text, (list, tuple)):
        return [[int(a), int(b)] for a, b in text]
    out = []
    for item in str(text).split(","):
        m, n = item.lower().split("x")
        out.append([int(m), int(n)])
    return out


def dims_list(text) -> list:
    """``8:1,8:2`` -> [[8, 1], [8, 2]] (extent and connectivity per axis)."""
    if isinstance(text, (list, tuple)):
        return [[int(a), int(b)] for a, b in text]
    return [[int(x) for x in item.split(":")] for item in str(text).split(",")]


# ---------------------------------------------------------------------------
# Manifest and output


@dataclass
class RunManifest:
    command: str
    config: dict
    seed: int
    version: str = __version__
    started: str = ""
    finished: str = ""
    threads: int = 1
    outputs: dict = field(default_factory=dict)

    def reproducible(self) -> dict:
        """The part embedded in data files: no timestamps, threads or digests."""
        return {"command": self.command, "config": self.config, "seed": self.seed,
                "version": self.version}

    def to_dict(self) -> dict:
        return {"command": self.command, "config": self.config, "seed": self.seed,
                "version": self.version, "started": self.started, "finished": self.finished,
                "threads": self.threads, "outputs": self.outputs}


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    return obj


def rows_to_csv(rows: list) -> str:
    buf = io.StringIO()
    if not rows:
        return ""
    w = csv.writer(buf, lineterminator="\n")
    header = list(rows[0])
    w.writerow(header)
    for r in rows:
        w.writerow([repr(r[h]) if isinstance(r[h], float) else r[h] for h in header])
    return buf.getvalue()


@dataclass
class Output:
    """What a command produced: a JSON result and, optionally, CSV text or raw bytes."""

    result: dict
    csv: str | None = None
    raw: bytes | None = None


# ---------------------------------------------------------------------------
# Commands


COMMON = {"seed": 0}


def _net_config(cfg):
    from .net import NetConfig
    if cfg.get("row_dims"):
        return NetConfig(cfg["n"], tuple(tuple(d) for d in cfg["row_dims"]), cfg["p"], cfg["seed"])
    return NetConfig.planar(cfg["m"], cfg["n"], cfg["C"], cfg["p"], cfg["seed"])


NET_PARAMS = {"m": (count, 16), "n": (count, 16), "C": (count, 1), "p": (float, 0.2),
              "row_dims": (dims_list, None)}


def cmd_simulate_net(cfg, threads):
    from .net import generate_net
    net = generate_net(_net_config(cfg))
    st = net.states
    rows = []
    for idx in zip(*np.indices(st.shape).reshape(st.ndim, -1)):
        row = {"col": int(idx[0]) + 1}
        for a, r in enumerate(idx[1:]):
            row[f"row{a + 1}"] = int(r) + 1
        row["state"] = int(st[idx])
        rows.append(row)
    blob = net.to_bytes()
    return Output({"config": net.config.to_dict(), "dump_hex": blob.hex(),
                   "significant": int(st.sum())}, rows_to_csv(rows), blob)


def cmd_longest_run(cfg, threads):
    from .longest_run import longest_run_dp
    from .net import generate_net
    res = longest_run_dp(generate_net(_net_config(cfg)))
    rows = [dict({"step": i + 1, "col": c.col}, **{f"row{a + 1}": r for a, r in enumerate(c.rows)})
            for i, c in enumerate(res.path)]
    path = [[c.col] + list(c.rows) for c in res.path]
    return Output({"length": res.length, "path": path},
                  rows_to_csv(rows) if rows else "step,col,row1\n")


def cmd_hist(cfg, threads):
    from .longest_run import length_distribution
    h = length_distribution(_net_config(cfg), cfg["reps"], threads)
    return Output(dict(h.to_dict(), median=h.median, mean=h.mean()), h.to_csv())


def _pt_config(cfg):
    from .pseudotree import PseudoTreeConfig
    return PseudoTreeConfig(tuple(cfg["C"]), cfg["p"])


def cmd_theta(cfg, threads):
    from .pseudotree import theta_series
    s = theta_series(_pt_config(cfg), cfg["kmax"], cfg["reps"], cfg["seed"], cfg["method"],
                     cfg["batches"], threads)
    return Output(s.to_dict(), s.to_csv())


def cmd_phi(cfg, threads):
    from .pseudotree import phi_fit, theta_series
    s = theta_series(_pt_config(cfg), cfg["kmax"], cfg["reps"], cfg["seed"], cfg["method"],
                     cfg["batches"], threads)
    f = phi_fit(s)
    return Output({"fit": f.to_dict(), "series": s.to_dict(), "sandwich_holds": f.sandwich_holds(s)},
                  rows_to_csv([dict(f.to_dict(), k_window=f"{f.k_window[0]}-{f.k_window[1]}")]))


def cmd_pc(cfg, threads):
    from .pseudotree import pc_bracket
    b = pc_bracket(tuple(cfg["C"]), cfg["depth"], cfg["threshold"], cfg["reps"], cfg["seed"],
                   cfg["tol"], threads)
    return Output(b.to_dict(), rows_to_csv([b.to_dict()]))


def cmd_rho_exact(cfg, threads):
    from .markov import rho_exact, rho_table_csv
    r = rho_exact(cfg["m"], cfg["C"], cfg["p"], cfg["tol"])
    return Output(dict(r.__dict__), rho_table_csv([r]))


def cmd_table1(cfg, threads):
    from .markov import rho_table_csv, table1
    rows = table1(cfg["ms"], cfg["ps"], cfg["C"], cfg["tol"], threads)
    return Output({"rows": [dict(r.__dict__) for r in rows]}, rho_table_csv(rows))


def cmd_stab_bounds(cfg, threads):
    from .markov import across_prob_exact, stab_bounds
    ks = [cfg["k"]] if cfg["k"] else list(range(1, cfg["n"] + 1))
    rows = []
    for k in ks:
        lo, hi = stab_bounds(cfg["m"], cfg["n"], cfg["C"], cfg["p"], k)
        rows.append({"k": k, "P_k": across_prob_exact(cfg["m"], cfg["C"], cfg["p"], k),
                     "lower": lo, "upper": hi})
    return Output({"rows": rows}, rows_to_csv(rows))


def cmd_poisson_approx(cfg, threads):
    from .asymptotics import across_frequency, poisson_approx_across
    from .net import NetConfig
    from .pseudotree import PseudoTreeConfig, theta_series
    m, n = cfg["m"], cfg["n"]
    if cfg["theta"] is not None:
        theta, theta_se = cfg["theta"], 0.0
    else:
        s = theta_series(PseudoTreeConfig((cfg["C"],), cfg["p"]), n, cfg["reps"], cfg["seed"],
                         threads=threads)
        theta, theta_se = s.entries[-1].estimate, s.entries[-1].stderr
    approx = poisson_approx_across(m, theta)
    out = {"m": m, "n": n, "theta_n": theta, "theta_stderr": theta_se, "approx": approx,
           "approx_stderr": m * math.exp(-m * theta) * theta_se}
    if cfg["direct_reps"]:
        d = across_frequency(NetConfig.planar(m, n, cfg["C"], cfg["p"], cfg["seed"]),
                             cfg["direct_reps"], threads)
        out.update(direct=d.estimate, direct_stderr=d.stderr)
    return Output(out, rows_to_csv([out]))


def cmd_rate_check(cfg, threads):
    from .asymptotics import InflatingRegion, rate_sweep
    from .pseudotree import estimate_phi
    phi = cfg["phi"] if cfg["phi"] is not None else estimate_phi((cfg["C"],), cfg["p"], seed=cfg["seed"]).phi_hat
    region = None
    if cfg["region"]:
        c1, c2, d1, d2 = cfg["region"]
        region = InflatingRegion(c1, c2, d1, d2, phi)
    t = rate_sweep(cfg["C"], cfg["p"], phi, cfg["sizes"], cfg["reps"], cfg["seed"], region, threads)
    return Output(t.to_dict(), t.to_csv())


def cmd_gumbel(cfg, threads):
    from .asymptotics import gumbel_fit
    g = gumbel_fit(cfg["m"], cfg["C"], cfg["p"], cfg["n"], cfg["reps"], cfg["seed"], threads)
    return Output(g.to_dict(), rows_to_csv([g.to_dict()]))


def cmd_detect_anomaly(cfg, threads):
    from .detection.anomaly import AnomalyScenario, plant_and_test_anomaly
    from .net import NetConfig
    from .pseudotree import estimate_phi
    phi = cfg["phi"] if cfg["phi"] is not None else estimate_phi((cfg["C"],), cfg["p0"], seed=cfg["seed"]).phi_hat
    sc = AnomalyScenario(NetConfig.planar(cfg["m"], cfg["n"], cfg["C"], cfg["p0"], cfg["seed"]), cfg["p1"])
    r = plant_and_test_anomaly(sc, phi, cfg["reps"], cfg["seed"], threads)
    out = dict(r.to_dict(), phi_p0=phi, seed=cfg["seed"])
    return Output(out, rows_to_csv([out]))


def _thresholds(cfg):
    from .detection.msra import compute_thresholds
    return compute_thresholds(cfg["N"], cfg["alpha"], cfg["beta"], cfg["S"], cfg["delta3"],
                              cfg["N_star"], phi_seed=cfg["phi_seed"])


def cmd_thresholds(cfg, threads):
    th = _thresholds(cfg)
    return Output(th.to_dict(), rows_to_csv([th.to_dict()]))


def cmd_detect_filament(cfg, threads):
    from .detection.msra import msra_test, read_points_csv, sample_scene
    th = _thresholds(cfg)
    if cfg["points"]:
        with open(cfg["points"]) as fh:
            pts = read_points_csv(fh.read())
    else:
        eps = cfg["eps"] if cfg["eps"] is not None else th.eps_for_power()
        pts = sample_scene(cfg["N"], cfg["alpha"] or 2.0, cfg["beta"], cfg["S"], eps,
                           cfg["seed"], cfg["hypothesis"]).points
    r = msra_test(pts, th)
    out = dict(r.to_dict(), seed=cfg["seed"])
    flat = dict(out, per_scale=";".join(map(str, r.per_scale)))
    return Output(out, rows_to_csv([flat]))


def _track_config(cfg):
    from .detection.tracking import TrackConfig
    return TrackConfig(cfg["m"], cfg["n"], cfg["p0"], cfg["p1"], cfg["p2"], cfg["p3"],
                       cfg["sigma"], tuple(cfg["initial"] or ()))


def cmd_track_sim(cfg, threads):
    from .detection.tracking import simulate_track
    sc = simulate_track(_track_config(cfg), cfg["seed"])
    return Output({"config": sc.config.to_dict(), "seed": sc.seed, "X": sc.X, "Z": sc.Z}, sc.to_csv())


def cmd_track_test(cfg, threads):
    from .detection.tracking import read_frames_csv, simulate_track, track_test
    if cfg["frames"]:
        with open(cfg["frames"]) as fh:
            _, Z = read_frames_csv(fh.read())
    else:
        Z = simulate_track(_track_config(cfg), cfg["seed"]).Z
    d = track_test(Z, cfg["sigma"], cfg["p_target"], cfg["mode"], cfg["delta4"], cfg["phi"])
    out = dict(d.to_dict(), seed=cfg["seed"])
    return Output(out, rows_to_csv([out]))


PT_PARAMS = {"C": (int_list, [1]), "p": (float, 0.2), "kmax": (count, 40), "reps": (count, 100_000),
             "method": (str, "auto"), "batches": (count, 20)}
MSRA_PARAMS = {"N": (count, 2048), "alpha": (float, 2.0), "beta": (float, 1.0), "S": (count, 1),
               "delta3": (float, 0.1), "N_star": (count, 6), "phi_seed": (count, 0)}
TRACK_PARAMS = {"m": (count, 256), "n": (count, 256), "p0": (float, 0.0), "p1": (float, 0.0),
                "p2": (float, 0.0), "p3": (float, 0.0), "sigma": (float, 1.0), "initial": (int_list, None)}

COMMANDS = {
    "simulate-net": (cmd_simulate_net, NET_PARAMS, "csv"),
    "longest-run": (cmd_longest_run, NET_PARAMS, "json"),
    "hist": (cmd_hist, dict(NET_PARAMS, m=(count, 128), n=(count, 128), reps=(count, 1000)), "csv"),
    "theta": (cmd_theta, PT_PARAMS, "csv"),
    "phi": (cmd_phi, PT_PARAMS, "json"),
    "pc": (cmd_pc, {"C": (int_list, [1]), "depth": (count, 256), "threshold": (float, 0.05),
                    "reps": (count, 1000), "tol": (float, 1e-3)}, "json"),
    "rho-exact": (cmd_rho_exact, {"m": (count, 4), "C": (count, 1), "p": (float, 0.3),
                                  "tol": (float, 1e-7)}, "json"),
    "table1": (cmd_table1, {"ms": (int_list, [4, 8, 10]), "ps": (float_list, [0.1, 0.2, 0.3, 0.4, 0.5, 0.6]),
                            "C": (count, 1), "tol": (float, 1e-7)}, "csv"),
    "stab-bounds": (cmd_stab_bounds, {"m": (count, 3), "n": (count, 5), "C": (count, 1),
                                      "p": (float, 0.3), "k": (count, None)}, "csv"),
    "poisson-approx": (cmd_poisson_approx, {"m": (count, 2000), "n": (count, 30), "C": (count, 1),
                                            "p": (float, 0.2), "theta": (float, None),
                                            "reps": (count, 100_000), "direct_reps": (count, 0)}, "json"),
    "rate-check": (cmd_rate_check, {"C": (count, 1), "p": (float, 0.2), "phi": (float, None),
                                    "sizes": (size_list, [[64, 64], [128, 128], [256, 256]]),
                                    "reps": (count, 1000), "region": (float_list, None)}, "csv"),
    "gumbel": (cmd_gumbel, {"m": (count, 4), "C": (count, 1), "p": (float, 0.3), "n": (count, 10_000),
                            "reps": (count, 2000)}, "json"),
    "detect-anomaly": (cmd_detect_anomaly, {"m": (count, 256), "n": (count, 256), "C": (count, 1),
                                            "p0": (float, 0.2), "p1": (float, 0.8), "phi": (float, None),
                                            "reps": (count, 200)}, "json"),
    "detect-filament": (cmd_detect_filament, dict(MSRA_PARAMS, eps=(float, None), hypothesis=(str, "H1"),
                                                  points=(str, None)), "json"),
    "thresholds": (cmd_thresholds, MSRA_PARAMS, "json"),
    "track-sim": (cmd_track_sim, TRACK_PARAMS, "csv"),
    "track-test": (cmd_track_test, dict(TRACK_PARAMS, p_target=(float, 0.3), mode=(str, "inflating"),
                                        delta4=(float, 0.1), phi=(float, None), frames=(str, None)), "json"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bernet", description="Longest significant runs in Bernoulli nets.")
    parser.add_argument("--version", action="version", version=f"bernet {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, (_, params, default_fmt) in COMMANDS.items():
        sp = sub.add_parser(name)
        sp.add_argument("--seed", type=count, default=None)
        sp.add_argument("--out", default=None, help="data file (default: stdout)")
        fmts = ["csv", "json", "bin"] if name == "simulate-net" else ["csv", "json"]
        sp.add_argument("--format", choices=fmts, default=None, help=f"default {default_fmt}")
        sp.add_argument("--threads", type=int, default=None, help="default $BERNET_THREADS or 1")
        sp.add_argument("--config", default=None, help="JSON config or run manifest")
        for key, (conv, _) in params.items():
            flag = "--" + key.replace("_", "-")
            sp.add_argument(flag, dest=key, type=conv, default=None)
            if key != key.lower():
                sp.add_argument("--" + key.lower().replace("_", "-"), dest=key, type=conv,
                                default=None, help=argparse.SUPPRESS)
    return parser


def load_config(path: str, command: str) -> dict:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise UsageError("config must be a JSON object")
    if "manifest" in data and isinstance(data["manifest"], dict):
        data = data["manifest"]
    if "config" in data and "command" in data:
        if data["command"] != command:
            raise UsageError(f"manifest is for {data['command']!r}, not {command!r}")
        data = data["config"]
    return data


def resolve(args, params: dict) -> dict:
    cfg = {"seed": 0, "format": None}
    cfg.update({k: d for k, (_, d) in params.items()})
    if args.config:
        file_cfg = load_config(args.config, args.command)
        unknown = set(file_cfg) - set(cfg)
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        for k, v in file_cfg.items():
            cfg[k] = params[k][0](v) if k in params and v is not None and params[k][0] is not str else v
    for k in list(cfg):
        v = getattr(args, k, None)
        if v is not None:
            cfg[k] = v
    cfg["seed"] = int(cfg["seed"])
    return cfg


def _write(path: str | None, data: bytes) -> str:
    if path is None or path == "-":
        sys.stdout.buffer.write(data)
        sys.stdout.flush()
    else:
        with open(path, "wb") as fh:
            fh.write(data)
    return hashlib.sha256(data).hexdigest()


def run(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        func, params, default_fmt = COMMANDS[args.command]
        cfg = resolve(args, params)
    except UsageError as exc:
        print(f"bernet: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    fmt = cfg.pop("format") or default_fmt
    cfg["format"] = fmt
    threads = resolve_threads(args.threads)
    manifest = RunManifest(args.command, dict(cfg), cfg["seed"], started=_now(), threads=threads)
    try:
        out = func(cfg, threads)
    except (ValueError, RuntimeError, ArithmeticError) as exc:
        print(f"bernet {args.command}: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except OSError as exc:
        print(f"bernet {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if fmt == "json" or (fmt == "csv" and out.csv is None):
        body = dict(_jsonable(out.result), manifest=manifest.reproducible())
        data = (json.dumps(body, sort_keys=True, indent=1) + "\n").encode()
    elif fmt == "bin":
        data = out.raw
    else:
        data = out.csv.encode()
    manifest.outputs[args.out or "-"] = _write(args.out, data)
    manifest.finished = _now()
    if args.out and args.out != "-":
        with open(args.out + ".manifest.json", "w") as fh:
            json.dump(_jsonable(manifest.to_dict()), fh, sort_keys=True, indent=1)
            fh.write("\n")
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
