"""Command-line front end.

    modalstab spectrum          --preset scalar-boundary
    modalstab find-n            --preset coupled --n 3..60 --out results/
    modalstab simulate          --preset scalar-boundary --n 3
    modalstab check-assumptions --config my.ini

Exit codes: 0 success, 2 invalid configuration, 3 no slow order certified,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__, config as cfgmod
from .assumptions import check_all
from .design import design as make_design
from .dimfind import find_min_n
from .errors import (
    ConfigError,
    ModalStabError,
    NoneStabilizes,
    TargetCollision,
    Uncontrollable,
    Unobservable,
    WindowTooShort,
)
from .io import format_csv, write_csv
from .modal import build_modal
from .sim import constant_profile_coords, fit_decay, integrate, lemma_constants, reconstruct_field, validate_lemmas

EXIT_OK, EXIT_CONFIG, EXIT_UNCERTIFIED, EXIT_NUMERICAL = 0, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="modalstab", description="Finite-dimensional output feedback for modal parabolic plants.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        src = sp.add_mutually_exclusive_group()
        src.add_argument("--preset", choices=cfgmod.PRESETS, help="shipped experiment")
        src.add_argument("--config", metavar="PATH", help="INI experiment file")
        sp.add_argument("--out", metavar="DIR", help="write CSV files (and plot scripts) here")
        sp.add_argument("--csv", action="store_true", help="print tables as CSV")
        sp.add_argument("--n", metavar="A..B", help="slow order or range")
        sp.add_argument("--m-max", type=int, metavar="M", help="largest total mode count in sweeps")
        sp.add_argument("--seed", type=int, help="seed for random initial data")
        sp.add_argument("--threads", type=int, metavar="N", help="worker threads for sweeps")
        sp.add_argument("--plot", action="store_true", help="with --out, also write a matplotlib script")
        return sp

    sp = common(sub.add_parser("spectrum", help="eigenvalues and modal coefficients"))
    sp.add_argument("--modes", type=int, metavar="K", help="number of modes to list")
    common(sub.add_parser("find-n", help="smallest certified slow order"))
    sp = common(sub.add_parser("simulate", help="closed-loop simulation with trajectory checks"))
    sp.add_argument("--t-end", type=float, metavar="T")
    sp.add_argument("--dt", type=float)
    sp.add_argument("--no-checks", action="store_true", help="skip the assumption fit and bound checks")
    common(sub.add_parser("check-assumptions", help="fit and test the coefficient assumptions"))
    return p


def _load(args) -> cfgmod.ExperimentConfig:
    if args.config:
        cfg = cfgmod.load(args.config)
    else:
        cfg = cfgmod.load_preset(args.preset or "scalar-boundary")
    over = {}
    if args.n is not None:
        lo, hi = cfgmod.parse_range("--n", args.n)
        over["dimfind__n"] = (lo, hi)
        over["sim__n"] = lo
        over["assumptions__n"] = lo
    if args.m_max is not None:
        over["dimfind__m_max"] = args.m_max
    if args.seed is not None:
        over["sim__seed"] = args.seed
    if getattr(args, "t_end", None) is not None:
        over["sim__t_end"] = args.t_end
    if getattr(args, "dt", None) is not None:
        over["sim__dt"] = args.dt
    if getattr(args, "modes", None) is not None:
        over["modal__modes"] = args.modes
    return cfg.with_overrides(**over) if over else cfg


def _modal(cfg, N):
    return build_modal(cfg.plant(), N, cfg.modal["sign"])


def _emit(args, columns, name, out):
    if args.csv:
        out.write(format_csv(columns))
    else:
        names = list(columns)
        out.write("  ".join(f"{k:>14}" for k in names) + "\n")
        for row in zip(*(np.asarray(columns[k]).tolist() for k in names)):
            out.write("  ".join(f"{v:>14d}" if isinstance(v, int) else f"{v:>14.6g}" for v in row) + "\n")
    if args.out:
        write_csv(Path(args.out) / name, columns)


# ---------------------------------------------------------------------------
# commands


def cmd_spectrum(cfg, args, out=sys.stdout) -> int:
    K = cfg.modal["modes"]
    cols = {"k": np.zeros(0, int), "branch": np.zeros(0, int), "lambda": np.zeros(0)}
    if K > 0:
        md = _modal(cfg, K)
        cols["k"] = np.array([p.k for p in md.pairs], dtype=int)
        cols["branch"] = np.array([p.branch or 1 for p in md.pairs], dtype=int)
        cols["lambda"] = md.lam
        for i in range(md.n_inputs):
            cols[f"b{i + 1}"] = md.B[:, i]
        for j in range(md.n_outputs):
            cols[f"c{j + 1}"] = md.C[j]
    _emit(args, cols, "spectrum.csv", out)
    return EXIT_OK


def cmd_find_n(cfg, args, out=sys.stdout) -> int:
    f = cfg.dimfind
    lo, hi = f["n"]
    md = _modal(cfg, f["m_max"])
    try:
        table = find_min_n(
            md, range(lo, hi + 1), f["m_max"], cfg.design["kappa"], cfg.design["nu"], window=f["window"],
            tol=f["tol"], margin=f["margin"], dense=f["dense"], threads=args.threads, raise_on_none=False,
        )
    except ValueError as exc:
        raise ConfigError("dimfind.n", str(exc)) from None
    curves = [table.curves[int(n)] for n in table.n]
    summary = {
        "n": table.n.astype(int),
        "rho_mmax": table.rho_at_mmax,
        "rho_limit": np.array([c.rho_limit for c in curves]),
        "lam_bar": np.array([c.lam_bar for c in curves]),
        "settled": np.array([int(c.converged) for c in curves], dtype=int),
        "certified": np.array([int(c.certified) for c in curves], dtype=int),
    }
    _emit(args, summary, "find_n.csv", out)
    if args.out:
        for c in curves:
            write_csv(Path(args.out) / f"rho_n{c.n}.csv", {"m": c.m.astype(int), "rho": c.rho})
        if args.plot:
            _write_plot(Path(args.out) / "plot_find_n.py", _PLOT_FIND_N)
    verdict = sys.stderr if args.csv else out
    if table.n_min is None:
        print(f"no slow order in [{lo}, {hi}] is certified at m_max = {f['m_max']}", file=verdict)
        raise NoneStabilizes(table)
    print(f"minimal n = {table.n_min}", file=verdict)
    return EXIT_OK


def initial_coords(cfg, pairs, M: int) -> np.ndarray:
    kind, val = cfgmod.parse_initial(cfg.sim["initial"])
    if kind == "constant":
        return constant_profile_coords(pairs[:M], val)
    if kind == "mode":
        if val > M:
            raise ConfigError("sim.initial", f"mode {val} beyond the {M} simulated modes")
        x0 = np.zeros(M)
        x0[val - 1] = 1.0
        return x0
    rng = np.random.default_rng(cfg.sim["seed"])
    return val * rng.standard_normal(M) / np.arange(1, M + 1)


def cmd_simulate(cfg, args, out=sys.stdout) -> int:
    s = cfg.sim
    n, M = s["n"], cfg.sim_modes
    checks = not getattr(args, "no_checks", False)
    k_max = cfg.assumptions["k_max"]
    md = _modal(cfg, max(M, k_max) if checks else M)
    d = make_design(md, n, cfg.design["kappa"], cfg.design["nu"])
    x0 = initial_coords(cfg, md.pairs, M)
    e0 = x0[:n].copy() if s["observer"] == "rest" else np.zeros(n)
    traj = integrate(n, M, md, d, x0, e0, T=s["t_end"], dt=s["dt"], record_every=s["record_every"])
    print(f"n = {n}  modes = {M}  samples = {len(traj.t)}", file=out)
    try:
        fit = fit_decay(traj.t, traj.norm_total)
        print(f"growth = {fit.growth!r}  decay = {fit.decay!r}  residual = {fit.residual:.3g}  window = {fit.window}",
              file=out)
    except WindowTooShort as exc:
        print(f"growth = n/a ({exc})", file=out)
    if checks and len(traj.t) > 1:
        report = check_all(md.truncated(k_max), n, design=d)
        try:
            const = lemma_constants(report, md, d)
        except ModalStabError as exc:
            print(f"bound checks skipped: {exc}", file=out)
        else:
            print(f"regime = {const.regime}  alpha = {const.alpha:.4g}", file=out)
            for r in validate_lemmas(traj, md, d, const):
                status = "PASS" if r.ok else "FAIL"
                print(f"{r.name:>14}: {status}  min slack = {r.min_slack:.4g}  value/bound <= {r.tightness:.4g}",
                      file=out)
    if args.out:
        cols = {"t": traj.t, "norm_xs": traj.norm_xs, "norm_es": np.linalg.norm(traj.es, axis=1),
                "norm_xf2": traj.norm_xf2, "norm_xf1": traj.norm_xf1}
        for j in range(traj.y.shape[1]):
            cols[f"y{j + 1}"] = traj.y[:, j]
        for i in range(traj.u.shape[1]):
            cols[f"u{i + 1}"] = traj.u[:, i]
        write_csv(Path(args.out) / "trajectory.csv", cols)
        _write_field(Path(args.out) / "field.csv", traj, md.pairs)
        if args.plot:
            _write_plot(Path(args.out) / "plot_simulate.py", _PLOT_SIMULATE)
    return EXIT_OK


def _write_field(path, traj, pairs, nz=101, snapshots=11):
    z = np.linspace(0.0, 1.0, nz)
    every = max(1, (len(traj.t) - 1) // (snapshots - 1)) if len(traj.t) > 1 else 1
    vals = reconstruct_field(traj, pairs, z, every)
    ts = traj.t[::every]
    cols = {"z": np.tile(z, len(ts)), "t": np.repeat(ts, nz)}
    if vals.ndim == 2:
        cols["x1"] = vals.reshape(-1)
    else:
        for c in range(vals.shape[1]):
            cols[f"x{c + 1}"] = vals[:, c, :].reshape(-1)
    write_csv(path, cols)


def cmd_check_assumptions(cfg, args, out=sys.stdout) -> int:
    a = cfg.assumptions
    md = _modal(cfg, a["k_max"])
    d = make_design(md, a["n"], cfg.design["kappa"], cfg.design["nu"]) if a["n"] >= len(cfg.design["kappa"]) else None
    try:
        report = check_all(md, a["n"], a["k_max"], design=d, alpha=a["alpha"])
    except ValueError as exc:
        raise ConfigError("assumptions.k_max", str(exc)) from None
    text = report.to_text()
    out.write(text)
    if args.out:
        p = Path(args.out)
        p.mkdir(parents=True, exist_ok=True)
        (p / "assumptions.txt").write_text(text)
    return EXIT_OK


COMMANDS = {
    "spectrum": cmd_spectrum,
    "find-n": cmd_find_n,
    "simulate": cmd_simulate,
    "check-assumptions": cmd_check_assumptions,
}


def main(argv=None, out=None) -> int:
    out = sys.stdout if out is None else out
    args = build_parser().parse_args(argv)
    try:
        cfg = _load(args)
        return COMMANDS[args.command](cfg, args, out)
    except (ConfigError, TargetCollision, Uncontrollable, Unobservable) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NoneStabilizes:
        return EXIT_UNCERTIFIED
    except (ModalStabError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


# ---------------------------------------------------------------------------
# plot scripts


def _write_plot(path: Path, body: str):
    path.write_text(body)


_PLOT_FIND_N = '''"""rho_m against m for each slow order, and rho(m_max) against n."""
import csv
import glob
import re

import matplotlib.pyplot as plt


def read(path):
    with open(path) as fh:
        rows = list(csv.DictReader(fh))
    return {k: [float(r[k]) for r in rows] for k in rows[0]} if rows else {}


fig, (a, b) = plt.subplots(1, 2, figsize=(10, 4))
for path in sorted(glob.glob("rho_n*.csv"), key=lambda p: int(re.findall(r"\\d+", p)[-1])):
    d = read(path)
    a.plot(d["m"], d["rho"], label=path[5:-4])
a.set_xlabel("m")
a.set_ylabel("rho_m")
a.legend(fontsize="small")
s = read("find_n.csv")
b.plot(s["n"], s["rho_mmax"], "o-")
b.axhline(0.0, color="k", lw=0.5)
b.set_xlabel("n")
b.set_ylabel("rho(m_max)")
fig.tight_layout()
fig.savefig("find_n.png", dpi=150)
'''

_PLOT_SIMULATE = '''"""Norm histories and field snapshots of a simulated trajectory."""
import csv

import matplotlib.pyplot as plt


def read(path):
    with open(path) as fh:
        rows = list(csv.DictReader(fh))
    return {k: [float(r[k]) for r in rows] for k in rows[0]}


tr = read("trajectory.csv")
fig, (a, b) = plt.subplots(1, 2, figsize=(10, 4))
for key in ("norm_xs", "norm_es", "norm_xf2"):
    a.semilogy(tr["t"], tr[key], label=key)
a.set_xlabel("t")
a.legend()
f = read("field.csv")
for t in sorted(set(f["t"])):
    idx = [i for i, v in enumerate(f["t"]) if v == t]
    b.plot([f["z"][i] for i in idx], [f["x1"][i] for i in idx], lw=0.8)
b.set_xlabel("z")
b.set_ylabel("x1(z, t)")
fig.tight_layout()
fig.savefig("simulate.png", dpi=150)
'''


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
