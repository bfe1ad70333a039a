"""Command-line front end.

Subcommands: build-chain, simulate, kernels, bound, min-modes, sweep.
A JSON config describes the model, grids, temperature and seed; every
command writes a CSV (UTF-8, LF, comma-separated, header row, floats with
17 significant digits so they round-trip bit-exactly) plus a sidecar
`<out>.resolved.json` echoing the fully resolved configuration, which
reproduces the run when fed back as the config.  All randomness flows from
the config seed through numpy SeedSequences, so identical config+seed gives
byte-identical CSVs.  Sweep wall-times go to `<out>.timings.json`, which is
the one deliberately non-deterministic output.

Exit codes: 0 ok, 2 validation failure, 3 chain-construction breakdown,
4 unstable/complex-resolvent regime, 5 every sweep cell failed.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import bounds, dynamics, instances, kernels, solution, spectral
from .errors import (
    Breakdown,
    ChainBathError,
    ComplexResolvent,
    DegenerateResolvent,
    UnstableMode,
)

_DEFAULTS = {
    "Omega0": 1.0,
    "truncations": [1],
    "t_max": 10.0,
    "samples": 512,
    "kT": 1.0,
    "seed": 0,
    "initial_state": {"kind": "thermal"},
    "min_modes": {"times": [0.5, 1.0, 2.0], "tols": [1e-2, 1e-4, 1e-6]},
    "sweep": {"N": [4], "n": [1], "kT": [1.0]},
}


def fmt(x) -> str:
    """17-significant-digit decimal (round-trip exact for binary64)."""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.17g}"


def write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) if not isinstance(v, str) else v for v in row) + "\n")


def write_sidecar(path, resolved, diagnostics=None):
    payload = {"resolved_config": resolved}
    if diagnostics:
        payload["diagnostics"] = diagnostics
    with open(str(path) + ".resolved.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")


def resolve_config(path, overrides) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    if "resolved_config" in raw:  # a sidecar fed back in
        raw = raw["resolved_config"]
    cfg = json.loads(json.dumps(_DEFAULTS))
    cfg.update(raw)
    for key in ("seed", "samples"):
        if overrides.get(key) is not None:
            cfg[key] = overrides[key]
    if overrides.get("tmax") is not None:
        cfg["t_max"] = overrides["tmax"]
    if "model" not in cfg:
        raise ValueError("config must contain a 'model' section")
    return cfg


def build_model(cfg):
    """IOModel from an explicit or parametric model section."""
    m = cfg["model"]
    if "omega" in m:
        omega = np.asarray(m["omega"], dtype=float)
        c = np.asarray(m["c"], dtype=float)
    else:
        family = m.get("family", "linear")
        N = int(m["N"])
        if family == "linear":
            omega = instances.linear_spectrum(N, m["omega_min"], m["omega_max"])
            c = instances.coupling_profile(omega, m.get("c0", 0.5), m.get("power", 0.0))
        elif family == "geometric":
            omega = instances.geometric_spectrum(N, m["omega_min"], m["omega_max"])
            c = instances.coupling_profile(omega, m.get("c0", 0.5), m.get("power", 0.0))
        elif family == "random":
            rng = np.random.default_rng(np.random.SeedSequence(cfg["seed"]).spawn(1)[0])
            io, _, _ = instances.random_io_model(
                rng, N,
                omega_range=tuple(m.get("omega_range", (0.5, 3.0))),
                c_range=tuple(m.get("c_range", (0.1, 1.0))),
                Omega0_range=(cfg["Omega0"], cfg["Omega0"]),
            )
            return io
        else:
            raise ValueError(f"unknown model family {family!r}")
    return spectral.build_io_model(omega, c, cfg["Omega0"])


def build_initial_state(cfg, io) -> dynamics.InitialState:
    section = cfg["initial_state"]
    if "q0" in section:
        return dynamics.InitialState(
            q0=np.asarray(section["q0"], dtype=float),
            qdot0=np.asarray(section["qdot0"], dtype=float),
            x0=float(section.get("x0", 0.0)),
            xdot0=float(section.get("xdot0", 0.0)),
        )
    kind = section.get("kind", "thermal")
    sub = np.random.SeedSequence(cfg["seed"]).spawn(2)[1]
    if kind == "thermal":
        return bounds.sample_thermal(io, bounds.ThermalState(cfg["kT"]), sub)
    if kind == "random":
        rng = np.random.default_rng(sub)
        return instances.random_initial_state(rng, io.N, scale=section.get("scale", 1.0))
    raise ValueError(f"unknown initial_state kind {kind!r}")


def time_grid(cfg) -> np.ndarray:
    samples = int(cfg["samples"])
    if samples < 2:
        raise ValueError("samples must be >= 2")
    if cfg["t_max"] <= 0:
        raise ValueError("t_max must be positive")
    return np.linspace(0.0, float(cfg["t_max"]), samples)


def cmd_build_chain(cfg, out) -> int:
    io = build_model(cfg)
    chain, omap = spectral.chain_from_io(io)
    report = spectral.verify_equivalence(io, chain, omap)
    rows = []
    for j in range(chain.N):
        D_j = chain.D[j] if j < chain.N - 1 else 0.0
        rows.append((j + 1, chain.Omega[j], D_j))
    write_csv(out, ["j", "Omega_j", "D_j"], rows)
    diag = {
        "D0": chain.D0,
        "orthogonality_residual": report.orthogonality,
        "tridiagonal_residual": report.tridiagonal_residual,
        "eigenvalue_mismatch": report.eigenvalue_mismatch,
        "passed": report.passed,
    }
    write_sidecar(out, cfg, diag)
    print(f"chain written to {out}: N={chain.N}, D0={fmt(chain.D0)}, "
          f"residuals (orth {report.orthogonality:.3e}, tri {report.tridiagonal_residual:.3e}, "
          f"eig {report.eigenvalue_mismatch:.3e}), passed={report.passed}")
    return 0


def cmd_simulate(cfg, out) -> int:
    io = build_model(cfg)
    chain, omap = spectral.chain_from_io(io)
    init = build_initial_state(cfg, io)
    times = time_grid(cfg)
    full = dynamics.evolve_truncated(chain, chain.N, init, omap, times)
    params = solution.mu_delta(chain.Omega0, chain.Omega[0], chain.D0)
    F = solution.source_term(chain, chain.N, full, init, omap)
    x_vol = solution.solve_volterra_closed(params, F, times)

    ns = [int(n) for n in cfg["truncations"]]
    cols = {}
    for n in ns:
        cols[f"x_n{n}"] = dynamics.evolve_truncated(chain, n, init, omap, times).x
    header = ["t", "x_full"] + list(cols) + ["x_volterra", "abs_err_volterra"]
    err = np.abs(full.x - x_vol)
    rows = [
        (times[m], full.x[m], *[cols[k][m] for k in cols], x_vol[m], err[m])
        for m in range(len(times))
    ]
    write_csv(out, header, rows)
    write_sidecar(out, cfg, {"max_volterra_error": float(err.max())})
    print(f"simulation written to {out}: max |x_full - x_volterra| = {err.max():.3e}")
    return 0


def cmd_kernels(cfg, out) -> int:
    io = build_model(cfg)
    chain, _ = spectral.chain_from_io(io)
    freqs = np.concatenate([[chain.Omega0], chain.Omega])
    orders = sorted({int(n) for n in cfg["truncations"]})
    times = time_grid(cfg)
    series = {}
    for i in orders:
        if not 0 <= i <= chain.N:
            raise ValueError(f"kernel order {i} outside [0, {chain.N}]")
        rep = kernels.kernel_closed_form(freqs[: i + 1])
        series[i] = kernels.kernel_eval(rep, times)
    header = ["tau"] + [f"K_{i}" for i in orders]
    rows = [(times[m], *[series[i][m] for i in orders]) for m in range(len(times))]
    write_csv(out, header, rows)
    write_sidecar(out, cfg)
    print(f"kernel table written to {out}: orders {orders}")
    return 0


def cmd_bound(cfg, out) -> int:
    io = build_model(cfg)
    chain, omap = spectral.chain_from_io(io)
    init = build_initial_state(cfg, io)
    th = bounds.ThermalState(cfg["kT"])
    times = time_grid(cfg)
    full = dynamics.evolve_truncated(chain, chain.N, init, omap, times)

    header = ["t"]
    blocks = []
    max_ratio = 0.0
    for n in (int(n) for n in cfg["truncations"]):
        trunc = dynamics.evolve_truncated(chain, n, init, omap, times)
        eps = bounds.epsilon_empirical(full, trunc)
        b_det = bounds.bound_deterministic(io, chain, n, times, init)
        b_th = bounds.bound_thermal(io, chain, n, times, th)
        with np.errstate(invalid="ignore", divide="ignore"):
            ratio = np.where(b_det > 0, eps / np.where(b_det > 0, b_det, 1.0), 0.0)
        max_ratio = max(max_ratio, float(ratio.max()))
        header += [f"eps_n{n}", f"bound_det_n{n}", f"bound_thermal_n{n}", f"ratio_n{n}"]
        blocks.append((eps, b_det, b_th, ratio))
    rows = []
    for m in range(len(times)):
        row = [times[m]]
        for eps, b_det, b_th, ratio in blocks:
            row += [eps[m], b_det[m], b_th[m], ratio[m]]
        rows.append(tuple(row))
    write_csv(out, header, rows)
    write_sidecar(out, cfg, {"max_ratio": max_ratio})
    print(f"error report written to {out}: max eps/bound ratio = {max_ratio:.6g}")
    return 0


def cmd_min_modes(cfg, out) -> int:
    io = build_model(cfg)
    chain, _ = spectral.chain_from_io(io)
    th = bounds.ThermalState(cfg["kT"])
    ts = [float(t) for t in cfg["min_modes"]["times"]]
    tols = [float(v) for v in cfg["min_modes"]["tols"]]
    table = [[bounds.min_modes(io, chain, t, tol, th) for tol in tols] for t in ts]

    header = ["t"] + [f"n_tol_{fmt(tol)}" for tol in tols]
    rows = [(t, *[cell.n for cell in line]) for t, line in zip(ts, table)]
    write_csv(out, header, rows)

    monotone_t = all(
        table[i][j].n <= table[i + 1][j].n
        for j in range(len(tols)) for i in range(len(ts) - 1)
    ) if sorted(ts) == ts else True
    monotone_tol = all(
        table[i][j].n >= table[i][j + 1].n
        for i in range(len(ts)) for j in range(len(tols) - 1)
    ) if sorted(tols) == tols else True
    uncertified = sum(not cell.certified for line in table for cell in line)
    write_sidecar(out, cfg, {
        "monotone_in_t": monotone_t,
        "monotone_in_tol": monotone_tol,
        "uncertified_cells": uncertified,
    })
    flag = "" if (monotone_t and monotone_tol) else "  [NON-MONOTONE]"
    print(f"min-modes table written to {out}: {len(ts)}x{len(tols)} cells, "
          f"{uncertified} uncertified{flag}")
    return 0


def _sweep_cell(args):
    N, n, kT, seed_seq, cfg = args
    t0 = time.perf_counter()
    try:
        rng = np.random.default_rng(seed_seq)
        io, chain, omap = instances.random_io_model(rng, N)
        init = bounds.sample_thermal(io, bounds.ThermalState(kT), seed_seq.spawn(1)[0])
        wmax = float(io.omega.max())
        times = np.linspace(0.0, 3.0 / wmax, int(cfg["samples"]))
        full = dynamics.evolve_truncated(chain, chain.N, init, omap, times)
        trunc = dynamics.evolve_truncated(chain, min(n, chain.N), init, omap, times)
        eps = bounds.epsilon_empirical(full, trunc)
        b = bounds.bound_deterministic(io, chain, min(n, chain.N), times, init)
        with np.errstate(invalid="ignore", divide="ignore"):
            ratio = float(np.max(np.where(b > 0, eps / np.where(b > 0, b, 1.0), 0.0)))
        return (N, n, kT, float(eps.max()), ratio, "ok", ""), time.perf_counter() - t0
    except ChainBathError as exc:
        return (N, n, kT, np.nan, np.nan, "error", type(exc).__name__), time.perf_counter() - t0


def cmd_sweep(cfg, out) -> int:
    sw = cfg["sweep"]
    cells = sorted(
        (int(N), int(n), float(kT))
        for N in sw["N"] for n in sw["n"] for kT in sw["kT"]
    )
    seqs = np.random.SeedSequence(cfg["seed"]).spawn(len(cells))
    jobs = [(N, n, kT, seq, cfg) for (N, n, kT), seq in zip(cells, seqs)]
    with ThreadPoolExecutor(max_workers=4) as pool:
        results = list(pool.map(_sweep_cell, jobs))

    rows = [r for r, _ in results]
    write_csv(out, ["N", "n", "kT", "max_eps", "max_ratio", "status", "error"], rows)
    timings = {f"N{r[0]}_n{r[1]}_kT{fmt(r[2])}": dt for r, dt in results}
    with open(str(out) + ".timings.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(timings, fh, sort_keys=True, indent=2)
        fh.write("\n")
    write_sidecar(out, cfg, {"cells": len(rows),
                             "failed": sum(r[5] != "ok" for r in rows)})
    ok = sum(r[5] == "ok" for r in rows)
    print(f"sweep written to {out}: {ok}/{len(rows)} cells succeeded")
    return 0 if ok > 0 else 5


_COMMANDS = {
    "build-chain": cmd_build_chain,
    "simulate": cmd_simulate,
    "kernels": cmd_kernels,
    "bound": cmd_bound,
    "min-modes": cmd_min_modes,
    "sweep": cmd_sweep,
}


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chainbath",
        description="Bath-to-chain mapping, exact reduced dynamics, and "
                    "certified truncation bounds.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON run configuration")
        p.add_argument("--out", required=True, help="output CSV path")
        p.add_argument("--seed", type=int, default=None, help="override config seed")
        p.add_argument("--samples", type=int, default=None, help="override sample count")
        p.add_argument("--tmax", type=float, default=None, help="override t_max")
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        cfg = resolve_config(args.config, vars(args))
        return _COMMANDS[args.command](cfg, args.out)
    except Breakdown as exc:
        print(f"error: chain construction breakdown: {exc}", file=sys.stderr)
        return 3
    except (UnstableMode, ComplexResolvent, DegenerateResolvent) as exc:
        print(f"error: {type(exc).__name__}: {exc} "
              "(requires positive-definite dynamics and D0 < Omega0*Omega1)",
              file=sys.stderr)
        return 4
    except (ChainBathError, ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"error: invalid configuration or input: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
