"""``encctl`` command line: design | curves | simulate | attack | bench."""
import argparse
import json
import math
import os
import random
import sys

import numpy as np

from . import adversary as adv
from .bench import time_key_lengths
from .codec import measure_d_max, select_sensitivity
from .config import ConfigError, load_config
from .designer import DesignError, cheap_gain, design, find_k_star, find_T_star, pole_place
from .elgamal import keygen
from .encrypted_control import PlaintextOverflowError
from .numerics import NotPositiveDefiniteError
from .records import atomic_open, write_csv
from .security_curves import GNFS, CostModelParams, log_gnfs_time, log_sdt, sic_curve
from .simulator import (
    CryptoSetup,
    read_trajectory_csv,
    run_closed_loop,
    split_seed,
    write_cipherlog,
    write_trajectory_csv,
)

MODE_NAMES = {"plain": "plain", "static": "enc_static", "dynamic": "enc_dynamic"}


def parse_range(text, name):
    """``start:stop[:step]`` (inclusive) or a single integer."""
    try:
        parts = [int(float(v)) for v in text.split(":")]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"{name}: expected start:stop[:step], got {text!r}") from exc
    if len(parts) == 1:
        parts = [parts[0], parts[0], 1]
    elif len(parts) == 2:
        parts.append(1)
    start, stop, step = parts[:3]
    if len(parts) > 3 or step < 1 or stop < start:
        raise argparse.ArgumentTypeError(f"{name}: invalid range {text!r}")
    return list(range(start, stop + 1, step))


def parse_bits(text):
    try:
        bits = [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"--key-bits: expected comma-separated integers, got {text!r}") from exc
    if not bits or min(bits) < 8:
        raise argparse.ArgumentTypeError("--key-bits: every key size must be >= 8")
    return bits


def _gains(cfg):
    """``{name: F}`` for the cheap-control gain and, if configured, the pole-placed one."""
    A, B, _ = cfg.plant.arrays()
    gains = {"cheap": cheap_gain(A, B)}
    if cfg.design.poles is not None:
        gains["poles"] = pole_place(A, B, cfg.design.poles)
    return gains


def _selected_gain(cfg):
    A, B, _ = cfg.plant.arrays()
    if cfg.design.gain == "poles":
        return pole_place(A, B, cfg.design.poles)
    return cheap_gain(A, B)


def _out_dir(cfg, args):
    d = args.out_dir or cfg.output.directory
    os.makedirs(d, exist_ok=True)
    return d


def _write_json(path, obj):
    with atomic_open(path) as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_design(cfg, args):
    spec = cfg.design_spec()
    F = None
    kind = "cheap"
    if cfg.design.gain == "poles":
        F = _selected_gain(cfg)
        kind = "poles"
    result = design(spec, F=F, static_key=cfg.design.key == "static", gain_kind=kind)
    out = os.path.join(_out_dir(cfg, args), "design.json")
    _write_json(out, result.to_record())
    print(f"F* = {np.array2string(result.F_star, precision=8)}")
    print(f"T* = {result.T_star}")
    print(f"k* = {result.k_star} ({result.key_scheme} key)")
    print(f"spectral radius = {result.spectral_radius:.6g}")
    print(f"wrote {out}")
    return 0


def cmd_curves(cfg, args):
    d = cfg.design
    out = _out_dir(cfg, args)
    gains = _gains(cfg)
    plant = cfg.plant_model()
    Ts = args.gamma_range or list(range(1, 400001, 1000))
    ks = args.k_range or list(range(2, 1201))

    header = ["T"]
    cols = []
    t_stars = {}
    for name, F in gains.items():
        A = plant.closed_loop(F)
        E, gamma = sic_curve(A, Ts)
        header += [f"E_{name}", f"gamma_{name}"]
        cols += [E, gamma]
        t_stars[name] = find_T_star(A, d.gamma_c)
    header.append("gamma_c")
    rows = [[T] + [c[i] for c in cols] + [d.gamma_c] for i, T in enumerate(Ts)]
    write_csv(os.path.join(out, "sic_curves.csv"), header, rows)

    params = CostModelParams(GNFS.v, GNFS.d, d.upsilon_flops)
    header = ["k", "logL", "tau_static"] + [f"tau_dynamic_{name}" for name in gains] + ["tau_c"]
    rows = []
    for k in ks:
        taus = [_exp(log_sdt(0, k, params))] + [_exp(log_sdt(t_stars[n], k, params)) for n in gains]
        rows.append([k, log_gnfs_time(k, params)] + taus + [d.tau_c_seconds])
    write_csv(os.path.join(out, "sdt_curves.csv"), header, rows)

    summary = {"T_star": t_stars, "k_star_static": find_k_star(0, d.tau_c_seconds, d.upsilon_flops)}
    summary["k_star_dynamic"] = {n: find_k_star(t, d.tau_c_seconds, d.upsilon_flops) for n, t in t_stars.items()}
    if "json" in cfg.output.formats:
        _write_json(os.path.join(out, "curves_summary.json"), summary)
    for name, T in t_stars.items():
        print(f"{name}: gamma crosses gamma_c at T* = {T}, k* = {summary['k_star_dynamic'][name]}")
    print(f"static key: k* = {summary['k_star_static']}")
    return 0


def _exp(x):
    return math.inf if x > 709 else math.exp(x)


def _crypto_setup(cfg, F, key_bits, crypto_rng):
    pk, sk = keygen(key_bits, crypto_rng)
    if cfg.crypto.sensitivity == "auto":
        bound = max(float(np.max(np.abs(F))), cfg.crypto.state_bound)
        delta = select_sensitivity(bound, key_bits, measure_d_max(pk))
    else:
        delta = float(cfg.crypto.sensitivity)
    return CryptoSetup(pk, sk, delta, delta)


def cmd_simulate(cfg, args):
    out = _out_dir(cfg, args)
    seed = cfg.sim.seed
    mode = MODE_NAMES[cfg.crypto.mode]
    F = _selected_gain(cfg)
    crypto = None
    if mode != "plain":
        # keys come from a stream separate from the loop's own noise and crypto streams
        key_rng = random.Random(int(np.random.SeedSequence([seed, 1]).generate_state(1)[0]))
        crypto = _crypto_setup(cfg, F, args.key_bits or cfg.crypto.key_bits, key_rng)
    try:
        traj, log = run_closed_loop(cfg.plant_model(), F, cfg.sim.T, mode, seed, crypto)
    except PlaintextOverflowError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    path = os.path.join(out, "trajectory.csv")
    write_trajectory_csv(path, traj)
    print(f"wrote {path} ({traj.T} steps, mode {mode}, seed {seed})")
    if mode != "plain":
        lpath = os.path.join(out, "cipherlog.jsonl")
        write_cipherlog(lpath, log)
        print(f"wrote {lpath}")
    return 0


def _posterior_row(T, post, D, prior, L, n):
    N = n * n
    try:
        ci = adv.ci_half_widths(post)
        tv = adv.total_variance(post)
    except NotPositiveDefiniteError:
        ci, tv = np.full(N, math.nan), math.nan
    bound = adv.trajectory_variance_bound(D[: T + 1], prior.Lambda, L, n)
    return [T] + list(post.mu_hat) + list(ci) + [tv, bound]


def cmd_attack(cfg, args):
    if not args.trajectory:
        print("error: attack needs --trajectory", file=sys.stderr)
        return 2
    out = _out_dir(cfg, args)
    plant = cfg.plant_model()
    n = plant.n
    prior = cfg.prior_model()
    D = read_trajectory_csv(args.trajectory).states
    if D.shape[1] != n:
        print(f"error: trajectory has {D.shape[1]} state columns, plant has {n}", file=sys.stderr)
        return 2
    T_max = D.shape[0] - 1
    N = n * n
    header = (["T"] + [f"mu_{i + 1}" for i in range(N)] + [f"ci_{i + 1}" for i in range(N)]
              + ["total_variance", "trajectory_bound"])
    rows = []
    Ts = range(0, T_max + 1) if T_max == 0 else range(1, T_max + 1)
    for T, post in adv.posterior_path(prior, D, plant.L, Ts):
        rows.append(_posterior_row(T, post, D, prior, plant.L, n))
    if T_max > 0 and not rows:
        print(
            f"error: posterior precision singular for every T <= {T_max}; "
            f"a zero prior needs states spanning R^{n}, i.e. at least T = {n}",
            file=sys.stderr,
        )
        return 4
    if T_max > 0 and rows[0][0] > 1:
        print(f"note: posterior precision singular before T = {rows[0][0]}; earlier rows omitted")
    path = os.path.join(out, "posterior.csv")
    write_csv(path, header, rows)
    last = rows[-1]
    print(f"wrote {path}; T = {last[0]}, A_hat = {np.array2string(np.array(last[1:1 + N]).reshape(n, n, order='F'), precision=4)}")
    return 0


def cmd_bench(cfg, args):
    bits = args.key_bits or [cfg.crypto.key_bits]
    out = _out_dir(cfg, args) if cfg is not None else (args.out_dir or ".")
    os.makedirs(out, exist_ok=True)
    _, crypto_rng = split_seed(args.seed if args.seed is not None else 0)
    stats = time_key_lengths(bits, args.trials, crypto_rng)
    rows = [s.row() for s in stats]
    for s in stats:
        print(f"k={s.k} {s.op} mean={s.mean * 1e3:.4f} ms")
    path = os.path.join(out, "bench.csv")
    write_csv(path, ["k", "op", "min", "mean", "max", "std"], rows)
    print(f"wrote {path}")
    return 0


COMMANDS = {
    "design": cmd_design,
    "curves": cmd_curves,
    "simulate": cmd_simulate,
    "attack": cmd_attack,
    "bench": cmd_bench,
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="encctl",
        description=__doc__,
        epilog="Not provided: choosing F for a given key length, and a horizon fixed by "
        "life span over sampling period instead of by gamma_c.",
    )
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", help="YAML experiment config")
    parser.add_argument("--seed", type=int, help="overrides sim.seed")
    parser.add_argument("--out-dir", help="overrides output.directory")
    parser.add_argument("--gamma-range", type=lambda s: parse_range(s, "--gamma-range"),
                        help="T values for the identifying-complexity sweep, start:stop[:step]")
    parser.add_argument("--k-range", type=lambda s: parse_range(s, "--k-range"),
                        help="key lengths for the deciphering-time sweep, start:stop[:step]")
    parser.add_argument("--key-bits", type=parse_bits, help="comma-separated key lengths")
    parser.add_argument("--trajectory", help="trajectory CSV for attack")
    parser.add_argument("--trials", type=int, default=1000, help="bench trials per operation")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    cfg = None
    if args.config:
        try:
            cfg = load_config(args.config)
        except (ConfigError, OSError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
    elif args.command != "bench":
        print(f"error: {args.command} needs --config", file=sys.stderr)
        return 2
    if cfg is not None and args.seed is not None:
        cfg.sim.seed = args.seed
    if args.command != "bench" and isinstance(args.key_bits, list):
        if len(args.key_bits) != 1:
            print("error: give a single --key-bits value for this command", file=sys.stderr)
            return 2
        args.key_bits = args.key_bits[0]
    try:
        return COMMANDS[args.command](cfg, args)
    except (DesignError, NotPositiveDefiniteError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
