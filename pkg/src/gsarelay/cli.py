"""
Command-line front end.

Exit codes: 0 success / feasible, 1 input error, 2 infeasible,
3 internal verification failure.  Node labels in all I/O are 1-based.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from fractions import Fraction

import numpy as np

from . import dof, gsa, sim, synthesis
from .errors import (
    DegenerateChannelError,
    GsaError,
    InfeasibleAntennasError,
    InfeasibleRequestError,
    InvalidInputError,
    NotRepresentableError,
)
from .matcore import DEFAULT_TOL
from .scenario import (
    Scenario,
    effective_antennas,
    instance_from_json,
    preset,
    sample_channels,
    y_channel_switch,
)

EXIT_OK, EXIT_INPUT, EXIT_INFEASIBLE, EXIT_VERIFY = 0, 1, 2, 3
NOISELESS_LIMIT = 10 * DEFAULT_TOL.verify_tol


class CliError(Exception):
    def __init__(self, message, code=EXIT_INPUT, payload=None):
        super().__init__(message)
        self.code = code
        self.payload = payload


# ---------------------------------------------------------------------------
# argument helpers
# ---------------------------------------------------------------------------

def _int_list(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _pairs(text):
    out = []
    for item in text.split(","):
        try:
            a, b = item.split("-")
            out.append((int(a), int(b)))
        except ValueError:
            raise argparse.ArgumentTypeError(f"pairs look like 1-2,3-4; got {text!r}")
    return out


def _snr_grid(text):
    try:
        lo, hi, step = (float(v) for v in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"SNR grid is lo:hi:step in dB, got {text!r}")
    if step <= 0 or hi < lo:
        raise argparse.ArgumentTypeError("SNR grid needs step > 0 and hi >= lo")
    count = int(np.floor((hi - lo) / step + 1e-9)) + 1
    return tuple(lo + k * step for k in range(count))


def _n_range(text):
    try:
        parts = [int(v) for v in text.split(":")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"N range is lo:hi, got {text!r}")
    if len(parts) == 1:
        parts = parts * 2
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"N range is lo:hi, got {text!r}")
    return parts[0], parts[1]


def _add_scenario_args(p):
    g = p.add_argument_group("scenario")
    g.add_argument("--scenario", help="scenario JSON file")
    g.add_argument("--preset", choices=["y", "star", "xrelay", "multipair", "cluster"])
    g.add_argument("--K", type=int)
    g.add_argument("--M", type=_int_list, help="antennas, one value or comma list")
    g.add_argument("--N", type=int, help="relay antennas (overrides the file)")
    g.add_argument("--D", help="switch matrix as JSON, user label order")
    g.add_argument("--pairs", type=_pairs, help="multipair matching, e.g. 1-2,3-4")
    g.add_argument("--L", type=int, help="cluster count for the cluster preset")
    g.add_argument("--extend", type=int, default=1, help="symbol extension factor")


def _load_instance(args):
    """User-ordered (M, N, D) from --scenario or the preset flags."""
    if args.scenario:
        try:
            with open(args.scenario) as fh:
                obj = json.load(fh)
        except OSError as exc:
            raise CliError(f"cannot read scenario: {exc}")
        except json.JSONDecodeError as exc:
            raise CliError(f"malformed scenario JSON: {exc}")
    elif args.preset:
        if args.M is None:
            raise CliError("--preset needs --M")
        params = {"M": args.M[0] if len(args.M) == 1 else args.M}
        if args.K is not None:
            params["K"] = args.K
        if args.pairs:
            params["pairs"] = args.pairs
        if args.L:
            params["L"] = args.L
        params["N"] = args.N if args.N is not None else 1
        obj = {"preset": args.preset, "params": params}
    elif args.M is not None:
        obj = {"M": args.M, "N": args.N if args.N is not None else 1}
        if args.D:
            try:
                obj["D"] = json.loads(args.D)
            except json.JSONDecodeError as exc:
                raise CliError(f"malformed --D: {exc}")
    else:
        raise CliError("give --scenario, --preset or --M")
    M, N, D = instance_from_json(obj)
    if args.N is not None:
        N = args.N
    if args.scenario and "seed" in obj and getattr(args, "seed", None) is None:
        args.seed = int(obj["seed"])
    return M, N, D


def _build(args):
    """Return (scenario, extension or None) honoring --extend."""
    M, N, D = _load_instance(args)
    if args.extend and args.extend > 1:
        if D is None:
            raise CliError("symbol extension needs a data switch matrix")
        ext = gsa.extend_symbols(Scenario.create(M, N), args.extend, D)
        return ext.scenario, ext
    if D is not None:
        D = np.array(D, dtype=object)
    return Scenario.create(M, N, D), None


def _emit(text, out=None):
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _dump(obj):
    return json.dumps(obj, indent=2) + "\n"


def _fmt_q(q: Fraction) -> str:
    return str(q)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def _report(scn, ext):
    rep = dof.analyze(scn)
    if ext is not None:
        rep.notes.append(
            f"{ext.factor}-symbol extension: antennas and streams scaled by {ext.factor}; "
            f"per-slot DoF is achieved_dof / {ext.factor}"
        )
    return rep


def cmd_analyze(args):
    scn, ext = _build(args)
    rep = _report(scn, ext)
    d = rep.to_dict()
    if args.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["field", "value"])
        for k, v in d.items():
            w.writerow([k, json.dumps(v)])
        _emit(buf.getvalue(), args.out)
    else:
        _emit(_dump(d), args.out)
    return EXIT_OK if rep.feasible_at_N else EXIT_INFEASIBLE


def cmd_synthesize(args):
    if args.M is None:
        raise CliError("synthesize needs --M")
    scn = Scenario.create(args.M, args.N or 1)
    eff = effective_antennas(scn)
    m_eff_user = scn.user_order(list(eff.M_eff))
    objective = "minimize-required-N" if args.objective == "min-n" else "any-valid"
    try:
        D = synthesis.synthesize(synthesis.SynthesisRequest(tuple(m_eff_user), objective))
    except InfeasibleRequestError as exc:
        raise CliError(str(exc), EXIT_INFEASIBLE)
    required, pair = dof.min_relay_antennas(D, Scenario.create(args.M, args.N or 1, D))
    if args.format == "csv":
        buf = io.StringIO()
        csv.writer(buf, lineterminator="\n").writerows(D.tolist())
        _emit(buf.getvalue(), args.out)
    else:
        full = Scenario.create(args.M, args.N or 1, D)
        _emit(_dump({
            "M": list(args.M),
            "M_eff": m_eff_user,
            "objective": objective,
            "D": D.tolist(),
            "min_N_required": required,
            "binding_pair": list(full.label_pair(pair)) if pair else None,
        }), args.out)
    return EXIT_OK


def _construct(scn, ext, seed):
    """Channels and a verified design, or CliError with the right exit code."""
    if ext is not None:
        channels = ext.sample_channels(seed)
    else:
        channels = sample_channels(scn, seed)
    try:
        dsg = gsa.design(scn, channels, slots=ext.factor if ext else 1)
    except InfeasibleAntennasError as exc:
        raise CliError(str(exc), EXIT_INFEASIBLE)
    except DegenerateChannelError as exc:
        raise CliError(str(exc), EXIT_VERIFY)
    return channels, dsg


def _gate(scn, ext):
    rep = _report(scn, ext)
    if not rep.feasible_at_N:
        raise CliError("scenario is infeasible", EXIT_INFEASIBLE, payload=rep.to_dict())
    return rep


def cmd_construct(args):
    scn, ext = _build(args)
    _gate(scn, ext)
    seed = args.seed if args.seed is not None else 0
    channels, dsg = _construct(scn, ext, seed)
    checks = gsa.verify_design(dsg, channels)
    checks["noiseless_error"] = sim.run_noiseless(dsg, channels, seed)
    bundle = gsa.design_to_json(dsg)
    bundle["seed"] = seed
    bundle["verification"] = checks
    _emit(_dump(bundle), args.out)
    if checks["alignment"] > DEFAULT_TOL.verify_tol or checks["noiseless_error"] > NOISELESS_LIMIT:
        return EXIT_VERIFY
    return EXIT_OK


def cmd_simulate(args):
    scn, ext = _build(args)
    _gate(scn, ext)
    seed = args.seed if args.seed is not None else 0
    channels, dsg = _construct(scn, ext, seed)
    err = sim.run_noiseless(dsg, channels, seed)
    if err > NOISELESS_LIMIT:
        raise CliError(f"noiseless recovery error {err:.3e} exceeds {NOISELESS_LIMIT:.0e}",
                       EXIT_VERIFY)
    try:
        cfg = sim.SimConfig(
            snr_grid_db=args.snr,
            trials=args.trials,
            seed=seed,
            symbol_model=args.symbols,
            normalize_relay_power=not args.no_relay_normalization,
        )
    except InvalidInputError as exc:
        raise CliError(str(exc))
    res = sim.run_noisy(dsg, channels, cfg)
    if args.format == "json":
        d = res.to_dict()
        d["noiseless_error"] = err
        _emit(_dump(d), args.out)
    else:
        _emit(res.to_csv(), args.out)
    return EXIT_OK


def cmd_sweep(args):
    if args.K is None or args.M is None or args.N_range is None:
        raise CliError("sweep needs --K, --M and --N-range")
    K, M = args.K, args.M[0]
    lo, hi = args.N_range
    if hi < lo:
        raise CliError("empty N range")
    if K < 3:
        raise CliError("sweep needs K >= 3")
    p3 = dof.theorem1_threshold(K, M)
    p4 = dof.prior_threshold(K, M)
    factor = 1 if M % (K - 1) == 0 else K - 1
    base_seed = args.seed if args.seed is not None else 0

    rows = []
    for N in range(lo, hi + 1):
        if factor == 1:
            scn, ext = preset("y", K=K, M=M, N=N), None
        else:
            ext = gsa.extend_symbols(Scenario.create([M] * K, N), factor, y_channel_switch(K, M))
            scn = ext.scenario
        rep = dof.analyze(scn)
        ok = 0
        for k in range(args.seeds):
            try:
                channels, dsg = _construct(scn, ext, base_seed + k)
            except CliError:
                continue
            if sim.run_noiseless(dsg, channels, base_seed + k) <= NOISELESS_LIMIT:
                ok += 1
        rows.append({
            "N": N,
            "feasible": rep.feasible_at_N,
            "construction_success_rate": ok / args.seeds,
            "extension": factor,
            "p3_threshold": _fmt_q(p3),
            "p4_threshold": _fmt_q(p4),
        })
    if args.format == "json":
        _emit(_dump(rows), args.out)
    else:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({**r, "feasible": int(r["feasible"]),
                        "construction_success_rate": f"{r['construction_success_rate']:.4g}"})
        _emit(buf.getvalue(), args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(
        prog="gsarelay",
        description="Generalized signal alignment for MIMO two-way relay channels.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="DoF bounds and relay antenna requirement")
    _add_scenario_args(p)
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.add_argument("--out")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("synthesize", help="build a data switch matrix from antenna counts")
    p.add_argument("--M", type=_int_list, required=True)
    p.add_argument("--N", type=int)
    p.add_argument("--objective", choices=["any", "min-n"], default="min-n")
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.add_argument("--out")
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("construct", help="build and verify A, V, U for one channel draw")
    _add_scenario_args(p)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("simulate", help="noiseless check then noisy SNR sweep")
    _add_scenario_args(p)
    p.add_argument("--snr", type=_snr_grid, default=_snr_grid("0:30:10"))
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int)
    p.add_argument("--symbols", default="gaussian", help="gaussian or qam<order>")
    p.add_argument("--no-relay-normalization", action="store_true")
    p.add_argument("--format", choices=["json", "csv"], default="csv")
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="empirical feasibility boundary for the Y channel")
    p.add_argument("--K", type=int)
    p.add_argument("--M", type=_int_list)
    p.add_argument("--N-range", dest="N_range", type=_n_range)
    p.add_argument("--seeds", type=int, default=20)
    p.add_argument("--seed", type=int)
    p.add_argument("--format", choices=["json", "csv"], default="csv")
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args)
    except CliError as exc:
        print(f"gsarelay: {exc}", file=sys.stderr)
        if exc.payload is not None:
            sys.stderr.write(_dump(exc.payload))
        return exc.code
    except (InvalidInputError, NotRepresentableError, InfeasibleRequestError) as exc:
        print(f"gsarelay: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except GsaError as exc:
        print(f"gsarelay: {exc}", file=sys.stderr)
        return EXIT_VERIFY


if __name__ == "__main__":
    sys.exit(main())
