"""Command-line interface: leakage sweeps, table reproduction, protocol runs.

Exit codes: 0 success, 1 numeric mismatch or aborted run, 2 usage error.
Every command is deterministic: the same arguments and registry produce
byte-identical output files.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import os
import sys

from . import codes, leakage, protocols

CSV_HEADER = ["code", "n_p", "h_min", "f_max", "method", "gap"]
_DATA_DIR = os.path.join(os.path.dirname(__file__), "data")

_TABLE1_CODES = ["AAB4", "AAB4-H", "HN4", "LNCY4"]
_TABLE2_CODES = ["AAB11", "AAB7", "KT11", "KT13", "O11", "O13", "PR7", "R9"]


class CliError(Exception):
    """Usage-level failure; maps to exit code 2."""


def _load_codes(registry_path):
    by_name = {}
    for spec in codes.load_registry(registry_path):
        by_name[spec.name] = spec
    return by_name


def _resolve(name: str, by_name: dict):
    """A registry code, or base code of a hybrid scheme named '<base>-H'."""
    if name in by_name:
        return by_name[name], False
    if name.endswith("-H") and name[:-2] in by_name:
        base = by_name[name[:-2]]
        if base.family != "pi":
            raise CliError(f"hybrid scheme needs a permutation-invariant base: {name}")
        return base, True
    raise CliError(f"unknown code {name!r} (registry has: {', '.join(sorted(by_name))})")


def _fmt(x) -> str:
    return "" if x is None else format(x, ".12g")


def _stabilizer_row(code, n_p: int) -> dict:
    """Closed-form value, checked to be identical across same-size patterns."""
    vals = []
    for kept in itertools.combinations(range(code.n), n_p):
        e = codes.ErasurePattern(set(range(code.n)) - set(kept))
        vals.append(leakage.h_min_stabilizer(code, e))
    spread = max(r.h_min for r in vals) - min(r.h_min for r in vals)
    if spread > 1e-9:
        return {
            "code": code.name, "n_p": n_p, "h_min": None, "f_max": None,
            "method": "stabilizer-pattern-dependent", "gap": spread,
        }
    r = vals[0]
    return {
        "code": code.name, "n_p": n_p, "h_min": r.h_min, "f_max": r.f_max,
        "method": r.method, "gap": r.gap,
    }


def _leakage_row(display_name: str, code, hybrid: bool, n_p: int, method: str) -> dict:
    if method == "stabilizer":
        if code.family != "stabilizer" or hybrid:
            raise CliError(f"--method stabilizer needs a stabilizer code, not {display_name}")
        return _stabilizer_row(code, n_p)
    if method == "auto":
        method = "stabilizer" if code.family == "stabilizer" else "sdp"
        if method == "stabilizer":
            return _stabilizer_row(code, n_p)
    try:
        if hybrid:
            js = leakage.build_hybrid_state(code, code, code, n_p)
        elif method == "sdp-full" or code.family == "stabilizer":
            js = leakage.build_joint_state(code, n_p, basis="full")
        else:
            js = leakage.build_joint_state(code, n_p)
        r = leakage.q_corr_sdp(js)
    except leakage.SdpError as exc:
        print(f"warning: solver failed for {display_name} n_p={n_p}: {exc}", file=sys.stderr)
        return {
            "code": display_name, "n_p": n_p, "h_min": None, "f_max": None,
            "method": "failed:sdp", "gap": None,
        }
    return {
        "code": display_name, "n_p": n_p, "h_min": r.h_min, "f_max": r.f_max,
        "method": r.method, "gap": r.gap,
    }


def _sweep(names, by_name, method: str, shares: int | None) -> list:
    rows = []
    for name in sorted(names):
        code, hybrid = _resolve(name, by_name)
        n_ps = [shares] if shares is not None else range(code.n, -1, -1)
        for n_p in n_ps:
            if not 0 <= n_p <= code.n:
                raise CliError(f"--shares {n_p} outside [0, {code.n}] for {name}")
            rows.append(_leakage_row(name, code, hybrid, n_p, method))
    return rows


def _emit_rows(rows, fmt: str, out):
    if fmt == "json":
        text = json.dumps({"rows": rows}, indent=2) + "\n"
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in rows:
            w.writerow([r["code"], r["n_p"], _fmt(r["h_min"]), _fmt(r["f_max"]),
                        r["method"], _fmt(r["gap"])])
        text = buf.getvalue()
    if out:
        parent = os.path.dirname(os.path.abspath(out))
        os.makedirs(parent, exist_ok=True)
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_leakage(args) -> int:
    by_name = _load_codes(args.registry)
    names = sorted(by_name) if args.code == "all" else args.code.split(",")
    rows = _sweep(names, by_name, args.method, args.shares)
    _emit_rows(rows, args.format, args.out)
    return 0


def _load_expected(target: str) -> dict:
    path = os.path.join(_DATA_DIR, f"expected_{target}.csv")
    with open(path, newline="") as fh:
        rdr = csv.DictReader(fh)
        return {
            (row["code"], int(row["n_p"])): {
                k: float(v) for k, v in row.items() if k not in ("code", "n_p")
            }
            for row in rdr
        }


def cmd_reproduce(args) -> int:
    by_name = _load_codes(args.registry)
    names = _TABLE1_CODES if args.target in ("table1", "fig3") else _TABLE2_CODES
    rows = _sweep(names, by_name, "auto", None)
    out_path = os.path.join(args.out_dir, f"{args.target}.csv")
    _emit_rows(rows, "csv", out_path)

    expected = _load_expected(args.target)
    computed = {(r["code"], r["n_p"]): r for r in rows}
    failures = []
    worst = 0.0
    n_cells = 0
    for key, exp in sorted(expected.items()):
        if key not in computed:
            failures.append(f"{key[0]} n_p={key[1]}: missing computed row")
            continue
        got = computed[key]
        for col, want in exp.items():
            have = got[col]
            n_cells += 1
            if have is None:
                failures.append(f"{key[0]} n_p={key[1]} {col}: solver failure")
                continue
            diff = abs(have - want)
            worst = max(worst, diff)
            if diff > args.tol:
                failures.append(
                    f"{key[0]} n_p={key[1]} {col}: computed {have:+.4f} "
                    f"expected {want:+.2f} |diff|={diff:.4f}"
                )
    status = "PASS" if not failures else "FAIL"
    print(f"{args.target}: {n_cells} cells compared, max |diff| = {worst:.4f} "
          f"(tolerance {args.tol}) -> {status}  [{out_path}]")
    for line in failures:
        print("  " + line)
    return 0 if not failures else 1


def cmd_protocol(args) -> int:
    by_name = _load_codes(args.registry)
    code, hybrid = _resolve(args.code, by_name)
    if code.family != "pi":
        raise CliError("protocol runs need a permutation-invariant code")
    if args.participants:
        participants = sorted(int(x) for x in args.participants.split(","))
        if args.k is not None and args.k != len(participants):
            raise CliError("--k disagrees with --participants")
    else:
        k = args.k if args.k is not None else code.n
        participants = list(range(k))

    try:
        if args.kind == "hqass" or hybrid:
            res = protocols.protocol_hqass(code, code, code, participants,
                                           args.seed, backend=args.backend,
                                           retry_cap=args.retry_cap)
            summary = {
                "protocol": "hqass",
                "code": args.code,
                "participants": participants,
                "seed": args.seed,
                "fidelity": res.fidelity,
                "twirl": list(res.twirl),
                "decoded_key": [res.a_decoded, res.b_decoded],
                "key_ambiguous": res.a_decoded is None or res.b_decoded is None,
                "ghz": dict(res.transcript.ledger),
                "ghz_total": res.transcript.ghz_total,
                "retries": res.retries,
            }
            transcript = res.transcript
        else:
            res = protocols.protocol_qass(code, participants, args.seed,
                                          backend=args.backend,
                                          retry_cap=args.retry_cap)
            summary = {
                "protocol": "qass",
                "code": args.code,
                "participants": participants,
                "seed": args.seed,
                "fidelity": res.fidelity,
                "ghz": dict(res.transcript.ledger),
                "ghz_total": res.transcript.ghz_total,
                "retries": res.retries,
            }
            transcript = res.transcript
    except protocols.CollisionAbort as exc:
        print(f"aborted: {exc}", file=sys.stderr)
        return 1

    if args.transcript:
        transcript.write_jsonl(args.transcript)
    text = json.dumps(summary, indent=2) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_anonymity(args) -> int:
    corrupted = set(int(x) for x in args.corrupt.split(",")) if args.corrupt else set()
    exact = True if args.exact else None
    if exact is None:
        free_bits = {"anon": args.n - 1, "ae": args.n - 1, "anonq": 3 * args.n - 1}
        exact = free_bits[args.protocol] <= args.cap_bits
    try:
        rep = protocols.anonymity_check(
            args.protocol, args.n, corrupted, receiver=args.receiver,
            traceless=args.traceless, exact=exact, cap_bits=args.cap_bits,
            samples=args.samples, seed=args.seed,
        )
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    summary = {
        "protocol": rep.protocol,
        "n": rep.n,
        "corrupted": sorted(rep.corrupted),
        "senders": list(rep.senders),
        "traceless": rep.traceless,
        "exact": rep.exact,
        ("branches" if rep.exact else "samples"): rep.branches,
        "max_tv": rep.max_tv,
    }
    if rep.note:
        summary["note"] = rep.note
    text = json.dumps(summary, indent=2) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="piqss",
        description="Leakage analysis and anonymous secret-sharing simulation "
                    "for permutation-invariant and stabilizer codes.",
    )
    p.add_argument("--registry", default=None,
                   help="registry JSON path (default: $PIQSS_REGISTRY or bundled)")
    sub = p.add_subparsers(dest="command", required=True)

    lk = sub.add_parser("leakage", help="min-entropy sweep over codes and share counts")
    lk.add_argument("--code", required=True,
                    help="comma-separated code names, '<base>-H' for hybrid, or 'all'")
    lk.add_argument("--shares", type=int, default=None,
                    help="single share count (default: full sweep n..0)")
    lk.add_argument("--method", choices=["auto", "sdp", "sdp-full", "stabilizer"],
                    default="auto")
    lk.add_argument("--format", choices=["csv", "json"], default="csv")
    lk.add_argument("--out", default=None, help="output file (default: stdout)")
    lk.set_defaults(func=cmd_leakage)

    rp = sub.add_parser("reproduce", help="recompute a published table/figure and diff it")
    rp.add_argument("target", choices=["table1", "table2", "fig3", "fig4"])
    rp.add_argument("--out-dir", default=".", help="directory for the emitted CSV")
    rp.add_argument("--tol", type=float, default=0.01)
    rp.set_defaults(func=cmd_reproduce)

    pr = sub.add_parser("protocol", help="run a full secret-recovery protocol")
    pr.add_argument("kind", choices=["qass", "hqass"])
    pr.add_argument("--code", required=True)
    pr.add_argument("--k", type=int, default=None, help="number of participants")
    pr.add_argument("--participants", default=None,
                    help="comma-separated shareholder ids (default: 0..k-1)")
    pr.add_argument("--seed", type=int, default=0)
    pr.add_argument("--backend", choices=["two-amp", "statevector"], default="two-amp")
    pr.add_argument("--retry-cap", type=int, default=8)
    pr.add_argument("--transcript", default=None, help="write the JSONL transcript here")
    pr.add_argument("--out", default=None, help="summary file (default: stdout)")
    pr.set_defaults(func=cmd_protocol)

    an = sub.add_parser("anonymity", help="total-variation check of the adversary view")
    an.add_argument("--protocol", choices=["anon", "ae", "anonq"], required=True)
    an.add_argument("--n", type=int, required=True)
    an.add_argument("--corrupt", default="", help="comma-separated corrupted party ids")
    an.add_argument("--receiver", type=int, default=None)
    an.add_argument("--exact", action="store_true",
                    help="force exhaustive enumeration (error beyond the cap)")
    an.add_argument("--traceless", action="store_true",
                    help="include the post-hoc disclosure of all tapes")
    an.add_argument("--cap-bits", type=int, default=18)
    an.add_argument("--samples", type=int, default=20000)
    an.add_argument("--seed", type=int, default=0)
    an.add_argument("--out", default=None)
    an.set_defaults(func=cmd_anonymity)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except codes.RegistryError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
