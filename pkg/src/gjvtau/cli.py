"""Batch front end: compute tables, run the verification battery, emit artifacts.

All JSON artifacts are canonical (sorted keys, fixed separators), so identical
configurations produce byte-identical files; the CSVs mirror them for human
reading.  Exit codes: 0 all checks pass or are vacuous, 1 any verification
failure, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import csv
import itertools
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from .exactalg import TruncatedSeries, UPoly, UPOLY_ONE, UPOLY_ZERO, mono, mono_str
from .gjv import (
    assemble_tau_exponential,
    build_tbasis,
    exp_join_of_q1,
    change_of_variables,
    extract_G,
    extract_intersections_polyfit,
    extract_intersections_tbasis,
    hurwitz_grid,
    intersection_F,
    verify_lambda_square,
    verify_proposition,
    verify_second_derivative,
    verify_string,
    verify_tau_routes,
)
from .hirota import KP1, KP2, check_kp, check_linearized_kp, to_hirota_vars
from .hurwitz import (
    DCAP_HARD,
    HurwitzIndex,
    cutjoin_series,
    extract_hurwitz,
    h01_h02_closed_forms,
    hurwitz_number,
    load_hurwitz_cache,
    save_hurwitz_cache,
)
from .operators import Lambda, verify_commutators, verify_conjugations, verify_O_operators
from .report import FAIL, VACUOUS, CheckReport, boolean_report

INTERSECTION_GRIDS = ((0, 3), (0, 4), (1, 1), (1, 2))


@dataclass
class RunConfig:
    W: int = 8
    Mmax: int = 4
    K: int = 7
    dmax: int = 5
    c_list: tuple[UPoly, ...] = (UPOLY_ZERO, UPOLY_ONE)
    out: Path = Path(".")
    cache_path: Path | None = None
    kp2: bool = False
    inject_corruption: bool = False
    checks_filter: str | None = None


def _parse_c_list(text: str) -> tuple[UPoly, ...]:
    return tuple(UPoly.parse(part) for part in text.split("|") if part.strip())


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, sort_keys=True, separators=(",", ":")) + "\n")


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows([str(x) for x in row] for row in rows)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_hurwitz(cfg: RunConfig) -> int:
    table = load_hurwitz_cache(cfg.cache_path) if cfg.cache_path else {}
    series = cutjoin_series(cfg.dmax, cfg.Mmax)
    rows = []
    all_agree = True
    for n in range(1, cfg.dmax + 1):
        for parts in itertools.combinations_with_replacement(
            range(1, cfg.dmax + 1), n
        ):
            if sum(parts) > cfg.dmax:
                continue
            g = 0
            while 2 * g - 1 + n <= cfg.Mmax:
                idx = HurwitzIndex(g, parts)
                hb = hurwitz_number(idx, table, dcap=cfg.dmax)
                hs = extract_hurwitz(series, idx).h
                agree = hb == hs
                all_agree = all_agree and agree
                rows.append(
                    {
                        "g": g,
                        "parts": list(parts),
                        "m": idx.m,
                        "h_bruteforce": str(hb),
                        "h_series": str(hs),
                        "agree": agree,
                    }
                )
                g += 1
    rows.sort(key=lambda r: (sum(r["parts"]), len(r["parts"]), r["parts"], r["g"]))
    _write_json(cfg.out / "hurwitz.json", rows)
    _write_csv(
        cfg.out / "hurwitz.csv",
        ["g", "parts", "m", "h_bruteforce", "h_series", "agree"],
        [
            [r["g"], " ".join(map(str, r["parts"])), r["m"], r["h_bruteforce"],
             r["h_series"], r["agree"]]
            for r in rows
        ],
    )
    if cfg.cache_path:
        save_hurwitz_cache(cfg.cache_path, table)
    return 0 if all_agree else 1


def cmd_tbasis(cfg: RunConfig) -> int:
    basis = build_tbasis(min(cfg.K, cfg.W - 1), cfg.W)
    _write_json(
        cfg.out / "tbasis.json",
        [{"k": k, "series": t.to_json_obj()} for k, t in enumerate(basis)],
    )
    _write_csv(
        cfg.out / "tbasis.csv",
        ["k", "series"],
        [[k, str(t)] for k, t in enumerate(basis)],
    )
    return 0


def cmd_tau(cfg: RunConfig, route: str) -> int:
    c = cfg.c_list[0] if cfg.c_list else UPOLY_ZERO
    if route == "linear":
        tau = TruncatedSeries("t", cfg.W, {mono((1, 1)): UPOLY_ONE})
        if c:
            tau = tau + TruncatedSeries.const("t", cfg.W, c)
    elif route == "cutjoin":
        tau = to_hirota_vars(cutjoin_series(cfg.W, cfg.Mmax, c))
    else:
        tau = to_hirota_vars(assemble_tau_exponential(c, cfg.W))
    _write_json(cfg.out / f"tau_{route}.json", tau.to_json_obj())
    _write_csv(
        cfg.out / f"tau_{route}.csv",
        ["monomial", "coefficient"],
        [[mono_str(m, "t"), str(cf)] for m, cf in tau.canonical_items()],
    )
    return 0


def _two_route_records(cfg: RunConfig):
    """Both extraction routes; returns (merged records, mismatches)."""
    table = load_hurwitz_cache(cfg.cache_path) if cfg.cache_path else {}
    G = extract_G(cfg.W, cfg.W // 2 + 1)
    merged: dict = {}
    for rec in extract_intersections_tbasis(G):
        merged[rec.key()] = {"rec": rec, "routes": ["tbasis"]}
    mismatches = []
    for g, n in INTERSECTION_GRIDS:
        grid = hurwitz_grid(g, n, dmax=cfg.dmax + 1, table=table)
        for rec in extract_intersections_polyfit(g, n, grid, dmax=cfg.dmax + 1):
            got = merged.get(rec.key())
            if got is None:
                merged[rec.key()] = {"rec": rec, "routes": ["polyfit"]}
            else:
                got["routes"].append("polyfit")
                if got["rec"].value != rec.value:
                    mismatches.append(
                        {
                            "degrees": list(rec.degrees),
                            "j": rec.j,
                            "tbasis": str(got["rec"].value),
                            "polyfit": str(rec.value),
                        }
                    )
    if cfg.cache_path:
        save_hurwitz_cache(cfg.cache_path, table)
    return merged, mismatches


def cmd_intersections(cfg: RunConfig) -> int:
    merged, mismatches = _two_route_records(cfg)
    if mismatches:
        # a finding, not a crash: write the diff and signal failure
        _write_json(cfg.out / "intersections_diff.json", mismatches)
        for mm in mismatches:
            print(f"route disagreement at {mm}", file=sys.stderr)
        return 1
    records = sorted(
        merged.values(),
        key=lambda e: (e["rec"].g, e["rec"].n, e["rec"].j, e["rec"].degrees),
    )
    out = []
    for e in records:
        obj = e["rec"].to_json_obj()
        obj["routes"] = sorted(e["routes"])
        out.append(obj)
    _write_json(cfg.out / "intersections.json", out)
    _write_csv(
        cfg.out / "intersections.csv",
        ["g", "n", "j", "degrees", "value", "routes"],
        [
            [o["g"], len(o["degrees"]), o["j"],
             " ".join(map(str, o["degrees"])), o["value"], "+".join(o["routes"])]
            for o in out
        ],
    )
    return 0


# ---------------------------------------------------------------------------
# The verification battery
# ---------------------------------------------------------------------------

_T_TABLE = {
    0: "q1",
    1: "u*q1 + q2",
    2: "u^2*q1 + 3*u*q2 + 2*q3",
    3: "u^3*q1 + 7*u^2*q2 + 12*u*q3 + 6*q4",
}


def _check_tbasis_table(cfg: RunConfig) -> list[CheckReport]:
    basis = build_tbasis(3, max(cfg.W, 6))
    ok = all(str(basis[k]) == want for k, want in _T_TABLE.items())
    return [boolean_report("tbasis_table", ok, min(cfg.W, 6))]


def _check_commutators(cfg: RunConfig) -> list[CheckReport]:
    return [
        boolean_report(f"commutator_{name}", ok, cfg.W)
        for name, ok in verify_commutators(cfg.W).items()
    ]


def _check_conjugations(cfg: RunConfig) -> list[CheckReport]:
    return [
        boolean_report(f"conjugation_{name}", ok, cfg.W)
        for name, ok in verify_conjugations(cfg.W).items()
    ]


def _check_tau_routes(cfg: RunConfig) -> list[CheckReport]:
    G = extract_G(cfg.W, cfg.W + 1)
    out = []
    for i, c in enumerate(cfg.c_list):
        rep = verify_tau_routes(c, cfg.W, G=G)
        rep.name = f"tau_routes_c{i}"
        out.append(rep)
    return out


def _check_f_identities(cfg: RunConfig) -> list[CheckReport]:
    F = intersection_F(cfg.W)
    if cfg.inject_corruption:
        F = F + TruncatedSeries.monomial(
            "q", cfg.W, mono((2, 2)), UPoly.const(Fraction(1, 97))
        )
    return [verify_string(F), verify_lambda_square(F), verify_second_derivative(F)]


def _check_propositions(cfg: RunConfig) -> list[CheckReport]:
    out = []
    for n in range(1, 6):
        if cfg.W < n + 2:
            out.append(
                CheckReport(f"proposition_n{n}", VACUOUS, 0,
                            detail={"skipped": "W too small"})
            )
        else:
            out.append(verify_proposition(n, cfg.W))
    return out


def _check_o_operators(cfg: RunConfig) -> list[CheckReport]:
    out = []
    for n in range(1, 6):
        res = verify_O_operators(n, cfg.W)
        ok = res["action_vanishes_off_peak"] and res["penultimate_action"]
        out.append(boolean_report(f"o_operators_n{n}", ok, cfg.W, **res))
    return out


def _check_hurwitz_anchors(cfg: RunConfig) -> list[CheckReport]:
    W = min(cfg.W, 6)
    h01, h02 = h01_h02_closed_forms(W)
    l0 = Lambda(0)
    img1 = change_of_variables(l0.apply(l0.apply(h01)))
    img2 = change_of_variables(l0.apply(l0.apply(h02)))
    want1 = TruncatedSeries("q", W, {mono((1, 1)): UPoly.u(-1)})
    want2 = TruncatedSeries(
        "q", W, {mono((1, 1), (2, 1)): UPoly.u(-1), mono((1, 2)): UPOLY_ONE}
    )
    series = cutjoin_series(W, 4)
    layer0 = series.u_layer(0) == l0.apply(l0.apply(h01)).u_layer(0)
    agree = True
    for n in range(1, 5):
        for parts in itertools.combinations_with_replacement(range(1, 5), n):
            if sum(parts) > 4:
                continue
            for g in (0, 1):
                idx = HurwitzIndex(g, parts)
                if idx.m > 4:
                    continue
                if hurwitz_number(idx) != extract_hurwitz(series, idx).h:
                    agree = False
    return [
        boolean_report("hurwitz_anchor_images", img1 == want1 and img2 == want2, W),
        boolean_report("hurwitz_anchor_layer0", layer0, W),
        boolean_report("hurwitz_route_agreement", agree, W),
    ]


def _check_g_structure(cfg: RunConfig) -> list[CheckReport]:
    # certified layers of G must reduce to u^(2j+1) * T-monomials; the
    # reduction raises on any even or negative u-power it is asked to emit
    G = extract_G(cfg.W, cfg.W // 2 + 1)
    try:
        n = len(extract_intersections_tbasis(G))
        return [boolean_report("g_structure", True, cfg.W, records=n)]
    except ArithmeticError as e:
        return [boolean_report("g_structure", False, cfg.W, error=str(e))]


def _check_kp(cfg: RunConfig) -> list[CheckReport]:
    c = next((x for x in cfg.c_list if x), UPOLY_ONE)
    linear = TruncatedSeries("t", cfg.W, {mono((1, 1)): UPOLY_ONE})
    linear = linear + TruncatedSeries.const("t", cfg.W, c)
    cut = to_hirota_vars(cutjoin_series(cfg.W, cfg.Mmax, c))
    closed = to_hirota_vars(assemble_tau_exponential(c, cfg.W))
    polys = [KP1] + ([KP2] if cfg.kp2 else [])
    out = []
    for kp in polys:
        for label, tau in (("linear", linear), ("cutjoin", cut),
                           ("closedform", closed)):
            rep = check_kp(tau, kp, tau_label=label)
            rep.name = f"{kp.name}_{label}"
            out.append(rep)
    lin = check_linearized_kp(
        to_hirota_vars(exp_join_of_q1(max(cfg.W, 6))), tau_label="join_exponential"
    )
    out.append(lin)
    return out


def _check_intersection_routes(cfg: RunConfig) -> list[CheckReport]:
    _, mismatches = _two_route_records(cfg)
    return [
        boolean_report(
            "intersections_routes", not mismatches, cfg.W,
            mismatches=len(mismatches),
        )
    ]


def _battery(cfg: RunConfig):
    return [
        _check_tbasis_table,
        _check_commutators,
        _check_conjugations,
        _check_tau_routes,
        _check_f_identities,
        _check_propositions,
        _check_o_operators,
        _check_hurwitz_anchors,
        _check_g_structure,
        _check_kp,
        _check_intersection_routes,
    ]


def cmd_verify(cfg: RunConfig) -> int:
    def run(fn) -> list[CheckReport]:
        try:
            return fn(cfg)
        except Exception as e:  # a crashed check is a failed check
            return [CheckReport(fn.__name__, FAIL, 0, detail={"error": repr(e)})]

    with ThreadPoolExecutor(max_workers=4) as pool:
        groups = list(pool.map(run, _battery(cfg)))
    reports = sorted(
        (r for grp in groups for r in grp), key=lambda r: r.name
    )
    if cfg.checks_filter:
        keys = [k.strip() for k in cfg.checks_filter.split(",") if k.strip()]
        reports = [r for r in reports if any(k in r.name for k in keys)]
    _write_json(cfg.out / "verify.json", [r.to_json_obj() for r in reports])
    _write_csv(
        cfg.out / "verify.csv",
        ["check", "status", "reliable_weight", "first_failure"],
        [[r.name, r.status, r.reliable_weight, r.first_failure or ""] for r in reports],
    )
    for r in reports:
        extra = f"  [{r.first_failure}]" if r.status == FAIL and r.first_failure else ""
        print(f"{r.status.upper():8} {r.name}{extra}")
    failed = [r for r in reports if r.status == FAIL]
    print(f"{len(reports) - len(failed)}/{len(reports)} checks ok")
    return 1 if failed else 0


# ---------------------------------------------------------------------------
# Argument handling
# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--W", type=int, default=8, help="truncation weight")
    common.add_argument("--mmax", type=int, default=4,
                        help="series order in beta = u^2")
    common.add_argument("--dmax", type=int, default=5,
                        help="degree cap for brute-force counts")
    common.add_argument("--K", type=int, default=7,
                        help="largest basis index (clamped to W - 1)")
    common.add_argument("--c", default="0|1|u^-1+2",
                        help="pipe-separated c(u) choices")
    common.add_argument("--out", default=".", help="artifact directory")
    common.add_argument("--hurwitz-cache", default=None,
                        help="JSON cache path (env GJV_CACHE is the fallback)")
    common.add_argument("--kp2", action="store_true",
                        help="also run the next bilinear equation")
    common.add_argument("--checks", default=None, help=argparse.SUPPRESS)
    common.add_argument("--inject-corruption", action="store_true",
                        help=argparse.SUPPRESS)
    p = argparse.ArgumentParser(
        prog="gjvtau",
        description="exact verification runs for the tau-function package",
    )
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("hurwitz", parents=[common])
    sub.add_parser("intersections", parents=[common])
    sub.add_parser("tbasis", parents=[common])
    sub.add_parser("verify", parents=[common])
    tau = sub.add_parser("tau", parents=[common])
    tau.add_argument("--route", choices=("linear", "cutjoin", "closedform"),
                     default="closedform")
    return p


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.W < 4:
        parser.error("need --W >= 4")
    if not (0 < args.dmax <= DCAP_HARD):
        parser.error(f"--dmax must be in 1..{DCAP_HARD}")
    if args.mmax < 1 or args.K < 1:
        parser.error("all caps must be positive")
    try:
        c_list = _parse_c_list(args.c)
    except ValueError as e:
        parser.error(f"bad --c: {e}")
    cache = args.hurwitz_cache or os.environ.get("GJV_CACHE")
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        parser.error(f"cannot create output directory: {e}")
    cfg = RunConfig(
        W=args.W,
        Mmax=args.mmax,
        K=args.K,
        dmax=args.dmax,
        c_list=c_list,
        out=out,
        cache_path=Path(cache) if cache else None,
        kp2=args.kp2,
        inject_corruption=args.inject_corruption,
        checks_filter=args.checks,
    )
    try:
        if args.command == "hurwitz":
            return cmd_hurwitz(cfg)
        if args.command == "intersections":
            return cmd_intersections(cfg)
        if args.command == "tbasis":
            return cmd_tbasis(cfg)
        if args.command == "tau":
            return cmd_tau(cfg, args.route)
        return cmd_verify(cfg)
    except OSError as e:
        print(f"io error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
