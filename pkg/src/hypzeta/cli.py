"""Command line: ``hypzeta {zeta,count,search,bench,precision}``.

Exit codes: 0 success, 2 singular or malformed input, 3 precision
escalation exhausted.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .cohomology import Hypersurface, SingularInput, check_smooth, compute_basis
from .frobenius import choose_precision
from .homog import HomogPoly, enumerate_monomials, format_poly, homog_dim
from .linalg import choose_kernel
from .oracle import count_points, fedder_is_fsplit
from .pep import parse_backing
from .reduction import POLICIES
from .zeta import EscalationExhausted, compute_p_rank, compute_zeta

EXIT_SINGULAR = 2
EXIT_PRECISION = 3


class InputError(ValueError):
    pass


@dataclass
class RunConfig:
    policy: str = "p-chunk"
    pep: str = "lazy"
    threads: int = 1
    seed: int = 0
    nm_override: dict = field(default_factory=dict)
    budget: int = 2 * 10**6
    out: str | None = None
    max_escalations: int = 3

    def validate(self):
        if self.policy not in POLICIES:
            raise InputError(f"unknown policy {self.policy!r}")
        parse_backing(self.pep)
        if self.threads < 1:
            raise InputError("--threads must be positive")
        if self.budget < 0:
            raise InputError("--budget must be nonnegative")
        if self.max_escalations < 0:
            raise InputError("--max-escalations must be nonnegative")
        return self

    def overrides(self):
        return {"N": self.nm_override} if self.nm_override else None


def parse_nm(text: str | None):
    """'9' -> 9 for every m; '9,10,10' -> {1: 9, 2: 10, 3: 10}; 'm=N,...' also accepted."""
    if not text:
        return {}
    text = text.strip()
    if text.isdigit():
        return int(text)
    out = {}
    for i, part in enumerate(text.split(","), start=1):
        if "=" in part:
            m, v = part.split("=")
            out[int(m)] = int(v)
        else:
            out[i] = int(part)
    return out


# ------------------------------------------------------------ input


def hypersurface_from_json(doc: dict) -> Hypersurface:
    try:
        p, n = int(doc["p"]), int(doc["n"])
    except (KeyError, TypeError, ValueError) as err:
        raise InputError("input needs integer fields p and n") from err
    if "terms" in doc:
        terms = [(int(t["c"]), tuple(int(x) for x in t["e"])) for t in doc["terms"]]
        if any(len(e) != n + 1 for _, e in terms):
            raise InputError("every exponent vector needs n+1 entries")
        degs = {sum(e) for _, e in terms}
        if len(degs) != 1:
            raise InputError("polynomial is not homogeneous")
        d = degs.pop()
        if "d" in doc and int(doc["d"]) != d:
            raise InputError("declared d does not match the terms")
        return Hypersurface(p=p, n=n, d=d, f=HomogPoly.from_terms(n, terms, p, degree=d))
    if "f" in doc:
        return Hypersurface.from_text(p, n, doc["f"])
    raise InputError("input needs 'terms' or 'f'")


def load_input(args) -> Hypersurface:
    if getattr(args, "input", None):
        with open(args.input) as fh:
            return hypersurface_from_json(json.load(fh))
    if args.poly is None or args.p is None or args.n is None:
        raise InputError("give an input JSON file or --poly with --p and --n")
    return Hypersurface.from_text(args.p, args.n, args.poly)


def emit(doc, out: str | None, stream=None):
    text = json.dumps(doc, sort_keys=True)
    if out:
        with open(out, "a") as fh:
            fh.write(text + "\n")
    else:
        print(text, file=stream or sys.stdout, flush=True)


def config_from(args) -> RunConfig:
    return RunConfig(
        policy=args.policy, pep=args.pep, threads=args.threads, seed=args.seed,
        nm_override=parse_nm(args.nm_override), budget=args.budget, out=args.out,
        max_escalations=args.max_escalations,
    ).validate()


# ------------------------------------------------------------ commands


def _require_smooth(X: Hypersurface):
    if not check_smooth(X):
        raise SingularInput("hypersurface is singular over the algebraic closure of F_p")


def cmd_zeta(args) -> int:
    cfg = config_from(args)
    X = load_input(args)
    _require_smooth(X)
    if args.p_rank_only:
        doc = {"p": X.p, "n": X.n, "d": X.d, "f": format_poly(X.f), **compute_p_rank(X, cfg.policy, cfg.pep).as_dict()}
        emit(doc, cfg.out)
        return 0
    res = compute_zeta(
        X, policy=cfg.policy, backing=cfg.pep, overrides=cfg.overrides(),
        max_escalations=cfg.max_escalations, count_budget=cfg.budget, verify_counts=cfg.budget > 0,
    )
    emit(res.as_dict(), cfg.out)
    return 0


def cmd_count(args) -> int:
    X = load_input(args)
    budget = args.budget if args.budget else 10**9
    emit({"p": X.p, "n": X.n, "d": X.d, "r": args.r, "count": count_points(X, args.r, budget=budget)}, args.out)
    return 0


FAMILIES = {
    "cubic-threefold": (4, 3),
    "cubic-fourfold": (5, 3),
}


def parse_family(text: str):
    """'curve:4' -> (2, 4), 'surface:4' -> (3, 4), 'cubic-threefold' -> (4, 3)."""
    if text in FAMILIES:
        return FAMILIES[text]
    kind, _, deg = text.partition(":")
    if kind in ("curve", "plane-curve") and deg.isdigit():
        return 2, int(deg)
    if kind == "surface" and deg.isdigit():
        return 3, int(deg)
    raise InputError(f"unknown family {text!r}")


def fermat(p: int, n: int, d: int) -> HomogPoly:
    return HomogPoly.from_terms(n, [(1, tuple(d if j == i else 0 for j in range(n + 1))) for i in range(n + 1)], p)


def candidates(mode: str, p: int, n: int, d: int, count: int, seed: int, base: HomogPoly | None = None, add: int = 1):
    """Deterministic candidate polynomials from the seed."""
    rng = np.random.default_rng(seed)
    idx = enumerate_monomials(n, d)
    base = base if base is not None else fermat(p, n, d)
    for _ in range(count):
        if mode == "random":
            coeffs = rng.integers(0, p, len(idx))
        elif mode == "deform":
            coeffs = np.asarray(base.coeffs, dtype=np.int64).copy()
            if add:
                pick = rng.choice(len(idx), size=min(add, len(idx)), replace=False)
                coeffs[pick] = (coeffs[pick] + rng.integers(1, p, len(pick))) % p
        else:
            raise InputError(f"unknown search mode {mode!r}")
        yield HomogPoly(n, d, coeffs, p)


def _search_one(i, f, p, n, d, cfg: RunConfig, skip_fsplit: bool, p_rank_only: bool):
    rec = {"index": i, "p": p, "n": n, "d": d, "f": format_poly(f)}
    try:
        X = Hypersurface(p=p, n=n, d=d, f=f)
    except ValueError as err:
        return {**rec, "status": "invalid", "reason": str(err)}
    if not check_smooth(X):
        return {**rec, "status": "singular"}
    fs = fedder_is_fsplit(X.f, p)
    rec["fsplit"] = fs
    if skip_fsplit and fs:
        return {**rec, "status": "skipped-fsplit"}
    try:
        if p_rank_only:
            return {**rec, "status": "ok", **compute_p_rank(X, cfg.policy, cfg.pep).as_dict()}
        res = compute_zeta(
            X, policy=cfg.policy, backing=cfg.pep, overrides=cfg.overrides(),
            max_escalations=cfg.max_escalations, count_budget=cfg.budget,
        )
        return {**rec, "status": "ok", **res.as_dict()}
    except (EscalationExhausted, SingularInput, ArithmeticError) as err:
        return {**rec, "status": "failed", "reason": f"{type(err).__name__}: {err}"}


def cmd_search(args) -> int:
    cfg = config_from(args)
    n, d = parse_family(args.family)
    base = Hypersurface.from_text(args.p, n, args.base).f if args.base else None
    cands = list(candidates(args.mode, args.p, n, d, args.count, cfg.seed, base, args.add))
    work = [(i, f, args.p, n, d, cfg, args.skip_fsplit, args.p_rank_only) for i, f in enumerate(cands)]
    if cfg.threads > 1:
        with ThreadPoolExecutor(cfg.threads) as pool:
            for rec in pool.map(lambda w: _search_one(*w), work):
                emit(rec, cfg.out)
    else:
        for w in work:
            emit(_search_one(*w), cfg.out)
    return 0


def cmd_bench(args) -> int:
    cfg = config_from(args)
    policies = args.policies.split(",")
    peps = args.peps.split(",")
    for pol in policies:
        if pol not in POLICIES:
            raise InputError(f"unknown policy {pol!r}")
    for b in peps:
        parse_backing(b)
    rows = []
    for path in args.inputs:
        with open(path) as fh:
            X = hypersurface_from_json(json.load(fh))
        _require_smooth(X)
        for pol in policies:
            for b in peps:
                res = compute_zeta(X, policy=pol, backing=b, overrides=cfg.overrides(), count_budget=cfg.budget)
                c = res.frob.costs
                rows.append({
                    "input": path, "policy": pol, "pep": b, "wall_time": round(res.wall_time, 4),
                    "matvecs": c.matvecs, "startups": c.startups, "combines": c.combines,
                    "pep_misses": res.frob.pep_stats.get("misses", 0), "Q": json.dumps(res.zeta.Q),
                })
    if args.format == "json":
        text = json.dumps(rows, indent=1)
    else:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=list(rows[0]) if rows else ["input"])
        w.writeheader()
        w.writerows(rows)
        text = buf.getvalue()
    if cfg.out:
        with open(cfg.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    return 0


def generic_hodge(p: int, n: int, d: int):
    """Hodge numbers h_1..h_n from a smooth diagonal member (any smooth member has the same)."""
    for coeffs in ([1] * (n + 1), list(range(1, n + 2))):
        f = HomogPoly.from_terms(n, [(c, tuple(d if j == i else 0 for j in range(n + 1))) for i, c in enumerate(coeffs)], p)
        X = Hypersurface(p=p, n=n, d=d, f=f)
        if check_smooth(X):
            return compute_basis(X).hodge_numbers
    raise InputError("no smooth diagonal hypersurface for these (p, d)")


def cmd_precision(args) -> int:
    p, n, d = args.p, args.n, args.d
    if p <= n:
        raise InputError("need p > n")
    hodge = generic_hodge(p, n, d)
    nm = parse_nm(args.nm_override)
    plan = choose_precision(p, n, d, hodge, {"N": nm} if nm else None)
    side = homog_dim(n, d * n - n)
    kernel = choose_kernel(plan.modulus, side)
    doc = {
        "p": p, "n": n, "d": d, "hodge": hodge, **plan.as_dict(),
        "modulus": f"{p}^{plan.M}", "modulus_bits": plan.modulus.bit_length(),
        "operator_side": side, "kernel": kernel,
        "needs_split_kernel": kernel != "striped",
    }
    emit(doc, args.out)
    return 0


# ------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hypzeta", description="Zeta functions of hypersurfaces over F_p by controlled reduction.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(sp, with_input=True):
        if with_input:
            sp.add_argument("input", nargs="?", help="JSON file {p, n, d, terms: [{c, e}]}")
            sp.add_argument("--poly", help="polynomial text, e.g. 'x0^3+x1^3+x2^3'")
            sp.add_argument("--p", type=int)
            sp.add_argument("--n", type=int)
        sp.add_argument("--policy", default="p-chunk", choices=POLICIES)
        sp.add_argument("--pep", default="lazy", help="eager | lazy | lru:N | lfuda:N")
        sp.add_argument("--threads", type=int, default=1)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--nm-override", help="series orders: 'N' or 'N1,N2,...' or 'm=N,...'")
        sp.add_argument("--budget", type=int, default=2 * 10**6, help="point-count budget for verification (0 disables)")
        sp.add_argument("--out", help="append JSON output here instead of stdout")
        sp.add_argument("--max-escalations", type=int, default=3, help="precision retries after a failed check")

    z = sub.add_parser("zeta", help="compute Q(T), Z(X,T) and Newton polygon invariants")
    common(z)
    z.add_argument("--p-rank-only", action="store_true", help="only the lowest-slope segment, at precision 1")
    z.set_defaults(func=cmd_zeta)

    c = sub.add_parser("count", help="brute-force point count over F_{p^r}")
    c.add_argument("input", nargs="?")
    c.add_argument("--poly")
    c.add_argument("--p", type=int)
    c.add_argument("--n", type=int)
    c.add_argument("--r", type=int, default=1)
    c.add_argument("--budget", type=int, default=10**9)
    c.add_argument("--out")
    c.set_defaults(func=cmd_count)

    s = sub.add_parser("search", help="random or deformation search, one JSON record per candidate")
    common(s, with_input=False)
    s.add_argument("--mode", choices=("random", "deform"), default="random")
    s.add_argument("--family", required=True, help="curve:D | surface:D | cubic-threefold | cubic-fourfold")
    s.add_argument("--p", type=int, required=True)
    s.add_argument("--count", type=int, default=10)
    s.add_argument("--base", help="base polynomial for deform mode (default: diagonal)")
    s.add_argument("--add", type=int, default=1, help="monomials added per deformation")
    s.add_argument("--skip-fsplit", action="store_true", help="skip candidates that are F-split (Fedder)")
    s.add_argument("--p-rank-only", action="store_true")
    s.set_defaults(func=cmd_search)

    b = sub.add_parser("bench", help="time every (input, policy, pep) cell")
    common(b, with_input=False)
    b.add_argument("inputs", nargs="+")
    b.add_argument("--policies", default=",".join(POLICIES))
    b.add_argument("--peps", default="lazy")
    b.add_argument("--format", choices=("csv", "json"), default="csv")
    b.set_defaults(func=cmd_bench)

    pr = sub.add_parser("precision", help="print the precision plan")
    pr.add_argument("--p", type=int, required=True)
    pr.add_argument("--n", type=int, required=True)
    pr.add_argument("--d", type=int, required=True)
    pr.add_argument("--nm-override")
    pr.add_argument("--out")
    pr.set_defaults(func=cmd_precision)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SingularInput as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_SINGULAR
    except (InputError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_SINGULAR
    except EscalationExhausted as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_PRECISION


if __name__ == "__main__":
    sys.exit(main())
