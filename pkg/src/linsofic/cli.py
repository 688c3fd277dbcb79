"""Command-line front end.

Every command writes one UTF-8 JSON report (stdout or ``--out``). Exit
status: 0 success, 1 ran but the certificate or bound was refuted, 2 the
input could not be processed.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from fractions import Fraction
from pathlib import Path


from . import __version__
from .algebra import AlgebraSpec, enumerate_ball
from .approx import (
    ApproxMap,
    amplification_shape,
    amplified_rank_bound,
    amplify,
    build_d_approximation,
    build_quotient_representation,
    check_d_approximation,
    construction_subspace,
)
from .errors import ConfigError, LinsoficError
from .fields import FieldSpec
from .folner import FolnerWindow, candidate_window
from .linalg import mat_rank
from .lld import verify_bms_sweep
from .tiling import build_conjugator, default_conjugator_window, hyperfinite_decompose, monotile

OK, REFUTED, INPUT_ERROR = 0, 1, 2
_NOT_ECHOED = {"func", "config", "out", "timing", "command_name"}


# ---------------------------------------------------------------------------
# argument helpers
# ---------------------------------------------------------------------------


def parse_algebra(value) -> AlgebraSpec:
    """JSON object (or its text), or shorthand ``polynomial[:m]``, ``laurent[:r]``, ``heisenberg``."""
    if isinstance(value, AlgebraSpec):
        return value
    if isinstance(value, dict):
        return AlgebraSpec.from_json(value)
    text = str(value).strip()
    if text.startswith("{"):
        try:
            return AlgebraSpec.from_json(json.loads(text))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"--algebra: invalid JSON ({exc})") from None
    kind, _, rank = text.partition(":")
    obj = {"kind": kind}
    if rank:
        obj["vars" if kind == "polynomial" else "rank"] = int(rank)
    return AlgebraSpec.from_json(obj)


def parse_epsilon(value) -> Fraction:
    try:
        eps = Fraction(str(value))
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"--epsilon: cannot parse {value!r} as p/q") from None
    if eps <= 0:
        raise ConfigError("--epsilon must be positive")
    return eps


def _load_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None


def load_map(path) -> ApproxMap:
    """Read an ApproxMap from its own JSON or from a ``build``/``quotient-rep`` report."""
    obj = _load_json(path)
    if "table" not in obj:
        obj = obj.get("result", {}).get("map", obj)
    try:
        return ApproxMap.from_json(obj)
    except KeyError as exc:
        raise ConfigError(f"{path}: map JSON is missing field {exc.args[0]!r}") from None


def load_window(path_or_obj, alg: AlgebraSpec) -> FolnerWindow:
    obj = path_or_obj if isinstance(path_or_obj, (dict, list)) else _load_json(path_or_obj)
    if isinstance(obj, list):
        return FolnerWindow.from_words(alg, obj)
    obj.setdefault("algebra", alg.to_json())
    return FolnerWindow.from_json(obj)


def _source_map(args, d: int) -> ApproxMap:
    if args.map:
        return load_map(args.map)
    alg = parse_algebra(args.algebra)
    field = FieldSpec.parse(args.field)
    if args.m is not None:
        cap = max(2 * d, args.degree_cap or 0)
        return build_quotient_representation(alg, args.m, field, cap)
    if args.window:
        W = load_window(args.window, alg)
    elif args.n is not None:
        W = candidate_window(alg, args.n)
    else:
        raise ConfigError("need one of --map, --m, --n or --window to obtain a map")
    return build_d_approximation(alg, W, d, field, check_invariance=not args.no_invariance_check)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_build(args):
    phi = _source_map(args, args.d)
    return OK, {"map": phi.to_json()}


def cmd_quotient_rep(args):
    if args.m is None:
        raise ConfigError("quotient-rep needs --m")
    alg = parse_algebra(args.algebra)
    cap = args.degree_cap if args.degree_cap is not None else 2 * args.d
    phi = build_quotient_representation(alg, args.m, FieldSpec.parse(args.field), cap)
    return OK, {"map": phi.to_json()}


def cmd_check(args):
    phi = _source_map(args, args.d)
    policy = "exhaustive" if args.exhaustive else args.policy
    rep = check_d_approximation(phi, args.d, policy=policy, seed=args.seed, samples=args.samples)
    out = {"provenance": phi.provenance, "n": phi.n, "certificate": rep.to_json()}
    if phi.window is not None:
        out["construction_subspace_dim"] = construction_subspace(phi, args.d).dim
    return (OK if rep.certified else REFUTED), out


def _tile_window(args, alg):
    if args.tile_words:
        words = json.loads(args.tile_words) if isinstance(args.tile_words, str) else args.tile_words
        return FolnerWindow.from_words(alg, words)
    if args.tile_n is not None:
        return candidate_window(alg, args.tile_n)
    raise ConfigError("need --tile-n or --tile-words")


def cmd_tile(args):
    phi = _source_map(args, args.d)
    T = _tile_window(args, phi.algebra)
    tiling = monotile(phi, T.words, args.d, args.seed, maximal=args.maximal, strategy=args.strategy)
    hyper = hyperfinite_decompose(tiling)
    ok = tiling.independent and tiling.meets_bound
    return (OK if ok else REFUTED), {"tiling": tiling.to_json(), "hyperfinite": hyper.to_json()}


def cmd_conjugate(args):
    if not (args.map_a and args.map_b):
        raise ConfigError("conjugate needs --map-a and --map-b")
    phiA, phiB = load_map(args.map_a), load_map(args.map_b)
    eps = parse_epsilon(args.epsilon)
    window = None
    if args.tile_words or args.tile_n is not None:
        window = _tile_window(args, phiA.algebra)
    res = build_conjugator(phiA, phiB, eps, args.seed, window=window, strategy=args.strategy)
    return (OK if res.success else REFUTED), {"conjugacy": res.to_json(include_matrix=not args.no_matrix)}


def amplification_report(source: ApproxMap, targets, d: int | None = None) -> dict:
    """Rank identities and the normalized generator bound for each target."""
    rows = []
    src_ranks = {w: mat_rank(m) for w, m in source.table.items()}
    all_ok = True
    for rho in amplify(source, targets):
        c, r = amplification_shape(source.n, rho.n)
        identity = all(mat_rank(m) == c * src_ranks[w] for w, m in rho.table.items())
        dd = d if d is not None else max(1, c // 2)
        chain = amplified_rank_bound(c, dd)
        gens = {}
        for name, s in zip(source.algebra.generator_names(), source.algebra.generators()):
            norm = Fraction(c * src_ranks[s], rho.n)
            gens[name] = {"normalized_rank": str(norm), "meets_square_bound": norm >= chain["square"]}
        applies = c >= 2 * dd
        bound_ok = (not applies) or all(g["meets_square_bound"] for g in gens.values())
        all_ok &= identity and bound_ok
        rows.append(
            {
                "target": rho.n,
                "copies": c,
                "pad": r,
                "rank_identity": identity,
                "d": dd,
                "bound_applies": applies,
                "square_bound": str(chain["square"]),
                "chain_holds": chain["chain_holds"],
                "generators": gens,
                "generator_bound_ok": bound_ok,
            }
        )
    return {"source_n": source.n, "targets": rows, "ok": all_ok}


def cmd_amplify(args):
    if not args.targets:
        raise ConfigError("amplify needs --targets")
    targets = [int(t) for t in str(args.targets).replace(" ", "").split(",") if t]
    source = _source_map(args, args.d)
    rep = amplification_report(source, targets, args.bound_d)
    return (OK if rep["ok"] else REFUTED), {"amplification": rep}


def cmd_lld_verify(args):
    try:
        a, b = (int(x) for x in str(args.dims).lower().split("x"))
    except ValueError:
        raise ConfigError(f"--dims: expected AxB, got {args.dims!r}") from None
    field = FieldSpec.parse(args.field)
    mode = "exhaustive" if args.exhaustive else "random"
    rep = verify_bms_sweep(field, a, b, args.d, mode=mode, samples=args.samples, seed=args.seed)
    return (OK if rep.ok else REFUTED), {"sweep": rep.to_json()}


# ---------------------------------------------------------------------------
# weak-stability demo
# ---------------------------------------------------------------------------

DEMO_EXHAUSTIVE = 1 << 10

# (big window parameter, tile window parameter or None for the doubling search, quotient m)
_DEMO_DEFAULTS = {
    ("polynomial", 1): (128, None, 64),
    ("laurent", 1): (32, 2, 5),
    ("laurent", 2): (7, 2, 5),
    ("heisenberg", 3): (2, 1, 3),
}


def demo_weak_stability(alg: AlgebraSpec, field: FieldSpec, epsilon, seed=0, *, n=None, tile_n=None, m=None) -> dict:
    """Exhibit a true representation close to a window-built approximation.

    The approximation comes from a large box window; the representation is a
    finite-quotient representation amplified to the same dimension; the two
    are conjugated by tiling both with a smaller window.
    """
    epsilon = parse_epsilon(epsilon)
    key = (alg.kind, alg.rank)
    if key not in _DEMO_DEFAULTS:
        raise ConfigError(f"no weak-stability demo for {alg.kind} of rank {alg.rank}")
    n0, t0, m0 = _DEMO_DEFAULTS[key]
    n = n0 if n is None else n
    tile_n = t0 if tile_n is None else tile_n
    m = m0 if m is None else m

    W = candidate_window(alg, n)
    T = default_conjugator_window(alg, epsilon, W.dim) if tile_n is None else candidate_window(alg, tile_n)
    d = max(1, math.ceil((T.degree() + 1) / 2))
    phi = build_d_approximation(alg, W, d, field, check_invariance=False)
    d_check = min(d, 2)
    # The certificate is informational here; keep the exhaustive sweep small.
    k = len(enumerate_ball(alg, d_check))
    policy = "auto" if field.is_prime_field and field.modulus**k <= DEMO_EXHAUSTIVE else "random"
    cert = check_d_approximation(phi, d_check, policy=policy, seed=seed)
    psi0 = build_quotient_representation(alg, m, field, 2 * d)
    psi = amplify(psi0, [phi.n])[0]
    res = build_conjugator(phi, psi, epsilon, seed, window=T)
    return {
        "algebra": alg.to_json(),
        "field": str(field),
        "epsilon": str(epsilon),
        "n": phi.n,
        "window": {"params": dict(W.params), "dim": W.dim},
        "approximation": {
            "d": d,
            "builder_invariance": phi.provenance["invariance"],
            "certificate": cert.to_json(),
        },
        "representation": {"quotient_m": m, "quotient_n": psi0.n, "copies": psi.provenance["copies"], "pad": psi.provenance["pad"]},
        "tile": {"params": dict(T.params), "dim": T.dim},
        "conjugacy": res.to_json(include_matrix=False),
        "success": res.success,
    }


def cmd_demo_weak_stability(args):
    rep = demo_weak_stability(
        parse_algebra(args.algebra),
        FieldSpec.parse(args.field),
        args.epsilon,
        args.seed,
        n=args.n,
        tile_n=args.tile_n,
        m=args.m,
    )
    return (OK if rep["success"] else REFUTED), {"demo": rep}


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="JSON file whose keys override command-line flags")
    p.add_argument("--algebra", default="polynomial", help="algebra JSON or shorthand (polynomial[:m], laurent[:r], heisenberg)")
    p.add_argument("--field", default="gf:2", help="gf:p or q")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="write the report here instead of stdout")
    p.add_argument("--timing", action="store_true", help="include wall-clock time (breaks byte-identical reports)")


def _source(p: argparse.ArgumentParser):
    p.add_argument("--map", help="ApproxMap JSON (or a build report)")
    p.add_argument("--m", type=int, help="use the quotient representation with this parameter")
    p.add_argument("--n", type=int, help="build from the box window with this size parameter")
    p.add_argument("--window", help="build from an explicit window JSON file")
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--degree-cap", type=int)
    p.add_argument("--no-invariance-check", action="store_true", help="build even if the window is not invariant enough")


def _tile_opts(p: argparse.ArgumentParser):
    p.add_argument("--tile-n", type=int, help="tile with the box window of this size parameter")
    p.add_argument("--tile-words", help="tile with these words (JSON list of exponent lists)")
    p.add_argument("--strategy", default="basis-first", choices=["basis-first", "random-first"])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="linsofic", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"linsofic {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", help="build an approximation from a window")
    _common(p), _source(p)
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("quotient-rep", help="build a finite-quotient representation")
    _common(p), _source(p)
    p.set_defaults(func=cmd_quotient_rep)

    p = sub.add_parser("check", help="certify a d-approximation")
    _common(p), _source(p)
    p.add_argument("--policy", default="auto", choices=["auto", "exhaustive", "random"])
    p.add_argument("--exhaustive", action="store_true", help="require the exhaustive rank check")
    p.add_argument("--samples", type=int, default=256)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("tile", help="greedy linear monotiling")
    _common(p), _source(p), _tile_opts(p)
    p.add_argument("--maximal", action="store_true", help="keep tiling until no root vector is found")
    p.set_defaults(func=cmd_tile)

    p = sub.add_parser("conjugate", help="conjugate one approximation towards another")
    _common(p), _tile_opts(p)
    p.add_argument("--map-a")
    p.add_argument("--map-b")
    p.add_argument("--epsilon", default="1/4")
    p.add_argument("--no-matrix", action="store_true", help="omit M from the report")
    p.set_defaults(func=cmd_conjugate)

    p = sub.add_parser("amplify", help="amplify a map to larger dimensions")
    _common(p), _source(p)
    p.add_argument("--targets", help="comma-separated target dimensions")
    p.add_argument("--bound-d", type=int, help="d for the normalized rank bound (default: copies // 2)")
    p.set_defaults(func=cmd_amplify)

    p = sub.add_parser("lld", help="locally linearly dependent families")
    lsub = p.add_subparsers(dest="lld_command", required=True)
    q = lsub.add_parser("verify", help="sweep operator families and check the rank bounds")
    _common(q)
    q.add_argument("--dims", default="2x2", help="AxB: domain x codomain dimension")
    q.add_argument("--d", type=int, default=2)
    q.add_argument("--exhaustive", action="store_true")
    q.add_argument("--samples", type=int, default=10_000)
    q.set_defaults(func=cmd_lld_verify, command_name="lld verify")

    p = sub.add_parser("demo", help="end-to-end demonstrations")
    dsub = p.add_subparsers(dest="demo_command", required=True)
    q = dsub.add_parser("weak-stability", help="conjugate a window approximation to a true representation")
    _common(q)
    q.add_argument("--epsilon", default="1/4")
    q.add_argument("--n", type=int, help="big window size parameter")
    q.add_argument("--tile-n", type=int, help="tile window size parameter")
    q.add_argument("--m", type=int, help="quotient parameter")
    q.set_defaults(func=cmd_demo_weak_stability, command_name="demo weak-stability")
    return parser


def _apply_config(args: argparse.Namespace):
    cfg = _load_json(args.config)
    if not isinstance(cfg, dict):
        raise ConfigError("config file must contain a JSON object")
    flat = dict(cfg)
    flat.update(flat.pop("params", {}) or {})
    flat.pop("command", None)
    for key, value in flat.items():
        dest = key.replace("-", "_")
        if dest in _NOT_ECHOED or not hasattr(args, dest):
            raise ConfigError(f"config field {key!r} is not valid for this command")
        if dest == "algebra" and isinstance(value, dict):
            value = json.dumps(value, sort_keys=True)
        setattr(args, dest, value)


def _config_echo(args) -> dict:
    out = {}
    for k, v in sorted(vars(args).items()):
        if k in _NOT_ECHOED or k in ("lld_command", "demo_command"):
            continue
        if k == "algebra" and v is not None:
            v = parse_algebra(v).to_json()
        out[k] = v
    return out


def run(args: argparse.Namespace) -> tuple[int, dict]:
    if args.config:
        _apply_config(args)
    name = getattr(args, "command_name", args.command)
    t0 = time.perf_counter()
    status, result = args.func(args)
    report = {
        "version": __version__,
        "command": name,
        "config": _config_echo(args),
        "status": "ok" if status == OK else "refuted",
        "result": result,
    }
    if args.timing:
        report["timing_seconds"] = round(time.perf_counter() - t0, 3)
    return status, report


def dumps(report: dict) -> str:
    return json.dumps(report, indent=2, ensure_ascii=False) + "\n"


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        status, report = run(args)
    except (LinsoficError, ValueError, KeyError, ZeroDivisionError) as exc:
        kind = type(exc).__name__
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error: {kind}: {msg}", file=sys.stderr)
        return INPUT_ERROR
    text = dumps(report)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return status


if __name__ == "__main__":
    sys.exit(main())
