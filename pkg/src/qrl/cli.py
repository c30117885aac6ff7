"""Batch experiment runner.  One experiment per invocation.

Exit codes: 0 success, 2 bad arguments or descriptors, 3 capacity exceeded,
4 invariant or oracle violation.  Reports carry a header with the package
version, a hash of the configuration, the seed and the generator id.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys
from datetime import datetime, timezone
from fractions import Fraction

import numpy as np

from . import __version__
from . import complexity, entropy, measurement, oracles, qtests, states
from .errors import CapacityError, DomainError, InvariantViolation, QRLError
from .linalg import matrix_to_json

EXIT_OK, EXIT_USAGE, EXIT_CAPACITY, EXIT_VIOLATION = 0, 2, 3, 4

# arguments that do not change a run's result
_UNHASHED = {"out", "pretty", "timestamp", "func"}
_PATH_ARGS = {"state", "test", "machine"}


class Failed(QRLError):
    """A run finished but reported a violated check; output is still written."""


# ---------------------------------------------------------------------------
# report plumbing


def _plain(x):
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    raise TypeError(f"cannot serialize {type(x).__name__}")


def _file_digest(path: str) -> str:
    try:
        with open(path, "rb") as fh:
            return hashlib.sha256(fh.read()).hexdigest()
    except OSError:
        return "unreadable"


def config_hash(args: argparse.Namespace) -> str:
    cfg = {k: v for k, v in sorted(vars(args).items()) if k not in _UNHASHED}
    for k in _PATH_ARGS:
        if cfg.get(k):
            cfg[k] = _file_digest(cfg[k])
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":"), default=_plain)
    return hashlib.sha256(blob.encode()).hexdigest()


def header(args: argparse.Namespace) -> dict:
    h = {
        "version": __version__,
        "command": f"{args.group} {args.cmd}",
        "config_hash": config_hash(args),
        "seed": getattr(args, "seed", None),
        "generator": measurement.GENERATOR_ID,
    }
    if args.timestamp:
        h["timestamp"] = datetime.now(timezone.utc).isoformat(timespec="seconds")
    return h


def _clean(obj):
    """Replace non-finite floats so the JSON stays standard."""
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def _dump_json(obj, pretty: bool) -> str:
    obj = _clean(json.loads(json.dumps(obj, default=_plain, allow_nan=True)))
    if pretty:
        return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False) + "\n"


def _fmt(x) -> str:
    if isinstance(x, bool) or isinstance(x, np.bool_):
        return "true" if x else "false"
    if x is None:
        return ""
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _dump_csv(head: dict, columns: list, rows: list, summary: dict | None) -> str:
    buf = io.StringIO()
    for k, v in head.items():
        buf.write(f"# {k}={_fmt(v)}\n")
    for k, v in (summary or {}).items():
        buf.write(f"# {k}={_fmt(v)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(x) for x in r])
    return buf.getvalue()


def _emit(args, text: str) -> None:
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def emit_json(args, body: dict) -> None:
    _emit(args, _dump_json({"header": header(args), **body}, args.pretty))


def emit_csv(args, columns: list, rows: list, summary: dict | None = None) -> None:
    _emit(args, _dump_csv(header(args), columns, rows, summary))
    if args.pretty and summary:
        for k, v in summary.items():
            sys.stderr.write(f"{k}: {_fmt(v)}\n")


# ---------------------------------------------------------------------------
# state


def _state(args):
    st = states.load_state(args.state)
    if getattr(args, "N", None) is not None:
        desc = dict(st.descriptor, N=args.N)
        st = states.build_state(desc)
    return st


def cmd_state_build(args):
    params = {}
    for item in args.param or []:
        if "=" not in item:
            raise DomainError(f"--param expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        params[k] = v
    desc = {"kind": args.kind, "params": params, "N": args.N}
    st = states.build_state(desc)
    emit_json(args, {"kind": st.kind, "params": params, "N": args.N, "depth": st.depth})


def cmd_state_coherence(args):
    st = _state(args)
    rep = states.check_coherence(st, args.mode)
    rows = [(k, dev, dev <= rep.tol) for k, dev in rep.deviations]
    emit_csv(args, ["level", "deviation", "pass"], rows, {"passed": rep.passed, "worst": rep.worst})
    if not rep.passed:
        raise Failed(f"coherence fails at levels {rep.failures}")


def cmd_state_dump(args):
    st = _state(args)
    rho = st.level(args.level)
    emit_json(args, {"level": args.level, "storage": rho.storage, "matrix": matrix_to_json(rho.matrix())})


# ---------------------------------------------------------------------------
# tests


def _test_descriptor(args) -> dict:
    if args.builder is None:
        raise DomainError("give --test or --builder")
    params = {}
    if args.builder == "chapter4":
        params = {"m": args.m, "capacity": args.capacity}
    elif args.builder == "lln":
        params = {"delta": args.delta, "n_max": args.n_max}
    elif args.builder == "smb":
        params = {"p": args.p, "delta": args.delta, "n_max": args.n_max}
    else:
        raise DomainError(f"builder {args.builder!r} needs a descriptor file")
    if any(v is None for v in params.values()):
        missing = [k for k, v in params.items() if v is None]
        raise DomainError(f"builder {args.builder} needs {', '.join(missing)}")
    return {"builder": args.builder, "params": params}


def _load_test(args):
    if getattr(args, "test", None):
        with open(args.test) as fh:
            desc = json.load(fh)
        return qtests.build_test(desc), desc
    desc = _test_descriptor(args)
    return qtests.build_test(desc), desc


def _member_projections(test) -> list:
    """(member id, level, projection) for every stored level."""
    out = []
    for m, member in sorted(test.members.items()):
        if isinstance(member, qtests.QSigmaSet):
            out += [(m, n, p) for n, p in member.levels.items()]
        else:
            out.append((m, member.qubits, member))
    return out


def _bound(test, m) -> float:
    if test.kind == "MLT":
        return 2.0**-m
    for row in test.info.get("levels", []):
        if row[0] == m:
            return row[3] if test.info.get("p") is None else row[2]
    return test.declared_mass


def cmd_test_build(args):
    test, desc = _load_test(args)
    members = [
        {"member": m, "level": n, "rank": p.rank, "tau": p.tau, "mass": test.masses.get(m)}
        for m, n, p in _member_projections(test)
    ]
    emit_json(args, {**desc, "test_kind": test.kind, "members": members})


def cmd_test_run(args):
    test, desc = _load_test(args)
    if args.state:
        st = _state(args)
    elif desc["builder"] == "chapter4":
        st = states.chapter4_prefix(test.info["N"])
    else:
        raise DomainError("--state is required for this builder")
    rows, ok = [], True
    for m, n, p in _member_projections(test):
        if n > st.depth:
            continue
        trace = qtests.projection_trace(st, p)
        mass = test.masses.get(m, p.tau) if test.weighting == "mu" else p.tau
        bound = _bound(test, m)
        good = bound is None or mass <= bound + 1e-12
        ok &= good
        rows.append((m, n, trace, p.tau, bound, good))
    if not rows:
        raise DomainError("test shares no level with the state prefix")
    emit_csv(args, ["test_id", "level", "trace", "tau", "bound", "pass"], rows, {"kind": test.kind})
    if not ok:
        raise Failed("a test member exceeds its mass bound")


# ---------------------------------------------------------------------------
# measurement


def cmd_measure_premeasure(args):
    st = _state(args)
    b = measurement.parse_basis(args.basis)
    table = measurement.build_premeasure(st, b, args.depth)
    emit_csv(args, ["tau", "p"], list(table.rows()), {"additivity_defect": table.additivity_defect()})


def cmd_measure_sample(args):
    st = _state(args)
    b = measurement.parse_basis(args.basis)
    bits = measurement.sample_many(st, b, args.n, args.count, args.seed)
    rows = [(i, "".join(map(str, r))) for i, r in enumerate(bits)]
    emit_csv(args, ["index", "bits"], rows)


def cmd_measure_lln(args):
    st = _state(args)
    top = min(args.n_max or st.depth, st.depth)
    rows = [(n, measurement.lln_statistic(st.level(n))) for n in range(1, top + 1)]
    emit_csv(args, ["n", "lln_statistic"], rows)


# ---------------------------------------------------------------------------
# complexity


def cmd_qk_validate(args):
    machine = complexity.load_machine(args.machine)
    rep = complexity.validate(machine)
    emit_json(args, {"report": rep.to_json()})
    if not rep.passed:
        raise Failed("machine failed validation")


def cmd_qk_eval(args):
    machine = complexity.load_machine(args.machine)
    st = _state(args)
    value = complexity.qk_eps(machine, st.level(args.level), args.eps)
    emit_json(args, {"level": args.level, "eps": args.eps, "qk": value})


def cmd_qk_count(args):
    machine = complexity.load_machine(args.machine)
    res = complexity.counting_check(machine, args.s, args.B, args.eps)
    emit_json(args, {"s": args.s, "B": args.B, "eps": args.eps, "found": res.found, "bound": res.bound, "passed": res.passed})
    if not res.passed:
        raise Failed("counting bound violated")


# ---------------------------------------------------------------------------
# entropy


def _m_list(raw: str | None) -> list:
    if not raw:
        return []
    try:
        return [int(x) for x in raw.split(",") if x.strip()]
    except ValueError:
        raise DomainError(f"--m expects a comma list of integers, got {raw!r}") from None


def _level_S(st, n: int, m: int):
    if m >= n:
        return None
    try:
        return entropy.flattened_entropy_bound(st.level(n), m).S
    except CapacityError:
        return None


def cmd_entropy_report(args):
    st = _state(args)
    rep = entropy.entropy_rate_series(st)
    ms = _m_list(args.m)
    rows = [list(r) + [_level_S(st, r[0], m) for m in ms] for r in rep.rows]
    cols = ["n", "H", "H/n", "H-n"] + [f"S_m{m}" for m in ms]
    emit_csv(args, cols, rows, rep.summary())


def cmd_entropy_bound(args):
    st = _state(args)
    rows, ok = [], True
    for n in range(args.m + 1, st.depth + 1):
        try:
            fb = entropy.flattened_entropy_bound(st.level(n), args.m)
        except CapacityError:
            break
        ok &= fb.holds
        rows.append((n, fb.S, fb.bound, fb.entropy, fb.holds))
    emit_csv(args, ["n", "S_mn", "bound", "H", "holds"], rows, {"m": args.m, "passed": ok})
    if not ok:
        raise Failed("flattened entropy bound violated")


# ---------------------------------------------------------------------------
# oracles


def cmd_oracle_run(args):
    outcomes = oracles.run_checks(args.check, args.seed)
    emit_json(args, {"outcomes": [o.to_json() for o in outcomes]})
    bad = [o.name for o in outcomes if not o.passed]
    if bad:
        raise Failed(f"oracle violations in {', '.join(bad)}")


# ---------------------------------------------------------------------------
# parser


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", help="output file (default: stdout)")
    p.add_argument("--pretty", action="store_true", help="indented JSON / summary on stderr")
    p.add_argument("--timestamp", action="store_true", help="add a timestamp field to the header")


def _with_state(p, required: bool = True) -> None:
    p.add_argument("--state", required=required, help="state descriptor JSON")
    p.add_argument("--N", type=int, help="override the descriptor's N")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qrl", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    groups = parser.add_subparsers(dest="group", required=True)

    def sub(group, name, func):
        p = group.add_parser(name)
        p.set_defaults(func=func)
        _common(p)
        return p

    g = groups.add_parser("state").add_subparsers(dest="cmd", required=True)
    p = sub(g, "build", cmd_state_build)
    p.add_argument("--kind", required=True, choices=states.KINDS[:-1])
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--param", action="append", help="key=value builder parameter")
    p = sub(g, "coherence", cmd_state_coherence)
    _with_state(p)
    p.add_argument("--mode", default="auto", choices=("auto", "factored", "levels"))
    p = sub(g, "dump", cmd_state_dump)
    _with_state(p)
    p.add_argument("--level", type=int, required=True)

    g = groups.add_parser("test").add_subparsers(dest="cmd", required=True)
    for name, func in (("build", cmd_test_build), ("run", cmd_test_run)):
        p = sub(g, name, func)
        p.add_argument("--test", help="test descriptor JSON")
        p.add_argument("--builder", choices=("chapter4", "lln", "smb"))
        p.add_argument("--m", type=int)
        p.add_argument("--capacity", type=int, default=16)
        p.add_argument("--delta", type=str, help="rational, e.g. 1/5")
        p.add_argument("--n-max", type=int)
        p.add_argument("--p", type=float)
        if name == "run":
            _with_state(p, required=False)

    g = groups.add_parser("measure").add_subparsers(dest="cmd", required=True)
    p = sub(g, "premeasure", cmd_measure_premeasure)
    _with_state(p)
    p.add_argument("--basis", default="standard")
    p.add_argument("--depth", type=int, required=True)
    p = sub(g, "sample", cmd_measure_sample)
    _with_state(p)
    p.add_argument("--basis", default="standard")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p = sub(g, "lln", cmd_measure_lln)
    _with_state(p)
    p.add_argument("--n-max", type=int)

    g = groups.add_parser("qk").add_subparsers(dest="cmd", required=True)
    p = sub(g, "validate", cmd_qk_validate)
    p.add_argument("--machine", required=True)
    p = sub(g, "eval", cmd_qk_eval)
    p.add_argument("--machine", required=True)
    _with_state(p)
    p.add_argument("--level", type=int, required=True)
    p.add_argument("--eps", type=float, required=True)
    p = sub(g, "count", cmd_qk_count)
    p.add_argument("--machine", required=True)
    p.add_argument("--s", type=int, required=True)
    p.add_argument("--B", type=float, required=True)
    p.add_argument("--eps", type=float, required=True)

    g = groups.add_parser("entropy").add_subparsers(dest="cmd", required=True)
    p = sub(g, "report", cmd_entropy_report)
    _with_state(p)
    p.add_argument("--m", help="comma list of m values for S_mn columns")
    p = sub(g, "bound", cmd_entropy_bound)
    _with_state(p)
    p.add_argument("--m", type=int, required=True)

    g = groups.add_parser("oracle").add_subparsers(dest="cmd", required=True)
    p = sub(g, "run", cmd_oracle_run)
    p.add_argument("--check", default="all", choices=("all",) + oracles.CHECKS)
    p.add_argument("--seed", type=int, default=7)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except Failed as exc:
        sys.stderr.write(f"qrl: {exc}\n")
        return EXIT_VIOLATION
    except CapacityError as exc:
        sys.stderr.write(f"qrl: capacity: {exc}\n")
        return EXIT_CAPACITY
    except (DomainError, OSError, json.JSONDecodeError) as exc:
        sys.stderr.write(f"qrl: {exc}\n")
        return EXIT_USAGE
    except (InvariantViolation, QRLError) as exc:
        sys.stderr.write(f"qrl: invariant: {exc}\n")
        return EXIT_VIOLATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
