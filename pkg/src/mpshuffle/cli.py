"""Command-line interface: ``mpshuffle {shuffle,analyze,adversary,topology,replay}``.

Every result embeds a manifest (command, parameters, seed, version) and
``replay`` re-executes a manifest, so results are pure functions of it.

Exit codes: 0 success, 1 failing adversary verdict or replay mismatch,
2 usage error, 3 protocol abort, 4 enumeration budget exceeded.
"""
from __future__ import annotations

import argparse
import json
import sys

from . import __version__
from . import analysis
from .adversary import view_indistinguishability_test
from .field import DEFAULT_MODULUS
from .permnet import build_arbitrary_benes, build_benes, build_reduced_npi, build_symmetric_npi
from .runtime import QuorumError
from .shuffle import ShuffleJob, run_job

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_ABORT, EXIT_BUDGET = 0, 1, 2, 3, 4


class UsageError(ValueError):
    pass


def _int_list(text: str | None) -> list[int]:
    if not text:
        return []
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated integers, got {text!r}") from None


def _crash_map(items) -> dict[int, int]:
    out = {}
    for item in items or []:
        try:
            party, rnd = item.split(":")
            out[int(party)] = int(rnd)
        except ValueError:
            raise UsageError(f"--crash expects PARTY:ROUND, got {item!r}") from None
    return out


def _manifest(command: str, params: dict) -> dict:
    return {"command": command, "params": params, "seed": params.get("seed"), "version": __version__}


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, default=analysis._jsonable) + "\n"


# -- commands -------------------------------------------------------------------------

def _job(params: dict) -> ShuffleJob:
    proto = params["protocol"]
    if proto == "one" and not params.get("n"):
        raise UsageError("--n is required for protocol one")
    if proto == "two" and not (params.get("n1") and params.get("n2")):
        raise UsageError("--n1 and --n2 are required for protocol two")
    return ShuffleJob(protocol=proto, n=params.get("n"), n1=params.get("n1"), n2=params.get("n2"),
                      t=params["t"], p=params["p"], seed=params["seed"], network=params.get("network", "benes"),
                      corrupt=tuple(params.get("corrupt", [])),
                      crash={int(k): v for k, v in params.get("crash", {}).items()})


def run_shuffle(params: dict) -> tuple[str, int, dict]:
    job = _job(params)
    n = job.size
    inputs = params.get("inputs") or list(range(1, n + 1))
    if len(inputs) != n:
        raise UsageError(f"{len(inputs)} inputs given for {n} parties")
    if 3 * job.t >= n:
        raise UsageError(f"t={job.t} violates t < n/3 for n={n}")
    out = run_job(job, inputs)
    body = {"manifest": _manifest("shuffle", params), "outcome": out.to_dict()}
    extras = {"runtime": out.runtime}
    return _dumps(body), (EXIT_ABORT if out.aborted else EXIT_OK), extras


def _network(params: dict):
    fam = params["family"]
    if fam == "benes":
        if params.get("d"):
            return build_benes(params["d"])
        if params.get("n"):
            return build_arbitrary_benes(params["n"])
        raise UsageError("benes needs --d or --n")
    if fam == "npi":
        if not params.get("nc"):
            raise UsageError("npi needs --nc (component size)")
        return build_symmetric_npi(params["nc"])
    if fam == "reduced":
        if not (params.get("n1") and params.get("n2")):
            raise UsageError("reduced needs --n1 and --n2")
        return build_reduced_npi(params["n1"], params["n2"])
    raise UsageError(f"unknown family {fam!r}")


def run_analyze(params: dict) -> tuple[str, int, dict]:
    what = params["what"]
    if what == "dist":
        dist = analysis.enumerate_distribution(_network(params), params["budget"])
        rows = dist.rows()
        if params["family"] == "benes" and params.get("d") == 3:
            for r in rows:
                r["reference"] = analysis.REFERENCE_OCCURRENCES.get(r["occurrences"])
        extra = {"total_configs": dist.total_configs, "distinct": dist.distinct, "mass": dist.mass()}
    elif what == "stats":
        dist = analysis.enumerate_distribution(_network(params), params["budget"])
        mean, std = analysis.distribution_stats(dist)
        rows = [{"mean": round(mean, 6), "stddev": round(std, 6),
                 "reference_mean": analysis.REFERENCE_MEAN, "reference_stddev": analysis.REFERENCE_STDDEV}]
        extra = {"distinct": dist.distinct, "total_configs": dist.total_configs}
    elif what == "fpi":
        rows = analysis.fpi_table(params["max"])
        extra = {}
    elif what == "zeta":
        if params.get("n") and params.get("t") is not None:
            if params.get("n1") and params.get("n2"):
                reps = [analysis.zeta_shuffle_two(params["n1"], params["n2"], params["t"])]
            else:
                reps = [analysis.zeta_shuffle_one(params["n"], params["t"])]
        else:
            reps = analysis.zeta_table()
        rows = [{"protocol": r.protocol, "n": r.n, "t": r.t, "n1": r.n1, "n2": r.n2,
                 "theta1": r.theta1, "theta2": r.theta2, "zeta": r.zeta, "reference": r.reference,
                 "match": r.matches_reference, "count_bits": r.count.bit_length()} for r in reps]
        extra = {}
    elif what == "birthday":
        rows = analysis.birthday_table(params.get("ns") or (32, 64, 128, 256))
        for r in rows:
            ref = r["reference"]
            r["flag"] = "" if ref is None or abs(r["probability"] - ref) <= 5e-4 else "differs from reference"
        extra = {}
    else:
        raise UsageError(f"unknown analysis {what!r}")
    man = _manifest("analyze", params)
    if params["format"] == "csv":
        return "# manifest: " + json.dumps(man, sort_keys=True) + "\n" + analysis.to_csv(rows), EXIT_OK, {}
    return _dumps({"manifest": man, "rows": rows, **extra}), EXIT_OK, {}


def run_adversary(params: dict) -> tuple[str, int, dict]:
    job = _job(params)
    n = job.size
    if 3 * job.t >= n:
        raise UsageError(f"t={job.t} violates t < n/3 for n={n}")
    if not job.corrupt and job.t:
        job.corrupt = tuple(range(1, job.t + 1))
    honest = [i for i in range(1, n + 1) if i not in job.corrupt]
    a = list(range(1, n + 1))
    b = list(a)
    # swap two honest inputs between the conditions
    if len(honest) >= 2:
        i, j = honest[0] - 1, honest[-1] - 1
        b[i], b[j] = b[j], b[i]
    rep = view_indistinguishability_test(job, a, b, params["trials"], alpha=params["alpha"], seed=job.seed,
                                         threshold=1 if params.get("negative_control") else None)
    body = {"manifest": _manifest("adversary", params), "report": rep.to_dict()}
    return _dumps(body), (EXIT_OK if rep.passed else EXIT_FAIL), {}


def run_topology(params: dict) -> tuple[str, int, dict]:
    return _network(params).to_dot(), EXIT_OK, {}


COMMANDS = {"shuffle": run_shuffle, "analyze": run_analyze, "adversary": run_adversary,
            "topology": run_topology}


def execute(command: str, params: dict) -> tuple[str, int, dict]:
    try:
        return COMMANDS[command](params)
    except analysis.BudgetExceeded as exc:
        return f"budget exceeded: {exc}\n", EXIT_BUDGET, {"error": True}
    except (UsageError, QuorumError, ValueError) as exc:
        return f"error: {exc}\n", EXIT_USAGE, {"error": True}


# -- argument parsing -------------------------------------------------------------------

def _add_protocol_args(sp):
    sp.add_argument("--protocol", choices=["one", "two"], default="one")
    sp.add_argument("--n", type=int)
    sp.add_argument("--n1", type=int)
    sp.add_argument("--n2", type=int)
    sp.add_argument("--t", type=int, default=0)
    sp.add_argument("--p", type=int, default=DEFAULT_MODULUS)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--corrupt", help="comma-separated party indices")
    sp.add_argument("--network", choices=["benes", "npi"], default="benes")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mpshuffle", description="Multiparty shuffling by permutation networks")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("shuffle", help="run one shuffle")
    _add_protocol_args(sp)
    sp.add_argument("--inputs", help="comma-separated inputs (default 1..n)")
    sp.add_argument("--crash", action="append", metavar="PARTY:ROUND")
    sp.add_argument("--transcript", help="write the message transcript (JSON lines)")
    sp.add_argument("--out", help="write the outcome JSON here")

    sp = sub.add_parser("analyze", help="reproduce analysis tables")
    sp.add_argument("what", choices=["dist", "fpi", "zeta", "birthday", "stats"])
    sp.add_argument("--family", choices=["benes", "npi", "reduced"], default="benes")
    sp.add_argument("--d", type=int)
    sp.add_argument("--n", type=int)
    sp.add_argument("--nc", type=int)
    sp.add_argument("--n1", type=int)
    sp.add_argument("--n2", type=int)
    sp.add_argument("--t", type=int)
    sp.add_argument("--ns", help="comma-separated sizes for the birthday table")
    sp.add_argument("--max", type=int, default=16)
    sp.add_argument("--budget", type=int, default=analysis.DEFAULT_BUDGET)
    sp.add_argument("--format", choices=["csv", "json"], default="json")
    sp.add_argument("--out")

    sp = sub.add_parser("adversary", help="view-indistinguishability experiment")
    _add_protocol_args(sp)
    sp.add_argument("--trials", type=int, default=1000)
    sp.add_argument("--alpha", type=float, default=0.01)
    sp.add_argument("--negative-control", action="store_true",
                    help="use threshold 1 (shares equal secrets); the test should fail")
    sp.add_argument("--out")

    sp = sub.add_parser("topology", help="export a network as DOT")
    sp.add_argument("--family", choices=["benes", "npi", "reduced"], default="benes")
    sp.add_argument("--d", type=int)
    sp.add_argument("--n", type=int)
    sp.add_argument("--nc", type=int)
    sp.add_argument("--n1", type=int)
    sp.add_argument("--n2", type=int)
    sp.add_argument("--out")

    sp = sub.add_parser("replay", help="re-run the manifest embedded in a result file")
    sp.add_argument("result")
    sp.add_argument("--out")
    sp.add_argument("--check", action="store_true", help="exit 1 unless the output is byte-identical")
    return ap


def _params(args) -> dict:
    d = {k: v for k, v in vars(args).items() if k not in {"command", "out", "transcript", "check"}}
    if "corrupt" in d:
        d["corrupt"] = _int_list(d["corrupt"])
    if "inputs" in d:
        d["inputs"] = _int_list(d["inputs"])
    if "crash" in d:
        d["crash"] = {str(k): v for k, v in _crash_map(d["crash"]).items()}
    if "ns" in d:
        d["ns"] = _int_list(d["ns"])
    return d


def _emit(text: str, path: str | None) -> None:
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _read_manifest(path: str) -> dict:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    if text.startswith("# manifest: "):
        return json.loads(text.splitlines()[0][len("# manifest: "):]), text
    return json.loads(text)["manifest"], text


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command == "replay":
        try:
            man, original = _read_manifest(args.result)
        except (OSError, ValueError, KeyError) as exc:
            sys.stderr.write(f"error: cannot read manifest: {exc}\n")
            return EXIT_USAGE
        text, code, _ = execute(man["command"], man["params"])
        _emit(text, args.out)
        if args.check and text != original:
            sys.stderr.write("replay output differs from the original result\n")
            return EXIT_FAIL
        return code
    try:
        params = _params(args)
    except UsageError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE
    text, code, extra = execute(args.command, params)
    if extra.get("error"):
        sys.stderr.write(text)
        return code
    _emit(text, getattr(args, "out", None))
    if getattr(args, "transcript", None) and "runtime" in extra:
        extra["runtime"].dump_transcript(args.transcript)
    return code


if __name__ == "__main__":
    sys.exit(main())
