"""Batch front-end: one JSON job in, one JSON report out.

Usage::

    reflfactor job.json [--seed N] [--tol X] [--degree-cap D] [--trials T] [--order-cap C]
    reflfactor - < job.json

A job is ``{"command": ..., "payload": {...}, "seed": N, "tolerances": {...}}``;
the payload keys may also sit at the top level next to ``command``.  Flags
override the corresponding job fields.

Exit codes: 0 success (including inconclusive outcomes, which carry a
status field), 2 malformed job, 3 computation error.
"""
from __future__ import annotations

import argparse
import copy
import json
import math
import sys
from dataclasses import dataclass
from typing import Any

import jsonschema
import numpy as np

from . import chevalley, factorize, polyalg, propermap, unigroup
from .chevalley import InvariantSearchError, basic_invariants, verify_chevalley
from .polyalg import DEFAULT_SEED, PolyMap
from .propermap import NoPreimageError, Pseudoellipsoid, SolverConfig
from .unigroup import GroupNotFiniteError

EXIT_OK = 0
EXIT_SCHEMA = 2
EXIT_COMPUTE = 3

COMMANDS = ("closure", "invariants", "multiplicity", "orbit-check", "factorize", "verify")

DEFAULT_TOLERANCES = {
    "identity": factorize.IDENTITY_TOL,
    "match": propermap.MATCH_TOL,
    "newton_residual": 1e-10,
    "dedup": 1e-6,
    "generic": propermap.GENERIC_TOL,
    "rank": chevalley.RANK_TOL,
    "group_equality": unigroup.EQ_TOL,
    "zero": polyalg.ZERO_TOL,
}
_OVERRIDABLE = ("identity", "match", "newton_residual", "dedup")

_POLY = {
    "type": "object",
    "required": ["dim", "terms"],
    "properties": {
        "dim": {"type": "integer", "minimum": 1},
        "terms": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["exp"],
                "properties": {
                    "exp": {"type": "array", "items": {"type": "integer", "minimum": 0}},
                    "re": {"type": "number"},
                    "im": {"type": "number"},
                },
            },
        },
    },
}
_MAP = {
    "type": "object",
    "required": ["components"],
    "properties": {"components": {"type": "array", "minItems": 1, "items": _POLY}},
}
_GROUP = {
    "type": "object",
    "required": ["dim", "generators"],
    "properties": {"dim": {"type": "integer", "minimum": 1}, "generators": {"type": "array"}},
}
_PSEUDO = {
    "type": "object",
    "required": ["n", "p"],
    "properties": {
        "n": {"type": "integer", "minimum": 1},
        "p": {"type": "array", "minItems": 1, "items": {"type": "integer", "minimum": 2}},
    },
}
_POS = {"type": "integer", "minimum": 1}

PAYLOAD_SCHEMAS = {
    "closure": {"required": ["group"], "properties": {"group": _GROUP, "order_cap": _POS}},
    "invariants": {
        "required": ["group"],
        "properties": {"group": _GROUP, "degree_cap": _POS, "order_cap": _POS},
    },
    "multiplicity": {
        "required": ["F"],
        "properties": {"F": _MAP, "pseudoellipsoid": _PSEUDO, "trials": _POS, "starts": _POS},
    },
    "orbit-check": {
        "required": ["F", "group", "pseudoellipsoid"],
        "properties": {"F": _MAP, "group": _GROUP, "pseudoellipsoid": _PSEUDO, "trials": _POS, "order_cap": _POS},
    },
    "factorize": {
        "required": ["F", "group", "pseudoellipsoid"],
        "properties": {
            "F": _MAP,
            "group": _GROUP,
            "pseudoellipsoid": _PSEUDO,
            "degree_cap": _POS,
            "multiplicity_trials": {"type": "integer", "minimum": 0},
            "order_cap": _POS,
        },
    },
    "verify": {
        "required": ["psi", "F", "group", "pseudoellipsoid"],
        "properties": {
            "psi": _MAP,
            "F": _MAP,
            "group": _GROUP,
            "pseudoellipsoid": _PSEUDO,
            "trials": _POS,
            "order_cap": _POS,
        },
    },
}

JOB_SCHEMA = {
    "type": "object",
    "required": ["command"],
    "properties": {
        "command": {"enum": list(COMMANDS)},
        "payload": {"type": "object"},
        "seed": {"type": "integer", "minimum": 0},
        "tolerances": {
            "type": "object",
            "properties": {k: {"type": "number", "exclusiveMinimum": 0} for k in _OVERRIDABLE},
            "additionalProperties": False,
        },
    },
}


class JobError(ValueError):
    """The job failed validation; nothing was computed."""


@dataclass
class Job:
    command: str
    payload: dict
    seed: int
    tolerances: dict

    def echo(self) -> dict:
        return {
            "command": self.command,
            "payload": self.payload,
            "seed": self.seed,
            "tolerances": {k: self.tolerances[k] for k in _OVERRIDABLE},
        }


def parse_job(raw: Any) -> Job:
    """Validate a raw job document; raises :class:`JobError`."""
    if not isinstance(raw, dict):
        raise JobError("job must be a JSON object")
    try:
        jsonschema.validate(raw, JOB_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise JobError(f"job: {exc.message}") from None
    command = raw["command"]
    if "payload" in raw:
        payload = copy.deepcopy(raw["payload"])
    else:
        payload = {k: copy.deepcopy(v) for k, v in raw.items() if k not in ("command", "seed", "tolerances")}
    schema = dict(PAYLOAD_SCHEMAS[command], type="object")
    try:
        jsonschema.validate(payload, schema)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "payload"
        raise JobError(f"{command} payload at {where}: {exc.message}") from None
    tolerances = dict(DEFAULT_TOLERANCES)
    tolerances.update(raw.get("tolerances", {}))
    return Job(command, payload, int(raw.get("seed", DEFAULT_SEED)), tolerances)


# payload decoding; all raise JobError so bad input never reaches the solvers

def _decode_map(data, name) -> PolyMap:
    try:
        return PolyMap.from_json(data)
    except (ValueError, KeyError, TypeError) as exc:
        raise JobError(f"{name}: {exc}") from None


def _decode_generators(data) -> tuple[int, list[np.ndarray]]:
    dim = data["dim"]
    gens = []
    for i, g in enumerate(data["generators"]):
        try:
            gens.append(unigroup.check_unitary(unigroup.matrix_from_json(g, dim)))
        except ValueError as exc:
            raise JobError(f"group generator {i}: {exc}") from None
    return dim, gens


def _decode_domain(data) -> Pseudoellipsoid:
    try:
        return Pseudoellipsoid.from_json(data)
    except ValueError as exc:
        raise JobError(f"pseudoellipsoid: {exc}") from None


def _decode(job: Job) -> dict:
    p = job.payload
    out: dict = {}
    if "group" in p:
        out["group"] = _decode_generators(p["group"])
    for key in ("F", "psi"):
        if key in p:
            out[key] = _decode_map(p[key], key)
    if "pseudoellipsoid" in p:
        out["E"] = _decode_domain(p["pseudoellipsoid"])
    dims = {}
    if "group" in out:
        dims["group"] = out["group"][0]
    if "E" in out:
        dims["pseudoellipsoid"] = out["E"].n
    if "F" in out:
        F = out["F"]
        if not F.is_square():
            raise JobError(f"F must be square, got {F.coarity} components in {F.arity} variables")
        dims["F"] = F.arity
    if "psi" in out:
        psi = out["psi"]
        if not psi.is_square():
            raise JobError("psi must be square")
        dims["psi"] = psi.arity
    if len(set(dims.values())) > 1:
        raise JobError(f"dimension mismatch: {dims}")
    return out


def _closure(decoded, job) -> unigroup.FiniteUnitaryGroup:
    dim, gens = decoded["group"]
    cap = job.payload.get("order_cap", unigroup.DEFAULT_ORDER_CAP)
    if not gens:
        return unigroup.trivial_group(dim)
    return unigroup.closure(gens, order_cap=cap, dim=dim)


def _solver_config(job: Job) -> SolverConfig:
    t = job.tolerances
    return SolverConfig(
        starts=job.payload.get("starts"),
        residual_tol=t["newton_residual"],
        dedup_tol=t["dedup"],
        seed=job.seed,
    )


def _check(passed: bool, residual=None) -> dict:
    out = {"passed": bool(passed)}
    if residual is not None:
        out["residual"] = residual
    return out


# command handlers: each returns (result, checks, summary line)

def _run_closure(job, d):
    G = _closure(d, job)
    ref = unigroup.reflection_subgroup(G)
    reps = unigroup.coset_decomposition(G, ref)
    result = G.to_json()
    result["reflection_subgroup_order"] = ref.order
    result["coset_representatives"] = [unigroup.matrix_to_json(h) for h in reps]
    checks = {
        "lagrange": _check(G.order % ref.order == 0),
        "reflection_subgroup_normal": _check(ref.is_normal_in(G)),
        "coset_count": _check(len(reps) * ref.order == G.order),
    }
    summary = f"closure: |G| = {G.order}, {result['reflection_count']} reflections, |G_ref| = {ref.order}"
    return result, checks, summary


def _run_invariants(job, d):
    G = _closure(d, job)
    ref = unigroup.reflection_subgroup(G)
    B = basic_invariants(ref, job.payload.get("degree_cap", chevalley.DEFAULT_DEGREE_CAP))
    report = verify_chevalley(B, ref, seed=job.seed)
    result = B.to_json()
    result["generators_text"] = [str(g) for g in B.generators]
    result["group_order_input"] = G.order
    result["verification"] = report.to_json()
    checks = {
        "invariance": _check(report.checks["invariance"], report.invariance_residual),
        "degree_product": _check(report.checks["degree_product"]),
        "reflection_count": _check(report.checks["reflection_count"]),
        "jacobian_nonzero": _check(report.checks["jacobian_nonzero"], report.jacobian_max_abs),
    }
    summary = f"invariants: degrees {list(B.degrees)}, generators {result['generators_text']}"
    return result, checks, summary


def _run_multiplicity(job, d):
    F = d["F"]
    sampler = propermap.domain_sampler(d["E"]) if "E" in d else None
    est = propermap.multiplicity_estimate(F, job.payload.get("trials", 20), _solver_config(job), sampler)
    result = est.to_json()
    result["bezout_number"] = propermap.bezout_number(F)
    checks = {"histogram_constant": _check(est.consistent)}
    summary = f"multiplicity: {est.multiplicity} (histogram {dict(sorted(est.histogram.items()))})"
    return result, checks, summary


def _run_orbit_check(job, d):
    G = _closure(d, job)
    rep = propermap.orbit_check(
        d["F"], G, d["E"], job.payload.get("trials", 100), _solver_config(job), tol=job.tolerances["match"]
    )
    result = rep.to_json()
    checks = {
        "no_failures": _check(rep.failures == 0),
        "fiber_residual": _check(rep.max_fiber_residual <= 1e-8, rep.max_fiber_residual),
    }
    summary = (
        f"orbit-check: {rep.passes} pass, {rep.failures} fail, "
        f"{rep.inconclusive} inconclusive over {rep.trials} trials"
    )
    return result, checks, summary


def _run_factorize(job, d):
    G = _closure(d, job)
    E = d["E"]
    target = factorize.target_map(G, E)
    rep = factorize.solve_psi(
        d["F"],
        G,
        E,
        degree_cap=job.payload.get("degree_cap", 6),
        seed=job.seed,
        tol=job.tolerances["identity"],
        multiplicity_trials=job.payload.get("multiplicity_trials", 0),
        config=_solver_config(job),
        target=target,
    )
    result = rep.to_json()
    result["target"] = target.to_json()
    result["target_text"] = [str(c) for c in target]
    checks = {"identity": _check(rep.found, rep.residual)}
    if rep.multiplicities is not None:
        checks["multiplicity_product"] = _check(rep.multiplicities["product_holds"])
    if rep.found:
        summary = f"factorize: found psi = ({', '.join(result['psi_text'])}), residual {rep.residual:.3g}"
    else:
        summary = f"factorize: {rep.status} (degree cap {rep.degree_cap_used}); inconclusive"
    return result, checks, summary


def _run_verify(job, d):
    G = _closure(d, job)
    rep = factorize.verify_factorization(
        d["psi"],
        d["F"],
        G,
        d["E"],
        trials=job.payload.get("trials", 20),
        seed=job.seed,
        tol=job.tolerances["identity"],
        config=_solver_config(job),
    )
    result = rep.to_json()
    checks = {
        "identity": _check(rep.identity_passed, result["identity"]["max_residual"]),
        "boundary": _check(rep.boundary["passed"], rep.boundary["max_gap"]),
    }
    if rep.multiplicities is not None:
        checks["multiplicity_product"] = _check(rep.multiplicities["product_holds"])
    summary = f"verify: {'passed' if rep.passed else 'FAILED'}"
    if rep.first_failure is not None:
        summary += f" (identity fails at sample {rep.first_failure})"
    return result, checks, summary


HANDLERS = {
    "closure": _run_closure,
    "invariants": _run_invariants,
    "multiplicity": _run_multiplicity,
    "orbit-check": _run_orbit_check,
    "factorize": _run_factorize,
    "verify": _run_verify,
}


def run(raw_job: Any) -> tuple[int, dict, str]:
    """Run one job.  Returns ``(exit_code, report, summary)``."""
    try:
        job = parse_job(raw_job)
        decoded = _decode(job)
    except JobError as exc:
        echo = raw_job if isinstance(raw_job, dict) else None
        return EXIT_SCHEMA, {"status": "schema-error", "error": str(exc), "input": echo}, f"schema error: {exc}"
    base = {
        "command": job.command,
        "seed": job.seed,
        "tolerances": dict(job.tolerances),
        "input": job.echo(),
    }
    try:
        result, checks, summary = HANDLERS[job.command](job, decoded)
    except (GroupNotFiniteError, InvariantSearchError, NoPreimageError, np.linalg.LinAlgError, ValueError) as exc:
        report = dict(base, status="computation-error", error=f"{type(exc).__name__}: {exc}")
        return EXIT_COMPUTE, report, f"computation error: {exc}"
    status = result.get("status", "ok") if job.command == "factorize" else "ok"
    report = dict(base, status=status, checks=checks, result=result)
    return EXIT_OK, report, summary


def _fmt_float(x: float) -> str:
    if math.isnan(x) or math.isinf(x):
        return json.dumps(str(x))
    s = format(x, ".17g")
    if "e" not in s and "." not in s and "n" not in s:
        s += ".0"
    return s


def dumps(obj: Any, indent: int = 2, _level: int = 0) -> str:
    """JSON with insertion-ordered keys and floats at 17 significant digits."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float, bool, np.number)) or v is None for v in obj):
            return "[" + ", ".join(dumps(v, indent, _level + 1) for v in obj) + "]"
        items = [pad + dumps(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _apply_flags(raw: Any, args: argparse.Namespace) -> Any:
    if not isinstance(raw, dict):
        return raw
    raw = copy.deepcopy(raw)
    if args.command:
        raw["command"] = args.command
    target = raw.get("payload") if isinstance(raw.get("payload"), dict) else raw
    if args.seed is not None:
        raw["seed"] = args.seed
    if args.tol is not None:
        raw.setdefault("tolerances", {})["identity"] = args.tol
    for flag, key in (("degree_cap", "degree_cap"), ("trials", "trials"), ("order_cap", "order_cap")):
        value = getattr(args, flag)
        if value is not None:
            target[key] = value
    return raw


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="reflfactor", description="Run one reflection-group / proper-map job.")
    ap.add_argument("job", nargs="?", default="-", help="job JSON file, or - for stdin")
    ap.add_argument("--command", choices=COMMANDS, help="override the job's command")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--tol", type=float, help="identity-test tolerance")
    ap.add_argument("--degree-cap", type=int)
    ap.add_argument("--trials", type=int)
    ap.add_argument("--order-cap", type=int)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.job == "-":
            raw = json.load(sys.stdin)
        else:
            with open(args.job) as fh:
                raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"schema error: cannot read job: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    code, report, summary = run(_apply_flags(raw, args))
    sys.stdout.write(dumps(report) + "\n")
    print(summary, file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
