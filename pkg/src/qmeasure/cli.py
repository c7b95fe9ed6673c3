"""Command-line entry point.

Exit codes: 0 success or check passed, 2 input error, 3 check violation,
4 iteration or sampling budget exceeded.  Reports are deterministic
given identical inputs, tolerances, and seeds, and always embed the
tolerance and library version.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from ._linalg import Tolerance
from . import serialization as io
from .causality import (
    check_lon,
    check_poz,
    check_quantum_factorizability,
    check_spacelike_commutation,
)
from .decoherence import DecoherenceFunctional
from .patching import (
    SETTING_KEYS,
    CorrelationTable,
    chsh_value,
    check_no_signalling,
    classical_factorizability_residual,
    classical_marginal_residual,
    classical_patch,
    joint_feasibility,
    patch_marginal_residual,
    quantum_patch,
)
from .scenarios import (
    EprbConfig,
    gen_double_slit,
    gen_eprb,
    gen_ghz,
    gen_pr_box,
)
from .sk_model import (
    check_truncation_independence,
    decoupled_demo_config,
    gen_sk_circuit,
    sk_factorizability_demo,
)

OK, INPUT_ERROR, VIOLATION, BUDGET = 0, 2, 3, 4


class InputError(Exception):
    pass


def _load_doc(path: str):
    if not os.path.exists(path):
        raise InputError(f"no such input: {path}")
    return io.load_json(path), os.path.dirname(path)


def _load_model(path: str):
    """A model is a directory holding dcf.json and order.json, or a single
    JSON file with 'dcf' and 'order' fields (or an skmodel document)."""
    if os.path.isdir(path):
        dcf_doc, base = _load_doc(os.path.join(path, "dcf.json"))
        order_doc, _ = _load_doc(os.path.join(path, "order.json"))
        return io.dcf_from_json(dcf_doc, base), io.order_from_json(order_doc)
    doc, base = _load_doc(path)
    if "L" in doc and "T" in doc:  # bare skmodel
        model = gen_sk_circuit(io.sk_config_from_json(doc))
        return model.dcf, model.order
    if "dcf" in doc and "order" in doc:
        dcf_doc, dbase = io._resolve(doc["dcf"], base)
        order_doc, _ = io._resolve(doc["order"], base)
        return io.dcf_from_json(dcf_doc, dbase), io.order_from_json(order_doc)
    if "matrix" in doc or "skmodel" in doc:
        raise InputError("dcf document given; an order.json is also needed")
    raise InputError(f"cannot interpret {path} as a model")


def _load_scenario(path: str):
    if os.path.isdir(path):
        doc, base = _load_doc(os.path.join(path, "scenario.json"))
    else:
        doc, base = _load_doc(path)
    return io.scenario_from_json(doc, base)


def _emit(report: dict, args, to_stdout: bool = False) -> None:
    report = dict(report)
    report["version"] = __version__
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if getattr(args, "format", "json") == "text":
        lines = [f"{k}: {report[k]}" for k in sorted(report)]
        text = "\n".join(lines) + "\n"
    out = None if to_stdout else getattr(args, "out", None)
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _tol(args) -> Tolerance:
    return Tolerance(rel=args.tol)


def _parse_region_list(spec: str | None):
    if not spec:
        return None
    return [tuple(p for p in chunk.split(",") if p) for chunk in spec.split(";")]


# -- command handlers ---------------------------------------------------------

def cmd_validate(args) -> int:
    dcf, _ = _load_model(args.input)
    dcf = DecoherenceFunctional(
        dcf.space, matrix=dcf.matrix, branch=dcf.branch, tol=_tol(args)
    )
    report = dcf.validate_axioms(seed=args.seed)
    _emit(report.as_dict(), args)
    return OK if report.passed else VIOLATION


def cmd_hilbert(args) -> int:
    from .hilbert import build_event_space

    dcf, order = _load_model(args.input)
    points = tuple(args.region.split(",")) if args.region else None
    es = build_event_space(dcf, points)
    eig = np.linalg.eigvalsh((es.gram + es.gram.conj().T) / 2)
    _emit(
        {
            "atoms": len(es.atoms),
            "rank": es.rank,
            "universal_norm2": es.universal_norm2,
            "min_eigenvalue": float(eig.min()),
            "max_eigenvalue": float(eig.max()),
            "region": list(points) if points else "all",
            "tolerance": es.tol.rel,
        },
        args,
    )
    return OK


def cmd_poz(args) -> int:
    dcf, order = _load_model(args.input)
    regions = _parse_region_list(args.regions)
    region_arg = "exhaustive" if regions is None else [
        order.region(r) for r in regions
    ]
    report = check_poz(dcf, order, region_arg, tol=_tol(args))
    _emit(report.as_dict(), args)
    return OK if report.passed else VIOLATION


def cmd_lon(args) -> int:
    dcf, order = _load_model(args.input)
    regions = _parse_region_list(args.regions)
    region_arg = "exhaustive" if regions is None else [
        order.region(r) for r in regions
    ]
    report = check_lon(dcf, order, region_arg, tol=_tol(args))
    _emit(report.as_dict(), args)
    return OK if report.passed else VIOLATION


def cmd_commute(args) -> int:
    scenario = _load_scenario(args.input)
    tol = _tol(args)
    worst = {"commutator_norm": 0.0, "action_residual": 0.0}
    for key in SETTING_KEYS:
        t = scenario.theory(*key)
        z = t.order.region(scenario.z_points)
        a = t.order.region(scenario.a_points)
        b = t.order.region(scenario.b_points)
        for ea in t.beam_a:
            for eb in t.beam_b:
                rep = check_spacelike_commutation(
                    t.dcf, t.order, z, a, b, ea, eb, tol=tol
                )
                worst["commutator_norm"] = max(
                    worst["commutator_norm"], rep.commutator_norm
                )
                worst["action_residual"] = max(
                    worst["action_residual"], rep.action_residual
                )
    passed = max(worst.values()) <= tol.rel
    _emit({**worst, "passed": passed, "tolerance": tol.rel}, args)
    return OK if passed else VIOLATION


def cmd_factorizability(args) -> int:
    tol = _tol(args)
    if args.kind == "classical":
        scenario = _load_scenario(args.input)
        resid = classical_factorizability_residual(scenario, tol)
        passed = resid <= tol.rel
        _emit({"max_residual": resid, "passed": passed, "tolerance": tol.rel}, args)
        return OK if passed else VIOLATION
    dcf, order = _load_model(args.input)
    if not (args.z and args.a and args.b):
        raise InputError("quantum factorizability needs --z --a --b point lists")
    report = check_quantum_factorizability(
        dcf,
        order,
        order.region(args.z.split(",")),
        order.region(args.a.split(",")),
        order.region(args.b.split(",")),
        tol=tol,
        seed=args.seed,
    )
    _emit(report.as_dict(), args)
    if not report.exhaustive:
        return BUDGET
    return OK if report.passed else VIOLATION


def cmd_patch(args) -> int:
    scenario = _load_scenario(args.input)
    tol = _tol(args)
    if args.kind == "classical":
        jm = classical_patch(scenario, tol)
        resid = classical_marginal_residual(jm, scenario)
        doc = {
            "values": np.asarray(jm.values).tolist(),
            "slots": list(jm.values.shape),
            "marginal_residual": resid,
            "total": jm.total(),
            "tolerance": tol.rel,
        }
        if args.out:
            io.dump_json(doc, args.out)
            _emit(
                {"marginal_residual": resid, "total": jm.total(), "out": args.out},
                args,
                to_stdout=True,
            )
        else:
            _emit(doc, args)
        return OK
    ordering = tuple(args.ordering.split(",")) if args.ordering else ("a", "ap", "b", "bp")
    jdcf = quantum_patch(scenario, ordering=ordering, tol=tol)
    resid = max(patch_marginal_residual(jdcf, scenario, *k) for k in SETTING_KEYS)
    doc = io.joint_dcf_to_json(jdcf)
    doc["marginal_residual"] = resid
    doc["tolerance"] = tol.rel
    doc["version"] = __version__
    if args.out:
        io.dump_json(doc, args.out)
        _emit(
            {"marginal_residual": resid, "out": args.out, "tolerance": tol.rel},
            args,
            to_stdout=True,
        )
    else:
        _emit(doc, args)
    return OK if resid <= tol.rel else VIOLATION


def _table_from_input(path: str) -> CorrelationTable:
    if os.path.isdir(path) or path.endswith("scenario.json"):
        return _load_scenario(path).correlation_table()
    doc, _ = _load_doc(path)
    if "matrix" in doc and "slots" in doc:
        jdcf = io.joint_dcf_from_json(doc)
        tables = {}
        for key in SETTING_KEYS:
            marg = jdcf.setting_marginal(*key).sum(axis=(2, 5))
            na, nb = marg.shape[0], marg.shape[1]
            tab = np.zeros((na, nb))
            for i in range(na):
                for j in range(nb):
                    tab[i, j] = marg[i, j, i, j].real
            tables[key] = tab
        return CorrelationTable(tables)
    if "theories" in doc:
        return _load_scenario(path).correlation_table()
    return io.table_from_json(doc)


def cmd_chsh(args) -> int:
    table = _table_from_input(args.input)
    value = chsh_value(table)
    _emit({"chsh": value, "table": io.table_to_json(table)}, args)
    return OK


def cmd_nosignalling(args) -> int:
    path = args.input
    if os.path.isdir(path) or path.endswith("scenario.json"):
        source = _load_scenario(path)
    else:
        doc, _ = _load_doc(path)
        if "theories" in doc:
            source = _load_scenario(path)
        elif all(name in doc for name in io.SETTING_NAMES):
            first = doc[next(iter(io.SETTING_NAMES))]
            if isinstance(first, dict):
                source = io.beam_dcfs_from_json(doc)
            else:
                source = io.table_from_json(doc)
        else:
            raise InputError("cannot interpret input for no-signalling check")
    resid = check_no_signalling(source)
    passed = resid <= args.tol
    _emit({"max_residual": resid, "passed": passed, "tolerance": args.tol}, args)
    return OK if passed else VIOLATION


def cmd_feasibility(args) -> int:
    path = args.input
    if os.path.isdir(path) or path.endswith("scenario.json"):
        beam = _load_scenario(path).beam_dcfs()
    else:
        doc, _ = _load_doc(path)
        if "theories" in doc:
            beam = _load_scenario(path).beam_dcfs()
        elif any(isinstance(v, dict) for v in doc.values()):
            beam = io.beam_dcfs_from_json(doc)
        else:
            # probability tables: treat outcomes as classical records, so
            # the beam functionals are the diagonal embeddings
            table = io.table_from_json(doc)
            beam = {}
            for key, tab in table.tables.items():
                na, nb = tab.shape
                arr = np.zeros((na, nb, na, nb), dtype=complex)
                for i in range(na):
                    for j in range(nb):
                        arr[i, j, i, j] = tab[i, j]
                beam[key] = arr
    report = joint_feasibility(
        beam, budget=args.budget, gap_tol=args.gap_tol, tol=_tol(args), seed=args.seed
    )
    _emit(report.as_dict(), args)
    return OK if report.feasible else BUDGET


def cmd_gen(args) -> int:
    os.makedirs(args.out, exist_ok=True)
    if args.name == "double-slit":
        space, order, dcf = gen_double_slit(time_reversed=args.time_reversed)
        io.dump_json(io.dcf_to_json(dcf), os.path.join(args.out, "dcf.json"))
        io.dump_json(io.order_to_json(order), os.path.join(args.out, "order.json"))
    elif args.name == "eprb":
        cfg = EprbConfig()
        if args.config:
            doc, _ = _load_doc(args.config)
            kwargs = {}
            if "angles" in doc:
                kwargs["angles"] = tuple(float(a) for a in doc["angles"])
            if "flip_b" in doc:
                kwargs["flip_b"] = bool(doc["flip_b"])
            if "resolution_basis" in doc:
                kwargs["resolution_basis"] = io.matrix_from_json(doc["resolution_basis"])
            if "initial_state" in doc:
                kwargs["initial_state"] = np.array(
                    [complex(c[0], c[1]) for c in doc["initial_state"]]
                )
            cfg = EprbConfig(**kwargs)
        scenario = gen_eprb(cfg)
        io.dump_json(
            io.scenario_to_json(scenario), os.path.join(args.out, "scenario.json")
        )
    elif args.name == "pr":
        model, table = gen_pr_box()
        io.dump_json(io.table_to_json(table), os.path.join(args.out, "table.json"))
        io.dump_json(
            io.beam_dcfs_to_json(model.beam_dcfs),
            os.path.join(args.out, "beamdcfs.json"),
        )
        io.dump_json(io.dcf_to_json(model.dcf), os.path.join(args.out, "dcf.json"))
        io.dump_json(
            io.order_to_json(model.order), os.path.join(args.out, "order.json")
        )
    elif args.name == "ghz":
        model, event = gen_ghz()
        io.dump_json(io.dcf_to_json(model.dcf), os.path.join(args.out, "dcf.json"))
        io.dump_json(
            io.order_to_json(model.order), os.path.join(args.out, "order.json")
        )
        io.dump_json(
            {"ghz_event": io.event_to_json(event)},
            os.path.join(args.out, "events.json"),
        )
    else:
        raise InputError(f"unknown generator {args.name!r}")
    _emit({"generated": args.name, "out": args.out}, args, to_stdout=True)
    return OK


def cmd_sk(args) -> int:
    tol = _tol(args)
    if args.action == "fixture":
        cfg = decoupled_demo_config(steps=args.steps)
        io.dump_json(io.sk_config_to_json(cfg), args.out or "skmodel.json")
        _emit({"generated": "decoupled-demo", "steps": args.steps}, args, to_stdout=True)
        return OK
    if not args.input:
        raise InputError(f"sk {args.action} needs a circuit-model JSON input")
    doc, _ = _load_doc(args.input)
    cfg = io.sk_config_from_json(doc)
    if args.action == "factorizability":
        report = sk_factorizability_demo(cfg, tol=tol)
        _emit(report.as_dict(), args)
        if not report.exhaustive:
            return BUDGET
        return OK if report.passed else VIOLATION
    if args.action == "truncation":
        report = check_truncation_independence(
            cfg, args.tf1, args.tf2, seed=args.seed, tol=tol
        )
        _emit(report.as_dict(), args)
        return OK if report.passed else VIOLATION
    raise InputError(f"unknown sk action {args.action!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qmeasure",
        description="Quantum measure theory on finite history spaces: "
        "axiom validation, causality checks, and patching constructions.",
    )
    parser.add_argument("--schema", action="store_true", help="print the JSON schemas and exit")
    sub = parser.add_subparsers(dest="command")

    def common(p, with_seed=True):
        p.add_argument("--tol", type=float, default=1e-9, help="relative tolerance")
        p.add_argument("--out", help="write the report to this path")
        p.add_argument("--format", choices=("json", "text"), default="json")
        if with_seed:
            p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("validate", help="decoherence-functional axiom report")
    p.add_argument("input")
    common(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("hilbert", help="event Hilbert space rank report")
    p.add_argument("input")
    p.add_argument("--region", help="comma-separated point names")
    common(p)
    p.set_defaults(func=cmd_hilbert)

    p = sub.add_parser("poz", help="persistence-of-zero check")
    p.add_argument("input")
    p.add_argument("--regions", help="semicolon-separated comma-point lists")
    common(p)
    p.set_defaults(func=cmd_poz)

    p = sub.add_parser("lon", help="lack-of-novelty check")
    p.add_argument("input")
    p.add_argument("--regions", help="semicolon-separated past sets")
    common(p)
    p.set_defaults(func=cmd_lon)

    p = sub.add_parser("commute", help="spacelike event-operator commutation")
    p.add_argument("input")
    common(p)
    p.set_defaults(func=cmd_commute)

    p = sub.add_parser("factorizability", help="screening-off residuals")
    p.add_argument("kind", choices=("classical", "quantum"))
    p.add_argument("input")
    p.add_argument("--z")
    p.add_argument("--a")
    p.add_argument("--b")
    common(p)
    p.set_defaults(func=cmd_factorizability)

    p = sub.add_parser("patch", help="build a joint measure or functional")
    p.add_argument("kind", choices=("classical", "quantum"))
    p.add_argument("input")
    p.add_argument("--ordering", help="comma list of a,ap,b,bp")
    common(p)
    p.set_defaults(func=cmd_patch)

    p = sub.add_parser("chsh", help="CHSH value of a table, scenario, or joint")
    p.add_argument("input")
    common(p)
    p.set_defaults(func=cmd_chsh)

    p = sub.add_parser("nosignalling", help="marginal compatibility residual")
    p.add_argument("input")
    common(p)
    p.set_defaults(func=cmd_nosignalling)

    p = sub.add_parser("feasibility", help="PSD joint feasibility search")
    p.add_argument("input")
    p.add_argument("--budget", type=int, default=20000)
    p.add_argument("--gap-tol", type=float, default=1e-6)
    common(p)
    p.set_defaults(func=cmd_feasibility)

    p = sub.add_parser("gen", help="emit a built-in model as JSON")
    p.add_argument("name", choices=("double-slit", "eprb", "pr", "ghz"))
    p.add_argument("--config", help="generator configuration JSON")
    p.add_argument("--time-reversed", action="store_true")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--format", choices=("json", "text"), default="json")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_gen, out_is_dir=True)

    p = sub.add_parser("sk", help="circuit-model checks")
    p.add_argument("action", choices=("fixture", "factorizability", "truncation"))
    p.add_argument("input", nargs="?")
    p.add_argument("--steps", type=int, default=3)
    p.add_argument("--tf1", type=int, default=2)
    p.add_argument("--tf2", type=int, default=3)
    common(p)
    p.set_defaults(func=cmd_sk)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.schema:
        sys.stdout.write(json.dumps(io.SCHEMAS, indent=2, sort_keys=True) + "\n")
        return OK
    if not getattr(args, "command", None):
        parser.print_usage()
        return INPUT_ERROR
    try:
        return args.func(args)
    except InputError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return INPUT_ERROR
    except (ValueError, OSError, KeyError, json.JSONDecodeError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())
