"""JSON document formats.

Complex numbers serialize as [re, im] pairs, events as sorted history
index arrays, matrices as nested lists.  A document field that expects a
sub-document also accepts a string, read as a path relative to the
referencing file.
"""

from __future__ import annotations

import json
import os
from typing import Any

import numpy as np

from .causal_order import CausalOrder
from .decoherence import DecoherenceFunctional
from .histories import Event, HistorySpace
from .patching import (
    CorrelationTable,
    JointDcf,
    SettingScenario,
    SettingTheory,
)
from .sk_model import SkCircuitConfig, SkGate, gen_sk_circuit

SETTING_NAMES = {"ab": (0, 0), "ab'": (0, 1), "a'b": (1, 0), "a'b'": (1, 1)}
SETTING_LABELS = {v: k for k, v in SETTING_NAMES.items()}

SCHEMAS = {
    "historyspace": {
        "points": ["string"],
        "alphabets": {"<point>": "int"},
        "histories": [["int"]],
        "labels": ["string (optional)"],
    },
    "order": {"points": ["string"], "covers": [["string", "string"]]},
    "dcf": {
        "space": "historyspace | path",
        "matrix": "[[ [re, im], ... ]] (dense mode)",
        "skmodel": "skmodel | path (lazy mode, instead of matrix)",
    },
    "skmodel": {
        "L": "int sites",
        "T": "int gate layers",
        "q": "int qudit dimension",
        "psi": "[[re, im], ...] per first-slice configuration "
               "(or a list of such rows for a mixed state)",
        "gates": [{"t": "layer", "sites": ["int"], "u": "[[ [re, im], ... ]]"}],
        "t_f": "int truncation slice (optional, default T)",
        "regions": {"<site>,<t>": "Z|A|B|-"},
    },
    "scenario": {
        "z": ["point"],
        "a": ["point"],
        "b": ["point"],
        "theories": {
            "<ab|ab'|a'b|a'b'>": {
                "order": "order | path",
                "dcf": "dcf | path",
                "beam_a": "[[history index, ...] per outcome]",
                "beam_b": "[[history index, ...] per outcome]",
            }
        },
    },
    "table": {"<ab|ab'|a'b|a'b'>": "[[probability, ...], ...]"},
    "jointdcf": {
        "slots": "[na, na, nb, nb, nk]",
        "ordering": ["a|ap|b|bp"],
        "matrix": "[[ [re, im], ... ]] over flattened slots",
    },
}


def complex_to_json(z: complex) -> list[float]:
    return [float(np.real(z)), float(np.imag(z))]


def matrix_to_json(m: np.ndarray) -> list:
    return [[complex_to_json(z) for z in row] for row in np.asarray(m)]


def matrix_from_json(rows) -> np.ndarray:
    return np.array(
        [[complex(c[0], c[1]) for c in row] for row in rows], dtype=complex
    )


def _resolve(doc, base_dir: str):
    if isinstance(doc, str):
        path = os.path.join(base_dir, doc)
        with open(path) as fh:
            return json.load(fh), os.path.dirname(path)
    return doc, base_dir


# -- history spaces ----------------------------------------------------------

def space_to_json(space: HistorySpace) -> dict:
    doc = {
        "points": list(space.points),
        "alphabets": {p: int(space.alphabets[p]) for p in space.points},
        "histories": [list(map(int, h)) for h in space.histories],
    }
    if space.labels is not None:
        doc["labels"] = list(space.labels)
    return doc


def space_from_json(doc: dict) -> HistorySpace:
    return HistorySpace(
        points=tuple(doc["points"]),
        histories=tuple(tuple(int(v) for v in h) for h in doc["histories"]),
        labels=tuple(doc["labels"]) if doc.get("labels") else None,
        alphabets=doc.get("alphabets"),
    )


def event_to_json(event: Event) -> list[int]:
    return sorted(event.indices())


def event_from_json(space: HistorySpace, indices) -> Event:
    return space.event_from_indices(int(i) for i in indices)


# -- causal orders -----------------------------------------------------------

def order_to_json(order: CausalOrder) -> dict:
    n = order.size
    strict = order.leq & ~np.eye(n, dtype=bool)
    covers = []
    for i in range(n):
        for j in range(n):
            if strict[i, j] and not (strict[i] & strict[:, j]).any():
                covers.append([order.points[i], order.points[j]])
    return {"points": list(order.points), "covers": covers}


def order_from_json(doc: dict) -> CausalOrder:
    return CausalOrder.from_covers(
        tuple(doc["points"]), [tuple(c) for c in doc["covers"]]
    )


# -- decoherence functionals --------------------------------------------------

def dcf_to_json(dcf: DecoherenceFunctional) -> dict:
    if not dcf.is_dense:
        raise ValueError("only dense functionals serialize directly; "
                         "lazy models serialize as skmodel documents")
    return {"space": space_to_json(dcf.space), "matrix": matrix_to_json(dcf.matrix)}


def dcf_from_json(doc: dict, base_dir: str = ".") -> DecoherenceFunctional:
    if "skmodel" in doc:
        sub, _ = _resolve(doc["skmodel"], base_dir)
        return gen_sk_circuit(sk_config_from_json(sub)).dcf
    space_doc, _ = _resolve(doc["space"], base_dir)
    return DecoherenceFunctional(
        space_from_json(space_doc), matrix=matrix_from_json(doc["matrix"])
    )


# -- circuit models -----------------------------------------------------------

def sk_config_to_json(cfg: SkCircuitConfig) -> dict:
    psi = cfg.psi
    psi_json = [[complex_to_json(z) for z in row] for row in psi]
    if cfg.mixed_rank == 1:
        psi_json = psi_json[0]
    doc = {
        "L": cfg.sites,
        "T": cfg.steps,
        "q": cfg.q,
        "psi": psi_json,
        "gates": [
            {"t": g.layer, "sites": list(g.sites), "u": matrix_to_json(g.matrix)}
            for g in cfg.gates
        ],
        "t_f": cfg.t_f,
    }
    if cfg.regions is not None:
        doc["regions"] = dict(cfg.regions)
    return doc


def sk_config_from_json(doc: dict) -> SkCircuitConfig:
    psi_raw = doc.get("psi")
    psi = None
    if psi_raw is not None:
        arr = np.asarray(psi_raw, dtype=float)
        if arr.ndim == 2:  # single branch of [re, im] pairs
            psi = arr[:, 0] + 1j * arr[:, 1]
        else:  # mixed state: rows of pairs
            psi = arr[:, :, 0] + 1j * arr[:, :, 1]
    gates = tuple(
        SkGate(int(g["t"]), tuple(int(s) for s in g["sites"]), matrix_from_json(g["u"]))
        for g in doc.get("gates", [])
    )
    return SkCircuitConfig(
        sites=int(doc["L"]),
        steps=int(doc["T"]),
        q=int(doc.get("q", 2)),
        psi=psi,
        gates=gates,
        t_f=doc.get("t_f"),
        regions=doc.get("regions"),
    )


# -- scenarios ----------------------------------------------------------------

def scenario_to_json(scenario: SettingScenario) -> dict:
    theories = {}
    for key, t in scenario.theories.items():
        theories[SETTING_LABELS[key]] = {
            "order": order_to_json(t.order),
            "dcf": dcf_to_json(t.dcf),
            "beam_a": [event_to_json(e) for e in t.beam_a],
            "beam_b": [event_to_json(e) for e in t.beam_b],
        }
    return {
        "z": list(scenario.z_points),
        "a": list(scenario.a_points),
        "b": list(scenario.b_points),
        "theories": theories,
    }


def scenario_from_json(doc: dict, base_dir: str = ".") -> SettingScenario:
    theories = {}
    for name, key in SETTING_NAMES.items():
        tdoc, tdir = _resolve(doc["theories"][name], base_dir)
        order_doc, _ = _resolve(tdoc["order"], tdir)
        dcf = dcf_from_json(
            _resolve(tdoc["dcf"], tdir)[0], tdir
        )
        theories[key] = SettingTheory(
            space=dcf.space,
            order=order_from_json(order_doc),
            dcf=dcf,
            beam_a=tuple(event_from_json(dcf.space, e) for e in tdoc["beam_a"]),
            beam_b=tuple(event_from_json(dcf.space, e) for e in tdoc["beam_b"]),
        )
    return SettingScenario(
        theories,
        tuple(doc["z"]),
        tuple(doc["a"]),
        tuple(doc["b"]),
    )


# -- tables and joints ---------------------------------------------------------

def table_to_json(table: CorrelationTable) -> dict:
    return {
        SETTING_LABELS[k]: [[float(x) for x in row] for row in v]
        for k, v in table.tables.items()
    }


def table_from_json(doc: dict) -> CorrelationTable:
    return CorrelationTable(
        {SETTING_NAMES[name]: np.array(doc[name], dtype=float) for name in doc}
    )


def joint_dcf_to_json(jdcf: JointDcf) -> dict:
    slots = list(jdcf.values.shape[:5])
    return {
        "slots": slots,
        "ordering": list(jdcf.ordering),
        "matrix": matrix_to_json(jdcf.flat()),
    }


def joint_dcf_from_json(doc: dict) -> JointDcf:
    slots = tuple(int(s) for s in doc["slots"])
    flat = matrix_from_json(doc["matrix"])
    return JointDcf(
        flat.reshape(slots + slots), tuple(doc.get("ordering", []) or
                                           ("a", "ap", "b", "bp"))
    )


def beam_dcfs_to_json(beam: dict) -> dict:
    out = {}
    for k, v in beam.items():
        arr = np.asarray(v)
        na, nb = arr.shape[0], arr.shape[1]
        out[SETTING_LABELS[k]] = {
            "slots": [na, nb],
            "matrix": matrix_to_json(arr.reshape(na * nb, na * nb)),
        }
    return out


def beam_dcfs_from_json(doc: dict) -> dict:
    out = {}
    for name, key in SETTING_NAMES.items():
        entry = doc[name]
        na, nb = (int(s) for s in entry["slots"])
        m = matrix_from_json(entry["matrix"])
        out[key] = m.reshape(na, nb, na, nb)
    return out


def dump_json(doc: Any, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_json(path: str) -> Any:
    with open(path) as fh:
        return json.load(fh)
