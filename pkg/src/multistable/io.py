"""Scenario and protocol files, CSV exports and their readers.

Scenarios and protocols are JSON documents carrying ``"v": 1``.  CSV files
write floats with ``repr`` so that reading them back is lossless; vector
valued columns join their entries with ``;``.
"""

from __future__ import annotations

import csv
import io as _io
import json
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence, TextIO

import numpy as np
from jsonschema import Draft202012Validator

from .errors import MultistableError, StructureError
from .protocol import Policy, Protocol, Transcript
from .scenarios import BUILTIN
from .structure import Hyperrectangle, InformationStructure, validate_structure

FORMAT_VERSION = 1


class ParseError(MultistableError):
    """Malformed scenario or protocol document."""


def _schema(name: str) -> dict:
    return json.loads(resources.files("multistable.data").joinpath(name).read_text("utf-8"))


def _load_json(text: str, source: str, schema_name: str) -> dict:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    validator = Draft202012Validator(_schema(schema_name))
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        where = "/".join(str(p) for p in err.absolute_path) or "<root>"
        raise ParseError(f"{source}: field {where}: {err.message}")
    return doc


def _hashable(label):
    return tuple(_hashable(v) for v in label) if isinstance(label, list) else label


def _jsonable(label):
    if isinstance(label, tuple):
        return [_jsonable(v) for v in label]
    if isinstance(label, np.generic):
        return label.item()
    return label


# ---------------------------------------------------------------------------
# scenarios


def scenario_from_dict(doc: dict) -> InformationStructure:
    raw = {
        "agents": [[_hashable(v) for v in a] for a in doc["agents"]],
        "outcomes": [_hashable(v) for v in doc["outcomes"]],
        "cells": [
            {**c, "signals": [_hashable(v) for v in c["signals"]]} for c in doc["cells"]
        ],
    }
    return validate_structure(raw)


def parse_scenario_text(text: str, source: str = "<scenario>") -> InformationStructure:
    doc = _load_json(text, source, "scenario.schema.json")
    try:
        return scenario_from_dict(doc)
    except StructureError as exc:
        raise StructureError(f"{source}: {exc}") from None


def parse_scenario(path) -> InformationStructure:
    path = Path(path)
    return parse_scenario_text(path.read_text("utf-8"), str(path))


def scenario_to_dict(theta: InformationStructure, name: str | None = None) -> dict:
    cells = []
    for idx in np.ndindex(*theta.shape):
        cells.append(
            {
                "signals": [_jsonable(theta.signal_spaces[i][k]) for i, k in enumerate(idx)],
                "weight": float(theta.weights[idx]),
                "outcome_probs": [float(v) for v in theta.outcome_probs[idx]],
            }
        )
    doc = {"v": FORMAT_VERSION}
    if name:
        doc["name"] = name
    doc["agents"] = [[_jsonable(v) for v in s] for s in theta.signal_spaces]
    doc["outcomes"] = [_jsonable(v) for v in theta.outcomes]
    doc["cells"] = cells
    return doc


def dump_scenario(theta: InformationStructure, path=None, name: str | None = None) -> str:
    text = json.dumps(scenario_to_dict(theta, name), indent=2) + "\n"
    if path is not None:
        Path(path).write_text(text, "utf-8")
    return text


def bundled_path(name: str) -> Path | None:
    p = resources.files("multistable.data").joinpath(f"{name}.json")
    return Path(str(p)) if p.is_file() else None


def load_scenario(name: str) -> InformationStructure:
    """A scenario file path, a bundled scenario file name, or a builtin builder name."""
    p = Path(name)
    if p.is_file():
        return parse_scenario(p)
    bundled = bundled_path(name)
    if bundled is not None:
        return parse_scenario(bundled)
    if name in BUILTIN:
        return BUILTIN[name]()
    raise ParseError(f"no scenario file or builtin named {name!r}")


# ---------------------------------------------------------------------------
# protocols


def _rect_from_labels(theta: InformationStructure, subsets) -> Hyperrectangle:
    return theta.rect([[_hashable(v) for v in b] for b in subsets])


def protocol_from_dict(doc: dict, theta: InformationStructure) -> Protocol:
    policies = []
    for p in doc["policies"]:
        agent = int(p["agent"])
        if not 0 <= agent < theta.n:
            raise ParseError(f"policy for agent {agent}: structure has {theta.n} agents")
        plan = None
        if "plan" in p:
            plan = {}
            for entry in p["plan"]:
                h = _rect_from_labels(theta, entry["rect"])
                plan[h] = tuple(
                    tuple(sorted(theta.signal_index(agent, _hashable(v)) for v in blk))
                    for blk in entry["blocks"]
                )
        outcome = p.get("outcome", theta.outcomes[-1])
        outcome_idx = theta.outcomes.index(_hashable(outcome)) if _hashable(outcome) in theta.outcomes else None
        if outcome_idx is None:
            raise ParseError(f"policy for agent {agent}: unknown outcome {outcome!r}")
        policies.append(
            Policy(
                agent,
                p.get("kind", "full-reveal"),
                tau=float(p.get("tau", 0.5)),
                outcome=outcome_idx,
                strict=bool(p.get("strict", False)),
                plan=plan,
                stop=p.get("stop", "default"),
                stop_tolerance=float(doc.get("stop_tolerance", 1e-9)),
            )
        )
    order = doc.get("order")
    seed = None
    if isinstance(order, dict):
        seed = int(order["seed"])
        order = None
    return Protocol(
        tuple(policies),
        order=None if order is None else tuple(order),
        seed=seed,
        max_rounds=int(doc.get("max_rounds", 20)),
        beta=float(doc.get("beta", 1.0)),
    )


def parse_protocol_text(text: str, theta: InformationStructure, source: str = "<protocol>") -> Protocol:
    doc = _load_json(text, source, "protocol.schema.json")
    try:
        return protocol_from_dict(doc, theta)
    except MultistableError as exc:
        raise ParseError(f"{source}: {exc}") from None


def parse_protocol(path, theta: InformationStructure) -> Protocol:
    """Protocol file; signal and outcome labels are resolved against ``theta``."""
    path = Path(path)
    if not path.is_file():
        bundled = bundled_path(str(path))
        if bundled is None:
            raise ParseError(f"no protocol file {path}")
        path = bundled
    return parse_protocol_text(path.read_text("utf-8"), theta, str(path))


def protocol_to_dict(protocol: Protocol, theta: InformationStructure) -> dict:
    def labels(i, values):
        return [_jsonable(theta.signal_spaces[i][k]) for k in values]

    pols = []
    for p in protocol.policies:
        d = {"agent": p.agent, "kind": p.kind}
        if p.kind == "threshold":
            d.update(tau=p.tau, outcome=_jsonable(theta.outcomes[p.outcome]), strict=p.strict)
        if p.plan is not None:
            d["plan"] = [
                {
                    "rect": [labels(i, b) for i, b in enumerate(h.subsets)],
                    "blocks": [labels(p.agent, blk) for blk in blocks],
                }
                for h, blocks in sorted(p.plan.items())
            ]
        if p.stop != "default":
            d["stop"] = p.stop
        pols.append(d)
    order = list(protocol.order) if protocol.order is not None else {"random": True, "seed": protocol.seed}
    return {
        "v": FORMAT_VERSION,
        "order": order,
        "beta": protocol.beta,
        "max_rounds": protocol.max_rounds,
        "stop_tolerance": protocol.policies[0].stop_tolerance,
        "policies": pols,
    }


def dump_protocol(protocol: Protocol, theta: InformationStructure, path=None) -> str:
    text = json.dumps(protocol_to_dict(protocol, theta), indent=2) + "\n"
    if path is not None:
        Path(path).write_text(text, "utf-8")
    return text


# ---------------------------------------------------------------------------
# text helpers


def format_rect(theta: InformationStructure, h: Hyperrectangle) -> str:
    return h.format(theta)


def parse_rect(theta: InformationStructure, text: str) -> Hyperrectangle:
    """Inverse of :func:`format_rect`, e.g. ``{1,2}x{0,1}``."""
    parts = text.strip().split("}x{")
    if len(parts) != theta.n or not text.strip().startswith("{") or not text.strip().endswith("}"):
        raise ParseError(f"cannot read rectangle {text!r}")
    parts[0] = parts[0][1:]
    parts[-1] = parts[-1][:-1]
    return theta.rect([[v for v in p.split(",") if v != ""] for p in parts])


def parse_stimulus(theta: InformationStructure, text: str) -> tuple[int, ...]:
    return theta.stimulus([v.strip() for v in text.split(",")])


def _num(v) -> str:
    return repr(float(v))


def _vec(values) -> str:
    return ";".join(_num(v) for v in values)


def read_vec(text: str) -> np.ndarray:
    return np.array([float(v) for v in text.split(";")]) if text else np.zeros(0)


def _write(header: Sequence[str], rows: Iterable[Sequence], out: TextIO | None) -> str:
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    text = buf.getvalue()
    if out is not None:
        out.write(text)
    return text


def read_csv(text: str) -> list[dict[str, str]]:
    return list(csv.DictReader(_io.StringIO(text)))


def _outcome_names(theta: InformationStructure) -> list[str]:
    return [str(_jsonable(w)) for w in theta.outcomes]


# ---------------------------------------------------------------------------
# CSV exports


def transcript_csv(theta: InformationStructure, tr: Transcript, out: TextIO | None = None) -> str:
    """Columns: t, speaker, block, rect, q_<w>..., reward_bits_<w>..., cost_bits."""
    names = _outcome_names(theta)
    header = ["t", "speaker", "block", "rect"]
    header += [f"q_{w}" for w in names] + [f"reward_bits_{w}" for w in names] + ["cost_bits"]
    rows = []
    for r in tr.rounds:
        block = "{" + ",".join(str(theta.signal_spaces[r.speaker][k]) for k in r.block) + "}"
        rows.append(
            [r.t, r.speaker, block, r.rect.format(theta)]
            + [_num(v) for v in r.belief]
            + [_num(v) for v in r.reward_bits]
            + [_num(r.cost_bits)]
        )
    return _write(header, rows, out)


def read_transcript_csv(theta: InformationStructure, text: str) -> list[dict]:
    names = _outcome_names(theta)
    out = []
    for row in read_csv(text):
        out.append(
            {
                "t": int(row["t"]),
                "speaker": int(row["speaker"]),
                "block": row["block"],
                "rect": parse_rect(theta, row["rect"]),
                "q": np.array([float(row[f"q_{w}"]) for w in names]),
                "reward_bits": np.array([float(row[f"reward_bits_{w}"]) for w in names]),
                "cost_bits": float(row["cost_bits"]),
            }
        )
    return out


def trace_csv(trace, out: TextIO | None = None) -> str:
    """Columns: step, move, objective, accuracy, cost."""
    rows = [[s.step, s.move, _num(s.objective), _num(s.accuracy), _num(s.cost)] for s in trace]
    return _write(["step", "move", "objective", "accuracy", "cost"], rows, out)


def read_trace_csv(text: str) -> list[dict]:
    return [
        {
            "step": int(r["step"]),
            "move": r["move"],
            "objective": float(r["objective"]),
            "accuracy": float(r["accuracy"]),
            "cost": float(r["cost"]),
        }
        for r in read_csv(text)
    ]


def witnesses_csv(theta: InformationStructure, witnesses, out: TextIO | None = None) -> str:
    """Columns: h, h_prime, tv, overlap, overlap_prime, q_h, q_h_prime (``;``-joined)."""
    rows = [
        [
            w.h.format(theta),
            w.h_prime.format(theta),
            _num(w.tv),
            _num(w.overlap[0]),
            _num(w.overlap[1]),
            _vec(w.q_h),
            _vec(w.q_h_prime),
        ]
        for w in witnesses
    ]
    return _write(["h", "h_prime", "tv", "overlap", "overlap_prime", "q_h", "q_h_prime"], rows, out)


def read_witnesses_csv(theta: InformationStructure, text: str) -> list[dict]:
    return [
        {
            "h": parse_rect(theta, r["h"]),
            "h_prime": parse_rect(theta, r["h_prime"]),
            "tv": float(r["tv"]),
            "overlap": (float(r["overlap"]), float(r["overlap_prime"])),
            "q_h": read_vec(r["q_h"]),
            "q_h_prime": read_vec(r["q_h_prime"]),
        }
        for r in read_csv(text)
    ]


def witnesses_json(theta: InformationStructure, witnesses) -> str:
    """Witnesses as structured text records."""
    recs = [
        {
            "h": w.h.format(theta),
            "h_prime": w.h_prime.format(theta),
            "q_h": [float(v) for v in w.q_h],
            "q_h_prime": [float(v) for v in w.q_h_prime],
            "tv": w.tv,
            "overlap": list(w.overlap),
            "epsilon": w.epsilon,
            "d": w.d,
        }
        for w in witnesses
    ]
    return json.dumps({"v": FORMAT_VERSION, "witnesses": recs}, indent=2) + "\n"


def switching_matrix_csv(
    theta: InformationStructure, rects: Sequence[Hyperrectangle], matrix: np.ndarray, out: TextIO | None = None
) -> str:
    """Square matrix; the first column and the header name the rectangles."""
    names = [h.format(theta) for h in rects]
    rows = [[names[a]] + [_num(v) for v in matrix[a]] for a in range(len(rects))]
    return _write(["rect"] + names, rows, out)


def read_switching_matrix_csv(theta: InformationStructure, text: str):
    rows = list(csv.reader(_io.StringIO(text)))
    rects = [parse_rect(theta, name) for name in rows[0][1:]]
    matrix = np.array([[float(v) for v in r[1:]] for r in rows[1:]]).reshape(len(rects), len(rects))
    return rects, matrix


def trades_csv(session, out: TextIO | None = None) -> str:
    """Columns: turn, trader, agent, s_before, s_after, cost, price_after, reward."""
    rows = [
        [
            t.turn,
            t.trader,
            t.agent,
            _vec(t.record.s_before),
            _vec(t.record.s_after),
            _num(t.record.cash_cost),
            _vec(t.price_after),
            _num(t.reward),
        ]
        for t in session.trades
    ]
    header = ["turn", "trader", "agent", "s_before", "s_after", "cost", "price_after", "reward"]
    return _write(header, rows, out)


def read_trades_csv(text: str) -> list[dict]:
    return [
        {
            "turn": int(r["turn"]),
            "trader": int(r["trader"]),
            "agent": int(r["agent"]),
            "s_before": read_vec(r["s_before"]),
            "s_after": read_vec(r["s_after"]),
            "cost": float(r["cost"]),
            "price_after": read_vec(r["price_after"]),
            "reward": float(r["reward"]),
        }
        for r in read_csv(text)
    ]


def heatmap_matrix(theta: InformationStructure) -> np.ndarray:
    """Pr[W = second outcome | x, y]; rows follow agent 0's signals."""
    if theta.n != 2 or theta.n_outcomes != 2:
        raise MultistableError("heatmaps need exactly two agents and a binary target")
    return np.array(theta.outcome_probs[..., 1])


def export_heatmap(theta: InformationStructure, path=None) -> str:
    m = heatmap_matrix(theta)
    header = ["x\\y"] + [str(_jsonable(v)) for v in theta.signal_spaces[1]]
    rows = [[str(_jsonable(lab))] + [_num(v) for v in m[k]] for k, lab in enumerate(theta.signal_spaces[0])]
    text = _write(header, rows, None)
    if path is not None:
        Path(path).write_text(text, "utf-8")
    return text


def read_heatmap(text: str) -> np.ndarray:
    rows = list(csv.reader(_io.StringIO(text)))
    return np.array([[float(v) for v in r[1:]] for r in rows[1:]])
