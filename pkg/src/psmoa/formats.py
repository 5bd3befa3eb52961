"""Text file formats: scenarios, policies, schedules, fronts and result tables.

Scenario, policy and schedule files are YAML documents carrying a
``format`` field. Loading errors are raised as :class:`ConfigError` with the
file name and line of the offending entry.
"""

from __future__ import annotations

import csv
import io
import json
import os
import re
import tempfile
from pathlib import Path
from typing import Any, Iterable, List, Optional, Sequence

import numpy as np
import yaml

from .model import DataObject, Node, Scenario, WorkloadPhase
from .policy import (OBJECTIVE_NAMES, AdaptationParams, Condition, ConditionalRule, ConstraintRule,
                     PolicyError, PolicySpec, Signals)
from .runner import PolicySchedule, ScheduleEntry

SCENARIO_FORMAT = "psmoa-scenario/1"
POLICY_FORMAT = "psmoa-policy/1"
SCHEDULE_FORMAT = "psmoa-schedule/1"
FRONT_COLUMNS = ("f1_cost", "f2_time", "f3_neg_popularity", "f4_load")
RESULT_COLUMNS = ("algorithm", "scenario", "seed", "HV", "GD", "IGD")


class ConfigError(ValueError):
    def __init__(self, message: str, source: str = "<input>", line: Optional[int] = None):
        self.source, self.line = source, line
        where = f"{source}:{line}" if line is not None else source
        super().__init__(f"{where}: {message}")


# ----------------------------------------------------------------------------
# YAML with line numbers


class _LineDict(dict):
    line: Optional[int] = None


class _LineList(list):
    line: Optional[int] = None


class _Loader(yaml.SafeLoader):
    pass


def _construct_mapping(loader, node):
    d = _LineDict(loader.construct_mapping(node, deep=True))
    d.line = node.start_mark.line + 1
    return d


def _construct_sequence(loader, node):
    seq = _LineList(loader.construct_sequence(node, deep=True))
    seq.line = node.start_mark.line + 1
    return seq


_Loader.add_constructor(yaml.resolver.BaseResolver.DEFAULT_MAPPING_TAG, _construct_mapping)
_Loader.add_constructor(yaml.resolver.BaseResolver.DEFAULT_SEQUENCE_TAG, _construct_sequence)


def _load_yaml(text: str, source: str) -> dict:
    try:
        doc = yaml.load(text, Loader=_Loader)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(str(getattr(exc, "problem", exc)), source,
                          mark.line + 1 if mark is not None else None) from exc
    if not isinstance(doc, dict):
        raise ConfigError("expected a mapping at top level", source, 1)
    return doc


def _line(obj) -> Optional[int]:
    return getattr(obj, "line", None)


def _check_format(doc: dict, expected: str, source: str) -> None:
    got = doc.get("format")
    if got != expected:
        raise ConfigError(f"format must be {expected!r}, got {got!r}", source, _line(doc))


_UNITS = {
    "s": 1.0, "sec": 1.0, "min": 60.0, "h": 3600.0, "hr": 3600.0, "hour": 3600.0, "d": 86400.0,
    "b": 1.0, "kb": 1e3, "mb": 1e6, "gb": 1e9, "tb": 1e12,
}


def parse_quantity(value) -> float:
    """Number, or a string like ``"1hr"``, ``"30 min"``, ``"10GB"``."""
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    m = re.fullmatch(r"\s*([0-9.eE+-]+)\s*([a-zA-Z]*)\s*", str(value))
    if not m:
        raise ValueError(f"cannot parse quantity {value!r}")
    unit = m.group(2).lower()
    if unit and unit not in _UNITS:
        raise ValueError(f"unknown unit {m.group(2)!r}")
    return float(m.group(1)) * _UNITS.get(unit, 1.0)


# ----------------------------------------------------------------------------
# scenario


def scenario_to_dict(sc: Scenario) -> dict:
    return {
        "format": SCENARIO_FORMAT,
        "seed": int(sc.seed),
        "user_node": int(sc.user_node),
        "nodes": [{
            "id": n.id, "storage_capacity": n.storage_capacity, "bandwidth": n.bandwidth,
            "rtt_to_user": n.rtt_to_user, "storage_cost_coeff": n.storage_cost_coeff,
            "transfer_cost_coeff": n.transfer_cost_coeff, "popularity_score": n.popularity_score,
            "current_load": n.current_load, "region": n.region,
        } for n in sc.nodes],
        "objects": [{"id": o.id, "size": o.size, "type_tag": o.type_tag, "request_count": o.request_count}
                    for o in sc.objects],
        "workload_phases": [{
            "label": p.label, "start_hour": p.start_hour, "end_hour": p.end_hour,
            "requests_per_hour": [p.requests_per_hour[0], p.requests_per_hour[1]],
            "cost_strictness": p.cost_strictness,
        } for p in sc.workload_phases],
    }


def dumps_scenario(sc: Scenario) -> str:
    return yaml.safe_dump(scenario_to_dict(sc), sort_keys=False, default_flow_style=None, width=120)


def loads_scenario(text: str, source: str = "<scenario>") -> Scenario:
    doc = _load_yaml(text, source)
    _check_format(doc, SCENARIO_FORMAT, source)

    def build(kind, entries, fn):
        out = []
        if not isinstance(entries, list):
            raise ConfigError(f"{kind} must be a list", source, _line(doc))
        for e in entries:
            try:
                out.append(fn(e))
            except (TypeError, ValueError, KeyError) as exc:
                raise ConfigError(f"bad {kind} entry: {exc}", source, _line(e)) from exc
        return out

    nodes = build("nodes", doc.get("nodes"), lambda e: Node(**dict(e)))
    objects = build("objects", doc.get("objects"), lambda e: DataObject(**dict(e)))
    phases = build("workload_phases", doc.get("workload_phases"), lambda e: WorkloadPhase(
        label=e["label"], start_hour=int(e["start_hour"]), end_hour=int(e["end_hour"]),
        requests_per_hour=tuple(int(v) for v in e["requests_per_hour"]),
        cost_strictness=float(e.get("cost_strictness", 0.0))))
    try:
        return Scenario(tuple(nodes), tuple(objects), int(doc.get("user_node", 0)), tuple(phases),
                        int(doc.get("seed", 0)))
    except ValueError as exc:
        raise ConfigError(str(exc), source, _line(doc)) from exc


def load_scenario(path) -> Scenario:
    return loads_scenario(Path(path).read_text(), str(path))


def save_scenario(sc: Scenario, path) -> None:
    atomic_write(path, dumps_scenario(sc))


# ----------------------------------------------------------------------------
# policy


def _objective_index(value, source, line) -> int:
    if isinstance(value, int):
        return value
    if value in OBJECTIVE_NAMES:
        return OBJECTIVE_NAMES.index(value)
    raise ConfigError(f"unknown objective {value!r}; valid: {list(OBJECTIVE_NAMES)}", source, line)


def _alpha(value, source, line):
    if isinstance(value, dict):
        unknown = set(value) - set(OBJECTIVE_NAMES)
        if unknown:
            raise ConfigError(f"unknown alpha keys {sorted(unknown)}", source, line)
        return tuple(float(value.get(k, 0.0)) for k in OBJECTIVE_NAMES)
    if not isinstance(value, list) or len(value) != 4:
        raise ConfigError("alpha must be a list of 4 numbers or a time/cost/popularity/load mapping",
                          source, line)
    return tuple(float(v) for v in value)


def _constraint(entry, source) -> ConstraintRule:
    line = _line(entry)
    if not isinstance(entry, dict) or "kind" not in entry or "threshold" not in entry:
        raise ConfigError("constraint needs 'kind' and 'threshold'", source, line)
    try:
        return ConstraintRule(entry["kind"], parse_quantity(entry["threshold"]))
    except (PolicyError, ValueError) as exc:
        raise ConfigError(str(exc), source, line) from exc


def _constraints_from_mapping(entry: dict, source, line: Optional[int] = None) -> List[ConstraintRule]:
    """``{min_replicas: 3, max_replication_time: 1hr}`` shorthand."""
    out = []
    for kind, thr in entry.items():
        try:
            out.append(ConstraintRule(kind, parse_quantity(thr)))
        except (PolicyError, ValueError) as exc:
            raise ConfigError(str(exc), source, _line(entry) or line) from exc
    return out


def loads_policy(text: str, source: str = "<policy>") -> PolicySpec:
    doc = _load_yaml(text, source)
    _check_format(doc, POLICY_FORMAT, source)
    known = {"format", "alpha", "mode", "objective", "hard_constraints", "conditional_rules", "adaptation"}
    unknown = set(doc) - known
    if unknown:
        raise ConfigError(f"unknown policy keys {sorted(unknown)}", source, _line(doc))
    alpha = _alpha(doc.get("alpha", [1, 1, 1, 1]), source, _line(doc))
    mode = doc.get("mode", "none")
    single = None
    if "objective" in doc:
        single = _objective_index(doc["objective"], source, _line(doc))
        mode = doc.get("mode", "single_objective")
    hard = [_constraint(e, source) for e in doc.get("hard_constraints") or []]
    rules = []
    for k, entry in enumerate(doc.get("conditional_rules") or []):
        line = _line(entry)
        cond_doc = entry.get("if") if isinstance(entry, dict) else None
        if not isinstance(cond_doc, dict):
            raise ConfigError("conditional rule needs an 'if' mapping", source, line)
        bad = set(cond_doc) - {"data_type", "min_size"}
        if bad:
            raise ConfigError(f"unsupported condition keys {sorted(bad)}; use data_type and/or min_size",
                              source, _line(cond_doc) or line)
        then = entry.get("then") or {}
        if not isinstance(then, dict):
            raise ConfigError("'then' must be a mapping", source, line)
        then_line = _line(then) or line
        then = dict(then)
        over = then.pop("alpha", None)
        try:
            cond = Condition(cond_doc.get("data_type"),
                             parse_quantity(cond_doc["min_size"]) if "min_size" in cond_doc else None)
            rules.append(ConditionalRule(cond, tuple(_constraints_from_mapping(then, source, then_line)),
                                         None if over is None else _alpha(over, source, line),
                                         entry.get("name", f"rule{k}")))
        except (PolicyError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc), source, line) from exc
    ad = doc.get("adaptation") or {}
    try:
        params = AdaptationParams(
            lam=float(ad.get("lambda", 0.1)), beta=float(ad.get("beta", 0.3)),
            gamma=float(ad.get("gamma", 0.2)), alpha_max=float(ad.get("alpha_max", 0.4)),
            alpha_base=None if "alpha_base" not in ad else _alpha(ad["alpha_base"], source, _line(ad)))
        return PolicySpec(alpha=alpha, mode=mode, single_index=single, hard_constraints=tuple(hard),
                          conditional_rules=tuple(rules), adaptation=params)
    except PolicyError as exc:
        raise ConfigError(str(exc), source, _line(ad) if ad else _line(doc)) from exc


def load_policy(path) -> PolicySpec:
    return loads_policy(Path(path).read_text(), str(path))


def policy_to_dict(p: PolicySpec) -> dict:
    out = {"format": POLICY_FORMAT, "alpha": list(p.alpha), "mode": p.mode}
    if p.single_index is not None:
        out["objective"] = OBJECTIVE_NAMES[p.single_index]
    out["hard_constraints"] = [{"kind": r.kind, "threshold": r.threshold} for r in p.hard_constraints]
    rules = []
    for r in p.conditional_rules:
        cond = {}
        if r.condition.type_tag is not None:
            cond["data_type"] = r.condition.type_tag
        if r.condition.min_size is not None:
            cond["min_size"] = r.condition.min_size
        then = {e.kind: e.threshold for e in r.effects}
        if r.alpha is not None:
            then["alpha"] = list(r.alpha)
        rules.append({"name": r.name, "if": cond, "then": then})
    out["conditional_rules"] = rules
    a = p.adaptation
    out["adaptation"] = {"lambda": a.lam, "beta": a.beta, "gamma": a.gamma, "alpha_max": a.alpha_max}
    if a.alpha_base is not None:
        out["adaptation"]["alpha_base"] = list(a.alpha_base)
    return out


def dumps_policy(p: PolicySpec) -> str:
    return yaml.safe_dump(policy_to_dict(p), sort_keys=False, default_flow_style=None)


# ----------------------------------------------------------------------------
# schedule


def loads_schedule(text: str, source: str = "<schedule>", policy_loader=None) -> PolicySchedule:
    """Hour- or generation-triggered list of alpha / signal / policy changes."""
    doc = _load_yaml(text, source)
    _check_format(doc, SCHEDULE_FORMAT, source)
    unit = doc.get("unit", "hour")
    entries = []
    for e in doc.get("changes") or []:
        line = _line(e)
        if not isinstance(e, dict) or "at" not in e:
            raise ConfigError("schedule change needs an 'at' trigger", source, line)
        try:
            sig = e.get("signals")
            entries.append(ScheduleEntry(
                trigger=float(e["at"]),
                alpha=None if "alpha" not in e else _alpha(e["alpha"], source, line),
                signals=None if sig is None else Signals(**dict(sig)),
                policy=None if "policy" not in e else load_policy(Path(source).parent / e["policy"]),
                note=str(e.get("note", "")),
            ))
        except (TypeError, ValueError, PolicyError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc), source, line) from exc
    try:
        return PolicySchedule(tuple(entries), unit)
    except ValueError as exc:
        raise ConfigError(str(exc), source, _line(doc)) from exc


def load_schedule(path) -> PolicySchedule:
    return loads_schedule(Path(path).read_text(), str(path))


# ----------------------------------------------------------------------------
# outputs


def atomic_write(path, text: str) -> None:
    """Write via a temp file in the same directory and rename into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def csv_text(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def front_rows(points: np.ndarray) -> List[list]:
    """Reorder ``(time, cost, -popularity, load)`` into the f1..f4 column order."""
    pts = np.atleast_2d(points)
    if pts.size == 0:
        return []
    cols = pts[:, [1, 0, 2, 3]]
    order = np.lexsort(cols.T[::-1])
    return [list(row) for row in cols[order]]


def front_csv(points: np.ndarray) -> str:
    return csv_text(FRONT_COLUMNS, front_rows(points))


def read_front_csv(path) -> np.ndarray:
    """Inverse of :func:`front_csv`, back in ``(time, cost, -popularity, load)`` order."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return np.array([[float(r["f2_time"]), float(r["f1_cost"]), float(r["f3_neg_popularity"]),
                      float(r["f4_load"])] for r in rows]).reshape(-1, 4)


def front_json(points: np.ndarray) -> str:
    return json.dumps([dict(zip(FRONT_COLUMNS, row)) for row in front_rows(points)], indent=1) + "\n"


def jsonl(records: Iterable[dict]) -> str:
    return "".join(json.dumps(r, sort_keys=True) + "\n" for r in records)
