"""Scenario files: a strict YAML dialect.

Example::

    name: nested-true
    truth:
      p: 0
      sigma_sq: 1.0
      design: {intercept: true}
    candidates:
      - {name: M1, p: 0, variance: 1.0}
      - {name: M2, p: 1, variance: unknown}
    run:
      n_grid: [100, 1000]
      seed: 42
    output:
      directory: out
      tables: [trace, gaps, summary, rates]

Unknown keys anywhere are an error.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import yaml

from .exceptions import HyvScoreError, InvalidInputError
from .selection import AlignmentPolicy, Mode
from .simlab import Candidate, Scenario, Truth

__all__ = [
    "ScenarioFileError",
    "OutputSpec",
    "ScenarioFile",
    "parse_scenario",
    "loads_scenario",
    "dumps_scenario",
    "TABLES",
]

TABLES = ("trace", "gaps", "summary", "rates")
DEFAULT_REPLICATIONS = 500

_TOP_KEYS = {"name", "truth", "candidates", "run", "output"}
_TRUTH_KEYS = {"p", "theta", "sigma_sq", "design"}
_DESIGN_KEYS = {"intercept"}
_CAND_KEYS = {"name", "p", "variance"}
_RUN_KEYS = {"mode", "alignment", "n_grid", "replications", "seed", "reference", "challenger", "expected"}
_OUTPUT_KEYS = {"directory", "tables"}


class ScenarioFileError(HyvScoreError, ValueError):
    """Malformed or invalid scenario file."""

    def __init__(self, message, line=None, column=None):
        loc = f"line {line}, column {column}: " if line is not None else ""
        super().__init__(loc + message)
        self.line = line
        self.column = column


@dataclass(frozen=True)
class OutputSpec:
    directory: Optional[str] = None
    tables: tuple = TABLES


@dataclass(frozen=True)
class ScenarioFile:
    scenario: Scenario
    output: OutputSpec = field(default_factory=OutputSpec)


class _Doc:
    """Plain Python values plus the source position of every mapping key."""

    def __init__(self, text):
        try:
            node = yaml.compose(text, Loader=yaml.SafeLoader)
        except yaml.YAMLError as exc:
            mark = getattr(exc, "problem_mark", None)
            msg = getattr(exc, "problem", None) or str(exc)
            if mark is not None:
                raise ScenarioFileError(msg, mark.line + 1, mark.column + 1) from None
            raise ScenarioFileError(msg) from None
        self.marks = {}
        self.value = self._convert(node, ()) if node is not None else None

    def _convert(self, node, path):
        self.marks[path] = node.start_mark
        if isinstance(node, yaml.MappingNode):
            out = {}
            for k, v in node.value:
                key = k.value
                self.marks[path + (key,)] = k.start_mark
                if key in out:
                    raise ScenarioFileError(f"duplicate key '{key}'", k.start_mark.line + 1, k.start_mark.column + 1)
                out[key] = self._convert(v, path + (key,))
            return out
        if isinstance(node, yaml.SequenceNode):
            return [self._convert(v, path + (j,)) for j, v in enumerate(node.value)]
        loader = yaml.SafeLoader("")
        try:
            return loader.construct_object(node, deep=True)
        finally:
            loader.dispose()

    def error(self, path, message):
        mark = self.marks.get(tuple(path))
        dotted = _dotted(path)
        text = f"{dotted}: {message}" if dotted else message
        if mark is None:
            return ScenarioFileError(text)
        return ScenarioFileError(text, mark.line + 1, mark.column + 1)


def _dotted(path):
    out = ""
    for part in path:
        out += f"[{part}]" if isinstance(part, int) else (f".{part}" if out else str(part))
    return out


def _mapping(doc, value, path, allowed, required=()):
    if not isinstance(value, dict):
        raise doc.error(path, "expected a mapping")
    for key in value:
        if key not in allowed:
            raise doc.error(tuple(path) + (key,), f"unknown key '{key}'")
    for key in required:
        if key not in value:
            raise doc.error(path, f"missing required key '{key}'")
    return value


def _int(doc, value, path, minimum=None):
    if isinstance(value, bool) or not isinstance(value, int):
        raise doc.error(path, f"expected an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise doc.error(path, f"must be >= {minimum}")
    return value


def _float(doc, value, path):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise doc.error(path, f"expected a number, got {value!r}")
    return float(value)


def _variance(doc, value, path):
    if isinstance(value, str) and value.lower() == "unknown":
        return None
    v = _float(doc, value, path)
    if not v > 0:
        raise doc.error(path, "variance must be positive or 'unknown'")
    return v


def _build(doc) -> ScenarioFile:
    top = _mapping(doc, doc.value, (), _TOP_KEYS, ("truth", "candidates", "run"))
    name = top.get("name", "scenario")
    if not isinstance(name, str):
        raise doc.error(("name",), "expected a string")

    t = _mapping(doc, top["truth"], ("truth",), _TRUTH_KEYS, ("p", "sigma_sq"))
    p = _int(doc, t["p"], ("truth", "p"), 0)
    theta = t.get("theta", [0.0] * p)
    if not isinstance(theta, list):
        raise doc.error(("truth", "theta"), "expected a list")
    theta = tuple(_float(doc, v, ("truth", "theta", j)) for j, v in enumerate(theta))
    if len(theta) != p:
        raise doc.error(("truth", "theta"), f"expected {p} entries, got {len(theta)}")
    sigma_sq = _float(doc, t["sigma_sq"], ("truth", "sigma_sq"))
    if not sigma_sq > 0:
        raise doc.error(("truth", "sigma_sq"), "must be positive")
    design = _mapping(doc, t.get("design", {}), ("truth", "design"), _DESIGN_KEYS)
    intercept = design.get("intercept", True)
    if not isinstance(intercept, bool):
        raise doc.error(("truth", "design", "intercept"), "expected true or false")
    truth = Truth(p, theta, sigma_sq, intercept)

    cl = top["candidates"]
    if not isinstance(cl, list) or not cl:
        raise doc.error(("candidates",), "expected a non-empty list")
    cands = []
    for j, c in enumerate(cl):
        path = ("candidates", j)
        c = _mapping(doc, c, path, _CAND_KEYS, ("name", "p", "variance"))
        cname = c["name"]
        if not isinstance(cname, str) or not cname:
            raise doc.error(path + ("name",), "expected a non-empty string")
        cands.append(Candidate(
            cname,
            _int(doc, c["p"], path + ("p",), 0),
            _variance(doc, c["variance"], path + ("variance",)),
        ))

    r = _mapping(doc, top["run"], ("run",), _RUN_KEYS, ("n_grid", "seed"))
    grid = r["n_grid"]
    if not isinstance(grid, list) or not grid:
        raise doc.error(("run", "n_grid"), "expected a non-empty list of integers")
    grid = tuple(_int(doc, v, ("run", "n_grid", j), 1) for j, v in enumerate(grid))
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise doc.error(("run", "n_grid"), "must be strictly increasing")
    kwargs = {
        "replications": _int(doc, r.get("replications", DEFAULT_REPLICATIONS), ("run", "replications"), 1),
        "seed": _int(doc, r["seed"], ("run", "seed"), 0),
    }
    for key, enum_cls in (("mode", Mode), ("alignment", AlignmentPolicy)):
        if key in r:
            try:
                kwargs[key] = enum_cls(r[key])
            except ValueError:
                allowed = ", ".join(e.value for e in enum_cls)
                raise doc.error(("run", key), f"must be one of {allowed}") from None
    for key in ("reference", "challenger", "expected"):
        if key in r:
            if r[key] not in [c.name for c in cands]:
                raise doc.error(("run", key), f"'{r[key]}' is not a candidate name")
            kwargs[key] = r[key]

    o = _mapping(doc, top.get("output", {}), ("output",), _OUTPUT_KEYS)
    directory = o.get("directory")
    if directory is not None and not isinstance(directory, str):
        raise doc.error(("output", "directory"), "expected a string")
    tables = o.get("tables", list(TABLES))
    if not isinstance(tables, list) or any(tb not in TABLES for tb in tables):
        raise doc.error(("output", "tables"), f"tables must be drawn from {', '.join(TABLES)}")

    try:
        scenario = Scenario(name, truth, tuple(cands), grid, **kwargs)
    except InvalidInputError as exc:
        raise ScenarioFileError(str(exc)) from None
    return ScenarioFile(scenario, OutputSpec(directory, tuple(tables)))


def loads_scenario(text: str) -> ScenarioFile:
    doc = _Doc(text)
    if doc.value is None:
        raise ScenarioFileError("scenario file is empty")
    try:
        return _build(doc)
    except InvalidInputError as exc:
        if isinstance(exc, ScenarioFileError):
            raise
        raise ScenarioFileError(str(exc)) from None


def parse_scenario(path) -> ScenarioFile:
    with open(path, encoding="utf-8") as fh:
        return loads_scenario(fh.read())


def dumps_scenario(sf: ScenarioFile) -> str:
    """Serialise with every default written out explicitly."""
    s = sf.scenario
    doc = {
        "name": s.name,
        "truth": {
            "p": s.truth.p,
            "theta": list(s.truth.theta),
            "sigma_sq": s.truth.sigma_sq,
            "design": {"intercept": s.truth.intercept},
        },
        "candidates": [
            {"name": c.name, "p": c.p, "variance": "unknown" if c.sigma_sq is None else c.sigma_sq}
            for c in s.candidates
        ],
        "run": {
            "mode": s.mode.value,
            "alignment": s.alignment.value,
            "n_grid": list(s.n_grid),
            "replications": s.replications,
            "seed": s.seed,
        },
        "output": {"tables": list(sf.output.tables)},
    }
    for key in ("reference", "challenger", "expected"):
        if getattr(s, key) is not None:
            doc["run"][key] = getattr(s, key)
    if sf.output.directory is not None:
        doc["output"]["directory"] = sf.output.directory
    return yaml.safe_dump(doc, sort_keys=False)
