"""Instance files: JSON schema, validation, serialization and seeded generation.

An instance file describes one auction: an environment (one of six kinds), the
bidders, and the clock configuration.  All numbers travel as canonical
rational strings "p/q" (or a plain integer string); budgets may be "inf".
Floats never appear, so files round-trip losslessly.

Example::

    {
      "schema": 1,
      "environment": {"kind": "multi-unit", "supply": "5"},
      "bidders": [{"value": "3", "budget": "2"}, {"value": "1", "budget": "inf"}],
      "config": {"epsilon": "auto", "max_steps": 1000000, "trace": true}
    }

Kind-specific payloads: ``single-keyword`` takes ``ctrs``; ``adwords`` takes
``bidders_count``, ``interests`` (bidder lists per keyword) and per-keyword
``ctrs``; ``graphic`` takes ``edges`` (one per bidder); ``vod-cut`` takes
``edges`` [u, v, cap], ``source`` and ``bidder_nodes``; ``h-polytope-2d``
takes constraint ``rows`` [a0, a1, rhs].  ``quality`` (uniform per-bidder
factors) and ``curves`` (piecewise-linear breakpoints, multi-unit only) are
optional top-level fields.
"""

from __future__ import annotations

import json
import random
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional

from .auction import AuctionConfig, Bidder, ConcaveCurve, UNBOUNDED
from .environments import (
    AdWordsInstance,
    CapacitatedNetwork,
    adwords_oracle,
    graphic_oracle,
    multi_unit_oracle,
    single_keyword_oracle,
    vod_cut_oracle,
)
from .errors import ParseError

SCHEMA_VERSION = 1

POLYMATROID_KINDS = ("multi-unit", "single-keyword", "adwords", "graphic", "vod-cut")
ALL_KINDS = POLYMATROID_KINDS + ("h-polytope-2d",)

_RATIONAL_RE = re.compile(r"^-?\d+(/\d+)?$")


def parse_rational(raw, field_name: str) -> Fraction:
    """Rational string "p/q" or integer string; exact, floats rejected."""
    if isinstance(raw, int) and not isinstance(raw, bool):
        return Fraction(raw)
    if not isinstance(raw, str) or not _RATIONAL_RE.match(raw):
        raise ParseError("malformed-rational", field_name,
                         f"{field_name}: expected a rational string like '3/4', got {raw!r}")
    try:
        return Fraction(raw)
    except ZeroDivisionError:
        raise ParseError("malformed-rational", field_name,
                         f"{field_name}: zero denominator in {raw!r}") from None


def format_rational(value: Optional[Fraction]) -> str:
    return "inf" if value is None else str(value)


def _require(obj, key: str, where: str):
    if not isinstance(obj, dict):
        raise ParseError("bad-json", where, f"{where} must be a JSON object")
    if key not in obj:
        raise ParseError("missing-field", f"{where}.{key}", f"missing field {where}.{key}")
    return obj[key]


@dataclass
class EnvironmentSpec:
    kind: str
    payload: dict


@dataclass
class InstanceFile:
    """Parsed and validated instance, ready to build and run."""

    environment: EnvironmentSpec
    bidders: List[Bidder]
    config: AuctionConfig
    quality: Optional[tuple] = None
    curves: Optional[List[ConcaveCurve]] = None
    schema: int = SCHEMA_VERSION

    @property
    def n(self) -> int:
        return len(self.bidders)

    def build_oracle(self):
        """Oracle for polymatroid kinds; ParseError for the H-polytope kind."""
        kind, payload = self.environment.kind, self.environment.payload
        if kind == "multi-unit":
            return multi_unit_oracle(payload["supply"], self.n)
        if kind == "single-keyword":
            return single_keyword_oracle(payload["ctrs"])
        if kind == "adwords":
            return adwords_oracle(self.build_adwords())
        if kind == "graphic":
            return graphic_oracle(payload["edges"])
        if kind == "vod-cut":
            return vod_cut_oracle(CapacitatedNetwork.build(
                payload["edges"], payload["source"], payload["bidder_nodes"]))
        raise ParseError("unknown-kind", "environment.kind",
                         f"kind {kind!r} does not define a polymatroid oracle")

    def build_adwords(self) -> AdWordsInstance:
        payload = self.environment.payload
        return AdWordsInstance.build(self.n, payload["interests"], payload["ctrs"],
                                     self.quality)

    def polytope_rows(self):
        """(rows, rhs) for the h-polytope-2d kind."""
        rows = self.environment.payload["rows"]
        return tuple(r[:2] for r in rows), tuple(r[2] for r in rows)


def parse_instance_data(data: dict, where: str = "instance") -> InstanceFile:
    if not isinstance(data, dict):
        raise ParseError("bad-json", where, "instance must be a JSON object")
    schema = _require(data, "schema", where)
    if schema != SCHEMA_VERSION:
        raise ParseError("bad-schema", f"{where}.schema",
                         f"unsupported schema version {schema!r}")

    env_raw = _require(data, "environment", where)
    kind = _require(env_raw, "kind", f"{where}.environment")
    if kind not in ALL_KINDS:
        raise ParseError("unknown-kind", f"{where}.environment.kind",
                         f"unknown environment kind {kind!r}; expected one of {ALL_KINDS}")

    bidders_raw = _require(data, "bidders", where)
    if not isinstance(bidders_raw, list) or not bidders_raw:
        raise ParseError("missing-field", f"{where}.bidders", "at least one bidder is required")
    curves_raw = data.get("curves")
    bidders = []
    for i, entry in enumerate(bidders_raw):
        loc = f"{where}.bidders[{i}]"
        budget_raw = _require(entry, "budget", loc)
        budget = UNBOUNDED if budget_raw == "inf" else parse_rational(budget_raw, f"{loc}.budget")
        if "value" in entry:
            value = parse_rational(entry["value"], f"{loc}.value")
        elif curves_raw is not None:
            value = Fraction(1)          # unused: curve runs ignore linear values
        else:
            raise ParseError("missing-field", f"{loc}.value", f"missing field {loc}.value")
        if value <= 0:
            raise ParseError("bad-value", f"{loc}.value", f"{loc}: values must be > 0")
        if budget is not None and budget < 0:
            raise ParseError("bad-value", f"{loc}.budget", f"{loc}: budgets must be >= 0")
        bidders.append(Bidder(value, budget))
    n = len(bidders)

    payload = _parse_environment(kind, env_raw, n, f"{where}.environment")

    cfg_raw = data.get("config", {})
    if not isinstance(cfg_raw, dict):
        raise ParseError("bad-json", f"{where}.config", "config must be a JSON object")
    eps_raw = cfg_raw.get("epsilon", "auto")
    epsilon = "auto" if eps_raw == "auto" else parse_rational(eps_raw, f"{where}.config.epsilon")
    if epsilon != "auto" and epsilon <= 0:
        raise ParseError("bad-value", f"{where}.config.epsilon", "epsilon must be > 0")
    config = AuctionConfig(epsilon=epsilon,
                           max_steps=int(cfg_raw.get("max_steps", 1_000_000)),
                           trace=bool(cfg_raw.get("trace", False)))

    quality = None
    if "quality" in data and data["quality"] is not None:
        raw = data["quality"]
        if any(isinstance(g, (list, dict)) for g in raw):
            raise ParseError("bad-value", f"{where}.quality",
                             "quality factors must be uniform per bidder (one rational "
                             "each); per-keyword factors are not a polymatroid")
        if len(raw) != n:
            raise ParseError("bad-value", f"{where}.quality",
                             f"expected {n} quality factors, got {len(raw)}")
        quality = tuple(parse_rational(g, f"{where}.quality[{i}]") for i, g in enumerate(raw))
        if any(g <= 0 for g in quality):
            raise ParseError("bad-value", f"{where}.quality", "quality factors must be > 0")

    curves = None
    if curves_raw is not None:
        if kind != "multi-unit":
            raise ParseError("bad-value", f"{where}.curves",
                             "curves are supported on multi-unit environments only")
        if len(curves_raw) != n:
            raise ParseError("bad-value", f"{where}.curves",
                             f"expected {n} curves, got {len(curves_raw)}")
        curves = []
        for i, pts in enumerate(curves_raw):
            loc = f"{where}.curves[{i}]"
            try:
                curves.append(ConcaveCurve(tuple(
                    (parse_rational(q, loc), parse_rational(v, loc)) for q, v in pts)))
            except ParseError:
                raise
            except Exception as exc:
                raise ParseError("bad-value", loc, f"{loc}: {exc}") from exc

    inst = InstanceFile(EnvironmentSpec(kind, payload), bidders, config, quality, curves)
    try:
        if kind == "h-polytope-2d":
            inst.polytope_rows()
        else:
            inst.build_oracle()
    except ParseError:
        raise
    except Exception as exc:
        raise ParseError("bad-environment", f"{where}.environment", str(exc)) from exc
    return inst


def _parse_environment(kind: str, env_raw: dict, n: int, where: str) -> dict:
    if kind == "multi-unit":
        return {"supply": parse_rational(_require(env_raw, "supply", where), f"{where}.supply")}
    if kind == "single-keyword":
        ctrs = _require(env_raw, "ctrs", where)
        if len(ctrs) != n:
            raise ParseError("bad-value", f"{where}.ctrs",
                             f"expected {n} CTR entries (one slot per bidder), got {len(ctrs)}")
        return {"ctrs": [parse_rational(c, f"{where}.ctrs[{j}]") for j, c in enumerate(ctrs)]}
    if kind == "adwords":
        interests = _require(env_raw, "interests", where)
        ctrs = _require(env_raw, "ctrs", where)
        if len(interests) != len(ctrs):
            raise ParseError("inconsistent-graph", f"{where}.interests",
                             f"{len(interests)} keywords but {len(ctrs)} CTR lists")
        for k, members in enumerate(interests):
            if not members:
                raise ParseError("inconsistent-graph", f"{where}.interests[{k}]",
                                 f"keyword {k} has no interested bidder")
            for i in members:
                if not isinstance(i, int) or not 0 <= i < n:
                    raise ParseError("inconsistent-graph", f"{where}.interests[{k}]",
                                     f"keyword {k} lists invalid bidder {i!r}")
        return {"interests": [list(m) for m in interests],
                "ctrs": [[parse_rational(c, f"{where}.ctrs[{k}][{j}]")
                          for j, c in enumerate(alpha)] for k, alpha in enumerate(ctrs)]}
    if kind == "graphic":
        edges = _require(env_raw, "edges", where)
        if len(edges) != n:
            raise ParseError("bad-value", f"{where}.edges",
                             f"expected one edge per bidder ({n}), got {len(edges)}")
        return {"edges": [(int(u), int(v)) for u, v in edges]}
    if kind == "vod-cut":
        edges = _require(env_raw, "edges", where)
        source = _require(env_raw, "source", where)
        nodes = _require(env_raw, "bidder_nodes", where)
        if len(nodes) != n:
            raise ParseError("bad-value", f"{where}.bidder_nodes",
                             f"expected {n} bidder nodes, got {len(nodes)}")
        return {"edges": [(u, v, parse_rational(c, f"{where}.edges[{j}]"))
                          for j, (u, v, c) in enumerate(edges)],
                "source": source, "bidder_nodes": list(nodes)}
    if kind == "h-polytope-2d":
        rows = _require(env_raw, "rows", where)
        if n != 2:
            raise ParseError("bad-value", f"{where}", "h-polytope-2d requires exactly 2 bidders")
        parsed = []
        for j, row in enumerate(rows):
            if len(row) != 3:
                raise ParseError("bad-value", f"{where}.rows[{j}]",
                                 "each row is [a0, a1, rhs]")
            parsed.append(tuple(parse_rational(c, f"{where}.rows[{j}][{t}]")
                                for t, c in enumerate(row)))
        return {"rows": parsed}
    raise ParseError("unknown-kind", f"{where}.kind", f"unknown kind {kind!r}")


def parse_instance(path) -> InstanceFile:
    """Load and validate an instance file; all failures are ParseError."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except FileNotFoundError:
        raise ParseError("missing-file", str(path), f"no such instance file: {path}") from None
    except json.JSONDecodeError as exc:
        raise ParseError("bad-json", str(path), f"invalid JSON in {path}: {exc}") from exc
    return parse_instance_data(data)


def serialize_instance(inst: InstanceFile) -> dict:
    """Canonical JSON form; parse(serialize(parse(f))) == parse(f)."""
    kind, payload = inst.environment.kind, inst.environment.payload
    env = {"kind": kind}
    if kind == "multi-unit":
        env["supply"] = str(payload["supply"])
    elif kind == "single-keyword":
        env["ctrs"] = [str(c) for c in payload["ctrs"]]
    elif kind == "adwords":
        env["interests"] = [list(m) for m in payload["interests"]]
        env["ctrs"] = [[str(c) for c in alpha] for alpha in payload["ctrs"]]
    elif kind == "graphic":
        env["edges"] = [[u, v] for u, v in payload["edges"]]
    elif kind == "vod-cut":
        env["edges"] = [[u, v, str(c)] for u, v, c in payload["edges"]]
        env["source"] = payload["source"]
        env["bidder_nodes"] = list(payload["bidder_nodes"])
    elif kind == "h-polytope-2d":
        env["rows"] = [[str(c) for c in row] for row in payload["rows"]]
    out = {
        "schema": inst.schema,
        "environment": env,
        "bidders": [{"value": str(b.value), "budget": format_rational(b.budget)}
                    for b in inst.bidders],
        "config": {
            "epsilon": "auto" if inst.config.epsilon == "auto" else str(inst.config.epsilon),
            "max_steps": inst.config.max_steps,
            "trace": inst.config.trace,
        },
    }
    if inst.quality is not None:
        out["quality"] = [str(g) for g in inst.quality]
    if inst.curves is not None:
        out["curves"] = [[[str(q), str(v)] for q, v in c.breakpoints] for c in inst.curves]
    return out


def write_instance(inst: InstanceFile, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(serialize_instance(inst), fh, indent=2)
        fh.write("\n")


# ---------------------------------------------------------------------------
# Seeded generation
# ---------------------------------------------------------------------------

def generate_instance(kind: str, n: int, m: Optional[int] = None,
                      seed: int = 0) -> InstanceFile:
    """Deterministic pseudo-random instance with small integer parameters.

    Same (kind, n, m, seed) always yields the same instance; the output is
    guaranteed to build a valid environment.
    """
    if kind not in POLYMATROID_KINDS:
        raise ParseError("unknown-kind", "kind",
                         f"gen supports {POLYMATROID_KINDS}, got {kind!r}")
    if n < 1:
        raise ParseError("bad-value", "n", "need n >= 1")
    rng = random.Random(f"{kind}:{n}:{m}:{seed}")

    if kind == "multi-unit":
        env = {"kind": kind, "supply": str(rng.randint(1, 9))}
    elif kind == "single-keyword":
        ctrs = sorted((rng.randint(0, 5) for _ in range(n)), reverse=True)
        if ctrs[0] == 0:
            ctrs[0] = 1
        env = {"kind": kind, "ctrs": [str(c) for c in ctrs]}
    elif kind == "adwords":
        keywords = m if m is not None else rng.randint(1, 3)
        interests, ctrs = [], []
        for _ in range(keywords):
            members = sorted(rng.sample(range(n), rng.randint(1, n)))
            interests.append(members)
            alpha = sorted((rng.randint(0, 4) for _ in members), reverse=True)
            ctrs.append([str(c) for c in alpha])
        env = {"kind": kind, "interests": interests, "ctrs": ctrs}
    elif kind == "graphic":
        vertices = n + 1
        edges = [[rng.randrange(vertices), rng.randrange(vertices)] for _ in range(n)]
        edges = [[u, v if u != v else (v + 1) % vertices] for u, v in edges]
        env = {"kind": kind, "edges": edges}
    else:                                   # vod-cut
        hubs = max(1, n // 2)
        edges = [["s", f"h{h}", str(rng.randint(1, 6))] for h in range(hubs)]
        for i in range(n):
            edges.append([f"h{rng.randrange(hubs)}", f"b{i}", str(rng.randint(0, 5))])
        env = {"kind": kind, "edges": edges, "source": "s",
               "bidder_nodes": [f"b{i}" for i in range(n)]}

    bidders = []
    for _ in range(n):
        budget = "inf" if rng.random() < 0.2 else str(rng.randint(1, 6))
        bidders.append({"value": str(rng.randint(1, 6)), "budget": budget})
    data = {
        "schema": SCHEMA_VERSION,
        "environment": env,
        "bidders": bidders,
        "config": {"epsilon": "auto", "max_steps": 1_000_000, "trace": True},
    }
    return parse_instance_data(data)
