"""CSV / INI / JSON plumbing for the command-line tools.

File formats:

* instance CSV: header ``category,borough,lambda,risk``, one row per
  (category, borough) pair with a daily arrival rate and a positive risk
  rating. Pairs not listed get rate 0 and the mean risk of their category.
* arrivals CSV: header ``date,borough,category`` plus optional ``region_id``
  and ``risk`` columns; one row per incident, ISO dates.
* capacity CSV: header ``date,inspections``, one row per day.
* policy CSV (inputs and outputs): long format
  ``policy_id,param,category,borough,value`` with param one of
  ``budget_frac`` (category left empty), ``gps``, ``target_frac``.
* config INI (stdlib configparser) with sections ``[data]``,
  ``[simulation]``, ``[metrics]``, ``[search]``.

Risk ratings for ingested arrivals resolve, in order of precedence:
``[metrics] risk.<category>`` config keys, then the mean of the arrivals
file's ``risk`` column per (category, borough), then the built-in default
levels for the six known service categories, then 1.0.

Reports are JSON with sorted keys and no timestamps; rerunning the same
command on the same inputs writes byte-identical output.
"""

from __future__ import annotations

import configparser
import csv
import hashlib
import json
from dataclasses import dataclass, field
from datetime import date

import numpy as np

from . import errors
from .model import ArrivalTrace, CapacityTrace

DEFAULT_RISK_LEVELS = {
    "Hazard": 10.0,
    "Illegal Tree Damage": 8.0,
    "Other": 6.0,
    "Prune": 4.0,
    "Remove Tree": 8.0,
    "Root/Sewer/Sidewalk": 4.0,
}
FALLBACK_RISK = 1.0

_ARRIVAL_HEADERS = {"date", "borough", "category"}
_ARRIVAL_OPTIONAL = {"region_id", "risk"}
_ALIGN_MODES = ("intersect", "pad-zero")


def _parse_date(text: str, path: str, line: int) -> date:
    try:
        return date.fromisoformat(text.strip())
    except ValueError:
        raise errors.UnparseableDate(
            f"{path}:{line}: cannot parse date {text!r} (expected YYYY-MM-DD)"
        ) from None


def _open_rows(path: str):
    try:
        handle = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise errors.IoError(f"cannot read {path}: {exc}") from None
    with handle:
        reader = csv.reader(handle)
        rows = [row for row in reader if row and any(c.strip() for c in row)]
    if not rows:
        raise errors.EmptyFile(f"{path} has no rows")
    return rows


def read_instance_csv(path: str):
    """Read a solve instance: (categories, boroughs, rates, risks).

    Canonical order is first appearance in the file. Missing pairs get rate
    0 and their category's mean risk over listed boroughs.
    """
    rows = _open_rows(path)
    header = [c.strip() for c in rows[0]]
    if header != ["category", "borough", "lambda", "risk"]:
        raise errors.MalformedRow(
            f"{path}: expected header category,borough,lambda,risk got"
            f" {','.join(header)}"
        )
    if len(rows) == 1:
        raise errors.EmptyFile(f"{path} has a header but no data rows")
    cats: list[str] = []
    bors: list[str] = []
    cells = {}
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != 4:
            raise errors.MalformedRow(
                f"{path}:{i}: expected 4 fields, got {len(row)}"
            )
        cat, bor, lam_s, risk_s = (c.strip() for c in row)
        if not cat or not bor:
            raise errors.MalformedRow(f"{path}:{i}: empty category or borough")
        try:
            lam = float(lam_s)
            risk = float(risk_s)
        except ValueError:
            raise errors.MalformedRow(
                f"{path}:{i}: lambda and risk must be numbers, got"
                f" {lam_s!r}, {risk_s!r}"
            ) from None
        if cat not in cats:
            cats.append(cat)
        if bor not in bors:
            bors.append(bor)
        if (cat, bor) in cells:
            raise errors.MalformedRow(f"{path}:{i}: duplicate pair {cat}/{bor}")
        cells[(cat, bor)] = (lam, risk)
    K, B = len(cats), len(bors)
    rates = np.zeros((K, B))
    risks = np.zeros((K, B))
    for k, cat in enumerate(cats):
        listed = [cells[(cat, b)][1] for b in bors if (cat, b) in cells]
        fill = float(np.mean(listed))
        for b, bor in enumerate(bors):
            lam, risk = cells.get((cat, bor), (0.0, fill))
            rates[k, b] = lam
            risks[k, b] = risk
    return cats, bors, rates, risks


@dataclass(eq=False)
class ArrivalRows:
    """Parsed arrivals file, not yet aligned to a window."""

    dates: list[date]
    boroughs: list[str]
    categories: list[str]
    regions: list[str | None]
    risks: list[float | None]


def ingest_arrivals(path: str) -> ArrivalRows:
    """Parse an arrivals CSV into per-incident rows."""
    rows = _open_rows(path)
    header = [c.strip() for c in rows[0]]
    hset = set(header)
    if not (_ARRIVAL_HEADERS <= hset and hset <= _ARRIVAL_HEADERS | _ARRIVAL_OPTIONAL):
        raise errors.MalformedRow(
            f"{path}: header must contain date,borough,category (plus"
            f" optional region_id,risk), got {','.join(header)}"
        )
    if len(hset) != len(header):
        raise errors.MalformedRow(f"{path}: duplicate header columns")
    if len(rows) == 1:
        raise errors.EmptyFile(f"{path} has a header but no data rows")
    col = {name: header.index(name) for name in header}
    out = ArrivalRows([], [], [], [], [])
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise errors.MalformedRow(
                f"{path}:{i}: expected {len(header)} fields, got {len(row)}"
            )
        out.dates.append(_parse_date(row[col["date"]], path, i))
        bor = row[col["borough"]].strip()
        cat = row[col["category"]].strip()
        if not bor or not cat:
            raise errors.MalformedRow(f"{path}:{i}: empty borough or category")
        out.boroughs.append(bor)
        out.categories.append(cat)
        if "region_id" in col:
            region = row[col["region_id"]].strip()
            out.regions.append(region or None)
        else:
            out.regions.append(None)
        if "risk" in col:
            risk_s = row[col["risk"]].strip()
            if risk_s:
                try:
                    out.risks.append(float(risk_s))
                except ValueError:
                    raise errors.MalformedRow(
                        f"{path}:{i}: risk must be a number, got {risk_s!r}"
                    ) from None
            else:
                out.risks.append(None)
        else:
            out.risks.append(None)
    return out


def ingest_capacity(path: str) -> list[tuple[date, int]]:
    """Parse a capacity CSV into (date, inspections) rows."""
    rows = _open_rows(path)
    header = [c.strip() for c in rows[0]]
    if header != ["date", "inspections"]:
        raise errors.MalformedRow(
            f"{path}: expected header date,inspections got {','.join(header)}"
        )
    if len(rows) == 1:
        raise errors.EmptyFile(f"{path} has a header but no data rows")
    out = []
    seen = set()
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != 2:
            raise errors.MalformedRow(
                f"{path}:{i}: expected 2 fields, got {len(row)}"
            )
        day = _parse_date(row[0], path, i)
        if day in seen:
            raise errors.MalformedRow(f"{path}:{i}: duplicate date {day}")
        seen.add(day)
        try:
            n = int(row[1].strip())
        except ValueError:
            raise errors.MalformedRow(
                f"{path}:{i}: inspections must be an integer, got {row[1]!r}"
            ) from None
        if n < 0:
            raise errors.NegativeCapacity(
                f"{path}:{i}: inspections must be nonnegative, got {n}"
            )
        out.append((day, n))
    return out


def build_traces(
    arrival_rows: ArrivalRows,
    capacity_rows: list[tuple[date, int]],
    align: str = "intersect",
) -> tuple[ArrivalTrace, CapacityTrace]:
    """Assemble aligned traces from parsed rows.

    ``intersect`` crops both inputs to their common date window;
    ``pad-zero`` keeps the union window, zero-filling days either input
    lacks. Days inside the window with no capacity row count as zero
    capacity either way.
    """
    if align not in _ALIGN_MODES:
        raise errors.MalformedRow(
            f"align must be one of {_ALIGN_MODES}, got {align!r}"
        )
    if not arrival_rows.dates:
        raise errors.EmptyFile("arrivals contain no incidents")
    if not capacity_rows:
        raise errors.EmptyFile("capacity contains no days")
    a_lo, a_hi = min(arrival_rows.dates), max(arrival_rows.dates)
    c_lo = min(d for d, _ in capacity_rows)
    c_hi = max(d for d, _ in capacity_rows)
    if align == "intersect":
        lo, hi = max(a_lo, c_lo), min(a_hi, c_hi)
        if lo > hi:
            raise errors.TraceMisaligned(
                f"arrival dates ({a_lo}..{a_hi}) and capacity dates"
                f" ({c_lo}..{c_hi}) do not overlap"
            )
    else:
        lo, hi = min(a_lo, c_lo), max(a_hi, c_hi)
    T = (hi - lo).days + 1

    keep = [i for i, d in enumerate(arrival_rows.dates) if lo <= d <= hi]
    if not keep:
        raise errors.TraceMisaligned("no arrivals inside the aligned window")
    cats = list(dict.fromkeys(arrival_rows.categories[i] for i in keep))
    bors = list(dict.fromkeys(arrival_rows.boroughs[i] for i in keep))
    cat_ix = {c: k for k, c in enumerate(cats)}
    bor_ix = {b: j for j, b in enumerate(bors)}
    day = np.array(
        [(arrival_rows.dates[i] - lo).days for i in keep], dtype=np.int64
    )
    cat = np.array(
        [cat_ix[arrival_rows.categories[i]] for i in keep], dtype=np.int64
    )
    bor = np.array(
        [bor_ix[arrival_rows.boroughs[i]] for i in keep], dtype=np.int64
    )
    region = tuple(
        arrival_rows.regions[i] or arrival_rows.boroughs[i] for i in keep
    )
    counts = np.zeros((T, len(cats), len(bors)), dtype=np.int64)
    np.add.at(counts, (day, cat, bor), 1)
    arrivals = ArrivalTrace(
        tuple(cats),
        tuple(bors),
        counts,
        record_day=day,
        record_category=cat,
        record_borough=bor,
        record_region=region,
        start_date=lo,
    )
    capacity = np.zeros(T, dtype=np.int64)
    for d, n in capacity_rows:
        if lo <= d <= hi:
            capacity[(d - lo).days] = n
    return arrivals, CapacityTrace(capacity, start_date=lo)


def resolve_risk_matrix(
    arrivals: ArrivalTrace,
    arrival_rows: ArrivalRows | None = None,
    config_levels: dict[str, float] | None = None,
) -> np.ndarray:
    """(K, B) risk ratings for a trace, by the documented precedence."""
    K, B = arrivals.n_categories, arrivals.n_boroughs
    risk = np.full((K, B), FALLBACK_RISK)
    for k, cat in enumerate(arrivals.categories):
        if cat in DEFAULT_RISK_LEVELS:
            risk[k, :] = DEFAULT_RISK_LEVELS[cat]
    if arrival_rows is not None and any(r is not None for r in arrival_rows.risks):
        sums = np.zeros((K, B))
        nums = np.zeros((K, B))
        cat_ix = {c: k for k, c in enumerate(arrivals.categories)}
        bor_ix = {b: j for j, b in enumerate(arrivals.boroughs)}
        for c, b, r in zip(
            arrival_rows.categories, arrival_rows.boroughs, arrival_rows.risks
        ):
            if r is None or c not in cat_ix or b not in bor_ix:
                continue
            sums[cat_ix[c], bor_ix[b]] += r
            nums[cat_ix[c], bor_ix[b]] += 1
        has = nums > 0
        risk[has] = sums[has] / nums[has]
    for cat, level in (config_levels or {}).items():
        if cat in arrivals.categories:
            risk[arrivals.categories.index(cat), :] = level
    if (risk <= 0).any():
        raise errors.NonPositiveRisk(
            "resolved risk ratings must be positive; check the risk column"
            " and config risk.* overrides"
        )
    return risk


@dataclass(eq=False)
class ToolConfig:
    """Parsed INI configuration plus the verbatim file text."""

    align: str = "intersect"
    simulation: dict = field(default_factory=dict)
    metrics: dict = field(default_factory=dict)
    search: dict = field(default_factory=dict)
    risk_levels: dict = field(default_factory=dict)
    text: str | None = None


_SIM_KEYS = {
    "review_period": int,
    "fcfs_violation": float,
    "seed": int,
    "trace_repeats": int,
}
_METRIC_KEYS = {
    "sla_percentile": float,
    "drop_cost": float,
    "equity_kind": str,
}
_SEARCH_KEYS = {
    "policy_class": str,
    "batch_size": int,
    "iterations": int,
    "seeds_per_policy": int,
    "sampler": str,
    "seed": int,
}


def read_config(path: str | None) -> ToolConfig:
    """Parse a config INI; None gives all defaults."""
    cfg = ToolConfig()
    if path is None:
        return cfg
    try:
        with open(path, encoding="utf-8") as handle:
            text = handle.read()
    except OSError as exc:
        raise errors.IoError(f"cannot read {path}: {exc}") from None
    parser = configparser.ConfigParser()
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise errors.MalformedRow(f"{path}: {exc}") from None
    known = {"data", "simulation", "metrics", "search"}
    extra = set(parser.sections()) - known
    if extra:
        raise errors.MalformedRow(
            f"{path}: unknown config sections {sorted(extra)}"
        )

    def convert(section, key, kind):
        raw = parser.get(section, key)
        try:
            return kind(raw)
        except ValueError:
            raise errors.MalformedRow(
                f"{path}: [{section}] {key} = {raw!r} is not a valid"
                f" {kind.__name__}"
            ) from None

    if parser.has_section("data"):
        for key in parser.options("data"):
            if key != "align":
                raise errors.MalformedRow(
                    f"{path}: unknown key {key!r} in [data]"
                )
        if parser.has_option("data", "align"):
            cfg.align = parser.get("data", "align")
            if cfg.align not in _ALIGN_MODES:
                raise errors.MalformedRow(
                    f"{path}: [data] align must be one of {_ALIGN_MODES},"
                    f" got {cfg.align!r}"
                )
    for section, keys, dest in (
        ("simulation", _SIM_KEYS, cfg.simulation),
        ("search", _SEARCH_KEYS, cfg.search),
    ):
        if parser.has_section(section):
            for key in parser.options(section):
                if key not in keys:
                    raise errors.MalformedRow(
                        f"{path}: unknown key {key!r} in [{section}]"
                    )
                dest[key] = convert(section, key, keys[key])
    if parser.has_section("metrics"):
        for key in parser.options("metrics"):
            if key in _METRIC_KEYS:
                cfg.metrics[key] = convert("metrics", key, _METRIC_KEYS[key])
            elif key.startswith("risk."):
                cat = key[len("risk."):]
                cfg.risk_levels[cat] = convert("metrics", key, float)
            else:
                raise errors.MalformedRow(
                    f"{path}: unknown key {key!r} in [metrics]"
                )
    cfg.text = text
    return cfg


def format_value(x: float) -> str:
    """Full-precision, round-trippable float formatting for CSV cells."""
    return repr(float(x))


def write_policies_csv(path: str, policies: list[tuple[str, dict]], categories, boroughs):
    """Write policies in long format.

    `policies` maps each policy_id to a dict with optional keys
    'budget_frac' (B,), 'gps' (K, B), 'target_frac' (K, B).
    """
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["policy_id", "param", "category", "borough", "value"])
        for pid, params in policies:
            budget = params.get("budget_frac")
            if budget is not None:
                for j, bor in enumerate(boroughs):
                    writer.writerow(
                        [pid, "budget_frac", "", bor, format_value(budget[j])]
                    )
            for name in ("gps", "target_frac"):
                mat = params.get(name)
                if mat is None:
                    continue
                for j, bor in enumerate(boroughs):
                    for k, cat in enumerate(categories):
                        writer.writerow(
                            [pid, name, cat, bor, format_value(mat[k][j])]
                        )


def read_policies_csv(
    path: str, policy_class: str, categories, boroughs
) -> list[tuple[str, np.ndarray]]:
    """Read policies back as raw vectors in canonical layout.

    Returns (policy_id, vector) in first-appearance order. Every cell the
    policy class needs must be present exactly once.
    """
    rows = _open_rows(path)
    header = [c.strip() for c in rows[0]]
    if header != ["policy_id", "param", "category", "borough", "value"]:
        raise errors.MalformedRow(
            f"{path}: expected header policy_id,param,category,borough,value"
            f" got {','.join(header)}"
        )
    if len(rows) == 1:
        raise errors.EmptyFile(f"{path} has a header but no data rows")
    K, B = len(categories), len(boroughs)
    cat_ix = {c: k for k, c in enumerate(categories)}
    bor_ix = {b: j for j, b in enumerate(boroughs)}
    if policy_class == "borough":
        needed = {"budget_frac", "gps", "target_frac"}
        dim = B + 2 * K * B
    else:
        needed = {"gps"}
        dim = K * B
    order: list[str] = []
    cells: dict[str, dict] = {}
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != 5:
            raise errors.MalformedRow(
                f"{path}:{i}: expected 5 fields, got {len(row)}"
            )
        pid, param, cat, bor, val_s = (c.strip() for c in row)
        if pid not in cells:
            cells[pid] = {}
            order.append(pid)
        if param not in ("budget_frac", "gps", "target_frac"):
            raise errors.MalformedRow(
                f"{path}:{i}: unknown param {param!r}"
            )
        if param not in needed:
            continue  # e.g. target_frac echoes on a city policy file
        try:
            val = float(val_s)
        except ValueError:
            raise errors.MalformedRow(
                f"{path}:{i}: value must be a number, got {val_s!r}"
            ) from None
        if bor not in bor_ix:
            raise errors.MalformedRow(
                f"{path}:{i}: unknown borough {bor!r} (trace has"
                f" {list(boroughs)})"
            )
        j = bor_ix[bor]
        if param == "budget_frac":
            if cat:
                raise errors.MalformedRow(
                    f"{path}:{i}: budget_frac rows must leave category empty"
                )
            key = ("budget_frac", j)
        else:
            if cat not in cat_ix:
                raise errors.MalformedRow(
                    f"{path}:{i}: unknown category {cat!r} (trace has"
                    f" {list(categories)})"
                )
            key = (param, cat_ix[cat], j)
        if key in cells[pid]:
            raise errors.MalformedRow(
                f"{path}:{i}: duplicate cell {key} for policy {pid!r}"
            )
        cells[pid][key] = val
    out = []
    for pid in order:
        got = cells[pid]
        vec = np.empty(dim)
        pos = 0
        if policy_class == "borough":
            for j in range(B):
                key = ("budget_frac", j)
                if key not in got:
                    raise errors.MalformedRow(
                        f"{path}: policy {pid!r} is missing budget_frac for"
                        f" borough {boroughs[j]!r}"
                    )
                vec[pos] = got[key]
                pos += 1
        param_list = ("gps", "target_frac") if policy_class == "borough" else ("gps",)
        for param in param_list:
            for j in range(B):
                for k in range(K):
                    key = (param, k, j)
                    if key not in got:
                        raise errors.MalformedRow(
                            f"{path}: policy {pid!r} is missing {param} for"
                            f" {categories[k]!r}/{boroughs[j]!r}"
                        )
                    vec[pos] = got[key]
                    pos += 1
        out.append((pid, vec))
    return out


def digest_bytes(payload: bytes) -> str:
    return hashlib.blake2b(payload, digest_size=16).hexdigest()


def digest_file(path: str) -> str:
    try:
        with open(path, "rb") as handle:
            return digest_bytes(handle.read())
    except OSError as exc:
        raise errors.IoError(f"cannot read {path}: {exc}") from None


def write_report(path: str, payload: dict):
    """Deterministic JSON report (sorted keys, trailing newline)."""
    text = json.dumps(payload, indent=2, sort_keys=True, allow_nan=False)
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(text + "\n")


def jsonable(value):
    """Recursively convert numpy scalars/arrays; NaN becomes None."""
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [jsonable(v) for v in value.tolist()]
    if isinstance(value, (np.floating, float)):
        v = float(value)
        return None if not np.isfinite(v) else v
    if isinstance(value, (np.integer,)):
        return int(value)
    return value
