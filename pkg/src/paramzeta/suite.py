"""Suite files: a parameter grid and a list of relation instances, run in batch.

Format (``#`` starts a comment)::

    precision = 256          # top-level key = value settings
    jobs = 1
    tol.csf-strict = 1e-6    # per-relation tolerance

    [grid main]              # one parameter point per line
    1, 1
    0.8, 1.7

    [relations]              # id key=value ... grid=NAME [tol=X]
    csf-strict index=admissible:6:3 grid=main
    sum-formula k,n=2,1;3,2 grid=main
    eq12 m=1..2 n=1..2 grid=main

Argument values expand to several instances: ``a;b;c`` lists alternatives,
``lo..hi`` is an integer range and ``admissible:W:D`` lists every admissible
index of weight <= W and depth <= D.  A key like ``k,n`` takes tuples.  The
instance list is the cartesian product of all arguments and grid points, in
the order written.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from . import __version__
from .indices import admissible_indices, format_index, parse_index
from .relations import INDEX_ARGS, RELATIONS, run_relation, validate_instance
from .series import EvalOptions, ParamPoint


class SuiteError(ValueError):
    """Malformed suite file or an instance that violates its preconditions."""


@dataclass(frozen=True)
class Instance:
    relation_id: str
    args: tuple  # (name, value) pairs in argument order
    params: ParamPoint
    tol: float | None = None

    def arg_dict(self) -> dict:
        return dict(self.args)


@dataclass
class SuiteConfig:
    instances: list = field(default_factory=list)
    grids: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    precision: int | None = None
    m_max: int | None = None
    jobs: int = 1
    output: str | None = None
    csv_output: str | None = None
    settings: dict = field(default_factory=dict)

    def eval_options(self) -> EvalOptions:
        kw = {}
        if self.precision:
            kw["precision"] = self.precision
        if self.m_max:
            kw["m_max"] = self.m_max
        return EvalOptions(**kw)


def _expand_value(key: str, text: str) -> list:
    """All values one argument takes."""
    out = []
    for alt in text.split(";"):
        alt = alt.strip()
        if not alt:
            continue
        if key in INDEX_ARGS:
            if alt.startswith("admissible:"):
                _, w, d = alt.split(":")
                out.extend(format_index(x) for x in admissible_indices(int(w), int(d)))
            else:
                out.append(format_index(parse_index(alt)))
        elif ".." in alt:
            lo, hi = alt.split("..")
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(alt))
    return out


def _parse_point(line: str) -> ParamPoint:
    parts = [p.strip() for p in line.split(",")]
    if len(parts) not in (2, 3):
        raise SuiteError(f"grid point needs 2 or 3 values: {line!r}")
    return ParamPoint(*parts)


def parse_suite(text: str) -> SuiteConfig:
    cfg = SuiteConfig()
    section = None
    grid_name = None
    pending = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            if line.startswith("["):
                if not line.endswith("]"):
                    raise SuiteError("unterminated section header")
                head = line[1:-1].split()
                if head[0] == "grid" and len(head) == 2:
                    section, grid_name = "grid", head[1]
                    cfg.grids[grid_name] = []
                elif head == ["relations"]:
                    section = "relations"
                else:
                    raise SuiteError(f"unknown section {line}")
                continue
            if section == "grid":
                cfg.grids[grid_name].append(_parse_point(line))
            elif section == "relations":
                pending.append((lineno, line))
            else:
                key, sep, value = line.partition("=")
                if not sep:
                    raise SuiteError("expected key = value")
                key, value = key.strip(), value.strip()
                cfg.settings[key] = value
                if key.startswith("tol."):
                    cfg.tolerances[key[4:]] = float(value)
                elif key == "precision":
                    cfg.precision = int(value)
                elif key == "m_max":
                    cfg.m_max = int(value)
                elif key == "jobs":
                    cfg.jobs = int(value)
                elif key == "output":
                    cfg.output = value
                elif key == "csv":
                    cfg.csv_output = value
                else:
                    raise SuiteError(f"unknown setting {key!r}")
        except (ValueError, IndexError) as exc:
            raise SuiteError(f"line {lineno}: {exc}") from None
    for lineno, line in pending:
        try:
            cfg.instances.extend(_expand_relation_line(line, cfg))
        except (ValueError, KeyError) as exc:
            raise SuiteError(f"line {lineno}: {exc}") from None
    return cfg


def _expand_relation_line(line: str, cfg: SuiteConfig) -> list[Instance]:
    tokens = line.split()
    rid = tokens[0]
    if rid not in RELATIONS:
        raise SuiteError(f"unknown relation {rid!r}")
    names = RELATIONS[rid][1]
    axes = []  # list of (keys, values)
    points = None
    tol = cfg.tolerances.get(rid)
    for tok in tokens[1:]:
        key, sep, value = tok.partition("=")
        if not sep:
            raise SuiteError(f"expected key=value, got {tok!r}")
        if key == "grid":
            if value not in cfg.grids:
                raise SuiteError(f"unknown grid {value!r}")
            points = cfg.grids[value]
        elif key == "params":
            points = [_parse_point(p) for p in value.split(";")]
        elif key == "tol":
            tol = float(value)
        elif "," in key:
            keys = key.split(",")
            tuples = []
            for alt in value.split(";"):
                vals = [int(v) for v in alt.split(",")]
                if len(vals) != len(keys):
                    raise SuiteError(f"{key} needs {len(keys)} values, got {alt!r}")
                tuples.append(tuple(vals))
            axes.append((keys, tuples))
        else:
            axes.append(([key], [(v,) for v in _expand_value(key, value)]))
    if points is None:
        raise SuiteError(f"{rid}: no grid= or params= given")
    given = [k for keys, _ in axes for k in keys]
    if sorted(given) != sorted(names):
        raise SuiteError(f"{rid} takes {', '.join(names)}; got {', '.join(given) or 'nothing'}")
    out = []
    for combo in itertools.product(*(vals for _, vals in axes)):
        args = {}
        for (keys, _), vals in zip(axes, combo):
            args.update(zip(keys, vals))
        ordered = tuple((n, args[n]) for n in names)
        for p in points:
            out.append(Instance(rid, ordered, p, tol))
    return out


def validate(cfg: SuiteConfig) -> None:
    for inst in cfg.instances:
        try:
            validate_instance(inst.relation_id, _call_args(inst), inst.params)
        except ValueError as exc:
            raise SuiteError(f"{inst.relation_id} {inst.arg_dict()} at {inst.params.as_strings()}: {exc}") from None


def _call_args(inst: Instance) -> dict:
    return {k: (parse_index(v) if k in INDEX_ARGS else v) for k, v in inst.args}


def _run_one(inst: Instance, opts: EvalOptions) -> dict:
    rep = run_relation(inst.relation_id, _call_args(inst), inst.params, inst.tol, opts)
    return rep.to_dict()


def run_suite(cfg: SuiteConfig, jobs: int | None = None, progress=None) -> dict:
    """Evaluate every instance and assemble the report document (config order)."""
    validate(cfg)
    opts = cfg.eval_options()
    jobs = jobs or cfg.jobs
    start = time.perf_counter()
    if jobs > 1 and len(cfg.instances) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_run_one, inst, opts) for inst in cfg.instances]
            reports = []
            for f in futures:
                reports.append(f.result())
                if progress:
                    progress(reports[-1])
    else:
        reports = []
        for inst in cfg.instances:
            reports.append(_run_one(inst, opts))
            if progress:
                progress(reports[-1])
    counts = {"pass": 0, "fail": 0, "inconclusive": 0}
    for r in reports:
        counts[r["status"]] += 1
    return {
        "tool": "paramzeta",
        "version": __version__,
        "config": {
            "settings": cfg.settings,
            "precision": opts.bits(),
            "m_max": opts.m_max,
            "jobs": jobs,
            "instances": len(cfg.instances),
        },
        "reports": reports,
        "summary": {"total": len(reports), **counts},
        "wall_time": round(time.perf_counter() - start, 3),
    }


CSV_COLUMNS = ["relation_id", "args", "alpha", "beta", "gamma", "lhs", "rhs", "rel_diff", "pass", "status"]


def report_csv(doc: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in doc["reports"]:
        p = r["params"]
        w.writerow(
            [
                r["relation_id"],
                " ".join(f"{k}={v}" for k, v in r["args"].items()),
                p["alpha"],
                p["beta"],
                p.get("gamma", ""),
                r["lhs"]["value"],
                r["rhs"]["value"],
                r["rel_diff"],
                str(r["pass"]).lower(),
                r["status"],
            ]
        )
    return buf.getvalue()


def write_report(doc: dict, json_path: str | None, csv_path: str | None) -> None:
    if json_path:
        with open(json_path, "w") as fh:
            json.dump(doc, fh, indent=2)
            fh.write("\n")
    if csv_path:
        with open(csv_path, "w", newline="") as fh:
            fh.write(report_csv(doc))


def numeric_fields(doc: dict) -> list:
    """Every decimal string in the reports, in order (for reproducibility checks)."""
    out = []

    def walk(x):
        if isinstance(x, dict):
            for k in sorted(x):
                if k != "wall_time":
                    walk(x[k])
        elif isinstance(x, list):
            for v in x:
                walk(v)
        elif isinstance(x, str) and x[:1] in "-0123456789" and "e" in x:
            out.append(x)

    walk(doc["reports"])
    return out
