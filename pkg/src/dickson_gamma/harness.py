"""Batch verification of the identities: configuration, sampling, reports.

A suite is a JSON document::

    {
      "seed": 42,
      "cases": [
        {"id": "T1", "sampling": "random", "count": 50,
         "region": {"k": {"values": [1, 2, 3]}, "x": {"re": [-1, 1], "im": [-0.5, 0.5]}},
         "policy": {"mode": "terminating"}}
      ],
      "tolerances": {"terminating": 1e-9, "convergent": 1e-9, "asymptotic_factor": 10},
      "output": {"format": "json", "path": "report.jsonl"}
    }

Region entries override the per-case defaults in :data:`DEFAULT_REGIONS`.
Each parameter is either a box (``re``/``im`` intervals) or a list of
``values``.  Draws that hit a singular guard are rejected and redrawn.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import ConfigError, DicksonGammaError
from .identities import (
    CASE_IDS,
    EX1_PARAMS,
    SIGNATURES,
    VARIANTS,
    IdentityCase,
    ResidualReport,
    Tolerances,
    ex2_rhs,
    gamma_quotient_partials,
    outer_terms,
    regime,
    residual,
    rhs_closed,
)
from .series import CompensatedSum, TruncationPolicy

SAMPLINGS = ("grid", "random")
FORMATS = ("json", "csv")
MAX_REJECTIONS = 1000

_T_BOX = {"re": [0.5, 3.0], "im": [-1.0, 1.0]}
_SMALL = {"re": [-0.5, 0.5], "im": [-0.3, 0.3]}
_K_INT = {"values": [1, 2, 3, 4, 5]}
_K_ASYM = {"values": [0.3, -0.4, "0.5+0.2j"]}

DEFAULT_REGIONS: Dict[str, Dict[str, dict]] = {
    "T1": {"k": _K_INT, "a": _T_BOX, "alpha": _SMALL, "x": {"re": [-1.0, 1.0], "im": [-0.5, 0.5]}},
    "T2": {"k": _K_INT, "a": _T_BOX, "alpha": _SMALL, "z": {"re": [-0.6, 0.6], "im": [-0.4, 0.4]}},
    "T3": {"k": _K_INT, "a": _T_BOX, "x": {"re": [-1.0, 1.0], "im": [-0.5, 0.5]}, "z": {"re": [-0.5, 0.5], "im": [-0.3, 0.3]}},
    "T4": {"k": _K_INT, "a": _T_BOX, "alpha": _SMALL, "x": {"re": [-1.0, 1.0], "im": [-0.5, 0.5]}},
    "T5": {"k": _K_INT, "a": _T_BOX, "alpha": _SMALL, "z": {"re": [-0.6, 0.6], "im": [-0.4, 0.4]}},
    "T6": {"k": _K_INT, "a": _T_BOX, "x": {"re": [-1.0, 1.0], "im": [-0.5, 0.5]}, "z": {"re": [-0.5, 0.5], "im": [-0.3, 0.3]}},
    "T7": {"k": _K_INT, "a": _T_BOX, "b": _SMALL, "u": {"re": [0.3, 1.5], "im": [-0.5, 0.5]}},
    "T8": {"k": _K_INT, "a": _T_BOX, "beta": _SMALL, "y": {"re": [0.3, 1.5], "im": [-0.5, 0.5]}},
    "P1": {"k": _K_ASYM, "a": {"re": [20.0, 60.0], "im": [-10.0, 10.0]}, "x": {"re": [-0.2, 0.2], "im": [-0.2, 0.2]}},
    "P2": {"k": _K_ASYM, "a": {"re": [20.0, 60.0], "im": [-10.0, 10.0]}, "alpha": _SMALL, "z": {"re": [-0.2, 0.2], "im": [-0.2, 0.2]}},
    "P3": {"k": _K_ASYM, "a": {"re": [2.0, 6.0], "im": [-1.0, 1.0]}, "x": {"re": [0.2, 0.6], "im": [-0.2, 0.2]}, "z": {"re": [0.1, 0.3], "im": [-0.1, 0.1]}},
    "GQ": {"k": {"values": [0.5, 1.5, 2.5, "0.3+0.4j"]}, "a": {"re": [1.5, 3.0], "im": [-0.5, 0.5]}, "x": {"re": [0.3, 0.7], "im": [-0.1, 0.1]}, "z": {"re": [0.2, 0.4], "im": [-0.1, 0.1]}},
    "EX1": {name: {"values": [v]} for name, v in EX1_PARAMS.items()},
    "EX2": {"a": {"re": [0.5, 1.5], "im": [0.0, 0.0]}, "alpha": {"re": [0.1, 0.5], "im": [-0.1, 0.1]}, "z": {"re": [-0.3, 0.3], "im": [-0.2, 0.2]}},
}


def parse_complex(v) -> complex:
    """Accept numbers, ``{"re", "im"}`` maps and strings such as ``"1/3"`` or ``"0.5+0.2i"``."""
    if isinstance(v, dict):
        if set(v) - {"re", "im"}:
            raise ConfigError(f"complex map has unexpected keys {sorted(set(v) - {'re', 'im'})}")
        try:
            return complex(float(v.get("re", 0.0)), float(v.get("im", 0.0)))
        except (TypeError, ValueError):
            raise ConfigError(f"cannot parse {v!r} as a complex number") from None
    if isinstance(v, bool):
        raise ConfigError("booleans are not numbers here")
    if isinstance(v, (int, float, complex)):
        return complex(v)
    if isinstance(v, str):
        s = v.strip().replace(" ", "").replace("i", "j")
        try:
            return complex(s)
        except ValueError:
            pass
        try:
            return complex(float(Fraction(s)))
        except (ValueError, ZeroDivisionError):
            raise ConfigError(f"cannot parse {v!r} as a complex number") from None
    raise ConfigError(f"cannot parse {v!r} as a complex number")


def cjson(z: complex) -> dict:
    z = complex(z)
    return {"re": _fjson(z.real), "im": _fjson(z.imag)}


def _fjson(x: float):
    # JSON has no nan/inf; None keeps the record valid
    return x if math.isfinite(x) else None


# --------------------------------------------------------------- config


@dataclass(frozen=True)
class CaseSpec:
    id: str
    sampling: str = "random"
    count: int = 10
    policy: Optional[TruncationPolicy] = None
    region: Dict[str, dict] = field(default_factory=dict)
    variant: Optional[str] = None


@dataclass(frozen=True)
class SuiteConfig:
    seed: int
    cases: Tuple[CaseSpec, ...]
    tolerances: Tolerances = Tolerances()
    output_format: str = "json"
    output_path: Optional[str] = None

    @classmethod
    def from_dict(cls, d: dict) -> "SuiteConfig":
        if not isinstance(d, dict):
            raise ConfigError("suite configuration must be a JSON object")
        unknown = set(d) - {"seed", "cases", "tolerances", "output"}
        if unknown:
            raise ConfigError(f"unknown top-level keys {sorted(unknown)}")
        seed = d.get("seed", 0)
        if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
            raise ConfigError("seed must be a nonnegative integer")
        raw_cases = d.get("cases")
        if not isinstance(raw_cases, list) or not raw_cases:
            raise ConfigError("cases must be a nonempty list")
        cases = tuple(_parse_case(c) for c in raw_cases)
        tol = d.get("tolerances", {})
        try:
            tolerances = Tolerances(
                float(tol.get("terminating", 1e-9)),
                float(tol.get("convergent", 1e-9)),
                float(tol.get("asymptotic_factor", 10.0)),
                float(tol.get("asymptotic_floor", 1e-8)),
            )
        except (DicksonGammaError, TypeError, ValueError, AttributeError) as exc:
            raise ConfigError(f"bad tolerances: {exc}") from None
        out = d.get("output", {})
        if not isinstance(out, dict):
            raise ConfigError("output must be an object")
        fmt = out.get("format", "json")
        if fmt not in FORMATS:
            raise ConfigError(f"output format must be one of {FORMATS}")
        return cls(seed, cases, tolerances, fmt, out.get("path"))

    @classmethod
    def load(cls, path: str) -> "SuiteConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read {path}: {exc}") from None
        return cls.from_dict(data)

    def with_seed(self, seed: int) -> "SuiteConfig":
        return SuiteConfig(seed, self.cases, self.tolerances, self.output_format, self.output_path)


def _parse_case(c) -> CaseSpec:
    if not isinstance(c, dict):
        raise ConfigError("each case must be an object")
    unknown = set(c) - {"id", "sampling", "count", "policy", "region", "variant"}
    if unknown:
        raise ConfigError(f"unknown case keys {sorted(unknown)}")
    cid = c.get("id")
    if cid not in CASE_IDS:
        raise ConfigError(f"unknown case id {cid!r}")
    sampling = c.get("sampling", "random")
    if sampling not in SAMPLINGS:
        raise ConfigError(f"sampling must be one of {SAMPLINGS}")
    count = c.get("count", 10)
    if not isinstance(count, int) or isinstance(count, bool) or count < 1:
        raise ConfigError("count must be an integer >= 1")
    policy = None
    if "policy" in c:
        try:
            policy = TruncationPolicy.from_dict(c["policy"])
        except (DicksonGammaError, TypeError, ValueError, AttributeError) as exc:
            raise ConfigError(f"bad policy for {cid}: {exc}") from None
    variant = c.get("variant")
    if variant is not None and variant not in VARIANTS.get(cid, ()):
        raise ConfigError(f"{cid} has no variant {variant!r}")
    region = c.get("region", {})
    if not isinstance(region, dict):
        raise ConfigError("region must be an object")
    for name, spec in region.items():
        if name not in SIGNATURES[cid]:
            raise ConfigError(f"{cid} has no parameter {name!r}")
        _check_region(name, spec)
    return CaseSpec(cid, sampling, count, policy, region, variant)


def _check_region(name: str, spec):
    if not isinstance(spec, dict):
        raise ConfigError(f"region for {name} must be an object")
    if "values" in spec:
        vals = spec["values"]
        if not isinstance(vals, list) or not vals:
            raise ConfigError(f"values for {name} must be a nonempty list")
        for v in vals:
            parse_complex(v)
        return
    for part in ("re", "im"):
        iv = spec.get(part, [0.0, 0.0])
        if (
            not isinstance(iv, list)
            or len(iv) != 2
            or not all(isinstance(t, (int, float)) and not isinstance(t, bool) for t in iv)
            or iv[0] > iv[1]
        ):
            raise ConfigError(f"{name}.{part} must be an interval [lo, hi] with lo <= hi")


# ------------------------------------------------------------- sampling


def _guard(cid: str, p: Dict[str, complex]) -> bool:
    """True when a draw keeps a safe distance from every singular configuration."""
    g = p.get
    if "a" in p and cid != "EX2" and abs(p["a"]) < 1e-2:
        return False
    if cid in ("T1", "T4"):
        return abs(g("alpha")) > 1e-3 and abs(g("x") ** 2 - 4 * g("alpha")) > 1e-2
    if cid in ("T2", "T5"):
        z, al = g("z"), g("alpha")
        return abs(z) > 0.05 and abs(1 + z * z * al) > 1e-2
    if cid in ("T3", "T6"):
        x, z = g("x"), g("z")
        return abs(z) > 0.05 and abs(x * z) <= 0.3 and abs(1 - x * z) > 1e-2
    if cid == "T7":
        b, u = g("b"), g("u")
        return abs(b) > 1e-2 and abs(u) > 0.2 and abs(u * u - b) > 1e-2
    if cid == "T8":
        be, y = g("beta"), g("y")
        return abs(be) > 1e-2 and abs(y) > 0.2 and abs(y * y - be) > 1e-2
    if cid == "P1":
        return 1e-3 < abs(g("x")) and abs(g("x") / g("a")) <= 0.01
    if cid == "P2":
        return 1e-3 < abs(g("z")) and abs(g("z") / g("a")) <= 0.01 and abs(g("alpha")) > 1e-3
    if cid == "EX2":
        if abs(g("alpha")) < 1e-2 or not abs(g("z")) ** 2 * abs(g("alpha")) < 1:
            return False
        try:
            ex2_rhs(g("a"), g("alpha"), g("z"))
        except DicksonGammaError:
            return False
    return True


# golden-ratio generalisation: additive recurrence with irrational steps
def _weyl_steps(d: int) -> np.ndarray:
    phi = 2.0
    for _ in range(50):
        phi = (1 + phi) ** (1.0 / (d + 1))
    return np.array([(1.0 / phi) ** (i + 1) for i in range(d)])


class _Sampler:
    def __init__(self, spec: CaseSpec, seed: int, index: int):
        self.spec = spec
        self.names = SIGNATURES[spec.id]
        self.region = {**DEFAULT_REGIONS[spec.id], **spec.region}
        # every case gets its own stream, so adding a case leaves the others alone
        self.rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))
        self.steps = _weyl_steps(2 * len(self.names))
        self.counter = 0

    def _unit(self) -> np.ndarray:
        d = 2 * len(self.names)
        if self.spec.sampling == "random":
            return self.rng.random(d)
        self.counter += 1
        return np.mod(0.5 + self.counter * self.steps, 1.0)

    def _value(self, name: str, u_re: float, u_im: float, draw: int) -> complex:
        spec = self.region[name]
        if "values" in spec:
            vals = spec["values"]
            if self.spec.sampling == "grid":
                # cycle fastest through the listed values
                pos = draw % len(vals)
            else:
                pos = min(int(u_re * len(vals)), len(vals) - 1)
            return parse_complex(vals[pos])
        lo_r, hi_r = spec.get("re", [0.0, 0.0])
        lo_i, hi_i = spec.get("im", [0.0, 0.0])
        re = lo_r + (hi_r - lo_r) * u_re
        im = lo_i + (hi_i - lo_i) * u_im
        return complex(float(re), float(im))

    def draw(self, index: int) -> Dict[str, complex]:
        for _ in range(MAX_REJECTIONS):
            u = self._unit()
            p = {n: self._value(n, u[2 * i], u[2 * i + 1], index) for i, n in enumerate(self.names)}
            if _guard(self.spec.id, p):
                return p
        raise ConfigError(f"{self.spec.id}: region rejected {MAX_REJECTIONS} draws in a row")


def sample_cases(cfg: SuiteConfig) -> List[Tuple[int, int, IdentityCase, Optional[TruncationPolicy]]]:
    """All ``(case position, draw index, case, policy)`` tuples of a suite."""
    out = []
    for ci, spec in enumerate(cfg.cases):
        sampler = _Sampler(spec, cfg.seed, ci)
        for i in range(spec.count):
            p = sampler.draw(i)
            out.append((ci, i, IdentityCase(spec.id, p, spec.variant), spec.policy))
    return out


# -------------------------------------------------------------- running


@dataclass
class RunSummary:
    total: int = 0
    passed: int = 0
    failed: int = 0
    errored: int = 0
    branch_flagged: int = 0
    wall_time: float = 0.0

    @property
    def exit_code(self) -> int:
        return 0 if self.failed == 0 and self.errored == 0 else 1

    def line(self) -> str:
        return (
            f"total={self.total} passed={self.passed} failed={self.failed} "
            f"errored={self.errored} branch_flagged={self.branch_flagged} wall_time={self.wall_time:.2f}s"
        )


def report_record(ci: int, index: int, rep: ResidualReport) -> dict:
    case = rep.case
    rec = {
        "case": case.id,
        "case_index": ci,
        "draw": index,
        "variant": case.variant,
        "params": {k: cjson(v) for k, v in case.params.items()},
        "regime": rep.regime,
        "lhs": cjson(rep.lhs.value) if rep.lhs is not None else None,
        "rhs": cjson(rep.rhs) if rep.rhs is not None else None,
        "abs_residual": _fjson(rep.abs_residual),
        "rel_residual": _fjson(rep.rel_residual),
        "threshold": rep.threshold,
        "pass": rep.passed,
        "branch_flag": rep.branch_flag,
        "error": rep.error,
    }
    if rep.lhs is not None:
        rec.update(
            abs_err_estimate=_fjson(rep.lhs.abs_err_estimate),
            terms_used=rep.lhs.terms_used,
            terminated=rep.lhs.terminated,
            smallest_term=_fjson(rep.lhs.smallest_term),
        )
    if rep.extra:
        rec["extra"] = {k: _fjson(v) if isinstance(v, float) else v for k, v in rep.extra.items()}
    return rec


def _evaluate(job):
    ci, i, case, policy, tol = job
    return report_record(ci, i, residual(case, policy, tol))


_CSV_FIELDS = [
    "case", "case_index", "draw", "variant", "params", "regime", "lhs_re", "lhs_im", "rhs_re", "rhs_im",
    "abs_residual", "rel_residual", "threshold", "pass", "branch_flag", "error",
]


def _csv_row(rec: dict) -> dict:
    row = {k: rec.get(k) for k in _CSV_FIELDS if k in rec}
    row["params"] = ";".join(f"{k}={complex(v['re'], v['im'])!r}" for k, v in rec["params"].items())
    for side in ("lhs", "rhs"):
        v = rec.get(side)
        row[f"{side}_re"] = repr(v["re"]) if v else ""
        row[f"{side}_im"] = repr(v["im"]) if v else ""
    for k in ("abs_residual", "rel_residual", "threshold"):
        row[k] = repr(rec[k])
    return row


def render_report(records: Sequence[dict], fmt: str = "json") -> str:
    if fmt == "json":
        return "".join(json.dumps(r, allow_nan=False) + "\n" for r in records)
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=_CSV_FIELDS, lineterminator="\n")
    w.writeheader()
    for r in records:
        w.writerow(_csv_row(r))
    return buf.getvalue()


def run_suite(cfg: SuiteConfig, out_path: Optional[str] = None, jobs: int = 1) -> Tuple[RunSummary, List[dict]]:
    """Sample, evaluate and (optionally) write the report.

    Output depends only on the configuration and its seed, whatever
    ``jobs`` is: records are sorted by case position and draw index.
    """
    t0 = time.perf_counter()
    work = [(ci, i, case, pol, cfg.tolerances) for ci, i, case, pol in sample_cases(cfg)]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            records = list(ex.map(_evaluate, work, chunksize=8))
    else:
        records = [_evaluate(w) for w in work]
    records.sort(key=lambda r: (r["case_index"], r["draw"]))
    s = RunSummary(total=len(records))
    for r in records:
        if r["error"] is not None:
            s.errored += 1
        elif r["pass"]:
            s.passed += 1
        else:
            s.failed += 1
        s.branch_flagged += bool(r["branch_flag"])
    path = out_path or cfg.output_path
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(render_report(records, cfg.output_format))
    s.wall_time = time.perf_counter() - t0
    return s, records


def record_case(rec: dict) -> IdentityCase:
    """Rebuild the case of a report record (for re-evaluation)."""
    params = {k: complex(v["re"], v["im"]) for k, v in rec["params"].items()}
    return IdentityCase(rec["case"], params, rec.get("variant"))


def recheck_rhs(rec: dict) -> complex:
    return rhs_closed(record_case(rec))


def default_suite(seed: int = 42, draws: int = 50) -> SuiteConfig:
    """Every identity: the T-cases over k = 1..5, the rest in their own regimes."""
    cases = [CaseSpec(f"T{i}", "random", draws) for i in range(1, 9)]
    cases += [
        CaseSpec("P1", "random", 12),
        CaseSpec("P2", "random", 12),
        CaseSpec("P3", "random", 6),
        CaseSpec("GQ", "random", 8),
        CaseSpec("EX1", "grid", 1),
        CaseSpec("EX2", "random", 20),
    ]
    return SuiteConfig(seed, tuple(cases))


def default_suite_dict(seed: int = 42, draws: int = 50) -> dict:
    cfg = default_suite(seed, draws)
    return {
        "seed": cfg.seed,
        "cases": [{"id": c.id, "sampling": c.sampling, "count": c.count} for c in cfg.cases],
        "tolerances": {"terminating": 1e-9, "convergent": 1e-9, "asymptotic_factor": 10.0},
        "output": {"format": "json", "path": "report.jsonl"},
    }


# ---------------------------------------------------- convergence tables


@dataclass
class TableRow:
    N: int
    value: complex
    delta: float
    smallest_term: float


@dataclass
class ConvergenceTable:
    case: IdentityCase
    rows: List[TableRow]
    turnover: Optional[int]
    best_value: Optional[complex]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["N", "re", "im", "delta", "smallest_term"])
        for r in self.rows:
            # + 0.0 drops the sign of a zero
            w.writerow([r.N, repr(r.value.real + 0.0), repr(r.value.imag + 0.0), repr(r.delta), repr(r.smallest_term)])
        return buf.getvalue()


def partial_sums(case: IdentityCase, N: int) -> Tuple[List[complex], List[float]]:
    """Partial values ``S_0..S_N`` and the magnitude of the step into each.

    For GQ / EX1 the partial value is the quotient of the two partial sums
    (``nan`` while the denominator is still zero) and the step is the change
    of that quotient.
    """
    if case.id in ("GQ", "EX1"):
        p = case.params
        rows = gamma_quotient_partials(p["k"], p["a"], p["x"], p["z"], N)
        vals = [q for _, _, q in rows]
        steps = [math.nan] + [abs(vals[n] - vals[n - 1]) for n in range(1, N + 1)]
        return vals, steps
    terms = outer_terms(case, N)
    acc = CompensatedSum()
    vals = []
    for t in terms:
        acc.add(t)
        vals.append(acc.value)
    return vals, [abs(t) for t in terms]


def convergence_table(case: IdentityCase, n_values: Sequence[int]) -> ConvergenceTable:
    """Rows ``(N, S_N, |S_N - S_prev|, smallest step so far)`` for the listed ``N``.

    The turnover is the ``N`` whose step into it is the smallest nonzero,
    finite step up to ``max(n_values)``; its partial value is the best
    approach of an asymptotic series.
    """
    n_values = sorted(set(int(n) for n in n_values))
    if not n_values or n_values[0] < 0:
        raise ConfigError("table needs nonnegative N values")
    nmax = n_values[-1]
    vals, steps = partial_sums(case, nmax)
    smallest = []
    cur = math.inf
    for s in steps:
        if math.isfinite(s) and s > 0:
            cur = min(cur, s)
        smallest.append(cur)
    rows = []
    prev = None
    for n in n_values:
        v = vals[n]
        delta = math.nan if prev is None else abs(v - prev)
        rows.append(TableRow(n, v, delta, smallest[n]))
        prev = v
    turnover = None
    best = None
    cands = [n for n in range(1, nmax + 1) if math.isfinite(steps[n]) and steps[n] > 0 and not math.isnan(vals[n - 1].real)]
    if cands and regime(case) == "asymptotic":
        turnover = min(cands, key=lambda n: steps[n])
        # the sum stops before the smallest step, as in optimal truncation
        best = vals[turnover - 1]
    return ConvergenceTable(case, rows, turnover, best)
