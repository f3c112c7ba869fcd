"""Pipelines behind the command line, and their JSON/CSV reports.

Every number on disk is an exact fraction string; a report is a plain
JSON document, so ``Report.from_json(report.to_json()) == report``.
"""

from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path

from .charges import AtomCharge, Charge, charge_from_json
from .derivative import (
    DerivativeField,
    LevelSetFamily,
    RationalGrid,
    _as_parametric,
    _default_family,
    auto_r_max,
    level_certificates,
    null_defects,
    verify_rn_identity,
    _level_family,
    build_level_family,
)
from .errors import ConstructionError, InputError
from .hahn import EpsSchedule, construct_hahn, verify_hahn
from .parametric import ParametricCharge
from .space import AtomFamily, AtomSet, IntervalFamily, IntervalUnionSet, as_fraction, canonicalize


def load_json(path, field: str):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InputError(f"{field}: cannot read {path}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{field}: {path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None


def dumps(doc) -> str:
    return json.dumps(doc, indent=2) + "\n"


def bundled_scenario(name: str) -> Path:
    ref = resources.files("hahnrn") / "data" / f"{name}.json"
    if not ref.is_file():
        raise InputError(f"no bundled scenario named {name!r}")
    return Path(str(ref))


ECHO_HAHN = ("charge", "family_level", "family_components", "eps0", "eps_ratio", "terms")
ECHO_RN = (
    "scenario", "base", "family", "lam_family", "mu_family",
    "family_level", "family_components", "eps0", "eps_ratio", "terms", "r_step", "r_max",
)


@dataclass
class RunConfig:
    scenario: str = "custom"
    charge: str | None = None
    base: str | None = None
    family: str | None = None
    lam_family: str | None = None
    mu_family: str | None = None
    family_level: int | None = None
    family_components: int | None = None
    eps0: Fraction = Fraction(1)
    eps_ratio: Fraction = Fraction(1, 2)
    terms: int = 24
    r_step: Fraction = Fraction(1, 16)
    r_max: Fraction | None = None
    out: str | None = None
    table: str | None = None
    seed: int = 1
    workers: int | None = None
    timing: bool = False

    def schedule(self) -> EpsSchedule:
        return EpsSchedule(as_fraction(self.eps0, "eps0"), as_fraction(self.eps_ratio, "eps_ratio"), self.terms)

    def echo(self, keys=ECHO_RN) -> dict:
        out = {}
        for key in keys:
            v = getattr(self, key)
            if v is None:
                continue
            out[key] = str(v) if isinstance(v, Fraction) else v
        return out


@dataclass
class Report:
    command: str
    inputs: dict
    results: dict
    ok: bool
    duration: float | None = field(default=None)

    def to_json(self) -> dict:
        doc = {"command": self.command, "inputs": self.inputs, "results": self.results, "ok": self.ok}
        if self.duration is not None:
            doc["duration_seconds"] = self.duration
        return doc

    @classmethod
    def from_json(cls, doc) -> "Report":
        try:
            return cls(doc["command"], doc["inputs"], doc["results"], doc["ok"], doc.get("duration_seconds"))
        except (KeyError, TypeError):
            raise InputError("not a report document") from None

    def dumps(self) -> str:
        return dumps(self.to_json())


def set_to_json(s) -> list:
    return s.to_json()


def set_from_json(data, like: Charge, field: str = "set"):
    if isinstance(like, AtomCharge):
        return AtomSet.from_json(data, like.atoms, field)
    return IntervalUnionSet.from_json(data, field)


def _family_for(c: Charge, cfg: RunConfig):
    if isinstance(c, AtomCharge):
        return AtomFamily(c.atoms, cfg.family_components)
    level = c.level if cfg.family_level is None else cfg.family_level
    return IntervalFamily(level, cfg.family_components)


def _timed(fn):
    def wrapper(cfg: RunConfig) -> Report:
        start = time.perf_counter()
        report = fn(cfg)
        if cfg.timing:
            report.duration = round(time.perf_counter() - start, 6)
        return report

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


@_timed
def run_hahn(cfg: RunConfig) -> Report:
    if not cfg.charge:
        raise InputError("hahn needs --charge")
    c = charge_from_json(load_json(cfg.charge, "charge"), "charge")
    fam = _family_for(c, cfg)
    d = construct_hahn(c, fam, cfg.schedule())
    results = {
        "x_minus": set_to_json(d.x_minus),
        "beta": str(d.beta),
        "defects": {"pos": str(d.certificate.pos_defect), "neg": str(d.certificate.neg_defect)},
        "stabilized": d.stabilized,
        "near_inf_indices": [str(n) for n in d.near_inf_indices],
    }
    return Report("hahn", cfg.echo(ECHO_HAHN), results, d.certificate.valid)


def identity_battery(like: Charge) -> list:
    """Fixed sets on which the integral identity is reported."""
    if isinstance(like, AtomCharge):
        n = like.atoms
        return [
            AtomSet.empty(n),
            AtomSet.full(n),
            AtomSet.from_indices(n, range(0, n, 2)),
            AtomSet.from_indices(n, range(1, n, 2)),
        ]
    return [
        canonicalize([]),
        canonicalize([("0", "1")]),
        canonicalize([("0", "1/2")]),
        canonicalize([("1/2", "1")]),
        canonicalize([("1/4", "3/4")]),
        canonicalize([("0", "1/4"), ("1/2", "3/4")]),
        canonicalize([("1/8", "5/16")]),
    ]


def field_rows(df: DerivativeField) -> list:
    """``(mu, left end of the cell, f)`` for every parameter and cell."""
    fam = df.levels.family
    rows = []
    for mu in df.params:
        for i, v in enumerate(df.cell_values(mu)):
            left = Fraction(i, fam.cells) if isinstance(fam, IntervalFamily) else i
            rows.append((str(mu), str(left), str(v)))
    return rows


def field_csv(df: DerivativeField) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["mu", "nu_cell_left", "f"])
    w.writerows(field_rows(df))
    return buf.getvalue()


def _rn_results(lf: LevelSetFamily, base_pc: ParametricCharge, fam_pc: ParametricCharge) -> tuple[dict, bool]:
    df = DerivativeField(lf)
    step = lf.rgrid.step
    nd = null_defects(lf, base_pc)
    certs = level_certificates(lf, base_pc, fam_pc)
    battery = identity_battery(fam_pc.charges[0])
    residuals = {}
    bound_ok = True
    for mu in lf.params:
        rows = []
        for a in battery:
            res = verify_rn_identity(df, base_pc, fam_pc, mu, a)
            bound = step * base_pc[mu].evaluate(a)
            bound_ok &= res <= bound
            rows.append({"set": set_to_json(a), "residual": str(res), "bound": str(bound)})
        residuals[str(mu)] = rows
    certs_ok = all(c.valid for c in certs.values())
    stabilized = all(all(j.stabilized.values()) for j in lf.raw.values())
    results = {
        "r_grid": {"step": str(step), "r_max": str(lf.rgrid.r_max), "points": len(lf.rgrid)},
        "field": {str(mu): [str(v) for v in df.cell_values(mu)] for mu in lf.params},
        "s0": {str(mu): set_to_json(lf.s0[mu]) for mu in lf.params},
        "null_defects": nd.to_json(),
        "level_certificates_ok": certs_ok,
        "stabilized": stabilized,
        "residuals": residuals,
    }
    return results, nd.ok and certs_ok and bound_ok


def _rgrid(cfg: RunConfig, base_pc, fam_pc, family) -> RationalGrid:
    r_max = cfg.r_max if cfg.r_max is not None else auto_r_max(base_pc, fam_pc, family)
    return RationalGrid.uniform(cfg.r_step, r_max)


def _load_scenario(cfg: RunConfig):
    path = bundled_scenario(cfg.scenario) if not Path(cfg.scenario).suffix else Path(cfg.scenario)
    doc = load_json(path, "scenario")
    if not isinstance(doc, dict) or "base" not in doc or "family" not in doc:
        raise InputError("scenario: expected an object with 'base' and 'family'")
    for key in ("r_step", "r_max", "eps0", "eps_ratio"):
        if key in doc:
            setattr(cfg, key, as_fraction(doc[key], f"scenario.{key}"))
    for key in ("terms", "family_level", "family_components"):
        if key in doc:
            setattr(cfg, key, doc[key])
    return charge_from_json(doc["base"], "scenario.base"), ParametricCharge.from_json(doc["family"], "scenario.family")


@_timed
def run_rn(cfg: RunConfig) -> Report:
    if cfg.base and cfg.family:
        base = charge_from_json(load_json(cfg.base, "base"), "base")
        fam_pc = ParametricCharge.from_json(load_json(cfg.family, "family"), "family")
    elif cfg.scenario != "custom":
        base, fam_pc = _load_scenario(cfg)
    else:
        raise InputError("rn needs --base and --family, or --scenario")
    base_pc = _as_parametric(base, fam_pc)
    family = _grid_family(cfg, base_pc, fam_pc)
    rg = _rgrid(cfg, base_pc, fam_pc, family)
    lf = build_level_family(base, fam_pc, rg, family, cfg.schedule(), cfg.workers)
    results, ok = _rn_results(lf, base_pc, fam_pc)
    report = Report("rn", cfg.echo(), results, ok)
    _write_table(cfg, DerivativeField(lf))
    return report


def _grid_family(cfg, base_pc, fam_pc):
    family = _default_family(base_pc.charges + fam_pc.charges)
    if isinstance(family, IntervalFamily):
        level = family.level if cfg.family_level is None else cfg.family_level
        return IntervalFamily(level, cfg.family_components)
    return AtomFamily(family.atoms, cfg.family_components)


def _write_table(cfg: RunConfig, df: DerivativeField) -> None:
    if cfg.table:
        Path(cfg.table).write_text(field_csv(df))


@_timed
def run_two_family(cfg: RunConfig) -> Report:
    if not (cfg.lam_family and cfg.mu_family):
        raise InputError("two-family needs --lam-family and --mu-family")
    lam = ParametricCharge.from_json(load_json(cfg.lam_family, "lam_family"), "lam_family")
    mu = ParametricCharge.from_json(load_json(cfg.mu_family, "mu_family"), "mu_family")
    family = _grid_family(cfg, lam, mu)
    rg = _rgrid(cfg, lam, mu, family)
    lf = _level_family(lam, mu, rg, family, cfg.schedule(), cfg.workers)
    results, ok = _rn_results(lf, lam, mu)
    _write_table(cfg, DerivativeField(lf))
    return Report("two-family", cfg.echo(), results, ok)


def verify_report(charge_path, report_path) -> Report:
    """Recompute the Hahn certificate of a stored ``hahn`` report."""
    c = charge_from_json(load_json(charge_path, "charge"), "charge")
    doc = Report.from_json(load_json(report_path, "report"))
    if doc.command != "hahn" or "x_minus" not in doc.results:
        raise InputError("report: expected a hahn report with x_minus")
    x_minus = set_from_json(doc.results["x_minus"], c, "report.results.x_minus")
    cert = verify_hahn(c, x_minus)
    results = {
        "x_minus": set_to_json(x_minus),
        "defects": {"pos": str(cert.pos_defect), "neg": str(cert.neg_defect)},
    }
    return Report("verify", {"charge": str(charge_path), "report": str(report_path)}, results, cert.valid)


def require_ok(report: Report) -> Report:
    if not report.ok:
        raise ConstructionError(f"{report.command}: construction certificate is nonzero")
    return report
