"""Scenario configuration, parameter grids and reproducible runs on disk.

A scenario is a JSON document (``schema_version`` 1) holding shared
settings and an optional list of ``cases`` that override them. Each case
expands into a grid of ``(p1, p2)`` points; points run in a fixed order and
produce one NDJSON report line each, plus a ``l, P`` CSV distribution.
"""

from __future__ import annotations

import copy
import hashlib
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import bin_classical, bunch_width, efficiency, target_l
from .basis import StateVector, build_basis, build_chain
from .classical import ClassicalEnsembleSpec, mc_efficiency
from .errors import IntegrationError, InvalidInputError
from .evolve import EvolveConfig, default_l_max, evolve_full, evolve_rwa_chain
from .params import DimensionlessParams, DrivePulse, PhysicalParams, derive_params, molecule_inertia
from .theory import classify_regime, lc_efficiency
from .thermal import ThermalSpec, evolve_thermal

__all__ = [
    "SCHEMA_VERSION",
    "MODES",
    "PRESETS",
    "ScenarioConfig",
    "CaseConfig",
    "Point",
    "load_config",
    "load_preset",
    "parse_config",
    "apply_override",
    "expand_points",
    "run_point",
    "run_scenario",
    "convergence_check",
]

SCHEMA_VERSION = 1
MODES = ("ground_full", "ground_rwa", "thermal_rwa", "thermal_full", "classical_mc", "theory_only")
PRESETS = ("fig1", "fig2", "fig3", "fig4", "fig5", "fig6")
HBAR_SI = 1.054571817e-34

_NUMERIC_DEFAULTS = {
    "l_max": None,
    "c_max": 16,
    "c_buffer": None,
    "rel_tol": 1e-9,
    "abs_tol": 1e-11,
    "method": "auto",
    "n_samples": 10000,
    "seed": 0,
    "weight_cutoff": 1e-4,
    "batch_size": 16,
}
_CASE_KEYS = {"name", "mode", "params", "pulse", "tau_f", "l_f", "l_c", "numerics"}


@dataclass(frozen=True)
class CaseConfig:
    name: str
    mode: str
    p1_values: tuple
    p2_values: tuple
    pulse: dict | None
    tau_f: float | None
    l_f: float | None
    l_c: float
    numerics: dict


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    cases: tuple
    raw: dict = field(repr=False, compare=False, default_factory=dict)


@dataclass(frozen=True)
class Point:
    index: int
    case: CaseConfig
    p1: float
    p2: float

    @property
    def tau_f(self) -> float:
        if self.case.tau_f is not None:
            return float(self.case.tau_f)
        return 2.0 * self.p2 * (self.case.l_f - 0.5)

    @property
    def label(self) -> str:
        return f"{self.case.name}_{self.index:04d}"


def _axis(spec, name):
    """Grid axis from a number, ``[min, max, steps]``, or a dict."""
    if isinstance(spec, (int, float)) and not isinstance(spec, bool):
        return (float(spec),)
    if isinstance(spec, list):
        if len(spec) != 3:
            raise InvalidInputError(f"{name}: grid must be [min, max, steps]")
        lo, hi, steps = spec
        return _grid(lo, hi, steps, "linear", name)
    if isinstance(spec, dict):
        if "values" in spec:
            vals = tuple(float(v) for v in spec["values"])
            if not vals:
                raise InvalidInputError(f"{name}: empty value list")
            return vals
        if "molecule" in spec:
            names = spec["molecule"]
            names = [names] if isinstance(names, str) else names
            beta = float(spec.get("beta", 1e24))
            out = []
            for mol in names:
                phys = PhysicalParams(0.0, beta, molecule_inertia(mol), HBAR_SI)
                out.append(derive_params(phys).p2)
            return tuple(out)
        if "min" in spec:
            return _grid(spec["min"], spec["max"], spec.get("steps", 1), spec.get("scale", "linear"), name)
    raise InvalidInputError(f"{name}: cannot interpret axis {spec!r}")


def _grid(lo, hi, steps, scale, name):
    steps = int(steps)
    if steps < 1:
        raise InvalidInputError(f"{name}: grid steps must be >= 1")
    if scale not in ("linear", "log"):
        raise InvalidInputError(f"{name}: scale must be 'linear' or 'log'")
    if steps == 1:
        return (float(lo),)
    if scale == "log":
        if not (lo > 0 and hi > 0):
            raise InvalidInputError(f"{name}: log grid needs positive bounds")
        return tuple(float(v) for v in np.geomspace(lo, hi, steps))
    return tuple(float(v) for v in np.linspace(lo, hi, steps))


def _merge(base, over):
    out = copy.deepcopy(base)
    for key, val in over.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], val)
        else:
            out[key] = copy.deepcopy(val)
    return out


def _parse_case(doc, default_name):
    unknown = set(doc) - _CASE_KEYS - {"schema_version", "cases", "description"}
    if unknown:
        raise InvalidInputError(f"unknown config keys: {sorted(unknown)}")
    mode = doc.get("mode")
    if mode not in MODES:
        raise InvalidInputError(f"mode must be one of {MODES}, got {mode!r}")
    params = doc.get("params")
    if not isinstance(params, dict) or "p1" not in params or "p2" not in params:
        raise InvalidInputError("params must give p1 and p2")
    p1_values = _axis(params["p1"], "p1")
    p2_values = _axis(params["p2"], "p2")
    for p1 in p1_values:
        if p1 < 0:
            raise InvalidInputError("p1 must be non-negative")
    for p2 in p2_values:
        if not p2 > 0:
            raise InvalidInputError("p2 must be positive")
    has_tau, has_l = doc.get("tau_f") is not None, doc.get("l_f") is not None
    if has_tau == has_l:
        raise InvalidInputError("give exactly one of tau_f and l_f")
    if has_tau and not doc["tau_f"] > 0:
        raise InvalidInputError("tau_f must be positive")
    if has_l and not doc["l_f"] > 0.5:
        raise InvalidInputError("l_f must exceed 1/2")
    l_c = float(doc.get("l_c", 0.0))
    if l_c < 0:
        raise InvalidInputError("l_c must be non-negative")
    if mode == "classical_mc" and l_c == 0:
        raise InvalidInputError("classical_mc needs l_c > 0")
    numerics = dict(_NUMERIC_DEFAULTS)
    extra = set(doc.get("numerics", {})) - set(_NUMERIC_DEFAULTS)
    if extra:
        raise InvalidInputError(f"unknown numerics keys: {sorted(extra)}")
    numerics.update(doc.get("numerics", {}))
    pulse = doc.get("pulse")
    if pulse is not None:
        _make_pulse(pulse, p1_values[0])
    return CaseConfig(
        name=str(doc.get("name", default_name)),
        mode=mode,
        p1_values=p1_values,
        p2_values=p2_values,
        pulse=pulse,
        tau_f=float(doc["tau_f"]) if has_tau else None,
        l_f=float(doc["l_f"]) if has_l else None,
        l_c=l_c,
        numerics=numerics,
    )


def parse_config(doc: dict) -> ScenarioConfig:
    """Validate a configuration document; raises :class:`InvalidInputError`."""
    if not isinstance(doc, dict):
        raise InvalidInputError("config must be a JSON object")
    version = doc.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise InvalidInputError(f"unsupported schema_version {version!r}")
    name = str(doc.get("name", "scenario"))
    base = {k: v for k, v in doc.items() if k not in ("cases", "name")}
    cases_doc = doc.get("cases") or [{}]
    if not isinstance(cases_doc, list):
        raise InvalidInputError("cases must be a list")
    cases = []
    for i, over in enumerate(cases_doc):
        merged = _merge(base, over)
        cases.append(_parse_case(merged, f"case{i}"))
    names = [c.name for c in cases]
    if len(set(names)) != len(names):
        raise InvalidInputError("case names must be unique")
    return ScenarioConfig(name, tuple(cases), doc)


def load_config(path) -> ScenarioConfig:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidInputError(f"cannot read config {path}: {exc}") from None
    return parse_config(doc)


def preset_document(name: str) -> dict:
    if name not in PRESETS:
        raise InvalidInputError(f"unknown preset {name!r}; choose from {PRESETS}")
    text = resources.files("centrifuge.presets").joinpath(f"{name}.json").read_text()
    return json.loads(text)


def load_preset(name: str) -> ScenarioConfig:
    return parse_config(preset_document(name))


def apply_override(doc: dict, assignment: str) -> dict:
    """Set a dotted key, e.g. ``numerics.l_max=40`` or ``cases.1.l_c=0``.

    Values are parsed as JSON when possible, otherwise kept as strings.
    """
    if "=" not in assignment:
        raise InvalidInputError(f"override must look like key=value, got {assignment!r}")
    key, raw = assignment.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    doc = copy.deepcopy(doc)
    parts = key.split(".")
    node = doc
    for part in parts[:-1]:
        if isinstance(node, list):
            try:
                node = node[int(part)]
            except (ValueError, IndexError):
                raise InvalidInputError(f"bad override path {key!r}") from None
        else:
            node = node.setdefault(part, {})
        if not isinstance(node, (dict, list)):
            raise InvalidInputError(f"bad override path {key!r}")
    last = parts[-1]
    if isinstance(node, list):
        try:
            node[int(last)] = value
        except (ValueError, IndexError):
            raise InvalidInputError(f"bad override path {key!r}") from None
    else:
        node[last] = value
    return doc


def expand_points(config: ScenarioConfig) -> list[Point]:
    """All grid points in run order: cases, then ``p2``, then ``p1``."""
    points = []
    for case in config.cases:
        i = 0
        for p2 in case.p2_values:
            for p1 in case.p1_values:
                points.append(Point(i, case, p1, p2))
                i += 1
    return points


def _make_pulse(spec, p1):
    if spec is None:
        return DrivePulse.constant(p1)
    spec = dict(spec)
    env = spec.pop("envelope", "constant")
    trunc = spec.pop("truncation_tau", None)
    try:
        if env == "constant":
            return DrivePulse.constant(spec.pop("p1", p1), trunc)
        if env == "gaussian":
            return DrivePulse.gaussian(spec.pop("p10"), spec.pop("sigma"), trunc)
    except KeyError as exc:
        raise InvalidInputError(f"pulse missing {exc}") from None
    raise InvalidInputError(f"unknown envelope {env!r}")


def _evolve_cfg(num):
    return EvolveConfig(rel_tol=float(num["rel_tol"]), abs_tol=float(num["abs_tol"]), method=num["method"])


def _l_hat_even(l_f):
    return max(2, 2 * math.ceil(0.8 * l_f / 2 - 1e-9))


def run_point(point: Point) -> dict:
    """Run one grid point; returns the report record and the final ``P(l)``."""
    case, num = point.case, point.case.numerics
    params = DimensionlessParams(point.p1, point.p2)
    tau_f = point.tau_f
    l_f = target_l(tau_f, point.p2)
    regime = classify_regime(point.p1, point.p2)
    record = {
        "case": case.name,
        "index": point.index,
        "mode": case.mode,
        "p1": point.p1,
        "p2": point.p2,
        "tau_f": tau_f,
        "l_f": l_f,
        "l_c": case.l_c,
        "regime": regime.classification,
    }
    dist = None
    try:
        pulse = _make_pulse(case.pulse, point.p1)
        l_max = num["l_max"] or default_l_max(l_f)
        if case.mode != "theory_only" and l_max < 0.8 * l_f:
            raise InvalidInputError(f"l_max = {l_max} lies below the efficiency cut 0.8 l_f = {0.8 * l_f:g}")
        stride = 1
        if case.mode == "theory_only":
            l_hat = _l_hat_even(l_f)
            record.update(l_hat=l_hat, efficiency=lc_efficiency(point.p1, l_hat))
        elif case.mode in ("ground_full", "ground_rwa"):
            cfg = _evolve_cfg(num)
            if case.mode == "ground_full":
                basis = build_basis(l_max, min(int(num["c_max"]), l_max), "even", "even")
                traj = evolve_full(StateVector.basis_state(basis, 0, 0), basis, params, pulse, tau_f, cfg)
            else:
                chain = build_chain(0, l_max, "even")
                traj = evolve_rwa_chain(
                    StateVector.basis_state(chain, 0, 0, "rotating"), 0, "even", params, pulse, tau_f, cfg
                )
            dist = traj.final_populations
            stride = 2
            # width of everything that left the initial level
            excited = bunch_width(dist, (1, l_max), stride=2) if dist[1:].sum() > 0 else 0.0
            record.update(norm_drift=traj.norm_drift, n_steps=traj.n_steps, l_max=l_max, excited_fwhm_l=excited)
        elif case.mode in ("thermal_rwa", "thermal_full"):
            spec = ThermalSpec(case.l_c, float(num["weight_cutoff"]))
            res = evolve_thermal(
                spec,
                params,
                pulse,
                tau_f,
                _evolve_cfg(num),
                use_rwa=case.mode == "thermal_rwa",
                l_max=num["l_max"],
                c_buffer=None if num["c_buffer"] is None else int(num["c_buffer"]),
                batch_size=int(num["batch_size"]),
            )
            dist = res.distribution
            record.update(
                norm_drift=res.norm_drift,
                n_steps=res.n_steps,
                members=len(res.members),
                retained_weight=res.retained_weight,
                l_max=len(dist) - 1,
                **res.extras,
            )
        else:
            spec = ClassicalEnsembleSpec.from_quantum(case.l_c, point.p2, int(num["n_samples"]), int(num["seed"]))
            mc = mc_efficiency(spec, point.p1, point.p2, pulse, tau_f)
            dist = bin_classical(mc.L, point.p2, max(l_max, int(math.ceil(mc.L.max() / point.p2)) + 1))
            record.update(mc_efficiency=mc.efficiency, mc_stderr=mc.stderr, n_failed=int(mc.failed.size))
        if dist is not None:
            rep = efficiency(dist, l_f, stride=stride)
            record.update({k: v for k, v in rep.to_dict().items() if k != "l_f"})
        record["status"] = "ok"
    except (IntegrationError, InvalidInputError) as exc:
        record.update(status="failed", error=str(exc))
        dist = None
    return {"record": _json_safe(record), "dist": None if dist is None else np.asarray(dist).tolist()}


def _json_safe(obj):
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, (np.floating, np.integer)):
        return _json_safe(obj.item())
    return obj


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def _atomic_write(path: Path, text: str):
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _dist_csv(dist):
    lines = ["l,P"] + [f"{l},{p!r}" for l, p in enumerate(dist)]
    return "\n".join(lines) + "\n"


def run_scenario(config: ScenarioConfig, out_dir, workers: int = 1, convergence: bool = False) -> dict:
    """Run every grid point and write reports, distributions and a manifest.

    Returns the manifest. Points are computed in parallel when ``workers > 1``
    but written in grid order, so outputs are identical for any worker count.
    """
    out = Path(out_dir)
    (out / "distributions").mkdir(parents=True, exist_ok=True)
    points = expand_points(config)
    if workers > 1 and len(points) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_point, points))
    else:
        results = [run_point(p) for p in points]
    files = []
    lines = []
    for point, res in zip(points, results):
        rec = dict(res["record"])
        if res["dist"] is not None:
            rel = f"distributions/{point.label}.csv"
            _atomic_write(out / rel, _dist_csv(res["dist"]))
            rec["distribution"] = rel
            files.append(rel)
        lines.append(json.dumps(rec, sort_keys=True))
    _atomic_write(out / "reports.ndjson", "\n".join(lines) + "\n")
    files.append("reports.ndjson")
    n_failed = sum(r["record"]["status"] != "ok" for r in results)
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "scenario": config.name,
        "code_version": __version__,
        "config": config.raw,
        "seeds": sorted({int(c.numerics["seed"]) for c in config.cases}),
        "points": len(points),
        "failed": n_failed,
    }
    if convergence:
        conv = convergence_check(config)
        _atomic_write(out / "convergence.json", json.dumps(conv, sort_keys=True, indent=2) + "\n")
        files.append("convergence.json")
        manifest["convergence"] = conv
    manifest["files"] = {rel: _sha256(out / rel) for rel in sorted(files)}
    _atomic_write(out / "manifest.json", json.dumps(manifest, sort_keys=True, indent=2) + "\n")
    return manifest


def _refined(case: CaseConfig, l_max_used: int, c_buffer_used: int | None) -> CaseConfig:
    num = dict(case.numerics)
    num["l_max"] = 2 * int(l_max_used)
    num["c_max"] = 2 * int(num["c_max"])
    if c_buffer_used is not None:
        num["c_buffer"] = 2 * int(c_buffer_used)
    num["rel_tol"] = float(num["rel_tol"]) / 10
    num["abs_tol"] = float(num["abs_tol"]) / 10
    num["n_samples"] = 2 * int(num["n_samples"])
    return replace(case, numerics=num)


def _cut_sensitivity(dist, l_f):
    p = np.asarray(dist)
    l = np.arange(p.size)
    return float(p[(l >= 0.7 * l_f - 1e-9) & (l < 0.9 * l_f - 1e-9)].sum())


def convergence_check(config: ScenarioConfig, point_index: int = 0, tol: float = 1e-3) -> dict:
    """Rerun one point with doubled truncations and 10x tighter tolerances.

    Flags the point when the efficiency moves by more than ``tol`` (for the
    Monte Carlo mode, by more than three combined standard errors if that
    is larger) or when more than 2% of the population sits within 10% of
    the efficiency cut, which means bunch and left-behind population are
    not yet separated.
    """
    points = expand_points(config)
    if not 0 <= point_index < len(points):
        raise InvalidInputError(f"point index {point_index} out of range")
    point = points[point_index]
    report = {"point": point.label, "mode": point.case.mode, "p1": point.p1, "p2": point.p2}
    if point.case.mode == "theory_only":
        report.update(delta=0.0, flagged=False, passed=True, note="closed form, nothing to converge")
        return report
    base = run_point(point)
    if base["record"]["status"] != "ok":
        report.update(flagged=True, passed=False, note="baseline failed: " + base["record"].get("error", ""))
        return report
    l_max_used = base["record"].get("l_max") or default_l_max(base["record"]["l_f"])
    fine = run_point(replace(point, case=_refined(point.case, l_max_used, base["record"].get("c_buffer"))))
    if fine["record"]["status"] != "ok":
        report.update(flagged=True, passed=False, note="refined run failed: " + fine["record"].get("error", ""))
        return report
    e0, e1 = base["record"]["efficiency"], fine["record"]["efficiency"]
    limit = tol
    if point.case.mode == "classical_mc":
        limit = max(tol, 3.0 * math.hypot(base["record"]["mc_stderr"], fine["record"]["mc_stderr"]))
    gap = _cut_sensitivity(base["dist"], base["record"]["l_f"])
    notes = []
    if abs(e1 - e0) > limit:
        notes.append("efficiency not converged in truncation/tolerance")
    if gap > 0.02:
        notes.append("population not separated around the efficiency cut; increase tau_f")
    report.update(
        efficiency=e0,
        refined_efficiency=e1,
        delta=e1 - e0,
        limit=limit,
        population_near_cut=gap,
        flagged=bool(notes),
        passed=not notes,
        note="; ".join(notes) or "converged",
    )
    return _json_safe(report)
