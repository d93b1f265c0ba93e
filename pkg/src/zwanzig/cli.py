"""Command-line front end.

Scenarios are YAML files with the blocks ``model``, ``grid``, ``method``,
``analysis``, ``output``, ``seed`` and an optional ``series`` sweep; see
README.md for the grammar. Exit codes: 0 ok, 1 config error, 2 numeric
failure.
"""
from __future__ import annotations

import argparse
import copy
import hashlib
import json
import logging
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import metadata, resources
from pathlib import Path

import numpy as np
import yaml

from . import chain, dynamics, echo, ensemble, spectrum, tls
from .model import (Bare, Explicit, HomogeneousDeformation, MixingSublattices, ReservoirSpec,
                    SpecError, Sublattices, build_hamiltonian)

log = logging.getLogger("zwanzig")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2
PRESETS = ("fig2", "fig3", "fig4", "fig5", "fig6", "fig7", "fig8", "fig9")

_RESERVOIR_KEYS = {"kind", "variant", "C", "N", "gamma", "gamma_s", "eps_s", "a", "b", "sign",
                   "K", "offsets", "deltas", "delta", "levels"}
MODEL_KEYS = {
    "reservoir": _RESERVOIR_KEYS,
    "tls": {"kind", "Delta", "C", "gamma0", "gamma", "N"},
    "chain": {"kind", "N", "C2", "n0"},
    "ensemble": _RESERVOIR_KEYS | {"delta0", "T", "eps_q", "M"},
}
METHODS = {
    "reservoir": ("oracle", "oracle-ode", "fourier", "cycle-sum"),
    "tls": ("oracle", "fourier", "cycle-sum"),
    "chain": ("oracle", "fourier", "cycle-sum", "bessel"),
    "ensemble": ("oracle",),
}
TOP_KEYS = {"name", "model", "grid", "method", "analysis", "output", "seed", "series"}
GRID_KEYS = {"t_max", "samples_per_unit"}
OUTPUT_KEYS = {"dir", "formats"}
SERIES_KEYS = {"param", "values"}
ANALYSIS_KEYS = {
    "echo_metrics": None,
    "critical_cycle": None,
    "mixing_threshold": None,
    "double_resonance": {"n", "k"},
    "averages": {"k"},
    "front_tracking": {"sites", "threshold"},
    "partial": {"k", "tau_min", "tau_max", "points"},
    "reservoir": {"n"},
    "absorption": {"eps_min", "eps_max", "points"},
    "lineshape": {"eps_min", "eps_max", "points"},
    "scan_metrics": None,
}
SCALAR_METRICS = {"k_c", "k_c_detected", "delta_c", "delta_c_gamma", "front_speed",
                  "cycle_average", "Gamma"}
VARIANTS = {"bare", "deformation", "sublattices", "mixing", "explicit"}
_VARIANT_FIELDS = {"deformation": ("a", "b", "sign"), "sublattices": ("offsets", "K"),
                   "mixing": ("deltas", "delta", "K"), "explicit": ("levels",)}


class ConfigError(ValueError):
    """Schema or physics violation in a scenario file."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("\n".join(self.problems))


# --------------------------------------------------------------------------
# parsing


def _line_map(node, path=(), out=None):
    """Map key paths to 1-based source lines."""
    out = {} if out is None else out
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            p = path + (k.value,)
            out[p] = k.start_mark.line + 1
            _line_map(v, p, out)
    elif isinstance(node, yaml.SequenceNode):
        for i, v in enumerate(node.value):
            out[path + (i,)] = v.start_mark.line + 1
            _line_map(v, path + (i,), out)
    return out


@dataclass
class Scenario:
    """Parsed configuration with source line information."""

    data: dict
    lines: dict = field(default_factory=dict)
    source: str = "<memory>"

    def where(self, *path) -> str:
        while path and path not in self.lines:
            path = path[:-1]
        line = self.lines.get(path)
        return f"{self.source}:{line}" if line else self.source

    def dump(self) -> str:
        return dump_config(self.data)


def parse_config(text: str, source: str = "<memory>") -> Scenario:
    try:
        node = yaml.compose(text)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"{source}:{mark.line + 1}" if mark is not None else source
        what = getattr(exc, "problem", None) or str(exc)
        raise ConfigError([f"{where}: YAML error: {what}"]) from None
    if not isinstance(data, dict):
        raise ConfigError([f"{source}: top level must be a mapping"])
    return Scenario(data, _line_map(node) if node is not None else {}, source)


def load_config(path) -> Scenario:
    path = str(path)
    if path in PRESETS:
        text = resources.files("zwanzig.presets").joinpath(f"{path}.yaml").read_text()
        return parse_config(text, f"preset:{path}")
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError([f"{path}: cannot read ({exc.strerror})"]) from None
    return parse_config(text, path)


def dump_config(data: dict) -> str:
    return yaml.safe_dump(data, sort_keys=True, default_flow_style=None)


def _unknown(sc: Scenario, block: dict, allowed, path) -> list:
    return [f"{sc.where(*path, k)}: unknown key '{'.'.join(map(str, path + (k,)))}'"
            for k in block if k not in allowed]


def _num(sc, problems, block, key, path, default=None, lo=None, hi=None, integer=False, strict_lo=False):
    v = block.get(key, default)
    if v is None:
        return None
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        problems.append(f"{sc.where(*path, key)}: '{key}' must be a number")
        return None
    if integer and int(v) != v:
        problems.append(f"{sc.where(*path, key)}: '{key}' must be an integer")
        return None
    if lo is not None and (v < lo or (strict_lo and v == lo)):
        problems.append(f"{sc.where(*path, key)}: '{key}' = {v} below allowed range")
    if hi is not None and v >= hi:
        problems.append(f"{sc.where(*path, key)}: '{key}' = {v} outside allowed range (< {hi})")
    return int(v) if integer else float(v)


def _reservoir_spec(sc, problems, m, path=("model",)) -> ReservoirSpec | None:
    name = m.get("variant", "bare")
    if name not in VARIANTS:
        problems.append(f"{sc.where(*path, 'variant')}: unknown variant '{name}'")
        return None
    before = len(problems)
    C = _num(sc, problems, m, "C", path, 1.0, lo=0.0)
    N = _num(sc, problems, m, "N", path, None, lo=0, integer=True)
    kw = dict(C=C, N=N,
              gamma=_num(sc, problems, m, "gamma", path, 0.0, lo=0.0),
              gamma_s=_num(sc, problems, m, "gamma_s", path, 0.0, lo=0.0),
              eps_s=_num(sc, problems, m, "eps_s", path, 0.0))
    try:
        if name == "bare":
            v = Bare()
        elif name == "deformation":
            v = HomogeneousDeformation(float(m.get("a", 0.0)), float(m.get("b", 0.0)), int(m.get("sign", 1)))
        elif name == "sublattices":
            v = Sublattices(int(m.get("K", 1)), tuple(float(x) for x in m.get("offsets", ())))
        elif name == "mixing":
            K = int(m.get("K", 3))
            if "delta" in m and "deltas" in m:
                problems.append(f"{sc.where(*path, 'delta')}: give either 'delta' or 'deltas'")
                return None
            if "delta" in m:
                deltas = tuple(k * float(m["delta"]) for k in range(1, K))
            else:
                deltas = tuple(float(x) for x in m.get("deltas", ()))
            v = MixingSublattices(K, deltas)
        else:
            v = Explicit(tuple(tuple(r) for r in m.get("levels", ())))
        if len(problems) > before:
            return None
        return ReservoirSpec(v, **kw)
    except (SpecError, TypeError, ValueError) as exc:
        key = next((k for k in _VARIANT_FIELDS.get(name, ()) if k in m), "variant")
        problems.append(f"{sc.where(*path, key)}: {exc}")
        return None


@dataclass
class Plan:
    kind: str
    spec: object
    t: np.ndarray
    methods: tuple
    analysis: dict
    seed: int
    delimiter: str


def build_plan(sc: Scenario, overrides: dict | None = None) -> Plan:
    """Validate ``sc`` and turn it into concrete specs. Raises ConfigError."""
    d = copy.deepcopy(sc.data)
    for path, value in (overrides or {}).items():
        _set_path(d, path, value)
    problems = _unknown(sc, d, TOP_KEYS, ())
    m = d.get("model")
    if not isinstance(m, dict):
        raise ConfigError(problems + [f"{sc.where('model')}: missing 'model' block"])
    kind = m.get("kind", "reservoir")
    if kind not in MODEL_KEYS:
        raise ConfigError(problems + [f"{sc.where('model', 'kind')}: unknown model kind '{kind}'"])
    problems += _unknown(sc, m, MODEL_KEYS[kind], ("model",))
    g = d.get("grid", {}) or {}
    problems += _unknown(sc, g, GRID_KEYS, ("grid",))
    o = d.get("output", {}) or {}
    problems += _unknown(sc, o, OUTPUT_KEYS, ("output",))
    a = d.get("analysis", {}) or {}
    if not isinstance(a, dict):
        problems.append(f"{sc.where('analysis')}: 'analysis' must be a mapping")
        a = {}
    problems += _unknown(sc, a, ANALYSIS_KEYS, ("analysis",))
    for key, sub in ANALYSIS_KEYS.items():
        if sub and isinstance(a.get(key), dict):
            problems += _unknown(sc, a[key], sub, ("analysis", key))
    s = d.get("series")
    if s is not None:
        problems += _unknown(sc, s, SERIES_KEYS, ("series",))
    seed = d.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2**64:
        problems.append(f"{sc.where('seed')}: seed must be an unsigned 64-bit integer")
        seed = 0

    t_max = _num(sc, problems, g, "t_max", ("grid",), 6 * math.pi, lo=0.0, strict_lo=True)
    spu = _num(sc, problems, g, "samples_per_unit", ("grid",), dynamics.DEFAULT_SAMPLES_PER_UNIT,
               lo=0.0, strict_lo=True)

    spec = None
    if kind in ("reservoir", "ensemble"):
        spec = _reservoir_spec(sc, problems, m)
        if kind == "ensemble" and spec is not None:
            try:
                spec = ensemble.EnsembleSpec(
                    spec, float(m.get("delta0", 0.0)), float(m.get("T", 0.0)),
                    float(m.get("eps_q", 1.0)), int(m.get("M", 100)), int(seed))
            except SpecError as exc:
                problems.append(f"{sc.where('model')}: {exc}")
    elif kind == "tls":
        before = len(problems)
        vals = {k: _num(sc, problems, m, k, ("model",), dflt, lo=0.0)
                for k, dflt in (("Delta", 0.0), ("C", 1.0), ("gamma0", 0.0), ("gamma", 0.0))}
        N = _num(sc, problems, m, "N", ("model",), None, lo=0, integer=True)
        if len(problems) == before:
            spec = tls.TlsSpec(vals["Delta"], vals["C"], vals["gamma0"], vals["gamma"], N)
    else:
        before = len(problems)
        C2 = _num(sc, problems, m, "C2", ("model",), 0.5, lo=0.0, hi=1.0)
        N = _num(sc, problems, m, "N", ("model",), 49, lo=1, integer=True)
        n0 = _num(sc, problems, m, "n0", ("model",), 0, integer=True)
        if len(problems) == before:
            try:
                spec = chain.ChainSpec(N, C2, n0)
            except SpecError as exc:
                problems.append(f"{sc.where('model')}: {exc}")

    method = d.get("method", "oracle")
    allowed = METHODS[kind]
    if method == "all":
        methods = allowed
    elif method in allowed:
        methods = (method,)
    else:
        problems.append(f"{sc.where('method')}: method '{method}' not available for '{kind}' "
                        f"(choose from {', '.join(allowed + ('all',))})")
        methods = ()
    if spec is not None and "cycle-sum" in methods:
        if kind == "reservoir" and not isinstance(spec.variant, (Bare, HomogeneousDeformation)):
            problems.append(f"{sc.where('method')}: cycle-sum needs a bare or smoothly deformed ladder")
        if kind == "chain" and spec.n0 != 0:
            problems.append(f"{sc.where('method')}: cycle-sum needs a centred impurity")
    if spec is not None and kind == "chain" and "bessel" in methods and spec.C2 > chain.BESSEL_MAX_C2:
        problems.append(f"{sc.where('model', 'C2')}: bessel path limited to C2 <= {chain.BESSEL_MAX_C2}")
    if spec is not None and kind == "reservoir":
        perms = build_hamiltonian(spec).permutations if spec.N <= 5000 else ()
        if perms and "fourier" in methods:
            log.warning("level order permuted at n = %s; fourier uses dense fallback", list(perms))
    sm = a.get("scan_metrics") or []
    for x in sm:
        if x not in SCALAR_METRICS:
            problems.append(f"{sc.where('analysis', 'scan_metrics')}: '{x}' is not a scalar metric")
    fmts = o.get("formats", ["csv"])
    if any(f not in ("csv", "tsv") for f in fmts):
        problems.append(f"{sc.where('output', 'formats')}: formats must be csv or tsv")
    if problems:
        raise ConfigError(problems)
    return Plan(kind, spec, dynamics.time_grid(t_max, spu), methods, a, int(seed),
                "\t" if fmts and fmts[0] == "tsv" else ",")


def _set_path(d: dict, path: str, value):
    keys = path.split(".")
    cur = d
    for k in keys[:-1]:
        cur = cur.setdefault(k, {})
    cur[keys[-1]] = value


def series_overrides(sc: Scenario) -> list:
    s = sc.data.get("series")
    if not s:
        return [{}]
    if "param" not in s or "values" not in s:
        raise ConfigError([f"{sc.where('series')}: series needs 'param' and 'values'"])
    return [{s["param"]: v} for v in s["values"]]


def validate(sc: Scenario) -> list:
    """All diagnostics for ``sc``; an empty list means valid."""
    try:
        for ov in series_overrides(sc):
            build_plan(sc, ov)
    except ConfigError as exc:
        return exc.problems
    return []


# --------------------------------------------------------------------------
# execution


def _write_table(path: Path, header, columns, delimiter):
    arr = np.column_stack([np.asarray(c, dtype=float) for c in columns])
    np.savetxt(path, arr, fmt="%.17g", delimiter=delimiter, header=delimiter.join(header), comments="")


def _complex_cols(name, a):
    return [f"re_{name}", f"im_{name}", f"pop_{name}"], [a.real, a.imag, np.abs(a) ** 2]


def _series(plan: Plan, method: str):
    k, s, t = plan.kind, plan.spec, plan.t
    if k == "reservoir":
        if method == "oracle":
            return dynamics.evolve_oracle(build_hamiltonian(s), t).a_s
        if method == "oracle-ode":
            return dynamics.evolve_oracle(build_hamiltonian(s), t, method="ode").a_s
        if method == "fourier":
            if s.gamma != s.gamma_s:
                raise ArithmeticError("fourier path needs a common width")
            return dynamics.evolve_fourier(spectrum.solve_spectrum(s), t).a_s
        return echo.assemble_cycles(s, t)[0].a_s
    if k == "tls":
        r = tls.tls_evolve(s, t, {"oracle": "oracle", "fourier": "fourier", "cycle-sum": "cycle"}[method])
        return r.a_L, r.a_R
    if k == "chain":
        return chain.impurity_amplitude(s, t, {"cycle-sum": "cycle"}.get(method, method)).a_s
    raise AssertionError(k)


def _finite(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return x


def _analysis(plan: Plan, outdir: Path, tag: str) -> dict:
    a, s, kind = plan.analysis, plan.spec, plan.kind
    res = {}
    base = s.base if kind == "ensemble" else s
    if a.get("critical_cycle"):
        if kind == "chain":
            r = chain.chain_critical_cycle(s)
            res["critical_cycle"] = {"formula": _finite(r.formula), "detected": r.detected, "period": r.period}
        elif kind in ("reservoir", "ensemble"):
            r = echo.critical_cycle(base)
            res["critical_cycle"] = {"k_c": r.value, "valid": r.valid, "note": r.note}
    if a.get("echo_metrics") and kind == "reservoir":
        res["echo_metrics"] = _jsonable(echo.echo_metrics(s, range(1, 6)).as_dict())
    if a.get("mixing_threshold") and kind == "reservoir":
        G = s.Gamma
        dc = spectrum.critical_mixing_deformation(G)
        res["mixing_threshold"] = {"Gamma": G, "delta_c": dc, "delta_c_gamma": None if dc is None else dc * G}
    if "double_resonance" in a and kind == "reservoir":
        dr = a["double_resonance"] or {}
        rows = []
        for n in dr.get("n", [0]):
            for k in dr.get("k", [1, 2, 3]):
                r = echo.double_resonance(int(n), int(k), s)
                rows.append({"n": int(n), "k": int(k), **r.__dict__})
        res["double_resonance"] = _jsonable(rows)
    if "averages" in a:
        ks = list((a["averages"] or {}).get("k", [1, 2, 3]))
        if kind == "tls":
            tab = tls.tls_cycle_averages(s, ks)
            _write_table(outdir / f"averages{tag}.csv", ["k", "L", "R", "total", "bessel_L", "bessel_R", "total_law"],
                         [tab.k, tab.L, tab.R, tab.total, tab.bessel_L, tab.bessel_R, tab.total_law], plan.delimiter)
            res["averages"] = {"k": ks, "total": tab.total.tolist()}
        elif kind == "reservoir":
            res["averages"] = {str(k): echo.cycle_average(int(k), s) for k in ks}
    if "front_tracking" in a and kind == "chain":
        ft = a["front_tracking"] or {}
        sites = [int(x) for x in ft.get("sites", range(1, s.N + 1, 4))]
        o = chain.chain_oracle(s, plan.t, sites)
        fr = chain.front_arrival(o, s, float(ft.get("threshold", 0.2)))
        _write_table(outdir / f"fronts{tag}.csv", ["site", "arrival"], [sites, fr], plan.delimiter)
        _write_table(outdir / f"spacetime{tag}.csv", ["t"] + [f"site_{n}" for n in sites],
                     [plan.t] + list(np.abs(o.a_n.T) ** 2), plan.delimiter)
        ok = np.isfinite(fr)
        speed = float(np.polyfit(np.abs(np.array(sites)[ok]), fr[ok], 1)[0] ** -1) if ok.sum() > 1 else None
        res["front_tracking"] = {"sites": sites, "arrival": [_finite(float(x)) for x in fr], "front_speed": speed}
    if "partial" in a and kind == "reservoir":
        p = a["partial"] or {}
        k = int(p.get("k", 1))
        tau = np.linspace(float(p.get("tau_min", -10.0)), float(p.get("tau_max", 30.0)), int(p.get("points", 801)))
        t = 2 * math.pi * k + tau / (2 * s.Gamma)
        val = echo.partial_amplitude_deformed(k, t, echo.scaling_map(s))
        h, c = _complex_cols("partial", val)
        _write_table(outdir / f"partial{tag}.csv", ["tau"] + h, [tau] + c, plan.delimiter)
        res["partial"] = {"k": k, "max_backward": float(np.max(np.abs(val[tau < 0]), initial=0.0))}
    if "reservoir" in a and kind == "reservoir":
        ns = [int(x) for x in (a["reservoir"] or {}).get("n", [0, 1, 2])]
        o = dynamics.evolve_oracle(build_hamiltonian(s), plan.t, full=True)
        cols = [np.abs(o.a_n[:, n + s.N]) ** 2 for n in ns]
        _write_table(outdir / f"reservoir{tag}.csv", ["t"] + [f"pop_n{n}" for n in ns], [plan.t] + cols, plan.delimiter)
        res["reservoir"] = {"n": ns, "lorentzian": [float(echo.lorentzian(n, s.Gamma)) for n in ns]}
    if "absorption" in a and kind == "reservoir":
        p = a["absorption"] or {}
        e = np.linspace(float(p.get("eps_min", -10)), float(p.get("eps_max", 10)), int(p.get("points", 2001)))
        b = spectrum.absorption_band(s, e)
        _write_table(outdir / f"absorption{tag}.csv", ["eps", "absorption"], [e, b.rho], plan.delimiter)
        res["absorption"] = {"resolved": bool(b.resolved)}
    if "lineshape" in a and kind == "ensemble":
        p = a["lineshape"] or {}
        e = np.linspace(float(p.get("eps_min", -2)), float(p.get("eps_max", 2)), int(p.get("points", 401)))
        gbar = max(base.gamma, 1e-12)
        prof = ensemble.lineshape(gbar, float(np.max(s.dispersion)), e)
        _write_table(outdir / f"lineshape{tag}.csv", ["eps", "profile"], [e, prof], plan.delimiter)
    return res


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        return _finite(float(x))
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def execute(plan: Plan, outdir: Path, tag: str = "") -> dict:
    """Write series files for ``plan`` and return its metrics."""
    t = plan.t
    files = []
    if plan.kind == "ensemble":
        r = ensemble.ensemble_dynamics(plan.spec, t, threads=_THREADS)
        name = f"series_ensemble{tag}.csv"
        _write_table(outdir / name, ["t", "pop_mean", "pop_stderr", "re_amp_mean", "im_amp_mean"],
                     [t, r.population, r.stderr, r.amplitude.real, r.amplitude.imag], plan.delimiter)
        files.append(name)
    for method in plan.methods if plan.kind != "ensemble" else ():
        out = _series(plan, method)
        name = f"series_{method}{tag}.csv"
        if plan.kind == "tls":
            hL, cL = _complex_cols("L", out[0])
            hR, cR = _complex_cols("R", out[1])
            _write_table(outdir / name, ["t"] + hL + hR, [t] + cL + cR, plan.delimiter)
        else:
            h, c = _complex_cols("s", out)
            _write_table(outdir / name, ["t"] + h, [t] + c, plan.delimiter)
        files.append(name)
    metrics = _analysis(plan, outdir, tag)
    metrics["files"] = files
    return _jsonable(metrics)


def scalar_metrics(plan: Plan, names) -> dict:
    """Scalar summary used by ``scan``."""
    s, kind = plan.spec, plan.kind
    out = {}
    for name in names:
        if name == "Gamma":
            out[name] = s.base.Gamma if kind == "ensemble" else s.Gamma
        elif name == "k_c":
            out[name] = (chain.chain_critical_cycle(s, detect=False).formula if kind == "chain"
                         else echo.critical_cycle(s.base if kind == "ensemble" else s).value)
        elif name == "k_c_detected":
            if kind == "chain":
                out[name] = chain.chain_critical_cycle(s).detected
            elif kind == "reservoir" and isinstance(s.variant, Bare):
                out[name] = echo.overlap_cycle(s)
            else:
                out[name] = None
        elif name in ("delta_c", "delta_c_gamma"):
            G = s.Gamma if kind == "reservoir" else math.nan
            dc = spectrum.critical_mixing_deformation(G) if kind == "reservoir" else None
            out[name] = None if dc is None else (dc if name == "delta_c" else dc * G)
        elif name == "front_speed":
            if kind != "chain":
                out[name] = None
                continue
            sites = np.arange(5, min(21, s.N))
            o = chain.chain_oracle(s, plan.t, sites)
            fr = chain.front_arrival(o, s)
            out[name] = float(1.0 / np.polyfit(sites, fr, 1)[0])
        elif name == "cycle_average":
            ks = (plan.analysis.get("averages") or {}).get("k", [1])
            out[name] = echo.cycle_average(int(ks[0]), s) if kind == "reservoir" else None
    return _jsonable(out)


DEFAULT_SCAN = {"reservoir": ["Gamma", "k_c", "k_c_detected"], "chain": ["k_c", "k_c_detected"],
                "tls": [], "ensemble": ["k_c"]}


def _versions() -> dict:
    out = {"python": sys.version.split()[0]}
    for pkg in ("artifact", "numpy", "scipy", "PyYAML"):
        try:
            out[pkg] = metadata.version(pkg)
        except metadata.PackageNotFoundError:
            out[pkg] = None
    return out


def _manifest(outdir: Path, sc: Scenario, command: str, started: float, extra: dict):
    text = sc.dump()
    man = {
        "command": command,
        "source": sc.source,
        "config_sha256": hashlib.sha256(text.encode()).hexdigest(),
        "versions": _versions(),
        "wall_time_s": time.perf_counter() - started,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        **extra,
    }
    (outdir / "manifest.json").write_text(json.dumps(man, indent=2, sort_keys=True) + "\n")
    (outdir / "config.yaml").write_text(text)


def _write_json(path: Path, obj):
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


_THREADS = 1


def cmd_run(sc: Scenario, outdir: Path) -> int:
    started = time.perf_counter()
    overrides = series_overrides(sc)
    plans = [build_plan(sc, ov) for ov in overrides]
    outdir.mkdir(parents=True, exist_ok=True)
    metrics = {}
    for i, (ov, plan) in enumerate(zip(overrides, plans)):
        tag = f"_{i}" if len(plans) > 1 else ""
        log.info("running %s%s", sc.source, f" with {ov}" if ov else "")
        m = execute(plan, outdir, tag)
        if ov:
            m["override"] = ov
        metrics[str(i) if len(plans) > 1 else "run"] = m
    _write_json(outdir / "metrics.json", metrics)
    _manifest(outdir, sc, "run", started, {"seed": plans[0].seed, "runs": len(plans)})
    return EXIT_OK


def _parse_values(text: str) -> list:
    out = []
    for tok in text.split(","):
        tok = tok.strip()
        if not tok:
            continue
        v = yaml.safe_load(tok)
        out.append(v)
    if not out:
        raise ConfigError(["--values: empty list"])
    return out


def cmd_scan(sc: Scenario, param: str, values: list, outdir: Path) -> int:
    started = time.perf_counter()
    plans = [build_plan(sc, {param: v}) for v in values]
    names = plans[0].analysis.get("scan_metrics") or DEFAULT_SCAN[plans[0].kind]
    outdir.mkdir(parents=True, exist_ok=True)

    def one(plan):
        return scalar_metrics(plan, names)

    if _THREADS > 1 and len(plans) > 1:
        with ThreadPoolExecutor(_THREADS) as pool:
            rows = list(pool.map(one, plans))
    else:
        rows = [one(p) for p in plans]
    delim = plans[0].delimiter
    lines = [delim.join([param] + list(names))]
    for v, row in zip(values, rows):
        cells = [repr(v)] + ["nan" if row[n] is None else repr(row[n]) for n in names]
        lines.append(delim.join(cells))
    (outdir / "scan.csv").write_text("\n".join(lines) + "\n")
    _write_json(outdir / "metrics.json", {"param": param, "values": _jsonable(values), "rows": rows})
    _manifest(outdir, sc, f"scan {param}", started, {"seed": plans[0].seed, "runs": len(plans)})
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="zwanzig", description="Recurrence-cycle dynamics of discrete reservoirs")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("config", help="scenario YAML file or preset name (fig2 .. fig9)")
        p.add_argument("--out", default=None, help="output directory (overrides output.dir)")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--threads", type=int, default=1)

    common(sub.add_parser("run", help="run a scenario"))
    p = sub.add_parser("validate", help="check a scenario without computing")
    p.add_argument("config")
    p = sub.add_parser("scan", help="sweep one parameter and tabulate scalar metrics")
    common(p)
    p.add_argument("--param", required=True, help="dotted path, e.g. model.C2")
    p.add_argument("--values", required=True, help="comma-separated values")
    return ap


def main(argv=None) -> int:
    global _THREADS
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "validate":
            try:
                problems = validate(load_config(args.config))
            except ConfigError as exc:
                problems = exc.problems
            for p in problems:
                print(p)
            if not problems:
                print("ok")
            return EXIT_CONFIG if problems else EXIT_OK
        sc = load_config(args.config)
        if args.seed is not None:
            sc.data["seed"] = args.seed
        _THREADS = max(1, args.threads)
        out = Path(args.out or (sc.data.get("output") or {}).get("dir", "out"))
        if args.command == "run":
            return cmd_run(sc, out)
        return cmd_scan(sc, args.param, _parse_values(args.values), out)
    except ConfigError as exc:
        for p in exc.problems:
            print(p, file=sys.stderr)
        return EXIT_CONFIG
    except (ArithmeticError, np.linalg.LinAlgError, ValueError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
