"""Scenario files.

Grammar (one statement per line)::

    # comment                    ; blank lines and '#' / ';' comments ignored
    [section]                    ; one of: scenario model coupling run analysis sweep output
    key = value                  ; value: number, list of numbers 'v1, v2', word, true/false

Numbers are decimal with an optional exponent (``0.2``, ``1e-3``, ``-4``).
Every problem is reported with its line number; parsing never stops at the
first error. ``--override section.key=value`` entries are applied after the
file and reported as line ``override[i]``.

Sections and keys
-----------------
scenario  name (word)
model     name (word), d (int, cucker_smale only), then the model's own
          parameters (see :func:`mfexcite.models.model_keys`)
coupling  k (list), sigma or sigma2 (list, one of them), delta (number)
run       mode (particles|reduced|both), N (int), dt, t_end, record_every
          (int), seed (int), init (gaussian|point), m0 (list), workers (int)
analysis  hermite_theta, hermite_degree (int), cycles (bool),
          cycle_center (list), cycle_spread, residual_deltas (list)
sweep     detector (hopf|pitchfork|snc|homoclinic|cycle_presence),
          parameter (word), bracket (list of 2), values (list),
          probe (list), branch (unique|trivial|nontrivial), fixed,
          t_end, dt
output    dir (word), prefix (word)
"""

import re
from dataclasses import MISSING, dataclass, fields, replace
from typing import Optional

from .errors import ConfigError
from .models import MODEL_NAMES, model_keys

_NUM = r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?"
_NUM_RE = re.compile(rf"^{_NUM}$")
_INT_RE = re.compile(r"^[+-]?\d+$")
_WORD_RE = re.compile(r"^[A-Za-z0-9_./\-]+$")

MODES = ("particles", "reduced", "both")
DETECTORS = ("hopf", "pitchfork", "snc", "homoclinic", "cycle_presence")
INITS = ("gaussian", "point")


class ScenarioError(ConfigError):
    """All problems found in one document: list of (line, message)."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(f"line {ln}: {msg}" for ln, msg in self.errors))

    def to_dict(self):
        return {"status": "error", "kind": "config",
                "errors": [{"line": ln, "message": msg} for ln, msg in self.errors]}


# ------------------------------------------------------------ blocks

@dataclass(frozen=True)
class ModelBlock:
    name: str
    params: tuple  # sorted (key, value) pairs
    d: Optional[int] = None

    @property
    def param_dict(self):
        return dict(self.params)


@dataclass(frozen=True)
class CouplingBlock:
    k: tuple
    noise: tuple
    noise_key: str = "sigma2"  # "sigma" or "sigma2"
    delta: float = 0.0

    @property
    def sigma2(self):
        return tuple(v * v for v in self.noise) if self.noise_key == "sigma" else self.noise


@dataclass(frozen=True)
class RunBlock:
    mode: str = "particles"
    N: Optional[int] = None
    dt: Optional[float] = None
    t_end: Optional[float] = None
    record_every: int = 1
    seed: int = 0
    init: str = "gaussian"
    m0: Optional[tuple] = None
    workers: int = 1


@dataclass(frozen=True)
class AnalysisBlock:
    hermite_theta: float = 1.0
    hermite_degree: Optional[int] = None
    cycles: bool = False
    cycle_center: Optional[tuple] = None
    cycle_spread: Optional[float] = None
    residual_deltas: Optional[tuple] = None


@dataclass(frozen=True)
class SweepBlock:
    detector: str
    parameter: str = "u"
    bracket: Optional[tuple] = None
    values: Optional[tuple] = None
    probe: Optional[tuple] = None
    branch: str = "unique"
    fixed: Optional[float] = None
    t_end: float = 2000.0
    dt: float = 1e-3


@dataclass(frozen=True)
class OutputBlock:
    dir: str = "out"
    prefix: str = "scenario"


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    model: ModelBlock
    coupling: CouplingBlock
    run: Optional[RunBlock] = None
    analysis: Optional[AnalysisBlock] = None
    sweep: Optional[SweepBlock] = None
    output: OutputBlock = OutputBlock()


# ------------------------------------------------------------ schema

_F, _I, _B, _W, _L = "number", "integer", "bool", "word", "list"
_SCHEMA = {
    "scenario": {"name": _W},
    "coupling": {"k": _L, "sigma": _L, "sigma2": _L, "delta": _F},
    "run": {"mode": _W, "N": _I, "dt": _F, "t_end": _F, "record_every": _I, "seed": _I,
            "init": _W, "m0": _L, "workers": _I},
    "analysis": {"hermite_theta": _F, "hermite_degree": _I, "cycles": _B,
                 "cycle_center": _L, "cycle_spread": _F, "residual_deltas": _L},
    "sweep": {"detector": _W, "parameter": _W, "bracket": _L, "values": _L, "probe": _L,
              "branch": _W, "fixed": _F, "t_end": _F, "dt": _F},
    "output": {"dir": _W, "prefix": _W},
}
SECTIONS = ("scenario", "model", "coupling", "run", "analysis", "sweep", "output")


def _convert(kind, raw):
    raw = raw.strip()
    if kind == _F:
        if not _NUM_RE.match(raw):
            raise ValueError(f"expected a number, got {raw!r}")
        return float(raw)
    if kind == _I:
        if not _INT_RE.match(raw):
            raise ValueError(f"expected an integer, got {raw!r}")
        return int(raw)
    if kind == _B:
        if raw.lower() not in ("true", "false"):
            raise ValueError(f"expected true or false, got {raw!r}")
        return raw.lower() == "true"
    if kind == _W:
        if not _WORD_RE.match(raw):
            raise ValueError(f"expected a single word, got {raw!r}")
        return raw
    if kind == _L:
        parts = [p.strip() for p in raw.split(",")]
        if not parts or any(not _NUM_RE.match(p) for p in parts):
            raise ValueError(f"expected a comma-separated list of numbers, got {raw!r}")
        return tuple(float(p) for p in parts)
    raise AssertionError(kind)


def _tokenise(text, overrides=()):
    """section -> key -> (raw value, line label); collects syntax errors."""
    errors, data, headers = [], {}, {}
    section = None
    for ln, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        if not s or s[0] in "#;":
            continue
        if s.startswith("["):
            if not s.endswith("]"):
                errors.append((ln, f"malformed section header {s!r}"))
                section = None
                continue
            section = s[1:-1].strip()
            if section not in SECTIONS:
                errors.append((ln, f"unknown section [{section}]"))
                section = None
                continue
            if section in headers:
                errors.append((ln, f"duplicate section [{section}] (first at line {headers[section]})"))
            headers.setdefault(section, ln)
            data.setdefault(section, {})
            continue
        if "=" not in s:
            errors.append((ln, f"expected 'key = value', got {s!r}"))
            continue
        key, _, val = s.partition("=")
        key = key.strip()
        # trailing comments
        val = re.split(r"\s[#;]", val, maxsplit=1)[0].strip()
        if section is None:
            errors.append((ln, f"key {key!r} outside any known section"))
            continue
        if key in data[section]:
            errors.append((ln, f"duplicate key {section}.{key} (first at line {data[section][key][1]})"))
            continue
        data[section][key] = (val, ln)
    for i, ov in enumerate(overrides):
        label = f"override[{i}]"
        m = re.match(r"^\s*([A-Za-z_]+)\.([A-Za-z0-9_]+)\s*=\s*(.*)$", ov)
        if not m:
            errors.append((label, f"override must look like section.key=value, got {ov!r}"))
            continue
        sec, key, val = m.groups()
        if sec not in SECTIONS:
            errors.append((label, f"unknown section [{sec}]"))
            continue
        headers.setdefault(sec, label)
        data.setdefault(sec, {})[key] = (val.strip(), label)
    return data, headers, errors


def parse_config(text, overrides=()):
    """Parse and validate a scenario document; raises ScenarioError listing
    every problem found."""
    data, headers, errors = _tokenise(text, overrides)
    vals = {}

    def get(sec, key, kind):
        raw, ln = data[sec][key]
        try:
            return _convert(kind, raw)
        except ValueError as e:
            errors.append((ln, f"{sec}.{key}: {e}"))
            return None

    for sec, schema in _SCHEMA.items():
        if sec not in data:
            continue
        vals[sec] = {}
        for key in data[sec]:
            if key not in schema:
                errors.append((data[sec][key][1], f"unknown key {sec}.{key}"))
                continue
            v = get(sec, key, schema[key])
            if v is not None:
                vals[sec][key] = v

    def need(sec, key, why=""):
        if key not in vals.get(sec, {}) and key not in data.get(sec, {}):
            errors.append((headers.get(sec, 0), f"{sec}.{key} required{why}"))

    # model block: keys depend on the model name
    model = None
    if "model" not in data:
        errors.append((0, "[model] section required"))
    else:
        md = data["model"]
        if "name" not in md:
            errors.append((headers["model"], "model.name required"))
        else:
            name, ln = md["name"]
            if name not in MODEL_NAMES:
                errors.append((ln, f"unknown model {name!r}; known: {', '.join(MODEL_NAMES)}"))
            else:
                keys = model_keys(name)
                params, dim = {}, None
                for key, (raw, kln) in md.items():
                    if key == "name":
                        continue
                    if key == "d" and name == "cucker_smale":
                        try:
                            dim = _convert(_I, raw)
                        except ValueError as e:
                            errors.append((kln, f"model.d: {e}"))
                        continue
                    if key not in keys:
                        errors.append((kln, f"unknown key model.{key} for {name} "
                                            f"(expected {', '.join(keys)})"))
                        continue
                    try:
                        params[key] = _convert(_F, raw)
                    except ValueError as e:
                        errors.append((kln, f"model.{key}: {e}"))
                for key in keys:
                    if key not in md:
                        errors.append((headers["model"], f"model.{key} required for {name}"))
                if name == "fhn" and params.get("tau", 1.0) <= 0:
                    errors.append((md["tau"][1], "model.tau must be > 0"))
                model = ModelBlock(name, tuple(sorted(params.items())), dim)

    # coupling
    coupling = None
    if "coupling" not in data:
        errors.append((0, "[coupling] section required"))
    else:
        cv = vals.get("coupling", {})
        need("coupling", "k")
        if "sigma" in data["coupling"] and "sigma2" in data["coupling"]:
            errors.append((data["coupling"]["sigma2"][1], "give only one of coupling.sigma, coupling.sigma2"))
        elif "sigma" not in data["coupling"] and "sigma2" not in data["coupling"]:
            errors.append((headers["coupling"], "coupling.sigma or coupling.sigma2 required"))
        nk = "sigma" if "sigma" in cv else "sigma2"
        if "k" in cv and nk in cv:
            ln = data["coupling"]["k"][1]
            if len(cv["k"]) != len(cv[nk]):
                errors.append((ln, "coupling.k and coupling noise lengths differ"))
            if any(v <= 0 for v in cv["k"]):
                errors.append((ln, "coupling.k entries must be > 0"))
            if any(v < 0 for v in cv[nk]):
                errors.append((data["coupling"][nk][1], f"coupling.{nk} entries must be >= 0"))
            if cv.get("delta", 0.0) < 0:
                errors.append((data["coupling"]["delta"][1], "coupling.delta must be >= 0"))
            coupling = CouplingBlock(cv["k"], cv[nk], nk, cv.get("delta", 0.0))
            if model is not None:
                d = _model_dim(model)
                if len(cv["k"]) != d:
                    errors.append((ln, f"coupling has {len(cv['k'])} axes, model {model.name} has {d}"))

    rv = vals.get("run", {})
    run = RunBlock(**rv) if "run" in data else None
    if run is not None:
        if run.mode not in MODES:
            errors.append((data["run"]["mode"][1], f"run.mode must be one of {MODES}"))
        if run.init not in INITS:
            errors.append((data["run"]["init"][1], f"run.init must be one of {INITS}"))
        if run.mode in ("particles", "both"):
            need("run", "N", f" in {run.mode} mode")
        need("run", "dt")
        need("run", "t_end")
        for key, lo in (("N", 1), ("record_every", 1), ("workers", 1), ("seed", 0)):
            if key in rv and rv[key] < lo:
                errors.append((data["run"][key][1], f"run.{key} must be >= {lo}"))
        if "dt" in rv and rv["dt"] <= 0:
            errors.append((data["run"]["dt"][1], "run.dt must be > 0"))
        if "t_end" in rv and rv["t_end"] < 0:
            errors.append((data["run"]["t_end"][1], "run.t_end must be >= 0"))
        if "seed" in rv and rv["seed"] >= 2 ** 64:
            errors.append((data["run"]["seed"][1], "run.seed must fit in 64 bits"))
        if run.m0 is not None and model is not None and len(run.m0) != _model_dim(model):
            errors.append((data["run"]["m0"][1], "run.m0 length differs from the model dimension"))
    elif "sweep" not in data:
        errors.append((0, "[run] or [sweep] section required"))

    analysis = AnalysisBlock(**vals["analysis"]) if "analysis" in vals else None
    if analysis is not None and analysis.residual_deltas is not None:
        if len(analysis.residual_deltas) < 3 or any(
                b <= a for a, b in zip(analysis.residual_deltas, analysis.residual_deltas[1:])):
            errors.append((data["analysis"]["residual_deltas"][1],
                           "analysis.residual_deltas needs >= 3 increasing values"))

    sweep = None
    if "sweep" in data:
        sv = vals.get("sweep", {})
        need("sweep", "detector")
        if "detector" in sv:
            if sv["detector"] not in DETECTORS:
                errors.append((data["sweep"]["detector"][1], f"sweep.detector must be one of {DETECTORS}"))
            elif sv["detector"] in ("hopf", "snc", "homoclinic"):
                need("sweep", "bracket", f" for detector {sv['detector']}")
            elif sv["detector"] == "cycle_presence":
                need("sweep", "values", " for detector cycle_presence")
            if sv["detector"] in ("snc", "homoclinic"):
                need("sweep", "probe", f" for detector {sv['detector']}")
            if "bracket" in sv and len(sv["bracket"]) != 2:
                errors.append((data["sweep"]["bracket"][1], "sweep.bracket needs exactly 2 values"))
            if _known(sv, SweepBlock):
                sweep = SweepBlock(**sv)

    output = OutputBlock(**vals["output"]) if "output" in vals else OutputBlock()
    name = vals.get("scenario", {}).get("name", output.prefix)

    if errors:
        raise ScenarioError(sorted(errors, key=lambda e: (isinstance(e[0], str), e[0])))
    return ScenarioConfig(name, model, coupling, run, analysis, sweep, output)


def _known(vals, cls):
    """True when every field of ``cls`` without a default is present."""
    return all(f.name in vals for f in fields(cls)
               if f.default is MISSING and f.default_factory is MISSING)


def _model_dim(model):
    if model.name == "cucker_smale":
        return model.d if model.d is not None else 2
    return 2


# ------------------------------------------------------------ printing

def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, tuple):
        return ", ".join(_fmt(float(x)) for x in v)
    return str(v)


def format_config(cfg):
    """Canonical text; parse_config(format_config(c)) == c."""
    out = [f"[scenario]", f"name = {cfg.name}", "", "[model]", f"name = {cfg.model.name}"]
    if cfg.model.d is not None:
        out.append(f"d = {cfg.model.d}")
    out += [f"{k} = {_fmt(v)}" for k, v in cfg.model.params]
    c = cfg.coupling
    out += ["", "[coupling]", f"k = {_fmt(c.k)}", f"{c.noise_key} = {_fmt(c.noise)}",
            f"delta = {_fmt(c.delta)}"]
    for title, block in (("run", cfg.run), ("analysis", cfg.analysis), ("sweep", cfg.sweep),
                         ("output", cfg.output)):
        if block is None:
            continue
        out += ["", f"[{title}]"]
        out += [f"{f.name} = {_fmt(getattr(block, f.name))}" for f in fields(block)
                if getattr(block, f.name) is not None]
    return "\n".join(out) + "\n"


def with_seed(cfg, seed):
    if cfg.run is None:
        return cfg
    return replace(cfg, run=replace(cfg.run, seed=int(seed)))
