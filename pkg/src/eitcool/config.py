"""Scenario configuration files.

A config is a TOML document: top-level ``seed`` and ``output_dir``, an
optional ``[scheme]`` and ``[mode]`` block, and exactly one scenario block
(``[spectrum]``, ``[cool]``, ``[mc]``, ``[sweep]``, ``[string]`` or
``[thermometry]``). The full schema lives in ``docs/config.md``.

Validation collects every problem before failing, so one run reports all
typos and out-of-range parameters at once.
"""

from __future__ import annotations

import hashlib
import inspect
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

try:
    import tomllib
except ImportError:  # Python < 3.11
    import tomli as tomllib

import tomli_w

from . import schemes
from .core import CA40, CA40_397, HG199, RB87, ConfigError, EitCoolError, PhysicalSpecies, TrapMode, lamb_dicke_single

SCENARIOS = ("spectrum", "cool", "mc", "sweep", "string", "thermometry")

SCHEME_KINDS = {
    "two_level": schemes.two_level,
    "lambda": schemes.lambda_scheme,
    "repumped_lambda": schemes.repumped_lambda,
}

SPECIES = {"Ca40": CA40, "Ca40_397": CA40_397, "Hg199": HG199, "Rb87": RB87}

REQUIRED = object()

# key -> (allowed types, default)
_NUM = (int, float)
SCENARIO_SCHEMAS = {
    "spectrum": {
        "detuning_min": (_NUM, REQUIRED),
        "detuning_max": (_NUM, REQUIRED),
        "points": (int, 401),
        "probe": (list, ["g", "e"]),
        "peak_window": (list, None),
    },
    "cool": {
        "t_final": (_NUM, REQUIRED),
        "points": (int, 201),
        "initial_n": (_NUM, 0.0),
        "n_max": (int, None),
    },
    "mc": {
        "n_trajectories": (int, REQUIRED),
        "n_max": (int, REQUIRED),
        "t_final": (_NUM, REQUIRED),
        "dt": (_NUM, REQUIRED),
        "initial_n": (_NUM, 0.0),
        "record_interval": (_NUM, None),
        "emission": (str, "isotropic"),
        "steady_fraction": (_NUM, 0.2),
    },
    "sweep": {
        "species": ((str, dict), REQUIRED),
        "recoil_alpha": (_NUM, 1 / 3),
        "nu_min": (_NUM, None),
        "nu_max": (_NUM, None),
        "points": (int, None),
        "frequencies": (list, None),
    },
    "string": {
        "n_ions": (int, REQUIRED),
        "species": ((str, dict), "Ca40"),
        "nu_axial": (_NUM, REQUIRED),
        "nu_radial": (_NUM, None),
        "cooling_wavelength": (_NUM, 397.0),
        "axis_cosine": (_NUM, 1.0),
        "radial_cosine": (_NUM, 0.0),
        "recoil_alpha": (_NUM, 1 / 3),
        "blur_ion": (int, 0),
        "gate_mode": (int, 0),
    },
    "thermometry": {
        "mbar": (_NUM, REQUIRED),
        "eta": (_NUM, REQUIRED),
        "omega": (_NUM, REQUIRED),
        "t_max": (_NUM, REQUIRED),
        "points": (int, 80),
        "shots": (int, 0),
        "decay": (_NUM, None),
        "n_boot": (int, 0),
        "sideband_shots": (int, 100),
        "sideband_pulse": (_NUM, None),
    },
}

MODE_SCHEMA = {
    "frequency": (_NUM, REQUIRED),
    "lamb_dicke": (_NUM, None),
    "recoil_alpha": (_NUM, 1 / 3),
    "species": ((str, dict), None),
}

NEEDS = {
    "spectrum": ("scheme",),
    "cool": ("scheme", "mode"),
    "mc": ("scheme", "mode"),
    "sweep": ("scheme",),
    "string": ("scheme",),
    "thermometry": (),
}


class ConfigValidationError(ConfigError):
    """Raised with the complete list of problems found in a config."""

    def __init__(self, errors, source=None):
        self.errors = list(errors)
        where = f"{source}: " if source else ""
        super().__init__(where + "; ".join(self.errors))


@dataclass
class RunConfig:
    scenario: str
    params: dict
    scheme: dict | None = None
    mode: dict | None = None
    seed: int = 0
    output_dir: str | None = None
    warnings: list = field(default_factory=list, compare=False)

    def to_dict(self):
        d = {"seed": self.seed}
        if self.output_dir is not None:
            d["output_dir"] = self.output_dir
        if self.scheme is not None:
            d["scheme"] = dict(self.scheme)
        if self.mode is not None:
            d["mode"] = dict(self.mode)
        d[self.scenario] = dict(self.params)
        return d

    def config_hash(self):
        d = self.to_dict()
        d.pop("output_dir", None)
        return hashlib.sha1(json.dumps(d, sort_keys=True).encode()).hexdigest()[:12]

    # builders, valid only after validation

    def build_scheme(self):
        kw = dict(self.scheme)
        return SCHEME_KINDS[kw.pop("kind")](**kw)

    def build_mode(self):
        m = self.mode
        species = resolve_species(m["species"]) if m.get("species") is not None else None
        eta = m.get("lamb_dicke")
        if eta is None:
            eta = lamb_dicke_single(species, m["frequency"])
        return TrapMode(m["frequency"], eta, m.get("recoil_alpha", 1 / 3), species)


def resolve_species(spec):
    if isinstance(spec, dict):
        return PhysicalSpecies(float(spec["mass"]), float(spec["wavelength"]))
    try:
        return SPECIES[spec]
    except KeyError:
        raise ConfigError(f"unknown species {spec!r}; known: {', '.join(SPECIES)}") from None


def _type_name(types):
    types = types if isinstance(types, tuple) else (types,)
    return " or ".join(t.__name__ for t in types)


def _check_block(name, raw, schema, errors, unknown):
    """Type-check ``raw`` against ``schema``; return the block with defaults filled in."""
    out = {}
    for key, value in raw.items():
        if key not in schema:
            unknown.append(f"{name}.{key}: unknown key")
            continue
        types, _ = schema[key]
        ok = isinstance(value, types) and not isinstance(value, bool)
        if ok and isinstance(value, float) and not math.isfinite(value):
            errors.append(f"{name}.{key}: must be finite")
            continue
        if not ok:
            errors.append(f"{name}.{key}: expected {_type_name(types)}, got {type(value).__name__}")
            continue
        out[key] = value
    for key, (_, default) in schema.items():
        if key in out or key in raw:
            continue
        if default is REQUIRED:
            errors.append(f"{name}.{key}: required")
        elif default is not None:
            out[key] = default
    return out


def _check_scheme(raw, errors, unknown):
    kind = raw.get("kind")
    if kind not in SCHEME_KINDS:
        errors.append(f"scheme.kind: must be one of {', '.join(SCHEME_KINDS)}, got {kind!r}")
        return None
    sig = inspect.signature(SCHEME_KINDS[kind])
    schema = {"kind": (str, REQUIRED)}
    for p in sig.parameters.values():
        schema[p.name] = (_NUM, REQUIRED if p.default is inspect.Parameter.empty else p.default)
    n_before = len(errors)
    block = _check_block("scheme", raw, schema, errors, unknown)
    if len(errors) == n_before and all(k in block for k in schema):
        try:
            kw = dict(block)
            SCHEME_KINDS[kw.pop("kind")](**kw)
        except (EitCoolError, ValueError) as exc:
            errors.append(f"scheme: {exc}")
    return block


def _check_species(name, value, errors):
    if value is None:
        return
    if isinstance(value, dict):
        extra = set(value) - {"mass", "wavelength"}
        if extra or not {"mass", "wavelength"} <= set(value):
            errors.append(f"{name}: species table needs exactly 'mass' (amu) and 'wavelength' (nm)")
            return
    try:
        resolve_species(value)
    except (EitCoolError, ValueError, TypeError) as exc:
        errors.append(f"{name}: {exc}")


def _check_mode(raw, errors, unknown):
    block = _check_block("mode", raw, MODE_SCHEMA, errors, unknown)
    _check_species("mode.species", block.get("species"), errors)
    if "lamb_dicke" not in block and "species" not in block:
        errors.append("mode: give lamb_dicke or a species to compute it from")
    if "frequency" in block:
        try:
            TrapMode(block["frequency"], block.get("lamb_dicke", 0.0), block.get("recoil_alpha", 1 / 3))
        except (EitCoolError, ValueError) as exc:
            errors.append(f"mode: {exc}")
    return block


def _check_scenario(name, block, errors):
    def positive(*keys):
        for k in keys:
            if k in block and block[k] is not None and not block[k] > 0:
                errors.append(f"{name}.{k}: must be > 0, got {block[k]}")

    if name == "spectrum":
        positive("points")
        if len(block.get("probe", [])) != 2:
            errors.append("spectrum.probe: expected [lower, upper]")
        pw = block.get("peak_window")
        if pw is not None and (len(pw) != 2 or not pw[0] < pw[1]):
            errors.append("spectrum.peak_window: expected [low, high] with low < high")
        if block.get("detuning_min", 0) >= block.get("detuning_max", 1):
            errors.append("spectrum: detuning_min must be < detuning_max")
    elif name == "cool":
        positive("t_final", "points", "n_max")
    elif name == "mc":
        positive("n_trajectories", "n_max", "t_final", "dt", "record_interval")
        if block.get("emission") not in ("isotropic", "none"):
            errors.append(f"mc.emission: must be 'isotropic' or 'none', got {block.get('emission')!r}")
    elif name == "sweep":
        _check_species("sweep.species", block.get("species"), errors)
        has_range = all(block.get(k) is not None for k in ("nu_min", "nu_max", "points"))
        if has_range == (block.get("frequencies") is not None):
            errors.append("sweep: give either nu_min/nu_max/points or frequencies")
        positive("nu_min", "nu_max", "points")
        for f in block.get("frequencies") or []:
            if not isinstance(f, (int, float)) or not f > 0:
                errors.append(f"sweep.frequencies: entries must be positive numbers, got {f!r}")
    elif name == "string":
        _check_species("string.species", block.get("species"), errors)
        positive("n_ions", "nu_axial", "nu_radial", "cooling_wavelength")
        n = block.get("n_ions", 1)
        if not 0 <= block.get("blur_ion", 0) < max(n, 1):
            errors.append("string.blur_ion: must index an ion of the string")
        if not 0 <= block.get("gate_mode", 0) < max(n, 1):
            errors.append("string.gate_mode: must index an axial mode")
    elif name == "thermometry":
        positive("eta", "omega", "t_max", "points", "sideband_shots", "decay", "sideband_pulse")
        if block.get("mbar", 0) < 0:
            errors.append("thermometry.mbar: must be >= 0")
        for k in ("shots", "n_boot"):
            if block.get(k, 0) < 0:
                errors.append(f"thermometry.{k}: must be >= 0")


def validate(doc, strict=True, source=None) -> RunConfig:
    """Turn a parsed config document into a :class:`RunConfig`.

    Unknown keys are errors when ``strict``; otherwise they are returned in
    ``RunConfig.warnings``.
    """
    errors, unknown = [], []
    present = [s for s in SCENARIOS if s in doc]
    if len(present) != 1:
        errors.append(f"exactly one scenario block required ({', '.join(SCENARIOS)}), found {present or 'none'}")
    for key in doc:
        if key not in SCENARIOS and key not in ("seed", "output_dir", "scheme", "mode"):
            unknown.append(f"{key}: unknown key")
    seed = doc.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        errors.append(f"seed: expected a non-negative integer, got {seed!r}")
    out = doc.get("output_dir")
    if out is not None and not isinstance(out, str):
        errors.append("output_dir: expected a string")

    scenario = present[0] if len(present) == 1 else None
    scheme = mode = None
    params = {}
    for blk in ("scheme", "mode"):
        if blk in doc and not isinstance(doc[blk], dict):
            errors.append(f"{blk}: expected a table")
    if isinstance(doc.get("scheme"), dict):
        scheme = _check_scheme(doc["scheme"], errors, unknown)
    if isinstance(doc.get("mode"), dict):
        mode = _check_mode(doc["mode"], errors, unknown)
    if scenario is not None:
        raw = doc[scenario]
        if not isinstance(raw, dict):
            errors.append(f"{scenario}: expected a table")
        else:
            params = _check_block(scenario, raw, SCENARIO_SCHEMAS[scenario], errors, unknown)
            _check_scenario(scenario, params, errors)
        for need in NEEDS[scenario]:
            if need not in doc:
                errors.append(f"[{need}] block required by the {scenario} scenario")
        for blk in ("scheme", "mode"):
            if blk in doc and blk not in NEEDS[scenario]:
                unknown.append(f"[{blk}] block is not used by the {scenario} scenario")
    if strict:
        errors.extend(unknown)
    if errors:
        raise ConfigValidationError(errors, source)
    return RunConfig(scenario, params, scheme, mode, seed, out, warnings=[] if strict else unknown)


def parse(text, strict=True, source=None) -> RunConfig:
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        where = f"{source}: " if source else ""
        raise ConfigError(f"{where}parse error: {exc}") from None
    return validate(doc, strict=strict, source=source)


def load_config(path, strict=True) -> RunConfig:
    """Read and validate a config file, or a bundled config given by name."""
    p = Path(path)
    if not p.exists():
        bundled = bundled_path(str(path))
        if bundled is None:
            raise ConfigError(f"{path}: no such file or bundled config")
        p = bundled
    return parse(p.read_text(), strict=strict, source=str(p))


def dumps(cfg: RunConfig) -> str:
    return tomli_w.dumps(cfg.to_dict())


def bundled_names():
    root = resources.files("eitcool") / "configs"
    return sorted(Path(str(e.name)).stem for e in root.iterdir() if e.name.endswith(".cfg"))


def bundled_path(name):
    stem = Path(name).stem if name.endswith(".cfg") else name
    p = resources.files("eitcool") / "configs" / f"{stem}.cfg"
    return Path(str(p)) if p.is_file() else None
