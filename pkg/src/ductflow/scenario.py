"""Scenario files: flat `section.key = value` lines with # comments.

Grammar (documented in the README):
  - one assignment per line, `domain.N1 = 16`
  - full-line comments start with #, blank lines ignored
  - values parse as int, float, bool (true/false), comma vectors of floats,
    or bare strings, in that order
  - unknown keys are errors, with the line number reported
"""

from __future__ import annotations

import hashlib
from pathlib import Path

from .errors import ScenarioError
from .solver import ScenarioConfig

# scenario key -> ScenarioConfig field
KEY_MAP = {
    "domain.L1": "L1",
    "domain.L2": "L2",
    "domain.a": "a",
    "domain.N1": "N1",
    "domain.N2": "N2",
    "domain.N3": "N3",
    "physics.nu": "nu",
    "physics.kappa": "kappa_heat",
    "physics.gamma": "gamma",
    "omega.kind": "omega_kind",
    "omega.omega0": "omega0",
    "omega.omega1": "omega1",
    "forcing.kind": "forcing_kind",
    "forcing.vector": "forcing_vector",
    "forcing.amplitude": "forcing_amplitude",
    "flux.profile": "flux_profile",
    "flux.amplitude": "flux_amplitude",
    "flux.beta": "flux_beta",
    "flux.period": "flux_period",
    "hopf.mode": "hopf_mode",
    "hopf.eps": "hopf_eps",
    "hopf.rho": "hopf_rho",
    "hopf.c_cal": "hopf_c_cal",
    "init.v": "init_v",
    "init.v_amplitude": "init_v_amplitude",
    "init.v_nmodes": "init_v_nmodes",
    "init.theta": "init_theta",
    "init.theta_mean": "init_theta_mean",
    "init.theta_amplitude": "init_theta_amplitude",
    "time.T": "T",
    "time.windows": "n_windows",
    "time.dt": "dt",
    "galerkin.m": "m",
    "audit.mu": "mu",
    "audit.c_budget": "c_budget",
    "audit.c_recon": "c_recon",
    "audit.c_theta": "c_theta",
    "audit.theta_star": "theta_star",
    "audit.theta_star_upper": "theta_star_upper",
    "audit.tol_overshoot": "tol_overshoot",
    "audit.s2_stress_nu": "s2_stress_nu",
}

_INT_FIELDS = {"N1", "N2", "N3", "n_windows", "m", "init_v_nmodes"}
_BOOL_FIELDS = {"s2_stress_nu"}
_STR_FIELDS = {
    "omega_kind", "forcing_kind", "flux_profile", "hopf_mode", "init_v", "init_theta",
}
_VEC_FIELDS = {"forcing_vector"}


def _parse_value(raw: str, fieldname: str, lineno: int):
    raw = raw.strip()
    if fieldname in _VEC_FIELDS:
        try:
            return tuple(float(x) for x in raw.split(","))
        except ValueError:
            raise ScenarioError(f"line {lineno}: cannot parse vector {raw!r}")
    if fieldname in _BOOL_FIELDS:
        low = raw.lower()
        if low in ("true", "1", "yes"):
            return True
        if low in ("false", "0", "no"):
            return False
        raise ScenarioError(f"line {lineno}: cannot parse bool {raw!r}")
    if fieldname in _INT_FIELDS:
        try:
            return int(raw)
        except ValueError:
            raise ScenarioError(f"line {lineno}: cannot parse integer {raw!r}")
    if fieldname in _STR_FIELDS:
        return raw
    try:
        return float(raw)
    except ValueError:
        raise ScenarioError(f"line {lineno}: cannot parse number {raw!r}")


def parse_scenario_text(text: str) -> ScenarioConfig:
    overrides = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ScenarioError(f"line {lineno}: expected `key = value`, got {line!r}")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        if key not in KEY_MAP:
            raise ScenarioError(f"line {lineno}: unknown key {key!r}")
        fieldname = KEY_MAP[key]
        if fieldname in overrides:
            raise ScenarioError(f"line {lineno}: duplicate key {key!r}")
        overrides[fieldname] = _parse_value(raw, fieldname, lineno)
    config = ScenarioConfig(**overrides)
    config.validate()
    return config


def load_scenario(path) -> ScenarioConfig:
    p = Path(path)
    if not p.is_file():
        raise ScenarioError(f"scenario file not found: {p}")
    return parse_scenario_text(p.read_text())


def scenario_hash(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def set_key(text: str, key: str, value) -> str:
    """Return scenario text with `key` set to `value` (replace or append)."""
    if key not in KEY_MAP:
        raise ScenarioError(f"unknown key {key!r}")
    lines = text.splitlines()
    out = []
    replaced = False
    for line in lines:
        stripped = line.strip()
        if stripped and not stripped.startswith("#") and "=" in stripped:
            k = stripped.partition("=")[0].strip()
            if k == key:
                out.append(f"{key} = {value}")
                replaced = True
                continue
        out.append(line)
    if not replaced:
        out.append(f"{key} = {value}")
    return "\n".join(out) + "\n"


def bundled_scenario_path(name: str) -> Path:
    here = Path(__file__).parent / "scenarios" / f"{name}.scn"
    if not here.is_file():
        raise ScenarioError(f"no bundled scenario named {name!r}")
    return here
