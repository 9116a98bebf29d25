"""
Experiment configuration: TOML file -> resolved parameters -> Scenario.

Every parameter has a default (desk scale: 4x4 arrays, 9x9 grid).  The
resolved configuration remembers where each value came from (``default``,
``config`` or a command-line flag) so the run manifest can mark defaulted
entries.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import tomli

from .conic import BACKENDS, Tolerances
from .geometry import ArrayGeometry, RectRegion
from .sca import INIT_STRATEGIES, ScaConfig
from .scenario import Scenario, ScenarioError, UserPlacement, db2lin, dbm2watt

__all__ = ["ConfigError", "DEFAULTS", "FULL_SCALE", "ResolvedConfig", "load_config", "resolve", "default_config_text"]


class ConfigError(ValueError):
    """Invalid configuration; ``errors`` lists every offending field."""

    def __init__(self, errors: List[str]):
        super().__init__("; ".join(errors))
        self.errors = list(errors)


DEFAULTS: Dict[str, Dict[str, Any]] = {
    "scenario": {
        "bs_height_m": 10.0,
        "bs_distance_m": 100.0,  # assumed value; BS-2 beyond the region on +y
        "tx_power_dbm": 20.0,
        "noise_power_dbm": -90.0,
        "sensing_noise_power_dbm": -90.0,
        "bandwidth_hz": 100e6,
        "cpi_s": 1e-3,
        "beta0_db": -40.0,
        "alpha_re": 1.0,
        "alpha_im": 0.0,
        "rician_factor": 10.0,
    },
    "array": {"tx_mx": 4, "tx_mz": 4, "rx_mx": 4, "rx_mz": 4, "spacing_wavelengths": 0.5},
    "users": [
        {"theta_deg": 135.0, "phi_deg": 30.0, "distance_m": 30.0, "sinr_db": 20.0},
        {"theta_deg": 135.0, "phi_deg": 150.0, "distance_m": 30.0, "sinr_db": 20.0},
    ],
    "region": {"center_x_m": 0.0, "center_y_m": 50.0, "extent_x_m": 50.0, "extent_y_m": 50.0,
               "height_m": 10.0, "nx": 9, "ny": 9},
    "seeds": {"channel": 2023, "waveform": 1, "noise": 2},
    "sca": {"epsilon": 1e-4, "max_outer_iterations": 50, "init": "centroid", "backend": "ipm",
            "feasibility_tol": 1e-8, "gap_tol": 1e-8, "solver_max_iter": 200},
    "single": {"target_theta_deg": 90.0, "target_phi_deg": 90.0, "target_distance_m": 50.0,
               "user_theta_deg": 135.0, "user_phi_deg": 150.0, "user_distance_m": 30.0,
               "sinr_db": [5.0, 10.0, 20.0, 30.0], "sweep_theta_deg": [90.0, 135.0],
               "sweep_points": 361, "sca_init": "merged"},
    "coverage": {"sweep_theta_deg": 90.0, "sweep_points": 361},
    "cassini": {"nx": 41, "ny": 41, "levels_db": [], "num_levels": 5},
    "wavesim": {"n_samples": 4096, "trials": 100, "targets": [[0.0, 50.0, 10.0]]},
    "oracle": {"mx": 2, "mz": 1, "sinr_db": 20.0, "step_fraction": 0.01,
               "targets": [[90.0, 90.0, 50.0]], "user": [135.0, 150.0, 30.0]},
}

# values switched on by --full
FULL_SCALE = {
    ("array", "tx_mx"): 8, ("array", "tx_mz"): 8, ("array", "rx_mx"): 8, ("array", "rx_mz"): 8,
    ("region", "nx"): 50, ("region", "ny"): 50,
}


@dataclass
class ResolvedConfig:
    values: Dict[str, Any]
    sources: Dict[str, str] = field(default_factory=dict)  # dotted key -> default|config|flag
    path: Optional[str] = None

    def __getitem__(self, section):
        return self.values[section]

    def manifest_parameters(self) -> Dict[str, Dict[str, Any]]:
        out = {}
        for key in sorted(self.sources):
            section, _, name = key.partition(".")
            value = self.values[section] if not name else self.values[section][name]
            src = self.sources[key]
            out[key] = {"value": value, "source": src, "defaulted": src == "default"}
        return out

    # ---------------------------------------------------------- builders

    def scenario(self) -> Scenario:
        s, a, r = self["scenario"], self["array"], self["region"]
        users = tuple(UserPlacement.from_degrees(u["theta_deg"], u["phi_deg"], u["distance_m"], u["sinr_db"])
                      for u in self["users"])
        return Scenario(
            bs_height=float(s["bs_height_m"]),
            bs_distance=float(s["bs_distance_m"]),
            tx_array=ArrayGeometry(int(a["tx_mx"]), int(a["tx_mz"]), float(a["spacing_wavelengths"])),
            rx_array=ArrayGeometry(int(a["rx_mx"]), int(a["rx_mz"]), float(a["spacing_wavelengths"])),
            tx_power=float(dbm2watt(s["tx_power_dbm"])),
            noise_power=float(dbm2watt(s["noise_power_dbm"])),
            sensing_noise_power=float(dbm2watt(s["sensing_noise_power_dbm"])),
            bandwidth=float(s["bandwidth_hz"]),
            cpi=float(s["cpi_s"]),
            beta0=float(db2lin(s["beta0_db"])),
            alpha=complex(float(s["alpha_re"]), float(s["alpha_im"])),
            rician_factor=float(s["rician_factor"]),
            users=users,
            region=RectRegion((float(r["center_x_m"]), float(r["center_y_m"])), float(r["extent_x_m"]),
                              float(r["extent_y_m"]), float(r["height_m"])),
            grid_counts=(int(r["nx"]), int(r["ny"])),
            channel_seed=int(self["seeds"]["channel"]),
        )

    def sca_config(self) -> ScaConfig:
        c = self["sca"]
        return ScaConfig(epsilon=float(c["epsilon"]), max_outer_iterations=int(c["max_outer_iterations"]),
                         tol=Tolerances(float(c["feasibility_tol"]), float(c["gap_tol"])),
                         solver_max_iter=int(c["solver_max_iter"]), backend=str(c["backend"]))


def load_config(path) -> Dict[str, Any]:
    """Parse a TOML file; syntax errors become :class:`ConfigError`."""
    try:
        with open(path, "rb") as fh:
            return tomli.load(fh)
    except FileNotFoundError:
        raise ConfigError([f"config file not found: {path}"]) from None
    except tomli.TOMLDecodeError as exc:
        raise ConfigError([f"config file is not valid TOML: {exc}"]) from None


def _same_kind(default, value) -> bool:
    if isinstance(default, bool):
        return isinstance(value, bool)
    if isinstance(default, float):
        return isinstance(value, (int, float)) and not isinstance(value, bool)
    if isinstance(default, int):
        return isinstance(value, int) and not isinstance(value, bool)
    if isinstance(default, str):
        return isinstance(value, str)
    if isinstance(default, list):
        return isinstance(value, list)
    return True


def resolve(user: Optional[Dict[str, Any]] = None, *, full: bool = False, seed: Optional[int] = None,
            path: Optional[str] = None) -> ResolvedConfig:
    """Merge ``user`` over the defaults and validate everything.

    ``seed`` (the ``--seed`` flag) sets the channel seed to ``seed`` and the
    waveform and noise seeds to ``seed + 1`` and ``seed + 2``.
    """
    user = {} if user is None else user
    values = copy.deepcopy(DEFAULTS)
    sources: Dict[str, str] = {}
    errors: List[str] = []

    for section, default in DEFAULTS.items():
        if isinstance(default, dict):
            for name in default:
                sources[f"{section}.{name}"] = "default"
        else:
            sources[section] = "default"

    for section, given in user.items():
        if section not in DEFAULTS:
            errors.append(f"unknown section [{section}]")
            continue
        default = DEFAULTS[section]
        if isinstance(default, list):
            if not isinstance(given, list) or not all(isinstance(u, dict) for u in given):
                errors.append(f"{section} must be an array of tables")
                continue
            keys = set(default[0])
            for i, u in enumerate(given):
                missing = keys - set(u)
                extra = set(u) - keys
                if missing:
                    errors.append(f"{section}[{i}] missing {sorted(missing)}")
                if extra:
                    errors.append(f"{section}[{i}] has unknown keys {sorted(extra)}")
            values[section] = given
            sources[section] = "config"
            continue
        if not isinstance(given, dict):
            errors.append(f"[{section}] must be a table")
            continue
        for name, value in given.items():
            key = f"{section}.{name}"
            if name not in default:
                errors.append(f"unknown key {key}")
            elif not _same_kind(default[name], value):
                errors.append(f"{key} has the wrong type ({type(value).__name__})")
            else:
                values[section][name] = value
                sources[key] = "config"

    if full:
        for (section, name), value in FULL_SCALE.items():
            values[section][name] = value
            sources[f"{section}.{name}"] = "flag"
    if seed is not None:
        for offset, name in enumerate(("channel", "waveform", "noise")):
            values["seeds"][name] = int(seed) + offset
            sources[f"seeds.{name}"] = "flag"

    cfg = ResolvedConfig(values, sources, path)
    # rejected values were never stored, so range checks still see well-typed data
    errors.extend(e for e in _validate(cfg) if e not in errors)
    if errors:
        raise ConfigError(errors)
    return cfg


def _validate(cfg: ResolvedConfig) -> List[str]:
    errs = []
    try:
        sc = cfg.scenario()
    except ScenarioError as exc:
        errs.extend(f"scenario: {e}" for e in str(exc).split("; "))
        sc = None
    except (ValueError, TypeError, KeyError) as exc:
        errs.append(f"scenario: {exc}")
        sc = None
    c = cfg["sca"]
    if not c["epsilon"] > 0:
        errs.append("sca.epsilon must be > 0")
    if c["max_outer_iterations"] < 1:
        errs.append("sca.max_outer_iterations must be >= 1")
    if c["init"] not in INIT_STRATEGIES:
        errs.append(f"sca.init must be one of {list(INIT_STRATEGIES)}")
    if cfg["single"]["sca_init"] not in INIT_STRATEGIES:
        errs.append(f"single.sca_init must be one of {list(INIT_STRATEGIES)}")
    if c["backend"] not in BACKENDS:
        errs.append(f"sca.backend must be one of {sorted(BACKENDS)}")
    if cfg["single"]["sweep_points"] < 2 or cfg["coverage"]["sweep_points"] < 2:
        errs.append("sweep_points must be >= 2")
    w = cfg["wavesim"]
    if w["trials"] < 1:
        errs.append("wavesim.trials must be >= 1")
    if sc is not None and w["n_samples"] < sc.m_t:
        errs.append("wavesim.n_samples must be >= M_t")
    if any(len(t) != 3 for t in w["targets"]):
        errs.append("wavesim.targets must hold [x, y, z] triples")
    o = cfg["oracle"]
    if not 1 <= o["mx"] * o["mz"] <= 3:
        errs.append("oracle.mx * oracle.mz must be between 1 and 3")
    if not 0 < o["step_fraction"] <= 1:
        errs.append("oracle.step_fraction must be in (0, 1]")
    if not 1 <= len(o["targets"]) <= 3 or any(len(t) != 3 for t in o["targets"]):
        errs.append("oracle.targets must hold 1 to 3 [theta_deg, phi_deg, distance_m] triples")
    if len(o["user"]) != 3:
        errs.append("oracle.user must be [theta_deg, phi_deg, distance_m]")
    k = cfg["cassini"]
    if k["nx"] < 2 or k["ny"] < 2:
        errs.append("cassini.nx and cassini.ny must be >= 2")
    if not k["levels_db"] and k["num_levels"] < 1:
        errs.append("cassini.num_levels must be >= 1")
    return errs


def default_config_text() -> str:
    """The defaults rendered as a commented TOML document."""
    lines = ["# isac-coverage experiment configuration (all keys optional)", ""]
    for section, default in DEFAULTS.items():
        if isinstance(default, list):
            for item in default:
                lines.append(f"[[{section}]]")
                lines += [f"{k} = {_toml_value(v)}" for k, v in item.items()]
                lines.append("")
            continue
        lines.append(f"[{section}]")
        lines += [f"{k} = {_toml_value(v)}" for k, v in default.items()]
        lines.append("")
    return "\n".join(lines)


def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, str):
        return f'"{v}"'
    if isinstance(v, list):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    return repr(v)
