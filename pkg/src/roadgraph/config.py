"""Sectioned key-value configuration with strict validation.

Every key has a default; a file only needs to list the values it changes.
Unknown sections or keys, unparsable values and values that break a
parameter's invariants raise :class:`ConfigError`.
"""

from __future__ import annotations

import configparser
import io
import math
import os
from dataclasses import dataclass, field

from .action_nodes import ActionParams
from .evaluation import MATCHINGS
from .heading_grid import GridParams
from .intersections import CandidateParams, ValidationParams
from .roads import RoadParams
from .trips import PreprocessParams


class ConfigError(ValueError):
    pass


def _floats(text: str) -> tuple:
    return tuple(float(v) for v in text.replace(";", ",").split(",") if v.strip())


def _bool(text: str) -> bool:
    v = text.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


# section -> key -> (parser, default text)
SCHEMA: dict[str, dict[str, tuple]] = {
    "preprocess": {
        "d_endpoints": (float, "100"),
        "d_spline": (int, "1"),
        "interp_spacing": (float, "5"),
        "n_min": (int, "10"),
        "t_gap": (float, "300"),
        "d_gap": (float, "2000"),
        "phi_gap_deg": (float, "0"),
    },
    "grid": {
        "n_res": (float, "5"),
        "heading_fold": (str, "axial"),
        "min_cell_count": (int, "5"),
    },
    "candidates": {
        "d_nbr": (float, "20"),
        "delta_phi_thr": (float, "1.4"),
        "delta_phi_thr_unit": (str, "rad"),
        "d_int_clust": (float, "15"),
    },
    "validation": {
        "radii": (_floats, "30, 100"),
        "annulus_width": (_floats, "25"),
        "n_max_val": (int, "1000"),
        "eps_passing": (float, "12"),
        "n_min_passing": (int, "5"),
        "d_passing": (float, "15"),
        "d_ext_clust": (float, "20"),
        "n_ext_clust": (int, "5"),
    },
    "action": {
        "d_load_dump": (float, "100"),
        "trim_fraction": (float, "0.1"),
        "dropoff_eps": (float, "15"),
        "dropoff_min_samples": (int, "5"),
    },
    "roads": {
        "d_node": (float, "30"),
        "eps_road": (float, "15"),
        "n_min_road": (int, "5"),
        "trim_margin": (float, "0"),
        "representative": (str, "median"),
        "prune_dead_ends": (_bool, "true"),
    },
    "run": {
        "seed": (int, "0"),
        "workers": (int, "0"),
        "input": (str, ""),
        "output": (str, ""),
    },
    "eval": {
        "tolerances": (_floats, "10, 20, 30, 40, 50"),
        "matching": (str, "greedy"),
    },
}


@dataclass
class Config:
    preprocess: PreprocessParams = field(default_factory=PreprocessParams)
    grid: GridParams = field(default_factory=GridParams)
    candidates: CandidateParams = field(default_factory=CandidateParams)
    validation: ValidationParams = field(default_factory=ValidationParams)
    action: ActionParams = field(default_factory=ActionParams)
    roads: RoadParams = field(default_factory=RoadParams)
    seed: int = 0
    workers: int = 0
    input: str = ""
    output: str = ""
    tolerances: tuple = (10.0, 20.0, 30.0, 40.0, 50.0)
    matching: str = "greedy"

    @property
    def effective_workers(self) -> int:
        return self.workers if self.workers > 0 else (os.cpu_count() or 1)

    def to_text(self) -> str:
        """Render as a config file that loads back to an equal ``Config``."""
        p, g, c, v, a, r = (self.preprocess, self.grid, self.candidates, self.validation,
                            self.action, self.roads)
        values = {
            "preprocess": {
                "d_endpoints": p.d_endpoints, "d_spline": p.d_spline,
                "interp_spacing": p.interp_spacing, "n_min": p.n_min, "t_gap": p.t_gap,
                "d_gap": p.d_gap, "phi_gap_deg": math.degrees(p.phi_gap),
            },
            "grid": {"n_res": g.n_res, "heading_fold": g.heading_fold,
                     "min_cell_count": g.min_cell_count},
            "candidates": {
                "d_nbr": c.d_nbr, "delta_phi_thr": c.delta_phi_thr,
                "delta_phi_thr_unit": c.delta_phi_thr_unit, "d_int_clust": c.d_int_clust,
            },
            "validation": {
                "radii": ", ".join(f"{R:g}" for R, _ in v.radii),
                "annulus_width": ", ".join(f"{L:g}" for _, L in v.radii),
                "n_max_val": v.n_max_val, "eps_passing": v.eps_passing,
                "n_min_passing": v.n_min_passing, "d_passing": v.d_passing,
                "d_ext_clust": v.d_ext_clust, "n_ext_clust": v.n_ext_clust,
            },
            "action": {
                "d_load_dump": a.d_load_dump, "trim_fraction": a.trim_fraction,
                "dropoff_eps": a.dropoff_eps, "dropoff_min_samples": a.dropoff_min_samples,
            },
            "roads": {
                "d_node": r.d_node, "eps_road": r.eps_road, "n_min_road": r.n_min_road,
                "trim_margin": r.trim_margin, "representative": r.representative,
                "prune_dead_ends": str(r.prune_dead_ends).lower(),
            },
            "run": {"seed": self.seed, "workers": self.workers, "input": self.input,
                    "output": self.output},
            "eval": {"tolerances": ", ".join(f"{t:g}" for t in self.tolerances),
                     "matching": self.matching},
        }
        out = io.StringIO()
        for section, keys in values.items():
            out.write(f"[{section}]\n")
            for key, val in keys.items():
                out.write(f"{key} = {val:g}\n" if isinstance(val, float) else f"{key} = {val}\n")
            out.write("\n")
        return out.getvalue()


def _parse(parser: configparser.ConfigParser) -> Config:
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        unknown = set(parser[section]) - set(SCHEMA[section])
        if unknown:
            raise ConfigError(f"unknown key(s) in [{section}]: {', '.join(sorted(unknown))}")

    raw = {}
    for section, keys in SCHEMA.items():
        raw[section] = {}
        for key, (conv, default) in keys.items():
            text = parser.get(section, key, fallback=default) if parser.has_section(section) else default
            try:
                raw[section][key] = conv(text.strip()) if conv is not str else text.strip()
            except ValueError as exc:
                raise ConfigError(f"[{section}] {key}: {exc}") from None

    pre, val = raw["preprocess"], raw["validation"]
    radii, widths = val.pop("radii"), val.pop("annulus_width")
    if len(widths) == 1:
        widths = widths * len(radii)
    if len(widths) != len(radii):
        raise ConfigError("[validation] annulus_width needs one value or one per radius")
    try:
        pre["phi_gap"] = math.radians(pre.pop("phi_gap_deg"))
        preprocess = PreprocessParams(**pre)
        roads = RoadParams(**raw["roads"], interp_spacing=preprocess.interp_spacing,
                           seed=raw["run"]["seed"])
        cfg = Config(
            preprocess=preprocess,
            grid=GridParams(**raw["grid"]),
            candidates=CandidateParams(**raw["candidates"]),
            validation=ValidationParams(radii=tuple(zip(radii, widths)), **val),
            action=ActionParams(**raw["action"]),
            roads=roads,
            **raw["run"],
            **raw["eval"],
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    if cfg.workers < 0:
        raise ConfigError("[run] workers must be >= 0 (0 means all cores)")
    if cfg.matching not in MATCHINGS:
        raise ConfigError(f"[eval] matching must be one of {MATCHINGS}")
    tol = cfg.tolerances
    if not tol or any(t < 0 for t in tol) or any(b <= a for a, b in zip(tol, tol[1:])):
        raise ConfigError("[eval] tolerances must be non-negative and strictly increasing")
    return cfg


def loads(text: str) -> Config:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    return _parse(parser)


def load(path=None) -> Config:
    """Read a config file; ``None`` gives the defaults."""
    if path is None:
        return loads("")
    try:
        with open(path, encoding="utf-8") as fh:
            return loads(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None


def defaults() -> Config:
    return loads("")


# --------------------------------------------------------------------------
# synthetic scenario files (``rgg synth``)

SCENARIO_SCHEMA: dict[str, dict[str, tuple]] = {
    "site": {
        "n_intersections": (int, "6"),
        "n_load": (int, "3"),
        "n_dump": (int, "2"),
        "area": (_floats, "1400, 1400"),
        "min_spacing": (float, "220"),
        "spur_length": (_floats, "170, 260"),
        "min_angle_deg": (float, "60"),
        "clearance": (float, "70"),
        "max_degree": (int, "4"),
        "origin": (_floats, "59.9, 10.4"),
    },
    "traffic": {
        "seed": (int, "0"),
        "n_trips": (int, "300"),
        "speed_median_kmh": (float, "8.33"),
        "speed_mean_kmh": (float, "9.36"),
        "speed_cap_kmh": (float, "25.93"),
        "cadence_median_s": (float, "2"),
        "via_prob": (float, "0.5"),
    },
    "noise": {
        "jitter_sigma": (float, "1"),
        "dropout_prob": (float, "0"),
        "endpoint_noise": (float, "0"),
        "invalid_fix_prob": (float, "0"),
        # "x y radius prob" groups separated by ';'
        "tunnels": (str, ""),
    },
}


def _tunnels(text: str):
    from .synth import Tunnel

    out = []
    for chunk in text.split(";"):
        if not chunk.strip():
            continue
        parts = [float(v) for v in chunk.replace(",", " ").split()]
        if len(parts) not in (3, 4):
            raise ValueError(f"tunnel needs 'x y radius [prob]', got {chunk.strip()!r}")
        out.append(Tunnel(*parts))
    return tuple(out)


def load_scenario(path=None, seed: int | None = None, n_trips: int | None = None):
    """Read a scenario file into ``(site, scenario)`` built by :mod:`roadgraph.synth`."""
    from .geo import GeoCoord
    from .synth import NoiseModel, SiteScenario, generate_site

    parser = configparser.ConfigParser(interpolation=None)
    try:
        if path is not None:
            with open(path, encoding="utf-8") as fh:
                parser.read_string(fh.read())
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read scenario {path}: {exc}") from None
    for section in parser.sections():
        if section not in SCENARIO_SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        unknown = set(parser[section]) - set(SCENARIO_SCHEMA[section])
        if unknown:
            raise ConfigError(f"unknown key(s) in [{section}]: {', '.join(sorted(unknown))}")
    raw = {}
    for section, keys in SCENARIO_SCHEMA.items():
        raw[section] = {}
        for key, (conv, default) in keys.items():
            text = parser.get(section, key, fallback=default) if parser.has_section(section) else default
            try:
                raw[section][key] = conv(text.strip()) if conv is not str else text.strip()
            except ValueError as exc:
                raise ConfigError(f"[{section}] {key}: {exc}") from None
    site_kw, traffic, noise = raw["site"], raw["traffic"], raw["noise"]
    if seed is not None:
        traffic["seed"] = seed
    if n_trips is not None:
        traffic["n_trips"] = n_trips
    try:
        if len(site_kw["area"]) != 2 or len(site_kw["spur_length"]) != 2 or len(site_kw["origin"]) != 2:
            raise ValueError("area, spur_length and origin take two values each")
        noise["tunnels"] = _tunnels(noise["tunnels"])
        origin = GeoCoord(*site_kw.pop("origin"))
        site = generate_site(traffic["seed"], origin=origin, **site_kw)
        scenario = SiteScenario(site, noise=NoiseModel(**noise), **traffic)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return site, scenario
