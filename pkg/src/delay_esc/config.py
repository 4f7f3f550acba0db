"""Scenario files: TOML documents describing one closed-loop experiment.

Layout::

    name = "fig7_predictor_delays"
    delays = [50.0, 100.0]

    [map]
    y_star = 5.0
    theta_star = [0.0, 1.0]
    hessian = [[-2.0, -2.0], [-2.0, -4.0]]

    [dither]
    a = [0.22, 0.22]
    omega = 5.0
    seed = 2026

    [controller]
    mode = "predictor"          # or "classic"
    c = 20.0
    K_diag = [0.005, 0.005]

    [sim]
    dt = 0.001
    t_final = 5000.0
    theta_hat0 = [1.0, 0.0]
    decimation = 100
    divergence_factor = 100.0
    window_fraction = 0.2

    [averaged]                  # optional, used by the averaged analyzer
    m = 200
    dt = 0.01
    t_final = 2000.0
    record_every = 1.0

    [output]                    # optional
    plots = ["theta", "y"]
"""

from dataclasses import dataclass, field, replace
from importlib import resources

import numpy as np
import tomli
import tomli_w

from ._validation import InvalidInputError
from .controller import ControllerConfig, SimSettings
from .delayline import check_delays
from .dither import DitherParams
from .quadmap import StaticQuadraticMap

PLOT_SIGNALS = ("theta", "theta_hat", "y", "U", "G_hat", "H_hat", "eta")

SECTION_KEYS = {
    "map": {"y_star", "theta_star", "hessian"},
    "dither": {"a", "omega", "seed"},
    "controller": {"mode", "c", "K_diag"},
    "sim": {"dt", "t_final", "theta_hat0", "decimation", "divergence_factor", "window_fraction"},
    "averaged": {"m", "dt", "t_final", "record_every"},
    "output": {"plots"},
}


class ConfigError(InvalidInputError):
    """Scenario validation failure; ``errors`` lists ``(field_path, message)``."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(f"{p}: {m}" for p, m in self.errors))


@dataclass(frozen=True)
class AveragedSettings:
    m: int = 200
    dt: float = 0.01
    t_final: float = 2000.0
    record_every: float = 1.0


@dataclass(frozen=True)
class ScenarioConfig:
    qmap: StaticQuadraticMap
    delays: np.ndarray
    dither: DitherParams
    seed: int
    controller: ControllerConfig
    sim: SimSettings
    averaged: AveragedSettings = field(default_factory=AveragedSettings)
    plots: tuple = ("theta", "y")
    name: str = ""
    description: str = ""

    @property
    def n(self):
        return self.qmap.n

    def with_seed(self, seed):
        return replace(self, seed=int(seed))

    def to_dict(self):
        d = {}
        if self.name:
            d["name"] = self.name
        if self.description:
            d["description"] = self.description
        d["delays"] = [float(v) for v in self.delays]
        d["map"] = {
            "y_star": self.qmap.y_star,
            "theta_star": self.qmap.theta_star.tolist(),
            "hessian": self.qmap.hessian.tolist(),
        }
        d["dither"] = {"a": self.dither.a.tolist(), "omega": self.dither.omega, "seed": int(self.seed)}
        d["controller"] = {
            "mode": self.controller.mode,
            "c": self.controller.c,
            "K_diag": self.controller.K.tolist(),
        }
        s = self.sim
        d["sim"] = {
            "dt": s.dt,
            "t_final": float(s.t_final),
            "theta_hat0": list(s.theta_hat0),
            "decimation": int(s.decimation),
            "divergence_factor": float(s.divergence_factor),
            "window_fraction": float(s.window_fraction),
        }
        a = self.averaged
        d["averaged"] = {"m": a.m, "dt": a.dt, "t_final": float(a.t_final), "record_every": float(a.record_every)}
        d["output"] = {"plots": list(self.plots)}
        return d


def _section(doc, key, errors, required=True):
    sec = doc.get(key)
    if sec is None:
        if required:
            errors.append((key, "missing section"))
        return {}
    if not isinstance(sec, dict):
        errors.append((key, "must be a table"))
        return {}
    for k in sec:
        if k not in SECTION_KEYS[key]:
            errors.append((f"{key}.{k}", "unknown key"))
    return sec


def _build(errors, path, factory, *args, **kwargs):
    try:
        return factory(*args, **kwargs)
    except (InvalidInputError, TypeError, ValueError) as exc:
        errors.append((path, str(exc)))
        return None


def _need(sec, prefix, keys, errors):
    ok = True
    for k in keys:
        if k not in sec:
            errors.append((f"{prefix}.{k}", "missing"))
            ok = False
    return ok


def from_dict(doc):
    """Validate a parsed scenario document; raise :class:`ConfigError` listing every problem."""
    errors = []
    known = {"name", "description", "delays", "map", "dither", "controller", "sim", "averaged", "output"}
    for k in doc:
        if k not in known:
            errors.append((k, "unknown key"))

    m = _section(doc, "map", errors)
    qmap = None
    if _need(m, "map", ("y_star", "theta_star", "hessian"), errors):
        qmap = _build(errors, "map", StaticQuadraticMap, m["y_star"], np.asarray(m["theta_star"], float), np.asarray(m["hessian"], float))

    dsec = _section(doc, "dither", errors)
    dparams, seed = None, None
    if _need(dsec, "dither", ("a", "omega", "seed"), errors):
        dparams = _build(errors, "dither.a", DitherParams, dsec["a"], dsec["omega"])
        seed = dsec["seed"]
        if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
            errors.append(("dither.seed", f"must be a nonnegative integer, got {seed!r}"))
            seed = None

    csec = _section(doc, "controller", errors)
    ctrl = None
    if _need(csec, "controller", ("mode", "K_diag"), errors):
        ctrl = _build(errors, "controller", ControllerConfig, csec["K_diag"], csec.get("c", 0.0), csec["mode"])

    ssec = _section(doc, "sim", errors)
    sim = None
    if _need(ssec, "sim", ("dt", "t_final", "theta_hat0"), errors):
        defaults = SimSettings()
        sim = _build(
            errors, "sim", SimSettings,
            dt=ssec["dt"], t_final=ssec["t_final"], theta_hat0=ssec["theta_hat0"],
            decimation=ssec.get("decimation", defaults.decimation),
            divergence_factor=ssec.get("divergence_factor", defaults.divergence_factor),
            window_fraction=ssec.get("window_fraction", defaults.window_fraction),
        )
        if sim is not None:
            try:
                sim.steps
            except InvalidInputError as exc:
                errors.append(("sim.t_final", str(exc)))

    delays = None
    if "delays" not in doc:
        errors.append(("delays", "missing"))
    elif sim is not None:
        try:
            check_delays(doc["delays"], sim.dt)
            delays = np.asarray(doc["delays"], dtype=float)
        except InvalidInputError as exc:
            errors.append(("delays", str(exc)))

    asec = _section(doc, "averaged", errors, required=False)
    averaged = AveragedSettings(**{k: asec[k] for k in asec if k in SECTION_KEYS["averaged"]})
    if not (isinstance(averaged.m, int) and averaged.m >= 1):
        errors.append(("averaged.m", f"must be an integer >= 1, got {averaged.m!r}"))
    elif delays is not None and np.any(delays > 0):
        limit = float(delays[delays > 0].min()) / averaged.m
        if averaged.dt > limit * (1 + 1e-12):
            errors.append(("averaged.dt", f"{averaged.dt} violates the upwind CFL limit min(D)/m = {limit}"))

    plots = tuple(_section(doc, "output", errors, required=False).get("plots", ("theta", "y")))
    for p in plots:
        if p not in PLOT_SIGNALS:
            errors.append(("output.plots", f"unknown signal {p!r}; choose from {PLOT_SIGNALS}"))

    if qmap is not None:
        n = qmap.n
        for path, obj, size in (
            ("dither.a", dparams, lambda o: o.n),
            ("controller.K_diag", ctrl, lambda o: o.K.shape[0]),
            ("sim.theta_hat0", sim, lambda o: len(o.theta_hat0)),
            ("delays", delays, lambda o: o.shape[0]),
        ):
            if obj is not None and size(obj) != n:
                errors.append((path, f"length {size(obj)} does not match map dimension {n}"))

    if errors:
        raise ConfigError(errors)
    return ScenarioConfig(
        qmap=qmap, delays=delays, dither=dparams, seed=int(seed), controller=ctrl, sim=sim,
        averaged=averaged, plots=plots, name=doc.get("name", ""), description=doc.get("description", ""),
    )


def loads(text):
    try:
        doc = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError([("<file>", f"not valid TOML: {exc}")]) from exc
    return from_dict(doc)


def dumps(config):
    return tomli_w.dumps(config.to_dict())


def preset_names():
    root = resources.files("delay_esc") / "presets"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".toml"))


def preset_text(name):
    path = resources.files("delay_esc") / "presets" / f"{name}.toml"
    if not path.is_file():
        raise ConfigError([("<preset>", f"unknown preset {name!r}; known: {preset_names()}")])
    return path.read_text()


def load_config(path_or_preset):
    """Load a scenario from a TOML file path, or by preset name."""
    from pathlib import Path

    p = Path(path_or_preset)
    if p.is_file():
        return loads(p.read_text())
    if p.suffix == "" and str(path_or_preset) in preset_names():
        return loads(preset_text(str(path_or_preset)))
    raise ConfigError([("<file>", f"no such file or preset: {path_or_preset}")])
