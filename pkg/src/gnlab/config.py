"""Experiment configuration: strict INI parsing with fail-fast key checking.

Every section owns a fixed key set; unknown sections or keys abort with the
offending name, so typos never silently fall back to defaults.  Values
given on the command line win over the file.
"""

from __future__ import annotations

import configparser
import hashlib
from dataclasses import dataclass, field
from pathlib import Path

from .model import ModelSpec
from .fits import EnergyModel
from .overlaps import Engine, PadKind
from .stateprep import OracleMode


class ConfigError(ValueError):
    """Invalid or unknown configuration content."""


_KNOWN_KEYS = {
    "model": {"n_sites", "spacing", "bare_mass", "coupling_sq", "wilson_r", "flavors", "boundary"},
    "solver": {"engine", "epsilon_goal", "max_bond", "dense_cap", "seed", "max_sweeps"},
    "analysis": {
        "fit_window_min", "fit_window_max", "pad_kind", "sizes_min", "sizes_max",
        "points", "m0_values", "g0_sq_values", "energy_model", "gap",
    },
    "prep": {"n0", "n_final", "eps", "oracle", "eta_floor", "repetitions", "ancilla_bits", "window_cells"},
    "output": {"directory", "formats"},
}

DEFAULT_CORRELATE_M0 = (0.2, 0.4)
DEFAULT_CORRELATE_G0_SQ = (0.0, 0.5, 1.0, 1.5, 2.0)


@dataclass(frozen=True)
class SolverConfig:
    engine: Engine = Engine.DMRG
    epsilon_goal: float = 1e-8
    max_bond: int = 64
    dense_cap: int = 14
    seed: int = 3
    max_sweeps: int = 40


@dataclass(frozen=True)
class AnalysisConfig:
    fit_window: tuple[float, float] | None = None
    pad_kind: PadKind = PadKind.UNIFORM
    sizes: tuple[int, int] = (2, 10)
    points: tuple[tuple[float, float], ...] | None = None
    energy_model: EnergyModel = EnergyModel.LINEAR
    gap: float | None = None

    def parameter_points(self) -> tuple[tuple[float, float], ...]:
        if self.points is not None:
            return self.points
        return tuple((m, g) for m in DEFAULT_CORRELATE_M0 for g in DEFAULT_CORRELATE_G0_SQ)


@dataclass(frozen=True)
class PrepConfig:
    n0: int = 2
    n_final: int = 4
    eps: float = 1e-3
    oracle: OracleMode = OracleMode.IDEAL
    eta_floor: float = 0.4
    repetitions: int = 3
    ancilla_bits: int | None = None
    window_cells: int = 32


@dataclass(frozen=True)
class ExperimentConfig:
    model: ModelSpec | None
    solver: SolverConfig = field(default_factory=SolverConfig)
    analysis: AnalysisConfig = field(default_factory=AnalysisConfig)
    prep: PrepConfig = field(default_factory=PrepConfig)
    out_dir: Path = Path("out")
    formats: tuple[str, ...] = ("csv",)
    config_hash: str = "none"

    def manifest_line(self) -> str:
        from . import __version__

        return f"# manifest config_sha={self.config_hash} seed={self.solver.seed} version={__version__}"


def _parse_points(text: str) -> tuple[tuple[float, float], ...]:
    points = []
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        try:
            m0, g0 = chunk.split(":")
            points.append((float(m0), float(g0)))
        except ValueError as exc:
            raise ConfigError(f"bad parameter point {chunk!r}, expected m0:g0_sq") from exc
    if not points:
        raise ConfigError("points list is empty")
    return tuple(points)


def _check_keys(parser: configparser.ConfigParser) -> None:
    for section in parser.sections():
        if section not in _KNOWN_KEYS:
            raise ConfigError(f"unknown config section [{section}]")
        unknown = set(parser[section].keys()) - _KNOWN_KEYS[section]
        if unknown:
            raise ConfigError(
                f"unknown key(s) in [{section}]: {', '.join(sorted(unknown))}"
            )


def load_config(path: str | Path, overrides: dict[str, object] | None = None) -> ExperimentConfig:
    """Parse the INI file at `path`, applying `overrides` (flag-wins).

    Recognized override keys: out, seed, engine, sizes (tuple).
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    raw = path.read_text()
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(raw)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    _check_keys(parser)
    overrides = overrides or {}

    def _get(section: str, key: str, cast, default):
        if section in parser and key in parser[section]:
            try:
                return cast(parser[section][key])
            except (ValueError, KeyError) as exc:
                raise ConfigError(f"bad value for [{section}] {key}: {exc}") from exc
        return default

    model = None
    if "model" in parser:
        try:
            model = ModelSpec.from_config_section(parser["model"])
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    try:
        solver = SolverConfig(
            engine=Engine(overrides.get("engine") or _get("solver", "engine", str, "dmrg")),
            epsilon_goal=_get("solver", "epsilon_goal", float, 1e-8),
            max_bond=_get("solver", "max_bond", int, 64),
            dense_cap=_get("solver", "dense_cap", int, 14),
            seed=int(overrides.get("seed") if overrides.get("seed") is not None
                     else _get("solver", "seed", int, 3)),
            max_sweeps=_get("solver", "max_sweeps", int, 40),
        )
        window_min = _get("analysis", "fit_window_min", float, None)
        window_max = _get("analysis", "fit_window_max", float, None)
        if (window_min is None) != (window_max is None):
            raise ConfigError("fit_window_min and fit_window_max must be set together")
        sizes = overrides.get("sizes") or (
            _get("analysis", "sizes_min", int, 2),
            _get("analysis", "sizes_max", int, 10),
        )
        points_text = _get("analysis", "points", str, None)
        analysis = AnalysisConfig(
            fit_window=None if window_min is None else (window_min, window_max),
            pad_kind=PadKind(_get("analysis", "pad_kind", str, "uniform")),
            sizes=(int(sizes[0]), int(sizes[1])),
            points=None if points_text is None else _parse_points(points_text),
            energy_model=EnergyModel(_get("analysis", "energy_model", str, "linear")),
            gap=_get("analysis", "gap", float, None),
        )
        if analysis.points is None and ("analysis" in parser and (
                "m0_values" in parser["analysis"] or "g0_sq_values" in parser["analysis"])):
            m0s = [float(x) for x in _get("analysis", "m0_values", str, "0.2,0.4").split(",")]
            g0s = [float(x) for x in _get("analysis", "g0_sq_values", str, "0.0,0.5,1.0,1.5,2.0").split(",")]
            analysis = AnalysisConfig(
                fit_window=analysis.fit_window,
                pad_kind=analysis.pad_kind,
                sizes=analysis.sizes,
                points=tuple((m, g) for m in m0s for g in g0s),
                energy_model=analysis.energy_model,
                gap=analysis.gap,
            )
        prep = PrepConfig(
            n0=_get("prep", "n0", int, 2),
            n_final=_get("prep", "n_final", int, 4),
            eps=_get("prep", "eps", float, 1e-3),
            oracle=OracleMode(_get("prep", "oracle", str, "ideal")),
            eta_floor=_get("prep", "eta_floor", float, 0.4),
            repetitions=_get("prep", "repetitions", int, 3),
            ancilla_bits=_get("prep", "ancilla_bits", int, None),
            window_cells=_get("prep", "window_cells", int, 32),
        )
    except (ValueError, KeyError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc

    out_dir = Path(overrides.get("out") or _get("output", "directory", str, "out"))
    formats = tuple(
        f.strip() for f in _get("output", "formats", str, "csv").split(",") if f.strip()
    )
    # hash the semantic inputs only: the file plus overrides that change
    # results (the output location does not)
    hashed_overrides = {k: v for k, v in overrides.items() if k != "out"}
    digest = hashlib.sha256(
        raw.encode() + repr(sorted((k, str(v)) for k, v in hashed_overrides.items())).encode()
    ).hexdigest()[:12]
    return ExperimentConfig(
        model=model,
        solver=solver,
        analysis=analysis,
        prep=prep,
        out_dir=out_dir,
        formats=formats,
        config_hash=digest,
    )
