"""Experiment configuration: JSON schema validation and typed access."""

from dataclasses import dataclass, field
from importlib import resources
import json

import jsonschema

from ..grid import Grid
from ..multipliers import MultiplierFamily, make_family
from ..testfuns import EnsembleSpec

EXPERIMENTS = ("validate-family", "bmo-equivalence", "tl-comparability", "kernel-decay",
               "lemma-checks", "reconstruction")

DEFAULT_TOLERANCES = {
    "drift": 2.0,
    "variation": 1.5,
    "reconstruction": 1e-10,
    "partition": 1e-12,
    "orthogonality": 1e-10,
}


class ConfigError(ValueError):
    pass


def load_schema() -> dict:
    text = resources.files("lpbmo.harness").joinpath("config.schema.json").read_text()
    return json.loads(text)


@dataclass
class FamilySpec:
    kind: str
    r: int = 3
    seed: int = 0
    n_min: int | None = None
    n_max: int | None = None
    variant: str = "L2"

    def build(self, grid: Grid) -> MultiplierFamily:
        try:
            return make_family(self.kind, grid, r=self.r, seed=self.seed,
                               n_min=self.n_min, n_max=self.n_max)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def label(self) -> str:
        if self.kind == "vp-trapezoid":
            return self.kind
        if self.kind == "hetero-transition":
            return f"{self.kind}(r={self.r},seed={self.seed})"
        return f"{self.kind}({self.r})"


@dataclass
class ExperimentConfig:
    grid: Grid
    families: list = field(default_factory=list)
    ensembles: list = field(default_factory=list)
    shifted: bool = True
    offset: int = 0
    p: list = field(default_factory=lambda: [2.0])
    resolutions: list | None = None
    scales: tuple | None = None
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    h_exponent: int = 10
    output: str | None = None
    seed: int = 0
    experiment: str | None = None
    raw: dict = field(default_factory=dict)

    def echo(self) -> dict:
        """The config as it will be run (overrides applied), for the report."""
        out = dict(self.raw)
        out["seed"] = self.seed
        return out


def parse_config(raw: dict, seed: int | None = None) -> ExperimentConfig:
    """Validate ``raw`` against the schema and build an ExperimentConfig.

    ``seed`` overrides the config seed; families and ensembles without an
    explicit seed derive theirs from it.
    """
    try:
        jsonschema.validate(raw, load_schema())
    except jsonschema.ValidationError as exc:
        loc = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{loc}: {exc.message}") from None
    raw = dict(raw)
    if seed is not None:
        raw["seed"] = int(seed)
    base_seed = raw.get("seed", 0)
    try:
        grid = Grid(**raw["grid"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    families = []
    for f in raw.get("families", []):
        f = dict(f)
        f.setdefault("seed", base_seed)
        families.append(FamilySpec(**f))
    ensembles = []
    for i, e in enumerate(raw.get("ensembles", [])):
        ensembles.append(EnsembleSpec(kind=e["kind"], count=e.get("count", 1),
                                      seed=e.get("seed", base_seed + i), params=dict(e.get("params", {}))))
    tolerances = dict(DEFAULT_TOLERANCES)
    tolerances.update(raw.get("tolerances", {}))
    cubes = raw.get("cubes", {})
    scales = tuple(raw["scales"]) if "scales" in raw else None
    if scales is not None and scales[0] > scales[1]:
        raise ConfigError("scales: lower bound exceeds upper bound")
    return ExperimentConfig(
        grid=grid,
        families=families,
        ensembles=ensembles,
        shifted=cubes.get("shifted", True),
        offset=cubes.get("offset", 0),
        p=[float(v) for v in raw.get("p", [2.0])],
        resolutions=raw.get("resolutions"),
        scales=scales,
        tolerances=tolerances,
        h_exponent=raw.get("h_exponent", 10),
        output=raw.get("output"),
        seed=base_seed,
        experiment=raw.get("experiment"),
        raw=raw,
    )


def load_config(path, seed: int | None = None) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    return parse_config(raw, seed=seed)
