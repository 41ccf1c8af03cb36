"""JSON configuration: schema validation and translation into library objects."""

from __future__ import annotations

import copy
import json
from importlib import resources
from pathlib import Path

import jsonschema

from .acx_models import ARXModel, CovariateSpec, DecaySpec, InnovationSpec, TARXModel
from .bounds import BoundConstants, DependenceParams
from .erm import FitConfig, LossSpec
from .experiments import DESK_GRID, FULL_GRID, ExperimentConfig
from .predictors import LinearARPredictor, ParamBox

CONFIG_VERSION = 1
SECTIONS = ("model", "covariate", "innovation", "predictor", "loss", "dependence", "bound_constants", "experiment", "output")


class ConfigError(ValueError):
    """Raised for any configuration that fails validation."""


def load_schema() -> dict:
    return json.loads(resources.files("weakdep_erm").joinpath("config_schema.json").read_text())


def validate(doc: dict) -> dict:
    try:
        jsonschema.validate(doc, load_schema())
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config invalid at {where}: {exc.message}") from None
    return doc


def load_config(source=None) -> dict:
    """Read and validate a config file (or dict). ``None`` gives the default config."""
    if source is None:
        doc = {"version": CONFIG_VERSION}
    elif isinstance(source, dict):
        doc = copy.deepcopy(source)
    else:
        path = Path(source)
        try:
            doc = json.loads(path.read_text())
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: line {exc.lineno}: invalid JSON ({exc.msg})") from None
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    return validate(doc)


def section(doc: dict, name: str) -> dict:
    return doc.get(name, {})


def override(doc: dict, name: str, key: str, value) -> dict:
    """Set ``doc[name][key] = value`` unless value is None; re-validates."""
    if value is None:
        return doc
    doc = copy.deepcopy(doc)
    doc.setdefault(name, {})[key] = value
    return validate(doc)


# ---------------------------------------------------------------------------
# Builders
# ---------------------------------------------------------------------------


def _wrap(fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def build_innovation(spec: dict) -> InnovationSpec:
    return _wrap(InnovationSpec, **spec)


def build_covariate(doc: dict) -> CovariateSpec:
    c = dict(section(doc, "covariate"))
    if "innovation" in c:
        c["innovation"] = build_innovation(c["innovation"])
    return _wrap(CovariateSpec, **c)


def build_model(doc: dict):
    m = dict(section(doc, "model"))
    m.pop("burn_in", None)
    variant = m.pop("variant", "arx")
    if variant == "arx":
        if "a_pos" in m or "a_neg" in m:
            raise ConfigError("a_pos/a_neg belong to the tarx variant")
        return _wrap(ARXModel, **m)
    if "a" in m:
        raise ConfigError("'a' belongs to the arx variant")
    return _wrap(TARXModel, **m)


def burn_in(doc: dict) -> int:
    return section(doc, "model").get("burn_in", 1000)


def build_predictor(doc: dict) -> tuple[LinearARPredictor, ParamBox]:
    p = section(doc, "predictor")
    predictor = _wrap(LinearARPredictor, p.get("q", 1), p.get("dx", section(doc, "covariate").get("dim", 1)))
    if "box_lower" in p or "box_upper" in p:
        if "box_lower" not in p or "box_upper" not in p:
            raise ConfigError("box_lower and box_upper must be given together")
        box = _wrap(ParamBox, tuple(p["box_lower"]), tuple(p["box_upper"]))
    else:
        box = ParamBox.cube(predictor.dim, p.get("box_half_width", 10.0))
    if box.dim != predictor.dim:
        raise ConfigError(f"parameter box has dimension {box.dim}, predictor needs {predictor.dim}")
    return predictor, box


def build_fit_config(doc: dict, seed: int = 0) -> FitConfig:
    p = section(doc, "predictor")
    kwargs = {k: p[k] for k in ("tolerance", "max_iterations", "restarts", "ridge_fallback", "grid_points") if k in p}
    return _wrap(FitConfig, method=p.get("fit_method"), seed=seed, **kwargs)


def loss_kinds(doc: dict) -> tuple[str, ...]:
    loss = section(doc, "loss")
    if "kinds" in loss:
        return tuple(loss["kinds"])
    if "kind" in loss:
        return (loss["kind"],)
    return ("absolute", "squared")


def build_loss(doc: dict, kind: str | None = None) -> LossSpec:
    loss = section(doc, "loss")
    kind = kind or loss.get("kind") or loss_kinds(doc)[0]
    return _wrap(LossSpec, kind, loss.get("output_bound"))


def build_decay(spec: dict | None) -> DecaySpec | None:
    if spec is None:
        return None
    spec = dict(spec)
    if "values" in spec:
        spec["values"] = tuple(spec["values"])
    return _wrap(DecaySpec, **spec)


def build_dependence(doc: dict) -> DependenceParams:
    d = dict(section(doc, "dependence"))
    d.pop("k_max", None)
    d["decay"] = build_decay(d.get("decay"))
    return _wrap(DependenceParams, **d)


def moment_decay(doc: dict) -> DecaySpec:
    """Decay used by the moment check; geometric with ratio 1/2 if none is configured."""
    return build_decay(section(doc, "dependence").get("decay")) or DecaySpec("geometric", a=0.5)


def build_bound_constants(doc: dict) -> BoundConstants:
    """M and L come from ``bound_constants`` or, failing that, from the loss and its output bound."""
    bc = section(doc, "bound_constants")
    predictor, _ = build_predictor(doc)
    M, L = bc.get("M"), bc.get("L")
    if M is None or L is None:
        loss = build_loss(doc)
        if loss.output_bound is None:
            raise ConfigError("bound needs bound_constants.M and .L, or loss.output_bound")
        M = loss.sup if M is None else M
        L = loss.lipschitz if L is None else L
    d = bc.get("d", float(predictor.memory * (1 + predictor.dx)))
    return _wrap(BoundConstants, M=M, L=L, dep=build_dependence(doc), C0=bc.get("C0", 1.0), d=d, s=bc.get("s", d))


def build_experiment_config(doc: dict, scale: str | None = None, workers: int | None = None, seed: int | None = None) -> ExperimentConfig:
    e = section(doc, "experiment")
    predictor, box = build_predictor(doc)
    # an explicit grid or replication count implies a custom scale unless a preset is forced
    default_scale = "custom" if ("n_grid" in e or "replications" in e) else "desk"
    scale = scale or e.get("scale", default_scale)
    if scale == "full":
        grid, reps = FULL_GRID, 500
    elif scale == "desk":
        grid, reps = DESK_GRID, 100
    else:
        grid, reps = tuple(e.get("n_grid", DESK_GRID)), e.get("replications", 100)
    base_seed = seed if seed is not None else e.get("base_seed", 0)
    bc = section(doc, "bound_constants")
    return _wrap(
        ExperimentConfig,
        model=build_model(doc),
        covariate=build_covariate(doc),
        innovation=build_innovation(section(doc, "innovation")),
        predictor=predictor,
        box=box,
        losses=loss_kinds(doc),
        reference_size=e.get("reference_size", 10_000),
        n_grid=grid,
        replications=reps,
        base_seed=base_seed,
        burn_in=burn_in(doc),
        eval_size=e.get("eval_size"),
        workers=workers if workers is not None else e.get("workers", 1),
        fit=build_fit_config(doc),
        dependence=build_dependence(doc),
        C0=bc.get("C0", 1.0),
        smoothness=bc.get("s"),
        eta=bc.get("eta", 0.05),
    )
