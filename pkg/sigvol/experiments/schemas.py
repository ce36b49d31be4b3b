"""
Configuration file schemas.

Every experiment command reads a JSON document. Validation failures are
reported with dotted field paths, e.g. ``model.rho: Must be ...``.
"""

import math
from collections.abc import Mapping
from fractions import Fraction
from typing import Any

import attrs
from marshmallow import (
    Schema,
    ValidationError,
    fields,
    post_load,
    validate,
    validates_schema,
)

from sigvol.algebra import TensorPoly, Word
from sigvol.diagnostics import CONTROLS, DEFAULT_LAMBDA_GRID
from sigvol.engine.coefficients import random_coefficients
from sigvol.engine.dataclasses import ModelParams, Mode, SimConfig
from sigvol.exceptions import ConfigError, SigvolError
from sigvol.experiments.dataclasses import (
    CriticalExperiment,
    Experiment,
    ExplodeExperiment,
    MomentsExperiment,
    SimulateExperiment,
    SmileExperiment,
    WingsExperiment,
)

POSITIVE = validate.Range(min=0, min_inclusive=False)


@attrs.frozen
class SimDefaults:
    """Simulation settings that come from the environment and flags."""

    workers: int = 1
    x_cap: float = 1e4
    kappa: float = 0.1
    chunk_size: int = 4096
    confidence: float = 0.95

    def fill(self, config: Mapping[str, Any]) -> dict[str, Any]:
        """Copy of ``config`` with these defaults written in."""
        filled = {"confidence": self.confidence, **config}
        if isinstance(config.get("sim"), Mapping):
            filled["sim"] = {
                "x_cap": self.x_cap,
                "kappa": self.kappa,
                "chunk_size": self.chunk_size,
                **config["sim"],
            }
        return filled


class Rational(fields.Field):
    """An exact rational: an integer, a float, or a ``"p/q"`` string."""

    def _deserialize(
        self,
        value: Any,
        attr: str | None,
        data: Mapping[str, Any] | None,
        **kwargs: Any,
    ) -> Fraction:
        if isinstance(value, bool):
            raise ValidationError("Not a valid rational number.")
        try:
            result = Fraction(value)
        except (TypeError, ValueError, ZeroDivisionError):
            raise ValidationError("Not a valid rational number.")
        return result


class RandomSigmaSchema(Schema):
    seed = fields.Integer(required=True, validate=validate.Range(min=0))
    leading = fields.Float(required=True)
    low = fields.Float(load_default=-0.5)
    high = fields.Float(load_default=0.5)

    @validates_schema
    def check_range(self, data: dict[str, Any], **kwargs: Any) -> None:
        if data["low"] > data["high"]:
            raise ValidationError("low must not exceed high", "low")


class SigmaSchema(Schema):
    terms = fields.Dict(keys=fields.String(), values=Rational())
    random = fields.Nested(RandomSigmaSchema)

    @validates_schema
    def check_one_source(self, data: dict[str, Any], **kwargs: Any) -> None:
        if ("terms" in data) == ("random" in data):
            raise ValidationError("give exactly one of terms and random")


class ModelSchema(Schema):
    mode = fields.String(
        load_default=Mode.ONE_FACTOR.value,
        validate=validate.OneOf([mode.value for mode in Mode]),
    )
    alphabet_dim = fields.Integer(validate=validate.Range(min=2))
    order = fields.Integer(required=True, validate=validate.Range(min=0))
    sigma = fields.Nested(SigmaSchema, required=True)
    rho = fields.Float(load_default=0.0, validate=validate.Range(min=-1, max=1))
    s0 = fields.Float(load_default=1.0, validate=POSITIVE)
    horizon = fields.Float(load_default=1.0, validate=POSITIVE)

    @post_load
    def make_model(self, data: dict[str, Any], **kwargs: Any) -> ModelParams:
        mode = Mode(data["mode"])
        if mode is Mode.ONE_FACTOR:
            alphabet_dim = data.get("alphabet_dim", 2)
            if alphabet_dim != 2:
                raise ValidationError(
                    "the one-factor model has 2 letters", "alphabet_dim"
                )
        elif "alphabet_dim" not in data:
            raise ValidationError("required for the multi-factor model", "alphabet_dim")
        else:
            alphabet_dim = data["alphabet_dim"]
        order = data["order"]
        sigma_data = data["sigma"]
        if "random" in sigma_data:
            spec = sigma_data["random"]
            sigma = random_coefficients(
                alphabet_dim,
                order,
                spec["leading"],
                spec["seed"],
                spec["low"],
                spec["high"],
            )
        else:
            try:
                terms = {
                    Word.parse(text, alphabet_dim): value
                    for text, value in sigma_data["terms"].items()
                }
            except SigvolError as e:
                raise ValidationError({"terms": [str(e)]}, "sigma")
            longest = max((len(word) for word, c in terms.items() if c), default=0)
            if longest != order:
                raise ValidationError(
                    f"longest word has length {longest}, but order is {order}", "sigma"
                )
            sigma = TensorPoly(alphabet_dim, terms, order)
        try:
            return ModelParams(
                alphabet_dim=alphabet_dim,
                order=order,
                sigma=sigma,
                rho=data["rho"],
                s0=data["s0"],
                horizon=data["horizon"],
                mode=mode,
            )
        except SigvolError as e:
            raise ValidationError(str(e))


class SimSchema(Schema):
    n_paths = fields.Integer(required=True, validate=validate.Range(min=1))
    n_steps = fields.Integer(required=True, validate=validate.Range(min=1))
    seed = fields.Integer(load_default=0, validate=validate.Range(min=0, max=2**64 - 1))
    x_cap = fields.Float(validate=POSITIVE)
    antithetic = fields.Boolean(load_default=False)
    kappa = fields.Float(validate=POSITIVE)
    chunk_size = fields.Integer(validate=validate.Range(min=1))
    scale_substeps = fields.Boolean(load_default=False)


class LogMoneynessSchema(Schema):
    lo = fields.Float(required=True)
    hi = fields.Float(required=True)
    count = fields.Integer(required=True, validate=validate.Range(min=1))


class ExperimentSchema(Schema):
    confidence = fields.Float(
        validate=validate.Range(min=0, max=1, min_inclusive=False, max_inclusive=False),
    )
    # Whether a classification result is computed from the model.
    needs_leading_coefficient = False

    def __init__(self, *, defaults: SimDefaults | None = None, **kwargs: Any) -> None:
        super().__init__(**kwargs)
        self.defaults = defaults or SimDefaults()

    def confidence_of(self, data: dict[str, Any]) -> float:
        return float(data.get("confidence", self.defaults.confidence))

    def make_sim(self, data: dict[str, Any]) -> SimConfig:
        return SimConfig(
            n_paths=data["n_paths"],
            n_steps=data["n_steps"],
            seed=data["seed"],
            x_cap=data.get("x_cap", self.defaults.x_cap),
            antithetic=data["antithetic"],
            workers=self.defaults.workers,
            kappa=data.get("kappa", self.defaults.kappa),
            chunk_size=data.get("chunk_size", self.defaults.chunk_size),
            scale_substeps=data["scale_substeps"],
        )

    def check_model(self, model: ModelParams) -> None:
        if self.needs_leading_coefficient and model.leading_coefficient == 0:
            raise ValidationError(
                {
                    "model": {
                        "sigma": [
                            "the leading coefficient must be non-zero "
                            "(theorem hypothesis)"
                        ]
                    }
                }
            )


class ModelExperimentSchema(ExperimentSchema):
    model = fields.Nested(ModelSchema, required=True)
    sim = fields.Nested(SimSchema, required=True)


class StrikesMixin(Schema):
    strikes = fields.List(fields.Float(validate=POSITIVE))
    log_moneyness = fields.Nested(LogMoneynessSchema)

    @validates_schema
    def check_strike_source(self, data: dict[str, Any], **kwargs: Any) -> None:
        if ("strikes" in data) == ("log_moneyness" in data):
            raise ValidationError("give exactly one of strikes and log_moneyness")
        if "strikes" in data and not data["strikes"]:
            raise ValidationError("at least one strike is needed", "strikes")

    @staticmethod
    def strikes_of(data: dict[str, Any], s0: float) -> tuple[float, ...]:
        if "strikes" in data:
            return tuple(data["strikes"])
        grid = data["log_moneyness"]
        count = grid["count"]
        if count == 1:
            return (s0 * math.exp(grid["lo"]),)
        step = (grid["hi"] - grid["lo"]) / (count - 1)
        return tuple(s0 * math.exp(grid["lo"] + i * step) for i in range(count))


class SimulateSchema(ModelExperimentSchema):
    dump_samples = fields.Boolean(load_default=False)

    @post_load
    def make_experiment(
        self, data: dict[str, Any], **kwargs: Any
    ) -> SimulateExperiment:
        return SimulateExperiment(
            data["model"],
            self.make_sim(data["sim"]),
            data["dump_samples"],
            self.confidence_of(data),
        )


class SmileSchema(ModelExperimentSchema, StrikesMixin):
    needs_leading_coefficient = True

    @post_load
    def make_experiment(self, data: dict[str, Any], **kwargs: Any) -> SmileExperiment:
        model = data["model"]
        self.check_model(model)
        return SmileExperiment(
            model,
            self.make_sim(data["sim"]),
            self.strikes_of(data, model.s0),
            self.confidence_of(data),
        )


class ExplodeSchema(ModelExperimentSchema):
    @post_load
    def make_experiment(self, data: dict[str, Any], **kwargs: Any) -> ExplodeExperiment:
        return ExplodeExperiment(
            data["model"], self.make_sim(data["sim"]), self.confidence_of(data)
        )


class MomentsSchema(ModelExperimentSchema):
    needs_leading_coefficient = True
    m = fields.Float(required=True, validate=POSITIVE)

    @post_load
    def make_experiment(self, data: dict[str, Any], **kwargs: Any) -> MomentsExperiment:
        model = data["model"]
        self.check_model(model)
        return MomentsExperiment(
            model, self.make_sim(data["sim"]), data["m"], self.confidence_of(data)
        )


class WingsSchema(ModelExperimentSchema, StrikesMixin):
    fit_range = fields.Tuple((fields.Float(), fields.Float()), load_default=(0.5, 1.5))

    @validates_schema
    def check_fit_range(self, data: dict[str, Any], **kwargs: Any) -> None:
        lo, hi = data.get("fit_range", (0.5, 1.5))
        if not lo < hi:
            raise ValidationError("the range must be increasing", "fit_range")

    @post_load
    def make_experiment(self, data: dict[str, Any], **kwargs: Any) -> WingsExperiment:
        model = data["model"]
        return WingsExperiment(
            model,
            self.make_sim(data["sim"]),
            self.strikes_of(data, model.s0),
            tuple(data["fit_range"]),
            self.confidence_of(data),
        )


class CriticalSchema(ExperimentSchema):
    alpha = fields.Float(required=True, validate=POSITIVE)
    beta = fields.Float(load_default=0.0)
    m = fields.Float(required=True, validate=validate.Range(min=1, min_inclusive=False))
    T = fields.Float(required=True, validate=POSITIVE)
    lambda_grid = fields.List(fields.Float(), load_default=list(DEFAULT_LAMBDA_GRID))
    psi = fields.String(load_default="sine", validate=validate.OneOf(sorted(CONTROLS)))
    rho = fields.Float(allow_none=True, load_default=None)
    mode = fields.String(
        load_default="analytic", validate=validate.OneOf(["analytic", "monte_carlo"])
    )
    sim = fields.Nested(SimSchema)

    @validates_schema
    def check_mode(self, data: dict[str, Any], **kwargs: Any) -> None:
        if data.get("mode") == "monte_carlo" and "sim" not in data:
            raise ValidationError("required in monte_carlo mode", "sim")
        if len(set(data.get("lambda_grid", DEFAULT_LAMBDA_GRID))) < 4:
            raise ValidationError(
                "at least 4 distinct values are needed", "lambda_grid"
            )

    @post_load
    def make_experiment(
        self, data: dict[str, Any], **kwargs: Any
    ) -> CriticalExperiment:
        sim = self.make_sim(data["sim"]) if data["mode"] == "monte_carlo" else None
        return CriticalExperiment(
            alpha=data["alpha"],
            beta=data["beta"],
            m=data["m"],
            T=data["T"],
            lambda_grid=tuple(data["lambda_grid"]),
            psi=data["psi"],
            rho=data["rho"],
            sim=sim,
            confidence=self.confidence_of(data),
        )


SCHEMAS: dict[str, type[ExperimentSchema]] = {
    "simulate": SimulateSchema,
    "smile": SmileSchema,
    "explode": ExplodeSchema,
    "moments": MomentsSchema,
    "critical": CriticalSchema,
    "wings": WingsSchema,
}


def flatten_errors(messages: Any, prefix: str = "") -> list[str]:
    """Turn marshmallow's nested error dict into ``path: message`` lines."""
    if isinstance(messages, Mapping):
        lines = []
        for key, value in messages.items():
            if key == "_schema":
                path = prefix
            else:
                path = f"{prefix}.{key}" if prefix else str(key)
            lines.extend(flatten_errors(value, path))
        return lines
    if isinstance(messages, list):
        return [
            line
            for message in messages
            for line in flatten_errors(message, prefix)
        ]
    return [f"{prefix}: {messages}" if prefix else str(messages)]


def load_experiment(
    command: str, data: Mapping[str, Any], defaults: SimDefaults | None = None
) -> Experiment:
    try:
        schema_class = SCHEMAS[command]
    except KeyError:
        raise ConfigError([f"no experiment named {command!r}"])
    try:
        experiment: Experiment = schema_class(defaults=defaults).load(data)
    except ValidationError as e:
        raise ConfigError(flatten_errors(e.messages))
    return experiment
