"""Experiment configuration: INI-style files, flag overrides, validation.

The file format has one section per module; every key has a pinned default
and unknown sections or keys are rejected with the offending name. Example:

    [env]
    terrain = flat
    workspace = 5.0x2.0

    [tasks]
    task_set = two-task
    scheduler = center
    horizon = 500
    reward_scale = 15.0

    [sac]
    hidden = 256 256
    batch_size = 256
    safety_mode = lagrangian

    [harness]
    seeds = 0 1 2 3 4
    steps_per_task = 15000
"""

import configparser
from dataclasses import dataclass, field, fields, replace

from ..sac import SacConfig
from ..tasks import SessionConfig


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending key."""


def _parse_bool(text):
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_int_tuple(text):
    return tuple(int(tok) for tok in text.replace(",", " ").split())


@dataclass
class ExperimentConfig:
    """Everything a training run or ablation needs, flat and validated."""

    terrain: str = "flat"
    workspace: str = "5.0x2.0"
    task_set: str = "two-task"
    scheduler: str = "center"
    horizon: int = 500
    reward_scale: float = 15.0
    safety_mode: str = "lagrangian"
    safety_weight: float = 0.0
    seeds: tuple = (0, 1, 2, 3, 4)
    steps_per_task: int = 15000
    hidden: tuple = (256, 256)
    batch_size: int = 256
    discount: float = 0.99
    polyak_tau: float = 0.005
    learning_rate: float = 3e-4
    lambda_lr: float = 0.001
    lambda_init: float = 1.0
    alpha_init: float = 0.1
    alpha_lr: float = 3e-3
    target_entropy: float = -4.0
    warmup: int = 1000
    gradient_rounds: int = 2
    buffer_capacity: int = 100_000
    dual_from_safety_critic: bool = False

    def sac_config(self):
        return SacConfig(
            hidden=tuple(self.hidden),
            batch_size=self.batch_size,
            discount=self.discount,
            polyak_tau=self.polyak_tau,
            learning_rate=self.learning_rate,
            lambda_lr=self.lambda_lr,
            lambda_init=self.lambda_init,
            alpha_init=self.alpha_init,
            alpha_lr=self.alpha_lr,
            target_entropy=self.target_entropy,
            warmup=self.warmup,
            gradient_rounds=self.gradient_rounds,
            buffer_capacity=self.buffer_capacity,
            dual_from_safety_critic=self.dual_from_safety_critic,
        )

    def session_config(self, seed):
        return SessionConfig(
            terrain=self.terrain,
            workspace=self.workspace,
            task_set=self.task_set,
            scheduler=self.scheduler,
            safety_mode=self.safety_mode,
            safety_weight=self.safety_weight,
            seed=seed,
            steps_per_task=self.steps_per_task,
            horizon=self.horizon,
            reward_scale=self.reward_scale,
            sac=self.sac_config(),
        ).validate()

    def validate(self):
        try:
            self.session_config(0)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if not self.seeds:
            raise ConfigError("seeds: need at least one seed")
        if self.batch_size <= 0 or self.warmup < 0:
            raise ConfigError("batch_size must be positive and warmup non-negative")
        return self

    def echo(self):
        """Flat dict snapshot stored inside checkpoints."""
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            out[f.name] = list(v) if isinstance(v, tuple) else v
        return out

    @classmethod
    def from_echo(cls, echo):
        kw = {}
        for f in fields(cls):
            if f.name in echo:
                v = echo[f.name]
                kw[f.name] = tuple(v) if isinstance(v, list) else v
        return cls(**kw)


# (section, key) -> (field name, parser)
_SCHEMA = {
    ("env", "terrain"): ("terrain", str),
    ("env", "workspace"): ("workspace", str),
    ("tasks", "task_set"): ("task_set", str),
    ("tasks", "scheduler"): ("scheduler", str),
    ("tasks", "horizon"): ("horizon", int),
    ("tasks", "reward_scale"): ("reward_scale", float),
    ("sac", "hidden"): ("hidden", _parse_int_tuple),
    ("sac", "batch_size"): ("batch_size", int),
    ("sac", "discount"): ("discount", float),
    ("sac", "polyak_tau"): ("polyak_tau", float),
    ("sac", "learning_rate"): ("learning_rate", float),
    ("sac", "lambda_lr"): ("lambda_lr", float),
    ("sac", "lambda_init"): ("lambda_init", float),
    ("sac", "alpha_init"): ("alpha_init", float),
    ("sac", "alpha_lr"): ("alpha_lr", float),
    ("sac", "target_entropy"): ("target_entropy", float),
    ("sac", "warmup"): ("warmup", int),
    ("sac", "gradient_rounds"): ("gradient_rounds", int),
    ("sac", "buffer_capacity"): ("buffer_capacity", int),
    ("sac", "dual_from_safety_critic"): ("dual_from_safety_critic", _parse_bool),
    ("sac", "safety_mode"): ("safety_mode", str),
    ("sac", "safety_weight"): ("safety_weight", float),
    ("harness", "seeds"): ("seeds", _parse_int_tuple),
    ("harness", "steps_per_task"): ("steps_per_task", int),
}


def load_config(path=None, overrides=()):
    """Build an ExperimentConfig from an optional file plus overrides.

    Overrides use the form section.key=value and win over file values.
    """
    cfg = ExperimentConfig()
    updates = {}
    if path is not None:
        parser = configparser.ConfigParser()
        read = parser.read(path)
        if not read:
            raise ConfigError(f"config file not found: {path}")
        for section in parser.sections():
            for key, value in parser.items(section):
                updates[(section, key)] = value
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form section.key=value")
        dotted, value = item.split("=", 1)
        if "." not in dotted:
            raise ConfigError(f"override key {dotted!r} is not of the form section.key")
        section, key = dotted.split(".", 1)
        updates[(section.strip(), key.strip())] = value

    kw = {}
    for (section, key), value in updates.items():
        if (section, key) not in _SCHEMA:
            raise ConfigError(f"unknown config key: [{section}] {key}")
        name, parse = _SCHEMA[(section, key)]
        try:
            kw[name] = parse(value)
        except ValueError as exc:
            raise ConfigError(f"bad value for [{section}] {key}: {exc}") from None
    cfg = replace(cfg, **kw)
    return cfg.validate()


def write_config(path, cfg):
    """Write the config back out in the documented file format."""
    parser = configparser.ConfigParser()
    for (section, key), (name, _) in _SCHEMA.items():
        if not parser.has_section(section):
            parser.add_section(section)
        v = getattr(cfg, name)
        if isinstance(v, tuple):
            v = " ".join(str(x) for x in v)
        parser.set(section, key, str(v))
    with open(path, "w") as fh:
        parser.write(fh)
