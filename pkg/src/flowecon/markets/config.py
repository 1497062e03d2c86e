"""Scenario configuration: validation, TOML round-trip and hashing."""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Optional

try:
    import tomllib as tomli
except ModuleNotFoundError:  # Python < 3.11
    import tomli
import tomli_w

from ..utility import ExpectationKind, UtilityForm


class ConfigError(ValueError):
    """Invalid scenario configuration; ``field`` names the offending key."""

    def __init__(self, field: str, constraint: str):
        super().__init__("%s: %s" % (field, constraint))
        self.field = field
        self.constraint = constraint


class MarketKind(str, Enum):
    DECENTRALIZED = "decentralized"
    CENTRALIZED = "centralized"


class SkillMode(str, Enum):
    NONE = "none"
    CHOICE = "choice"
    ASSIGNED_RANDOM = "assigned_random"


class TradeChoice(str, Enum):
    BEST = "best"
    UNIFORM = "uniform"  # ablation: product pair drawn uniformly at random


@dataclass(frozen=True)
class ProcessSpec:
    inputs: tuple
    output: int
    rates: tuple


@dataclass(frozen=True)
class ProductionConfig:
    skill_mode: SkillMode = SkillMode.CHOICE
    processes: tuple = ()


@dataclass(frozen=True)
class EndowmentConfig:
    product: int
    half_width: float = 0.05


@dataclass(frozen=True)
class ExpectationConfig:
    kind: ExpectationKind = ExpectationKind.NAIVE
    sigma: float = 0.0
    mu: float = 0.0


@dataclass(frozen=True)
class ScenarioConfig:
    n_agents: int
    n_products: int
    nu: float
    steps: int
    seed: int
    init_inventory: tuple
    market_kind: MarketKind = MarketKind.DECENTRALIZED
    name: str = "scenario"
    utility_form: UtilityForm = UtilityForm.CES_LOG
    init_ww: tuple = ()
    production: Optional[ProductionConfig] = None
    endowment: Optional[EndowmentConfig] = None
    expectation: Optional[ExpectationConfig] = None
    initial_price: float = 1.0
    money_product: Optional[int] = None
    trade_choice: TradeChoice = TradeChoice.BEST
    snapshot_every: Optional[int] = None  # None: every step up to 1000 steps, then sparser
    workers: int = 1

    @property
    def snapshot_interval(self) -> int:
        if self.snapshot_every is not None:
            return self.snapshot_every
        return 1 if self.steps <= 1000 else -(-self.steps // 1000)

    @property
    def k_product(self) -> int:
        return self.n_products - 1 if self.money_product is None else self.money_product

    def with_overrides(self, **kw) -> "ScenarioConfig":
        return validate(dataclasses.replace(self, **kw))

    def to_dict(self) -> dict:
        return _to_plain(self)

    def config_hash(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"), allow_nan=False)
        return hashlib.sha256(canon.encode("utf-8")).hexdigest()


DEFAULTS = {
    "market_kind": "decentralized", "name": "scenario", "utility_form": "ces_log",
    "init_ww": "[[1.0, 1.0]] per product j >= 1", "initial_price": 1.0,
    "money_product": "n_products - 1", "trade_choice": "best", "snapshot_every": "auto", "workers": 1,
}
REQUIRED = ("n_agents", "n_products", "nu", "steps", "seed", "init_inventory")
TOP_KEYS = set(REQUIRED) | set(DEFAULTS) | {"production", "endowment", "expectation"}


def _to_plain(obj):
    if dataclasses.is_dataclass(obj):
        out = {}
        for f in dataclasses.fields(obj):
            val = getattr(obj, f.name)
            if val is None:
                continue
            out[f.name] = _to_plain(val)
        return out
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, (tuple, list)):
        return [_to_plain(x) for x in obj]
    return obj


def _enum(cls, value, name):
    try:
        return cls(value)
    except ValueError:
        raise ConfigError(name, "must be one of %s, got %r" % ([e.value for e in cls], value)) from None


def _int(d, key, lo=None, default=None):
    if key not in d:
        if default is None:
            raise ConfigError(key, "required integer is missing")
        return default
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(key, "must be an integer, got %r" % (v,))
    if lo is not None and v < lo:
        raise ConfigError(key, "must be >= %d, got %d" % (lo, v))
    return v


def _float(d, key, default=None, name=None):
    name = name or key
    if key not in d:
        if default is None:
            raise ConfigError(name, "required number is missing")
        return float(default)
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(name, "must be a number, got %r" % (v,))
    return float(v)


def _ranges(value, name, count):
    if not isinstance(value, (list, tuple)) or len(value) != count:
        raise ConfigError(name, "must list %d [lo, hi] ranges" % count)
    out = []
    for r in value:
        if not isinstance(r, (list, tuple)) or len(r) != 2:
            raise ConfigError(name, "each range must be [lo, hi], got %r" % (r,))
        lo, hi = float(r[0]), float(r[1])
        if not (lo > 0 and lo <= hi):
            raise ConfigError(name, "ranges need 0 < lo <= hi, got [%g, %g]" % (lo, hi))
        out.append((lo, hi))
    return tuple(out)


def _unknown(d, allowed, where):
    extra = sorted(set(d) - set(allowed))
    if extra:
        raise ConfigError(where + extra[0], "unknown key (allowed: %s)" % ", ".join(sorted(allowed)))


def from_dict(d: dict) -> ScenarioConfig:
    """Build and validate a config from plain data (e.g. parsed TOML)."""
    if not isinstance(d, dict):
        raise ConfigError("<root>", "config must be a table")
    _unknown(d, TOP_KEYS, "")
    p = _int(d, "n_products", lo=2)
    production = endowment = expectation = None
    if "production" in d:
        pd = d["production"]
        _unknown(pd, {"skill_mode", "processes"}, "production.")
        procs = []
        for n_, item in enumerate(pd.get("processes", [])):
            where = "production.processes[%d]" % n_
            _unknown(item, {"inputs", "output", "rates"}, where + ".")
            try:
                ins = tuple(int(x) for x in item["inputs"])
                rates = tuple(float(x) for x in item["rates"])
                out = int(item["output"])
            except (KeyError, TypeError, ValueError):
                raise ConfigError(where, "needs inputs = [..], output = k, rates = [..]") from None
            procs.append(ProcessSpec(ins, out, rates))
        production = ProductionConfig(_enum(SkillMode, pd.get("skill_mode", "choice"), "production.skill_mode"),
                                      tuple(procs))
    if "endowment" in d:
        ed = d["endowment"]
        _unknown(ed, {"product", "half_width"}, "endowment.")
        endowment = EndowmentConfig(_int(ed, "product", lo=0) if "product" in ed else _int({}, "endowment.product"),
                                    _float(ed, "half_width", 0.05, "endowment.half_width"))
    if "expectation" in d:
        xd = d["expectation"]
        _unknown(xd, {"kind", "sigma", "mu"}, "expectation.")
        expectation = ExpectationConfig(_enum(ExpectationKind, xd.get("kind", "naive"), "expectation.kind"),
                                        _float(xd, "sigma", 0.0, "expectation.sigma"),
                                        _float(xd, "mu", 0.0, "expectation.mu"))
    if "init_inventory" not in d:
        raise ConfigError("init_inventory", "required list of [lo, hi] ranges is missing")
    cfg = ScenarioConfig(
        n_agents=_int(d, "n_agents", lo=1),
        n_products=p,
        nu=_float(d, "nu"),
        steps=_int(d, "steps"),
        seed=_int(d, "seed", lo=0),
        init_inventory=_ranges(d["init_inventory"], "init_inventory", p),
        market_kind=_enum(MarketKind, d.get("market_kind", "decentralized"), "market_kind"),
        name=str(d.get("name", "scenario")),
        utility_form=_enum(UtilityForm, d.get("utility_form", "ces_log"), "utility_form"),
        init_ww=_ranges(d["init_ww"], "init_ww", p - 1) if "init_ww" in d else tuple((1.0, 1.0) for _ in range(p - 1)),
        production=production,
        endowment=endowment,
        expectation=expectation,
        initial_price=_float(d, "initial_price", 1.0),
        money_product=_int(d, "money_product", lo=0) if "money_product" in d else None,
        trade_choice=_enum(TradeChoice, d.get("trade_choice", "best"), "trade_choice"),
        snapshot_every=_int(d, "snapshot_every", lo=0) if "snapshot_every" in d else None,
        workers=_int(d, "workers", lo=1, default=1),
    )
    return validate(cfg)


def validate(cfg: ScenarioConfig) -> ScenarioConfig:
    """Check cross-field invariants; returns ``cfg`` unchanged when valid."""
    P = cfg.n_products
    if cfg.n_agents < 1:
        raise ConfigError("n_agents", "must be >= 1")
    if P < 2:
        raise ConfigError("n_products", "must be >= 2")
    if cfg.steps < 1:
        raise ConfigError("steps", "must be >= 1, got %d" % cfg.steps)
    if cfg.seed < 0 or cfg.seed >= 2 ** 64:
        raise ConfigError("seed", "must be an unsigned 64-bit integer")
    if cfg.utility_form is UtilityForm.CES_LOG and not (0.0 < cfg.nu < 1.0):
        raise ConfigError("nu", "must satisfy 0 < nu < 1 for ces_log, got %r" % cfg.nu)
    if len(cfg.init_inventory) != P:
        raise ConfigError("init_inventory", "needs one range per product")
    if len(cfg.init_ww) != P - 1:
        raise ConfigError("init_ww", "needs one range per product j >= 1 (rate of j in units of product 0)")
    if not cfg.initial_price > 0:
        raise ConfigError("initial_price", "must be > 0 (default 1.0)")
    if cfg.snapshot_every is not None and cfg.snapshot_every < 0:
        raise ConfigError("snapshot_every", "must be >= 0 (0 disables snapshots; default: every step "
                          "for runs up to 1000 steps)")
    if cfg.money_product is not None and not 0 <= cfg.money_product < P:
        raise ConfigError("money_product", "must index a product (default n_products - 1)")
    if cfg.market_kind is MarketKind.DECENTRALIZED:
        if cfg.n_agents % 2:
            raise ConfigError("n_agents", "decentralized markets pair agents and need an even count, got %d"
                              % cfg.n_agents)
        if cfg.expectation is not None:
            raise ConfigError("expectation", "only centralized markets take an expectation model")
    else:
        if P != 2:
            raise ConfigError("n_products", "centralized markets trade exactly two products")
        if cfg.production is not None or cfg.endowment is not None:
            raise ConfigError("market_kind", "production and endowment apply to decentralized markets only")
        if cfg.utility_form is not UtilityForm.CES_LOG:
            raise ConfigError("utility_form", "centralized markets use ces_log")
    if cfg.production is not None:
        if not cfg.production.processes and cfg.production.skill_mode is not SkillMode.NONE:
            raise ConfigError("production.processes", "at least one process is needed")
        for n_, pr in enumerate(cfg.production.processes):
            where = "production.processes[%d]" % n_
            if not 1 <= len(pr.inputs) <= 2 or len(pr.rates) != len(pr.inputs):
                raise ConfigError(where, "one or two inputs with one rate each")
            if any(not 0 <= x < P for x in pr.inputs + (pr.output,)) or pr.output in pr.inputs:
                raise ConfigError(where, "inputs and output must be distinct product indices")
            if any(not r > 0 for r in pr.rates):
                raise ConfigError(where, "rates must be > 0")
    if cfg.endowment is not None:
        if not 0 <= cfg.endowment.product < P:
            raise ConfigError("endowment.product", "must index a product")
        if not 0 <= cfg.endowment.half_width < 1:
            raise ConfigError("endowment.half_width", "must lie in [0, 1) (default 0.05)")
    if cfg.expectation is not None and cfg.expectation.sigma < 0:
        raise ConfigError("expectation.sigma", "must be >= 0 (default 0.0)")
    if (cfg.expectation is not None and cfg.expectation.kind is ExpectationKind.NAIVE
            and cfg.expectation.sigma != 0):
        raise ConfigError("expectation.sigma", "naive expectations carry zero variance")
    return cfg


def dumps(cfg: ScenarioConfig) -> str:
    return tomli_w.dumps(cfg.to_dict())


def loads(text: str) -> ScenarioConfig:
    try:
        data = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError("<syntax>", str(exc)) from None
    return from_dict(data)


def parse_config(path) -> ScenarioConfig:
    """Read a TOML scenario file, or a preset name such as ``relaxation_5_1``."""
    p = Path(path)
    if not p.exists() and not p.suffix:
        from ..presets import preset_path
        p = preset_path(str(path))
    return loads(p.read_text(encoding="utf-8"))
