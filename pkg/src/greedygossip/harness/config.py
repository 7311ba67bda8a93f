"""Experiment configuration files.

The format is INI-style text::

    [experiment]
    topology = rgg          ; rgg | grid
    n = 200                 ; rgg node count
    side = 14               ; grid side length
    graphs = 10             ; graph realizations
    runs = 100              ; runs per graph and algorithm
    budget = 20000          ; transmissions per run
    epsilon = 0.01
    seed = 1
    bucket = 100            ; transmission bucket width for aggregation
    sizes = 25, 50, 100     ; sweep: RGG n values (or grid sides)
    miss_probs = 0.1, 0.5   ; stale: broadcast miss probabilities
    restarts = 50           ; A(G) search restarts
    iters = 5000            ; A(G) search iterations per restart
    tave_runs = 1000        ; runs per averaging-time estimate

    [field]
    kind = gaussian_bumps   ; gaussian_bumps | linear | spike | iid_gaussian
    bumps = 1 0.25 0.25 0.15; -1 0.75 0.75 0.15
    seed = 0

    [algorithm.gge]
    algorithm = gge         ; defaults to the section label when it names one
    hops = 1
    miss_prob = 0
    init_mode = proposed    ; proposed | broadcast | ideal
    tx_mode = three         ; three | two

Unknown sections or keys are errors.  ``dump_config`` writes the canonical
form with every key spelled out.
"""

from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, field, replace
from pathlib import Path

from ..engine import ALGORITHMS, EngineConfig, EngineError
from ..fields import DEFAULT_BUMPS, FieldError, FieldSpec


class ConfigError(ValueError):
    pass


EXPERIMENT_KEYS = {
    "topology": str, "n": int, "side": int, "graphs": int, "runs": int, "budget": int,
    "epsilon": float, "seed": int, "bucket": int, "sizes": list, "miss_probs": list,
    "restarts": int, "iters": int, "tave_runs": int,
}
FIELD_KEYS = ("kind", "bumps", "seed")
ALGO_KEYS = ("algorithm", "hops", "miss_prob", "init_mode", "tx_mode")


@dataclass(frozen=True)
class AlgorithmSpec:
    label: str
    engine: EngineConfig


@dataclass(frozen=True)
class ExperimentConfig:
    topology: str = "rgg"
    n: int = 200
    side: int = 14
    graphs: int = 1
    runs: int = 10
    budget: int = 20000
    epsilon: float = 0.01
    seed: int = 0
    bucket: int = 100
    sizes: tuple[int, ...] = ()
    miss_probs: tuple[float, ...] = (0.1, 0.2, 0.3, 0.5)
    restarts: int = 50
    iters: int = 5000
    tave_runs: int = 1000
    field: FieldSpec = field(default_factory=FieldSpec)
    algorithms: tuple[AlgorithmSpec, ...] = (
        AlgorithmSpec("rg", EngineConfig("rg")), AlgorithmSpec("gge", EngineConfig("gge")))

    def __post_init__(self):
        if self.topology not in ("rgg", "grid"):
            raise ConfigError(f"topology must be 'rgg' or 'grid', not {self.topology!r}")
        if self.n < 2:
            raise ConfigError("n must be >= 2")
        if self.side < 2:
            raise ConfigError("side must be >= 2")
        for name in ("graphs", "runs", "budget", "bucket", "restarts", "iters", "tave_runs"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if not 0.0 < self.epsilon < 1.0:
            raise ConfigError("epsilon must lie in (0, 1)")
        if any(s < 2 for s in self.sizes):
            raise ConfigError("sizes must all be >= 2")
        if any(not 0.0 <= p < 1.0 for p in self.miss_probs):
            raise ConfigError("miss_probs must lie in [0, 1)")
        if not self.algorithms:
            raise ConfigError("at least one algorithm is required")
        labels = [a.label for a in self.algorithms]
        if len(set(labels)) != len(labels):
            raise ConfigError("duplicate algorithm labels")

    @property
    def size(self) -> int:
        return self.n if self.topology == "rgg" else self.side * self.side

    def with_algorithms(self, algos) -> "ExperimentConfig":
        return replace(self, algorithms=tuple(algos))


def _key_lines(text: str) -> dict[tuple[str, str], int]:
    """Line numbers of every ``key = value`` inside each section."""
    where: dict[tuple[str, str], int] = {}
    section = ""
    for lineno, line in enumerate(text.splitlines(), 1):
        stripped = line.strip()
        m = re.match(r"^\[(.+)\]$", stripped)
        if m:
            section = m.group(1).strip()
            where[(section, "")] = lineno
            continue
        m = re.match(r"^([^=:;#\s][^=:]*?)\s*[=:]", stripped)
        if m:
            where[(section, m.group(1).strip().lower())] = lineno
    return where


def _int(raw: str) -> int:
    try:
        return int(raw)
    except ValueError:
        f = float(raw)
        if not f.is_integer():
            raise
        return int(f)


def _parse_list(raw: str, conv):
    return tuple(conv(v) for v in re.split(r"[,\s]+", raw.strip()) if v)


def _parse_bumps(raw: str):
    bumps = []
    for chunk in raw.split(";"):
        vals = chunk.split()
        if not vals:
            continue
        if len(vals) != 4:
            raise ValueError("each bump needs amplitude cx cy width")
        bumps.append(tuple(float(v) for v in vals))
    return tuple(bumps)


def parse_config(text: str, source: str = "<config>") -> ExperimentConfig:
    where = _key_lines(text)

    def err(section, key, msg):
        line = where.get((section, key)) or where.get((section, ""))
        loc = f"{source}:{line}" if line else source
        return ConfigError(f"{loc}: [{section}] {key}: {msg}" if key else f"{loc}: {msg}")

    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"), interpolation=None)
    try:
        cp.read_string(text, source=source)
    except configparser.Error as e:
        raise ConfigError(f"{source}: {e}") from None

    kwargs: dict = {}
    algos = []
    for section in cp.sections():
        items = cp[section]
        if section == "experiment":
            for key, raw in items.items():
                if key not in EXPERIMENT_KEYS:
                    raise err(section, key, "unknown key")
                try:
                    conv = EXPERIMENT_KEYS[key]
                    if key == "sizes":
                        kwargs[key] = _parse_list(raw, int)
                    elif key == "miss_probs":
                        kwargs[key] = _parse_list(raw, float)
                    elif conv is int:
                        kwargs[key] = _int(raw)
                    else:
                        kwargs[key] = conv(raw)
                except ValueError as e:
                    raise err(section, key, f"bad value {raw!r} ({e})") from None
        elif section == "field":
            fk = {}
            for key, raw in items.items():
                if key not in FIELD_KEYS:
                    raise err(section, key, "unknown key")
                try:
                    fk[key] = (_parse_bumps(raw) if key == "bumps"
                               else _int(raw) if key == "seed" else raw)
                except ValueError as e:
                    raise err(section, key, f"bad value {raw!r} ({e})") from None
            try:
                kwargs["field"] = FieldSpec(**fk)
            except FieldError as e:
                raise err(section, "", str(e)) from None
        elif section.startswith("algorithm.") and len(section) > len("algorithm."):
            label = section[len("algorithm."):]
            ak = {}
            for key, raw in items.items():
                if key not in ALGO_KEYS:
                    raise err(section, key, "unknown key")
                try:
                    ak[key] = (_int(raw) if key == "hops"
                               else float(raw) if key == "miss_prob" else raw)
                except ValueError as e:
                    raise err(section, key, f"bad value {raw!r} ({e})") from None
            if "algorithm" not in ak:
                if label not in ALGORITHMS:
                    raise err(section, "", "missing 'algorithm' key")
                ak["algorithm"] = label
            try:
                algos.append(AlgorithmSpec(label, EngineConfig(**ak)))
            except EngineError as e:
                raise err(section, "", str(e)) from None
        else:
            raise err(section, "", f"unknown section [{section}]")
    if algos:
        kwargs["algorithms"] = tuple(algos)
    try:
        return ExperimentConfig(**kwargs)
    except ConfigError as e:
        key = str(e).split()[0]
        if key in EXPERIMENT_KEYS:
            raise err("experiment", key, str(e)) from None
        raise ConfigError(f"{source}: {e}") from None


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from None
    return parse_config(text, str(path))


def _num(v) -> str:
    return format(v, ".17g") if isinstance(v, float) else str(v)


def dump_config(cfg: ExperimentConfig) -> str:
    """Canonical text form; ``parse_config(dump_config(c)) == c``."""
    out = ["[experiment]"]
    for key in EXPERIMENT_KEYS:
        val = getattr(cfg, key)
        if key in ("sizes", "miss_probs"):
            val = ", ".join(_num(v) for v in val)
        out.append(f"{key} = {_num(val)}".rstrip())
    f = cfg.field
    out += ["", "[field]", f"kind = {f.kind}",
            "bumps = " + "; ".join(" ".join(_num(float(v)) for v in b) for b in f.bumps),
            f"seed = {f.seed}"]
    for a in cfg.algorithms:
        e = a.engine
        out += ["", f"[algorithm.{a.label}]", f"algorithm = {e.algorithm}", f"hops = {e.hops}",
                f"miss_prob = {_num(float(e.miss_prob))}", f"init_mode = {e.init_mode}",
                f"tx_mode = {e.tx_mode}"]
    return "\n".join(out) + "\n"


__all__ = ["AlgorithmSpec", "ConfigError", "ExperimentConfig", "DEFAULT_BUMPS",
           "dump_config", "load_config", "parse_config"]
