"""INI run configuration.

    [model]        couplings = 1, 0, 1         potential = tridiagonal | lifted
    [distribution] kind = bernoulli | uniform | discrete
                   low, high = scalar or one value per channel;  p = 0.5
                   atoms = 0,0,0; 1,0,1        weights = 1, 1
                   frozen = 2:0                (1-based channel:value, comma separated)
    [run]          seed = 1
    [lyap]         grid, steps, block_size, scheme, batches
    [zariski]      interval = a, b             grid_step
    [ids]          L, grid, mesh_points, method = shoot | inertia
    [thouless]     grid, L, steps, ids_grid, synthetic, alpha0

Grids are either ``start:stop:step`` (stop included) or a comma list.
"""

from __future__ import annotations

import configparser
import hashlib
from dataclasses import dataclass, field

import numpy as np

from . import sampling
from .errors import ConfigError, DeltaChainError
from .sampling import DistributionSpec
from .transfer import ModelConfig

SECTIONS = ("model", "distribution", "run", "lyap", "zariski", "ids", "thouless")
COMMAND_SECTIONS = {
    "lyap": ("model", "distribution", "lyap"),
    "zariski": ("model", "zariski"),
    "ids": ("model", "ids"),
    "thouless": ("model", "distribution", "thouless"),
    "selftest": (),
}


def parse_floats(text: str, what: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.replace(";", ",").split(",") if x.strip())
    except ValueError as exc:
        raise ConfigError(f"{what}: cannot parse {text!r} as numbers") from exc


def parse_grid(text: str, what: str = "grid") -> np.ndarray:
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError(f"{what}: expected start:stop:step, got {text!r}")
        start, stop, step = parse_floats(",".join(parts), what)
        if step <= 0:
            raise ConfigError(f"{what}: step must be positive")
        if stop < start:
            return np.zeros(0)
        count = int(np.floor((stop - start) / step + 1e-9)) + 1
        return np.round(start + step * np.arange(count), 12)
    vals = np.array(parse_floats(text, what))
    if vals.size and np.any(np.diff(vals) < 0):
        raise ConfigError(f"{what}: list must be sorted")
    return vals


def _channel_values(text: str, n: int, what: str) -> tuple[float, ...]:
    vals = parse_floats(text, what)
    if len(vals) == 1:
        return vals * n
    if len(vals) != n:
        raise ConfigError(f"{what}: need 1 or {n} values, got {len(vals)}")
    return vals


def parse_frozen(text: str, n: int) -> dict[int, float]:
    out = {}
    for item in text.split(","):
        if not item.strip():
            continue
        try:
            ch, val = item.split(":")
            ch_i = int(ch)
            out[ch_i - 1] = float(val)
        except ValueError as exc:
            raise ConfigError(f"frozen: bad entry {item!r}, expected channel:value") from exc
        if not 1 <= ch_i <= n:
            raise ConfigError(f"frozen: channel {ch_i} outside 1..{n}")
    return out


@dataclass(frozen=True)
class RunConfig:
    model: ModelConfig | None
    distribution: DistributionSpec | None
    seed: int
    sections: dict = field(default_factory=dict)
    sha256: str = ""

    def block(self, name: str) -> configparser.SectionProxy:
        if name not in self.sections:
            raise ConfigError(f"missing [{name}] section")
        return self.sections[name]


def _get(sec, key, conv, what, default=None):
    if key not in sec:
        if default is None:
            raise ConfigError(f"[{sec.name}] missing key {key!r}")
        return default
    try:
        return conv(sec[key])
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"[{sec.name}] {key}: {exc}") from exc


def _distribution(sec, n: int) -> DistributionSpec:
    kind = sec.get("kind", "bernoulli").strip()
    frozen = parse_frozen(sec.get("frozen", ""), n)
    if kind == "bernoulli":
        low = _channel_values(sec.get("low", "0"), n, "low")
        high = _channel_values(sec.get("high", "1"), n, "high")
        p = _get(sec, "p", float, "p", 0.5)
        return DistributionSpec("bernoulli", n, low, high, p=p, frozen=tuple(sorted(frozen.items())))
    if kind == "uniform":
        low = _channel_values(_get(sec, "low", str, "low"), n, "low")
        high = _channel_values(_get(sec, "high", str, "high"), n, "high")
        return sampling.uniform_box(low, high, frozen)
    if kind == "discrete":
        atoms = [parse_floats(a, "atoms") for a in _get(sec, "atoms", str, "atoms").split(";")]
        weights = parse_floats(sec["weights"], "weights") if "weights" in sec else None
        if any(len(a) != n for a in atoms):
            raise ConfigError(f"atoms: each atom needs {n} values")
        return sampling.discrete(atoms, weights, frozen)
    raise ConfigError(f"unknown distribution kind {kind!r}")


def load(path: str, command: str | None = None, seed: int | None = None) -> RunConfig:
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    return loads(raw.decode("utf-8"), command, seed)


def loads(text: str, command: str | None = None, seed: int | None = None) -> RunConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    for name in cp.sections():
        if name not in SECTIONS:
            raise ConfigError(f"unknown section [{name}]")
    if command is not None:
        for name in COMMAND_SECTIONS[command]:
            if name not in cp:
                raise ConfigError(f"command {command!r} needs a [{name}] section")
    model = dist = None
    try:
        if "model" in cp:
            m = cp["model"]
            model = ModelConfig(_get(m, "couplings", lambda t: parse_floats(t, "couplings"), "couplings"),
                                m.get("potential", "tridiagonal").strip())
        if "distribution" in cp:
            if model is None:
                raise ConfigError("[distribution] needs [model] for the channel count")
            dist = _distribution(cp["distribution"], model.n)
    except ConfigError:
        raise
    except DeltaChainError as exc:
        raise ConfigError(str(exc)) from exc
    if seed is None:
        seed = _get(cp["run"], "seed", int, "seed", 0) if "run" in cp else 0
    if seed < 0:
        raise ConfigError("seed must be nonnegative")
    sha = hashlib.sha256(text.encode("utf-8")).hexdigest()
    sections = {name: cp[name] for name in cp.sections()}
    cfg = RunConfig(model, dist, int(seed), sections, sha)
    if command is not None:
        validate(cfg, command)
    return cfg


def validate(cfg: RunConfig, command: str) -> None:
    """Parse every key the command will use, so errors surface before any work."""
    if command == "lyap":
        lyap_options(cfg)
    elif command == "zariski":
        zariski_options(cfg)
    elif command == "ids":
        ids_options(cfg)
    elif command == "thouless":
        thouless_options(cfg)


def lyap_options(cfg: RunConfig) -> dict:
    s = cfg.block("lyap")
    grid = _get(s, "grid", parse_grid, "grid")
    if grid.size == 0:
        raise ConfigError("[lyap] grid is empty")
    scheme = s.get("scheme", "qr").strip()
    if scheme not in ("qr", "exterior"):
        raise ConfigError(f"[lyap] unknown scheme {scheme!r}")
    return dict(grid=grid, steps=_get(s, "steps", int, "steps", 10**6),
                block_size=_get(s, "block_size", int, "block_size", 10), scheme=scheme,
                batches=_get(s, "batches", int, "batches", 20))


def zariski_options(cfg: RunConfig) -> dict:
    s = cfg.block("zariski")
    interval = _get(s, "interval", lambda t: parse_floats(t, "interval"), "interval")
    if len(interval) != 2:
        raise ConfigError("[zariski] interval needs two numbers")
    step = _get(s, "grid_step", float, "grid_step")
    if step <= 0:
        raise ConfigError("[zariski] grid_step must be positive")
    if cfg.model.n != 3:
        raise ConfigError("[zariski] the certificate is defined for three layers")
    return dict(interval=interval, grid_step=step)


def ids_options(cfg: RunConfig) -> dict:
    s = cfg.block("ids")
    L = _get(s, "L", int, "L")
    if L < 1:
        raise ConfigError("[ids] L must be positive")
    method = s.get("method", "shoot").strip()
    if method not in ("shoot", "inertia"):
        raise ConfigError(f"[ids] unknown method {method!r}")
    grid = _get(s, "grid", parse_grid, "grid")
    return dict(L=L, grid=grid, mesh_points=_get(s, "mesh_points", int, "mesh_points", 400),
                method=method)


def thouless_options(cfg: RunConfig) -> dict:
    s = cfg.block("thouless")
    synthetic = s.getboolean("synthetic", fallback=False)
    grid = _get(s, "grid", parse_grid, "grid")
    return dict(grid=grid, L=_get(s, "L", int, "L", 40), steps=_get(s, "steps", int, "steps", 10**6),
                ids_grid=_get(s, "ids_grid", parse_grid, "ids_grid", parse_grid("-2:8:0.02")),
                synthetic=synthetic, alpha0=_get(s, "alpha0", float, "alpha0", 0.7),
                block_size=_get(s, "block_size", int, "block_size", 10))
