"""Run configuration: an INI file with ``[potential]``, ``[grid]``,
``[experiment]`` and ``[output]`` sections.

Every key has a default, unknown sections or keys are configuration errors.
Lists are comma separated.  Example::

    [potential]
    v1_family = quadratic
    v1_coef = 1.0
    v2_family = quadratic
    v2_coef = 1.0

    [grid]
    L = 8.0
    n_points = 257

    [experiment]
    eps = 0.1, 0.2, 0.5, 1, 2
    N = 50, 100, 200
    seed = 0
"""

import configparser
from dataclasses import dataclass, field, fields, replace
import hashlib
import json

from .exceptions import ConfigError
from .potentials import Potential, PotentialSpec

DEFAULTS = {
    "potential": {
        "v1_family": "quadratic", "v1_coef": "1.0", "v1_table_x": "", "v1_table_v": "",
        "v1_extrapolate": "false",
        "v2_family": "quadratic", "v2_coef": "1.0", "v2_table_x": "", "v2_table_v": "",
        "v2_extrapolate": "false",
        "gamma": "1.0",
    },
    "grid": {"L": "8.0", "n_points": "257", "w_points": "0"},
    "experiment": {
        "command": "",
        "eps": "0.1, 0.2, 0.5, 1, 2",
        "N": "50, 100, 200",
        "n_max": "401",
        "mu_table_max": "1048576",
        "n_trunc": "200",
        "renewal_eps": "1.0",
        "renewal_N": "2000",
        "contact_N": "100",
        "seed": "0",
        "tol": "1e-10",
        "max_iter": "10000",
        "n_steps": "100",
        "x0": "0.0",
        "a": "0.0",
        "b": "0.0",
        "tv_n_max": "200",
        "tv_threshold": "1e-3",
    },
    "output": {"dir": "out"},
}


def _floats(text, key):
    try:
        return tuple(float(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise ConfigError(f"{key}: expected a comma separated list of numbers") from None


def _ints(text, key):
    try:
        return tuple(int(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise ConfigError(f"{key}: expected a comma separated list of integers") from None


@dataclass(frozen=True)
class RunConfig:
    spec: PotentialSpec
    L: float = 8.0
    n_points: int = 257
    w_points: int = 0
    command: str = ""
    eps: tuple = (0.1, 0.2, 0.5, 1.0, 2.0)
    N: tuple = (50, 100, 200)
    n_max: int = 401
    mu_table_max: int = 1_048_576
    n_trunc: int = 200
    renewal_eps: float = 1.0
    renewal_N: int = 2000
    contact_N: int = 100
    seed: int = 0
    tol: float = 1e-10
    max_iter: int = 10000
    n_steps: int = 100
    x0: float = 0.0
    a: float = 0.0
    b: float = 0.0
    tv_n_max: int = 200
    tv_threshold: float = 1e-3
    out_dir: str = "out"
    raw: dict = field(default=None, repr=False, compare=False)

    def with_seed(self, seed):
        return replace(self, seed=int(seed))

    def hash(self):
        """Short digest of every setting that influences results."""
        payload = {f.name: getattr(self, f.name) for f in fields(self)
                   if f.name not in ("raw", "spec", "out_dir", "command")}
        payload["spec"] = self.spec.to_dict()
        text = json.dumps(payload, sort_keys=True, default=repr)
        return hashlib.sha256(text.encode()).hexdigest()[:16]


def _potential(sec, prefix):
    family = sec[f"{prefix}_family"].strip()
    if family == "tabulated":
        tx = _floats(sec[f"{prefix}_table_x"], f"{prefix}_table_x")
        tv = _floats(sec[f"{prefix}_table_v"], f"{prefix}_table_v")
        extra = _bool(sec[f"{prefix}_extrapolate"], f"{prefix}_extrapolate")
        return Potential("tabulated", table_x=tx, table_v=tv, extrapolate=extra)
    return Potential(family, _float(sec[f"{prefix}_coef"], f"{prefix}_coef"))


def _float(text, key):
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {text!r}") from None


def _int(text, key):
    try:
        return int(text)
    except ValueError:
        raise ConfigError(f"{key}: expected an integer, got {text!r}") from None


def _bool(text, key):
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got {text!r}")


def parse_config(text=""):
    """Parse INI text into a :class:`RunConfig` (empty text gives the defaults)."""
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config: {exc}") from None
    merged = {name: dict(values) for name, values in DEFAULTS.items()}
    for section in cp.sections():
        if section not in DEFAULTS:
            raise ConfigError(f"unknown config section [{section}]")
        for key, value in cp.items(section):
            if key not in DEFAULTS[section]:
                raise ConfigError(f"unknown key {key!r} in [{section}]")
            merged[section][key] = value
    pot, grid, exp = merged["potential"], merged["grid"], merged["experiment"]
    try:
        spec = PotentialSpec(_potential(pot, "v1"), _potential(pot, "v2"),
                             gamma=_float(pot["gamma"], "gamma"))
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"invalid potential: {exc}") from None
    cfg = RunConfig(
        spec=spec,
        L=_float(grid["L"], "L"),
        n_points=_int(grid["n_points"], "n_points"),
        w_points=_int(grid["w_points"], "w_points"),
        command=exp["command"].strip(),
        eps=_floats(exp["eps"], "eps"),
        N=_ints(exp["N"], "N"),
        n_max=_int(exp["n_max"], "n_max"),
        mu_table_max=_int(exp["mu_table_max"], "mu_table_max"),
        n_trunc=_int(exp["n_trunc"], "n_trunc"),
        renewal_eps=_float(exp["renewal_eps"], "renewal_eps"),
        renewal_N=_int(exp["renewal_N"], "renewal_N"),
        contact_N=_int(exp["contact_N"], "contact_N"),
        seed=_int(exp["seed"], "seed"),
        tol=_float(exp["tol"], "tol"),
        max_iter=_int(exp["max_iter"], "max_iter"),
        n_steps=_int(exp["n_steps"], "n_steps"),
        x0=_float(exp["x0"], "x0"),
        a=_float(exp["a"], "a"),
        b=_float(exp["b"], "b"),
        tv_n_max=_int(exp["tv_n_max"], "tv_n_max"),
        tv_threshold=_float(exp["tv_threshold"], "tv_threshold"),
        out_dir=merged["output"]["dir"].strip(),
        raw=merged,
    )
    _validate(cfg)
    return cfg


def _validate(cfg):
    if cfg.L <= 0:
        raise ConfigError("L must be positive")
    if cfg.n_points < 3 or cfg.n_points % 2 == 0:
        raise ConfigError("n_points must be odd (so that 0 is a node) and >= 3")
    if any(e < 0 for e in cfg.eps):
        raise ConfigError("eps values must be nonnegative")
    if list(cfg.N) != sorted(set(cfg.N)) or not cfg.N or cfg.N[0] < 1:
        raise ConfigError("N must be a strictly increasing list of positive integers")
    if cfg.n_max < 3 or cfg.mu_table_max < cfg.n_trunc or cfg.n_trunc < 3:
        raise ConfigError("need n_max >= 3 and 3 <= n_trunc <= mu_table_max")


def load_config(path=None):
    if path is None:
        return parse_config("")
    try:
        with open(path, encoding="utf-8") as fh:
            return parse_config(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
