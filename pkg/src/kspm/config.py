"""Flat ``key = value`` run configuration.

Every key maps one-to-one to a model coefficient or run control (the README
carries the symbol table).  Parsing is strict: unknown keys are rejected so a
misspelled physics parameter cannot be silently ignored, and all problems in
a file are reported together rather than one at a time.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

from .errors import ConfigError
from .montecarlo import EnsembleConfig
from .noise import NoiseSpec
from .params import ModelParams


def _parse_float(text):
    value = float(text)
    if not math.isfinite(value):
        raise ValueError(f"{text!r} is not finite")
    return value


def _parse_int(text):
    # reject silent truncation of "3.7" while still allowing "1e2"-free ints
    value = int(text, 0) if text.lower().startswith(("0x", "0o", "0b")) else int(text)
    return value


def _parse_optional_float(text):
    if text.lower() in ("auto", "none"):
        return None
    return _parse_float(text)


def _parse_optional_int(text):
    if text.lower() in ("auto", "none"):
        return None
    return _parse_int(text)


def _parse_method(text):
    if text not in ("direct", "picard"):
        raise ValueError(f"must be 'direct' or 'picard', got {text!r}")
    return text


def parse_ic_selector(text, name):
    """Turn ``"cosine 1 1 0.5 1.0"``-style text into a selector tuple.

    Nonnegativity is checked here for the closed-form selectors (constant and
    cosine have exact lower bounds); grid-dependent selectors are checked
    again when the field is materialized.
    """
    tokens = text.split()
    if not tokens:
        raise ValueError("empty selector")
    kind = tokens[0]
    args = tokens[1:]
    if kind == "constant":
        if len(args) != 1:
            raise ValueError("constant takes one value")
        c = _parse_float(args[0])
        if c < 0:
            raise ValueError(f"{name} must be nonnegative, constant {c:g} is not")
        return ("constant", c)
    if kind == "cosine":
        if len(args) not in (3, 4):
            raise ValueError("cosine takes m1 m2 amplitude [offset]")
        m1, m2 = _parse_int(args[0]), _parse_int(args[1])
        amplitude = _parse_float(args[2])
        offset = _parse_float(args[3]) if len(args) == 4 else abs(amplitude)
        if min(m1, m2) < 0:
            raise ValueError("cosine mode numbers must be nonnegative")
        if offset - abs(amplitude) < 0:
            raise ValueError(
                f"{name} must be nonnegative, cosine dips to {offset - abs(amplitude):g}"
            )
        return ("cosine", m1, m2, amplitude, offset)
    if kind == "barenblatt":
        if len(args) != 2:
            raise ValueError("barenblatt takes mass t0")
        mass, t0 = _parse_float(args[0]), _parse_float(args[1])
        if mass <= 0 or t0 <= 0:
            raise ValueError("barenblatt needs positive mass and t0")
        return ("barenblatt", mass, t0)
    if kind == "file":
        if len(args) != 1:
            raise ValueError("file takes one path")
        return ("file", args[0])
    raise ValueError(f"unknown selector kind {kind!r}")


# key -> (converter, default); gamma has no default and must appear.
_REQUIRED = object()
_SCHEMA = {
    "gamma": (_parse_float, _REQUIRED),
    "r_u": (_parse_float, 0.1),
    "r_v": (_parse_float, 0.1),
    "chi": (_parse_float, 0.5),
    "alpha": (_parse_float, 0.5),
    "beta": (_parse_float, 0.5),
    "sigma_u": (_parse_float, 0.2),
    "sigma_v": (_parse_float, 0.2),
    "delta_u": (_parse_float, 2.5),
    "delta_v": (_parse_float, 2.5),
    "kmax": (_parse_int, 8),
    "resolution": (_parse_int, 64),
    "horizon": (_parse_float, 0.05),
    "dt": (_parse_optional_float, None),
    "dt_max": (_parse_float, 1e-3),
    "snapshots": (_parse_int, 100),
    "seed": (_parse_int, 12345),
    "num_paths": (_parse_int, 50),
    "method": (_parse_method, "direct"),
    "picard_tol": (_parse_optional_float, None),
    "picard_max_iter": (_parse_int, 20),
    "workers": (_parse_optional_int, None),
    "u0": (None, ("cosine", 1, 1, 0.5, 1.0)),
    "v0": (None, ("constant", 0.5)),
    "outdir": (None, "out"),
}


@dataclass(frozen=True)
class RunConfig:
    """Typed view of one configuration file plus command-line overrides."""

    gamma: float
    r_u: float = 0.1
    r_v: float = 0.1
    chi: float = 0.5
    alpha: float = 0.5
    beta: float = 0.5
    sigma_u: float = 0.2
    sigma_v: float = 0.2
    delta_u: float = 2.5
    delta_v: float = 2.5
    kmax: int = 8
    resolution: int = 64
    horizon: float = 0.05
    dt: float | None = None
    dt_max: float = 1e-3
    snapshots: int = 100
    seed: int = 12345
    num_paths: int = 50
    method: str = "direct"
    picard_tol: float | None = None
    picard_max_iter: int = 20
    workers: int | None = None
    u0: tuple = ("cosine", 1, 1, 0.5, 1.0)
    v0: tuple = ("constant", 0.5)
    outdir: str = "out"

    def replace(self, **changes):
        """Copy with overrides applied (used for --seed and friends)."""
        return dataclasses.replace(self, **changes)

    def model_params(self):
        return ModelParams(
            r_u=self.r_u, r_v=self.r_v, chi=self.chi, alpha=self.alpha,
            beta=self.beta, sigma_u=self.sigma_u, sigma_v=self.sigma_v,
            gamma=self.gamma,
        )

    def noise_specs(self):
        w1 = NoiseSpec(sigma=self.sigma_u, delta=self.delta_u, kmax=self.kmax, seed=self.seed)
        w2 = NoiseSpec(sigma=self.sigma_v, delta=self.delta_v, kmax=self.kmax, seed=self.seed)
        return w1, w2

    def to_ensemble(self, num_paths=None):
        """Assemble the ensemble description, re-raising sign violations
        and similar constructor complaints as configuration errors."""
        w1, w2 = self.noise_specs()
        try:
            return EnsembleConfig(
                nx=self.resolution,
                ny=self.resolution,
                params=self.model_params(),
                w1=w1,
                w2=w2,
                u0=self.u0,
                v0=self.v0,
                horizon=self.horizon,
                num_paths=self.num_paths if num_paths is None else num_paths,
                base_seed=self.seed,
                dt=self.dt,
                dt_max=self.dt_max,
                snapshots=self.snapshots,
                method=self.method,
                picard_tol=self.picard_tol,
                picard_max_iter=self.picard_max_iter,
                workers=self.workers,
            )
        except ValueError as err:
            raise ConfigError(str(err).split("; ")) from None

    def as_text(self):
        """Render back to the flat file format (manifests echo this)."""
        lines = []
        for key in _SCHEMA:
            value = getattr(self, key)
            if key in ("u0", "v0"):
                value = " ".join(str(part) for part in value)
            elif value is None:
                value = "auto"
            lines.append(f"{key} = {value}")
        return "\n".join(lines) + "\n"


def parse_config(text):
    """Parse flat ``key = value`` text into a :class:`RunConfig`.

    Lines are UTF-8, ``#`` starts a comment, keys may appear once.  Every
    problem in the file is collected before raising so a bad config is fixed
    in one round trip.
    """
    problems = []
    seen = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            problems.append(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
            continue
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _SCHEMA:
            problems.append(f"line {lineno}: unknown key {key!r}")
            continue
        if key in seen:
            problems.append(f"line {lineno}: duplicate key {key!r}")
            continue
        if not value:
            problems.append(f"line {lineno}: key {key!r} has no value")
            continue
        seen[key] = (lineno, value)

    fields = {}
    for key, (convert, default) in _SCHEMA.items():
        if key in seen:
            lineno, value = seen[key]
            try:
                if key in ("u0", "v0"):
                    fields[key] = parse_ic_selector(value, key)
                elif key == "outdir":
                    fields[key] = value
                else:
                    fields[key] = convert(value)
            except (TypeError, ValueError) as err:
                problems.append(f"line {lineno}: {key}: {err}")
        elif default is _REQUIRED:
            problems.append(f"missing required key {key!r}")
        else:
            fields[key] = default

    # Sign and range checks run per key on whatever parsed, so a file with
    # both a typo and a bad sign reports both at once.
    for check, message in (
        (lambda f: f["gamma"] > 1, "gamma must exceed 1"),
        (lambda f: f["r_u"] > 0, "r_u must be positive"),
        (lambda f: f["r_v"] > 0, "r_v must be positive"),
        (lambda f: f["chi"] >= 0, "chi must be nonnegative"),
        (lambda f: f["alpha"] >= 0, "alpha must be nonnegative"),
        (lambda f: f["beta"] >= 0, "beta must be nonnegative"),
        (lambda f: f["sigma_u"] >= 0, "sigma_u must be nonnegative"),
        (lambda f: f["sigma_v"] >= 0, "sigma_v must be nonnegative"),
        (lambda f: f["delta_u"] > 0, "delta_u must be positive"),
        (lambda f: f["delta_v"] > 0, "delta_v must be positive"),
        (lambda f: f["kmax"] >= 0, "kmax must be nonnegative"),
        (lambda f: 0 <= f["seed"] < 2**64, "seed must fit in 64 unsigned bits"),
        (lambda f: f["resolution"] >= 4, "resolution must be at least 4"),
        (lambda f: f["horizon"] > 0, "horizon must be positive"),
        (lambda f: f["num_paths"] >= 1, "num_paths must be at least 1"),
        (lambda f: f["snapshots"] >= 1, "snapshots must be at least 1"),
        (lambda f: f["dt"] is None or f["dt"] > 0, "dt must be positive when given"),
        (lambda f: f["dt_max"] > 0, "dt_max must be positive"),
        (lambda f: f["picard_max_iter"] >= 1, "picard_max_iter must be at least 1"),
        (lambda f: f["picard_tol"] is None or f["picard_tol"] > 0,
         "picard_tol must be positive when given"),
        (lambda f: f["workers"] is None or f["workers"] >= 1,
         "workers must be at least 1 when given"),
    ):
        try:
            ok = check(fields)
        except KeyError:
            continue
        if not ok:
            problems.append(message)
    if problems:
        raise ConfigError(problems)
    return RunConfig(**fields)


def load_config(path):
    """Read and parse a configuration file."""
    try:
        with open(path, encoding="utf-8") as handle:
            text = handle.read()
    except OSError as err:
        raise ConfigError(f"cannot read config {path}: {err}") from None
    except UnicodeDecodeError as err:
        raise ConfigError(f"config {path} is not UTF-8: {err}") from None
    return parse_config(text)
