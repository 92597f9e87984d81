"""Sectioned key=value run configuration with typed access.

Files are standard INI: one section per command plus an optional [run]
section for globals (seed, out, tol, threads).  Command-line flags
override file values, which override built-in defaults.
"""
from __future__ import annotations

import configparser
import os


class ConfigError(ValueError):
    """Invalid configuration; maps to exit status 2."""


def load_config(path: str | None) -> configparser.ConfigParser:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    # flags are case-sensitive (--L and --l are different parameters),
    # so file keys must be too
    cp.optionxform = str
    if path is not None:
        if not os.path.exists(path):
            raise ConfigError(f"config file not found: {path}")
        try:
            with open(path) as f:
                cp.read_file(f)
        except configparser.Error as e:
            raise ConfigError(f"config parse error: {e}") from e
    return cp


class Resolver:
    """Layered lookup: CLI flag, then config section, then default.

    Records every resolved value so the manifest can embed the complete
    parameter block.
    """

    def __init__(self, cp: configparser.ConfigParser, section: str, flags: dict):
        self.cp = cp
        self.section = section
        self.flags = flags
        self.resolved: dict[str, object] = {}

    def _raw(self, key: str):
        v = self.flags.get(key.replace("-", "_"))
        if v is not None:
            return v
        for sec in (self.section, "run"):
            if self.cp.has_option(sec, key):
                return self.cp.get(sec, key)
        return None

    def _get(self, key: str, conv, default, required: bool):
        raw = self._raw(key)
        if raw is None:
            if required and default is None:
                raise ConfigError(f"missing required parameter: {key}")
            self.resolved[key] = default
            return default
        try:
            val = conv(raw) if isinstance(raw, str) else conv(raw)
        except (TypeError, ValueError) as e:
            raise ConfigError(f"bad value for {key}: {raw!r} ({e})") from e
        self.resolved[key] = val
        return val

    def get_int(self, key: str, default: int | None = None, required: bool = False) -> int:
        return self._get(key, lambda s: int(str(s), 0), default, required)

    def get_float(self, key: str, default: float | None = None, required: bool = False) -> float:
        return self._get(key, lambda s: float(s), default, required)

    def get_str(self, key: str, default: str | None = None, required: bool = False) -> str:
        return self._get(key, str, default, required)

    def get_bool(self, key: str, default: bool | None = None) -> bool:
        def conv(s):
            if isinstance(s, bool):
                return s
            sl = str(s).strip().lower()
            if sl in ("1", "true", "yes", "on"):
                return True
            if sl in ("0", "false", "no", "off"):
                return False
            raise ValueError(f"not a boolean: {s}")
        return self._get(key, conv, default, False)

    def get_floats(self, key: str, default: str | None = None) -> list[float]:
        """Comma-separated floats."""
        raw = self._get(key, str, default, default is None)
        if raw is None:
            raise ConfigError(f"missing required parameter: {key}")
        try:
            vals = [float(p) for p in str(raw).split(",") if p.strip()]
        except ValueError as e:
            raise ConfigError(f"bad float list for {key}: {raw!r}") from e
        self.resolved[key] = ",".join(repr(v) for v in vals)
        return vals

    def get_complexes(self, key: str, default: str | None = None) -> list[complex]:
        """Semicolon-separated complex values in Python syntax (1+0.5j)."""
        raw = self._get(key, str, default, default is None)
        if raw is None:
            raise ConfigError(f"missing required parameter: {key}")
        try:
            vals = [complex(p.strip()) for p in str(raw).split(";") if p.strip()]
        except ValueError as e:
            raise ConfigError(f"bad complex list for {key}: {raw!r}") from e
        self.resolved[key] = ";".join(repr(v) for v in vals)
        return vals

    def get_int_range(self, key: str, default: str | None = None) -> list[int]:
        """Either 'a..b' (inclusive) or comma-separated integers."""
        raw = self._get(key, str, default, default is None)
        if raw is None:
            raise ConfigError(f"missing required parameter: {key}")
        s = str(raw).strip()
        try:
            if ".." in s:
                a, b = s.split("..")
                vals = list(range(int(a), int(b) + 1))
            else:
                vals = [int(p) for p in s.split(",") if p.strip()]
        except ValueError as e:
            raise ConfigError(f"bad integer range for {key}: {raw!r}") from e
        if not vals:
            raise ConfigError(f"empty integer range for {key}: {raw!r}")
        self.resolved[key] = s
        return vals

    def get_count(self, key: str, default=None, required: bool = False) -> int:
        """Integer that may be written in float form (1e5)."""
        def conv(s):
            v = float(s)
            iv = int(round(v))
            if abs(v - iv) > 1e-9 * max(1.0, abs(v)):
                raise ValueError(f"not an integer: {s}")
            return iv
        return self._get(key, conv, default, required)
