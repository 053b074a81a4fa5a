"""Scenario configuration: an INI-style grammar parsed with ``configparser``.

Grammar
-------
::

    [scenario]
    id = fig5            ; required, one of the catalog ids
    preset = desk        ; optional, "desk" (default) or "paper"

    [physics]
    K = 30               ; keys depend on the scenario

    [numerics]
    points = 400

    [output]
    dir = out/fig5       ; optional, default "out/<id>"

Keys are case-sensitive.  ``;`` and ``#`` start comments.  Lists are comma
separated.  Complex numbers use Python syntax (``3.5+2j``).  Unknown sections
or keys are rejected with their line number; values that fail to parse or
violate a constraint are rejected with the field name.
"""
from __future__ import annotations

import configparser
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable


class ConfigError(ValueError):
    """Invalid configuration; the message names the line or field."""


SECTIONS = ("scenario", "physics", "numerics", "output")


@dataclass(frozen=True)
class Param:
    """One configurable value: parser, default and an optional constraint."""

    kind: str  # int | float | complex | floats | ints | str | lobes | humps
    default: Any
    check: Callable[[Any], bool] | None = None
    rule: str = ""
    help: str = ""


def _num(kind: str, text: str):
    if kind == "int":
        return int(text)
    if kind == "float":
        v = float(text)
        if not math.isfinite(v):
            raise ValueError("not finite")
        return v
    if kind == "complex":
        return complex(text.replace(" ", ""))
    raise AssertionError(kind)


def _parse_value(p: Param, text: str):
    text = text.strip()
    if p.kind in ("int", "float", "complex"):
        return _num(p.kind, text)
    if p.kind == "str":
        return text
    if p.kind in ("floats", "ints"):
        base = "float" if p.kind == "floats" else "int"
        items = [s for s in (t.strip() for t in text.split(",")) if s]
        if not items:
            raise ValueError("empty list")
        return tuple(_num(base, s) for s in items)
    if p.kind in ("lobes", "humps"):
        # groups separated by ';' would clash with comments, so use '|'
        n = 3 if p.kind == "lobes" else 2
        groups = [g.strip() for g in text.split("|") if g.strip()]
        out = []
        for g in groups:
            vals = tuple(float(s) for s in g.split(","))
            if len(vals) != n:
                raise ValueError(f"each group needs {n} numbers")
            out.append(vals)
        if not out:
            raise ValueError("empty list")
        return tuple(out)
    raise AssertionError(p.kind)


def format_value(v) -> str:
    """Canonical text of a parsed value (used in manifests and CSV headers)."""
    if isinstance(v, tuple):
        if v and isinstance(v[0], tuple):
            return " | ".join(", ".join(format_value(x) for x in g) for g in v)
        return ", ".join(format_value(x) for x in v)
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return "%.15g" % v
    if isinstance(v, complex):
        return "%.15g%+.15gj" % (v.real, v.imag)
    return str(v)


@dataclass
class ScenarioConfig:
    """Fully validated configuration with every default filled in."""

    scenario: str
    preset: str
    physics: dict
    numerics: dict
    output_dir: Path
    source: str = "<inline>"
    defaulted: tuple = field(default_factory=tuple)

    def echo(self) -> dict:
        return {
            "scenario": {"id": self.scenario, "preset": self.preset},
            "physics": {k: format_value(v) for k, v in sorted(self.physics.items())},
            "numerics": {k: format_value(v) for k, v in sorted(self.numerics.items())},
            "output": {"dir": str(self.output_dir)},
            "defaulted": list(self.defaulted),
        }

    def with_preset(self, preset: str) -> "ScenarioConfig":
        """Re-resolve defaults for another preset, keeping explicitly set keys."""
        from .catalog import get

        spec = get(self.scenario)
        explicit = {k: v for k, v in self.physics.items() if f"physics.{k}" not in self.defaulted}
        explicit_n = {k: v for k, v in self.numerics.items() if f"numerics.{k}" not in self.defaulted}
        physics, numerics, defaulted = spec.resolve(preset, explicit, explicit_n)
        return ScenarioConfig(self.scenario, preset, physics, numerics, self.output_dir, self.source, defaulted)


def _line_numbers(text: str) -> dict:
    """``(section, key) -> line`` for every assignment in ``text``."""
    out: dict = {}
    section = None
    for n, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if not s or s[0] in "#;":
            continue
        m = re.match(r"\[([^\]]+)\]", s)
        if m:
            section = m.group(1).strip()
            out.setdefault((section, None), n)
            continue
        m = re.match(r"([^=:\s][^=:]*?)\s*[=:]", s)
        if m and section is not None:
            out.setdefault((section, m.group(1).strip()), n)
    return out


def parse_config(source: str | Path, inline: bool | None = None) -> ScenarioConfig:
    """Parse and validate a config from a path or from inline text.

    A string containing a newline or a ``[`` is taken as inline text unless
    ``inline`` says otherwise.
    """
    from .catalog import get, SCENARIO_IDS

    if inline is None:
        inline = isinstance(source, str) and ("\n" in source or source.lstrip().startswith("["))
    if inline:
        text, name = str(source), "<inline>"
    else:
        path = Path(source)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
        name = str(path)

    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"), strict=True)
    cp.optionxform = str
    try:
        cp.read_string(text, source=name)
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError(f"{name}: line {exc.lineno}: key outside any [section]") from exc
    except configparser.DuplicateOptionError as exc:
        raise ConfigError(f"{name}: line {exc.lineno}: duplicate key '{exc.option}' in [{exc.section}]") from exc
    except configparser.DuplicateSectionError as exc:
        raise ConfigError(f"{name}: line {exc.lineno}: duplicate section [{exc.section}]") from exc
    except configparser.ParsingError as exc:
        lineno = exc.errors[0][0] if exc.errors else "?"
        raise ConfigError(f"{name}: line {lineno}: cannot parse line") from exc

    lines = _line_numbers(text)

    def where(section, key=None):
        n = lines.get((section, key))
        return f"{name}: line {n}" if n else name

    for sec in cp.sections():
        if sec not in SECTIONS:
            raise ConfigError(f"{where(sec)}: unknown section [{sec}] (allowed: {', '.join(SECTIONS)})")
    if not cp.has_section("scenario") or "id" not in cp["scenario"]:
        raise ConfigError(f"{name}: missing required key 'id' in [scenario]")
    for key in cp["scenario"]:
        if key not in ("id", "preset"):
            raise ConfigError(f"{where('scenario', key)}: unknown key '{key}' in [scenario]")
    if cp.has_section("output"):
        for key in cp["output"]:
            if key != "dir":
                raise ConfigError(f"{where('output', key)}: unknown key '{key}' in [output]")

    sid = cp["scenario"]["id"].strip()
    if sid not in SCENARIO_IDS:
        raise ConfigError(f"{where('scenario', 'id')}: unknown scenario id '{sid}' (known: {', '.join(SCENARIO_IDS)})")
    preset = cp["scenario"].get("preset", "desk").strip()
    spec = get(sid)
    if preset not in spec.presets:
        raise ConfigError(
            f"{where('scenario', 'preset')}: scenario '{sid}' has no preset '{preset}' (available: {', '.join(spec.presets)})"
        )

    given: dict = {"physics": {}, "numerics": {}}
    for sec in ("physics", "numerics"):
        table = spec.physics if sec == "physics" else spec.numerics
        if not cp.has_section(sec):
            continue
        for key, raw in cp[sec].items():
            if key not in table:
                allowed = ", ".join(sorted(table)) or "none"
                raise ConfigError(f"{where(sec, key)}: unknown key '{key}' in [{sec}] for scenario '{sid}' (allowed: {allowed})")
            try:
                given[sec][key] = _parse_value(table[key], raw)
            except (ValueError, TypeError) as exc:
                raise ConfigError(
                    f"{where(sec, key)}: field '{sec}.{key}' expects {table[key].kind}, got {raw.strip()!r} ({exc})"
                ) from exc
    physics, numerics, defaulted = spec.resolve(preset, given["physics"], given["numerics"])
    out_dir = Path(cp["output"]["dir"].strip()) if cp.has_section("output") and "dir" in cp["output"] else Path("out") / sid
    return ScenarioConfig(sid, preset, physics, numerics, out_dir, name, defaulted)


def check_params(sid: str, table: dict, values: dict, section: str):
    """Apply every constraint; the message names the field and the rule."""
    for key, val in values.items():
        p = table[key]
        if p.check is not None:
            ok = False
            try:
                ok = bool(p.check(val))
            except (TypeError, ValueError):
                ok = False
            if not ok:
                raise ConfigError(
                    f"field '{section}.{key}' = {format_value(val)} violates constraint {p.rule} (scenario '{sid}')"
                )
