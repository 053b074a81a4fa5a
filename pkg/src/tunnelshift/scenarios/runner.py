"""Run a scenario: compute every table in memory, then write CSVs and the manifest.

CSV layout::

    # tunnelshift <version>
    # scenario: <id> (preset <preset>)
    # column: <name> | unit: <unit> | producer: <producer>     (one per column)
    # meta: <key> = <value>                                     (sorted by key)
    <comma separated column names>
    <rows, floats as %.15g, integers as %d>

Nothing time- or host-dependent goes into a CSV, so identical configs on the
same version give byte-identical files.  Timings live in the manifest only.
"""
from __future__ import annotations

import hashlib
import json
import os
import platform
import tempfile
import time
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .. import __version__
from ..numerics import NumericsError
from ..spin_model import GridTooShortError
from .catalog import Context, Table, get
from .config import ConfigError, ScenarioConfig, format_value


class ScenarioFailure(RuntimeError):
    """A numerical control failed; no CSV has been written."""


@dataclass
class RunManifest:
    scenario: str
    preset: str
    version: str
    config: dict
    seed: int
    outputs: list
    timings: dict
    warnings: list = field(default_factory=list)
    environment: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return "%d" % v
    if isinstance(v, (complex, np.complexfloating)):
        return "%.15g%+.15gj" % (v.real, v.imag)
    if isinstance(v, (float, np.floating)):
        return "%.15g" % v
    return format_value(v)


def render_csv(table: Table, scenario: str, preset: str) -> str:
    # the table name lives in the file name only, so two curves with equal data give equal files
    lines = [f"# tunnelshift {__version__}", f"# scenario: {scenario} (preset {preset})"]
    for c in table.columns:
        lines.append(f"# column: {c.name} | unit: {c.unit} | producer: {c.producer}")
    for k in sorted(table.meta):
        lines.append(f"# meta: {k} = {_fmt(table.meta[k])}")
    lines.append(",".join(c.name for c in table.columns))
    cols = []
    for arr in table.data:
        a = np.asarray(arr)
        if np.iscomplexobj(a):
            raise TypeError(f"table {table.name}: split complex columns into re/im")
        if a.dtype.kind in "iub":
            cols.append(["%d" % v for v in a.astype(np.int64)])
        else:
            cols.append(["%.15g" % v for v in a.astype(float)])
    lines.extend(",".join(row) for row in zip(*cols))
    return "\n".join(lines) + "\n"


def _atomic_write(path: Path, text: str):
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def compute(cfg: ScenarioConfig, seed: int = 0):
    """Run the scenario and return ``(tables, warnings)`` without touching disk."""
    spec = get(cfg.scenario)
    with warnings.catch_warnings(record=True) as rec:
        warnings.simplefilter("always")
        try:
            tables = spec.run(cfg, Context(seed))
        except ConfigError:
            raise
        except (NumericsError, GridTooShortError, FloatingPointError, OverflowError) as exc:
            raise ScenarioFailure(f"scenario '{cfg.scenario}': {type(exc).__name__}: {exc}") from exc
        except ValueError as exc:
            # a module type rejected a parameter combination
            raise ConfigError(f"scenario '{cfg.scenario}': {exc}") from exc
    seen, notes = set(), []
    for w in rec:
        key = (w.category.__name__, str(w.message))
        if key not in seen:
            seen.add(key)
            notes.append({"category": key[0], "message": key[1]})
    return tables, notes


def run(
    cfg: ScenarioConfig,
    out_dir: str | Path | None = None,
    seed: int | None = None,
    preset: str | None = None,
) -> RunManifest:
    """Compute the scenario, write one CSV per table and ``manifest.json``.

    All tables are computed before anything is written, so a numerical failure
    leaves the output directory untouched.  The manifest is written last.
    """
    if preset is not None and preset != cfg.preset:
        spec = get(cfg.scenario)
        if preset not in spec.presets:
            raise ConfigError(f"scenario '{cfg.scenario}' has no preset '{preset}' (available: {', '.join(spec.presets)})")
        cfg = cfg.with_preset(preset)
    seed = 0 if seed is None else int(seed)
    if not 0 <= seed < 2**64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    out = Path(out_dir) if out_dir is not None else cfg.output_dir

    t0 = time.perf_counter()
    tables, notes = compute(cfg, seed)
    t1 = time.perf_counter()
    texts = [(f"{t.name}.csv", render_csv(t, cfg.scenario, cfg.preset)) for t in tables]
    names = [n for n, _ in texts]
    if len(set(names)) != len(names):
        raise ScenarioFailure("duplicate table names")

    out.mkdir(parents=True, exist_ok=True)
    if not os.access(out, os.W_OK):
        raise OSError(f"output directory {out} is not writable")
    outputs = []
    for name, text in texts:
        _atomic_write(out / name, text)
        data = text.encode()
        outputs.append({"file": name, "sha256": hashlib.sha256(data).hexdigest(), "bytes": len(data)})
    t2 = time.perf_counter()
    manifest = RunManifest(
        scenario=cfg.scenario,
        preset=cfg.preset,
        version=__version__,
        config=cfg.echo(),
        seed=seed,
        outputs=outputs,
        timings={"compute_s": round(t1 - t0, 6), "write_s": round(t2 - t1, 6)},
        warnings=notes,
        environment={"python": platform.python_version(), "numpy": np.__version__},
    )
    _atomic_write(out / "manifest.json", manifest.to_json())
    return manifest
