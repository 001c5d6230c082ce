"""Experiment harness: spec files, presets, seeded replicate sweeps, CSV output.

A spec file is YAML::

    name: density
    replicates: 50
    seed_base: 7
    series: false
    base:            # any SimConfig field, times in seconds
      model: point
      L: 1.0
      tau_m: 10
      tau_s: 10
    axes:            # Cartesian product; a list of such mappings is a union
      N: [50, 150, 300]

Durations are given as ``tau_m``/``tau_s`` (or ``tau_a`` for both) and are
converted to step counts of ``dt``.
"""
from __future__ import annotations

import csv
import itertools
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Optional

import numpy as np
import yaml

from .engine import ConfigError, SimConfig, run
from .metrics import Stats, SweepSummary

MASK64 = (1 << 64) - 1

RESULT_COLUMNS = ("run_id", "cell_id", "seed", "model", "boundary", "N", "L", "d_i", "v",
                  "omega", "sigma", "dt", "tau_m", "tau_s", "loss_p", "converged", "t_c_s",
                  "M", "M_alt", "distinct_final", "steps")
PARAM_COLUMNS = RESULT_COLUMNS[3:15]
SUMMARY_COLUMNS = ("cell_id",) + PARAM_COLUMNS + (
    "replicates", "converged_count", "nonconverged_count",
    "t_c_mean", "t_c_median", "t_c_q1", "t_c_q3",
    "M_mean", "M_median", "M_q1", "M_q3")

PARAM_KEYS = {"N", "L", "d_i", "model", "boundary", "v", "omega", "sigma", "dt", "tau_m",
              "tau_s", "tau_a", "body_radius", "loss_policy", "loss_p", "speak_phase",
              "max_steps", "series_every", "grid_margin"}
TOP_KEYS = {"name", "replicates", "seed_base", "series", "base", "axes"}
DEFAULT_TIMES = {"tau_m": 10.0, "tau_s": 10.0}
DEFAULT_REPLICATES = 200


class SpecError(ValueError):
    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("\n".join(self.problems))


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def run_seed(seed_base: int, cell: int, replicate: int) -> int:
    """SplitMix64 of ``seed_base + (cell << 32 | replicate)``.

    The finaliser is a bijection on 64-bit words, so distinct
    ``(cell, replicate)`` pairs below 2**32 never share a seed.
    """
    return splitmix64((seed_base + ((cell << 32) | replicate)) & MASK64)


def config_from_params(params: dict, seed: int = 0) -> SimConfig:
    """Build a SimConfig from a flat parameter mapping with times in seconds."""
    p = dict(params)
    unknown = sorted(set(p) - PARAM_KEYS)
    if unknown:
        raise ConfigError([f"unknown parameter {k!r}" for k in unknown])
    if "tau_a" in p:
        tau_a = p.pop("tau_a")
        p.setdefault("tau_m", tau_a)
        p.setdefault("tau_s", tau_a)
    for k, v in DEFAULT_TIMES.items():
        p.setdefault(k, v)
    if p.get("loss_p", 0) and "loss_policy" not in p:
        p["loss_policy"] = "iid"
    if "omega" in p and isinstance(p["omega"], str):
        p["omega"] = _parse_angle(p["omega"])
    return SimConfig.from_times(seed=seed, **p)


def _parse_angle(text: str) -> float:
    # accepts "pi/5" style values
    t = text.replace(" ", "")
    if t.startswith("pi/"):
        return math.pi / float(t[3:])
    if t == "pi":
        return math.pi
    return float(t)


@dataclass
class ExperimentSpec:
    base: dict
    axes: list[dict] = field(default_factory=lambda: [{}])
    replicates: int = DEFAULT_REPLICATES
    seed_base: int = 0
    series: bool = False
    name: str = "experiment"

    def cells(self) -> list[dict]:
        """Parameter mapping of every cell: union over axis blocks of Cartesian products."""
        out = []
        for block in self.axes:
            keys = list(block)
            for combo in itertools.product(*(block[k] for k in keys)):
                cell = dict(self.base)
                cell.update(zip(keys, combo))
                if "tau_a" in block:
                    cell.pop("tau_m", None)
                    cell.pop("tau_s", None)
                out.append(cell)
        return out

    def configs(self) -> list[SimConfig]:
        return [config_from_params(c) for c in self.cells()]

    def validate(self) -> None:
        problems = []
        if not isinstance(self.replicates, int) or self.replicates < 1:
            problems.append("replicates: must be a positive integer")
        if not isinstance(self.seed_base, int) or not 0 <= self.seed_base <= MASK64:
            problems.append("seed_base: must be an unsigned 64-bit integer")
        for k, cell in enumerate(self.cells()):
            try:
                config_from_params(cell)
            except ConfigError as exc:
                where = "base" if self.axes == [{}] else f"cell {k}"
                problems += [f"{where}: {p}" for p in exc.problems]
        if problems:
            raise SpecError(problems)

    def tasks(self) -> Iterator[tuple[int, int, int, SimConfig]]:
        for cell_id, cfg in enumerate(self.configs()):
            for rep in range(self.replicates):
                seed = run_seed(self.seed_base, cell_id, rep)
                yield cell_id * self.replicates + rep, cell_id, seed, cfg.replace(seed=seed)


def _key_lines(node, prefix="") -> dict[str, int]:
    lines = {}
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            name = f"{prefix}{k.value}"
            lines[name] = k.start_mark.line + 1
            lines.update(_key_lines(v, name + "."))
    elif isinstance(node, yaml.SequenceNode):
        for i, v in enumerate(node.value):
            lines.update(_key_lines(v, f"{prefix}{i}."))
    return lines


def resolve_seed_base(default: int = 0, override: Optional[int] = None) -> int:
    """``override`` if given, else ``NG_SEED_BASE`` from the environment, else ``default``."""
    if override is not None:
        return override
    if "NG_SEED_BASE" in os.environ:
        try:
            return int(os.environ["NG_SEED_BASE"], 0)
        except ValueError:
            raise SpecError([f"NG_SEED_BASE={os.environ['NG_SEED_BASE']!r} is not an integer"]) from None
    return default


def parse_spec(source, seed_override: Optional[int] = None) -> ExperimentSpec:
    """Read and validate a YAML spec file (path or text).

    ``NG_SEED_BASE`` in the environment overrides ``seed_base``; an explicit
    ``seed_override`` wins over both.
    """
    if isinstance(source, (str, os.PathLike)) and Path(source).exists():
        text = Path(source).read_text()
        label = str(source)
    else:
        text = str(source)
        label = "<spec>"
    try:
        node = yaml.compose(text)
        data = yaml.safe_load(text) or {}
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"line {mark.line + 1}, column {mark.column + 1}" if mark else "unknown position"
        raise SpecError([f"{label}: parse error at {where}: {getattr(exc, 'problem', exc)}"]) from exc
    if not isinstance(data, dict):
        raise SpecError([f"{label}: top level must be a mapping"])
    lines = _key_lines(node)

    def at(key):
        return f"{label}:{lines[key]}" if key in lines else label

    problems = [f"{at(k)}: unknown key {k!r}" for k in data if k not in TOP_KEYS]
    base = data.get("base") or {}
    if not isinstance(base, dict):
        problems.append(f"{at('base')}: base must be a mapping")
        base = {}
    problems += [f"{at('base.' + k)}: unknown parameter {k!r}" for k in base if k not in PARAM_KEYS]
    axes = data.get("axes") or {}
    blocks = axes if isinstance(axes, list) else [axes]
    for b, block in enumerate(blocks):
        prefix = f"axes.{b}." if isinstance(axes, list) else "axes."
        if not isinstance(block, dict):
            problems.append(f"{at(prefix.rstrip('.'))}: axes must map names to lists")
            continue
        for k, values in block.items():
            if k not in PARAM_KEYS:
                problems.append(f"{at(prefix + k)}: unknown parameter {k!r}")
            elif not isinstance(values, list) or not values:
                problems.append(f"{at(prefix + k)}: axis {k!r} needs a non-empty list")
    if problems:
        raise SpecError(problems)

    seed_base = resolve_seed_base(data.get("seed_base", 0), seed_override)
    spec = ExperimentSpec(
        base=base,
        axes=[dict(b) for b in blocks] or [{}],
        replicates=data.get("replicates", DEFAULT_REPLICATES),
        seed_base=seed_base,
        series=bool(data.get("series", False)),
        name=str(data.get("name", Path(label).stem if label != "<spec>" else "experiment")),
    )
    spec.validate()
    return spec


N_RANGE = [10, 20, 32, 50, 100, 143, 200, 300, 400, 500]

PRESETS = {
    # t_c(N) panels for tau_m, tau_s in [10, 50] s
    "fig2-grid": dict(
        base={"model": "point", "L": 1.0},
        axes=[{"tau_m": [10, 30, 50], "tau_s": [10, 30, 50], "N": N_RANGE}],
    ),
    # t_c(tau_s) at N = 300, tau_s in [1, 500] s
    "fig3-scaling": dict(
        base={"model": "point", "L": 1.0, "N": 300},
        axes=[{"tau_m": [10, 50], "tau_s": [1, 2, 5, 10, 20, 50, 100, 200, 500]}],
    ),
    # point vs embodied: tau_m = 50 s with varying tau_s, and tau_s = 10 s with varying tau_m
    "fig4-embodied": dict(
        base={"L": 1.0},
        axes=[{"model": ["point", "embodied"], "tau_m": [50], "tau_s": [10, 30, 50], "N": N_RANGE},
              {"model": ["point", "embodied"], "tau_s": [10], "tau_m": [10, 30], "N": N_RANGE}],
    ),
    # small arena, tau_s = tau_m = tau_a
    "fig6-small-arena": dict(
        base={"L": 0.45},
        axes=[{"model": ["point", "embodied"], "N": [5, 20, 35], "tau_a": [2.5, 5, 7.5]}],
    ),
}


def preset(name: str, replicates: Optional[int] = None, seed_base: int = 0) -> ExperimentSpec:
    if name not in PRESETS:
        raise SpecError([f"unknown preset {name!r}; choose from {sorted(PRESETS)}"])
    p = PRESETS[name]
    spec = ExperimentSpec(base=dict(p["base"]), axes=[dict(a) for a in p["axes"]],
                          replicates=replicates or DEFAULT_REPLICATES,
                          seed_base=seed_base, name=name)
    spec.validate()
    return spec


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".12g")
    return str(x)


def _run_task(task) -> tuple[list[str], Optional[list]]:
    run_id, cell_id, seed, cfg, series_dir = task
    res = run(cfg)
    row = [run_id, cell_id, seed, cfg.model, cfg.boundary, cfg.N, cfg.L, cfg.d_i, cfg.v,
           cfg.omega, cfg.sigma, cfg.dt, cfg.tau_m, cfg.tau_s, cfg.loss_p, res.converged,
           res.t_c if res.converged else "", res.M, res.M_alt, res.distinct_final, res.steps]
    if series_dir is not None:
        res.write_series(Path(series_dir) / f"run_{run_id}.csv")
    return [_fmt(x) for x in row]


def _completed_rows(path: Path, spec: ExperimentSpec) -> list[list[str]]:
    """Rows of the leading cells already fully present in a results file."""
    if not path.exists():
        return []
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != RESULT_COLUMNS:
        return []
    rows = rows[1:]
    keep = []
    expected = spec.tasks()
    for cell_start in range(0, len(rows), spec.replicates):
        block = rows[cell_start:cell_start + spec.replicates]
        if len(block) < spec.replicates:
            break
        want = [next(expected, None) for _ in block]
        if any(w is None or r[0] != str(w[0]) or r[2] != str(w[2]) for r, w in zip(block, want)):
            break
        keep += block
    return keep


def run_sweep(spec: ExperimentSpec, out_dir, jobs: int = 1, series: Optional[bool] = None) -> Path:
    """Run every (cell, replicate) and write ``results.csv`` in ``out_dir``.

    Rows are written in run order and flushed per cell; re-running over an
    interrupted output directory keeps the finished cells and resumes after
    them.  Non-converged runs are ordinary rows.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    want_series = spec.series if series is None else series
    series_dir = None
    if want_series:
        series_dir = out / "series"
        series_dir.mkdir(exist_ok=True)
    path = out / "results.csv"
    done = _completed_rows(path, spec)
    tasks = [(run_id, cell, seed, cfg, series_dir)
             for run_id, cell, seed, cfg in spec.tasks()][len(done):]

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RESULT_COLUMNS)
        writer.writerows(done)
        fh.flush()
        if jobs > 1:
            pool = ProcessPoolExecutor(max_workers=jobs)
            rows = pool.map(_run_task, tasks, chunksize=max(1, spec.replicates // jobs))
        else:
            pool = None
            rows = map(_run_task, tasks)
        try:
            for k, row in enumerate(rows, start=len(done)):
                writer.writerow(row)
                if (k + 1) % spec.replicates == 0:
                    fh.flush()
        finally:
            if pool is not None:
                pool.shutdown()
    return path


def summarize(results_csv, out_csv=None) -> list[SweepSummary]:
    """Per-cell median, quartiles and mean of t_c and M over converged runs."""
    with open(results_csv, newline="") as fh:
        rows = list(csv.DictReader(fh))
    cells: dict[int, list[dict]] = {}
    for r in rows:
        cells.setdefault(int(r["cell_id"]), []).append(r)
    summaries = []
    for cell_id in sorted(cells):
        group = cells[cell_id]
        ok = [r for r in group if r["converged"] == "1"]
        summaries.append(SweepSummary(
            cell_id=cell_id,
            params={k: group[0][k] for k in PARAM_COLUMNS},
            replicates=len(group),
            nonconverged=len(group) - len(ok),
            t_c=Stats.of([float(r["t_c_s"]) for r in ok]),
            M=Stats.of([float(r["M"]) for r in ok]),
        ))
    if out_csv is not None:
        write_summary(summaries, out_csv)
    return summaries


def write_summary(summaries: list[SweepSummary], path) -> None:
    def stats(s: Stats):
        return ["" if v is None else _fmt(v) for v in (s.mean, s.median, s.q1, s.q3)]

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SUMMARY_COLUMNS)
        for s in summaries:
            writer.writerow([s.cell_id, *(s.params[k] for k in PARAM_COLUMNS), s.replicates,
                             s.t_c.count, s.nonconverged, *stats(s.t_c), *stats(s.M)])
