"""SNR-sweep experiment driver and results emitters."""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .array_channel import NoiseModel
from .codebook import StagePlan
from .engine import PointSamples, scheme_key, simulate_point
from .schemes import RaceConfig, SwitchTable, calibrate_switch_table, select_scheme

KINDS = ("fixed", "race", "switch")
CSV_COLUMNS = ["scheme", "snr_db", "pee", "pee_ci95", "avg_measurements",
               "avg_feedback_bits", "avg_alpha_mse", "trials"]


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SchemeSpec:
    name: str
    kind: str
    params: dict = field(default_factory=dict, hash=False)


@dataclass(frozen=True)
class ExperimentConfig:
    n_antennas: int
    snr_grid_db: tuple[float, ...]
    trials_per_point: int
    schemes: tuple[SchemeSpec, ...]
    master_seed: int = 0
    p_r: float = 1.0
    outage_threshold: float | None = None


def _sig6(x: float) -> float:
    return float(f"{x:.6g}")


@dataclass(frozen=True)
class MetricsRow:
    scheme: str
    snr_db: float
    pee: float
    pee_ci95: float
    avg_measurements: float
    avg_feedback_bits: float
    avg_alpha_mse: float
    trials: int
    pee_given_gain: float | None = None


@dataclass
class MetricsTable:
    rows: list[MetricsRow]

    def __len__(self) -> int:
        return len(self.rows)

    def select(self, scheme: str) -> list[MetricsRow]:
        return [r for r in self.rows if r.scheme == scheme]


def _require(cond: bool, path: str, msg: str) -> None:
    if not cond:
        raise ConfigError(f"{path}: {msg}")


def _k_vector(params: dict, path: str, n: int, key: str = "k_vector") -> tuple[int, ...]:
    kv = params.get(key)
    _require(isinstance(kv, list) and kv and all(isinstance(k, int) for k in kv),
             f"{path}.{key}", "must be a non-empty list of integers")
    try:
        StagePlan(kv, n)
    except ValueError as exc:
        raise ConfigError(f"{path}.{key}: {exc}") from None
    return tuple(kv)


def validate_scheme(spec: SchemeSpec, n: int, path: str) -> None:
    p = spec.params
    _require(spec.kind in KINDS, f"{path}.kind", f"must be one of {KINDS}")
    if spec.kind in ("fixed", "race"):
        _k_vector(p, path, n)
    if spec.kind == "race":
        gamma = p.get("gamma")
        _require(isinstance(gamma, (int, float)) and 0 < gamma <= 1,
                 f"{path}.gamma", "must be in (0, 1]")
        m_max = p.get("m_max")
        _require(isinstance(m_max, int), f"{path}.m_max", "must be an integer")
        try:
            RaceConfig(gamma, m_max, StagePlan(p["k_vector"], n))
        except ValueError as exc:
            raise ConfigError(f"{path}.m_max: {exc}") from None
    if spec.kind == "switch":
        if "table" in p:
            try:
                table = SwitchTable.from_json(json.dumps(p["table"]))
            except (ValueError, KeyError, TypeError) as exc:
                raise ConfigError(f"{path}.table: {exc}") from None
            _require(bool(table.entries), f"{path}.table", "must be non-empty")
            for i, (_, kv) in enumerate(table.entries):
                _require(math.prod(kv) == n, f"{path}.table[{i}].k_vector",
                         f"product must equal N={n}")
        else:
            cands = p.get("candidates")
            _require(isinstance(cands, list) and cands, f"{path}.candidates",
                     "must be a non-empty list of k-vectors (or give 'table')")
            for i in range(len(cands)):
                _k_vector({"k": cands[i]}, f"{path}.candidates[{i}]", n, key="k")
            gamma = p.get("gamma")
            _require(isinstance(gamma, (int, float)) and 0 < gamma <= 1,
                     f"{path}.gamma", "must be in (0, 1]")
            trials = p.get("calibration_trials", 1000)
            _require(isinstance(trials, int) and trials >= 100,
                     f"{path}.calibration_trials", "must be an integer >= 100")


def config_from_dict(doc: dict) -> ExperimentConfig:
    _require(isinstance(doc, dict), "<root>", "must be a JSON object")
    n = doc.get("n_antennas")
    _require(isinstance(n, int) and n >= 2, "n_antennas", "must be an integer >= 2")
    grid = doc.get("snr_grid_db")
    _require(isinstance(grid, list) and grid and all(isinstance(x, (int, float)) for x in grid),
             "snr_grid_db", "must be a non-empty list of numbers")
    trials = doc.get("trials_per_point")
    _require(isinstance(trials, int) and trials >= 1, "trials_per_point",
             "must be an integer >= 1")
    seed = doc.get("master_seed", 0)
    _require(isinstance(seed, int) and seed >= 0, "master_seed", "must be a non-negative integer")
    p_r = doc.get("p_r", 1.0)
    _require(isinstance(p_r, (int, float)) and p_r > 0, "p_r", "must be positive")
    outage = doc.get("outage_threshold")
    _require(outage is None or (isinstance(outage, (int, float)) and outage >= 0),
             "outage_threshold", "must be a non-negative number or null")
    raw = doc.get("schemes")
    _require(isinstance(raw, list) and raw, "schemes", "must be a non-empty list")
    specs = []
    for i, s in enumerate(raw):
        path = f"schemes[{i}]"
        _require(isinstance(s, dict), path, "must be an object")
        name = s.get("name")
        _require(isinstance(name, str) and name, f"{path}.name", "must be a non-empty string")
        params = {k: v for k, v in s.items() if k not in ("name", "kind")}
        spec = SchemeSpec(name, s.get("kind"), params)
        validate_scheme(spec, n, path)
        specs.append(spec)
    names = [s.name for s in specs]
    dup = sorted({x for x in names if names.count(x) > 1})
    _require(not dup, "schemes", f"duplicate scheme names {dup}")
    return ExperimentConfig(n, tuple(float(x) for x in grid), trials, tuple(specs),
                            seed, float(p_r), outage)


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return config_from_dict(doc)


def resolve_switch(spec: SchemeSpec, cfg: ExperimentConfig) -> SchemeSpec:
    """Replace a candidates-style switch scheme by its calibrated table."""
    if spec.kind != "switch" or "table" in spec.params:
        return spec
    p = spec.params
    plans = [StagePlan(kv, cfg.n_antennas) for kv in p["candidates"]]
    grid = p.get("snr_grid_db", list(cfg.snr_grid_db))
    rng = np.random.default_rng(p.get("calibration_seed", cfg.master_seed))
    table = calibrate_switch_table(plans, grid, p["gamma"], p.get("calibration_trials", 1000),
                                   rng, cfg.p_r)
    return SchemeSpec(spec.name, "switch", {**p, "table": json.loads(table.to_json())})


def simulate_scheme(spec: SchemeSpec, n: int, snr_db: float, trials: int, *, seed: int,
                    point: int = 0, p_r: float = 1.0, backend: str | None = None) -> PointSamples:
    noise = NoiseModel.from_snr_db(snr_db, p_r)
    p = spec.params
    key = scheme_key(spec.name)
    common = dict(master_seed=seed, key=key, point=point, backend=backend)
    if spec.kind == "fixed":
        return simulate_point(StagePlan(p["k_vector"], n), noise, trials, adaptive=False, **common)
    if spec.kind == "race":
        return simulate_point(StagePlan(p["k_vector"], n), noise, trials, adaptive=True,
                              gamma=p["gamma"], m_max=p["m_max"], **common)
    if spec.kind == "switch":
        if "table" not in p:
            raise ValueError("switch scheme needs a calibrated table; call resolve_switch first")
        plan = select_scheme(SwitchTable.from_json(json.dumps(p["table"])), snr_db)
        return simulate_point(plan, noise, trials, adaptive=False, **common)
    raise ValueError(f"unknown scheme kind {spec.kind!r}")


def summarize(name: str, snr_db: float, samples: PointSamples,
              outage_threshold: float | None = None) -> MetricsRow:
    n = len(samples)
    success = samples.success
    pee = 1.0 - float(success.mean())
    ci = 1.96 * math.sqrt(pee * (1.0 - pee) / n)
    mse = float(np.mean(np.abs(samples.alpha_hat - samples.alpha) ** 2))
    cond = None
    if outage_threshold is not None:
        mask = np.abs(samples.alpha) ** 2 > outage_threshold
        cond = _sig6(1.0 - float(success[mask].mean())) if mask.any() else float("nan")
    return MetricsRow(name, _sig6(snr_db), _sig6(pee), _sig6(ci),
                      _sig6(float(samples.measurements.mean())),
                      _sig6(float(samples.feedback_bits.mean())), _sig6(mse), n, cond)


def run_point(spec: SchemeSpec, snr_db: float, trials: int, seed: int, *, n_antennas: int,
              point: int = 0, p_r: float = 1.0, outage_threshold: float | None = None,
              backend: str | None = None) -> MetricsRow:
    samples = simulate_scheme(spec, n_antennas, snr_db, trials, seed=seed, point=point,
                              p_r=p_r, backend=backend)
    return summarize(spec.name, snr_db, samples, outage_threshold)


def _task(args):
    spec, cfg, gi, snr = args
    return run_point(spec, snr, cfg.trials_per_point, cfg.master_seed, n_antennas=cfg.n_antennas,
                     point=gi, p_r=cfg.p_r, outage_threshold=cfg.outage_threshold)


def run_sweep(cfg: ExperimentConfig, workers: int = 1) -> MetricsTable:
    """Every scheme at every grid point, rows ordered scheme-major."""
    specs = [resolve_switch(s, cfg) for s in cfg.schemes]
    tasks = [(spec, cfg, gi, snr) for spec in specs for gi, snr in enumerate(cfg.snr_grid_db)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_task, tasks))
    else:
        rows = [_task(t) for t in tasks]
    return MetricsTable(rows)


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def _columns(table: MetricsTable) -> list[str]:
    if any(r.pee_given_gain is not None for r in table.rows):
        return CSV_COLUMNS + ["pee_given_gain"]
    return list(CSV_COLUMNS)


def table_to_csv(table: MetricsTable) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    cols = _columns(table)
    writer.writerow(cols)
    for row in table.rows:
        writer.writerow([_fmt(getattr(row, c)) for c in cols])
    return buf.getvalue()


def table_to_json(table: MetricsTable) -> str:
    cols = _columns(table)
    return json.dumps([{c: getattr(r, c) for c in cols} for r in table.rows], indent=2)


def table_from_json(text: str) -> MetricsTable:
    return MetricsTable([MetricsRow(**obj) for obj in json.loads(text)])


def table_from_csv(text: str) -> MetricsTable:
    rows = []
    for rec in csv.DictReader(io.StringIO(text)):
        rows.append(MetricsRow(
            rec["scheme"], float(rec["snr_db"]), float(rec["pee"]), float(rec["pee_ci95"]),
            float(rec["avg_measurements"]), float(rec["avg_feedback_bits"]),
            float(rec["avg_alpha_mse"]), int(rec["trials"]),
            float(rec["pee_given_gain"]) if rec.get("pee_given_gain") else None))
    return MetricsTable(rows)


def emit_results(table: MetricsTable, fmt: str, path) -> Path:
    if not table.rows:
        raise ValueError("refusing to write an empty results table")
    if fmt == "csv":
        text = table_to_csv(table)
    elif fmt == "json":
        text = table_to_json(table) + "\n"
    else:
        raise ValueError(f"unknown format {fmt!r}")
    path = Path(path)
    try:
        path.write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write results to {path}: {exc.strerror or exc}") from exc
    return path
