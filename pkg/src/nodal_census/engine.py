"""Ensemble orchestration: seeds, workers, persistence, and report assembly.

A run directory holds `manifest.json` (config echo, config hash, version),
`realizations/#####.csv` (the pinned per-domain tables), `realizations/
#####.json` (per-realization sidecars carrying the table checksum and the
numbers the aggregator folds), `report.json`, and the CSV exports.  The
report payload is a pure fold of the per-realization sidecars sorted by
index, so it is byte-identical across execution orders, worker counts, and
fresh-vs-resumed runs; wall-clock numbers live only under the "timing" key.

The config hash deliberately excludes `output_dir`: it identifies what was
computed, not where it landed, which is what both resume validation and the
cross-directory determinism contract need.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .grids import GridSpec, LatLongSphere, PlanarWindow, Torus, grid_from_dict
from .io import (
    canonical_json,
    domain_table_csv,
    file_sha256,
    fnv1a64,
    joint_csv,
    ns_csv,
    parse_float_token,
    psi_csv,
    read_json,
    sandwich_csv,
    text_sha256,
    write_field,
    write_json,
)
from .nodal import (
    default_center,
    domain_distance_extrema,
    label_domains,
    measure_domains,
    perturbation_stability,
)
from .sampler import (
    PlaneWave2D,
    RngStream,
    SpectralModel,
    build_plane_wave_basis,
    covariance_probe_means,
    helmholtz_residual,
    model_from_dict,
    sample_field,
    spherical_laplacian_residual,
)
from .specfn import faber_krahn_floor
from .stats import EmpiricalCdf, NsEstimate, SandwichVerdict, _ball_volume, sandwich_check_many

__all__ = [
    "CHECK_NAMES",
    "EnsembleConfig",
    "EnsembleFailure",
    "EnsembleReport",
    "run_ensemble",
    "resume_ensemble",
    "worker_count",
]

ENGINE_VERSION = 1
CHECK_NAMES = ("covariance", "faber_krahn", "helmholtz", "perturbation", "sandwich")
DEFAULT_SANDWICH_GEOMETRIES = ((5.0, 15.0), (8.0, 20.0))
COVARIANCE_LAGS = (1.0, 2.4048, 5.0)
PERTURBATION_B = (1e-3, 5e-4)
FK_MARGIN = 0.10
# Direction fields for the perturbation check draw from streams disjoint
# from the realization streams (which are the plain indices 0..M-1).
PERTURBATION_STREAM_BASE = 2**32

# Test hook: when set, called with the realization index before sampling;
# raising simulates a worker failure.
_TEST_FAILURE_HOOK = None


class EnsembleFailure(RuntimeError):
    """Raised when the ensemble cannot produce a trustworthy report."""


@dataclass
class EnsembleConfig:
    model: SpectralModel
    grid: GridSpec
    realizations: int
    master_seed: int
    radii: tuple = ()
    thresholds: tuple = ()
    checks: tuple = ()
    output_dir: str = ""
    psi_radius: float | None = None
    sandwich_geometries: tuple = DEFAULT_SANDWICH_GEOMETRIES
    keep_fields: bool = False

    def validate(self) -> None:
        if self.realizations < 1:
            raise ValueError("need at least one realization")
        if not (0 <= self.master_seed < 2**64):
            raise ValueError("master seed must fit in 64 bits")
        for name in self.checks:
            if name not in CHECK_NAMES:
                raise ValueError(f"unknown check {name!r}")
        if len(set(self.checks)) != len(self.checks):
            raise ValueError("duplicate check names")
        thr = [parse_float_token(t) for t in self.thresholds]
        if any(b <= a for a, b in zip(thr, thr[1:])):
            raise ValueError("thresholds must be strictly increasing")
        sphere = isinstance(self.grid, LatLongSphere)
        if sphere:
            if self.radii:
                raise ValueError("ball-count radii apply to planar and torus grids only")
            if self.psi_radius is not None:
                raise ValueError("psi_radius applies to planar and torus grids only")
            for name in ("covariance", "faber_krahn", "sandwich"):
                if name in self.checks:
                    raise ValueError(f"check {name!r} applies to planar grids only")
            return
        for radius in self.radii:
            if radius <= 0:
                raise ValueError("radii must be positive")
            self._require_ball_fits(radius, "ball-count radius")
        if self.psi_radius is not None:
            if self.psi_radius <= 0:
                raise ValueError("psi_radius must be positive")
            self._require_ball_fits(self.psi_radius, "psi_radius")
        if "sandwich" in self.checks:
            if not self.thresholds:
                raise ValueError("the sandwich check needs thresholds")
            for r, R in self.sandwich_geometries:
                if not 0 < r < R:
                    raise ValueError(f"need 0 < r < R in sandwich geometry ({r}, {R})")
                self._require_ball_fits(R + r, "sandwich reach R+r")
        if "covariance" in self.checks:
            if not isinstance(self.grid, PlanarWindow):
                raise ValueError("the covariance check runs on planar windows")
            if self.grid.side < 5.0 * max(COVARIANCE_LAGS):
                raise ValueError("window too small for the covariance probe set")
        if "faber_krahn" in self.checks and not isinstance(self.grid, PlanarWindow):
            raise ValueError("the minimum-area check runs on planar windows")
        if "sandwich" in self.checks and self.grid_dim() != 2:
            raise ValueError("the sandwich check runs on 2-D grids")

    def grid_dim(self) -> int:
        if isinstance(self.grid, Torus):
            return self.grid.dim
        return 2

    def _require_ball_fits(self, radius: float, what: str) -> None:
        side = self.grid.side
        if isinstance(self.grid, Torus):
            if radius > 0.5 * side + 1e-9:
                raise ValueError(f"{what} {radius} exceeds half the torus side")
        else:
            if 2.0 * radius > side + 1e-9:
                raise ValueError(f"{what} {radius} does not fit in the window")

    def effective_psi_radius(self) -> float | None:
        if isinstance(self.grid, LatLongSphere):
            return None
        if self.psi_radius is not None:
            return self.psi_radius
        return 0.5 * self.grid.side - 2.0 * self.grid.spacing

    def to_dict(self) -> dict:
        # output_dir intentionally omitted; see the module docstring.
        return {
            "model": self.model.to_dict(),
            "grid": self.grid.to_dict(),
            "realizations": self.realizations,
            "master_seed": self.master_seed,
            "radii": [float(r) for r in self.radii],
            "thresholds": [float(parse_float_token(t)) for t in self.thresholds],
            "checks": sorted(self.checks),
            "psi_radius": self.psi_radius,
            "sandwich_geometries": [[float(r), float(R)] for r, R in self.sandwich_geometries],
            "keep_fields": self.keep_fields,
        }

    @classmethod
    def from_dict(cls, d: dict, output_dir: str = "") -> "EnsembleConfig":
        return cls(
            model=model_from_dict(d["model"]),
            grid=grid_from_dict(d["grid"]),
            realizations=int(d["realizations"]),
            master_seed=int(d["master_seed"]),
            radii=tuple(float(r) for r in d.get("radii", [])),
            thresholds=tuple(parse_float_token(t) for t in d.get("thresholds", [])),
            checks=tuple(sorted(d.get("checks", []))),
            output_dir=output_dir or d.get("output_dir", ""),
            psi_radius=d.get("psi_radius"),
            sandwich_geometries=tuple(
                (float(r), float(R)) for r, R in d.get("sandwich_geometries", DEFAULT_SANDWICH_GEOMETRIES)
            ),
            keep_fields=bool(d.get("keep_fields", False)),
        )

    def config_hash(self) -> str:
        return f"{fnv1a64(canonical_json(self.to_dict())):016x}"


@dataclass
class EnsembleReport:
    config: EnsembleConfig
    report: dict
    psi: EmpiricalCdf
    boundary: EmpiricalCdf
    ns: NsEstimate | None
    output_dir: Path


def worker_count() -> int:
    env = os.environ.get("NODAL_CENSUS_THREADS")
    if env is not None:
        n = int(env)
        if n < 1:
            raise ValueError("NODAL_CENSUS_THREADS must be >= 1")
        return n
    return os.cpu_count() or 1


def _realization_paths(outdir: Path, index: int) -> tuple[Path, Path]:
    base = outdir / "realizations"
    return base / f"{index:05d}.csv", base / f"{index:05d}.json"


def _reference_volume(grid) -> float:
    if isinstance(grid, LatLongSphere):
        return 4.0 * math.pi
    if isinstance(grid, Torus):
        return grid.side**grid.dim
    return grid.side**2


def _run_checks(config: EnsembleConfig, sample, dec, index: int, basis) -> dict:
    out = {}
    if "faber_krahn" in config.checks:
        bound = (1.0 - FK_MARGIN) * faber_krahn_floor(dec.labels.ndim)
        interior = [rec for rec in dec.domains if not rec.touches_window]
        out["faber_krahn"] = {
            "min_interior_area": min((rec.area for rec in interior), default=None),
            "violations": [[rec.label, rec.area] for rec in interior if rec.area < bound],
        }
    if "sandwich" in config.checks:
        thresholds = [parse_float_token(t) for t in config.thresholds]
        verdicts = sandwich_check_many(dec, config.sandwich_geometries, thresholds)
        out["sandwich"] = {"verdicts": [v.to_dict() for v in verdicts]}
    if "helmholtz" in config.checks:
        if isinstance(config.grid, LatLongSphere):
            residual = spherical_laplacian_residual(sample)
        else:
            residual = helmholtz_residual(sample)
        out["helmholtz"] = {"residual": float(residual)}
    if "covariance" in config.checks:
        probe = covariance_probe_means(sample, COVARIANCE_LAGS)
        out["covariance"] = {"lags": list(COVARIANCE_LAGS), "probe_means": probe.tolist()}
    if "perturbation" in config.checks:
        direction = sample_field(
            config.model, config.grid,
            RngStream(config.master_seed, PERTURBATION_STREAM_BASE + index),
            **({"basis": basis} if basis is not None else {}),
        )
        medians = []
        for b in PERTURBATION_B:
            matches = perturbation_stability(sample, direction, b)
            deltas = [m[2] for m in matches]
            medians.append(float(np.median(deltas)) if deltas else None)
        ratio = None
        if medians[0] and medians[1]:
            ratio = medians[0] / medians[1]
        out["perturbation"] = {"b": list(PERTURBATION_B), "medians": medians, "ratio": ratio}
    return out


def _realize(config: EnsembleConfig, index: int, basis) -> tuple[str, dict]:
    if _TEST_FAILURE_HOOK is not None:
        _TEST_FAILURE_HOOK(index)
    stream = RngStream(config.master_seed, index)
    kw = {"basis": basis} if basis is not None else {}
    sample = sample_field(config.model, config.grid, stream, **kw)
    dec = label_domains(sample)
    measure_domains(dec)
    center = default_center(config.grid)
    _, dmax = domain_distance_extrema(dec, center)
    payload = {
        "n_domains": dec.n_domains,
        "areas": dec.areas().tolist(),
        "perimeters": [rec.perimeter for rec in dec.domains],
        "dmax": dmax.tolist(),
        "touches": [rec.touches_window for rec in dec.domains],
        "nodal_length": float(dec.total_nodal_length),
        "checks": _run_checks(config, sample, dec, index, basis),
    }
    csv_text = domain_table_csv(dec)
    if config.keep_fields:
        fields_dir = Path(config.output_dir) / "fields"
        fields_dir.mkdir(parents=True, exist_ok=True)
        write_field(sample, fields_dir / f"{index:05d}.ncfs")
    return csv_text, payload


def _persist(outdir: Path, config: EnsembleConfig, index: int, csv_text: str, payload: dict) -> None:
    csv_path, json_path = _realization_paths(outdir, index)
    with open(csv_path, "w", newline="\n") as fh:
        fh.write(csv_text)
    sidecar = {
        "index": index,
        "master_seed": config.master_seed,
        "csv_sha256": text_sha256(csv_text),
        "payload": payload,
    }
    write_json(json_path, sidecar)


def _execute(config: EnsembleConfig, outdir: Path, reuse: dict) -> tuple[dict, list]:
    basis = None
    if isinstance(config.model, PlaneWave2D):
        basis = build_plane_wave_basis(config.grid)

    def run_one(index: int):
        if index in reuse:
            return index, reuse[index], None
        try:
            csv_text, payload = _realize(config, index, basis)
            _persist(outdir, config, index, csv_text, payload)
            return index, payload, None
        except Exception as exc:  # noqa: BLE001 - failure isolation contract
            return index, None, f"{type(exc).__name__}: {exc}"

    indices = range(config.realizations)
    workers = worker_count()
    if workers == 1:
        outcomes = [run_one(i) for i in indices]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(run_one, indices))
    payloads = {i: p for i, p, err in outcomes if err is None}
    failures = sorted((i, err) for i, p, err in outcomes if err is not None)
    if len(failures) > 0.10 * config.realizations:
        lines = "; ".join(f"#{i}: {err}" for i, err in failures[:5])
        raise EnsembleFailure(
            f"{len(failures)}/{config.realizations} realizations failed ({lines})"
        )
    return payloads, failures


def _mean_stderr(values) -> tuple[float, float]:
    arr = np.asarray(values, dtype=np.float64)
    err = float(arr.std(ddof=1) / math.sqrt(arr.size)) if arr.size > 1 else 0.0
    return float(arr.mean()), err


def _summarize_checks(config: EnsembleConfig, payloads: list[dict]) -> dict:
    out = {}
    if "faber_krahn" in config.checks:
        mins = [p["checks"]["faber_krahn"]["min_interior_area"] for p in payloads]
        mins = [m for m in mins if m is not None]
        violations = []
        for p in payloads:
            for label, area in p["checks"]["faber_krahn"]["violations"]:
                violations.append([config.master_seed, p["index"], label, area])
        out["faber_krahn"] = {
            "floor": faber_krahn_floor(config.grid_dim()),
            "margin": FK_MARGIN,
            "min_area": min(mins) if mins else None,
            "violations": violations,
        }
    if "sandwich" in config.checks:
        total = holding = 0
        for p in payloads:
            for v in p["checks"]["sandwich"]["verdicts"]:
                total += 1
                holding += bool(v["holds"])
        out["sandwich"] = {"total": total, "holding": holding, "all_hold": holding == total}
    if "helmholtz" in config.checks:
        mean, err = _mean_stderr([p["checks"]["helmholtz"]["residual"] for p in payloads])
        out["helmholtz"] = {"mean_residual": mean, "stderr": err}
    if "covariance" in config.checks:
        probe = np.array([p["checks"]["covariance"]["probe_means"] for p in payloads])
        means = probe.mean(axis=0)
        errs = (
            probe.std(axis=0, ddof=1) / math.sqrt(probe.shape[0])
            if probe.shape[0] > 1
            else np.zeros(probe.shape[1])
        )
        out["covariance"] = {
            "lags": list(COVARIANCE_LAGS),
            "means": means.tolist(),
            "stderrs": errs.tolist(),
        }
    if "perturbation" in config.checks:
        rows = [
            p["checks"]["perturbation"]["medians"]
            for p in payloads
            if all(m is not None for m in p["checks"]["perturbation"]["medians"])
        ]
        ratios = [
            p["checks"]["perturbation"]["ratio"]
            for p in payloads
            if p["checks"]["perturbation"]["ratio"] is not None
        ]
        rmean, rerr = _mean_stderr(ratios) if ratios else (None, None)
        out["perturbation"] = {
            "b": list(PERTURBATION_B),
            "median_means": np.array(rows).mean(axis=0).tolist() if rows else None,
            "ratio_mean": rmean,
            "ratio_stderr": rerr,
        }
    return out


def _assemble(
    config: EnsembleConfig, outdir: Path, payloads: dict, failures: list, wall: float
) -> EnsembleReport:
    if not payloads:
        raise EnsembleFailure("no realizations completed")
    ordered = [dict(payloads[i], index=i) for i in sorted(payloads)]
    psi_r = config.effective_psi_radius()
    areas_parts, perim_parts, pairs = [], [], []
    for p in ordered:
        areas = np.asarray(p["areas"], dtype=np.float64)
        perims = np.asarray(p["perimeters"], dtype=np.float64)
        dmax = np.asarray(p["dmax"], dtype=np.float64)
        keep = ~np.asarray(p["touches"], dtype=bool)
        if psi_r is not None:
            keep &= dmax < psi_r
        areas_parts.append(areas[keep])
        perim_parts.append(perims[keep])
        pairs.extend(zip(areas[keep].tolist(), perims[keep].tolist()))
    all_areas = np.concatenate(areas_parts)
    if all_areas.size == 0:
        raise EnsembleFailure("no interior domains in any realization")
    psi = EmpiricalCdf.from_values(all_areas)
    boundary = EmpiricalCdf.from_values(np.concatenate(perim_parts))
    largest_jump = float(np.max(np.diff(np.concatenate([[0.0], psi.fractions]))))

    ns = None
    if config.radii and not isinstance(config.grid, LatLongSphere):
        dim = config.grid_dim()
        radii = sorted(float(r) for r in config.radii)
        ratios = np.empty((len(ordered), len(radii)))
        for i, p in enumerate(ordered):
            dmax = np.asarray(p["dmax"], dtype=np.float64)
            for j, radius in enumerate(radii):
                ratios[i, j] = np.count_nonzero(dmax < radius) / _ball_volume(dim, radius)
        means = ratios.mean(axis=0)
        errs = (
            ratios.std(axis=0, ddof=1) / math.sqrt(len(ordered))
            if len(ordered) > 1
            else np.zeros(len(radii))
        )
        ns = NsEstimate(
            radii=radii,
            ratio_means=means.tolist(),
            ratio_stderrs=errs.tolist(),
            pooled=float(means[-1]),
            pooled_stderr=float(errs[-1]),
        )

    length_mean, length_err = _mean_stderr(
        [p["nodal_length"] / _reference_volume(config.grid) for p in ordered]
    )
    report = {
        "version": ENGINE_VERSION,
        "config": config.to_dict(),
        "config_hash": config.config_hash(),
        "realizations_completed": len(ordered),
        "failures": [{"index": i, "error": err} for i, err in failures],
        "psi": dict(psi.to_dict(), largest_jump=largest_jump, window_radius=psi_r),
        "boundary": boundary.to_dict(),
        "ns": ns.to_dict() if ns is not None else None,
        "nodal_length_density": {"mean": length_mean, "stderr": length_err},
        "checks": _summarize_checks(config, ordered),
        "timing": {
            "wall_seconds": wall,
            "mean_seconds_per_realization": wall / max(len(ordered), 1),
        },
    }
    write_json(outdir / "report.json", report)
    with open(outdir / "psi.csv", "w", newline="\n") as fh:
        fh.write(psi_csv(psi))
    with open(outdir / "joint.csv", "w", newline="\n") as fh:
        fh.write(joint_csv(sorted(pairs)))
    if ns is not None:
        with open(outdir / "ns.csv", "w", newline="\n") as fh:
            fh.write(ns_csv(ns))
    if "sandwich" in config.checks:
        verdicts = [
            SandwichVerdict(
                r=v["r"], R=v["R"], t=parse_float_token(v["t"]),
                lower=v["lower"], middle=v["middle"], upper=v["upper"],
                holds=v["holds"],
            )
            for p in ordered
            for v in p["checks"]["sandwich"]["verdicts"]
        ]
        with open(outdir / "sandwich.csv", "w", newline="\n") as fh:
            fh.write(sandwich_csv(verdicts))
    return EnsembleReport(
        config=config, report=report, psi=psi, boundary=boundary, ns=ns, output_dir=outdir
    )


def run_ensemble(config: EnsembleConfig) -> EnsembleReport:
    """Fresh run: sample every realization, persist tables, assemble the report."""
    config.validate()
    outdir = Path(config.output_dir)
    (outdir / "realizations").mkdir(parents=True, exist_ok=True)
    write_json(
        outdir / "manifest.json",
        {"version": ENGINE_VERSION, "config": config.to_dict(), "config_hash": config.config_hash()},
    )
    start = time.monotonic()
    payloads, failures = _execute(config, outdir, reuse={})
    return _assemble(config, outdir, payloads, failures, time.monotonic() - start)


def resume_ensemble(config: EnsembleConfig, partial_dir) -> EnsembleReport:
    """Complete a partial run: recompute only missing or corrupted realizations.

    The partial directory must carry a manifest whose config hash matches;
    a sidecar whose stored checksum disagrees with its table is treated as
    missing, so tampered realizations are recomputed.
    """
    config.validate()
    outdir = Path(partial_dir)
    manifest_path = outdir / "manifest.json"
    if not manifest_path.exists():
        raise ValueError(f"{outdir} has no manifest.json to resume from")
    manifest = read_json(manifest_path)
    if manifest.get("config_hash") != config.config_hash():
        raise ValueError(
            f"config hash mismatch: manifest has {manifest.get('config_hash')}, "
            f"resume config hashes to {config.config_hash()}"
        )
    reuse = {}
    for i in range(config.realizations):
        csv_path, json_path = _realization_paths(outdir, i)
        if not (csv_path.exists() and json_path.exists()):
            continue
        sidecar = read_json(json_path)
        if sidecar.get("index") != i:
            continue
        if sidecar.get("csv_sha256") != file_sha256(csv_path):
            continue
        reuse[i] = sidecar["payload"]
    start = time.monotonic()
    payloads, failures = _execute(config, outdir, reuse)
    return _assemble(config, outdir, payloads, failures, time.monotonic() - start)
