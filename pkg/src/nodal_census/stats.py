"""Ensemble statistics over nodal decompositions.

The estimators here turn per-realization decompositions into the objects the
whole study is about: the empirical distribution of domain areas, the domain
density (count per unit ball volume), the integral-geometric sandwich bound,
the minimum-area floor check, and boundary-length distributions.

Counting conventions shared by everything in this module: a domain is
"interior" when it does not touch the window edge, and it lies "in B(c, R)"
when every one of its nodes does (strict inequality).  Both follow the node
membership rule of the decomposition layer, so estimator outputs are exact
functions of the labeled grid.

The sandwich bound deserves a note.  For a fixed decomposition, with centers
u running over grid nodes and K = #{lattice offsets m : |m h| < r},

    lower = (1/K) * sum over nodes u in B(c, R - r) of N(t; u, r)
    upper = (1/K) * sum over nodes u in B(c, R + r) of N*(t; u, r)

satisfy lower <= N(t; R) <= upper *exactly*, not just up to discretization:
any domain counted at some u in the lower sum lies in B(c, R), and can be
counted by at most K centers (pin one node x0 of the domain; every counting
center is within r of x0, and those centers form a translate of the offset
lattice).  Conversely every domain in B(c, R) is hit by at least the K
centers x0 + m h, all of which lie in B(c, R + r).  The verdicts are
therefore computed in integer arithmetic and must hold on every sample.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grids import LatLongSphere, PlanarWindow, Torus
from .nodal import (
    NodalDecomposition,
    default_center,
    domain_distance_extrema,
    measure_domains,
)
from .specfn import faber_krahn_floor

__all__ = [
    "EmpiricalCdf",
    "NsEstimate",
    "SandwichVerdict",
    "psi_estimate",
    "ns_constant_estimate",
    "sandwich_check",
    "sandwich_check_many",
    "faber_krahn_check",
    "boundary_and_joint_distributions",
    "ks_distance",
    "nodal_length_density",
]


@dataclass
class EmpiricalCdf:
    """Right-continuous step CDF with breakpoints at observed values."""

    breakpoints: np.ndarray
    fractions: np.ndarray
    total_count: int
    stderr: np.ndarray

    @classmethod
    def from_values(cls, values) -> "EmpiricalCdf":
        values = np.asarray(values, dtype=np.float64)
        if values.size == 0:
            raise ValueError("cannot build an empirical CDF from zero values")
        points, counts = np.unique(values, return_counts=True)
        frac = np.cumsum(counts) / values.size
        err = np.sqrt(frac * (1.0 - frac) / values.size)
        return cls(breakpoints=points, fractions=frac, total_count=int(values.size), stderr=err)

    def evaluate(self, t) -> np.ndarray | float:
        t_arr = np.asarray(t, dtype=np.float64)
        idx = np.searchsorted(self.breakpoints, t_arr, side="right") - 1
        out = np.where(idx >= 0, self.fractions[np.maximum(idx, 0)], 0.0)
        return float(out) if np.isscalar(t) else out

    def to_dict(self) -> dict:
        return {
            "breakpoints": self.breakpoints.tolist(),
            "fractions": self.fractions.tolist(),
            "total_count": self.total_count,
            "stderr": self.stderr.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EmpiricalCdf":
        return cls(
            breakpoints=np.asarray(d["breakpoints"], dtype=np.float64),
            fractions=np.asarray(d["fractions"], dtype=np.float64),
            total_count=int(d["total_count"]),
            stderr=np.asarray(d["stderr"], dtype=np.float64),
        )


@dataclass
class NsEstimate:
    radii: list[float]
    ratio_means: list[float]
    ratio_stderrs: list[float]
    pooled: float
    pooled_stderr: float

    def to_dict(self) -> dict:
        return {
            "radii": self.radii,
            "ratio_means": self.ratio_means,
            "ratio_stderrs": self.ratio_stderrs,
            "pooled": self.pooled,
            "pooled_stderr": self.pooled_stderr,
        }


@dataclass
class SandwichVerdict:
    r: float
    R: float
    t: float
    lower: float
    middle: int
    upper: float
    holds: bool

    def to_dict(self) -> dict:
        return {
            "r": self.r,
            "R": self.R,
            "t": self.t,
            "lower": self.lower,
            "middle": self.middle,
            "upper": self.upper,
            "holds": self.holds,
        }


def _check_same_ensemble(decs: list[NodalDecomposition]) -> None:
    if not decs:
        raise ValueError("need at least one decomposition")
    grid = decs[0].sample.grid
    model = decs[0].sample.model
    for dec in decs[1:]:
        if dec.sample.grid != grid or dec.sample.model != model:
            raise ValueError("decompositions come from different models or grids")


def _interior_in_ball(dec: NodalDecomposition, window):
    """Indices of interior domains, restricted to those fully in B(center, R)
    when a window is given."""
    keep = np.array([not d.touches_window for d in dec.domains])
    if window is not None:
        center, radius = window
        _, dmax = domain_distance_extrema(dec, center)
        keep &= dmax < radius
    return np.nonzero(keep)[0]


def psi_estimate(
    decs: list[NodalDecomposition], window=None, volume_scale: float = 1.0
) -> EmpiricalCdf:
    """Empirical CDF of (scaled) interior domain areas.

    `window` is an optional (center, R) ball restriction; `volume_scale`
    multiplies areas before binning (use l(l+1) to put degree-l spherical
    areas on the planar scale).
    """
    if volume_scale <= 0:
        raise ValueError("volume scale must be positive")
    _check_same_ensemble(decs)
    chunks = []
    for dec in decs:
        areas = dec.areas()
        idx = _interior_in_ball(dec, window)
        chunks.append(areas[idx])
    values = np.concatenate(chunks) * volume_scale
    if values.size == 0:
        raise ValueError("no interior domains in the requested window; nothing to estimate")
    return EmpiricalCdf.from_values(values)


def _ball_volume(dim: int, radius: float) -> float:
    if dim == 2:
        return math.pi * radius * radius
    return 4.0 * math.pi * radius**3 / 3.0


def ns_constant_estimate(
    decs: list[NodalDecomposition], radii, center=None
) -> NsEstimate:
    """Domain density: mean of N(F; R) / Vol B(R) per radius.

    The pooled estimate is the largest-radius mean (the best-converged one);
    its standard error comes from realization scatter.
    """
    _check_same_ensemble(decs)
    radii = sorted(float(r) for r in radii)
    if not radii:
        raise ValueError("need at least one radius")
    grid = decs[0].sample.grid
    if isinstance(grid, LatLongSphere):
        raise ValueError("domain density estimation runs on planar and torus grids")
    if center is None:
        center = default_center(grid)
    if isinstance(grid, PlanarWindow):
        for radius in radii:
            for c in center:
                if c - radius < -1e-9 or c + radius > grid.side + 1e-9:
                    raise ValueError(f"ball of radius {radius} does not fit in the window")
    dim = decs[0].labels.ndim
    ratios = np.empty((len(decs), len(radii)))
    for i, dec in enumerate(decs):
        _, dmax = domain_distance_extrema(dec, center)
        for j, radius in enumerate(radii):
            ratios[i, j] = np.count_nonzero(dmax < radius) / _ball_volume(dim, radius)
    means = ratios.mean(axis=0)
    if len(decs) > 1:
        errs = ratios.std(axis=0, ddof=1) / math.sqrt(len(decs))
    else:
        errs = np.zeros(len(radii))
    return NsEstimate(
        radii=radii,
        ratio_means=means.tolist(),
        ratio_stderrs=errs.tolist(),
        pooled=float(means[-1]),
        pooled_stderr=float(errs[-1]),
    )


def _lattice_offsets(grid, r: float):
    """Integer offsets m with |m h| <= r, plus the strict |m h| < r flag."""
    h = grid.spacing
    reach = int(math.floor(r / h)) + 1
    rng = np.arange(-reach, reach + 1)
    mi, mj = np.meshgrid(rng, rng, indexing="ij")
    norm = np.hypot(mi, mj) * h
    keep = norm <= r
    return mi[keep], mj[keep], (norm[keep] < r)


def sandwich_check_many(
    dec: NodalDecomposition, geometries, thresholds, center=None
) -> list[SandwichVerdict]:
    """Sandwich verdicts for every (r, R) geometry and threshold t.

    One pass of ball-count gathering per geometry serves all thresholds; see
    the module docstring for why the verdicts are exact integer statements.
    """
    grid = dec.sample.grid
    if not isinstance(grid, (PlanarWindow, Torus)) or dec.labels.ndim != 2:
        raise ValueError("sandwich checking runs on planar and 2-D torus grids")
    if center is None:
        center = default_center(grid)
    labels = dec.labels
    n0, n1 = labels.shape
    flat = labels.ravel()
    nlab = len(dec.domains)
    node_count = np.bincount(flat, minlength=nlab)
    areas = dec.areas()
    from .nodal import _node_distances  # shared distance convention

    dist = _node_distances(grid, center).ravel()
    verdicts = []
    for r, R in geometries:
        if not (0.0 < r < R):
            raise ValueError(f"need 0 < r < R, got r={r}, R={R}")
        if isinstance(grid, PlanarWindow):
            for c in center:
                if c - (R + r) < -1e-9 or c + (R + r) > grid.side + 1e-9:
                    raise ValueError(f"B(center, R+r) with R+r={R + r} leaves the window")
        else:
            if R + r > 0.5 * grid.side + 1e-9:
                raise ValueError(f"R+r={R + r} exceeds half the torus side")
        mi, mj, strict = _lattice_offsets(grid, r)
        K = int(np.count_nonzero(strict))
        centers_idx = np.nonzero(dist <= R + r)[0]
        in_lo = dist[centers_idx] <= R - r
        ci, cj = np.divmod(centers_idx, n1)
        ti = ci[:, None] + mi[None, :]
        tj = cj[:, None] + mj[None, :]
        rows = np.broadcast_to(np.arange(centers_idx.shape[0])[:, None], ti.shape)
        strict2 = np.broadcast_to(strict[None, :], ti.shape)
        if isinstance(grid, Torus):
            ti = np.mod(ti, n0)
            tj = np.mod(tj, n1)
            valid = np.ones(ti.shape, dtype=bool)
        else:
            valid = (ti >= 0) & (ti < n0) & (tj >= 0) & (tj < n1)
        lab = flat[ti[valid] * n1 + tj[valid]]
        keys = rows[valid].astype(np.int64) * nlab + lab
        keys_any = np.unique(keys)
        keys_strict, cnt = np.unique(keys[strict2[valid]], return_counts=True)
        lab_any = keys_any % nlab
        lab_str = keys_strict % nlab
        row_str = keys_strict // nlab
        full = cnt == node_count[lab_str]
        full_in_lo = full & in_lo[row_str]
        dmax_ok_cache = None
        for t in thresholds:
            ok = areas <= t
            lower_count = int(np.count_nonzero(full_in_lo & ok[lab_str]))
            upper_count = int(np.count_nonzero(ok[lab_any]))
            if dmax_ok_cache is None:
                _, dmax = domain_distance_extrema(dec, center)
                dmax_ok_cache = dmax < R
            middle = int(np.count_nonzero(dmax_ok_cache & ok))
            holds = lower_count <= middle * K and middle * K <= upper_count
            verdicts.append(
                SandwichVerdict(
                    r=float(r),
                    R=float(R),
                    t=float(t),
                    lower=lower_count / K,
                    middle=middle,
                    upper=upper_count / K,
                    holds=bool(holds),
                )
            )
    return verdicts


def sandwich_check(dec: NodalDecomposition, r: float, R: float, t: float, center=None):
    return sandwich_check_many(dec, [(r, R)], [t], center=center)[0]


def faber_krahn_check(decs: list[NodalDecomposition], margin: float = 0.10):
    """Minimum interior domain area against the eigenvalue-1 area floor.

    Returns (min_area, violations); a violation is any interior domain with
    area below (1 - margin) times the floor, reported as
    (master_seed, stream_id, label, area).
    """
    if not (0.0 < margin < 1.0):
        raise ValueError("margin must be in (0, 1)")
    _check_same_ensemble(decs)
    floor = faber_krahn_floor(decs[0].labels.ndim)
    bound = (1.0 - margin) * floor
    min_area = math.inf
    violations = []
    seen = 0
    for dec in decs:
        stream = dec.sample.stream
        seed = stream.master_seed if stream else None
        index = stream.stream_id if stream else None
        for rec in dec.domains:
            if rec.touches_window:
                continue
            seen += 1
            min_area = min(min_area, rec.area)
            if rec.area < bound:
                violations.append((seed, index, rec.label, rec.area))
    if seen == 0:
        raise ValueError("no interior domains; minimum area undefined")
    return min_area, violations


def boundary_and_joint_distributions(decs: list[NodalDecomposition], window=None):
    """Perimeter CDF and the joint (area, perimeter) sample, interior domains
    only, optionally restricted to a (center, R) ball like psi_estimate."""
    _check_same_ensemble(decs)
    perims = []
    pairs = []
    for dec in decs:
        measure_domains(dec)
        idx = _interior_in_ball(dec, window)
        for i in idx.tolist():
            rec = dec.domains[i]
            perims.append(rec.perimeter)
            pairs.append((rec.area, rec.perimeter))
    if not perims:
        raise ValueError("no interior domains in the requested window; nothing to estimate")
    return EmpiricalCdf.from_values(perims), sorted(pairs)


def ks_distance(a: EmpiricalCdf, b: EmpiricalCdf) -> float:
    """Sup-distance between two step CDFs over their merged breakpoints."""
    if a.total_count == 0 or b.total_count == 0:
        raise ValueError("empty CDF")
    merged = np.union1d(a.breakpoints, b.breakpoints)
    return float(np.max(np.abs(a.evaluate(merged) - b.evaluate(merged))))


def _reference_area(grid) -> float:
    if isinstance(grid, LatLongSphere):
        return 4.0 * math.pi
    if isinstance(grid, Torus):
        return grid.side**grid.dim
    return grid.side**2


def nodal_length_density(decs: list[NodalDecomposition]) -> tuple[float, float]:
    """Mean and stderr of total crossing length per unit area."""
    _check_same_ensemble(decs)
    vals = []
    for dec in decs:
        measure_domains(dec)
        vals.append(dec.total_nodal_length / _reference_area(dec.sample.grid))
    arr = np.asarray(vals)
    err = arr.std(ddof=1) / math.sqrt(arr.size) if arr.size > 1 else 0.0
    return float(arr.mean()), float(err)
