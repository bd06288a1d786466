"""Truncated L_j values, divergence profiles along an epsilon schedule,
nontangential limit probes, boundary-point classification and seeded
(w, r) scans.

Everything here is numerical evidence. Finitely many truncations can never
decide divergence; the thresholds are heuristics and travel with every
result.
"""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from . import kernels
from .errors import (
    CriticalProximityError,
    InvalidParamsError,
    PlessnerLabError,
    PoleError,
)
from .geometry import DEFAULT_MAX_CELLS, StolzRegion
from .levelset import (
    DEFAULT_RESOLUTION,
    LevelField,
    LevelTarget,
    clip_polylines,
    exclude_critical,
    refine_all,
)
from .parallel import map_ordered
from .quad import QuadResult

DEFAULT_K = 12
SCAN_K = 8
PROBE_DEPTHS = 30
PROBE_TAIL = 5
LIMIT_TOL = 1e-6
MODULUS_CAP = 1e12
DEFAULT_RHO_C = 1e-3

LABELS = ("bounded", "diverging", "inconclusive")
POINT_LABELS = ("type-i", "type-ii-evidence", "inconclusive")
EVIDENCE_NOTE = "numerical evidence from finitely many truncations, not a proof"


@dataclass(frozen=True)
class Thresholds:
    slope: float = 0.05
    ratio: float = 10.0
    floor: float = 1e-3
    window: int = 6

    def to_dict(self):
        return asdict(self)


def default_schedule(j, K=DEFAULT_K):
    return tuple((1.0 / j) * 2.0 ** (-k) for k in range(1, int(K) + 1))


def _check_j(j):
    if int(j) != j or j < 2:
        raise InvalidParamsError(f"j must be an integer >= 2, got {j!r}")
    return int(j)


def _check_schedule(schedule, j):
    s = tuple(float(e) for e in schedule)
    if not s:
        raise InvalidParamsError("empty schedule")
    if any(not (0.0 < e < 1.0 / j) for e in s):
        raise InvalidParamsError(f"schedule entries must lie in (0, 1/j) = (0, {1.0 / j})")
    if any(b >= a for a, b in zip(s, s[1:])):
        raise InvalidParamsError("schedule must be strictly decreasing")
    return s


def _region(fn, zeta, delta, eps, rho_c):
    if fn.setting == "halfplane":
        z = complex(zeta)
        if z.imag != 0.0:
            raise InvalidParamsError("halfplane vertex must be real")
        region = StolzRegion("halfplane", z.real, delta, eps)
    else:
        region = StolzRegion("disc", complex(zeta), delta, eps)
    return exclude_critical(fn, region, rho_c)


def _target(fn, wr):
    if isinstance(wr, LevelTarget):
        return wr
    if fn.is_harmonic:
        t = wr[0] if isinstance(wr, (tuple, list)) else wr
        return LevelTarget.harmonic(float(t))
    w, r = wr
    return LevelTarget.circle(complex(w), float(r))


def _contrib(polys):
    if not polys:
        return np.zeros(0)
    return np.concatenate([p.segment_lengths() * p.weights for p in polys])


class _ProfileEngine:
    """One level field at the deepest truncation; shallower truncations are clips of it."""

    def __init__(self, fn, zeta, j, eps_min, resolution, max_cells, rho_c):
        self.fn = fn
        self.region = _region(fn, zeta, 1.0 / j, eps_min, rho_c)
        self.field = LevelField(fn, self.region, resolution, max_cells)

    def values(self, target, schedule):
        fn = self.fn
        raw = self.field.extract(target, clip=False)
        fine = refine_all(raw, fn, target, 2)
        out = []
        for eps in schedule:
            reg = self.region.with_eps(eps)
            holes = self.field.holes

            def phi(z, reg=reg):
                return reg.phi(z, holes)

            c = _contrib(clip_polylines(raw, fn, target, phi))
            f = _contrib(clip_polylines(fine, fn, target, phi))
            v_c, v_f = kernels.pairwise_sum(c), kernels.pairwise_sum(f)
            out.append(QuadResult(v_f, abs(v_f - v_c), int(f.size), 2))
        return out


@dataclass(frozen=True)
class DivergenceProfile:
    schedule: tuple
    values: tuple
    errs: tuple
    slope: float
    classification: str
    thresholds: Thresholds = field(default_factory=Thresholds)
    target: dict | None = None
    note: str = ""

    def to_dict(self):
        return {
            "schedule": list(self.schedule),
            "values": list(self.values),
            "errs": list(self.errs),
            "slope": self.slope,
            "classification": self.classification,
            "thresholds": self.thresholds.to_dict(),
            "target": self.target,
            "note": self.note,
        }


def _slope(schedule, values):
    if len(values) < 2:
        return 0.0
    x = np.log(1.0 / np.asarray(schedule))
    y = np.asarray(values)
    xc = x - x.mean()
    return float(np.dot(xc, y - y.mean()) / np.dot(xc, xc))


def classify_values(schedule, values, thresholds=Thresholds()):
    """(slope, label) for a monotone value list."""
    slope = _slope(schedule, values)
    # ratio against the first nonzero value: a level set that only shows up
    # below some depth and then stays put is a jump, not growth
    positive = [v for v in values if v > 0.0]
    ratio = positive[-1] / positive[0] if positive else 0.0
    if slope > thresholds.slope and ratio > thresholds.ratio:
        return slope, "diverging"
    tail = values[-min(thresholds.window, len(values)):]
    if tail[-1] - tail[0] < thresholds.floor:
        return slope, "bounded"
    return slope, "inconclusive"


def _profile_from(engine, target, schedule, thresholds):
    try:
        res = engine.values(target, schedule)
    except CriticalProximityError as exc:
        return DivergenceProfile(schedule, (), (), 0.0, "inconclusive", thresholds, target.to_dict(), str(exc))
    vals = tuple(q.value for q in res)
    slope, label = classify_values(schedule, vals, thresholds)
    return DivergenceProfile(schedule, vals, tuple(q.err for q in res), slope, label, thresholds,
                             target.to_dict(), EVIDENCE_NOTE)


def divergence_profile(fn, zeta, j, target, schedule=None, thresholds=Thresholds(),
                       resolution=DEFAULT_RESOLUTION, max_cells=DEFAULT_MAX_CELLS,
                       rho_c=DEFAULT_RHO_C) -> DivergenceProfile:
    """L(eps_k) for a decreasing schedule, with a heuristic classification."""
    j = _check_j(j)
    schedule = _check_schedule(default_schedule(j) if schedule is None else schedule, j)
    target = _target(fn, target)
    engine = _ProfileEngine(fn, zeta, j, schedule[-1], resolution, max_cells, rho_c)
    return _profile_from(engine, target, schedule, thresholds)


def truncated_L(fn, zeta, j, target, eps, resolution=DEFAULT_RESOLUTION, max_cells=DEFAULT_MAX_CELLS,
                rho_c=DEFAULT_RHO_C) -> QuadResult:
    """Weighted level-set length inside S(zeta, 1/j) truncated at eps."""
    j = _check_j(j)
    (eps,) = _check_schedule((eps,), j)
    engine = _ProfileEngine(fn, zeta, j, eps, resolution, max_cells, rho_c)
    return engine.values(_target(fn, target), (eps,))[0]


@dataclass(frozen=True)
class LimitProbe:
    depths: tuple
    samples: tuple  # three rays (radial, +delta/2, -delta/2), each a tuple of values
    converged: bool
    limit: complex | None
    oscillation: tuple
    diverging_modulus: bool
    tol: float = LIMIT_TOL

    def to_dict(self):
        def c(v):
            v = complex(v)
            return [v.real, v.imag]

        return {
            "depths": list(self.depths),
            "samples": [[c(v) for v in ray] for ray in self.samples],
            "converged": self.converged,
            "limit": None if self.limit is None else c(self.limit),
            "oscillation": list(self.oscillation),
            "diverging_modulus": self.diverging_modulus,
            "tol": self.tol,
        }


def _probe_points(fn, zeta, delta, t):
    offs = (0.0, delta / 2.0, -delta / 2.0)
    if fn.setting == "halfplane":
        y = complex(zeta).real
        return [y + t * np.exp(1j * (math.pi / 2.0 + a)) for a in offs]
    z0 = complex(zeta)
    if abs(abs(z0) - 1.0) > 1e-12:
        raise InvalidParamsError(f"vertex must be unit-modulus, |zeta| = {abs(z0)!r}")
    z0 /= abs(z0)
    return [z0 * (1.0 - t * np.exp(1j * a)) for a in offs]


def nt_limit_probe(fn, zeta, delta, n_depths=PROBE_DEPTHS, tol=LIMIT_TOL) -> LimitProbe:
    """Sample f along the radius and two off-axis rays at depths delta*2^-m."""
    if not 0.0 < delta < 1.0:
        raise InvalidParamsError("delta must lie in (0, 1)")
    depths = delta * 2.0 ** -np.arange(1, int(n_depths) + 1)
    rays = np.array(_probe_points(fn, zeta, delta, depths))
    for p in fn.poles:
        if np.any(np.abs(rays - p) < fn.pole_exclusion):
            raise PoleError(f"probe sample within pole exclusion of {p}")
    with warnings.catch_warnings(), np.errstate(all="ignore"):
        warnings.simplefilter("ignore", RuntimeWarning)
        vals = fn.evaluate(rays.ravel())[0].reshape(rays.shape).astype(np.complex128)
    big = bool(np.any(~np.isfinite(vals)) or np.any(np.abs(vals) > MODULUS_CAP))
    tail = vals[:, -PROBE_TAIL:]
    osc = tuple(float(np.max(np.abs(r[:, None] - r[None, :]))) if np.all(np.isfinite(r)) else math.inf
                for r in tail)
    ends = vals[:, -1]
    agree = bool(np.all(np.isfinite(ends)) and np.max(np.abs(ends[:, None] - ends[None, :])) <= tol)
    converged = (not big) and agree and all(o <= tol for o in osc)
    limit = complex(ends[0]) if converged else None
    samples = tuple(tuple(complex(v) for v in r) for r in vals)
    return LimitProbe(tuple(float(d) for d in depths), samples, converged, limit, osc, big, tol)


@dataclass(frozen=True)
class PointClassification:
    label: str
    probe: LimitProbe
    profiles: tuple
    note: str = EVIDENCE_NOTE

    def to_dict(self):
        return {
            "label": self.label,
            "probe": self.probe.to_dict(),
            "profiles": [p.to_dict() for p in self.profiles],
            "note": self.note,
        }


def classify_point(fn, zeta, j, wr_list, schedule=None, thresholds=Thresholds(),
                   resolution=DEFAULT_RESOLUTION, max_cells=DEFAULT_MAX_CELLS, rho_c=DEFAULT_RHO_C,
                   threads=None) -> PointClassification:
    """type-i if the probe converges; type-ii-evidence if it does not and every
    listed (w, r) gives a diverging profile; inconclusive otherwise."""
    j = _check_j(j)
    schedule = _check_schedule(default_schedule(j) if schedule is None else schedule, j)
    targets = [_target(fn, wr) for wr in wr_list]
    probe = nt_limit_probe(fn, zeta, 1.0 / j)
    profiles = ()
    if targets:
        engine = _ProfileEngine(fn, zeta, j, schedule[-1], resolution, max_cells, rho_c)
        profiles = tuple(map_ordered(lambda t: _profile_from(engine, t, schedule, thresholds), targets, threads))
    if probe.converged:
        label = "type-i"
    elif profiles and all(p.classification == "diverging" for p in profiles):
        label = "type-ii-evidence"
    else:
        label = "inconclusive"
    return PointClassification(label, probe, profiles)


@dataclass(frozen=True)
class ScanResult:
    box: tuple
    n_samples: int
    seed: int
    samples: tuple  # (w, r) per sample
    classifications: tuple
    last_values: tuple
    bounded_fraction: float
    stderr: float
    schedule: tuple
    thresholds: Thresholds = field(default_factory=Thresholds)
    note: str = EVIDENCE_NOTE

    def to_dict(self):
        return {
            "box": [list(b) for b in self.box],
            "n_samples": self.n_samples,
            "seed": self.seed,
            "samples": [[w.real, w.imag, r] for w, r in self.samples],
            "classifications": list(self.classifications),
            "last_values": list(self.last_values),
            "bounded_fraction": self.bounded_fraction,
            "stderr": self.stderr,
            "schedule": list(self.schedule),
            "thresholds": self.thresholds.to_dict(),
            "note": self.note,
        }


def sample_rng(seed, index):
    """Counter-based stream for one sample; independent of evaluation order."""
    key = (int(seed) & 0xFFFFFFFFFFFFFFFF) | (int(index) << 64)
    return np.random.Generator(np.random.Philox(key=key))


def _check_box(box):
    try:
        (a0, a1), (b0, b1), (r0, r1) = box
    except (TypeError, ValueError) as exc:
        raise InvalidParamsError("box must be [[w_re lo, hi], [w_im lo, hi], [r lo, hi]]") from exc
    box = ((float(a0), float(a1)), (float(b0), float(b1)), (float(r0), float(r1)))
    if not (box[0][0] <= box[0][1] and box[1][0] <= box[1][1] and 0.0 < box[2][0] <= box[2][1]):
        raise InvalidParamsError("box ranges must be ordered and the r range positive")
    return box


def wr_scan(fn, zeta, j, box, n_samples, seed, K=SCAN_K, thresholds=Thresholds(),
            resolution=DEFAULT_RESOLUTION, max_cells=DEFAULT_MAX_CELLS, rho_c=DEFAULT_RHO_C,
            threads=None, rerun_flagged=True, full_K=DEFAULT_K) -> ScanResult:
    """Uniform seeded (w, r) samples from ``box``, each given a short profile.

    Samples left inconclusive by the short schedule are re-run once on the
    full ``full_K`` schedule when ``rerun_flagged`` is set.
    """
    if fn.is_harmonic:
        raise InvalidParamsError("wr_scan samples circle targets; use a holomorphic function")
    j = _check_j(j)
    box = _check_box(box)
    if int(n_samples) != n_samples or n_samples < 1:
        raise InvalidParamsError("n_samples must be a positive integer")
    n_samples = int(n_samples)
    schedule = default_schedule(j, K)
    lo = np.array([b[0] for b in box])
    hi = np.array([b[1] for b in box])
    samples = []
    for i in range(n_samples):
        u = sample_rng(seed, i).random(3)
        x = lo + (hi - lo) * u
        samples.append((complex(x[0], x[1]), float(x[2])))
    engine = _ProfileEngine(fn, zeta, j, schedule[-1], resolution, max_cells, rho_c)

    def run(eng, sched):
        def one(wr):
            try:
                prof = _profile_from(eng, LevelTarget.circle(*wr), sched, thresholds)
            except PlessnerLabError:
                return "inconclusive", math.nan
            return prof.classification, (prof.values[-1] if prof.values else math.nan)

        return one

    out = map_ordered(run(engine, schedule), samples, threads)
    flagged = [i for i, o in enumerate(out) if o[0] == "inconclusive"]
    if rerun_flagged and flagged and full_K > K:
        full = default_schedule(j, full_K)
        engine_full = _ProfileEngine(fn, zeta, j, full[-1], resolution, max_cells, rho_c)
        again = map_ordered(run(engine_full, full), [samples[i] for i in flagged], threads)
        for i, o in zip(flagged, again):
            out[i] = o
    labels = tuple(o[0] for o in out)
    p = sum(1 for c in labels if c == "bounded") / n_samples
    se = math.sqrt(p * (1.0 - p) / n_samples)
    return ScanResult(box, n_samples, int(seed), tuple(samples), labels, tuple(o[1] for o in out), p, se,
                      schedule, thresholds)


def write_profile_csv(profile, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["eps", "L", "err"])
        for e, v, r in zip(profile.schedule, profile.values, profile.errs):
            w.writerow([repr(e), repr(v), repr(r)])


def write_scan_csv(scan, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "w_re", "w_im", "r", "classification", "L"])
        for i, ((wc, r), c, v) in enumerate(zip(scan.samples, scan.classifications, scan.last_values)):
            w.writerow([i, repr(wc.real), repr(wc.imag), repr(r), c, repr(v)])
