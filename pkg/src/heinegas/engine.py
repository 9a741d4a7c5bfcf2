"""Exact finite-n machinery for the rotation-invariant radial ensemble.

For n particles in an external potential n·q(|z|), rotation invariance
factorizes everything over the index j = 0..n-1: modulus j carries the law
∝ r^(2j+1) exp(-n q(r)) on (0, ∞). This module computes, to quadrature
accuracy,

- ``log_norm``: the log of the weighted norm 2∫ r^(2j+1) e^(Σ s_k h_k) e^(-nq) dr,
- ``joint_mgf``: the product over j of weighted/unweighted norm ratios,
- ``region_probabilities`` and ``exact_count_law``: the per-index landing
  probabilities of disjoint radial regions and the resulting multivariate
  Poisson-binomial count law,
- ``sample_moduli``: inverse-CDF Monte Carlo draws of all n moduli.

Quadrature is deterministic Gauss-Legendre on graded panels: panels shrink
like the local peak scale 1/sqrt(4 n ΔQ) around component edges and
outposts, and every computed quantity is re-evaluated with all panels split
in two until it is stable to cfg.rel_tol. Windowed mode instead integrates
only a neighborhood of each significant peak of the integrand exponent
(half-width max(sqrt(C log n / n), 8/sqrt(n ΔQ))), mirroring the droplet
localization; mode="both" certifies the two routes against each other.

Statistics are described by a RegionSet whose entries are either hard
radial intervals or smooth plateau bumps. An entry may be index-split: it
counts one region for j >= m0 and another for j < m0, which is how the
gap-edge coordinate of the two-component ensemble is defined.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Tuple, Union

import numpy as np

from .heine import CountLaw, marginal_cap, poisson_binomial_dp
from .potentials import (
    BumpSpec,
    GridResolutionError,
    RadialPotential,
    Shoulder,
    bump,
    droplet_data,
    find_peaks,
    laplacian,
    shoulder,
)

__all__ = [
    "QuadratureConfig",
    "QuadratureError",
    "HardRegion",
    "SplitRegion",
    "SplitBump",
    "RegionSet",
    "MgfResult",
    "ModuliSample",
    "log_norm",
    "joint_mgf",
    "region_probabilities",
    "exact_count_law",
    "sample_moduli",
    "standard_regions",
    "moduli_to_csv",
]


class QuadratureError(RuntimeError):
    """Quadrature non-convergence or impossible integrand structure."""


@dataclass(frozen=True)
class QuadratureConfig:
    rel_tol: float = 1e-11
    abs_tol: float = 1e-280
    window_constant: float = 10.0
    mode: str = "full"
    max_subdivisions: int = 12

    def __post_init__(self) -> None:
        if self.rel_tol <= 0.0 or self.abs_tol <= 0.0:
            raise ValueError("tolerances must be positive")
        if self.window_constant < 1.0:
            raise ValueError("window constant C must be >= 1")
        if self.mode not in ("windowed", "full", "both"):
            raise ValueError("mode must be one of windowed, full, both")


# ------------------------------------------------------------------- regions


@dataclass(frozen=True)
class HardRegion:
    lo: float
    hi: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.lo < self.hi:
            raise ValueError("region must satisfy 0 <= lo < hi")


@dataclass(frozen=True)
class SplitRegion:
    """Index-split hard statistic: indices j >= m0 count hits in ``above``,
    indices j < m0 count hits in ``below``."""

    m0: int
    below: HardRegion
    above: HardRegion


@dataclass(frozen=True)
class SplitBump:
    """Index-split smooth statistic (same convention as SplitRegion).

    Each side is a BumpSpec or a one-sided Shoulder; the standard gap-edge
    statistic keeps everything inside the gap's inner edge for j >= m0 and
    everything beyond its outer edge for j < m0, so shoulders are the
    smooth analogue of the half-line hard regions."""

    m0: int
    below: Union[BumpSpec, Shoulder]
    above: Union[BumpSpec, Shoulder]


_HARD_KINDS = (HardRegion, SplitRegion)
_SMOOTH_KINDS = (BumpSpec, SplitBump)


@dataclass(frozen=True)
class RegionSet:
    """Homogeneous tuple of count statistics, hard or smooth."""

    entries: Tuple[Union[HardRegion, SplitRegion, BumpSpec, SplitBump], ...]
    kind: str

    def __post_init__(self) -> None:
        if self.kind not in ("hard", "smooth"):
            raise ValueError("kind must be hard or smooth")
        want = _HARD_KINDS if self.kind == "hard" else _SMOOTH_KINDS
        if any(not isinstance(e, want) for e in self.entries):
            raise ValueError(f"all entries must be {self.kind} statistics")
        atoms = self._atomic_intervals()
        for i in range(len(atoms)):
            for k in range(i + 1, len(atoms)):
                a, b = atoms[i], atoms[k]
                if a[0] < b[1] and b[0] < a[1]:
                    raise ValueError("region intervals must be pairwise disjoint")

    @classmethod
    def hard(cls, entries) -> "RegionSet":
        return cls(tuple(entries), "hard")

    @classmethod
    def smooth(cls, entries) -> "RegionSet":
        return cls(tuple(entries), "smooth")

    @property
    def m(self) -> int:
        return len(self.entries)

    @staticmethod
    def _smooth_atom(spec):
        # a shoulder occupies its whole nonzero extent so nothing else may
        # double-count the plateau side
        if isinstance(spec, Shoulder):
            return (0.0, spec.hi) if spec.keep_below else (spec.lo, math.inf)
        return spec.support

    def _atoms_of(self, entry):
        if isinstance(entry, HardRegion):
            return [(entry.lo, entry.hi)]
        if isinstance(entry, SplitRegion):
            return [(entry.below.lo, entry.below.hi), (entry.above.lo, entry.above.hi)]
        if isinstance(entry, BumpSpec):
            return [entry.support]
        return [self._smooth_atom(entry.below), self._smooth_atom(entry.above)]

    def _atomic_intervals(self):
        out = []
        for e in self.entries:
            out.extend(self._atoms_of(e))
        return out

    def edge_radii(self) -> Tuple[float, ...]:
        """All radii where an entry starts, ends, or changes regime."""
        edges = set()
        for e in self.entries:
            if isinstance(e, (HardRegion, SplitRegion)):
                for lo, hi in self._atoms_of(e):
                    edges.update((lo, hi))
            else:
                specs = [e] if isinstance(e, BumpSpec) else [e.below, e.above]
                for sp in specs:
                    if isinstance(sp, Shoulder):
                        mid = 0.5 * (sp.lo + sp.hi)
                        edges.update((sp.lo, mid, sp.hi))
                    else:
                        t, eps = sp.center, sp.half_width
                        edges.update((t - eps, t - eps / 2.0, t + eps / 2.0, t + eps))
        return tuple(sorted(edges))

    def resolve(self, k: int, j: int):
        """The active atomic statistic of coordinate k at index j."""
        e = self.entries[k]
        if isinstance(e, (SplitRegion, SplitBump)):
            return e.above if j >= e.m0 else e.below
        return e

    def group_key(self, j: int) -> Tuple[bool, ...]:
        return tuple(
            j >= e.m0 if isinstance(e, (SplitRegion, SplitBump)) else True
            for e in self.entries
        )

    def exponent(self, j: int, s: np.ndarray, x: np.ndarray) -> np.ndarray:
        """Σ_k s_k h_k(x) for index j (h = indicator or bump)."""
        out = np.zeros(x.shape)
        for k in range(self.m):
            sk = float(s[k])
            if sk == 0.0:
                continue
            atom = self.resolve(k, j)
            if isinstance(atom, HardRegion):
                out += sk * ((x > atom.lo) & (x < atom.hi))
            elif isinstance(atom, Shoulder):
                out += sk * shoulder(atom, x)
            else:
                out += sk * bump(atom, x)
        return out


def standard_regions(
    data,
    n: Optional[int] = None,
    eps: Optional[float] = None,
    smooth: bool = False,
) -> Tuple[RegionSet, float]:
    """Default statistic set for a classified droplet.

    Case 1: one region per outpost. Case 2: coordinate 0 is the index-split
    gap-edge statistic with m0 = floor(M0 n): indices j >= m0 count as
    "stayed inner" when found anywhere inside a cutoff past the gap's
    inner edge b0, and indices j < m0 count as "escaped outward" when
    found anywhere beyond a cutoff short of the outer edge a1. The edge
    clusters spread like n^{-1/2}, so the cutoffs sit deep in the gap
    (past the midpoint toward the nearest outpost, or mirrored around the
    bare-gap midpoint) rather than hugging the edges. Outposts get annuli
    (hard) or plateau bumps (smooth) of half-width eps, defaulting to one
    fifth of the smallest gap between adjacent special radii. Returns
    (regions, eps).
    """
    special = [data.components[0][1]]
    if data.case_tag == "case2":
        special += list(data.outposts) + [data.components[1][0]]
    else:
        special += list(data.outposts)
    special = sorted(special)
    if eps is None:
        gaps = [b - a for a, b in zip(special[:-1], special[1:])]
        eps = (min(gaps) if gaps else special[0]) / 5.0
    if eps <= 0.0:
        raise ValueError("nonpositive region half-width")

    def entry(center: float):
        if smooth:
            return BumpSpec(center, eps)
        return HardRegion(center - eps, center + eps)

    entries = []
    if data.case_tag == "case2":
        if n is None:
            raise ValueError("case-2 regions need n to place the index split")
        # forward nudge: at exact-integer M0 n the classified mass can sit
        # a few ulp low and must not drop m0 by one
        m0 = int(math.floor(data.masses[0] * n + 1e-9))
        b0 = data.components[0][1]
        a1 = data.components[1][0]
        if data.outposts:
            span_b = data.outposts[0] - b0
            span_a = a1 - data.outposts[-1]
            cut_b = b0 + 0.55 * span_b
            cut_a = a1 - 0.55 * span_a
        else:
            span_b = span_a = a1 - b0
            cut_b = b0 + 0.45 * span_b
            cut_a = a1 - 0.45 * span_a
        outer = data.components[-1][1] + 6.0
        if smooth:
            sep = cut_a - cut_b
            delta_b = min(0.2 * span_b, 0.4 * sep)
            delta_a = min(0.2 * span_a, 0.4 * sep)
            entries.append(
                SplitBump(
                    m0,
                    below=Shoulder(cut_a - delta_a, cut_a + delta_a, False),
                    above=Shoulder(cut_b - delta_b, cut_b + delta_b, True),
                )
            )
        else:
            entries.append(
                SplitRegion(
                    m0,
                    below=HardRegion(cut_a, outer),
                    above=HardRegion(0.0, cut_b),
                )
            )
        entries.extend(entry(t) for t in data.outposts)
    else:
        entries.extend(entry(t) for t in data.outposts)
    return RegionSet(tuple(entries), "smooth" if smooth else "hard"), float(eps)


# ---------------------------------------------------------------- node grids


_GL32 = np.polynomial.legendre.leggauss(32)
_GL16 = np.polynomial.legendre.leggauss(16)
_GL8 = np.polynomial.legendre.leggauss(8)


def _panels_to_nodes(edges: np.ndarray, rule=_GL32) -> Tuple[np.ndarray, np.ndarray]:
    nodes, weights = rule
    mids = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * (edges[1:] - edges[:-1])
    x = (mids[:, None] + half[:, None] * nodes[None, :]).ravel()
    w = (half[:, None] * weights[None, :]).ravel()
    return x, w


def _graded_offsets(center: float, sigma: float, lo: float, hi: float):
    offs = sigma * np.array([0.0, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0])
    pts = np.concatenate((center - offs[::-1], center + offs[1:]))
    return pts[(pts > lo) & (pts < hi)]


@lru_cache(maxsize=64)
def _special_structure(pot: RadialPotential, n: int):
    """Special radii and their peak scales, plus the bulk panel width."""
    data = droplet_data(pot)
    special = []
    for a, b in data.components:
        if a > 0.0:
            special.append(a)
        special.append(b)
    special.extend(data.outposts)
    lap_min = math.inf
    for a, b in data.components:
        lo = a + 0.02 * (b - a) if a > 0.0 else a + 1e-6
        probe = np.linspace(lo, b - 1e-9, 64)
        lap_min = min(lap_min, float(np.min(laplacian(pot, probe))))
    lap_min = max(lap_min, 1e-3)
    sigmas = []
    for r0 in special:
        lap = max(float(laplacian(pot, r0)), lap_min)
        sigmas.append(1.0 / math.sqrt(4.0 * n * lap))
    h_bulk = min(0.12, 6.0 / math.sqrt(4.0 * n * lap_min))
    return tuple(special), tuple(sigmas), h_bulk


def _fill_edges(breaks: np.ndarray, h_fill: float) -> np.ndarray:
    out = [breaks[0]]
    for a, b in zip(breaks[:-1], breaks[1:]):
        span = b - a
        if span <= 1e-14:
            continue
        parts = max(1, int(math.ceil(span / h_fill)))
        out.extend(np.linspace(a, b, parts + 1)[1:])
    return np.asarray(out)


@lru_cache(maxsize=128)
def _full_grid(pot: RadialPotential, n: int, extra_edges: Tuple[float, ...], splits: int):
    special, sigmas, h_bulk = _special_structure(pot, n)
    lo, hi = 1e-9, pot.r_max
    pts = {lo, hi}
    pts.update(e for e in extra_edges if lo < e < hi)
    for r0, sg in zip(special, sigmas):
        pts.update(_graded_offsets(r0, sg, lo, hi))
    breaks = _fill_edges(np.array(sorted(pts)), h_bulk)
    if splits > 1:
        parts = [
            np.linspace(a, b, splits + 1)[:-1]
            for a, b in zip(breaks[:-1], breaks[1:])
        ]
        breaks = np.concatenate(parts + [breaks[-1:]])
    if breaks.size * 32 > 400_000:
        raise QuadratureError("node budget exceeded; relax rel_tol")
    return _panels_to_nodes(breaks)


@lru_cache(maxsize=64)
def _windowed_grid(
    pot: RadialPotential,
    n: int,
    peaks_key: Tuple[Tuple[float, float], ...],  # (radius, half_width)
    extra_edges: Tuple[float, ...],
    splits: int,
):
    windows = []
    for r0, h in sorted(peaks_key):
        a, b = max(1e-9, r0 - h), min(pot.r_max, r0 + h)
        if windows and a <= windows[-1][1]:
            windows[-1] = (windows[-1][0], max(windows[-1][1], b))
        else:
            windows.append((a, b))
    xs, ws = [], []
    for a, b in windows:
        pts = {a, b}
        pts.update(e for e in extra_edges if a < e < b)
        for r0, h in peaks_key:
            if a < r0 < b:
                pts.update(_graded_offsets(r0, h / 32.0, a, b))
        breaks = _fill_edges(np.array(sorted(pts)), max((b - a) / 8.0, 1e-6))
        if splits > 1:
            parts = [
                np.linspace(p, q, splits + 1)[:-1]
                for p, q in zip(breaks[:-1], breaks[1:])
            ]
            breaks = np.concatenate(parts + [breaks[-1:]])
        x, w = _panels_to_nodes(breaks)
        xs.append(x)
        ws.append(w)
    return np.concatenate(xs), np.concatenate(ws)


# ---------------------------------------------------------- core logsumexp


def _phi_matrix(
    pot: RadialPotential,
    n: int,
    j_arr: np.ndarray,
    x: np.ndarray,
    s: Optional[np.ndarray],
    stats: Optional[RegionSet],
) -> np.ndarray:
    """phi[i, :] = (2 j_i + 1) ln x - n q(x) + Σ_k s_k h_k(x) (index-aware)."""
    log_x = np.log(x)
    qx = np.asarray(pot.q(x))
    phi = (2.0 * j_arr[:, None] + 1.0) * log_x[None, :] - float(n) * qx[None, :]
    if stats is not None and s is not None and np.any(s != 0.0):
        groups = {}
        for row, j in enumerate(j_arr):
            groups.setdefault(stats.group_key(int(j)), []).append(row)
        for key, rows in groups.items():
            extra = stats.exponent(int(j_arr[rows[0]]), s, x)
            phi[rows, :] += extra[None, :]
    return phi


def _log_rows(phi: np.ndarray, w: np.ndarray, mask=None) -> np.ndarray:
    """log ∫ per row: log Σ w e^phi over (optionally masked) columns."""
    if mask is not None:
        phi = phi[:, mask]
        w = w[mask]
    if phi.shape[1] == 0:
        return np.full(phi.shape[0], -np.inf)
    m = phi.max(axis=1)
    out = np.where(np.isfinite(m), m, -np.inf).astype(float)
    safe = np.isfinite(m)
    if safe.any():
        acc = (w[None, :] * np.exp(phi[safe] - m[safe, None])).sum(axis=1)
        out[safe] = m[safe] + np.log(acc)
    return out


def _converged_rows(make_rows, cfg: QuadratureConfig):
    """Run make_rows(splits) with panel splitting until stable to rel_tol."""
    prev = None
    splits = 1
    for _ in range(cfg.max_subdivisions):
        rows = make_rows(splits)
        if prev is not None:
            gap = np.max(np.abs(np.where(np.isfinite(rows) | np.isfinite(prev), rows - prev, 0.0)))
        if prev is not None and gap <= cfg.rel_tol:
            return rows
        prev = rows
        splits *= 2
    raise QuadratureError("quadrature failed to converge; raise rel_tol")


def _tau(j: int, n: int) -> float:
    return (j + 0.5) / n


def _windows_for_index(
    pot: RadialPotential, n: int, j: int, cfg: QuadratureConfig
) -> Tuple[Tuple[float, float], ...]:
    # a tilt grazing the minimum of r q'(r) on a window roll band puts two
    # crossings closer than the scan grid; rescan finer before giving up
    ppu = 4096
    while True:
        try:
            pa = find_peaks(
                pot,
                _tau(j, n),
                (1e-6, pot.r_max),
                n,
                cfg.window_constant,
                points_per_unit=ppu,
            )
            break
        except GridResolutionError as exc:
            if ppu >= 262144:
                raise GridResolutionError(f"{exc} (at index j={j})") from exc
            ppu *= 2
    sig = pa.significant_peaks
    if not sig:
        raise QuadratureError(f"no peak found for index j={j}")
    eps_n = math.sqrt(cfg.window_constant * math.log(n) / n)
    out = []
    for p in sig:
        lap = p.curvature / 4.0  # g_tau'' = 4 ΔQ at a stationary point
        out.append((p.r, max(eps_n, 8.0 / math.sqrt(n * lap))))
    return tuple(out)


def _s_key(s) -> Tuple[float, ...]:
    if s is None:
        return ()
    return tuple(float(v) for v in np.atleast_1d(np.asarray(s, dtype=float)))


@lru_cache(maxsize=512)
def _log_norm_rows_full(
    pot: RadialPotential,
    n: int,
    j_key: Tuple[int, ...],
    s_key: Tuple[float, ...],
    stats: Optional[RegionSet],
    cfg: QuadratureConfig,
) -> Tuple[float, ...]:
    j_arr = np.asarray(j_key, dtype=float)
    s = np.asarray(s_key, dtype=float) if s_key else None
    edges = stats.edge_radii() if stats is not None else ()

    def make(splits):
        x, w = _full_grid(pot, n, edges, splits)
        return _log_rows(_phi_matrix(pot, n, j_arr, x, s, stats), w)

    rows = _converged_rows(make, cfg)
    return tuple(math.log(2.0) + rows)


def _log_norm_windowed(
    pot: RadialPotential,
    n: int,
    j: int,
    s,
    stats: Optional[RegionSet],
    cfg: QuadratureConfig,
) -> float:
    peaks_key = _windows_for_index(pot, n, j, cfg)
    s_vec = np.asarray(_s_key(s), dtype=float) if s is not None else None
    edges = stats.edge_radii() if stats is not None else ()
    j_arr = np.asarray([j], dtype=float)

    def make(splits):
        x, w = _windowed_grid(pot, n, peaks_key, edges, splits)
        return _log_rows(_phi_matrix(pot, n, j_arr, x, s_vec, stats), w)

    rows = _converged_rows(make, cfg)
    return math.log(2.0) + float(rows[0])


def log_norm(
    pot: RadialPotential,
    n: int,
    j: int,
    s=None,
    stats: Optional[RegionSet] = None,
    cfg: QuadratureConfig = QuadratureConfig(),
) -> float:
    """log of 2 ∫_0^∞ r^(2j+1) e^(Σ_k s_k h_k(r)) e^(-n q(r)) dr.

    mode="full" integrates the whole range on the graded grid, "windowed"
    only the significant-peak windows of the exponent, "both" computes the
    two and raises QuadratureError if they disagree beyond 1e-8.
    """
    if not 0 <= j <= n - 1:
        raise ValueError("index j must satisfy 0 <= j <= n-1")
    if stats is not None and s is not None and len(_s_key(s)) != stats.m:
        raise ValueError("s length must match the statistic count")
    if stats is None and s is not None and len(_s_key(s)) != 0:
        raise ValueError("s given without statistics")
    s_key = _s_key(s)
    if cfg.mode in ("full", "both"):
        full_val = _log_norm_rows_full(pot, n, (int(j),), s_key, stats, cfg)[0]
    if cfg.mode in ("windowed", "both"):
        win_val = _log_norm_windowed(pot, n, int(j), s, stats, cfg)
    if cfg.mode == "full":
        return full_val
    if cfg.mode == "windowed":
        return win_val
    if abs(win_val - full_val) > 1e-8 * max(1.0, abs(full_val)):
        raise QuadratureError(
            f"windowed and full quadrature disagree at j={j}: "
            f"{win_val:.12f} vs {full_val:.12f}"
        )
    return full_val


# ------------------------------------------------------------------- the MGF


@dataclass(frozen=True)
class MgfResult:
    value: float
    log_value: float
    remainder_bound: float
    terms: int

    def __float__(self) -> float:
        return self.value


def _restrict_indices(restrict, n: int, stats: Optional[RegionSet], cfg) -> np.ndarray:
    if restrict is None:
        return np.arange(n)
    L = int(math.ceil(cfg.window_constant * math.log(n)))
    if restrict == "tail":
        return np.arange(max(0, n - L), n)
    if restrict == "split":
        m0s = [
            e.m0 for e in (stats.entries if stats is not None else ())
            if isinstance(e, (SplitRegion, SplitBump))
        ]
        if not m0s:
            raise ValueError("split restriction needs an index-split statistic")
        keep = np.zeros(n, dtype=bool)
        for m0 in m0s:
            keep[max(0, m0 - L) : min(n, m0 + L + 1)] = True
        return np.nonzero(keep)[0]
    raise ValueError("restrict must be None, 'tail', or 'split'")


def joint_mgf(
    pot: RadialPotential,
    n: int,
    s,
    stats: RegionSet,
    cfg: QuadratureConfig = QuadratureConfig(),
    restrict: Optional[str] = None,
) -> MgfResult:
    """E[exp(Σ_k s_k N_k)] = ∏_j exp(log_norm(j, s) − log_norm(j, 0)).

    Requires |s_k| ≤ log n. With restrict="tail" (or "split") only the
    indices j ≥ n − ⌈C log n⌉ (or the ⌈C log n⌉-windows around each index
    split) keep their s-dependence; the dropped log contribution is
    evaluated anyway and reported as remainder_bound.
    """
    s_vec = np.asarray(s, dtype=float)
    if s_vec.shape != (stats.m,):
        raise ValueError("s length must match the statistic count")
    if np.any(np.abs(s_vec) > math.log(max(n, 2)) + 1e-12):
        raise ValueError("s out of range (require |s_k| <= log n)")
    if not np.any(s_vec != 0.0):
        return MgfResult(1.0, 0.0, 0.0, n)

    all_j = tuple(range(n))
    if cfg.mode in ("full", "both"):
        base = np.asarray(_log_norm_rows_full(pot, n, all_j, (), None, cfg))
        wtd = np.asarray(
            _log_norm_rows_full(pot, n, all_j, tuple(s_vec), stats, cfg)
        )
    if cfg.mode in ("windowed", "both"):
        base_w = np.asarray(
            [_log_norm_windowed(pot, n, j, None, None, cfg) for j in range(n)]
        )
        wtd_w = np.asarray(
            [_log_norm_windowed(pot, n, j, s_vec, stats, cfg) for j in range(n)]
        )
        if cfg.mode == "windowed":
            base, wtd = base_w, wtd_w
        else:
            gap = max(
                float(np.max(np.abs(base_w - base))),
                float(np.max(np.abs(wtd_w - wtd))),
            )
            if gap > 1e-8 * max(1.0, float(np.max(np.abs(base)))):
                raise QuadratureError(
                    f"windowed and full quadrature disagree (gap {gap:.3e})"
                )
    delta = wtd - base
    keep = _restrict_indices(restrict, n, stats, cfg)
    mask = np.zeros(n, dtype=bool)
    mask[keep] = True
    log_value = float(delta[mask].sum())
    dropped = float(delta[~mask].sum())
    return MgfResult(
        value=math.exp(log_value),
        log_value=log_value,
        remainder_bound=abs(dropped),
        terms=int(mask.sum()),
    )


# -------------------------------------------------------------- count laws


def _region_prob_matrix(
    pot: RadialPotential,
    n: int,
    regions: RegionSet,
    cfg: QuadratureConfig,
    j_arr: np.ndarray,
) -> np.ndarray:
    """pi[i, k] = P(modulus j_i lands in region k), by aligned-panel ratios.

    Convergence is monitored on the probabilities themselves (linear scale)
    alongside the log norms, so regions carrying exponentially small mass
    do not stall the refinement with log-tail noise.
    """
    edges = regions.edge_radii()
    n_rows = len(j_arr)

    def make(splits):
        x, w = _full_grid(pot, n, edges, splits)
        phi = _phi_matrix(pot, n, j_arr.astype(float), x, None, None)
        full = _log_rows(phi, w)
        pi = np.zeros((n_rows, regions.m))
        for k in range(regions.m):
            entry = regions.entries[k]
            if isinstance(entry, HardRegion):
                mask = (x > entry.lo) & (x < entry.hi)
                pi[:, k] = np.exp(_log_rows(phi, w, mask) - full)
            else:
                lo_m = (x > entry.below.lo) & (x < entry.below.hi)
                hi_m = (x > entry.above.lo) & (x < entry.above.hi)
                below = np.exp(_log_rows(phi, w, lo_m) - full)
                above = np.exp(_log_rows(phi, w, hi_m) - full)
                pi[:, k] = np.where(j_arr >= entry.m0, above, below)
        return np.concatenate((full, pi.ravel()))

    flat = _converged_rows(make, cfg)
    pi = flat[n_rows:].reshape(n_rows, regions.m)
    return np.clip(pi, 0.0, 1.0)


def region_probabilities(
    pot: RadialPotential,
    n: int,
    j: int,
    regions: RegionSet,
    cfg: QuadratureConfig = QuadratureConfig(),
) -> np.ndarray:
    """Landing probabilities (π_{j,1}, ..., π_{j,m}) of modulus j."""
    if regions.kind != "hard":
        raise ValueError("hard-indicator regions required")
    if not 0 <= j <= n - 1:
        raise ValueError("index j must satisfy 0 <= j <= n-1")
    if regions.m == 0:
        return np.zeros(0)
    return _region_prob_matrix(pot, n, regions, cfg, np.asarray([j]))[0]


def exact_count_law(
    pot: RadialPotential,
    n: int,
    regions: RegionSet,
    cap=None,
    cfg: QuadratureConfig = QuadratureConfig(),
    tail_tol: float = 1e-12,
) -> CountLaw:
    """Exact joint law of the region occupation counts (N_1, ..., N_m).

    Independence over j makes this a multivariate Poisson-binomial; the DP
    clips each coordinate at its cap (auto-chosen from the marginal
    quantiles when cap is None) and folds the clipped mass into the
    deficit.
    """
    if regions.kind != "hard":
        raise ValueError("hard-indicator regions required")
    m = regions.m
    if m == 0:
        return CountLaw(m=0, entries={(): 1.0}, mass_deficit=0.0, cap=())
    pi = _region_prob_matrix(pot, n, regions, cfg, np.arange(n))
    if cap is None:
        per = 0.45 * tail_tol / m
        caps = tuple(marginal_cap(pi[:, k], per) for k in range(m))
    elif np.ndim(cap) == 0:
        caps = (int(cap),) * m
    else:
        caps = tuple(int(c) for c in cap)
    cells = math.prod(c + 1 for c in caps)
    if cells > 4_000_000:
        raise ValueError(f"DP size budget exceeded ({cells} cells)")
    table, _overflow = poisson_binomial_dp(pi, caps)
    entries = {}
    for alpha in np.ndindex(*table.shape):
        p = float(table[alpha])
        if p >= 1e-300:
            entries[tuple(int(a) for a in alpha)] = p
    deficit = 1.0 - math.fsum(entries.values())
    return CountLaw(
        m=m, entries=entries, mass_deficit=max(0.0, deficit), cap=caps, tol=tail_tol
    )


# ------------------------------------------------------------------ sampling


@dataclass(frozen=True)
class ModuliSample:
    """radii[..., j] is modulus j; law_truncation bounds the total-variation
    gap to the untruncated law from sampling only the peak windows."""

    n: int
    radii: np.ndarray
    seed: int
    law_truncation: float


def _cells_for_index(pot, n, j, cfg, target_frac=1e-3):
    """(cell_lo, cell_hi, cell_mass, phi_max) with each cell below the
    target mass fraction; cells tile the peak windows only."""
    peaks = _windows_for_index(pot, n, j, cfg)
    windows = []
    for r0, h in sorted((p[0], 1.25 * p[1]) for p in peaks):
        a, b = max(1e-9, r0 - h), min(pot.r_max, r0 + h)
        if windows and a <= windows[-1][1]:
            windows[-1] = (windows[-1][0], max(windows[-1][1], b))
        else:
            windows.append((a, b))
    lo = np.concatenate([np.linspace(a, b, 65)[:-1] for a, b in windows])
    hi = np.concatenate([np.linspace(a, b, 65)[1:] for a, b in windows])

    def masses_of(a, b):
        mid = 0.5 * (a + b)
        half = 0.5 * (b - a)
        x = mid[:, None] + half[:, None] * _GL16[0][None, :]
        w = half[:, None] * _GL16[1][None, :]
        phi = (2 * j + 1) * np.log(x) - n * np.asarray(pot.q(x))
        return phi, w

    phi, w = masses_of(lo, hi)
    phi_max = float(phi.max())
    cell_mass = (w * np.exp(phi - phi_max)).sum(axis=1)
    for _ in range(24):
        total = cell_mass.sum()
        too_big = cell_mass > target_frac * total
        if not too_big.any():
            break
        parts = np.where(
            too_big,
            np.minimum(
                64, np.ceil(cell_mass / (target_frac * total)).astype(int) + 1
            ),
            1,
        )
        new_lo, new_hi = [], []
        for a, b, k in zip(lo, hi, parts):
            grid = np.linspace(a, b, k + 1)
            new_lo.append(grid[:-1])
            new_hi.append(grid[1:])
        lo = np.concatenate(new_lo)
        hi = np.concatenate(new_hi)
        phi, w = masses_of(lo, hi)
        phi_max = float(phi.max())
        cell_mass = (w * np.exp(phi - phi_max)).sum(axis=1)
    return lo, hi, cell_mass, phi_max


def _invert_cdf(pot, n, j, cell_lo, cell_hi, cell_mass, phi_max, targets):
    """Solve F(x) = target (in window-mass units) per draw, vectorized."""
    cdf = np.cumsum(cell_mass)
    total = cdf[-1]
    u = targets * total
    idx = np.searchsorted(cdf, u, side="right")
    idx = np.minimum(idx, len(cell_mass) - 1)
    lo = cell_lo[idx]
    hi = cell_hi[idx]
    below = np.where(idx > 0, cdf[idx - 1], 0.0)
    want = u - below  # mass to accumulate inside the cell
    mass_here = np.maximum(cell_mass[idx], 1e-300)

    def seg_mass(a, b):
        mid = 0.5 * (a + b)
        half = 0.5 * (b - a)
        x = mid[:, None] + half[:, None] * _GL8[0][None, :]
        w = half[:, None] * _GL8[1][None, :]
        phi = (2 * j + 1) * np.log(x) - n * np.asarray(pot.q(x))
        return (w * np.exp(phi - phi_max)).sum(axis=1)

    def dens(x):
        return np.exp((2 * j + 1) * np.log(x) - n * np.asarray(pot.q(x)) - phi_max)

    x = lo + (hi - lo) * (want / mass_here)
    blo, bhi = lo.copy(), hi.copy()
    for _ in range(8):
        resid = seg_mass(lo, x) - want
        high = resid > 0
        bhi = np.where(high, x, bhi)
        blo = np.where(~high, x, blo)
        f = np.maximum(dens(x), 1e-300)
        step = resid / f
        x_new = x - step
        bad = (x_new <= blo) | (x_new >= bhi)
        x = np.where(bad, 0.5 * (blo + bhi), x_new)
    resid = np.abs(seg_mass(lo, x) - want)
    tol = 1e-10 * total
    bad = resid > tol
    for _ in range(60):
        if not bad.any():
            break
        mid = 0.5 * (blo + bhi)
        resid_mid = seg_mass(lo, mid) - want
        high = resid_mid > 0
        bhi = np.where(bad & high, mid, bhi)
        blo = np.where(bad & ~high, mid, blo)
        x = np.where(bad, 0.5 * (blo + bhi), x)
        bad = bad & (np.abs(resid_mid) > tol) & ((bhi - blo) > 1e-15)
    return x


def sample_moduli(
    pot: RadialPotential,
    n: int,
    seed: int,
    cfg: QuadratureConfig = QuadratureConfig(),
    reps: int = 1,
) -> ModuliSample:
    """Draw the n independent moduli, modulus j ∝ r^(2j+1) e^(-n q(r)).

    Inverse CDF per index: the peak windows are tabulated into cells of at
    most 1e-3 of the window mass, a draw picks its cell by binary search,
    and the within-cell position is refined by safeguarded Newton plus
    bisection until the cumulative-probability residual is below 1e-10.
    Randomness is one substream per index j, so results are reproducible
    and independent of reps batching; the law truncation from ignoring
    mass outside the windows is recorded.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if reps < 1:
        raise ValueError("reps must be >= 1")
    radii = np.empty((reps, n))
    worst_trunc = 0.0
    base_rows = np.asarray(
        _log_norm_rows_full(pot, n, tuple(range(n)), (), None, cfg)
    )
    for j in range(n):
        cell_lo, cell_hi, cell_mass, phi_max = _cells_for_index(pot, n, j, cfg)
        log_win = math.log(2.0) + phi_max + math.log(float(cell_mass.sum()))
        worst_trunc = max(worst_trunc, -math.expm1(min(0.0, log_win - base_rows[j])))
        rng = np.random.Generator(
            np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(j,)))
        )
        u = rng.random(reps)
        radii[:, j] = _invert_cdf(
            pot, n, j, cell_lo, cell_hi, cell_mass, phi_max, u
        )
    out = radii[0] if reps == 1 else radii
    return ModuliSample(n=n, radii=out, seed=int(seed), law_truncation=float(worst_trunc))


def moduli_to_csv(sample: ModuliSample, path: str) -> None:
    """Write the draws as RFC-4180 CSV with columns j, r."""
    radii = np.atleast_2d(sample.radii)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["j", "r"])
        for row in radii:
            for j, r in enumerate(row):
                writer.writerow([j, f"{r:.17g}"])
