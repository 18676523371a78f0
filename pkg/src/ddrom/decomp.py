"""Overlapping domain decomposition with linear blending.

A domain is split into k subdomains of equal nominal extent.  Each
subdomain is extended half the overlap width past each interior boundary,
so neighbors share a strip (or arc) of points.  Blending weights are 1 on
a subdomain's closed interior, ramp linearly to 0 across each shared
region, and vanish elsewhere; at every point the weights of all subdomains
sum to one, so recombining subdomain fields is a weighted average that
reproduces any consistently restricted global field.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Geometry

__all__ = [
    "Decomposition",
    "BlendingWeights",
    "decompose_interval",
    "decompose_sectors",
    "blending_weights",
    "recombine",
    "annular_sector_fraction",
]

_TWO_PI = 2.0 * np.pi

TOPOLOGIES = ("single", "interval", "annular")


@dataclass(frozen=True)
class Decomposition:
    """Partition of a point set into overlapping subdomains.

    dof_indices holds each subdomain's point indices in ascending order;
    interior holds the interior delimiters (coordinates for intervals,
    angles for sectors) inside which a subdomain fully owns the solution;
    adjacency lists which subdomains share points.
    """

    topology: str
    n_x: int
    dof_indices: tuple[np.ndarray, ...]
    interior: tuple[tuple[float, float], ...]
    adjacency: tuple[frozenset[int], ...]
    overlap: float

    def __post_init__(self):
        if self.topology not in TOPOLOGIES:
            raise ValueError(f"unknown topology {self.topology!r}")
        k = len(self.dof_indices)
        if k < 1 or len(self.interior) != k or len(self.adjacency) != k:
            raise ValueError("inconsistent subdomain counts")
        frozen = []
        seen = np.zeros(self.n_x, dtype=bool)
        for idx in self.dof_indices:
            idx = np.asarray(idx, dtype=np.int64)
            if idx.size == 0:
                raise ValueError("empty subdomain")
            if np.any(idx < 0) or np.any(idx >= self.n_x):
                raise ValueError("point index out of range")
            if np.unique(idx).size != idx.size:
                raise ValueError("duplicate point indices in a subdomain")
            idx.setflags(write=False)
            frozen.append(idx)
            seen[idx] = True
        if not seen.all():
            raise ValueError("subdomains do not cover every point")
        object.__setattr__(self, "dof_indices", tuple(frozen))
        adj = tuple(frozenset(int(j) for j in s) for s in self.adjacency)
        for i, nbrs in enumerate(adj):
            for j in nbrs:
                if j == i or not 0 <= j < k:
                    raise ValueError("bad adjacency entry")
                if i not in adj[j]:
                    raise ValueError("adjacency is not symmetric")
        object.__setattr__(self, "adjacency", adj)
        object.__setattr__(
            self, "interior", tuple((float(a), float(b)) for a, b in self.interior)
        )

    @property
    def k(self) -> int:
        return len(self.dof_indices)

    def subdomain_sizes(self) -> tuple[int, ...]:
        return tuple(idx.size for idx in self.dof_indices)

    @classmethod
    def single(cls, n_x: int) -> "Decomposition":
        """Degenerate one-subdomain decomposition covering every point."""
        return cls(
            topology="single",
            n_x=n_x,
            dof_indices=(np.arange(n_x, dtype=np.int64),),
            interior=((-np.inf, np.inf),),
            adjacency=(frozenset(),),
            overlap=0.0,
        )


@dataclass(frozen=True)
class BlendingWeights:
    """Per-subdomain weight of every point, shape (k, n_x); rows sum to one
    across subdomains at each point."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 2:
            raise ValueError("weights must be a (k, n_x) matrix")
        if np.any(w < 0.0) or np.any(w > 1.0):
            raise ValueError("weights must lie in [0, 1]")
        w = np.array(w)
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def k(self) -> int:
        return self.weights.shape[0]

    @property
    def n_x(self) -> int:
        return self.weights.shape[1]


def _check_k_overlap(k: int, overlap: float, limit: float, n_x: int, what: str):
    if k < 2:
        raise ValueError("need at least two subdomains; use Decomposition.single")
    if k > n_x:
        raise ValueError("more subdomains than grid points")
    if not np.isfinite(overlap) or overlap <= 0.0:
        raise ValueError(f"{what} must be positive")
    if overlap >= limit:
        raise ValueError(
            f"{what} {overlap:g} too large: non-adjacent subdomains would "
            f"intersect (limit {limit:g})"
        )


def decompose_interval(geometry: Geometry, k: int, overlap_width: float) -> Decomposition:
    """Split a non-periodic 1-D grid into k overlapping subdomains.

    Nominal boundaries are equally spaced over the coordinate extent; each
    subdomain reaches overlap_width/2 past every interior boundary.
    """
    if geometry.dim != 1 or geometry.periodic:
        raise ValueError("interval decomposition needs a non-periodic 1-D geometry")
    x = geometry.coords[:, 0]
    lo, hi = float(x.min()), float(x.max())
    if hi <= lo:
        raise ValueError("degenerate interval")
    _check_k_overlap(k, overlap_width, (hi - lo) / k, geometry.n_x, "overlap width")
    half = 0.5 * overlap_width
    bounds = np.linspace(lo, hi, k + 1)

    dof, interior = [], []
    for i in range(k):
        sup_lo = bounds[i] - half if i > 0 else lo
        sup_hi = bounds[i + 1] + half if i < k - 1 else hi
        int_lo = bounds[i] + half if i > 0 else lo
        int_hi = bounds[i + 1] - half if i < k - 1 else hi
        idx = np.nonzero((x >= sup_lo) & (x <= sup_hi))[0]
        dof.append(idx.astype(np.int64))
        interior.append((int_lo, int_hi))
    adjacency = [
        frozenset(j for j in (i - 1, i + 1) if 0 <= j < k) for i in range(k)
    ]
    dec = Decomposition(
        topology="interval",
        n_x=geometry.n_x,
        dof_indices=tuple(dof),
        interior=tuple(interior),
        adjacency=tuple(adjacency),
        overlap=float(overlap_width),
    )
    _check_overlap_points(dec)
    return dec


def decompose_sectors(geometry: Geometry, k: int, overlap_angle: float) -> Decomposition:
    """Split a circular or annular grid into k overlapping angular sectors.

    Sector i nominally spans [2*pi*i/k, 2*pi*(i+1)/k) and is extended
    overlap_angle/2 past both boundaries, wrapping around the seam.
    """
    if not geometry.periodic or geometry.angular is None:
        raise ValueError(
            "sector decomposition needs a periodic geometry with angles attached"
        )
    _check_k_overlap(k, overlap_angle, _TWO_PI / k, geometry.n_x, "overlap angle")
    theta = geometry.angular
    half = 0.5 * overlap_angle
    extent = _TWO_PI / k + overlap_angle

    dof, interior = [], []
    for i in range(k):
        start = _TWO_PI * i / k
        rel = np.mod(theta - (start - half), _TWO_PI)
        idx = np.nonzero(rel <= extent)[0]
        dof.append(idx.astype(np.int64))
        interior.append(
            (
                np.mod(start + half, _TWO_PI),
                np.mod(start + _TWO_PI / k - half, _TWO_PI),
            )
        )
    adjacency = [
        frozenset(j for j in ((i - 1) % k, (i + 1) % k) if j != i) for i in range(k)
    ]
    dec = Decomposition(
        topology="annular",
        n_x=geometry.n_x,
        dof_indices=tuple(dof),
        interior=tuple(interior),
        adjacency=tuple(adjacency),
        overlap=float(overlap_angle),
    )
    _check_overlap_points(dec)
    return dec


def _check_overlap_points(dec: Decomposition) -> None:
    sets = [set(idx.tolist()) for idx in dec.dof_indices]
    for i in range(dec.k):
        for j in range(i + 1, dec.k):
            shared = bool(sets[i] & sets[j])
            if j in dec.adjacency[i] and not shared:
                raise ValueError(
                    f"overlap between subdomains {i} and {j} contains no grid points"
                )
            if j not in dec.adjacency[i] and shared:
                raise ValueError(
                    f"non-adjacent subdomains {i} and {j} share grid points"
                )


def _interval_weights(dec: Decomposition, geometry: Geometry) -> np.ndarray:
    x = geometry.coords[:, 0]
    w = np.zeros((dec.k, geometry.n_x))
    for i in range(dec.k):
        int_lo, int_hi = dec.interior[i]
        wi = w[i]
        wi[(x >= int_lo) & (x <= int_hi)] = 1.0
        if i > 0:
            nb_hi = dec.interior[i - 1][1]  # left neighbor's interior end
            mask = (x > nb_hi) & (x < int_lo)
            wi[mask] = (x[mask] - nb_hi) / (int_lo - nb_hi)
        if i < dec.k - 1:
            nb_lo = dec.interior[i + 1][0]  # right neighbor's interior start
            mask = (x > int_hi) & (x < nb_lo)
            wi[mask] = (x[mask] - nb_lo) / (int_hi - nb_lo)
    return w


def _sector_weights(dec: Decomposition, geometry: Geometry) -> np.ndarray:
    theta = geometry.angular
    k = dec.k
    half = 0.5 * dec.overlap
    extent = _TWO_PI / k + dec.overlap
    w = np.zeros((k, geometry.n_x))
    for i in range(k):
        start = _TWO_PI * i / k
        rel = np.mod(theta - (start - half), _TWO_PI)
        wi = w[i]
        core = (rel >= dec.overlap) & (rel <= extent - dec.overlap)
        wi[core] = 1.0
        up = rel < dec.overlap
        wi[up] = rel[up] / dec.overlap
        down = (rel > extent - dec.overlap) & (rel <= extent)
        wi[down] = (extent - rel[down]) / dec.overlap
    return w


def blending_weights(dec: Decomposition, geometry: Geometry) -> BlendingWeights:
    """Linear partition-of-unity weights for a decomposition.

    Weight is 1 on a subdomain's closed interior, ramps linearly from the
    subdomain's own interior boundary (1) to the neighbor's interior
    boundary (0) across each overlap, and is 0 elsewhere.
    """
    if geometry.n_x != dec.n_x:
        raise ValueError("geometry and decomposition disagree on the point count")
    if dec.topology == "single":
        w = np.ones((1, dec.n_x))
    elif dec.topology == "interval":
        w = _interval_weights(dec, geometry)
    else:
        w = _sector_weights(dec, geometry)
    # clip stray rounding just outside [0, 1]
    np.clip(w, 0.0, 1.0, out=w)
    return BlendingWeights(w)


def recombine(fields, weights: BlendingWeights) -> np.ndarray:
    """Blend full-length subdomain fields into one global field.

    Each field is a length-n vector (or (n, n_t) matrix) that is zero off
    its subdomain; n must be a multiple of the point count so weights are
    tiled across variable blocks.  Returns sum_i weight_i * field_i.
    """
    fields = [np.asarray(f, dtype=np.float64) for f in fields]
    if len(fields) != weights.k:
        raise ValueError("need one field per subdomain")
    n = fields[0].shape[0]
    if n % weights.n_x != 0:
        raise ValueError("field length must be a multiple of the point count")
    reps = n // weights.n_x
    out = None
    for f, w in zip(fields, weights.weights):
        if f.shape[0] != n or f.ndim not in (1, 2):
            raise ValueError("fields must share one length and be 1-D or 2-D")
        wf = np.tile(w, reps)
        term = f * (wf[:, None] if f.ndim == 2 else wf)
        out = term if out is None else out + term
    return out


def annular_sector_fraction(k: int, overlap_angle: float) -> float:
    """Fraction of an annular domain covered by one extended sector."""
    if k < 1:
        raise ValueError("need at least one sector")
    if k == 1:
        return 1.0
    if not 0.0 < overlap_angle < _TWO_PI / k:
        raise ValueError("overlap angle out of range")
    return (_TWO_PI / k + overlap_angle) / _TWO_PI
