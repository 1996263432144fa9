"""Fluxes across moving lines, density fields, local correlations and
replica statistics."""

import math
from dataclasses import dataclass

import numpy as np

from .engine import check_time, check_window, evolve_words, pack, unpack
from .multiclass import TwoClassConfiguration
from .tasep import Configuration


@dataclass(frozen=True)
class ObservationLine:
    """Line ``y_t = speed * t``, or a step path given by ``(times, sites)``
    with ``times[0] == 0`` and ``sites[0] == 0``."""

    speed: float = 0.0
    times: tuple = None
    sites: tuple = None

    def __post_init__(self):
        if (self.times is None) != (self.sites is None):
            raise ValueError("a path needs both times and sites")
        if self.times is not None:
            if len(self.times) == 0 or self.times[0] != 0 or self.sites[0] != 0:
                raise ValueError("a path must start at site 0 at time 0")

    @classmethod
    def following(cls, traj):
        return cls(times=tuple(traj.times.tolist()), sites=tuple(int(s) for s in traj.sites))

    @property
    def is_path(self):
        return self.times is not None

    def site(self, t):
        """Integer part of ``y_t``."""
        if self.is_path:
            k = int(np.searchsorted(self.times, t, side="right")) - 1
            return int(self.sites[max(k, 0)])
        return int(math.floor(self.speed * t))


def _counts_of(c, mask):
    if isinstance(c, TwoClassConfiguration):
        lab = c.labels
        occ = np.zeros(lab.size, np.uint8)
        if mask & 1:
            occ |= (lab == 1).astype(np.uint8)
        if mask & 2:
            occ |= (lab == 2).astype(np.uint8)
        return occ
    return c.occupancy


def label_flux(initial_positions, final_positions, y):
    """Particles that started at ``x <= 0`` and end right of ``y``, minus
    those that started at ``x > 0`` and end at or left of ``y``.  Positions
    are matched by order."""
    p0 = np.asarray(initial_positions)
    p1 = np.asarray(final_positions)
    if p0.size != p1.size:
        raise ValueError("particle number changed")
    return int(((p0 <= 0) & (p1 > y)).sum() - ((p0 > 0) & (p1 <= y)).sum())


def flux(initial, field, line, t, method="crossing", classes="all"):
    """Net number of particles crossing ``line`` from left to right by ``t``.

    ``initial`` is a ``Configuration`` or a ``TwoClassConfiguration``; for
    the latter ``classes`` picks ``"first"``, ``"second"`` or ``"all"``.
    ``method="crossing"`` counts jumps across the line and line moves over
    particles; ``method="labels"`` compares ordered positions before and
    after.
    """
    check_time(field, t)
    mask = {"first": 1, "second": 2, "all": 3}[classes]
    if isinstance(initial, TwoClassConfiguration):
        low = (initial.labels == 1).astype(np.uint8)
        high = (initial.labels != 0).astype(np.uint8)
    elif isinstance(initial, Configuration):
        if classes != "all":
            raise ValueError("class selection needs a two-class configuration")
        low = np.zeros_like(initial.occupancy)
        high = initial.occupancy
    else:
        raise TypeError("flux needs a configuration")
    lo, hi = initial.lo, initial.hi
    check_window(lo, hi, field)
    y_end = line.site(t)
    if not lo <= y_end < hi:
        raise ValueError("observation line leaves the window")
    if method == "crossing":
        if line.is_path:
            raise ValueError("crossing counts need a straight line; use method='labels'")
        words = pack(low, high)
        _, _, counts, _, _ = evolve_words(words, lo, field, t, lines=[line.speed], line_lanes=[0, 1])
        f_low, f_high = int(counts[0, 0]), int(counts[0, 1])
        return {1: f_low, 2: f_high - f_low, 3: f_high}[mask]
    if method != "labels":
        raise ValueError(f"unknown method {method!r}")
    words = pack(low, high)
    evolve_words(words, lo, field, t)
    if mask == 2:
        # second class particles keep their order among themselves
        before = np.flatnonzero(high & ~low) + lo
        after = np.flatnonzero(unpack(words, 1) & ~unpack(words, 0)) + lo
    else:
        lane = 0 if mask == 1 else 1
        before = np.flatnonzero((low, high)[lane]) + lo
        after = np.flatnonzero(unpack(words, lane)) + lo
    return label_flux(before, after, y_end)


def density_field(c, epsilon, a, b):
    """``epsilon`` times the particle count over sites with ``a <= epsilon x <= b``."""
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    if a > b:
        raise ValueError("need a <= b")
    first = math.ceil(a / epsilon)
    last = math.floor(b / epsilon)
    if first - 1 < c.lo or last + 1 > c.hi:
        raise ValueError("interval leaves the window")
    xs = np.arange(first - 1, last + 2)
    keep = (a <= epsilon * xs) & (epsilon * xs <= b)
    occ = c.occupancy[xs - c.offset]
    return epsilon * float(occ[keep].sum())


def local_correlation(c, A, shift):
    """Product of occupancies over ``floor(x + shift)`` for ``x`` in ``A``."""
    value = 1
    for x in A:
        y = int(math.floor(x + shift))
        if not c.lo <= y <= c.hi:
            raise ValueError("shifted set leaves the window")
        value *= int(c.occupancy[y - c.offset])
    return value


@dataclass(frozen=True)
class ReplicaStatistics:
    n: int
    mean: float
    std: float
    stderr: float
    target: float = None
    z: float = None

    def within(self, band):
        return self.z is not None and abs(self.z) < band

    def as_dict(self):
        return {"n": self.n, "mean": self.mean, "std": self.std, "stderr": self.stderr,
                "target": self.target, "z": self.z}


def replica_mean(values, target=None):
    v = np.asarray(values, dtype=float)
    if v.size < 2:
        raise ValueError("need at least two replicas")
    mean = float(v.mean())
    std = float(v.std(ddof=1))
    stderr = std / math.sqrt(v.size)
    z = None
    if target is not None:
        diff = mean - target
        if stderr > 0:
            z = diff / stderr
        else:
            # no spread: exact agreement or an infinitely significant miss
            z = 0.0 if diff == 0 else math.copysign(math.inf, diff)
    return ReplicaStatistics(int(v.size), mean, std, stderr, target, z)
