"""TASEP configurations and their evolution through an arrow field."""

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import _kernels
from .engine import check_time, check_window, evolve_words, pack, split_records, unpack
from .rng import derive_key


class Configuration:
    """Occupancy of the sites ``offset .. offset + len - 1``."""

    def __init__(self, offset, occupancy):
        occ = np.asarray(occupancy)
        if occ.ndim != 1 or occ.size < 2:
            raise ValueError("a configuration needs at least two sites")
        if not np.isin(occ, (0, 1)).all():
            raise ValueError("occupancy values must be 0 or 1")
        self.offset = int(offset)
        self.occupancy = occ.astype(np.uint8)

    @property
    def lo(self):
        return self.offset

    @property
    def hi(self):
        return self.offset + self.occupancy.size - 1

    @property
    def sites(self):
        return np.arange(self.lo, self.hi + 1)

    def __len__(self):
        return self.occupancy.size

    def __getitem__(self, x):
        if not self.lo <= x <= self.hi:
            raise IndexError(f"site {x} outside [{self.lo}, {self.hi}]")
        return int(self.occupancy[x - self.offset])

    def __eq__(self, other):
        if not isinstance(other, Configuration):
            return NotImplemented
        return self.offset == other.offset and np.array_equal(self.occupancy, other.occupancy)

    def __le__(self, other):
        _same_window(self, other)
        return bool((self.occupancy <= other.occupancy).all())

    def __repr__(self):
        return f"Configuration(offset={self.offset}, n={len(self)}, particles={self.particles})"

    @property
    def particles(self):
        return int(self.occupancy.sum())

    def positions(self):
        return np.flatnonzero(self.occupancy) + self.offset

    def restrict(self, lo, hi):
        if lo < self.lo or hi > self.hi:
            raise ValueError("restriction leaves the window")
        return self.occupancy[lo - self.offset:hi - self.offset + 1]

    def with_site(self, x, value):
        occ = self.occupancy.copy()
        if not self.lo <= x <= self.hi:
            raise ValueError(f"site {x} outside the window")
        occ[x - self.offset] = value
        return Configuration(self.offset, occ)

    def dumps(self):
        return f"offset {self.offset}\n" + "".join("01"[v] for v in self.occupancy) + "\n"

    @classmethod
    def loads(cls, text):
        head, body = text.strip().split("\n", 1)
        key, off = head.split()
        if key != "offset":
            raise ValueError("missing offset header")
        return cls(int(off), np.frombuffer(body.strip().encode(), np.uint8) - ord("0"))


def _same_window(a, b):
    if a.offset != b.offset or len(a) != len(b):
        raise ValueError("configurations live on different windows")


@dataclass(frozen=True)
class ProfileSpec:
    """Initial density profile.

    kind ``constant``: density ``rho`` everywhere; ``step``: ``lam`` on
    ``x <= 0`` and ``rho`` on ``x > 0``; ``profile``: ``u0(eps * x)``.
    """

    kind: str
    rho: float = 0.0
    lam: float = 0.0
    u0: object = None
    eps: float = 0.0

    def __post_init__(self):
        if self.kind not in ("constant", "step", "profile"):
            raise ValueError(f"unknown profile kind {self.kind!r}")
        for name in ("rho", "lam"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.kind == "profile" and (self.u0 is None or not self.eps > 0):
            raise ValueError("profile kind needs u0 and eps > 0")

    @classmethod
    def constant(cls, rho):
        return cls("constant", rho=rho)

    @classmethod
    def step(cls, lam, rho):
        return cls("step", lam=lam, rho=rho)

    def densities(self, sites):
        if self.kind == "constant":
            return np.full(sites.size, self.rho)
        if self.kind == "step":
            return np.where(sites <= 0, self.lam, self.rho)
        d = np.array([float(self.u0(self.eps * x)) for x in sites])
        if ((d < 0) | (d > 1)).any():
            raise ValueError("profile densities must lie in [0, 1]")
        return d


def site_uniforms(window, seed):
    """Per-site uniforms ``U(x)`` on ``[lo, hi]``; ``seed`` is an int or a
    tuple of ints.  ``U(x)`` depends on ``(seed, x)`` only."""
    lo, hi = window
    key = derive_key(*(seed if isinstance(seed, tuple) else (seed,)))
    return _kernels.site_uniforms(np.uint64(key), lo, hi - lo + 1)


def init_product(profile, window, seed):
    """Independent Bernoulli sites, ``eta(x) = 1{U(x) < density(x)}``."""
    lo, hi = window
    if not lo < hi:
        raise ValueError("empty window")
    sites = np.arange(lo, hi + 1)
    u = site_uniforms(window, seed)
    return Configuration(lo, (u < profile.densities(sites)).astype(np.uint8))


def force_particle_at_origin(c):
    return c.with_site(0, 1)


def force_hole_at_origin(c):
    return c.with_site(0, 0)


def evolve(c, field, t):
    """Configuration at time ``t`` (events at exactly ``t`` included)."""
    check_window(c.lo, c.hi, field)
    check_time(field, t)
    words = pack(c.occupancy)
    evolve_words(words, c.lo, field, t)
    return Configuration(c.offset, unpack(words, 0))


@dataclass
class TrackedTrajectory:
    """Jump record of one distinguished object: ``sites[k]`` from ``times[k]`` on."""

    label: str
    times: np.ndarray
    sites: np.ndarray
    meta: dict = dc_field(default_factory=dict)

    @property
    def start(self):
        return int(self.sites[0])

    @property
    def final(self):
        return int(self.sites[-1])

    def at(self, t):
        k = np.searchsorted(self.times, t, side="right") - 1
        return int(self.sites[max(k, 0)])

    def at_many(self, ts):
        k = np.searchsorted(self.times, ts, side="right") - 1
        return self.sites[np.maximum(k, 0)]

    @property
    def jumps(self):
        return self.times.size - 1

    def __eq__(self, other):
        if not isinstance(other, TrackedTrajectory):
            return NotImplemented
        return np.array_equal(self.times, other.times) and np.array_equal(self.sites, other.sites)


def tag_position(c, i):
    """Site of particle ``i``: particle 0 is the rightmost one at ``x <= 0``,
    indices increase to the right."""
    pos = c.positions()
    left = np.flatnonzero(pos <= 0)
    if left.size == 0:
        raise ValueError("no particle at or left of the origin to anchor the labels")
    k = left[-1] + int(i)
    if not 0 <= k < pos.size:
        raise ValueError(f"no particle with label {i} in the window")
    return int(pos[k])


def evolve_traced(c, field, t, tags):
    """Evolve and follow the particles with the given labels."""
    check_window(c.lo, c.hi, field)
    check_time(field, t)
    starts = [tag_position(c, i) for i in tags]
    words = pack(c.occupancy)
    trackers = [(0, 0, 0, x) for x in starts]
    records, _, _, _, _ = evolve_words(words, c.lo, field, t, trackers=trackers)
    trajs = [
        TrackedTrajectory(f"particle {i}", ts, xs)
        for i, (ts, xs) in zip(tags, split_records(records, len(starts), starts))
    ]
    return Configuration(c.offset, unpack(words, 0)), trajs


def floor_site(x):
    return int(math.floor(x))
