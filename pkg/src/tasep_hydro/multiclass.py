"""Coupled evolutions on a shared arrow field: basic coupling, first and
second class particles, and the cut operator."""

import numpy as np

from .field import sample_field
from .engine import check_time, check_window, evolve_labels, evolve_words, pack, split_records, unpack
from .tasep import (
    Configuration,
    ProfileSpec,
    TrackedTrajectory,
    _same_window,
    force_hole_at_origin,
    force_particle_at_origin,
    init_product,
)

HOLE, FIRST, SECOND = 0, 1, 2


class TwoClassConfiguration:
    """Labels 0 (hole), 1 (first class) and 2 (second class) per site."""

    def __init__(self, offset, labels):
        lab = np.asarray(labels)
        if lab.ndim != 1 or lab.size < 2:
            raise ValueError("a configuration needs at least two sites")
        if not np.isin(lab, (0, 1, 2)).all():
            raise ValueError("labels must be 0, 1 or 2")
        self.offset = int(offset)
        self.labels = lab.astype(np.int8)

    @property
    def lo(self):
        return self.offset

    @property
    def hi(self):
        return self.offset + self.labels.size - 1

    def __len__(self):
        return self.labels.size

    def __getitem__(self, x):
        if not self.lo <= x <= self.hi:
            raise IndexError(f"site {x} outside [{self.lo}, {self.hi}]")
        return int(self.labels[x - self.offset])

    def __eq__(self, other):
        if not isinstance(other, TwoClassConfiguration):
            return NotImplemented
        return self.offset == other.offset and np.array_equal(self.labels, other.labels)

    def __repr__(self):
        return (f"TwoClassConfiguration(offset={self.offset}, n={len(self)}, "
                f"first={int((self.labels == 1).sum())}, second={int((self.labels == 2).sum())})")

    @property
    def sigma(self):
        return Configuration(self.offset, (self.labels == FIRST).astype(np.uint8))

    @property
    def xi(self):
        return Configuration(self.offset, (self.labels == SECOND).astype(np.uint8))

    @property
    def low(self):
        return self.sigma

    @property
    def high(self):
        return Configuration(self.offset, (self.labels != HOLE).astype(np.uint8))

    def second_class_sites(self):
        return np.flatnonzero(self.labels == SECOND) + self.offset

    def dumps(self):
        return f"offset {self.offset}\n" + "".join("012"[v] for v in self.labels) + "\n"

    @classmethod
    def loads(cls, text):
        head, body = text.strip().split("\n", 1)
        key, off = head.split()
        if key != "offset":
            raise ValueError("missing offset header")
        return cls(int(off), np.frombuffer(body.strip().encode(), np.uint8) - ord("0"))


def two_class_from_pair(c_low, c_high):
    _same_window(c_low, c_high)
    if not c_low <= c_high:
        raise ValueError("pair is not ordered sitewise")
    labels = np.where(c_low.occupancy == 1, FIRST, np.where(c_high.occupancy == 1, SECOND, HOLE))
    return TwoClassConfiguration(c_low.offset, labels)


def couple(c1, c2, field, t):
    """Evolve two configurations with the same arrows."""
    _same_window(c1, c2)
    check_window(c1.lo, c1.hi, field)
    check_time(field, t)
    words = pack(c1.occupancy, c2.occupancy)
    evolve_words(words, c1.lo, field, t)
    return Configuration(c1.offset, unpack(words, 0)), Configuration(c1.offset, unpack(words, 1))


def evolve_two_class(tc, field, t, track=()):
    """Two-class dynamics applied label by label.

    ``track`` lists sites holding second class particles to follow; those
    instances keep their identity through exchanges with first class
    particles.  Returns the evolved configuration, plus the trajectories
    when ``track`` is non-empty.
    """
    check_window(tc.lo, tc.hi, field)
    check_time(field, t)
    lab = tc.labels.copy()
    tagmap = None
    if track:
        tagmap = np.full(lab.size, -1, np.int64)
        for k, y in enumerate(track):
            if tc[y] != SECOND:
                raise ValueError(f"no second class particle at {y}")
            tagmap[y - tc.lo] = k
    records = evolve_labels(lab, tc.lo, field, t, tagmap)
    out = TwoClassConfiguration(tc.offset, lab)
    if not track:
        return out
    trajs = [
        TrackedTrajectory(f"second class from {y}", ts, xs)
        for y, (ts, xs) in zip(track, split_records(records, len(track), list(track)))
    ]
    return out, trajs


def cut(obj, z):
    """Remove particles strictly left of ``z`` (second class ones only for a
    two-class configuration)."""
    if isinstance(obj, TwoClassConfiguration):
        lab = obj.labels.copy()
        k = int(np.clip(z - obj.offset, 0, lab.size))
        head = lab[:k]
        head[head == SECOND] = HOLE
        return TwoClassConfiguration(obj.offset, lab)
    if isinstance(obj, Configuration):
        occ = obj.occupancy.copy()
        k = int(np.clip(z - obj.offset, 0, occ.size))
        occ[:k] = 0
        return Configuration(obj.offset, occ)
    raise TypeError("cut applies to configurations")


def rightmost_second_class(tc):
    s = tc.second_class_sites()
    if s.size == 0:
        raise ValueError("no second class particle")
    return int(s[-1])


def leftmost_second_class(tc):
    s = tc.second_class_sites()
    if s.size == 0:
        raise ValueError("no second class particle")
    return int(s[0])


def _check_window_has_origin(window):
    lo, hi = window
    if not lo <= 0 < hi:
        raise ValueError("window must contain sites 0 and 1")


def isolated_pair(alpha, window, init_seed):
    """``(hole-forced, particle-forced)`` draws of the same density-alpha
    product configuration."""
    c = init_product(ProfileSpec.constant(alpha), window, init_seed)
    return force_hole_at_origin(c), force_particle_at_origin(c)


def tagged_pair(lam, rho, window, init_seed):
    """Density-lam draw with a hole at 0 below the density-rho draw with a
    particle at 0, both from the same uniforms."""
    low = init_product(ProfileSpec.constant(lam), window, init_seed)
    high = init_product(ProfileSpec.constant(rho), window, init_seed)
    return force_hole_at_origin(low), force_particle_at_origin(high)


def isolated_second_class(alpha, window, horizon, seeds, field=None):
    """Track the single discrepancy started at the origin between the two
    origin-forced draws at density ``alpha``.

    ``seeds = (init_seed, field_seed)``; passing ``field`` overrides the
    field seed.  Returns the trajectory and the final two-class
    configuration.
    """
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    _check_window_has_origin(window)
    low, high = isolated_pair(alpha, window, seeds[0])
    return _run_tagged(low, high, window, horizon, seeds, field, f"R^{alpha:g}")


def tagged_second_class(lam, rho, window, horizon, seeds, field=None):
    """Track the second class particle started at the origin in the coupling
    of a density-lam and a density-rho configuration."""
    if not 0 <= lam < rho <= 1:
        raise ValueError("need 0 <= lam < rho <= 1")
    _check_window_has_origin(window)
    low, high = tagged_pair(lam, rho, window, seeds[0])
    return _run_tagged(low, high, window, horizon, seeds, field, f"Y^{lam:g},{rho:g}")


def _run_tagged(low, high, window, horizon, seeds, field, label):
    if field is None:
        field = sample_field(window[0], window[1], horizon, seeds[1])
    tc = two_class_from_pair(low, high)
    final, (traj,) = evolve_two_class(tc, field, horizon, track=(0,))
    traj.label = label
    return traj, final
