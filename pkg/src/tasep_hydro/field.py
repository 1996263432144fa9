"""Poisson arrow fields of the Harris construction on a finite window.

Bond ``x`` joins sites ``x`` and ``x + 1``; a window ``[lo, hi]`` of sites
carries bonds ``lo .. hi - 1``.  Arrow times are stored on an absolute clock
and reported relative to the field's ``start``, so successive time shifts
compose exactly.

A seeded field never has to be stored: its arrows are a pure function of
``(key, bond)`` and simulations query them on demand.  The event list is
built only when asked for.
"""

import numpy as np

from . import _kernels
from .rng import derive_key


class PoissonField:
    """Arrow field on sites ``[window_lo, window_hi]`` over ``(0, horizon]``.

    Either ``key`` (seeded) or ``(bonds, times)`` (explicit absolute times,
    sorted by time then bond) is given.
    """

    def __init__(self, window_lo, window_hi, start, stop, key=None, bonds=None, times=None, seed=None):
        if not window_lo < window_hi:
            raise ValueError("window needs at least one bond")
        if not stop >= start:
            raise ValueError("negative horizon")
        self.window_lo = int(window_lo)
        self.window_hi = int(window_hi)
        self.start = float(start)
        self.stop = float(stop)
        self.key = None if key is None else int(key)
        self.seed = seed
        self._bonds = bonds
        self._times = times

    @property
    def horizon(self):
        return self.stop - self.start

    @property
    def seeded(self):
        return self.key is not None

    @property
    def nbonds(self):
        return self.window_hi - self.window_lo

    def _absolute(self):
        if self._bonds is None:
            b, t = _kernels.materialize_arrows(
                np.uint64(self.key), self.window_lo, self.nbonds, self.start, self.stop
            )
            order = np.lexsort((b, t))
            self._bonds, self._times = b[order], t[order]
        return self._bonds, self._times

    @property
    def events(self):
        """``(bonds, times)`` in time order, times relative to ``start``."""
        b, t = self._absolute()
        return b.copy(), t - self.start

    def __len__(self):
        return self._absolute()[0].size

    def same_window(self, lo, hi):
        return self.window_lo == lo and self.window_hi == hi

    def __eq__(self, other):
        if not isinstance(other, PoissonField):
            return NotImplemented
        if (self.window_lo, self.window_hi, self.horizon) != (other.window_lo, other.window_hi, other.horizon):
            return False
        b1, t1 = self.events
        b2, t2 = other.events
        return np.array_equal(b1, b2) and np.array_equal(t1, t2)

    def __repr__(self):
        src = f"key={self.key:#x}" if self.seeded else f"{len(self)} events"
        return f"PoissonField([{self.window_lo}, {self.window_hi}], horizon={self.horizon:g}, {src})"


def sample_field(window_lo, window_hi, horizon, seed):
    """Seeded rate-1 field; an integer seed or a tuple of integers."""
    if not window_lo < window_hi:
        raise ValueError("empty window")
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    seeds = seed if isinstance(seed, tuple) else (seed,)
    return PoissonField(window_lo, window_hi, 0.0, float(horizon), key=derive_key(*seeds), seed=seed)


def field_from_key(window_lo, window_hi, horizon, key):
    return PoissonField(window_lo, window_hi, 0.0, float(horizon), key=key)


def from_events(window_lo, window_hi, horizon, events):
    """Explicit field from ``(bond, time)`` pairs (any order)."""
    if not window_lo < window_hi:
        raise ValueError("empty window")
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    ev = list(events)
    b = np.array([e[0] for e in ev], dtype=np.int64)
    t = np.array([e[1] for e in ev], dtype=float)
    if b.size and (b.min() < window_lo or b.max() > window_hi - 1):
        raise ValueError("event bond outside the window")
    if t.size and (t.min() <= 0 or t.max() > horizon):
        raise ValueError("event times must lie in (0, horizon]")
    order = np.lexsort((b, t))
    return PoissonField(window_lo, window_hi, 0.0, float(horizon), bonds=b[order], times=t[order])


def time_shift(field, t):
    """Field seen from time ``t``: arrows after ``t``, clock restarted."""
    if not 0 <= t <= field.horizon:
        raise ValueError("shift outside [0, horizon]")
    start = field.start + t
    if field.seeded:
        return PoissonField(field.window_lo, field.window_hi, start, field.stop, key=field.key, seed=field.seed)
    b, s = field._absolute()
    keep = s > start
    return PoissonField(field.window_lo, field.window_hi, start, field.stop, bonds=b[keep], times=s[keep])


def events_between(field, t0, t1):
    """Events with relative time in ``(t0, t1]``, in order."""
    if t0 > t1:
        raise ValueError("inverted range")
    if not (0 <= t0 and t1 <= field.horizon):
        raise ValueError("range outside [0, horizon]")
    b, s = field._absolute()
    lo = np.searchsorted(s, field.start + t0, side="right")
    hi = np.searchsorted(s, field.start + t1, side="right")
    return b[lo:hi].copy(), s[lo:hi] - field.start


def absolute_slice(field, t):
    """Absolute-time events in ``(start, start + t]`` for the sweep driver."""
    b, s = field._absolute()
    hi = np.searchsorted(s, field.start + t, side="right")
    lo = np.searchsorted(s, field.start, side="right")
    return b[lo:hi], s[lo:hi]


def dump_events(field, path):
    """Text file: a header line, then one ``bond time`` pair per line."""
    b, t = field.events
    with open(path, "w") as fh:
        fh.write(f"# window {field.window_lo} {field.window_hi} horizon {field.horizon:.17g}\n")
        for bond, time in zip(b.tolist(), t.tolist()):
            fh.write(f"{bond} {time:.17g}\n")


def load_events(path):
    with open(path) as fh:
        head = fh.readline().split()
        if len(head) != 6 or head[1] != "window" or head[4] != "horizon":
            raise ValueError(f"{path}: not an event file")
        lo, hi, horizon = int(head[2]), int(head[3]), float(head[5])
        ev = []
        for line in fh:
            if line.strip():
                bond, time = line.split()
                ev.append((int(bond), float(time)))
    return from_events(lo, hi, horizon, ev)
