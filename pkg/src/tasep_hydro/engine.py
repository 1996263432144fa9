"""Python-side plumbing around the compiled drivers."""

import numpy as np

from . import _kernels
from .field import absolute_slice

_NO_I = np.empty(0, np.int64)
_NO_F = np.empty(0)
_NO_PAIRS = np.empty((0, 2), np.int64)


def check_window(lo, hi, field):
    if not field.same_window(lo, hi):
        raise ValueError(
            f"window [{lo}, {hi}] does not match field window [{field.window_lo}, {field.window_hi}]"
        )


def check_time(field, t):
    if not 0 <= t <= field.horizon:
        raise ValueError(f"time {t!r} outside [0, {field.horizon!r}]")


def _source(field, t):
    if field.seeded:
        return False, _NO_I, _NO_F, np.uint64(field.key)
    b, s = absolute_slice(field, t)
    return True, b, s, np.uint64(0)


def evolve_words(words, lo, field, t, trackers=(), lines=(), line_lanes=(), pairs=()):
    """Evolve lane words in place up to relative time ``t``.

    trackers   sequence of ``(kind, lane_a, lane_b, site)``
    lines      sequence of speeds; fluxes are counted for ``line_lanes``

    Returns ``(records, tracker_sites, fluxes, violations, fired)`` where
    ``records`` is ``(index, relative time, site)`` arrays.
    """
    explicit, b, s, key = _source(field, t)
    tr = np.array(trackers, dtype=np.int64).reshape(-1, 4)
    speeds = np.array(lines, dtype=float)
    ll = np.array(line_lanes, dtype=np.int64)
    flux = np.zeros((speeds.size, ll.size), np.int64)
    pos = np.zeros(speeds.size, np.int64)
    pr = np.array(pairs, dtype=np.int64).reshape(-1, 2) if len(pairs) else _NO_PAIRS
    tpos = tr[:, 3].copy()
    ri, rt, rx, bad, fired = _kernels.run_lanes(
        words, lo, explicit, b, s, key, field.start, field.start + t,
        tr[:, 0].copy(), tr[:, 1].copy(), tr[:, 2].copy(), tpos,
        speeds, ll, pos, flux, pr,
    )
    return (ri, rt - field.start, rx), tpos, flux, bad, fired


def evolve_labels(labels, lo, field, t, tagmap=None):
    explicit, b, s, key = _source(field, t)
    tm = _NO_I if tagmap is None else tagmap
    ri, rt, rx = _kernels.run_labels(labels, lo, explicit, b, s, key, field.start, field.start + t, tm)
    return ri, rt - field.start, rx


def pack(*occupancies):
    """Lane words from 0/1 arrays (lane ``l`` is bit ``l``)."""
    if len(occupancies) > 64:
        raise ValueError("at most 64 lanes")
    words = np.zeros(occupancies[0].size, np.uint64)
    for l, occ in enumerate(occupancies):
        words |= occ.astype(np.uint64) << np.uint64(l)
    return words


def unpack(words, lane):
    return ((words >> np.uint64(lane)) & np.uint64(1)).astype(np.uint8)


def split_records(records, count, start_sites):
    """Per-tracker ``(times, sites)`` including the initial sample at time 0."""
    ri, rt, rx = records
    out = []
    for k in range(count):
        sel = ri == k
        out.append((
            np.concatenate(([0.0], rt[sel])),
            np.concatenate(([start_sites[k]], rx[sel])).astype(np.int64),
        ))
    return out
