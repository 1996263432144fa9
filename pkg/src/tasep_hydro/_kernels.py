"""Compiled inner loops for the Harris construction.

Two state encodings are evolved here.

* Lane words: one ``uint64`` per site, bit ``l`` is the occupancy of
  configuration (lane) ``l``.  All lanes see the same arrows, so a batch of
  coupled configurations costs one pass:  an arrow on bond ``i`` moves
  ``m[i] & ~m[i+1]`` in every lane at once.
* Labels: ``int8`` per site with 0 hole, 1 first class, 2 second class.  An
  effective arrow swaps the labels at ``i`` and ``i+1``; effective pairs are
  ``(1,0)``, ``(2,0)`` and ``(1,2)``.

Arrows come from a counter-based hash (splitmix64 finalizer):  the arrows of
a bond are a pure function of ``(field key, bond)``, never of the window or
horizon they are requested for.  Inside each unit time block ``[k, k+1)`` a
bond carries a Poisson(1) number of arrows at i.i.d. uniform times.

Both drivers accept either an explicit time-ordered event list or a field key.
With a key, only active bonds hold a scheduled arrow (calendar queue).  In
both encodings a bond can only become inactive by firing, so the queue never
holds stale entries and the fired arrows are exactly the effective subset of
the full event list in ``(time, bond)`` order.

Loop bodies are written out inline: passing arrays through helper calls
costs more than the jump itself.
"""

import math

import numpy as np
from numba import njit

_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_ONE = np.uint64(1)
_ZERO = np.uint64(0)
_INV53 = 1.0 / 9007199254740992.0
_BOND_TAG = np.uint64(0x5851F42D4C957F2D)
_SITE_TAG = np.uint64(0x2545F4914F6CDD1D)
_INDEX_OFFSET = 1 << 62

_POISSON1_CDF = np.cumsum(
    np.array([math.exp(-1.0) / math.factorial(k) for k in range(30)])
)
_POISSON1_CDF[-1] = 2.0


@njit(cache=True, inline="always")
def mix64(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@njit(cache=True, inline="always")
def _to_unit(z):
    # 53-bit uniform strictly inside (0, 1)
    return (float(z >> _S11) + 0.5) * _INV53


@njit(cache=True, inline="always")
def bond_key(field_key, bond):
    return mix64(field_key ^ mix64(np.uint64(bond + _INDEX_OFFSET) ^ _BOND_TAG))


@njit(cache=True, inline="always")
def _block_key(bkey, block):
    return mix64(bkey + np.uint64(block) * _GOLDEN)


@njit(cache=True, inline="always")
def _block_count(blk):
    u = _to_unit(mix64(blk))
    n = 0
    while u >= _POISSON1_CDF[n]:
        n += 1
    return n


@njit(cache=True, inline="always")
def _block_arrow(blk, j):
    return _to_unit(mix64(blk + np.uint64(j + 1) * _GOLDEN))


@njit(cache=True)
def next_arrow(bkey, t, allow_equal, stop):
    """First arrow ``s`` of a bond with ``s > t`` (``s >= t`` if
    ``allow_equal``) and ``s <= stop``; ``inf`` when there is none."""
    block = int(math.floor(t))
    while block <= stop:
        blk = _block_key(bkey, block)
        n = _block_count(blk)
        best = np.inf
        fb = float(block)
        for j in range(n):
            s = fb + _block_arrow(blk, j)
            if s < best and (s > t or (allow_equal and s == t)):
                best = s
        if best < np.inf:
            return best if best <= stop else np.inf
        block += 1
    return np.inf


@njit(cache=True)
def site_uniforms(key, lo, n):
    out = np.empty(n)
    k = mix64(key ^ _SITE_TAG)
    for i in range(n):
        out[i] = _to_unit(mix64(k ^ mix64(np.uint64(lo + i + _INDEX_OFFSET))))
    return out


@njit(cache=True)
def count_arrows(key, lo, nbonds, start, stop):
    total = 0
    first = int(math.floor(start))
    last = int(math.floor(stop))
    for i in range(nbonds):
        bkey = bond_key(key, lo + i)
        for block in range(first, last + 1):
            blk = _block_key(bkey, block)
            n = _block_count(blk)
            for j in range(n):
                s = block + _block_arrow(blk, j)
                if start < s <= stop:
                    total += 1
    return total


@njit(cache=True)
def materialize_arrows(key, lo, nbonds, start, stop):
    """All arrows with time in ``(start, stop]``, grouped by bond."""
    total = count_arrows(key, lo, nbonds, start, stop)
    bonds = np.empty(total, np.int64)
    times = np.empty(total)
    first = int(math.floor(start))
    last = int(math.floor(stop))
    m = 0
    for i in range(nbonds):
        bkey = bond_key(key, lo + i)
        for block in range(first, last + 1):
            blk = _block_key(bkey, block)
            n = _block_count(blk)
            for j in range(n):
                s = block + _block_arrow(blk, j)
                if start < s <= stop:
                    bonds[m] = lo + i
                    times[m] = s
                    m += 1
    return bonds, times


# --------------------------------------------------------------------------
# lane words


@njit(cache=True)
def run_lanes(m, lo, explicit, bonds, times, key, t_start, t_end,
              trk_kind, trk_a, trk_b, trk_pos,
              speeds, line_lanes, line_pos, line_flux, pairs):
    """Evolve lane words ``m`` (global sites ``lo..lo+len-1``) in place.

    trackers   kind 0: the particle of lane ``a`` at ``trk_pos``;
               kind 1: the discrepancy of lane ``b`` over lane ``a``.
    lines      ``floor(speed * (t - t_start))`` per line; ``line_flux[k, j]``
               accumulates signed crossings of lane ``line_lanes[j]``.
    pairs      ``(low, high)`` lane pairs whose order is checked after every
               effective arrow.

    Returns the tracker records ``(index, time, new site)``, the number of
    order violations and the number of effective arrows.
    """
    n = m.size
    nb = n - 1
    ntrk = trk_kind.size
    nlines = speeds.size
    nll = line_lanes.size
    npairs = pairs.shape[0]
    cap = 64 if ntrk > 0 else 0
    rec_i = np.empty(cap, np.int64)
    rec_t = np.empty(cap)
    rec_x = np.empty(cap, np.int64)
    nrec = 0
    bad = 0
    fired = 0
    for p in range(npairs):
        la = np.uint64(pairs[p, 0])
        lb = np.uint64(pairs[p, 1])
        for x in range(n):
            if (m[x] >> la) & _ONE > (m[x] >> lb) & _ONE:
                bad += 1

    # calendar queue (lazy mode only): bucket width tracks the number of
    # pending bonds, the table is rebuilt when that number drifts
    nbq = max(nb, 1)
    nxt = np.empty(nbq, np.int64)
    when = np.empty(nbq)
    slot_of = np.empty(nbq, np.int64)
    pending = np.zeros(nbq, np.bool_)
    bkeys = np.empty(nb if not explicit else 0, np.uint64)
    count = 0
    if not explicit:
        for i in range(nb):
            bkeys[i] = bond_key(key, lo + i)
        for i in range(nb):
            if m[i] & ~m[i + 1] != _ZERO:
                s = next_arrow(bkeys[i], t_start, False, t_end)
                if s < np.inf:
                    when[i] = s
                    pending[i] = True
                    count += 1
    built = max(count, 16)
    nslots = 16
    while nslots < 4 * built:
        nslots *= 2
    smask = nslots - 1
    inv_width = float(built)
    head = np.full(nslots, -1, np.int64)
    if not explicit:
        for i in range(nb):
            if pending[i]:
                b = int(when[i] * inv_width)
                slot_of[i] = b
                nxt[i] = head[b & smask]
                head[b & smask] = i
    cur = int(t_start * inv_width)

    e = 0
    while True:
        # --- next effective arrow
        if explicit:
            if e >= bonds.size:
                break
            i = bonds[e] - lo
            s = times[e]
            e += 1
            if m[i] & ~m[i + 1] == _ZERO:
                continue
        else:
            if count == 0:
                break
            if count > 2 * built or (4 * count < built and built > 16):
                built = max(count, 16)
                nslots = 16
                while nslots < 4 * built:
                    nslots *= 2
                smask = nslots - 1
                inv_width = float(built)
                head = np.full(nslots, -1, np.int64)
                tmin = np.inf
                for j in range(nb):
                    if pending[j]:
                        b = int(when[j] * inv_width)
                        slot_of[j] = b
                        nxt[j] = head[b & smask]
                        head[b & smask] = j
                        if when[j] < tmin:
                            tmin = when[j]
                cur = int(tmin * inv_width)
            best = -1
            bprev = -1
            while best == -1:
                sl = cur & smask
                prev = -1
                j = head[sl]
                while j != -1:
                    if slot_of[j] == cur:
                        if best == -1 or when[j] < when[best] or (when[j] == when[best] and j < best):
                            best = j
                            bprev = prev
                    prev = j
                    j = nxt[j]
                if best == -1:
                    cur += 1
            if bprev == -1:
                head[cur & smask] = nxt[best]
            else:
                nxt[bprev] = nxt[best]
            count -= 1
            i = best
            s = when[i]
            pending[i] = False

        # --- lines catch up to time s
        for k in range(nlines):
            target = int(math.floor(speeds[k] * (s - t_start)))
            c = line_pos[k]
            while c < target:
                c += 1
                j0 = c - lo
                if 0 <= j0 < n:
                    for q in range(nll):
                        if (m[j0] >> np.uint64(line_lanes[q])) & _ONE:
                            line_flux[k, q] -= 1
            while c > target:
                j0 = c - lo
                if 0 <= j0 < n:
                    for q in range(nll):
                        if (m[j0] >> np.uint64(line_lanes[q])) & _ONE:
                            line_flux[k, q] += 1
                c -= 1
            line_pos[k] = c

        # --- fire
        fired += 1
        mv = m[i] & ~m[i + 1]
        x = lo + i
        for k in range(nlines):
            if line_pos[k] == x:
                for q in range(nll):
                    if (mv >> np.uint64(line_lanes[q])) & _ONE:
                        line_flux[k, q] += 1
        m[i] ^= mv
        m[i + 1] |= mv
        for r in range(ntrk):
            y = trk_pos[r]
            if y != x and y != x + 1:
                continue
            moved = 0
            if trk_kind[r] == 0:
                if y == x and (mv >> np.uint64(trk_a[r])) & _ONE:
                    moved = 1
            else:
                if y == x and (mv >> np.uint64(trk_b[r])) & _ONE:
                    moved = 1
                elif y == x + 1 and (mv >> np.uint64(trk_a[r])) & _ONE:
                    moved = -1
            if moved != 0:
                trk_pos[r] = y + moved
                if nrec == rec_i.size:
                    mm = 2 * nrec + 64
                    r1 = np.empty(mm, np.int64)
                    r2 = np.empty(mm)
                    r3 = np.empty(mm, np.int64)
                    r1[:nrec] = rec_i[:nrec]
                    r2[:nrec] = rec_t[:nrec]
                    r3[:nrec] = rec_x[:nrec]
                    rec_i = r1
                    rec_t = r2
                    rec_x = r3
                rec_i[nrec] = r
                rec_t[nrec] = s
                rec_x[nrec] = y + moved
                nrec += 1
        for p in range(npairs):
            la = np.uint64(pairs[p, 0])
            lb = np.uint64(pairs[p, 1])
            if (m[i] >> la) & _ONE > (m[i] >> lb) & _ONE:
                bad += 1
            if (m[i + 1] >> la) & _ONE > (m[i + 1] >> lb) & _ONE:
                bad += 1

        # --- reschedule neighbours (only neighbours can turn active)
        if not explicit:
            for d in range(2):
                k2 = i - 1 + 2 * d
                if 0 <= k2 < nb and not pending[k2] and m[k2] & ~m[k2 + 1] != _ZERO:
                    s2 = next_arrow(bkeys[k2], s, d == 1, t_end)
                    if s2 < np.inf:
                        b = int(s2 * inv_width)
                        sl = b & smask
                        when[k2] = s2
                        slot_of[k2] = b
                        nxt[k2] = head[sl]
                        head[sl] = k2
                        pending[k2] = True
                        count += 1

    for k in range(nlines):
        target = int(math.floor(speeds[k] * (t_end - t_start)))
        c = line_pos[k]
        while c < target:
            c += 1
            j0 = c - lo
            if 0 <= j0 < n:
                for q in range(nll):
                    if (m[j0] >> np.uint64(line_lanes[q])) & _ONE:
                        line_flux[k, q] -= 1
        while c > target:
            j0 = c - lo
            if 0 <= j0 < n:
                for q in range(nll):
                    if (m[j0] >> np.uint64(line_lanes[q])) & _ONE:
                        line_flux[k, q] += 1
            c -= 1
        line_pos[k] = c
    return rec_i[:nrec], rec_t[:nrec], rec_x[:nrec], bad, fired


# --------------------------------------------------------------------------
# labels


@njit(cache=True)
def run_labels(lab, lo, explicit, bonds, times, key, t_start, t_end, tagmap):
    """Two-class rules applied label by label; ``tagmap`` carries instance
    ids (``-1`` for none) along with the labels they belong to."""
    n = lab.size
    nb = n - 1
    tracking = tagmap.size > 0
    cap = 64 if tracking else 0
    rec_i = np.empty(cap, np.int64)
    rec_t = np.empty(cap)
    rec_x = np.empty(cap, np.int64)
    nrec = 0
    ht = np.empty(max(nb, 1))
    hb = np.empty(max(nb, 1), np.int64)
    pending = np.zeros(max(nb, 1), np.bool_)
    size = 0
    if not explicit:
        for i in range(nb):
            a = lab[i]
            b = lab[i + 1]
            if (a == 1 and b != 1) or (a == 2 and b == 0):
                s = next_arrow(bond_key(key, lo + i), t_start, False, t_end)
                if s < np.inf:
                    # binary heap keyed by (time, bond)
                    j = size
                    while j > 0:
                        par = (j - 1) >> 1
                        if s < ht[par] or (s == ht[par] and i < hb[par]):
                            ht[j] = ht[par]
                            hb[j] = hb[par]
                            j = par
                        else:
                            break
                    ht[j] = s
                    hb[j] = i
                    size += 1
                    pending[i] = True
    e = 0
    while True:
        if explicit:
            if e >= bonds.size:
                break
            i = bonds[e] - lo
            s = times[e]
            e += 1
            a = lab[i]
            b = lab[i + 1]
            if not ((a == 1 and b != 1) or (a == 2 and b == 0)):
                continue
        else:
            if size == 0:
                break
            s = ht[0]
            i = hb[0]
            size -= 1
            lt = ht[size]
            lb_ = hb[size]
            j = 0
            while True:
                c = 2 * j + 1
                if c >= size:
                    break
                if c + 1 < size and (ht[c + 1] < ht[c] or (ht[c + 1] == ht[c] and hb[c + 1] < hb[c])):
                    c += 1
                if ht[c] < lt or (ht[c] == lt and hb[c] < lb_):
                    ht[j] = ht[c]
                    hb[j] = hb[c]
                    j = c
                else:
                    break
            if size > 0:
                ht[j] = lt
                hb[j] = lb_
            pending[i] = False
        a = lab[i]
        lab[i] = lab[i + 1]
        lab[i + 1] = a
        if tracking:
            ta = tagmap[i]
            tb = tagmap[i + 1]
            tagmap[i] = tb
            tagmap[i + 1] = ta
            for w in range(2):
                tg = ta if w == 0 else tb
                if tg < 0:
                    continue
                if nrec == rec_i.size:
                    mm = 2 * nrec + 64
                    r1 = np.empty(mm, np.int64)
                    r2 = np.empty(mm)
                    r3 = np.empty(mm, np.int64)
                    r1[:nrec] = rec_i[:nrec]
                    r2[:nrec] = rec_t[:nrec]
                    r3[:nrec] = rec_x[:nrec]
                    rec_i = r1
                    rec_t = r2
                    rec_x = r3
                rec_i[nrec] = tg
                rec_t[nrec] = s
                rec_x[nrec] = lo + i + 1 if w == 0 else lo + i
                nrec += 1
        if not explicit:
            for d in range(2):
                k2 = i - 1 + 2 * d
                if k2 < 0 or k2 >= nb or pending[k2]:
                    continue
                a = lab[k2]
                b = lab[k2 + 1]
                if (a == 1 and b != 1) or (a == 2 and b == 0):
                    s2 = next_arrow(bond_key(key, lo + k2), s, d == 1, t_end)
                    if s2 < np.inf:
                        j = size
                        while j > 0:
                            par = (j - 1) >> 1
                            if s2 < ht[par] or (s2 == ht[par] and k2 < hb[par]):
                                ht[j] = ht[par]
                                hb[j] = hb[par]
                                j = par
                            else:
                                break
                        ht[j] = s2
                        hb[j] = k2
                        size += 1
                        pending[k2] = True
    return rec_i[:nrec], rec_t[:nrec], rec_x[:nrec]
