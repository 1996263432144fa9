"""Exact per-realization identities of the coupled dynamics.

Every check returns a count of violations; a correct implementation gives
zero for every realization.  Configurations are built from one set of
uniforms and one arrow field per replica.
"""

import hashlib

import numpy as np

from .engine import evolve_words, pack, split_records, unpack
from .field import PoissonField, sample_field, time_shift
from .multiclass import cut, evolve_two_class, leftmost_second_class, two_class_from_pair
from .observables import label_flux
from .tasep import Configuration, site_uniforms

CHECKS = (
    "attractivity",
    "discrepancy_conservation",
    "markov_split",
    "replay_equivalence",
    "marginal_consistency",
    "cut_commutation",
    "cut_second_class_identity",
    "profile_identities",
    "profile_inequalities",
    "sandwich",
    "zero_flux_tagged",
    "zero_flux_second_class",
    "flux_methods_agree",
)


def _occ(u, left, right, origin, sites):
    occ = np.where(sites <= 0, u < left, u < right).astype(np.uint8)
    if origin is not None:
        occ[-sites[0]] = origin
    return occ


def check_replica(lam, alpha, rho, window, horizon, seeds, rng, safe):
    """Run every identity for one realization with ``lam >= alpha >= rho``.

    ``safe`` is the site range on which finite-window comparisons are made.
    """
    lo, hi = window
    T = float(horizon)
    sites = np.arange(lo, hi + 1)
    u = site_uniforms(window, seeds[0])
    field = sample_field(lo, hi, T, seeds[1])
    s_lo, s_hi = safe[0] - lo, safe[1] - lo + 1
    v = dict.fromkeys(CHECKS, 0)

    # lanes: plain, hole-forced and particle-forced draws at the three
    # densities, the step profile and a random ordered pair
    lanes = {}
    for name, d in (("rho", rho), ("alpha", alpha), ("lam", lam)):
        lanes[name] = _occ(u, d, d, None, sites)
        lanes[name + "_hole"] = _occ(u, d, d, 0, sites)
        lanes[name + "_part"] = _occ(u, d, d, 1, sites)
    lanes["step"] = _occ(u, lam, rho, None, sites)
    # per-site draws keyed by site so that the window size does not matter
    p, q = rng.uniform(0.05, 0.95), rng.uniform(0.05, 0.5)
    k1, k2 = (int(k) for k in rng.integers(0, 2**63, 2))
    lanes["rand_low"] = (site_uniforms(window, k1) < p).astype(np.uint8)
    lanes["rand_high"] = lanes["rand_low"] | (site_uniforms(window, k2) < q).astype(np.uint8)
    names = list(lanes)
    idx = {n: k for k, n in enumerate(names)}
    words0 = pack(*(lanes[n] for n in names))

    ordered = [("rho", "alpha"), ("alpha", "lam"), ("rho_hole", "rho_part"), ("alpha_hole", "alpha_part"),
               ("lam_hole", "lam_part"), ("rho_hole", "alpha_part"), ("alpha_hole", "lam_part"),
               ("rho", "step"), ("step", "lam"), ("rand_low", "rand_high")]
    pairs = [(idx[a], idx[b]) for a, b in ordered]

    # trackers: the two origin discrepancies, tagged second class particles
    # and the tagged particle of the particle-forced alpha draw
    tr_spec = [
        ("R_rho", (1, idx["rho_hole"], idx["rho_part"], 0)),
        ("R_alpha", (1, idx["alpha_hole"], idx["alpha_part"], 0)),
        ("R_lam", (1, idx["lam_hole"], idx["lam_part"], 0)),
        ("Y_rho_alpha", (1, idx["rho_hole"], idx["alpha_part"], 0)),
        ("Y_alpha_lam", (1, idx["alpha_hole"], idx["lam_part"], 0)),
        ("X_alpha", (0, idx["alpha_part"], 0, 0)),
    ]
    trackers = [t for _, t in tr_spec]
    tnum = {n: k for k, (n, _) in enumerate(tr_spec)}
    speeds = [float(a) for a in rng.uniform(-1.0, 1.0, 2)]

    # one lazy pass with trackers and lines, one replayed event-list pass
    # with per-arrow order checks
    w_lazy = words0.copy()
    rec, tpos, lflux, _, _ = evolve_words(w_lazy, lo, field, T, trackers=trackers, lines=speeds,
                                          line_lanes=[idx["alpha"], idx["alpha_part"]])
    w_list = words0.copy()
    b_ev, t_ev = field.events
    explicit = PoissonField(lo, hi, 0.0, T, bonds=b_ev, times=t_ev)
    _, _, _, bad, _ = evolve_words(w_list, lo, explicit, T, pairs=pairs)
    v["attractivity"] += int(bad)
    v["replay_equivalence"] += int((w_lazy != w_list).sum())

    # piecewise evolution through random split times
    splits = np.sort(rng.uniform(0.0, T, 3))
    marks = list(splits) + [T]
    w = words0.copy()
    prev = 0.0
    states = []
    disc0 = {pr: int((lanes[names[pr[1]]] != lanes[names[pr[0]]]).sum()) for pr in pairs}
    for t in marks:
        # shifting the original field keeps the remaining horizon exact
        evolve_words(w, lo, time_shift(field, prev), t - prev)
        prev = t
        states.append(w.copy())
        for pr in pairs:
            d = int((unpack(w, pr[1]) != unpack(w, pr[0])).sum())
            v["discrepancy_conservation"] += int(d != disc0[pr])
    v["markov_split"] += int((states[-1] != w_lazy).sum())

    def lane_at(words, name):
        return unpack(words, idx[name])

    traj = _split(rec, len(trackers))

    def pos(name, t):
        times, xs = traj[tnum[name]]
        k = np.searchsorted(times, t, side="right") - 1
        return int(xs[max(k, 0)])

    # direct two-class rules against the coupled marginals
    pairs_2c = (("rho_hole", "alpha_part", "Y_rho_alpha"), ("alpha_hole", "lam_part", "Y_alpha_lam"))
    for low_n, high_n, yname in pairs_2c:
        tc0 = two_class_from_pair(Configuration(lo, lanes[low_n]), Configuration(lo, lanes[high_n]))
        tcT, (ytraj,) = evolve_two_class(tc0, field, T, track=(0,))
        v["marginal_consistency"] += int((tcT.sigma.occupancy != lane_at(w_lazy, low_n)).sum())
        v["marginal_consistency"] += int((tcT.high.occupancy != lane_at(w_lazy, high_n)).sum())
        ttimes, txs = traj[tnum[yname]]
        v["marginal_consistency"] += int(not (np.array_equal(ttimes, ytraj.times) and np.array_equal(txs, ytraj.sites)))
        Y_T = ytraj.final

        # cutting at the tracked particle commutes with the dynamics
        cut0 = cut(tc0, 0)
        cutT = evolve_two_class(cut0, field, T)
        v["cut_commutation"] += int((cutT.labels != cut(tcT, Y_T).labels).sum())

        # with a hole forced at the origin below the cut configuration, the
        # single discrepancy follows the tracked second class particle
        high = cut0.high.occupancy
        low = high.copy()
        low[-lo] = 0
        w2 = pack(low, high)
        rec2, _, _, _, _ = evolve_words(w2, lo, field, T, trackers=[(1, 0, 1, 0)])
        (rt, rx), = _split(rec2, 1)
        v["cut_second_class_identity"] += int(not (np.array_equal(rt, ytraj.times) and np.array_equal(rx, ytraj.sites)))
        v["cut_second_class_identity"] += int((unpack(w2, 1) != cutT.high.occupancy).sum())
        v["cut_second_class_identity"] += int(leftmost_second_class(cutT) != Y_T)

        # no second class particle crosses the tracked one
        for t, ws in zip(marks, states):
            y = _path_at(ytraj.times, ytraj.sites, t)
            xi0 = np.flatnonzero(lanes[high_n] & ~lanes[low_n]) + lo
            xit = np.flatnonzero(lane_at(ws, high_n) & ~lane_at(ws, low_n)) + lo
            v["zero_flux_second_class"] += abs(label_flux(xi0, xit, y))

    # the step profile agrees with the constant profiles beyond the origin
    # discrepancies, and is ordered against the middle density
    step = lane_at(w_lazy, "step")
    xs = np.arange(lo, hi + 1)
    sl = slice(s_lo, s_hi)
    xs_s = xs[sl]
    R = {n: tpos[tnum[n]] for n in ("R_rho", "R_alpha", "R_lam")}
    right = xs_s > R["R_rho"]
    left = xs_s < R["R_lam"]
    v["profile_identities"] += int((step[sl][right] != lane_at(w_lazy, "rho")[sl][right]).sum())
    v["profile_identities"] += int((step[sl][left] != lane_at(w_lazy, "lam")[sl][left]).sum())
    mid = lane_at(w_lazy, "alpha")[sl]
    v["profile_inequalities"] += int((step[sl][xs_s > R["R_alpha"]] > mid[xs_s > R["R_alpha"]]).sum())
    v["profile_inequalities"] += int((step[sl][xs_s < R["R_alpha"]] < mid[xs_s < R["R_alpha"]]).sum())

    # second class particle of alpha lies between the tagged ones
    times = np.unique(np.concatenate([traj[tnum[n]][0] for n in ("R_alpha", "Y_rho_alpha", "Y_alpha_lam")]))
    for t in times:
        r = pos("R_alpha", t)
        v["sandwich"] += int(r < pos("Y_alpha_lam", t)) + int(r > pos("Y_rho_alpha", t))

    # zero flux through the tagged particle
    p0 = np.flatnonzero(lanes["alpha_part"]) + lo
    for t, ws in zip(marks, states):
        pt = np.flatnonzero(lane_at(ws, "alpha_part")) + lo
        v["zero_flux_tagged"] += abs(label_flux(p0, pt, pos("X_alpha", t)))

    # crossing counts against the ordered-position formula
    for k, a in enumerate(speeds):
        y = int(np.floor(a * T))
        for q, name in enumerate(("alpha", "alpha_part")):
            p0 = np.flatnonzero(lanes[name]) + lo
            pt = np.flatnonzero(lane_at(w_lazy, name)) + lo
            v["flux_methods_agree"] += int(label_flux(p0, pt, y) != lflux[k, q])
    return v, _digest_words(w_lazy[s_lo:s_hi])


def _path_at(times, sites, t):
    k = np.searchsorted(times, t, side="right") - 1
    return int(sites[max(k, 0)])


def _split(records, count):
    return split_records(records, count, [0] * count)


def _digest_words(words):
    return hashlib.sha256(np.ascontiguousarray(words).tobytes()).hexdigest()
