"""Scenario runner: windows, replicas, targets and reports.

Statistical scenarios are described by the configurations (lanes) they
evolve, the objects they follow and the lines they count fluxes across.
Specs that share horizon, window and seed can be run as one batch: replica
``r`` of every spec then uses the same uniforms and arrows, and all their
lanes ride on a single evolution.  A spec's report does not depend on what
else is in its batch.
"""

import csv
import dataclasses
import hashlib
import io
import json
import math
import time
from dataclasses import dataclass

import numpy as np

from .burgers import RiemannProblem, SpaceTimePoint, density_integral, riemann_solution
from .engine import evolve_words, pack, unpack
from .field import sample_field
from .observables import replica_mean
from .pathwise import CHECKS, check_replica
from .rng import replica_rng, replica_seeds
from .tasep import site_uniforms

SCENARIOS = (
    "rost-fan",
    "shock",
    "tagged-lln",
    "flux-lln",
    "second-class-isolated",
    "second-class-tagged",
    "local-equilibrium",
    "density-fields",
    "pathwise-identities",
    "buffer-audit",
)


class SpecError(ValueError):
    pass


class BufferAuditError(RuntimeError):
    pass


class ObservationWindowError(RuntimeError):
    pass


@dataclass(frozen=True)
class ExperimentSpec:
    scenario: str
    lam: float = None
    rho: float = None
    alpha: float = None
    horizon: float = 100.0
    obs_halfwidth: int = 200
    buffer_mult: float = 3.0
    replicas: int = 10
    seed: int = 1
    speeds: tuple = ()
    shifts: tuple = ()
    sets: tuple = ()
    intervals: tuple = ()
    band: float = 5.0
    max_stderr: float = None
    field_tol: float = 0.02
    target: str = None

    @property
    def buffer(self):
        return int(math.ceil(self.buffer_mult * self.horizon))

    @property
    def window(self):
        w = self.obs_halfwidth + self.buffer
        return (-w, w)

    @property
    def observation(self):
        return (-self.obs_halfwidth, self.obs_halfwidth)

    def replace(self, **kw):
        return dataclasses.replace(self, **kw)

    def validate(self):
        if self.scenario not in SCENARIOS:
            raise SpecError(f"unknown scenario {self.scenario!r}")
        for name in ("lam", "rho", "alpha"):
            v = getattr(self, name)
            if v is not None and not 0.0 <= v <= 1.0:
                raise SpecError(f"{name} must lie in [0, 1]")
        if self.replicas < 1:
            raise SpecError("replicas must be at least 1")
        if not self.horizon >= 0:
            raise SpecError("horizon must be non-negative")
        if self.horizon == 0 and self.scenario not in _PROFILE_SCENARIOS:
            raise SpecError(f"{self.scenario} needs a positive horizon")
        if self.obs_halfwidth < 1 or self.buffer_mult < 0:
            raise SpecError("bad window settings")
        if self.scenario == "buffer-audit":
            if self.target not in SCENARIOS or self.target == "buffer-audit":
                raise SpecError("buffer-audit needs a target scenario")
            return
        if self.scenario == "pathwise-identities":
            if (self.lam is None) != (self.rho is None):
                raise SpecError("give both lam and rho or neither")
            if self.lam is not None and self.lam < self.rho:
                raise SpecError("pathwise identities need lam >= rho")
            return
        _plan(self)

    def to_text(self):
        lines = []
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if v is None or v == ():
                continue
            lines.append(f"{f.name} = {_format_value(f.name, v)}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text, **overrides):
        kw = {}
        for raw in text.splitlines():
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise SpecError(f"bad config line {raw!r}")
            k, v = (s.strip() for s in line.split("=", 1))
            kw[k] = _parse_value(k, v)
        kw.update({k: v for k, v in overrides.items() if v is not None})
        if "scenario" not in kw:
            raise SpecError("config needs a scenario")
        base = default_spec(kw["scenario"]) if kw["scenario"] in SCENARIOS else cls(kw["scenario"])
        try:
            return base.replace(**kw)
        except TypeError as exc:
            raise SpecError(str(exc)) from None


_PROFILE_SCENARIOS = ("shock", "rost-fan", "local-equilibrium", "density-fields")
_FLOATS = {"lam", "rho", "alpha", "horizon", "buffer_mult", "band", "max_stderr", "field_tol"}
_INTS = {"obs_halfwidth", "replicas", "seed"}


def _format_value(name, v):
    if name in ("speeds", "shifts"):
        return ", ".join(repr(float(x)) for x in v)
    if name == "sets":
        return " | ".join(",".join(str(x) for x in A) for A in v)
    if name == "intervals":
        return ", ".join(f"{a!r}:{b!r}" for a, b in v)
    return repr(v) if isinstance(v, float) else str(v)


def _parse_value(name, v):
    try:
        if name in _FLOATS:
            return float(v)
        if name in _INTS:
            return int(v)
        if name in ("speeds", "shifts"):
            return tuple(float(x) for x in v.split(",") if x.strip())
        if name == "sets":
            return tuple(tuple(int(x) for x in part.split(",") if x.strip()) for part in v.split("|"))
        if name == "intervals":
            out = []
            for part in v.split(","):
                if part.strip():
                    a, b = part.split(":")
                    out.append((float(a), float(b)))
            return tuple(out)
        if name in ("scenario", "target"):
            return v
    except ValueError:
        raise SpecError(f"bad value for {name}: {v!r}") from None
    raise SpecError(f"unknown key {name!r}")


def default_spec(scenario):
    """Small shipped default of each scenario."""
    S = ExperimentSpec
    table = {
        "rost-fan": S("rost-fan", lam=1.0, rho=0.0, horizon=200.0, obs_halfwidth=320, replicas=10,
                      shifts=(-0.5, 0.0, 0.5), sets=((0,), (0, 1)), intervals=((-1.5, -1.0), (-0.5, 0.5), (0.2, 1.0), (1.0, 1.5)),
                      field_tol=0.05),
        "shock": S("shock", lam=0.2, rho=0.8, horizon=100.0, obs_halfwidth=80, replicas=10,
                   shifts=(-0.5, 0.5), sets=((0, 1),), intervals=((-0.5, 0.0), (0.0, 0.5)), field_tol=0.1),
        "tagged-lln": S("tagged-lln", rho=0.5, horizon=100.0, obs_halfwidth=120, replicas=10),
        "flux-lln": S("flux-lln", rho=0.3, horizon=100.0, obs_halfwidth=80, replicas=10, speeds=(-0.5, 0.0, 0.5)),
        "second-class-isolated": S("second-class-isolated", alpha=0.5, horizon=100.0, obs_halfwidth=150, replicas=10),
        "second-class-tagged": S("second-class-tagged", lam=0.2, rho=0.8, horizon=100.0, obs_halfwidth=150, replicas=10),
        "local-equilibrium": S("local-equilibrium", lam=1.0, rho=0.0, horizon=200.0, obs_halfwidth=120, replicas=10,
                               shifts=(-0.5, 0.0, 0.5), sets=((0,), (0, 1))),
        "density-fields": S("density-fields", lam=1.0, rho=0.0, horizon=200.0, obs_halfwidth=320, replicas=10,
                            intervals=((-1.5, -1.0), (-0.5, 0.5), (0.2, 1.0), (1.0, 1.5)), field_tol=0.05),
        "pathwise-identities": S("pathwise-identities", horizon=50.0, obs_halfwidth=250, replicas=10),
        "buffer-audit": S("buffer-audit", target="tagged-lln"),
    }
    if scenario not in table:
        raise SpecError(f"unknown scenario {scenario!r}")
    return table[scenario]


# --------------------------------------------------------------------------
# scenario plans


@dataclass(frozen=True)
class Lane:
    """Product draw ``1{U(x) < left}`` on ``x <= 0``, ``1{U(x) < right}`` on
    ``x > 0``; ``origin`` forces site 0 (``None`` leaves it)."""

    left: float
    right: float
    origin: int = None


@dataclass(frozen=True)
class Observable:
    name: str
    target: float
    kind: str  # "band": within band * stderr; "abs": within field_tol; "exact": every replica equal


class _Plan:
    def __init__(self):
        self.lanes = []
        self.trackers = []
        self.lines = []
        self.observables = []
        self.measures = []

    def lane(self, ln):
        if ln not in self.lanes:
            self.lanes.append(ln)
        return ln

    def tracker(self, kind, a, b):
        t = (kind, a, b)
        if t not in self.trackers:
            self.trackers.append(t)
        return t

    def line(self, speed, ln):
        t = (float(speed), ln)
        if t not in self.lines:
            self.lines.append(t)
        return t

    def add(self, obs, measure):
        self.observables.append(obs)
        self.measures.append(measure)


def _need(spec, *names):
    for n in names:
        if getattr(spec, n) is None:
            raise SpecError(f"scenario {spec.scenario} needs {n}")


def _inside(spec, site, what):
    h = spec.obs_halfwidth
    if not -h <= site <= h:
        raise SpecError(f"{what} at site {site} lies outside the observation window [-{h}, {h}]")


def _plan(spec):
    s = spec.scenario
    T = spec.horizon
    # macroscopic unit in sites; at T = 0 nothing moves and sites are counted as they are
    L = T if T > 0 else 1.0
    p = _Plan()
    if s == "tagged-lln":
        _need(spec, "rho")
        _inside(spec, math.floor((1.0 - spec.rho) * T), "expected tagged particle")
        ln = p.lane(Lane(spec.rho, spec.rho, 1))
        tr = p.tracker(0, ln, ln)
        p.add(Observable("X_T/T", 1.0 - spec.rho, "band"), lambda o: o.track(tr) / T)
    elif s == "flux-lln":
        _need(spec, "rho")
        if not spec.speeds:
            raise SpecError("flux-lln needs speeds")
        ln = p.lane(Lane(spec.rho, spec.rho))
        for a in spec.speeds:
            _inside(spec, math.floor(a * T), "flux line")
            key = p.line(a, ln)
            p.add(Observable(f"F[{a:g}]/T", spec.rho * ((1.0 - spec.rho) - a), "band"),
                  lambda o, key=key: o.flux(key) / T)
    elif s == "second-class-isolated":
        _need(spec, "alpha")
        if not 0 < spec.alpha < 1:
            raise SpecError("alpha must lie in (0, 1)")
        _inside(spec, math.floor((1.0 - 2.0 * spec.alpha) * T), "expected second class particle")
        lo_ = p.lane(Lane(spec.alpha, spec.alpha, 0))
        hi_ = p.lane(Lane(spec.alpha, spec.alpha, 1))
        tr = p.tracker(1, lo_, hi_)
        p.add(Observable("R_T/T", 1.0 - 2.0 * spec.alpha, "band"), lambda o: o.track(tr) / T)
    elif s == "second-class-tagged":
        _need(spec, "lam", "rho")
        if not spec.lam < spec.rho:
            raise SpecError("second-class-tagged needs lam < rho")
        _inside(spec, math.floor((1.0 - spec.lam - spec.rho) * T), "expected second class particle")
        lo_ = p.lane(Lane(spec.lam, spec.lam, 0))
        hi_ = p.lane(Lane(spec.rho, spec.rho, 1))
        tr = p.tracker(1, lo_, hi_)
        p.add(Observable("Y_T/T", 1.0 - spec.lam - spec.rho, "band"), lambda o: o.track(tr) / T)
    elif s in ("shock", "rost-fan", "local-equilibrium", "density-fields"):
        _need(spec, "lam", "rho")
        prob = RiemannProblem(spec.lam, spec.rho)
        if s == "shock" and not prob.is_shock:
            raise SpecError("shock needs lam < rho")
        if s == "rost-fan" and not prob.is_fan:
            raise SpecError("rost-fan needs lam > rho")
        ln = p.lane(Lane(spec.lam, spec.rho))
        if s != "density-fields":
            if not spec.shifts or not spec.sets:
                raise SpecError(f"{s} needs shifts and sets")
            for r in spec.shifts:
                if prob.is_shock and abs(r - (1.0 - prob.lam - prob.rho)) < 0.1:
                    raise SpecError("shifts must stay at least 0.1 away from the shock")
                for A in spec.sets:
                    for x in A:
                        _inside(spec, math.floor(x + r * L), "correlation site")
                    if T > 0:
                        target = riemann_solution(prob, SpaceTimePoint(r, 1.0)) ** len(A)
                    else:
                        target = math.prod(prob.lam if math.floor(x + r) <= 0 else prob.rho for x in A)
                    name = f"f[{','.join(map(str, A))}]@{r:g}"
                    p.add(Observable(name, target, "band"),
                          lambda o, A=A, r=r: o.correlation(ln, A, r * L))
        if s != "local-equilibrium":
            if s == "density-fields" and not spec.intervals:
                raise SpecError("density-fields needs intervals")
            for a, b in spec.intervals:
                if a > b:
                    raise SpecError("interval with a > b")
                _inside(spec, math.floor(a * L) - 1, "interval end")
                _inside(spec, math.ceil(b * L) + 1, "interval end")
                if T > 0:
                    target, kind = density_integral(prob, a, b, 1.0), "abs"
                elif prob.lam in (0.0, 1.0) and prob.rho in (0.0, 1.0):
                    # deterministic step: the initial count is known exactly
                    xs = np.arange(math.ceil(a), math.floor(b) + 1)
                    target = float(np.where(xs <= 0, prob.lam, prob.rho).sum())
                    kind = "exact"
                else:
                    target, kind = density_integral(prob, a, b, 0.0), "abs"
                p.add(Observable(f"density[{a:g},{b:g}]", target, kind),
                      lambda o, a=a, b=b: o.density(ln, a, b, L))
    else:
        raise SpecError(f"scenario {s} has no lane plan")
    return p


# --------------------------------------------------------------------------
# evolution of one replica for a batch of plans


class _Outcome:
    def __init__(self, spec, words, lane_index, tracked, fluxes):
        self.spec = spec
        self._words = words
        self._li = lane_index
        self._tracked = tracked
        self._fluxes = fluxes
        self._cache = {}

    def occupancy(self, ln):
        if ln not in self._cache:
            self._cache[ln] = unpack(self._words, self._li[ln])
        return self._cache[ln]

    def track(self, key):
        y = self._tracked[key]
        h = self.spec.obs_halfwidth
        if not -h <= y <= h:
            raise ObservationWindowError(f"tracked particle left the observation window (site {y})")
        return y

    def flux(self, key):
        return self._fluxes[key]

    def correlation(self, ln, A, shift):
        occ = self.occupancy(ln)
        lo = -(self.spec.obs_halfwidth + self.spec.buffer)
        v = 1
        for x in A:
            v *= int(occ[math.floor(x + shift) - lo])
        return v

    def density(self, ln, a, b, scale):
        occ = self.occupancy(ln)
        lo = -(self.spec.obs_halfwidth + self.spec.buffer)
        eps = 1.0 / scale
        xs = np.arange(math.floor(a * scale) - 1, math.ceil(b * scale) + 2)
        keep = (a <= eps * xs) & (eps * xs <= b)
        return eps * float(occ[xs[keep] - lo].sum())

    def digest(self, plan):
        h = self.spec.obs_halfwidth
        lo = -(h + self.spec.buffer)
        sl = slice(-h - lo, h - lo + 1)
        m = hashlib.sha256()
        for ln in plan.lanes:
            m.update(np.ascontiguousarray(self.occupancy(ln)[sl]).tobytes())
        for tk in plan.trackers:
            m.update(str(self._tracked[tk]).encode())
        for lk in plan.lines:
            m.update(str(self.flux(lk)).encode())
        return m.hexdigest()


def _evolve_replica(specs, plans, r):
    """Evolve the union of the plans' lanes for replica ``r``; returns one
    outcome per spec plus the number of effective arrows."""
    spec0 = specs[0]
    lo, hi = spec0.window
    init_seed, field_seed = replica_seeds(spec0.seed, r)
    sites = np.arange(lo, hi + 1)
    u = site_uniforms((lo, hi), init_seed)
    lanes, trackers, lines = [], [], []
    for p in plans:
        for ln in p.lanes:
            if ln not in lanes:
                lanes.append(ln)
        for t in p.trackers:
            if t not in trackers:
                trackers.append(t)
        for t in p.lines:
            if t not in lines:
                lines.append(t)
    li = {ln: k for k, ln in enumerate(lanes)}
    occs = []
    for ln in lanes:
        occ = np.where(sites <= 0, u < ln.left, u < ln.right).astype(np.uint8)
        if ln.origin is not None:
            occ[-lo] = ln.origin
        occs.append(occ)
    words = pack(*occs)
    tr = [(k, li[a], li[b], 0) for k, a, b in trackers]
    speeds = sorted({s for s, _ in lines})
    flanes = sorted({li[ln] for _, ln in lines})
    if spec0.horizon > 0:
        field = sample_field(lo, hi, spec0.horizon, field_seed)
        _, tpos, fl, _, fired = evolve_words(words, lo, field, spec0.horizon, trackers=tr,
                                             lines=speeds, line_lanes=flanes)
    else:
        tpos = np.zeros(len(tr), np.int64)
        fl = np.zeros((len(speeds), len(flanes)), np.int64)
        fired = 0
    tracked = {t: int(tpos[k]) for k, t in enumerate(trackers)}
    fluxes = {(s, ln): int(fl[speeds.index(s), flanes.index(li[ln])]) for s, ln in lines}
    outs = [_Outcome(s, words, li, tracked, fluxes) for s in specs]
    return outs, fired


# --------------------------------------------------------------------------
# reports


@dataclass
class ResultReport:
    spec: ExperimentSpec
    observables: list
    values: dict
    digests: list
    stats: dict
    passes: dict
    metadata: dict

    @property
    def passed(self):
        return all(self.passes.values())

    def to_dict(self, timing=True):
        meta = dict(self.metadata)
        if not timing:
            meta.pop("timing", None)
        return {
            "spec": {f.name: _jsonable(getattr(self.spec, f.name)) for f in dataclasses.fields(self.spec)},
            "observables": [
                {"name": o.name, "target": o.target, "kind": o.kind,
                 "statistics": self.stats[o.name].as_dict() if self.stats.get(o.name) else None,
                 "pass": self.passes[o.name]}
                for o in self.observables
            ],
            "replicas": [
                {"replica": r, "digest": self.digests[r],
                 "values": {o.name: self.values[o.name][r] for o in self.observables}}
                for r in range(len(self.digests))
            ],
            "passed": self.passed,
            "metadata": meta,
        }


def _jsonable(v):
    if isinstance(v, tuple):
        return [_jsonable(x) for x in v]
    return v


def _decide(spec, obs, values):
    stats = None
    if len(values) >= 2:
        stats = replica_mean(values, obs.target)
    if obs.kind == "exact":
        ok = all(v == obs.target for v in values)
    elif stats is None:
        ok = False
    elif obs.kind == "abs":
        ok = abs(stats.mean - obs.target) < spec.field_tol
    else:
        ok = stats.within(spec.band)
        if spec.max_stderr is not None:
            ok = ok and stats.stderr < spec.max_stderr
    return stats, bool(ok)


def _report(spec, observables, values, digests, meta):
    stats, passes = {}, {}
    for o in observables:
        stats[o.name], passes[o.name] = _decide(spec, o, values[o.name])
    return ResultReport(spec, observables, values, digests, stats, passes, meta)


def run(spec):
    """Run one scenario and return its report."""
    return run_batch([spec])[0]


def run_batch(specs):
    """Run several specs; those sharing horizon, window and seed share
    their evolutions.  Returns reports in input order."""
    specs = list(specs)
    for s in specs:
        s.validate()
    reports = [None] * len(specs)
    groups = {}
    for k, s in enumerate(specs):
        if s.scenario == "pathwise-identities":
            reports[k] = _run_pathwise(s)
        elif s.scenario == "buffer-audit":
            reports[k] = buffer_audit(s)
        else:
            groups.setdefault((s.horizon, s.window, s.obs_halfwidth, s.buffer, s.seed), []).append(k)
    for idx in groups.values():
        for k, rep in zip(idx, _run_lanes([specs[k] for k in idx])):
            reports[k] = rep
    return reports


def _run_lanes(specs):
    t0 = time.perf_counter()
    plans = [_plan(s) for s in specs]
    values = [{o.name: [] for o in p.observables} for p in plans]
    digests = [[] for _ in specs]
    fired_total = 0
    for r in range(max(s.replicas for s in specs)):
        active = [k for k, s in enumerate(specs) if r < s.replicas]
        outs, fired = _evolve_replica([specs[k] for k in active], [plans[k] for k in active], r)
        fired_total += fired
        for k, out in zip(active, outs):
            for o, m in zip(plans[k].observables, plans[k].measures):
                values[k][o.name].append(m(out))
            digests[k].append(out.digest(plans[k]))
    wall = time.perf_counter() - t0
    reports = []
    for k, s in enumerate(specs):
        meta = {"timing": {"wall_seconds": wall, "shared_with": len(specs) - 1,
                           "effective_arrows": int(fired_total)},
                "window": list(s.window), "observation": list(s.observation)}
        reports.append(_report(s, plans[k].observables, values[k], digests[k], meta))
    return reports


def _run_pathwise(spec):
    t0 = time.perf_counter()
    obs = [Observable(name, 0, "exact") for name in CHECKS]
    values = {name: [] for name in CHECKS}
    digests = []
    drawn = []
    h = spec.obs_halfwidth
    for r in range(spec.replicas):
        rng = replica_rng(spec.seed, r)
        if spec.lam is None:
            rho, alpha, lam = (float(x) for x in np.sort(rng.uniform(0.0, 1.0, 3)))
        else:
            lam, rho = spec.lam, spec.rho
            alpha = float(rng.uniform(rho, lam))
        v, dig = check_replica(lam, alpha, rho, spec.window, spec.horizon,
                               replica_seeds(spec.seed, r), rng, (-h, h))
        for name in CHECKS:
            values[name].append(int(v[name]))
        digests.append(dig)
        drawn.append([lam, alpha, rho])
    wall = time.perf_counter() - t0
    meta = {"timing": {"wall_seconds": wall}, "window": list(spec.window),
            "observation": list(spec.observation), "densities": drawn}
    return _report(spec, obs, values, digests, meta)


def buffer_audit(spec):
    """Run the target scenario's default spec with the buffer multiplier
    as given and doubled; raise ``BufferAuditError`` on any difference in
    observation-window results."""
    t0 = time.perf_counter()
    base = default_spec(spec.target).replace(replicas=spec.replicas, seed=spec.seed, buffer_mult=spec.buffer_mult)
    wide = base.replace(buffer_mult=2.0 * spec.buffer_mult)
    a, b = run(base), run(wide)
    obs = [Observable("mismatches", 0, "exact")]
    mism = []
    for r in range(base.replicas):
        n = int(a.digests[r] != b.digests[r])
        for o in a.observables:
            n += int(a.values[o.name][r] != b.values[o.name][r])
        mism.append(n)
    meta = {"timing": {"wall_seconds": time.perf_counter() - t0},
            "windows": [list(base.window), list(wide.window)], "target": spec.target}
    rep = _report(spec, obs, {"mismatches": mism}, list(a.digests), meta)
    if not rep.passed:
        raise BufferAuditError(
            f"doubling the buffer changed {sum(mism)} observation-window results of {spec.target}"
        )
    return rep


def emit_report(report, path, fmt="json", timing=True):
    """Write ``report`` as JSON or CSV; returns the text written.  With
    ``timing=False`` the JSON leaves out the wall-clock metadata."""
    if fmt == "json":
        text = json.dumps(report.to_dict(timing), indent=2, sort_keys=True) + "\n"
    elif fmt == "csv":
        text = report_csv(report)
    else:
        raise ValueError(f"unknown format {fmt!r}")
    if path is not None and path != "-":
        try:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            raise OSError(f"cannot write report to {path}: {exc}") from exc
    return text


def report_csv(report):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["scenario", "replica", "observable", "value", "target", "stderr", "pass"])
    n = len(report.digests)
    for r in range(n):
        for o in report.observables:
            st = report.stats.get(o.name)
            w.writerow([report.spec.scenario, r, o.name, repr(report.values[o.name][r]), repr(o.target),
                        "" if st is None else repr(st.stderr), int(report.passes[o.name])])
    return buf.getvalue()
