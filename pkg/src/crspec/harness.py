"""Monte-Carlo rate experiments over random channel draws.

Each scenario draws i.i.d. circularly-symmetric complex Gaussian channels
(variance ``var_H`` for the secondary link, ``var_G`` for cross channels),
runs a fixed set of precoders at every power on the grid and averages the
rates over trials. Draws are keyed by ``(seed, trial, role)`` on a
counter-based generator, so trials can run in any order or in parallel and
still give identical tables.
"""

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np

from .mimo import NotImplementableError, best_hybrid, dsvd, hybrid, psvd, solve_p1, unconstrained_capacity, white_spectrum
from .miso import closed_form_beamformer
from .model import ChannelSet
from .multichannel import ToneSet, ofdm_tones, per_tone_svd_select, solve_p6

__all__ = [
    "SCENARIOS",
    "ScenarioConfig",
    "ResultRow",
    "rng_for",
    "gen_channels",
    "gen_tones",
    "run_trials",
    "run_scenario",
    "emit",
    "parse",
    "CSV_FIELDS",
]

SCENARIOS = ("fig2-capacity", "fig3-svd", "fig4-hybrid-b", "fig5-vs-K", "fig6-multitone", "custom")
_SHORT = {s.split("-")[0]: s for s in SCENARIOS}
CSV_FIELDS = ("scenario", "method", "pt", "snr_db", "rate_mean", "rate_sem", "trials", "seed")

# stable role ids for the keyed generator
_ROLES = {"H": 1, "G": 2, "taps_H": 3, "taps_g": 4}

_DEFAULTS = {
    "fig2-capacity": dict(M_ts=4, M_rs=1, K=1, gamma=0.01),
    "fig3-svd": dict(M_ts=2, M_rs=2, K=1, gamma=0.1),
    "fig4-hybrid-b": dict(M_ts=4, M_rs=4, K=2, gamma=0.1),
    "fig5-vs-K": dict(M_ts=4, M_rs=4, K=2, gamma=0.01, P_t_grid=(10.0,), K_grid=tuple(range(2, 11))),
    "fig6-multitone": dict(M_ts=2, M_rs=2, K=1, gamma=0.1),
    "custom": dict(M_ts=2, M_rs=2, K=1, gamma=0.1),
}


def _canonical(name):
    name = str(name)
    if name in SCENARIOS:
        return name
    if name in _SHORT:
        return _SHORT[name]
    raise ValueError(f"unknown scenario {name!r}; choose from {', '.join(SCENARIOS)}")


@dataclass(frozen=True)
class ScenarioConfig:
    """One Monte-Carlo experiment.

    Fields left as ``None`` take the scenario's defaults. ``M_k`` is the
    antenna count of every primary receiver; ``gamma`` the cap of each.
    ``K_grid`` is only used by ``fig5-vs-K``; ``N`` and ``L`` (tones and
    channel taps) only by ``fig6-multitone``, where ``P_t_grid`` is the
    power per tone.
    """

    scenario: str = "custom"
    M_ts: int = None
    M_rs: int = None
    K: int = None
    M_k: int = 1
    P_t_grid: tuple = None
    gamma: float = None
    trials: int = 200
    seed: int = 42
    var_G: float = 0.1
    var_H: float = 1.0
    K_grid: tuple = None
    N: int = 64
    L: int = 4

    def __post_init__(self):
        name = _canonical(self.scenario)
        object.__setattr__(self, "scenario", name)
        defaults = dict(P_t_grid=tuple(np.logspace(0, 2, 9)), K_grid=None)
        defaults.update(_DEFAULTS[name])
        for key, val in defaults.items():
            if getattr(self, key) is None:
                object.__setattr__(self, key, val)
        grid = tuple(float(p) for p in np.atleast_1d(self.P_t_grid))
        object.__setattr__(self, "P_t_grid", grid)
        if self.K_grid is not None:
            object.__setattr__(self, "K_grid", tuple(int(k) for k in self.K_grid))
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not grid or any(p <= 0 for p in grid) or any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("P_t_grid must be positive and increasing")
        if min(self.M_ts, self.M_rs, self.M_k) < 1 or self.K < 0 or self.gamma < 0:
            raise ValueError("antenna counts must be >= 1, K >= 0 and gamma >= 0")
        if self.var_G <= 0 or self.var_H <= 0:
            raise ValueError("channel variances must be positive")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 bits")
        if self.L > self.N:
            raise ValueError("more channel taps than tones")

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown config keys: {sorted(extra)}")
        return cls(**d)

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class ResultRow:
    """Trial-averaged rate of one method at one power (or one receiver count).

    Floats are stored at the 9 significant digits they are written with, so
    a table survives a write/read round trip unchanged. ``flagged`` counts
    draws where the method could not run and scored zero; it is not written.
    """

    scenario: str
    method: str
    pt: float
    snr_db: float
    rate_mean: float
    rate_sem: float
    trials: int
    seed: int
    flagged: int = field(default=0, compare=False)

    def __post_init__(self):
        for name in ("pt", "snr_db", "rate_mean", "rate_sem"):
            object.__setattr__(self, name, float(f"{float(getattr(self, name)):.9g}"))
        object.__setattr__(self, "trials", int(self.trials))
        object.__setattr__(self, "seed", int(self.seed))


# ------------------------------------------------------------------ channels


def rng_for(seed, trial, role, index=0):
    """Counter-based generator for one matrix of one trial."""
    ss = np.random.SeedSequence([int(seed), int(trial), _ROLES[role], int(index)])
    return np.random.Generator(np.random.Philox(ss))


def _cscg(rng, shape, var):
    return np.sqrt(var / 2) * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def gen_channels(cfg, trial_index, M_ts=None, K=None):
    """Secondary and cross channels of one trial (``P_t`` set to the first grid point)."""
    M_ts = cfg.M_ts if M_ts is None else M_ts
    K = cfg.K if K is None else K
    H = _cscg(rng_for(cfg.seed, trial_index, "H"), (cfg.M_rs, cfg.M_ts), cfg.var_H)[:, :M_ts]
    G = [_cscg(rng_for(cfg.seed, trial_index, "G", k), (cfg.M_k, cfg.M_ts), cfg.var_G)[:, :M_ts] for k in range(K)]
    return ChannelSet(H, G, cfg.P_t_grid[0], [cfg.gamma] * K, check_rank=False)


def gen_tones(cfg, trial_index, N=None, L=None):
    """Frequency-selective tones of one trial with ``L`` equal-energy taps."""
    N = cfg.N if N is None else N
    L = cfg.L if L is None else L
    taps_H = _cscg(rng_for(cfg.seed, trial_index, "taps_H"), (L, cfg.M_rs, cfg.M_ts), cfg.var_H / L)
    taps_g = _cscg(rng_for(cfg.seed, trial_index, "taps_g"), (L, cfg.M_ts), cfg.var_G / L)
    H, g = ofdm_tones(taps_H, taps_g, N)
    return ToneSet(H, g, N * cfg.P_t_grid[0], cfg.gamma)


# ------------------------------------------------------------------- methods


def _try(fn, cs):
    """Rate of `fn` on `cs`, or (0, flagged) when the method is not implementable."""
    try:
        return fn(cs).rate, False
    except NotImplementableError:
        return 0.0, True


def _miso_capacity(cs):
    if cs.M_rs == 1 and cs.K == 1 and cs.M_k[0] == 1:
        return closed_form_beamformer(cs.H[0], cs.G[0][0], cs.P_t, cs.Gamma[0])
    return solve_p1(cs)


def _trial_fig2(cfg, t):
    out = {}
    for m in sorted({1, cfg.M_ts}):
        base = gen_channels(cfg, t, M_ts=m)
        for P in cfg.P_t_grid:
            cs = base.replace(P_t=P)
            out[(f"capacity-free-mts{m}", P)] = (unconstrained_capacity(cs).rate, False)
            out[(f"optimal-mts{m}", P)] = (_miso_capacity(cs).rate, False)
    return out


def _trial_mimo(cfg, t, methods):
    base = gen_channels(cfg, t)
    out = {}
    for P in cfg.P_t_grid:
        cs = base.replace(P_t=P)
        for name, fn in methods:
            out[(name, P)] = _try(fn, cs)
    return out


def _trial_fig4(cfg, t):
    b_max = min(cfg.M_ts - 1, cfg.K * cfg.M_k)
    methods = [("capacity-free", unconstrained_capacity), ("optimal", solve_p1)]
    methods += [(f"hybrid-b{b}", lambda cs, b=b: hybrid(cs, b)) for b in range(b_max + 1)]
    return _trial_mimo(cfg, t, methods)


def _trial_fig5(cfg, t):
    out = {}
    for K in cfg.K_grid:
        base = gen_channels(cfg, t, K=K)
        for P in cfg.P_t_grid:
            cs = base.replace(P_t=P)
            for name, fn in (("d-svd", dsvd), ("p-svd", psvd), ("best-hybrid", lambda c: best_hybrid(c)[1])):
                out[(f"{name}-K{K}", P)] = _try(fn, cs)
    return out


def _trial_fig6(cfg, t):
    out = {}
    for suffix, N, L in (("", cfg.N, cfg.L), ("-n1", 1, 1)):
        base = gen_tones(cfg, t, N=N, L=L)
        for P in cfg.P_t_grid:
            ts = replace(base, P_t=N * P)
            out[(f"capacity-free{suffix}", P)] = (solve_p6(replace(ts, gamma=np.inf)).rate / N, False)
            out[(f"optimal{suffix}", P)] = (solve_p6(ts).rate / N, False)
            out[(f"svd-select{suffix}", P)] = (per_tone_svd_select(ts).rate / N, False)
    return out


def _run_one(cfg, t):
    name = cfg.scenario
    if name == "fig2-capacity":
        return _trial_fig2(cfg, t)
    if name == "fig3-svd":
        methods = [
            ("capacity-free", unconstrained_capacity),
            ("optimal", solve_p1),
            ("d-svd", dsvd),
            ("p-svd", psvd),
            ("white", white_spectrum),
        ]
        return _trial_mimo(cfg, t, methods)
    if name == "fig4-hybrid-b":
        return _trial_fig4(cfg, t)
    if name == "fig5-vs-K":
        return _trial_fig5(cfg, t)
    if name == "fig6-multitone":
        return _trial_fig6(cfg, t)
    methods = [
        ("capacity-free", unconstrained_capacity),
        ("optimal", solve_p1),
        ("d-svd", dsvd),
        ("p-svd", psvd),
        ("best-hybrid", lambda c: best_hybrid(c)[1]),
        ("white", white_spectrum),
    ]
    return _trial_mimo(cfg, t, methods)


def _run_chunk(args):
    cfg, trials = args
    return [_run_one(cfg, t) for t in trials]


def run_trials(cfg, jobs=1):
    """Per-trial rates: ``{(method, P): (rates array, flagged array)}`` in trial order."""
    trials = list(range(cfg.trials))
    if jobs > 1 and cfg.trials > 1:
        chunks = [trials[i::jobs] for i in range(jobs)]
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            parts = list(ex.map(_run_chunk, [(cfg, c) for c in chunks]))
        by_trial = {}
        for c, res in zip(chunks, parts):
            by_trial.update(zip(c, res))
        results = [by_trial[t] for t in trials]
    else:
        results = _run_chunk((cfg, trials))
    table = {}
    for key in results[0]:
        rates = np.array([r[key][0] for r in results])
        flags = np.array([r[key][1] for r in results])
        table[key] = (rates, flags)
    return table


def run_scenario(cfg, jobs=1):
    """Trial-averaged rates as :class:`ResultRow` objects sorted by (method, P)."""
    rows = []
    for (method, P), (rates, flags) in sorted(run_trials(cfg, jobs).items()):
        n = rates.size
        sem = float(np.std(rates, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
        rows.append(
            ResultRow(
                scenario=cfg.scenario,
                method=method,
                pt=P,
                snr_db=10 * math.log10(P),
                rate_mean=float(rates.mean()),
                rate_sem=sem,
                trials=n,
                seed=cfg.seed,
                flagged=int(flags.sum()),
            )
        )
    return rows


# ----------------------------------------------------------------------- I/O


def _cell(x):
    return f"{x:.9g}" if isinstance(x, float) else str(x)


def emit(rows, fmt="csv", path=None):
    """Write `rows` as CSV or JSON; returns the text (also written to `path` if given)."""
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_FIELDS)
        for r in rows:
            w.writerow([_cell(getattr(r, f)) for f in CSV_FIELDS])
        text = buf.getvalue()
    elif fmt == "json":
        recs = [{f: getattr(r, f) for f in CSV_FIELDS} for r in rows]
        text = json.dumps(recs, indent=1) + "\n"
    else:
        raise ValueError(f"unknown format {fmt!r}")
    if path is not None:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text


def parse(text, fmt="csv"):
    """Inverse of :func:`emit`."""
    if fmt == "csv":
        recs = list(csv.DictReader(io.StringIO(text)))
    elif fmt == "json":
        recs = json.loads(text)
    else:
        raise ValueError(f"unknown format {fmt!r}")
    out = []
    for r in recs:
        out.append(
            ResultRow(
                scenario=r["scenario"],
                method=r["method"],
                pt=float(r["pt"]),
                snr_db=float(r["snr_db"]),
                rate_mean=float(r["rate_mean"]),
                rate_sem=float(r["rate_sem"]),
                trials=int(r["trials"]),
                seed=int(r["seed"]),
            )
        )
    return out
