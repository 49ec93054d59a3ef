"""Complexity-minimizing inner-ensemble search.

For fixed (dc_bar, nu, L0) the edge distribution minimizing the discretized
iteration functional is found by SLSQP over linear constraints; the target
message error pt is re-derived from the outer-threshold budget whenever the
solution moves materially.  Discrete loops over (dc_bar, nu, L0), the outer
code table, and the SNR grid produce design points and Pareto frontiers.
"""

import json
import os
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog, minimize

from . import Infeasible, OpennessViolation
from .channel import SnrPoint, shannon_gap
from .ensemble import (InnerEnsemble, StaircaseSpec, inner_complexity,
                       total_complexity)
from .exitchart import (ExitChartSet, coded_edge_weights, default_grid,
                        estimate_elementary_charts, message_to_bit_error)

PT_FLOOR = 1e-7
_BARRIER = 1.0 - 1e-9
_SOFT = 0.999  # objective continuation threshold, inside the barrier


@dataclass
class DesignSpace:
    """Discrete search grids and solver resolutions."""

    d_v_max: int = 20
    nu_max: float = 4.0
    q_points: int = 200
    q_nu: int = 40
    l0_step: float = 0.01
    dc_bar_candidates: tuple = ()
    snr_grid: tuple = ()
    chart_grid_points: int = 40
    chart_samples: int = 10**6
    nu_values: tuple = ()  # explicit overrides for restricted searches
    l0_values: tuple = ()

    def __post_init__(self):
        if self.l0_step > 0.01 + 1e-12:
            raise ValueError("l0 step must be <= 0.01")
        for n in (self.d_v_max, self.q_points, self.q_nu):
            if n < 1:
                raise ValueError("grid counts must be >= 1")

    def dc_candidates(self, nu: float):
        if self.dc_bar_candidates:
            return [d for d in self.dc_bar_candidates if d > nu + 1]
        # integers and half-integers with margin over both published degrees
        cand = np.arange(4.0, 40.5, 0.5)
        return [float(d) for d in cand if d >= nu + 2]

    def nu_candidates(self):
        if self.nu_values:
            return np.asarray(self.nu_values, dtype=float)
        return np.linspace(0.0, self.nu_max, self.q_nu)

    def l0_candidates(self, l0_max: float):
        if self.l0_values:
            return np.array([v for v in self.l0_values if v <= l0_max + 1e-12])
        if l0_max <= 0:
            return np.array([0.0])
        n = max(1, int(np.ceil(l0_max / self.l0_step)))
        return np.linspace(0.0, l0_max, n + 1)


@dataclass
class DesignPoint:
    """One optimized (outer code, inner ensemble) pair."""

    snr: SnrPoint
    outer: StaircaseSpec
    ensemble: InnerEnsemble
    iters: int
    i_q: float
    eta_i: float
    eta: float
    pt: float
    p_target: float
    feasible: bool = True

    def to_row(self, r_cat: float = None) -> dict:
        row = {
            "snr_db": self.snr.es_n0_db,
            "outer_name": self.outer.name,
            "dc_bar": self.ensemble.dc_bar,
            "nu": self.ensemble.nu,
            "l0": self.ensemble.l0,
            "lambda": [float(x) for x in self.ensemble.lam],
            "I": self.iters,
            "eta_i": self.eta_i,
            "eta": self.eta,
            "pt": self.pt,
            "P_t": self.p_target,
            "feasible": self.feasible,
        }
        if r_cat is not None:
            row["gap_db"] = shannon_gap(r_cat, self.snr.es_n0_db)
        return row


@dataclass(frozen=True)
class ParetoPoint:
    snr_db: float
    eta_i: float
    eta: float
    design: DesignPoint


def _quant_points(p0: float, pt: float, q_points: int) -> np.ndarray:
    delta = (p0 - pt) / q_points
    return pt + delta * np.arange(q_points + 1)  # endpoint included for openness


def _objective(x, fq, q, delta, scale):
    """Discretized iteration count and gradient.

    The exact sum diverges as f -> q, and the SQP line search probes points
    past the openness constraints; beyond f = _SOFT*q the per-point term is
    continued linearly (value and slope matched at the cap), which keeps the
    objective finite, C^1 and convex everywhere.
    """
    f = fq.T @ x / scale
    qs, fs = q[:-1], f[:-1]
    cap = qs * _SOFT
    fc = np.clip(fs, 1e-30, cap)  # floor avoids the infinite slope at f = 0
    li = np.log(qs / fc)
    terms = delta / (qs * li)
    slope = delta / (qs * li**2 * fc)  # d(term)/df, also valid at the cap
    over = np.maximum(fs - cap, 0.0)
    val = float(np.sum(terms + slope * over))
    dfull = slope.copy()  # for capped points the continuation slope is constant
    grad = fq[:, :-1] @ dfull / scale
    return val, grad


def _target_bit_error(l0: float, p0: float, r_c: float, r_in: float,
                      p_sc: float) -> float:
    t = (p_sc * r_in - l0 * p0) / ((1.0 - l0) * r_c)
    if t <= 0:
        raise Infeasible(f"uncoded budget exhausted: l0={l0:.4f}, p0={p0:.5f}")
    return t


def derive_pt(lam, l0: float, dc_bar: float, charts: ExitChartSet,
              p_sc: float, r_in: float) -> tuple:
    """Largest pt whose posterior information BER meets the outer budget.

    Solves message_to_bit_error(pt) = target by bisection; Eq-with-equality
    of the threshold constraint.  Returns (pt, target).
    """
    from .ensemble import coded_rate
    p0 = charts.snr.p0
    rc = coded_rate(lam, dc_bar)
    target = _target_bit_error(l0, p0, rc, r_in, p_sc)

    def pt_err(p):
        return message_to_bit_error(lam, l0, dc_bar, charts, p) - target

    lo = max(charts.grid[0], PT_FLOOR)
    hi = p0 * (1.0 - 1e-9)
    if pt_err(lo) > 0:
        raise Infeasible("posterior error floor above the outer budget")
    if pt_err(hi) <= 0:
        return hi, target
    for _ in range(80):
        mid = np.sqrt(lo * hi)
        if pt_err(mid) <= 0:
            lo = mid
        else:
            hi = mid
    return lo, target


def _feasible_start(fq, q, d_v_max, nu, dc_bar, rate_bound):
    """LP init: maximize the uniform relative openness margin.

    Variables (lam_2..lam_Dv, s); maximize s subject to f(q) <= (1-s)*q,
    the rate bound, and the simplex constraint.  The optimum is strictly
    interior (the iteration functional diverges on the openness boundary, so
    a boundary start would strand the SQP stage); s <= 0 means no edge
    distribution keeps the chart open at the required rate.
    """
    n = d_v_max - 1  # variables lam_2..lam_Dv
    degrees = np.arange(2, d_v_max + 1)
    lam1 = nu / dc_bar
    c = np.zeros(n + 1)
    c[-1] = -1.0  # maximize s
    a_open = np.hstack([fq.T / (1.0 - lam1), q[:, None]])
    a_rate = np.hstack([-1.0 / degrees, [0.0]])[None, :]
    a_ub = np.vstack([a_open, a_rate])
    b_ub = np.concatenate([q, [lam1 - rate_bound]])
    a_eq = np.hstack([np.ones((1, n)), [[0.0]]])
    b_eq = np.array([1.0 - lam1])
    res = linprog(c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=b_eq,
                  bounds=[(0, None)] * n + [(None, 1.0)], method="highs")
    if not res.success:
        raise Infeasible("rate constraint unattainable in this cell")
    if res.x[-1] <= 1e-9:
        raise Infeasible("no edge distribution keeps the EXIT chart open")
    return res.x[:-1]


def solve_fixed(charts: ExitChartSet, dc_bar: float, nu: float, l0: float,
                r_in: float, p_sc: float, space: DesignSpace,
                init=None) -> tuple:
    """Minimize the iteration functional at fixed (dc_bar, nu, l0).

    Returns (lam, i_q, pt, p_target).  Raises Infeasible when no edge
    distribution satisfies openness, rate, and the outer-threshold budget.
    """
    p0 = charts.snr.p0
    d_v_max = min(space.d_v_max, charts.d_v_max - 1)
    degrees = np.arange(2, d_v_max + 1)
    lam1 = nu / dc_bar
    if lam1 >= 1.0:
        raise Infeasible("nu exceeds the check degree")
    scale = 1.0 - lam1  # coded-trajectory normalization at fixed lam_1
    if r_in <= l0:
        raise Infeasible("uncoded fraction exceeds the inner rate")
    rate_bound = (1.0 - l0) / (dc_bar * (1.0 - r_in))

    def full_lam(x):
        lam = np.zeros(d_v_max + 1)
        lam[1] = lam1
        lam[2:] = x
        return lam

    # pt depends on lam through r_c and the info-set weights; start from a
    # moderate guess and iterate (a tiny initial pt would over-constrain the
    # openness region before any lam exists to derive pt from)
    pt = max(p0 / 5.0, charts.grid[0] * 2.0, PT_FLOOR)
    x = np.asarray(init, dtype=float)[2:] if init is not None else None
    p_target = None
    for _ in range(25):
        q = _quant_points(p0, pt, space.q_points)
        fq = np.vstack([charts.interp(i, np.minimum(q, charts.grid[-1]))
                        for i in degrees])
        if x is None or np.any(fq.T @ x / scale >= q * _SOFT):
            # no warm start, or pt dropped below the region where the previous
            # iterate keeps the chart open: restart from the max-margin LP
            x = _feasible_start(fq, q, d_v_max, nu, dc_bar, rate_bound)
        cons = [
            {"type": "eq", "fun": lambda x: np.sum(x) - (1.0 - lam1),
             "jac": lambda x: np.ones_like(x)},
            {"type": "ineq", "fun": lambda x: np.dot(x, 1.0 / degrees) + lam1 - rate_bound,
             "jac": lambda x: 1.0 / degrees},
            {"type": "ineq",
             "fun": lambda x: q * _BARRIER - fq.T @ x / scale,
             "jac": lambda x: -fq.T / scale},
        ]
        delta = (p0 - pt) / space.q_points
        res = minimize(_objective, x, args=(fq, q, delta, scale), jac=True,
                       method="SLSQP", bounds=[(0.0, 1.0)] * len(x),
                       constraints=cons,
                       options={"maxiter": 300, "ftol": 1e-12})
        x_new = np.clip(res.x, 0.0, None)
        if abs(x_new.sum() - (1.0 - lam1)) > 1e-6:
            # solver wandered off the simplex; keep the last feasible iterate
            x_new = x
        moved = float(np.abs(x_new - x).sum()) if x is not None else np.inf
        x = x_new
        lam = full_lam(x)
        try:
            pt_new, p_target = derive_pt(lam, l0, dc_bar, charts, p_sc, r_in)
        except Infeasible:
            raise
        q_new = _quant_points(p0, pt_new, space.q_points)
        fq_new = np.vstack([charts.interp(i, np.minimum(q_new, charts.grid[-1]))
                            for i in degrees])
        still_open = bool(np.all(fq_new.T @ x / scale < q_new * _BARRIER))
        if abs(pt_new - pt) <= 1e-3 * pt and moved <= 0.05 and still_open:
            pt = pt_new
            break
        pt = pt_new
    lam = full_lam(x)
    from .exitchart import predicted_iterations
    i_q = predicted_iterations(lam, charts, p0, pt, space.q_points)
    return lam, i_q, pt, p_target


def validate_design(point: DesignPoint, charts: ExitChartSet,
                    space: DesignSpace, r_in: float, slack: float = 1e-8):
    """Re-check every constraint by direct substitution, solver-independent."""
    ens = point.ensemble
    lam, l0 = ens.lam, ens.l0
    p0 = charts.snr.p0
    assert abs(lam[1:].sum() - 1.0) <= 1e-6 + slack, "simplex violated"
    assert np.all(lam >= -slack), "negativity violated"
    assert abs(lam[1] * ens.dc_bar - ens.nu) <= slack, "nu constraint violated"
    degrees = np.arange(1, len(lam))
    rate_sum = float(np.sum(lam[1:] / degrees))
    assert rate_sum >= (1.0 - l0) / (ens.dc_bar * (1.0 - r_in)) - 1e-6, \
        "rate constraint violated"
    q = _quant_points(p0, point.pt, space.q_points)
    w = coded_edge_weights(lam)
    from .exitchart import combine
    fv = combine(w, charts, np.minimum(q, charts.grid[-1]))
    assert np.all(fv < q + slack), "openness violated"
    combined = l0 * p0 + (1.0 - l0) * ens.r_c * point.p_target
    assert combined <= point.outer.p_sc * r_in + 1e-6, "threshold budget violated"


class ChartProvider:
    """Computes and caches elementary chart sets keyed by their parameters."""

    def __init__(self, space: DesignSpace, seed: int, cache_dir=None):
        self.space = space
        self.seed = seed
        self.cache_dir = cache_dir
        self._mem = {}

    def __call__(self, snr: SnrPoint, dc_bar: float, nu: float) -> ExitChartSet:
        key = (round(snr.es_n0_db, 9), round(dc_bar, 9), round(nu, 9))
        if key in self._mem:
            return self._mem[key]
        charts = None
        path = None
        if self.cache_dir is not None:
            tag = "exit_%s_%s_%s_%d_%d.json" % (*key, self.space.chart_samples, self.seed)
            path = os.path.join(self.cache_dir, tag)
            if os.path.exists(path):
                with open(path) as fh:
                    charts = ExitChartSet.from_json(fh.read())
        if charts is None:
            grid = default_grid(snr.p0, self.space.chart_grid_points)
            charts = estimate_elementary_charts(
                snr, dc_bar, nu, grid, d_v_max=self.space.d_v_max + 1,
                samples=self.space.chart_samples, seed=self.seed)
            if path is not None:
                os.makedirs(self.cache_dir, exist_ok=True)
                with open(path, "w") as fh:
                    fh.write(charts.to_json())
        self._mem[key] = charts
        return charts


def optimize_inner(snr: SnrPoint, r_in: float, outer: StaircaseSpec,
                   space: DesignSpace, charts_provider) -> DesignPoint:
    """Best feasible design over the (dc_bar, nu, L0) grid at one SNR."""
    from .exitchart import max_uncoded
    best = None
    best_key = None
    for nu in space.nu_candidates():
        for dc_bar in space.dc_candidates(nu):
            charts = charts_provider(snr, dc_bar, nu)
            l0_max = max_uncoded(outer.p_sc, r_in, snr.p0)
            for l0 in space.l0_candidates(min(l0_max, r_in * 0.999)):
                try:
                    lam, i_q, pt, p_target = solve_fixed(
                        charts, dc_bar, nu, l0, r_in, outer.p_sc, space)
                except Infeasible:
                    continue
                iters = int(np.ceil(i_q - 1e-9))
                eta_i = inner_complexity(r_in, dc_bar, nu, iters)
                eta = total_complexity(eta_i, outer.r_sc, outer.p_post)
                key = (eta, eta_i, dc_bar, -l0)
                if best is None or key < best_key:
                    ens = InnerEnsemble.from_edge(lam, l0, dc_bar, tol=1e-6)
                    point = DesignPoint(snr=snr, outer=outer, ensemble=ens,
                                        iters=iters, i_q=i_q, eta_i=eta_i,
                                        eta=eta, pt=pt, p_target=p_target)
                    try:
                        validate_design(point, charts, space, r_in)
                    except AssertionError:
                        continue
                    best, best_key = point, key
    if best is None:
        raise Infeasible(f"no feasible ensemble at {snr.es_n0_db:.3f} dB")
    return best


def optimize_concat(r_cat: float, snr: SnrPoint, outer_table,
                    space: DesignSpace, charts_provider) -> DesignPoint:
    """Best (outer code, inner ensemble) pair at one SNR for a given rate."""
    if not 0.0 < r_cat < 1.0:
        raise ValueError("rate must be in (0, 1)")
    if not outer_table:
        raise ValueError("empty outer-code table")
    best = None
    best_key = None
    for order, outer in enumerate(outer_table):
        if outer.r_sc <= r_cat:
            continue  # would need inner rate >= 1
        r_in = r_cat / outer.r_sc
        try:
            point = optimize_inner(snr, r_in, outer, space, charts_provider)
        except Infeasible:
            continue
        key = (point.eta, point.eta_i, point.ensemble.dc_bar,
               -point.ensemble.l0, order)
        if best is None or key < best_key:
            best, best_key = point, key
    if best is None:
        raise Infeasible(f"all outer codes infeasible at {snr.es_n0_db:.3f} dB")
    return best


def pareto_sweep(r_cat: float, snr_grid, outer_table, space: DesignSpace,
                 charts_provider) -> list:
    """Pareto frontier of (SNR, eta_i) over an SNR grid; dominated points pruned."""
    if len(snr_grid) == 0:
        raise ValueError("empty SNR grid")
    points = []
    for db in sorted(snr_grid):
        snr = SnrPoint.from_db(db)
        try:
            d = optimize_concat(r_cat, snr, outer_table, space, charts_provider)
        except Infeasible:
            continue
        points.append(ParetoPoint(snr_db=db, eta_i=d.eta_i, eta=d.eta, design=d))
    frontier = []
    for p in points:
        dominated = any(o.snr_db <= p.snr_db and o.eta_i <= p.eta_i and
                        (o.snr_db < p.snr_db or o.eta_i < p.eta_i)
                        for o in points if o is not p)
        if not dominated:
            frontier.append(p)
    frontier.sort(key=lambda p: p.snr_db)
    return frontier
