"""Monte-Carlo estimation of elementary EXIT functions.

Variable-to-check messages are modeled as symmetric Gaussians: a message
population with error probability p has mean m with p = Q(sqrt(m/2)) and
variance 2m.  Check nodes apply the exact tanh rule; degree-one neighbors
feed raw channel LLRs into the checks, allocated per the theta split of nu.
The elementary chart f_i maps an input message error probability to the
error probability of messages leaving degree-i variable nodes.
"""

import hashlib
import json
from dataclasses import dataclass

import numpy as np
from scipy.special import erfcinv

from . import OpennessViolation
from .channel import SnrPoint, qfunc
from .ensemble import (check_distribution_from_mean, coded_rate, node_from_edge,
                       theta_split, _as_dense)
from .rng import stream

_ATANH_CLIP = 1.0 - 1e-15


def mean_to_p(m: float):
    """Error probability of a symmetric Gaussian message with mean m."""
    m = np.asarray(m, dtype=float)
    if np.any(m < 0):
        raise ValueError("mean must be nonnegative")
    return qfunc(np.sqrt(m / 2.0))


def p_to_mean(p: float):
    """Inverse of :func:`mean_to_p`: m = (2*erfcinv(2p))^2."""
    p = np.asarray(p, dtype=float)
    if np.any(p <= 0) or np.any(p > 0.5):
        raise ValueError("p must be in (0, 1/2]")
    return (2.0 * erfcinv(2.0 * p)) ** 2


@dataclass(frozen=True)
class GaussianMessageModel:
    """One point of the message model: error probability and matching mean."""

    p: float
    m: float

    @classmethod
    def from_p(cls, p: float) -> "GaussianMessageModel":
        return cls(p=float(p), m=float(p_to_mean(p)))

    @classmethod
    def from_mean(cls, m: float) -> "GaussianMessageModel":
        return cls(p=float(mean_to_p(m)), m=float(m))


def _pava(y: np.ndarray, increasing: bool = True, w: np.ndarray = None) -> np.ndarray:
    """Pool-adjacent-violators isotonic fit (L2, optional weights)."""
    if not increasing:
        return -_pava(-y, True, w)
    n = len(y)
    if w is None:
        w = np.ones(n)
    blocks = []  # (value, weight, count)
    for i in range(n):
        v, ww, c = y[i], w[i], 1
        while blocks and blocks[-1][0] > v:
            pv, pw, pc = blocks.pop()
            v = (v * ww + pv * pw) / (ww + pw)
            ww += pw
            c += pc
        blocks.append((v, ww, c))
    return np.concatenate([np.full(c, v) for v, _, c in blocks])


@dataclass
class ExitChartSet:
    """Tabulated elementary EXIT functions for fixed (SNR, dc_bar, nu)."""

    snr: SnrPoint
    dc_bar: float
    nu: float
    grid: np.ndarray             # ascending p_in values in (0, p0]
    f: np.ndarray                # f[i, :] = f_i on the grid; row 0 unused
    samples_per_pass: int
    seed: int

    @property
    def d_v_max(self) -> int:
        return self.f.shape[0] - 1

    def interp(self, i: int, p):
        """Elementary chart f_i at p via linear interpolation on the grid."""
        p = np.asarray(p, dtype=float)
        if np.any(p < self.grid[0] - 1e-15) or np.any(p > self.grid[-1] + 1e-15):
            raise ValueError("p outside the tabulated grid hull")
        return np.interp(p, self.grid, self.f[i])

    def elementary_at(self, p) -> np.ndarray:
        """All elementary charts at p: array of shape (d_v_max+1,) + p.shape."""
        p = np.asarray(p, dtype=float)
        if np.any(p < self.grid[0] - 1e-15) or np.any(p > self.grid[-1] + 1e-15):
            raise ValueError("p outside the tabulated grid hull")
        return np.vstack([np.interp(p, self.grid, self.f[i])
                          for i in range(self.f.shape[0])])

    def cache_key(self) -> str:
        h = hashlib.sha256()
        h.update(json.dumps({
            "snr": repr(self.snr.es_n0_db),
            "dc_bar": repr(self.dc_bar),
            "nu": repr(self.nu),
            "grid": [repr(float(x)) for x in self.grid],
            "samples": self.samples_per_pass,
            "seed": self.seed,
        }).encode())
        return h.hexdigest()[:16]

    def to_json(self) -> str:
        return json.dumps({
            "es_n0_db": repr(self.snr.es_n0_db),
            "dc_bar": repr(self.dc_bar),
            "nu": repr(self.nu),
            "grid": [repr(float(x)) for x in self.grid],
            "f": [[repr(float(x)) for x in row] for row in self.f],
            "samples_per_pass": self.samples_per_pass,
            "seed": self.seed,
        })

    @classmethod
    def from_json(cls, s: str) -> "ExitChartSet":
        d = json.loads(s)
        return cls(
            snr=SnrPoint.from_db(float(d["es_n0_db"])),
            dc_bar=float(d["dc_bar"]),
            nu=float(d["nu"]),
            grid=np.array([float(x) for x in d["grid"]]),
            f=np.array([[float(x) for x in row] for row in d["f"]]),
            samples_per_pass=int(d["samples_per_pass"]),
            seed=int(d["seed"]),
        )


def default_grid(p0: float, n_points: int = 40, span: float = 1e4,
                 extra=None) -> np.ndarray:
    """Geometric grid from p0 down to p0/span, optionally augmented."""
    g = p0 * np.geomspace(1.0 / span, 1.0, n_points)
    if extra is not None:
        g = np.concatenate([g, np.asarray(extra, dtype=float)])
    g = np.unique(g)
    return g[(g > 0) & (g <= p0 + 1e-15)]


def _check_output_pool(rng, size, m_in, m_ch, checkdist, nu):
    """Samples of check-to-variable messages toward degree->=2 neighbors.

    Check classes mix two degrees (dc, dc+1) and two degree-one neighbor
    counts (the theta split of nu); class probabilities are edge-perspective
    toward degree->=2 edges, i.e. proportional to node fraction * (d - k).
    """
    theta, k_lo, k_hi = theta_split(nu)
    node_w = checkdist.node_fractions()
    classes = []
    weights = []
    for d, wd in zip(checkdist.degrees, node_w):
        if wd <= 0:
            continue
        for k, wk in ((k_lo, theta), (k_hi, 1.0 - theta)):
            if wk <= 0:
                continue
            n_coded_edges = d - k
            if n_coded_edges <= 0:
                continue
            classes.append((int(d), int(k)))
            weights.append(wd * wk * n_coded_edges)
    weights = np.array(weights)
    weights /= weights.sum()
    counts = rng.multinomial(size, weights)
    outs = []
    sd_in = np.sqrt(2.0 * m_in)
    sd_ch = np.sqrt(2.0 * m_ch)
    for (d, k), cnt in zip(classes, counts):
        if cnt == 0:
            continue
        # inputs to one outgoing message: k channel LLRs + (d-1-k) model draws
        t = np.ones(cnt)
        if k > 0:
            ch = m_ch + sd_ch * rng.standard_normal((cnt, k))
            t *= np.prod(np.tanh(ch / 2.0), axis=1)
        n_model = d - 1 - k
        if n_model > 0:
            vm = m_in + sd_in * rng.standard_normal((cnt, n_model))
            t *= np.prod(np.tanh(vm / 2.0), axis=1)
        outs.append(2.0 * np.arctanh(np.clip(t, -_ATANH_CLIP, _ATANH_CLIP)))
    pool = np.concatenate(outs)
    rng.shuffle(pool)
    return pool


def _monotonize(f: np.ndarray, p0: float) -> np.ndarray:
    """Enforce: nondecreasing in p (rows) and nonincreasing in degree (cols).

    Alternating isotonic passes; f_1 is pinned at the analytic value p0.
    """
    g = f.copy()
    for _ in range(8):
        for i in range(2, g.shape[0]):
            g[i] = _pava(g[i], increasing=True)
        w = np.ones(g.shape[0] - 1)
        w[0] = 1e9  # keep the analytic f_1 row fixed
        for j in range(g.shape[1]):
            g[1:, j] = -_pava(-g[1:, j], increasing=True, w=w)
        rows_ok = all(np.all(np.diff(g[i]) >= -1e-15) for i in range(2, g.shape[0]))
        cols_ok = np.all(np.diff(g[1:], axis=0) <= 1e-15)
        if rows_ok and cols_ok:
            break
    np.clip(g, 0.0, 0.5 - 1e-12, out=g)
    return g


def estimate_elementary_charts(snr: SnrPoint, dc_bar: float, nu: float,
                               grid, d_v_max: int = 20,
                               samples: int = 10**6, seed: int = 0) -> ExitChartSet:
    """Monte-Carlo estimates of f_i for i = 1..d_v_max on a p_in grid.

    Per grid point: draw a pool of check-output samples (with degree-one
    neighbors injecting channel LLRs), then accumulate degree-i variable
    outputs as channel + (i-1) independent check draws.  f_1 is the channel
    error rate, computed analytically.  Deterministic for a fixed seed.
    """
    grid = np.sort(np.asarray(grid, dtype=float))
    if grid.size == 0:
        raise ValueError("empty grid")
    if np.any(grid <= 0) or np.any(grid > snr.p0 + 1e-12):
        raise ValueError("grid must lie in (0, p0]")
    if samples < 10**4:
        raise ValueError("sample count too small for stable estimates")
    checkdist = check_distribution_from_mean(dc_bar)
    m_ch = 1.0 / snr.sigma2
    f = np.zeros((d_v_max + 1, grid.size))
    f[1, :] = snr.p0  # degree-one output is the raw channel message
    for j, p_in in enumerate(grid):
        rng = stream(seed, "exit", round(float(p_in), 12), j)
        m_in = float(p_to_mean(p_in))
        pool = _check_output_pool(rng, samples, m_in, m_ch, checkdist, nu)
        running = m_ch + np.sqrt(2.0 * m_ch) * rng.standard_normal(samples)
        for i in range(2, d_v_max + 1):
            running = running + pool[rng.integers(0, pool.size, samples)]
            f[i, j] = np.count_nonzero(running < 0) / samples
    f = _monotonize(f, snr.p0)
    return ExitChartSet(snr=snr, dc_bar=float(dc_bar), nu=float(nu), grid=grid,
                        f=f, samples_per_pass=samples, seed=seed)


def combine(lam, charts: ExitChartSet, p):
    """Combined chart f_lambda(p) = sum_i lam_i f_i(p)."""
    lam = _as_dense(lam, charts.d_v_max)
    elem = charts.elementary_at(p)
    return np.tensordot(lam[:elem.shape[0]], elem, axes=(0, 0))


def coded_edge_weights(lam) -> np.ndarray:
    """Edge fractions restricted to degree->=2 variables, renormalized.

    The Gaussian message trajectory tracks messages from degree->=2 variables
    only: degree-one variables re-emit constant channel LLRs, and their effect
    on the decoder is carried by nu inside the check-node model.  Mixing the
    constant-error degree-one edges into the trajectory would count them twice.
    """
    lam = _as_dense(lam)
    w = lam.copy()
    w[0:2] = 0.0
    s = w.sum()
    if s <= 0:
        raise ValueError("no degree->=2 edges")
    return w / s


def predicted_iterations(lam, charts: ExitChartSet, p0: float, pt: float,
                         q_points: int = 200) -> float:
    """Discretized iteration functional over [pt, p0].

    I_Q = sum_i Delta / (q_i * ln(q_i / f(q_i))) with q_i = pt + i*Delta,
    where f combines the elementary charts over the degree->=2 edge fractions
    of ``lam`` (see :func:`coded_edge_weights`).  Raises OpennessViolation
    (with the violating point) if the chart touches the identity on any
    quantization point.
    """
    if not 0.0 < pt < p0:
        raise ValueError("need 0 < pt < p0")
    w = coded_edge_weights(lam)
    delta = (p0 - pt) / q_points
    q = pt + delta * np.arange(q_points + 1)  # include p0 for the openness check
    fv = combine(w, charts, np.minimum(q, charts.grid[-1]))
    bad = np.nonzero(fv >= q)[0]
    if bad.size:
        raise OpennessViolation(float(q[bad[0]]), float(fv[bad[0]]))
    qs, fs = q[:-1], np.maximum(fv[:-1], 1e-300)
    return float(np.sum(delta / (qs * np.log(qs / fs))))


def info_set_weights(lam, l0: float, dc_bar: float) -> np.ndarray:
    """Degree composition of the coded information set.

    Degree-one variables are the natural parity positions (each pins one
    check; their count per check is exactly nu), so the information set
    contains only the degree-one overflow beyond the check count plus all
    degree->=2 variables: W_1 = max(0, N_1 - (1 - r_c))/r_c, W_i = N_i/r_c.
    """
    lam = _as_dense(lam)
    L = node_from_edge(lam, l0)
    N = L.copy()
    N[0] = 0.0
    N /= N.sum()
    rc = coded_rate(lam, dc_bar)
    W = N / rc
    W[1] = max(0.0, N[1] - (1.0 - rc)) / rc
    return W / W.sum()


def message_to_bit_error(lam, l0: float, dc_bar: float, charts: ExitChartSet,
                         pt: float) -> float:
    """A-posteriori information bit error probability of the coded component.

    The posterior of a degree-i variable combines its channel LLR with all i
    incoming check messages, which is exactly the output statistic of a
    degree-(i+1) variable: P_t = sum_i W_i * f_{i+1}(pt), with W the
    information-set degree weights.  Requires charts tabulated one degree
    beyond the largest variable degree of ``lam``.
    """
    W = info_set_weights(lam, l0, dc_bar)
    d_max = int(np.max(np.nonzero(W)[0]))
    if d_max + 1 > charts.d_v_max:
        raise ValueError("charts must extend one degree beyond the ensemble")
    elem = charts.elementary_at(np.atleast_1d(pt))
    return float(sum(W[i] * elem[i + 1, 0] for i in range(1, d_max + 1)))


def max_uncoded(p_sc: float, r_in: float, p0: float) -> float:
    """Largest uncoded fraction compatible with the outer threshold."""
    for v in (p_sc, r_in, p0):
        if not 0.0 < v < 1.0:
            raise ValueError("inputs must be in (0, 1)")
    return min(1.0, p_sc * r_in / p0)
