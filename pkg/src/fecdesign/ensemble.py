"""Degree-distribution algebra for the inner-code ensemble.

Distributions are dense coefficient vectors indexed by degree: L[i] is the
fraction of variable nodes of degree i (degree 0 = uncoded), lam[i] the
fraction of edges attached to degree-i variable nodes (lam[0] unused).  Check
distributions are concentrated on at most two consecutive degrees.
"""

import json
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

TOL = 1e-9


def _as_dense(coeffs, max_degree=None) -> np.ndarray:
    a = np.asarray(coeffs, dtype=float)
    if max_degree is not None and len(a) < max_degree + 1:
        a = np.concatenate([a, np.zeros(max_degree + 1 - len(a))])
    return a


def validate_distribution(a: np.ndarray, name: str = "distribution", tol: float = 1e-6):
    # published fixtures are rounded to 4 decimals; pass tol=1e-3 for those
    if np.any(a < -TOL):
        raise ValueError(f"{name} has negative coefficients")
    if abs(a.sum() - 1.0) > tol:
        raise ValueError(f"{name} does not sum to 1 (sum={a.sum():.9f})")


def edge_from_node(L) -> np.ndarray:
    """Edge-perspective lambda from node-perspective L: lam_i = i*L_i / L'(1)."""
    L = _as_dense(L)
    degrees = np.arange(len(L))
    lp1 = float(np.dot(degrees, L))
    if lp1 <= 0:
        raise ValueError("degenerate ensemble: all mass on degree 0")
    lam = degrees * L / lp1
    lam[0] = 0.0
    return lam


def node_from_edge(lam, l0: float) -> np.ndarray:
    """Node-perspective L from edge-perspective lambda and uncoded fraction."""
    lam = _as_dense(lam)
    if not 0.0 <= l0 < 1.0:
        raise ValueError("l0 must be in [0, 1)")
    degrees = np.arange(len(lam))
    with np.errstate(divide="ignore", invalid="ignore"):
        per_node = np.where(degrees > 0, lam / np.maximum(degrees, 1), 0.0)
    total = per_node.sum()
    if total <= 0:
        raise ValueError("degenerate edge distribution")
    L = (1.0 - l0) * per_node / total
    L[0] = l0
    return L


def coded_rate(lam, dc_bar: float) -> float:
    """Rate of the coded component: r_c = 1 - 1/(dc_bar * sum(lam_i / i))."""
    lam = _as_dense(lam)
    degrees = np.arange(len(lam))
    s = float(np.sum(lam[1:] / degrees[1:]))
    rc = 1.0 - 1.0 / (dc_bar * s)
    if rc <= 0:
        raise ValueError(f"infeasible rate: r_c = {rc:.6f} <= 0")
    return rc


def nu_of(lam, dc_bar: float) -> float:
    """Average degree-one variable nodes per check: nu = dc_bar * lam_1."""
    lam = _as_dense(lam)
    return float(dc_bar * lam[1])


def theta_split(nu: float):
    """Two-class allocation of degree-one neighbors across checks.

    Returns (theta, low, high) with theta*low + (1-theta)*high = nu, where a
    fraction theta of checks carry ``low`` degree-one neighbors and the rest
    carry ``high``.
    """
    if nu < 0:
        raise ValueError("nu must be nonnegative")
    low = int(np.floor(nu))
    high = int(np.ceil(nu))
    if low == high:
        return 1.0, low, high
    theta = high - nu  # solves theta*low + (1-theta)*high = nu
    return float(theta), low, high


def inner_complexity(r_in: float, dc_bar: float, nu: float, iters: float) -> float:
    """Inner-code data-flow score (1-R_in)(dc_bar - nu) I / R_in."""
    if not 0.0 < r_in < 1.0:
        raise ValueError("r_in must be in (0, 1)")
    if nu < 0 or dc_bar <= nu:
        raise ValueError("need dc_bar > nu >= 0")
    if iters < 0:
        raise ValueError("iteration count must be nonnegative")
    return (1.0 - r_in) * (dc_bar - nu) * iters / r_in


def total_complexity(eta_i: float, r_sc: float, p_post: float = 0.0) -> float:
    """Concatenated-code score eta = eta_i / r_sc + P."""
    if not 0.0 < r_sc < 1.0:
        raise ValueError("outer rate must be in (0, 1)")
    return eta_i / r_sc + p_post


@dataclass(frozen=True)
class CheckDistribution:
    """Check-side degree distribution on at most two consecutive degrees."""

    dc: int
    dc_bar: float
    rho: np.ndarray  # edge-perspective weights on degrees (dc, dc+1)

    @property
    def degrees(self) -> np.ndarray:
        return np.array([self.dc, self.dc + 1])

    def node_fractions(self) -> np.ndarray:
        """Node-perspective weights on degrees (dc, dc+1)."""
        w = self.rho / self.degrees
        return w / w.sum()


def check_distribution_from_mean(dc_bar: float) -> CheckDistribution:
    """Check distribution with average node degree dc_bar, per the standard
    two-consecutive-degree parameterization."""
    if dc_bar < 2:
        raise ValueError("average check degree must be >= 2")
    dc = int(np.floor(dc_bar))
    if dc == dc_bar:
        rho = np.array([1.0, 0.0])
    else:
        r_low = dc * (dc + 1 - dc_bar) / dc_bar
        rho = np.array([r_low, 1.0 - r_low])
    return CheckDistribution(dc=dc, dc_bar=float(dc_bar), rho=rho)


@dataclass(frozen=True)
class InnerEnsemble:
    """Design variable of the toolkit: an inner-code degree-distribution pair."""

    L: np.ndarray
    lam: np.ndarray
    dc_bar: float
    r_c: float
    r_in: float
    nu: float

    @classmethod
    def from_node(cls, L, dc_bar: float, tol: float = 1e-3) -> "InnerEnsemble":
        L = _as_dense(L)
        validate_distribution(L, "L", tol=tol)
        lam = edge_from_node(L)
        rc = coded_rate(lam, dc_bar)
        r_in = L[0] + rc * (1.0 - L[0])
        return cls(L=L, lam=lam, dc_bar=float(dc_bar), r_c=rc, r_in=r_in,
                   nu=nu_of(lam, dc_bar))

    @classmethod
    def from_edge(cls, lam, l0: float, dc_bar: float, tol: float = 1e-3) -> "InnerEnsemble":
        lam = _as_dense(lam)
        validate_distribution(lam, "lambda", tol=tol)
        return cls.from_node(node_from_edge(lam, l0), dc_bar, tol=tol)

    @property
    def l0(self) -> float:
        return float(self.L[0])

    @property
    def d_v_max(self) -> int:
        return int(np.max(np.nonzero(self.L)[0]))

    def check_distribution(self) -> CheckDistribution:
        return check_distribution_from_mean(self.dc_bar)

    def coded_node_fractions(self) -> np.ndarray:
        """Node fractions of the coded component only (degree >= 1)."""
        N = self.L.copy()
        N[0] = 0.0
        return N / N.sum()

    def validate(self, tol: float = TOL):
        """Check the rate and nu identities simultaneously."""
        degrees = np.arange(len(self.lam))
        s = float(np.sum(self.lam[1:] / degrees[1:]))
        if abs(s - 1.0 / (self.dc_bar * (1.0 - self.r_c))) > tol:
            raise ValueError("rate identity violated")
        if abs(self.r_in - (self.l0 + self.r_c * (1.0 - self.l0))) > tol:
            raise ValueError("inner-rate identity violated")
        if abs(self.nu - self.dc_bar * self.lam[1]) > tol:
            raise ValueError("nu identity violated")

    def to_dict(self) -> dict:
        return {
            "L": [repr(float(x)) for x in self.L],
            "dc_bar": repr(float(self.dc_bar)),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "InnerEnsemble":
        L = np.array([float(x) for x in d["L"]])
        return cls.from_node(L, float(d["dc_bar"]))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, s: str) -> "InnerEnsemble":
        return cls.from_dict(json.loads(s))


@dataclass(frozen=True)
class StaircaseSpec:
    """Outer staircase code modeled by its rate, threshold and block side."""

    name: str
    r_sc: float
    p_sc: float
    block_side: int
    p_post: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.r_sc < 1.0:
            raise ValueError("outer rate must be in (0, 1)")
        if not 0.0 < self.p_sc < 0.5:
            raise ValueError("threshold must be in (0, 1/2)")

    def packing_ratio(self, k_in: int) -> int:
        m2 = self.block_side * self.block_side
        if k_in <= 0 or m2 % k_in != 0:
            raise ValueError(f"inner dimension {k_in} does not divide M^2 = {m2}")
        return m2 // k_in


def load_staircase_table(path=None) -> list:
    """Outer-code table: packaged default or an explicit JSON file."""
    if path is None:
        text = resources.files("fecdesign.data").joinpath("staircase_codes.json").read_text()
    else:
        with open(path) as fh:
            text = fh.read()
    rows = json.loads(text)
    return [StaircaseSpec(name=r["name"], r_sc=float(r["r_sc"]), p_sc=float(r["p_sc"]),
                          block_side=int(r["M"]), p_post=float(r.get("p_post", 0.0)))
            for r in rows]
