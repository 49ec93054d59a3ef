"""Concatenated-system model: rate composition, diagonal interleaving and
threshold-based outer-code adjudication.

The outer code acts as an ideal threshold device: the concatenation succeeds
iff the combined inner information BER is at or below the outer threshold.
Interleaving spreads each inner codeword across the outer block rows and
columns with a fixed shear permutation.
"""

from dataclasses import dataclass

import numpy as np

from . import Infeasible
from .channel import SnrPoint
from .decoder import DecodeConfig, SimReport, simulate_ber
from .ensemble import (InnerEnsemble, StaircaseSpec, inner_complexity,
                       total_complexity)


def compose_rates(r_in: float, r_sc: float) -> float:
    """Overall rate of the concatenation."""
    for r in (r_in, r_sc):
        if not 0.0 < r <= 1.0:
            raise ValueError("rates must be in (0, 1]")
    return r_in * r_sc


def required_inner_rate(r_cat: float, r_sc: float) -> float:
    """Inner rate needed to reach r_cat through an outer code of rate r_sc."""
    if not 0.0 < r_cat < 1.0 or not 0.0 < r_sc <= 1.0:
        raise ValueError("rates must be in (0, 1)")
    r_in = r_cat / r_sc
    if r_in >= 1.0:
        raise Infeasible(f"required inner rate {r_in:.4f} >= 1")
    return r_in


@dataclass
class ConcatSystem:
    """Inner ensemble/code paired with an outer staircase record."""

    ensemble: InnerEnsemble
    outer: StaircaseSpec
    k_in: int
    inner_matrix: object = None  # optional SparseParityCheck realization

    def __post_init__(self):
        self.r_cat = compose_rates(self.ensemble.r_in, self.outer.r_sc)
        self.m = self.outer.packing_ratio(self.k_in)  # raises on divisibility

    def combined_information_ber(self, p0: float, coded_info_ber: float) -> float:
        """Information BER mixing uncoded bits at p0 with measured coded bits."""
        ens = self.ensemble
        return (ens.l0 * p0 + (1.0 - ens.l0) * ens.r_c * coded_info_ber) / ens.r_in

    def complexity(self, iters: int) -> tuple:
        eta_i = inner_complexity(self.ensemble.r_in, self.ensemble.dc_bar,
                                 self.ensemble.nu, iters)
        return eta_i, total_complexity(eta_i, self.outer.r_sc, self.outer.p_post)


def _interleave_permutation(M: int, k_in: int) -> np.ndarray:
    """Shear map: flat position j*k_in + t = (q, r) base-M goes to cell
    (r, (q + r) mod M); each inner codeword hits every block row equally and
    every column at most ceil(k_in/M) times."""
    f = np.arange(M * M)
    q, r = f // M, f % M
    return r * M + (q + r) % M


def diagonal_interleave(bits, M: int, m: int) -> np.ndarray:
    """Spread m inner codewords of dimension M^2/m over an M x M block."""
    bits = np.asarray(bits)
    if bits.shape != (M * M,):
        raise ValueError("input length must be M^2")
    if (M * M) % m != 0:
        raise ValueError("packing ratio must divide M^2")
    out = np.empty_like(bits)
    out[_interleave_permutation(M, (M * M) // m)] = bits
    return out


def diagonal_deinterleave(bits, M: int, m: int) -> np.ndarray:
    bits = np.asarray(bits)
    if bits.shape != (M * M,):
        raise ValueError("input length must be M^2")
    if (M * M) % m != 0:
        raise ValueError("packing ratio must divide M^2")
    return bits[_interleave_permutation(M, (M * M) // m)]


def outer_adjudicate(ber, outer: StaircaseSpec) -> tuple:
    """Ideal threshold decision: (passed, margin) with inclusive comparison."""
    if isinstance(ber, SimReport):
        ber = ber.ber
    ber = float(ber)
    if not np.isfinite(ber):
        raise ValueError("BER must be finite")
    return ber <= outer.p_sc, outer.p_sc - ber


def end_to_end_run(system: ConcatSystem, snr_db_list, config: DecodeConfig,
                   seed: int, sim_kwargs=None) -> dict:
    """Channel -> inner decode -> threshold adjudication over an SNR list."""
    if system.inner_matrix is None:
        raise ValueError("end-to-end run needs an inner code realization")
    sim_kwargs = dict(sim_kwargs or {})
    eta_i, eta = system.complexity(config.max_iters)
    rows = []
    for db in snr_db_list:
        snr = SnrPoint.from_db(db)
        rep = simulate_ber(system.inner_matrix, snr, config, seed=seed,
                           **sim_kwargs)
        combined = system.combined_information_ber(snr.p0, rep.ber)
        passed, margin = outer_adjudicate(combined, system.outer)
        rows.append({
            "snr_db": float(db),
            "coded_ber": rep.ber,
            "combined_ber": combined,
            "ci95": rep.ci95,
            "frames": rep.frames,
            "errors": rep.errors,
            "passed": bool(passed),
            "margin": margin,
        })
    return {
        "outer": system.outer.name,
        "r_cat": system.r_cat,
        "eta_i": eta_i,
        "eta": eta,
        "iters": config.max_iters,
        "seed": seed,
        "points": rows,
    }
