"""Message-passing decoders and the BER simulation harness.

Sum-product uses the exact tanh/boxplus check rule computed with per-row
log-magnitude sums; offset-min-sum applies the sign-product times
max(min - offset, 0) correction unconditionally to every outgoing message.
Both run under flooding or layered schedules on a precomputed edge layout.
"""

from dataclasses import dataclass, field

import numpy as np

from .channel import SnrPoint, generate_llrs
from .codegen import SparseParityCheck
from .rng import stream

_TANH_CLIP = 1.0 - 1e-12
_MAG_FLOOR = 1e-300


@dataclass
class DecodeConfig:
    """Decoder algorithm, schedule and iteration budget."""

    algorithm: str = "sum-product"
    schedule: str = "flooding"
    max_iters: int = 9
    offset: float = 0.5
    early_stop: bool = True
    trace: bool = False
    layers: list = None  # explicit row groups for the layered schedule

    def __post_init__(self):
        if self.algorithm not in ("sum-product", "offset-min-sum"):
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if self.schedule not in ("flooding", "layered"):
            raise ValueError(f"unknown schedule {self.schedule!r}")
        if self.max_iters < 0:
            raise ValueError("iteration budget must be >= 0")
        if self.offset < 0:
            raise ValueError("offset must be nonnegative")


@dataclass
class DecodeResult:
    bits: np.ndarray
    iterations: int
    converged: bool
    trace: list = None  # per-iteration v2c message error fractions


@dataclass
class SimReport:
    """Information-set BER estimate with a binomial confidence interval."""

    frames: int
    bits: int
    errors: int
    ber: float
    ci95: float
    config: dict
    seed: int


def qc_layers(n_base_rows: int, z: int) -> list:
    """One layer per block-row of a lifted matrix."""
    return [np.arange(r * z, (r + 1) * z) for r in range(n_base_rows)]


def greedy_layers(matrix: SparseParityCheck) -> list:
    """Partition rows into layers sharing no column within a layer."""
    rows = matrix.rows_as_lists()
    layers = []
    used = []  # per-layer sets of columns
    for r in range(matrix.n_rows):
        cols = set(int(c) for c in rows[r])
        for li, taken in enumerate(used):
            if not (cols & taken):
                layers[li].append(r)
                taken |= cols
                break
        else:
            layers.append([r])
            used.append(set(cols))
    return [np.array(l, dtype=np.int64) for l in layers]


class _EdgeLayout:
    """Precomputed index structure for message passing on one matrix."""

    def __init__(self, matrix: SparseParityCheck, layers=None):
        if np.any(matrix.col_degrees() == 0):
            raise ValueError("matrix has empty columns")
        self.matrix = matrix
        self.row = matrix.edge_row
        self.col = matrix.edge_col
        self.n_edges = matrix.n_edges
        self.row_start = np.searchsorted(self.row, np.arange(matrix.n_rows))
        self.col_perm = matrix.col_order()
        cols_sorted = self.col[self.col_perm]
        self.col_start = np.searchsorted(cols_sorted, np.arange(matrix.n_cols))
        if layers is not None:
            self.layers = []
            for rows in layers:
                rows = np.asarray(rows)
                sel = np.concatenate([
                    np.arange(self.row_start[r],
                              self.row_start[r + 1] if r + 1 < matrix.n_rows
                              else self.n_edges)
                    for r in rows]) if len(rows) else np.array([], dtype=np.int64)
                # local reduceat segmentation for this layer's edges
                local_start = np.searchsorted(self.row[sel], rows)
                self.layers.append((rows, sel, local_start))
        else:
            self.layers = None


def _layout(matrix: SparseParityCheck, config: DecodeConfig) -> _EdgeLayout:
    layers = None
    if config.schedule == "layered":
        layers = config.layers if config.layers is not None else greedy_layers(matrix)
    key = ("_edge_layout", config.schedule, id(config.layers))
    cached = getattr(matrix, "_layout_cache", None)
    if cached is not None and cached[0] == key:
        return cached[1]
    layout = _EdgeLayout(matrix, layers)
    matrix._layout_cache = (key, layout)
    return layout


def _check_pass(m_vc, seg_start, row_of_edge, algorithm, offset):
    """Extrinsic check-to-variable messages for one set of rows.

    ``seg_start`` segments the edge arrays by row; ``row_of_edge`` maps each
    edge to its local segment index.
    """
    neg = m_vc < 0
    neg_count = np.add.reduceat(neg, seg_start)
    sign = np.where((neg_count[row_of_edge] - neg) % 2, -1.0, 1.0)
    if algorithm == "sum-product":
        t = np.abs(np.tanh(m_vc / 2.0))
        logt = np.log(np.maximum(t, _MAG_FLOOR))
        logsum = np.add.reduceat(logt, seg_start)
        mag = np.exp(logsum[row_of_edge] - logt)
        mag = np.minimum(mag, _TANH_CLIP)
        return 2.0 * np.arctanh(sign * mag)
    mag = np.abs(m_vc)
    m1 = np.minimum.reduceat(mag, seg_start)
    hit = np.nonzero(mag == m1[row_of_edge])[0]
    first = hit[np.unique(row_of_edge[hit], return_index=True)[1]]
    tmp = mag.copy()
    tmp[first] = np.inf
    m2 = np.minimum.reduceat(tmp, seg_start)
    ext = m1[row_of_edge].copy()
    ext[first] = m2[row_of_edge[first]]
    return sign * np.maximum(ext - offset, 0.0)


def decode(matrix: SparseParityCheck, llrs, config: DecodeConfig) -> DecodeResult:
    """Belief-propagation decode of one frame."""
    llr = np.asarray(llrs, dtype=float)
    if llr.shape != (matrix.n_cols,):
        raise ValueError("LLR length does not match the code length")
    layout = _layout(matrix, config)
    if config.schedule == "flooding":
        return _decode_flooding(layout, llr, config)
    return _decode_layered(layout, llr, config)


def _syndrome_ok(layout, bits) -> bool:
    par = np.add.reduceat(bits[layout.col], layout.row_start) % 2
    return not par.any()


def _decode_flooding(layout, llr, config) -> DecodeResult:
    row_of_edge = layout.row
    m_cv = np.zeros(layout.n_edges)
    m_vc = llr[layout.col].copy()
    trace = [] if config.trace else None
    posterior = llr.copy()
    iters_used = 0
    converged = _syndrome_ok(layout, (posterior < 0).astype(np.int8))
    for it in range(config.max_iters):
        if converged and config.early_stop:
            break
        if config.trace:
            trace.append(float(np.mean(m_vc < 0)))
        m_cv = _check_pass(m_vc, layout.row_start, row_of_edge,
                           config.algorithm, config.offset)
        mc_colsorted = m_cv[layout.col_perm]
        colsum = np.add.reduceat(mc_colsorted, layout.col_start)
        posterior = llr + colsum
        m_vc = posterior[layout.col] - m_cv
        iters_used = it + 1
        converged = _syndrome_ok(layout, (posterior < 0).astype(np.int8))
    bits = (posterior < 0).astype(np.int8)
    return DecodeResult(bits=bits, iterations=iters_used, converged=bool(converged),
                        trace=trace)


def _decode_layered(layout, llr, config) -> DecodeResult:
    posterior = llr.copy()
    m_cv = np.zeros(layout.n_edges)
    trace = [] if config.trace else None
    iters_used = 0
    converged = _syndrome_ok(layout, (posterior < 0).astype(np.int8))
    for it in range(config.max_iters):
        if converged and config.early_stop:
            break
        if config.trace:
            trace.append(float(np.mean(posterior[layout.col] - m_cv < 0)))
        for rows, sel, local_start in layout.layers:
            if len(sel) == 0:
                continue
            m_vc = posterior[layout.col[sel]] - m_cv[sel]
            local_row = np.searchsorted(rows, layout.row[sel])
            new = _check_pass(m_vc, local_start, local_row,
                              config.algorithm, config.offset)
            np.add.at(posterior, layout.col[sel], new - m_cv[sel])
            m_cv[sel] = new
        iters_used = it + 1
        converged = _syndrome_ok(layout, (posterior < 0).astype(np.int8))
    bits = (posterior < 0).astype(np.int8)
    return DecodeResult(bits=bits, iterations=iters_used, converged=bool(converged),
                        trace=trace)


def _info_columns(matrix: SparseParityCheck) -> np.ndarray:
    if matrix.info_cols is not None:
        return matrix.info_cols
    from .codegen import info_set
    matrix.info_cols = info_set(matrix)
    return matrix.info_cols


def simulate_ber(matrix: SparseParityCheck, snr: SnrPoint, config: DecodeConfig,
                 seed: int, min_errors: int = 100, min_frames: int = 50,
                 max_frames: int = 5000, workers: int = 1) -> SimReport:
    """Information-set BER under all-zero-codeword transmission.

    Frames are evaluated in a fixed index order with per-frame seeds, and the
    stop rule (>= min_errors error events and >= min_frames frames) is applied
    by scanning that order, so the report is worker-count invariant.
    """
    info = _info_columns(matrix)
    k = len(info)
    per_frame = []

    def run_frame(i):
        frame = generate_llrs(matrix.n_cols, snr.sigma2, seed, frame_id=i)
        res = decode(matrix, frame.values, config)
        return int(np.count_nonzero(res.bits[info]))

    batch = max(workers, 8)
    done = False
    i = 0
    while not done and i < max_frames:
        idx = list(range(i, min(i + batch, max_frames)))
        if workers > 1:
            from concurrent.futures import ThreadPoolExecutor
            with ThreadPoolExecutor(max_workers=workers) as pool:
                per_frame.extend(pool.map(run_frame, idx))
        else:
            per_frame.extend(run_frame(j) for j in idx)
        i = idx[-1] + 1
        cum = np.cumsum(per_frame)
        enough = np.nonzero((cum >= min_errors) &
                            (np.arange(1, len(per_frame) + 1) >= min_frames))[0]
        if enough.size:
            per_frame = per_frame[:enough[0] + 1]
            done = True
    frames = len(per_frame)
    errors = int(np.sum(per_frame))
    bits = frames * k
    ber = errors / bits if bits else 0.0
    ci95 = 1.96 * np.sqrt(max(ber * (1.0 - ber), 0.0) / bits) if bits else 0.0
    cfg = {"algorithm": config.algorithm, "schedule": config.schedule,
           "max_iters": config.max_iters, "offset": config.offset}
    return SimReport(frames=frames, bits=bits, errors=errors, ber=ber,
                     ci95=ci95, config=cfg, seed=seed)


def iteration_trace(matrix: SparseParityCheck, snr: SnrPoint,
                    config: DecodeConfig, frames: int, seed: int) -> np.ndarray:
    """Mean variable-to-check message error rate per iteration."""
    cfg = DecodeConfig(algorithm=config.algorithm, schedule=config.schedule,
                       max_iters=config.max_iters, offset=config.offset,
                       early_stop=False, trace=True, layers=config.layers)
    acc = np.zeros(cfg.max_iters)
    for i in range(frames):
        frame = generate_llrs(matrix.n_cols, snr.sigma2, seed, frame_id=i)
        res = decode(matrix, frame.values, cfg)
        t = np.asarray(res.trace)
        acc[:len(t)] += t
        if len(t) < cfg.max_iters:  # converged frames stay at their last level
            acc[len(t):] += t[-1] if len(t) else 0.0
    return acc / frames
