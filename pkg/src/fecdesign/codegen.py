"""Tanner-graph realizations of inner-code ensembles.

Random codes come from configuration-model socket matching with degree-one
columns spread evenly over the checks (mirroring the two-class allocation the
chart analysis assumes); structured codes come from circulant lifting of a
small base matrix with greedy shift selection that avoids short lifted cycles.
"""

from dataclasses import dataclass, field

import numpy as np

from .ensemble import InnerEnsemble, theta_split
from .rng import stream


def _largest_remainder(fractions, total: int) -> np.ndarray:
    """Integer counts summing to ``total`` closest to total*fractions."""
    fractions = np.asarray(fractions, dtype=float)
    raw = fractions * total
    counts = np.floor(raw).astype(int)
    short = total - counts.sum()
    if short > 0:
        order = np.argsort(-(raw - counts))
        counts[order[:short]] += 1
    return counts


@dataclass
class SparseParityCheck:
    """Sparse binary parity-check matrix in edge-list form.

    Edges are kept twice-sorted: (edge_row, edge_col) ordered by row for
    check-side passes, and ``col_order`` permutes them into column order for
    variable-side passes.
    """

    n_rows: int
    n_cols: int
    edge_row: np.ndarray
    edge_col: np.ndarray
    info_cols: np.ndarray = None  # optional: k columns forming the info set

    def __post_init__(self):
        order = np.lexsort((self.edge_col, self.edge_row))
        self.edge_row = np.asarray(self.edge_row)[order]
        self.edge_col = np.asarray(self.edge_col)[order]
        pairs = self.edge_row.astype(np.int64) * self.n_cols + self.edge_col
        if len(np.unique(pairs)) != len(pairs):
            raise ValueError("duplicate edges")

    @property
    def n_edges(self) -> int:
        return len(self.edge_row)

    def row_degrees(self) -> np.ndarray:
        return np.bincount(self.edge_row, minlength=self.n_rows)

    def col_degrees(self) -> np.ndarray:
        return np.bincount(self.edge_col, minlength=self.n_cols)

    def col_order(self) -> np.ndarray:
        return np.argsort(self.edge_col, kind="stable")

    def rows_as_lists(self) -> list:
        split = np.searchsorted(self.edge_row, np.arange(1, self.n_rows))
        return np.split(self.edge_col, split)

    def cols_as_lists(self) -> list:
        order = self.col_order()
        cols = self.edge_col[order]
        split = np.searchsorted(cols, np.arange(1, self.n_cols))
        return np.split(self.edge_row[order], split)

    def edge_lambda(self) -> np.ndarray:
        """Edge-perspective degree distribution realized by the matrix."""
        deg = self.col_degrees()
        deg_of_edge = deg[self.edge_col]
        lam = np.bincount(deg_of_edge, minlength=int(deg.max()) + 1).astype(float)
        lam[0] = 0.0
        return lam / lam.sum()

    def save(self, path):
        with open(path, "w") as fh:
            fh.write(f"{self.n_rows} {self.n_cols} {self.n_edges}\n")
            for r, c in zip(self.edge_row, self.edge_col):
                fh.write(f"{r} {c}\n")
            if self.info_cols is not None:
                fh.write("info " + " ".join(str(c) for c in self.info_cols) + "\n")

    @classmethod
    def load(cls, path) -> "SparseParityCheck":
        with open(path) as fh:
            header = fh.readline().split()
            n_rows, n_cols, n_edges = (int(x) for x in header)
            rows = np.empty(n_edges, dtype=np.int64)
            cols = np.empty(n_edges, dtype=np.int64)
            for i in range(n_edges):
                r, c = fh.readline().split()
                rows[i], cols[i] = int(r), int(c)
            info = None
            tail = fh.readline().split()
            if tail and tail[0] == "info":
                info = np.array([int(x) for x in tail[1:]], dtype=np.int64)
        return cls(n_rows=n_rows, n_cols=n_cols, edge_row=rows, edge_col=cols,
                   info_cols=info)


def _check_degree_plan(n_edges: int, dc_bar: float):
    """Row count and degree assignment: all rows of degree dc or dc+1."""
    dc = int(np.floor(dc_bar))
    lo = int(np.ceil(n_edges / (dc + 1)))
    hi = n_edges // dc
    if lo > hi:
        raise ValueError("edge count not splittable into degrees dc/dc+1")
    n_rows = int(np.clip(int(round(n_edges / dc_bar)), lo, hi))
    n_high = n_edges - dc * n_rows  # rows of degree dc+1
    degs = np.full(n_rows, dc, dtype=np.int64)
    degs[:n_high] = dc + 1
    return n_rows, degs


def _duplicate_edges(edge_row, edge_col, n_cols) -> np.ndarray:
    pairs = edge_row.astype(np.int64) * n_cols + edge_col
    order = np.argsort(pairs, kind="stable")
    sp = pairs[order]
    dup_mask = np.zeros(len(sp), dtype=bool)
    dup_mask[1:] = sp[1:] == sp[:-1]
    return order[dup_mask]


def _four_cycle_edges(edge_row, edge_col, n_rows) -> np.ndarray:
    """One edge id from each pair of rows sharing two or more columns."""
    order = np.argsort(edge_col, kind="stable")
    rows = edge_row[order]
    cols = edge_col[order]
    keys = []
    eids = []
    start = 0
    n = len(cols)
    while start < n:
        end = start
        c = cols[start]
        while end < n and cols[end] == c:
            end += 1
        seg = order[start:end]
        rseg = rows[start:end]
        for i in range(end - start):
            for j in range(i + 1, end - start):
                r1, r2 = rseg[i], rseg[j]
                if r1 > r2:
                    r1, r2 = r2, r1
                keys.append(r1 * n_rows + r2)
                eids.append(seg[j])
        start = end
    if not keys:
        return np.array([], dtype=np.int64)
    keys = np.asarray(keys)
    eids = np.asarray(eids)
    o = np.argsort(keys, kind="stable")
    sk = keys[o]
    dup = np.zeros(len(sk), dtype=bool)
    dup[1:] = sk[1:] == sk[:-1]
    return np.unique(eids[o[dup]])


def _reswitch(edge_row, edge_col, n_rows, n_cols, rng, avoid_four: bool,
              rounds: int = 200):
    """Repair duplicate edges (and optionally 4-cycles) by column swaps.

    Swapping the column endpoints of two edges preserves all row and column
    degrees; repeated rounds converge because each round re-randomizes every
    offending edge.
    """
    def fix_duplicates():
        for _ in range(rounds):
            bad = _duplicate_edges(edge_row, edge_col, n_cols)
            if bad.size == 0:
                return
            partners = rng.integers(0, len(edge_row), size=bad.size)
            for e, f in zip(bad, partners):
                edge_col[e], edge_col[f] = edge_col[f], edge_col[e]
        raise ValueError("could not remove duplicate edges by re-switching")

    fix_duplicates()
    if avoid_four:
        for _ in range(30):
            bad = _four_cycle_edges(edge_row, edge_col, n_rows)
            if bad.size == 0:
                break
            partners = rng.integers(0, len(edge_row), size=bad.size)
            for e, f in zip(bad, partners):
                edge_col[e], edge_col[f] = edge_col[f], edge_col[e]
            fix_duplicates()
        # leftover 4-cycles after the budget are tolerated (dense small
        # graphs cannot always avoid them)
    return edge_row, edge_col


def sample_random(ens: InnerEnsemble, n_c: int, seed: int,
                  avoid_four: bool = True) -> SparseParityCheck:
    """Configuration-model sample of the coded component at length n_c.

    Column degree counts come from largest-remainder rounding of the coded
    node fractions; rows all have degree dc or dc+1.  Degree-one columns are
    distributed over checks per the two-class (theta) allocation so each check
    carries floor(nu) or ceil(nu) of them, matching the chart model; remaining
    sockets are matched uniformly at random with duplicate edges removed by
    re-switching.
    """
    rng = stream(seed, "sample_random", n_c)
    N = ens.coded_node_fractions()
    counts = _largest_remainder(N, n_c)
    degrees = np.arange(len(counts))
    n_edges = int(np.dot(degrees, counts))
    if abs(ens.dc_bar - round(ens.dc_bar)) < 1e-9:
        # integer check degree: shave the edge remainder by demoting a few
        # columns one degree so every row ends up exactly at dc
        dc = int(round(ens.dc_bar))
        for _ in range(n_edges % dc):
            d = int(np.max(np.nonzero(counts[2:])[0])) + 2
            counts[d] -= 1
            counts[d - 1] += 1
            n_edges -= 1
    n_rows, row_degs = _check_degree_plan(n_edges, ens.dc_bar)

    col_degree = np.repeat(degrees, counts)  # degree of column i
    one_cols = np.nonzero(col_degree == 1)[0]
    multi_cols = np.nonzero(col_degree >= 2)[0]

    # spread degree-one columns: each check receives floor(nu) or ceil(nu)
    n1 = len(one_cols)
    base = n1 // n_rows
    extra = n1 - base * n_rows
    ones_per_row = np.full(n_rows, base, dtype=np.int64)
    ones_per_row[rng.permutation(n_rows)[:extra]] += 1
    if np.any(ones_per_row > row_degs):
        raise ValueError("unrealizable profile: more degree-one columns than sockets")
    one_rows = np.repeat(np.arange(n_rows), ones_per_row)
    one_cols = rng.permutation(one_cols)

    # match the remaining sockets uniformly
    rest_row_sockets = np.repeat(np.arange(n_rows), row_degs - ones_per_row)
    rest_col_sockets = np.repeat(multi_cols, col_degree[multi_cols])
    if len(rest_row_sockets) != len(rest_col_sockets):
        raise ValueError("socket count mismatch")
    rest_col_sockets = rng.permutation(rest_col_sockets)

    edge_row = np.concatenate([one_rows, rest_row_sockets])
    edge_col = np.concatenate([one_cols, rest_col_sockets])
    # re-switch only among multi-degree edges; degree-one edges are unique
    # and cannot participate in cycles
    er, ec = edge_row[n1:].copy(), edge_col[n1:].copy()
    er, ec = _reswitch(er, ec, n_rows, n_c, rng, avoid_four=avoid_four)
    edge_row = np.concatenate([edge_row[:n1], er])
    edge_col = np.concatenate([edge_col[:n1], ec])

    m = SparseParityCheck(n_rows=n_rows, n_cols=n_c, edge_row=edge_row,
                          edge_col=edge_col)
    m.info_cols = info_set(m)
    return m


# ---------------------------------------------------------------------------
# girth


def _adjacency(matrix: SparseParityCheck):
    """Combined-graph CSR: variables 0..n-1, checks n..n+m-1; values carry
    (neighbor vertex, undirected edge id)."""
    n, m = matrix.n_cols, matrix.n_rows
    e = matrix.n_edges
    src = np.concatenate([matrix.edge_col, matrix.edge_row + n])
    dst = np.concatenate([matrix.edge_row + n, matrix.edge_col])
    eid = np.concatenate([np.arange(e), np.arange(e)])
    order = np.argsort(src, kind="stable")
    src, dst, eid = src[order], dst[order], eid[order]
    ptr = np.searchsorted(src, np.arange(n + m + 1))
    return ptr, dst, eid


def girth(matrix: SparseParityCheck, starts=None, depth_limit=None):
    """Exact shortest-cycle length via truncated BFS from variable nodes.

    Running BFS from every variable node gives the exact girth (every Tanner
    cycle passes through a variable).  ``starts`` restricts the root set when
    the caller can justify it (e.g. circulant symmetry classes of a lifted
    matrix); ``depth_limit`` caps the search radius, returning inf when no
    cycle of length <= 2*depth_limit exists through the roots.
    """
    ptr, dst, eid = _adjacency(matrix)
    n_vert = matrix.n_cols + matrix.n_rows
    if starts is None:
        starts = range(matrix.n_cols)
    best = np.inf
    dist = np.empty(n_vert, dtype=np.int64)
    via = np.empty(n_vert, dtype=np.int64)  # edge used to reach the vertex
    for s in starts:
        dist.fill(-1)
        dist[s] = 0
        via[s] = -1
        frontier = [s]
        level = 0
        while frontier:
            if 2 * level + 1 >= best:
                break
            if depth_limit is not None and level >= depth_limit:
                break
            nxt = []
            for u in frontier:
                du = dist[u]
                for k in range(ptr[u], ptr[u + 1]):
                    if eid[k] == via[u]:
                        continue
                    w = dst[k]
                    if dist[w] < 0:
                        dist[w] = du + 1
                        via[w] = eid[k]
                        nxt.append(w)
                    else:
                        best = min(best, du + dist[w] + 1)
            frontier = nxt
            level += 1
    return best


# ---------------------------------------------------------------------------
# quasi-cyclic lifting


@dataclass
class QcProtograph:
    """Base matrix of circulant shifts (-1 = empty) with lifting size Z."""

    base: np.ndarray
    z: int
    girth: int = None

    @property
    def n_rows(self) -> int:
        return self.base.shape[0]

    @property
    def n_cols(self) -> int:
        return self.base.shape[1]

    def save(self, path):
        with open(path, "w") as fh:
            fh.write(f"{self.n_rows} {self.n_cols} {self.z} {self.girth or 0}\n")
            for row in self.base:
                fh.write(" ".join(str(int(v)) for v in row) + "\n")

    @classmethod
    def load(cls, path) -> "QcProtograph":
        with open(path) as fh:
            nr, nc, z, g = (int(x) for x in fh.readline().split())
            base = np.array([[int(v) for v in fh.readline().split()]
                             for _ in range(nr)], dtype=np.int64)
        return cls(base=base, z=z, girth=g or None)


def expand_protograph(proto: QcProtograph) -> SparseParityCheck:
    """Circulant lifting: entry s becomes the ZxZ identity shifted by s."""
    z = proto.z
    rr, cc = np.nonzero(proto.base >= 0)
    ss = proto.base[rr, cc]
    copies = np.arange(z)
    lifted_rows = (rr[:, None] * z + (copies[None, :] + ss[:, None]) % z).ravel()
    lifted_cols = (cc[:, None] * z + copies[None, :]).ravel()
    m = SparseParityCheck(n_rows=proto.n_rows * z, n_cols=proto.n_cols * z,
                          edge_row=lifted_rows, edge_col=lifted_cols)
    return m


def contract_lifted(matrix: SparseParityCheck, z: int) -> QcProtograph:
    """Recover the base matrix of a circulant-lifted parity check."""
    nr, nc = matrix.n_rows // z, matrix.n_cols // z
    base = np.full((nr, nc), -1, dtype=np.int64)
    sel = matrix.edge_col % z == 0  # copy-0 columns determine every shift
    for r, c in zip(matrix.edge_row[sel], matrix.edge_col[sel]):
        base[r // z, c // z] = r % z
    check = expand_protograph(QcProtograph(base=base, z=z))
    same = (check.n_edges == matrix.n_edges and
            np.array_equal(check.edge_row, matrix.edge_row) and
            np.array_equal(check.edge_col, matrix.edge_col))
    if not same:
        raise ValueError("matrix is not a circulant lifting with this Z")
    return QcProtograph(base=base, z=z)


def _base_cycle_sums(base: np.ndarray, max_len: int = 6):
    """Alternating shift sums of all base cycles of length 4 (and 6).

    A base cycle lifts to cycles of the same length iff its alternating shift
    sum is 0 mod Z; otherwise it only produces longer lifted cycles.  Yields
    (length, alternating_sum) pairs.
    """
    nr = base.shape[0]
    rows = [np.nonzero(base[r] >= 0)[0] for r in range(nr)]
    common = {}
    for r1 in range(nr):
        in1 = set(rows[r1])
        for r2 in range(r1 + 1, nr):
            both = [c for c in rows[r2] if c in in1]
            if both:
                common[(r1, r2)] = both
    out = []
    for (r1, r2), cols in common.items():
        for i in range(len(cols)):
            for j in range(i + 1, len(cols)):
                c1, c2 = cols[i], cols[j]
                s = base[r1, c1] - base[r1, c2] + base[r2, c2] - base[r2, c1]
                out.append((4, int(s)))
    if max_len >= 6:
        pair_cols = lambda a, b: common.get((min(a, b), max(a, b)), ())
        for r1 in range(nr):
            for r2 in range(r1 + 1, nr):
                for r3 in range(r2 + 1, nr):
                    for c1 in pair_cols(r1, r2):
                        for c2 in pair_cols(r2, r3):
                            if c2 == c1:
                                continue
                            for c3 in pair_cols(r3, r1):
                                if c3 == c1 or c3 == c2:
                                    continue
                                s = (base[r1, c1] - base[r2, c1]
                                     + base[r2, c2] - base[r3, c2]
                                     + base[r3, c3] - base[r1, c3])
                                out.append((6, int(s)))
    return out


def qc_girth_from_base(proto: QcProtograph) -> int:
    """Lifted girth classified from base-cycle shift sums (4/6/at-least-8)."""
    sums = _base_cycle_sums(proto.base, max_len=6)
    if any(l == 4 and s % proto.z == 0 for l, s in sums):
        return 4
    if any(l == 6 and s % proto.z == 0 for l, s in sums):
        return 6
    return 8


def _assign_shifts(base_mask, row_lists, col_lists, z, girth_target, rng,
                   max_tries: int = 40):
    """Greedy randomized shift assignment avoiding short lifted cycles.

    Shifts are chosen edge by edge; a candidate is rejected if it closes a
    4-cycle (always) or a 6-cycle (girth target 8) with already-assigned
    edges.  Returns the shift matrix or None when the retry budget runs out.
    """
    nr, nc = base_mask.shape
    edges = [(r, c) for r in range(nr) for c in np.nonzero(base_mask[r])[0]]
    for _ in range(max_tries):
        shifts = np.full((nr, nc), -1, dtype=np.int64)
        order = rng.permutation(len(edges))
        ok = True
        for idx in order:
            r, c = edges[idx]
            forbidden = set()
            other_rows = [r2 for r2 in col_lists[c] if r2 != r and shifts[r2, c] >= 0]
            other_cols = [c2 for c2 in row_lists[r] if c2 != c and shifts[r, c2] >= 0]
            # 4-cycles through (r, c): r -c2- ... via r2 sharing both columns
            for c2 in other_cols:
                for r2 in other_rows:
                    if shifts[r2, c2] >= 0:
                        need = shifts[r, c2] - shifts[r2, c2] + shifts[r2, c]
                        forbidden.add(need % z)
            if girth_target >= 8:
                # 6-cycles: r -c2- r2 -c3- r3 -c- back to r
                for c2 in other_cols:
                    for r2 in (x for x in col_lists[c2]
                               if x != r and shifts[x, c2] >= 0):
                        for c3 in (y for y in row_lists[r2]
                                   if y != c2 and y != c and shifts[r2, y] >= 0):
                            for r3 in (x for x in col_lists[c3]
                                       if x != r2 and x != r and shifts[x, c3] >= 0):
                                if shifts[r3, c] >= 0:
                                    need = (shifts[r, c2] - shifts[r2, c2]
                                            + shifts[r2, c3] - shifts[r3, c3]
                                            + shifts[r3, c])
                                    forbidden.add(need % z)
            if len(forbidden) >= z:
                ok = False
                break
            while True:
                s = int(rng.integers(0, z))
                if s not in forbidden:
                    break
            shifts[r, c] = s
        if ok:
            return shifts
    return None


def build_qc(ens: InnerEnsemble, target_n: int, length_tolerance: float,
             girth_target: int, seed: int) -> QcProtograph:
    """Circulant-lifted realization of an ensemble near a target length.

    The base graph is a small configuration-model sample; Z is the rounding
    of target_n over the base width that meets the length tolerance.  Shifts
    come from the greedy search; when a girth-8 assignment is not found the
    girth-6 fallback is used and the achieved girth recorded honestly.
    """
    if target_n < 1000:
        raise ValueError("target length must be >= 1000")
    rng = stream(seed, "build_qc", target_n)
    best = None
    for nb in range(120, 481, 4):
        z = int(round(target_n / nb))
        if z < 8:
            break
        err = abs(nb * z - target_n) / target_n
        if err > length_tolerance:
            continue
        base_graph = sample_random(ens, nb, seed=int(rng.integers(2**31)),
                                   avoid_four=False)  # shifts break base 4-cycles
        lam_err = lambda_distance(base_graph.edge_lambda(), ens.lam)
        if lam_err > 0.02:
            continue
        cand = (lam_err, err, nb, z, base_graph)
        if best is None or cand[:2] < best[:2]:
            best = cand
        if lam_err <= 0.01:
            # good enough; the smallest base keeps Z large, which eases the
            # short-cycle avoidance and speeds the shift search
            best = cand
            break
    if best is None:
        raise ValueError("no base-matrix rounding meets the length tolerance")
    _, _, nb, z, base_graph = best
    mask = np.zeros((base_graph.n_rows, base_graph.n_cols), dtype=bool)
    mask[base_graph.edge_row, base_graph.edge_col] = True
    row_lists = [np.nonzero(mask[r])[0] for r in range(base_graph.n_rows)]
    col_lists = [np.nonzero(mask[:, c])[0] for c in range(base_graph.n_cols)]
    achieved = None
    for g in ([girth_target, 6] if girth_target >= 8 else [max(girth_target, 6)]):
        shifts = _assign_shifts(mask, row_lists, col_lists, z, g, rng)
        if shifts is not None:
            achieved = g
            break
    if shifts is None:
        raise ValueError("shift search failed even at girth 6")
    proto = QcProtograph(base=shifts, z=z)
    proto.girth = qc_girth_from_base(proto)
    if proto.girth < 6:
        raise ValueError("constructed lifting has girth below 6")
    return proto


def lambda_distance(a: np.ndarray, b: np.ndarray) -> float:
    """L1 distance between two edge distributions of possibly unequal length."""
    n = max(len(a), len(b))
    pa, pb = np.zeros(n), np.zeros(n)
    pa[:len(a)] = a
    pb[:len(b)] = b
    return float(np.abs(pa - pb).sum())


# ---------------------------------------------------------------------------
# information set


def info_set(matrix: SparseParityCheck) -> np.ndarray:
    """Columns complementary to an invertible square submatrix.

    Degree-one columns on distinct rows are taken as pivots for free (their
    submatrix is diagonal); the remainder is completed by packed GF(2)
    elimination.  Returns the n - rank information columns.
    """
    deg = matrix.col_degrees()
    pivot_row_of = {}
    pivot_cols = []
    ones = np.nonzero(deg == 1)[0]
    if ones.size:
        one_rows = np.empty(ones.size, dtype=np.int64)
        pos = np.searchsorted(matrix.edge_col[matrix.col_order()], ones)
        order = matrix.col_order()
        for i, c in enumerate(ones):
            one_rows[i] = matrix.edge_row[order[pos[i]]]
        for c, r in zip(ones, one_rows):
            if r not in pivot_row_of:
                pivot_row_of[r] = c
                pivot_cols.append(c)
    remaining_rows = [r for r in range(matrix.n_rows) if r not in pivot_row_of]
    if remaining_rows:
        pivot_cols += _eliminate(matrix, remaining_rows, set(pivot_cols))
    pivot_cols = np.array(sorted(pivot_cols), dtype=np.int64)
    mask = np.ones(matrix.n_cols, dtype=bool)
    mask[pivot_cols] = False
    return np.nonzero(mask)[0]


def _eliminate(matrix: SparseParityCheck, rows, used_cols) -> list:
    """GF(2) row reduction over packed uint64 words; returns new pivot columns."""
    words = (matrix.n_cols + 63) // 64
    sub = np.zeros((len(rows), words), dtype=np.uint64)
    row_pos = {r: i for i, r in enumerate(rows)}
    for r, c in zip(matrix.edge_row, matrix.edge_col):
        i = row_pos.get(int(r))
        if i is not None:
            sub[i, c >> 6] ^= np.uint64(1) << np.uint64(c & 63)
    pivots = []
    free = np.ones(len(rows), dtype=bool)
    for c in range(matrix.n_cols):
        if c in used_cols:
            continue
        w, b = c >> 6, np.uint64(c & 63)
        hits = np.nonzero(free & ((sub[:, w] >> b) & np.uint64(1)).astype(bool))[0]
        if hits.size == 0:
            continue
        p = hits[0]
        others = np.nonzero(((sub[:, w] >> b) & np.uint64(1)).astype(bool))[0]
        others = others[others != p]
        if others.size:
            sub[others] ^= sub[p]
        free[p] = False
        pivots.append(c)
        if not free.any():
            break
    return pivots
