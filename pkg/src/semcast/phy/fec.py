"""Forward error correction: identity, rate-1/3 repetition, rate-1/2 LDPC.

The LDPC code is a regular Gallager construction (column weight 3, row weight
6) at n=1024, k=512, built deterministically from a seed by progressive edge
growth: each new edge attaches to the check farthest from the variable in the
current graph (ties to the least-loaded check, then the seed's RNG), which
keeps 4-cycles out and is what makes the iterative decoder worth its name.
Encoding is systematic through a generator derived by GF(2) Gaussian
elimination; seeds whose parity matrix is rank-deficient are reseeded, at
most 16 attempts. Decoding is batched min-sum over hard channel bits mapped
to +/-1 LLR proxies, 50 iterations max, early stop once a block's syndrome is
zero.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ..errors import LdpcConstructionError
from ..seeding import derive_seed

LDPC_N = 1024
LDPC_K = 512
_COL_W = 3
_ROW_W = 6
_MAX_ATTEMPTS = 16
_MAX_ITERS = 50
DEFAULT_CODE_SEED = 1


class FecScheme:
    """Interface: encode info bits to coded bits; decode back given info length."""

    name: str
    rate: float

    def encode(self, bits: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def decode(self, bits: np.ndarray, info_len: int) -> np.ndarray:
        raise NotImplementedError


class IdentityFec(FecScheme):
    name = "identity"
    rate = 1.0

    def encode(self, bits):
        return np.asarray(bits, dtype=np.uint8).reshape(-1)

    def decode(self, bits, info_len):
        return np.asarray(bits, dtype=np.uint8).reshape(-1)[:info_len]


class RepetitionFec(FecScheme):
    """Each bit sent three times; majority vote at the receiver."""

    name = "repetition"
    rate = 1.0 / 3.0

    def encode(self, bits):
        b = np.asarray(bits, dtype=np.uint8).reshape(-1)
        return np.repeat(b, 3)

    def decode(self, bits, info_len):
        b = np.asarray(bits, dtype=np.uint8).reshape(-1)
        if len(b) % 3:
            raise ValueError("repetition-coded length must be a multiple of 3")
        votes = b.reshape(-1, 3).sum(axis=1)
        return (votes >= 2).astype(np.uint8)[:info_len]


def _fill_sockets(rng: np.random.Generator) -> np.ndarray:
    """Progressive-edge-growth fill: (n, 3) check indices per variable.

    Capacity (row weight 6) plus the edge count make the result exactly
    regular; the farthest-check rule maximizes local girth.
    """
    m = LDPC_N - LDPC_K
    check_deg = np.zeros(m, dtype=np.int64)
    var_nb: list[list[int]] = [[] for _ in range(LDPC_N)]
    check_nb: list[list[int]] = [[] for _ in range(m)]
    for j in range(LDPC_N):
        for t in range(_COL_W):
            cap = check_deg < _ROW_W
            if t == 0:
                cand = np.flatnonzero(cap)
            else:
                dist = _check_distances(j, var_nb, check_nb, m)
                unreached = (dist < 0) & cap
                if unreached.any():
                    cand = np.flatnonzero(unreached)
                else:
                    reachable = cap & (dist > 0)
                    dmax = dist[reachable].max()
                    cand = np.flatnonzero(reachable & (dist == dmax))
            degs = check_deg[cand]
            best = cand[degs == degs.min()]
            pick = int(best[rng.integers(len(best))])
            check_deg[pick] += 1
            var_nb[j].append(pick)
            check_nb[pick].append(j)
    return np.sort(np.array(var_nb, dtype=np.int64), axis=1)


def _check_distances(start_var: int, var_nb, check_nb, m: int) -> np.ndarray:
    """BFS depth of every check from a variable; -1 for unreachable."""
    dist = np.full(m, -1, dtype=np.int64)
    var_seen = np.zeros(LDPC_N, dtype=bool)
    var_seen[start_var] = True
    frontier = [start_var]
    depth = 0
    while frontier:
        depth += 1
        checks = []
        for v in frontier:
            for c in var_nb[v]:
                if dist[c] < 0:
                    dist[c] = depth
                    checks.append(c)
        frontier = []
        for c in checks:
            for v in check_nb[c]:
                if not var_seen[v]:
                    var_seen[v] = True
                    frontier.append(v)
    return dist


def _rref_gf2(mat: np.ndarray):
    """Reduced row echelon form over GF(2); returns (rref, pivot_cols, rank)."""
    work = mat.copy()
    m, n = work.shape
    pivots = []
    r = 0
    for c in range(n):
        if r == m:
            break
        hits = np.flatnonzero(work[r:, c])
        if len(hits) == 0:
            continue
        pr = r + hits[0]
        if pr != r:
            work[[r, pr]] = work[[pr, r]]
        others = np.flatnonzero(work[:, c])
        others = others[others != r]
        work[others] ^= work[r]
        pivots.append(c)
        r += 1
    return work, np.array(pivots, dtype=np.int64), r


@dataclass(frozen=True)
class _LdpcCode:
    col_rows: np.ndarray    # (n, 3) check indices per variable
    row_cols: np.ndarray    # (m, 6) variable indices per check
    col_slots: np.ndarray   # (n, 3) slot of each variable edge inside its row
    info_cols: np.ndarray   # (k,) systematic positions
    pivot_cols: np.ndarray  # (m,) parity positions
    parity_gen: np.ndarray  # (m, k): parity = parity_gen @ info mod 2


@lru_cache(maxsize=8)
def _build_code(seed: int) -> _LdpcCode:
    m = LDPC_N - LDPC_K
    for attempt in range(_MAX_ATTEMPTS):
        rng = np.random.default_rng(derive_seed(seed, attempt))
        col_rows = _fill_sockets(rng)
        h = np.zeros((m, LDPC_N), dtype=np.uint8)
        for j in range(LDPC_N):
            h[col_rows[j], j] = 1
        rref, pivot_cols, rank = _rref_gf2(h)
        if rank < m:
            continue
        info_cols = np.setdiff1d(np.arange(LDPC_N), pivot_cols)
        assert len(info_cols) == LDPC_K
        parity_gen = rref[:, info_cols].astype(np.uint8)

        row_fill = np.zeros(m, dtype=np.int64)
        row_cols = np.empty((m, _ROW_W), dtype=np.int64)
        col_slots = np.empty((LDPC_N, _COL_W), dtype=np.int64)
        for j in range(LDPC_N):
            for t in range(_COL_W):
                r = col_rows[j, t]
                row_cols[r, row_fill[r]] = j
                col_slots[j, t] = row_fill[r]
                row_fill[r] += 1
        assert (row_fill == _ROW_W).all()
        return _LdpcCode(col_rows, row_cols, col_slots, info_cols, pivot_cols, parity_gen)
    raise LdpcConstructionError(
        f"no full-rank (3,6) parity matrix after {_MAX_ATTEMPTS} attempts, seed {seed}")


@dataclass(frozen=True)
class LdpcFec(FecScheme):
    code_seed: int = DEFAULT_CODE_SEED

    name = "ldpc"
    rate = LDPC_K / LDPC_N
    n = LDPC_N
    k = LDPC_K

    @property
    def _code(self) -> _LdpcCode:
        return _build_code(self.code_seed)

    def parity_matrix(self) -> np.ndarray:
        code = self._code
        h = np.zeros((LDPC_N - LDPC_K, LDPC_N), dtype=np.uint8)
        for j in range(LDPC_N):
            h[code.col_rows[j], j] = 1
        return h

    def encode(self, bits):
        b = np.asarray(bits, dtype=np.uint8).reshape(-1)
        if len(b) == 0:
            return b
        code = self._code
        pad = (-len(b)) % LDPC_K
        if pad:
            b = np.concatenate([b, np.zeros(pad, dtype=np.uint8)])
        u = b.reshape(-1, LDPC_K)
        c = np.empty((len(u), LDPC_N), dtype=np.uint8)
        c[:, code.info_cols] = u
        c[:, code.pivot_cols] = (u @ code.parity_gen.T.astype(np.int64)) % 2
        return c.reshape(-1)

    def decode(self, bits, info_len):
        b = np.asarray(bits, dtype=np.uint8).reshape(-1)
        if len(b) == 0:
            return b[:info_len]
        if len(b) % LDPC_N:
            raise ValueError(f"coded length must be a multiple of {LDPC_N}")
        code = self._code
        hard = self._min_sum(b.reshape(-1, LDPC_N), code)
        return hard[:, code.info_cols].reshape(-1)[:info_len]

    @staticmethod
    def _min_sum(channel_bits: np.ndarray, code: _LdpcCode) -> np.ndarray:
        nblocks = len(channel_bits)
        llr = (1 - 2 * channel_bits.astype(np.int32))  # bit 0 -> +1
        c2v = np.zeros((nblocks, LDPC_N - LDPC_K, _ROW_W), dtype=np.int32)
        hard = channel_bits.astype(np.uint8).copy()
        active = np.ones(nblocks, dtype=bool)
        slot_idx = np.arange(_ROW_W)

        for it in range(_MAX_ITERS + 1):
            syndrome = hard[:, code.row_cols].sum(axis=2) % 2
            active &= syndrome.any(axis=1)
            if not active.any() or it == _MAX_ITERS:
                break

            totals = c2v[:, code.col_rows, code.col_slots].sum(axis=2) + llr
            v2c = totals[:, code.row_cols] - c2v
            sign = np.where(v2c < 0, -1, 1).astype(np.int32)
            mag = np.abs(v2c)
            two_smallest = np.partition(mag, 1, axis=2)
            min1 = two_smallest[..., 0:1]
            min2 = two_smallest[..., 1:2]
            at_min = slot_idx == mag.argmin(axis=2)[..., None]
            out_mag = np.where(at_min, min2, min1)
            out = sign.prod(axis=2)[..., None] * sign * out_mag
            c2v = np.where(active[:, None, None], out, c2v)

            posterior = c2v[:, code.col_rows, code.col_slots].sum(axis=2) + llr
            decided = np.where(posterior < 0, 1,
                               np.where(posterior > 0, 0, channel_bits)).astype(np.uint8)
            hard = np.where(active[:, None], decided, hard)
        return hard


def make_fec(name: str, code_seed: int = DEFAULT_CODE_SEED) -> FecScheme:
    key = name.lower()
    if key in ("identity", "none"):
        return IdentityFec()
    if key == "repetition":
        return RepetitionFec()
    if key == "ldpc":
        return LdpcFec(code_seed=code_seed)
    raise ValueError(f"unknown fec {name!r}; choose identity, repetition, or ldpc")
