"""Join kernels for rule grounding.

The conjunctive body join is the hot loop of rule search and of forward
chaining. It runs as a numba ``@njit`` backtracking join by default; setting
``KBCOMPRESS_PURE_NUMPY=1`` (or running without numba) selects a vectorized
numpy sort-merge join instead. Both return identical arrays in identical
order: groundings sorted lexicographically by the per-atom fact indices,
which is what "atoms left to right, facts in load order" enumerates.

Term codes: ``>= 0`` is a variable id, ``< 0`` encodes constant ``-(code+1)``.
"""

from __future__ import annotations

import os

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        return wrap


def _flag(name: str) -> bool:
    return os.environ.get(name, "").strip().lower() not in ("", "0", "false", "no")


USE_NUMBA = HAVE_NUMBA and not _flag("KBCOMPRESS_PURE_NUMPY")

_INT64_LIMIT = 2**62


def radix_ok(base: int, width: int) -> bool:
    return max(base, 1) ** width < _INT64_LIMIT


def encode_rows(rows: np.ndarray, base: int) -> np.ndarray:
    """Mixed-radix int64 key per row; every value must be ``< base``."""
    rows = np.asarray(rows, dtype=np.int64)
    n, width = rows.shape
    if not radix_ok(base, width):
        raise OverflowError(f"{width} columns over {base} constants do not fit an int64 key")
    key = np.zeros(n, dtype=np.int64)
    mult = 1
    for i in range(width):
        key += rows[:, i] * mult
        mult *= max(base, 1)
    return key


def decode_keys(keys: np.ndarray, base: int, width: int) -> np.ndarray:
    keys = np.asarray(keys, dtype=np.int64)
    out = np.empty((len(keys), width), dtype=np.int64)
    b = max(base, 1)
    rest = keys.copy()
    for i in range(width):
        out[:, i] = rest % b
        rest //= b
    return out


class FactStore:
    """Packed fact tables ("slots") with a sorted index per argument position."""

    def __init__(self, tables: list[np.ndarray], n_constants: int):
        self.tables = [np.ascontiguousarray(t, dtype=np.int64) for t in tables]
        self.base = max(int(n_constants), 1)
        ns = np.array([t.shape[0] for t in self.tables], dtype=np.int64)
        ks = np.array([t.shape[1] for t in self.tables], dtype=np.int64)
        self.nrows = ns
        self.arity = ks
        sizes = ns * ks
        self.off = np.concatenate(([0], np.cumsum(sizes)[:-1])).astype(np.int64) if len(ns) else ns
        self.data = (
            np.concatenate([t.ravel() for t in self.tables]) if self.tables else np.zeros(0, np.int64)
        )
        self.pos_base = self.off.copy()
        vals, idxs = [], []
        for t in self.tables:
            for i in range(t.shape[1]):
                order = np.argsort(t[:, i], kind="stable")
                idxs.append(order)
                vals.append(t[order, i])
        self.srt_val = np.concatenate(vals).astype(np.int64) if vals else np.zeros(0, np.int64)
        self.srt_idx = np.concatenate(idxs).astype(np.int64) if idxs else np.zeros(0, np.int64)

    def encode(self, rows: np.ndarray) -> np.ndarray:
        return encode_rows(rows, self.base)


# numba path ---------------------------------------------------------------------


@njit(cache=True)
def _bound(a, lo, hi, val, right):
    # first index in a[lo:hi] with a[i] > val (right) or a[i] >= val (left)
    while lo < hi:
        mid = (lo + hi) >> 1
        if a[mid] < val or (right and a[mid] == val):
            lo = mid + 1
        else:
            hi = mid
    return lo


@njit(cache=True)
def _join_kernel(data, off, nrows, arity, srt_val, srt_idx, pos_base, slots, codes, nvars, cap):
    m = slots.shape[0]
    rows = np.empty((cap, m), np.int64)
    binds = np.empty((cap, nvars), np.int64)
    bind = np.full(nvars, -1, np.int64)
    owner = np.full(nvars, -1, np.int64)
    if m == 0:
        for v in range(nvars):
            binds[0, v] = -1
        return rows, binds, 1
    hi = np.zeros(m, np.int64)
    cur = np.zeros(m, np.int64)
    use_idx = np.zeros(m, np.bool_)
    chosen = np.zeros(m, np.int64)
    count = 0
    level = 0
    entering = True
    while level >= 0:
        s = slots[level]
        k = arity[s]
        if entering:
            use = False
            val = 0
            pos = 0
            for i in range(k):
                c = codes[level, i]
                if c < 0:
                    use = True
                    val = -c - 1
                    pos = i
                    break
                if bind[c] >= 0:
                    use = True
                    val = bind[c]
                    pos = i
                    break
            if use:
                base = pos_base[s] + pos * nrows[s]
                cur[level] = _bound(srt_val, base, base + nrows[s], val, False)
                hi[level] = _bound(srt_val, cur[level], base + nrows[s], val, True)
                use_idx[level] = True
            else:
                cur[level] = 0
                hi[level] = nrows[s]
                use_idx[level] = False
            entering = False
        else:
            for v in range(nvars):
                if owner[v] == level:
                    owner[v] = -1
                    bind[v] = -1
            cur[level] += 1
        found = False
        while cur[level] < hi[level]:
            r = srt_idx[cur[level]] if use_idx[level] else cur[level]
            ok = True
            start = off[s] + r * k
            for i in range(k):
                x = data[start + i]
                c = codes[level, i]
                if c < 0:
                    if x != -c - 1:
                        ok = False
                        break
                elif bind[c] >= 0:
                    if bind[c] != x:
                        ok = False
                        break
                else:
                    bind[c] = x
                    owner[c] = level
            if ok:
                found = True
                chosen[level] = r
                break
            for v in range(nvars):
                if owner[v] == level:
                    owner[v] = -1
                    bind[v] = -1
            cur[level] += 1
        if not found:
            level -= 1
            continue
        if level == m - 1:
            if count == rows.shape[0]:
                grown = np.empty((2 * count, m), np.int64)
                grown[:count] = rows
                rows = grown
                grown = np.empty((2 * count, nvars), np.int64)
                grown[:count] = binds
                binds = grown
            for j in range(m):
                rows[count, j] = chosen[j]
            for v in range(nvars):
                binds[count, v] = bind[v]
            count += 1
        else:
            level += 1
            entering = True
    return rows, binds, count


def join_numba(store: FactStore, slots, codes, nvars: int):
    if len(slots) == 0:
        return np.zeros((1, 0), dtype=np.int64), np.full((1, nvars), -1, dtype=np.int64)
    slots = np.ascontiguousarray(slots, dtype=np.int64)
    codes = np.ascontiguousarray(codes, dtype=np.int64).reshape(len(slots), -1)
    rows, binds, n = _join_kernel(
        store.data, store.off, store.nrows, store.arity, store.srt_val, store.srt_idx,
        store.pos_base, slots, codes, np.int64(nvars), np.int64(256),
    )
    return rows[:n].copy(), binds[:n].copy()


# numpy path ----------------------------------------------------------------------


def _join_keys(left: np.ndarray, right: np.ndarray, base: int):
    if radix_ok(base, left.shape[1]):
        return encode_rows(left, base), encode_rows(right, base)
    both = np.concatenate([left, right])
    _, inv = np.unique(both, axis=0, return_inverse=True)
    inv = inv.reshape(-1)
    return inv[: len(left)], inv[len(left) :]


def join_numpy(store: FactStore, slots, codes, nvars: int):
    if len(slots) == 0:
        return np.zeros((1, 0), dtype=np.int64), np.full((1, nvars), -1, dtype=np.int64)
    slots = np.asarray(slots, dtype=np.int64)
    codes = np.asarray(codes, dtype=np.int64).reshape(len(slots), -1)
    rows = np.zeros((1, 0), dtype=np.int64)
    bind = np.full((1, nvars), -1, dtype=np.int64)
    bound: set[int] = set()
    for j, s in enumerate(slots):
        table = store.tables[s]
        k = table.shape[1]
        mask = np.ones(table.shape[0], dtype=bool)
        first_col: dict[int, int] = {}
        for i in range(k):
            c = int(codes[j, i])
            if c < 0:
                mask &= table[:, i] == -c - 1
            elif c in first_col:
                mask &= table[:, i] == table[:, first_col[c]]
            else:
                first_col[c] = i
        cand = np.flatnonzero(mask)
        shared = [v for v in first_col if v in bound]
        if not shared:
            counts = np.full(len(rows), len(cand), dtype=np.int64)
            fact_idx = np.tile(cand, len(rows))
        else:
            bkeys, fkeys = _join_keys(
                bind[:, shared], table[cand][:, [first_col[v] for v in shared]], store.base
            )
            order = np.argsort(fkeys, kind="stable")
            sk = fkeys[order]
            lo = np.searchsorted(sk, bkeys, "left")
            counts = np.searchsorted(sk, bkeys, "right") - lo
            total = int(counts.sum())
            shift = np.repeat(lo - (np.cumsum(counts) - counts), counts)
            fact_idx = cand[order[np.arange(total) + shift]]
        rep = np.repeat(np.arange(len(rows)), counts)
        rows = np.column_stack([rows[rep], fact_idx]).astype(np.int64)
        bind = bind[rep]
        for v, i in first_col.items():
            if v not in bound:
                bind[:, v] = table[fact_idx, i]
                bound.add(v)
    return rows, bind


def warm_up() -> None:
    """Compile (or load from cache) the numba kernel ahead of timed work."""
    if USE_NUMBA:
        store = FactStore([np.zeros((1, 1), dtype=np.int64)], 1)
        join_numba(store, [0], np.zeros((1, 1), dtype=np.int64), 1)


def join(store: FactStore, slots, codes, nvars: int):
    """All body groundings: ``(rows, bindings)``.

    ``rows[g, j]`` is the local fact index matched by body atom ``j``;
    ``bindings[g, v]`` is the constant bound to variable ``v`` (``-1`` if the
    body leaves it free).
    """
    if USE_NUMBA:
        return join_numba(store, slots, codes, nvars)
    return join_numpy(store, slots, codes, nvars)
