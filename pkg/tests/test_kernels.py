import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kbcompress import _kernels
from kbcompress._kernels import FactStore, decode_keys, encode_rows, join_numba, join_numpy


def _naive_join(tables, slots, codes, nvars):
    out = []

    def rec(j, rows, bind):
        if j == len(slots):
            out.append((tuple(rows), tuple(bind)))
            return
        t = tables[slots[j]]
        for r in range(t.shape[0]):
            b = list(bind)
            ok = True
            for i, c in enumerate(codes[j][: t.shape[1]]):
                x = int(t[r, i])
                if c < 0:
                    ok = x == -c - 1
                elif b[c] < 0:
                    b[c] = x
                else:
                    ok = b[c] == x
                if not ok:
                    break
            if ok:
                rec(j + 1, rows + [r], b)

    rec(0, [], [-1] * nvars)
    return out


def _random_case(rng):
    nc = rng.randint(1, 5)
    tables = []
    for _ in range(rng.randint(1, 3)):
        k = rng.randint(1, 3)
        n = rng.randint(0, 12)
        tables.append(np.array([[rng.randrange(nc) for _ in range(k)] for _ in range(n)], dtype=np.int64).reshape(n, k))
    m = rng.randint(1, 3)
    slots = [rng.randrange(len(tables)) for _ in range(m)]
    width = max(t.shape[1] for t in tables)
    nvars = rng.randint(1, 4)
    codes = np.zeros((m, width), dtype=np.int64)
    for j, s in enumerate(slots):
        for i in range(tables[s].shape[1]):
            codes[j, i] = -rng.randrange(nc) - 1 if rng.random() < 0.15 else rng.randrange(nvars)
    return FactStore(tables, nc), tables, slots, codes, nvars


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10**9))
def test_numba_and_numpy_joins_agree_with_naive(seed):
    store, tables, slots, codes, nvars = _random_case(random.Random(seed))
    expect = _naive_join(tables, slots, codes.tolist(), nvars)
    for fn in (join_numba, join_numpy):
        rows, bind = fn(store, slots, codes, nvars)
        got = list(zip(map(tuple, rows.tolist()), map(tuple, bind.tolist())))
        assert got == expect, fn.__name__


def test_empty_body_yields_one_empty_grounding():
    store = FactStore([np.zeros((0, 1), dtype=np.int64)], 3)
    for fn in (join_numba, join_numpy):
        rows, bind = fn(store, [], np.zeros((0, 1), dtype=np.int64), 2)
        assert rows.shape == (1, 0)
        assert bind.tolist() == [[-1, -1]]


def test_numba_kernel_grows_its_buffer():
    # 30 x 30 cross product overflows the initial 256-row buffer.
    t = np.arange(30, dtype=np.int64).reshape(30, 1)
    store = FactStore([t], 30)
    rows, _ = join_numba(store, [0, 0], np.array([[0], [1]]), 2)
    assert len(rows) == 900


def test_radix_keys_round_trip():
    rows = np.array([[0, 4, 2], [3, 3, 3], [4, 0, 1]])
    assert decode_keys(encode_rows(rows, 5), 5, 3).tolist() == rows.tolist()
    with pytest.raises(OverflowError):
        encode_rows(np.zeros((1, 40), dtype=np.int64), 10**6)


def test_dispatch_flag_matches_module_state():
    assert _kernels.USE_NUMBA in (True, False)
    if not _kernels.HAVE_NUMBA:
        assert not _kernels.USE_NUMBA


def test_env_flag_selects_numpy_path_with_identical_results():
    import os
    import subprocess
    import sys

    script = (
        "import sys; sys.path.insert(0, 'tests')\n"
        "from conftest import FAMILY_TSV\n"
        "from kbcompress import _kernels\n"
        "from kbcompress.kb import parse_kb\n"
        "from kbcompress.extract import extract\n"
        "from kbcompress.rules import fingerprint\n"
        "r = extract(parse_kb(FAMILY_TSV))\n"
        "print(_kernels.USE_NUMBA, sorted(fingerprint(x) for x in r.H), r.total)\n"
    )
    outs = {}
    for flag in ("0", "1"):
        env = dict(os.environ, KBCOMPRESS_PURE_NUMPY=flag)
        proc = subprocess.run([sys.executable, "-c", script], env=env, capture_output=True, text=True, check=True)
        outs[flag] = proc.stdout.strip()
    assert outs["1"].startswith("False ")
    assert outs["0"].split(" ", 1)[1] == outs["1"].split(" ", 1)[1]
