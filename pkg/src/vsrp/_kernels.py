"""Compiled inner loops for design generation and the ratio-statistic decoder.

Every column of the design draws from its own SplitMix64 stream keyed by
(seed, column), so a column can be regenerated alone and matches the full
generation bit for bit.
"""

import math

import numpy as np
from numba import njit

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_COLUMN_SALT = np.uint64(0xD1B54A32D192ED03)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_INV53 = 1.0 / 9007199254740992.0
# above this survival rate a per-index coin flip beats gap sampling
_DENSE_GAMMA = 0.25

ZERO = 0
RECOVERED = 1
UNDETERMINED = 2


@njit(cache=True)
def mix64(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@njit(cache=True)
def column_state(seed, j):
    return mix64(mix64(seed) ^ (np.uint64(j) * _GOLDEN + _COLUMN_SALT))


@njit(cache=True)
def _next_unit(state):
    # returns (new_state, u) with u in (0, 1]
    state = state + _GOLDEN
    u = (np.float64(np.int64(mix64(state) >> _S11)) + 1.0) * _INV53
    return state, u


@njit(cache=True)
def _fill_column(N, gamma, seed, j, idx_buf, val_buf):
    """Draw one column into the buffers; returns the survivor count."""
    state = column_state(seed, j)
    n = 0
    if gamma >= 1.0:
        for i in range(N):
            idx_buf[i] = i
        n = N
    elif gamma > _DENSE_GAMMA:
        for i in range(N):
            state, u = _next_unit(state)
            idx_buf[n] = i
            n += u <= gamma
    else:
        # geometric gaps between survivors
        log_q = math.log1p(-gamma)
        i = -1
        while True:
            state, u = _next_unit(state)
            skip = math.floor(math.log(u) / log_q)
            if skip >= N:
                break
            i += int(skip) + 1
            if i >= N:
                break
            idx_buf[n] = i
            n += 1
    # Marsaglia polar pairs; an exact zero is redrawn so ratios stay defined
    k = 0
    while k < n:
        state, u1 = _next_unit(state)
        state, u2 = _next_unit(state)
        a = 2.0 * u1 - 1.0
        b = 2.0 * u2 - 1.0
        r2 = a * a + b * b
        if r2 >= 1.0 or r2 == 0.0:
            continue
        f = math.sqrt(-2.0 * math.log(r2) / r2)
        if a != 0.0:
            val_buf[k] = a * f
            k += 1
        if k < n and b != 0.0:
            val_buf[k] = b * f
            k += 1
    return n


@njit(cache=True)
def generate_columns(N, M, gamma, seed):
    idx_buf = np.empty(N, np.int32)
    val_buf = np.empty(N, np.float64)
    cap = max(16, int(M * N * gamma * 1.1) + 64)
    rows = np.empty(cap, np.int32)
    vals = np.empty(cap, np.float64)
    col_ptr = np.zeros(M + 1, np.int64)
    nnz = 0
    for j in range(M):
        n = _fill_column(N, gamma, seed, j, idx_buf, val_buf)
        if nnz + n > cap:
            cap = max(2 * cap, nnz + n)
            new_rows = np.empty(cap, np.int32)
            new_vals = np.empty(cap, np.float64)
            new_rows[:nnz] = rows[:nnz]
            new_vals[:nnz] = vals[:nnz]
            rows = new_rows
            vals = new_vals
        rows[nnz:nnz + n] = idx_buf[:n]
        vals[nnz:nnz + n] = val_buf[:n]
        nnz += n
        col_ptr[j + 1] = nnz
    return col_ptr, rows[:nnz].copy(), vals[:nnz].copy()


@njit(cache=True)
def generate_one_column(N, gamma, seed, j):
    idx_buf = np.empty(N, np.int32)
    val_buf = np.empty(N, np.float64)
    n = _fill_column(N, gamma, seed, j, idx_buf, val_buf)
    return idx_buf[:n].copy(), val_buf[:n].copy()


@njit(cache=True)
def build_row_index(N, col_ptr, rows):
    """Counting-sort transpose: row pointers, CSC->CSR slot map, CSR columns."""
    nnz = rows.shape[0]
    M = col_ptr.shape[0] - 1
    row_ptr = np.zeros(N + 1, np.int64)
    for k in range(nnz):
        row_ptr[rows[k] + 1] += 1
    for i in range(N):
        row_ptr[i + 1] += row_ptr[i]
    fill = row_ptr[:-1].copy()
    pos = np.empty(nnz, np.int64)
    csr_cols = np.empty(nnz, np.int32)
    for j in range(M):
        for k in range(col_ptr[j], col_ptr[j + 1]):
            p = fill[rows[k]]
            pos[k] = p
            csr_cols[p] = j
            fill[rows[k]] += 1
    return row_ptr, pos, csr_cols


@njit(cache=True)
def measure_columns(x, col_ptr, rows, vals):
    M = col_ptr.shape[0] - 1
    y = np.empty(M, np.float64)
    for j in range(M):
        acc = 0.0
        for k in range(col_ptr[j], col_ptr[j + 1]):
            acc += x[rows[k]] * vals[k]
        y[j] = acc
    return y


@njit(cache=True)
def tie_value(sorted_z, tie_tol, min_size):
    """Center of the unique largest tolerance cluster, or NaN.

    Clusters are formed greedily over sorted values: a cluster opened at a
    absorbs every later value within tie_tol * max(1, |a|) of a.
    """
    n = sorted_z.shape[0]
    best_size = 0
    best_center = np.nan
    contested = False
    start = 0
    while start < n:
        a = sorted_z[start]
        if not math.isfinite(a):
            start += 1
            continue
        width = tie_tol * max(1.0, abs(a))
        stop = start + 1
        total = a
        while stop < n and sorted_z[stop] - a <= width:
            total += sorted_z[stop]
            stop += 1
        size = stop - start
        if size >= min_size:
            if size > best_size:
                best_size = size
                best_center = total / size
                contested = False
            elif size == best_size:
                contested = True
        start = stop
    if best_size == 0 or contested or not math.isfinite(best_center):
        return np.nan
    return best_center


@njit(cache=True)
def row_minima(y, col_ptr, rows, vals, N):
    """Smallest |y_j / s_ij| and entry count per row, in one column scan."""
    M = col_ptr.shape[0] - 1
    best = np.full(N, np.inf)
    counts = np.zeros(N, np.int64)
    for j in range(M):
        yj = y[j]
        for k in range(col_ptr[j], col_ptr[j + 1]):
            r = rows[k]
            a = abs(yj / vals[k])
            if a < best[r]:
                best[r] = a
            counts[r] += 1
    return best, counts


@njit(cache=True)
def decode_round(y, col_ptr, rows, vals, status, values, epsilon, tie_tol, min_size):
    """One absolute-minimum + tie round over the undetermined rows.

    Updates status/values in place and returns
    (residual y, zeros declared, ties found, entries touched).
    """
    N = status.shape[0]
    M = col_ptr.shape[0] - 1
    nnz = rows.shape[0]
    z = np.empty(nnz)
    best = np.full(N, np.inf)
    counts = np.zeros(N, np.int64)
    touched = 0
    for j in range(M):
        yj = y[j]
        for k in range(col_ptr[j], col_ptr[j + 1]):
            r = rows[k]
            zz = yj / vals[k]
            z[k] = zz
            a = abs(zz)
            if a < best[r]:
                best[r] = a
            counts[r] += 1
            touched += 1

    n_zero = 0
    cand_ptr = np.zeros(N + 1, np.int64)
    for i in range(N):
        c = 0
        if status[i] == UNDETERMINED and counts[i] > 0:
            if best[i] <= epsilon:
                status[i] = ZERO
                values[i] = 0.0
                n_zero += 1
            elif counts[i] >= min_size:
                c = counts[i]
        cand_ptr[i + 1] = cand_ptr[i] + c
    n_cand_entries = cand_ptr[N]
    if n_cand_entries == 0:
        return y.copy(), n_zero, 0, touched

    # gather candidate ratios (and their entry ids) grouped by row
    cz = np.empty(n_cand_entries)
    ck = np.empty(n_cand_entries, np.int64)
    cj = np.empty(n_cand_entries, np.int64)
    fill = cand_ptr[:N].copy()
    for j in range(M):
        for k in range(col_ptr[j], col_ptr[j + 1]):
            r = rows[k]
            if cand_ptr[r + 1] > cand_ptr[r]:
                p = fill[r]
                cz[p] = z[k]
                ck[p] = k
                cj[p] = j
                fill[r] += 1

    n_tie = 0
    contrib = np.zeros(M)
    scale = np.zeros(M)
    hit = np.zeros(M, np.bool_)
    for i in range(N):
        lo = cand_ptr[i]
        hi = cand_ptr[i + 1]
        if hi == lo:
            continue
        v = tie_value(np.sort(cz[lo:hi]), tie_tol, min_size)
        if math.isnan(v):
            continue
        status[i] = RECOVERED
        values[i] = v
        n_tie += 1
        for p in range(lo, hi):
            t = v * vals[ck[p]]
            contrib[cj[p]] += t
            scale[cj[p]] += abs(t)
            hit[cj[p]] = True

    out = y.copy()
    for j in range(M):
        if hit[j]:
            r = y[j] - contrib[j]
            # rounding residue of an exact cancellation becomes exact zero
            if abs(r) <= tie_tol * (abs(y[j]) + scale[j]):
                r = 0.0
            out[j] = r
    return out, n_zero, n_tie, touched


@njit(cache=True)
def subtract_rows(y, rows_to_remove, weights, row_ptr, csr_cols, csr_vals, snap_tol):
    """y_j -= sum_i w_i s_ij over the given rows, snapping rounding residue to 0.

    With snap_tol > 0 an updated entry whose magnitude is at most
    snap_tol * (|y_j| + sum |w_i s_ij|) becomes exactly 0.
    """
    M = y.shape[0]
    contrib = np.zeros(M, np.float64)
    scale = np.zeros(M, np.float64)
    touched = np.zeros(M, np.bool_)
    for r in range(rows_to_remove.shape[0]):
        i = rows_to_remove[r]
        w = weights[r]
        for p in range(row_ptr[i], row_ptr[i + 1]):
            j = csr_cols[p]
            t = w * csr_vals[p]
            contrib[j] += t
            scale[j] += abs(t)
            touched[j] = True
    out = y.copy()
    for j in range(M):
        if touched[j]:
            v = y[j] - contrib[j]
            if snap_tol > 0.0 and abs(v) <= snap_tol * (abs(y[j]) + scale[j]):
                v = 0.0
            out[j] = v
    return out
