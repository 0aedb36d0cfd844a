# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled advisor-free planning kernel.

Mirrors gridplan.search.SearchEngine expansion-for-expansion: same
(priority, heuristic, push-sequence) frontier key, same compass successor
order, same corner-cut rule, same re-opening on strictly cheaper g. The
Python engine remains the reference; parity is enforced by tests.
"""

from libc.stdlib cimport free, malloc, realloc


cdef struct Entry:
    double f
    double h
    long seq
    int idx
    double g


cdef inline bint _less(Entry a, Entry b) noexcept:
    if a.f != b.f:
        return a.f < b.f
    if a.h != b.h:
        return a.h < b.h
    return a.seq < b.seq


cdef struct Heap:
    Entry *data
    int size
    int cap


cdef inline int heap_init(Heap *hp, int cap) except -1:
    hp.data = <Entry *> malloc(cap * sizeof(Entry))
    if hp.data == NULL:
        raise MemoryError()
    hp.size = 0
    hp.cap = cap
    return 0


cdef inline int heap_push(Heap *hp, Entry e) except -1:
    cdef int i, p
    cdef Entry tmp
    cdef Entry *grown
    if hp.size == hp.cap:
        hp.cap *= 2
        grown = <Entry *> realloc(hp.data, hp.cap * sizeof(Entry))
        if grown == NULL:
            raise MemoryError()
        hp.data = grown
    i = hp.size
    hp.size += 1
    hp.data[i] = e
    while i > 0:
        p = (i - 1) >> 1
        if _less(hp.data[i], hp.data[p]):
            tmp = hp.data[i]
            hp.data[i] = hp.data[p]
            hp.data[p] = tmp
            i = p
        else:
            break
    return 0


cdef inline Entry heap_pop(Heap *hp) noexcept:
    cdef Entry top = hp.data[0]
    cdef Entry tmp
    cdef int i = 0, child
    hp.size -= 1
    hp.data[0] = hp.data[hp.size]
    while True:
        child = 2 * i + 1
        if child >= hp.size:
            break
        if child + 1 < hp.size and _less(hp.data[child + 1], hp.data[child]):
            child += 1
        if _less(hp.data[child], hp.data[i]):
            tmp = hp.data[i]
            hp.data[i] = hp.data[child]
            hp.data[child] = tmp
            i = child
        else:
            break
    return top


# Successor order: N, NE, E, SE, S, SW, W, NW (y grows downward).
cdef int[8] MOVE_DX = [0, 1, 1, 1, 0, -1, -1, -1]
cdef int[8] MOVE_DY = [-1, -1, 0, 1, 1, 1, 0, -1]
cdef int[8] MOVE_COST = [1, 2, 1, 2, 1, 2, 1, 2]

cdef unsigned char ST_UNSEEN = 0
cdef unsigned char ST_OPEN = 1
cdef unsigned char ST_CLOSED = 2


cdef inline double _heur(int idx, int tx, int ty, int width, double lam, double *vptr) noexcept:
    cdef int dx = idx % width - tx
    cdef int dy = idx // width - ty
    cdef double d, hh
    if dx < 0:
        dx = -dx
    if dy < 0:
        dy = -dy
    d = dx + dy
    if vptr == NULL:
        return d
    hh = d - lam * vptr[idx]
    return hh if hh > 0.0 else 0.0


def plan_grid(
    int width,
    int height,
    const unsigned char[:] occ,
    int sx,
    int sy,
    int gx,
    int gy,
    int greedy,
    double lam,
    values,
):
    """Advisor-free search; returns (found, path, expansions, open, closed)."""
    cdef int n = width * height
    cdef int start = sy * width + sx
    cdef int target = gy * width + gx

    cdef double[::1] vals
    cdef double *vptr = NULL
    if values is not None and lam != 0.0:
        vals = values
        vptr = &vals[0]

    # cells can be re-expanded after a re-open, so the expansion log grows
    cdef int cap_exp = n if n > 16 else 16
    cdef double *best_g = <double *> malloc(n * sizeof(double))
    cdef int *parent = <int *> malloc(n * sizeof(int))
    cdef unsigned char *state = <unsigned char *> malloc(n * sizeof(unsigned char))
    cdef int *expansions = <int *> malloc(cap_exp * sizeof(int))
    if best_g == NULL or parent == NULL or state == NULL or expansions == NULL:
        free(best_g); free(parent); free(state); free(expansions)
        raise MemoryError()
    cdef int i
    cdef int *grown_exp
    for i in range(n):
        parent[i] = -1
        state[i] = ST_UNSEEN

    cdef Heap hp
    heap_init(&hp, 256)

    cdef long seq = 0
    cdef int n_exp = 0
    cdef bint found = False
    cdef Entry e
    cdef int idx, x, y, k, nx, ny, t
    cdef double g, h, tentative, th
    cdef int fresh_idx[8]
    cdef double fresh_g[8]
    cdef int n_fresh

    best_g[start] = 0.0
    state[start] = ST_OPEN
    h = _heur(start, gx, gy, width, lam, vptr)
    e.f = h if greedy else h
    e.h = h
    e.seq = seq
    e.idx = start
    e.g = 0.0
    heap_push(&hp, e)
    seq += 1

    try:
        while True:
            # pop the next valid entry (lazy deletion of stale pushes)
            idx = -1
            g = 0.0
            while hp.size > 0:
                e = heap_pop(&hp)
                if state[e.idx] == ST_OPEN and e.g == best_g[e.idx]:
                    idx = e.idx
                    g = e.g
                    break
            if idx < 0:
                break  # exhausted

            state[idx] = ST_CLOSED
            if n_exp == cap_exp:
                cap_exp *= 2
                grown_exp = <int *> realloc(expansions, cap_exp * sizeof(int))
                if grown_exp == NULL:
                    raise MemoryError()
                expansions = grown_exp
            expansions[n_exp] = idx
            n_exp += 1

            if idx == target:
                found = True
                break

            x = idx % width
            y = idx // width
            n_fresh = 0
            for k in range(8):
                nx = x + MOVE_DX[k]
                ny = y + MOVE_DY[k]
                if nx < 0 or nx >= width or ny < 0 or ny >= height:
                    continue
                t = ny * width + nx
                if occ[t] != 0:
                    continue
                if MOVE_COST[k] == 2:
                    # no corner cutting: both flanking orthogonals must be free
                    if occ[y * width + nx] != 0 or occ[ny * width + x] != 0:
                        continue
                tentative = g + MOVE_COST[k]
                if state[t] == ST_UNSEEN:
                    best_g[t] = tentative
                    parent[t] = idx
                    fresh_idx[n_fresh] = t
                    fresh_g[n_fresh] = tentative
                    n_fresh += 1
                elif tentative < best_g[t] and not greedy:
                    # greedy mode never relaxes: first parents are final
                    best_g[t] = tentative
                    parent[t] = idx
                    # closed cells re-open; open cells get an improved entry
                    state[t] = ST_OPEN
                    th = _heur(t, gx, gy, width, lam, vptr)
                    e.f = th if greedy else tentative + th
                    e.h = th
                    e.seq = seq
                    e.idx = t
                    e.g = tentative
                    heap_push(&hp, e)
                    seq += 1
            # fresh successors enqueue after relaxations, matching the engine
            for k in range(n_fresh):
                t = fresh_idx[k]
                state[t] = ST_OPEN
                th = _heur(t, gx, gy, width, lam, vptr)
                e.f = th if greedy else fresh_g[k] + th
                e.h = th
                e.seq = seq
                e.idx = t
                e.g = fresh_g[k]
                heap_push(&hp, e)
                seq += 1

        path = []
        if found:
            i = target
            while i >= 0:
                path.append((i % width, i // width))
                i = parent[i]
            path.reverse()
        exp_list = [(expansions[i] % width, expansions[i] // width) for i in range(n_exp)]
        open_list = []
        closed_list = []
        for i in range(n):
            if state[i] == ST_OPEN:
                open_list.append((i % width, i // width))
            elif state[i] == ST_CLOSED:
                closed_list.append((i % width, i // width))
        return found, path, exp_list, open_list, closed_list
    finally:
        free(best_g)
        free(parent)
        free(state)
        free(expansions)
        free(hp.data)
