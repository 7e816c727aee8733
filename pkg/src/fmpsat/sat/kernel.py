"""Conflict-driven clause learning search over flat numpy arrays.

The search routine is written against plain arrays so it can run
JIT-compiled through numba or as-is in the interpreter. Set
``FMPSAT_PURE=1`` in the environment to force the interpreted path;
``benchmarks/compare_backends.py`` measures the gap between the two.

Literals are stored as codes: variable v (0-based) appears positively
as ``2*v`` and negatively as ``2*v + 1``. Clauses live in one shared
literal array indexed CSR-style, with learned clauses appended behind
the input ones. The first two positions of every clause are its
watched literals; watcher lists are intrusive linked lists keyed by
``2*clause + slot``.
"""

from __future__ import annotations

import time

import numpy as np

from ..jit import JIT_ENABLED, PURE_REQUESTED, maybe_jit, numba

SAT = 10
UNSAT = 20
UNKNOWN = 0

_UNDEF = np.int8(-1)


if JIT_ENABLED:

    @numba.njit(cache=False, nogil=True)
    def _wall_clock() -> float:
        with numba.objmode(now="float64"):
            now = time.time()
        return now

else:

    def _wall_clock() -> float:
        return time.time()


def _search_impl(n_vars, lits_in, starts_in, units, deadline):  # noqa: C901
    """Run CDCL to completion; returns (status, model).

    Restarts follow a Luby sequence, branching follows additive-bump
    variable activities with phase saving, and the deadline is polled
    every few thousand conflicts or propagations.
    """
    n_clauses = starts_in.shape[0] - 1
    lit_count = lits_in.shape[0]
    lit_cap = max(64, lit_count * 2)
    cls_cap = max(16, n_clauses * 2 + 16)
    lits = np.empty(lit_cap, np.int32)
    lits[:lit_count] = lits_in
    starts = np.empty(cls_cap + 1, np.int64)
    starts[: n_clauses + 1] = starts_in[: n_clauses + 1]
    n_lits = lit_count

    assign = np.full(n_vars, _UNDEF, np.int8)
    level = np.zeros(n_vars, np.int32)
    reason = np.full(n_vars, -1, np.int64)
    trail = np.zeros(n_vars, np.int32)
    trail_lim = np.zeros(n_vars + 1, np.int64)
    phase = np.zeros(n_vars, np.int8)
    activity = np.zeros(n_vars, np.float64)
    seen = np.zeros(n_vars, np.uint8)
    learnt = np.zeros(n_vars + 1, np.int32)
    model = np.zeros(n_vars, np.uint8)

    watch_head = np.full(2 * n_vars + 2, -1, np.int64)
    watch_next = np.full(2 * cls_cap, -1, np.int64)

    trail_len = 0
    qhead = 0
    n_levels = 0
    var_inc = 1.0
    conflicts = 0
    next_conflict_check = 2048
    props = 0
    next_prop_check = 1 << 22
    luby_u = 1
    luby_v = 1
    restart_base = 100
    restart_at = conflicts + restart_base

    if deadline != np.inf and _wall_clock() > deadline:
        return UNKNOWN, model

    # root-level units
    for idx in range(units.shape[0]):
        code = units[idx]
        v = code >> 1
        want = np.int8(1 - (code & 1))
        if assign[v] == _UNDEF:
            assign[v] = want
            level[v] = 0
            reason[v] = -1
            trail[trail_len] = code
            trail_len += 1
        elif assign[v] != want:
            return UNSAT, model

    # watch the first two literals of every input clause
    for c in range(n_clauses):
        base = starts[c]
        for s in range(2):
            code = lits[base + s]
            node = 2 * c + s
            watch_next[node] = watch_head[code]
            watch_head[code] = node

    while True:
        # ------------------------------------------------------ propagate
        confl = np.int64(-1)
        while qhead < trail_len:
            pcode = trail[qhead]
            qhead += 1
            falsified = pcode ^ 1
            node = watch_head[falsified]
            prev = np.int64(-1)
            while node != -1:
                props += 1
                nxt = watch_next[node]
                c = node >> 1
                s = node & 1
                base = starts[c]
                other = lits[base + (1 - s)]
                ov = other >> 1
                osat = assign[ov] != _UNDEF and assign[ov] == np.int8(1 - (other & 1))
                if osat:
                    prev = node
                    node = nxt
                    continue
                moved = False
                end = starts[c + 1]
                for q_i in range(base + 2, end):
                    q = lits[q_i]
                    qv = q >> 1
                    if assign[qv] == _UNDEF or assign[qv] == np.int8(1 - (q & 1)):
                        # relocate this watch onto q
                        lits[q_i] = lits[base + s]
                        lits[base + s] = q
                        if prev == -1:
                            watch_head[falsified] = nxt
                        else:
                            watch_next[prev] = nxt
                        watch_next[node] = watch_head[q]
                        watch_head[q] = node
                        moved = True
                        break
                if moved:
                    node = nxt
                    continue
                if assign[ov] == _UNDEF:
                    assign[ov] = np.int8(1 - (other & 1))
                    level[ov] = n_levels
                    reason[ov] = c
                    trail[trail_len] = other
                    trail_len += 1
                else:
                    confl = c
                    qhead = trail_len
                    break
                prev = node
                node = nxt
            if confl != -1:
                break
            if props >= next_prop_check:
                next_prop_check = props + (1 << 22)
                if _wall_clock() > deadline:
                    return UNKNOWN, model

        # ------------------------------------------------------- conflict
        if confl != -1:
            conflicts += 1
            if n_levels == 0:
                return UNSAT, model
            if conflicts >= next_conflict_check:
                next_conflict_check = conflicts + 2048
                if _wall_clock() > deadline:
                    return UNKNOWN, model

            # first-UIP learning
            n_learnt = 1
            counter = 0
            p_var = np.int64(-1)
            c = confl
            idx = trail_len - 1
            pcode = np.int32(0)
            while True:
                base = starts[c]
                end = starts[c + 1]
                for q_i in range(base, end):
                    q = lits[q_i]
                    qv = np.int64(q >> 1)
                    if qv == p_var:
                        continue
                    if seen[qv] == 0 and level[qv] > 0:
                        seen[qv] = 1
                        activity[qv] += var_inc
                        if activity[qv] > 1e100:
                            for v2 in range(n_vars):
                                activity[v2] *= 1e-100
                            var_inc *= 1e-100
                        if level[qv] == n_levels:
                            counter += 1
                        else:
                            learnt[n_learnt] = q
                            n_learnt += 1
                while seen[trail[idx] >> 1] == 0:
                    idx -= 1
                pcode = trail[idx]
                p_var = np.int64(pcode >> 1)
                seen[p_var] = 0
                idx -= 1
                counter -= 1
                if counter <= 0:
                    break
                c = reason[p_var]
            learnt[0] = pcode ^ 1
            var_inc *= 1.0 / 0.95

            if n_learnt == 1:
                bt_level = 0
            else:
                max_i = 1
                for i in range(2, n_learnt):
                    if level[learnt[i] >> 1] > level[learnt[max_i] >> 1]:
                        max_i = i
                tmp = learnt[1]
                learnt[1] = learnt[max_i]
                learnt[max_i] = tmp
                bt_level = level[learnt[1] >> 1]
            for i in range(1, n_learnt):
                seen[learnt[i] >> 1] = 0

            # backtrack
            bound = trail_lim[bt_level]
            for i in range(trail_len - 1, bound - 1, -1):
                code = trail[i]
                v = code >> 1
                phase[v] = assign[v]
                assign[v] = _UNDEF
                reason[v] = -1
            trail_len = bound
            qhead = bound
            n_levels = bt_level

            if n_learnt == 1:
                code = learnt[0]
                v = code >> 1
                if assign[v] == _UNDEF:
                    assign[v] = np.int8(1 - (code & 1))
                    level[v] = 0
                    reason[v] = -1
                    trail[trail_len] = code
                    trail_len += 1
                elif assign[v] != np.int8(1 - (code & 1)):
                    return UNSAT, model
            else:
                # store the learned clause and watch its first two literals
                if n_clauses + 1 > cls_cap:
                    new_cap = cls_cap * 2 + 16
                    new_starts = np.empty(new_cap + 1, np.int64)
                    new_starts[: n_clauses + 1] = starts[: n_clauses + 1]
                    starts = new_starts
                    new_watch = np.full(2 * new_cap, -1, np.int64)
                    new_watch[: 2 * cls_cap] = watch_next[: 2 * cls_cap]
                    watch_next = new_watch
                    cls_cap = new_cap
                if n_lits + n_learnt > lit_cap:
                    new_lcap = max(lit_cap * 2, n_lits + n_learnt + 64)
                    new_lits = np.empty(new_lcap, np.int32)
                    new_lits[:n_lits] = lits[:n_lits]
                    lits = new_lits
                    lit_cap = new_lcap
                c_new = n_clauses
                base = n_lits
                for i in range(n_learnt):
                    lits[base + i] = learnt[i]
                n_lits += n_learnt
                n_clauses += 1
                starts[n_clauses] = n_lits
                for s in range(2):
                    code = lits[base + s]
                    node = 2 * c_new + s
                    watch_next[node] = watch_head[code]
                    watch_head[code] = node
                code = learnt[0]
                v = code >> 1
                assign[v] = np.int8(1 - (code & 1))
                level[v] = n_levels
                reason[v] = c_new
                trail[trail_len] = code
                trail_len += 1

            if conflicts >= restart_at:
                # Luby-scheduled restart
                if (luby_u & -luby_u) == luby_v:
                    luby_u += 1
                    luby_v = 1
                else:
                    luby_v *= 2
                restart_at = conflicts + restart_base * luby_v
                if n_levels > 0:
                    bound = trail_lim[0]
                    for i in range(trail_len - 1, bound - 1, -1):
                        code = trail[i]
                        v = code >> 1
                        phase[v] = assign[v]
                        assign[v] = _UNDEF
                        reason[v] = -1
                    trail_len = bound
                    qhead = bound
                    n_levels = 0
            continue

        # -------------------------------------------------------- decide
        if trail_len == n_vars:
            for v in range(n_vars):
                model[v] = assign[v]
            return SAT, model
        free = assign == _UNDEF
        scores = np.where(free, activity, -1.0)
        v = np.int64(np.argmax(scores))
        code = np.int32(2 * v + (1 - phase[v]))
        trail_lim[n_levels] = trail_len
        n_levels += 1
        assign[v] = phase[v]
        level[v] = n_levels
        reason[v] = -1
        trail[trail_len] = code
        trail_len += 1


_search = maybe_jit(_search_impl)


def clean_clauses(num_vars, clauses, assumptions=()):
    """Normalize input clauses into kernel arrays.

    Returns (status, units, lits, starts): duplicate literals are
    dropped, tautologies removed, unit clauses separated out. Status
    is UNSAT when an empty clause is present, else UNKNOWN.
    """
    units: list[int] = []
    body: list[int] = []
    starts: list[int] = [0]
    pending = list(clauses) + [[a] for a in assumptions]
    for clause in pending:
        codes: list[int] = []
        tautology = False
        for lit in clause:
            code = 2 * (lit - 1) if lit > 0 else 2 * (-lit - 1) + 1
            if code in codes:
                continue
            if code ^ 1 in codes:
                tautology = True
                break
            codes.append(code)
        if tautology:
            continue
        if not codes:
            return UNSAT, None, None, None
        if len(codes) == 1:
            units.append(codes[0])
        else:
            body.extend(codes)
            starts.append(len(body))
    return (
        UNKNOWN,
        np.asarray(units, dtype=np.int32),
        np.asarray(body, dtype=np.int32),
        np.asarray(starts, dtype=np.int64),
    )


def search(num_vars, clauses, assumptions=(), deadline=None):
    """Decide the clause set; returns (status, model array or None)."""
    status, units, body, starts = clean_clauses(num_vars, clauses, assumptions)
    if status == UNSAT:
        return UNSAT, None
    if deadline is None:
        deadline = np.inf
    status, model = _search(
        np.int64(num_vars), body, starts, units, np.float64(deadline)
    )
    if status == SAT:
        return SAT, model
    return status, None


def model_satisfies(clauses, model) -> bool:
    """Check a 0-based boolean model array against signed-literal clauses."""
    for clause in clauses:
        for lit in clause:
            value = bool(model[abs(lit) - 1])
            if (lit > 0) == value:
                break
        else:
            return False
    return True


def warm_up() -> None:
    """Force JIT compilation with a throwaway instance."""
    search(2, [[1, 2], [-1, 2], [1, -2]])
