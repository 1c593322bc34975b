"""Optimal offline placement: left-maximum matching with fewest backup keys.

Keys (left nodes) are matched to cells (right nodes, capacity ell).
Primary edges cost 0, backup edges cost 1, and reversing a matched edge
negates its cost.  The solver augments along paths of exact cost
gamma_hat, raising gamma_hat by one only when no such path remains, so
successive augmentations are min-cost and the final matching both has
maximum cardinality and, among those, the minimum number of backup keys.

Each round is one cost-annotated layered BFS from the free keys followed
by a DFS pass that extracts node-disjoint augmenting paths of cost exactly
gamma_hat.  A node may be relabelled during the BFS when reached again by
a cheaper path.
"""

from dataclasses import dataclass, field

import numpy as np

from ._jit import jitted
from .graph import CuckooGraph

UNPLACED = -1

# Round outcomes reported by the kernel.
_PATHS = 0
_INCREMENT = 1
_DONE = 2
_OVERFLOW = 3
_ERROR = 4

_BIG = 1 << 30


def residual_cost(primary: bool, matched: bool) -> int:
    """Residual cost of traversing an edge.

    Unmatched edges are traversed forward (key to cell) at their plain
    cost; matched edges are traversed backward (cell to key) at the
    negated cost.
    """
    cost = 0 if primary else 1
    return -cost if matched else cost


@jitted
def _flip_path(st_node, depth, n, assigned, occ, load, ell):
    # Stack holds a right node at even positions and a key at odd ones,
    # from the free cell at index 0 down to the free key at index depth.
    for pos in range(1, depth + 1, 2):
        x = st_node[pos]
        new_cell = st_node[pos - 1] - n
        old = assigned[x]
        if old >= 0:
            slot = -1
            for j in range(ell):
                if occ[old, j] == x:
                    slot = j
                    break
            if slot < 0:
                return False
            occ[old, slot] = occ[old, load[old] - 1]
            occ[old, load[old] - 1] = -1
            load[old] -= 1
        if load[new_cell] >= ell:
            return False
        occ[new_cell, load[new_cell]] = x
        load[new_cell] += 1
        assigned[x] = new_cell
    return True


@jitted
def _round(
    cells,
    kp,
    ell,
    n,
    m,
    rev_idx,
    rev_key,
    rev_cost,
    assigned,
    occ,
    load,
    gamma,
    lmax,
    lab_cnt,
    lab_min,
    lab_layer,
    lab_cost,
    lab_par,
    lab_fail,
    q_node,
    q_li,
    r0,
    consumed,
    on_path,
    st_node,
    st_li,
    st_it,
):
    k = cells.shape[1]
    total = n + m

    for v in range(total):
        lab_cnt[v] = 0
        lab_min[v] = _BIG
        consumed[v] = 0
        on_path[v] = 0

    # ---- BFS from the free keys, layer by layer, tracking path costs.
    qtail = 0
    for x in range(n):
        if assigned[x] < 0:
            lab_layer[x, 0] = 0
            lab_cost[x, 0] = 0
            lab_par[x, 0] = -1
            lab_fail[x, 0] = 0
            lab_cnt[x] = 1
            lab_min[x] = 0
            q_node[qtail] = x
            q_li[qtail] = 0
            qtail += 1
    if qtail == 0:
        return _DONE, 0, 0, 0

    qhead = 0
    layer = 0
    r0_cnt = 0
    any_free_right = 0
    anomaly = 0
    stop_layer = -1

    while qhead < qtail and r0_cnt == 0:
        layer_end = qtail
        next_layer = layer + 1
        for qi in range(qhead, layer_end):
            u = q_node[qi]
            cu = lab_cost[u, q_li[qi]]
            if cu > lab_min[u]:
                # Superseded by a cheaper relabel; the cheaper state is
                # queued and will expand instead.
                continue
            if u < n:
                # Key: forward residual edges to every cell except the one
                # currently holding it.
                au = assigned[u]
                for j in range(k):
                    y = cells[u, j]
                    if y == au:
                        continue
                    w = 0 if j < kp else 1
                    cv = cu + w
                    v = n + y
                    if cv < lab_min[v]:
                        if lab_cnt[v] == lmax:
                            return _OVERFLOW, 0, 0, 0
                        li = lab_cnt[v]
                        lab_layer[v, li] = next_layer
                        lab_cost[v, li] = cv
                        lab_par[v, li] = u * lmax + q_li[qi]
                        lab_fail[v, li] = 0
                        lab_cnt[v] = li + 1
                        lab_min[v] = cv
                        q_node[qtail] = v
                        q_li[qtail] = li
                        qtail += 1
                        if load[y] < ell:
                            any_free_right = 1
                            if cv == gamma:
                                if stop_layer < 0:
                                    stop_layer = next_layer
                                r0[r0_cnt] = v
                                r0_cnt += 1
                            elif cv < gamma:
                                anomaly = 1
            else:
                # Cell: backward residual edges to each stored key.
                y = u - n
                for slot in range(ell):
                    x2 = occ[y, slot]
                    if x2 < 0:
                        continue
                    w = 0
                    for j in range(k):
                        if cells[x2, j] == y:
                            if j >= kp:
                                w = -1
                            break
                    cv = cu + w
                    if cv < lab_min[x2]:
                        if lab_cnt[x2] == lmax:
                            return _OVERFLOW, 0, 0, 0
                        li = lab_cnt[x2]
                        lab_layer[x2, li] = next_layer
                        lab_cost[x2, li] = cv
                        lab_par[x2, li] = u * lmax + q_li[qi]
                        lab_fail[x2, li] = 0
                        lab_cnt[x2] = li + 1
                        lab_min[x2] = cv
                        q_node[qtail] = x2
                        q_li[qtail] = li
                        qtail += 1
        qhead = layer_end
        layer = next_layer

    if anomaly:
        return _ERROR, 0, 0, 1
    if r0_cnt == 0:
        if any_free_right:
            return _INCREMENT, 0, 0, 0
        return _DONE, 0, 0, 0

    # ---- DFS: node-disjoint paths of cost exactly gamma, descending the
    # layers recorded by the BFS.
    paths = 0
    for ri in range(r0_cnt):
        yv = r0[ri]
        if consumed[yv]:
            continue
        li_y = -1
        for li in range(lab_cnt[yv]):
            if lab_layer[yv, li] == stop_layer and lab_cost[yv, li] == gamma:
                li_y = li
                break
        if li_y < 0 or lab_fail[yv, li_y]:
            continue

        depth = 0
        st_node[0] = yv
        st_li[0] = li_y
        st_it[0] = rev_idx[yv - n]
        on_path[yv] = 1
        while depth >= 0:
            v = st_node[depth]
            liv = st_li[depth]
            lam_v = lab_layer[v, liv]
            r_v = lab_cost[v, liv]
            if lam_v == 0:
                # Free key reached with the exact remaining cost: augment.
                if not _flip_path(st_node, depth, n, assigned, occ, load, ell):
                    return _ERROR, paths, 0, 2
                for pos in range(depth + 1):
                    consumed[st_node[pos]] = 1
                    on_path[st_node[pos]] = 0
                paths += 1
                depth = -1
                break

            pushed = False
            if v >= n:
                y = v - n
                e = st_it[depth]
                hi = rev_idx[y + 1]
                while e < hi:
                    x2 = rev_key[e]
                    w = rev_cost[e]
                    e += 1
                    if consumed[x2] or on_path[x2] or assigned[x2] == y:
                        continue
                    want = r_v - w
                    li2 = -1
                    for li in range(lab_cnt[x2]):
                        if (
                            lab_layer[x2, li] == lam_v - 1
                            and lab_cost[x2, li] == want
                            and not lab_fail[x2, li]
                        ):
                            li2 = li
                            break
                    if li2 >= 0:
                        st_it[depth] = e
                        depth += 1
                        st_node[depth] = x2
                        st_li[depth] = li2
                        st_it[depth] = 0
                        on_path[x2] = 1
                        pushed = True
                        break
                if not pushed:
                    st_it[depth] = e
            else:
                if st_it[depth] == 0:
                    st_it[depth] = 1
                    z = assigned[v]
                    if z >= 0:
                        zv = n + z
                        w = 0
                        for j in range(k):
                            if cells[v, j] == z:
                                if j >= kp:
                                    w = -1
                                break
                        if not consumed[zv] and not on_path[zv]:
                            want = r_v - w
                            li2 = -1
                            for li in range(lab_cnt[zv]):
                                if (
                                    lab_layer[zv, li] == lam_v - 1
                                    and lab_cost[zv, li] == want
                                    and not lab_fail[zv, li]
                                ):
                                    li2 = li
                                    break
                            if li2 >= 0:
                                depth += 1
                                st_node[depth] = zv
                                st_li[depth] = li2
                                st_it[depth] = rev_idx[z]
                                on_path[zv] = 1
                                pushed = True
            if not pushed:
                lab_fail[v, liv] = 1
                on_path[v] = 0
                depth -= 1

    if paths > 0:
        return _PATHS, paths, 0, 0

    # The DFS failure memo is conservative under the disjointness marks,
    # so it can occasionally hide every path even though the BFS proved
    # one exists.  Augment along the recorded parent chain of the first
    # stopped cell; its labels always form a valid simple path.
    yv = r0[0]
    li_y = -1
    for li in range(lab_cnt[yv]):
        if lab_layer[yv, li] == stop_layer and lab_cost[yv, li] == gamma:
            li_y = li
            break
    depth = 0
    st_node[0] = yv
    node = yv
    li = li_y
    while lab_par[node, li] >= 0:
        packed = lab_par[node, li]
        node = packed // lmax
        li = packed % lmax
        depth += 1
        st_node[depth] = node
    if lab_layer[node, li] != 0 or depth % 2 != 1:
        return _ERROR, 0, 1, 3
    if not _flip_path(st_node, depth, n, assigned, occ, load, ell):
        return _ERROR, 0, 1, 4
    return _PATHS, 1, 1, 0


@dataclass
class Placement:
    """Result of an offline solve.

    `assignment[x]` is key x's cell, or UNPLACED.  w counts, per page, the
    keys whose primary page is that page but which were placed on their
    backup page.
    """

    assignment: np.ndarray
    n_p: int
    n_b: int
    feasible: bool
    r_p: float
    alpha_p: float
    w: np.ndarray | None = None
    unplaced: list[int] = field(default_factory=list)
    total_path_cost: int = 0
    gamma_max: int = 0
    rounds: int = 0
    fallback_rounds: int = 0


class SolverState:
    """Mutable matching state driven round by round.

    Exposed mainly for tests and instrumentation; `solve` wraps the loop.
    """

    def __init__(self, cells: np.ndarray, kp: int, ell: int, m: int):
        cells = np.ascontiguousarray(cells, dtype=np.int64)
        n, k = cells.shape
        self.cells = cells
        self.kp = kp
        self.ell = ell
        self.n = n
        self.m = m
        self.k = k
        self.gamma = 0
        self.finished = n == 0
        self.rounds = 0
        self.total_path_cost = 0
        self.fallback_rounds = 0

        self.assigned = np.full(n, -1, dtype=np.int64)
        self.occ = np.full((m, ell), -1, dtype=np.int64)
        self.load = np.zeros(m, dtype=np.int64)

        # Cell -> incident keys, in ascending key order (drives the
        # deterministic DFS scan order).
        flat = cells.ravel()
        order = np.argsort(flat, kind="stable")
        self.rev_idx = np.zeros(m + 1, dtype=np.int64)
        np.add.at(self.rev_idx, flat + 1, 1)
        np.cumsum(self.rev_idx, out=self.rev_idx)
        self.rev_key = (order // k).astype(np.int64)
        self.rev_cost = np.where(order % k < kp, 0, 1).astype(np.int64)

        self._lmax = 8
        self._alloc_labels()
        total = n + m
        self._q_node = np.empty(total * self._lmax, dtype=np.int64)
        self._q_li = np.empty(total * self._lmax, dtype=np.int64)
        self._r0 = np.empty(max(m, 1), dtype=np.int64)
        self._consumed = np.zeros(total, dtype=np.uint8)
        self._on_path = np.zeros(total, dtype=np.uint8)
        self._st_node = np.empty(total + 2, dtype=np.int64)
        self._st_li = np.empty(total + 2, dtype=np.int64)
        self._st_it = np.empty(total + 2, dtype=np.int64)

    def _alloc_labels(self):
        total = self.n + self.m
        self._lab_cnt = np.zeros(total, dtype=np.int64)
        self._lab_min = np.empty(total, dtype=np.int64)
        self._lab_layer = np.empty((total, self._lmax), dtype=np.int64)
        self._lab_cost = np.empty((total, self._lmax), dtype=np.int64)
        self._lab_par = np.empty((total, self._lmax), dtype=np.int64)
        self._lab_fail = np.empty((total, self._lmax), dtype=np.uint8)

    def augment_round(self) -> int:
        """Run one BFS/DFS round; returns the number of paths flipped.

        A return of 0 means the round either raised gamma_hat or finished
        the solve (check `finished` / `gamma`).
        """
        if self.finished:
            return 0
        while True:
            status, paths, fallback, code = _round(
                self.cells,
                self.kp,
                self.ell,
                self.n,
                self.m,
                self.rev_idx,
                self.rev_key,
                self.rev_cost,
                self.assigned,
                self.occ,
                self.load,
                self.gamma,
                self._lmax,
                self._lab_cnt,
                self._lab_min,
                self._lab_layer,
                self._lab_cost,
                self._lab_par,
                self._lab_fail,
                self._q_node,
                self._q_li,
                self._r0,
                self._consumed,
                self._on_path,
                self._st_node,
                self._st_li,
                self._st_it,
            )
            if status == _OVERFLOW:
                self._lmax *= 2
                self._alloc_labels()
                total = self.n + self.m
                self._q_node = np.empty(total * self._lmax, dtype=np.int64)
                self._q_li = np.empty(total * self._lmax, dtype=np.int64)
                continue
            break
        self.rounds += 1
        if status == _ERROR:
            raise AssertionError(f"solver invariant violated (code {code})")
        if status == _DONE:
            self.finished = True
            return 0
        if status == _INCREMENT:
            self.gamma += 1
            return 0
        self.total_path_cost += paths * self.gamma
        self.fallback_rounds += int(fallback)
        return paths

    def run(self) -> None:
        while not self.finished:
            self.augment_round()

    def matched_count(self) -> int:
        return int(np.count_nonzero(self.assigned >= 0))

    def backup_count(self) -> int:
        placed = self.assigned >= 0
        prim = (self.cells[:, : self.kp] == self.assigned[:, None]).any(axis=1)
        return int(np.count_nonzero(placed & ~prim))

    def validate(self) -> None:
        """Check matching legality; raises AssertionError on corruption."""
        load_check = np.zeros(self.m, dtype=np.int64)
        seen = np.zeros(self.n, dtype=bool)
        for y in range(self.m):
            cnt = 0
            for slot in range(self.ell):
                x = int(self.occ[y, slot])
                if x < 0:
                    continue
                if slot >= self.load[y]:
                    raise AssertionError("occupant beyond load watermark")
                if seen[x]:
                    raise AssertionError(f"key {x} stored twice")
                seen[x] = True
                if self.assigned[x] != y:
                    raise AssertionError(f"key {x} occ/assigned mismatch")
                if y not in self.cells[x]:
                    raise AssertionError(f"key {x} stored in a non-choice cell")
                cnt += 1
            if cnt != self.load[y]:
                raise AssertionError("load counter out of sync")
            load_check[y] = cnt
        if (load_check > self.ell).any():
            raise AssertionError("cell over capacity")
        for x in range(self.n):
            if self.assigned[x] >= 0 and not seen[x]:
                raise AssertionError(f"key {x} assigned but not stored")


def solve_raw(cells: np.ndarray, kp: int, ell: int, m: int) -> SolverState:
    """Solve a bare instance given as a (n, k) array of cell choices."""
    state = SolverState(cells, kp, ell, m)
    state.run()
    return state


def solve(graph: CuckooGraph) -> Placement:
    """Optimal placement for a generated graph, with per-page backup counts."""
    cfg = graph.config
    state = solve_raw(graph.cells, cfg.k_p, cfg.ell, cfg.m)
    assigned = state.assigned
    placed = assigned >= 0
    prim = (graph.cells[:, : cfg.k_p] == assigned[:, None]).any(axis=1) & placed
    backup = placed & ~prim
    n_p = int(np.count_nonzero(prim))
    n_b = int(np.count_nonzero(backup))
    n = graph.n
    w = np.bincount(graph.pages[backup, 0], minlength=cfg.t).astype(np.int64)
    return Placement(
        assignment=assigned,
        n_p=n_p,
        n_b=n_b,
        feasible=bool(placed.all()) if n > 0 else True,
        r_p=n_p / n if n > 0 else 1.0,
        alpha_p=n_p / cfg.m,
        w=w,
        unplaced=[int(x) for x in np.nonzero(~placed)[0]],
        total_path_cost=state.total_path_cost,
        gamma_max=state.gamma,
        rounds=state.rounds,
        fallback_rounds=state.fallback_rounds,
    )
