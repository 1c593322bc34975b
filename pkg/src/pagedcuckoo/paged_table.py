"""Online paged cuckoo table with random-walk insertion and deletion.

Insertion of a nestless key first tries its free primary cells; otherwise
a biased coin (probability `a_bias`) keeps the walk on the primary page,
evicting a random occupant of a random primary cell, and with probability
1 - a_bias the walk moves to the backup page (free cell if any, eviction
otherwise).  The key displaced in the previous step may not be displaced
right back while an alternative exists on the same page.  A global
counter of b_factor * n basic steps bounds the whole insertion run.

Page requests are counted by page switches: the first examined page costs
one request and every sub-step examining a different page than the
previous sub-step costs another.

Determinism contract: random words are consumed in walk order and only
when a choice is real (two or more candidates), one word per uniform
draw plus rejection redraws.
"""

import math
from dataclasses import dataclass

import numpy as np

from ._jit import jitted
from .filters import PageFilters
from .graph import Config, KeyChoices
from .rng import Rng, _mt_next, _uniform_below


@dataclass(frozen=True)
class WalkParams:
    """Random-walk knobs: coin bias and step-budget factor."""

    a_bias: float
    b_factor: float = math.inf

    def __post_init__(self):
        if not 0.0 <= self.a_bias <= 1.0:
            raise ValueError(f"a_bias must be in [0, 1], got {self.a_bias}")
        if not self.b_factor > 0:
            raise ValueError(f"b_factor must be positive, got {self.b_factor}")


@dataclass
class InsertResult:
    success: bool
    steps: int
    page_requests: int
    unplaced_key: int | None = None
    trace: np.ndarray | None = None


@dataclass
class LookupResult:
    found: bool
    page_requests: int


@jitted
def _walk_insert(
    state,
    occ,
    load,
    assigned,
    kcells,
    kpages,
    kp,
    kb,
    ell,
    key,
    a_bias,
    budget,
    free_buf,
    vict_buf,
    trace,
    trace_cap,
):
    # budget < 0 means unbounded.  Returns (success, steps, page_requests,
    # remaining budget, final nestless key, recorded trace rows).
    x = key
    steps = 0
    prs = 1
    cur_page = kpages[key, 0]
    prev_key = -1
    success = False
    trace_len = 0

    while budget != 0 and not success:
        pp = kpages[x, 0]
        if pp != cur_page:
            prs += 1
            cur_page = pp

        nfree = 0
        for j in range(kp):
            y = kcells[x, j]
            if load[y] < ell:
                free_buf[nfree] = y
                nfree += 1

        step_cell = -1
        evicted = -1
        nestless_before = x

        if nfree > 0:
            y = free_buf[0] if nfree == 1 else free_buf[_uniform_below(state, nfree)]
            occ[y, load[y]] = x
            load[y] += 1
            assigned[x] = y
            step_cell = y
            success = True
        else:
            coin = _mt_next(state) * 2.0 ** -32
            if coin < a_bias:
                off = 0
                cnt = kp
            else:
                bp = kpages[x, 1]
                prs += 1
                cur_page = bp
                off = kp
                cnt = kb
                nfree = 0
                for j in range(kp, kp + kb):
                    y = kcells[x, j]
                    if load[y] < ell:
                        free_buf[nfree] = y
                        nfree += 1
                if nfree > 0:
                    y = free_buf[0] if nfree == 1 else free_buf[_uniform_below(state, nfree)]
                    occ[y, load[y]] = x
                    load[y] += 1
                    assigned[x] = y
                    step_cell = y
                    success = True
            if not success:
                # Back-step avoidance: skip the cell holding the key that
                # just displaced x, unless it is the only option here.
                prev_cell = -1
                if prev_key >= 0:
                    pc = assigned[prev_key]
                    for j in range(off, off + cnt):
                        if kcells[x, j] == pc:
                            prev_cell = pc
                            break
                if prev_cell >= 0 and ell == 1 and cnt > 1:
                    idx = 0 if cnt == 2 else _uniform_below(state, cnt - 1)
                    chosen = -1
                    ii = 0
                    for j in range(off, off + cnt):
                        y = kcells[x, j]
                        if y == prev_cell:
                            continue
                        if ii == idx:
                            chosen = y
                            break
                        ii += 1
                elif cnt == 1:
                    chosen = kcells[x, off]
                else:
                    chosen = kcells[x, off + _uniform_below(state, cnt)]
                nv = 0
                prev_slot = -1
                for slot in range(ell):
                    cand = occ[chosen, slot]
                    if cand == prev_key:
                        prev_slot = slot
                    elif cand >= 0:
                        vict_buf[nv] = slot
                        nv += 1
                if nv == 0:
                    vict_buf[0] = prev_slot
                    nv = 1
                vslot = vict_buf[0] if nv == 1 else vict_buf[_uniform_below(state, nv)]
                victim = occ[chosen, vslot]
                occ[chosen, vslot] = x
                assigned[victim] = -1
                assigned[x] = chosen
                step_cell = chosen
                evicted = victim
                prev_key = x
                x = victim

        steps += 1
        if budget > 0:
            budget -= 1
        if trace_len < trace_cap:
            trace[trace_len, 0] = nestless_before
            trace[trace_len, 1] = step_cell
            trace[trace_len, 2] = evicted
            trace_len += 1

    if steps == 0:
        prs = 0
    return success, steps, prs, budget, x, trace_len


_EMPTY_TRACE = np.empty((0, 3), dtype=np.int64)


@jitted
def _walk_insert_many(
    state,
    occ,
    load,
    assigned,
    kcells,
    kpages,
    kp,
    kb,
    ell,
    a_bias,
    budget,
    free_buf,
    vict_buf,
    lo,
    hi,
    live,
    steps_out,
    prs_out,
    trace,
):
    # Insert keys lo..hi-1 in order, stopping at the first failure.
    # Returns (inserted, failed_flag, budget, unplaced key or -1).
    done = 0
    for key in range(lo, hi):
        success, steps, prs, budget, nestless, _ = _walk_insert(
            state, occ, load, assigned, kcells, kpages, kp, kb, ell,
            key, a_bias, budget, free_buf, vict_buf, trace, 0,
        )
        steps_out[key - lo] = steps
        prs_out[key - lo] = prs
        live[key] = True
        done += 1
        if not success:
            live[nestless] = False
            return done, 1, budget, nestless
    return done, 0, budget, -1


class PagedTable:
    """Live table over m capacity-ell cells split into pages of s cells.

    Single-writer: inserts and deletes must not overlap lookups.  Keys are
    non-negative integers carrying their own choice sets, so evicted keys
    continue their walk without any hash re-evaluation.
    """

    def __init__(self, config: Config, walk: WalkParams):
        if config.k_b == 0 and walk.a_bias != 1.0:
            raise ValueError("a_bias must be 1.0 when keys have no backup page")
        self.config = config
        self.walk = walk
        self.occ = np.full((config.m, config.ell), -1, dtype=np.int64)
        self.load = np.zeros(config.m, dtype=np.int64)
        self._cap = max(config.n, 1)
        self.kcells = np.zeros((self._cap, config.k), dtype=np.int64)
        self.kpages = np.full((self._cap, 2), -1, dtype=np.int64)
        self.assigned = np.full(self._cap, -1, dtype=np.int64)
        self.live = np.zeros(self._cap, dtype=bool)
        self.live_keys = 0
        if math.isinf(walk.b_factor):
            self.global_counter = -1
        else:
            self.global_counter = int(math.floor(walk.b_factor * config.n))
        self.total_steps = 0
        self.total_page_requests = 0
        self.inserts = 0
        self.failures = 0
        self.insert_steps: list[int] = []
        self.insert_prs: list[int] = []
        self.filters: PageFilters | None = None
        self._free_buf = np.empty(max(config.k_p, config.k_b, 1), dtype=np.int64)
        self._vict_buf = np.empty(config.ell, dtype=np.int64)

    def _grow(self, key: int) -> None:
        new_cap = self._cap
        while key >= new_cap:
            new_cap *= 2
        kcells = np.zeros((new_cap, self.config.k), dtype=np.int64)
        kcells[: self._cap] = self.kcells
        kpages = np.full((new_cap, 2), -1, dtype=np.int64)
        kpages[: self._cap] = self.kpages
        assigned = np.full(new_cap, -1, dtype=np.int64)
        assigned[: self._cap] = self.assigned
        live = np.zeros(new_cap, dtype=bool)
        live[: self._cap] = self.live
        self.kcells, self.kpages, self.assigned, self.live = kcells, kpages, assigned, live
        self._cap = new_cap

    def _register(self, choices: KeyChoices) -> int:
        key = choices.key
        if key < 0:
            raise ValueError("keys must be non-negative integers")
        if key >= self._cap:
            self._grow(key)
        if self.live[key]:
            raise ValueError(f"key {key} already present")
        cfg = self.config
        if len(choices.primary_cells) != cfg.k_p or len(choices.backup_cells) != cfg.k_b:
            raise ValueError("choice set does not match the table configuration")
        self.kcells[key, : cfg.k_p] = choices.primary_cells
        self.kcells[key, cfg.k_p :] = choices.backup_cells
        self.kpages[key, 0] = choices.primary_page
        self.kpages[key, 1] = -1 if choices.backup_page is None else choices.backup_page
        return key

    def insert(self, choices: KeyChoices, rng: Rng, trace_cap: int = 0) -> InsertResult:
        """Random-walk insert; fails only by exhausting the step budget."""
        key = self._register(choices)
        trace = np.empty((trace_cap, 3), dtype=np.int64) if trace_cap > 0 else _EMPTY_TRACE
        success, steps, prs, budget, nestless, trace_len = _walk_insert(
            rng._state,
            self.occ,
            self.load,
            self.assigned,
            self.kcells,
            self.kpages,
            self.config.k_p,
            self.config.k_b,
            self.config.ell,
            key,
            self.walk.a_bias,
            self.global_counter,
            self._free_buf,
            self._vict_buf,
            trace,
            trace_cap,
        )
        self.global_counter = int(budget)
        self.live[key] = True
        self.live_keys += 1
        unplaced = None
        if not success:
            self.failures += 1
            unplaced = int(nestless)
            self.live[unplaced] = False
            self.live_keys -= 1
        self.inserts += 1
        self.total_steps += int(steps)
        self.total_page_requests += int(prs)
        self.insert_steps.append(int(steps))
        self.insert_prs.append(int(prs))
        self.filters = None
        return InsertResult(
            success=bool(success),
            steps=int(steps),
            page_requests=int(prs),
            unplaced_key=unplaced,
            trace=trace[:trace_len] if trace_cap > 0 else None,
        )

    def bulk_insert(self, graph, lo: int = 0, hi: int | None = None, rng: Rng | None = None):
        """Insert graph keys lo..hi-1 in order, stopping at the first failure.

        Fast path for experiment runs: the whole loop executes in the
        kernel.  Returns (inserted_count, failed, per-insert steps array,
        per-insert page-request array).
        """
        if hi is None:
            hi = graph.n
        if rng is None:
            raise ValueError("bulk_insert needs the trial generator")
        if hi > self._cap:
            self._grow(hi - 1)
        if np.any(self.live[lo:hi]):
            raise ValueError("bulk range overlaps live keys")
        self.kcells[lo:hi] = graph.cells[lo:hi]
        self.kpages[lo:hi] = graph.pages[lo:hi]
        steps_out = np.zeros(hi - lo, dtype=np.int64)
        prs_out = np.zeros(hi - lo, dtype=np.int64)
        done, failed, budget, unplaced = _walk_insert_many(
            rng._state,
            self.occ,
            self.load,
            self.assigned,
            self.kcells,
            self.kpages,
            self.config.k_p,
            self.config.k_b,
            self.config.ell,
            self.walk.a_bias,
            self.global_counter,
            self._free_buf,
            self._vict_buf,
            lo,
            hi,
            self.live,
            steps_out,
            prs_out,
            _EMPTY_TRACE,
        )
        self.global_counter = int(budget)
        self.inserts += int(done)
        self.failures += int(failed)
        self.live_keys = int(np.count_nonzero(self.live))
        steps_out = steps_out[:done]
        prs_out = prs_out[:done]
        self.total_steps += int(steps_out.sum())
        self.total_page_requests += int(prs_out.sum())
        self.filters = None
        return int(done), bool(failed), steps_out, prs_out

    def delete(self, key) -> bool:
        """Remove a key if present; never touches the step budget."""
        key = key.key if isinstance(key, KeyChoices) else int(key)
        if key >= self._cap or not self.live[key]:
            return False
        cell = int(self.assigned[key])
        last = int(self.load[cell]) - 1
        for slot in range(last + 1):
            if self.occ[cell, slot] == key:
                self.occ[cell, slot] = self.occ[cell, last]
                self.occ[cell, last] = -1
                break
        self.load[cell] = last
        self.assigned[key] = -1
        self.live[key] = False
        self.live_keys -= 1
        self.filters = None
        return True

    def lookup(self, choices: KeyChoices) -> LookupResult:
        """Probe the primary page, then (filter permitting) the backup page."""
        key = choices.key
        for y in choices.primary_cells:
            for slot in range(self.config.ell):
                if self.occ[y, slot] == key:
                    return LookupResult(True, 1)
        if self.config.k_b == 0:
            return LookupResult(False, 1)
        if self.filters is not None and not self.filters.query(choices.primary_page, key):
            return LookupResult(False, 1)
        for y in choices.backup_cells:
            for slot in range(self.config.ell):
                if self.occ[y, slot] == key:
                    return LookupResult(True, 2)
        return LookupResult(False, 2)

    def contains(self, choices: KeyChoices) -> bool:
        return self.lookup(choices).found

    def build_page_filters(
        self, bits_per_cell: float = 1.0, hash_count: int = 3, seed: int = 0
    ) -> PageFilters:
        """Per-page Bloom filters over the keys pushed to their backup page.

        Meaningful on a quiescent table: any later insert or delete drops
        the attached filters, since they cannot be updated in place.
        """
        cfg = self.config
        nbits = max(1, int(round(bits_per_cell * cfg.s)))
        filters = PageFilters(cfg.t, nbits, hash_count, seed)
        for key in np.nonzero(self.live)[0]:
            cell = self.assigned[key]
            if cell // cfg.s == self.kpages[key, 1]:
                filters.add(int(self.kpages[key, 0]), int(key))
        self.filters = filters
        return filters

    # ---- statistics -------------------------------------------------

    def _primary_mask(self) -> np.ndarray:
        keys = np.nonzero(self.live)[0]
        cells = self.assigned[keys]
        return keys, (self.kcells[keys, : self.config.k_p] == cells[:, None]).any(axis=1)

    @property
    def n_p(self) -> int:
        if self.live_keys == 0:
            return 0
        _, prim = self._primary_mask()
        return int(np.count_nonzero(prim))

    @property
    def n_b(self) -> int:
        return self.live_keys - self.n_p

    @property
    def r_p(self) -> float:
        return self.n_p / self.live_keys if self.live_keys else 1.0

    @property
    def alpha_p(self) -> float:
        return self.n_p / self.config.m

    def w_counts(self) -> np.ndarray:
        """Per page: live keys with that primary page stored on backup."""
        keys, prim = self._primary_mask()
        backup_keys = keys[~prim]
        return np.bincount(
            self.kpages[backup_keys, 0], minlength=self.config.t
        ).astype(np.int64)

    def page_requests_from_trace(self, trace: np.ndarray) -> int:
        """Recount page requests for a recorded walk trace.

        One request for the first examined page, plus one per sub-step
        whose examined page differs from the previous one; a step placing
        on the nestless key's backup page examines both of its pages.
        """
        if trace.shape[0] == 0:
            return 0
        examined: list[int] = []
        for i in range(trace.shape[0]):
            nestless = int(trace[i, 0])
            cell = int(trace[i, 1])
            examined.append(int(self.kpages[nestless, 0]))
            if cell // self.config.s == self.kpages[nestless, 1]:
                examined.append(int(self.kpages[nestless, 1]))
        count = 1
        for prev, cur in zip(examined, examined[1:]):
            if cur != prev:
                count += 1
        return count

    def mean_steps(self) -> float:
        return self.total_steps / self.inserts if self.inserts else 0.0

    def mean_page_requests(self) -> float:
        return self.total_page_requests / self.inserts if self.inserts else 0.0

    def validate(self) -> None:
        """Full legality audit; raises AssertionError on any violation."""
        seen = set()
        for y in range(self.config.m):
            cnt = 0
            for slot in range(self.config.ell):
                x = int(self.occ[y, slot])
                if x < 0:
                    continue
                if slot >= self.load[y]:
                    raise AssertionError("occupant beyond load watermark")
                if x in seen:
                    raise AssertionError(f"key {x} stored twice")
                seen.add(x)
                if not self.live[x]:
                    raise AssertionError(f"dead key {x} still stored")
                if self.assigned[x] != y:
                    raise AssertionError(f"key {x} occ/assigned mismatch")
                if y not in self.kcells[x]:
                    raise AssertionError(f"key {x} stored in a non-choice cell")
                cnt += 1
            if cnt != self.load[y]:
                raise AssertionError(f"cell {y} load counter out of sync")
            if cnt > self.config.ell:
                raise AssertionError(f"cell {y} over capacity")
        if len(seen) != self.live_keys:
            raise AssertionError("live key count out of sync")


def dump_trace(trace: np.ndarray, fh, config: Config) -> None:
    """Write `step_index nestless_key page cell evicted_key|FREE` lines."""
    for i in range(trace.shape[0]):
        nestless, cell, evicted = (int(v) for v in trace[i])
        tag = "FREE" if evicted < 0 else str(evicted)
        fh.write(f"{i} {nestless} {cell // config.s} {cell} {tag}\n")
