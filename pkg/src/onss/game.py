"""Two-player reachability game over quantized needle poses.

The controller picks Push or Rotate; the environment answers every push with
a heading deviation of -1, 0 or +1 quanta. Arcs sweeping the known CR/DR set
or leaving the workspace lead to the DEAD sink, arcs ending in the target lead
to GOAL. :func:`solve` computes the controller attractor of GOAL.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .errors import UsageError
from .kinematics import (Action, GameState, Grid, KinParams, NeedlePose, arc_end,
                         normalize_angle, quantize, representative)
from .optimizer import Plan
from .regions import RegionMap, blocked_points

UNREACHED = np.iinfo(np.int32).max

SYNTH_ACTIONS = (Action.PUSH, Action.ROTATE)
DEVIATIONS = (-1, 0, 1)


@dataclass
class GameGraph:
    """Move-alternating game in array form.

    ``succ[a][s, k]`` is the successor after the controller picks action ``a``
    in state ``s`` and the environment picks its ``k``-th answer. Indices
    ``n_states`` and ``n_states + 1`` are the GOAL and DEAD sinks.
    """

    n_states: int
    actions: tuple
    succ: tuple
    nominal: tuple
    start: Optional[int] = None
    grid: Optional[Grid] = None
    kin: Optional[KinParams] = None
    rmap: Optional[RegionMap] = None
    goal_cells: Optional[np.ndarray] = field(default=None, repr=False)
    sweep_margin: float = 0.0

    def __post_init__(self):
        self.succ = tuple(np.ascontiguousarray(s, dtype=np.int32) for s in self.succ)
        for s in self.succ:
            if s.ndim != 2 or s.shape[0] != self.n_states or s.shape[1] == 0:
                raise ValueError("successor table has wrong shape")
            if s.size and (s.min() < 0 or s.max() > self.n_states + 1):
                raise ValueError("successor index out of range")

    @property
    def GOAL(self) -> int:
        return self.n_states

    @property
    def DEAD(self) -> int:
        return self.n_states + 1

    def successors(self, s: int, a_idx: int) -> np.ndarray:
        return self.succ[a_idx][s]

    # needle games only

    def index(self, st: GameState) -> int:
        nx, ny = self.grid.shape
        h = self.grid.headings
        return ((st.cell_x * ny + st.cell_y) * h + st.heading_index) * 2 + (0 if st.bevel > 0 else 1)

    def state(self, idx: int) -> GameState:
        nx, ny = self.grid.shape
        h = self.grid.headings
        b = 1 if idx % 2 == 0 else -1
        idx //= 2
        hi = idx % h
        idx //= h
        return GameState(idx // ny, idx % ny, hi, b)

    def locate(self, pose: NeedlePose) -> int:
        """Game index of a continuous pose, or GOAL / DEAD."""
        if blocked_points(self.rmap, np.array(pose.xy)):
            return self.DEAD
        st = quantize(pose, self.grid)
        if self.goal_cells is not None and self.goal_cells[st.cell_x, st.cell_y]:
            return self.GOAL
        return self.index(st)


@functools.lru_cache(maxsize=8)
def _motion_tables(grid: Grid, kin: KinParams):
    """Push successors and sweep samples for every (heading, bevel) pair.

    Returns per-(h, b) arc offsets relative to the cell centre, the successor
    heading index for each deviation, and sample offsets along the arc.
    """
    H = grid.headings
    q = grid.quantum
    origin = NeedlePose(0.0, 0.0)
    end_dxy = np.zeros((H, 2, 2))
    new_h = np.zeros((H, 2, 3), dtype=np.int64)
    n_samp = max(1, int(math.ceil(kin.step_len / kin.sample_spacing - 1e-9)))
    samples = np.zeros((H, 2, n_samp, 2))
    for h in range(H):
        for bi, b in enumerate((1, -1)):
            p = NeedlePose(origin.x, origin.y, h * q, b)
            e = arc_end(p, kin.step_len, kin.radius)
            end_dxy[h, bi] = (e.x, e.y)
            for k, d in enumerate(DEVIATIONS):
                th = normalize_angle(e.theta + d * q)
                new_h[h, bi, k] = int(round(th / q)) % H
            for i in range(n_samp):
                s = arc_end(p, min(kin.step_len, (i + 1) * kin.sample_spacing), kin.radius)
                samples[h, bi, i] = (s.x, s.y)
    return end_dxy, new_h, samples


def build_game(rmap: RegionMap, grid: Grid, kin: KinParams,
               start_pose: Optional[NeedlePose] = None,
               sweep_margin: float = 0.0, goal_margin: float = 0.0) -> GameGraph:
    """Needle game for the model map.

    ``sweep_margin`` inflates CR/DR discs during arc collision checks and
    ``goal_margin`` shrinks the target disc when deciding GOAL cells.
    """
    ws = grid.workspace
    if ws.width <= 0 or ws.height <= 0:
        raise UsageError("empty workspace")
    if rmap.tr is not None and not ws.contains(rmap.tr.center):
        raise UsageError("target region centre outside workspace")
    nx, ny = grid.shape
    H = grid.headings
    n = nx * ny * H * 2
    GOAL, DEAD = n, n + 1

    cx = ws.x0 + (np.arange(nx) + 0.5) * grid.cell
    cy = ws.y0 + (np.arange(ny) + 0.5) * grid.cell
    CX, CY = np.meshgrid(cx, cy, indexing="ij")
    centers = np.stack([CX, CY], axis=-1)

    end_dxy, new_h, samples = _motion_tables(grid, kin)

    goal_cells = np.zeros((nx, ny), dtype=bool)
    if rmap.tr is not None:
        reach = rmap.tr.radius - goal_margin
        if reach > 0:
            goal_cells = (CX - rmap.tr.center[0]) ** 2 + (CY - rmap.tr.center[1]) ** 2 <= reach * reach
    own_blocked = blocked_points(rmap, centers)
    goal_cells &= ~own_blocked

    # successor cell of every (cell, h, b)
    ex = CX[:, :, None, None] + end_dxy[None, None, :, :, 0]
    ey = CY[:, :, None, None] + end_dxy[None, None, :, :, 1]
    outside = (ex < ws.x0) | (ex > ws.x1) | (ey < ws.y0) | (ey > ws.y1)
    sx = np.minimum(np.floor((ex - ws.x0) / grid.cell).astype(np.int64), nx - 1)
    sy = np.minimum(np.floor((ey - ws.y0) / grid.cell).astype(np.int64), ny - 1)
    sx = np.clip(sx, 0, nx - 1)
    sy = np.clip(sy, 0, ny - 1)

    px = CX[:, :, None, None, None] + samples[None, None, :, :, :, 0]
    py = CY[:, :, None, None, None] + samples[None, None, :, :, :, 1]
    outside |= ((px < ws.x0) | (px > ws.x1) | (py < ws.y0) | (py > ws.y1)).any(axis=-1)
    sweep_hit = _sweep_blocked(rmap, CX, CY, samples, sweep_margin)

    dead_edge = outside | sweep_hit | own_blocked[:, :, None, None]
    goal_edge = goal_cells[sx, sy] & ~dead_edge

    # successor index per deviation; bevel is unchanged by a push
    bevel_bit = np.array([0, 1])[None, None, None, :, None]
    base = (sx[..., None] * ny + sy[..., None]) * H
    push = (base + new_h[None, None]) * 2 + bevel_bit
    push = np.where(dead_edge[..., None], DEAD, np.where(goal_edge[..., None], GOAL, push))
    # states standing on a goal cell stay there
    push = np.where(goal_cells[:, :, None, None, None], GOAL, push)
    push = push.reshape(n, 3)

    rot = np.arange(n, dtype=np.int64) ^ 1
    rot = rot.reshape(nx, ny, H, 2)
    rot = np.where(own_blocked[:, :, None, None], DEAD, rot)
    rot = np.where(goal_cells[:, :, None, None], GOAL, rot)
    rot = rot.reshape(n, 1)

    g = GameGraph(n, SYNTH_ACTIONS, (push, rot), (1, 0), None, grid, kin, rmap,
                  goal_cells, sweep_margin)
    if start_pose is not None:
        g.start = g.locate(start_pose)
    return g


def _sweep_blocked(rmap, CX, CY, samples, margin):
    nx, ny = CX.shape
    H = samples.shape[0]
    hit = np.zeros((nx, ny, H, 2), dtype=bool)
    if not rmap.crs:
        return hit
    span = float(np.abs(samples).max()) + 1.0
    cell = CX[1, 0] - CX[0, 0] if nx > 1 else 1.0
    cellh = CY[0, 1] - CY[0, 0] if ny > 1 else 1.0
    x0, y0 = CX[0, 0], CY[0, 0]
    for r in rmap.crs:
        reach = r.radius + rmap.dr_width + margin
        lo_x = max(0, int(math.floor((r.center[0] - reach - span - x0) / cell)))
        hi_x = min(nx, int(math.ceil((r.center[0] + reach + span - x0) / cell)) + 1)
        lo_y = max(0, int(math.floor((r.center[1] - reach - span - y0) / cellh)))
        hi_y = min(ny, int(math.ceil((r.center[1] + reach + span - y0) / cellh)) + 1)
        if lo_x >= hi_x or lo_y >= hi_y:
            continue
        bx = CX[lo_x:hi_x, lo_y:hi_y][:, :, None, None, None] + samples[None, None, ..., 0]
        by = CY[lo_x:hi_x, lo_y:hi_y][:, :, None, None, None] + samples[None, None, ..., 1]
        d2 = (bx - r.center[0]) ** 2 + (by - r.center[1]) ** 2
        hit[lo_x:hi_x, lo_y:hi_y] |= (d2 <= reach * reach).any(axis=-1)
    return hit


@dataclass
class Strategy:
    """Attractor strategy: allowed actions strictly decrease the attractor rank."""

    graph: GameGraph
    rank: np.ndarray
    allowed: np.ndarray
    iterations: int = 0

    @property
    def winning(self) -> np.ndarray:
        return self.rank < UNREACHED

    def is_winning(self, s: int) -> bool:
        return bool(self.rank[s] < UNREACHED)

    def allowed_actions(self, s: int) -> list:
        if s >= self.graph.n_states:
            return []
        return [a for a, ok in zip(self.graph.actions, self.allowed[s]) if ok]

    def winning_states(self) -> set:
        return set(np.flatnonzero(self.winning[: self.graph.n_states]).tolist())

    def as_dict(self) -> dict:
        return {s: frozenset(self.allowed_actions(s)) for s in sorted(self.winning_states())}


@dataclass
class NoStrategy:
    """Start state outside the winning region; keeps the attractor for inspection."""

    attractor: Strategy

    def __bool__(self) -> bool:
        return False


def attractor(g: GameGraph) -> Strategy:
    """Controller attractor of GOAL by backward counting.

    Each (state, action) keeps a count of environment answers not yet known
    to be winning; a state joins layer ``i`` once some count drops to zero
    after processing layer ``i - 1``.
    """
    n, A = g.n_states, len(g.actions)
    GOAL = g.GOAL
    rank = np.full(n + 2, UNREACHED, dtype=np.int64)
    rank[GOAL] = 0

    tgt_parts, src_parts = [], []
    count = np.zeros(n * A, dtype=np.int64)
    for ai, s in enumerate(g.succ):
        D = s.shape[1]
        tgt_parts.append(s.ravel())
        src_parts.append(np.repeat(np.arange(n, dtype=np.int64) * A + ai, D))
        count[ai::A] = D
    tgt = np.concatenate(tgt_parts)
    src = np.concatenate(src_parts)
    keep = tgt < n + 1  # DEAD answers never become winning
    tgt, src = tgt[keep], src[keep]
    order = np.argsort(tgt, kind="stable")
    tgt, src = tgt[order], src[order]
    offsets = np.searchsorted(tgt, np.arange(n + 2))

    frontier = np.array([GOAL])
    it = 0
    while frontier.size:
        it += 1
        lo, hi = offsets[frontier], offsets[frontier + 1]
        lens = hi - lo
        total = int(lens.sum())
        if total == 0:
            break
        idx = np.repeat(lo - np.cumsum(lens) + lens, lens) + np.arange(total)
        pairs = src[idx]
        np.subtract.at(count, pairs, 1)
        done = pairs[count[pairs] == 0]
        cand = np.unique(done // A)
        cand = cand[rank[cand] == UNREACHED]
        rank[cand] = it
        frontier = cand

    # allowed: every answer of the action has strictly smaller rank
    allowed = np.zeros((n, A), dtype=bool)
    for ai, s in enumerate(g.succ):
        worst = rank[s].max(axis=1)
        allowed[:, ai] = worst < rank[:n]
    allowed &= (rank[:n] < UNREACHED)[:, None]
    return Strategy(g, rank, allowed, it)


def solve(g: GameGraph) -> Union[Strategy, NoStrategy]:
    st = attractor(g)
    if g.start is not None and not st.is_winning(g.start):
        return NoStrategy(st)
    return st


def extract_plans(st: Strategy, start: int, max_plans: int,
                  start_pose: Optional[NeedlePose] = None) -> list:
    """Depth-first enumeration of nominal plans from ``start`` to GOAL.

    Push is tried before Rotate; the environment is assumed to answer with
    the nominal (zero) deviation.
    """
    g = st.graph
    if not st.is_winning(start):
        raise UsageError("start state is not winning")
    if max_plans < 1:
        return []
    plans: list = []
    acts: list = []
    states: list = [start]
    stack = [[start, 0]]
    while stack and len(plans) < max_plans:
        frame = stack[-1]
        s, k = frame
        if s == g.GOAL:
            plans.append(_make_plan(st, tuple(acts), tuple(states), start_pose))
            _pop(stack, acts, states)
            continue
        choices = [ai for ai in range(len(g.actions)) if st.allowed[s, ai]]
        if k >= len(choices):
            _pop(stack, acts, states)
            continue
        frame[1] += 1
        ai = choices[k]
        t = int(g.succ[ai][s, g.nominal[ai]])
        acts.append(g.actions[ai])
        states.append(t)
        stack.append([t, 0])
    return plans


def _pop(stack, acts, states):
    stack.pop()
    states.pop()
    if acts:
        acts.pop()


def _make_plan(st: Strategy, acts, states, start_pose) -> Plan:
    g = st.graph
    if g.kin is None:
        return Plan(acts, (), states)
    kin = g.kin
    pose = start_pose
    if pose is None:
        pose = representative(g.state(states[0]), g.grid)
    poses = [pose]
    for a in acts:
        if a is Action.PUSH:
            pose = arc_end(pose, kin.step_len, kin.radius)
        else:
            pose = NeedlePose(pose.x, pose.y, pose.theta, -pose.bevel)
        poses.append(pose)
    return Plan(acts, tuple(poses), states, kin.step_len, kin.radius)


def check_winning(st: Strategy, g: GameGraph, start: Optional[int] = None) -> bool:
    """Verify that every strategy-consistent play from ``start`` reaches GOAL.

    Explores all allowed actions and all environment answers; fails on DEAD,
    on a non-goal state without allowed actions, and on any cycle (a cycle
    admits a play that never reaches GOAL).
    """
    if start is None:
        start = g.start
    if start is None:
        raise UsageError("no start state given")
    GOAL, DEAD = g.GOAL, g.DEAD
    WHITE, GREY, BLACK = 0, 1, 2
    color: dict = {}
    stack = [(start, None)]
    while stack:
        s, it = stack.pop()
        if it is None:
            if s == GOAL:
                continue
            if s == DEAD:
                return False
            c = color.get(s, WHITE)
            if c == GREY:
                return False
            if c == BLACK:
                continue
            acts = [ai for ai in range(len(g.actions)) if s < g.n_states and st.allowed[s, ai]]
            if not acts:
                return False
            color[s] = GREY
            succs = []
            for ai in acts:
                succs.extend(int(t) for t in g.succ[ai][s])
            it = iter(succs)
        nxt = next(it, None)
        if nxt is None:
            color[s] = BLACK
            continue
        stack.append((s, it))
        if nxt == GOAL:
            continue
        if nxt == DEAD or color.get(nxt, WHITE) == GREY:
            return False
        if color.get(nxt, WHITE) == WHITE:
            stack.append((nxt, None))
    return True


def dump_game(g: GameGraph, st: Strategy) -> dict:
    """Structured summary of a game and its winning region."""
    win = sorted(st.winning_states())
    out = {
        "n_states": g.n_states,
        "actions": [a.value for a in g.actions],
        "start": g.start,
        "start_winning": bool(g.start is not None and st.is_winning(g.start)),
        "winning_count": len(win),
        "iterations": st.iterations,
        "dead_edges": int(sum((s == g.DEAD).sum() for s in g.succ)),
        "goal_edges": int(sum((s == g.GOAL).sum() for s in g.succ)),
    }
    states = []
    for s in win:
        entry = {"index": s, "rank": int(st.rank[s]),
                 "allowed": [a.value for a in st.allowed_actions(s)]}
        if g.grid is not None:
            entry["state"] = list(g.state(s))
        states.append(entry)
    out["winning"] = states
    return out
