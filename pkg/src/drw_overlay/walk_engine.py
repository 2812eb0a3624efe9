"""Single-walker engine: tabu growth, neighborhood marking, guided extension.

A walk recruits nodes one at a time starting from its initiator. Guided
("directional") walks mark the neighborhoods of nodes behind the head and
extend to a candidate with minimum overlap against the marked region, which
pushes the walk away from where it has already been. Pure walks pick
uniformly. Either way a candidate already recruited by another walk is taken
immediately and becomes a broker, terminating the walk.

Candidates are the head's neighbors that are not yet members of this walk
(self-avoidance). When no candidate exists the head retreats one recruited
node per step; retreating past the initiator exhausts the walk.

Cost bookkeeping follows the marking discipline in which, on each normal
extension step, the neighborhood of the node *behind* the head is folded
into the marked set before candidates are scored. The head's own
neighborhood is therefore never counted against its candidates. An eager
variant (mark every recruited node's neighborhood on arrival) is available
via ``marking="eager"`` for sensitivity runs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geom_graph import Network

# Strategy kinds (also the CLI tokens).
PURE = "prw"
FIRST_NEIGHBORHOOD = "drw"
TWO_HOP = "twohop"
WEIGHTED = "weighted"
STRATEGY_KINDS = (FIRST_NEIGHBORHOOD, PURE, TWO_HOP, WEIGHTED)

# Walk statuses.
ACTIVE = "active"
INTERSECTED = "intersected"
EXHAUSTED = "exhausted"

# Step outcome kinds.
EXTENDED = "extended"
INTERSECTED_STEP = "intersected"
BACKTRACKED = "backtracked"
EXHAUSTED_STEP = "exhausted"

MARKING_MODES = ("lagged", "eager")


class IsolatedInitiator(RuntimeError):
    """Walk started on a degree-zero node."""


class WalkNotActive(RuntimeError):
    """step() called on a walk that already terminated."""


class StepBudgetExceeded(RuntimeError):
    def __init__(self, walk_id: int, budget: int):
        super().__init__(f"walk {walk_id} did not terminate within {budget} steps")
        self.walk_id = walk_id
        self.budget = budget


def default_step_budget(n: int) -> int:
    """Per-walk step allowance used when a config leaves the budget unset."""
    return 50 * n


@dataclass(frozen=True)
class CostStrategy:
    """Candidate scoring rule.

    kind "drw"      : overlap with the marked set, |N(v) & marked|
    kind "prw"      : no scoring, uniform choice
    kind "twohop"   : overlap with the neighborhood of the node behind the
                      head, |N(v) & N(behind)| (no marked set needed)
    kind "weighted" : alpha*|N(v) & marked| + beta*|N(v) & marked2| where
                      marked2 holds the two-hop fringe of marked nodes
    """

    kind: str
    alpha: float = 1.0
    beta: float = 1.0

    def __post_init__(self):
        if self.kind not in STRATEGY_KINDS:
            raise ValueError(f"unknown strategy {self.kind!r}, expected one of {STRATEGY_KINDS}")
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("alpha and beta must be non-negative")

    @property
    def needs_marks(self) -> bool:
        return self.kind in (FIRST_NEIGHBORHOOD, WEIGHTED)

    @property
    def needs_second_marks(self) -> bool:
        return self.kind == WEIGHTED

    @property
    def label(self) -> str:
        if self.kind == WEIGHTED and (self.alpha, self.beta) != (1.0, 1.0):
            return f"weighted-a{self.alpha:g}-b{self.beta:g}"
        return self.kind


def parse_strategy(token: str, alpha: float = 1.0, beta: float = 1.0) -> CostStrategy:
    """Map a CLI token to a strategy; alpha/beta only matter for 'weighted'."""
    token = token.strip().lower()
    if token not in STRATEGY_KINDS:
        raise ValueError(f"unknown strategy {token!r}, expected one of {STRATEGY_KINDS}")
    if token == WEIGHTED:
        return CostStrategy(WEIGHTED, alpha=alpha, beta=beta)
    return CostStrategy(token)


@dataclass(frozen=True)
class StepOutcome:
    """What a single step() call did.

    kind "extended"    : node appended, walk still active
    kind "intersected" : node appended, it already belonged to other_walk
    kind "backtracked" : no candidates, head moved back to 1-based new_cursor
    kind "exhausted"   : no candidates at the initiator, walk dead
    """

    kind: str
    node: int | None = None
    other_walk: int | None = None
    new_cursor: int | None = None


@dataclass(frozen=True)
class TraceRecord:
    walk: int
    step: int
    outcome: str
    node: int | None
    cursor: int
    cost: float | None


@dataclass
class WalkState:
    """One walker. path is in recruitment order and never shrinks.

    parents[i] is the path index the i-th node was recruited from (-1 for
    the initiator), so the traced edges stay well defined even after
    backtracking. cursor is the 1-based position of the current head;
    cursor == len(path) except midway through a retreat.
    """

    id: int
    rng: np.random.Generator
    path: list[int] = field(default_factory=list)
    parents: list[int] = field(default_factory=list)
    cursor: int = 0
    members: set[int] = field(default_factory=set)
    marked: set[int] = field(default_factory=set)
    marked2: set[int] = field(default_factory=set)
    status: str = ACTIVE
    broker: int | None = None
    steps: int = 0
    backtracks: int = 0
    maintain_marks: bool = True
    maintain_second: bool = False
    marking: str = "lagged"
    free_roam: bool = False
    _retreating: bool = field(default=False, repr=False)

    @property
    def initiator(self) -> int:
        return self.path[0]

    @property
    def head(self) -> int:
        """Current extension source (1-based cursor into the recruitment path)."""
        return self.path[self.cursor - 1]


def cost_first_neighborhood(walk: WalkState, net: Network, v: int) -> int:
    """Overlap of v's neighborhood with the walk's marked set."""
    marked = walk.marked
    return sum(1 for u in net.neighbors(v) if u in marked)


def cost_two_hop(net: Network, behind: int, v: int) -> int:
    """Common neighbors of v and the node behind the head."""
    back = set(net.neighbors(behind))
    return sum(1 for u in net.neighbors(v) if u in back)


def cost_weighted(walk: WalkState, net: Network, v: int,
                  alpha: float, beta: float) -> float:
    """alpha * first-ring overlap + beta * second-ring overlap."""
    first = 0
    second = 0
    for u in net.neighbors(v):
        if u in walk.marked:
            first += 1
        if u in walk.marked2:
            second += 1
    return alpha * first + beta * second


def _mark_neighborhood(walk: WalkState, net: Network, node: int) -> None:
    if not walk.maintain_marks:
        return
    nbrs = net.neighbors(node)
    walk.marked.update(nbrs)
    if walk.maintain_second:
        for u in nbrs:
            walk.marked2.update(net.neighbors(u))


def _append(walk: WalkState, net: Network, node: int, parent_index: int) -> None:
    walk.path.append(node)
    walk.parents.append(parent_index)
    walk.members.add(node)
    walk.cursor = len(walk.path)
    walk._retreating = False
    if walk.marking == "eager":
        _mark_neighborhood(walk, net, node)


def init_walk(net: Network, initiator: int, walk_id: int, registry,
              rng_seed, *, strategy: CostStrategy | None = None,
              marking: str = "lagged", free_roam: bool = False,
              trace: list | None = None) -> tuple[WalkState, StepOutcome | None]:
    """Create a walk and recruit its second node.

    The second node is drawn uniformly from the initiator's neighbors. Two
    shortcuts apply first: if the initiator already belongs to another walk
    the new walk is born intersected at the initiator itself, and if some
    neighbor already belongs to another walk the walk takes it immediately
    (lowest id first). Returns (walk, outcome) where outcome is the
    intersection if one of the shortcuts fired, else None.

    rng_seed may be an int or a ready np.random.Generator.
    """
    if marking not in MARKING_MODES:
        raise ValueError(f"unknown marking mode {marking!r}")
    if isinstance(rng_seed, np.random.Generator):
        gen = rng_seed
    else:
        gen = np.random.default_rng(np.random.SeedSequence(int(rng_seed)))
    walk = WalkState(id=walk_id, rng=gen, marking=marking, free_roam=free_roam)
    if strategy is not None:
        walk.maintain_marks = strategy.needs_marks
        walk.maintain_second = strategy.needs_second_marks
    _append(walk, net, initiator, parent_index=-1)

    owner = registry.other_walk_at(initiator, walk_id)
    registry.register(initiator, walk_id)
    if owner is not None:
        walk.status = INTERSECTED
        walk.broker = initiator
        out = StepOutcome(INTERSECTED_STEP, node=initiator, other_walk=owner)
        _trace(trace, walk, out, cost=None)
        return walk, out

    nbrs = net.neighbors(initiator)
    if not nbrs:
        raise IsolatedInitiator(f"initiator {initiator} has no neighbors")
    for v in nbrs:
        owner = registry.other_walk_at(v, walk_id)
        if owner is not None:
            _append(walk, net, v, parent_index=0)
            registry.register(v, walk_id)
            walk.status = INTERSECTED
            walk.broker = v
            out = StepOutcome(INTERSECTED_STEP, node=v, other_walk=owner)
            _trace(trace, walk, out, cost=None)
            return walk, out
    v = nbrs[int(walk.rng.integers(len(nbrs)))]
    _append(walk, net, v, parent_index=0)
    registry.register(v, walk_id)
    _trace(trace, walk, StepOutcome(EXTENDED, node=v), cost=None)
    return walk, None


def step(walk: WalkState, net: Network, registry,
         strategy: CostStrategy, trace: list | None = None) -> StepOutcome:
    """Advance the walk by one transition and report what happened.

    A normal step marks the neighborhood of the node behind the head, then
    scores the head's unvisited neighbors. A step that finds no candidate
    only retreats the cursor; the next call resumes from the new head
    without marking again. Ties (and the pure strategy) use the walk's rng.
    """
    if walk.status != ACTIVE:
        raise WalkNotActive(f"walk {walk.id} is {walk.status}")
    if strategy.needs_second_marks and not walk.maintain_second:
        raise ValueError("walk was initialized without second-ring marks")
    walk.steps += 1

    if walk.free_roam and strategy.kind == PURE:
        return _free_step(walk, net, registry, trace)

    if not walk._retreating:
        # Lagged discipline: fold in the neighborhood one position behind
        # the head. Under eager marking this is already a subset.
        _mark_neighborhood(walk, net, walk.path[walk.cursor - 2])
        walk.cursor += 1

    src_index = walk.cursor - 2
    src = walk.path[src_index]
    members = walk.members
    candidates = [v for v in net.neighbors(src) if v not in members]

    if not candidates:
        if walk.cursor == 2:
            walk.status = EXHAUSTED
            walk._retreating = False
            out = StepOutcome(EXHAUSTED_STEP)
            _trace(trace, walk, out, cost=None)
            return out
        walk.cursor -= 1
        walk.backtracks += 1
        walk._retreating = True
        out = StepOutcome(BACKTRACKED, new_cursor=walk.cursor)
        _trace(trace, walk, out, cost=None)
        return out

    # A candidate owned by another walk wins outright; scan in id order.
    for v in candidates:
        owner = registry.other_walk_at(v, walk.id)
        if owner is not None:
            _append(walk, net, v, src_index)
            registry.register(v, walk.id)
            walk.status = INTERSECTED
            walk.broker = v
            out = StepOutcome(INTERSECTED_STEP, node=v, other_walk=owner)
            _trace(trace, walk, out, cost=None)
            return out

    chosen_cost: float | None = None
    if strategy.kind == PURE:
        v = candidates[int(walk.rng.integers(len(candidates)))]
    else:
        if strategy.kind == FIRST_NEIGHBORHOOD:
            costs = [cost_first_neighborhood(walk, net, c) for c in candidates]
        elif strategy.kind == TWO_HOP:
            behind = set(net.neighbors(walk.path[src_index - 1])) if src_index > 0 else set()
            costs = [sum(1 for u in net.neighbors(c) if u in behind) for c in candidates]
        else:
            costs = [cost_weighted(walk, net, c, strategy.alpha, strategy.beta)
                     for c in candidates]
        low = min(costs)
        best = [c for c, cost in zip(candidates, costs) if cost == low]
        v = best[int(walk.rng.integers(len(best)))]
        chosen_cost = low

    _append(walk, net, v, src_index)
    registry.register(v, walk.id)
    out = StepOutcome(EXTENDED, node=v)
    _trace(trace, walk, out, cost=chosen_cost)
    return out


def _free_step(walk: WalkState, net: Network, registry,
               trace: list | None) -> StepOutcome:
    """Pure walk without tabu: revisits allowed, path may repeat nodes."""
    src = walk.path[-1]
    nbrs = net.neighbors(src)
    for v in nbrs:
        owner = registry.other_walk_at(v, walk.id)
        if owner is not None:
            _append(walk, net, v, len(walk.path) - 1)
            registry.register(v, walk.id)
            walk.status = INTERSECTED
            walk.broker = v
            out = StepOutcome(INTERSECTED_STEP, node=v, other_walk=owner)
            _trace(trace, walk, out, cost=None)
            return out
    v = nbrs[int(walk.rng.integers(len(nbrs)))]
    _append(walk, net, v, len(walk.path) - 1)
    registry.register(v, walk.id)
    out = StepOutcome(EXTENDED, node=v)
    _trace(trace, walk, out, cost=None)
    return out


def run_walk_until_stop(walk: WalkState, net: Network, registry,
                        strategy: CostStrategy, step_budget: int,
                        trace: list | None = None) -> WalkState:
    """Step the walk until it intersects or exhausts, or raise on budget."""
    while walk.status == ACTIVE:
        if walk.steps >= step_budget:
            raise StepBudgetExceeded(walk.id, step_budget)
        step(walk, net, registry, strategy, trace)
    return walk


def _trace(trace: list | None, walk: WalkState,
           out: StepOutcome, cost: float | None) -> None:
    if trace is None:
        return
    trace.append(TraceRecord(walk=walk.id, step=walk.steps, outcome=out.kind,
                             node=out.node, cursor=walk.cursor, cost=cost))
