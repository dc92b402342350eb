"""Motion states, transitioning actions and the legal-transition graph.

Four states (walking, standing, sitting, laying) are connected by actions.
Every action exists once per direction group (toward / away from the
radar); the two groups share an identical graph and are bridged only by
turning around while standing.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from enum import Enum
from typing import Iterable

from .errors import SequenceError, TransitionError


class State(str, Enum):
    WS = "WS"
    STS = "StS"
    SIS = "SiS"
    LS = "LS"


class Group(str, Enum):
    TOWARD = "T"
    AWAY = "A"

    def mirrored(self) -> "Group":
        return Group.AWAY if self is Group.TOWARD else Group.TOWARD


class Action(str, Enum):
    WALK_STOP = "walking-stop"
    WALK_BEND = "walking-bend"
    WALK_FALL = "walking-fall"
    SIT_DOWN = "sitting-down"
    BEND_STANDING = "bending-while-standing"
    FALL_STANDING = "falling-from-standing"
    STAND_FROM_FALL = "standing-from-falling"
    STAND_FROM_SIT = "standing-from-sitting"
    BEND_SITTING = "bending-from-sitting"
    STAND_UP_WALK = "standing-up-walking"
    START_WALK = "start-walking"


# (from_state, to_state) per action; identical in both groups.
EDGES: dict[Action, tuple[State, State]] = {
    Action.WALK_STOP: (State.WS, State.STS),
    Action.WALK_BEND: (State.WS, State.WS),
    Action.WALK_FALL: (State.WS, State.LS),
    Action.SIT_DOWN: (State.STS, State.SIS),
    Action.BEND_STANDING: (State.STS, State.STS),
    Action.FALL_STANDING: (State.STS, State.LS),
    Action.START_WALK: (State.STS, State.WS),
    Action.STAND_FROM_SIT: (State.SIS, State.STS),
    Action.BEND_SITTING: (State.SIS, State.SIS),
    Action.STAND_UP_WALK: (State.SIS, State.WS),
    Action.STAND_FROM_FALL: (State.LS, State.STS),
}

FALL_ACTIONS = frozenset({Action.WALK_FALL, Action.FALL_STANDING})

_ACTION_ORDER = {a: i for i, a in enumerate(Action)}
_GROUP_ORDER = {Group.TOWARD: 0, Group.AWAY: 1}


@dataclass(frozen=True)
class MotionState:
    state: State
    group: Group = Group.TOWARD

    def __str__(self) -> str:
        return f"{self.group.value}-{self.state.value}"


@functools.total_ordering
@dataclass(frozen=True)
class ActionClass:
    action: Action
    group: Group = Group.TOWARD

    @property
    def from_state(self) -> MotionState:
        return MotionState(EDGES[self.action][0], self.group)

    @property
    def to_state(self) -> MotionState:
        return MotionState(EDGES[self.action][1], self.group)

    @property
    def is_fall(self) -> bool:
        return self.action in FALL_ACTIONS

    @property
    def label(self) -> str:
        return f"{self.group.value}-{self.action.value}"

    @classmethod
    def parse(cls, label: str) -> "ActionClass":
        try:
            g, a = label.split("-", 1)
            return cls(Action(a), Group(g))
        except ValueError:
            raise SequenceError(f"unknown action class label {label!r}") from None

    def _key(self) -> tuple[int, int]:
        return (_GROUP_ORDER[self.group], _ACTION_ORDER[self.action])

    def __lt__(self, other: "ActionClass") -> bool:
        if not isinstance(other, ActionClass):
            return NotImplemented
        return self._key() < other._key()

    def __str__(self) -> str:
        return self.label


ClassSet = frozenset  # frozenset[ActionClass]


def all_classes(groups: Iterable[Group] = (Group.TOWARD, Group.AWAY)) -> list[ActionClass]:
    return sorted(ActionClass(a, g) for g in groups for a in Action)


def allowed_forward(s: MotionState) -> frozenset[ActionClass]:
    """Actions that can follow state ``s`` (out-edges)."""
    return frozenset(ActionClass(a, s.group) for a, (src, _) in EDGES.items() if src == s.state)


def allowed_reverse(s: MotionState) -> frozenset[ActionClass]:
    """Actions that can lead into state ``s`` (in-edges)."""
    return frozenset(ActionClass(a, s.group) for a, (_, dst) in EDGES.items() if dst == s.state)


def apply_transition(s: MotionState, a: ActionClass) -> MotionState:
    if a.group != s.group or EDGES[a.action][0] != s.state:
        raise TransitionError(f"illegal transition: {a.label} from state {s}")
    return a.to_state


def mirror_group(a: ActionClass) -> ActionClass:
    return ActionClass(a.action, a.group.mirrored())


def turn_around(s: MotionState) -> MotionState:
    """Cross-group bridge: only possible while standing, takes no time."""
    if s.state != State.STS:
        raise TransitionError(f"turning around requires standing, got {s}")
    return MotionState(State.STS, s.group.mirrored())


# Candidate sets used at the decision points of the two-way protocol.

def post_walk_candidates(group: Group) -> frozenset[ActionClass]:
    """Walking ends in an in-place state: the out-edges of WS that leave WS."""
    return frozenset(a for a in allowed_forward(MotionState(State.WS, group))
                     if a.to_state.state != State.WS)


def in_place_candidates(states: Iterable[MotionState]) -> frozenset[ActionClass]:
    """In-place actions out of any of ``states`` (never entering WS)."""
    out: set[ActionClass] = set()
    for s in states:
        out |= {a for a in allowed_forward(s) if a.to_state.state != State.WS}
    return frozenset(out)


def pre_walk_candidates(group: Group) -> frozenset[ActionClass]:
    """Actions that start a walk from an in-place state."""
    return frozenset(a for a in allowed_reverse(MotionState(State.WS, group))
                     if a.from_state.state != State.WS)


def reverse_candidates(entered: MotionState, from_walk: bool = False) -> frozenset[ActionClass]:
    """In-edges of ``entered``; restricted to edges from WS or from in-place states."""
    return frozenset(a for a in allowed_reverse(entered)
                     if (a.from_state.state == State.WS) == from_walk)


def protocol_candidates(a: ActionClass) -> frozenset[ActionClass]:
    """The restricted class set the two-way protocol uses when ``a`` is the truth.

    Mirrors where each action is decided: at the end of a walk, inside an
    in-place interval right after a walk (standing or laying both possible),
    inside an in-place interval of a sitting person, or at the start of a walk.
    """
    g = a.group
    src = a.from_state.state
    if src == State.WS:
        if a.to_state.state == State.WS:
            return allowed_forward(a.from_state)
        return post_walk_candidates(g)
    if a.to_state.state == State.WS:
        return pre_walk_candidates(g)
    if src in (State.STS, State.LS):
        return in_place_candidates(t.to_state for t in post_walk_candidates(g))
    return in_place_candidates([a.from_state])


# Segment kinds of a scenario: either a dwell in a state or an action.
DWELLS = {"walk": State.WS, "stand": State.STS, "sit": State.SIS, "lay": State.LS}


def validate_sequence(kinds: Iterable[str], group: Group) -> MotionState:
    """Check that a list of dwell/action names is legal; returns the final state."""
    current: MotionState | None = None
    for kind in kinds:
        if kind in DWELLS:
            target = MotionState(DWELLS[kind], group)
            if current is not None and current != target:
                raise SequenceError(f"dwell '{kind}' cannot follow state {current} without an action")
            current = target
            continue
        try:
            a = ActionClass(Action(kind), group)
        except ValueError:
            raise SequenceError(f"unknown segment kind {kind!r}") from None
        if current is None:
            current = a.from_state
        try:
            current = apply_transition(current, a)
        except TransitionError as exc:
            raise SequenceError(f"{current} -> {a.label}: {exc}") from None
    if current is None:
        raise SequenceError("empty scenario")
    return current
