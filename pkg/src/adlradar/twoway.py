"""Forward/reverse decision protocol over a segmented recording.

Forward in time, every decision point is classified against the actions
that are legal from the state the person is in: the end of a walk, each
power burst inside an in-place interval, and the start of the next walk.
Once a walk start is recognised with a clear vote, the in-place motion
that preceded it is classified again, this time against the actions that
can lead into the state the walk started from, and the two verdicts are
reconciled.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from typing import Callable

from .classify import KnnModel, knn_predict
from .errors import InternalError
from .features import FeatureVector
from .segmentation import TO_IN_PLACE, Breakpoint, EventInterval, SegmentTimeline
from .states import (ActionClass, Group, MotionState, State, allowed_forward,
                     apply_transition, in_place_candidates, post_walk_candidates,
                     pre_walk_candidates, reverse_candidates, turn_around)

TURN_AROUND = "turn-around"

# (t0, duration_s) -> fused feature vector of that window
WindowFeatures = Callable[[float, float], FeatureVector]


@dataclass(frozen=True)
class DecisionConfig:
    post_walk_before_s: float = 1.5
    post_walk_after_s: float = 0.5
    pre_walk_s: float = 3.0
    # in-place windows: forward anchored at the burst onset, reverse at its offset
    in_place_lead_s: float = 0.5
    in_place_s: float = 2.0
    reverse_min_share: float = 0.6

    def post_walk_window(self, t1: float) -> tuple[float, float]:
        return t1 - self.post_walk_before_s, self.post_walk_before_s + self.post_walk_after_s

    def pre_walk_window(self, t4: float) -> tuple[float, float]:
        return t4, self.pre_walk_s

    def onset_window(self, onset: float) -> tuple[float, float]:
        return onset - self.in_place_lead_s, self.in_place_s

    def offset_window(self, offset: float) -> tuple[float, float]:
        return offset - (self.in_place_s - self.in_place_lead_s), self.in_place_s


@dataclass
class TimelineEntry:
    t: float
    state: MotionState
    action_in: ActionClass | str | None = None
    forward_label: ActionClass | None = None
    reverse_label: ActionClass | None = None
    conflict: bool = False
    window: tuple[float, float] | None = None
    kind: str = "start"  # start | post-walk | in-place | pre-walk | inferred | turn
    event: EventInterval | None = None

    def to_dict(self) -> dict:
        def lab(a):
            return None if a is None else (a if isinstance(a, str) else a.label)
        return {
            "t": round(float(self.t), 6),
            "state": self.state.state.value,
            "group": self.state.group.value,
            "action_in": lab(self.action_in),
            "forward_label": lab(self.forward_label),
            "reverse_label": lab(self.reverse_label),
            "conflict": bool(self.conflict),
        }


@dataclass
class StateTimeline:
    entries: list[TimelineEntry] = field(default_factory=list)

    @property
    def states(self) -> list[State]:
        return [e.state.state for e in self.entries]

    @property
    def actions(self) -> list[ActionClass]:
        return [e.action_in for e in self.entries if isinstance(e.action_in, ActionClass)]

    def compressed_states(self) -> list[State]:
        """State sequence with repeats (self-loops, turns) collapsed."""
        out: list[State] = []
        for s in self.states:
            if not out or out[-1] != s:
                out.append(s)
        return out

    def to_json(self) -> list[dict]:
        return [e.to_dict() for e in self.entries]

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2)


def check_timeline(tl: StateTimeline) -> None:
    """Raise InternalError unless every entry follows from its predecessor by a legal edge."""
    prev = None
    for e in tl.entries:
        if prev is not None:
            if not e.t > prev.t:
                raise InternalError(f"timeline times not increasing at t={e.t}")
            if e.action_in == TURN_AROUND:
                expected = turn_around(prev.state)
            elif isinstance(e.action_in, ActionClass):
                expected = apply_transition(prev.state, e.action_in)
            else:
                raise InternalError(f"entry at t={e.t} has no incoming action")
            if expected != e.state:
                raise InternalError(f"entry at t={e.t}: {e.state} does not follow from {prev.state}")
        prev = e


def shortest_path(src: MotionState, dst: MotionState) -> list[ActionClass]:
    """Fewest legal actions taking ``src`` to ``dst`` within one group."""
    if src.group != dst.group:
        raise InternalError("paths never cross groups")
    seen = {src}
    queue = deque([(src, [])])
    while queue:
        s, path = queue.popleft()
        if s == dst:
            return path
        for a in sorted(allowed_forward(s)):
            nxt = a.to_state
            if nxt not in seen:
                seen.add(nxt)
                queue.append((nxt, path + [a]))
    raise InternalError(f"no path from {src} to {dst}")


class _Decider:
    def __init__(self, seg: SegmentTimeline, fwd: KnnModel, rev: KnnModel,
                 features: WindowFeatures, cfg: DecisionConfig):
        self.seg, self.fwd, self.rev, self.features, self.cfg = seg, fwd, rev, features, cfg
        group = Group.TOWARD if seg.approaching else Group.AWAY
        first_bp = seg.breakpoints[0] if seg.breakpoints else None
        if first_bp is not None and first_bp.approaching is not None:
            group = Group.TOWARD if first_bp.approaching else Group.AWAY
        start = State.WS if seg.starts_translating else State.STS
        self.entries = [TimelineEntry(0.0, MotionState(start, group))]
        self.post_walk_idx: int | None = None  # entry index of the latest post-walk decision
        self.events_since_walk = 0

    @property
    def state(self) -> MotionState:
        return self.entries[-1].state

    def _predict(self, model: KnnModel, window, cands) -> tuple[ActionClass, float]:
        label, votes = knn_predict(model, self.features(*window), cands)
        if label not in cands:
            raise InternalError(f"classifier returned {label.label} outside the allowed set")
        return label, votes[label] / sum(votes.values())

    def _push(self, entry: TimelineEntry) -> None:
        last = self.entries[-1]
        if not entry.t > last.t:
            entry.t = last.t + 1e-3
        self.entries.append(entry)

    def _bridge(self, target: MotionState, t_end: float) -> None:
        """Insert inferred, flagged actions so the state reaches ``target`` before ``t_end``."""
        if self.state.group != target.group:
            self._bridge(MotionState(State.STS, self.state.group), t_end)
            self._push(TimelineEntry(self._between(t_end), turn_around(self.state), TURN_AROUND,
                                     kind="turn"))
        for a in shortest_path(self.state, target):
            self._push(TimelineEntry(self._between(t_end), a.to_state, a, conflict=True,
                                     kind="inferred"))

    def _between(self, t_end: float) -> float:
        t_last = self.entries[-1].t
        return t_last + 0.5 * (t_end - t_last) if t_end > t_last else t_last + 1e-3

    # decision points -------------------------------------------------

    def post_walk(self, bp: Breakpoint) -> None:
        group = self.state.group
        if bp.approaching is not None:
            group = Group.TOWARD if bp.approaching else Group.AWAY
        if self.state != MotionState(State.WS, group):
            self._bridge(MotionState(State.STS, group), bp.slow_time_s)
            self._bridge(MotionState(State.WS, group), bp.slow_time_s)
        window = self.cfg.post_walk_window(bp.slow_time_s)
        label, _ = self._predict(self.fwd, window, post_walk_candidates(group))
        self._push(TimelineEntry(bp.slow_time_s, apply_transition(self.state, label), label,
                                 forward_label=label, window=window, kind="post-walk"))
        self.post_walk_idx = len(self.entries) - 1
        self.events_since_walk = 0

    def in_place(self, ev: EventInterval) -> None:
        first_after_walk = self.post_walk_idx is not None and self.events_since_walk == 0 \
            and self.post_walk_idx == len(self.entries) - 1
        if first_after_walk:
            # the walk ended in standing or laying; either may be the truth
            origins = [a.to_state for a in post_walk_candidates(self.state.group)]
        else:
            origins = [self.state]
        window = self.cfg.onset_window(ev.onset_s)
        label, _ = self._predict(self.fwd, window, in_place_candidates(origins))
        if label.from_state != self.state:
            if first_after_walk:
                self._revise_post_walk(label.from_state)
            else:
                self._bridge(label.from_state, ev.offset_s)
        self._push(TimelineEntry(ev.offset_s, apply_transition(self.state, label), label,
                                 forward_label=label, window=window, kind="in-place", event=ev))
        self.events_since_walk += 1

    def _revise_post_walk(self, needed: MotionState, idx: int | None = None) -> bool:
        """A later action shows the walk ended elsewhere: relabel that ending."""
        idx = self.post_walk_idx if idx is None else idx
        e = self.entries[idx]
        prev = self.entries[idx - 1].state
        fix = next((a for a in post_walk_candidates(prev.group) if a.to_state == needed), None)
        if fix is None:
            return False
        e.reverse_label = fix
        e.action_in, e.state, e.conflict = fix, fix.to_state, True
        return True

    def pre_walk(self, bp: Breakpoint) -> None:
        group = self.state.group
        if bp.approaching is not None:
            group = Group.TOWARD if bp.approaching else Group.AWAY
        window = self.cfg.pre_walk_window(bp.slow_time_s)
        cands = pre_walk_candidates(group)
        label, share = self._predict(self.rev, window, cands)
        origin = MotionState(label.from_state.state, self.state.group)
        conflict = False
        if share >= self.cfg.reverse_min_share:
            self._reverse_pass(origin)
        if self.state != origin and share < self.cfg.reverse_min_share:
            # not sure enough to overrule the forward path: keep the legal start if there is one
            legal = [a for a in cands if a.from_state.state == self.state.state]
            if legal:
                label, conflict = legal[0], True
                origin = self.state
        if self.state != origin:
            self._bridge(origin, bp.slow_time_s)
        if self.state.group != group:
            self._bridge(MotionState(State.STS, self.state.group), bp.slow_time_s)
            self._push(TimelineEntry(self._between(bp.slow_time_s), turn_around(self.state),
                                     TURN_AROUND, kind="turn"))
            if self.state.state != label.from_state.state:
                self._bridge(MotionState(label.from_state.state, group), bp.slow_time_s)
        final = ActionClass(label.action, group)
        self._push(TimelineEntry(bp.slow_time_s, apply_transition(self.state, final), final,
                                 reverse_label=final, conflict=conflict, window=window,
                                 kind="pre-walk"))
        self.post_walk_idx = None
        self.events_since_walk = 0

    def _reverse_pass(self, entered: MotionState) -> None:
        """Re-classify the last in-place decision with the actions leading into ``entered``."""
        idx = len(self.entries) - 1
        e = self.entries[idx]
        if e.kind not in ("in-place", "post-walk") or idx == 0:
            return
        from_walk = e.kind == "post-walk"
        cands = reverse_candidates(entered, from_walk=from_walk)
        if not cands:
            return
        if from_walk:
            window = e.window
        else:
            window = self.cfg.offset_window(e.event.offset_s)
        rlabel, _ = self._predict(self.rev, window, cands)
        e.reverse_label = rlabel
        if rlabel == e.action_in:
            return
        e.conflict = True
        contested = {rlabel} | ({e.action_in} if isinstance(e.action_in, ActionClass) else set())
        if self.rev.mean_accuracy(contested) <= self.fwd.mean_accuracy(contested):
            return
        prev = self.entries[idx - 1]
        if rlabel.from_state != prev.state:
            # a different origin is only acceptable when it merely changes how
            # the preceding walk ended
            if prev.kind != "post-walk" or not self._revise_post_walk(rlabel.from_state, idx - 1):
                return
        e.action_in, e.state = rlabel, rlabel.to_state


def two_way_decide(timeline: SegmentTimeline, fwd_model: KnnModel, rev_model: KnnModel,
                   features_per_window: WindowFeatures,
                   cfg: DecisionConfig | None = None) -> StateTimeline:
    """Walk the breakpoints and burst events in time order and build a legal state timeline."""
    cfg = cfg or DecisionConfig()
    d = _Decider(timeline, fwd_model, rev_model, features_per_window, cfg)
    items: list[tuple[float, int, object]] = []
    for bp in timeline.breakpoints:
        items.append((bp.slow_time_s, 0, bp))
    for ev in timeline.events:
        items.append((ev.onset_s, 1, ev))
    for _, _, item in sorted(items, key=lambda x: (x[0], x[1])):
        if isinstance(item, Breakpoint):
            if item.kind == TO_IN_PLACE:
                d.post_walk(item)
            else:
                d.pre_walk(item)
        else:
            d.in_place(item)
    out = StateTimeline(d.entries)
    check_timeline(out)
    return out


def replay_legal(tl: StateTimeline) -> bool:
    try:
        check_timeline(tl)
    except Exception:
        return False
    return True


__all__ = [
    "DecisionConfig", "StateTimeline", "TimelineEntry", "TURN_AROUND", "check_timeline",
    "shortest_path", "two_way_decide", "replay_legal",
]
