import numpy as np
import pytest

from adlradar.classify import knn_train
from adlradar.errors import InternalError
from adlradar.segmentation import TO_IN_PLACE, TO_TRANSLATION, Breakpoint, EventInterval, SegmentTimeline
from adlradar.states import Action, ActionClass, Group, MotionState, State, all_classes
from adlradar.twoway import (TURN_AROUND, DecisionConfig, StateTimeline, TimelineEntry,
                             check_timeline, replay_legal, shortest_path, two_way_decide)

T = Group.TOWARD
CLASSES = all_classes()


def ac(action, group=T):
    return ActionClass(action, group)


def one_hot(c):
    v = np.zeros(len(CLASSES))
    v[CLASSES.index(c)] = 1.0
    return v


def model(accuracy=0.5):
    samples = [(one_hot(c), c) for c in CLASSES for _ in range(5)]
    return knn_train(samples, k=5).with_accuracy({c.label: accuracy for c in CLASSES})


def scripted(script):
    """Window features that look exactly like the action nearest the window centre."""
    def features(t0, dur):
        centre = t0 + dur / 2
        return one_hot(min(script, key=lambda item: abs(item[0] - centre))[1])
    return features


def seg(duration, breakpoints=(), events=(), translating=True):
    return SegmentTimeline(duration, breakpoints=list(breakpoints), events=list(events),
                           starts_translating=translating, approaching=True)


def to_in_place(t):
    return Breakpoint(t, TO_IN_PLACE, approaching=True)


def to_walk(t):
    return Breakpoint(t, TO_TRANSLATION, approaching=True)


def test_shortest_paths():
    sts, ws, sis, ls = (MotionState(s) for s in (State.STS, State.WS, State.SIS, State.LS))
    assert shortest_path(sts, sts) == []
    assert shortest_path(sts, ls) == [ac(Action.FALL_STANDING)]
    assert [a.action for a in shortest_path(ws, sis)] == [Action.WALK_STOP, Action.SIT_DOWN]
    with pytest.raises(InternalError):
        shortest_path(sts, MotionState(State.STS, Group.AWAY))


def test_check_timeline_rejects_illegal_entries():
    sts = MotionState(State.STS)
    ok = StateTimeline([TimelineEntry(0.0, sts),
                        TimelineEntry(1.0, MotionState(State.SIS), ac(Action.SIT_DOWN))])
    check_timeline(ok)
    jump = StateTimeline([TimelineEntry(0.0, MotionState(State.WS)),
                          TimelineEntry(1.0, MotionState(State.SIS), ac(Action.SIT_DOWN))])
    with pytest.raises(Exception):
        check_timeline(jump)
    assert not replay_legal(jump)
    backwards = StateTimeline([TimelineEntry(1.0, sts),
                               TimelineEntry(0.5, MotionState(State.LS), ac(Action.FALL_STANDING))])
    with pytest.raises(InternalError):
        check_timeline(backwards)
    turn = StateTimeline([TimelineEntry(0.0, sts),
                          TimelineEntry(1.0, MotionState(State.STS, Group.AWAY), TURN_AROUND)])
    check_timeline(turn)


def test_walk_then_stop():
    tl = two_way_decide(seg(8.0, [to_in_place(4.5)]), model(), model(),
                        scripted([(4.0, ac(Action.WALK_STOP))]))
    assert tl.states == [State.WS, State.STS]
    assert tl.actions == [ac(Action.WALK_STOP)]
    # nothing comes after, so there is no reverse decision
    assert all(e.reverse_label is None and not e.conflict for e in tl.entries)


def test_fall_recovery_sequence():
    script = [(4.0, ac(Action.WALK_FALL)), (6.5, ac(Action.STAND_FROM_FALL)),
              (7.0, ac(Action.STAND_FROM_FALL)), (11.0, ac(Action.START_WALK))]
    s = seg(14.0, [to_in_place(4.5), to_walk(9.5)], [EventInterval(6.0, 7.5)])
    tl = two_way_decide(s, model(), model(), scripted(script))
    assert tl.states == [State.WS, State.LS, State.STS, State.WS]
    assert tl.actions == [ac(Action.WALK_FALL), ac(Action.STAND_FROM_FALL), ac(Action.START_WALK)]
    in_place = tl.entries[2]
    assert in_place.reverse_label == ac(Action.STAND_FROM_FALL) and not in_place.conflict


def test_missed_fall_is_revised_by_the_next_action():
    # the walk ending looks like a stop, but the person then gets up from the floor
    script = [(4.0, ac(Action.WALK_STOP)), (6.5, ac(Action.STAND_FROM_FALL))]
    s = seg(9.0, [to_in_place(4.5)], [EventInterval(6.0, 7.5)])
    tl = two_way_decide(s, model(), model(), scripted(script))
    assert tl.states == [State.WS, State.LS, State.STS]
    walk_end = tl.entries[1]
    assert walk_end.action_in == ac(Action.WALK_FALL)
    assert walk_end.forward_label == ac(Action.WALK_STOP)
    assert walk_end.conflict


def test_reverse_disagreement_is_flagged_but_must_stay_legal():
    # forward sees a bend; the reverse window sees a rise from sitting, which
    # cannot follow the standing start, so the forward verdict stays
    script = [(2.5, ac(Action.BEND_STANDING)), (4.5, ac(Action.STAND_FROM_SIT)),
              (7.5, ac(Action.START_WALK))]
    s = seg(10.0, [to_walk(6.0)], [EventInterval(2.0, 5.0)], translating=False)
    tl = two_way_decide(s, model(0.5), model(0.9), scripted(script))
    e = tl.entries[1]
    assert e.action_in == ac(Action.BEND_STANDING)
    assert e.reverse_label == ac(Action.STAND_FROM_SIT)
    assert e.conflict
    assert tl.states == [State.STS, State.STS, State.WS]


@pytest.mark.parametrize("rev_acc,expected", [
    (0.9, [State.STS, State.STS, State.WS]),
    (0.1, [State.STS, State.SIS, State.STS, State.WS]),
])
def test_reconciliation_follows_the_more_accurate_model(rev_acc, expected):
    # forward says sit-down, reverse says bend; a confident walk start follows
    script = [(2.5, ac(Action.SIT_DOWN)), (4.5, ac(Action.BEND_STANDING)),
              (7.5, ac(Action.START_WALK))]
    s = seg(10.0, [to_walk(6.0)], [EventInterval(2.0, 5.0)], translating=False)
    tl = two_way_decide(s, model(0.5), model(rev_acc), scripted(script))
    assert tl.states == expected
    assert tl.entries[1].conflict
    if rev_acc < 0.5:
        # the kept sit-down needs an inferred, flagged rise before walking
        bridge = tl.entries[2]
        assert bridge.kind == "inferred" and bridge.action_in == ac(Action.STAND_FROM_SIT)
        assert bridge.conflict
    check_timeline(tl)


def test_every_decision_is_from_the_allowed_set():
    rng = np.random.default_rng(0)
    for trial in range(40):
        script = [(t, CLASSES[rng.integers(len(CLASSES))]) for t in np.arange(0.0, 20.0, 0.5)]
        s = seg(20.0, [to_in_place(4.0), to_walk(12.0), to_in_place(16.0)],
                [EventInterval(6.0, 7.0), EventInterval(8.5, 10.0)])
        tl = two_way_decide(s, model(rng.random()), model(rng.random()), scripted(script))
        check_timeline(tl)
        kinds = [e.kind for e in tl.entries]
        assert kinds.count("post-walk") == 2 and kinds.count("pre-walk") == 1
        assert tl.entries[-1].state.state in (State.STS, State.LS)


def test_decision_windows():
    cfg = DecisionConfig()
    assert cfg.post_walk_window(5.0) == (3.5, 2.0)
    assert cfg.pre_walk_window(9.0) == (9.0, 3.0)
    assert cfg.onset_window(4.0) == (3.5, 2.0)
    assert cfg.offset_window(6.0) == (4.5, 2.0)


def test_timeline_json():
    tl = two_way_decide(seg(8.0, [to_in_place(4.5)]), model(), model(),
                        scripted([(4.0, ac(Action.WALK_FALL))]))
    d = tl.to_json()
    assert d[0] == {"t": 0.0, "state": "WS", "group": "T", "action_in": None,
                    "forward_label": None, "reverse_label": None, "conflict": False}
    assert d[1]["action_in"] == "T-walking-fall" and d[1]["state"] == "LS"
