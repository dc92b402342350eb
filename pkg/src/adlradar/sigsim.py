"""Synthetic FMCW returns from point scatterers following human-motion templates.

The generator works directly on the dechirped beat signal: a scatterer at
range r contributes, in fast time n and slow time m,

    A * exp(j*2*pi*n*r/(dr*N)) * exp(-j*4*pi*fc*r/c)

where dr = c/(2B).  The first factor is the beat tone alpha*tau sampled N
times per chirp; the second is the carrier phase, whose PRI-to-PRI rotation
is the Doppler shift.

Kinematics are planar: the person moves along the radar boresight (x) and
scatterers move in height (z).  Radar height equals standing torso height.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .errors import ConfigError, DurationError, SequenceError, ShapeError
from .states import (
    DWELLS,
    Action,
    ActionClass,
    Group,
    MotionState,
    State,
    validate_sequence,
)

C = 299_792_458.0
RADAR_HEIGHT_M = 1.1
TORSO_HEIGHT_M = {State.WS: 1.1, State.STS: 1.1, State.SIS: 0.7, State.LS: 0.25}


@dataclass(frozen=True)
class RadarConfig:
    center_frequency_hz: float = 25e9
    bandwidth_hz: float = 2e9
    pri_s: float = 1e-3
    samples_per_pri: int = 512
    num_pri: int = 8000
    tx_amplitude: float = 1.0

    def __post_init__(self):
        if self.center_frequency_hz <= 0 or self.bandwidth_hz <= 0 or self.pri_s <= 0:
            raise ConfigError("radar frequencies and PRI must be positive")
        if self.samples_per_pri < 2 or self.num_pri < 1:
            raise ConfigError("need samples_per_pri >= 2 and num_pri >= 1")

    @property
    def chirp_rate(self) -> float:
        return self.bandwidth_hz / self.pri_s

    @property
    def range_resolution(self) -> float:
        return C / (2.0 * self.bandwidth_hz)

    @property
    def wavelength(self) -> float:
        return C / self.center_frequency_hz

    @property
    def prf(self) -> float:
        return 1.0 / self.pri_s

    @property
    def duration_s(self) -> float:
        return self.num_pri * self.pri_s

    def doppler_hz(self, range_rate_mps):
        """Doppler shift of a scatterer closing at -range_rate (approach is positive)."""
        return -2.0 * np.asarray(range_rate_mps) * self.center_frequency_hz / C

    def with_duration(self, duration_s: float) -> "RadarConfig":
        return replace(self, num_pri=int(round(duration_s / self.pri_s)))


@dataclass(frozen=True, eq=False)
class ScattererTrajectory:
    """Per-PRI samples of one point scatterer.

    ``radial_velocity_mps`` is the range rate (positive when receding).
    """

    time_s: np.ndarray
    range_m: np.ndarray
    radial_velocity_mps: np.ndarray
    reflectivity: float = 1.0
    name: str = ""

    def __post_init__(self):
        n = len(self.time_s)
        if len(self.range_m) != n or len(self.radial_velocity_mps) != n:
            raise ShapeError("trajectory arrays must have equal length")
        if n > 1 and np.any(np.diff(self.time_s) <= 0):
            raise ShapeError("trajectory time must be strictly increasing")
        if np.any(self.range_m <= 0):
            raise ShapeError(f"scatterer '{self.name}' range must stay positive")

    def __len__(self) -> int:
        return len(self.time_s)


@dataclass(frozen=True)
class Segment:
    """One scenario segment: a dwell ('walk', 'stand', 'sit', 'lay') or an action name.

    Unset kinematic parameters fall back to the template defaults.
    """

    kind: str
    duration_s: float | None = None
    speed_mps: float | None = None
    drop_m: float | None = None
    limb_amp_m: float | None = None
    limb_freq_hz: float | None = None

    @property
    def action(self) -> Action | None:
        return None if self.kind in DWELLS else Action(self.kind)


@dataclass(frozen=True)
class MotionScenario:
    segments: tuple[Segment, ...]
    group: Group = Group.TOWARD
    start_range_m: float = 8.0
    seed: int = 0
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))
        if not self.segments:
            raise SequenceError("scenario has no segments")
        validate_sequence([s.kind for s in self.segments], self.group)
        for s in self.segments:
            if self.duration_of(s) <= 0:
                raise ConfigError(f"segment '{s.kind}' needs a positive duration")
        if self.start_range_m <= 0:
            raise ConfigError("start range must be positive")

    @staticmethod
    def duration_of(seg: Segment) -> float:
        if seg.duration_s is not None:
            return float(seg.duration_s)
        return TEMPLATES[seg.kind].duration_s

    @property
    def duration_s(self) -> float:
        return sum(self.duration_of(s) for s in self.segments)

    @property
    def class_sequence(self) -> list[ActionClass]:
        return [ActionClass(s.action, self.group) for s in self.segments if s.action is not None]


@dataclass(frozen=True)
class ComplexBaseband:
    data: np.ndarray
    config: RadarConfig

    def __post_init__(self):
        if self.data.ndim != 2 or self.data.shape != (self.config.samples_per_pri, self.config.num_pri):
            raise ShapeError(
                f"baseband shape {self.data.shape} does not match "
                f"({self.config.samples_per_pri}, {self.config.num_pri})")
        if not np.all(np.isfinite(self.data)):
            raise ShapeError("baseband contains non-finite samples")


# --------------------------------------------------------------------------
# kinematic templates

@dataclass(frozen=True)
class Template:
    duration_s: float
    drop_m: float = 0.0
    limb_amp_m: float = 0.0
    limb_freq_hz: float = 1.0


TEMPLATES: dict[str, Template] = {
    "walk": Template(4.0, limb_amp_m=0.15, limb_freq_hz=1.0),
    "stand": Template(2.0),
    "sit": Template(2.0),
    "lay": Template(2.0),
    Action.WALK_STOP.value: Template(1.0, limb_amp_m=0.1, limb_freq_hz=1.0),
    Action.WALK_BEND.value: Template(2.0, drop_m=0.35, limb_amp_m=0.06, limb_freq_hz=1.5),
    Action.WALK_FALL.value: Template(1.2, drop_m=0.85, limb_amp_m=0.22, limb_freq_hz=2.0),
    Action.SIT_DOWN.value: Template(2.0, drop_m=0.4, limb_amp_m=0.08, limb_freq_hz=1.0),
    Action.BEND_STANDING.value: Template(2.5, drop_m=0.35, limb_amp_m=0.05, limb_freq_hz=1.2),
    Action.FALL_STANDING.value: Template(1.5, drop_m=0.85, limb_amp_m=0.22, limb_freq_hz=2.0),
    Action.STAND_FROM_FALL.value: Template(3.0, drop_m=0.85, limb_amp_m=0.12, limb_freq_hz=1.2),
    Action.STAND_FROM_SIT.value: Template(1.8, drop_m=0.4, limb_amp_m=0.08, limb_freq_hz=1.0),
    Action.BEND_SITTING.value: Template(2.0, drop_m=0.25, limb_amp_m=0.05, limb_freq_hz=1.5),
    Action.STAND_UP_WALK.value: Template(2.2, drop_m=0.4, limb_amp_m=0.1, limb_freq_hz=1.0),
    Action.START_WALK.value: Template(1.0, limb_amp_m=0.12, limb_freq_hz=1.0),
}

DEFAULT_SPEED_MPS = 1.0
SCATTERERS = (("torso", 1.0), ("arm", 0.35), ("leg", 0.35))


def _ramp(tau, d, a=0.0, b=1.0):
    """Smooth 0->1 step over [a, b] (fractions of d); returns (pos, vel)."""
    span = (b - a) * d
    u = np.clip((tau - a * d) / span, 0.0, 1.0)
    pos = u - np.sin(2 * np.pi * u) / (2 * np.pi)
    vel = np.where((u > 0) & (u < 1), (1 - np.cos(2 * np.pi * u)) / span, 0.0)
    return pos, vel


def _ramp_area(tau, d, a=0.0, b=1.0):
    """Time integral of _ramp from 0 to tau; returns (pos, vel)."""
    span = (b - a) * d
    u = np.clip((tau - a * d) / span, 0.0, 1.0)
    inside = span * (u ** 2 / 2 + (np.cos(2 * np.pi * u) - 1) / (4 * np.pi ** 2))
    after = np.where(tau > b * d, tau - b * d, 0.0)
    pos = inside + after
    vel = u - np.sin(2 * np.pi * u) / (2 * np.pi)
    return pos, vel


def _bump(tau, d):
    u = tau / d
    return (1 - np.cos(2 * np.pi * u)) / 2, np.pi * np.sin(2 * np.pi * u) / d


def _osc(tau, d, amp, freq):
    """Limb swing that starts and ends at zero offset within the segment."""
    if amp == 0.0:
        z = np.zeros_like(tau)
        return z, z
    half_cycles = max(1, int(round(2 * freq * d)))
    f = half_cycles / (2 * d)
    w = 2 * np.pi * f
    return amp * np.sin(w * tau), amp * w * np.cos(w * tau)


@dataclass
class _Parts:
    """Torso displacement (x along heading, z absolute offset) plus limb offsets."""
    tx: tuple
    tz: tuple
    ax: tuple
    az: tuple
    lx: tuple
    lz: tuple


def _zero(tau):
    z = np.zeros_like(tau)
    return z, z


def _scale(pv, k):
    return pv[0] * k, pv[1] * k


def _add(*pvs):
    return sum(p[0] for p in pvs), sum(p[1] for p in pvs)


def _segment_parts(kind: str, tau: np.ndarray, d: float, speed: float, t: Template) -> _Parts:
    z0 = _zero(tau)
    osc = _osc(tau, d, t.limb_amp_m, t.limb_freq_hz)
    if kind == "walk":
        return _Parts((speed * tau, np.full_like(tau, speed)), z0,
                      osc, z0, _scale(osc, -1.3), z0)
    if kind in DWELLS:
        return _Parts(z0, z0, z0, z0, z0, z0)
    a = Action(kind)
    if a is Action.WALK_STOP:
        area = _ramp_area(tau, d)
        tx = (speed * (tau - area[0]), speed * (1 - area[1]))
        return _Parts(tx, z0, osc, z0, _scale(osc, -1.3), z0)
    if a is Action.WALK_BEND:
        b = _bump(tau, d)
        u = tau / d
        slow = (d * (u / 2 - np.sin(2 * np.pi * u) / (4 * np.pi)), b[0])
        tx = _add((speed * tau, np.full_like(tau, speed)), _scale(slow, -0.7 * speed), _scale(b, 0.15))
        return _Parts(tx, _scale(b, -t.drop_m), _add(_scale(b, 0.35), osc), _scale(b, -0.5),
                      _scale(osc, -1.3), z0)
    if a is Action.WALK_FALL:
        area = _ramp_area(tau, d)
        fall = _ramp(tau, d, 0.15, 0.75)
        tx = _add((speed * (tau - area[0]), speed * (1 - area[1])), _scale(fall, 0.8))
        return _Parts(tx, _scale(fall, -t.drop_m), osc, _scale(fall, 0.1), _scale(osc, 0.5), z0)
    if a is Action.SIT_DOWN:
        b = _bump(tau, d)
        r = _ramp(tau, d)
        return _Parts(_scale(b, -0.2), _scale(r, -t.drop_m), osc, z0, _scale(b, 0.3), _scale(r, 0.2))
    if a is Action.BEND_STANDING:
        b = _bump(tau, d)
        return _Parts(_scale(b, 0.25), _scale(b, -t.drop_m), _add(_scale(b, 0.4), osc),
                      _scale(b, -0.5), z0, z0)
    if a is Action.FALL_STANDING:
        fall = _ramp(tau, d, 0.1, 0.65)
        return _Parts(_scale(fall, 0.9), _scale(fall, -t.drop_m), osc, _scale(fall, 0.1),
                      _scale(osc, 0.4), z0)
    if a is Action.STAND_FROM_FALL:
        b = _bump(tau, d)
        r = _ramp(tau, d)
        return _Parts(_scale(b, -0.3), _scale(r, t.drop_m), osc, z0, _scale(osc, -0.8), z0)
    if a is Action.STAND_FROM_SIT:
        b = _bump(tau, d)
        r = _ramp(tau, d)
        return _Parts(_scale(b, 0.2), _scale(r, t.drop_m), osc, z0, _scale(b, -0.3), _scale(r, -0.2))
    if a is Action.BEND_SITTING:
        b = _bump(tau, d)
        return _Parts(_scale(b, 0.3), _scale(b, -t.drop_m), _add(_scale(b, 0.45), osc),
                      _scale(b, -0.4), z0, z0)
    if a is Action.STAND_UP_WALK:
        rise = _ramp(tau, d, 0.0, 0.5)
        lean = _bump(np.clip(tau, 0, 0.5 * d), 0.5 * d)
        lean = (lean[0], np.where(tau < 0.5 * d, lean[1], 0.0))
        acc = _ramp_area(tau, d, 0.3, 1.0)
        tx = _add(_scale(lean, 0.2), _scale(acc, speed))
        return _Parts(tx, _scale(rise, t.drop_m), osc, z0, _scale(osc, -1.3), z0)
    if a is Action.START_WALK:
        acc = _ramp_area(tau, d)
        return _Parts(_scale(acc, speed), z0, osc, z0, _scale(osc, -1.3), z0)
    raise SequenceError(f"no kinematic template for {kind!r}")


@dataclass(frozen=True, eq=False)
class _Motion:
    time_s: np.ndarray
    # scatterer name -> (range, range rate)
    tracks: dict
    bounds: list  # (start_s, end_s, Segment) per scenario segment


def _merged(seg: Segment, speed: float) -> tuple[Template, float]:
    t = TEMPLATES[seg.kind]
    t = Template(
        MotionScenario.duration_of(seg),
        t.drop_m if seg.drop_m is None else seg.drop_m,
        t.limb_amp_m if seg.limb_amp_m is None else seg.limb_amp_m,
        t.limb_freq_hz if seg.limb_freq_hz is None else seg.limb_freq_hz,
    )
    return t, speed if seg.speed_mps is None else seg.speed_mps


def _simulate(scenario: MotionScenario, pri_s: float) -> _Motion:
    heading = -1.0 if scenario.group is Group.TOWARD else 1.0
    n_total = int(round(scenario.duration_s / pri_s))
    time = np.arange(n_total) * pri_s
    cols = {k: np.zeros(n_total) for k in ("x", "vx", "z", "vz", "ax", "avx", "az", "avz",
                                           "lx", "lvx", "lz", "lvz")}
    state0 = MotionState(DWELLS[scenario.segments[0].kind], scenario.group) \
        if scenario.segments[0].kind in DWELLS \
        else ActionClass(Action(scenario.segments[0].kind), scenario.group).from_state
    x = math.sqrt(max(scenario.start_range_m ** 2 - (TORSO_HEIGHT_M[state0.state] - RADAR_HEIGHT_M) ** 2,
                      1e-6))
    z = TORSO_HEIGHT_M[state0.state]
    speed = next((s.speed_mps for s in scenario.segments if s.speed_mps is not None), DEFAULT_SPEED_MPS)
    bounds = []
    limb = {"ax": 0.0, "az": 0.0, "lx": 0.0, "lz": 0.0}
    t0 = 0.0
    for seg in scenario.segments:
        tmpl, speed = _merged(seg, speed)
        d = tmpl.duration_s
        i0, i1 = int(round(t0 / pri_s)), int(round((t0 + d) / pri_s))
        tau = time[i0:i1] - t0
        p = _segment_parts(seg.kind, tau, d, speed, tmpl)
        cols["x"][i0:i1] = x + heading * p.tx[0]
        cols["vx"][i0:i1] = heading * p.tx[1]
        cols["z"][i0:i1] = z + p.tz[0]
        cols["vz"][i0:i1] = p.tz[1]
        for key, pv in (("a", p.ax), ("l", p.lx)):
            cols[key + "x"][i0:i1] = heading * (limb[key + "x"] + pv[0])
            cols[key + "vx"][i0:i1] = heading * pv[1]
        for key, pv in (("a", p.az), ("l", p.lz)):
            cols[key + "z"][i0:i1] = limb[key + "z"] + pv[0]
            cols[key + "vz"][i0:i1] = pv[1]
        end = _segment_parts(seg.kind, np.array([d]), d, speed, tmpl)
        x = x + heading * float(end.tx[0][0])
        z = z + float(end.tz[0][0])
        # limbs keep the posture an action leaves them in
        for key, pv in (("ax", end.ax), ("az", end.az), ("lx", end.lx), ("lz", end.lz)):
            limb[key] += float(pv[0][0])
        bounds.append((t0, t0 + d, seg))
        t0 += d

    def track(px, pvx, pz, pvz):
        dz = pz - RADAR_HEIGHT_M
        r = np.hypot(px, dz)
        return r, (px * pvx + dz * pvz) / r

    tracks = {
        "torso": track(cols["x"], cols["vx"], cols["z"], cols["vz"]),
        "arm": track(cols["x"] + cols["ax"], cols["vx"] + cols["avx"],
                     cols["z"] - 0.1 + cols["az"], cols["vz"] + cols["avz"]),
        "leg": track(cols["x"] + cols["lx"], cols["vx"] + cols["lvx"],
                     0.5 * cols["z"] + cols["lz"], 0.5 * cols["vz"] + cols["lvz"]),
    }
    return _Motion(time, tracks, bounds)


def gen_trajectory(scenario: MotionScenario, cfg: RadarConfig | None = None) -> list[ScattererTrajectory]:
    """Per-scatterer trajectories (torso, arm, leg) sampled at the PRI."""
    cfg = cfg or RadarConfig()
    motion = _simulate(scenario, cfg.pri_s)
    return [ScattererTrajectory(motion.time_s, *motion.tracks[name], reflectivity=refl, name=name)
            for name, refl in SCATTERERS]


@dataclass(frozen=True)
class TruthBreakpoint:
    time_s: float
    kind: str  # "translation->in-place" | "in-place->translation"


@dataclass(frozen=True)
class ScenarioTruth:
    actions: list  # (ActionClass, start_s, end_s)
    breakpoints: list  # TruthBreakpoint
    states: list  # (time_s, MotionState)


def scenario_truth(scenario: MotionScenario, cfg: RadarConfig | None = None) -> ScenarioTruth:
    """Ground-truth action intervals, state entries and range-line breakpoints.

    A breakpoint is where the straight walking line, extrapolated, meets the
    resting range of the adjacent in-place interval, which is where a
    line detector on the range-map puts it.
    """
    cfg = cfg or RadarConfig()
    motion = _simulate(scenario, cfg.pri_s)
    r, rdot = motion.tracks["torso"]
    pri = cfg.pri_s
    last = len(r) - 1

    def at(t):
        return min(max(int(round(t / pri)), 0), last)

    actions, bps = [], []
    first = scenario.segments[0]
    state = MotionState(DWELLS[first.kind], scenario.group) if first.kind in DWELLS \
        else ActionClass(Action(first.kind), scenario.group).from_state
    states = [(0.0, state)]
    for t0, t1, seg in motion.bounds:
        if seg.action is None:
            continue
        a = ActionClass(seg.action, scenario.group)
        actions.append((a, t0, t1))
        states.append((t1, a.to_state))
        if a.from_state.state == State.WS and a.to_state.state != State.WS:
            v = rdot[at(t0) - 1] if at(t0) > 0 else rdot[at(t0)]
            if abs(v) > 1e-6:
                t_bp = t0 + (r[at(t1) - 1] - r[at(t0)]) / v
                bps.append(TruthBreakpoint(float(t_bp), "translation->in-place"))
        elif a.to_state.state == State.WS and a.from_state.state != State.WS:
            v = rdot[at(t1)]
            if abs(v) > 1e-6:
                t_bp = t1 + (r[at(t0)] - r[at(t1)]) / v
                bps.append(TruthBreakpoint(float(t_bp), "in-place->translation"))
    return ScenarioTruth(actions, bps, states)


def synth_baseband(trajectories: Sequence[ScattererTrajectory], cfg: RadarConfig,
                   noise_power: float = 0.0, seed: int = 0, chunk: int = 2048) -> ComplexBaseband:
    """Superpose dechirped scatterer returns and add circular white noise."""
    if noise_power < 0:
        raise ConfigError("noise power must be nonnegative")
    n_fast, m_slow = cfg.samples_per_pri, cfg.num_pri
    for tr in trajectories:
        if len(tr) < m_slow:
            raise DurationError(f"trajectory '{tr.name}' covers {len(tr)} PRIs, need {m_slow}")
    out = np.zeros((n_fast, m_slow), dtype=np.complex128)
    n = np.arange(n_fast)[:, None]
    dr = cfg.range_resolution
    k_phase = 4 * np.pi * cfg.center_frequency_hz / C
    for tr in trajectories:
        amp = cfg.tx_amplitude * tr.reflectivity
        for c0 in range(0, m_slow, chunk):
            r = tr.range_m[c0:c0 + chunk][None, :]
            out[:, c0:c0 + chunk] += amp * np.exp(1j * (2 * np.pi * n * (r / (dr * n_fast)) - k_phase * r))
    if noise_power > 0:
        rng = np.random.default_rng(seed)
        scale = math.sqrt(noise_power / 2)
        for c0 in range(0, m_slow, chunk):
            w = min(chunk, m_slow - c0)
            out[:, c0:c0 + w] += scale * (rng.standard_normal((n_fast, w))
                                          + 1j * rng.standard_normal((n_fast, w)))
    return ComplexBaseband(out, cfg)


def simulate(scenario: MotionScenario, cfg: RadarConfig | None = None,
             noise_power: float = 1e-3) -> ComplexBaseband:
    """Scenario to baseband, with ``num_pri`` set from the scenario duration."""
    cfg = (cfg or RadarConfig()).with_duration(scenario.duration_s)
    return synth_baseband(gen_trajectory(scenario, cfg), cfg, noise_power, seed=scenario.seed)
