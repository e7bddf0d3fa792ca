"""Runtime modal synthesis: impulses excite damped sinusoids scaled by the
per-mode transfer amplitude at the listener.

For an impulsive impact of amplitude g on mode i, the mode contributes

    |p_i(listener)| * (g_i / omega'_i) * exp(-xi_i*omega_i*(t-t0)) * sin(omega'_i*(t-t0))

for t >= t0, where g_i projects the impact (vertex, direction, amplitude)
onto the mode shape.  The transfer magnitude drops the radiated phase; at
audio rates and desk-scale sources this is the usual scalar-map compromise.
Overdamped modes (xi >= 1) and modes above Nyquist are skipped.
"""

from __future__ import annotations

import json
import wave
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InputError, NumericalError
from .eigensolve import ModeSet
from .ffat import FFATMap, query

__all__ = [
    "ForceEvent", "ListenerConfig", "AudioBuffer",
    "project_impulse", "render", "wav_export", "load_events", "save_events",
]

PEAK_DBFS = -1.0


@dataclass(frozen=True)
class ForceEvent:
    """Impulsive impact: time (s), grid vertex id, unit direction, amplitude."""

    time: float
    vertex: int
    direction: np.ndarray
    amplitude: float

    def __post_init__(self):
        d = np.asarray(self.direction, dtype=np.float64).reshape(3)
        n = float(np.linalg.norm(d))
        if abs(n - 1.0) > 1e-6:
            raise InputError(f"event direction must be unit length (|d|={n:.6g})")
        if self.time < 0:
            raise InputError("event time must be non-negative")
        if self.vertex < 0:
            raise InputError("event vertex id must be non-negative")
        object.__setattr__(self, "direction", d)


@dataclass(frozen=True)
class ListenerConfig:
    """Listener position relative to the object's bounding-box center."""

    position: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "position",
                           np.asarray(self.position, dtype=np.float64).reshape(3))


@dataclass
class AudioBuffer:
    sample_rate: int
    samples: np.ndarray

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1:
            raise InputError("audio buffer must be mono (1-D)")


def project_impulse(modes: ModeSet, event: ForceEvent) -> np.ndarray:
    """Modal gains g_i = amplitude * (mode shape at the struck vertex) . direction."""
    v = event.vertex
    if 3 * v + 2 >= modes.ndof:
        raise InputError(f"vertex id {v} outside the mode shapes ({modes.ndof // 3} vertices)")
    shape_at_vertex = modes.vectors[3 * v: 3 * v + 3, :]  # (3, k)
    return event.amplitude * (event.direction @ shape_at_vertex)


def render(modes: ModeSet, maps, events, listener: ListenerConfig,
           duration: float, sample_rate: int = 44100) -> AudioBuffer:
    """Superpose damped sinusoids for every (event, mode) pair.

    maps : one FFATMap per mode, aligned with the mode order.
    Events are independent; the output is the exact sum of single-event
    renders.  Skipped with a note: overdamped modes and modes above the
    Nyquist frequency.
    """
    if modes.material is None:
        raise InputError("rendering requires a mode set with an attached material")
    maps = list(maps)
    if len(maps) != modes.k:
        raise InputError(f"need one transfer map per mode ({modes.k}), got {len(maps)}")
    events = list(events)
    if not events:
        raise InputError("no events to render")
    if sample_rate <= 0:
        raise InputError("sample rate must be positive")
    t_max = max(ev.time for ev in events)
    if duration <= t_max:
        raise InputError(f"duration {duration} s must exceed the last event at {t_max} s")

    n = int(np.ceil(duration * sample_rate))
    out = np.zeros(n)
    xi = modes.xi
    omega = modes.omega
    omega_d = modes.omega_damped
    nyquist = np.pi * sample_rate  # rad/s
    gains_at_listener = np.empty(modes.k)
    for i, m in enumerate(maps):
        if not isinstance(m, FFATMap):
            raise InputError("maps must be FFATMap instances")
        gains_at_listener[i] = query(m, m.center + listener.position)

    active = []
    for i in range(modes.k):
        if xi[i] >= 1.0:
            continue  # overdamped: no oscillatory response
        if omega_d[i] <= 0.0 or omega_d[i] >= nyquist:
            continue  # silent or unrepresentable at this rate
        active.append(i)

    times = np.arange(n) / sample_rate
    for ev in events:
        g = project_impulse(modes, ev)
        start = int(np.ceil(ev.time * sample_rate - 1e-12))
        tau = times[start:] - ev.time
        for i in active:
            amp = gains_at_listener[i] * g[i] / omega_d[i]
            if amp == 0.0:
                continue
            out[start:] += amp * np.exp(-xi[i] * omega[i] * tau) * np.sin(omega_d[i] * tau)
    if not np.isfinite(out).all():
        raise NumericalError("rendered waveform contains non-finite samples")
    return AudioBuffer(sample_rate=sample_rate, samples=out)


def wav_export(buf: AudioBuffer, path, peak_normalize: bool = True) -> None:
    """Write 16-bit PCM mono.  peak_normalize scales the peak to -1 dBFS;
    otherwise samples are hard-clipped to [-1, 1].  Silence stays silent."""
    x = buf.samples
    peak = float(np.abs(x).max()) if x.size else 0.0
    if peak_normalize and peak > 0:
        x = x * (10.0 ** (PEAK_DBFS / 20.0) / peak)
    x = np.clip(x, -1.0, 1.0)
    pcm = np.round(x * 32767.0).astype("<i2")
    with wave.open(str(path), "wb") as fh:
        fh.setnchannels(1)
        fh.setsampwidth(2)
        fh.setframerate(buf.sample_rate)
        fh.writeframes(pcm.tobytes())


def wav_read(path):
    """Read back a PCM16 mono file as (sample_rate, int16 array)."""
    with wave.open(str(path), "rb") as fh:
        if fh.getnchannels() != 1 or fh.getsampwidth() != 2:
            raise InputError("expected 16-bit mono PCM")
        rate = fh.getframerate()
        data = np.frombuffer(fh.readframes(fh.getnframes()), dtype="<i2")
    return rate, data


# ---------------------------------------------------------------------------
# event scripts: JSON list of {t, vertex, dir, amp}


def load_events(path) -> list:
    data = json.loads(Path(path).read_text())
    if not isinstance(data, list):
        raise InputError("event script must be a JSON list")
    events = []
    for i, row in enumerate(data):
        try:
            d = np.asarray(row["dir"], dtype=np.float64).reshape(3)
            n = float(np.linalg.norm(d))
            if n == 0:
                raise InputError(f"event {i}: zero direction")
            events.append(ForceEvent(time=float(row["t"]), vertex=int(row["vertex"]),
                                     direction=d / n, amplitude=float(row["amp"])))
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed event {i}: {exc}") from exc
    return events


def save_events(events, path) -> None:
    rows = [{"t": ev.time, "vertex": ev.vertex,
             "dir": [float(v) for v in ev.direction], "amp": ev.amplitude}
            for ev in events]
    Path(path).write_text(json.dumps(rows, indent=2) + "\n")
