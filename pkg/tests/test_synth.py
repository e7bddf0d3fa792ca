"""Runtime synthesis: modal gains, damped sinusoids, WAV and event I/O.

The waveform oracle is the closed-form single-mode impulse response
amp * exp(-xi*omega*tau) * sin(omega_d*tau) evaluated directly in the test.
"""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from modalsound import (AudioBuffer, FFATMap, ForceEvent, InputError,
                        ListenerConfig, Material, ModeSet, load_events,
                        project_impulse, render, save_events, wav_export,
                        wav_read)
from modalsound.ffat import N_PHI, N_THETA


def flat_map(center=(0.0, 0.0, 0.0)):
    # uniform unit-amplitude map: query(x) = 1 / |x - center|
    g = np.full((N_THETA, N_PHI), 1.0 / np.sqrt(N_THETA * N_PHI))
    return FFATMap(grid=g, log_norm=0.5 * np.log(N_THETA * N_PHI),
                   center=center, a=1.0, radii=np.array([3.0, 9.0, 27.0]))


def single_mode_set(f_hz=440.0, alpha=6.0, beta=1e-7, n_vertices=4):
    mat = Material(name="t", E=1e9, nu=0.3, rho=1000.0, alpha=alpha, beta=beta)
    lam = (2.0 * np.pi * f_hz) ** 2
    vec = np.zeros((3 * n_vertices, 1))
    vec[3 * 1 + 1, 0] = 2.0    # strike vertex 1 along +y picks up gain 2
    return ModeSet(lambdas=np.array([lam]), vectors=vec, residuals=np.zeros(1),
                   material=mat)


def expected_single_mode(modes, gain_at_listener, g, duration, rate, t0=0.0):
    n = int(np.ceil(duration * rate))
    times = np.arange(n) / rate
    out = np.zeros(n)
    start = int(np.ceil(t0 * rate - 1e-12))
    tau = times[start:] - t0
    xi, om, omd = modes.xi[0], modes.omega[0], modes.omega_damped[0]
    out[start:] = (gain_at_listener * g / omd) * np.exp(-xi * om * tau) * np.sin(omd * tau)
    return out


# ---------------------------------------------------------------------------
# events and gains


def test_project_impulse_gain():
    modes = single_mode_set()
    ev = ForceEvent(time=0.0, vertex=1, direction=(0.0, 1.0, 0.0), amplitude=3.0)
    assert_allclose(project_impulse(modes, ev), [6.0], rtol=0, atol=0)
    orth = ForceEvent(time=0.0, vertex=1, direction=(1.0, 0.0, 0.0), amplitude=3.0)
    assert project_impulse(modes, orth)[0] == 0.0


def test_project_impulse_vertex_guard():
    modes = single_mode_set(n_vertices=4)
    ev = ForceEvent(time=0.0, vertex=4, direction=(0.0, 1.0, 0.0), amplitude=1.0)
    with pytest.raises(InputError):
        project_impulse(modes, ev)


def test_event_validation():
    with pytest.raises(InputError):
        ForceEvent(time=0.0, vertex=0, direction=(1.0, 1.0, 0.0), amplitude=1.0)
    with pytest.raises(InputError):
        ForceEvent(time=-0.1, vertex=0, direction=(1.0, 0.0, 0.0), amplitude=1.0)
    with pytest.raises(InputError):
        ForceEvent(time=0.0, vertex=-1, direction=(1.0, 0.0, 0.0), amplitude=1.0)


# ---------------------------------------------------------------------------
# rendering


def test_single_mode_matches_closed_form():
    modes = single_mode_set()
    listener = ListenerConfig(position=(0.0, 0.0, 2.0))
    ev = ForceEvent(time=0.0, vertex=1, direction=(0.0, 1.0, 0.0), amplitude=1.0)
    buf = render(modes, [flat_map()], [ev], listener, duration=0.5)
    expect = expected_single_mode(modes, 0.5, 2.0, 0.5, 44100)
    assert buf.sample_rate == 44100
    assert_allclose(buf.samples, expect, rtol=1e-12, atol=1e-300)


def test_fft_peak_at_damped_frequency():
    modes = single_mode_set(f_hz=440.0)
    ev = ForceEvent(time=0.0, vertex=1, direction=(0.0, 1.0, 0.0), amplitude=1.0)
    buf = render(modes, [flat_map()], [ev], ListenerConfig(position=(0, 0, 1.0)),
                 duration=2.0)
    spec = np.abs(np.fft.rfft(buf.samples))
    f_peak = np.fft.rfftfreq(buf.samples.size, 1.0 / 44100)[np.argmax(spec)]
    f_expect = modes.omega_damped[0] / (2.0 * np.pi)
    assert abs(f_peak - f_expect) <= 44100 / buf.samples.size  # one bin


def test_envelope_decay_rate():
    modes = single_mode_set(f_hz=1000.0, alpha=40.0)
    ev = ForceEvent(time=0.0, vertex=1, direction=(0.0, 1.0, 0.0), amplitude=1.0)
    buf = render(modes, [flat_map()], [ev], ListenerConfig(position=(0, 0, 1.0)),
                 duration=1.0)
    analytic = np.exp(-modes.xi[0] * modes.omega[0])  # decay over 1 s
    # compare energy envelopes one decay-constant apart
    rate = buf.sample_rate
    w1 = np.abs(buf.samples[: rate // 10]).max()
    w2 = np.abs(buf.samples[rate // 2: rate // 2 + rate // 10]).max()
    measured = (w2 / w1) ** (1.0 / 0.5)
    assert abs(measured - analytic) < 0.01 * analytic


def test_superposition_is_exact():
    modes = single_mode_set()
    maps = [flat_map()]
    lis = ListenerConfig(position=(0.0, 0.0, 1.5))
    e1 = ForceEvent(time=0.0, vertex=1, direction=(0.0, 1.0, 0.0), amplitude=1.0)
    e2 = ForceEvent(time=0.25, vertex=1, direction=(0.0, -1.0, 0.0), amplitude=0.7)
    both = render(modes, maps, [e1, e2], lis, duration=1.0)
    a = render(modes, maps, [e1], lis, duration=1.0)
    b = render(modes, maps, [e2], lis, duration=1.0)
    assert_allclose(both.samples, a.samples + b.samples, rtol=0, atol=1e-12)


def test_event_offset_keeps_leading_silence():
    modes = single_mode_set()
    ev = ForceEvent(time=0.5, vertex=1, direction=(0.0, 1.0, 0.0), amplitude=1.0)
    buf = render(modes, [flat_map()], [ev], ListenerConfig(position=(0, 0, 1.0)),
                 duration=1.0)
    start = int(np.ceil(0.5 * 44100))
    assert np.abs(buf.samples[:start]).max() == 0.0
    assert np.abs(buf.samples[start:]).max() > 0.0


def test_zero_amplitude_event_is_silent():
    modes = single_mode_set()
    ev = ForceEvent(time=0.0, vertex=1, direction=(0.0, 1.0, 0.0), amplitude=0.0)
    buf = render(modes, [flat_map()], [ev], ListenerConfig(position=(0, 0, 1.0)),
                 duration=0.2)
    assert np.abs(buf.samples).max() == 0.0


def test_overdamped_mode_skipped():
    # xi = alpha/(2*omega) >= 1 at 440 Hz needs alpha >= 4*pi*440
    modes = single_mode_set(alpha=4.0 * np.pi * 440.0 + 1.0, beta=0.0)
    assert modes.overdamped.all()
    ev = ForceEvent(time=0.0, vertex=1, direction=(0.0, 1.0, 0.0), amplitude=1.0)
    buf = render(modes, [flat_map()], [ev], ListenerConfig(position=(0, 0, 1.0)),
                 duration=0.2)
    assert np.abs(buf.samples).max() == 0.0


def test_mode_above_nyquist_skipped():
    modes = single_mode_set(f_hz=30000.0)
    ev = ForceEvent(time=0.0, vertex=1, direction=(0.0, 1.0, 0.0), amplitude=1.0)
    lis = ListenerConfig(position=(0, 0, 1.0))
    silent = render(modes, [flat_map()], [ev], lis, duration=0.1, sample_rate=44100)
    assert np.abs(silent.samples).max() == 0.0
    audible = render(modes, [flat_map()], [ev], lis, duration=0.1, sample_rate=96000)
    assert np.abs(audible.samples).max() > 0.0


def test_render_input_guards():
    modes = single_mode_set()
    nomat = ModeSet(lambdas=modes.lambdas, vectors=modes.vectors,
                    residuals=modes.residuals)
    maps = [flat_map()]
    lis = ListenerConfig(position=(0, 0, 1.0))
    ev = ForceEvent(time=0.0, vertex=1, direction=(0.0, 1.0, 0.0), amplitude=1.0)
    with pytest.raises(InputError):
        render(nomat, maps, [ev], lis, duration=0.2)
    with pytest.raises(InputError):
        render(modes, [], [ev], lis, duration=0.2)
    with pytest.raises(InputError):
        render(modes, maps, [], lis, duration=0.2)
    with pytest.raises(InputError):
        render(modes, maps, [ev], lis, duration=0.0)
    with pytest.raises(InputError):
        render(modes, maps, [ev], lis, duration=0.2, sample_rate=0)
    with pytest.raises(InputError):
        render(modes, [object()], [ev], lis, duration=0.2)


# ---------------------------------------------------------------------------
# WAV I/O


def test_wav_peak_is_minus_one_dbfs(tmp_path):
    t = np.arange(4410) / 44100.0
    buf = AudioBuffer(sample_rate=44100, samples=0.01 * np.sin(2 * np.pi * 440 * t))
    path = tmp_path / "tone.wav"
    wav_export(buf, path)
    rate, pcm = wav_read(path)
    assert rate == 44100
    target = round(10.0 ** (-1.0 / 20.0) * 32767.0)
    assert int(np.abs(pcm).max()) == target


def test_wav_silence_preserved(tmp_path):
    buf = AudioBuffer(sample_rate=44100, samples=np.zeros(1000))
    path = tmp_path / "quiet.wav"
    wav_export(buf, path)
    _, pcm = wav_read(path)
    assert pcm.size == 1000
    assert np.abs(pcm).max() == 0


def test_wav_unnormalized_clips(tmp_path):
    buf = AudioBuffer(sample_rate=8000, samples=np.array([2.0, -3.0, 0.5]))
    path = tmp_path / "clip.wav"
    wav_export(buf, path, peak_normalize=False)
    _, pcm = wav_read(path)
    assert pcm[0] == 32767 and pcm[1] == -32767
    assert pcm[2] == round(0.5 * 32767)


def test_wav_roundtrip_quantization(tmp_path):
    rng = np.random.default_rng(0)
    x = rng.uniform(-0.9, 0.9, 500)
    buf = AudioBuffer(sample_rate=22050, samples=x)
    path = tmp_path / "r.wav"
    wav_export(buf, path, peak_normalize=False)
    rate, pcm = wav_read(path)
    assert rate == 22050
    assert_allclose(pcm / 32767.0, x, rtol=0, atol=0.5 / 32767.0)


def test_audio_buffer_must_be_mono():
    with pytest.raises(InputError):
        AudioBuffer(sample_rate=44100, samples=np.zeros((2, 100)))


# ---------------------------------------------------------------------------
# event scripts


def test_events_roundtrip(tmp_path):
    evs = [ForceEvent(time=0.0, vertex=3, direction=(1.0, 0.0, 0.0), amplitude=2.0),
           ForceEvent(time=0.5, vertex=8, direction=(0.0, 0.0, -1.0), amplitude=0.3)]
    path = tmp_path / "events.json"
    save_events(evs, path)
    back = load_events(path)
    assert len(back) == 2
    for orig, rt in zip(evs, back):
        assert rt.time == orig.time and rt.vertex == orig.vertex
        assert_allclose(rt.direction, orig.direction, rtol=0, atol=0)
        assert rt.amplitude == orig.amplitude


def test_events_direction_normalized_on_load(tmp_path):
    path = tmp_path / "e.json"
    path.write_text('[{"t": 0.0, "vertex": 0, "dir": [0, 0, 2], "amp": 1.0}]')
    evs = load_events(path)
    assert_allclose(evs[0].direction, [0.0, 0.0, 1.0], rtol=0, atol=0)


def test_events_malformed_rejected(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"t": 0}')
    with pytest.raises(InputError):
        load_events(path)
    path.write_text('[{"vertex": 0, "dir": [1, 0, 0], "amp": 1.0}]')
    with pytest.raises(InputError):
        load_events(path)
    path.write_text('[{"t": 0.0, "vertex": 0, "dir": [0, 0, 0], "amp": 1.0}]')
    with pytest.raises(InputError):
        load_events(path)
