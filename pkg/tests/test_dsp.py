import numpy as np
import pytest
import torch

from labnet.dsp import (
    AudioSegment,
    ComplexSpectrogram,
    StftConfig,
    extract_features,
    frame_count,
    istft,
    make_window,
    stft,
)
from labnet.errors import InvalidInputError, NumericalDegeneracyError

RATE = 16000
CFG = StftConfig()  # 512-point, 32 ms Hamming, 50% hop


def _random_segment(rng, length, channels, rate=RATE):
    return AudioSegment(rng.uniform(-1.0, 1.0, (length, channels)), rate)


def test_frame_count_four_seconds():
    assert frame_count(64000, CFG, RATE) == 251


def test_stft_shape_and_dtype():
    rng = np.random.default_rng(0)
    spec = stft(_random_segment(rng, 64000, 6), CFG)
    assert tuple(spec.values.shape) == (251, 257, 6)
    assert spec.values.dtype == torch.complex128


def test_zero_input_zero_spectrogram():
    seg = AudioSegment(np.zeros((8000, 2)), RATE)
    spec = stft(seg, CFG)
    assert torch.count_nonzero(spec.values) == 0


def test_pure_tone_peaks_at_its_bin():
    # tone at an exact bin frequency: interior frames peak at that bin
    k = 64
    n = np.arange(32000)
    tone = np.cos(2 * np.pi * k * n / CFG.fft_size)
    spec = stft(AudioSegment(tone, RATE), CFG)
    mags = spec.values[:, :, 0].abs()
    interior = mags[2:-2]
    assert (interior.argmax(dim=1) == k).all()


def test_stft_matches_windowed_dft_oracle():
    # independent frame-by-frame numpy evaluation of the windowed DFT
    rng = np.random.default_rng(3)
    x = rng.uniform(-1, 1, 4000)
    spec = stft(AudioSegment(x, RATE), CFG).values[:, :, 0].numpy()
    pad = CFG.fft_size // 2
    padded = np.pad(x, pad, mode="reflect")
    win = make_window("hamming", 512).numpy()
    hop = 256
    for t in (0, 3, 7, spec.shape[0] - 1):
        frame = padded[t * hop : t * hop + 512] * win
        expected = np.fft.rfft(frame)
        np.testing.assert_allclose(spec[t], expected, atol=1e-12)


def test_round_trip_random_signal():
    rng = np.random.default_rng(1)
    seg = _random_segment(rng, 64000, 2)
    back = istft(stft(seg, CFG))
    assert (back.samples - seg.samples).abs().max().item() < 1e-6
    assert back.num_samples == seg.num_samples


def test_round_trip_unaligned_length():
    rng = np.random.default_rng(2)
    seg = _random_segment(rng, 64123, 1)
    back = istft(stft(seg, CFG))
    assert (back.samples - seg.samples).abs().max().item() < 1e-6


def test_round_trip_dc_signal():
    seg = AudioSegment(np.full((16000, 1), 0.25), RATE)
    back = istft(stft(seg, CFG))
    assert (back.samples - seg.samples).abs().max().item() < 1e-6


def test_zero_spectrogram_zero_waveform():
    spec = ComplexSpectrogram(
        values=torch.zeros(11, 257, 1, dtype=torch.complex128),
        config=CFG, sample_rate=RATE, num_samples=2000,
    )
    assert torch.count_nonzero(istft(spec).samples) == 0


def test_stft_linearity():
    rng = np.random.default_rng(4)
    x = _random_segment(rng, 8000, 2)
    y = _random_segment(rng, 8000, 2)
    a, b = 0.7, -1.9
    combined = AudioSegment(a * x.samples + b * y.samples, RATE)
    lhs = stft(combined, CFG).values
    rhs = a * stft(x, CFG).values + b * stft(y, CFG).values
    assert (lhs - rhs).abs().max().item() < 1e-9


def test_segment_shorter_than_padding_rejected():
    seg = AudioSegment(np.ones((100, 1)), RATE)
    with pytest.raises(InvalidInputError):
        stft(seg, CFG)


def test_istft_degenerate_envelope():
    # hann at hop = window leaves zero-envelope samples at frame boundaries
    cfg = StftConfig(fft_size=16, window="hann", window_length_ms=1.0, hop_fraction=1.0)
    seg = AudioSegment(np.random.default_rng(5).uniform(-1, 1, (64, 1)), RATE)
    spec = stft(seg, cfg)
    with pytest.raises(NumericalDegeneracyError):
        istft(spec)


def test_istft_without_length_rejected():
    spec = ComplexSpectrogram(
        values=torch.zeros(5, 257, 1, dtype=torch.complex128),
        config=CFG, sample_rate=RATE, num_samples=0,
    )
    with pytest.raises(InvalidInputError):
        istft(spec)


def test_identical_channels_unit_cos_ipd():
    rng = np.random.default_rng(6)
    mono = rng.uniform(-1, 1, 8000)
    seg = AudioSegment(np.stack([mono] * 4, axis=1), RATE)
    feats = extract_features(stft(seg, CFG))
    assert feats.pair_count == 3
    assert (feats.cos_ipd - 1.0).abs().max().item() < 1e-9


def test_one_sample_delay_phase_ramp():
    # second channel delayed by one sample: at the tone bin the phase ramp is
    # exactly 2*pi*k/N because the periodic Hamming window has three-point
    # spectral support, so the mirrored component cannot leak onto bin k
    k = 64
    n = np.arange(32000)
    ch1 = np.cos(2 * np.pi * k * n / CFG.fft_size + 0.3)
    ch2 = np.cos(2 * np.pi * k * (n - 1) / CFG.fft_size + 0.3)
    feats = extract_features(stft(AudioSegment(np.stack([ch1, ch2], 1), RATE), CFG))
    expected = np.cos(2 * np.pi * k / CFG.fft_size)
    interior = feats.cos_ipd[3:-3, k, 0]
    assert (interior - expected).abs().max().item() < 1e-9


def test_six_channels_give_five_pairs():
    rng = np.random.default_rng(7)
    seg = _random_segment(rng, 4000, 6)
    assert extract_features(stft(seg, CFG)).pair_count == 5


def test_cos_ipd_bounded_and_gain_invariant():
    rng = np.random.default_rng(8)
    seg = _random_segment(rng, 6000, 3)
    base = extract_features(stft(seg, CFG))
    scaled = extract_features(stft(AudioSegment(3.7 * seg.samples, RATE), CFG))
    assert base.cos_ipd.min().item() >= -1.0 and base.cos_ipd.max().item() <= 1.0
    assert (base.cos_ipd - scaled.cos_ipd).abs().max().item() < 1e-9


def test_magnitude_invariant_under_global_phase_rotation():
    rng = np.random.default_rng(9)
    spec = stft(_random_segment(rng, 6000, 3), CFG)
    rotated = ComplexSpectrogram(
        values=spec.values * np.exp(1j * 1.234),
        config=CFG, sample_rate=RATE, num_samples=spec.num_samples,
    )
    a = extract_features(spec)
    b = extract_features(rotated)
    assert (a.magnitude - b.magnitude).abs().max().item() < 1e-9
    assert (a.cos_ipd - b.cos_ipd).abs().max().item() < 1e-9


def test_reference_channel_out_of_range():
    rng = np.random.default_rng(10)
    spec = stft(_random_segment(rng, 4000, 2), CFG)
    with pytest.raises(InvalidInputError):
        extract_features(spec, reference_channel=5)


def test_single_channel_features_rejected():
    rng = np.random.default_rng(11)
    spec = stft(_random_segment(rng, 4000, 1), CFG)
    with pytest.raises(InvalidInputError):
        extract_features(spec)


def test_window_length_exceeding_fft_rejected():
    with pytest.raises(InvalidInputError):
        StftConfig(fft_size=256, window_length_ms=32.0).window_samples(RATE)


def test_audio_segment_validation():
    with pytest.raises(InvalidInputError):
        AudioSegment(np.array([[np.nan]]), RATE)
    with pytest.raises(InvalidInputError):
        AudioSegment(np.ones((10, 1)), 0)
