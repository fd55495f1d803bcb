"""Frame-based spectral features used by the local encoder stand-ins.

Frames are centered: the signal is reflect-padded by n_fft/2 so an
n-sample input yields exactly 1 + n // hop frames, keeping the frame
count within one frame of duration * rate for any input length.
"""

import numpy as np
from scipy.fft import dct, rfft
from scipy.signal import get_window

from .errors import AudioDecodeFailure

RATE = 16000
N_FFT = 512


def _power_spectrum(x, hop):
    if len(x) < 2:
        raise AudioDecodeFailure("audio too short to frame")
    pad = N_FFT // 2
    xp = np.pad(x, pad, mode="reflect")
    t = 1 + len(x) // hop
    idx = hop * np.arange(t)[:, None] + np.arange(N_FFT)[None, :]
    frames = xp[idx] * get_window("hann", N_FFT, fftbins=True)
    return np.abs(rfft(frames, axis=1)) ** 2


def _hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + f / 700.0)


def _mel_to_hz(m):
    return 700.0 * (10.0 ** (m / 2595.0) - 1.0)


def mel_filterbank(n_mels, n_fft=N_FFT, rate=RATE):
    edges = _mel_to_hz(np.linspace(0.0, _hz_to_mel(rate / 2), n_mels + 2))
    bins = np.fft.rfftfreq(n_fft, 1.0 / rate)
    fb = np.zeros((n_mels, len(bins)))
    for i in range(n_mels):
        lo, mid, hi = edges[i], edges[i + 1], edges[i + 2]
        up = (bins - lo) / (mid - lo)
        down = (hi - bins) / (hi - mid)
        fb[i] = np.clip(np.minimum(up, down), 0.0, None)
    return fb


def log_mel(x, n_mels=80, hop=160):
    spec = _power_spectrum(x, hop)
    return np.log(spec @ mel_filterbank(n_mels).T + 1e-10)


def mfcc(x, n_coeffs=13, n_mels=40, hop=320):
    return dct(log_mel(x, n_mels=n_mels, hop=hop), type=2, axis=1, norm="ortho")[
        :, :n_coeffs
    ]
