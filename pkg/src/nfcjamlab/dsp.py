"""Trace containers and the low-level signal operations the pipeline composes.

All values are dimensionless envelope amplitudes. Synthetic traces are built
with the unmodulated carrier at 1.0, so thresholds expressed in normalized
units apply directly; file traces should pass through :func:`normalize` on
ingest.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from scipy.signal import firwin

from .errors import ParameterError, StructuralError

CARRIER_HZ = 13.56e6
SUBCARRIER_HZ = CARRIER_HZ / 16  # 847.5 kHz
BIT_RATE_HZ = CARRIER_HZ / 128  # 105.9375 kbit/s, the 106 kbit/s base rate
DEFAULT_SAMPLE_RATE = CARRIER_HZ / 4  # 3.39 MS/s, 32 samples per bit period

# Capture filter half-widths. The wide band keeps the card subcarrier
# sidebands; the narrow value reflects capture chains that filter at
# carrier +/- f_s/2 and is exposed for experiments.
WIDE_HALF_WIDTH_HZ = 847_500.0
NARROW_HALF_WIDTH_HZ = 423_750.0


def _as_float_array(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise StructuralError(f"{name} must be one-dimensional")
    if arr.size and not np.all(np.isfinite(arr)):
        raise StructuralError(f"{name} contains non-finite samples")
    return arr


@dataclass(frozen=True)
class MagnitudeTrace:
    """A uniformly sampled non-negative envelope signal."""

    samples: np.ndarray
    sample_rate: float
    origin: str = "synthetic"  # "synthetic" or "file"
    label: str | None = None

    def __post_init__(self):
        arr = _as_float_array(self.samples, "samples")
        if self.sample_rate <= 0:
            raise ParameterError("sample_rate must be positive")
        if self.origin not in ("synthetic", "file"):
            raise ParameterError(f"unknown origin {self.origin!r}")
        arr.flags.writeable = False
        object.__setattr__(self, "samples", arr)

    def __len__(self) -> int:
        return self.samples.size

    def with_samples(self, samples: np.ndarray) -> "MagnitudeTrace":
        return replace(self, samples=samples)


@dataclass(frozen=True)
class ComplexTrace:
    """Raw I/Q capture, before envelope extraction."""

    i_samples: np.ndarray
    q_samples: np.ndarray
    sample_rate: float

    def __post_init__(self):
        i_arr = _as_float_array(self.i_samples, "i_samples")
        q_arr = _as_float_array(self.q_samples, "q_samples")
        if i_arr.size != q_arr.size:
            raise StructuralError(
                f"I/Q length mismatch: {i_arr.size} vs {q_arr.size}"
            )
        if self.sample_rate <= 0:
            raise ParameterError("sample_rate must be positive")
        i_arr.flags.writeable = False
        q_arr.flags.writeable = False
        object.__setattr__(self, "i_samples", i_arr)
        object.__setattr__(self, "q_samples", q_arr)

    def __len__(self) -> int:
        return self.i_samples.size


@dataclass(frozen=True)
class BandSpec:
    """A symmetric band around a center frequency."""

    center_hz: float = CARRIER_HZ
    half_width_hz: float = WIDE_HALF_WIDTH_HZ

    def __post_init__(self):
        if self.half_width_hz <= 0:
            raise ParameterError("half_width_hz must be positive")


def magnitude(trace: ComplexTrace) -> MagnitudeTrace:
    """Envelope of an I/Q capture: sqrt(i^2 + q^2) per sample."""
    return MagnitudeTrace(
        samples=np.hypot(trace.i_samples, trace.q_samples),
        sample_rate=trace.sample_rate,
        origin="file",
    )


def _lowpass_taps(cutoff_hz: float, sample_rate: float) -> np.ndarray:
    # Hamming-windowed FIR sized so the stopband (>= 40 dB) is reached by
    # 1.5x cutoff while the passband holds to within 1 dB below 0.8x cutoff.
    transition = 0.7 * cutoff_hz
    numtaps = int(np.ceil(3.3 * sample_rate / transition))
    numtaps = max(numtaps, 11)
    if numtaps % 2 == 0:
        numtaps += 1
    return firwin(numtaps, 1.15 * cutoff_hz, fs=sample_rate)


def lowpass_filter(trace: MagnitudeTrace, cutoff_hz: float) -> MagnitudeTrace:
    """Linear-phase FIR low-pass; output length equals input length."""
    nyquist = trace.sample_rate / 2
    if not 0 < cutoff_hz < nyquist:
        raise ParameterError(
            f"cutoff {cutoff_hz} Hz outside (0, {nyquist}) Hz"
        )
    x = trace.samples
    if x.size == 0:
        return trace
    taps = _lowpass_taps(cutoff_hz, trace.sample_rate)
    half = len(taps) // 2
    mode = "reflect" if x.size > 1 else "edge"
    padded = np.pad(x, half, mode=mode)
    out = np.convolve(padded, taps, mode="valid")
    return trace.with_samples(out)


def normalize(trace: MagnitudeTrace) -> MagnitudeTrace:
    """Clip negatives and rescale so the peak is exactly 1.0.

    An all-zero (or all-negative) trace is returned unchanged apart from the
    clipping; there is no meaningful scale to normalize to.
    """
    clipped = np.maximum(trace.samples, 0.0)
    peak = clipped.max(initial=0.0)
    if peak == 0.0:
        return trace.with_samples(clipped)
    return trace.with_samples(clipped / peak)


def std_dev(trace: MagnitudeTrace, start: int, end: int) -> float:
    """Population standard deviation over samples[start:end]."""
    n = len(trace)
    if not (0 <= start < end <= n):
        raise ParameterError(f"range [{start}, {end}) invalid for length {n}")
    return float(np.std(trace.samples[start:end]))


def moving_average(trace: MagnitudeTrace, window_samples: int) -> MagnitudeTrace:
    """Centered moving mean; edge positions use the available shorter window."""
    n = len(trace)
    if window_samples < 1:
        raise ParameterError("window must be at least 1")
    if window_samples > n:
        raise ParameterError(f"window {window_samples} exceeds trace length {n}")
    out = moving_average_array(trace.samples, window_samples)
    return trace.with_samples(out)


def moving_average_array(x: np.ndarray, window: int) -> np.ndarray:
    """Moving mean of a raw array, same length and centering as the trace op."""
    if window == 1:
        return x.copy()
    kernel = np.ones(window)
    sums = np.convolve(x, kernel, mode="same")
    counts = np.convolve(np.ones(x.size), kernel, mode="same")
    return sums / counts


def average_arrays(arrays: list[np.ndarray]) -> np.ndarray:
    """Element-wise arithmetic mean of equally sized arrays."""
    if not arrays:
        raise ParameterError("nothing to average")
    length = arrays[0].size
    for arr in arrays[1:]:
        if arr.size != length:
            raise StructuralError("arrays differ in length")
    return np.mean(np.stack(arrays), axis=0)


# ---------------------------------------------------------------------------
# Trace file format: raw little-endian float32 samples plus a JSON sidecar
# with the same basename. Round trips are bit exact at float32 precision.
# ---------------------------------------------------------------------------


def _sidecar_path(path: Path) -> Path:
    return path.with_suffix(".json")


def write_trace(trace: MagnitudeTrace, path: str | Path) -> None:
    path = Path(path)
    np.asarray(trace.samples, dtype="<f4").tofile(path)
    meta = {
        "label": trace.label,
        "origin": trace.origin,
        "sample_rate_hz": trace.sample_rate,
    }
    _sidecar_path(path).write_text(json.dumps(meta, sort_keys=True) + "\n")


def read_trace(path: str | Path) -> MagnitudeTrace:
    path = Path(path)
    samples = np.fromfile(path, dtype="<f4").astype(np.float64)
    meta = json.loads(_sidecar_path(path).read_text())
    return MagnitudeTrace(
        samples=samples,
        sample_rate=float(meta["sample_rate_hz"]),
        origin=meta.get("origin", "file"),
        label=meta.get("label"),
    )
