"""WAV plumbing: RIFF read/write, resampling, peak normalization.

All corpus audio is 16 kHz mono 16-bit PCM. The writer can append a
custom ``wrds`` RIFF chunk carrying a JSON word list; standard players
ignore unknown chunks, and the offline mock stress detector reads the
list back instead of running ASR.
"""

from __future__ import annotations

import json
import struct
from typing import List, Optional, Tuple

import numpy as np
from scipy.signal import resample_poly

from .errors import DataError

TARGET_RATE = 16000
PEAK_DBFS = -3.0
SIDECAR_CHUNK_ID = b"wrds"


def write_wav_bytes(
    samples: np.ndarray, rate: int = TARGET_RATE, sidecar_words: Optional[List[str]] = None
) -> bytes:
    """Encode int16 mono samples as a RIFF/WAVE byte string."""
    if samples.dtype != np.int16:
        raise ValueError("write_wav_bytes expects int16 samples")
    data = samples.tobytes()
    chunks = []
    fmt = struct.pack("<HHIIHH", 1, 1, rate, rate * 2, 2, 16)
    chunks.append(b"fmt " + struct.pack("<I", len(fmt)) + fmt)
    chunks.append(b"data" + struct.pack("<I", len(data)) + data + (b"\x00" if len(data) % 2 else b""))
    if sidecar_words is not None:
        payload = json.dumps({"words": sidecar_words}, ensure_ascii=False).encode("utf-8")
        chunks.append(
            SIDECAR_CHUNK_ID
            + struct.pack("<I", len(payload))
            + payload
            + (b"\x00" if len(payload) % 2 else b"")
        )
    body = b"WAVE" + b"".join(chunks)
    return b"RIFF" + struct.pack("<I", len(body)) + body


def read_wav_bytes(blob: bytes) -> Tuple[int, np.ndarray, Optional[List[str]]]:
    """Decode a WAV byte string; returns (rate, float samples in [-1, 1], sidecar words)."""
    if len(blob) < 12 or blob[:4] != b"RIFF" or blob[8:12] != b"WAVE":
        raise DataError("not a RIFF/WAVE stream")
    pos = 12
    rate = None
    n_channels = 1
    bits = 16
    data = None
    words = None
    while pos + 8 <= len(blob):
        cid = blob[pos : pos + 4]
        (size,) = struct.unpack("<I", blob[pos + 4 : pos + 8])
        payload = blob[pos + 8 : pos + 8 + size]
        if cid == b"fmt ":
            _, n_channels, rate, _, _, bits = struct.unpack("<HHIIHH", payload[:16])
        elif cid == b"data":
            data = payload
        elif cid == SIDECAR_CHUNK_ID:
            words = json.loads(payload.decode("utf-8"))["words"]
        pos += 8 + size + (size % 2)
    if rate is None or data is None:
        raise DataError("WAV stream missing fmt or data chunk")
    if bits != 16:
        raise DataError(f"unsupported bit depth {bits}; corpus audio is 16-bit PCM")
    samples = np.frombuffer(data, dtype=np.int16).astype(np.float64) / 32768.0
    if n_channels > 1:
        samples = samples.reshape(-1, n_channels).mean(axis=1)
    return int(rate), samples, words


def peak_normalize(samples: np.ndarray, dbfs: float = PEAK_DBFS) -> np.ndarray:
    peak = float(np.max(np.abs(samples))) if samples.size else 0.0
    if peak <= 0.0:
        return samples
    target = 10.0 ** (dbfs / 20.0)
    return samples * (target / peak)


def to_int16(samples: np.ndarray) -> np.ndarray:
    return np.clip(np.round(samples * 32767.0), -32768, 32767).astype(np.int16)


def ensure_corpus_format(blob: bytes, normalize: bool = True) -> Tuple[bytes, float]:
    """Convert arbitrary WAV input to 16 kHz mono PCM at the corpus peak level.

    Returns the re-encoded bytes and the duration in seconds. Zero-length
    audio is a synthesis error. The sidecar word chunk, when present, is
    carried over.
    """
    rate, samples, words = read_wav_bytes(blob)
    if samples.size == 0:
        raise DataError("zero-length audio")
    if rate != TARGET_RATE:
        # polyphase filtering is linear-phase
        g = np.gcd(TARGET_RATE, rate)
        samples = resample_poly(samples, TARGET_RATE // g, rate // g)
    if normalize:
        samples = peak_normalize(samples)
    pcm = to_int16(samples)
    return write_wav_bytes(pcm, TARGET_RATE, sidecar_words=words), pcm.size / TARGET_RATE
