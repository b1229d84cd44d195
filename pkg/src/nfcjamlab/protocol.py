"""ISO/IEC 14443 Type A byte-level framing and MIFARE read-session transcripts.

Frames come in two kinds. Short frames carry a single command byte of which
only 7 bits go on the wire (no parity, no checksum). Standard frames send
each byte LSB first followed by an odd-parity bit; commands that the standard
protects with CRC_A get the two checksum bytes appended (low byte first)
before bit encoding. Which commands carry the checksum is an explicit
per-message property, see ``with_crc`` on :class:`Message`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import CrcError, FramingError, ParameterError, ParityError, StructuralError

CRC_A_INIT = 0x6363


class Sender(str, Enum):
    READER = "reader"
    CARD = "card"


class FrameKind(str, Enum):
    SHORT = "short"
    STANDARD = "standard"


class CardKind(str, Enum):
    ULTRALIGHT = "ultralight"
    CLASSIC = "classic"


# Command bytes used by the transcripts.
WUPA = 0x52
READ = 0x30
FAST_READ = 0x3A
HALT = 0x50
SEL_CL1 = 0x93
ANTICOLLISION_NVB = 0x20
SELECT_NVB = 0x70
AUTH_KEY_A = 0x60
SAK_CLASSIC_1K = 0x08

ULTRALIGHT_ATQA = bytes([0x44, 0x00])
CLASSIC_ATQA = bytes([0x04, 0x00])

ULTRALIGHT_MESSAGE_COUNT = 7
CLASSIC_MESSAGE_COUNT = 13

DEFAULT_ULTRALIGHT_UID = bytes([0x04, 0x8F, 0x6A, 0x21, 0x5C, 0x1B, 0x80])
DEFAULT_CLASSIC_UID = bytes([0xDE, 0xAD, 0xBE, 0xEF])


def crc_a(payload: bytes) -> bytes:
    """16-bit CRC_A (poly x^16+x^12+x^5+1 reflected, init 0x6363), low byte first."""
    crc = CRC_A_INIT
    for byte in payload:
        byte ^= crc & 0xFF
        byte ^= (byte << 4) & 0xFF
        crc = ((crc >> 8) ^ (byte << 8) ^ (byte << 3) ^ (byte >> 4)) & 0xFFFF
    return bytes([crc & 0xFF, crc >> 8])


def _odd_parity(byte: int) -> int:
    # Parity bit makes the 9-bit group carry an odd number of ones.
    return (byte.bit_count() + 1) & 1


@dataclass(frozen=True)
class Message:
    """One protocol message: payload bytes plus framing metadata."""

    sender: Sender
    payload: bytes
    frame_kind: FrameKind = FrameKind.STANDARD
    description: str = ""
    with_crc: bool = True

    def __post_init__(self):
        if self.frame_kind is FrameKind.SHORT:
            if len(self.payload) != 1:
                raise StructuralError("short frames carry exactly one byte")
            if self.with_crc:
                raise StructuralError("short frames never carry a checksum")
        elif not self.payload:
            raise StructuralError("standard frames need at least one byte")

    @property
    def wire_bytes(self) -> bytes:
        """Payload as transmitted, checksum included when the command carries one."""
        if self.with_crc:
            return self.payload + crc_a(self.payload)
        return self.payload


def encode_frame(msg: Message) -> np.ndarray:
    """Frame bits (uint8 0/1) ready for modulation, LSB first per byte."""
    if not msg.payload:
        raise StructuralError("cannot encode an empty payload")
    if msg.frame_kind is FrameKind.SHORT:
        byte = msg.payload[0]
        return np.array([(byte >> i) & 1 for i in range(7)], dtype=np.uint8)
    bits = []
    for byte in msg.wire_bytes:
        bits.extend((byte >> i) & 1 for i in range(8))
        bits.append(_odd_parity(byte))
    return np.array(bits, dtype=np.uint8)


def decode_frame(bits, kind: FrameKind, with_crc: bool = False) -> bytes:
    """Inverse of :func:`encode_frame`; verifies parity and, when told to
    expect one, the trailing checksum (which is stripped from the result)."""
    bits = np.asarray(bits, dtype=np.uint8)
    if kind is FrameKind.SHORT:
        if bits.size != 7:
            raise FramingError(f"short frame needs 7 bits, got {bits.size}")
        value = int(np.sum(bits * (1 << np.arange(7, dtype=np.uint32))))
        return bytes([value])
    if bits.size == 0 or bits.size % 9 != 0:
        raise FramingError(f"standard frame bit count {bits.size} not a multiple of 9")
    groups = bits.reshape(-1, 9)
    weights = 1 << np.arange(8, dtype=np.uint32)
    data = bytes(int(np.sum(g[:8] * weights)) for g in groups)
    for index, (byte, group) in enumerate(zip(data, groups)):
        if int(group[8]) != _odd_parity(byte):
            raise ParityError(index)
    if with_crc:
        if len(data) < 3:
            raise FramingError("frame too short to carry a checksum")
        payload, checksum = data[:-2], data[-2:]
        expected = crc_a(payload)
        if checksum != expected:
            raise CrcError(expected, checksum)
        return payload
    return data


def bits_to_text(bits) -> str:
    """Serialize a bit sequence as a '0'/'1' string (golden-file format)."""
    return "".join(str(int(b)) for b in np.asarray(bits))


def text_to_bits(text: str) -> np.ndarray:
    if set(text) - {"0", "1"}:
        raise ParameterError("bit text may contain only '0' and '1'")
    return np.array([int(c) for c in text], dtype=np.uint8)


@dataclass(frozen=True)
class CardMemory:
    """Card storage model: 4-byte pages (Ultralight) or 16-byte blocks (Classic)."""

    pages: tuple[bytes, ...]
    uid: bytes

    def __post_init__(self):
        if len(self.uid) not in (4, 7):
            raise StructuralError("uid must be 4 or 7 bytes")
        sizes = {len(p) for p in self.pages}
        if sizes and sizes not in ({4}, {16}):
            raise StructuralError("pages must be uniformly 4 or 16 bytes")

    @classmethod
    def ultralight_default(cls) -> "CardMemory":
        # 20 pages of incrementing bytes, enough to satisfy a full-range read.
        pages = tuple(
            bytes((4 * p + k) & 0xFF for k in range(4)) for p in range(20)
        )
        return cls(pages=pages, uid=DEFAULT_ULTRALIGHT_UID)

    @classmethod
    def classic_default(cls) -> "CardMemory":
        blocks = tuple(
            bytes((16 * b + k) & 0xFF for k in range(16)) for b in range(8)
        )
        return cls(pages=blocks, uid=DEFAULT_CLASSIC_UID)

    def read_pages(self, start: int, count: int) -> bytes:
        if start + count > len(self.pages):
            raise ParameterError(
                f"read of pages [{start}, {start + count}) exceeds {len(self.pages)} pages"
            )
        return b"".join(self.pages[start : start + count])


@dataclass(frozen=True)
class Transcript:
    """Ordered message exchange for one full card-read session."""

    messages: tuple[Message, ...]
    card_kind: CardKind
    session_seed: int | None = None

    def __post_init__(self):
        expected = (
            ULTRALIGHT_MESSAGE_COUNT
            if self.card_kind is CardKind.ULTRALIGHT
            else CLASSIC_MESSAGE_COUNT
        )
        if len(self.messages) != expected:
            raise StructuralError(
                f"{self.card_kind.value} transcript needs {expected} messages,"
                f" got {len(self.messages)}"
            )
        for i, msg in enumerate(self.messages):
            want = Sender.READER if i % 2 == 0 else Sender.CARD
            if msg.sender is not want:
                raise StructuralError(f"message {i} should come from {want.value}")

    @property
    def card_messages(self) -> tuple[Message, ...]:
        return tuple(m for m in self.messages if m.sender is Sender.CARD)

    @property
    def reader_messages(self) -> tuple[Message, ...]:
        return tuple(m for m in self.messages if m.sender is Sender.READER)


def _reader(payload: bytes, description: str, *, with_crc: bool = True,
            kind: FrameKind = FrameKind.STANDARD) -> Message:
    return Message(Sender.READER, payload, kind, description, with_crc=with_crc)


def _card(payload: bytes, description: str, *, with_crc: bool = True) -> Message:
    return Message(Sender.CARD, payload, FrameKind.STANDARD, description,
                   with_crc=with_crc)


def ultralight_transcript(mem: CardMemory | None = None) -> Transcript:
    """The 7-message Ultralight read session: wake-up, single-page read,
    full-range fast read, halt."""
    mem = mem or CardMemory.ultralight_default()
    if len(mem.pages) < 0x14:
        raise ParameterError("ultralight memory needs at least 0x14 pages")
    messages = (
        _reader(bytes([WUPA]), "WUPA", with_crc=False, kind=FrameKind.SHORT),
        _card(ULTRALIGHT_ATQA, "ATQA", with_crc=False),
        _reader(bytes([READ, 0x00]), "READ page 00"),
        _card(mem.read_pages(0, 4), "READ result"),
        _reader(bytes([FAST_READ, 0x00, 0x13]), "FAST READ 00-13"),
        _card(mem.read_pages(0, 0x14), "FAST READ result"),
        _reader(bytes([HALT, 0x00]), "HALT"),
    )
    return Transcript(messages=messages, card_kind=CardKind.ULTRALIGHT)


def classic_transcript(mem: CardMemory | None = None, seed: int = 0) -> Transcript:
    """The 13-message Classic read session including the authentication
    handshake.

    Encrypted and nonce-dependent payloads (card nonce, reader response,
    card response, read command and its result) are opaque bytes drawn from
    a generator seeded with ``seed``; the cipher itself is out of scope.
    The same seed always yields the identical transcript.
    """
    mem = mem or CardMemory.classic_default()
    if len(mem.uid) != 4:
        raise ParameterError("classic model uses a 4-byte uid")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    nonce_card = bytes(rng.integers(0, 256, size=4, dtype=np.uint8))
    reader_auth = bytes(rng.integers(0, 256, size=8, dtype=np.uint8))
    card_auth = bytes(rng.integers(0, 256, size=4, dtype=np.uint8))
    read_cmd = bytes(rng.integers(0, 256, size=4, dtype=np.uint8))
    read_result = bytes(rng.integers(0, 256, size=16, dtype=np.uint8))
    bcc = 0
    for byte in mem.uid:
        bcc ^= byte
    uid_bcc = mem.uid + bytes([bcc])
    messages = (
        _reader(bytes([WUPA]), "WUPA", with_crc=False, kind=FrameKind.SHORT),
        _card(CLASSIC_ATQA, "ATQA", with_crc=False),
        _reader(bytes([SEL_CL1, ANTICOLLISION_NVB]), "SELECT", with_crc=False),
        _card(uid_bcc, "UID+BCC", with_crc=False),
        _reader(bytes([SEL_CL1, SELECT_NVB]) + uid_bcc, "SELECT+UID"),
        _card(bytes([SAK_CLASSIC_1K]), "SAK"),
        _reader(bytes([AUTH_KEY_A, 0x07]), "AUTH block 07"),
        _card(nonce_card, "card nonce", with_crc=False),
        _reader(reader_auth, "encrypted reader auth", with_crc=False),
        _card(card_auth, "encrypted card auth", with_crc=False),
        _reader(read_cmd, "encrypted READ", with_crc=False),
        _card(read_result, "encrypted READ result", with_crc=False),
        _reader(bytes([HALT, 0x00]), "HALT"),
    )
    return Transcript(messages=messages, card_kind=CardKind.CLASSIC,
                      session_seed=seed)


def build_transcript(card_kind: CardKind, seed: int = 0,
                     mem: CardMemory | None = None) -> Transcript:
    if card_kind is CardKind.ULTRALIGHT:
        return ultralight_transcript(mem)
    return classic_transcript(mem, seed)


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def message_to_dict(msg: Message) -> dict:
    return {
        "description": msg.description,
        "frame_kind": msg.frame_kind.value,
        "hex_payload": msg.payload.hex(),
        "sender": msg.sender.value,
        "with_crc": msg.with_crc,
    }


def message_from_dict(data: dict) -> Message:
    return Message(
        sender=Sender(data["sender"]),
        payload=bytes.fromhex(data["hex_payload"]),
        frame_kind=FrameKind(data["frame_kind"]),
        description=data.get("description", ""),
        with_crc=bool(data.get("with_crc", False)),
    )


def transcript_to_json(transcript: Transcript) -> str:
    doc = {
        "card_kind": transcript.card_kind.value,
        "messages": [message_to_dict(m) for m in transcript.messages],
        "session_seed": transcript.session_seed,
    }
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def transcript_from_json(text: str) -> Transcript:
    doc = json.loads(text)
    return Transcript(
        messages=tuple(message_from_dict(m) for m in doc["messages"]),
        card_kind=CardKind(doc["card_kind"]),
        session_seed=doc.get("session_seed"),
    )


def memory_to_hexdump(mem: CardMemory) -> str:
    """Hex-dump text: uid comment line, then one page/block per line."""
    lines = [f"# uid={mem.uid.hex()}"]
    lines.extend(page.hex() for page in mem.pages)
    return "\n".join(lines) + "\n"


def memory_from_hexdump(text: str) -> CardMemory:
    uid = b""
    pages = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, _, value = line.lstrip("# ").partition("=")
            if key == "uid":
                uid = bytes.fromhex(value)
            continue
        pages.append(bytes.fromhex(line))
    if not uid:
        raise StructuralError("hexdump is missing the uid line")
    return CardMemory(pages=tuple(pages), uid=uid)


def write_transcript(transcript: Transcript, path: str | Path) -> None:
    Path(path).write_text(transcript_to_json(transcript))


def read_transcript(path: str | Path) -> Transcript:
    return transcript_from_json(Path(path).read_text())
