"""Fixed-grammar tokenization of pseudo-octal trajectories.

The vocabulary has exactly 270 entries:

    ids 0..5     specials [PAD] [BOS] [EOS] [UNK] [BOC] [EOC]
    ids 6..13    octal digit characters '0'..'7'
    ids 14..269  the 256 two-hex-character base cell tokens "00".."ff"

One position (one minute of trajectory) is always an 18-token frame:
[BOC], one base cell token, 15 digit tokens, [EOC]. Terminals [BOS] and
[EOS] are optional wrappers around whole trajectories and never count
towards context-length arithmetic.
"""

from __future__ import annotations

from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .geo_core import EmptyInputError

__all__ = [
    "PAD_ID", "BOS_ID", "EOS_ID", "UNK_ID", "BOC_ID", "EOC_ID",
    "DIGIT_ID_BASE", "CELL_ID_BASE", "FRAME_LEN", "VOCAB_SIZE",
    "Vocabulary", "VOCAB", "TokenSequence",
    "FrameGrammarError", "ChunkConfigError",
    "encode_position", "encode_trajectory", "decode", "chunk",
    "read_corpus", "write_corpus_text", "write_corpus_binary",
]

PAD_ID = 0
BOS_ID = 1
EOS_ID = 2
UNK_ID = 3
BOC_ID = 4
EOC_ID = 5
DIGIT_ID_BASE = 6      # id of digit d is 6 + d
CELL_ID_BASE = 14      # id of base cell b is 14 + b
FRAME_LEN = 18
VOCAB_SIZE = 270

_CORPUS_MAGIC = b"HTK1"


class FrameGrammarError(ValueError):
    """Token stream violates the 18-token frame grammar.

    Carries the absolute index of the offending token in .offset.
    """

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (token offset {offset})")
        self.offset = offset


class ChunkConfigError(ValueError):
    """Chunk overlap/length configuration is unusable."""


class Vocabulary:
    """The static 270-token vocabulary; ids are dense and stable."""

    def __init__(self) -> None:
        tokens = ["[PAD]", "[BOS]", "[EOS]", "[UNK]", "[BOC]", "[EOC]"]
        tokens += [str(d) for d in range(8)]
        tokens += [format(b, "02x") for b in range(256)]
        self.id_to_token: tuple[str, ...] = tuple(tokens)
        self.token_to_id: dict[str, int] = {t: i for i, t in enumerate(tokens)}
        assert len(self.id_to_token) == VOCAB_SIZE

    def __len__(self) -> int:
        return VOCAB_SIZE

    @staticmethod
    def is_digit_id(i: int) -> bool:
        return DIGIT_ID_BASE <= i < CELL_ID_BASE

    @staticmethod
    def is_cell_id(i: int) -> bool:
        return CELL_ID_BASE <= i < VOCAB_SIZE


VOCAB = Vocabulary()


class TokenSequence(NamedTuple):
    ids: np.ndarray            # int32
    attention_mask: np.ndarray  # uint8, 0 exactly on [PAD]


def encode_position(s: str) -> list[int]:
    """One pseudo-octal id to its 18-token frame."""
    if len(s) != 17:
        raise FrameGrammarError(f"pseudo-octal id must be 17 chars, got {len(s)}", 0)
    try:
        base = int(s[:2], 16)
    except ValueError:
        raise FrameGrammarError(f"bad base cell chars {s[:2]!r}", 1) from None
    if s[:2] != format(base, "02x"):
        raise FrameGrammarError(f"base cell chars not lowercase hex: {s[:2]!r}", 1)
    ids = [BOC_ID, CELL_ID_BASE + base]
    for k, ch in enumerate(s[2:]):
        if ch not in "01234567":
            raise FrameGrammarError(f"bad octal digit {ch!r}", 2 + k)
        ids.append(DIGIT_ID_BASE + int(ch))
    ids.append(EOC_ID)
    return ids


def encode_trajectory(cells: Sequence[str], with_terminals: bool = False) -> TokenSequence:
    """Concatenated frames for a trajectory of pseudo-octal ids."""
    cells = list(cells)
    if not cells:
        raise EmptyInputError("cannot tokenize an empty trajectory")
    ids: list[int] = [BOS_ID] if with_terminals else []
    for s in cells:
        ids.extend(encode_position(s))
    if with_terminals:
        ids.append(EOS_ID)
    arr = np.asarray(ids, dtype=np.int32)
    return TokenSequence(arr, np.ones(len(arr), dtype=np.uint8))


def _frame_to_str(frame: np.ndarray, start: int) -> str:
    if frame[0] != BOC_ID:
        raise FrameGrammarError("expected [BOC] at frame start", start)
    if not Vocabulary.is_cell_id(int(frame[1])):
        raise FrameGrammarError("expected a base cell token", start + 1)
    chars = [format(int(frame[1]) - CELL_ID_BASE, "02x")]
    for k in range(2, 17):
        t = int(frame[k])
        if not Vocabulary.is_digit_id(t):
            raise FrameGrammarError("expected a digit token", start + k)
        chars.append(str(t - DIGIT_ID_BASE))
    if frame[17] != EOC_ID:
        raise FrameGrammarError("expected [EOC] at frame end", start + 17)
    return "".join(chars)


def decode(t: TokenSequence | np.ndarray | Sequence[int]) -> list[str]:
    """Frames back to pseudo-octal ids; strict inverse of encode_trajectory.

    Leading [BOS], trailing [EOS] and trailing [PAD] are stripped first.
    Reported offsets refer to the unstripped input.
    """
    ids = np.asarray(t.ids if isinstance(t, TokenSequence) else t, dtype=np.int64)
    end = len(ids)
    while end > 0 and ids[end - 1] == PAD_ID:
        end -= 1
    start = 0
    if end > start and ids[start] == BOS_ID:
        start += 1
    if end > start and ids[end - 1] == EOS_ID:
        end -= 1
    body = ids[start:end]
    if len(body) == 0:
        raise EmptyInputError("no frames to decode")
    if len(body) % FRAME_LEN != 0:
        raise FrameGrammarError(
            f"sequence of {len(body)} tokens ends mid-frame", start + len(body) - 1
        )
    return [
        _frame_to_str(body[o:o + FRAME_LEN], start + o)
        for o in range(0, len(body), FRAME_LEN)
    ]


def chunk(t: TokenSequence, max_len: int = 2560, overlap: int = 252) -> list[TokenSequence]:
    """Split into model-sized windows without ever cutting a frame.

    Consecutive chunks share exactly `overlap` tokens. The payload per
    chunk is the largest whole-frame count that fits max_len (142 frames
    for the 2560 default); every chunk is right-padded to max_len with
    [PAD] carrying attention mask 0.
    """
    if overlap >= max_len:
        raise ChunkConfigError(f"overlap {overlap} must be smaller than max_len {max_len}")
    if overlap % FRAME_LEN != 0:
        raise ChunkConfigError(f"overlap {overlap} is not a multiple of {FRAME_LEN}")
    payload = (max_len // FRAME_LEN) * FRAME_LEN
    if payload <= overlap:
        raise ChunkConfigError(f"max_len {max_len} leaves no room beyond the overlap")

    ids = t.ids
    n = len(ids)
    if n % FRAME_LEN != 0:
        raise ChunkConfigError(f"sequence length {n} is not frame-aligned")
    out: list[TokenSequence] = []
    stride = payload - overlap
    pos = 0
    while True:
        piece = ids[pos:pos + payload]
        padded = np.full(max_len, PAD_ID, dtype=np.int32)
        padded[: len(piece)] = piece
        mask = np.zeros(max_len, dtype=np.uint8)
        mask[: len(piece)] = 1
        out.append(TokenSequence(padded, mask))
        if pos + payload >= n:
            break
        pos += stride
    return out


# ---------------------------------------------------------------------------
# Corpus files. Text: one trajectory per line, space-separated decimal
# ids, UTF-8. Binary: magic "HTK1", uint32 sequence count, then per
# sequence a uint32 token count followed by that many uint16 ids; all
# integers little-endian.

def write_corpus_text(path: str, sequences: Iterable[np.ndarray]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for seq in sequences:
            fh.write(" ".join(str(int(i)) for i in np.asarray(seq).ravel()))
            fh.write("\n")


def write_corpus_binary(path: str, sequences: Iterable[np.ndarray]) -> None:
    seqs = [np.asarray(s).ravel().astype("<u2") for s in sequences]
    with open(path, "wb") as fh:
        fh.write(_CORPUS_MAGIC)
        fh.write(np.array(len(seqs), dtype="<u4").tobytes())
        for seq in seqs:
            fh.write(np.array(len(seq), dtype="<u4").tobytes())
            fh.write(seq.tobytes())


def read_corpus(path: str) -> list[np.ndarray]:
    """Read either corpus form, sniffing the binary magic."""
    with open(path, "rb") as fh:
        head = fh.read(4)
        if head == _CORPUS_MAGIC:
            data = fh.read()
            off = 0
            (count,) = np.frombuffer(data[off:off + 4], dtype="<u4")
            off += 4
            out = []
            for _ in range(int(count)):
                (m,) = np.frombuffer(data[off:off + 4], dtype="<u4")
                off += 4
                seq = np.frombuffer(data[off:off + 2 * int(m)], dtype="<u2")
                off += 2 * int(m)
                out.append(seq.astype(np.int32))
            return out
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(np.array(line.split(), dtype=np.int32))
    return out
