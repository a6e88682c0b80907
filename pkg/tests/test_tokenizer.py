import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hextraj import tokenizer
from hextraj.tokenizer import (
    BOC_ID,
    BOS_ID,
    CELL_ID_BASE,
    DIGIT_ID_BASE,
    EOC_ID,
    EOS_ID,
    FRAME_LEN,
    PAD_ID,
    UNK_ID,
    VOCAB,
    VOCAB_SIZE,
    ChunkConfigError,
    FrameGrammarError,
    TokenSequence,
    chunk,
    decode,
    encode_position,
    encode_trajectory,
    read_corpus,
    write_corpus_binary,
    write_corpus_text,
)

GOLDEN_TEXT = "1c551026435077777"


def test_vocabulary_roster():
    assert VOCAB_SIZE == 270
    assert len(VOCAB.id_to_token) == 270
    assert VOCAB.token_to_id["[PAD]"] == PAD_ID == 0
    assert VOCAB.token_to_id["[BOS]"] == BOS_ID == 1
    assert VOCAB.token_to_id["[EOS]"] == EOS_ID == 2
    assert VOCAB.token_to_id["[UNK]"] == UNK_ID == 3
    assert VOCAB.token_to_id["[BOC]"] == BOC_ID == 4
    assert VOCAB.token_to_id["[EOC]"] == EOC_ID == 5
    assert VOCAB.token_to_id["0"] == DIGIT_ID_BASE == 6
    assert VOCAB.token_to_id["7"] == 13
    assert VOCAB.token_to_id["00"] == CELL_ID_BASE == 14
    assert VOCAB.token_to_id["1c"] == 14 + 0x1C
    assert VOCAB.token_to_id["ff"] == 269
    assert len(set(VOCAB.id_to_token)) == 270


def test_context_window_token_counts():
    # 60 s per position: 30, 60 and 100 minutes of context are 540,
    # 1080 and 1800 tokens exactly.
    for minutes, tokens in ((30, 540), (60, 1080), (100, 1800)):
        assert minutes * FRAME_LEN == tokens


def test_golden_frame_encoding():
    ids = encode_position(GOLDEN_TEXT)
    expected = (
        [BOC_ID, 14 + 0x1C]
        + [DIGIT_ID_BASE + int(c, 8) for c in "551026435077777"]
        + [EOC_ID]
    )
    assert list(ids) == expected
    assert len(ids) == FRAME_LEN


def test_encode_trajectory_shape_and_mask():
    ts = encode_trajectory([GOLDEN_TEXT] * 5)
    assert isinstance(ts, TokenSequence)
    assert ts.ids.shape == (90,)
    assert ts.ids.dtype == np.int32
    assert ts.attention_mask.all()


def test_encode_with_terminals():
    ts = encode_trajectory([GOLDEN_TEXT], with_terminals=True)
    assert ts.ids[0] == BOS_ID
    assert ts.ids[-1] == EOS_ID
    assert len(ts.ids) == FRAME_LEN + 2


def test_decode_inverts_encode():
    cells = [GOLDEN_TEXT, "1c551026435177777", "1c551026435277777"]
    assert decode(encode_trajectory(cells).ids) == cells
    assert decode(encode_trajectory(cells, with_terminals=True).ids) == cells


def test_decode_strips_padding():
    ts = encode_trajectory([GOLDEN_TEXT])
    padded = np.concatenate([ts.ids, np.zeros(18, dtype=np.int32)])
    assert decode(padded) == [GOLDEN_TEXT]


def test_decode_rejects_grammar_violations():
    ids = encode_trajectory([GOLDEN_TEXT]).ids.copy()
    ids[0] = EOC_ID
    with pytest.raises(FrameGrammarError) as exc:
        decode(ids)
    assert exc.value.offset == 0

    ids = encode_trajectory([GOLDEN_TEXT, GOLDEN_TEXT]).ids.copy()
    ids[19] = DIGIT_ID_BASE  # digit where the second frame's base belongs
    with pytest.raises(FrameGrammarError) as exc:
        decode(ids)
    assert exc.value.offset == 19

    with pytest.raises(FrameGrammarError):
        decode(np.arange(7, dtype=np.int32))  # not a frame multiple


def test_chunk_arithmetic_150_frames():
    # 150 frames = 2700 tokens: payload is 142 frames (2556 tokens) so
    # the first window covers [0, 2556) and the second, stepping back a
    # 14-frame overlap, covers [2304, 2700) plus padding.
    ts = encode_trajectory([GOLDEN_TEXT] * 150)
    chunks = chunk(ts, max_len=2560, overlap=252)
    assert len(chunks) == 2
    first, second = chunks
    assert len(first.ids) == len(second.ids) == 2560
    assert first.attention_mask.sum() == 2556
    assert np.array_equal(first.ids[:2556], ts.ids[:2556])
    assert np.all(first.ids[2556:] == PAD_ID)
    assert second.attention_mask.sum() == 2700 - 2304
    assert np.array_equal(second.ids[:396], ts.ids[2304:2700])
    assert np.all(second.ids[396:] == PAD_ID)


def test_chunk_overlap_reassembly():
    ts = encode_trajectory([GOLDEN_TEXT] * 150)
    chunks = chunk(ts, max_len=2560, overlap=252)
    rebuilt = list(chunks[0].ids[: chunks[0].attention_mask.sum()])
    for c in chunks[1:]:
        payload = c.ids[: c.attention_mask.sum()]
        rebuilt.extend(payload[252:])
    assert np.array_equal(np.array(rebuilt), ts.ids)


def test_chunk_short_sequence_single_window():
    ts = encode_trajectory([GOLDEN_TEXT] * 10)
    chunks = chunk(ts)
    assert len(chunks) == 1
    assert chunks[0].attention_mask.sum() == 180
    assert len(chunks[0].ids) == 2560


def test_chunk_never_splits_frames():
    ts = encode_trajectory([GOLDEN_TEXT] * 300)
    for c in chunk(ts):
        n = int(c.attention_mask.sum())
        assert n % FRAME_LEN == 0
        assert decode(c.ids)  # every window decodes cleanly


def test_chunk_config_validation():
    ts = encode_trajectory([GOLDEN_TEXT] * 4)
    with pytest.raises(ChunkConfigError):
        chunk(ts, max_len=100, overlap=17)  # overlap not frame aligned
    with pytest.raises(ChunkConfigError):
        chunk(ts, max_len=36, overlap=36)  # overlap must be < payload


def test_corpus_text_roundtrip(tmp_path):
    seqs = [encode_trajectory([GOLDEN_TEXT] * n).ids for n in (3, 5, 7)]
    path = tmp_path / "corpus.txt"
    write_corpus_text(path, seqs)
    back = read_corpus(path)
    assert len(back) == 3
    for a, b in zip(seqs, back):
        assert np.array_equal(a, b)


def test_corpus_binary_roundtrip(tmp_path):
    seqs = [encode_trajectory([GOLDEN_TEXT] * n).ids for n in (3, 5, 7)]
    path = tmp_path / "corpus.bin"
    write_corpus_binary(path, seqs)
    with open(path, "rb") as fh:
        assert fh.read(4) == b"HTK1"
    back = read_corpus(path)
    assert len(back) == 3
    for a, b in zip(seqs, back):
        assert np.array_equal(a, b)


def test_empty_trajectory_rejected():
    from hextraj.geo_core import EmptyInputError

    with pytest.raises(EmptyInputError):
        encode_trajectory([])


cell_st = st.from_regex(r"[0-6][0-9a-f][0-6]{10}77777", fullmatch=True)


@settings(max_examples=200, deadline=None)
@given(st.lists(cell_st, min_size=1, max_size=8))
def test_encode_decode_identity_property(cells):
    assert decode(encode_trajectory(cells).ids) == cells
