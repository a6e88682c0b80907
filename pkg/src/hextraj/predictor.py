"""Autoregressive next-token model over tokenized trajectories.

The model is a backoff n-gram whose context order is counted in frames,
not tokens: every context starts at a frame boundary and runs up to the
current position. With 18-token frames a token-counted window would sit
mostly inside the resolution padding and carry no positional signal, so
frame anchoring is what makes the model actually condition on where the
vessel has been. Backoff is "stupid backoff": longest matching context
wins, each step down multiplies scores by a constant factor, and an
add-alpha unigram floor guarantees every token nonzero mass.

Context tables are flat sorted arrays keyed by a rolling hash of the
context token span, built with vectorised numpy passes so training on a
few hundred thousand tokens stays interactive.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import Iterable, Optional, Protocol, Sequence

import numpy as np

from . import tokenizer
from .geo_core import GeoPoint, centroid, haversine, initial_bearing
from .h3_codec import cell_to_geo, from_pseudo_octal
from .tokenizer import BOC_ID, CELL_ID_BASE, DIGIT_ID_BASE, EOC_ID, FRAME_LEN, VOCAB_SIZE

__all__ = [
    "SequenceModel",
    "NGramModel",
    "train_ngram",
    "generate",
    "hallucination_filter",
    "ensemble_predict",
    "PredictionBundle",
    "GenerationStallError",
    "NoViablePredictionError",
    "PredictorConfigError",
]

_MASK64 = (1 << 64) - 1
_HASH_BASE = 1099511628211  # FNV-1a prime, odd, good avalanche on u64 wrap
_HASH_SEED = 1469598103934665603

_MODEL_MAGIC = b"NGM1"


class PredictorConfigError(ValueError):
    """Bad model hyperparameters or a context that breaks the grammar."""


class GenerationStallError(RuntimeError):
    """The model put zero mass on every token the grammar allows."""


class NoViablePredictionError(RuntimeError):
    """Every ensemble sample failed the hallucination filter."""

    def __init__(self, reasons: Sequence[str]):
        super().__init__(f"all samples rejected: {', '.join(reasons)}")
        self.reasons = list(reasons)


class SequenceModel(Protocol):
    """Anything that maps a token prefix to a next-token distribution."""

    def next_token_dist(self, prefix: np.ndarray) -> np.ndarray:
        """Return shape (270,) probabilities summing to 1."""
        ...


def _prefix_hashes(seq: np.ndarray, powers: np.ndarray, inv_powers: np.ndarray) -> np.ndarray:
    """H[j] = hash of seq[:j], all arithmetic mod 2**64.

    H[j] = SEED*B**j + sum_{t<j} (seq[t]+1)*B**(j-1-t). Computed via the
    inverse-power trick so one cumsum covers the whole sequence.
    """
    n = len(seq)
    u = (seq.astype(np.uint64) + np.uint64(1)) * inv_powers[1 : n + 1]
    acc = np.empty(n + 1, dtype=np.uint64)
    acc[0] = 0
    np.cumsum(u, out=acc[1:])
    return (np.uint64(_HASH_SEED) + acc) * powers[: n + 1]


def _span_hash(H: np.ndarray, a: np.ndarray, b: np.ndarray, powers: np.ndarray) -> np.ndarray:
    """Hash of seq[a:b] given prefix hashes, vectorised over pairs."""
    return H[b] - (H[a] - np.uint64(_HASH_SEED)) * powers[b - a]


@dataclass
class _Level:
    """One backoff level: CSR over (context hash -> continuation counts)."""

    keys: np.ndarray  # (k,) uint64, sorted
    totals: np.ndarray  # (k,) int64
    indptr: np.ndarray  # (k+1,) int64
    tokens: np.ndarray  # (nnz,) uint16
    counts: np.ndarray  # (nnz,) int64


class NGramModel:
    """Frame-anchored backoff n-gram. See module docstring."""

    def __init__(
        self,
        order_frames: int = 8,
        alpha: float = 0.1,
        backoff: float = 0.4,
    ):
        if order_frames < 1:
            raise PredictorConfigError("order_frames must be at least 1")
        if alpha <= 0:
            raise PredictorConfigError("alpha must be positive")
        if not 0.0 < backoff <= 1.0:
            raise PredictorConfigError("backoff factor must be in (0, 1]")
        self.order_frames = order_frames
        self.alpha = alpha
        self.backoff = backoff
        self.levels: list[_Level] = []
        self.unigram = np.zeros(VOCAB_SIZE, dtype=np.int64)
        self.unigram_total = 0
        self._powers = _u64_powers(_HASH_BASE, 256)
        self._inv_powers = _u64_powers(_modinv64(_HASH_BASE), 256)

    def _ensure_powers(self, n: int) -> None:
        if n >= len(self._powers):
            size = 1 << (n + 1).bit_length()
            self._powers = _u64_powers(_HASH_BASE, size)
            self._inv_powers = _u64_powers(_modinv64(_HASH_BASE), size)

    # -- training ----------------------------------------------------------

    def fit(self, corpus: Iterable[np.ndarray]) -> "NGramModel":
        seqs = [np.asarray(s, dtype=np.int64).ravel() for s in corpus]
        seqs = [s for s in seqs if len(s) > 0]
        if not seqs:
            raise PredictorConfigError("training corpus is empty")
        for s in seqs:
            if len(s) % FRAME_LEN:
                raise PredictorConfigError("training sequences must be whole frames")
            if s.min() < 0 or s.max() >= VOCAB_SIZE:
                raise PredictorConfigError("token id outside the vocabulary")

        for s in seqs:
            self.unigram += np.bincount(s, minlength=VOCAB_SIZE)
        self.unigram_total = int(self.unigram.sum())

        self._ensure_powers(max(len(s) for s in seqs))
        hashes = [
            _prefix_hashes(s, self._powers, self._inv_powers) for s in seqs
        ]
        # powers indexed by span length; spans at level f have length
        # i - 18*(frame - f) = 18*f + offset.
        self.levels = []
        for f in range(self.order_frames + 1):
            key_parts = []
            tok_parts = []
            for s, H in zip(seqs, hashes):
                i = np.arange(len(s), dtype=np.int64)
                frame = i // FRAME_LEN
                ok = frame >= f
                if not ok.any():
                    continue
                i = i[ok]
                a = FRAME_LEN * (i // FRAME_LEN - f)
                key_parts.append(_span_hash(H, a, i, self._powers))
                tok_parts.append(s[i])
            if not key_parts:
                self.levels.append(_empty_level())
                continue
            keys = np.concatenate(key_parts)
            toks = np.concatenate(tok_parts)
            self.levels.append(_build_level(keys, toks))
        return self

    # -- scoring -----------------------------------------------------------

    def next_token_dist(self, prefix: np.ndarray) -> np.ndarray:
        prefix = np.asarray(prefix, dtype=np.int64).ravel()
        self._ensure_powers(len(prefix))
        H = _prefix_hashes(prefix, self._powers, self._inv_powers)
        n = len(prefix)
        frame = n // FRAME_LEN

        scores = np.zeros(VOCAB_SIZE)
        seen = np.zeros(VOCAB_SIZE, dtype=bool)
        factor = 1.0
        for f in range(min(self.order_frames, frame), -1, -1):
            a = FRAME_LEN * (frame - f)
            key = np.uint64(
                (int(H[n]) - (int(H[a]) - _HASH_SEED) * int(self._powers[n - a])) & _MASK64
            )
            level = self.levels[f] if f < len(self.levels) else None
            if level is not None and len(level.keys):
                pos = int(np.searchsorted(level.keys, key))
                if pos < len(level.keys) and level.keys[pos] == key:
                    lo, hi = level.indptr[pos], level.indptr[pos + 1]
                    toks = level.tokens[lo:hi].astype(np.int64)
                    rel = level.counts[lo:hi] / level.totals[pos]
                    new = ~seen[toks]
                    scores[toks[new]] = factor * rel[new]
                    seen[toks[new]] = True
            factor *= self.backoff
        floor = (self.unigram + self.alpha) / (self.unigram_total + self.alpha * VOCAB_SIZE)
        scores[~seen] = factor * floor[~seen]
        return scores / scores.sum()

    # -- persistence ---------------------------------------------------------

    def save(self, path: str) -> None:
        with open(path, "wb") as fh:
            fh.write(self.to_bytes())

    def to_bytes(self) -> bytes:
        parts = [
            _MODEL_MAGIC,
            struct.pack("<IIdd", 1, self.order_frames, self.alpha, self.backoff),
            struct.pack("<QQ", _HASH_BASE, _HASH_SEED),
            struct.pack("<I", len(self.levels)),
            struct.pack("<q", self.unigram_total),
            self.unigram.astype("<i8").tobytes(),
        ]
        for lv in self.levels:
            parts.append(struct.pack("<QQ", len(lv.keys), len(lv.tokens)))
            parts.append(lv.keys.astype("<u8").tobytes())
            parts.append(lv.totals.astype("<i8").tobytes())
            parts.append(lv.indptr.astype("<i8").tobytes())
            parts.append(lv.tokens.astype("<u2").tobytes())
            parts.append(lv.counts.astype("<i8").tobytes())
        return b"".join(parts)

    @classmethod
    def load(cls, path: str) -> "NGramModel":
        with open(path, "rb") as fh:
            return cls.from_bytes(fh.read())

    @classmethod
    def from_bytes(cls, blob: bytes) -> "NGramModel":
        if blob[:4] != _MODEL_MAGIC:
            raise PredictorConfigError("not a model file (bad magic)")
        off = 4
        version, order, alpha, backoff = struct.unpack_from("<IIdd", blob, off)
        off += struct.calcsize("<IIdd")
        if version != 1:
            raise PredictorConfigError(f"unsupported model version {version}")
        base, seed = struct.unpack_from("<QQ", blob, off)
        off += 16
        if base != _HASH_BASE or seed != _HASH_SEED:
            raise PredictorConfigError("model was built with a different hash function")
        (n_levels,) = struct.unpack_from("<I", blob, off)
        off += 4
        model = cls(order_frames=order, alpha=alpha, backoff=backoff)
        (model.unigram_total,) = struct.unpack_from("<q", blob, off)
        off += 8
        model.unigram = np.frombuffer(blob, dtype="<i8", count=VOCAB_SIZE, offset=off).copy()
        off += VOCAB_SIZE * 8
        model.levels = []
        for _ in range(n_levels):
            nk, nnz = struct.unpack_from("<QQ", blob, off)
            off += 16

            def take(dtype: str, count: int) -> np.ndarray:
                nonlocal off
                arr = np.frombuffer(blob, dtype=dtype, count=count, offset=off).copy()
                off += arr.nbytes
                return arr

            model.levels.append(
                _Level(
                    keys=take("<u8", nk),
                    totals=take("<i8", nk),
                    indptr=take("<i8", nk + 1),
                    tokens=take("<u2", nnz),
                    counts=take("<i8", nnz),
                )
            )
        return model


def _u64_powers(base: int, n: int) -> np.ndarray:
    out = np.empty(n, dtype=np.uint64)
    v = 1
    for i in range(n):
        out[i] = v
        v = (v * base) & _MASK64
    return out


def _modinv64(a: int) -> int:
    # Newton iteration doubles correct bits; a must be odd.
    x = a
    for _ in range(6):
        x = (x * (2 - a * x)) & _MASK64
    return x


def _empty_level() -> _Level:
    return _Level(
        keys=np.empty(0, dtype=np.uint64),
        totals=np.empty(0, dtype=np.int64),
        indptr=np.zeros(1, dtype=np.int64),
        tokens=np.empty(0, dtype=np.uint16),
        counts=np.empty(0, dtype=np.int64),
    )


def _build_level(keys: np.ndarray, toks: np.ndarray) -> _Level:
    uniq, inv = np.unique(keys, return_inverse=True)
    totals = np.bincount(inv, minlength=len(uniq)).astype(np.int64)
    pair = inv.astype(np.uint64) * np.uint64(VOCAB_SIZE) + toks.astype(np.uint64)
    upair, pcount = np.unique(pair, return_counts=True)
    ctx_of_pair = (upair // np.uint64(VOCAB_SIZE)).astype(np.int64)
    indptr = np.zeros(len(uniq) + 1, dtype=np.int64)
    np.cumsum(np.bincount(ctx_of_pair, minlength=len(uniq)), out=indptr[1:])
    return _Level(
        keys=uniq,
        totals=totals,
        indptr=indptr,
        tokens=(upair % np.uint64(VOCAB_SIZE)).astype(np.uint16),
        counts=pcount.astype(np.int64),
    )


def train_ngram(
    corpus: Iterable[np.ndarray],
    k: int = 8,
    alpha: float = 0.1,
    backoff: float = 0.4,
) -> NGramModel:
    """Fit the n-gram; k is the context order in frames of history."""
    return NGramModel(order_frames=k, alpha=alpha, backoff=backoff).fit(corpus)


# ---------------------------------------------------------------------------
# Constrained generation.

_FORCED_SEVEN = DIGIT_ID_BASE + 7
_NUM_BASE_CELLS = 122


def _allowed_ids(offset: int) -> np.ndarray:
    # Only tokens that can appear in a structurally valid cell: 122 base
    # cells, digits 0..6 in the ten live positions, then the five-digit
    # resolution padding of 7s.
    if offset == 0:
        return np.array([BOC_ID], dtype=np.int64)
    if offset == 1:
        return np.arange(CELL_ID_BASE, CELL_ID_BASE + _NUM_BASE_CELLS, dtype=np.int64)
    if 2 <= offset <= 11:
        return np.arange(DIGIT_ID_BASE, DIGIT_ID_BASE + 7, dtype=np.int64)
    if 12 <= offset <= 16:
        return np.array([_FORCED_SEVEN], dtype=np.int64)
    return np.array([EOC_ID], dtype=np.int64)


_MASKS = [_allowed_ids(o) for o in range(FRAME_LEN)]


def generate(
    model: SequenceModel,
    context: np.ndarray,
    n_frames: int,
    temperature: float = 1.0,
    seed: int = 0,
) -> np.ndarray:
    """Roll the model forward n_frames, enforcing the frame grammar.

    The context must be whole frames. Offsets with a single legal token
    ([BOC], the resolution padding, [EOC]) are emitted without querying
    the model or consuming randomness, so a fixed seed gives identical
    output whether or not those positions were ever in doubt.
    """
    context = np.asarray(context, dtype=np.int64).ravel()
    if len(context) % FRAME_LEN:
        raise PredictorConfigError("context must end on a frame boundary")
    if n_frames < 1:
        raise PredictorConfigError("n_frames must be at least 1")
    if temperature < 0:
        raise PredictorConfigError("temperature cannot be negative")

    rng = np.random.default_rng(seed)
    seq = list(context)
    out = np.empty(n_frames * FRAME_LEN, dtype=np.int32)
    for j in range(n_frames * FRAME_LEN):
        allowed = _MASKS[j % FRAME_LEN]
        if len(allowed) == 1:
            tok = int(allowed[0])
        else:
            dist = model.next_token_dist(np.array(seq, dtype=np.int64))
            p = dist[allowed]
            total = p.sum()
            if total <= 0.0:
                raise GenerationStallError(
                    f"no admissible token has mass at position {len(seq)}"
                )
            p = p / total
            if temperature == 0.0:
                tok = int(allowed[np.argmax(p)])
            else:
                q = p ** (1.0 / temperature)
                q /= q.sum()
                tok = int(allowed[np.searchsorted(np.cumsum(q), rng.random(), side="right")])
        out[j] = tok
        seq.append(tok)
    return out


# ---------------------------------------------------------------------------
# Ensemble prediction with hallucination rejection.

def hallucination_filter(
    curve: np.ndarray,
    max_speed_kmh: float = 188.904,
    max_turn_deg: float = 150.0,
    dt_s: float = 60.0,
) -> tuple[bool, Optional[str]]:
    """Reject physically implausible decoded trajectories.

    Returns (True, None) on pass, else (False, reason) with reason
    "jump" for an over-speed hop or "u-turn" for a heading reversal
    sharper than max_turn_deg between consecutive hops.
    """
    curve = np.asarray(curve, dtype=np.float64).reshape(-1, 2)
    if len(curve) < 2:
        raise PredictorConfigError("filter needs at least two points")
    last_heading = None
    for i in range(len(curve) - 1):
        a = GeoPoint(*curve[i])
        b = GeoPoint(*curve[i + 1])
        d = haversine(a, b)
        if d / dt_s * 3.6 > max_speed_kmh:
            return False, "jump"
        if d < 1e-9:
            continue  # same cell twice; no heading information
        heading = initial_bearing(a, b)
        if last_heading is not None:
            turn = abs(heading - last_heading)
            if turn > 180.0:
                turn = 360.0 - turn
            if turn > max_turn_deg:
                return False, "u-turn"
        last_heading = heading
    return True, None


@dataclass
class PredictionBundle:
    """Retained ensemble samples plus endpoint consensus."""

    samples: list[np.ndarray]
    endpoints: np.ndarray  # (r, 2) lat/lon of retained sample endpoints
    centroid: GeoPoint
    agreement: float  # fraction of endpoints within the agreement radius
    representative: int  # index into samples, endpoint nearest centroid
    rejected: int
    reasons: list[str] = field(default_factory=list)

    @property
    def representative_curve(self) -> np.ndarray:
        return self.samples[self.representative]


def decode_to_curve(ids: np.ndarray) -> np.ndarray:
    """Token ids -> (n, 2) array of cell-centre lat/lon."""
    cells = tokenizer.decode(np.asarray(ids, dtype=np.int32))
    pts = [cell_to_geo(from_pseudo_octal(c)) for c in cells]
    return np.array(pts, dtype=np.float64).reshape(-1, 2)


def ensemble_predict(
    model: SequenceModel,
    context: np.ndarray,
    n_frames: int,
    n: int = 30,
    temperature: float = 1.0,
    seed: int = 0,
    agreement_radius_m: float = 244.0,
    max_speed_kmh: float = 188.904,
    max_turn_deg: float = 150.0,
) -> PredictionBundle:
    """Sample n rollouts, drop hallucinations, summarise the rest.

    Sample i uses seed + i, so bundles are reproducible and individual
    samples can be regenerated in isolation.
    """
    if n < 1:
        raise PredictorConfigError("ensemble size must be at least 1")
    kept: list[np.ndarray] = []
    endpoints: list[GeoPoint] = []
    reasons: list[str] = []
    for i in range(n):
        ids = generate(model, context, n_frames, temperature=temperature, seed=seed + i)
        try:
            curve = decode_to_curve(ids)
        except ValueError:
            # a sampled frame spelled a cell that does not exist (for
            # example a pentagon base followed by its deleted axis)
            reasons.append("invalid cell")
            continue
        if len(curve) < 2:
            reasons.append("too short")
            continue
        ok, why = hallucination_filter(
            curve, max_speed_kmh=max_speed_kmh, max_turn_deg=max_turn_deg
        )
        if not ok:
            reasons.append(why or "rejected")
            continue
        kept.append(curve)
        endpoints.append(GeoPoint(curve[-1, 0], curve[-1, 1]))
    if not kept:
        raise NoViablePredictionError(reasons)
    mid = centroid(endpoints)
    dists = np.array([haversine(e, mid) for e in endpoints])
    agreement = float(np.mean(dists <= agreement_radius_m))
    representative = int(np.argmin(dists))
    return PredictionBundle(
        samples=kept,
        endpoints=np.array(endpoints, dtype=np.float64),
        centroid=mid,
        agreement=agreement,
        representative=representative,
        rejected=n - len(kept),
        reasons=reasons,
    )
