"""Margin-loss training with mega-batch hard-negative mining.

The objective per pair is max(0, margin - cos(g(s), g(s')) + cos(g(s), g(t)))
where t is the most similar other first-element in the current mega-batch.
Gradients are exact closed forms through the averaging encoders and cosine;
no gradient flows through the argmax that picks t.  A mini-batch contributes
the mean of its per-pair losses.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import kernels
from .corpus import ParaphrasePair, TokenizedSentence
from .encoders import CONCAT, Encoder, combine, encode_batch, flat_indices

REF = "ref"
TRANS = "trans"
NEG = "neg"
NEG2 = "neg2"


@dataclass
class TrainingConfig:
    margin: float = 0.4
    batch_size: int = 100
    megabatch_multiplier: int = 1
    epochs: int = 5
    learning_rate: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0
    symmetric_loss: bool = False
    include_translations: bool = False  # add second elements to the negative pool
    update_embeddings: bool = True

    def __post_init__(self):
        if self.margin <= 0:
            raise ValueError("margin must be > 0")
        if self.batch_size < 2:
            raise ValueError("batch_size must be >= 2")
        if self.megabatch_multiplier < 1:
            raise ValueError("megabatch_multiplier must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")


def margin_loss(cos_pos: float, cos_neg: float, margin: float) -> float:
    """Hinge loss max(0, margin - cos_pos + cos_neg)."""
    return max(0.0, margin - cos_pos + cos_neg)


# ---------------------------------------------------------------------------
# negative selection


@dataclass
class MegaBatch:
    """A block of pairs with mined negatives and the frozen selection vectors.

    Candidate c in [0, n) is the reference of pair c; candidate n + c is the
    translation of pair c (only when translations are in the pool).
    """

    pairs: list[ParaphrasePair]
    ref_vectors: np.ndarray
    trans_vectors: np.ndarray | None
    neg_index: np.ndarray  # per pair: candidate mined for the reference side
    neg_cosine: np.ndarray
    neg2_index: np.ndarray | None = None  # mined for the translation side
    neg2_cosine: np.ndarray | None = None

    def candidate_sentence(self, c: int) -> TokenizedSentence:
        n = len(self.pairs)
        if c < n:
            return self.pairs[c].reference
        return self.pairs[c - n].translation


def _argmax_excluding(cos: np.ndarray, n_pairs: int, with_translations: bool) -> tuple[np.ndarray, np.ndarray]:
    """Row-wise argmax over candidates, excluding each row's own pair.

    Ties break toward the lowest candidate index (references order before
    translations).
    """
    masked = cos.copy()
    rows = np.arange(n_pairs)
    masked[rows, rows] = -np.inf
    if with_translations:
        masked[rows, n_pairs + rows] = -np.inf
    best = masked.argmax(axis=1)
    return best, masked[rows, best]


def select_negatives(
    pairs: Sequence[ParaphrasePair], encoder: Encoder, config: TrainingConfig
) -> MegaBatch:
    """Mine each pair's hardest negative from the other pairs in the block.

    Sentence vectors are computed once under the current parameters and
    frozen for the whole mega-batch.
    """
    if len(pairs) < 2:
        raise ValueError("negative selection needs at least 2 pairs")
    pairs = list(pairs)
    ref_vecs = encode_batch([p.reference for p in pairs], encoder)
    need_trans = config.symmetric_loss or config.include_translations
    trans_vecs = encode_batch([p.translation for p in pairs], encoder) if need_trans else None

    candidates = ref_vecs
    if config.include_translations:
        candidates = np.vstack([ref_vecs, trans_vecs])

    cos_ref = kernels.cosine_matrix(ref_vecs, candidates)
    neg_index, neg_cos = _argmax_excluding(cos_ref, len(pairs), config.include_translations)
    batch = MegaBatch(
        pairs=pairs,
        ref_vectors=ref_vecs,
        trans_vectors=trans_vecs,
        neg_index=neg_index,
        neg_cosine=neg_cos,
    )
    if config.symmetric_loss:
        cos_trans = kernels.cosine_matrix(trans_vecs, candidates)
        batch.neg2_index, batch.neg2_cosine = _argmax_excluding(
            cos_trans, len(pairs), config.include_translations
        )
    return batch


# ---------------------------------------------------------------------------
# loss and closed-form gradient


@dataclass
class TrainingExample:
    reference: TokenizedSentence
    translation: TokenizedSentence
    negative: TokenizedSentence
    negative_for_translation: TokenizedSentence | None = None


@dataclass
class PreparedBatch:
    """Per-role, per-store flattened unit indices for one mini-batch."""

    n: int
    bundles: dict[str, dict[str, tuple[np.ndarray, np.ndarray]]]


def prepare_batch(
    examples: Sequence[TrainingExample], encoder: Encoder, config: TrainingConfig
) -> PreparedBatch:
    roles = {
        REF: [e.reference for e in examples],
        TRANS: [e.translation for e in examples],
        NEG: [e.negative for e in examples],
    }
    if config.symmetric_loss:
        if any(e.negative_for_translation is None for e in examples):
            raise ValueError("symmetric loss needs negative_for_translation on every example")
        roles[NEG2] = [e.negative_for_translation for e in examples]
    bundles = {
        role: {
            kind: flat_indices(store, sentences)
            for kind, store in encoder.stores.items()
        }
        for role, sentences in roles.items()
    }
    return PreparedBatch(n=len(examples), bundles=bundles)


def _role_vectors(batch: PreparedBatch, encoder: Encoder, role: str) -> np.ndarray:
    components = {
        kind: kernels.mean_rows(store.values, *batch.bundles[role][kind])
        for kind, store in encoder.stores.items()
    }
    return combine(encoder, components)


def _row_cosine(a: np.ndarray, b: np.ndarray):
    """Per-row cosine plus the norms needed for its gradient; 0 where a norm is 0."""
    na = np.sqrt((a * a).sum(axis=1))
    nb = np.sqrt((b * b).sum(axis=1))
    ok = (na > 0.0) & (nb > 0.0)
    denom = np.where(ok, na * nb, 1.0)
    cos = np.where(ok, (a * b).sum(axis=1) / denom, 0.0)
    return cos, na, nb, ok


def _cosine_partials(a, b, cos, na, nb, ok):
    """d cos(a_i, b_i) / d a_i and / d b_i, row-wise; zero where a norm is 0."""
    ga = np.zeros_like(a)
    gb = np.zeros_like(b)
    if ok.any():
        o = ok
        inv = (1.0 / (na[o] * nb[o]))[:, None]
        ga[o] = b[o] * inv - (cos[o] / (na[o] ** 2))[:, None] * a[o]
        gb[o] = a[o] * inv - (cos[o] / (nb[o] ** 2))[:, None] * b[o]
    return ga, gb


def _scatter_component_grads(
    grads: dict[str, np.ndarray],
    batch: PreparedBatch,
    encoder: Encoder,
    role: str,
    upstream: np.ndarray,
) -> None:
    """Push a role's sentence-vector upstream into the embedding-row gradients."""
    dims = {kind: store.dim for kind, store in encoder.stores.items()}
    col = 0
    for kind in encoder.stores:
        if encoder.kind == CONCAT:
            block = upstream[:, col : col + dims[kind]]
            col += dims[kind]
        else:
            block = upstream
        idx, offsets = batch.bundles[role][kind]
        counts = np.diff(offsets)
        inv = np.zeros(batch.n, dtype=np.float64)
        nz = counts > 0
        inv[nz] = 1.0 / counts[nz]
        # each contributing occurrence receives upstream / (occurrence count)
        kernels.scatter_rows(grads[kind], idx, offsets, block * inv[:, None])


def _loss_core(batch: PreparedBatch, encoder: Encoder, config: TrainingConfig, want_grad: bool):
    a = _role_vectors(batch, encoder, REF)
    p = _role_vectors(batch, encoder, TRANS)
    n = _role_vectors(batch, encoder, NEG)

    cp, na, npv, ok_p = _row_cosine(a, p)
    cn, _, nn, ok_n = _row_cosine(a, n)
    h1 = config.margin - cp + cn
    act1 = h1 > 0.0
    loss_vec = np.where(act1, h1, 0.0)

    symmetric = NEG2 in batch.bundles
    if symmetric:
        n2 = _role_vectors(batch, encoder, NEG2)
        cn2, _, nn2, ok_n2 = _row_cosine(p, n2)
        h2 = config.margin - cp + cn2
        act2 = h2 > 0.0
        loss_vec = loss_vec + np.where(act2, h2, 0.0)

    loss = float(loss_vec.sum() / batch.n)
    if not want_grad:
        return loss, None

    scale = 1.0 / batch.n
    dcp_da, dcp_dp = _cosine_partials(a, p, cp, na, npv, ok_p)
    dcn_da, dcn_dn = _cosine_partials(a, n, cn, na, nn, ok_n)

    w1 = (act1 * scale)[:, None]
    up_a = w1 * (dcn_da - dcp_da)
    up_p = w1 * (-dcp_dp)
    up_n = w1 * dcn_dn

    grads = {kind: np.zeros_like(store.values) for kind, store in encoder.stores.items()}
    if symmetric:
        dcn2_dp, dcn2_dn2 = _cosine_partials(p, n2, cn2, npv, nn2, ok_n2)
        w2 = (act2 * scale)[:, None]
        up_a = up_a + w2 * (-dcp_da)
        up_p = up_p + w2 * (dcn2_dp - dcp_dp)
        _scatter_component_grads(grads, batch, encoder, NEG2, w2 * dcn2_dn2)

    _scatter_component_grads(grads, batch, encoder, REF, up_a)
    _scatter_component_grads(grads, batch, encoder, TRANS, up_p)
    _scatter_component_grads(grads, batch, encoder, NEG, up_n)
    return loss, grads


def batch_loss(batch: PreparedBatch, encoder: Encoder, config: TrainingConfig) -> float:
    """Mean per-pair hinge loss of a prepared mini-batch."""
    return _loss_core(batch, encoder, config, want_grad=False)[0]


def batch_loss_and_grad(
    batch: PreparedBatch, encoder: Encoder, config: TrainingConfig
) -> tuple[float, dict[str, np.ndarray]]:
    """Loss plus exact gradients w.r.t. every active embedding matrix."""
    return _loss_core(batch, encoder, config, want_grad=True)


# ---------------------------------------------------------------------------
# Adam


@dataclass
class AdamState:
    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    step: int = 0

    @classmethod
    def for_encoder(cls, encoder: Encoder) -> "AdamState":
        return cls(
            m={k: np.zeros_like(s.values) for k, s in encoder.stores.items()},
            v={k: np.zeros_like(s.values) for k, s in encoder.stores.items()},
        )


def adam_step(
    state: AdamState,
    params: dict[str, np.ndarray],
    grads: dict[str, np.ndarray],
    config: TrainingConfig,
) -> None:
    """One bias-corrected Adam update, in place on params and state."""
    for kind, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise ValueError(f"non-finite gradient for {kind!r} store; aborting")
    state.step += 1
    for kind, g in grads.items():
        kernels.adam_update(
            params[kind], g, state.m[kind], state.v[kind],
            config.learning_rate, config.beta1, config.beta2, config.eps, state.step,
        )


# ---------------------------------------------------------------------------
# training loop


@dataclass
class EpochLog:
    epoch: int
    mean_loss: float
    mean_negative_cosine: float


@dataclass
class TrainResult:
    encoder: Encoder
    epochs: list[EpochLog] = field(default_factory=list)
    megabatch_negative_cosine: list[float] = field(default_factory=list)


class _IndexedPairs:
    """Per-sentence unit index arrays, computed once per training run."""

    def __init__(self, encoder: Encoder, pairs: Sequence[ParaphrasePair]):
        self.kinds = list(encoder.stores)
        self.sides: dict[str, dict[int, list[np.ndarray]]] = {}
        for kind, store in encoder.stores.items():
            vocab = store.vocab
            self.sides[kind] = {
                0: [vocab.sentence_indices(p.reference) for p in pairs],
                1: [vocab.sentence_indices(p.translation) for p in pairs],
            }

    def bundle(self, kind: str, ids: np.ndarray, sides: np.ndarray):
        arrays = [self.sides[kind][int(s)][int(i)] for i, s in zip(ids, sides)]
        lengths = np.fromiter((a.size for a in arrays), dtype=np.int64, count=len(arrays))
        offsets = np.zeros(len(arrays) + 1, dtype=np.int64)
        np.cumsum(lengths, out=offsets[1:])
        idx = np.concatenate(arrays) if arrays else np.empty(0, dtype=np.int64)
        return idx, offsets

    def prepared(self, roles: dict[str, tuple[np.ndarray, np.ndarray]]) -> PreparedBatch:
        some = next(iter(roles.values()))
        bundles = {
            role: {kind: self.bundle(kind, ids, sides) for kind in self.kinds}
            for role, (ids, sides) in roles.items()
        }
        return PreparedBatch(n=len(some[0]), bundles=bundles)


def train(
    pairs: Sequence[ParaphrasePair], encoder: Encoder, config: TrainingConfig
) -> TrainResult:
    """Train the encoder on paraphrase pairs; deterministic given the seed.

    Each epoch shuffles, forms mega-batches of megabatch_multiplier *
    batch_size pairs (a ragged final block is kept if it holds at least 2
    pairs), mines negatives once per mega-batch, then takes one Adam step per
    mini-batch.
    """
    pairs = list(pairs)
    if not pairs:
        raise ValueError("cannot train on an empty corpus")
    if len(pairs) < 2:
        raise ValueError("training needs at least 2 pairs")
    for pair in pairs:
        if not pair.reference.tokens or not pair.translation.tokens:
            raise ValueError("degenerate pair in training corpus")

    rng = np.random.default_rng(config.seed)
    indexed = _IndexedPairs(encoder, pairs)
    params = {kind: store.values for kind, store in encoder.stores.items()}
    state = AdamState.for_encoder(encoder)
    result = TrainResult(encoder=encoder)
    mega_size = config.megabatch_multiplier * config.batch_size

    for epoch in range(1, config.epochs + 1):
        perm = rng.permutation(len(pairs))
        loss_sum = 0.0
        n_seen = 0
        neg_cos_sum = 0.0
        n_neg = 0
        for start in range(0, len(perm), mega_size):
            mega_ids = perm[start : start + mega_size]
            if mega_ids.size < 2:
                break  # a single leftover pair has no candidate negatives
            mega = select_negatives([pairs[i] for i in mega_ids], encoder, config)
            cos_vals = mega.neg_cosine
            if mega.neg2_cosine is not None:
                cos_vals = np.concatenate([cos_vals, mega.neg2_cosine])
            result.megabatch_negative_cosine.append(float(cos_vals.mean()))
            neg_cos_sum += float(cos_vals.sum())
            n_neg += cos_vals.size

            n_mega = mega_ids.size
            neg_ids, neg_sides = _resolve_candidates(mega.neg_index, mega_ids, n_mega)
            if config.symmetric_loss:
                neg2_ids, neg2_sides = _resolve_candidates(mega.neg2_index, mega_ids, n_mega)
            for lo in range(0, n_mega, config.batch_size):
                sl = slice(lo, min(lo + config.batch_size, n_mega))
                roles = {
                    REF: (mega_ids[sl], np.zeros(sl.stop - sl.start, dtype=np.int64)),
                    TRANS: (mega_ids[sl], np.ones(sl.stop - sl.start, dtype=np.int64)),
                    NEG: (neg_ids[sl], neg_sides[sl]),
                }
                if config.symmetric_loss:
                    roles[NEG2] = (neg2_ids[sl], neg2_sides[sl])
                batch = indexed.prepared(roles)
                loss, grads = batch_loss_and_grad(batch, encoder, config)
                if config.update_embeddings:
                    adam_step(state, params, grads, config)
                loss_sum += loss * batch.n
                n_seen += batch.n
        result.epochs.append(
            EpochLog(
                epoch=epoch,
                mean_loss=loss_sum / n_seen,
                mean_negative_cosine=neg_cos_sum / n_neg,
            )
        )
    return result


def _resolve_candidates(cand: np.ndarray, mega_ids: np.ndarray, n_mega: int):
    """Map candidate slots (refs first, then translations) to corpus ids + side."""
    sides = (cand >= n_mega).astype(np.int64)
    ids = mega_ids[np.where(cand < n_mega, cand, cand - n_mega)]
    return ids, sides


# ---------------------------------------------------------------------------
# finite-difference gradient checking (also exposed via the CLI)


def _random_instance(rng: np.random.Generator, kind: str, dim: int, symmetric: bool):
    """A small random corpus, encoder, and batch for gradient checking."""
    from .corpus import tokenize
    from .encoders import Encoder as Enc
    from .store import CHAR_TRIGRAM as TRI
    from .store import WORD as W
    from .store import build_vocab, init_matrix

    n_words = int(rng.integers(8, 14))
    alphabet = "abcdefghijklmnopqrstuvwxyz"
    words = []
    while len(words) < n_words:
        w = "".join(rng.choice(list(alphabet), size=3))
        if w not in words:
            words.append(w)

    def sentence():
        k = int(rng.integers(2, 6))
        return tokenize(" ".join(rng.choice(words, size=k)))

    n_pairs = int(rng.integers(3, 6))
    examples = []
    for _ in range(n_pairs):
        examples.append(
            TrainingExample(
                reference=sentence(),
                translation=sentence(),
                negative=sentence(),
                negative_for_translation=sentence() if symmetric else None,
            )
        )
    corpus = [tokenize(" ".join(words))]
    word_store = init_matrix(build_vocab(corpus, W), dim, int(rng.integers(1 << 30)))
    tri_store = init_matrix(build_vocab(corpus, TRI), dim, int(rng.integers(1 << 30)))
    if kind == "word_avg":
        enc = Enc(kind=kind, word_store=word_store)
    elif kind == "trigram_avg":
        enc = Enc(kind=kind, trigram_store=tri_store)
    else:
        enc = Enc(kind=kind, word_store=word_store, trigram_store=tri_store)
    return examples, enc


def finite_difference_error(
    batch: PreparedBatch,
    encoder: Encoder,
    config: TrainingConfig,
    step: float = 1e-5,
) -> float:
    """Max relative error between analytic and central-difference gradients."""
    _, grads = batch_loss_and_grad(batch, encoder, config)
    worst = 0.0
    for kind, store in encoder.stores.items():
        values = store.values
        fd = np.zeros_like(values)
        for r in range(values.shape[0]):
            for c in range(values.shape[1]):
                orig = values[r, c]
                values[r, c] = orig + step
                hi = batch_loss(batch, encoder, config)
                values[r, c] = orig - step
                lo = batch_loss(batch, encoder, config)
                values[r, c] = orig
                fd[r, c] = (hi - lo) / (2.0 * step)
        denom = max(1.0, float(np.abs(grads[kind]).max()), float(np.abs(fd).max()))
        worst = max(worst, float(np.abs(grads[kind] - fd).max()) / denom)
    return worst


def _hinge_margins(batch: PreparedBatch, encoder: Encoder, config: TrainingConfig) -> np.ndarray:
    a = _role_vectors(batch, encoder, REF)
    p = _role_vectors(batch, encoder, TRANS)
    n = _role_vectors(batch, encoder, NEG)
    cp = _row_cosine(a, p)[0]
    h = [config.margin - cp + _row_cosine(a, n)[0]]
    if NEG2 in batch.bundles:
        n2 = _role_vectors(batch, encoder, NEG2)
        h.append(config.margin - cp + _row_cosine(p, n2)[0])
    return np.concatenate(h)


def gradient_check(
    dim: int = 5,
    seed: int = 1,
    instances: int = 20,
    kinds: Sequence[str] = ("word_avg", "trigram_avg", "additive", "concat"),
    step: float = 1e-5,
) -> dict[tuple[str, bool], float]:
    """Finite-difference check over random instances.

    Returns the max relative error per (encoder kind, symmetric_loss) cell.
    Instances whose hinge sits within 100*step of its kink are re-drawn, since
    a central difference straddling the kink measures nothing.
    """
    rng = np.random.default_rng(seed)
    report: dict[tuple[str, bool], float] = {}
    for kind in kinds:
        for symmetric in (False, True):
            config = TrainingConfig(symmetric_loss=symmetric, seed=seed)
            worst = 0.0
            done = 0
            while done < instances:
                examples, enc = _random_instance(rng, kind, dim, symmetric)
                batch = prepare_batch(examples, enc, config)
                if np.abs(_hinge_margins(batch, enc, config)).min() < 100 * step:
                    continue
                worst = max(worst, finite_difference_error(batch, enc, config, step))
                done += 1
            report[(kind, symmetric)] = worst
    return report
