"""
Recurrent token policy.

Scene features phi (8x8 block means / 255, d = 64) condition a single-layer
tanh recurrence (hidden size h = 32):

    h_0 = tanh(W_f phi + b)
    h_t = tanh(W_h h_{t-1} + W_e E[tok_{t-1}] + W_f phi + b)     t >= 1
    p_t = softmax(U h_t)            (restricted to the grammar mask if given)

Token t is emitted from h_t, so the first token sees no previous token.
Sequences stop at EOS or after 96 tokens.

Gradients of log p(tokens) are exact, by backpropagation through time:

    g_t  = onehot(tok_t) - p_t
    dU   = sum_t g_t h_t^T
    dh_t = U^T g_t + W_h^T da_{t+1}
    da_t = dh_t * (1 - h_t^2)

Parameters are never modified in place; updates build a new PolicyParams.
"""

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from src.imaging.raster import GrayImage
from src.policy.grammar import MAX_SEQUENCE_LENGTH, GrammarConstraint, allowed_masks
from src.policy.vocabulary import EOS, VOCAB_SIZE, check_token
from src.utils.rng import Xoshiro256StarStar

HIDDEN_DIM = 32
FEATURE_GRID = 8
FEATURE_DIM = FEATURE_GRID * FEATURE_GRID
INIT_SCALE = 0.08

# Flat layout and checkpoint order.
PARAM_ORDER = ('E', 'W_h', 'W_e', 'W_f', 'b', 'U')


@dataclass(frozen=True, eq=False)
class PolicyParams:
    E: np.ndarray
    W_h: np.ndarray
    W_e: np.ndarray
    W_f: np.ndarray
    b: np.ndarray
    U: np.ndarray

    def __post_init__(self):
        V, h = self.E.shape
        d = self.W_f.shape[1]
        expected = self.shapes(V, h, d)
        for name in PARAM_ORDER:
            array = np.asarray(getattr(self, name), dtype=np.float64)
            if array.shape != expected[name]:
                raise ValueError(f"PolicyParams.{name} has shape {array.shape}, expected {expected[name]}")
            if not np.all(np.isfinite(array)):
                raise ValueError(f"PolicyParams.{name} has non-finite entries")
            array = array.copy()
            array.setflags(write=False)
            object.__setattr__(self, name, array)

    @staticmethod
    def shapes(vocab_size: int = VOCAB_SIZE, hidden: int = HIDDEN_DIM, features: int = FEATURE_DIM) -> dict:
        return {
            'E': (vocab_size, hidden),
            'W_h': (hidden, hidden),
            'W_e': (hidden, hidden),
            'W_f': (hidden, features),
            'b': (hidden,),
            'U': (vocab_size, hidden),
        }

    @property
    def dims(self) -> Tuple[int, int, int]:
        """(V, h, d)"""
        return self.E.shape[0], self.E.shape[1], self.W_f.shape[1]

    @classmethod
    def zeros(cls, vocab_size: int = VOCAB_SIZE, hidden: int = HIDDEN_DIM,
              features: int = FEATURE_DIM) -> "PolicyParams":
        return cls(**{k: np.zeros(s) for k, s in cls.shapes(vocab_size, hidden, features).items()})

    @classmethod
    def init(cls, seed: int, vocab_size: int = VOCAB_SIZE, hidden: int = HIDDEN_DIM,
             features: int = FEATURE_DIM, scale: float = INIT_SCALE) -> "PolicyParams":
        """
        Weights uniform in [-scale, scale) from a xoshiro256** stream, drawn
        row-major in PARAM_ORDER; the bias b stays zero and draws nothing.
        """
        rng = Xoshiro256StarStar(seed)
        arrays = {}
        for name, shape in cls.shapes(vocab_size, hidden, features).items():
            if name == 'b':
                arrays[name] = np.zeros(shape)
                continue
            count = int(np.prod(shape))
            arrays[name] = np.array(rng.uniform_list(count, -scale, scale)).reshape(shape)
        return cls(**arrays)

    def flat(self) -> np.ndarray:
        return np.concatenate([getattr(self, name).ravel() for name in PARAM_ORDER])

    @classmethod
    def from_flat(cls, vector: np.ndarray, vocab_size: int = VOCAB_SIZE, hidden: int = HIDDEN_DIM,
                  features: int = FEATURE_DIM) -> "PolicyParams":
        vector = np.asarray(vector, dtype=np.float64)
        shapes = cls.shapes(vocab_size, hidden, features)
        total = sum(int(np.prod(s)) for s in shapes.values())
        if vector.shape != (total,):
            raise ValueError(f"Flat parameter vector must have length {total}, got {vector.shape}")
        arrays, offset = {}, 0
        for name in PARAM_ORDER:
            size = int(np.prod(shapes[name]))
            arrays[name] = vector[offset:offset + size].reshape(shapes[name])
            offset += size
        return cls(**arrays)

    def add_scaled(self, other: "PolicyParams", alpha: float) -> "PolicyParams":
        """self + alpha * other, as a new snapshot."""
        return PolicyParams(**{n: getattr(self, n) + alpha * getattr(other, n) for n in PARAM_ORDER})

    def copy(self) -> "PolicyParams":
        return PolicyParams(**{n: getattr(self, n) for n in PARAM_ORDER})

    def num_parameters(self) -> int:
        return int(sum(getattr(self, n).size for n in PARAM_ORDER))

    def __eq__(self, other) -> bool:
        return isinstance(other, PolicyParams) and all(
            np.array_equal(getattr(self, n), getattr(other, n)) for n in PARAM_ORDER
        )


@dataclass(frozen=True)
class TokenSequence:
    tokens: Tuple[int, ...]
    logps: Tuple[float, ...]

    def __post_init__(self):
        if len(self.tokens) != len(self.logps):
            raise ValueError(f"{len(self.tokens)} tokens but {len(self.logps)} log-probabilities")

    @property
    def terminated(self) -> bool:
        return bool(self.tokens) and self.tokens[-1] == EOS

    @property
    def total_logp(self) -> float:
        return float(sum(self.logps))

    def __len__(self) -> int:
        return len(self.tokens)


def scene_features(image: GrayImage) -> np.ndarray:
    """
    8x8 grid of block means scaled to [0, 1], row-major (length 64).

    Sizes that are not multiples of 8 are padded by edge replication first.
    """
    pixels = image.pixels.astype(np.float64)
    height, width = pixels.shape
    pad_h = (-height) % FEATURE_GRID
    pad_w = (-width) % FEATURE_GRID
    if pad_h or pad_w:
        pixels = np.pad(pixels, ((0, pad_h), (0, pad_w)), mode='edge')
    bh = pixels.shape[0] // FEATURE_GRID
    bw = pixels.shape[1] // FEATURE_GRID
    blocks = pixels.reshape(FEATURE_GRID, bh, FEATURE_GRID, bw).mean(axis=(1, 3))
    return (blocks / 255.0).ravel()


def _log_softmax(logits: np.ndarray, mask: Optional[np.ndarray]) -> np.ndarray:
    if mask is not None:
        logits = np.where(mask, logits, -np.inf)
    top = np.max(logits)
    shifted = logits - top
    return shifted - np.log(np.sum(np.exp(shifted)))


def _step_hidden(params: PolicyParams, h_prev: np.ndarray, prev_token: int, drive: np.ndarray) -> np.ndarray:
    return np.tanh(params.W_h @ h_prev + params.W_e @ params.E[prev_token] + drive)


def _check_tokens(tokens: Sequence[int]) -> Tuple[int, ...]:
    if len(tokens) == 0:
        raise ValueError("Token sequence must be non-empty")
    out = []
    for token in tokens:
        token = int(token)
        check_token(token)
        out.append(token)
    return tuple(out)


def _forward(params: PolicyParams, features: np.ndarray, tokens: Tuple[int, ...],
             constraint: Optional[GrammarConstraint]):
    """Teacher-forced pass: hidden states (T, h), log-probs (T, V), masks."""
    masks = allowed_masks(constraint, tokens)
    drive = params.W_f @ features + params.b
    hidden = np.zeros((len(tokens), params.E.shape[1]))
    log_probs = np.zeros((len(tokens), params.E.shape[0]))
    h = np.tanh(drive)
    for t, token in enumerate(tokens):
        if t > 0:
            h = _step_hidden(params, h, tokens[t - 1], drive)
        hidden[t] = h
        log_probs[t] = _log_softmax(params.U @ h, None if masks is None else masks[t])
    return hidden, log_probs, masks


def step_log_probs(params: PolicyParams, features: np.ndarray, tokens: Sequence[int],
                   constraint: Optional[GrammarConstraint] = None) -> np.ndarray:
    """Per-token log-probabilities under teacher forcing."""
    tokens = _check_tokens(tokens)
    _, log_probs, _ = _forward(params, features, tokens, constraint)
    return log_probs[np.arange(len(tokens)), list(tokens)]


def log_prob(params: PolicyParams, features: np.ndarray, tokens: Sequence[int],
             constraint: Optional[GrammarConstraint] = None) -> float:
    """
    Total log-probability of a token sequence (<= 0).

    Raises:
        ValueError: For an empty sequence, an invalid id or (with a
            constraint) a token the grammar forbids
    """
    return float(np.sum(step_log_probs(params, features, tokens, constraint)))


def next_token_log_probs(params: PolicyParams, features: np.ndarray, prefix: Sequence[int],
                         constraint: Optional[GrammarConstraint] = None) -> np.ndarray:
    """Full next-token log-distribution (length V) after a prefix."""
    prefix = tuple(int(t) for t in prefix)
    for token in prefix:
        check_token(token)
    drive = params.W_f @ features + params.b
    h = np.tanh(drive)
    mask = None
    tracker = constraint.tracker() if constraint is not None else None
    for token in prefix:
        if tracker is not None:
            tracker.advance(token)
        h = _step_hidden(params, h, token, drive)
    if tracker is not None:
        mask = tracker.allowed()
    return _log_softmax(params.U @ h, mask)


def log_prob_and_grad(params: PolicyParams, features: np.ndarray, tokens: Sequence[int],
                      constraint: Optional[GrammarConstraint] = None) -> Tuple[float, PolicyParams]:
    """
    log_prob and its exact gradient in one forward/backward pass.

    Returns:
        (total log-probability, gradient as a PolicyParams)
    """
    tokens = _check_tokens(tokens)
    hidden, log_probs, _ = _forward(params, features, tokens, constraint)
    T = len(tokens)
    index = np.arange(T)
    total = float(np.sum(log_probs[index, list(tokens)]))

    probs = np.exp(log_probs)
    g = -probs
    g[index, list(tokens)] += 1.0

    dU = g.T @ hidden
    dh_out = g @ params.U

    dE = np.zeros_like(params.E)
    dW_h = np.zeros_like(params.W_h)
    dW_e = np.zeros_like(params.W_e)
    da_sum = np.zeros(params.E.shape[1])
    carry = np.zeros(params.E.shape[1])
    for t in range(T - 1, -1, -1):
        h_t = hidden[t]
        da = (dh_out[t] + carry) * (1.0 - h_t * h_t)
        da_sum += da
        if t > 0:
            prev = tokens[t - 1]
            dW_h += np.outer(da, hidden[t - 1])
            dW_e += np.outer(da, params.E[prev])
            dE[prev] += params.W_e.T @ da
            carry = params.W_h.T @ da
        else:
            carry = np.zeros_like(carry)

    grad = PolicyParams(
        E=dE,
        W_h=dW_h,
        W_e=dW_e,
        W_f=np.outer(da_sum, features),
        b=da_sum,
        U=dU,
    )
    return total, grad


def grad_log_prob(params: PolicyParams, features: np.ndarray, tokens: Sequence[int],
                  constraint: Optional[GrammarConstraint] = None) -> PolicyParams:
    return log_prob_and_grad(params, features, tokens, constraint)[1]


def _decode_steps(params: PolicyParams, features: np.ndarray, choose,
                  constraint: Optional[GrammarConstraint], max_len: int) -> TokenSequence:
    drive = params.W_f @ features + params.b
    h = np.tanh(drive)
    tracker = constraint.tracker() if constraint is not None else None
    tokens, logps = [], []
    for t in range(max_len):
        if t > 0:
            h = _step_hidden(params, h, tokens[-1], drive)
        mask = tracker.allowed() if tracker is not None else None
        log_p = _log_softmax(params.U @ h, mask)
        token = choose(log_p, mask)
        tokens.append(token)
        logps.append(float(log_p[token]))
        if tracker is not None:
            tracker.advance(token)
        if token == EOS:
            break
    return TokenSequence(tuple(tokens), tuple(logps))


def sample(params: PolicyParams, features: np.ndarray, rng: np.random.Generator,
           constraint: Optional[GrammarConstraint] = None,
           max_len: int = MAX_SEQUENCE_LENGTH) -> TokenSequence:
    """
    Draw one sequence autoregressively (one uniform per token, inverse CDF).

    Example:
        >>> rng = np.random.default_rng([7, 0])
        >>> seq = sample(PolicyParams.init(7), np.zeros(64), rng)
        >>> len(seq.tokens) == len(seq.logps)
        True
    """
    def choose(log_p, mask):
        cdf = np.cumsum(np.exp(log_p))
        token = int(np.searchsorted(cdf, rng.random() * cdf[-1], side='right'))
        token = min(token, VOCAB_SIZE - 1)
        if mask is not None and not mask[token]:
            # rounding at the top of the CDF; fall back to the last allowed id
            token = int(np.flatnonzero(mask)[-1])
        return token

    return _decode_steps(params, features, choose, constraint, max_len)


def greedy(params: PolicyParams, features: np.ndarray,
           constraint: Optional[GrammarConstraint] = None,
           max_len: int = MAX_SEQUENCE_LENGTH) -> TokenSequence:
    """Argmax decoding (lowest id on ties)."""
    return _decode_steps(params, features, lambda log_p, mask: int(np.argmax(log_p)), constraint, max_len)


def rollout_rng(*keys: int) -> np.random.Generator:
    """Per-rollout generator seeded from (global seed, step, scene, sample, ...)."""
    return np.random.default_rng([int(k) for k in keys])
