"""Character-in, word-out attentional encoder-decoder at toy scale.

One bidirectional GRU layer reads the windowed source characters; a GRU
decoder with additive attention emits output words. It implements the
:class:`~textnorm.scorers.ContextualScorer` interface so it can be
constrained by the filter bank like any other scorer.
"""

from __future__ import annotations

import logging
import math
from collections import Counter
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
import torch
from torch import nn
from torch.nn.utils.rnn import pack_padded_sequence, pad_packed_sequence

from .corpus import WindowedExample
from .scorers import END, ContextualScorer

log = logging.getLogger(__name__)

PAD = "<pad>"
UNK = "<unk>"
BOS = "<s>"


@dataclass
class ModelConfig:
    char_vocab_cap: int = 250
    word_vocab_cap: int = 1000
    char_embed_dim: int = 32
    word_embed_dim: int = 32
    encoder_state_dim: int = 64
    attention_dim: int = 64
    decoder_layers: int = 1

    def __post_init__(self):
        for f in fields(self):
            if getattr(self, f.name) < 1:
                raise ValueError(f"{f.name} must be positive")

    def write(self, path) -> None:
        Path(path).write_text("".join(f"{k}={v}\n" for k, v in asdict(self).items()))

    @classmethod
    def read(cls, path) -> "ModelConfig":
        values = {}
        for line in Path(path).read_text().splitlines():
            if line.strip():
                k, _, v = line.partition("=")
                values[k.strip()] = int(v)
        return cls(**values)


class Vocab:
    def __init__(self, symbols: Sequence[str]):
        self.symbols = list(symbols)
        self.index = {s: i for i, s in enumerate(self.symbols)}

    @classmethod
    def build(cls, sequences, specials: Sequence[str], cap: int) -> "Vocab":
        counts = Counter(s for seq in sequences for s in seq)
        ranked = sorted((s for s in counts if s not in specials), key=lambda s: (-counts[s], s))
        return cls(list(specials) + ranked[:max(0, cap - len(specials))])

    def encode(self, seq: Sequence[str]) -> list[int]:
        unk = self.index[UNK]
        return [self.index.get(s, unk) for s in seq]

    def __len__(self) -> int:
        return len(self.symbols)


class Seq2Seq(nn.Module):
    def __init__(self, config: ModelConfig, n_chars: int, n_words: int):
        super().__init__()
        c = config
        h = c.encoder_state_dim
        self.config = c
        self.char_emb = nn.Embedding(n_chars, c.char_embed_dim)
        self.encoder = nn.GRU(c.char_embed_dim, h, batch_first=True, bidirectional=True)
        self.word_emb = nn.Embedding(n_words, c.word_embed_dim)
        self.init_state = nn.Linear(2 * h, h)
        self.att_query = nn.Linear(h, c.attention_dim, bias=False)
        self.att_key = nn.Linear(2 * h, c.attention_dim)
        self.att_score = nn.Linear(c.attention_dim, 1, bias=False)
        self.cells = nn.ModuleList(
            nn.GRUCell((c.word_embed_dim + 2 * h) if i == 0 else h, h)
            for i in range(c.decoder_layers))
        self.out = nn.Linear(3 * h, n_words)

    # encoder

    def encode(self, src: torch.Tensor, lengths: torch.Tensor):
        """Returns annotations (B, T, 2H), their attention keys, a mask, and the first state."""
        emb = self.char_emb(src)
        packed = pack_padded_sequence(emb, lengths.cpu(), batch_first=True, enforce_sorted=False)
        ann, _ = self.encoder(packed)
        ann, _ = pad_packed_sequence(ann, batch_first=True, total_length=src.shape[1])
        mask = torch.arange(src.shape[1])[None, :] < lengths[:, None]
        mean = (ann * mask[..., None]).sum(1) / lengths[:, None].to(ann.dtype)
        s0 = torch.tanh(self.init_state(mean))
        states = [s0 for _ in self.cells]
        return ann, self.att_key(ann), mask, states

    # decoder

    def step(self, prev: torch.Tensor, states: list[torch.Tensor], ann, keys, mask):
        """One decoder step: returns logits (B, V), new states, attention weights (B, T)."""
        query = self.att_query(states[-1])
        e = self.att_score(torch.tanh(keys + query[:, None, :])).squeeze(-1)
        e = e.masked_fill(~mask, float("-inf"))
        alpha = torch.softmax(e, dim=-1)
        context = torch.bmm(alpha[:, None, :], ann).squeeze(1)
        x = torch.cat([self.word_emb(prev), context], dim=-1)
        new_states = []
        for cell, s in zip(self.cells, states):
            x = cell(x, s)
            new_states.append(x)
        logits = self.out(torch.cat([x, context], dim=-1))
        return logits, new_states, alpha

    def teacher_forced(self, src, lengths, dec_in):
        ann, keys, mask, states = self.encode(src, lengths)
        out = []
        for t in range(dec_in.shape[1]):
            logits, states, _ = self.step(dec_in[:, t], states, ann, keys, mask)
            out.append(logits)
        return torch.stack(out, dim=1)


@dataclass
class NeuralNormalizer:
    """Trained parameters plus the vocabularies needed to use them."""

    config: ModelConfig
    chars: Vocab
    words: Vocab
    model: Seq2Seq
    history: list[float] = field(default_factory=list)

    @property
    def dtype(self) -> torch.dtype:
        return next(self.model.parameters()).dtype

    def source_ids(self, example: WindowedExample) -> list[int]:
        return self.chars.encode(example.source_symbols())

    def target_ids(self, target: Sequence[str]) -> list[int]:
        return self.words.encode(target) + [self.words.index[END]]

    def named_tensors(self) -> dict[str, torch.Tensor]:
        return dict(self.model.named_parameters())

    def save(self, directory) -> None:
        """Flat binary of float64 tensors, a manifest, the config and both vocabularies."""
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        self.config.write(d / "config.txt")
        (d / "chars.txt").write_text("\n".join(self.chars.symbols) + "\n", encoding="utf-8")
        (d / "words.txt").write_text("\n".join(self.words.symbols) + "\n", encoding="utf-8")
        offset = 0
        lines = []
        with open(d / "params.bin", "wb") as f:
            for name, t in self.model.state_dict().items():
                arr = t.detach().cpu().numpy().astype("<f8")
                f.write(arr.tobytes())
                shape = ",".join(str(x) for x in arr.shape)
                lines.append(f"{name}\t{shape}\t{offset}\n")
                offset += arr.size
        (d / "manifest.tsv").write_text("".join(lines))

    @classmethod
    def load(cls, directory, dtype: torch.dtype = torch.float32) -> "NeuralNormalizer":
        d = Path(directory)
        config = ModelConfig.read(d / "config.txt")
        chars = Vocab((d / "chars.txt").read_text(encoding="utf-8").split("\n")[:-1])
        words = Vocab((d / "words.txt").read_text(encoding="utf-8").split("\n")[:-1])
        model = Seq2Seq(config, len(chars), len(words)).to(dtype)
        flat = np.fromfile(d / "params.bin", dtype="<f8")
        state = {}
        for line in (d / "manifest.tsv").read_text().splitlines():
            name, shape, offset = line.split("\t")
            dims = tuple(int(x) for x in shape.split(",")) if shape else ()
            n = int(np.prod(dims)) if dims else 1
            start = int(offset)
            state[name] = torch.from_numpy(flat[start:start + n].reshape(dims).copy()).to(dtype)
        model.load_state_dict(state)
        return cls(config, chars, words, model)


def build_vocabs(examples: Sequence[WindowedExample], config: ModelConfig) -> tuple[Vocab, Vocab]:
    chars = Vocab.build((ex.source_symbols() for ex in examples), [PAD, UNK],
                        config.char_vocab_cap)
    words = Vocab.build((ex.target for ex in examples), [END, UNK, BOS], config.word_vocab_cap)
    return chars, words


def init_normalizer(examples: Sequence[WindowedExample], config: ModelConfig | None = None,
                    seed: int = 0, dtype: torch.dtype = torch.float32) -> NeuralNormalizer:
    config = config or ModelConfig()
    chars, words = build_vocabs(examples, config)
    torch.manual_seed(seed)
    model = Seq2Seq(config, len(chars), len(words)).to(dtype)
    return NeuralNormalizer(config, chars, words, model)


# ---------------------------------------------------------------------------
# batching


def _batch(norm: NeuralNormalizer, examples: Sequence[WindowedExample]):
    srcs = [norm.source_ids(ex) for ex in examples]
    tgts = [norm.target_ids(ex.target) for ex in examples]
    lengths = torch.tensor([len(s) for s in srcs])
    src = torch.zeros(len(srcs), max(lengths).item(), dtype=torch.long)
    for i, s in enumerate(srcs):
        src[i, :len(s)] = torch.tensor(s)
    t_max = max(len(t) for t in tgts)
    bos = norm.words.index[BOS]
    dec_in = torch.full((len(tgts), t_max), bos, dtype=torch.long)
    gold = torch.full((len(tgts), t_max), -100, dtype=torch.long)
    for i, t in enumerate(tgts):
        gold[i, :len(t)] = torch.tensor(t)
        dec_in[i, 1:len(t)] = torch.tensor(t[:-1])
    return src, lengths, dec_in, gold


def sequence_loss(norm: NeuralNormalizer, examples: Sequence[WindowedExample],
                  reduction: str = "sum") -> torch.Tensor:
    """Teacher-forced cross-entropy over target words and the end symbol."""
    src, lengths, dec_in, gold = _batch(norm, examples)
    logits = norm.model.teacher_forced(src, lengths, dec_in)
    return nn.functional.cross_entropy(logits.reshape(-1, logits.shape[-1]), gold.reshape(-1),
                                       ignore_index=-100, reduction=reduction)


# ---------------------------------------------------------------------------
# inference


@dataclass
class StepOutput:
    probs: np.ndarray
    attention: np.ndarray
    annotation_length: int


def forward(norm: NeuralNormalizer, source: WindowedExample | Sequence[str],
            target_prefix: Sequence[str] = ()) -> StepOutput:
    """Next-word distribution (index 0 is end-of-sequence) given a source and a target prefix."""
    symbols = source.source_symbols() if isinstance(source, WindowedExample) else list(source)
    if not symbols:
        raise ValueError("empty source")
    model = norm.model
    with torch.no_grad():
        src = torch.tensor([norm.chars.encode(symbols)])
        ann, keys, mask, states = model.encode(src, torch.tensor([len(symbols)]))
        prev = torch.tensor([norm.words.index[BOS]])
        for w in list(target_prefix) + [None]:
            logits, states, alpha = model.step(prev, states, ann, keys, mask)
            if w is not None:
                prev = torch.tensor(norm.words.encode([w]))
        probs = torch.softmax(logits.double(), dim=-1)[0].numpy()
    return StepOutput(probs, alpha[0].double().numpy(), ann.shape[1])


def greedy_batch(norm: NeuralNormalizer, examples: Sequence[WindowedExample],
                 max_len: int = 20) -> list[tuple[str, ...]]:
    model = norm.model
    end = norm.words.index[END]
    with torch.no_grad():
        src, lengths, _, _ = _batch(norm, examples)
        ann, keys, mask, states = model.encode(src, lengths)
        prev = torch.full((len(examples),), norm.words.index[BOS], dtype=torch.long)
        outs = [[] for _ in examples]
        done = [False] * len(examples)
        for _ in range(max_len + 1):
            logits, states, _ = model.step(prev, states, ann, keys, mask)
            prev = logits.argmax(-1)
            for i, k in enumerate(prev.tolist()):
                if done[i]:
                    continue
                if k == end:
                    done[i] = True
                else:
                    outs[i].append(norm.words.symbols[k])
            if all(done):
                break
    return [tuple(o) for o in outs]


def sequence_accuracy(norm: NeuralNormalizer, examples: Sequence[WindowedExample]) -> float:
    preds = []
    for i in range(0, len(examples), 256):
        preds.extend(greedy_batch(norm, examples[i:i + 256]))
    return sum(p == ex.target for p, ex in zip(preds, examples)) / len(examples)


# ---------------------------------------------------------------------------
# training


class TrainingError(RuntimeError):
    pass


def train(examples: Sequence[WindowedExample], config: ModelConfig | None = None,
          epochs: int = 50, seed: int = 0, *, lr: float = 0.1, clip: float = 5.0,
          batch_size: int = 16, plateau_patience: int = 3, min_lr: float = 1e-3,
          target_accuracy: float | None = None, check_every: int = 5,
          time_budget: float | None = None, dtype: torch.dtype = torch.float32,
          init: NeuralNormalizer | None = None) -> NeuralNormalizer:
    """Teacher-forced SGD with global-norm clipping; the rate halves when the
    epoch loss stops improving for ``plateau_patience`` epochs.

    With ``target_accuracy`` set, training stops once greedy exact-sequence
    accuracy on ``examples`` reaches it (checked every ``check_every`` epochs).
    """
    import time

    if not examples:
        raise ValueError("no training examples")
    examples = list(examples)
    threads = torch.get_num_threads()
    torch.set_num_threads(1)
    try:
        norm = init if init is not None else init_normalizer(examples, config, seed, dtype)
        rng = np.random.default_rng(seed)
        opt = torch.optim.SGD(norm.model.parameters(), lr=lr)
        best, stale = math.inf, 0
        started = time.monotonic()
        for epoch in range(epochs):
            order = rng.permutation(len(examples))
            total = 0.0
            n_words = 0
            norm.model.train()
            for i in range(0, len(order), batch_size):
                batch = [examples[j] for j in order[i:i + batch_size]]
                loss = sequence_loss(norm, batch, reduction="sum")
                n = sum(len(ex.target) + 1 for ex in batch)
                if not torch.isfinite(loss):
                    raise TrainingError(f"non-finite loss at epoch {epoch}, batch {i // batch_size}")
                opt.zero_grad()
                (loss / len(batch)).backward()
                nn.utils.clip_grad_norm_(norm.model.parameters(), clip)
                opt.step()
                total += loss.item()
                n_words += n
            for p in norm.model.parameters():
                if not torch.isfinite(p).all():
                    raise TrainingError(f"non-finite parameters after epoch {epoch}")
            avg = total / n_words
            norm.history.append(avg)
            log.debug("epoch %d loss %.5f lr %.4f", epoch, avg, opt.param_groups[0]["lr"])
            if avg < best * 0.999:
                best, stale = avg, 0
            else:
                stale += 1
                if stale >= plateau_patience:
                    for g in opt.param_groups:
                        g["lr"] = max(min_lr, g["lr"] * 0.5)
                    stale = 0
            if target_accuracy is not None and (epoch + 1) % check_every == 0:
                if sequence_accuracy(norm, examples) >= target_accuracy:
                    break
            if time_budget is not None and time.monotonic() - started > time_budget:
                break
        norm.model.eval()
        return norm
    finally:
        torch.set_num_threads(threads)


# ---------------------------------------------------------------------------
# gradient check


def loss_and_grads(norm: NeuralNormalizer, example: WindowedExample
                   ) -> tuple[float, dict[str, torch.Tensor]]:
    norm.model.zero_grad()
    loss = sequence_loss(norm, [example])
    loss.backward()
    return loss.item(), {n: p.grad.detach().clone() for n, p in norm.model.named_parameters()}


def gradient_check(norm: NeuralNormalizer, example: WindowedExample, epsilon: float = 1e-4,
                   sample: float | None = None, seed: int = 0, floor: float = 1e-4,
                   grad_hook: Callable[[str, torch.Tensor], torch.Tensor] | None = None) -> float:
    """Largest relative gap between backprop gradients and central differences.

    Relative error is ``|a - n| / max(|a|, |n|, floor)``; the floor keeps
    near-zero gradients from dominating through rounding. ``sample`` checks
    a random fraction of entries instead of all of them. ``grad_hook`` lets
    a test corrupt the analytic gradient on purpose.
    """
    _, grads = loss_and_grads(norm, example)
    if grad_hook is not None:
        grads = {n: grad_hook(n, g) for n, g in grads.items()}
    rng = np.random.default_rng(seed)
    worst = 0.0
    with torch.no_grad():
        for name, p in norm.model.named_parameters():
            flat = p.view(-1)
            idx = np.arange(flat.numel())
            if sample is not None:
                k = max(1, int(round(sample * len(idx))))
                idx = rng.choice(idx, size=k, replace=False)
            g = grads[name].view(-1)
            for i in idx:
                orig = flat[i].item()
                flat[i] = orig + epsilon
                up = sequence_loss(norm, [example]).item()
                flat[i] = orig - epsilon
                down = sequence_loss(norm, [example]).item()
                flat[i] = orig
                numeric = (up - down) / (2 * epsilon)
                analytic = g[i].item()
                err = abs(analytic - numeric) / max(abs(analytic), abs(numeric), floor)
                worst = max(worst, err)
    return worst


# ---------------------------------------------------------------------------
# scorer


class _NeuralState:
    __slots__ = ("states", "prev", "_logp", "_next")

    def __init__(self, states, prev):
        self.states = states
        self.prev = prev
        self._logp = None
        self._next = None


class NeuralScorer(ContextualScorer):
    """Wraps a trained model; a state is the decoder state after a prefix."""

    def __init__(self, norm: NeuralNormalizer):
        self.norm = norm
        self._skip = {norm.words.index[s] for s in (UNK, BOS) if s in norm.words.index}

    def start(self, window: WindowedExample) -> _NeuralState:
        model = self.norm.model
        with torch.no_grad():
            src = torch.tensor([self.norm.source_ids(window)])
            ann, keys, mask, states = model.encode(src, torch.tensor([src.shape[1]]))
        return _NeuralState((states, (ann, keys, mask)), self.norm.words.index[BOS])

    def _run(self, state: _NeuralState) -> None:
        if state._logp is not None:
            return
        states, enc = state.states
        with torch.no_grad():
            logits, new_states, _ = self.norm.model.step(torch.tensor([state.prev]), states, *enc)
            logp = torch.log_softmax(logits.double(), dim=-1)[0].numpy()
        state._logp = logp
        state._next = new_states

    def next_log_probs(self, state: _NeuralState) -> dict[str, float]:
        self._run(state)
        words = self.norm.words.symbols
        return {words[i]: float(lp) for i, lp in enumerate(state._logp) if i not in self._skip}

    def advance(self, state: _NeuralState, word: str) -> _NeuralState:
        self._run(state)
        idx = self.norm.words.index.get(word, self.norm.words.index[UNK])
        return _NeuralState((state._next, state.states[1]), idx)


def as_scorer(norm: NeuralNormalizer) -> NeuralScorer:
    return NeuralScorer(norm)
