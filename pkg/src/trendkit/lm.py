"""Autoregressive token models for trend knowledge probing.

Sequence probability factorizes into next-token conditionals; any backend
that maps a context to a log-probability vector over the vocabulary plugs
in. The reference backend is an order-k count model with add-k smoothing.
A line-delimited request/response protocol lets an external process (for
example a neural model) serve the same contract over standard streams.
"""

from __future__ import annotations

import json
import re
import subprocess
from collections import Counter
from dataclasses import dataclass, field
from typing import IO, Iterable, Protocol

import numpy as np

from .errors import TrendkitError

UNK, BOS, EOS = "<unk>", "<s>", "</s>"
_TOKEN_RE = re.compile(r"\w+|[^\w\s]", re.UNICODE)


class Vocab:
    """Token/id table with reserved unknown, begin and end markers."""

    def __init__(self, words: Iterable[str] = ()):
        self._tokens: list[str] = [UNK, BOS, EOS]
        self._index: dict[str, int] = {t: i for i, t in enumerate(self._tokens)}
        for w in words:
            self.add(w)

    def add(self, word: str) -> int:
        if word not in self._index:
            self._index[word] = len(self._tokens)
            self._tokens.append(word)
        return self._index[word]

    def id(self, word: str) -> int:
        return self._index.get(word, self._index[UNK])

    def word(self, token_id: int) -> str:
        return self._tokens[token_id]

    @property
    def unk_id(self) -> int:
        return self._index[UNK]

    @property
    def bos_id(self) -> int:
        return self._index[BOS]

    @property
    def eos_id(self) -> int:
        return self._index[EOS]

    def __len__(self) -> int:
        return len(self._tokens)

    def __contains__(self, word: str) -> bool:
        return word in self._index


@dataclass
class TokenSeq:
    """Token ids plus the vocabulary they live in."""

    tokens: list[int]
    vocab: Vocab

    def __post_init__(self):
        n = len(self.vocab)
        for t in self.tokens:
            if not (0 <= t < n):
                raise TrendkitError(f"token id {t} outside vocabulary of size {n}")

    def __len__(self) -> int:
        return len(self.tokens)

    def text(self) -> str:
        return " ".join(self.vocab.word(t) for t in self.tokens)


def split_words(text: str) -> list[str]:
    """Whitespace-and-punctuation word split; punctuation marks stand alone."""
    return _TOKEN_RE.findall(text)


def build_vocab(texts: Iterable[str]) -> Vocab:
    """Vocabulary over all words in the corpus, in order of first appearance."""
    vocab = Vocab()
    for text in texts:
        for w in split_words(text):
            vocab.add(w)
    return vocab


def tokenize(text: str, vocab: Vocab) -> TokenSeq:
    """Map words to ids; out-of-vocabulary words become the unknown token."""
    return TokenSeq(tokens=[vocab.id(w) for w in split_words(text)], vocab=vocab)


def detokenize(seq: TokenSeq) -> str:
    return seq.text()


class NextTokenBackend(Protocol):
    """Anything that scores the next token given a context of token ids."""

    vocab_size: int

    def next_token_logprobs(self, context: list[int]) -> np.ndarray: ...


@dataclass
class NgramModel:
    """Order-k count model: p(t | context) = (count + k) / (total + k*V).

    The conditioning context is the previous order-1 tokens, padded with
    begin markers at sequence start; unseen contexts fall back to the
    uniform smoothing floor.
    """

    order: int
    vocab_size: int
    smoothing_k: float = 0.01
    bos_id: int = 1
    counts: dict[tuple[int, ...], Counter] = field(default_factory=dict, repr=False)
    context_totals: dict[tuple[int, ...], int] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.order < 1:
            raise TrendkitError(f"order must be >= 1, got {self.order}")
        if self.smoothing_k <= 0:
            raise TrendkitError(f"smoothing_k must be > 0, got {self.smoothing_k}")
        if self.vocab_size < 1:
            raise TrendkitError("vocabulary is empty")

    def _context_key(self, context: list[int]) -> tuple[int, ...]:
        """Last order-1 tokens, left-padded with begin markers."""
        width = self.order - 1
        if width == 0:
            return ()
        tail = list(context[-width:])
        return tuple([self.bos_id] * (width - len(tail)) + tail)

    def observe(self, context: tuple[int, ...], token: int) -> None:
        self.counts.setdefault(context, Counter())[token] += 1
        self.context_totals[context] = self.context_totals.get(context, 0) + 1

    def conditional_prob(self, context: list[int], token: int) -> float:
        key = self._context_key(context)
        count = self.counts.get(key, {}).get(token, 0)
        total = self.context_totals.get(key, 0)
        return (count + self.smoothing_k) / (total + self.smoothing_k * self.vocab_size)

    def next_token_logprobs(self, context: list[int]) -> np.ndarray:
        key = self._context_key(context)
        total = self.context_totals.get(key, 0)
        denom = total + self.smoothing_k * self.vocab_size
        probs = np.full(self.vocab_size, self.smoothing_k / denom)
        for token, count in self.counts.get(key, {}).items():
            probs[token] = (count + self.smoothing_k) / denom
        return np.log(probs)


def train_ngram(corpus: list[TokenSeq], order: int, smoothing_k: float = 0.01) -> NgramModel:
    """Count all order-length windows over the corpus, one document at a time."""
    if not corpus:
        raise TrendkitError("training corpus is empty")
    vocab = corpus[0].vocab
    model = NgramModel(order=order, vocab_size=len(vocab),
                       smoothing_k=smoothing_k, bos_id=vocab.bos_id)
    width = order - 1
    for seq in corpus:
        padded = [vocab.bos_id] * width + seq.tokens
        for i, token in enumerate(seq.tokens):
            model.observe(tuple(padded[i:i + width]), token)
    return model


def sequence_logprob(model: NextTokenBackend, seq: TokenSeq) -> float:
    """Sum of per-position conditional log-probabilities (finite context)."""
    if len(seq) == 0:
        raise TrendkitError("cannot score an empty sequence")
    total = 0.0
    for i, token in enumerate(seq.tokens):
        total += float(model.next_token_logprobs(seq.tokens[:i])[token])
    return total


def generate_greedy(model: NextTokenBackend, prompt: TokenSeq, max_new: int) -> TokenSeq:
    """Extend the prompt one argmax token at a time.

    Ties break toward the lowest token id. Generation ends after max_new
    tokens, or earlier if the end marker becomes the argmax (the marker
    itself is not emitted).
    """
    if max_new < 1:
        raise TrendkitError(f"max_new must be >= 1, got {max_new}")
    tokens = list(prompt.tokens)
    eos = prompt.vocab.eos_id
    for _ in range(max_new):
        nxt = int(np.argmax(model.next_token_logprobs(tokens)))
        if nxt == eos:
            break
        tokens.append(nxt)
    return TokenSeq(tokens=tokens, vocab=prompt.vocab)


@dataclass(frozen=True)
class PromptTemplate:
    """Ordered prompt segments: event background, question, task form."""

    event_context: str = ""
    question: str = ""
    task_form: str = ""
    separator: str = " "

    def render(self) -> str:
        segments = [s for s in (self.event_context, self.question, self.task_form) if s]
        return self.separator.join(segments)


def build_prompt(template: PromptTemplate, vocab: Vocab) -> TokenSeq:
    """Render event context, question and task form in order, then tokenize."""
    if not template.question:
        raise TrendkitError("prompt question must not be empty")
    return tokenize(template.render(), vocab)


def load_corpus(text: str, vocab: Vocab | None = None) -> tuple[list[TokenSeq], Vocab]:
    """One document per line; blank lines are skipped."""
    docs = [ln for ln in text.splitlines() if ln.strip()]
    if not docs:
        raise TrendkitError("corpus has no documents")
    vocab = vocab or build_vocab(docs)
    return [tokenize(d, vocab) for d in docs], vocab


# --- line-delimited backend wire protocol -----------------------------------
#
# Request:  {"context": [<token ids>]}
# Response: {"logprobs": [<one float per vocabulary entry>]}


def write_request(stream: IO[str], context: list[int]) -> None:
    stream.write(json.dumps({"context": list(context)}) + "\n")
    stream.flush()


def read_request(stream: IO[str]) -> list[int] | None:
    """Next request's context ids, or None at end of stream."""
    line = stream.readline()
    if not line:
        return None
    try:
        payload = json.loads(line)
        return [int(t) for t in payload["context"]]
    except (json.JSONDecodeError, KeyError, TypeError, ValueError):
        raise TrendkitError(f"malformed backend request: {line.strip()!r}") from None


def write_response(stream: IO[str], logprobs: np.ndarray) -> None:
    stream.write(json.dumps({"logprobs": [float(v) for v in logprobs]}) + "\n")
    stream.flush()


def read_response(stream: IO[str], vocab_size: int) -> np.ndarray:
    line = stream.readline()
    if not line:
        raise TrendkitError("backend closed the stream mid-request")
    try:
        values = json.loads(line)["logprobs"]
    except (json.JSONDecodeError, KeyError, TypeError):
        raise TrendkitError(f"malformed backend response: {line.strip()!r}") from None
    if len(values) != vocab_size:
        raise TrendkitError(
            f"backend returned {len(values)} log-probs, expected {vocab_size}"
        )
    return np.asarray(values, dtype=float)


def serve_backend(model: NextTokenBackend, in_stream: IO[str], out_stream: IO[str]) -> None:
    """Answer requests until the input stream closes."""
    while True:
        context = read_request(in_stream)
        if context is None:
            return
        write_response(out_stream, model.next_token_logprobs(context))


class StreamBackend:
    """Client side of the wire protocol; satisfies NextTokenBackend."""

    def __init__(self, send: IO[str], recv: IO[str], vocab_size: int):
        self._send = send
        self._recv = recv
        self.vocab_size = vocab_size

    def next_token_logprobs(self, context: list[int]) -> np.ndarray:
        write_request(self._send, context)
        return read_response(self._recv, self.vocab_size)


def spawn_backend(argv: list[str], vocab_size: int) -> tuple[StreamBackend, subprocess.Popen]:
    """Launch an external backend process speaking the protocol on stdio."""
    proc = subprocess.Popen(argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                            text=True, bufsize=1)
    return StreamBackend(proc.stdin, proc.stdout, vocab_size), proc
