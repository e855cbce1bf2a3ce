"""Three-stream conditional LSTM drum model.

One LSTM stack plus softmax head per drum stream; two feed-forward
condition modules shared by all streams. The past-window module output is
concatenated onto each stream's word input, the current/future-window
module output onto each stack's top hidden state before the head.
"""

import base64
import copy
import hashlib
import json
from dataclasses import dataclass, asdict, field

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor, Tape, backward
from .layers import LinearLayer, LSTMLayer, lstm_step, stacked_lstm_step, \
    dropout_apply, concat_merge
from .encoding import STREAM_NAMES, VOCAB_SIZES, COND_DIM
from .ioutil import atomic_write_text

CHECKPOINT_VERSION = 1

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass(frozen=True)
class ModelConfig:
    hidden: int = 256
    lstm_layers: int = 2
    dropout: float = 0.2
    w_past: int = 4
    w_future: int = 4
    vocab_sizes: tuple = VOCAB_SIZES
    condition_dim: int = COND_DIM
    learning_rate: float = 1e-3
    seq_len: int = 64
    batch_size: int = 16
    grad_clip_norm: float = 5.0

    def __post_init__(self):
        object.__setattr__(self, "vocab_sizes", tuple(self.vocab_sizes))
        if min(self.hidden, self.lstm_layers, self.seq_len, self.batch_size) < 1:
            raise ValueError("hidden, lstm_layers, seq_len, batch_size must be positive")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError(f"dropout must be in [0,1), got {self.dropout}")
        if self.w_past < 0 or self.w_future < 0:
            raise ValueError("window lengths must be non-negative")
        if self.learning_rate <= 0 or self.grad_clip_norm <= 0:
            raise ValueError("learning rate and clip norm must be positive")


class ModelParams:
    """All weights: 2 shared FF condition modules, and per stream a
    stacked LSTM (layer-1 input = vocab + hidden) plus a zero-initialized
    softmax head over [h_top, post-FF] of width 2*hidden."""

    def __init__(self, config, rng):
        h = config.hidden
        self.config = config
        self.pre_ff = LinearLayer(h, config.condition_dim, rng, name="pre_ff")
        self.post_ff = LinearLayer(h, config.condition_dim, rng, name="post_ff")
        self.lstm_stacks = {}
        self.heads = {}
        for s, vocab in zip(STREAM_NAMES, config.vocab_sizes):
            in_dim = vocab + h
            stack = []
            for li in range(config.lstm_layers):
                stack.append(LSTMLayer(h, in_dim, rng, name=f"{s}.lstm{li + 1}"))
                in_dim = h
            self.lstm_stacks[s] = stack
            self.heads[s] = LinearLayer(vocab, 2 * h, zero_init=True, name=f"{s}.head")

    def parameters(self):
        out = self.pre_ff.parameters() + self.post_ff.parameters()
        for s in STREAM_NAMES:
            for layer in self.lstm_stacks[s]:
                out += layer.parameters()
            out += self.heads[s].parameters()
        return out

    def named_parameters(self):
        return {p.name: p for p in self.parameters()}

    def zero_state(self):
        return {s: [layer.zero_state() for layer in self.lstm_stacks[s]]
                for s in STREAM_NAMES}


def init_params(config, rng):
    return ModelParams(config, rng)


def detach_state(state):
    """Strip tape history from recurrent state (values persist, grads do not)."""
    return {s: [[Tensor(h.data), Tensor(c.data)] for h, c in layers]
            for s, layers in state.items()}


def one_hot(size, index):
    v = np.zeros(size)
    v[index] = 1.0
    return v


def forward_step(params, input_words, pre_vec, post_vec, state,
                 training=False, rng=None):
    """One time step; returns a probability row per stream.

    input_words are the three word indices at t-1. The same pre-FF/post-FF
    outputs feed all three streams. state is updated in place.
    """
    cfg = params.config
    rate = cfg.dropout
    pre_out = dropout_apply(params.pre_ff.forward(Tensor(pre_vec)),
                            rate, training, rng)
    post_out = dropout_apply(params.post_ff.forward(Tensor(post_vec)),
                             rate, training, rng)
    probs = []
    for si, s in enumerate(STREAM_NAMES):
        word = one_hot(cfg.vocab_sizes[si], int(input_words[si]))
        x = concat_merge([Tensor(word), pre_out])
        h_top = stacked_lstm_step(params.lstm_stacks[s], x, state[s],
                                  rate, training, rng)
        h_top = dropout_apply(h_top, rate, training, rng)
        logits = params.heads[s].forward(concat_merge([h_top, post_out]))
        probs.append(ad.softmax_rows(logits))
    return probs


def sequence_loss(params, seq, start=0, end=None, training=False, rng=None,
                  state=None):
    """Teacher-forced unroll over seq[start:end).

    Loss is the mean over steps of the summed per-stream cross-entropies.
    Returns (loss, state) so callers can persist state across consecutive
    slices of one piece.
    """
    if end is None:
        end = len(seq)
    if end - start < 1:
        raise ValueError("sequence slice must contain at least one step")
    if state is None:
        state = params.zero_state()
    total = None
    for t in range(start, end):
        probs = forward_step(params, seq.inputs[t], seq.pre[t], seq.post[t],
                             state, training, rng)
        step_loss = ad.cross_entropy(probs[0], int(seq.targets[t][0]))
        for si in (1, 2):
            step_loss = ad.add(step_loss,
                               ad.cross_entropy(probs[si], int(seq.targets[t][si])))
        total = step_loss if total is None else ad.add(total, step_loss)
    return ad.scale(total, 1.0 / (end - start)), state


# ---------------------------------------------------------------------------
# Optimizer

def clip_global_norm(grads, max_norm):
    """Rescale grads in place so their global L2 norm is at most max_norm."""
    total = np.sqrt(sum(float(np.dot(g.ravel(), g.ravel())) for g in grads))
    if total > max_norm:
        f = max_norm / total
        for g in grads:
            g *= f
    return total


def adam_step(parameters, moments, lr, t,
              beta1=ADAM_BETA1, beta2=ADAM_BETA2, eps=ADAM_EPS):
    """Bias-corrected Adam update consuming each parameter's .grad."""
    if t < 1:
        raise ValueError("Adam step counter starts at 1")
    for p in parameters:
        m, v = moments[p.name]
        m *= beta1
        m += (1.0 - beta1) * p.grad
        v *= beta2
        v += (1.0 - beta2) * p.grad * p.grad
        m_hat = m / (1.0 - beta1 ** t)
        v_hat = v / (1.0 - beta2 ** t)
        p.data -= lr * m_hat / (np.sqrt(v_hat) + eps)


class Optimizer:
    """Adam with global-norm gradient clipping, tracking its own step count."""

    def __init__(self, params):
        self.params = params
        self.t = 0
        self.moments = {p.name: (np.zeros_like(p.data), np.zeros_like(p.data))
                        for p in params.parameters()}

    def step(self, grad_scale=1.0):
        plist = self.params.parameters()
        if grad_scale != 1.0:
            for p in plist:
                p.grad *= grad_scale
        clip_global_norm([p.grad for p in plist], self.params.config.grad_clip_norm)
        self.t += 1
        adam_step(plist, self.moments, self.params.config.learning_rate, self.t)
        for p in plist:
            p.reset_grad()


# ---------------------------------------------------------------------------
# Training

@dataclass
class Checkpoint:
    config: ModelConfig
    epoch: int
    tensors: dict
    moments: dict
    adam_t: int
    rng_state: dict
    loss_history: list = field(default_factory=list)


def make_checkpoint(params, opt, rng, epoch, loss_history):
    return Checkpoint(
        config=params.config,
        epoch=epoch,
        tensors={p.name: p.data.copy() for p in params.parameters()},
        moments={name: (m.copy(), v.copy()) for name, (m, v) in opt.moments.items()},
        adam_t=opt.t,
        rng_state=copy.deepcopy(rng.bit_generator.state),
        loss_history=list(loss_history),
    )


def params_from_checkpoint(ckpt):
    params = ModelParams(ckpt.config, np.random.default_rng(0))
    for p in params.parameters():
        p.data[...] = ckpt.tensors[p.name]
    return params


def _restore_training(ckpt):
    params = params_from_checkpoint(ckpt)
    opt = Optimizer(params)
    opt.t = ckpt.adam_t
    for name, (m, v) in ckpt.moments.items():
        om, ov = opt.moments[name]
        om[...] = m
        ov[...] = v
    rng = np.random.default_rng(0)
    rng.bit_generator.state = copy.deepcopy(ckpt.rng_state)
    return params, opt, rng


def _slice_ranges(n, seq_len):
    return [(a, min(a + seq_len, n)) for a in range(0, n, seq_len)]


def train(corpus, config, epochs, snapshot_epochs=(50, 150), seed=0,
          resume=None, log_every=0):
    """Seeded training over a list of EncodedSequence pieces.

    Per epoch: shuffle pieces, cut each into seq_len slices (recurrent
    state persists across a piece's slices, resets between pieces), and
    take one clipped Adam step per batch_size slices on the averaged
    gradients. Returns checkpoints at each snapshot epoch plus the final
    epoch.
    """
    if not corpus:
        raise ValueError("empty corpus")
    if resume is None:
        rng = np.random.default_rng(seed)
        params = init_params(config, rng)
        opt = Optimizer(params)
        start_epoch = 0
        loss_history = []
    else:
        params, opt, rng = _restore_training(resume)
        config = params.config
        start_epoch = resume.epoch
        loss_history = list(resume.loss_history)

    checkpoints = []
    snaps = {e for e in snapshot_epochs if start_epoch < e <= epochs}
    for epoch in range(start_epoch + 1, epochs + 1):
        order = rng.permutation(len(corpus))
        loss_sum = 0.0
        step_count = 0
        pending = 0
        for pi in order:
            seq = corpus[pi]
            state = None
            for a, b in _slice_ranges(len(seq), config.seq_len):
                with Tape() as tape:
                    loss, state = sequence_loss(params, seq, a, b,
                                                training=True, rng=rng, state=state)
                backward(loss, tape)
                state = detach_state(state)
                loss_sum += float(loss.data) * (b - a)
                step_count += b - a
                pending += 1
                if pending == config.batch_size:
                    opt.step(grad_scale=1.0 / pending)
                    pending = 0
        if pending:
            opt.step(grad_scale=1.0 / pending)
        loss_history.append(loss_sum / step_count)
        if log_every and epoch % log_every == 0:
            print(f"epoch {epoch}: per-step loss {loss_history[-1]:.4f}")
        if epoch in snaps:
            checkpoints.append(make_checkpoint(params, opt, rng, epoch, loss_history))
    if not checkpoints or checkpoints[-1].epoch != epochs:
        checkpoints.append(make_checkpoint(params, opt, rng, epochs, loss_history))
    return checkpoints


# ---------------------------------------------------------------------------
# Checkpoint files: JSON container, base64 float64 blobs, sha256 checksum

def _encode_array(a):
    a = np.ascontiguousarray(a, dtype=np.float64)
    return {"shape": list(a.shape),
            "data": base64.b64encode(a.tobytes()).decode("ascii")}


def _decode_array(d):
    a = np.frombuffer(base64.b64decode(d["data"]), dtype=np.float64)
    return a.reshape(d["shape"]).copy()


def _payload_checksum(payload):
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def save_checkpoint(ckpt, path):
    payload = {
        "version": CHECKPOINT_VERSION,
        "config": asdict(ckpt.config),
        "epoch": ckpt.epoch,
        "adam_t": ckpt.adam_t,
        "rng_state": ckpt.rng_state,
        "tensors": {k: _encode_array(v) for k, v in sorted(ckpt.tensors.items())},
        "moments": {k: [_encode_array(m), _encode_array(v)]
                    for k, (m, v) in sorted(ckpt.moments.items())},
        "loss_history": ckpt.loss_history,
    }
    payload["config"]["vocab_sizes"] = list(payload["config"]["vocab_sizes"])
    doc = {"checksum": _payload_checksum(payload), **payload}
    atomic_write_text(path, json.dumps(doc, sort_keys=True))


class CheckpointError(Exception):
    pass


def load_checkpoint(path):
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as e:
        raise CheckpointError(f"corrupted checkpoint {path}: {e}") from e
    if doc.get("version") != CHECKPOINT_VERSION:
        raise CheckpointError(
            f"checkpoint version {doc.get('version')!r} unsupported "
            f"(expected {CHECKPOINT_VERSION})")
    stored = doc.pop("checksum", None)
    if stored != _payload_checksum(doc):
        raise CheckpointError(f"checksum mismatch in {path}")
    cfg_dict = dict(doc["config"])
    cfg_dict["vocab_sizes"] = tuple(cfg_dict["vocab_sizes"])
    return Checkpoint(
        config=ModelConfig(**cfg_dict),
        epoch=doc["epoch"],
        tensors={k: _decode_array(v) for k, v in doc["tensors"].items()},
        moments={k: (_decode_array(m), _decode_array(v))
                 for k, (m, v) in doc["moments"].items()},
        adam_t=doc["adam_t"],
        rng_state=doc["rng_state"],
        loss_history=list(doc["loss_history"]),
    )
