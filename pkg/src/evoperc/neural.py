"""Decision and prediction networks, genome layout, I/O and mutation.

Genome layout (flat): decision net ``w_in (4x3, row-major by input), b_hidden
(3), w_out (3), b_out (1)``, followed optionally by the prediction net
``w_in (4xH), w_self (H), b_hidden (H), w_out (Hx3), b_out (3)``.

Forward passes accept parameter arrays with leading batch dimensions, so one
call can run a different genome per robot.  Weighted sums are accumulated in
a fixed order, which keeps each result independent of the batch shape.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import expit

N_INPUTS = 4
DECISION_HIDDEN = 3
N_PREDICTED = 3
DECISION_PARAMS = N_INPUTS * DECISION_HIDDEN + DECISION_HIDDEN + DECISION_HIDDEN + 1
DEFAULT_HIDDEN = 8
WEIGHT_BOUND = 5.0
MUTATION_SIGMA = 0.4
HEADER_TAG = "evoperc-genome v1"


class GenomeError(ValueError):
    pass


def predictor_params(hidden: int = DEFAULT_HIDDEN) -> int:
    return 9 * hidden + 3


def genome_length(with_predictor: bool, hidden: int = DEFAULT_HIDDEN) -> int:
    return DECISION_PARAMS + (predictor_params(hidden) if with_predictor else 0)


@dataclass(frozen=True)
class DecisionNet:
    w_in: np.ndarray  # (..., 4, 3)
    b_hidden: np.ndarray  # (..., 3)
    w_out: np.ndarray  # (..., 3)
    b_out: np.ndarray  # (...,)


@dataclass(frozen=True)
class PredictionNet:
    w_in: np.ndarray  # (..., 4, H)
    w_self: np.ndarray  # (..., H)
    b_hidden: np.ndarray  # (..., H)
    w_out: np.ndarray  # (..., H, 3)
    b_out: np.ndarray  # (..., 3)

    @property
    def hidden(self) -> int:
        return self.w_self.shape[-1]


def _weighted(x, w):
    """sum_i x[..., i] * w[..., i, :] with a fixed accumulation order."""
    total = x[..., 0, None] * w[..., 0, :]
    for i in range(1, x.shape[-1]):
        total = total + x[..., i, None] * w[..., i, :]
    return total


def forward_decision(net: DecisionNet, inputs) -> np.ndarray:
    """Opinion output in (0, 1) for inputs ``[s0, s1, s2, d_prev]``."""
    x = np.asarray(inputs, dtype=float)
    hidden = np.tanh(_weighted(x, net.w_in) + net.b_hidden)
    return expit(_weighted(hidden, net.w_out[..., :, None])[..., 0] + net.b_out)


def forward_prediction(net: PredictionNet, inputs, state):
    """One recurrent step: returns ``(predictions, new_state)``."""
    x = np.asarray(inputs, dtype=float)
    h = np.tanh(_weighted(x, net.w_in) + net.w_self * state + net.b_hidden)
    return expit(_weighted(h, net.w_out) + net.b_out), h


def decode(genome, hidden: int = DEFAULT_HIDDEN):
    """Split a genome (or a stack of genomes) into ``(DecisionNet, PredictionNet | None)``."""
    g = np.asarray(genome, dtype=float)
    lead = g.shape[:-1]
    length = g.shape[-1]
    valid = (genome_length(False, hidden), genome_length(True, hidden))
    if length not in valid:
        raise GenomeError(
            f"genome has {length} weights; expected {valid[0]} (decision only) "
            f"or {valid[1]} (decision + predictor with H={hidden})"
        )
    pos = 0

    def take(*shape):
        nonlocal pos
        size = int(np.prod(shape))
        out = g[..., pos:pos + size].reshape(lead + shape)
        pos += size
        return out

    decision = DecisionNet(
        w_in=take(N_INPUTS, DECISION_HIDDEN),
        b_hidden=take(DECISION_HIDDEN),
        w_out=take(DECISION_HIDDEN),
        b_out=take(1)[..., 0],
    )
    if length == valid[0]:
        return decision, None
    predictor = PredictionNet(
        w_in=take(N_INPUTS, hidden),
        w_self=take(hidden),
        b_hidden=take(hidden),
        w_out=take(hidden, N_PREDICTED),
        b_out=take(N_PREDICTED),
    )
    return decision, predictor


def encode(decision: DecisionNet, predictor: PredictionNet | None = None) -> np.ndarray:
    lead = decision.b_out.shape
    parts = [
        decision.w_in.reshape(lead + (-1,)),
        decision.b_hidden,
        decision.w_out,
        decision.b_out[..., None],
    ]
    if predictor is not None:
        parts += [
            predictor.w_in.reshape(lead + (-1,)),
            predictor.w_self,
            predictor.b_hidden,
            predictor.w_out.reshape(lead + (-1,)),
            predictor.b_out,
        ]
    return np.concatenate(parts, axis=-1)


def random_genome(rng: np.random.Generator, with_predictor: bool, hidden: int = DEFAULT_HIDDEN,
                  size: int | None = None) -> np.ndarray:
    shape = (genome_length(with_predictor, hidden),)
    if size is not None:
        shape = (size,) + shape
    return rng.uniform(-1.0, 1.0, size=shape)


def mutate(genome, rate: float, rng: np.random.Generator, sigma: float = MUTATION_SIGMA,
           bound: float = WEIGHT_BOUND) -> np.ndarray:
    """Gaussian perturbation of each weight with probability ``rate``, clamped."""
    if not 0.0 <= rate <= 1.0:
        raise ValueError("mutation rate must lie in [0, 1]")
    g = np.asarray(genome, dtype=float)
    hit = rng.random(g.shape) < rate
    noise = rng.normal(0.0, sigma, size=g.shape)
    return np.where(hit, np.clip(g + noise, -bound, bound), g)


def save_genome(path: str | Path, genome, hidden: int = DEFAULT_HIDDEN) -> None:
    g = np.asarray(genome, dtype=float).ravel()
    pred = g.size - DECISION_PARAMS
    decode(g, hidden)  # validates the length
    header = f"{HEADER_TAG} decision={DECISION_PARAMS} predictor={pred} H={hidden}"
    Path(path).write_text(header + "\n" + "\n".join(repr(float(w)) for w in g) + "\n")


def load_genome(path: str | Path):
    """Return ``(genome, hidden)`` from a genome file."""
    lines = Path(path).read_text().split("\n")
    header = lines[0].split()
    layout = "expected header 'evoperc-genome v1 decision=19 predictor=<0|9H+3> H=<H>'"
    if " ".join(header[:2]) != HEADER_TAG or len(header) != 5:
        raise GenomeError(f"{path}: malformed genome header; {layout}")
    try:
        fields = dict(item.split("=", 1) for item in header[2:])
        decision, pred, hidden = int(fields["decision"]), int(fields["predictor"]), int(fields["H"])
        weights = np.array([float(v) for v in lines[1:] if v.strip()])
    except (KeyError, ValueError) as exc:
        raise GenomeError(f"{path}: malformed genome file; {layout}") from exc
    if decision != DECISION_PARAMS or pred not in (0, predictor_params(hidden)):
        raise GenomeError(f"{path}: inconsistent layout in header; {layout}")
    if weights.size != decision + pred:
        raise GenomeError(f"{path}: header declares {decision + pred} weights, found {weights.size}")
    return weights, hidden
