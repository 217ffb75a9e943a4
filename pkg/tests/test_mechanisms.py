import numpy as np
import pytest
from hypothesis import given, strategies as st

from evoperc.arena import Color
from evoperc.comms import MessageQueue, OpinionMessage
from evoperc.mechanisms import (
    BatchContext,
    DecisionContext,
    EvolvedANN,
    MajorityRule,
    Mechanism,
    VoterModel,
    ann_decide,
    majority_decide,
    make_mechanism,
    voter_decide,
)
from evoperc.neural import decode, random_genome, save_genome
from evoperc.simulation import Scenario, simulate

B, W = Color.BLACK, Color.WHITE


class FixedU:
    def __init__(self, u):
        self.u = u

    def random(self):
        return self.u


def queue(*colors):
    return MessageQueue([OpinionMessage(10 + k, c) for k, c in enumerate(colors)])


def ctx(own, colors, u=0.0, s2=0.5):
    return DecisionContext(own, queue(*colors), s2, FixedU(u))


def test_voter_copies_indexed_message():
    colors = [B, W, W, B]
    for k, c in enumerate(colors):
        assert voter_decide(ctx(W, colors, u=(k + 0.5) / 4)) == c


def test_voter_empty_queue_keeps_opinion():
    assert voter_decide(ctx(W, [], u=0.9)) == W
    assert voter_decide(ctx(B, [], u=0.1)) == B


def test_voter_monte_carlo_half():
    rng = np.random.default_rng(0)
    hits = sum(voter_decide(DecisionContext(B, queue(W, W, B, B), 0.0, rng)) == W for _ in range(10_000))
    assert abs(hits / 10_000 - 0.5) < 0.02


@pytest.mark.parametrize("own, colors, expected", [
    (B, [W, W, W], W),
    (B, [W, B], B),
    (W, [B, B, W, W], W),
    (B, [W, W, B, B], B),
    (W, [B, B], B),
    (B, [], B),
])
def test_majority_examples(own, colors, expected):
    assert majority_decide(ctx(own, colors)) == expected


def test_ann_zero_weights_gives_white():
    nets = decode(np.zeros(19))
    assert ann_decide(nets, ctx(B, [B, B]))[0] == W


def copy_previous_genome():
    g = np.zeros(19)
    g[9] = 4.0     # own opinion -> first hidden unit
    g[12] = -2.0   # its bias
    g[15] = 10.0   # first hidden unit -> output
    return g


@given(st.sampled_from([B, W]), st.lists(st.sampled_from([B, W]), max_size=4),
       st.floats(0, 1))
def test_ann_copy_previous_is_identity(own, colors, s2):
    nets = decode(copy_previous_genome())
    assert ann_decide(nets, ctx(own, colors, s2=s2))[0] == own


def test_voter_and_majority_ignore_ground_sensor():
    for colors in ([W, B, W], [B], []):
        for u in (0.1, 0.6):
            for own in (B, W):
                assert voter_decide(ctx(own, colors, u, s2=0.0)) == voter_decide(ctx(own, colors, u, s2=1.0))
                assert majority_decide(ctx(own, colors, s2=0.0)) == majority_decide(ctx(own, colors, s2=1.0))


def random_batch(rng, k=40, n=20):
    """Random per-robot queues in both scalar and batched form."""
    scalar, member = [], np.zeros((k, n), dtype=bool)
    opinion = np.zeros((k, n), dtype=np.uint8)
    arrival = np.zeros((k, n), dtype=np.int64)
    own = rng.integers(0, 2, k).astype(np.uint8)
    s2 = rng.random(k)
    u = rng.random(k)
    for j in range(k):
        size = rng.integers(0, 5)
        senders = rng.choice(n, size, replace=False)
        ticks = rng.choice(100, size, replace=False)
        ops = rng.integers(0, 2, size)
        member[j, senders] = True
        opinion[j, senders] = ops
        arrival[j, senders] = ticks
        order = np.argsort(ticks)
        q = MessageQueue([OpinionMessage(int(senders[o]), Color(int(ops[o]))) for o in order])
        scalar.append(DecisionContext(Color(int(own[j])), q, float(s2[j]), FixedU(float(u[j]))))
    batch = BatchContext(
        run=np.zeros(k, dtype=np.int64), robot=np.arange(k), own=own, member=member,
        opinion=opinion, arrival=arrival,
        s0=np.array([c.s0 for c in scalar]), s1=np.array([c.s1 for c in scalar]), s2=s2, u=u,
    )
    return scalar, batch


@pytest.mark.parametrize("seed", range(5))
def test_batched_matches_scalar(seed):
    rng = np.random.default_rng(seed)
    scalar, batch = random_batch(rng)
    np.testing.assert_array_equal(VoterModel().decide(batch), [voter_decide(c) for c in scalar])
    np.testing.assert_array_equal(MajorityRule().decide(batch), [majority_decide(c) for c in scalar])
    g = random_genome(rng, False) * 3
    ann = EvolvedANN(g)
    ann.bind(1, len(scalar))
    nets = decode(g)
    np.testing.assert_array_equal(ann.decide(batch), [ann_decide(nets, c)[0] for c in scalar])


def test_batched_predictor_state_matches_scalar():
    rng = np.random.default_rng(11)
    g = random_genome(rng, True)
    nets = decode(g)
    ann = EvolvedANN(g)
    ann.bind(1, 40)
    states = [None] * 40
    for _ in range(3):
        scalar, batch = random_batch(rng)
        ann.decide(batch)
        for j, c in enumerate(scalar):
            _, states[j] = ann_decide(nets, c, state=states[j])
    np.testing.assert_allclose(ann.state[0], np.stack(states), atol=1e-12)


class Counting(Mechanism):
    name = "counting"

    def bind(self, runs, n):
        self.calls = np.zeros((runs, n), dtype=np.int64)

    def decide(self, ctx):
        np.add.at(self.calls, (ctx.run, ctx.robot), 1)
        return ctx.own


def test_propagation_count_equals_mechanism_invocations():
    mech = Counting()
    scenarios = [Scenario.from_seed(0.52, B, s) for s in (1, 2)]
    result = simulate(scenarios, mech, 60.0)
    np.testing.assert_array_equal(result.propagations, mech.calls)
    assert mech.calls.sum() > 0


def test_make_mechanism(tmp_path):
    assert isinstance(make_mechanism("voter"), VoterModel)
    assert isinstance(make_mechanism(" majority "), MajorityRule)
    save_genome(tmp_path / "g.genome", np.zeros(19))
    m = make_mechanism(f"ann:{tmp_path / 'g.genome'}")
    assert isinstance(m, EvolvedANN) and not m.has_predictor
    with pytest.raises(ValueError, match="unknown mechanism"):
        make_mechanism("oracle")
