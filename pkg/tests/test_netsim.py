# tests/test_netsim.py
"""Tests for `resilient_hsa.netsim`: link realizations, single episodes and pattern sweeps."""

# ==================================================================================================================== #
#                                                        IMPORTS                                                       #
# ==================================================================================================================== #
from __future__ import annotations

import logging
from typing import TYPE_CHECKING

# 3rd party
import pytest

# local
from resilient_hsa.errors import InvalidParamsError
from resilient_hsa.ff_core import FieldConfig
from resilient_hsa.netsim import (
    BudgetExceededError,
    DropModel,
    InsufficientRelays,
    LinkRealization,
    enumerate_realizations,
    realize_links,
    run_episode,
    sweep_patterns,
)
from resilient_hsa.protocol import (
    InsufficientRelaysError,
    client_encode,
    plaintext_sum,
    relay_aggregate,
    server_decode,
)
from resilient_hsa.scheme import build_scheme, draw_models, draw_source

# ------------------------------------------------------ PYRIGHT ----------------------------------------------------- #
if TYPE_CHECKING:
    from collections.abc import Callable

    from resilient_hsa.netsim import EpisodeResult
    from resilient_hsa.protocol import RelayMessage
    from resilient_hsa.scheme import Scheme


def _sweep(scheme: Scheme, drop: DropModel, budget: int | None = None, length: int = 2) -> list[EpisodeResult]:
    models = draw_models(scheme.cfg, length, seed=scheme.seed)
    _, sched = draw_source(scheme, length, seed=scheme.seed)
    return sweep_patterns(scheme.cfg, scheme.topology, sched, scheme.code, models, drop, budget)


# ==================================================================================================================== #
#                                                     REALIZATIONS                                                     #
# ==================================================================================================================== #
def test_derive_relay_sets(k5_scheme: Scheme) -> None:
    """A failed link from client 2 silences relay 1; a failed uplink removes relay 4 from V2 only."""
    real = LinkRealization.derive(k5_scheme.topology, [(2, 1)], [4])
    assert real.v1 == frozenset({2, 3, 4, 5})
    assert real.v2 == frozenset({2, 3, 5})


def test_derive_rejects_unknown_links(k5_scheme: Scheme) -> None:
    """Client 4 has no link to relay 1, and there is no relay 6."""
    with pytest.raises(InvalidParamsError):
        LinkRealization.derive(k5_scheme.topology, [(4, 1)], [])
    with pytest.raises(InvalidParamsError):
        LinkRealization.derive(k5_scheme.topology, [], [6])


def test_drop_model_validation() -> None:
    """Probabilities lie in [0, 1] and depths are non-negative."""
    with pytest.raises(InvalidParamsError):
        DropModel(kind="bernoulli", p_c2r=1.5)
    with pytest.raises(InvalidParamsError):
        DropModel(kind="exhaustive", c2r_depth=-1)


def test_enumerate_realizations_count(k5_scheme: Scheme) -> None:
    """Uplink subsets alone give 2^5 realizations; one failed link on top multiplies by 1 + 15."""
    topo = k5_scheme.topology
    assert len(enumerate_realizations(DropModel(kind="exhaustive"), topo)) == 32
    assert len(enumerate_realizations(DropModel(kind="exhaustive", r2s_max=1), topo)) == 6
    assert len(enumerate_realizations(DropModel(kind="exhaustive", c2r_depth=1), topo)) == 16 * 32


def test_bernoulli_realizations_are_reproducible(k5_scheme: Scheme) -> None:
    """The same (model, trial) draws the same failures; certain failure silences everything."""
    topo = k5_scheme.topology
    model = DropModel(kind="bernoulli", p_c2r=0.2, p_r2s=0.3, seed=11)
    assert realize_links(model, topo, 3) == realize_links(model, topo, 3)
    assert realize_links(DropModel(kind="bernoulli", p_c2r=0.0, p_r2s=1.0), topo, 0).v2 == frozenset()
    assert realize_links(DropModel(kind="bernoulli", p_c2r=1.0), topo, 0).v1 == frozenset()


# ==================================================================================================================== #
#                                                       EPISODES                                                       #
# ==================================================================================================================== #
def test_episode_decodes_with_one_straggler(k5_scheme: Scheme) -> None:
    """Losing relay 3's uplink still decodes the exact sum and leaks nothing."""
    models = draw_models(k5_scheme.cfg, 3, seed=5)
    _, sched = draw_source(k5_scheme, 3, seed=5)
    real = LinkRealization.derive(k5_scheme.topology, [], [3])
    result = run_episode(k5_scheme.cfg, k5_scheme.topology, sched, k5_scheme.code, models, real)

    assert result.decoded
    assert result.oracle_match is True
    assert result.outcome.integer_sum == plaintext_sum(models)  # type: ignore[union-attr]
    assert result.audit.max_leakage == 0
    assert len(result.audit.relay_leakage) == 5


def test_episode_records_insufficient_relays(k5_scheme: Scheme) -> None:
    """Two silent relays exceed s = 1: no sum, no error, still no leakage."""
    models = draw_models(k5_scheme.cfg, 2, seed=0)
    _, sched = draw_source(k5_scheme, 2, seed=0)
    real = LinkRealization.derive(k5_scheme.topology, [(2, 1)], [5])
    result = run_episode(k5_scheme.cfg, k5_scheme.topology, sched, k5_scheme.code, models, real, trial=7)

    assert not result.decoded
    assert result.outcome == InsufficientRelays(received=(2, 3, 4), needed=4)
    assert result.oracle_match is None
    assert result.audit.max_leakage == 0
    assert result.trial == 7


def test_episode_rejects_missing_client(k5_scheme: Scheme) -> None:
    """Every client must contribute a model."""
    models = draw_models(k5_scheme.cfg, 2, seed=0)[:4]
    _, sched = draw_source(k5_scheme, 2, seed=0)
    real = LinkRealization.derive(k5_scheme.topology, [], [])
    with pytest.raises(InvalidParamsError):
        run_episode(k5_scheme.cfg, k5_scheme.topology, sched, k5_scheme.code, models, real)


# ==================================================================================================================== #
#                                                        SWEEPS                                                        #
# ==================================================================================================================== #
def test_sweep_zero_budget(small_scheme: Scheme) -> None:
    """A budget of 0 runs nothing."""
    assert _sweep(small_scheme, DropModel(kind="bernoulli", p_r2s=0.5), budget=0) == []


def test_sweep_fixed_runs_one_trial(k5_scheme: Scheme) -> None:
    """Non-exhaustive models without a budget run one trial."""
    episodes = _sweep(k5_scheme, DropModel(kind="fixed", failed_r2s=frozenset({1})))
    assert [e.trial for e in episodes] == [0]
    assert episodes[0].decoded


def test_sweep_budget_exceeded(k5_scheme: Scheme) -> None:
    """32 realizations do not fit a budget of 10."""
    with pytest.raises(BudgetExceededError) as excinfo:
        _sweep(k5_scheme, DropModel(kind="exhaustive"), budget=10)
    assert (excinfo.value.needed, excinfo.value.budget) == (32, 10)


def test_sweep_large_k_needs_budget() -> None:
    """K = 7 is beyond the exhaustive limit unless a budget is given."""
    scheme = build_scheme(FieldConfig.with_default_prime(q=3, K=7), d=5, s=2, seed=0)
    with pytest.raises(BudgetExceededError) as excinfo:
        _sweep(scheme, DropModel(kind="exhaustive", r2s_max=0), length=1)
    assert excinfo.value.budget is None


def test_sweep_small_scheme_with_link_failures(small_scheme: Scheme) -> None:
    """Every single link failure combined with every uplink subset: decode iff |V2| >= K - s."""
    episodes = _sweep(small_scheme, DropModel(kind="exhaustive", c2r_depth=1))
    assert len(episodes) == 7 * 8
    for e in episodes:
        assert e.decoded == (len(e.realization.v2) >= 2)
        assert e.oracle_match in (None, True)
        assert e.audit.max_leakage == 0


def test_sweep_fixed_collapses_repeated_trials(k5_scheme: Scheme, caplog: pytest.LogCaptureFixture) -> None:
    """A fixed model asked for 5 trials runs its one realization once and says so."""
    with caplog.at_level(logging.INFO, logger="resilient_hsa.netsim"):
        episodes = _sweep(k5_scheme, DropModel(kind="fixed", failed_r2s=frozenset({2})), budget=5)
    assert len(episodes) == 1
    assert episodes[0].realization.v2 == frozenset({1, 3, 4, 5})
    assert "running 1 episode instead of 5" in caplog.text


# ==================================================================================================================== #
#                                                   ACCEPTANCE GRID                                                    #
# ==================================================================================================================== #
GRID = [(K, d, s) for K in range(3, 8) for d in range(2, K) for s in range(d)]
MODEL_DRAWS = 20


@pytest.mark.slow
@pytest.mark.parametrize(("K", "d", "s"), GRID)
def test_grid_decodes_from_any_k_minus_s_relays(
    K: int,  # noqa: N803
    d: int,
    s: int,
    grid_scheme: Callable[[int, int, int], Scheme],
) -> None:
    """q=3, L=2(d-s): every V2 with |V2| >= K-s decodes the plaintext sum for 20 model draws.

    One relay fewer yields an InsufficientRelays record, and no relay subset leaks anything.
    """
    scheme = grid_scheme(K, d, s)
    cfg, topo, code = scheme.cfg, scheme.topology, scheme.code
    length = 2 * (d - s)
    # every failed-uplink subset of size <= s + 1, i.e. every V2 with |V2| >= K - s - 1
    realizations = enumerate_realizations(DropModel(kind="exhaustive", r2s_max=s + 1), topo)
    assert {len(r.v2) for r in realizations} == {K - s - 1, *range(K - s, K + 1)}
    _, sched = draw_source(scheme, length, seed=0)

    models = draw_models(cfg, length, seed=0)
    for t, real in enumerate(realizations):
        episode = run_episode(cfg, topo, sched, code, models, real, trial=t)
        assert episode.audit.max_leakage == 0
        if len(real.v2) >= K - s:
            assert episode.oracle_match is True
        else:
            assert episode.outcome == InsufficientRelays(received=tuple(sorted(real.v2)), needed=K - s)

    for draw in range(1, MODEL_DRAWS):
        models = draw_models(cfg, length, seed=draw)
        messages = [msg for mdl in models for msg in client_encode(mdl, sched, code, topo)]
        relays: dict[int, RelayMessage] = {}
        for m in topo.nodes:
            y = relay_aggregate(m, [msg for msg in messages if msg.relay == m], topo)
            assert y is not None
            relays[m] = y
        expected = plaintext_sum(models)
        for real in realizations:
            received = {m: relays[m] for m in sorted(real.v2)}
            if len(real.v2) >= K - s:
                assert server_decode(received, code, cfg, length).integer_sum == expected
            else:
                with pytest.raises(InsufficientRelaysError):
                    server_decode(received, code, cfg, length)
