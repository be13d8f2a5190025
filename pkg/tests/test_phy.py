import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from d2dsim.errors import ConfigError, DomainError
from d2dsim.phy import (
    ENB,
    ChannelParams,
    Hotspot,
    Link,
    LinkSet,
    Topology,
    channel_gain,
    place_nodes,
    rate_cellular,
    rate_d2d,
    rate_interference_free,
    sinr_rate,
    write_topology_csv,
)


class TestPlacement:
    def test_deterministic(self):
        a = place_nodes(1, 100.0, [], np.random.default_rng(3))
        b = place_nodes(1, 100.0, [], np.random.default_rng(3))
        assert a == b
        assert math.hypot(*a.ue_positions["ue0"]) <= 100.0

    def test_single_hotspot_containment(self):
        h = Hotspot((200.0, 0.0), 50.0, 1.0)
        topo = place_nodes(40, 500.0, [h], np.random.default_rng(0))
        for x, y in topo.ue_positions.values():
            assert math.hypot(x - 200, y) <= 50

    def test_two_hotspots(self):
        hs = [Hotspot((200.0, 0.0), 30.0, 0.5), Hotspot((-200.0, 100.0), 40.0, 0.5)]
        topo = place_nodes(27, 500.0, hs, np.random.default_rng(1))
        for x, y in topo.ue_positions.values():
            assert any(math.hypot(x - h.center[0], y - h.center[1]) <= h.radius for h in hs)

    def test_remainder_in_cell(self):
        topo = place_nodes(50, 300.0, [Hotspot((100.0, 0.0), 10.0, 0.2)], np.random.default_rng(2))
        inside = sum(math.hypot(x - 100, y) <= 10 for x, y in topo.ue_positions.values())
        assert inside >= 10
        assert all(math.hypot(x, y) <= 300 for x, y in topo.ue_positions.values())

    def test_hotspot_outside_cell(self):
        with pytest.raises(ConfigError):
            place_nodes(5, 100.0, [Hotspot((80.0, 0.0), 30.0, 1.0)], np.random.default_rng(0))

    def test_minimum_separation(self):
        topo = place_nodes(30, 50.0, [], np.random.default_rng(4), min_separation=0.5)
        pts = list(topo.ue_positions.values())
        for i, p in enumerate(pts):
            for q in pts[i + 1:]:
                assert math.dist(p, q) >= 0.5

    def test_topology_csv(self):
        topo = Topology(10.0, {"b": (1.0, 2.0), "a": (0.5, -1.0)})
        buf = io.StringIO()
        write_topology_csv(topo, buf)
        assert buf.getvalue().splitlines() == ["ue_id,x,y", "a,0.5,-1.0", "b,1.0,2.0"]


class TestGain:
    def test_reference_distance(self):
        assert channel_gain((0, 0), (1, 0), 3.5) == 1

    def test_power_law(self):
        assert channel_gain((0, 0), (10, 0), 2) == pytest.approx(0.01)

    def test_cap(self):
        assert channel_gain((0, 0), (0.5, 0), 3.5) == 1

    def test_coincident(self):
        with pytest.raises(DomainError):
            channel_gain((1, 1), (1, 1), 3)

    @given(st.tuples(st.floats(-1e3, 1e3), st.floats(-1e3, 1e3)),
           st.tuples(st.floats(-1e3, 1e3), st.floats(-1e3, 1e3)), st.floats(2, 6))
    def test_symmetric(self, a, b, eta):
        if a == b:
            return
        assert channel_gain(a, b, eta) == channel_gain(b, a, eta)


class TestRates:
    def test_interference_free_reduction(self):
        assert sinr_rate(3.0, 0.0, 1.0) == pytest.approx(2.0)

    def test_cellular_one_interferer(self):
        assert sinr_rate(1.0, 1.0, 1.0) == pytest.approx(0.5849625007, abs=1e-9)

    def test_cellular_two_interferers(self):
        assert sinr_rate(1.0, 0.5 + 0.5, 1.0) == pytest.approx(math.log2(1.5))

    def test_v_c(self):
        p = ChannelParams(p_enb=1.0, noise=1.0)
        assert rate_interference_free(p, 1.0) == 1
        assert rate_interference_free(p, 3.0) == 2
        assert rate_interference_free(p, 0.0) == 0

    def test_link_level_values(self):
        # eNB at origin, receiver 1 m away: all gains below are 1 by the cap
        topo = Topology(100.0, {"rx": (1.0, 0.0), "tx": (1.0, 1.0), "tx2": (0.0, 1.0)})
        p = ChannelParams(p_enb=1.0, p_d2d=1.0, noise=1.0)
        cell = Link(ENB, "rx", 0, "c")
        d2d = Link("tx", "rx", 0, "d")
        links = LinkSet((cell,), (d2d,))
        assert rate_cellular(links, p, topo, cell) == pytest.approx(math.log2(1.5))
        assert rate_d2d(links, p, topo, d2d) == pytest.approx(math.log2(1.5))
        alone = LinkSet((cell,), ())
        assert rate_cellular(alone, p, topo, cell) == pytest.approx(1.0)

    def test_d2d_without_enb_interference(self):
        topo = Topology(1e9, {"rx": (1e8, 0.0), "tx": (1e8 + 1, 0.0)})
        p = ChannelParams(p_enb=1.0, p_d2d=3.0, noise=1.0)
        d = Link("tx", "rx", 0)
        assert rate_d2d(LinkSet(d2d=(d,)), p, topo, d) == pytest.approx(2.0)

    def test_second_d2d_interferer_lowers_rate(self):
        topo = Topology(100.0, {"rx": (10.0, 0.0), "tx": (12.0, 0.0), "tx2": (15.0, 0.0), "rx2": (20.0, 0.0)})
        p = ChannelParams()
        d = Link("tx", "rx", 0, 1)
        other = Link("tx2", "rx2", 0, 2)
        assert rate_d2d(LinkSet(d2d=(d, other)), p, topo, d) < rate_d2d(LinkSet(d2d=(d,)), p, topo, d)

    def test_tx_and_rx_conflict(self):
        with pytest.raises(DomainError):
            LinkSet(d2d=(Link("a", "b", 0), Link("b", "c", 1)))

    def test_channel_validation(self):
        with pytest.raises(ConfigError):
            ChannelParams(noise=0)
        with pytest.raises(ConfigError):
            ChannelParams(path_loss_exponent=7)


def random_linkset(rng, n_ue=12):
    topo = place_nodes(n_ue, 200.0, [], rng)
    ues = sorted(topo.ue_positions)
    rng.shuffle(ues)
    n_cell = int(rng.integers(1, 4))
    n_d2d = int(rng.integers(0, 4))
    cell = tuple(Link(ENB, ues[i], i, i) for i in range(n_cell))
    txs = ues[n_cell:n_cell + n_d2d]
    rxs = ues[n_cell + n_d2d:n_cell + 2 * n_d2d]
    d2d = tuple(Link(t, r, int(rng.integers(0, n_cell + 1)), 100 + i) for i, (t, r) in enumerate(zip(txs, rxs)))
    return topo, LinkSet(cell, d2d)


def test_rate_ordering_random_linksets():
    rng = np.random.default_rng(77)
    p = ChannelParams()
    for _ in range(1000):
        topo, links = random_linkset(rng)
        for c in links.cellular:
            r_c = rate_cellular(links, p, topo, c)
            v_c = rate_interference_free(p, topo.gain(ENB, c.rx, p.path_loss_exponent))
            shared = any(links.beta(c, d) for d in links.d2d)
            assert r_c >= 0
            if shared:
                assert r_c < v_c
            else:
                assert r_c == v_c
        for d in links.d2d:
            assert rate_d2d(links, p, topo, d) >= 0


def test_rates_decrease_with_interferer_power():
    topo = Topology(100.0, {"rx": (10.0, 0.0), "tx": (12.0, 0.0), "tx2": (15.0, 0.0), "rx2": (20.0, 0.0)})
    cell = Link(ENB, "rx", 0, 0)
    d = Link("tx", "rx2", 0, 1)
    links = LinkSet((cell,), (d,))
    weak, strong = ChannelParams(p_d2d=0.1), ChannelParams(p_d2d=0.1, d2d_power={"tx": 0.5})
    assert rate_cellular(links, strong, topo, cell) < rate_cellular(links, weak, topo, cell)
    d2 = Link("tx2", "rx", 0, 2)
    both = LinkSet((), (Link("tx", "rx2", 0, 1), d2))
    assert rate_d2d(both, ChannelParams(d2d_power={"tx": 1.0}), topo, d2) < rate_d2d(both, weak, topo, d2)
