from __future__ import annotations

import itertools
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from adrsim import phy
from adrsim.phy import LossReason, Transmission


def reference_airtime(sf, bw, cr, payload, preamble, explicit, ldro):
    """Time on air via integer symbol counting, written independently of the package."""
    h = 0 if explicit else 1
    de = 1 if ldro else 0
    num = 8 * payload - 4 * sf + 44 - 20 * h
    den = 4 * (sf - 2 * de)
    blocks = -(-num // den) if num > 0 else 0
    symbols = preamble + 4.25 + 8 + blocks * (cr + 4)
    return symbols * (1 << sf) / bw


def test_path_loss_examples():
    assert phy.path_loss(40) == pytest.approx(127.41, abs=1e-9)
    assert phy.path_loss(400) == pytest.approx(148.21, abs=1e-9)
    assert phy.path_loss(670) == pytest.approx(152.87, abs=5e-3)


def test_path_loss_below_reference_distance_rejected():
    with pytest.raises(ValueError):
        phy.path_loss(39.9)


def test_path_loss_adds_shadow_and_offset():
    link = phy.LinkModel(mean_offset_db=10.0)
    assert phy.path_loss(400, link, shadow_sample_db=-2.5) == pytest.approx(148.21 + 7.5)


@given(st.floats(40, 10_000), st.floats(40, 10_000))
def test_path_loss_monotone_in_distance(a, b):
    lo, hi = sorted((a, b))
    assert phy.path_loss(lo) <= phy.path_loss(hi)


def test_airtime_examples():
    assert phy.airtime(7) == pytest.approx(0.056576, abs=1e-6)
    assert phy.airtime(12) == pytest.approx(1.318912, abs=1e-6)
    # SF11/12 switch low data rate optimisation on by default at 125 kHz
    assert phy.airtime(12, payload_bytes=51, low_data_rate_opt=False) < phy.airtime(12, payload_bytes=51)


_GRID = [
    (sf, bw, cr, pl, 8, ex, ldro)
    for sf, pl, cr, bw, ex, ldro in itertools.product(
        range(7, 13), (1, 7, 13, 20, 51, 222), (1, 2, 4), (125_000, 250_000), (True, False), (False, True)
    )
    if not (ldro and sf < 9)
]
_CASES = _GRID[::9][:50]


def test_airtime_case_count():
    assert len(_CASES) == 50


@pytest.mark.parametrize("sf,bw,cr,payload,preamble,explicit,ldro", _CASES)
def test_airtime_matches_reference(sf, bw, cr, payload, preamble, explicit, ldro):
    got = phy.airtime(sf, bw, cr + 4, payload, preamble, explicit, ldro)
    assert abs(got - reference_airtime(sf, bw, cr, payload, preamble, explicit, ldro)) < 1e-6


def test_received_power_examples():
    assert phy.received_power(14, 145.61) == pytest.approx(-131.61)
    assert phy.received_power(14, 0) == 14
    assert phy.received_power(2, 127.41) == pytest.approx(-125.41)


def test_noise_floor_follows_formula():
    assert phy.NOISE_FLOOR_DBM == pytest.approx(-174 + 10 * math.log10(125_000) + 6)
    assert phy.NOISE_FLOOR_DBM == pytest.approx(-117.03, abs=0.01)


def test_snr_examples():
    nf = phy.NOISE_FLOOR_DBM
    assert phy.snr(nf) == 0
    assert phy.snr(-131.61, noise_floor=-117.07) == pytest.approx(-14.54)
    assert phy.snr(-97.07, noise_floor=-117.07) == pytest.approx(20.0)


def _tx(rx, sf=7, ch=868.1e6, start=0.0, air=0.1, src=0):
    return Transmission(source=src, start_time=start, airtime=air, channel_hz=ch, sf=sf, tx_power=14, rx_power_dbm=rx)


def test_single_packet_above_sensitivity_received():
    (out,) = phy.resolve_receptions([_tx(-120)])
    assert out.received and out.status == "received"


def test_single_packet_below_sensitivity():
    (out,) = phy.resolve_receptions([_tx(-124)])
    assert out.loss_reason == LossReason.UNDER_SENSITIVITY


def test_capture_with_seven_db_margin():
    strong, weak = phy.resolve_receptions([_tx(-100, src=0), _tx(-107, src=1, start=0.05)])
    assert strong.received
    assert weak.loss_reason == LossReason.COLLISION


def test_no_capture_with_three_db_margin():
    outs = phy.resolve_receptions([_tx(-100), _tx(-103, start=0.05)])
    assert all(o.loss_reason == LossReason.COLLISION for o in outs)


def test_orthogonal_sf_and_channels_do_not_interfere():
    assert all(o.received for o in phy.resolve_receptions([_tx(-100, sf=7), _tx(-100, sf=9)]))
    assert all(o.received for o in phy.resolve_receptions([_tx(-100, ch=868.1e6), _tx(-100, ch=868.3e6)]))


def test_back_to_back_packets_do_not_overlap():
    assert all(o.received for o in phy.resolve_receptions([_tx(-100, start=0.0), _tx(-100, start=0.1)]))


def test_sub_sensitivity_signal_still_interferes():
    outs = phy.resolve_receptions([_tx(-121), _tx(-124, start=0.01)])
    assert outs[0].loss_reason == LossReason.COLLISION
    assert outs[1].loss_reason == LossReason.UNDER_SENSITIVITY


def test_gateway_busy_flag():
    (out,) = phy.resolve_receptions([_tx(-100)], gateway_busy=[True])
    assert out.loss_reason == LossReason.GATEWAY_BUSY


@given(st.lists(st.tuples(st.floats(-140, -60), st.sampled_from((7, 8)), st.floats(0, 2)), min_size=1, max_size=8))
def test_at_most_one_winner_per_overlap_group(pkts):
    txs = [_tx(rx, sf=sf, start=s, src=k) for k, (rx, sf, s) in enumerate(pkts)]
    outs = phy.resolve_receptions(txs)
    for i, a in enumerate(txs):
        for j, b in enumerate(txs):
            if i < j and a.sf == b.sf and a.start_time < b.end_time and b.start_time < a.end_time:
                assert not (outs[i].received and outs[j].received)


def test_domain_guards():
    with pytest.raises(ValueError):
        phy.check_sf(6)
    with pytest.raises(ValueError):
        phy.check_tx_power(10)
    assert phy.tp_index(14) == 4
    assert phy.sensitivity(12) == -137.0


@given(st.lists(st.tuples(st.floats(-140, -60), st.sampled_from((7, 8)), st.floats(0, 1)), min_size=1, max_size=7),
       st.randoms(use_true_random=False))
def test_resolution_is_permutation_invariant(pkts, rnd):
    txs = [_tx(rx, sf=sf, start=s, src=k) for k, (rx, sf, s) in enumerate(pkts)]
    base = {tx.source: o for tx, o in zip(txs, phy.resolve_receptions(txs))}
    shuffled = list(txs)
    rnd.shuffle(shuffled)
    again = {tx.source: o for tx, o in zip(shuffled, phy.resolve_receptions(shuffled))}
    assert base == again
    assert len(again) == len(txs)


@given(st.sampled_from(phy.SPREADING_FACTORS[:-1]), st.integers(1, 200))
def test_airtime_increases_with_sf_and_payload(sf, payload):
    assert phy.airtime(sf + 1, payload_bytes=payload) > phy.airtime(sf, payload_bytes=payload)
    assert phy.airtime(sf, payload_bytes=payload + 20) > phy.airtime(sf, payload_bytes=payload)
