"""Compiled event loop.

Everything here is array code so it can run under ``numba.njit``; with
``ADRSIM_DISABLE_JIT=1`` the same source runs as plain Python and yields a
bit-identical trace.  The wrapper in :mod:`adrsim.sim.engine` prepares the
inputs and turns the returned columns into a :class:`RunTrace`.
"""

from __future__ import annotations

import math

import numpy as np

from .._accel import jit
from ..adr import ed_step_core, net_step_core
from ..mac import choose_window_core, intervals_overlap, off_time_end
from ..phy import path_loss_core, reception_reason_core
from ..rng import exponential, normal, uniform

EV_TX_START = 0
EV_TX_END = 1
EV_DL_END = 2
EV_ACK_TIMEOUT = 3
EV_INJECT = 4
EV_WARMUP_CAP = 5

INJ_LINK = 1
INJ_ADD = 2
INJ_START = 3

ADR_STEP_TP = 2
ADR_STEP_SF = 3
ADR_NET_COMMAND = 4
ADR_APPLIED = 5

FLAG_CONFIRMED = 1
FLAG_ACK_REQ = 2

# float parameter slots
P_DURATION = 0
P_MEAN_IA = 1
P_SIGMA = 2
P_D0 = 3
P_GAMMA = 4
P_LPL0 = 5
P_MARGIN = 6
P_CAPTURE = 7
P_NOISE = 8
P_CONFIRMED = 9
P_ACK_TIMEOUT = 10
P_BACKOFF_MIN = 11
P_BACKOFF_MAX = 12
P_WARMUP_MAX = 13
P_DUTY = 14
P_GW_POWER = 15
P_RX1_DELAY = 16
P_RX2_DELAY = 17
N_FLOAT_PARAMS = 18

# integer parameter slots
Q_N = 0
Q_LIMIT = 1
Q_DELAY = 2
Q_MAX_ATTEMPTS = 3
Q_N_INITIAL = 4
N_INT_PARAMS = 5

TP_DBM = np.array([2.0, 5.0, 8.0, 11.0, 14.0])
N_BUCKETS = 18
GW_SLOTS = 64
STATUS_OK = 0
STATUS_OVERFLOW = 1


@jit
def heap_push(ht, hs, hk, hd, ha, size, t, seq, kind, dev, aux):
    i = size
    ht[i] = t
    hs[i] = seq
    hk[i] = kind
    hd[i] = dev
    ha[i] = aux
    while i > 0:
        p = (i - 1) // 2
        if ht[i] < ht[p] or (ht[i] == ht[p] and hs[i] < hs[p]):
            ht[i], ht[p] = ht[p], ht[i]
            hs[i], hs[p] = hs[p], hs[i]
            hk[i], hk[p] = hk[p], hk[i]
            hd[i], hd[p] = hd[p], hd[i]
            ha[i], ha[p] = ha[p], ha[i]
            i = p
        else:
            break
    return size + 1


@jit
def heap_pop(ht, hs, hk, hd, ha, size):
    t, kind, dev, aux = ht[0], hk[0], hd[0], ha[0]
    size -= 1
    ht[0] = ht[size]
    hs[0] = hs[size]
    hk[0] = hk[size]
    hd[0] = hd[size]
    ha[0] = ha[size]
    i = 0
    while True:
        left = 2 * i + 1
        if left >= size:
            break
        c = left
        right = left + 1
        if right < size and (ht[right] < ht[left] or (ht[right] == ht[left] and hs[right] < hs[left])):
            c = right
        if ht[c] < ht[i] or (ht[c] == ht[i] and hs[c] < hs[i]):
            ht[i], ht[c] = ht[c], ht[i]
            hs[i], hs[c] = hs[c], hs[i]
            hk[i], hk[c] = hk[c], hk[i]
            hd[i], hd[c] = hd[c], hd[i]
            ha[i], ha[c] = ha[c], ha[i]
            i = c
        else:
            break
    return t, kind, dev, aux, size


@jit
def place_core(state, first, n, radius, fixed_distance):
    """Area-uniform positions for devices ``first .. first+n-1``."""
    xy = np.empty((n, 2))
    for k in range(n):
        d = first + k
        r = uniform(state, d)
        theta = 2.0 * math.pi * uniform(state, d)
        dist = fixed_distance if fixed_distance > 0.0 else radius * math.sqrt(r)
        xy[k, 0] = dist * math.cos(theta)
        xy[k, 1] = dist * math.sin(theta)
    return xy


@jit
def _grow_bucket(act):
    bigger = np.empty((act.shape[0], act.shape[1] * 2), dtype=np.int64)
    bigger[:, : act.shape[1]] = act
    return bigger


@jit
def simulate(
    dist,
    rng_state,
    initial_sf,
    initial_tpi,
    pf,
    pi,
    sens,
    req_snr,
    air_up,
    air_dl_empty,
    air_dl_cmd,
    inj_time,
    inj_kind,
    inj_delta,
    inj_a,
    inj_b,
    inj_devs,
    cap_up,
    cap_dl,
    cap_adr,
    cap_inj,
):
    n_dev = dist.shape[0]
    duration = pf[P_DURATION]
    mean_ia = pf[P_MEAN_IA]
    sigma = pf[P_SIGMA]
    d0 = pf[P_D0]
    gamma = pf[P_GAMMA]
    lpl0 = pf[P_LPL0]
    margin = pf[P_MARGIN]
    capture = pf[P_CAPTURE]
    noise = pf[P_NOISE]
    conf_frac = pf[P_CONFIRMED]
    ack_timeout = pf[P_ACK_TIMEOUT]
    bmin = pf[P_BACKOFF_MIN]
    bmax = pf[P_BACKOFF_MAX]
    duty = pf[P_DUTY]
    gw_power = pf[P_GW_POWER]
    rx1_delay = pf[P_RX1_DELAY]
    rx2_delay = pf[P_RX2_DELAY]
    win_n = pi[Q_N]
    limit = pi[Q_LIMIT]
    delay = pi[Q_DELAY]
    max_att = pi[Q_MAX_ATTEMPTS]
    n_initial = pi[Q_N_INITIAL]

    # device state
    offset = np.zeros(n_dev)
    active = np.zeros(n_dev, dtype=np.bool_)
    sf = initial_sf.copy()
    tpi = initial_tpi.copy()
    cnt = np.zeros(n_dev, dtype=np.int64)
    fcnt = np.zeros(n_dev, dtype=np.int64)
    attempt = np.zeros(n_dev, dtype=np.int64)
    confirmed = np.zeros(n_dev, dtype=np.bool_)
    ack_req = np.zeros(n_dev, dtype=np.bool_)
    acked = np.zeros(n_dev, dtype=np.bool_)
    nominal = np.zeros(n_dev)
    duty_next = np.zeros(n_dev)
    pend_sf = np.full(n_dev, -1, dtype=np.int64)
    pend_tpi = np.full(n_dev, -1, dtype=np.int64)
    win = np.zeros((n_dev, win_n))
    win_len = np.zeros(n_dev, dtype=np.int64)
    win_pos = np.zeros(n_dev, dtype=np.int64)
    rx_count = np.zeros(n_dev, dtype=np.int64)
    evals = np.zeros(n_dev, dtype=np.int64)

    # trace columns
    up_t = np.empty(cap_up)
    up_end = np.empty(cap_up)
    up_dev = np.empty(cap_up, dtype=np.int32)
    up_fcnt = np.empty(cap_up, dtype=np.int32)
    up_att = np.empty(cap_up, dtype=np.int8)
    up_sf = np.empty(cap_up, dtype=np.int8)
    up_tpi = np.empty(cap_up, dtype=np.int8)
    up_ch = np.empty(cap_up, dtype=np.int8)
    up_reason = np.empty(cap_up, dtype=np.int8)
    up_flags = np.empty(cap_up, dtype=np.int8)
    up_rx = np.empty(cap_up)
    up_interf = np.empty(cap_up)
    dl_t = np.empty(cap_dl)
    dl_end = np.empty(cap_dl)
    dl_dev = np.empty(cap_dl, dtype=np.int32)
    dl_window = np.empty(cap_dl, dtype=np.int8)
    dl_sf = np.empty(cap_dl, dtype=np.int8)
    dl_ack = np.empty(cap_dl, dtype=np.bool_)
    dl_cmd_sf = np.empty(cap_dl, dtype=np.int8)
    dl_cmd_tpi = np.empty(cap_dl, dtype=np.int8)
    dl_ed_rx = np.empty(cap_dl, dtype=np.bool_)
    dl_up = np.empty(cap_dl, dtype=np.int64)
    ad_t = np.empty(cap_adr)
    ad_dev = np.empty(cap_adr, dtype=np.int32)
    ad_kind = np.empty(cap_adr, dtype=np.int8)
    ad_sf = np.empty(cap_adr, dtype=np.int8)
    ad_tpi = np.empty(cap_adr, dtype=np.int8)
    in_t = np.empty(cap_inj)
    in_dev = np.empty(cap_inj, dtype=np.int32)
    in_kind = np.empty(cap_inj, dtype=np.int8)
    in_delta = np.empty(cap_inj)
    n_up = 0
    n_dl = 0
    n_ad = 0
    n_in = 0
    status = STATUS_OK

    # receiver state: active uplinks per (channel, sf) and gateway tx intervals
    act = np.empty((N_BUCKETS, 16), dtype=np.int64)
    act_n = np.zeros(N_BUCKETS, dtype=np.int64)
    gw_s = np.empty(GW_SLOTS)
    gw_e = np.empty(GW_SLOTS)
    gw_n = 0
    gw_clear = np.full(2, -1.0)

    n_inj = inj_time.shape[0]
    hcap = 4 * n_dev + n_inj + 16
    ht = np.empty(hcap)
    hs = np.empty(hcap, dtype=np.int64)
    hk = np.empty(hcap, dtype=np.int64)
    hd = np.empty(hcap, dtype=np.int64)
    ha = np.empty(hcap, dtype=np.int64)
    hn = 0
    seq = 0

    warmup_pending = False
    warmup_done = False
    bg_seen = 0
    bg_evald = 0

    for d in range(n_initial):
        active[d] = True
        nominal[d] = 0.0
        if n_in < cap_inj:
            in_t[n_in] = 0.0
            in_dev[n_in] = d
            in_kind[n_in] = INJ_START
            in_delta[n_in] = 0.0
            n_in += 1
        nominal[d] += exponential(rng_state, d, mean_ia)
        if nominal[d] < duration:
            hn = heap_push(ht, hs, hk, hd, ha, hn, nominal[d], seq, EV_TX_START, d, 1)
            seq += 1
    for k in range(n_inj):
        if inj_time[k] < 0.0:
            warmup_pending = True
        elif inj_time[k] <= duration:
            hn = heap_push(ht, hs, hk, hd, ha, hn, inj_time[k], seq, EV_INJECT, -1, k)
            seq += 1
    if warmup_pending:
        hn = heap_push(ht, hs, hk, hd, ha, hn, min(pf[P_WARMUP_MAX], duration), seq, EV_WARMUP_CAP, -1, 0)
        seq += 1

    while hn > 0:
        if n_up >= cap_up or n_dl >= cap_dl or n_ad >= cap_adr - 2 or n_in >= cap_inj:
            status = STATUS_OVERFLOW
            break
        now, kind, d, aux, hn = heap_pop(ht, hs, hk, hd, ha, hn)

        if kind == EV_TX_START:
            if aux == 1:
                fcnt[d] += 1
                attempt[d] = 1
                c, req, action, nsf, ntpi = ed_step_core(cnt[d], sf[d], tpi[d], limit, delay)
                cnt[d] = c
                sf[d] = nsf
                tpi[d] = ntpi
                ack_req[d] = req
                if action != 0:
                    ad_t[n_ad] = now
                    ad_dev[n_ad] = d
                    ad_kind[n_ad] = action
                    ad_sf[n_ad] = nsf
                    ad_tpi[n_ad] = ntpi
                    n_ad += 1
                confirmed[d] = uniform(rng_state, d) < conf_frac
                acked[d] = False
            ch = min(int(uniform(rng_state, d) * 3.0), 2)
            shadow = normal(rng_state, d) * sigma if sigma > 0.0 else 0.0
            loss = path_loss_core(max(dist[d], d0), d0, gamma, lpl0, shadow, offset[d])
            s = sf[d]
            a = air_up[s - 7]
            u = n_up
            n_up += 1
            up_t[u] = now
            up_end[u] = now + a
            up_dev[u] = d
            up_fcnt[u] = fcnt[d]
            up_att[u] = attempt[d]
            up_sf[u] = s
            up_tpi[u] = tpi[d]
            up_ch[u] = ch
            up_reason[u] = -1
            flags = 0
            if confirmed[d]:
                flags |= FLAG_CONFIRMED
            if ack_req[d]:
                flags |= FLAG_ACK_REQ
            up_flags[u] = flags
            rx = TP_DBM[tpi[d]] - loss
            up_rx[u] = rx
            up_interf[u] = -np.inf
            b = ch * 6 + (s - 7)
            for k in range(act_n[b]):
                j = act[b, k]
                if up_end[j] > now:
                    if up_rx[j] > up_interf[u]:
                        up_interf[u] = up_rx[j]
                    if rx > up_interf[j]:
                        up_interf[j] = rx
            if act_n[b] == act.shape[1]:
                act = _grow_bucket(act)
            act[b, act_n[b]] = u
            act_n[b] += 1
            duty_next[d] = off_time_end(now + a, a, duty)
            hn = heap_push(ht, hs, hk, hd, ha, hn, now + a, seq, EV_TX_END, d, u)
            seq += 1

        elif kind == EV_TX_END:
            u = aux
            s = int(up_sf[u])
            b = int(up_ch[u]) * 6 + (s - 7)
            for k in range(act_n[b]):
                if act[b, k] == u:
                    act[b, k] = act[b, act_n[b] - 1]
                    act_n[b] -= 1
                    break
            # forget gateway transmissions that can no longer overlap anything
            keep = 0
            for k in range(gw_n):
                if gw_e[k] > now - 60.0:
                    gw_s[keep] = gw_s[k]
                    gw_e[keep] = gw_e[k]
                    keep += 1
            gw_n = keep
            busy = intervals_overlap(up_t[u], now, gw_s, gw_e, gw_n)
            reason = reception_reason_core(up_rx[u], sens[s - 7], busy, up_interf[u], capture)
            up_reason[u] = reason
            if reason == 0:
                snr = up_rx[u] - noise
                win[d, win_pos[d]] = snr
                win_pos[d] = (win_pos[d] + 1) % win_n
                if win_len[d] < win_n:
                    win_len[d] += 1
                rx_count[d] += 1
                if d < n_initial and rx_count[d] == 1:
                    bg_seen += 1
                if win_len[d] == win_n:
                    evals[d] += 1
                    if d < n_initial and evals[d] == 1:
                        bg_evald += 1
                    snr_max = win[d, 0]
                    for k in range(1, win_n):
                        if win[d, k] > snr_max:
                            snr_max = win[d, k]
                    cur_tpi = int(up_tpi[u])
                    nsf, ntpi = net_step_core(snr_max, s, cur_tpi, req_snr[s - 7], margin)
                    if nsf != s or ntpi != cur_tpi:
                        pend_sf[d] = nsf
                        pend_tpi[d] = ntpi
                        win_len[d] = 0
                        win_pos[d] = 0
                        ad_t[n_ad] = now
                        ad_dev[n_ad] = d
                        ad_kind[n_ad] = ADR_NET_COMMAND
                        ad_sf[n_ad] = nsf
                        ad_tpi[n_ad] = ntpi
                        n_ad += 1
                is_conf = (up_flags[u] & FLAG_CONFIRMED) != 0
                is_req = (up_flags[u] & FLAG_ACK_REQ) != 0
                has_cmd = pend_sf[d] >= 0
                if is_conf or is_req or has_cmd:
                    if has_cmd:
                        a1 = air_dl_cmd[s - 7]
                        a2 = air_dl_cmd[5]
                    else:
                        a1 = air_dl_empty[s - 7]
                        a2 = air_dl_empty[5]
                    rx1 = now + rx1_delay
                    rx2 = now + rx2_delay
                    w = choose_window_core(rx1, a1, rx2, a2, gw_clear[0], gw_clear[1], gw_s, gw_e, gw_n)
                    k = n_dl
                    n_dl += 1
                    dl_dev[k] = d
                    dl_window[k] = w
                    dl_ack[k] = is_conf
                    dl_cmd_sf[k] = pend_sf[d]
                    dl_cmd_tpi[k] = pend_tpi[d]
                    dl_up[k] = u
                    if w == 0:
                        dl_t[k] = rx1
                        dl_end[k] = rx1
                        dl_sf[k] = -1
                        dl_ed_rx[k] = False
                    else:
                        if w == 1:
                            t_dl = rx1
                            a_dl = a1
                            dsf = s
                        else:
                            t_dl = rx2
                            a_dl = a2
                            dsf = 12
                        dl_t[k] = t_dl
                        dl_end[k] = t_dl + a_dl
                        dl_sf[k] = dsf
                        gw_clear[w - 1] = off_time_end(t_dl + a_dl, a_dl, duty)
                        if gw_n == GW_SLOTS:
                            for m in range(GW_SLOTS - 1):
                                gw_s[m] = gw_s[m + 1]
                                gw_e[m] = gw_e[m + 1]
                            gw_n -= 1
                        gw_s[gw_n] = t_dl
                        gw_e[gw_n] = t_dl + a_dl
                        gw_n += 1
                        shadow = normal(rng_state, d) * sigma if sigma > 0.0 else 0.0
                        loss = path_loss_core(max(dist[d], d0), d0, gamma, lpl0, shadow, offset[d])
                        dl_ed_rx[k] = gw_power - loss >= sens[dsf - 7]
                        pend_sf[d] = -1
                        pend_tpi[d] = -1
                        hn = heap_push(ht, hs, hk, hd, ha, hn, t_dl + a_dl, seq, EV_DL_END, d, k)
                        seq += 1
                if warmup_pending and not warmup_done and bg_seen > 0 and bg_evald == bg_seen:
                    warmup_done = True
                    for k in range(n_inj):
                        if inj_time[k] < 0.0:
                            hn = heap_push(ht, hs, hk, hd, ha, hn, now, seq, EV_INJECT, -1, k)
                            seq += 1
            if (up_flags[u] & FLAG_CONFIRMED) != 0:
                hn = heap_push(ht, hs, hk, hd, ha, hn, now + ack_timeout, seq, EV_ACK_TIMEOUT, d, fcnt[d])
                seq += 1
            else:
                nominal[d] += exponential(rng_state, d, mean_ia)
                ts = max(nominal[d], duty_next[d], now)
                if ts < duration:
                    hn = heap_push(ht, hs, hk, hd, ha, hn, ts, seq, EV_TX_START, d, 1)
                    seq += 1

        elif kind == EV_DL_END:
            k = aux
            if dl_ed_rx[k]:
                cnt[d] = 0
                if dl_cmd_sf[k] >= 0:
                    sf[d] = dl_cmd_sf[k]
                    tpi[d] = dl_cmd_tpi[k]
                    ad_t[n_ad] = now
                    ad_dev[n_ad] = d
                    ad_kind[n_ad] = ADR_APPLIED
                    ad_sf[n_ad] = dl_cmd_sf[k]
                    ad_tpi[n_ad] = dl_cmd_tpi[k]
                    n_ad += 1
                if dl_ack[k]:
                    acked[d] = True

        elif kind == EV_ACK_TIMEOUT:
            if not acked[d] and attempt[d] < max_att:
                attempt[d] += 1
                tr = now + bmin + (bmax - bmin) * uniform(rng_state, d)
                tr = max(tr, duty_next[d])
                hn = heap_push(ht, hs, hk, hd, ha, hn, tr, seq, EV_TX_START, d, attempt[d])
                seq += 1
            else:
                nominal[d] += exponential(rng_state, d, mean_ia)
                ts = max(nominal[d], duty_next[d], now)
                if ts < duration:
                    hn = heap_push(ht, hs, hk, hd, ha, hn, ts, seq, EV_TX_START, d, 1)
                    seq += 1

        elif kind == EV_INJECT:
            k = aux
            if inj_kind[k] == INJ_LINK:
                lo = inj_a[k]
                hi = inj_b[k]
                for m in range(lo, hi):
                    dd = inj_devs[m]
                    if not active[dd]:
                        continue
                    if n_in >= cap_inj:
                        status = STATUS_OVERFLOW
                        break
                    offset[dd] += inj_delta[k]
                    in_t[n_in] = now
                    in_dev[n_in] = dd
                    in_kind[n_in] = INJ_LINK
                    in_delta[n_in] = inj_delta[k]
                    n_in += 1
            else:
                for dd in range(inj_a[k], inj_b[k]):
                    if n_in >= cap_inj:
                        status = STATUS_OVERFLOW
                        break
                    active[dd] = True
                    nominal[dd] = now
                    in_t[n_in] = now
                    in_dev[n_in] = dd
                    in_kind[n_in] = INJ_ADD
                    in_delta[n_in] = 0.0
                    n_in += 1
                    nominal[dd] += exponential(rng_state, dd, mean_ia)
                    if nominal[dd] < duration:
                        hn = heap_push(ht, hs, hk, hd, ha, hn, nominal[dd], seq, EV_TX_START, dd, 1)
                        seq += 1
            if status != STATUS_OK:
                break

        elif kind == EV_WARMUP_CAP:
            if warmup_pending and not warmup_done:
                warmup_done = True
                for k in range(n_inj):
                    if inj_time[k] < 0.0:
                        hn = heap_push(ht, hs, hk, hd, ha, hn, now, seq, EV_INJECT, -1, k)
                        seq += 1

    return (
        status,
        up_t[:n_up],
        up_end[:n_up],
        up_dev[:n_up],
        up_fcnt[:n_up],
        up_att[:n_up],
        up_sf[:n_up],
        up_tpi[:n_up],
        up_ch[:n_up],
        up_reason[:n_up],
        up_flags[:n_up],
        up_rx[:n_up],
        up_interf[:n_up],
        dl_t[:n_dl],
        dl_end[:n_dl],
        dl_dev[:n_dl],
        dl_window[:n_dl],
        dl_sf[:n_dl],
        dl_ack[:n_dl],
        dl_cmd_sf[:n_dl],
        dl_cmd_tpi[:n_dl],
        dl_ed_rx[:n_dl],
        dl_up[:n_dl],
        ad_t[:n_ad],
        ad_dev[:n_ad],
        ad_kind[:n_ad],
        ad_sf[:n_ad],
        ad_tpi[:n_ad],
        in_t[:n_in],
        in_dev[:n_in],
        in_kind[:n_in],
        in_delta[:n_in],
    )
