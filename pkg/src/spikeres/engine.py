"""Array-level simulation core: Euler LIF steps, exponential synapses, trace plasticity.

Everything here works on compact index arrays; id bookkeeping lives one layer up.
Recurrent spikes are delivered at the step after emission, external encoder
spikes within their own step. Per step the plasticity order is: decay traces,
deliver spikes, apply weight updates (reading pre-bump traces), bump traces.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError


@dataclass
class StdpArrays:
    """Per-synapse plasticity parameters and trace state, one entry per synapse."""

    gain_plus: np.ndarray
    gain_minus: np.ndarray
    trace_plus: np.ndarray
    trace_minus: np.ndarray
    decay_pre: np.ndarray
    decay_post: np.ndarray
    w_min: np.ndarray
    w_max: np.ndarray
    t_pre: np.ndarray = field(default=None)
    t_post: np.ndarray = field(default=None)

    def __post_init__(self):
        n = len(self.gain_plus)
        if self.t_pre is None:
            self.t_pre = np.zeros(n)
        if self.t_post is None:
            self.t_post = np.zeros(n)


def _csr(order_key: np.ndarray, n_groups: int) -> tuple[np.ndarray, np.ndarray]:
    """Sort synapse indices by a grouping key and return (order, group pointers)."""
    order = np.argsort(order_key, kind="stable")
    ptr = np.zeros(n_groups + 1, dtype=np.int64)
    np.add.at(ptr[1:], order_key, 1)
    np.cumsum(ptr, out=ptr)
    return order.astype(np.int64), ptr


@dataclass
class CompiledNetwork:
    """A network flattened to arrays for the step loop. Mutable weight state."""

    n: int
    dt: float
    tau_m: np.ndarray
    r_m: np.ndarray
    v_rest: np.ndarray
    v_th: np.ndarray
    v_reset: np.ndarray
    refrac: np.ndarray
    v_floor: np.ndarray
    # recurrent synapses in canonical (pre, post) sorted order
    syn_pre: np.ndarray
    syn_post: np.ndarray
    syn_wmag: np.ndarray
    syn_sign: np.ndarray
    # encoder synapses in canonical (encoder, post) sorted order
    n_enc: int
    in_enc: np.ndarray
    in_post: np.ndarray
    in_w: np.ndarray
    tau_syn: float = 5.0
    stdp: StdpArrays | None = None
    stdp_in: StdpArrays | None = None

    def __post_init__(self):
        if self.dt <= 0.0:
            raise ConfigurationError("dt must be positive")
        if self.n > 0 and self.dt > np.min(self.tau_m) / 10.0 + 1e-12:
            raise ConfigurationError(
                f"dt={self.dt} violates the stability guard dt <= min(tau_m)/10 = {np.min(self.tau_m) / 10.0}"
            )
        self._by_pre, self._ptr_pre = _csr(self.syn_pre, self.n)
        self._by_post, self._ptr_post = _csr(self.syn_post, self.n)
        self._in_by_enc, self._in_ptr_enc = _csr(self.in_enc, max(self.n_enc, 1))
        self._in_by_post, self._in_ptr_post = _csr(self.in_post, self.n)
        self._syn_decay = float(np.exp(-self.dt / self.tau_syn))

    def out_slice(self, j: int) -> np.ndarray:
        return self._by_pre[self._ptr_pre[j] : self._ptr_pre[j + 1]]

    def in_slice(self, i: int) -> np.ndarray:
        return self._by_post[self._ptr_post[i] : self._ptr_post[i + 1]]

    def enc_slice(self, e: int) -> np.ndarray:
        return self._in_by_enc[self._in_ptr_enc[e] : self._in_ptr_enc[e + 1]]

    def enc_in_slice(self, i: int) -> np.ndarray:
        return self._in_by_post[self._in_ptr_post[i] : self._in_ptr_post[i + 1]]


def run_steps(
    net: CompiledNetwork,
    v: np.ndarray,
    syn_current: np.ndarray,
    refrac_until: np.ndarray,
    t_start: float,
    n_steps: int,
    enc_counts: np.ndarray | None = None,
    external_current: np.ndarray | None = None,
    pending: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Advance the network in place for n_steps.

    Args:
        v, syn_current, refrac_until: state arrays, mutated in place.
        enc_counts: (n_steps, n_enc) integer spike counts per encoder per step.
        external_current: constant (n,) or per-step (n_steps, n) direct current.
        pending: indices of neurons that spiked in the step before t_start.

    Returns:
        (spike_idx, spike_t, pending) with spikes stamped at each step's end.
    """
    dt = net.dt
    plastic = net.stdp is not None
    plastic_in = net.stdp_in is not None
    spike_idx: list[np.ndarray] = []
    spike_t: list[np.ndarray] = []
    if pending is None:
        pending = np.empty(0, dtype=np.int64)
    ext_per_step = external_current is not None and external_current.ndim == 2

    for k in range(n_steps):
        t_end = t_start + (k + 1) * dt
        syn_current *= net._syn_decay
        for j in pending:
            sl = net.out_slice(j)
            syn_current[net.syn_post[sl]] += net.syn_sign[sl] * net.syn_wmag[sl]
        enc_fired = ()
        if enc_counts is not None:
            row = enc_counts[k]
            enc_fired = np.nonzero(row)[0]
            for e in enc_fired:
                sl = net.enc_slice(e)
                syn_current[net.in_post[sl]] += net.in_w[sl] * row[e]

        if plastic:
            net.stdp.t_pre *= net.stdp.decay_pre
            net.stdp.t_post *= net.stdp.decay_post
        if plastic_in:
            net.stdp_in.t_pre *= net.stdp_in.decay_pre
            net.stdp_in.t_post *= net.stdp_in.decay_post

        total_i = syn_current
        if external_current is not None:
            total_i = syn_current + (external_current[k] if ext_per_step else external_current)
        # hold every step whose end still lies inside the refractory window
        active = t_end > refrac_until + dt * 1e-9
        dv = dt * (net.v_rest + net.r_m * total_i - v) / net.tau_m
        v[active] += dv[active]
        np.maximum(v, net.v_floor, out=v)

        fired = np.nonzero(active & (v > net.v_th))[0]
        if fired.size:
            v[fired] = net.v_reset[fired]
            refrac_until[fired] = t_end + net.refrac[fired]
            spike_idx.append(fired)
            spike_t.append(np.full(fired.size, t_end))

        if plastic:
            s = net.stdp
            for i in fired:
                sl = net.in_slice(i)
                net.syn_wmag[sl] += s.gain_plus[sl] * s.t_pre[sl]
            for j in fired:
                sl = net.out_slice(j)
                net.syn_wmag[sl] -= s.gain_minus[sl] * s.t_post[sl]
            if fired.size:
                np.clip(net.syn_wmag, s.w_min, s.w_max, out=net.syn_wmag)
            for j in fired:
                sl = net.out_slice(j)
                s.t_pre[sl] += s.trace_plus[sl]
            for i in fired:
                sl = net.in_slice(i)
                s.t_post[sl] += s.trace_minus[sl]
        if plastic_in:
            s = net.stdp_in
            for i in fired:
                sl = net.enc_in_slice(i)
                net.in_w[sl] += s.gain_plus[sl] * s.t_pre[sl]
            for e in enc_fired:
                sl = net.enc_slice(e)
                net.in_w[sl] -= s.gain_minus[sl] * s.t_post[sl] * enc_counts[k][e]
            if fired.size or len(enc_fired):
                np.clip(net.in_w, s.w_min, s.w_max, out=net.in_w)
            for e in enc_fired:
                sl = net.enc_slice(e)
                s.t_pre[sl] += s.trace_plus[sl] * enc_counts[k][e]
            for i in fired:
                sl = net.enc_in_slice(i)
                s.t_post[sl] += s.trace_minus[sl]

        pending = fired

    if spike_idx:
        return np.concatenate(spike_idx), np.concatenate(spike_t), pending
    return np.empty(0, dtype=np.int64), np.empty(0), pending
