"""Probabilistic YIN: threshold-distribution candidates plus HMM smoothing.

Instead of one fixed YIN threshold, a prior over a grid of thresholds
is pushed through the picking rule; every lag some threshold would have
picked becomes a pitch candidate whose probability is the prior mass of
the thresholds that picked it.  A two-layer HMM (one voiced and one
unvoiced state per lattice pitch) then decodes the candidate stream
into a single smooth track.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import beta as beta_dist

from .errors import GridMismatchError
from .spectral import AnalysisConfig, frame_signal, pitch_lattice
from .tracks import F0Track
from .yin import cmndf_frames, difference_frames, local_minima, parabolic_refine

# Observation floor: keeps zero-probability states decodable without
# disturbing any non-degenerate comparison.
_OBS_FLOOR = 1e-12


@dataclass(frozen=True)
class PitchSettings:
    """Configuration of the candidate prior, pitch lattice and HMM."""

    f_min: float = 55.0
    f_max: float = 1760.0
    resolution_cents: float = 20.0
    max_slew_cents: float = 80.0
    switch_prob: float = 0.01
    n_thresholds: int = 100
    prior_alpha: float = 2.0
    prior_beta: float = 18.0

    def __post_init__(self) -> None:
        if not 0.0 < self.f_min < self.f_max:
            raise ValueError("need 0 < f_min < f_max")
        if self.n_thresholds < 1:
            raise ValueError("need at least one threshold")
        if not 0.0 <= self.switch_prob <= 1.0:
            raise ValueError("switch_prob must lie in [0, 1]")


@dataclass(frozen=True)
class PitchCandidate:
    """One voiced hypothesis for a frame."""

    frequency: float
    probability: float
    lag: float


def threshold_prior(
    n_thresholds: int = 100, alpha: float = 2.0, beta: float = 18.0
) -> tuple[np.ndarray, np.ndarray]:
    """Uniform threshold grid over (0, 1] with Beta-shaped weights.

    The default Beta(2, 18) centers its mass at the classic YIN
    threshold of 0.1 while keeping spread over stricter and looser
    choices.
    """
    thresholds = np.arange(1, n_thresholds + 1) / n_thresholds
    weights = beta_dist.pdf(thresholds, alpha, beta)
    total = weights.sum()
    if total <= 0.0:
        raise ValueError("threshold prior has zero mass on the grid")
    return thresholds, weights / total


def pyin_candidates(
    d_norm: np.ndarray,
    thresholds: np.ndarray,
    weights: np.ndarray,
    sample_rate: int,
    lag_min: int = 1,
    lag_max: int | None = None,
) -> list[PitchCandidate]:
    """Pitch candidates of one frame under a threshold prior.

    For every threshold s in the grid the classic pick selects the
    smallest local minimum of ``d_norm`` below s; that lag accumulates
    the threshold's prior weight.  Thresholds that select nothing leave
    their mass to the unvoiced hypothesis (1 - sum of candidate
    probabilities).

    Scanning minima in lag order, a lag can only be picked while its
    depth undercuts every earlier minimum, so lag i collects the mass
    of thresholds in (depth[i], min(depth[:i])].
    """
    minima = local_minima(d_norm, lag_min, lag_max)
    if len(minima) == 0:
        return []
    cum_weights = np.concatenate([[0.0], np.cumsum(weights)])
    candidates: list[PitchCandidate] = []
    best_depth = np.inf
    for tau in minima:
        depth = float(d_norm[tau])
        lo = int(np.searchsorted(thresholds, depth, side="right"))
        hi = (
            len(thresholds)
            if not np.isfinite(best_depth)
            else int(np.searchsorted(thresholds, best_depth, side="right"))
        )
        mass = cum_weights[hi] - cum_weights[lo]
        if mass > 0.0:
            lag = parabolic_refine(d_norm, int(tau))
            candidates.append(PitchCandidate(sample_rate / lag, float(mass), lag))
        best_depth = min(best_depth, depth)
    return candidates


@dataclass(frozen=True)
class HmmModel:
    """Pitch-lattice HMM with mirrored voiced/unvoiced states.

    States 0..n-1 are the voiced lattice pitches, states n..2n-1 their
    unvoiced twins.  The transition factorizes into a triangular pitch
    kernel (row-normalized at the lattice edges) times a voicing
    stay/switch factor, so every row sums to one.
    """

    pitch_hz: np.ndarray
    resolution_cents: float
    slew_weights: np.ndarray
    switch_prob: float

    @property
    def n_bins(self) -> int:
        return len(self.pitch_hz)

    @property
    def n_states(self) -> int:
        return 2 * self.n_bins

    @property
    def slew_halfwidth(self) -> int:
        return (len(self.slew_weights) - 1) // 2

    def nearest_bin(self, frequency: float) -> int:
        step = round(1200.0 * math.log2(frequency / self.pitch_hz[0]) / self.resolution_cents)
        return int(np.clip(step, 0, self.n_bins - 1))

    def pitch_kernel(self) -> np.ndarray:
        """(n, n) row-normalized pitch transition kernel."""
        n = self.n_bins
        wb = self.slew_halfwidth
        kernel = np.zeros((n, n))
        for k, delta in enumerate(range(-wb, wb + 1)):
            idx = np.arange(max(0, -delta), min(n, n - delta))
            kernel[idx, idx + delta] = self.slew_weights[k]
        return kernel / kernel.sum(axis=1, keepdims=True)

    def transition_matrix(self) -> np.ndarray:
        """Dense (2n, 2n) transition matrix; rows sum to 1."""
        kernel = self.pitch_kernel()
        stay, switch = 1.0 - self.switch_prob, self.switch_prob
        top = np.hstack([kernel * stay, kernel * switch])
        bottom = np.hstack([kernel * switch, kernel * stay])
        return np.vstack([top, bottom])

    def observation_probs(self, candidates) -> np.ndarray:
        """(2n,) observation vector for one frame's candidate set.

        Candidate mass lands on the nearest voiced lattice state; the
        residual unvoiced mass spreads uniformly over unvoiced states.
        """
        n = self.n_bins
        obs = np.zeros(2 * n)
        total = 0.0
        for cand in candidates:
            obs[self.nearest_bin(cand.frequency)] += cand.probability
            total += cand.probability
        obs[n:] = max(0.0, 1.0 - total) / n
        return obs


def build_hmm(
    f_min: float = 55.0,
    f_max: float = 1760.0,
    resolution_cents: float = 20.0,
    max_slew_cents: float = 80.0,
    switch_prob: float = 0.01,
) -> HmmModel:
    """Construct the pitch-tracking HMM.

    The pitch lattice is log-spaced from ``f_min`` toward ``f_max``;
    the transition kernel is a triangular window over pitch distances
    up to ``max_slew_cents`` per frame.
    """
    lattice = pitch_lattice(f_min, f_max, resolution_cents)
    if max_slew_cents < 0.0:
        raise ValueError("max_slew_cents must be >= 0")
    if not 0.0 <= switch_prob <= 1.0:
        raise ValueError("switch_prob must lie in [0, 1]")
    wb = int(round(max_slew_cents / resolution_cents))
    weights = (wb + 1.0) - np.abs(np.arange(-wb, wb + 1, dtype=np.float64))
    return HmmModel(lattice, float(resolution_cents), weights, float(switch_prob))


def viterbi_path(log_init: np.ndarray, log_trans: np.ndarray, log_obs: np.ndarray) -> np.ndarray:
    """Maximum a posteriori state path of a generic HMM, in log space.

    Args:
        log_init: (S,) initial log-probabilities.
        log_obs: (T, S) per-frame observation log-likelihoods.
        log_trans: (S, S) log transition matrix, source row to target column.

    Returns:
        (T,) int array of state indices.
    """
    log_obs = np.atleast_2d(log_obs)
    n_frames, n_states = log_obs.shape
    back = np.zeros((n_frames, n_states), dtype=np.int32)
    score = log_init + log_obs[0]
    for t in range(1, n_frames):
        hop = score[:, None] + log_trans
        back[t] = np.argmax(hop, axis=0)
        score = hop[back[t], np.arange(n_states)] + log_obs[t]
    path = np.empty(n_frames, dtype=np.int64)
    path[-1] = int(np.argmax(score))
    for t in range(n_frames - 1, 0, -1):
        path[t - 1] = back[t, path[t]]
    return path


def _decode_states(model: HmmModel, obs: np.ndarray) -> np.ndarray:
    """Banded Viterbi over the mirrored-lattice model.

    Exploits the +-slew_halfwidth band of the pitch kernel: each target
    state has at most 2*(2*wb + 1) predecessors, so one frame costs
    O(n * wb) instead of O(n^2).  Tie-breaking matches the dense
    :func:`viterbi_path` (smallest source state wins).
    """
    n = model.n_bins
    wb = model.slew_halfwidth
    n_frames = obs.shape[0]
    with np.errstate(divide="ignore"):
        log_obs = np.log(np.maximum(obs, _OBS_FLOOR))
        log_w = np.log(model.slew_weights)
        log_stay = np.log(1.0 - model.switch_prob)
        log_switch = np.log(model.switch_prob)
        # per-source normalization of the truncated kernel at the edges
        norm = np.convolve(np.ones(n), model.slew_weights, mode="same")
        log_norm = np.log(norm)

    # deltas descending so ties resolve to the smallest source bin,
    # exactly like argmax over the dense matrix
    deltas = np.arange(wb, -wb - 1, -1)
    n_shift = len(deltas)

    def shifted(src: np.ndarray) -> np.ndarray:
        """(n_shift, n): row k holds src[j - deltas[k]] at position j."""
        out = np.full((n_shift, n), -np.inf)
        for k, d in enumerate(deltas):
            if d >= 0:
                out[k, d:] = src[: n - d] if d else src
            else:
                out[k, :d] = src[-d:]
        return out

    back = np.zeros((n_frames, 2 * n), dtype=np.int32)
    score_v = -math.log(2 * n) + log_obs[0, :n]
    score_u = -math.log(2 * n) + log_obs[0, n:]
    kernel_col = log_w[::-1, None]  # log_w indexed by delta, aligned with deltas

    for t in range(1, n_frames):
        from_v = shifted(score_v - log_norm) + kernel_col
        from_u = shifted(score_u - log_norm) + kernel_col
        src_bin = np.arange(n)[None, :] - deltas[:, None]

        for target, stack_a, stack_b in (
            (0, from_v + log_stay, from_u + log_switch),   # into voiced
            (1, from_v + log_switch, from_u + log_stay),   # into unvoiced
        ):
            stack = np.vstack([stack_a, stack_b])
            pick = np.argmax(stack, axis=0)
            cols = np.arange(n)
            source = src_bin[pick % n_shift, cols] + (pick >= n_shift) * n
            back[t, target * n + cols] = source
            best = stack[pick, cols]
            if target == 0:
                new_v = best + log_obs[t, :n]
            else:
                new_u = best + log_obs[t, n:]
        score_v, score_u = new_v, new_u

    full = np.concatenate([score_v, score_u])
    path = np.empty(n_frames, dtype=np.int64)
    path[-1] = int(np.argmax(full))
    for t in range(n_frames - 1, 0, -1):
        path[t - 1] = back[t, path[t]]
    return path


def viterbi_decode(observations, model: HmmModel, times: np.ndarray) -> F0Track:
    """Decode per-frame candidate sets into an F0 track.

    Voiced states map to their lattice pitch, refined to the nearest
    same-frame candidate when one lies within half a lattice step; the
    per-frame voicing probability is the total candidate mass.
    """
    n_frames = len(observations)
    if n_frames == 0:
        raise ValueError("need at least one frame of observations")
    obs = np.stack([model.observation_probs(frame) for frame in observations])
    states = _decode_states(model, obs)

    half_step = model.resolution_cents / 2.0
    values = np.full(n_frames, np.nan)
    voicing = np.empty(n_frames)
    for t, frame in enumerate(observations):
        voicing[t] = min(1.0, sum(c.probability for c in frame))
        state = states[t]
        if state >= model.n_bins:
            continue
        lattice_hz = model.pitch_hz[state]
        best_cents = np.inf
        value = lattice_hz
        for cand in frame:
            dist = abs(1200.0 * math.log2(cand.frequency / lattice_hz))
            if dist <= half_step and dist < best_cents:
                best_cents = dist
                value = cand.frequency
        values[t] = value
    return F0Track(times, values, voicing)


def pyin_track(buf, config: AnalysisConfig | None = None, settings: PitchSettings | None = None) -> F0Track:
    """End-to-end PYIN on a canonicalized buffer.

    Frames, hop and timestamps are identical to :func:`pitchfuse.spectral.stft`
    with the same config, so the output shares the STFT time grid.
    """
    config = config or AnalysisConfig()
    settings = settings or PitchSettings()
    if buf.sample_rate != config.sample_rate:
        raise GridMismatchError(
            f"buffer rate {buf.sample_rate} != config rate {config.sample_rate}; "
            "canonicalize the buffer first"
        )
    frames = frame_signal(buf.samples, config)
    tau_max = config.window_size // 2
    corr_window = config.window_size - tau_max
    d = difference_frames(frames, tau_max, corr_window)
    d_norm = cmndf_frames(d)

    sr = config.sample_rate
    lag_min = max(1, math.ceil(sr / settings.f_max))
    lag_max = min(tau_max - 1, math.floor(sr / settings.f_min))
    thresholds, weights = threshold_prior(
        settings.n_thresholds, settings.prior_alpha, settings.prior_beta
    )
    candidates = [
        pyin_candidates(row, thresholds, weights, sr, lag_min, lag_max) for row in d_norm
    ]
    model = build_hmm(
        settings.f_min,
        settings.f_max,
        settings.resolution_cents,
        settings.max_slew_cents,
        settings.switch_prob,
    )
    times = config.frame_times(len(candidates))
    return viterbi_decode(candidates, model, times)
