use serde::{Deserialize, Serialize};

use super::histogram::bin_of;
use super::EntropyError;
use crate::turbo_sim::{hard_bit, Trellis};

/// Smallest likelihood handed to the recursion, so that a vector of
/// contradicted states stays normalizable.
pub(crate) const LIKELIHOOD_FLOOR: f64 = 1e-150;

/// Observation model of a soft value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Channel {
    /// Antipodal signalling (`0 -> +1`) with additive Gaussian noise.
    Gaussian { sigma: f64 },
    /// Hard decisions (negative means 1) through a binary symmetric channel.
    Bsc { tau: f64 },
}

impl Channel {
    pub fn validate(&self) -> Result<(), EntropyError> {
        match *self {
            Channel::Gaussian { sigma } if sigma.is_finite() && sigma > 0.0 => Ok(()),
            Channel::Bsc { tau } if (0.0..=0.5).contains(&tau) => Ok(()),
            _ => Err(EntropyError::InvalidParameter(format!("bad channel {self:?}"))),
        }
    }

    /// `[P(obs | 0), P(obs | 1)]` up to a common factor; `None` is an erasure.
    pub fn likelihood(&self, obs: Option<f64>) -> [f64; 2] {
        let Some(y) = obs else { return [1.0, 1.0] };
        let [l0, l1] = match *self {
            Channel::Gaussian { sigma } => {
                let l0 = 1.0 / (1.0 + (-2.0 * y / (sigma * sigma)).exp());
                [l0, 1.0 / (1.0 + (2.0 * y / (sigma * sigma)).exp())]
            }
            Channel::Bsc { tau } => {
                if hard_bit(y) == 0 {
                    [1.0 - tau, tau]
                } else {
                    [tau, 1.0 - tau]
                }
            }
        };
        [l0.max(LIKELIHOOD_FLOOR), l1.max(LIKELIHOOD_FLOOR)]
    }
}

/// Forward probabilities over the encoder states after `step` couples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForwardState {
    probs: Vec<f64>,
    step: usize,
}

impl ForwardState {
    /// All mass on the zero state.
    pub fn zero(num_states: usize) -> Self {
        let mut probs = vec![0.0; num_states];
        probs[0] = 1.0;
        Self { probs, step: 0 }
    }

    pub fn uniform(num_states: usize) -> Self {
        Self { probs: vec![1.0 / num_states as f64; num_states], step: 0 }
    }

    pub fn from_probs(probs: Vec<f64>, step: usize) -> Result<Self, EntropyError> {
        let sum: f64 = probs.iter().sum();
        if probs.is_empty() || !probs.len().is_power_of_two() || probs.iter().any(|p| !(*p >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
            return Err(EntropyError::InvalidParameter("forward state must be a distribution over 2^m states".into()));
        }
        Ok(Self { probs, step })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn step(&self) -> usize {
        self.step
    }

    pub fn num_states(&self) -> usize {
        self.probs.len()
    }
}

/// One step of the forward recursion on the couple `(x, z)`.
pub fn forward_step(
    state: &ForwardState,
    soft_x: Option<f64>,
    soft_z: Option<f64>,
    trellis: &Trellis,
    channel: Channel,
) -> Result<ForwardState, EntropyError> {
    channel.validate()?;
    if state.num_states() != trellis.num_states() {
        return Err(EntropyError::InvalidParameter(format!(
            "state has {} entries, trellis {} states",
            state.num_states(),
            trellis.num_states()
        )));
    }
    let lx = channel.likelihood(soft_x);
    let lz = channel.likelihood(soft_z);
    let mut next = vec![0.0; state.num_states()];
    step_into(&state.probs, lx, lz, trellis, &mut next)?;
    Ok(ForwardState { probs: next, step: state.step + 1 })
}

pub(crate) fn step_into(prev: &[f64], lx: [f64; 2], lz: [f64; 2], trellis: &Trellis, next: &mut [f64]) -> Result<(), EntropyError> {
    next.iter_mut().for_each(|v| *v = 0.0);
    for (s, &f) in prev.iter().enumerate() {
        if f == 0.0 {
            continue;
        }
        for b in 0..2u8 {
            let p = trellis.output(s, b);
            next[trellis.next_state(s, b)] += f * lx[b as usize] * lz[p as usize];
        }
    }
    let sum: f64 = next.iter().sum();
    if !(sum > 0.0) || !sum.is_finite() {
        return Err(EntropyError::Degenerate);
    }
    next.iter_mut().for_each(|v| *v /= sum);
    Ok(())
}

/// Base-2 entropy of a normalized state distribution.
pub fn entropy(state: &ForwardState) -> f64 {
    entropy_of(&state.probs)
}

pub(crate) fn entropy_of(p: &[f64]) -> f64 {
    let h: f64 = p.iter().filter(|&&v| v > 0.0).map(|&v| -v * v.log2()).sum();
    h.max(0.0)
}

/// Flattened trellis used by the reconstruction hot loop.
#[derive(Clone, Debug)]
pub(crate) struct Kernel {
    pub states: usize,
    pub memory: usize,
    /// `next[2s + b]`
    pub next: Vec<usize>,
    /// `out[2s + b]`
    pub out: Vec<usize>,
}

impl Kernel {
    pub fn new(trellis: &Trellis) -> Self {
        let states = trellis.num_states();
        let mut next = Vec::with_capacity(2 * states);
        let mut out = Vec::with_capacity(2 * states);
        for s in 0..states {
            for b in 0..2u8 {
                next.push(trellis.next_state(s, b));
                out.push(trellis.output(s, b) as usize);
            }
        }
        Self { states, memory: trellis.memory(), next, out }
    }

    /// Unnormalized step into `scratch`; returns the entropy of the normalized result.
    #[inline]
    pub fn step_entropy(&self, prev: &[f64], lx: [f64; 2], lz: [f64; 2], scratch: &mut [f64]) -> f64 {
        let z = self.step_raw(prev, lx, lz, scratch);
        if !(z > 0.0) {
            return self.memory as f64;
        }
        let mut acc = 0.0;
        for &u in scratch.iter() {
            if u > 0.0 {
                acc += u * u.log2();
            }
        }
        (z.log2() - acc / z).max(0.0)
    }

    #[inline]
    pub fn step_raw(&self, prev: &[f64], lx: [f64; 2], lz: [f64; 2], scratch: &mut [f64]) -> f64 {
        scratch.iter_mut().for_each(|v| *v = 0.0);
        for (s, &f) in prev.iter().enumerate() {
            for b in 0..2 {
                scratch[self.next[2 * s + b]] += f * lx[b] * lz[self.out[2 * s + b]];
            }
        }
        scratch.iter().sum()
    }

    /// Sum of `table[bin(H)]` over blocks after feeding `(lx[k], lz[k])` to
    /// `states[k]`.
    pub fn score_blocks(&self, states: &[f64], lx: &[[f64; 2]], lz: &[[f64; 2]], table: &[f64], w_bins: usize, scratch: &mut [f64]) -> f64 {
        match self.states {
            2 => self.score_fixed::<2>(states, lx, lz, table, w_bins),
            4 => self.score_fixed::<4>(states, lx, lz, table, w_bins),
            8 => self.score_fixed::<8>(states, lx, lz, table, w_bins),
            16 => self.score_fixed::<16>(states, lx, lz, table, w_bins),
            s => {
                let mut sum = 0.0;
                for k in 0..lx.len() {
                    let h = self.step_entropy(&states[k * s..(k + 1) * s], lx[k], lz[k], scratch);
                    sum += table[bin_of(h, self.memory, w_bins)];
                }
                sum
            }
        }
    }

    fn score_fixed<const S: usize>(&self, states: &[f64], lx: &[[f64; 2]], lz: &[[f64; 2]], table: &[f64], w_bins: usize) -> f64 {
        let mut next = [0usize; 32];
        let mut out = [0usize; 32];
        next[..2 * S].copy_from_slice(&self.next);
        out[..2 * S].copy_from_slice(&self.out);
        let scale = w_bins as f64 / self.memory as f64;
        let mut sum = 0.0;
        for ((f, lxk), lzk) in states.chunks_exact(S).zip(lx).zip(lz) {
            let mut u = [0.0f64; S];
            for s in 0..S {
                let fs = f[s];
                u[next[2 * s]] += fs * lxk[0] * lzk[out[2 * s]];
                u[next[2 * s + 1]] += fs * lxk[1] * lzk[out[2 * s + 1]];
            }
            let z: f64 = u.iter().sum();
            let mut acc = 0.0;
            for &v in &u {
                if v > 0.0 {
                    acc += v * v.log2();
                }
            }
            let h = if z > 0.0 { (z.log2() - acc / z).max(0.0) } else { self.memory as f64 };
            let j = ((h * scale) as usize).min(w_bins - 1);
            sum += table[j];
        }
        sum
    }

    /// Normalized step into `next`.
    #[inline]
    pub fn step_norm(&self, prev: &[f64], lx: [f64; 2], lz: [f64; 2], next: &mut [f64]) {
        let z = self.step_raw(prev, lx, lz, next);
        if z > 0.0 && z.is_finite() {
            next.iter_mut().for_each(|v| *v /= z);
        } else {
            next.iter_mut().for_each(|v| *v = 1.0 / self.states as f64);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;
    use crate::turbo_sim::{antipodal, make_trellis, EncoderSpec};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::Rng;

    fn enc57() -> EncoderSpec {
        "1+D^2/1+D+D^2".parse().unwrap()
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(entropy(&ForwardState::zero(4)), 0.0);
        assert_abs_diff_eq!(entropy(&ForwardState::uniform(8)), 3.0, epsilon = 1e-12);
        let s = ForwardState::from_probs(vec![0.5, 0.25, 0.25, 0.0], 0).unwrap();
        assert_abs_diff_eq!(entropy(&s), 1.5, epsilon = 1e-12);
    }

    #[test]
    fn noiseless_tracks_true_state() {
        let enc = enc57();
        let tr = make_trellis(&enc);
        let ch = Channel::Gaussian { sigma: 0.05 };
        let mut rng = seed::rng(4);
        let bits: Vec<u8> = (0..40).map(|_| rng.gen_range(0..2)).collect();
        let mut f = ForwardState::zero(4);
        let mut s = 0;
        for &b in &bits {
            let z = tr.output(s, b);
            s = tr.next_state(s, b);
            f = forward_step(&f, Some(antipodal(b)), Some(antipodal(z)), &tr, ch).unwrap();
            assert_abs_diff_eq!(f.probs()[s], 1.0, epsilon = 1e-12);
        }
        assert_eq!(f.step(), 40);
    }

    #[test]
    fn uninformative_inputs_ignore_values() {
        let tr = make_trellis(&enc57());
        let ch = Channel::Gaussian { sigma: 1.0 };
        let u = ForwardState::uniform(4);
        let a = forward_step(&u, None, None, &tr, ch).unwrap();
        let b = forward_step(&u, Some(0.0), Some(0.0), &tr, ch).unwrap();
        assert_eq!(a.probs(), b.probs());
        assert_abs_diff_eq!(entropy(&a), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn rejects_bad_inputs() {
        let tr = make_trellis(&enc57());
        assert!(forward_step(&ForwardState::zero(4), None, None, &tr, Channel::Gaussian { sigma: 0.0 }).is_err());
        assert!(forward_step(&ForwardState::zero(8), None, None, &tr, Channel::Gaussian { sigma: 1.0 }).is_err());
        assert!(ForwardState::from_probs(vec![0.5, 0.6], 0).is_err());
        assert!(ForwardState::from_probs(vec![0.5, 0.25, 0.25], 0).is_err());
    }

    /// Posterior by summing over every input prefix from the zero state.
    fn exhaustive(tr: &Trellis, xs: &[f64], zs: &[f64], sigma: f64) -> Vec<f64> {
        let gauss = |y: f64, b: u8| (-(y - antipodal(b)).powi(2) / (2.0 * sigma * sigma)).exp();
        let mut out = vec![0.0; tr.num_states()];
        for prefix in 0u32..(1 << xs.len()) {
            let mut s = 0;
            let mut w = 1.0;
            for (i, (&x, &z)) in xs.iter().zip(zs).enumerate() {
                let b = ((prefix >> i) & 1) as u8;
                w *= gauss(x, b) * gauss(z, tr.output(s, b));
                s = tr.next_state(s, b);
            }
            out[s] += w;
        }
        let sum: f64 = out.iter().sum();
        out.iter().map(|v| v / sum).collect()
    }

    #[test]
    fn matches_exhaustive_prefix_sum() {
        let tr = make_trellis(&enc57());
        let sigma = 0.9;
        let mut rng = seed::rng(11);
        for len in 1..=10 {
            let xs: Vec<f64> = (0..len).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let zs: Vec<f64> = (0..len).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let mut f = ForwardState::zero(4);
            for i in 0..len {
                f = forward_step(&f, Some(xs[i]), Some(zs[i]), &tr, Channel::Gaussian { sigma }).unwrap();
            }
            for (a, b) in f.probs().iter().zip(exhaustive(&tr, &xs, &zs, sigma)) {
                assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn kernel_agrees_with_forward_step() {
        let tr = make_trellis(&"1+D+D^3/1+D^2+D^3".parse().unwrap());
        let k = Kernel::new(&tr);
        let ch = Channel::Gaussian { sigma: 0.7 };
        let mut rng = seed::rng(1);
        let mut f = ForwardState::zero(8);
        let mut scratch = vec![0.0; 8];
        for _ in 0..50 {
            let (x, z) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let h = k.step_entropy(f.probs(), ch.likelihood(Some(x)), ch.likelihood(Some(z)), &mut scratch);
            f = forward_step(&f, Some(x), Some(z), &tr, ch).unwrap();
            assert_abs_diff_eq!(h, entropy(&f), epsilon = 1e-9);
        }
    }

    #[test]
    fn fixed_size_scores_match_generic() {
        let ch = Channel::Gaussian { sigma: 0.8 };
        let mut rng = seed::rng(9);
        for pq in ["1/1+D", "1+D^2/1+D+D^2", "1+D+D^3/1+D^2+D^3", "1+D/1+D+D^4", "1+D^2/1+D^2+D^5"] {
            let k = Kernel::new(&make_trellis(&pq.parse().unwrap()));
            let s = k.states;
            let blocks = 37;
            let mut states = Vec::new();
            for _ in 0..blocks {
                let raw: Vec<f64> = (0..s).map(|_| rng.gen_range(0.0..1.0)).collect();
                let z: f64 = raw.iter().sum();
                states.extend(raw.iter().map(|v| v / z));
            }
            let lx: Vec<[f64; 2]> = (0..blocks).map(|_| ch.likelihood(Some(rng.gen_range(-2.0..2.0)))).collect();
            let lz: Vec<[f64; 2]> = (0..blocks).map(|_| ch.likelihood(Some(rng.gen_range(-2.0..2.0)))).collect();
            let table: Vec<f64> = (0..16).map(|j| j as f64 * 0.5 - 3.0).collect();
            let mut scratch = vec![0.0; s];
            let fast = k.score_blocks(&states, &lx, &lz, &table, 16, &mut scratch);
            let slow: f64 = (0..blocks)
                .map(|b| table[bin_of(k.step_entropy(&states[b * s..(b + 1) * s], lx[b], lz[b], &mut scratch), k.memory, 16)])
                .sum();
            assert_abs_diff_eq!(fast, slow, epsilon = 1e-9);
        }
    }

    #[test]
    fn bsc_likelihoods() {
        let ch = Channel::Bsc { tau: 0.1 };
        assert_eq!(ch.likelihood(Some(0.3)), [0.9, 0.1]);
        assert_eq!(ch.likelihood(Some(-0.3)), [0.1, 0.9]);
        assert_eq!(ch.likelihood(None), [1.0, 1.0]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn stays_normalized(
            pq in prop::sample::select(vec!["1+D^2/1+D+D^2", "1+D^2+D^3/1+D+D^2", "1+D+D^3/1+D^2+D^3", "1+D/1+D+D^4"]),
            sigma in 0.05f64..3.0,
            values in prop::collection::vec((-4.0f64..4.0, -4.0f64..4.0, any::<bool>()), 1..60),
        ) {
            let enc: EncoderSpec = pq.parse().unwrap();
            let tr = make_trellis(&enc);
            let mut f = ForwardState::zero(tr.num_states());
            for (x, z, erased) in values {
                let z = if erased { None } else { Some(z) };
                f = forward_step(&f, Some(x), z, &tr, Channel::Gaussian { sigma }).unwrap();
                let sum: f64 = f.probs().iter().sum();
                prop_assert!((sum - 1.0).abs() <= 1e-12);
                prop_assert!(f.probs().iter().all(|p| *p >= 0.0));
                let h = entropy(&f);
                prop_assert!((0.0..=enc.memory() as f64 + 1e-12).contains(&h));
            }
        }
    }
}
