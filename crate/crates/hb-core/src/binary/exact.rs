//! Exact small-blocklength distribution oracles.
//!
//! At blocklengths up to 8 the full joint law of (codeword, observations)
//! is enumerable, which gives exact variational distances between the
//! compressed law and the uncompressed (rounding-everywhere) law, and
//! exact reliability profiles. Both quantities are computed by brute
//! force, independent of the Monte-Carlo construction path.

use crate::error::{Error, Result};
use crate::polar::{sc_run, IndexPartition, Pair, SetClass};

/// A memoryless per-position joint over (symbol, observation) with a
/// finite observation alphabet: `joint[o][a] = P(A = a, O = o)`.
#[derive(Debug, Clone)]
pub struct FiniteModel {
    pub joint: Vec<[f64; 2]>,
}

impl FiniteModel {
    /// Uniform symbol through a symmetric channel with the given
    /// crossover.
    pub fn symmetric(crossover: f64) -> Self {
        Self {
            joint: vec![
                [0.5 * (1.0 - crossover), 0.5 * crossover],
                [0.5 * crossover, 0.5 * (1.0 - crossover)],
            ],
        }
    }

    fn obs_card(&self) -> usize {
        self.joint.len()
    }

    fn obs_prob(&self, o: usize) -> f64 {
        self.joint[o][0] + self.joint[o][1]
    }

    fn posterior(&self, o: usize) -> Pair {
        let s = self.obs_prob(o);
        if s > 0.0 {
            [self.joint[o][0] / s, self.joint[o][1] / s]
        } else {
            [0.5, 0.5]
        }
    }

    fn prior(&self) -> Pair {
        let p0: f64 = self.joint.iter().map(|r| r[0]).sum();
        let p1: f64 = self.joint.iter().map(|r| r[1]).sum();
        [p0, p1]
    }
}

fn check_size(model: &FiniteModel, len: usize) -> Result<()> {
    if len > 8 {
        return Err(Error::Config(format!(
            "exact enumeration refused at blocklength {len} (limit 8)"
        )));
    }
    let words = (model.obs_card() as f64).powi(len as i32);
    if words > (1u64 << 20) as f64 {
        return Err(Error::Config(format!(
            "observation space of {words} words is too large to enumerate"
        )));
    }
    Ok(())
}

/// Walks all observation words in mixed radix.
struct ObsWords {
    card: usize,
    len: usize,
    current: Option<Vec<usize>>,
}

impl ObsWords {
    fn new(card: usize, len: usize) -> Self {
        Self { card, len, current: Some(vec![0; len]) }
    }
}

impl Iterator for ObsWords {
    type Item = Vec<usize>;
    fn next(&mut self) -> Option<Vec<usize>> {
        let word = self.current.clone()?;
        let mut next = word.clone();
        let mut carry = true;
        for digit in next.iter_mut().take(self.len) {
            if !carry {
                break;
            }
            *digit += 1;
            if *digit == self.card {
                *digit = 0;
            } else {
                carry = false;
            }
        }
        self.current = if carry { None } else { Some(next) };
        Some(word)
    }
}

/// Probability of each transform-domain word under the compressed law:
/// frozen positions average over the shared fill, information positions
/// follow randomized rounding, shaping positions are pinned to the
/// prior-only MAP decision.
fn compressed_word_prob(
    cells: &[[Pair; 2]],
    partition: &IndexPartition,
    word: &[u8],
) -> f64 {
    let mut prob = 1.0f64;
    sc_run::<2>(cells, |i, cell| {
        match partition.class(i) {
            SetClass::Frozen => prob *= 0.5,
            SetClass::Info => prob *= cell[0][word[i] as usize],
            SetClass::Shaping => {
                let map = u8::from(cell[1][0] < cell[1][1]);
                if map != word[i] {
                    prob = 0.0;
                }
            }
        }
        word[i]
    });
    prob
}

/// Exact variational distance between the uncompressed law (randomized
/// rounding at every index) and the compressed law induced by the
/// partition, joint with the observations:
/// V = 1/2 sum |P - Q|.
pub fn exact_variational_distance(
    model: &FiniteModel,
    partition: &IndexPartition,
) -> Result<f64> {
    let len = partition.len();
    check_size(model, len)?;
    let mut v = 0.0f64;
    let words = 1usize << len;
    let prior = model.prior();
    for obs in ObsWords::new(model.obs_card(), len) {
        let p_obs: f64 = obs.iter().map(|&o| model.obs_prob(o)).product();
        if p_obs <= 0.0 {
            continue;
        }
        let cells: Vec<[Pair; 2]> = obs.iter().map(|&o| [model.posterior(o), prior]).collect();
        let mut dist = 0.0f64;
        for w in 0..words {
            let word: Vec<u8> = (0..len).map(|b| ((w >> b) & 1) as u8).collect();
            // uncompressed law: direct product over the transformed word
            let mut a = word.clone();
            crate::bits::polar_transform_in_place(&mut a);
            let p: f64 = (0..len).map(|j| cells[j][0][a[j] as usize]).product();
            let q = compressed_word_prob(&cells, partition, &word);
            dist += (p - q).abs();
        }
        v += 0.5 * p_obs * dist;
    }
    Ok(v)
}

/// Exact reliability profile by enumeration: the expected conditional
/// Bhattacharyya value at each index under the true joint law.
pub fn exact_profile(model: &FiniteModel, len: usize) -> Result<Vec<f64>> {
    check_size(model, len)?;
    let words = 1usize << len;
    let mut z = vec![0.0f64; len];
    for obs in ObsWords::new(model.obs_card(), len) {
        let p_obs: f64 = obs.iter().map(|&o| model.obs_prob(o)).product();
        if p_obs <= 0.0 {
            continue;
        }
        let cells: Vec<[Pair; 1]> = obs.iter().map(|&o| [model.posterior(o)]).collect();
        for w in 0..words {
            let word: Vec<u8> = (0..len).map(|b| ((w >> b) & 1) as u8).collect();
            let mut chain = 1.0f64;
            sc_run::<1>(&cells, |i, cell| {
                // weight of this prefix times the conditional z-value;
                // summing over completions reweights by their share
                z[i] += p_obs * chain * 2.0 * (cell[0][0] * cell[0][1]).sqrt()
                    * cell[0][word[i] as usize];
                chain *= cell[0][word[i] as usize];
                word[i]
            });
        }
    }
    // each prefix was visited once per completion; the chain weights make
    // the completion shares sum to the prefix mass, but the z-term was
    // added once per completion of the *remaining* suffix, so divide by
    // the number of suffix words
    for (i, zi) in z.iter_mut().enumerate() {
        *zi /= (1usize << (len - 1 - i)) as f64;
    }
    Ok(z)
}
