//! SC quantization and decoding passes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::engine::{clamp_pair, sc_run, Pair};
use super::partition::{IndexPartition, SetClass};
use crate::bits::BitFrame;
use crate::error::{Error, Result};

/// A per-frame conditional source model: for each position, the posterior
/// of the product-domain symbol given that position's observations, plus
/// the prior-only law. Together with the SC walk this yields
/// P(next transform-domain bit | past bits, observations) in SC order.
#[derive(Debug, Clone)]
pub struct SequentialSourceModel {
    observed: Vec<Pair>,
    prior: Vec<Pair>,
}

impl SequentialSourceModel {
    /// Validates and clamps both tracks. Pairs must be sub-normalized
    /// probability pairs; each is renormalized onto the clamped simplex.
    pub fn new(observed: Vec<Pair>, prior: Vec<Pair>) -> Result<Self> {
        if observed.len() != prior.len() {
            return Err(Error::InvalidInput("track lengths differ".into()));
        }
        if !observed.len().is_power_of_two() {
            return Err(Error::InvalidInput("model length must be a power of two".into()));
        }
        let sanitize = |track: Vec<Pair>| -> Result<Vec<Pair>> {
            track
                .into_iter()
                .enumerate()
                .map(|(j, p)| {
                    if p[0] < 0.0 || p[1] < 0.0 || p[0] + p[1] <= 0.0 {
                        return Err(Error::InvalidInput(format!(
                            "invalid probability pair {p:?} at position {j}"
                        )));
                    }
                    if (p[0] + p[1] - 1.0).abs() > 1e-6 {
                        return Err(Error::InvalidInput(format!(
                            "pair {p:?} at position {j} does not sum to 1"
                        )));
                    }
                    Ok(clamp_pair(p[0], p[1]))
                })
                .collect()
        };
        Ok(Self { observed: sanitize(observed)?, prior: sanitize(prior)? })
    }

    /// Uniform prior shortcut.
    pub fn with_uniform_prior(observed: Vec<Pair>) -> Result<Self> {
        let prior = vec![[0.5, 0.5]; observed.len()];
        Self::new(observed, prior)
    }

    pub fn len(&self) -> usize {
        self.observed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observed.is_empty()
    }

    fn cells(&self) -> Vec<[Pair; 2]> {
        self.observed.iter().zip(&self.prior).map(|(&o, &p)| [o, p]).collect()
    }
}

/// Pre-shared uniform fill for frozen positions, derived from a seed known
/// to encoder and decoders.
pub fn preshared_fill(seed: u64, count: usize) -> Vec<u8> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| rng.gen_range(0..2u8)).collect()
}

/// Quantizes by one SC pass: frozen positions take the pre-shared bits,
/// information positions are drawn from the observation-conditioned
/// posterior (randomized rounding), shaping positions take the prior-only
/// MAP decision (ties at exactly 1/2 resolve to 0). Deterministic given
/// `seed`.
pub fn sc_quantize(
    model: &SequentialSourceModel,
    partition: &IndexPartition,
    preshared: &[u8],
    seed: u64,
) -> Result<BitFrame> {
    if partition.len() != model.len() {
        return Err(Error::InvalidInput(format!(
            "partition length {} does not match model length {}",
            partition.len(),
            model.len()
        )));
    }
    if preshared.len() != partition.frozen().len() {
        return Err(Error::InvalidInput(format!(
            "pre-shared bits cover {} positions, frozen set has {}",
            preshared.len(),
            partition.frozen().len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut next_frozen = 0usize;
    let cells = model.cells();
    let k = sc_run::<2>(&cells, |i, cell| match partition.class(i) {
        SetClass::Frozen => {
            let b = preshared[next_frozen];
            next_frozen += 1;
            b
        }
        SetClass::Info => u8::from(rng.gen::<f64>() >= cell[0][0]),
        SetClass::Shaping => u8::from(cell[1][0] < cell[1][1]),
    });
    BitFrame::new(k)
}

/// How the decoder settles each index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndexRole {
    /// Known bit: pre-shared frozen fill or received message bit.
    Pinned(u8),
    /// MAP decision on the observation-conditioned posterior.
    DecodeObserved,
    /// MAP decision on the prior-only law (replicates the encoder's
    /// shaping rule).
    DecodePrior,
}

/// Builds a complete role table; errors if any index is neither pinned nor
/// decodable, or claimed twice.
pub fn assemble_roles(
    len: usize,
    pinned: impl IntoIterator<Item = (usize, u8)>,
    observed: &[usize],
    prior: &[usize],
) -> Result<Vec<IndexRole>> {
    let mut roles: Vec<Option<IndexRole>> = vec![None; len];
    let mut put = |i: usize, r: IndexRole| -> Result<()> {
        if i >= len {
            return Err(Error::Config(format!("index {i} out of range {len}")));
        }
        if roles[i].is_some() {
            return Err(Error::Config(format!("index {i} assigned two roles")));
        }
        roles[i] = Some(r);
        Ok(())
    };
    for (i, b) in pinned {
        put(i, IndexRole::Pinned(b & 1))?;
    }
    for &i in observed {
        put(i, IndexRole::DecodeObserved)?;
    }
    for &i in prior {
        put(i, IndexRole::DecodePrior)?;
    }
    roles
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            r.ok_or_else(|| Error::Config(format!("index {i} neither pinned nor decodable")))
        })
        .collect()
}

/// Decodes by one SC pass with the given per-index roles. MAP ties at
/// exactly 1/2 resolve to 0.
pub fn sc_decode(model: &SequentialSourceModel, roles: &[IndexRole]) -> Result<BitFrame> {
    if roles.len() != model.len() {
        return Err(Error::InvalidInput(format!(
            "role table length {} does not match model length {}",
            roles.len(),
            model.len()
        )));
    }
    let cells = model.cells();
    let k = sc_run::<2>(&cells, |i, cell| match roles[i] {
        IndexRole::Pinned(b) => b,
        IndexRole::DecodeObserved => u8::from(cell[0][0] < cell[0][1]),
        IndexRole::DecodePrior => u8::from(cell[1][0] < cell[1][1]),
    });
    BitFrame::new(k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polar::{build_partition, BhattacharyyaProfile, ConstructionParams, PartitionMode, RankTargets};
    use rand::Rng;

    fn all_frozen(n: usize) -> IndexPartition {
        IndexPartition::new(n, (0..n).collect(), vec![], vec![]).unwrap()
    }

    #[test]
    fn all_frozen_returns_preshared() {
        let n = 16;
        let model = SequentialSourceModel::with_uniform_prior(vec![[0.5, 0.5]; n]).unwrap();
        let fill = preshared_fill(99, n);
        let k = sc_quantize(&model, &all_frozen(n), &fill, 1).unwrap();
        assert_eq!(k.as_slice(), &fill[..]);
    }

    #[test]
    fn deterministic_model_forces_sequence() {
        // posteriors in {0,1}: the quantizer must reproduce the forced
        // transform-domain sequence over an all-information partition
        let n = 32;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2)).collect();
        let observed: Vec<Pair> =
            a.iter().map(|&b| if b == 0 { [1.0, 0.0] } else { [0.0, 1.0] }).collect();
        let model = SequentialSourceModel::with_uniform_prior(observed).unwrap();
        let part = IndexPartition::new(n, vec![], (0..n).collect(), vec![]).unwrap();
        let k = sc_quantize(&model, &part, &[], 7).unwrap();
        let expect = crate::bits::polar_transform(&BitFrame::new(a).unwrap());
        assert_eq!(k, expect);
    }

    #[test]
    fn quantize_then_full_message_decode_roundtrips() {
        // skewed prior so the shaping set is exercised: decoder replicates
        // shaping decisions from the prior track alone
        let n = 64;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let prior_p = 0.85;
        let observed: Vec<Pair> = (0..n)
            .map(|_| {
                let a = u8::from(rng.gen::<f64>() >= prior_p);
                let noisy = rng.gen::<f64>() < 0.2;
                let conf: f64 = if noisy { 0.55 } else { 0.95 };
                if a == 0 {
                    [conf, 1.0 - conf]
                } else {
                    [1.0 - conf, conf]
                }
            })
            .collect();
        let prior = vec![[prior_p, 1.0 - prior_p]; n];
        let model = SequentialSourceModel::new(observed, prior).unwrap();

        // crude profile-free partition: carve shaping from the top indices,
        // freeze a few, inform the rest
        let shaping: Vec<usize> = (0..n / 8).collect();
        let frozen: Vec<usize> = (n / 8..n / 4).collect();
        let info: Vec<usize> = (n / 4..n).collect();
        let part = IndexPartition::new(n, frozen.clone(), info.clone(), shaping.clone()).unwrap();

        let fill = preshared_fill(3, frozen.len());
        let k = sc_quantize(&model, &part, &fill, 13).unwrap();

        let pinned = frozen
            .iter()
            .zip(&fill)
            .map(|(&i, &b)| (i, b))
            .chain(info.iter().map(|&i| (i, k[i])));
        let roles = assemble_roles(n, pinned, &[], &shaping).unwrap();
        let decoded = sc_decode(&model, &roles).unwrap();
        assert_eq!(decoded, k);
    }

    #[test]
    fn decode_requires_total_cover() {
        let err = assemble_roles(4, vec![(0, 1)], &[1], &[]).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        let err = assemble_roles(4, vec![(0, 1), (0, 0)], &[1, 2], &[3]).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn zero_capacity_observation_with_all_pinned() {
        let n = 8;
        let model = SequentialSourceModel::with_uniform_prior(vec![[0.5, 0.5]; n]).unwrap();
        let bits: Vec<u8> = vec![1, 0, 0, 1, 1, 1, 0, 0];
        let roles = assemble_roles(n, bits.iter().cloned().enumerate(), &[], &[]).unwrap();
        let out = sc_decode(&model, &roles).unwrap();
        assert_eq!(out.as_slice(), &bits[..]);
    }

    #[test]
    fn noiseless_observation_decodes_exactly() {
        let n = 32;
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let a: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2)).collect();
        let observed: Vec<Pair> =
            a.iter().map(|&b| if b == 0 { [1.0, 0.0] } else { [0.0, 1.0] }).collect();
        let model = SequentialSourceModel::with_uniform_prior(observed).unwrap();
        let roles = vec![IndexRole::DecodeObserved; n];
        let out = sc_decode(&model, &roles).unwrap();
        let expect = crate::bits::polar_transform(&BitFrame::new(a).unwrap());
        assert_eq!(out, expect);
    }

    #[test]
    fn dsbs_quantizer_meets_distortion_target() {
        // uniform binary source quantized with a symmetric test channel at
        // crossover 0.11, rate 1 - h(0.11) + margin
        let n_log = 14u32;
        let n = 1usize << n_log;
        let d = 0.11;
        let margin = 0.08;
        let params = ConstructionParams::new(200, margin, 42, PartitionMode::Rank);
        let sampler = crate::polar::construct::bsc_sampler(n, d);
        let prof = crate::polar::estimate_profile(&sampler, &params).unwrap();
        let z_unc = BhattacharyyaProfile::constant(n, 1.0).unwrap();
        let info_rate = 1.0 - crate::rd::binary_entropy(d).unwrap();
        let part = build_partition(
            &prof,
            &z_unc,
            &params,
            Some(&RankTargets::new(info_rate, 0.0).unwrap()),
        )
        .unwrap();

        let mut rng = ChaCha8Rng::seed_from_u64(1234);
        let mut total = 0.0;
        let frames = 6;
        for f in 0..frames {
            let x: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2)).collect();
            let observed: Vec<Pair> =
                x.iter().map(|&b| if b == 0 { [1.0 - d, d] } else { [d, 1.0 - d] }).collect();
            let model = SequentialSourceModel::with_uniform_prior(observed).unwrap();
            let fill = preshared_fill(1000 + f, part.frozen().len());
            let k = sc_quantize(&model, &part, &fill, 2000 + f).unwrap();
            let u = crate::bits::polar_transform(&k);
            let x_frame = BitFrame::new(x).unwrap();
            total += x_frame.normalized_distance(&u);
        }
        let mean = total / frames as f64;
        assert!(mean <= 0.12, "empirical distortion {mean} above 0.12");
        assert!(mean >= 0.09, "empirical distortion {mean} implausibly low");
    }
}
