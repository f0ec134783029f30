//! Index partitioning into frozen, information and shaping sets, and the
//! nested source/channel code pairs every scheme is built from.

use super::construct::{BhattacharyyaProfile, ConstructionParams, PartitionMode};
use crate::error::{Error, Result};

/// Which set an index belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SetClass {
    /// Pre-shared random bit.
    Frozen,
    /// Randomized-rounding (encoder) / transmitted-or-decoded (decoder).
    Info,
    /// Determined by the prior-only MAP rule at both ends.
    Shaping,
}

/// Disjoint, exhaustive (frozen, information, shaping) subsets of [N].
#[derive(Debug, Clone)]
pub struct IndexPartition {
    frozen: Vec<usize>,
    info: Vec<usize>,
    shaping: Vec<usize>,
    class: Vec<SetClass>,
}

impl IndexPartition {
    pub fn new(len: usize, mut frozen: Vec<usize>, mut info: Vec<usize>, mut shaping: Vec<usize>) -> Result<Self> {
        if !len.is_power_of_two() {
            return Err(Error::InvalidInput(format!("partition length {len} is not a power of two")));
        }
        let mut class = vec![None; len];
        for (set, tag) in [(&frozen, SetClass::Frozen), (&info, SetClass::Info), (&shaping, SetClass::Shaping)] {
            for &i in set.iter() {
                if i >= len {
                    return Err(Error::InvalidInput(format!("index {i} out of range {len}")));
                }
                if class[i].is_some() {
                    return Err(Error::InvalidInput(format!("index {i} assigned to two sets")));
                }
                class[i] = Some(tag);
            }
        }
        if let Some(gap) = class.iter().position(|c| c.is_none()) {
            return Err(Error::InvalidInput(format!("index {gap} assigned to no set")));
        }
        frozen.sort_unstable();
        info.sort_unstable();
        shaping.sort_unstable();
        let class = class.into_iter().map(Option::unwrap).collect();
        Ok(Self { frozen, info, shaping, class })
    }

    pub fn len(&self) -> usize {
        self.class.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn frozen(&self) -> &[usize] {
        &self.frozen
    }

    pub fn info(&self) -> &[usize] {
        &self.info
    }

    pub fn shaping(&self) -> &[usize] {
        &self.shaping
    }

    pub fn class(&self, i: usize) -> SetClass {
        self.class[i]
    }
}

/// Single-letter targets for rank-mode sizing. `info_rate` is the exact
/// information-theoretic rate of the set (the margin is added on top);
/// `shaping_rate` is the redundancy 1 - H of the symbol's prior.
#[derive(Debug, Clone, Copy)]
pub struct RankTargets {
    pub info_rate: f64,
    pub shaping_rate: f64,
}

impl RankTargets {
    pub fn new(info_rate: f64, shaping_rate: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&info_rate) || !(0.0..=1.0).contains(&shaping_rate) {
            return Err(Error::InvalidInput(format!(
                "rates ({info_rate}, {shaping_rate}) outside [0, 1]"
            )));
        }
        Ok(Self { info_rate, shaping_rate })
    }
}

/// Indices of the `count` smallest profile values among `allowed`, ties
/// broken toward lower indices.
fn smallest_by(profile: &BhattacharyyaProfile, allowed: &[usize], count: usize) -> Vec<usize> {
    let mut order: Vec<usize> = allowed.to_vec();
    order.sort_by(|&a, &b| {
        profile.values()[a]
            .partial_cmp(&profile.values()[b])
            .unwrap()
            .then(a.cmp(&b))
    });
    order.truncate(count);
    order
}

/// Source-shape partition from the conditional profile `z_good` and the
/// prior-only profile `z_uncond`.
///
/// Threshold mode applies the literal rule with t = 2^(-N^beta):
/// shaping where the prior-only value is at most t, frozen where the
/// conditional value is at least 1 - t, information elsewhere. The rule
/// covers every index; an index satisfying both extremes (possible only
/// with noisy estimates) is assigned to shaping.
///
/// Rank mode sizes the shaping set to `round(N * shaping_rate)` by smallest
/// prior-only value and the information set to
/// `round(N * (info_rate + rate_margin))` by smallest conditional value
/// among the rest, capped by the symbol entropy budget `N - |shaping|`.
pub fn build_partition(
    z_good: &BhattacharyyaProfile,
    z_uncond: &BhattacharyyaProfile,
    params: &ConstructionParams,
    targets: Option<&RankTargets>,
) -> Result<IndexPartition> {
    params.validate()?;
    let n = z_good.len();
    if z_uncond.len() != n {
        return Err(Error::InvalidInput(format!(
            "profile lengths differ: {} vs {}",
            n,
            z_uncond.len()
        )));
    }
    match params.mode {
        PartitionMode::Threshold => {
            let t = params.threshold(n);
            let mut frozen = Vec::new();
            let mut info = Vec::new();
            let mut shaping = Vec::new();
            for i in 0..n {
                if z_uncond.values()[i] <= t {
                    shaping.push(i);
                } else if z_good.values()[i] >= 1.0 - t {
                    frozen.push(i);
                } else {
                    info.push(i);
                }
            }
            IndexPartition::new(n, frozen, info, shaping)
        }
        PartitionMode::Rank => {
            let targets = targets.ok_or_else(|| {
                Error::InvalidInput("rank mode requires single-letter rate targets".into())
            })?;
            // targets above 1 are rejected at RankTargets construction;
            // the margin saturates at the entropy budget instead
            let rate = (targets.info_rate + params.rate_margin).min(1.0);
            let shaping_count = ((n as f64) * targets.shaping_rate).round() as usize;
            let shaping = smallest_by(z_uncond, &(0..n).collect::<Vec<_>>(), shaping_count);
            let mut is_shaping = vec![false; n];
            for &i in &shaping {
                is_shaping[i] = true;
            }
            let rest: Vec<usize> = (0..n).filter(|&i| !is_shaping[i]).collect();
            let info_count = (((n as f64) * rate).round() as usize).min(rest.len());
            let info = smallest_by(z_good, &rest, info_count);
            let mut taken = is_shaping;
            for &i in &info {
                taken[i] = true;
            }
            let frozen: Vec<usize> = (0..n).filter(|&i| !taken[i]).collect();
            IndexPartition::new(n, frozen, info, shaping)
        }
    }
}

/// Channel-shape partition (threshold mode only): frozen where the
/// conditional value is at least 1 - t; information where it is at most t
/// and the prior-only value is at least 1 - t; shaping elsewhere.
pub fn build_channel_partition(
    z_cond: &BhattacharyyaProfile,
    z_uncond: &BhattacharyyaProfile,
    params: &ConstructionParams,
) -> Result<IndexPartition> {
    params.validate()?;
    let n = z_cond.len();
    if z_uncond.len() != n {
        return Err(Error::InvalidInput("profile lengths differ".into()));
    }
    let t = params.threshold(n);
    let mut frozen = Vec::new();
    let mut info = Vec::new();
    let mut shaping = Vec::new();
    for i in 0..n {
        if z_cond.values()[i] >= 1.0 - t {
            frozen.push(i);
        } else if z_cond.values()[i] <= t && z_uncond.values()[i] >= 1.0 - t {
            info.push(i);
        } else {
            shaping.push(i);
        }
    }
    IndexPartition::new(n, frozen, info, shaping)
}

/// Exact single-letter rates of a nested source/channel code pair.
#[derive(Debug, Clone, Copy)]
pub struct NestedTargets {
    /// I(symbol; encoder-side observations).
    pub src_info_rate: f64,
    /// I(symbol; decoder-side observations); at most `src_info_rate` for a
    /// degraded pair.
    pub ch_info_rate: f64,
    /// 1 - H(symbol).
    pub shaping_rate: f64,
}

/// A source code nested with a channel code for a degraded observation of
/// the same symbol. The message carries the source code's information
/// positions the channel decoder cannot recover on its own.
#[derive(Debug, Clone)]
pub struct NestedCodePair {
    /// Source-side partition: drives quantization.
    pub src: IndexPartition,
    /// Channel-decodable subset of the source information set.
    pub ch_info: Vec<usize>,
    /// Transmitted positions: source information minus channel-decodable.
    pub msg: Vec<usize>,
}

impl NestedCodePair {
    pub fn len(&self) -> usize {
        self.src.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Message rate in bits per source symbol.
    pub fn msg_rate(&self) -> f64 {
        self.msg.len() as f64 / self.src.len() as f64
    }
}

fn is_subset(a: &[usize], b: &[usize]) -> bool {
    // both sorted
    let mut it = b.iter().peekable();
    'outer: for &x in a {
        while let Some(&&y) = it.peek() {
            match y.cmp(&x) {
                std::cmp::Ordering::Less => {
                    it.next();
                }
                std::cmp::Ordering::Equal => continue 'outer,
                std::cmp::Ordering::Greater => return false,
            }
        }
        return false;
    }
    true
}

/// Designs the nested pair from three profiles estimated along the same
/// sampled contexts: conditional on the encoder-side observations (z_src),
/// on the degraded decoder-side observations (z_ch), and prior-only
/// (z_unc).
///
/// Rank mode forces the channel information set to be the most reliable
/// subset of the source information set, with the margin widening the
/// source set and shrinking the channel set. Threshold mode builds both
/// partitions literally and checks the three nesting inclusions, failing
/// with a nesting violation when estimate noise breaks them.
pub fn design_nested_pair(
    z_src: &BhattacharyyaProfile,
    z_ch: &BhattacharyyaProfile,
    z_unc: &BhattacharyyaProfile,
    params: &ConstructionParams,
    targets: &NestedTargets,
) -> Result<NestedCodePair> {
    let n = z_src.len();
    if z_ch.len() != n || z_unc.len() != n {
        return Err(Error::InvalidInput("profile lengths differ".into()));
    }
    match params.mode {
        PartitionMode::Rank => {
            let src = build_partition(
                z_src,
                z_unc,
                params,
                Some(&RankTargets::new(
                    targets.src_info_rate.clamp(0.0, 1.0),
                    targets.shaping_rate.clamp(0.0, 1.0),
                )?),
            )?;
            let ch_rate = (targets.ch_info_rate - params.rate_margin).max(0.0);
            let ch_count = (((n as f64) * ch_rate).round() as usize).min(src.info().len());
            let ch_info = smallest_by(z_ch, src.info(), ch_count);
            let mut ch_sorted = ch_info;
            ch_sorted.sort_unstable();
            let mut in_ch = vec![false; n];
            for &i in &ch_sorted {
                in_ch[i] = true;
            }
            let msg: Vec<usize> = src.info().iter().copied().filter(|&i| !in_ch[i]).collect();
            Ok(NestedCodePair { src, ch_info: ch_sorted, msg })
        }
        PartitionMode::Threshold => {
            let src = build_partition(z_src, z_unc, params, None)?;
            let ch = build_channel_partition(z_ch, z_unc, params)?;
            // frozen-source within frozen-channel; channel info within
            // source info; shaping-source within shaping-channel
            if !is_subset(src.frozen(), ch.frozen()) {
                return Err(Error::NestingViolation(
                    "source frozen set escapes channel frozen set; increase num_samples".into(),
                ));
            }
            if !is_subset(ch.info(), src.info()) {
                return Err(Error::NestingViolation(
                    "channel information set escapes source information set; increase num_samples"
                        .into(),
                ));
            }
            if !is_subset(src.shaping(), ch.shaping()) {
                return Err(Error::NestingViolation(
                    "source shaping set escapes channel shaping set; increase num_samples".into(),
                ));
            }
            let mut in_ch = vec![false; n];
            for &i in ch.info() {
                in_ch[i] = true;
            }
            let msg: Vec<usize> = src.info().iter().copied().filter(|&i| !in_ch[i]).collect();
            Ok(NestedCodePair { src, ch_info: ch.info().to_vec(), msg })
        }
    }
}
