//! Binary Heegard-Berger codecs.
//!
//! Two schemes share the same machinery. The nested scheme serves the
//! closed-form sub-region: a coarse quantizer gives the uninformed decoder
//! its reconstruction, and a nested source/channel pair delivers the fine
//! reconstruction to the informed decoder, which treats the coarse
//! reconstruction plus its side information as a combined observation. The
//! two-level scheme covers the entire non-degenerate region by splitting
//! the ternary reconstruction symbol into two binary levels, the second
//! conditioned on the realized first.

pub mod exact;
mod models;

pub use exact::{exact_profile, exact_variational_distance, FiniteModel};
pub use models::{bsc_posteriors, split_symbol, CascadeModel, TernaryModel};

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::bits::{polar_transform, BitFrame};
use crate::error::{Error, Result};
use crate::polar::{
    assemble_roles, build_partition, design_nested_pair, estimate_profiles, preshared_fill,
    sc_decode, sc_quantize, BhattacharyyaProfile, ConstructionParams, FnSampler, IndexPartition,
    IndexRole, NestedCodePair, NestedTargets, Pair, RankTargets,
    SequentialSourceModel,
};
use crate::rd::{
    binary_entropy, classify_region_binary, minimize_s, table_joint, BinaryRegion, DsbsConfig,
    HbParams, HbTestChannel,
};
use crate::seed;

// seed stream labels
const STREAM_FILL1: u64 = 1;
const STREAM_FILL2: u64 = 2;
const STREAM_FILL_B: u64 = 3;
const STREAM_RR1: u64 = 11;
const STREAM_RR2: u64 = 12;
const STREAM_RR_B: u64 = 13;
const STREAM_PROFILE1: u64 = 21;
const STREAM_PROFILE2: u64 = 22;
const STREAM_PROFILE_B: u64 = 23;

/// Message emitted by either binary encoder. The frame seed indexes the
/// pre-shared randomness both ends derive; it is not counted as rate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HbMessage {
    pub frame_seed: u64,
    /// coarse-quantizer information bits, for both decoders
    pub msg1: Vec<u8>,
    /// fine-level bits the informed decoder cannot infer (nested scheme),
    /// or the first-level bits (two-level scheme)
    pub msg2: Vec<u8>,
    /// second-level bits (two-level scheme only)
    pub msg3: Vec<u8>,
}

fn gather(frame: &[u8], idx: &[usize]) -> Vec<u8> {
    idx.iter().map(|&i| frame[i]).collect()
}

fn decode_roles(pair: &NestedCodePair, fill: &[u8], msg: &[u8]) -> Result<Vec<IndexRole>> {
    if msg.len() != pair.msg.len() {
        return Err(Error::InvalidInput(format!(
            "message length {} does not match designed {}",
            msg.len(),
            pair.msg.len()
        )));
    }
    let pinned = pair
        .src
        .frozen()
        .iter()
        .zip(fill)
        .map(|(&i, &b)| (i, b))
        .chain(pair.msg.iter().zip(msg).map(|(&i, &b)| (i, b)));
    assemble_roles(pair.len(), pinned, &pair.ch_info, pair.src.shaping())
}

/// The nested codec for the closed-form sub-region.
#[derive(Debug, Clone)]
pub struct RegionIbCode {
    pub cfg: DsbsConfig,
    pub n: u32,
    /// crossover between the two reconstruction symbols, solving
    /// d2 * eta = d1
    pub eta: f64,
    /// coarse source code partition (source X, reconstruction U1)
    pub cs1: IndexPartition,
    /// nested source/channel pair for the fine symbol
    pub pair2: NestedCodePair,
    pub seed: u64,
    model: CascadeModel,
}

pub struct IbEncoding {
    pub message: HbMessage,
    pub u1: BitFrame,
    pub u2: BitFrame,
    /// transform-domain fine codeword, for block-error accounting
    pub k2: BitFrame,
}

pub struct IbDecoding {
    pub x_hat2: BitFrame,
    pub k2: BitFrame,
}

impl RegionIbCode {
    pub fn len(&self) -> usize {
        1usize << self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn msg1_rate(&self) -> f64 {
        self.cs1.info().len() as f64 / self.len() as f64
    }

    pub fn msg2_rate(&self) -> f64 {
        self.pair2.msg_rate()
    }

    pub fn designed_rate(&self) -> f64 {
        self.msg1_rate() + self.msg2_rate()
    }
}

/// Builds the nested codec: a coarse quantizer against the crossover-d1
/// test channel, a fine quantizer for the pair source (x, u1), and a
/// channel code for the degraded observation (y, u1), nested inside it.
pub fn design_region_ib(
    cfg: &DsbsConfig,
    n: u32,
    params: &ConstructionParams,
) -> Result<RegionIbCode> {
    match classify_region_binary(cfg)? {
        BinaryRegion::IB => {}
        other => {
            return Err(Error::Region(format!(
                "nested scheme requires the closed-form sub-region, config is {other}"
            )))
        }
    }
    params.validate()?;
    let len = 1usize << n;
    let model = CascadeModel::new(cfg)?;

    let cs1 =
        design_coarse_quantizer(cfg.d1, n, params, seed::derive(params.seed, STREAM_PROFILE1))?;

    // fine-level profiles share one set of sampled cascade contexts
    let (p, d2, eta, m) = (cfg.p, cfg.d2, model.eta, model.clone());
    let sampler = FnSampler::new(
        len,
        2,
        move |rng: &mut ChaCha8Rng, tracks: &mut [Vec<Pair>], truth: &mut [u8]| {
            for j in 0..len {
                let u2: u8 = rng.gen_range(0..2);
                let x = u2 ^ u8::from(rng.gen::<f64>() < d2);
                let u1 = u2 ^ u8::from(rng.gen::<f64>() < eta);
                let y = x ^ u8::from(rng.gen::<f64>() < p);
                truth[j] = u2;
                tracks[0][j] = m.observed_src(&[x], &[u1])[0];
                tracks[1][j] = m.observed_ch(&[y], &[u1])[0];
            }
        },
    );
    let mut params2 = *params;
    params2.seed = seed::derive(params.seed, STREAM_PROFILE2);
    let profiles = estimate_profiles(&sampler, &params2)?;
    let z_unc = BhattacharyyaProfile::constant(len, 1.0)?;
    let pair2 = design_nested_pair(
        &profiles[0],
        &profiles[1],
        &z_unc,
        &params2,
        &NestedTargets { src_info_rate: model.i_src, ch_info_rate: model.i_ch, shaping_rate: 0.0 },
    )?;

    Ok(RegionIbCode { cfg: *cfg, n, eta: model.eta, cs1, pair2, seed: params.seed, model })
}

/// The coarse quantizer shared by both schemes: a uniform source against a
/// symmetric test channel with the given crossover.
fn design_coarse_quantizer(
    crossover: f64,
    n: u32,
    params: &ConstructionParams,
    profile_seed: u64,
) -> Result<IndexPartition> {
    let len = 1usize << n;
    let sampler = FnSampler::new(
        len,
        1,
        move |rng: &mut ChaCha8Rng, tracks: &mut [Vec<Pair>], truth: &mut [u8]| {
            for j in 0..len {
                let u: u8 = rng.gen_range(0..2);
                let x = u ^ u8::from(rng.gen::<f64>() < crossover);
                truth[j] = u;
                tracks[0][j] = bsc_posteriors(&[x], crossover)[0];
            }
        },
    );
    let mut p = *params;
    p.seed = profile_seed;
    let profile = estimate_profiles(&sampler, &p)?.remove(0);
    let z_unc = BhattacharyyaProfile::constant(len, 1.0)?;
    let info_rate = 1.0 - binary_entropy(crossover)?;
    let targets = RankTargets::new(info_rate.clamp(0.0, 1.0), 0.0)?;
    build_partition(&profile, &z_unc, &p, Some(&targets))
}

fn quantize_coarse(
    cs1: &IndexPartition,
    crossover: f64,
    x: &BitFrame,
    code_seed: u64,
    frame_seed: u64,
) -> Result<(BitFrame, BitFrame)> {
    let observed = bsc_posteriors(x.as_slice(), crossover);
    let model = SequentialSourceModel::with_uniform_prior(observed)?;
    let fill =
        preshared_fill(seed::derive2(code_seed, frame_seed, STREAM_FILL1), cs1.frozen().len());
    let w = sc_quantize(&model, cs1, &fill, seed::derive2(code_seed, frame_seed, STREAM_RR1))?;
    let u1 = polar_transform(&w);
    Ok((w, u1))
}

fn reconstruct_coarse(
    cs1: &IndexPartition,
    msg1: &[u8],
    code_seed: u64,
    frame_seed: u64,
) -> Result<BitFrame> {
    if msg1.len() != cs1.info().len() {
        return Err(Error::InvalidInput(format!(
            "coarse message length {} does not match designed {}",
            msg1.len(),
            cs1.info().len()
        )));
    }
    let fill =
        preshared_fill(seed::derive2(code_seed, frame_seed, STREAM_FILL1), cs1.frozen().len());
    let mut w = vec![0u8; cs1.len()];
    for (&i, &b) in cs1.frozen().iter().zip(&fill) {
        w[i] = b;
    }
    for (&i, &b) in cs1.info().iter().zip(msg1) {
        w[i] = b;
    }
    // shaping positions of the coarse code are empty under a uniform prior
    for &i in cs1.shaping() {
        w[i] = 0;
    }
    Ok(polar_transform(&BitFrame::new(w)?))
}

pub fn encode_ib(code: &RegionIbCode, x: &BitFrame, frame_seed: u64) -> Result<IbEncoding> {
    if x.len() != code.len() {
        return Err(Error::InvalidInput(format!(
            "frame length {} does not match code length {}",
            x.len(),
            code.len()
        )));
    }
    let (w, u1) = quantize_coarse(&code.cs1, code.cfg.d1, x, code.seed, frame_seed)?;
    let msg1 = gather(w.as_slice(), code.cs1.info());

    let observed = code.model.observed_src(x.as_slice(), u1.as_slice());
    let model = SequentialSourceModel::with_uniform_prior(observed)?;
    let fill2 = preshared_fill(
        seed::derive2(code.seed, frame_seed, STREAM_FILL2),
        code.pair2.src.frozen().len(),
    );
    let k2 = sc_quantize(
        &model,
        &code.pair2.src,
        &fill2,
        seed::derive2(code.seed, frame_seed, STREAM_RR2),
    )?;
    let u2 = polar_transform(&k2);
    let msg2 = gather(k2.as_slice(), &code.pair2.msg);

    Ok(IbEncoding { message: HbMessage { frame_seed, msg1, msg2, msg3: Vec::new() }, u1, u2, k2 })
}

/// The uninformed decoder: deterministic transform of the pinned coarse
/// codeword; bit-exact against the encoder's coarse reconstruction.
pub fn decode1_ib(code: &RegionIbCode, message: &HbMessage) -> Result<BitFrame> {
    reconstruct_coarse(&code.cs1, &message.msg1, code.seed, message.frame_seed)
}

/// The informed decoder: recovers the coarse reconstruction, then
/// SC-decodes the fine codeword from (y, u1) with the transmitted bits
/// pinned.
pub fn decode2_ib(code: &RegionIbCode, message: &HbMessage, y: &BitFrame) -> Result<IbDecoding> {
    if y.len() != code.len() {
        return Err(Error::InvalidInput("side-information frame length mismatch".into()));
    }
    let u1 = decode1_ib(code, message)?;
    let observed = code.model.observed_ch(y.as_slice(), u1.as_slice());
    let model = SequentialSourceModel::with_uniform_prior(observed)?;
    let fill2 = preshared_fill(
        seed::derive2(code.seed, message.frame_seed, STREAM_FILL2),
        code.pair2.src.frozen().len(),
    );
    let roles = decode_roles(&code.pair2, &fill2, &message.msg2)?;
    let k2 = sc_decode(&model, &roles)?;
    let x_hat2 = polar_transform(&k2);
    Ok(IbDecoding { x_hat2, k2 })
}

/// The two-level codec for the entire non-degenerate region.
#[derive(Debug, Clone)]
pub struct TwoLevelCode {
    pub cfg: DsbsConfig,
    pub n: u32,
    /// optimizer-selected test-channel parameters
    pub params: HbParams,
    /// the minimized rate bound
    pub rate_bound: f64,
    pub cs1: IndexPartition,
    pub level_a: NestedCodePair,
    pub level_b: NestedCodePair,
    pub seed: u64,
    model: TernaryModel,
}

pub struct TwoLevelEncoding {
    pub message: HbMessage,
    pub u1: BitFrame,
    pub ua: BitFrame,
    pub ub: BitFrame,
    pub ka: BitFrame,
    pub wb: BitFrame,
}

pub struct TwoLevelDecoding {
    pub x_hat2: BitFrame,
    pub ka: BitFrame,
    pub wb: BitFrame,
}

impl TwoLevelCode {
    pub fn len(&self) -> usize {
        1usize << self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn designed_rate(&self) -> f64 {
        (self.cs1.info().len() + self.level_a.msg.len() + self.level_b.msg.len()) as f64
            / self.len() as f64
    }

    pub fn model(&self) -> &TernaryModel {
        &self.model
    }
}

/// Builds the two-level codec from the optimizer's test channel. The
/// second level's reliabilities are estimated against the realized output
/// of the first level's quantizer, not the ideal joint, so construction
/// reflects the operational chain.
pub fn design_region_i(
    cfg: &DsbsConfig,
    n: u32,
    params: &ConstructionParams,
) -> Result<TwoLevelCode> {
    match classify_region_binary(cfg)? {
        BinaryRegion::IA | BinaryRegion::IB => {}
        other => {
            return Err(Error::Region(format!(
                "two-level scheme requires the non-degenerate region, config is {other}"
            )))
        }
    }
    params.validate()?;
    let len = 1usize << n;
    let (hb_params, rate_bound) = minimize_s(cfg)?;
    let model = TernaryModel::new(table_joint(&hb_params, cfg)?);

    let cs1 = design_coarse_quantizer(
        model.d_xu1,
        n,
        params,
        seed::derive(params.seed, STREAM_PROFILE1),
    )?;

    // first level: contexts are ideal (x, u1) pairs from the joint
    let m = model.clone();
    let p = cfg.p;
    let sampler_a = FnSampler::new(
        len,
        3,
        move |rng: &mut ChaCha8Rng, tracks: &mut [Vec<Pair>], truth: &mut [u8]| {
            for j in 0..len {
                let (x, u1) = sample_xu1(&m, rng);
                let y = x ^ u8::from(rng.gen::<f64>() < p);
                let pa = m.pair_a_src(x, u1);
                let ua = u8::from(rng.gen::<f64>() >= pa[0]);
                truth[j] = ua;
                tracks[0][j] = pa;
                tracks[1][j] = m.observed_a_ch(&[y], &[u1])[0];
                tracks[2][j] = m.prior_a;
            }
        },
    );
    let mut params_a = *params;
    params_a.seed = seed::derive(params.seed, STREAM_PROFILE2);
    let prof_a = estimate_profiles(&sampler_a, &params_a)?;
    let level_a = design_nested_pair(
        &prof_a[0],
        &prof_a[1],
        &prof_a[2],
        &params_a,
        &NestedTargets {
            src_info_rate: model.ia_src,
            ch_info_rate: model.ia_ch,
            shaping_rate: (1.0 - model.ha).max(0.0),
        },
    )?;

    // second level: contexts take the realized first-level output by
    // running the just-built quantizer inside the sampling loop
    let m = model.clone();
    let la = level_a.clone();
    let sampler_b = FnSampler::new(
        len,
        3,
        move |rng: &mut ChaCha8Rng, tracks: &mut [Vec<Pair>], truth: &mut [u8]| {
            let mut x = vec![0u8; len];
            let mut u1 = vec![0u8; len];
            let mut y = vec![0u8; len];
            for j in 0..len {
                let (xj, u1j) = sample_xu1(&m, rng);
                x[j] = xj;
                u1[j] = u1j;
                y[j] = xj ^ u8::from(rng.gen::<f64>() < p);
            }
            let ka = quantize_level(
                &la,
                &m.observed_a_src(&x, &u1),
                m.prior_a,
                rng.gen(),
                rng.gen(),
            )
            .expect("first-level quantization during construction");
            let ua = polar_transform(&ka);
            for j in 0..len {
                let pb = m.pair_b_src(x[j], u1[j], ua[j]);
                truth[j] = u8::from(rng.gen::<f64>() >= pb[0]);
                tracks[0][j] = pb;
                tracks[1][j] = m.observed_b_ch(&[y[j]], &[u1[j]], &[ua[j]])[0];
                tracks[2][j] = m.prior_b;
            }
        },
    );
    let mut params_b = *params;
    params_b.seed = seed::derive(params.seed, STREAM_PROFILE_B);
    let prof_b = estimate_profiles(&sampler_b, &params_b)?;
    let level_b = design_nested_pair(
        &prof_b[0],
        &prof_b[1],
        &prof_b[2],
        &params_b,
        &NestedTargets {
            src_info_rate: model.ib_src,
            ch_info_rate: model.ib_ch,
            shaping_rate: (1.0 - model.hb).max(0.0),
        },
    )?;

    Ok(TwoLevelCode {
        cfg: *cfg,
        n,
        params: hb_params,
        rate_bound,
        cs1,
        level_a,
        level_b,
        seed: params.seed,
        model,
    })
}

fn sample_xu1(model: &TernaryModel, rng: &mut ChaCha8Rng) -> (u8, u8) {
    let r: f64 = rng.gen();
    let mut acc = 0.0;
    for x in 0..2usize {
        for u1 in 0..2usize {
            acc += model.p_xu1[x][u1];
            if r < acc {
                return (x as u8, u1 as u8);
            }
        }
    }
    (1, 1)
}

fn quantize_level(
    pair: &NestedCodePair,
    observed: &[Pair],
    prior: Pair,
    fill_seed: u64,
    rr_seed: u64,
) -> Result<BitFrame> {
    let model = SequentialSourceModel::new(observed.to_vec(), vec![prior; observed.len()])?;
    let fill = preshared_fill(fill_seed, pair.src.frozen().len());
    sc_quantize(&model, &pair.src, &fill, rr_seed)
}

fn decode_level(
    pair: &NestedCodePair,
    observed: &[Pair],
    prior: Pair,
    fill_seed: u64,
    msg: &[u8],
) -> Result<BitFrame> {
    let model = SequentialSourceModel::new(observed.to_vec(), vec![prior; observed.len()])?;
    let fill = preshared_fill(fill_seed, pair.src.frozen().len());
    let roles = decode_roles(pair, &fill, msg)?;
    sc_decode(&model, &roles)
}

pub fn encode_region_i(
    code: &TwoLevelCode,
    x: &BitFrame,
    frame_seed: u64,
) -> Result<TwoLevelEncoding> {
    if x.len() != code.len() {
        return Err(Error::InvalidInput("frame length mismatch".into()));
    }
    let (w, u1) = quantize_coarse(&code.cs1, code.model.d_xu1, x, code.seed, frame_seed)?;
    let msg1 = gather(w.as_slice(), code.cs1.info());

    let ka = quantize_level(
        &code.level_a,
        &code.model.observed_a_src(x.as_slice(), u1.as_slice()),
        code.model.prior_a,
        seed::derive2(code.seed, frame_seed, STREAM_FILL2),
        seed::derive2(code.seed, frame_seed, STREAM_RR2),
    )?;
    let ua = polar_transform(&ka);
    let msg2 = gather(ka.as_slice(), &code.level_a.msg);

    let wb = quantize_level(
        &code.level_b,
        &code.model.observed_b_src(x.as_slice(), u1.as_slice(), ua.as_slice()),
        code.model.prior_b,
        seed::derive2(code.seed, frame_seed, STREAM_FILL_B),
        seed::derive2(code.seed, frame_seed, STREAM_RR_B),
    )?;
    let ub = polar_transform(&wb);
    let msg3 = gather(wb.as_slice(), &code.level_b.msg);

    Ok(TwoLevelEncoding { message: HbMessage { frame_seed, msg1, msg2, msg3 }, u1, ua, ub, ka, wb })
}

/// The informed decoder: recovers the coarse reconstruction, SC-decodes
/// the two levels in order (the second conditioned on the decoded first),
/// and maps the ternary symbol to the reconstruction: the side-information
/// bit where the high level fires, the low-level symbol elsewhere.
pub fn decode2_region_i(
    code: &TwoLevelCode,
    message: &HbMessage,
    y: &BitFrame,
) -> Result<TwoLevelDecoding> {
    if y.len() != code.len() {
        return Err(Error::InvalidInput("side-information frame length mismatch".into()));
    }
    let u1 = reconstruct_coarse(&code.cs1, &message.msg1, code.seed, message.frame_seed)?;

    let ka = decode_level(
        &code.level_a,
        &code.model.observed_a_ch(y.as_slice(), u1.as_slice()),
        code.model.prior_a,
        seed::derive2(code.seed, message.frame_seed, STREAM_FILL2),
        &message.msg2,
    )?;
    let ua = polar_transform(&ka);

    let wb = decode_level(
        &code.level_b,
        &code.model.observed_b_ch(y.as_slice(), u1.as_slice(), ua.as_slice()),
        code.model.prior_b,
        seed::derive2(code.seed, message.frame_seed, STREAM_FILL_B),
        &message.msg3,
    )?;
    let ub = polar_transform(&wb);

    let bits: Vec<u8> = (0..code.len()).map(|j| if ub[j] == 1 { y[j] } else { ua[j] }).collect();
    Ok(TwoLevelDecoding { x_hat2: BitFrame::new(bits)?, ka, wb })
}

/// Verifies that the fine-to-coarse observation degradation is realized by
/// the memoryless side channel: composing the encoder-side test channel
/// with the (x -> y) kernel must reproduce the decoder-side test channel
/// entrywise. Returns the kernel.
pub fn degradation_witness(joint: &HbTestChannel) -> Result<[[f64; 2]; 2]> {
    let p = joint.p;
    let kernel = [[1.0 - p, p], [p, 1.0 - p]]; // kernel[x][y]
    let mut residual = 0.0f64;
    for u2 in 0..3u8 {
        let mass_u2 = joint.marginal_u2(u2);
        if mass_u2 <= 0.0 {
            continue;
        }
        for u1 in 0..2u8 {
            for y in 0..2u8 {
                let direct: f64 =
                    (0..2u8).map(|x| joint.mass_with_y(x, u1, u2, y)).sum::<f64>() / mass_u2;
                let composed: f64 = (0..2u8)
                    .map(|x| joint.mass(x, u1, u2) / mass_u2 * kernel[x as usize][y as usize])
                    .sum();
                residual = residual.max((direct - composed).abs());
            }
        }
    }
    if residual > 1e-10 {
        return Err(Error::DegradationViolation { residual });
    }
    Ok(kernel)
}
