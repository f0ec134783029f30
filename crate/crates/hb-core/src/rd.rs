//! Rate-distortion quantities for the two-decoder side-information problem.
//!
//! Covers the doubly-symmetric binary source (DSBS): binary entropy
//! machinery, the Wyner-Ziv gap function and its critical distortion, the
//! constrained minimization over ternary test channels that gives the
//! rate-distortion function on the whole non-degenerate region, the ternary
//! test-channel joint itself, and region classification. Also covers the
//! jointly Gaussian case, where every region has a closed form.
//!
//! All rates are in bits. Functions here are pure and safe to call
//! concurrently.

use crate::error::{Error, Result};

/// DSBS configuration: uniform X, side information Y = X xor Z with
/// P(Z=1) = p < 0.5, and distortion targets for the decoder without (D1)
/// and with (D2) side information.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DsbsConfig {
    pub p: f64,
    pub d1: f64,
    pub d2: f64,
}

impl DsbsConfig {
    pub fn new(p: f64, d1: f64, d2: f64) -> Result<Self> {
        if !(p > 0.0 && p < 0.5) {
            return Err(Error::InvalidInput(format!("p = {p} must lie in (0, 0.5)")));
        }
        if !(0.0..=1.0).contains(&d1) {
            return Err(Error::InvalidInput(format!("d1 = {d1} must lie in [0, 1]")));
        }
        if d2 < 0.0 {
            return Err(Error::InvalidInput(format!("d2 = {d2} must be nonnegative")));
        }
        Ok(Self { p, d1, d2 })
    }
}

/// Parameters of the ternary forward test channel: crossovers alpha and mu
/// in [0, p], time-sharing weights 0 <= theta1 <= theta <= 1, and the
/// induced gamma in [p, 1-p].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HbParams {
    pub alpha: f64,
    pub mu: f64,
    pub theta: f64,
    pub theta1: f64,
}

/// Binary entropy h(u) = -u log2 u - (1-u) log2 (1-u), with h(0) = h(1) = 0.
pub fn binary_entropy(u: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&u) {
        return Err(Error::InvalidInput(format!("entropy argument {u} outside [0,1]")));
    }
    Ok(binary_entropy_unchecked(u))
}

#[inline]
pub(crate) fn binary_entropy_unchecked(u: f64) -> f64 {
    if u <= 0.0 || u >= 1.0 {
        return 0.0;
    }
    -u * u.log2() - (1.0 - u) * (1.0 - u).log2()
}

/// Binary convolution p*u = p(1-u) + u(1-p), the crossover of two cascaded
/// symmetric channels. Symmetric in its arguments.
pub fn bconv(p: f64, u: f64) -> Result<f64> {
    for v in [p, u] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::InvalidInput(format!("convolution argument {v} outside [0,1]")));
        }
    }
    Ok(bconv_unchecked(p, u))
}

#[inline]
pub(crate) fn bconv_unchecked(p: f64, u: f64) -> f64 {
    p * (1.0 - u) + u * (1.0 - p)
}

/// The Wyner-Ziv gap G(u) = h(p*u) - h(u) for a fixed side-channel
/// crossover p.
pub fn wz_gap(u: f64, p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&u) {
        return Err(Error::InvalidInput(format!("gap argument {u} outside [0,1]")));
    }
    Ok(binary_entropy_unchecked(bconv_unchecked(p, u)) - binary_entropy_unchecked(u))
}

/// Analytic derivative of the gap function,
/// G'(u) = (1-2p) log2((1-p*u)/(p*u)) - log2((1-u)/u).
/// Diverges to -inf as u -> 0+.
pub fn wz_gap_derivative(u: f64, p: f64) -> f64 {
    let v = bconv_unchecked(p, u);
    (1.0 - 2.0 * p) * ((1.0 - v) / v).log2() - ((1.0 - u) / u).log2()
}

/// The critical distortion d_c in (0, p): the tangency point
/// G(d_c)/(d_c - p) = G'(d_c), found by bisection on
/// t(d) = G(d) - (d - p) G'(d) with the analytic derivative.
pub fn critical_distortion(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 0.5) {
        return Err(Error::InvalidInput(format!("p = {p} must lie in (0, 0.5)")));
    }
    let t = |d: f64| wz_gap(d, p).unwrap() - (d - p) * wz_gap_derivative(d, p);
    let mut lo = 1e-9;
    let mut hi = p - 1e-9;
    let (tlo, thi) = (t(lo), t(hi));
    if tlo.signum() == thi.signum() {
        return Err(Error::Numerical(format!(
            "no sign change for critical distortion bracket at p = {p}"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if t(mid).signum() == tlo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    let dc = 0.5 * (lo + hi);
    let residual = wz_gap(dc, p)? / (dc - p) - wz_gap_derivative(dc, p);
    if residual.abs() > 1e-10 {
        return Err(Error::Numerical(format!(
            "critical distortion residual {residual} exceeds 1e-10"
        )));
    }
    Ok(dc)
}

/// Binary region tags. Region I is non-degenerate; I-B is its closed-form
/// sub-region. II degenerates to Wyner-Ziv coding for the informed decoder,
/// III to plain lossy compression for the uninformed one, and IV needs no
/// coding at all.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryRegion {
    IA,
    IB,
    II,
    III,
    IV,
}

impl std::fmt::Display for BinaryRegion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            BinaryRegion::IA => "I-A",
            BinaryRegion::IB => "I-B",
            BinaryRegion::II => "II",
            BinaryRegion::III => "III",
            BinaryRegion::IV => "IV",
        };
        f.write_str(s)
    }
}

/// Classifies a DSBS distortion pair. Evaluation order I, II, III, IV with
/// the printed weak/strict inequalities, so every point maps to exactly one
/// region.
pub fn classify_region_binary(cfg: &DsbsConfig) -> Result<BinaryRegion> {
    let DsbsConfig { p, d1, d2 } = *cfg;
    if d1 < 0.5 && d2 < d1.min(p) {
        let dc = critical_distortion(p)?;
        return Ok(if d2 <= dc.min(d1) { BinaryRegion::IB } else { BinaryRegion::IA });
    }
    if d1 >= 0.5 && d2 <= p {
        return Ok(BinaryRegion::II);
    }
    if d1 <= 0.5 && d2 >= d1.min(p) {
        return Ok(BinaryRegion::III);
    }
    Ok(BinaryRegion::IV)
}

/// Closed-form rate 1 - h(D1*p) + G(D2) on Region I-B.
pub fn hbrdf_binary_ib(cfg: &DsbsConfig) -> Result<f64> {
    match classify_region_binary(cfg)? {
        BinaryRegion::IB => {}
        other => {
            return Err(Error::Region(format!(
                "closed form requires Region I-B, config classifies as {other}"
            )))
        }
    }
    Ok(1.0 - binary_entropy_unchecked(bconv_unchecked(cfg.d1, cfg.p)) + wz_gap(cfg.d2, cfg.p)?)
}

/// The induced crossover gamma: (D1 - (theta-theta1)(1-alpha) - theta1*mu)
/// / (1-theta) for theta != 1, and 0.5 at theta = 1.
pub fn gamma_of(params: &HbParams, cfg: &DsbsConfig) -> f64 {
    if params.theta >= 1.0 {
        0.5
    } else {
        (cfg.d1
            - (params.theta - params.theta1) * (1.0 - params.alpha)
            - params.theta1 * params.mu)
            / (1.0 - params.theta)
    }
}

const DOMAIN_TOL: f64 = 1e-9;

fn check_params_domain(params: &HbParams, cfg: &DsbsConfig) -> Result<f64> {
    let HbParams { alpha, mu, theta, theta1 } = *params;
    let p = cfg.p;
    let ok = (0.0 - DOMAIN_TOL..=theta + DOMAIN_TOL).contains(&theta1)
        && (0.0 - DOMAIN_TOL..=1.0 + DOMAIN_TOL).contains(&theta)
        && (-DOMAIN_TOL..=p + DOMAIN_TOL).contains(&alpha)
        && (-DOMAIN_TOL..=p + DOMAIN_TOL).contains(&mu);
    if !ok {
        return Err(Error::InfeasibleParameter(format!("{params:?} outside the admissible box")));
    }
    let gamma = gamma_of(params, cfg);
    if !(p - DOMAIN_TOL..=1.0 - p + DOMAIN_TOL).contains(&gamma) {
        return Err(Error::InfeasibleParameter(format!(
            "gamma = {gamma} outside [p, 1-p] = [{p}, {}]",
            1.0 - p
        )));
    }
    Ok(gamma)
}

/// The objective 1 - h(D1*p) + (theta-theta1) G(alpha) + theta1 G(mu)
/// + (1-theta) G(gamma). Errors if gamma leaves [p, 1-p].
pub fn s_d1(params: &HbParams, cfg: &DsbsConfig) -> Result<f64> {
    let gamma = check_params_domain(params, cfg)?;
    let p = cfg.p;
    Ok(1.0 - binary_entropy_unchecked(bconv_unchecked(cfg.d1, p))
        + (params.theta - params.theta1) * wz_gap(params.alpha.clamp(0.0, p), p)?
        + params.theta1 * wz_gap(params.mu.clamp(0.0, p), p)?
        + (1.0 - params.theta) * wz_gap(gamma.clamp(p, 1.0 - p), p)?)
}

/// Distortion carried by the ternary reconstruction map:
/// (theta-theta1) alpha + theta1 mu + (1-theta) p. Equals D2 for feasible
/// optimizer output.
pub fn d2_of(params: &HbParams, p: f64) -> f64 {
    (params.theta - params.theta1) * params.alpha
        + params.theta1 * params.mu
        + (1.0 - params.theta) * p
}

/// Minimizes the objective over the admissible box subject to the equality
/// constraint on D2. Grid seeding resolves mu from the constraint, then
/// coordinate refinement shrinks steps to relative tolerance 1e-6.
///
/// Defined on Region I: 0 <= D1 < 0.5, 0 <= D2 < min(D1, p).
pub fn minimize_s(cfg: &DsbsConfig) -> Result<(HbParams, f64)> {
    let p = cfg.p;
    if !(cfg.d1 < 0.5 && cfg.d2 < cfg.d1.min(p)) {
        return Err(Error::Region(format!(
            "({}, {}) is outside the non-degenerate region",
            cfg.d1, cfg.d2
        )));
    }

    // For fixed (theta, theta1, alpha), the constraint pins mu; theta1 = 0
    // leaves mu free (set it to 0).
    let resolve = |theta: f64, theta1: f64, alpha: f64| -> Option<HbParams> {
        let rem = cfg.d2 - (theta - theta1) * alpha - (1.0 - theta) * p;
        let mu = if theta1 > 1e-12 {
            rem / theta1
        } else if rem.abs() <= 1e-9 {
            0.0
        } else {
            return None;
        };
        if !(-DOMAIN_TOL..=p + DOMAIN_TOL).contains(&mu) {
            return None;
        }
        let params = HbParams { alpha, mu: mu.clamp(0.0, p), theta, theta1 };
        check_params_domain(&params, cfg).ok().map(|_| params)
    };

    let mut best: Option<(HbParams, f64)> = None;
    let mut consider = |params: HbParams, value: f64| {
        if best.map_or(true, |(_, v)| value < v) {
            best = Some((params, value));
        }
    };

    let grid = 48usize;
    for it in 0..=grid {
        let theta = it as f64 / grid as f64;
        for it1 in 0..=it {
            let theta1 = it1 as f64 / grid as f64;
            for ia in 0..=grid {
                let alpha = p * ia as f64 / grid as f64;
                if let Some(params) = resolve(theta, theta1, alpha) {
                    if let Ok(v) = s_d1(&params, cfg) {
                        consider(params, v);
                    }
                }
            }
        }
    }
    let (mut params, mut value) = best.ok_or_else(|| {
        Error::Region(format!("empty feasible set for ({}, {})", cfg.d1, cfg.d2))
    })?;

    // Coordinate refinement on (theta, theta1, alpha) with mu resolved from
    // the constraint at every probe.
    let mut step = 1.0 / grid as f64;
    while step > 1e-7 {
        let mut improved = true;
        while improved {
            improved = false;
            let probes = [
                (params.theta + step, params.theta1, params.alpha),
                (params.theta - step, params.theta1, params.alpha),
                (params.theta, params.theta1 + step, params.alpha),
                (params.theta, params.theta1 - step, params.alpha),
                (params.theta, params.theta1, params.alpha + step * p),
                (params.theta, params.theta1, params.alpha - step * p),
            ];
            for (t, t1, a) in probes {
                let t = t.clamp(0.0, 1.0);
                let t1 = t1.clamp(0.0, t);
                let a = a.clamp(0.0, p);
                if let Some(cand) = resolve(t, t1, a) {
                    if let Ok(v) = s_d1(&cand, cfg) {
                        if v < value - 1e-15 {
                            params = cand;
                            value = v;
                            improved = true;
                        }
                    }
                }
            }
        }
        step *= 0.5;
    }

    debug_assert!((d2_of(&params, p) - cfg.d2).abs() < 1e-9);
    Ok((params, value))
}

/// Joint pmf over (x, u1, u2) with x, u1 binary and u2 ternary, following
/// the optimal ternary test channel, with an extension of the joint by the
/// side information y through a symmetric channel of crossover p.
#[derive(Debug, Clone)]
pub struct HbTestChannel {
    /// joint[u2][u1][x]
    joint: [[[f64; 2]; 2]; 3],
    pub p: f64,
}

/// Builds the 12-entry ternary test-channel joint from feasible parameters.
pub fn table_joint(params: &HbParams, cfg: &DsbsConfig) -> Result<HbTestChannel> {
    let gamma = check_params_domain(params, cfg)?;
    let HbParams { alpha, mu, theta, theta1 } = *params;
    let ts = theta - theta1;
    let to = 1.0 - theta;
    // joint[u2][ (u1, x) ] with the row layout (0,0), (0,1), (1,0), (1,1)
    let rows = [
        [0.5 * theta1 * (1.0 - mu), 0.5 * theta1 * mu, 0.5 * ts * (1.0 - alpha), 0.5 * ts * alpha],
        [0.5 * ts * alpha, 0.5 * ts * (1.0 - alpha), 0.5 * theta1 * mu, 0.5 * theta1 * (1.0 - mu)],
        [0.5 * to * (1.0 - gamma), 0.5 * to * gamma, 0.5 * to * gamma, 0.5 * to * (1.0 - gamma)],
    ];
    let mut joint = [[[0.0; 2]; 2]; 3];
    for (u2, row) in rows.iter().enumerate() {
        for (idx, &m) in row.iter().enumerate() {
            if m < -1e-12 {
                return Err(Error::InfeasibleParameter(format!(
                    "negative mass {m} at (u2={u2}, row {idx})"
                )));
            }
            let u1 = idx / 2;
            let x = idx % 2;
            joint[u2][u1][x] = m.max(0.0);
        }
    }
    Ok(HbTestChannel { joint, p: cfg.p })
}

impl HbTestChannel {
    /// The two-channel cascade joint: a uniform binary symbol u2 feeds the
    /// source through crossover d2 and the coarse reconstruction through
    /// crossover eta; the ternary value carries no mass. `p` extends the
    /// joint by the side information and may be zero here.
    pub fn from_cascade(p: f64, d2: f64, eta: f64) -> Self {
        let flip = |c: f64, differs: bool| if differs { c } else { 1.0 - c };
        let mut joint = [[[0.0; 2]; 2]; 3];
        for u2 in 0..2usize {
            for u1 in 0..2usize {
                for x in 0..2usize {
                    joint[u2][u1][x] =
                        0.5 * flip(d2, x != u2) * flip(eta, u1 != u2);
                }
            }
        }
        Self { joint, p }
    }

    pub fn mass(&self, x: u8, u1: u8, u2: u8) -> f64 {
        self.joint[u2 as usize][u1 as usize][x as usize]
    }

    /// Joint including y, via P(y|x) symmetric with crossover p.
    pub fn mass_with_y(&self, x: u8, u1: u8, u2: u8, y: u8) -> f64 {
        let flip = if x == y { 1.0 - self.p } else { self.p };
        self.mass(x, u1, u2) * flip
    }

    pub fn total_mass(&self) -> f64 {
        let mut s = 0.0;
        for u2 in 0..3 {
            for u1 in 0..2 {
                for x in 0..2 {
                    s += self.joint[u2][u1][x];
                }
            }
        }
        s
    }

    pub fn marginal_u2(&self, u2: u8) -> f64 {
        let mut s = 0.0;
        for u1 in 0..2 {
            for x in 0..2 {
                s += self.joint[u2 as usize][u1][x];
            }
        }
        s
    }

    pub fn marginal_x(&self, x: u8) -> f64 {
        let mut s = 0.0;
        for u2 in 0..3 {
            for u1 in 0..2 {
                s += self.joint[u2][u1][x as usize];
            }
        }
        s
    }

    /// Expected Hamming distortion of the informed decoder's reconstruction
    /// map: u2 itself when u2 is binary, the side information y otherwise.
    pub fn expected_distortion_decoder2(&self) -> f64 {
        let mut d = 0.0;
        for u2 in 0..3u8 {
            for u1 in 0..2u8 {
                for x in 0..2u8 {
                    for y in 0..2u8 {
                        let m = self.mass_with_y(x, u1, u2, y);
                        let rec = if u2 < 2 { u2 } else { y };
                        if rec != x {
                            d += m;
                        }
                    }
                }
            }
        }
        d
    }

    /// Expected Hamming distortion of the uninformed decoder (reconstruction
    /// u1).
    pub fn expected_distortion_decoder1(&self) -> f64 {
        let mut d = 0.0;
        for u2 in 0..3 {
            for u1 in 0..2 {
                for x in 0..2 {
                    if u1 != x {
                        d += self.joint[u2][u1][x];
                    }
                }
            }
        }
        d
    }
}

/// Gaussian configuration: X ~ N(0, sigma_x2), Y = X + Z with
/// Z ~ N(0, sigma_z2), squared-error distortion targets D1 and D2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianHbConfig {
    pub sigma_x2: f64,
    pub sigma_z2: f64,
    pub d1: f64,
    pub d2: f64,
}

impl GaussianHbConfig {
    pub fn new(sigma_x2: f64, sigma_z2: f64, d1: f64, d2: f64) -> Result<Self> {
        if sigma_x2 <= 0.0 || sigma_z2 <= 0.0 || d1 <= 0.0 || d2 <= 0.0 {
            return Err(Error::InvalidInput(
                "variances and distortions must be positive".into(),
            ));
        }
        Ok(Self { sigma_x2, sigma_z2, d1, d2 })
    }

    /// The boundary D1 sigma_z2 / (D1 + sigma_z2) separating the
    /// non-degenerate region from the lossy-only one.
    pub fn d2_boundary(&self) -> f64 {
        self.d1 * self.sigma_z2 / (self.d1 + self.sigma_z2)
    }
}

/// Gaussian region tags.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GaussianRegion {
    /// Both distortion constraints bind; rate given by the two-decoder
    /// closed form.
    Nondegenerate,
    /// Only the uninformed decoder binds; plain lossy compression.
    LossyOnly,
    /// Only the informed decoder binds; Wyner-Ziv coding.
    WynerZiv,
    /// Neither constraint binds.
    NoCoding,
}

impl std::fmt::Display for GaussianRegion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            GaussianRegion::Nondegenerate => "nondegenerate",
            GaussianRegion::LossyOnly => "lossy-only",
            GaussianRegion::WynerZiv => "wyner-ziv",
            GaussianRegion::NoCoding => "no-coding",
        };
        f.write_str(s)
    }
}

pub fn classify_region_gaussian(gcfg: &GaussianHbConfig) -> GaussianRegion {
    let boundary = gcfg.d2_boundary();
    match (gcfg.d1 <= gcfg.sigma_x2, gcfg.d2 <= boundary) {
        (true, true) => GaussianRegion::Nondegenerate,
        (true, false) => GaussianRegion::LossyOnly,
        (false, true) => GaussianRegion::WynerZiv,
        (false, false) => GaussianRegion::NoCoding,
    }
}

/// Gaussian rate-distortion function across all regions:
/// 0.5 log2(sigma_x2 sigma_z2 / (D2 (D1 + sigma_z2))) when non-degenerate,
/// and the matching degenerate closed forms otherwise.
pub fn hbrdf_gaussian(gcfg: &GaussianHbConfig) -> f64 {
    match classify_region_gaussian(gcfg) {
        GaussianRegion::Nondegenerate => 0.5
            * (gcfg.sigma_x2 * gcfg.sigma_z2 / (gcfg.d2 * (gcfg.d1 + gcfg.sigma_z2))).log2(),
        GaussianRegion::LossyOnly => 0.5 * (gcfg.sigma_x2 / gcfg.d1).log2(),
        GaussianRegion::WynerZiv => 0.5
            * (gcfg.sigma_x2 * gcfg.sigma_z2 / (gcfg.d2 * (gcfg.sigma_x2 + gcfg.sigma_z2)))
                .log2(),
        GaussianRegion::NoCoding => 0.0,
    }
}

/// Binary rate-distortion function across all regions. Region I uses the
/// closed form on I-B and the optimizer elsewhere; Region II is Wyner-Ziv
/// (gap function below the critical distortion, its tangent segment above);
/// Region III is plain lossy compression; Region IV is free.
pub fn hbrdf_binary(cfg: &DsbsConfig) -> Result<f64> {
    match classify_region_binary(cfg)? {
        BinaryRegion::IB => hbrdf_binary_ib(cfg),
        BinaryRegion::IA => minimize_s(cfg).map(|(_, v)| v),
        BinaryRegion::II => {
            let dc = critical_distortion(cfg.p)?;
            if cfg.d2 <= dc {
                wz_gap(cfg.d2, cfg.p)
            } else if cfg.d2 >= cfg.p {
                Ok(0.0)
            } else {
                // tangent segment: time sharing with the zero-rate point (p, 0)
                Ok(wz_gap(dc, cfg.p)? * (cfg.p - cfg.d2) / (cfg.p - dc))
            }
        }
        BinaryRegion::III => Ok(1.0 - binary_entropy_unchecked(cfg.d1)),
        BinaryRegion::IV => Ok(0.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cfg(p: f64, d1: f64, d2: f64) -> DsbsConfig {
        DsbsConfig::new(p, d1, d2).unwrap()
    }

    #[test]
    fn entropy_anchors() {
        assert_eq!(binary_entropy(0.5).unwrap(), 1.0);
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        // h(0.11) evaluated independently at 30-digit precision
        let expect = 0.499915958164527995640499594130;
        assert!((binary_entropy(0.11).unwrap() - expect).abs() < 1e-14);
        assert!(binary_entropy(-0.1).is_err());
        assert!(binary_entropy(1.1).is_err());
    }

    #[test]
    fn bconv_anchors() {
        for p in [0.0, 0.2, 0.45, 1.0] {
            assert!((bconv(p, 0.5).unwrap() - 0.5).abs() < 1e-15);
            assert!((bconv(p, 0.0).unwrap() - p).abs() < 1e-15);
        }
        // 0.35*0.6 + 0.4*0.65 by hand
        assert!((bconv(0.35, 0.4).unwrap() - 0.47).abs() < 1e-15);
        // symmetric in arguments
        assert_eq!(bconv(0.13, 0.29).unwrap(), bconv(0.29, 0.13).unwrap());
        assert!(bconv(-0.2, 0.4).is_err());
    }

    #[test]
    fn gap_anchors() {
        let p = 0.4;
        assert!(wz_gap(0.5, p).unwrap().abs() < 1e-15);
        assert!((wz_gap(0.0, p).unwrap() - binary_entropy(p).unwrap()).abs() < 1e-15);
        let expect = binary_entropy(0.42).unwrap() - binary_entropy(0.1).unwrap();
        assert!((wz_gap(0.1, p).unwrap() - expect).abs() < 1e-14);
        // nonnegative on [0, 0.5], zero only at 0.5
        for i in 0..=50 {
            let u = 0.5 * i as f64 / 50.0;
            let g = wz_gap(u, p).unwrap();
            if u < 0.5 {
                assert!(g > 0.0, "G({u}) = {g}");
            }
        }
    }

    #[test]
    fn gap_derivative_matches_finite_differences() {
        let p = 0.3;
        for &u in &[0.05, 0.1, 0.2, 0.4, 0.6] {
            let h = 1e-6;
            let fd = (wz_gap(u + h, p).unwrap() - wz_gap(u - h, p).unwrap()) / (2.0 * h);
            assert!(
                (wz_gap_derivative(u, p) - fd).abs() < 1e-5,
                "u = {u}: analytic {} vs fd {fd}",
                wz_gap_derivative(u, p)
            );
        }
    }

    #[test]
    fn critical_distortion_solves_tangency() {
        for &p in &[0.1, 0.25, 0.4] {
            let dc = critical_distortion(p).unwrap();
            assert!(dc > 0.0 && dc < p, "d_c({p}) = {dc}");
            let residual = wz_gap(dc, p).unwrap() / (dc - p) - wz_gap_derivative(dc, p);
            assert!(residual.abs() < 1e-9, "residual {residual}");
        }
    }

    #[test]
    fn critical_distortion_matches_scan() {
        // brute-force sign-change scan of t(d) at step 1e-6
        let p = 0.4;
        let t = |d: f64| wz_gap(d, p).unwrap() - (d - p) * wz_gap_derivative(d, p);
        let mut scan = None;
        let mut d = 1e-6;
        let mut prev = t(d);
        while d < p - 1e-6 {
            let next = t(d + 1e-6);
            if prev.signum() != next.signum() {
                scan = Some(d + 0.5e-6);
                break;
            }
            prev = next;
            d += 1e-6;
        }
        let dc = critical_distortion(p).unwrap();
        assert!((dc - scan.expect("scan found no root")).abs() < 2e-6);
    }

    #[test]
    fn region_classification() {
        assert_eq!(classify_region_binary(&cfg(0.4, 0.6, 0.3)).unwrap(), BinaryRegion::II);
        assert_eq!(classify_region_binary(&cfg(0.4, 0.3, 0.35)).unwrap(), BinaryRegion::III);
        assert_eq!(classify_region_binary(&cfg(0.4, 0.6, 0.45)).unwrap(), BinaryRegion::IV);
        assert_eq!(classify_region_binary(&cfg(0.4, 0.35, 0.1)).unwrap(), BinaryRegion::IB);
        // above d_c but below min(D1, p): I-A
        let dc = critical_distortion(0.4).unwrap();
        assert_eq!(
            classify_region_binary(&cfg(0.4, 0.35, (dc + 0.35) / 2.0)).unwrap(),
            BinaryRegion::IA
        );
    }

    #[test]
    fn every_point_maps_to_exactly_one_region() {
        let p = 0.3;
        for i in 0..=40 {
            for j in 0..=40 {
                let d1 = 0.8 * i as f64 / 40.0;
                let d2 = 0.6 * j as f64 / 40.0;
                let c = DsbsConfig { p, d1, d2 };
                // classify never fails and is a total function
                classify_region_binary(&c).unwrap();
            }
        }
    }

    #[test]
    fn closed_form_anchor() {
        // 1 - h(0.47) + h(0.42) - h(0.1) at (p, D1, D2) = (0.4, 0.35, 0.1)
        let r = hbrdf_binary_ib(&cfg(0.4, 0.35, 0.1)).unwrap();
        let expect = 1.0 - binary_entropy(0.47).unwrap() + binary_entropy(0.42).unwrap()
            - binary_entropy(0.1).unwrap();
        assert!((r - expect).abs() < 1e-12);
        // 30-digit reference evaluation of the same expression
        assert!((r - 0.515056712876632757).abs() < 1e-14);
        // above the critical distortion the closed form does not apply
        assert!(hbrdf_binary_ib(&cfg(0.4, 0.35, 0.33)).is_err());
    }

    #[test]
    fn collapsed_params_reproduce_closed_form() {
        let c = cfg(0.4, 0.35, 0.1);
        let params = HbParams { alpha: 0.0, mu: 0.1, theta: 1.0, theta1: 1.0 };
        let s = s_d1(&params, &c).unwrap();
        let closed = hbrdf_binary_ib(&c).unwrap();
        assert!((s - closed).abs() < 1e-12);
        assert_eq!(gamma_of(&HbParams { alpha: 0.0, mu: 0.0, theta: 1.0, theta1: 0.5 }, &c), 0.5);
    }

    #[test]
    fn optimizer_matches_closed_form_in_region_ib() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut checked = 0;
        while checked < 10 {
            let p = rng.gen_range(0.15..0.45);
            let d1 = rng.gen_range(0.05..0.49);
            let dc = critical_distortion(p).unwrap();
            let hi = dc.min(d1);
            if hi < 0.02 {
                continue;
            }
            let d2 = rng.gen_range(0.01..hi.min(d1 * 0.95));
            let c = cfg(p, d1, d2);
            if classify_region_binary(&c).unwrap() != BinaryRegion::IB {
                continue;
            }
            let (params, v) = minimize_s(&c).unwrap();
            let closed = hbrdf_binary_ib(&c).unwrap();
            assert!(
                (v - closed).abs() <= 1e-4,
                "({p}, {d1}, {d2}): optimizer {v} vs closed form {closed} ({params:?})"
            );
            checked += 1;
        }
    }

    #[test]
    fn optimizer_feasibility_and_dominance() {
        let c = cfg(0.4, 0.35, 0.25);
        let (params, v) = minimize_s(&c).unwrap();
        assert!((d2_of(&params, c.p) - c.d2).abs() < 1e-9);
        check_params_domain(&params, &c).unwrap();
        // random feasible points never beat the minimized value
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut tried = 0;
        while tried < 1000 {
            let theta = rng.gen_range(0.0..1.0f64);
            let theta1 = rng.gen_range(0.0..theta);
            let alpha = rng.gen_range(0.0..c.p);
            let rem = c.d2 - (theta - theta1) * alpha - (1.0 - theta) * c.p;
            if theta1 < 1e-9 {
                continue;
            }
            let mu = rem / theta1;
            let params = HbParams { alpha, mu, theta, theta1 };
            if check_params_domain(&params, &c).is_err() || !(0.0..=c.p).contains(&mu) {
                continue;
            }
            let s = s_d1(&params, &c).unwrap();
            assert!(s >= v - 1e-9, "{s} < minimum {v}");
            tried += 1;
        }
    }

    #[test]
    fn optimizer_continuity_at_region_boundary() {
        // rate approaches the degenerate lossy-only value as D2 -> min(D1, p)
        let p = 0.4;
        let d1 = 0.3; // min(D1, p) = D1: boundary value is 1 - h(D1)
        let boundary = 1.0 - binary_entropy(d1).unwrap();
        let mut prev_gap = f64::INFINITY;
        for &eps in &[0.02, 0.01, 0.005] {
            let c = cfg(p, d1, d1 - eps);
            let (_, v) = minimize_s(&c).unwrap();
            let gap = (v - boundary).abs();
            assert!(gap < prev_gap + 1e-9, "gap {gap} did not shrink (prev {prev_gap})");
            prev_gap = gap;
        }
        assert!(prev_gap < 0.02, "boundary gap {prev_gap} too large");
    }

    #[test]
    fn table_joint_properties() {
        // a point above the critical distortion, where the optimum keeps
        // the ternary symbol active (theta < 1)
        let c = cfg(0.4, 0.35, 0.33);
        let (params, _) = minimize_s(&c).unwrap();
        assert!(params.theta < 1.0 - 1e-6, "expected interior theta, got {params:?}");
        let j = table_joint(&params, &c).unwrap();
        assert!((j.total_mass() - 1.0).abs() < 1e-12);
        assert!((j.marginal_u2(2) - (1.0 - params.theta)).abs() < 1e-9);
        assert!((j.marginal_x(0) - 0.5).abs() < 1e-12);
        assert!((j.marginal_x(1) - 0.5).abs() < 1e-12);
        // reconstruction maps reproduce both distortion targets; the
        // decoder-1 identity is carried by the gamma formula when theta < 1
        assert!((j.expected_distortion_decoder2() - c.d2).abs() < 1e-9);
        assert!((j.expected_distortion_decoder1() - c.d1).abs() < 1e-9);

        // at theta = 1 the ternary symbol collapses and decoder 1 does
        // strictly better than its target
        let cb = cfg(0.4, 0.35, 0.1);
        let collapsed = HbParams { alpha: 0.0, mu: 0.1, theta: 1.0, theta1: 1.0 };
        let jb = table_joint(&collapsed, &cb).unwrap();
        assert!((jb.expected_distortion_decoder2() - cb.d2).abs() < 1e-9);
        assert!(jb.expected_distortion_decoder1() <= cb.d1 + 1e-9);
    }

    #[test]
    fn gaussian_regions_and_rate() {
        let g = GaussianHbConfig::new(1.0, 1.0, 0.5, 0.2).unwrap();
        assert_eq!(classify_region_gaussian(&g), GaussianRegion::Nondegenerate);
        let r = hbrdf_gaussian(&g);
        assert!((r - 0.5 * (1.0f64 / 0.3).log2()).abs() < 1e-12);
        assert!((r - 0.8685).abs() < 1e-3);

        let lossy = GaussianHbConfig::new(1.0, 1.0, 0.5, 0.4).unwrap();
        assert_eq!(classify_region_gaussian(&lossy), GaussianRegion::LossyOnly);
        let wz = GaussianHbConfig::new(1.0, 1.0, 1.5, 0.3).unwrap();
        assert_eq!(classify_region_gaussian(&wz), GaussianRegion::WynerZiv);
        let free = GaussianHbConfig::new(1.0, 1.0, 1.5, 0.9).unwrap();
        assert_eq!(classify_region_gaussian(&free), GaussianRegion::NoCoding);
    }

    #[test]
    fn gaussian_boundary_continuity_and_monotonicity() {
        // at D1 = sigma_x2 the non-degenerate form equals the Wyner-Ziv form
        let g = GaussianHbConfig::new(1.0, 2.0, 1.0, 0.3).unwrap();
        let eq2 = 0.5 * (g.sigma_x2 * g.sigma_z2 / (g.d2 * (g.d1 + g.sigma_z2))).log2();
        let wz = 0.5 * (g.sigma_x2 * g.sigma_z2 / (g.d2 * (g.sigma_x2 + g.sigma_z2))).log2();
        assert!((eq2 - wz).abs() < 1e-12);

        // decreasing in both distortions on a non-degenerate grid
        let mut prev = f64::INFINITY;
        for i in 1..10 {
            let d1 = 0.1 * i as f64;
            let g = GaussianHbConfig::new(1.0, 1.0, d1, 0.05).unwrap();
            let r = hbrdf_gaussian(&g);
            assert!(r < prev);
            prev = r;
        }
        let mut prev = f64::INFINITY;
        for j in 1..10 {
            let d2 = 0.02 * j as f64;
            let g = GaussianHbConfig::new(1.0, 1.0, 0.5, d2).unwrap();
            if classify_region_gaussian(&g) != GaussianRegion::Nondegenerate {
                break;
            }
            let r = hbrdf_gaussian(&g);
            assert!(r < prev);
            prev = r;
        }
    }

    #[test]
    fn binary_rate_degenerate_regions() {
        // Region II at D2 below d_c equals the gap function
        let c = cfg(0.4, 0.7, 0.1);
        assert!((hbrdf_binary(&c).unwrap() - wz_gap(0.1, 0.4).unwrap()).abs() < 1e-12);
        // Region III equals plain lossy compression
        let c = cfg(0.4, 0.3, 0.35);
        assert!((hbrdf_binary(&c).unwrap() - (1.0 - binary_entropy(0.3).unwrap())).abs() < 1e-12);
        // Region IV is free
        let c = cfg(0.4, 0.7, 0.45);
        assert_eq!(hbrdf_binary(&c).unwrap(), 0.0);
        // Region II tangent segment is continuous at d_c and hits 0 at p
        let dc = critical_distortion(0.4).unwrap();
        let at_dc = hbrdf_binary(&cfg(0.4, 0.7, dc)).unwrap();
        assert!((at_dc - wz_gap(dc, 0.4).unwrap()).abs() < 1e-9);
        let near_p = hbrdf_binary(&cfg(0.4, 0.7, 0.399)).unwrap();
        assert!(near_p < 0.01);
    }
}
