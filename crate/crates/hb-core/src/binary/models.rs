//! Per-position posterior tables for the binary test channels.

use crate::error::{Error, Result};
use crate::polar::Pair;
use crate::rd::{bconv, binary_entropy, DsbsConfig, HbTestChannel};

#[inline]
fn normalize(p0: f64, p1: f64) -> Pair {
    let s = p0 + p1;
    if s > 0.0 {
        [p0 / s, p1 / s]
    } else {
        [0.5, 0.5]
    }
}

fn entropy_of(pair: Pair) -> f64 {
    binary_entropy(pair[0].clamp(0.0, 1.0)).unwrap()
}

/// Posterior pairs of a symbol seen through a symmetric channel with the
/// given crossover, for each observed bit.
pub fn bsc_posteriors(observed: &[u8], crossover: f64) -> Vec<Pair> {
    observed
        .iter()
        .map(|&b| if b == 0 { [1.0 - crossover, crossover] } else { [crossover, 1.0 - crossover] })
        .collect()
}

/// The two-decoder cascade for the closed-form sub-region: the
/// reconstruction symbol feeds the source through crossover d2 and the
/// coarse reconstruction through crossover eta, with d2 * eta = d1; the
/// side information is the source through crossover p.
#[derive(Debug, Clone)]
pub struct CascadeModel {
    pub p: f64,
    pub d1: f64,
    pub d2: f64,
    pub eta: f64,
    /// crossover of the side-information look at the symbol: d2 * p
    pub q: f64,
    /// posterior of u2 given (x, u1)
    lut_src: [[Pair; 2]; 2],
    /// posterior of u2 given (y, u1)
    lut_ch: [[Pair; 2]; 2],
    /// I(U2; X, U1)
    pub i_src: f64,
    /// I(U2; Y, U1)
    pub i_ch: f64,
}

impl CascadeModel {
    pub fn new(cfg: &DsbsConfig) -> Result<Self> {
        let DsbsConfig { p, d1, d2 } = *cfg;
        if d2 >= 0.5 {
            return Err(Error::InvalidInput(format!("d2 = {d2} must be below 0.5")));
        }
        if d2 > d1 {
            return Err(Error::InvalidInput(format!("d2 = {d2} exceeds d1 = {d1}")));
        }
        let eta = (d1 - d2) / (1.0 - 2.0 * d2);
        debug_assert!((bconv(d2, eta).unwrap() - d1).abs() < 1e-12);
        let q = bconv(d2, p).unwrap();

        let flip = |c: f64, differs: bool| if differs { c } else { 1.0 - c };
        let mut lut_src = [[[0.0; 2]; 2]; 2];
        let mut lut_ch = [[[0.0; 2]; 2]; 2];
        for obs in 0..2usize {
            for u1 in 0..2usize {
                let m0 = flip(d2, obs != 0) * flip(eta, u1 != 0);
                let m1 = flip(d2, obs == 0) * flip(eta, u1 == 0);
                lut_src[obs][u1] = normalize(m0, m1);
                let c0 = flip(q, obs != 0) * flip(eta, u1 != 0);
                let c1 = flip(q, obs == 0) * flip(eta, u1 == 0);
                lut_ch[obs][u1] = normalize(c0, c1);
            }
        }

        // I(U2; obs pair) = 1 - E[h(posterior)] with a uniform symbol
        let mut h_src = 0.0;
        let mut h_ch = 0.0;
        for obs in 0..2usize {
            for u1 in 0..2usize {
                // joint mass of the observation pair, by symmetry of the
                // uniform-input cascade
                let m_src = 0.5 * (flip(d2, obs != 0) * flip(eta, u1 != 0)
                    + flip(d2, obs == 0) * flip(eta, u1 == 0));
                let m_ch = 0.5 * (flip(q, obs != 0) * flip(eta, u1 != 0)
                    + flip(q, obs == 0) * flip(eta, u1 == 0));
                h_src += m_src * entropy_of(lut_src[obs][u1]);
                h_ch += m_ch * entropy_of(lut_ch[obs][u1]);
            }
        }
        Ok(Self { p, d1, d2, eta, q, lut_src, lut_ch, i_src: 1.0 - h_src, i_ch: 1.0 - h_ch })
    }

    pub fn observed_src(&self, x: &[u8], u1: &[u8]) -> Vec<Pair> {
        x.iter().zip(u1).map(|(&x, &u1)| self.lut_src[x as usize][u1 as usize]).collect()
    }

    pub fn observed_ch(&self, y: &[u8], u1: &[u8]) -> Vec<Pair> {
        y.iter().zip(u1).map(|(&y, &u1)| self.lut_ch[y as usize][u1 as usize]).collect()
    }

    /// The binary joint over (x, u1, u2) with the third symbol value
    /// carrying no mass, extended by y for the degradation check.
    pub fn as_test_channel(&self) -> HbTestChannel {
        HbTestChannel::from_cascade(self.p, self.d2, self.eta)
    }
}

/// Single-letter quantities and posterior tables for the ternary
/// test-channel joint, split into two binary levels: the low bit
/// distinguishes the two direct reconstruction symbols, the high bit marks
/// the "use the side information" symbol.
#[derive(Debug, Clone)]
pub struct TernaryModel {
    pub joint: HbTestChannel,
    /// E[d(X, U1)] of the joint; crossover of the coarse quantizer.
    pub d_xu1: f64,
    lut_a_src: [[Pair; 2]; 2],
    lut_a_ch: [[Pair; 2]; 2],
    pub prior_a: Pair,
    lut_b_src: [[[Pair; 2]; 2]; 2],
    lut_b_ch: [[[Pair; 2]; 2]; 2],
    pub prior_b: Pair,
    /// marginal of (x, u1) for construction sampling
    pub p_xu1: [[f64; 2]; 2],
    pub ia_src: f64,
    pub ia_ch: f64,
    pub ha: f64,
    pub ib_src: f64,
    pub ib_ch: f64,
    pub hb: f64,
}

/// Low/high bit split of the ternary symbol: 0 -> (0,0), 1 -> (1,0),
/// 2 -> (0,1); the (1,1) pair never occurs.
pub fn split_symbol(u2: u8) -> (u8, u8) {
    match u2 {
        0 => (0, 0),
        1 => (1, 0),
        _ => (0, 1),
    }
}

impl TernaryModel {
    pub fn new(joint: HbTestChannel) -> Self {
        let p = joint.p;
        // joint over (x, u1, ua, ub) folded from the ternary symbol
        let mass_ab = |x: u8, u1: u8, ua: u8, ub: u8| -> f64 {
            (0..3u8)
                .filter(|&u2| split_symbol(u2) == (ua, ub))
                .map(|u2| joint.mass(x, u1, u2))
                .sum()
        };
        let mass_ab_y = |y: u8, u1: u8, ua: u8, ub: u8| -> f64 {
            (0..2u8)
                .map(|x| {
                    let flip = if x == y { 1.0 - p } else { p };
                    mass_ab(x, u1, ua, ub) * flip
                })
                .sum()
        };

        let mut lut_a_src = [[[0.5; 2]; 2]; 2];
        let mut lut_a_ch = [[[0.5; 2]; 2]; 2];
        let mut lut_b_src = [[[[0.5; 2]; 2]; 2]; 2];
        let mut lut_b_ch = [[[[0.5; 2]; 2]; 2]; 2];
        let mut p_xu1 = [[0.0; 2]; 2];
        for o in 0..2u8 {
            for u1 in 0..2u8 {
                let src0: f64 = (0..2u8).map(|ub| mass_ab(o, u1, 0, ub)).sum();
                let src1: f64 = (0..2u8).map(|ub| mass_ab(o, u1, 1, ub)).sum();
                lut_a_src[o as usize][u1 as usize] = normalize(src0, src1);
                p_xu1[o as usize][u1 as usize] = src0 + src1;
                let ch0: f64 = (0..2u8).map(|ub| mass_ab_y(o, u1, 0, ub)).sum();
                let ch1: f64 = (0..2u8).map(|ub| mass_ab_y(o, u1, 1, ub)).sum();
                lut_a_ch[o as usize][u1 as usize] = normalize(ch0, ch1);
                for ua in 0..2u8 {
                    lut_b_src[o as usize][u1 as usize][ua as usize] =
                        normalize(mass_ab(o, u1, ua, 0), mass_ab(o, u1, ua, 1));
                    lut_b_ch[o as usize][u1 as usize][ua as usize] =
                        normalize(mass_ab_y(o, u1, ua, 0), mass_ab_y(o, u1, ua, 1));
                }
            }
        }

        let pa1 = joint.marginal_u2(1);
        let prior_a = [1.0 - pa1, pa1];
        let pb1 = joint.marginal_u2(2);
        let prior_b = [1.0 - pb1, pb1];
        let ha = entropy_of(prior_a);
        let hb = entropy_of(prior_b);

        // conditional entropies by direct summation over contexts
        let mut h_a_src = 0.0;
        let mut h_a_ch = 0.0;
        let mut h_b_src = 0.0;
        let mut h_b_ch = 0.0;
        for o in 0..2usize {
            for u1 in 0..2usize {
                let m_src = p_xu1[o][u1];
                h_a_src += m_src * entropy_of(lut_a_src[o][u1]);
                let m_ch: f64 =
                    (0..2u8).flat_map(|ua| (0..2u8).map(move |ub| (ua, ub))).map(|(ua, ub)| {
                        mass_ab_y(o as u8, u1 as u8, ua, ub)
                    }).sum();
                h_a_ch += m_ch * entropy_of(lut_a_ch[o][u1]);
                for ua in 0..2usize {
                    let m_src_a: f64 =
                        (0..2u8).map(|ub| mass_ab(o as u8, u1 as u8, ua as u8, ub)).sum();
                    h_b_src += m_src_a * entropy_of(lut_b_src[o][u1][ua]);
                    let m_ch_a: f64 =
                        (0..2u8).map(|ub| mass_ab_y(o as u8, u1 as u8, ua as u8, ub)).sum();
                    h_b_ch += m_ch_a * entropy_of(lut_b_ch[o][u1][ua]);
                }
            }
        }

        let d_xu1 = joint.expected_distortion_decoder1();
        Self {
            joint,
            d_xu1,
            lut_a_src,
            lut_a_ch,
            prior_a,
            lut_b_src,
            lut_b_ch,
            prior_b,
            p_xu1,
            ia_src: ha - h_a_src,
            ia_ch: ha - h_a_ch,
            ha,
            ib_src: hb - h_b_src,
            ib_ch: hb - h_b_ch,
            hb,
        }
    }

    pub fn observed_a_src(&self, x: &[u8], u1: &[u8]) -> Vec<Pair> {
        x.iter().zip(u1).map(|(&x, &u1)| self.lut_a_src[x as usize][u1 as usize]).collect()
    }

    pub fn observed_a_ch(&self, y: &[u8], u1: &[u8]) -> Vec<Pair> {
        y.iter().zip(u1).map(|(&y, &u1)| self.lut_a_ch[y as usize][u1 as usize]).collect()
    }

    pub fn observed_b_src(&self, x: &[u8], u1: &[u8], ua: &[u8]) -> Vec<Pair> {
        (0..x.len())
            .map(|j| self.lut_b_src[x[j] as usize][u1[j] as usize][ua[j] as usize])
            .collect()
    }

    pub fn observed_b_ch(&self, y: &[u8], u1: &[u8], ua: &[u8]) -> Vec<Pair> {
        (0..y.len())
            .map(|j| self.lut_b_ch[y[j] as usize][u1[j] as usize][ua[j] as usize])
            .collect()
    }

    pub fn pair_a_src(&self, x: u8, u1: u8) -> Pair {
        self.lut_a_src[x as usize][u1 as usize]
    }

    pub fn pair_b_src(&self, x: u8, u1: u8, ua: u8) -> Pair {
        self.lut_b_src[x as usize][u1 as usize][ua as usize]
    }
}
