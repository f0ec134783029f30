//! One-dimensional lattice Gaussians: the flatness factor, discrete
//! Gaussian constellations over scaled integers, and their binary label
//! decompositions.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::polar::Pair;

/// Gaussian density with variance sigma2 at x.
#[inline]
pub fn gaussian_pdf(x: f64, sigma2: f64) -> f64 {
    (-(x * x) / (2.0 * sigma2)).exp() / (2.0 * std::f64::consts::PI * sigma2).sqrt()
}

/// Maximum deviation of the lattice-periodized Gaussian from the uniform
/// density over a fundamental region of scale * Z: max |V f_sigma_Lambda - 1|.
/// The lattice sum is truncated at |lambda| <= 10 sigma + 10 scale.
pub fn flatness_factor(scale: f64, sigma: f64) -> f64 {
    assert!(scale > 0.0 && sigma > 0.0);
    let sigma2 = sigma * sigma;
    let reach = 10.0 * sigma + 10.0 * scale;
    let k_max = (reach / scale).ceil() as i64;
    let periodized = |x: f64| -> f64 {
        let mut s = 0.0;
        for k in -k_max..=k_max {
            s += gaussian_pdf(x - k as f64 * scale, sigma2);
        }
        s
    };
    // the extremes of the periodized density sit at the lattice point and
    // the deep hole; a grid guards against surprises at odd ratios
    let mut worst = 0.0f64;
    let grid = 256;
    for i in 0..=grid {
        let x = scale * i as f64 / grid as f64 - 0.5 * scale;
        worst = worst.max((scale * periodized(x) - 1.0).abs());
    }
    worst
}

/// A centered discrete Gaussian over the scaled integers, truncated where
/// the tail mass drops below 1e-12 (the support widens automatically).
#[derive(Debug, Clone)]
pub struct DiscreteGaussian {
    pub scale: f64,
    pub sigma2: f64,
    /// symmetric support half-width in lattice steps
    half_width: i64,
    /// probabilities for m in [-half_width, half_width]
    probs: Vec<f64>,
    cdf: Vec<f64>,
}

impl DiscreteGaussian {
    pub fn new(scale: f64, sigma2: f64) -> Result<Self> {
        if scale <= 0.0 || sigma2 <= 0.0 {
            return Err(Error::InvalidInput("scale and variance must be positive".into()));
        }
        let sigma = sigma2.sqrt();
        let mut half_width = ((10.0 * sigma) / scale).ceil() as i64 + 1;
        loop {
            // unnormalized boundary mass as a tail proxy
            let edge = gaussian_pdf(half_width as f64 * scale, sigma2);
            let center = gaussian_pdf(0.0, sigma2);
            if edge / center < 1e-13 || half_width > 1 << 24 {
                break;
            }
            half_width *= 2;
        }
        let mut probs: Vec<f64> =
            (-half_width..=half_width).map(|m| gaussian_pdf(m as f64 * scale, sigma2)).collect();
        let total: f64 = probs.iter().sum();
        for p in &mut probs {
            *p /= total;
        }
        let mut cdf = Vec::with_capacity(probs.len());
        let mut acc = 0.0;
        for &p in &probs {
            acc += p;
            cdf.push(acc);
        }
        Ok(Self { scale, sigma2, half_width, probs, cdf })
    }

    pub fn half_width(&self) -> i64 {
        self.half_width
    }

    /// P(m) for a lattice index m.
    pub fn prob(&self, m: i64) -> f64 {
        if m.abs() > self.half_width {
            0.0
        } else {
            self.probs[(m + self.half_width) as usize]
        }
    }

    pub fn points(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.probs.iter().enumerate().map(|(i, &p)| (i as i64 - self.half_width, p))
    }

    pub fn total_mass(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn variance(&self) -> f64 {
        self.points().map(|(m, p)| p * (m as f64 * self.scale).powi(2)).sum()
    }

    /// Inverse-CDF draw of a lattice index.
    pub fn sample(&self, rng: &mut ChaCha8Rng) -> i64 {
        let r: f64 = rng.gen();
        match self.cdf.binary_search_by(|c| c.partial_cmp(&r).unwrap()) {
            Ok(i) | Err(i) => (i.min(self.probs.len() - 1)) as i64 - self.half_width,
        }
    }

    /// Entropy of the label prefix m mod 2^levels, in bits.
    pub fn prefix_entropy(&self, levels: u32) -> f64 {
        let classes = 1usize << levels;
        let mut mass = vec![0.0f64; classes];
        for (m, p) in self.points() {
            mass[m.rem_euclid(classes as i64) as usize] += p;
        }
        -mass.iter().filter(|&&p| p > 0.0).map(|&p| p * p.log2()).sum::<f64>()
    }

    /// H(A_l | A_{1:l-1}) for the binary partition chain, l >= 1.
    pub fn label_entropy(&self, level: u32) -> f64 {
        self.prefix_entropy(level) - self.prefix_entropy(level - 1)
    }

    /// Prior pair P(A_level = b | lower labels = lab) from coset masses.
    pub fn coset_prior(&self, level: u32, lab: i64) -> Pair {
        let low = 1i64 << (level - 1);
        let mut mass = [0.0f64; 2];
        for (m, p) in self.points() {
            if m.rem_euclid(low) == lab {
                let t = (m - lab).div_euclid(low);
                mass[t.rem_euclid(2) as usize] += p;
            }
        }
        let s = mass[0] + mass[1];
        if s > 0.0 {
            [mass[0] / s, mass[1] / s]
        } else {
            [0.5, 0.5]
        }
    }
}

/// Label bits of a lattice index within a 2^levels window, lowest level
/// first.
pub fn label_bits(m: i64, levels: u32) -> Vec<u8> {
    let mm = m.rem_euclid(1i64 << levels);
    (0..levels).map(|l| ((mm >> l) & 1) as u8).collect()
}

/// The centered representative of a label word: the lattice index in
/// [-2^(levels-1), 2^(levels-1)) congruent to it.
pub fn centered_index(labels_packed: i64, levels: u32) -> i64 {
    let m = 1i64 << levels;
    let mm = labels_packed.rem_euclid(m);
    if mm >= m / 2 {
        mm - m
    } else {
        mm
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn flatness_factor_limits_and_monotonicity() {
        // wide noise flattens the periodized density
        assert!(flatness_factor(1.0, 4.0) < 1e-8);
        // narrow noise spikes at lattice points
        assert!(flatness_factor(1.0, 0.05) > 10.0);
        // strictly decreasing in sigma at fixed scale
        let eps_half = flatness_factor(1.0, 0.5);
        let eps_one = flatness_factor(1.0, 1.0);
        assert!(eps_one < eps_half, "{eps_one} !< {eps_half}");
        let mut prev = f64::INFINITY;
        for i in 1..=8 {
            let eps = flatness_factor(1.0, 0.25 * i as f64);
            assert!(eps < prev);
            prev = eps;
        }
    }

    #[test]
    fn discrete_gaussian_normalization_and_symmetry() {
        let d = DiscreteGaussian::new(0.6, 0.8).unwrap();
        assert!((d.total_mass() - 1.0).abs() < 1e-12);
        for (m, p) in d.points() {
            assert!((p - d.prob(-m)).abs() < 1e-15, "asymmetry at {m}");
        }
    }

    #[test]
    fn variance_approaches_parameter_in_flat_regime() {
        // second moment within 5% of sigma^2 when the flatness factor at
        // sigma is small
        let scale = 0.5;
        let sigma2 = 1.0f64;
        assert!(flatness_factor(scale, sigma2.sqrt()) < 1e-3);
        let d = DiscreteGaussian::new(scale, sigma2).unwrap();
        let v = d.variance();
        assert!((v - sigma2).abs() / sigma2 < 0.05, "variance {v}");
    }

    #[test]
    fn sampler_matches_pmf() {
        let d = DiscreteGaussian::new(0.7, 0.6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 200_000;
        let mut counts = std::collections::HashMap::new();
        for _ in 0..n {
            *counts.entry(d.sample(&mut rng)).or_insert(0usize) += 1;
        }
        for (m, p) in d.points() {
            if p > 1e-3 {
                let emp = *counts.get(&m).unwrap_or(&0) as f64 / n as f64;
                assert!((emp - p).abs() < 5e-3, "m = {m}: {emp} vs {p}");
            }
        }
    }

    #[test]
    fn labels_and_centering() {
        // the zero point carries all-zero labels
        assert_eq!(label_bits(0, 4), vec![0, 0, 0, 0]);
        // round trip within the centered window
        for m in -8..8i64 {
            let bits = label_bits(m, 4);
            let packed: i64 = bits.iter().enumerate().map(|(l, &b)| (b as i64) << l).sum();
            assert_eq!(centered_index(packed, 4), m, "wrap at {m}");
        }
        // negative indices use two's-complement-style labels
        assert_eq!(label_bits(-1, 3), vec![1, 1, 1]);
    }

    #[test]
    fn coset_priors_and_entropies_are_consistent() {
        let d = DiscreteGaussian::new(0.5, 0.7).unwrap();
        // chain entropies telescope to the prefix entropy
        let h: f64 = (1..=5).map(|l| d.label_entropy(l)).sum();
        assert!((h - d.prefix_entropy(5)).abs() < 1e-12);
        // entropies collapse as the partition coarsens past the spread
        assert!(d.label_entropy(1) > 0.9);
        assert!(d.label_entropy(6) < 1e-6);
        // prior pairs are normalized
        for level in 1..=4u32 {
            for lab in 0..(1i64 << (level - 1)) {
                let p = d.coset_prior(level, lab);
                assert!((p[0] + p[1] - 1.0).abs() < 1e-12);
            }
        }
    }
}
