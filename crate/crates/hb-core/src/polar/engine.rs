//! The successive-cancellation tree walk over exact posterior pairs.
//!
//! Leaf j carries the posterior of the product-domain symbol at position j
//! given that position's observations. The walk visits transform-domain
//! indices in natural order and hands each index's conditional pair (given
//! all previous decisions and all observations) to a decision callback.
//! Several tracks — e.g. an observation-conditioned posterior and a
//! prior-only law — share one walk and one decision sequence.

use crate::bits::polar_transform_in_place;
use crate::error::{Error, Result};

/// A normalized probability pair (P(symbol = 0), P(symbol = 1)).
pub type Pair = [f64; 2];

/// Posteriors are clamped to [PAIR_CLAMP, 1 - PAIR_CLAMP] before ratios so
/// deterministic leaves cannot produce 0/0 in the combination steps.
pub const PAIR_CLAMP: f64 = 1e-12;

#[inline]
pub(crate) fn clamp_pair(p0: f64, p1: f64) -> Pair {
    let s = p0 + p1;
    let q = if s > 0.0 { (p0 / s).clamp(PAIR_CLAMP, 1.0 - PAIR_CLAMP) } else { 0.5 };
    [q, 1.0 - q]
}

/// Bhattacharyya parameter of a joint pmf over {0,1} x finite alphabet:
/// 2 sum_y sqrt(P(0,y) P(1,y)). Rows are indexed by the second coordinate.
pub fn bhattacharyya(joint: &[Pair]) -> Result<f64> {
    let mut total = 0.0;
    for (y, row) in joint.iter().enumerate() {
        if row[0] < 0.0 || row[1] < 0.0 {
            return Err(Error::InvalidInput(format!("negative mass in pmf row {y}")));
        }
        total += row[0] + row[1];
    }
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidInput(format!("pmf mass {total} not normalized")));
    }
    Ok(joint.iter().map(|r| 2.0 * (r[0] * r[1]).sqrt()).sum())
}

/// Bhattacharyya value of a conditional pair: 2 sqrt(p0 p1).
#[inline]
pub fn pair_bhattacharyya(p: &Pair) -> f64 {
    2.0 * (p[0] * p[1]).sqrt()
}

/// One SC pass. `leaves[j][t]` is track t's posterior at position j; the
/// callback sees, for each transform-domain index in order, the per-track
/// conditional pairs and returns the decision bit. Returns the decided
/// transform-domain vector. O(N log N).
pub fn sc_run<const T: usize>(
    leaves: &[[Pair; T]],
    mut decide: impl FnMut(usize, &[Pair; T]) -> u8,
) -> Vec<u8> {
    let n = leaves.len();
    debug_assert!(n.is_power_of_two());
    let mut scratch = vec![[[0.5f64; 2]; T]; n];
    let mut sums = vec![0u8; n];
    let mut out = vec![0u8; n];
    sc_node(leaves, &mut scratch, &mut sums, 0, &mut out, &mut decide);
    out
}

fn sc_node<const T: usize>(
    probs: &[[Pair; T]],
    scratch: &mut [[Pair; T]],
    sums: &mut [u8],
    base: usize,
    out: &mut [u8],
    decide: &mut impl FnMut(usize, &[Pair; T]) -> u8,
) {
    let m = probs.len();
    if m == 1 {
        out[0] = decide(base, &probs[0]) & 1;
        return;
    }
    let h = m / 2;
    let (buf, rest) = scratch.split_at_mut(h);
    let (out_l, out_r) = out.split_at_mut(h);

    // combine step: the first half of the transform domain sees the
    // pairwise parity of the two sub-blocks
    for j in 0..h {
        for t in 0..T {
            let a = probs[j][t];
            let b = probs[j + h][t];
            buf[j][t] = clamp_pair(a[0] * b[0] + a[1] * b[1], a[0] * b[1] + a[1] * b[0]);
        }
    }
    sc_node(buf, rest, &mut sums[..h], base, out_l, decide);

    // partial sums of the decided first half pin the parity for the second
    let (sums_l, _) = sums.split_at_mut(h);
    sums_l.copy_from_slice(out_l);
    polar_transform_in_place(sums_l);

    for j in 0..h {
        let c = sums_l[j] as usize;
        for t in 0..T {
            let a = probs[j][t];
            let b = probs[j + h][t];
            buf[j][t] = clamp_pair(a[c] * b[0], a[1 - c] * b[1]);
        }
    }
    sc_node(buf, rest, &mut sums[..h], base + h, out_r, decide);
}
