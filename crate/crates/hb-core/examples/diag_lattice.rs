use hb_core::lattice::*;
use hb_core::polar::{ConstructionParams, PartitionMode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn gauss(rng: &mut ChaCha8Rng, variance: f64) -> f64 {
    let u1: f64 = rng.gen_range(1e-12..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos() * variance.sqrt()
}

fn main() {
    let params = ConstructionParams::new(150, 0.05, 13, PartitionMode::Rank);
    let lat = design_coarse_lattice(1.0, 0.5, 10, &params, 1e-3, 1e-3).unwrap();
    println!("chain: scale={} levels={}", lat.chain.base_scale, lat.chain.levels);
    println!("kappa={} noise_tilde={}", lat.kappa, lat.noise_tilde);
    for (i, p) in lat.partitions.iter().enumerate() {
        println!("level {}: F={} I={} S={}", i+1, p.frozen().len(), p.info().len(), p.shaping().len());
    }
    let d = DiscreteGaussian::new(lat.chain.base_scale, lat.sigma_a2).unwrap();
    println!("constellation: hw={} var={}", d.half_width(), d.variance());
    for l in 1..=lat.chain.levels { println!("H(A_{}|..) = {}", l, d.label_entropy(l)); }

    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let len = lat.len();
    let x: Vec<f64> = (0..len).map(|_| gauss(&mut rng, 1.0)).collect();
    let out = coarse_quantize(&lat, &x, 0.5, 5).unwrap();
    let mse = x.iter().zip(&out.u1).map(|(a,b)| (a-b)*(a-b)).sum::<f64>() / len as f64;
    println!("mse={mse} rate={} warn={:?}", out.rate, out.quality_warning);
    for j in 0..6 {
        println!("x={:+.3} u1={:+.3}", x[j], out.u1[j]);
    }
    let big = x.iter().zip(&out.u1).filter(|(a,b)| (*a-*b).abs() > 2.0).count();
    println!("big errors: {big} / {len}");

    // all-information probe: randomized rounding everywhere must equal
    // ideal posterior sampling
    use hb_core::polar::IndexPartition;
    let mut lat2 = lat.clone();
    let nlen = lat2.len();
    lat2.partitions = (0..lat2.chain.levels).map(|_| {
        IndexPartition::new(nlen, vec![], (0..nlen).collect(), vec![]).unwrap()
    }).collect();
    let out2 = coarse_quantize(&lat2, &x, 0.5, 6).unwrap();
    let mse2 = x.iter().zip(&out2.u1).map(|(a,b)| (a-b)*(a-b)).sum::<f64>() / nlen as f64;
    let big2 = x.iter().zip(&out2.u1).filter(|(a,b)| (*a-*b).abs() > 2.0).count();
    println!("all-info mse={mse2} big={big2}");
    for j in 0..6 {
        println!("x={:+.3} u1={:+.3}", x[j], out2.u1[j]);
    }
}

// second entry point logic lives in main above; quick all-info probe:
// (appended as a function called from main via env var)
