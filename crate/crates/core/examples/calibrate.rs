//! Prints golden mean box norms for the converse sweep, computed with a
//! matrix trace formula instead of the library's box norm.
//!
//! `cargo run --release --example calibrate -- [seed] [trials]`

use vck_core::adversary::{pattern_seed, random_pattern};

/// `‖M‖` in the (1,1) box norm under uniform measure equals
/// `(tr((M Mᵀ)²) / d⁴)^(1/4)`.
fn trace_norm(h: &[bool], d: usize) -> f64 {
    let m: Vec<f64> = h.iter().map(|&b| if b { 0.5 } else { -0.5 }).collect();
    let mut gram = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            gram[i * d + j] = (0..d).map(|c| m[i * d + c] * m[j * d + c]).sum();
        }
    }
    let tr: f64 = gram.iter().map(|g| g * g).sum();
    (tr / (d as f64).powi(4)).powf(0.25)
}

fn main() {
    let args: Vec<u64> = std::env::args().skip(1).map(|a| a.parse().expect("numeric argument")).collect();
    let seed = args.first().copied().unwrap_or(7);
    let trials = args.get(1).copied().unwrap_or(20) as usize;
    println!("d,mean_norm");
    for d in [2usize, 4, 8] {
        let total: f64 = (0..trials)
            .map(|t| {
                let h = random_pattern(d, 1, 0.5, pattern_seed(seed, d, t)).unwrap();
                trace_norm(&h.mask(), d)
            })
            .sum();
        println!("{d},{:.6}", total / trials as f64);
    }
}
