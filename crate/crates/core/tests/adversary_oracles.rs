use nalgebra::DMatrix;
use vck_core::adversary::{build_instance, inapproximability_score, random_pattern, AdversarialInstance};
use vck_core::gen::membership_gadget;
use vck_core::vck::{check_shattered, ShatterMode, VcBox, DEFAULT_GRID_CAP};

fn instance(d: usize, seed: u64) -> AdversarialInstance {
    let f = membership_gadget(d, 1).unwrap();
    let cert = check_shattered(&f, &VcBox(vec![(0..d).collect()]), 1, ShatterMode::Relation, DEFAULT_GRID_CAP)
        .unwrap()
        .unwrap();
    let h = random_pattern(d, 1, 0.5, seed).unwrap();
    build_instance(&f, &cert, &h, &[]).unwrap()
}

/// Eckart-Young: no sum of `n` products `a(x) b(c)` gets closer to `f` in
/// the weighted L² norm than the best rank-`n` approximation of
/// `sqrt(μ(x) μ(c)) f(x, c)`.
fn rank_lower_bound(inst: &AdversarialInstance, n: usize) -> f64 {
    let g = inst.function.grid();
    let (rows, cols) = (g.shape()[0], g.shape()[1]);
    let (wx, wc) = (g.axis_weights(0), g.axis_weights(1));
    let m = DMatrix::from_fn(rows, cols, |i, j| (wx[i] * wc[j]).sqrt() * inst.function.value(&[i, j]));
    let mut sv: Vec<f64> = m.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv.iter().skip(n).map(|s| s * s).sum::<f64>().sqrt()
}

#[test]
fn score_never_beats_the_rank_bound() {
    for seed in 0..6 {
        let inst = instance(8, seed);
        for n in [1, 2, 4] {
            let score = inapproximability_score(&inst, 1, n, seed).unwrap();
            let bound = rank_lower_bound(&inst, n);
            assert!(score >= bound - 1e-9, "seed {seed} n {n}: {score} < {bound}");
        }
    }
}

#[test]
fn instance_weights_are_exact_fractions() {
    for d in [1, 3, 5, 7, 10] {
        let inst = instance(d, d as u64);
        for part in inst.space().parts() {
            // every weight is j/d, 0 or 1; check the numerators
            let scaled: Vec<f64> = part.weights.iter().map(|w| w * d as f64).collect();
            let ints: Vec<u64> = scaled.iter().map(|s| s.round() as u64).collect();
            for (s, i) in scaled.iter().zip(&ints) {
                assert!((s - *i as f64).abs() < 1e-9);
            }
            assert_eq!(ints.iter().sum::<u64>(), d as u64, "part {}", part.name);
        }
    }
}
