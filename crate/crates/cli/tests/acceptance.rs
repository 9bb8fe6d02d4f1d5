//! One line per acceptance criterion. Runs without the libtest harness so
//! the lines always reach the output; any failure makes the target fail.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use vck_core::adversary::{build_instance, inapproximability_score, quasirandomness_curve, random_pattern, SweepConfig};
use vck_core::decomp::{fit_boolean_cylinders, fit_weighted_cylinders, CylinderDecomposition, CylinderTerm, Factor, FiberPool};
use vck_core::fibalg::{atoms, project_simple, round_to_union, NamedRelation};
use vck_core::gen::{boolean_of_lower_arity, membership_gadget};
use vck_core::gowers::{box_norm, cylinder_product, dual_function, Cylinder};
use vck_core::space::{average_out, box_power, cylinder_extend};
use vck_core::vck::{check_shattered, sauer_shelah_bound, trace_count, vc_k, ShatterMode, VcBox, DEFAULT_GRID_CAP};
use vck_core::{Grid, MeasuredFunction, PartiteSpace, Relation, Signature};

type Outcome = Result<String, String>;

/// Golden mean box norms for k = 1, sides 2, 4, 8, 20 trials, seed 7, from
/// `cargo run --release --example calibrate`.
const GOLDEN_NORMS: [(usize, f64); 3] = [(2, 0.448291), (4, 0.405656), (8, 0.350509)];
const SWEEP_SEED: u64 = 7;

fn grid(sizes: &[usize]) -> Grid {
    Grid::new(PartiteSpace::uniform(sizes).unwrap(), Signature((0..sizes.len()).collect())).unwrap()
}

fn weighted_space(sizes: &[usize], rng: &mut ChaCha8Rng) -> std::sync::Arc<PartiteSpace> {
    let mut s = PartiteSpace::uniform(sizes).unwrap();
    for (i, &n) in sizes.iter().enumerate() {
        let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..1.0)).collect();
        let t: f64 = raw.iter().sum();
        s = s.with_weights(i, raw.iter().map(|x| x / t).collect()).unwrap();
    }
    s
}

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

/// VC dimension straight from the definition: the largest `d` such that some
/// `d`-subset of the first part has every subset cut out by some column.
fn literal_vc1(e: &Relation) -> usize {
    let (m, n) = (e.grid().shape()[0], e.grid().shape()[1]);
    let mut best = 0;
    for a in 0u32..1 << m {
        let members: Vec<usize> = (0..m).filter(|i| a >> i & 1 == 1).collect();
        let traces: std::collections::BTreeSet<u32> = (0..n)
            .map(|b| members.iter().filter(|&&x| e.contains(&[x, b])).fold(0, |acc, &x| acc | 1 << x))
            .collect();
        if traces.len() == 1 << members.len() {
            best = best.max(members.len());
        }
    }
    best
}

fn c1_vc_oracle() -> Outcome {
    let start = Instant::now();
    for bits in 0u32..512 {
        let e = Relation::from_fn(grid(&[3, 3]), |p| bits >> (p[0] * 3 + p[1]) & 1 == 1);
        let got = vc_k(e.function(), 1, ShatterMode::Relation, DEFAULT_GRID_CAP).map_err(|x| x.to_string())?;
        check(got.dimension == literal_vc1(&e), format!("[3]x[3] relation {bits:#b}"))?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for i in 0..200 {
        let e = Relation::from_fn(grid(&[4, 6]), |_| rng.gen_bool(0.5));
        let got = vc_k(e.function(), 1, ShatterMode::Relation, DEFAULT_GRID_CAP).unwrap();
        check(got.dimension == literal_vc1(&e), format!("random [4]x[6] relation {i}"))?;
    }
    let secs = start.elapsed().as_secs_f64();
    check(secs < 30.0, format!("took {secs:.1}s"))?;
    Ok(format!("712 relations agree, {secs:.2}s"))
}

fn c2_sauer_shelah() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let mut worst = 0.0f64;
    for i in 0..200 {
        let p = rng.gen_range(0.1..0.9);
        let e = Relation::from_fn(grid(&[8, 12]), |_| rng.gen_bool(p));
        let d = vc_k(e.function(), 1, ShatterMode::Relation, DEFAULT_GRID_CAP).unwrap();
        check(d.complete, "incomplete search")?;
        let traces = trace_count(&e, &VcBox(vec![(0..8).collect()]), 1).unwrap();
        let bound: u64 = sauer_shelah_bound(8, 1, d.dimension as u64 + 1).unwrap().try_into().unwrap();
        check(traces as u64 <= bound, format!("relation {i}: {traces} traces > {bound} at VC {}", d.dimension))?;
        worst = worst.max(traces as f64 / bound as f64);
    }
    Ok(format!("0 violations in 200, max traces/bound {worst:.3}"))
}

fn c3_gowers_identities() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    let mut worst = 0.0f64;
    for t in 0..100 {
        let space = weighted_space(&[6, 6, 6], &mut rng);
        // a random non-empty set of parts, one coordinate each
        let parts: Vec<usize> = loop {
            let p: Vec<usize> = (0..3).filter(|_| rng.gen_bool(0.6)).collect();
            if !p.is_empty() {
                break p;
            }
        };
        let g = Grid::new(space.clone(), Signature(parts.clone())).unwrap();
        let f = MeasuredFunction::from_fn(g.clone(), |_| rng.gen()).unwrap();
        let r = box_norm(&f, 6).unwrap();
        let d = dual_function(&f, 6).unwrap();
        let gap = (f.inner(&d).unwrap() - r.raw).abs();
        worst = worst.max(gap);
        check(gap <= 1e-9, format!("tensor {t}: dual identity off by {gap:e}"))?;
        check(f.integral().abs() <= r.norm + 1e-12, format!("tensor {t}: integral above norm"))?;
        let cylinders: Vec<Cylinder> = (0..parts.len())
            .filter(|_| parts.len() > 1)
            .map(|pos| {
                let sub = Grid::new(space.clone(), Signature(vec![parts[pos]])).unwrap();
                Cylinder { positions: vec![pos], relation: Relation::from_fn(sub, |_| rng.gen_bool(0.5)) }
            })
            .collect();
        let restricted = cylinder_product(&f, &cylinders).unwrap();
        let rn = box_norm(&restricted, 6).unwrap().norm;
        check(rn <= r.norm + 1e-12, format!("tensor {t}: cylinder product raised the norm"))?;
    }
    let secs = start.elapsed().as_secs_f64();
    check(secs < 60.0, format!("took {secs:.1}s"))?;
    Ok(format!("100 tensors, max dual gap {worst:.1e}, {secs:.2}s"))
}

fn naive_box_raw(f: &MeasuredFunction) -> f64 {
    let (n0, n1) = (f.grid().shape()[0], f.grid().shape()[1]);
    let (w0, w1) = (f.grid().axis_weights(0), f.grid().axis_weights(1));
    let mut acc = 0.0;
    for x0 in 0..n0 {
        for x1 in 0..n0 {
            for y0 in 0..n1 {
                for y1 in 0..n1 {
                    acc += w0[x0] * w0[x1] * w1[y0] * w1[y1]
                        * f.value(&[x0, y0])
                        * f.value(&[x0, y1])
                        * f.value(&[x1, y0])
                        * f.value(&[x1, y1]);
                }
            }
        }
    }
    acc
}

fn c4_constant_and_rank_one() -> Outcome {
    for c in [0.0, 0.25, 1.0] {
        for k in 1..=3 {
            let f = MeasuredFunction::constant(grid(&vec![3; k]), c).unwrap();
            let n = box_norm(&f, 6).unwrap().norm;
            check(n == c, format!("constant {c} at k={k} gave {n:e}"))?;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(104);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let space = weighted_space(&[5, 4], &mut rng);
        let u: Vec<f64> = (0..5).map(|_| rng.gen()).collect();
        let v: Vec<f64> = (0..4).map(|_| rng.gen()).collect();
        let g = Grid::new(space.clone(), Signature(vec![0, 1])).unwrap();
        let f = MeasuredFunction::from_fn(g, |p| u[p[0]] * v[p[1]]).unwrap();
        let nu: f64 = space.part(0).weights.iter().zip(&u).map(|(w, x)| w * x * x).sum::<f64>().sqrt();
        let nv: f64 = space.part(1).weights.iter().zip(&v).map(|(w, x)| w * x * x).sum::<f64>().sqrt();
        let got = box_norm(&f, 6).unwrap().norm;
        let naive = naive_box_raw(&f).powf(0.25);
        worst = worst.max((got - nu * nv).abs()).max((got - naive).abs());
        check((got - nu * nv).abs() <= 1e-10 && (got - naive).abs() <= 1e-10, format!("rank one: {got} vs {}", nu * nv))?;
    }
    Ok(format!("constants exact, rank-one max gap {worst:.1e}"))
}

fn c5_column_traversals() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(105);
    let mut tight = f64::INFINITY;
    for i in 0..50 {
        let space = weighted_space(&[4, 4], &mut rng);
        let p = rng.gen_range(0.3..1.0);
        let r = Relation::from_fn(Grid::new(space, Signature(vec![0, 1])).unwrap(), |_| rng.gen_bool(p));
        let sigma = box_power(&r, &[2, 2]).unwrap();
        let mut brute = 0.0;
        let mut agree = true;
        sigma.grid().for_each_point(|_, x| {
            let all = [(x[0], x[2]), (x[0], x[3]), (x[1], x[2]), (x[1], x[3])]
                .iter()
                .all(|&(a, b)| r.contains(&[a, b]));
            agree &= all == sigma.contains(x);
            if all {
                brute += sigma.grid().point_mass(x);
            }
        });
        check(agree, format!("relation {i}: box_power disagrees with enumeration"))?;
        let alpha4 = r.measure().powi(4);
        check(brute >= alpha4 - 1e-12, format!("relation {i}: {brute} < {alpha4}"))?;
        tight = tight.min(brute - alpha4);
    }
    Ok(format!("0 violations in 50, min slack {tight:.2e}"))
}

fn c6_projection_and_rounding() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(106);
    let g = grid(&[4, 5]);
    for i in 0..50 {
        let f = MeasuredFunction::from_fn(g.clone(), |_| rng.gen()).unwrap();
        let gens: Vec<NamedRelation> = (0..3)
            .map(|j| NamedRelation { name: format!("g{j}"), relation: Relation::from_fn(g.clone(), |_| rng.gen_bool(0.5)) })
            .collect();
        let part = atoms(&g, &gens).unwrap();
        let proj = project_simple(&f, &part, None).unwrap();
        let masses = g.point_masses();
        let err = |coef: &[f64]| -> f64 {
            (0..g.len()).map(|p| masses[p] * (f.values()[p] - coef[part.cell_of()[p]]).powi(2)).sum::<f64>().sqrt()
        };
        for c in 0..part.num_cells() {
            for delta in [1e-3, -1e-3] {
                let mut moved = proj.coefficients.clone();
                moved[c] += delta;
                check(err(&moved) > proj.error, format!("instance {i}: cell {c} not optimal"))?;
            }
        }
    }
    let big = grid(&[16, 16]);
    let mut met = 0;
    let mut worst = 0.0f64;
    while met < 50 {
        let gens: Vec<NamedRelation> = (0..2)
            .map(|j| NamedRelation { name: format!("g{j}"), relation: Relation::from_fn(big.clone(), |_| rng.gen_bool(0.5)) })
            .collect();
        let part = atoms(&big, &gens).unwrap();
        let keep: Vec<bool> = (0..part.num_cells()).map(|_| rng.gen_bool(0.5)).collect();
        let flip = rng.gen_range(0.0..0.01);
        let x = Relation::from_fn(big.clone(), |p| keep[part.cell_of()[big.flat_index(p)]] ^ rng.gen_bool(flip));
        let proj = project_simple(x.function(), &part, None).unwrap();
        // the smallest ε meeting the hypothesis; exact unions are skipped
        let eps = (2.0 * proj.error).sqrt();
        if eps == 0.0 || eps >= 1.0 {
            continue;
        }
        met += 1;
        let y = round_to_union(&x, &part, eps).unwrap();
        let gap = x.function().l2_distance(y.function()).unwrap();
        check(gap <= 3.0 * eps, format!("gap {gap} > 3*{eps}"))?;
        worst = worst.max(gap / eps);
    }
    Ok(format!("50 projections optimal, 50 roundings within 3eps (max gap/eps {worst:.2})"))
}

fn c7_decomposition_closure() -> Outcome {
    let mut worst_n = 0;
    for seed in 0..20u64 {
        let m = 1 + (seed as usize % 3);
        let bc = boolean_of_lower_arity(3, 1, m, &[5, 5, 5], seed).unwrap();
        let pool = FiberPool::Explicit(bc.expr.leaves.clone());
        let (expr, rep) = fit_boolean_cylinders(&bc.relation, 1, 8, &pool, seed).unwrap();
        let sd = expr.sym_diff(&bc.relation).unwrap();
        check(sd == 0.0 && rep.error == 0.0, format!("seed {seed}: symmetric difference {sd}"))?;
        check(rep.n_terms <= 8, format!("seed {seed}: {} leaves", rep.n_terms))?;
        worst_n = worst_n.max(rep.n_terms);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(107);
    let mut worst = 0.0f64;
    for trial in 0..10 {
        let sizes = [3, 4, 3];
        let g = grid(&sizes);
        let k = 1 + trial % 2;
        let sets: Vec<Vec<usize>> = if k == 1 { vec![vec![0], vec![1], vec![2]] } else { vec![vec![0, 1], vec![0, 2], vec![1, 2]] };
        let n = 2 + trial % 3;
        let terms: Vec<CylinderTerm> = (0..n)
            .map(|_| CylinderTerm {
                gamma: rng.gen_range(0.0..1.0 / n as f64),
                factors: sets
                    .iter()
                    .map(|pos| {
                        let sub = g.sub_grid(pos).unwrap();
                        let len = sub.len();
                        Factor { values: MeasuredFunction::new(sub, (0..len).map(|_| rng.gen()).collect()).unwrap(), positions: pos.clone() }
                    })
                    .collect(),
            })
            .collect();
        let d = CylinderDecomposition::new(g, k, terms).unwrap();
        let f = d.to_function().unwrap();
        let (_, rep) = fit_weighted_cylinders(&f, k, n, 50, trial as u64, Some(&d)).unwrap();
        check(rep.error <= 1e-9, format!("representable target {trial}: error {:e}", rep.error))?;
        worst = worst.max(rep.error);
    }
    Ok(format!("20 Boolean combinations exact with <= {worst_n} leaves; oracle-initialized fits max error {worst:.1e}"))
}

fn c8_converse_sweep() -> Outcome {
    let cfg = SweepConfig::new(1, vec![2, 4, 8], 20, SWEEP_SEED);
    let rows = quasirandomness_curve(&cfg).map_err(|e| e.to_string())?;
    check(rows.windows(2).all(|w| w[1].mean_norm < w[0].mean_norm), "mean norm not strictly decreasing")?;
    for (row, (d, gold)) in rows.iter().zip(GOLDEN_NORMS) {
        check(row.d == d, "sides out of order")?;
        check((row.mean_norm - gold).abs() <= 0.1 * gold, format!("d={d}: {} vs golden {gold}", row.mean_norm))?;
    }
    let f = membership_gadget(8, 1).unwrap();
    let cert = check_shattered(&f, &VcBox(vec![(0..8).collect()]), 1, ShatterMode::Relation, DEFAULT_GRID_CAP)
        .unwrap()
        .ok_or("gadget box not shattered")?;
    let h = random_pattern(8, 1, 0.5, SWEEP_SEED).unwrap();
    let hard = inapproximability_score(&build_instance(&f, &cert, &h, &[]).unwrap(), 1, 4, SWEEP_SEED).unwrap();
    // control: the pattern ignores the witness coordinate, a single cylinder
    let a = random_pattern(8, 0, 0.5, SWEEP_SEED).unwrap();
    let control = Relation::from_fn(h.grid().clone(), |p| a.contains(&[p[0]]));
    let easy = inapproximability_score(&build_instance(&f, &cert, &control, &[]).unwrap(), 1, 4, SWEEP_SEED).unwrap();
    check(hard > 5.0 * easy, format!("score {hard} vs control {easy}"))?;
    let norms: Vec<String> = rows.iter().map(|r| format!("d={}:{:.4}", r.d, r.mean_norm)).collect();
    Ok(format!("{}; score {hard:.4} vs control {easy:.1e}", norms.join(" ")))
}

fn c9_averaging() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(109);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let space = weighted_space(&[3, 4, 2], &mut rng);
        let arity = rng.gen_range(1..=3);
        let sig: Vec<usize> = (0..arity).map(|_| rng.gen_range(0..3)).collect();
        let g = Grid::new(space, Signature(sig)).unwrap();
        let f = MeasuredFunction::from_fn(g.clone(), |_| rng.gen()).unwrap();
        let pos = rng.gen_range(0..arity);
        let out = average_out(&f, pos).unwrap();
        let w = g.axis_weights(pos);
        let mut ok = true;
        out.grid().for_each_point(|flat, y| {
            let mut x: Vec<usize> = y.to_vec();
            x.insert(pos, 0);
            let mut naive = 0.0;
            for (v, wv) in w.iter().enumerate() {
                x[pos] = v;
                naive += wv * f.value(&x);
            }
            let gap = (naive - out.values()[flat]).abs();
            worst = worst.max(gap);
            ok &= gap <= 1e-12;
        });
        check(ok, "average_out differs from the loop")?;
    }
    let mut dims = Vec::new();
    for (d, k) in [(1, 1), (2, 1), (1, 2), (2, 2)] {
        let f = membership_gadget(d, k).unwrap();
        // append a dummy part and coordinate, then average it away
        let mut parts = f.space().parts().to_vec();
        parts.push(vck_core::Part::uniform("dummy", 3));
        let space = PartiteSpace::new(parts).unwrap();
        let f = MeasuredFunction::new(Grid::new(space.clone(), f.signature().clone()).unwrap(), f.values().to_vec()).unwrap();
        let mut coords = f.signature().0.clone();
        coords.push(space.num_parts() - 1);
        let wide = Grid::new(space, Signature(coords)).unwrap();
        let lifted = cylinder_extend(&f, &(0..=k).collect::<Vec<_>>(), &wide).unwrap();
        let back = average_out(&lifted, k + 1).unwrap();
        let before = vc_k(&f, k, ShatterMode::Relation, DEFAULT_GRID_CAP).unwrap();
        let after = vc_k(&back, k, ShatterMode::Relation, DEFAULT_GRID_CAP).unwrap();
        check(before.complete && after.complete, "incomplete search")?;
        check(before.dimension == after.dimension && before.dimension == d, format!("gadget ({d},{k}): {} vs {}", before.dimension, after.dimension))?;
        dims.push(format!("({d},{k})->{}", after.dimension));
    }
    Ok(format!("100 averages max gap {worst:.1e}; gadget VC kept {}", dims.join(" ")))
}

fn vck_lab(dir: &Path, args: &[&str]) -> Result<(i32, Value), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_vck-lab"))
        .current_dir(dir)
        .env("VCK_LAB_THREADS", "2")
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    let code = out.status.code().unwrap_or(-1);
    let report: Value = serde_json::from_slice(&out.stdout)
        .map_err(|e| format!("{args:?}: no report ({e}); stderr {}", String::from_utf8_lossy(&out.stderr)))?;
    Ok((code, report))
}

fn comparable(mut v: Value) -> Value {
    v.as_object_mut().map(|m| m.remove("meta"));
    v
}

fn c10_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d = dir.path();
    let setup: &[&[&str]] = &[
        &["gen", "--kind", "membership", "--params", "d=3,k=1", "--out", "m.json"],
        &["gen", "--kind", "parity", "--params", "n=4", "--seed", "3", "--out", "p.json"],
        &["vcdim", "--input", "m.json", "--cert-out", "c.json"],
    ];
    for args in setup {
        vck_lab(d, args)?;
    }
    let commands: &[&[&str]] = &[
        &["gen", "--kind", "boolcomb", "--params", "k_prime=3,k=1,m=3", "--seed", "5", "--out", "b.json"],
        &["gen", "--kind", "quasirandom", "--params", "sizes=4x6,p=0.3", "--seed", "2", "--out", "q.json"],
        &["vcdim", "--input", "m.json"],
        &["gowers", "--input", "p.json", "--function", "E", "--center", "0.5"],
        &["fibers", "--input", "p.json", "--function", "E", "--eps", "0.1"],
        &["decompose", "--input", "p.json", "--function", "E", "--k", "2", "--n-max", "4", "--seed", "1"],
        &["decompose", "--input", "p.json", "--function", "E", "--k", "1", "--mode", "boolean", "--seed", "1"],
        &["adversary", "--k", "1", "--d", "2,4", "--trials", "3", "--seed", "9", "--out", "curve.csv"],
        &["verify", "c.json", "m.json"],
    ];
    let mut names = Vec::new();
    for args in commands {
        let (c1, r1) = vck_lab(d, args)?;
        let files: Vec<Vec<u8>> = ["b.json", "q.json", "curve.csv"].iter().map(|f| std::fs::read(d.join(f)).unwrap_or_default()).collect();
        let (c2, r2) = vck_lab(d, args)?;
        let again: Vec<Vec<u8>> = ["b.json", "q.json", "curve.csv"].iter().map(|f| std::fs::read(d.join(f)).unwrap_or_default()).collect();
        check(c1 == 0 && c2 == 0, format!("{args:?} exited {c1}/{c2}"))?;
        let (a, b) = (comparable(r1), comparable(r2));
        check(serde_json::to_string(&a).unwrap() == serde_json::to_string(&b).unwrap(), format!("{args:?}: reports differ"))?;
        check(files == again, format!("{args:?}: output files differ"))?;
        names.push(args[0]);
    }
    names.dedup();
    Ok(format!("{} runs identical ({})", commands.len(), names.join(", ")))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("VC oracle equivalence", c1_vc_oracle),
        ("Sauer-Shelah conformance", c2_sauer_shelah),
        ("Gowers identities", c3_gowers_identities),
        ("constant and rank-one norms", c4_constant_and_rank_one),
        ("column traversal measure", c5_column_traversals),
        ("projection optimality and rounding", c6_projection_and_rounding),
        ("decomposition closure", c7_decomposition_closure),
        ("converse sweep", c8_converse_sweep),
        ("averaging", c9_averaging),
        ("determinism", c10_determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {why}", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
