use num_bigint::BigUint;

use crate::error::{invalid, Error, Result};

/// `Σ_{i<z} C(m^k, i)`, exactly.
pub fn sauer_shelah_bound(m: u64, k: u32, z: u64) -> Result<BigUint> {
    if m == 0 || z == 0 {
        return Err(invalid!("sauer_shelah_bound needs m >= 1 and z >= 1"));
    }
    let n = BigUint::from(m).pow(k);
    let mut term = BigUint::from(1u32);
    let mut total = BigUint::from(0u32);
    for i in 0..z {
        let i = BigUint::from(i);
        if i > n {
            break;
        }
        total += &term;
        // C(n, i+1) = C(n, i) * (n - i) / (i + 1)
        term = term * (&n - &i) / (i + 1u32);
    }
    Ok(total)
}

/// Largest parts for which the exhaustive search is attempted, per `k`.
fn max_part(k: u32) -> Option<u32> {
    match k {
        1 => Some(20),
        2 => Some(4),
        3 => Some(2),
        _ => None,
    }
}

/// The Zarankiewicz number `z_k(m, a)`: the least `z` such that every
/// `k`-partite `k`-uniform hypergraph with parts of size `m` and at least `z`
/// edges contains a complete `a x ... x a` box. Computed by exhaustive
/// branch-and-bound over edge sets.
pub fn zarankiewicz(m: u32, a: u32, k: u32) -> Result<u64> {
    if m == 0 || a == 0 || k == 0 {
        return Err(invalid!("zarankiewicz needs m, a, k >= 1"));
    }
    match max_part(k) {
        Some(cap) if m <= cap => {}
        _ => {
            return Err(Error::ResourceLimit(format!(
                "z_{k}({m}, {a}) is outside the exhaustive range (k=1: m<=20, k=2: m<=4, k=3: m<=2)"
            )))
        }
    }
    let cells = (m as usize).pow(k);
    if a > m {
        // no box fits, so even the complete hypergraph avoids one
        return Ok(cells as u64 + 1);
    }
    let boxes = box_masks(m as usize, a as usize, k as usize);
    let mut containing: Vec<Vec<u64>> = vec![Vec::new(); cells];
    for &b in &boxes {
        for (c, list) in containing.iter_mut().enumerate() {
            if b >> c & 1 == 1 {
                list.push(b);
            }
        }
    }
    let mut best = 0usize;
    extend(0, 0, 0, cells, &containing, &mut best);
    Ok(best as u64 + 1)
}

fn box_masks(m: usize, a: usize, k: usize) -> Vec<u64> {
    let subsets: Vec<Vec<usize>> = (0u32..(1 << m))
        .filter(|s| s.count_ones() as usize == a)
        .map(|s| (0..m).filter(|i| s >> i & 1 == 1).collect())
        .collect();
    let mut out = Vec::new();
    let mut choice = vec![0usize; k];
    loop {
        let mut mask = 0u64;
        let mut idx = vec![0usize; k];
        loop {
            let cell = (0..k).fold(0, |acc, j| acc * m + subsets[choice[j]][idx[j]]);
            mask |= 1 << cell;
            let mut j = k;
            let mut done = true;
            while j > 0 {
                j -= 1;
                idx[j] += 1;
                if idx[j] < a {
                    done = false;
                    break;
                }
                idx[j] = 0;
            }
            if done {
                break;
            }
        }
        out.push(mask);
        let mut j = k;
        loop {
            if j == 0 {
                return out;
            }
            j -= 1;
            choice[j] += 1;
            if choice[j] < subsets.len() {
                break;
            }
            choice[j] = 0;
        }
    }
}

fn extend(
    cell: usize,
    edges: u64,
    count: usize,
    cells: usize,
    containing: &[Vec<u64>],
    best: &mut usize,
) {
    if count + (cells - cell) <= *best {
        return;
    }
    if cell == cells {
        *best = count;
        return;
    }
    let with = edges | 1 << cell;
    if containing[cell].iter().all(|&b| with & b != b) {
        extend(cell + 1, with, count + 1, cells, containing, best);
    }
    extend(cell + 1, edges, count, cells, containing, best);
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binom(n: u64, r: u64) -> u64 {
        (0..r).fold(1, |acc, i| acc * (n - i) / (i + 1))
    }

    #[test]
    fn sauer_shelah_examples() {
        assert_eq!(sauer_shelah_bound(5, 1, 3).unwrap(), BigUint::from(16u32));
        assert_eq!(sauer_shelah_bound(7, 1, 1).unwrap(), BigUint::from(1u32));
        assert_eq!(sauer_shelah_bound(3, 2, 7).unwrap(), BigUint::from(466u32));
        let direct: u64 = (0..7).map(|i| binom(9, i)).sum();
        assert_eq!(direct, 466);
        // z beyond m^k saturates at 2^(m^k)
        assert_eq!(sauer_shelah_bound(2, 2, 100).unwrap(), BigUint::from(16u32));
        assert!(sauer_shelah_bound(0, 1, 1).is_err());
    }

    #[test]
    fn sauer_shelah_needs_big_integers() {
        let b = sauer_shelah_bound(10, 3, 600).unwrap();
        assert!(b.bits() > 128);
    }

    /// Brute force over every edge set, no pruning.
    fn naive_z2(m: usize, a: usize) -> u64 {
        let boxes = box_masks(m, a, 2);
        let mut best = 0;
        for e in 0u64..(1 << (m * m)) {
            if boxes.iter().all(|&b| e & b != b) {
                best = best.max(e.count_ones());
            }
        }
        best as u64 + 1
    }

    #[test]
    fn zarankiewicz_small_cases() {
        assert_eq!(zarankiewicz(2, 2, 2).unwrap(), 4);
        assert_eq!(zarankiewicz(3, 2, 2).unwrap(), 7);
        assert_eq!(zarankiewicz(4, 2, 2).unwrap(), 10);
        for (m, a) in [(2, 2), (3, 2), (3, 3), (4, 2)] {
            assert_eq!(zarankiewicz(m, a, 2).unwrap(), naive_z2(m as usize, a as usize));
        }
        assert_eq!(zarankiewicz(6, 3, 1).unwrap(), 3);
        assert_eq!(zarankiewicz(2, 1, 3).unwrap(), 1);
        assert_eq!(zarankiewicz(3, 4, 2).unwrap(), 10);
    }

    #[test]
    fn zarankiewicz_refuses_large_parameters() {
        assert!(matches!(zarankiewicz(5, 2, 2), Err(Error::ResourceLimit(_))));
        assert!(matches!(zarankiewicz(3, 2, 3), Err(Error::ResourceLimit(_))));
    }
}
