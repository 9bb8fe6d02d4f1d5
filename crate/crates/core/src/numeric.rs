//! Small numeric helpers shared by the integral-heavy modules.

/// Neumaier-compensated accumulator.
///
/// Every integral and L² norm in the crate goes through this so that
/// results do not depend on the magnitude ordering of the summands.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// Compensated sum of an iterator of floats.
pub fn csum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<CompensatedSum>().value()
}

/// The dyadic grid of height `t` on [0,1]: `{ j / 2^t : 0 <= j <= 2^t }`.
pub fn dyadic_grid(t: u32) -> Vec<f64> {
    let denom = (1u64 << t) as f64;
    (0..=(1u64 << t)).map(|j| j as f64 / denom).collect()
}

/// Nearest point of the dyadic grid of height `t` (ties round up).
pub fn round_dyadic(x: f64, t: u32) -> f64 {
    let denom = (1u64 << t) as f64;
    ((x * denom + 0.5).floor() / denom).clamp(0.0, 1.0)
}

/// Saturating addition `min(1, x + y)`.
#[inline]
pub fn trunc_add(x: f64, y: f64) -> f64 {
    (x + y).min(1.0)
}

/// Truncated subtraction `max(0, x - y)`.
#[inline]
pub fn monus(x: f64, y: f64) -> f64 {
    (x - y).max(0.0)
}

/// `p` saturating additions of `x` to itself.
#[inline]
pub fn repeat(p: u64, x: f64) -> f64 {
    (p as f64 * x).clamp(0.0, 1.0)
}
