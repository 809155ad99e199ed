//! Compensated accumulator for running sums.
//!
//! Running sums only ever grow (RC-RS never resets them), so after a few
//! thousand slots a naive `f64` sum has lost the low-order bits of the
//! per-slot increments. Receivers recover those increments as differences
//! of two running sums, which must therefore be exact to full `f64`
//! precision. The accumulator keeps an unevaluated sum `hi + lo` updated
//! with error-free transformations.

/// Error-free sum: returns `(s, e)` with `s = fl(a + b)` and `a + b = s + e`.
#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    (s, e)
}

/// A running sum stored as a double-double value.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunningSum {
    hi: f64,
    lo: f64,
}

impl RunningSum {
    pub const ZERO: RunningSum = RunningSum { hi: 0.0, lo: 0.0 };

    pub fn add(&mut self, value: f64) {
        let (s, e) = two_sum(self.hi, value);
        let (hi, lo) = two_sum(s, e + self.lo);
        self.hi = hi;
        self.lo = lo;
    }

    /// `self - earlier`, rounded once to `f64`.
    pub fn since(&self, earlier: &RunningSum) -> f64 {
        let (d, e) = two_sum(self.hi, -earlier.hi);
        d + (e + (self.lo - earlier.lo))
    }

    pub fn value(&self) -> f64 {
        self.hi + self.lo
    }

    pub fn is_zero(&self) -> bool {
        self.hi == 0.0 && self.lo == 0.0
    }
}
