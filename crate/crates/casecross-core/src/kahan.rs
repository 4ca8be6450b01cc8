/// Neumaier-compensated accumulator.
///
/// Enumeration sums add up to a few tens of millions of terms spanning many
/// orders of magnitude; plain `f64` accumulation would eat into the 1e-10 and
/// 1e-12 agreement tolerances the analytic identities are checked at.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sum2 {
    sum: f64,
    comp: f64,
}

impl Sum2 {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if abs(self.sum) >= abs(x) {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

#[inline]
fn abs(x: f64) -> f64 {
    f64::from_bits(x.to_bits() & !(1u64 << 63))
}
