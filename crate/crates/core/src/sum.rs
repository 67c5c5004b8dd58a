//! Compensated (Neumaier) summation and a few error-free transforms.

/// Running Neumaier sum. The true value is approximately `sum + comp`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CompensatedSum {
    pub sum: f64,
    pub comp: f64,
}

impl CompensatedSum {
    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    /// Folds another partial sum into this one.
    pub fn merge(&mut self, other: &CompensatedSum) {
        self.add(other.sum);
        self.comp += other.comp;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

pub fn compensated_sum(xs: &[f64]) -> f64 {
    let mut acc = CompensatedSum::default();
    for &x in xs {
        acc.add(x);
    }
    acc.value()
}

#[inline]
pub(crate) fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

/// `a + b - n*avg` where `a` and `b` are (hi, lo) pairs, evaluated in
/// double-double so the result is accurate relative to `avg` rather than to
/// the magnitude of the prefix sums.
#[inline]
pub(crate) fn excess_dd(a: (f64, f64), b: (f64, f64), n: usize, avg: f64) -> f64 {
    let nf = n as f64;
    let p = nf * avg;
    let e = nf.mul_add(avg, -p);
    let (s1, t1) = two_sum(a.0, b.0);
    let (s2, t2) = two_sum(s1, -p);
    s2 + (((t1 + t2) + (a.1 + b.1)) - e)
}
