//! Closed intervals with outward rounding, enough to enclose catalog lifts.

use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

// Slack for libm sin/cos, which are faithful to well under this many ulps of 1.
const TRIG_SLACK: f64 = 4.0 * f64::EPSILON;

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi, "empty interval [{lo}, {hi}]");
        Interval { lo, hi }
    }

    pub fn point(x: f64) -> Self {
        Interval { lo: x, hi: x }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    fn outward(lo: f64, hi: f64) -> Self {
        Interval {
            lo: lo.next_down(),
            hi: hi.next_up(),
        }
    }

    pub fn add(self, o: Interval) -> Interval {
        Interval::outward(self.lo + o.lo, self.hi + o.hi)
    }

    pub fn sub(self, o: Interval) -> Interval {
        Interval::outward(self.lo - o.hi, self.hi - o.lo)
    }

    pub fn add_scalar(self, c: f64) -> Interval {
        Interval::outward(self.lo + c, self.hi + c)
    }

    pub fn scale(self, c: f64) -> Interval {
        let a = self.lo * c;
        let b = self.hi * c;
        Interval::outward(a.min(b), a.max(b))
    }

    /// Enclosure of sin(2πx) over the interval.
    pub fn sin2pi(self) -> Interval {
        self.trig(0.0)
    }

    /// Enclosure of cos(2πx) over the interval.
    pub fn cos2pi(self) -> Interval {
        self.trig(0.25)
    }

    // sin(2π(x + phase)) has maxima at x + phase ∈ 1/4 + Z, minima at 3/4 + Z.
    fn trig(self, phase: f64) -> Interval {
        if self.width() >= 1.0 || !self.width().is_finite() {
            return Interval::new(-1.0, 1.0);
        }
        // Shifting by an integer is exact and keeps the trig arguments small.
        let k = self.lo.floor();
        let (x0, x1) = (self.lo - k, self.hi - k);
        let f = |x: f64| (2.0 * PI * (x + phase)).sin();
        let a = f(x0);
        let b = f(x1);
        let mut lo = a.min(b);
        let mut hi = a.max(b);
        let lo_s = x0 + phase;
        let hi_s = x1 + phase;
        if ((lo_s - 0.25).ceil()) <= hi_s - 0.25 {
            hi = 1.0;
        }
        if ((lo_s - 0.75).ceil()) <= hi_s - 0.75 {
            lo = -1.0;
        }
        Interval::new((lo - TRIG_SLACK).max(-1.0), (hi + TRIG_SLACK).min(1.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sin_hits_extrema() {
        let i = Interval::new(0.2, 0.3).sin2pi();
        assert_eq!(i.hi, 1.0);
        let j = Interval::new(0.7, 0.8).sin2pi();
        assert_eq!(j.lo, -1.0);
        let k = Interval::new(0.0, 0.1).cos2pi();
        assert_eq!(k.hi, 1.0);
    }

    proptest! {
        #[test]
        fn trig_enclosures_contain_samples(lo in -3.0f64..3.0, w in 0.0f64..0.6, t in 0.0f64..1.0) {
            let i = Interval::new(lo, lo + w);
            let x = lo + t * w;
            let s = (2.0 * PI * x).sin();
            let c = (2.0 * PI * x).cos();
            prop_assert!(i.sin2pi().contains(s));
            prop_assert!(i.cos2pi().contains(c));
        }

        #[test]
        fn arithmetic_encloses(a in -5.0f64..5.0, b in -5.0f64..5.0, c in -3.0f64..3.0) {
            let i = Interval::point(a);
            let j = Interval::point(b);
            prop_assert!(i.add(j).contains(a + b));
            prop_assert!(i.sub(j).contains(a - b));
            prop_assert!(i.scale(c).contains(a * c));
        }
    }
}
