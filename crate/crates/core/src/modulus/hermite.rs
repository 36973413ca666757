use crate::scalar::Real;

/// Cubic Hermite interpolant of increasing data with Fritsch-Carlson slope
/// limiting, so the interpolant is monotone between knots.
#[derive(Debug, Clone)]
pub struct MonotoneHermite<T> {
    x: Vec<T>,
    y: Vec<T>,
    slopes: Vec<T>,
}

impl<T: Real> MonotoneHermite<T> {
    /// `x` strictly increasing, `y` nondecreasing, `slopes` the derivative
    /// estimates at the knots (exact derivatives when known).
    pub fn new(x: Vec<T>, y: Vec<T>, mut slopes: Vec<T>) -> Self {
        assert!(x.len() >= 2 && x.len() == y.len() && y.len() == slopes.len());
        let three = T::lit(3.0);
        for i in 0..x.len() - 1 {
            let secant = (y[i + 1] - y[i]) / (x[i + 1] - x[i]);
            if secant <= T::zero() {
                slopes[i] = T::zero();
                slopes[i + 1] = T::zero();
                continue;
            }
            let a = slopes[i] / secant;
            let b = slopes[i + 1] / secant;
            let r = (a * a + b * b).sqrt();
            if r > three {
                let scale = three / r;
                slopes[i] = scale * a * secant;
                slopes[i + 1] = scale * b * secant;
            }
        }
        Self { x, y, slopes }
    }

    pub fn knots(&self) -> &[T] {
        &self.x
    }

    pub fn values(&self) -> &[T] {
        &self.y
    }

    /// Index `i` of the interval `[x_i, x_{i+1}]` containing `t` (clamped).
    pub fn locate(&self, t: T) -> usize {
        let i = self.x.partition_point(|&k| k <= t);
        i.saturating_sub(1).min(self.x.len() - 2)
    }

    pub fn eval(&self, t: T) -> T {
        self.eval_in(self.locate(t), t)
    }

    pub fn eval_in(&self, i: usize, t: T) -> T {
        let h = self.x[i + 1] - self.x[i];
        let u = (t - self.x[i]) / h;
        let (one, two, three) = (T::one(), T::lit(2.0), T::lit(3.0));
        let u2 = u * u;
        let u3 = u2 * u;
        let h00 = two * u3 - three * u2 + one;
        let h10 = u3 - two * u2 + u;
        let h01 = -two * u3 + three * u2;
        let h11 = u3 - u2;
        h00 * self.y[i] + h10 * h * self.slopes[i] + h01 * self.y[i + 1] + h11 * h * self.slopes[i + 1]
    }

    pub fn derivative(&self, t: T) -> T {
        let i = self.locate(t);
        let h = self.x[i + 1] - self.x[i];
        let u = (t - self.x[i]) / h;
        let (one, six, four, three, two) = (T::one(), T::lit(6.0), T::lit(4.0), T::lit(3.0), T::lit(2.0));
        let u2 = u * u;
        let d00 = (six * u2 - six * u) / h;
        let d10 = three * u2 - four * u + one;
        let d01 = (-six * u2 + six * u) / h;
        let d11 = three * u2 - two * u;
        d00 * self.y[i] + d10 * self.slopes[i] + d01 * self.y[i + 1] + d11 * self.slopes[i + 1]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reproduces_cubic_with_exact_slopes() {
        let x: Vec<f64> = (0..11).map(|i| i as f64 * 0.1).collect();
        let y: Vec<f64> = x.iter().map(|t| t * t * t + t).collect();
        let d: Vec<f64> = x.iter().map(|t| 3.0 * t * t + 1.0).collect();
        let h = MonotoneHermite::new(x, y, d);
        for k in 0..100 {
            let t = k as f64 * 0.0099;
            assert!((h.eval(t) - (t * t * t + t)).abs() < 1e-14);
        }
    }

    proptest! {
        #[test]
        fn stays_monotone_on_steps(jumps in proptest::collection::vec(0.0f64..5.0, 3..20)) {
            let x: Vec<f64> = (0..jumps.len()).map(|i| i as f64).collect();
            let mut y = Vec::new();
            let mut acc = 0.0;
            for j in &jumps { acc += j; y.push(acc); }
            // Deliberately bad slopes.
            let d: Vec<f64> = jumps.iter().map(|j| 10.0 * j + 1.0).collect();
            let h = MonotoneHermite::new(x.clone(), y, d);
            let mut prev = f64::NEG_INFINITY;
            for k in 0..(200 * (x.len() - 1)) {
                let v = h.eval(k as f64 / 200.0);
                prop_assert!(v >= prev - 1e-12);
                prev = v;
            }
        }
    }
}
