/// Monotone piecewise-cubic Hermite interpolant (Fritsch–Carlson slopes),
/// `C¹` and shape preserving for monotone data.
#[derive(Clone, Debug, PartialEq)]
pub struct MonotoneCubic {
    x: Vec<f64>,
    y: Vec<f64>,
    slope: Vec<f64>,
}

impl MonotoneCubic {
    /// `x` strictly increasing with at least two finite samples.
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Option<Self> {
        let k = x.len();
        if k < 2 || y.len() != k || x.iter().chain(&y).any(|v| !v.is_finite()) {
            return None;
        }
        if x.windows(2).any(|w| w[1] <= w[0]) {
            return None;
        }
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = (0..k - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
        let mut slope = vec![0.0; k];
        slope[0] = delta[0];
        slope[k - 1] = delta[k - 2];
        for i in 1..k - 1 {
            if delta[i - 1] * delta[i] > 0.0 {
                let w1 = 2.0 * h[i] + h[i - 1];
                let w2 = h[i] + 2.0 * h[i - 1];
                slope[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
            }
        }
        Some(Self { x, y, slope })
    }

    pub fn knots(&self) -> &[f64] {
        &self.x
    }

    pub fn values(&self) -> &[f64] {
        &self.y
    }

    pub(crate) fn piece(&self, t: f64) -> usize {
        let i = self.x.partition_point(|&r| r <= t);
        i.clamp(1, self.x.len() - 1) - 1
    }

    /// `(f, f′)` at `t`; the end pieces are extended polynomially.
    pub fn eval(&self, t: f64) -> (f64, f64) {
        let i = self.piece(t);
        let h = self.x[i + 1] - self.x[i];
        let s = (t - self.x[i]) / h;
        let (p0, p1, m0, m1) = (self.y[i], self.y[i + 1], self.slope[i], self.slope[i + 1]);
        let s2 = s * s;
        let s3 = s2 * s;
        let value = (2.0 * s3 - 3.0 * s2 + 1.0) * p0
            + (s3 - 2.0 * s2 + s) * h * m0
            + (-2.0 * s3 + 3.0 * s2) * p1
            + (s3 - s2) * h * m1;
        let deriv = ((6.0 * s2 - 6.0 * s) * p0 + (-6.0 * s2 + 6.0 * s) * p1) / h
            + (3.0 * s2 - 4.0 * s + 1.0) * m0
            + (3.0 * s2 - 2.0 * s) * m1;
        (value, deriv)
    }
}
