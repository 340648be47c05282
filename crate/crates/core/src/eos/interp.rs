use super::EosError;

/// Piecewise cubic Hermite interpolant whose nodal slopes are limited so
/// that monotone data yields a monotone interpolant.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneCubic {
    x: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl MonotoneCubic {
    /// Slopes from the weighted harmonic mean of neighbouring secants.
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self, EosError> {
        validate_nodes(&x, &y)?;
        let n = x.len();
        let secant: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / (x[k + 1] - x[k])).collect();
        let mut m = vec![0.0; n];
        m[0] = secant[0];
        m[n - 1] = secant[n - 2];
        for k in 1..n - 1 {
            let (d0, d1) = (secant[k - 1], secant[k]);
            if d0 * d1 > 0.0 {
                let h0 = x[k] - x[k - 1];
                let h1 = x[k + 1] - x[k];
                let w0 = 2.0 * h1 + h0;
                let w1 = h1 + 2.0 * h0;
                m[k] = (w0 + w1) / (w0 / d0 + w1 / d1);
            }
        }
        Ok(Self { x, y, m })
    }

    /// Hermite data with prescribed slopes, limited where they would break
    /// monotonicity of the data.
    pub fn with_slopes(x: Vec<f64>, y: Vec<f64>, mut m: Vec<f64>) -> Result<Self, EosError> {
        validate_nodes(&x, &y)?;
        if m.len() != x.len() {
            return Err(EosError::InvalidParameter("slope count differs from node count".into()));
        }
        for k in 0..x.len() - 1 {
            let d = (y[k + 1] - y[k]) / (x[k + 1] - x[k]);
            if d == 0.0 {
                m[k] = 0.0;
                m[k + 1] = 0.0;
                continue;
            }
            let mut a = m[k] / d;
            let mut b = m[k + 1] / d;
            if a < 0.0 {
                m[k] = 0.0;
                a = 0.0;
            }
            if b < 0.0 {
                m[k + 1] = 0.0;
                b = 0.0;
            }
            let r2 = a * a + b * b;
            if r2 > 9.0 {
                let tau = 3.0 / r2.sqrt();
                m[k] = tau * a * d;
                m[k + 1] = tau * b * d;
            }
        }
        Ok(Self { x, y, m })
    }

    pub fn first(&self) -> (f64, f64, f64) {
        (self.x[0], self.y[0], self.m[0])
    }

    pub fn last(&self) -> (f64, f64, f64) {
        let n = self.x.len() - 1;
        (self.x[n], self.y[n], self.m[n])
    }

    pub fn nodes(&self) -> &[f64] {
        &self.x
    }

    /// Value and derivative at `t`, which must lie inside the node range.
    pub fn eval(&self, t: f64) -> (f64, f64) {
        let n = self.x.len();
        let k = match self.x.partition_point(|&v| v <= t) {
            0 => 0,
            p if p >= n => n - 2,
            p => p - 1,
        };
        self.eval_in(k, t)
    }

    /// Value and derivative at `t` in cell `k` (no search).
    pub fn eval_in(&self, k: usize, t: f64) -> (f64, f64) {
        let h = self.x[k + 1] - self.x[k];
        let s = (t - self.x[k]) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        let v = h00 * self.y[k] + h10 * h * self.m[k] + h01 * self.y[k + 1] + h11 * h * self.m[k + 1];
        let d00 = 6.0 * s2 - 6.0 * s;
        let d10 = 3.0 * s2 - 4.0 * s + 1.0;
        let d01 = -6.0 * s2 + 6.0 * s;
        let d11 = 3.0 * s2 - 2.0 * s;
        let dv = (d00 * self.y[k] + d01 * self.y[k + 1]) / h + d10 * self.m[k] + d11 * self.m[k + 1];
        (v, dv)
    }
}

fn validate_nodes(x: &[f64], y: &[f64]) -> Result<(), EosError> {
    if x.len() < 2 || x.len() != y.len() {
        return Err(EosError::InvalidParameter("interpolation needs at least two nodes".into()));
    }
    if x.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(EosError::InvalidParameter("interpolation nodes must increase strictly".into()));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(EosError::InvalidParameter("non-finite interpolation data".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_nodes_and_stays_monotone() {
        let x: Vec<f64> = (0..20).map(|k| k as f64 * 0.5).collect();
        let y: Vec<f64> = x.iter().map(|v| if *v < 4.0 { 0.0 } else { (v - 4.0).sqrt() }).collect();
        let c = MonotoneCubic::new(x.clone(), y.clone()).unwrap();
        for (xi, yi) in x.iter().zip(&y) {
            assert!((c.eval(*xi).0 - yi).abs() < 1e-14);
        }
        let mut prev = f64::NEG_INFINITY;
        for k in 0..1000 {
            let v = c.eval(9.5 * k as f64 / 999.0).0;
            assert!(v >= prev - 1e-14);
            prev = v;
        }
    }

    #[test]
    fn exact_slopes_give_high_accuracy() {
        let x: Vec<f64> = (0..=64).map(|k| k as f64 / 64.0).collect();
        let y: Vec<f64> = x.iter().map(|v| v.exp()).collect();
        let c = MonotoneCubic::with_slopes(x, y.clone(), y).unwrap();
        let (v, d) = c.eval(0.3337);
        assert!((v - 0.3337f64.exp()).abs() < 1e-9);
        assert!((d - 0.3337f64.exp()).abs() < 1e-6);
    }

    #[test]
    fn rejects_unsorted_nodes() {
        assert!(MonotoneCubic::new(vec![0.0, 0.0], vec![1.0, 2.0]).is_err());
    }
}
