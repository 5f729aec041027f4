//! Monotone cubic Hermite interpolation (Fritsch–Carlson slopes).
//!
//! Used to represent the fixed-point iterate of the Møller contraction map
//! between its grid nodes.

/// Piecewise cubic interpolant through (x_k, y_k) with shape-preserving
/// slopes. Nodes must be strictly increasing.
#[derive(Debug, Clone)]
pub struct Pchip {
    x: Vec<f64>,
    y: Vec<f64>,
    slope: Vec<f64>,
}

impl Pchip {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Self {
        assert_eq!(x.len(), y.len());
        assert!(x.len() >= 2);
        let n = x.len();
        let h: Vec<f64> = (0..n - 1).map(|i| x[i + 1] - x[i]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
        let mut m = vec![0.0; n];
        m[0] = delta[0];
        m[n - 1] = delta[n - 2];
        for i in 1..n - 1 {
            if delta[i - 1] * delta[i] <= 0.0 {
                m[i] = 0.0;
            } else {
                // Weighted harmonic mean keeps the interpolant monotone.
                let w1 = 2.0 * h[i] + h[i - 1];
                let w2 = h[i] + 2.0 * h[i - 1];
                m[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
            }
        }
        Pchip { x, y, slope: m }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        if t <= self.x[0] {
            return self.y[0] + self.slope[0] * (t - self.x[0]);
        }
        if t >= self.x[n - 1] {
            return self.y[n - 1] + self.slope[n - 1] * (t - self.x[n - 1]);
        }
        let idx = match self
            .x
            .binary_search_by(|v| v.partial_cmp(&t).unwrap())
        {
            Ok(i) => return self.y[i.min(n - 1)],
            Err(i) => i - 1,
        };
        let h = self.x[idx + 1] - self.x[idx];
        let s = (t - self.x[idx]) / h;
        let (y0, y1) = (self.y[idx], self.y[idx + 1]);
        let (m0, m1) = (self.slope[idx] * h, self.slope[idx + 1] * h);
        let s2 = s * s;
        let s3 = s2 * s;
        y0 * (2.0 * s3 - 3.0 * s2 + 1.0)
            + m0 * (s3 - 2.0 * s2 + s)
            + y1 * (-2.0 * s3 + 3.0 * s2)
            + m1 * (s3 - s2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolates_nodes_exactly() {
        let x = vec![0.0, 1.0, 2.5, 4.0];
        let y = vec![1.0, 0.5, 0.2, 0.1];
        let p = Pchip::new(x.clone(), y.clone());
        for (xi, yi) in x.iter().zip(&y) {
            assert!((p.eval(*xi) - yi).abs() < 1e-14);
        }
    }

    #[test]
    fn preserves_monotone_data() {
        let x: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|t| (-t / 3.0).exp()).collect();
        let p = Pchip::new(x, y);
        let mut prev = p.eval(0.0);
        let mut t = 0.05;
        while t < 19.0 {
            let v = p.eval(t);
            assert!(v <= prev + 1e-12, "not monotone at {t}");
            prev = v;
            t += 0.05;
        }
    }

    #[test]
    fn accurate_on_smooth_function() {
        let x: Vec<f64> = (0..40).map(|i| i as f64 * 0.25).collect();
        let y: Vec<f64> = x.iter().map(|t| (t * 0.7).sin()).collect();
        let p = Pchip::new(x, y);
        let mut t = 0.1;
        while t < 9.5 {
            assert!((p.eval(t) - (t * 0.7).sin()).abs() < 4e-3);
            t += 0.17;
        }
    }
}
