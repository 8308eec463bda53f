//! Quartic roots through the eigenvalues of the companion matrix.

use nalgebra::Matrix4;
use num_complex::Complex64;

/// `c[0] + c[1] x + c[2] x^2 + c[3] x^3 + c[4] x^4` with `c[4] != 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quartic {
    coeffs: [f64; 5],
}

impl Quartic {
    /// Coefficients in ascending order. Returns `None` for a vanishing leading term.
    pub fn new(coeffs: [f64; 5]) -> Option<Self> {
        if coeffs[4] == 0.0 || coeffs.iter().any(|c| !c.is_finite()) {
            return None;
        }
        Some(Self { coeffs })
    }

    pub fn coeffs(&self) -> &[f64; 5] {
        &self.coeffs
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    fn eval_complex(&self, x: Complex64) -> (Complex64, Complex64) {
        let mut v = Complex64::new(0.0, 0.0);
        let mut d = Complex64::new(0.0, 0.0);
        for &c in self.coeffs.iter().rev() {
            d = d * x + v;
            v = v * x + c;
        }
        (v, d)
    }

    /// All four roots, each polished by a few Newton steps.
    ///
    /// The variable is rescaled by the Fujiwara bound before the companion
    /// matrix is formed so the Schur iteration sees entries of order one.
    pub fn roots(&self) -> [Complex64; 4] {
        let lead = self.coeffs[4];
        let monic: Vec<f64> = self.coeffs[..4].iter().map(|c| c / lead).collect();
        let scale = (0..4)
            .map(|k| {
                let r = monic[k].abs().powf(1.0 / (4 - k) as f64);
                if k == 0 {
                    r * 0.5f64.powf(0.25)
                } else {
                    r
                }
            })
            .fold(0.0f64, f64::max)
            * 2.0;
        let scale = if scale > 0.0 && scale.is_finite() { scale } else { 1.0 };

        // x = scale * u; monic in u: u^4 + sum monic[k] / scale^(4-k) u^k
        let mut m = Matrix4::<f64>::zeros();
        for k in 0..4 {
            m[(k, 3)] = -monic[k] / scale.powi(4 - k as i32);
        }
        for k in 1..4 {
            m[(k, k - 1)] = 1.0;
        }
        let eig = m.complex_eigenvalues();
        let mut out = [Complex64::new(0.0, 0.0); 4];
        for (slot, u) in out.iter_mut().zip(eig.iter()) {
            let mut x = Complex64::new(u.re * scale, u.im * scale);
            for _ in 0..4 {
                let (v, d) = self.eval_complex(x);
                if d.norm() == 0.0 {
                    break;
                }
                let step = v / d;
                if !step.re.is_finite() || !step.im.is_finite() {
                    break;
                }
                x -= step;
                if step.norm() <= 1e-16 * x.norm() {
                    break;
                }
            }
            *slot = x;
        }
        out
    }

    /// Roots whose imaginary part is negligible relative to their modulus.
    pub fn real_roots(&self) -> Vec<f64> {
        let mut r: Vec<f64> =
            self.roots().iter().filter(|z| z.im.abs() <= 1e-7 * z.norm().max(1e-300)).map(|z| z.re).collect();
        r.sort_by(|a, b| a.total_cmp(b));
        r
    }
}
