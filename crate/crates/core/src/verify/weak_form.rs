//! Weak continuity-equation residual
//! `int_X d_t phi d rho + grad phi . dm` for atomic measures.

use serde::{Deserialize, Serialize};

use crate::measure::AtomicMeasurePair;

/// Time factor of a separable test function; both vanish at `t = 0` and `t = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TimeFactor {
    /// `t^a (1 - t)^b` with `a, b >= 1`.
    Polynomial { a: u32, b: u32 },
    /// `sin(pi t)`.
    Sine,
}

/// Spatial factor of a separable test function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SpaceFactor {
    /// `prod_k x_k^{p_k}`.
    Monomial { powers: Vec<u32> },
    /// `cos(k . x)`.
    Cosine { frequency: Vec<f64> },
}

/// `phi(t, x) = amplitude T(t) X(x)` with closed-form derivatives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    pub time: TimeFactor,
    pub space: SpaceFactor,
    #[serde(default = "unit_amplitude")]
    pub amplitude: f64,
}

fn unit_amplitude() -> f64 {
    1.0
}

impl TestFunction {
    /// `t^a (1 - t)^b x^p`.
    pub fn polynomial(a: u32, b: u32, powers: Vec<u32>) -> Self {
        assert!(a >= 1 && b >= 1, "time exponents must be at least 1");
        Self { time: TimeFactor::Polynomial { a, b }, space: SpaceFactor::Monomial { powers }, amplitude: 1.0 }
    }

    /// `sin(pi t) cos(k . x)`.
    pub fn trigonometric(frequency: Vec<f64>) -> Self {
        Self { time: TimeFactor::Sine, space: SpaceFactor::Cosine { frequency }, amplitude: 1.0 }
    }

    pub fn new(time: TimeFactor, space: SpaceFactor) -> Self {
        Self { time, space, amplitude: 1.0 }
    }

    pub fn scaled(mut self, amplitude: f64) -> Self {
        self.amplitude = amplitude;
        self
    }

    fn time_parts(&self, t: f64) -> (f64, f64) {
        match self.time {
            TimeFactor::Polynomial { a, b } => {
                let (a, b) = (a as i32, b as i32);
                let value = t.powi(a) * (1.0 - t).powi(b);
                let deriv = a as f64 * t.powi(a - 1) * (1.0 - t).powi(b) - b as f64 * t.powi(a) * (1.0 - t).powi(b - 1);
                (self.amplitude * value, self.amplitude * deriv)
            }
            TimeFactor::Sine => {
                let (s, c) = (std::f64::consts::PI * t).sin_cos();
                (self.amplitude * s, self.amplitude * std::f64::consts::PI * c)
            }
        }
    }

    /// Spatial value and gradient (written to `grad`).
    fn space_parts(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        match &self.space {
            SpaceFactor::Monomial { powers } => {
                let value: f64 = x.iter().zip(powers).map(|(v, &p)| v.powi(p as i32)).product();
                for k in 0..x.len() {
                    let p = powers[k] as i32;
                    grad[k] = if p == 0 {
                        0.0
                    } else {
                        p as f64
                            * x[k].powi(p - 1)
                            * x.iter().zip(powers).enumerate().filter(|(l, _)| *l != k).map(|(_, (v, &q))| v.powi(q as i32)).product::<f64>()
                    };
                }
                value
            }
            SpaceFactor::Cosine { frequency } => {
                let (s, c) = x.iter().zip(frequency).map(|(a, b)| a * b).sum::<f64>().sin_cos();
                for (g, k) in grad.iter_mut().zip(frequency) {
                    *g = -s * k;
                }
                c
            }
        }
    }

    pub fn value(&self, t: f64, x: &[f64]) -> f64 {
        let mut g = vec![0.0; x.len()];
        self.time_parts(t).0 * self.space_parts(x, &mut g)
    }

    /// `d_t phi`.
    pub fn dt(&self, t: f64, x: &[f64]) -> f64 {
        let mut g = vec![0.0; x.len()];
        self.time_parts(t).1 * self.space_parts(x, &mut g)
    }

    /// `grad_x phi`.
    pub fn grad(&self, t: f64, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; x.len()];
        self.space_parts(x, &mut g);
        let tv = self.time_parts(t).0;
        g.iter_mut().for_each(|v| *v *= tv);
        g
    }

    /// `d_t phi + grad phi . v` at `(t, x)`.
    fn transport_derivative(&self, t: f64, x: &[f64], v: &[f64], scratch: &mut [f64]) -> f64 {
        let (tv, td) = self.time_parts(t);
        let sv = self.space_parts(x, scratch);
        td * sv + tv * scratch.iter().zip(v).map(|(g, vk)| g * vk).sum::<f64>()
    }
}

/// Five-point Gauss-Legendre rule on `[-1, 1]`.
pub(crate) const GAUSS_LEGENDRE_5: [(f64, f64); 5] = [
    (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.0, 0.568_888_888_888_888_9),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.906_179_845_938_664, 0.236_926_885_056_189_1),
];

/// `sum_i c_i a_i int_0^1 [d_t phi + grad phi . gamma_i'](t, gamma_i(t)) dt`,
/// integrated segment by segment with five-point Gauss-Legendre.
///
/// For each atom the integrand is the time derivative of `phi(t, gamma(t))`,
/// so the exact value is zero for test functions vanishing at `t = 0, 1`.
pub fn weak_form_residual(measure: &AtomicMeasurePair, phi: &TestFunction) -> f64 {
    let mut total = 0.0;
    for (c, atom) in measure.iter() {
        let curve = atom.curve();
        let grid = curve.grid();
        let dt = grid.dt();
        let dim = curve.dim();
        let mut scratch = vec![0.0; dim];
        let mut x = vec![0.0; dim];
        let mut integral = 0.0;
        for j in 0..grid.intervals() {
            let v = curve.segment_velocity(j);
            let (x0, x1) = (curve.node(j), curve.node(j + 1));
            let t0 = grid.node(j);
            let mut seg = 0.0;
            for &(node, weight) in &GAUSS_LEGENDRE_5 {
                let s = 0.5 * (node + 1.0);
                for k in 0..dim {
                    x[k] = x0[k] + s * (x1[k] - x0[k]);
                }
                seg += weight * phi.transport_derivative(t0 + s * dt, &x, &v, &mut scratch);
            }
            integral += 0.5 * dt * seg;
        }
        total += c * atom.mass() * integral;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::Curve;
    use approx::assert_relative_eq;

    #[test]
    fn derivatives_match_finite_differences() {
        let fns = [
            TestFunction::polynomial(2, 1, vec![1, 3]),
            TestFunction::trigonometric(vec![2.0, -1.5]),
            TestFunction::new(TimeFactor::Sine, SpaceFactor::Monomial { powers: vec![0, 2] }),
        ];
        let (t, x) = (0.37, [0.41, 0.77]);
        let h = 1e-6;
        for f in &fns {
            let fd_t = (f.value(t + h, &x) - f.value(t - h, &x)) / (2.0 * h);
            assert_relative_eq!(f.dt(t, &x), fd_t, epsilon = 1e-8);
            let g = f.grad(t, &x);
            for k in 0..2 {
                let mut p = x;
                p[k] += h;
                let mut q = x;
                q[k] -= h;
                assert_relative_eq!(g[k], (f.value(t, &p) - f.value(t, &q)) / (2.0 * h), epsilon = 1e-8);
            }
            assert_eq!(f.value(0.0, &x), 0.0);
            assert!(f.value(1.0, &x).abs() < 1e-15);
        }
    }

    #[test]
    fn quadrature_integrates_degree_nine_exactly() {
        for deg in 0..=9 {
            let approx: f64 = GAUSS_LEGENDRE_5.iter().map(|(x, w)| w * x.powi(deg)).sum();
            let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
            assert_relative_eq!(approx, exact, epsilon = 1e-15);
        }
    }

    #[test]
    fn zero_test_function_gives_zero() {
        let m = AtomicMeasurePair::from_curves(1.0, 1.0, vec![Curve::line(&[0.1], &[0.9], 9).unwrap()], vec![1.0]).unwrap();
        let phi = TestFunction::trigonometric(vec![2.0]).scaled(0.0);
        assert_eq!(weak_form_residual(&m, &phi), 0.0);
        let empty = AtomicMeasurePair::empty(1.0, 1.0, 9).unwrap();
        assert_eq!(weak_form_residual(&empty, &TestFunction::trigonometric(vec![3.0])), 0.0);
    }

    #[test]
    fn straight_line_with_sine_window_cancels() {
        let m = AtomicMeasurePair::from_curves(0.5, 2.0, vec![Curve::line(&[0.2], &[0.8], 17).unwrap()], vec![1.0]).unwrap();
        let phi = TestFunction::new(TimeFactor::Sine, SpaceFactor::Monomial { powers: vec![1] });
        assert!(weak_form_residual(&m, &phi).abs() <= 1e-10);
    }
}
