//! Time-sampled observation operator `A rho = (A_1 rho_{t_1}, ..., A_N rho_{t_N})`.
//!
//! Each `A_i` is integration against a continuous feature map `k_i`, so
//! `A_i delta_x = k_i(x)`. Two kernel families are supported:
//!
//! * Fourier samples: for each frequency `k`, the pair `(cos(k.x), -sin(k.x))`,
//!   i.e. real part and imaginary part of `exp(-i k.x)`;
//! * Gaussian bumps: `exp(-|x - z_q|^2 / (2 sigma^2))` for centers `z_q`.
//!
//! All components are bounded by one in absolute value.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::curve::{Curve, DomainBox};
use crate::error::{Error, Result};
use crate::measure::AtomicMeasurePair;
use crate::rng::SeededRng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum KernelSpec {
    Fourier { frequencies: Vec<Vec<f64>> },
    Gaussian { centers: Vec<Vec<f64>>, sigma: f64 },
}

impl KernelSpec {
    pub fn fourier(frequencies: Vec<Vec<f64>>) -> Result<Self> {
        let spec = KernelSpec::Fourier { frequencies };
        spec.validate()?;
        Ok(spec)
    }

    pub fn gaussian(centers: Vec<Vec<f64>>, sigma: f64) -> Result<Self> {
        let spec = KernelSpec::Gaussian { centers, sigma };
        spec.validate()?;
        Ok(spec)
    }

    /// Fourier samples on the tensor grid `axis_frequencies^dim`.
    pub fn fourier_grid(dim: usize, axis_frequencies: &[f64]) -> Result<Self> {
        Self::fourier(tensor_grid(dim, axis_frequencies))
    }

    /// Gaussian bumps centered on a `per_axis^d` cell-centered grid over `domain`.
    pub fn gaussian_grid(domain: &DomainBox, per_axis: usize, sigma: f64) -> Result<Self> {
        let axes: Vec<Vec<f64>> = (0..domain.dim())
            .map(|k| {
                let (lo, hi) = (domain.lower()[k], domain.upper()[k]);
                (0..per_axis).map(|q| lo + (q as f64 + 0.5) * (hi - lo) / per_axis as f64).collect()
            })
            .collect();
        let mut centers = vec![Vec::new()];
        for axis in &axes {
            centers = centers
                .into_iter()
                .flat_map(|prefix| {
                    axis.iter().map(move |&v| {
                        let mut p = prefix.clone();
                        p.push(v);
                        p
                    })
                })
                .collect();
        }
        Self::gaussian(centers, sigma)
    }

    pub fn validate(&self) -> Result<()> {
        let points = match self {
            KernelSpec::Fourier { frequencies } => frequencies,
            KernelSpec::Gaussian { centers, sigma } => {
                if !(sigma.is_finite() && *sigma > 0.0) {
                    return Err(Error::InvalidKernel(format!("sigma must be positive, got {sigma}")));
                }
                centers
            }
        };
        let Some(first) = points.first() else {
            return Err(Error::InvalidKernel("parameter list is empty".into()));
        };
        if first.is_empty() || points.iter().any(|p| p.len() != first.len() || p.iter().any(|v| !v.is_finite())) {
            return Err(Error::InvalidKernel("parameter vectors must be finite with a common positive length".into()));
        }
        Ok(())
    }

    /// Spatial dimension the kernel acts on.
    pub fn spatial_dim(&self) -> usize {
        match self {
            KernelSpec::Fourier { frequencies } => frequencies[0].len(),
            KernelSpec::Gaussian { centers, .. } => centers[0].len(),
        }
    }

    /// Dimension of the measurement space `H_i`.
    pub fn output_dim(&self) -> usize {
        match self {
            KernelSpec::Fourier { frequencies } => 2 * frequencies.len(),
            KernelSpec::Gaussian { centers, .. } => centers.len(),
        }
    }

    /// Writes `k(x)` into `out` (length [`output_dim`](Self::output_dim)).
    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        match self {
            KernelSpec::Fourier { frequencies } => {
                for (k, pair) in frequencies.iter().zip(out.chunks_mut(2)) {
                    let (s, c) = dot(k, x).sin_cos();
                    pair[0] = c;
                    pair[1] = -s;
                }
            }
            KernelSpec::Gaussian { centers, sigma } => {
                let inv = 1.0 / (2.0 * sigma * sigma);
                for (z, o) in centers.iter().zip(out.iter_mut()) {
                    *o = (-sq_dist(x, z) * inv).exp();
                }
            }
        }
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.output_dim()];
        self.eval_into(x, &mut out);
        out
    }

    /// Jacobian of `k` at `x`, row-major `output_dim x d`.
    pub fn grad_into(&self, x: &[f64], out: &mut [f64]) {
        let d = x.len();
        match self {
            KernelSpec::Fourier { frequencies } => {
                for (k, rows) in frequencies.iter().zip(out.chunks_mut(2 * d)) {
                    let (s, c) = dot(k, x).sin_cos();
                    for a in 0..d {
                        rows[a] = -s * k[a];
                        rows[d + a] = -c * k[a];
                    }
                }
            }
            KernelSpec::Gaussian { centers, sigma } => {
                let s2 = sigma * sigma;
                for (z, row) in centers.iter().zip(out.chunks_mut(d)) {
                    let g = (-sq_dist(x, z) / (2.0 * s2)).exp();
                    for a in 0..d {
                        row[a] = -g * (x[a] - z[a]) / s2;
                    }
                }
            }
        }
    }

    pub fn grad(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.output_dim() * x.len()];
        self.grad_into(x, &mut out);
        out
    }

    /// `<k(x), r>` and its spatial gradient `Dk(x)^T r`, written to `grad`.
    pub fn pair_with(&self, x: &[f64], r: &[f64], grad: &mut [f64]) -> f64 {
        let d = x.len();
        grad.iter_mut().for_each(|g| *g = 0.0);
        match self {
            KernelSpec::Fourier { frequencies } => {
                let mut value = 0.0;
                for (k, rr) in frequencies.iter().zip(r.chunks(2)) {
                    let (s, c) = dot(k, x).sin_cos();
                    value += c * rr[0] - s * rr[1];
                    // d/dx [c r0 - s r1] = (-s r0 - c r1) k
                    let coef = -s * rr[0] - c * rr[1];
                    for a in 0..d {
                        grad[a] += coef * k[a];
                    }
                }
                value
            }
            KernelSpec::Gaussian { centers, sigma } => {
                let s2 = sigma * sigma;
                let mut value = 0.0;
                for (z, &rq) in centers.iter().zip(r) {
                    let g = (-sq_dist(x, z) / (2.0 * s2)).exp() * rq;
                    value += g;
                    for a in 0..d {
                        grad[a] -= g * (x[a] - z[a]) / s2;
                    }
                }
                value
            }
        }
    }

    /// `<k(x), r>` without gradient.
    pub fn pair_value(&self, x: &[f64], r: &[f64]) -> f64 {
        match self {
            KernelSpec::Fourier { frequencies } => frequencies
                .iter()
                .zip(r.chunks(2))
                .map(|(k, rr)| {
                    let (s, c) = dot(k, x).sin_cos();
                    c * rr[0] - s * rr[1]
                })
                .sum(),
            KernelSpec::Gaussian { centers, sigma } => {
                let inv = 1.0 / (2.0 * sigma * sigma);
                centers.iter().zip(r).map(|(z, rq)| (-sq_dist(x, z) * inv).exp() * rq).sum()
            }
        }
    }
}

fn tensor_grid(dim: usize, axis: &[f64]) -> Vec<Vec<f64>> {
    let mut out = vec![Vec::new()];
    for _ in 0..dim {
        out = out
            .into_iter()
            .flat_map(|prefix: Vec<f64>| {
                axis.iter().map(move |&v| {
                    let mut p = prefix.clone();
                    p.push(v);
                    p
                })
            })
            .collect();
    }
    out
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

/// Sample times, per-time kernels and the stacked data vector `y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ObservationJson", into = "ObservationJson")]
pub struct Observation {
    times: Vec<f64>,
    specs: Vec<KernelSpec>,
    offsets: Vec<usize>,
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ObservationJson {
    times: Vec<f64>,
    kernels: Vec<KernelSpec>,
    #[serde(default)]
    data: Option<Vec<f64>>,
}

impl TryFrom<ObservationJson> for Observation {
    type Error = Error;
    fn try_from(j: ObservationJson) -> Result<Self> {
        let template = Observation::template(j.times, j.kernels)?;
        match j.data {
            Some(data) => template.with_data(data),
            None => Ok(template),
        }
    }
}

impl From<Observation> for ObservationJson {
    fn from(o: Observation) -> Self {
        ObservationJson { times: o.times, kernels: o.specs, data: Some(o.data) }
    }
}

impl Observation {
    /// Observation with zero data. A single kernel is shared by all times.
    pub fn template(times: Vec<f64>, mut specs: Vec<KernelSpec>) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::InvalidObservation("at least one sample time is required".into()));
        }
        if times.iter().any(|t| !(*t > 0.0 && *t < 1.0)) {
            return Err(Error::InvalidObservation("sample times must lie in (0, 1)".into()));
        }
        if times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidObservation("sample times must be strictly increasing".into()));
        }
        if specs.len() == 1 && times.len() > 1 {
            specs = vec![specs[0].clone(); times.len()];
        }
        if specs.len() != times.len() {
            return Err(Error::InvalidObservation(format!("{} kernels for {} sample times", specs.len(), times.len())));
        }
        for s in &specs {
            s.validate()?;
        }
        let dim = specs[0].spatial_dim();
        if specs.iter().any(|s| s.spatial_dim() != dim) {
            return Err(Error::InvalidObservation("kernels act on different spatial dimensions".into()));
        }
        let mut offsets = vec![0];
        for s in &specs {
            offsets.push(offsets.last().unwrap() + s.output_dim());
        }
        let total = *offsets.last().unwrap();
        Ok(Self { times, specs, offsets, data: vec![0.0; total] })
    }

    pub fn with_data(mut self, data: Vec<f64>) -> Result<Self> {
        if data.len() != self.total_dim() {
            return Err(Error::DimensionMismatch { expected: self.total_dim(), found: data.len() });
        }
        self.data = data;
        Ok(self)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn specs(&self) -> &[KernelSpec] {
        &self.specs
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn sample_count(&self) -> usize {
        self.times.len()
    }

    pub fn spatial_dim(&self) -> usize {
        self.specs[0].spatial_dim()
    }

    /// `dim(H) = sum_i dim(H_i)`.
    pub fn total_dim(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    /// Index range of block `i` inside stacked vectors.
    pub fn block(&self, i: usize) -> Range<usize> {
        self.offsets[i]..self.offsets[i + 1]
    }

    /// `A` applied to the unit-weight atom of `curve` with mass `mass`.
    pub fn atom_observation(&self, curve: &Curve, mass: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.total_dim()];
        self.add_atom(curve, mass, &mut out);
        out
    }

    fn add_atom(&self, curve: &Curve, scale: f64, out: &mut [f64]) {
        let mut buf = Vec::new();
        for (i, (&t, spec)) in self.times.iter().zip(&self.specs).enumerate() {
            buf.resize(spec.output_dim(), 0.0);
            spec.eval_into(&curve.position_at(t), &mut buf);
            for (o, v) in out[self.block(i)].iter_mut().zip(&buf) {
                *o += scale * v;
            }
        }
    }

    /// `A rho` for an atomic measure.
    pub fn apply(&self, measure: &AtomicMeasurePair) -> Vec<f64> {
        let mut out = vec![0.0; self.total_dim()];
        for (c, atom) in measure.iter() {
            self.add_atom(atom.curve(), c * atom.mass(), &mut out);
        }
        out
    }

    /// `r = A rho - y`.
    pub fn residual(&self, measure: &AtomicMeasurePair) -> Vec<f64> {
        let mut r = self.apply(measure);
        r.iter_mut().zip(&self.data).for_each(|(a, y)| *a -= y);
        r
    }

    /// `w_i(x) = <k_i(x), r_i>` and `grad w_i(x)`.
    pub fn dual_field(&self, r: &[f64], i: usize, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        if i >= self.sample_count() {
            return Err(Error::SampleIndexOutOfRange { index: i, count: self.sample_count() });
        }
        if r.len() != self.total_dim() {
            return Err(Error::DimensionMismatch { expected: self.total_dim(), found: r.len() });
        }
        let mut grad = vec![0.0; x.len()];
        let w = self.specs[i].pair_with(x, &r[self.block(i)], &mut grad);
        Ok((w, grad))
    }

    /// Value-only dual field, without bounds checks.
    pub(crate) fn dual_value(&self, r: &[f64], i: usize, x: &[f64]) -> f64 {
        self.specs[i].pair_value(x, &r[self.block(i)])
    }
}

/// `y = A truth + noise_level g` with `g` standard normal from [`SeededRng`].
pub fn synthesize_data(truth: &AtomicMeasurePair, template: &Observation, noise_level: f64, seed: u64) -> Result<Observation> {
    if !(noise_level.is_finite() && noise_level >= 0.0) {
        return Err(Error::InvalidObservation(format!("noise level must be nonnegative, got {noise_level}")));
    }
    let mut data = template.apply(truth);
    if noise_level > 0.0 {
        let mut rng = SeededRng::new(seed);
        for v in &mut data {
            *v += noise_level * rng.normal();
        }
    }
    template.clone().with_data(data)
}
