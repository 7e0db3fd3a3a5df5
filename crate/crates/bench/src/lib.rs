//! Fixtures shared by the benchmarks.

use bbspike_core::{AtomicMeasurePair, Curve, DomainBox, KernelSpec, Observation, SeededRng, SolverConfig};

pub struct Fixture {
    pub domain: DomainBox,
    pub obs: Observation,
    pub truth: AtomicMeasurePair,
    pub config: SolverConfig,
}

/// Two sources crossing the unit square, seen through a 5x5 Gaussian grid at five times.
pub fn crossing() -> Fixture {
    let domain = DomainBox::unit(2);
    let config = SolverConfig::new(0.1, 0.1);
    let n = config.curve_nodes;
    let truth = AtomicMeasurePair::from_curves(
        0.1,
        0.1,
        vec![Curve::line(&[0.2, 0.2], &[0.8, 0.8], n).unwrap(), Curve::line(&[0.2, 0.8], &[0.8, 0.2], n).unwrap()],
        vec![1.0, 1.0],
    )
    .unwrap();
    let template = Observation::template(vec![0.1, 0.3, 0.5, 0.7, 0.9], vec![KernelSpec::gaussian_grid(&domain, 5, 0.15).unwrap()]).unwrap();
    let obs = template.clone().with_data(template.apply(&truth)).unwrap();
    Fixture { domain, obs, truth, config }
}

/// Random weight problem with `atoms` columns of length `rows`.
pub fn weight_problem(atoms: usize, rows: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut rng = SeededRng::new(seed);
    let columns: Vec<Vec<f64>> = (0..atoms).map(|_| (0..rows).map(|_| rng.uniform_in(-1.0, 1.0)).collect()).collect();
    let y = (0..rows).map(|_| rng.uniform_in(-2.0, 2.0)).collect();
    (columns, y)
}
