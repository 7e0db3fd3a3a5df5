//! Independent checks tying solver output back to the underlying theory:
//! weak continuity-equation residuals, extremality certificates for atoms,
//! a grid evaluation of the Benamou-Brenier integrand, an exhaustive
//! insertion oracle and finite-atom curve tracking.

mod brute;
mod certificate;
mod raster;
mod tracking;
mod weak_form;

pub use brute::{brute_force_lmo, snap_to_grid, ENUMERATION_BUDGET};
pub use certificate::{
    certify_atom, extremality_certificate, CandidatePair, CertificateCheck, CertificateReport, PairComponent, ENERGY_TOLERANCE,
};
pub use raster::{grid_bb_energy, psi, rasterize, GridPair};
pub use tracking::track_curves;
pub use weak_form::{weak_form_residual, SpaceFactor, TestFunction, TimeFactor};
