//! Quick self-checks run by `moma validate` before a long sweep.

use super::config::Scenario;
use super::schemes::Scheme;
use super::system::PreparedLink;
use crate::codebook::code_inner;
use crate::detequiv::{fixed_point_deltas, FixedPointProblem, SolverOptions};
use crate::error::Result;
use crate::estimation::pilot_capacity;
use crate::linalg::{eye, min_eigenvalue, spectral_norm_hermitian, vec_norm_sqr};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: String) -> CheckOutcome {
    CheckOutcome { name, passed, detail }
}

/// Runs the invariant checks on the scenario at its smallest antenna count.
pub fn validate_scenario(sc: &Scenario) -> Result<Vec<CheckOutcome>> {
    sc.validate()?;
    let mut out = Vec::new();
    let m = sc.antennas.iter().copied().min().unwrap_or(1);
    let link = PreparedLink::new(sc, m, &sc.class_sizes())?;

    let moma = link.codes(sc, Scheme::Moma)?;
    let mut worst_norm = 0.0f64;
    let mut worst_cross = 0.0f64;
    for (j, cj) in moma.codes.iter().enumerate() {
        worst_norm = worst_norm.max((vec_norm_sqr(&cj.view()) - 1.0).abs());
        for (k, ck) in moma.codes.iter().enumerate() {
            if link.classes[j] != link.classes[k] {
                worst_cross = worst_cross.max(code_inner(cj, ck).norm());
            }
        }
    }
    out.push(check("codes have unit norm", worst_norm < 1e-12, format!("max deviation {worst_norm:.2e}")));
    out.push(check("codes of different classes are orthogonal", worst_cross < 1e-12, format!("max |c_j^H c_k| {worst_cross:.2e}")));

    let capacity = pilot_capacity(&link.map);
    out.push(check(
        "pilot capacity covers the users",
        link.users() <= capacity,
        format!("{} users, capacity {capacity}", link.users()),
    ));

    let mut worst_phi = f64::INFINITY;
    let mut worst_err = f64::INFINITY;
    for ch in &link.channels {
        let scale = spectral_norm_hermitian(&ch.stats.r.view())?.max(f64::MIN_POSITIVE);
        worst_phi = worst_phi.min(min_eigenvalue(&ch.stats.phi.view())? / scale);
        worst_err = worst_err.min(min_eigenvalue(&ch.stats.error_covariance().view())? / scale);
    }
    out.push(check("estimate covariance is PSD", worst_phi > -1e-9, format!("min relative eigenvalue {worst_phi:.2e}")));
    out.push(check("error covariance is PSD", worst_err > -1e-9, format!("min relative eigenvalue {worst_err:.2e}")));

    let golden = (5f64.sqrt() - 1.0) / 2.0;
    let problem = FixedPointProblem::new(1.0, 1, vec![eye(1)])?;
    let sol = fixed_point_deltas(&problem, &SolverOptions::default())?;
    let err = (sol.delta[0] - golden).abs();
    out.push(check("scalar fixed point converges to the golden ratio", err < 1e-10, format!("error {err:.2e} after {} iterations", sol.iterations)));
    Ok(out)
}
