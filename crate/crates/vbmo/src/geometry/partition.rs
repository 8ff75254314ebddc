//! Partition of unity subordinate to the chart cover: phi_0 carries the
//! interior (it is 1 once d >= rho and its support stays a positive
//! distance from the boundary), each chart bump phi_j lives on
//! U_rho(z_j) intersected with the closed domain, and the family sums to 1
//! on the closure. Raw bump sums are checked to reach 1 before the final
//! normalization so a sparse chart cover fails loudly instead of silently
//! renormalizing a hole.

use crate::error::{GeometryError, Result};
use crate::fields::ScalarField;

use super::{bump, smoothstep, CollarGeometry, Domain};

pub const COVERAGE_TOL: f64 = 1e-6;

/// Returns [phi_0, phi_1, ..., phi_m] sampled on the collar's grid.
pub fn partition_of_unity(domain: &Domain, collar: &CollarGeometry) -> Result<Vec<ScalarField>> {
    let grid = collar.grid;
    let rho = domain.rho;
    let m = domain.num_charts();
    let mut parts = vec![ScalarField::zeros(grid); m + 1];

    for k in 0..grid.len() {
        let d = collar.d[k];
        if d < 0.0 {
            continue; // outside the closed domain
        }
        // Interior weight: ramps from 0 at d = rho/2 to 1 at d = rho.
        let phi0 = smoothstep((d - 0.5 * rho) / (0.5 * rho));
        parts[0].data[k] = phi0;
        if d < rho {
            let s = collar.s[k];
            for j in 0..m {
                let ds = domain.wrap_arc(s - domain.chart_s[j]);
                if ds.abs() < rho {
                    // The d-factor is the exact complement of phi_0 on
                    // [rho/2, rho], so the raw sum is >= 1 wherever the
                    // tangential plateaus cover the boundary.
                    parts[j + 1].data[k] = bump(ds.abs() / rho) * bump(d / rho);
                }
            }
        }
    }

    // Verify coverage, then normalize.
    let n = grid.n;
    for k in 0..grid.len() {
        if collar.d[k] < 0.0 {
            continue;
        }
        let sum: f64 = parts.iter().map(|p| p.data[k]).sum();
        if sum < 1.0 - COVERAGE_TOL {
            return Err(GeometryError::CoverageGap(k % n, k / n, sum).into());
        }
        for p in parts.iter_mut() {
            p.data[k] /= sum;
        }
    }
    Ok(parts)
}
