//! Self-contained verification suites shared by the CLI `verify`
//! subcommand and the acceptance tests: the Gauss boundary-flux identity,
//! the half-space Poisson bound, and the parity invariants of the
//! reflected extension and the frozen chart solves.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::counterexample::HalfSpaceField;
use crate::extension::ParityExtension;
use crate::fields::VectorField;
use crate::freezing::{CylinderGrid, FrozenOperator, Parity, ParityInput};
use crate::geometry::{Domain, DomainKind};
use crate::grid::Grid;
use crate::neumann::gauss_flux;
use crate::Result;

#[derive(Debug, Clone, serde::Serialize)]
pub struct CheckReport {
    pub name: &'static str,
    pub pass: bool,
    /// Worst observed value, for the log line.
    pub worst: f64,
    pub details: String,
}

/// Boundary flux of the fundamental solution equals -1 at interior probes,
/// on the disk and an ellipse, including probes close to the boundary.
pub fn gauss_identity(probes: usize, seed: u64) -> Result<CheckReport> {
    let domains = [
        Domain::new(DomainKind::Disk { radius: 1.0 }, 0.08)?,
        Domain::new(DomainKind::Ellipse { a: 1.2, b: 0.8 }, 0.04)?,
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for dom in &domains {
        let mut placed = 0;
        while placed < probes {
            // Every fifth probe hugs the boundary at a dyadically small
            // offset; the rest are uniform over the bounding box.
            let (x, y) = if placed % 5 == 0 {
                let s = rng.gen_range(0.0..dom.length);
                let d = 2f64.powi(-rng.gen_range(5..10));
                let p = dom.point_at_s(s);
                let nu = dom.normal_at_s(s);
                (p.0 + d * nu.0, p.1 + d * nu.1)
            } else {
                (rng.gen_range(-1.2..1.2), rng.gen_range(-1.2..1.2))
            };
            if dom.signed_distance(x, y) < 1e-3 {
                continue;
            }
            placed += 1;
            worst = worst.max((gauss_flux(dom, x, y) + 1.0).abs());
        }
    }
    Ok(CheckReport {
        name: "gauss",
        pass: worst <= 1e-3,
        worst,
        details: format!("max |flux + 1| = {worst:.3e} over {probes} probes x 2 domains"),
    })
}

/// Half-space Poisson bound: the normal derivative of the layer potential
/// never exceeds half the data sup-norm, at any height.
pub fn poisson_bound(trials: usize, seed: u64) -> Result<CheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..trials {
        let g: Vec<f64> = (0..1024).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let sup_g = g.iter().fold(0.0f64, |m, &v| m.max(v.abs())).max(1e-300);
        let field = HalfSpaceField::new(g);
        for k in 0..=12 {
            let f = field.poisson_normal_derivative(2f64.powi(-k));
            let sup = f.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
            worst = worst.max(sup - 0.5 * sup_g);
        }
    }
    Ok(CheckReport {
        name: "poisson",
        pass: worst <= 1e-10,
        worst,
        details: format!("max excess over half the data sup = {worst:.3e}"),
    })
}

/// Parity invariants: the frozen chart solves preserve parity in the
/// normal coordinate, the reflected vector extension has even tangential
/// and odd normal components, and boundary-centered ball averages of the
/// odd quantities vanish in the flattened coordinates.
pub fn parity_suite() -> Result<CheckReport> {
    let rho = 0.08;
    let dom = Domain::new(DomainKind::Disk { radius: 1.0 }, rho)?;

    // Chart solves of both parity classes: the operator coefficients are
    // even in r, so solutions inherit the forcing parity up to roundoff.
    // Ball averages of the normal derivative of the even solution (an odd
    // quantity) cancel exactly over r-symmetric cell sets.
    let frame = dom.chart(0);
    let map = dom.normal_coordinates(frame);
    let met = map.metric_coefficients()?;
    let cyl = CylinderGrid::new(128, 4.0 * rho);
    let op = FrozenOperator::new(cyl, rho, &met)?;
    let mut solve_defect: f64 = 0.0;
    let mut ball_avg: f64 = 0.0;
    for parity in [Parity::Even, Parity::Odd] {
        let mut data = vec![0.0; cyl.len()];
        for i_r in cyl.m / 2..cyl.m {
            let r = cyl.coord(i_r);
            let i_m = cyl.mirror_r(i_r);
            for i_s in 0..cyl.m {
                let s = cyl.coord(i_s);
                let v = (-(s * s + r * r) / (rho * rho)).exp() * (1.0 + 0.3 * (s / rho).sin());
                data[cyl.idx(i_s, i_r)] = v;
                data[cyl.idx(i_s, i_m)] = if parity == Parity::Odd { -v } else { v };
            }
        }
        let sol = op.solve(&ParityInput::new(&cyl, data, parity)?)?;
        let scale = sol.q.iter().fold(0.0f64, |m, &v| m.max(v.abs())).max(1e-300);
        for i_r in 0..cyl.m / 2 {
            let i_m = cyl.mirror_r(i_r);
            for i_s in 0..cyl.m {
                // Both parity classes yield a solution even in r.
                let a = sol.q[cyl.idx(i_s, i_r)];
                let b = sol.q[cyl.idx(i_s, i_m)];
                solve_defect = solve_defect.max((a - b).abs() / scale);
            }
        }
        if parity == Parity::Even {
            let dq = op.deriv_r(&sol.q);
            let dscale = dq.iter().fold(0.0f64, |m, &v| m.max(v.abs())).max(1e-300);
            for c in 0..8usize {
                let s_c = (c as f64 / 8.0 - 0.5) * rho;
                for r_b in [rho / 4.0, rho / 2.0, rho] {
                    let mut acc = 0.0;
                    let mut count = 0usize;
                    for i_r in 0..cyl.m {
                        let r = cyl.coord(i_r);
                        for i_s in 0..cyl.m {
                            let s = cyl.coord(i_s);
                            if (s - s_c).powi(2) + r * r < r_b * r_b {
                                acc += dq[cyl.idx(i_s, i_r)];
                                count += 1;
                            }
                        }
                    }
                    if count > 0 {
                        ball_avg = ball_avg.max((acc / count as f64).abs() / dscale);
                    }
                }
            }
        }
    }

    // Reflected extension of a chart-supported field: compare signed
    // tangential/normal components at mirror pairs across the boundary.
    let grid = Grid::centered(192, 1.4);
    let cut = |t: f64| 1.0 - crate::geometry::smoothstep(2.0 * t - 1.0);
    let weight = |x: f64, y: f64| {
        let (_, s, d) = dom.project_raw(x, y);
        let ds = dom.wrap_arc(s - frame.s_center).abs();
        if d < 0.0 || d >= rho || ds >= rho {
            0.0
        } else {
            cut(d / rho) * cut(ds / rho)
        }
    };
    let v = VectorField::from_fn(grid, |x, y| {
        let w = weight(x, y);
        (w * (0.4 - y + 0.5 * x * x), w * (x + 0.3 * (2.0 * y).sin()))
    });
    let vscale = 1.6;
    let ext = ParityExtension::new(&dom, &v, frame)?;
    let mut ext_defect: f64 = 0.0;
    for i in 0..64 {
        let s = frame.s_center + (i as f64 / 64.0 - 0.5) * rho;
        let d = 0.005 + 0.8 * rho * (i as f64 / 64.0);
        let p = dom.point_at_s(s);
        let nu = dom.normal_at_s(s);
        let tau = (-nu.1, nu.0);
        let vin = ext.eval(p.0 + d * nu.0, p.1 + d * nu.1)?;
        let vout = ext.eval(p.0 - d * nu.0, p.1 - d * nu.1)?;
        let dt = (vin.0 * tau.0 + vin.1 * tau.1) - (vout.0 * tau.0 + vout.1 * tau.1);
        let dn = (vin.0 * nu.0 + vin.1 * nu.1) + (vout.0 * nu.0 + vout.1 * nu.1);
        ext_defect = ext_defect.max((dt.abs() + dn.abs()) / vscale);
    }

    // Ball averages of the odd normal component of the extension, taken in
    // the flattened coordinates over boundary-centered balls.
    let mut vbar_avg: f64 = 0.0;
    for c in 0..8usize {
        let s_c = frame.s_center + (c as f64 / 8.0 - 0.5) * 0.8 * rho;
        for r_b in [rho / 4.0, rho / 2.0] {
            let mut acc = 0.0;
            let mut count = 0usize;
            let nq = 16;
            for ib in 0..nq {
                let b = (ib as f64 + 0.5) / nq as f64 * 2.0 * r_b - r_b;
                for ia in 0..nq {
                    let a = (ia as f64 + 0.5) / nq as f64 * 2.0 * r_b - r_b;
                    if a * a + b * b >= r_b * r_b {
                        continue;
                    }
                    let s = s_c + a;
                    let p = dom.point_at_s(s);
                    let nu = dom.normal_at_s(s);
                    let w = ext.eval(p.0 + b * nu.0, p.1 + b * nu.1)?;
                    acc += w.0 * nu.0 + w.1 * nu.1;
                    count += 1;
                }
            }
            vbar_avg = vbar_avg.max((acc / count as f64).abs() / vscale);
        }
    }
    let ball_avg = ball_avg.max(vbar_avg);

    let pass = solve_defect < 1e-6 && ext_defect < 1e-6 && ball_avg < 1e-3;
    Ok(CheckReport {
        name: "parity",
        pass,
        worst: solve_defect.max(ext_defect).max(ball_avg),
        details: format!(
            "solver parity defect {solve_defect:.3e}, extension defect {ext_defect:.3e}, \
             boundary-ball odd average {ball_avg:.3e}"
        ),
    })
}
