//! Acceptance gate: one pass/fail line per criterion. Run with
//! `cargo test --test acceptance -- --nocapture` to see the lines live.

use std::time::Instant;

use vbmo::config::random_trig_field;
use vbmo::counterexample::ce_growth_demo;
use vbmo::decompose::{
    boundary_normal_sup, helmholtz_decompose, interior_divergence, l2_oracle, DecomposeParams,
};
use vbmo::fields::seminorm::{bmo_seminorm, bmo_seminorm_vec, bnu_seminorm, vbmo_norm, BmoScan, BnuScan};
use vbmo::fields::{ScalarField, VectorField};
use vbmo::freezing::{CylinderGrid, FrozenOperator, Parity, ParityInput};
use vbmo::geometry::{CollarGeometry, Domain, DomainKind, StarTerm};
use vbmo::grid::Grid;
use vbmo::neumann::{BoundaryFunction, CollarExtension};
use vbmo::singular::SpectralBox;
use vbmo::verify;

struct Gate {
    failures: Vec<String>,
}

impl Gate {
    fn check(&mut self, idx: usize, label: &str, pass: bool, details: String) {
        let verdict = if pass { "PASS" } else { "FAIL" };
        println!("criterion {idx:2} [{verdict}] {label}: {details}");
        if !pass {
            self.failures.push(format!("criterion {idx} ({label}): {details}"));
        }
    }
}

fn rms_interior(dom: &Domain, v: &VectorField, margin: f64) -> f64 {
    let dist = dom.distance_field(v.grid);
    let mut acc = 0.0;
    let mut cnt = 0usize;
    for k in 0..v.grid.len() {
        if dist.data[k] >= margin {
            acc += v.x[k] * v.x[k] + v.y[k] * v.y[k];
            cnt += 1;
        }
    }
    (acc / cnt.max(1) as f64).sqrt()
}

fn rel_l2_interior(dom: &Domain, a: &VectorField, b: &VectorField, scale: &VectorField) -> f64 {
    let grid = a.grid;
    let margin = 2.0 * grid.h();
    let dist = dom.distance_field(grid);
    let mut num = 0.0;
    let mut den = 0.0;
    for k in 0..grid.len() {
        if dist.data[k] >= margin {
            num += (a.x[k] - b.x[k]).powi(2) + (a.y[k] - b.y[k]).powi(2);
            den += scale.x[k] * scale.x[k] + scale.y[k] * scale.y[k];
        }
    }
    (num / den.max(1e-300)).sqrt()
}

/// Standard smooth parity data on the chart cylinder, used to probe every
/// chart operator with both parity classes.
fn probe_input(cyl: &CylinderGrid, rho: f64, parity: Parity) -> ParityInput {
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
    ParityInput::new(cyl, data, parity).unwrap()
}

/// Worst contraction ratio and equation residual over every chart of a
/// domain, both parity classes.
fn chart_scan(dom: &Domain, m: usize) -> (f64, f64) {
    let rho = dom.rho;
    let cyl = CylinderGrid::new(m, 4.0 * rho);
    let mut ratio: f64 = 0.0;
    let mut resid: f64 = 0.0;
    for j in 0..dom.num_charts() {
        let frame = dom.chart(j);
        let map = dom.normal_coordinates(frame);
        let met = map.metric_coefficients().unwrap();
        let op = FrozenOperator::new(cyl, rho, &met).unwrap();
        for parity in [Parity::Even, Parity::Odd] {
            let sol = op.solve(&probe_input(&cyl, rho, parity)).unwrap();
            ratio = ratio.max(sol.diagnostics.max_ratio());
            resid = resid.max(sol.diagnostics.residual_rel);
        }
    }
    (ratio, resid)
}

/// Exhaustive direct-summation BMO oracle: every grid center, the dyadic
/// radius family, plain nested loops.
fn brute_bmo(f: &ScalarField, mu: f64) -> f64 {
    let grid = f.grid;
    let n = grid.n as i64;
    let h = grid.h();
    let mut radii = Vec::new();
    let mut r = 2.0 * h;
    while r <= mu && r <= grid.side / 2.0 {
        radii.push(r);
        r *= 2.0;
    }
    let mut best: f64 = 0.0;
    for &r in &radii {
        let rc = (r / h).floor() as i64;
        let r2 = (r / h) * (r / h);
        for cj in 0..n {
            for ci in 0..n {
                if ci - rc < 0 || cj - rc < 0 || ci + rc >= n || cj + rc >= n {
                    continue;
                }
                let mut sum = 0.0;
                let mut cnt = 0usize;
                for dj in -rc..=rc {
                    for di in -rc..=rc {
                        if (di * di + dj * dj) as f64 <= r2 {
                            sum += f.data[((cj + dj) * n + ci + di) as usize];
                            cnt += 1;
                        }
                    }
                }
                let mean = sum / cnt as f64;
                let mut osc = 0.0;
                for dj in -rc..=rc {
                    for di in -rc..=rc {
                        if (di * di + dj * dj) as f64 <= r2 {
                            osc += (f.data[((cj + dj) * n + ci + di) as usize] - mean).abs();
                        }
                    }
                }
                best = best.max(osc / cnt as f64);
            }
        }
    }
    best
}

/// Exhaustive boundary-mass oracle: every boundary sample as a center,
/// same edge/boundary weighting convention, plain loops.
fn brute_bnu(f: &ScalarField, dom: &Domain, collar: &CollarGeometry, nu: f64) -> f64 {
    let grid = f.grid;
    let h = grid.h();
    let n = grid.n;
    let mut radii = Vec::new();
    let mut r = 2.0 * h;
    while r <= nu {
        radii.push(r);
        r *= 2.0;
    }
    let mut best: f64 = 0.0;
    for &r in &radii {
        for smp in &dom.samples {
            let (cx, cy) = smp.point;
            let rc = r / h + 2.0;
            let i0 = (((cx - grid.x0) / h - 0.5 - rc).floor().max(0.0)) as usize;
            let j0 = (((cy - grid.y0) / h - 0.5 - rc).floor().max(0.0)) as usize;
            let i1 = ((((cx - grid.x0) / h - 0.5 + rc).ceil()) as usize).min(n - 1);
            let j1 = ((((cy - grid.y0) / h - 0.5 + rc).ceil()) as usize).min(n - 1);
            let mut acc = 0.0;
            for j in j0..=j1 {
                for i in i0..=i1 {
                    let (x, y) = grid.point(i, j);
                    let dist = ((x - cx).powi(2) + (y - cy).powi(2)).sqrt();
                    let w_ball = ((r - dist) / (2.0 * h) + 0.5).clamp(0.0, 1.0);
                    let k = grid.idx(i, j);
                    let w_dom = (collar.d[k] / h + 0.5).clamp(0.0, 1.0);
                    acc += f.data[k].abs() * w_ball * w_dom;
                }
            }
            best = best.max(acc * h * h / (r * r + h * h / 3.0));
        }
    }
    best
}

#[test]
fn acceptance_criteria() {
    let mut gate = Gate { failures: Vec::new() };
    let mu = 0.25;
    let nu = 0.1;

    // 1: Gauss boundary-flux identity on disk and ellipse, near-boundary
    // probes included.
    let t = Instant::now();
    let rep = verify::gauss_identity(50, 7).unwrap();
    let dt = t.elapsed().as_secs_f64();
    gate.check(
        1,
        "gauss identity",
        rep.pass && dt < 5.0,
        format!("{}, runtime {dt:.2}s", rep.details),
    );

    // 2: half-space Poisson bound over 20 random bounded data.
    let t = Instant::now();
    let rep = verify::poisson_bound(20, 11).unwrap();
    let dt = t.elapsed().as_secs_f64();
    gate.check(
        2,
        "poisson bound",
        rep.pass && dt < 5.0,
        format!("{}, runtime {dt:.2}s", rep.details),
    );

    // 3/4/5/9 share one bank of decompositions on the disk at N = 256:
    // the mixed reference field plus a 20-field randomized family.
    let dom = Domain::new(DomainKind::Disk { radius: 1.0 }, 0.08).unwrap();
    let grid = Grid::centered(256, 1.5);
    let params = DecomposeParams::default();
    let collar = dom.collar_field(grid, 0.95);
    let mixed = VectorField::from_fn(grid, |x, y| {
        (-y + 3.0 * (x * x - y * y), x - 6.0 * x * y)
    });

    let mut worst_oracle_dev: f64 = 0.0;
    let mut worst_field_time: f64 = 0.0;
    let mut worst_div_rel: f64 = 0.0;
    let mut worst_normal_rel: f64 = 0.0;
    let mut worst_vbmo_ratio: f64 = 0.0;
    let mut mixed_dec = None;

    for idx in 0..21usize {
        let v = if idx == 0 {
            mixed.clone()
        } else {
            random_trig_field(grid, 100 + idx as u64)
        };
        let t0 = Instant::now();
        let dec = helmholtz_decompose(&dom, &v, &params).unwrap();
        // Criterion 3 (mixed + the first 10 random fields): oracle route.
        if idx <= 10 {
            let (_, v0_ref) = l2_oracle(&dom, &v, &params).unwrap();
            let dev = rel_l2_interior(&dom, &dec.v0, &v0_ref, &v);
            worst_oracle_dev = worst_oracle_dev.max(dev);
            worst_field_time = worst_field_time.max(t0.elapsed().as_secs_f64());
        }
        // Criterion 4, on every pipeline output.
        let v_rms = rms_interior(&dom, &v, 0.0);
        let div = interior_divergence(&dom, &dec.v0, 3.0 * grid.h());
        worst_div_rel = worst_div_rel.max(div / v_rms);
        let v_report = vbmo_norm(&v, &dom, &collar, mu, nu).unwrap();
        let vn = boundary_normal_sup(&dom, &dec.v0, 512);
        worst_normal_rel = worst_normal_rel.max(vn / v_report.total);
        // Criterion 9 ledger: output norms against the input norm.
        let v0_report = vbmo_norm(&dec.v0, &dom, &collar, mu, nu).unwrap();
        let gq_report = vbmo_norm(&dec.grad_q, &dom, &collar, mu, nu).unwrap();
        let ratio = v0_report.total.max(gq_report.total) / v_report.total;
        worst_vbmo_ratio = worst_vbmo_ratio.max(ratio);
        if idx == 0 {
            mixed_dec = Some(dec);
        }
    }

    gate.check(
        3,
        "oracle agreement",
        worst_oracle_dev < 0.02 && worst_field_time < 120.0,
        format!(
            "worst rel dev {worst_oracle_dev:.3e} over 11 fields, \
             worst per-field runtime {worst_field_time:.1}s"
        ),
    );
    gate.check(
        4,
        "divergence and trace",
        worst_div_rel < 1e-3 && worst_normal_rel < 1e-2,
        format!(
            "worst div(v0) {worst_div_rel:.3e} of field scale, \
             worst v0.n {worst_normal_rel:.3e} of field norm, 21 outputs"
        ),
    );

    // 5: idempotence. Re-decompose both components of the mixed output.
    let dec = mixed_dec.unwrap();
    let zero = VectorField::zeros(grid);
    let dec_a = helmholtz_decompose(&dom, &dec.v0, &params).unwrap();
    let defect_a = rel_l2_interior(&dom, &dec_a.grad_q, &zero, &dec.v0);
    let dec_b = helmholtz_decompose(&dom, &dec.grad_q, &params).unwrap();
    let defect_b = rel_l2_interior(&dom, &dec_b.v0, &zero, &dec.grad_q);
    gate.check(
        5,
        "idempotence",
        defect_a < 5e-3 && defect_b < 5e-3,
        format!("grad part of v0 {defect_a:.3e}, solenoidal part of grad q {defect_b:.3e}"),
    );

    // 6: series contraction on every shipped domain at its default radius,
    // plus linear improvement under radius halving on the disk.
    let ellipse = Domain::new(DomainKind::Ellipse { a: 1.2, b: 0.8 }, 0.04).unwrap();
    let star = Domain::new(
        DomainKind::Star {
            r0: 1.0,
            terms: vec![StarTerm { k: 3, cos_amp: 0.08, sin_amp: 0.0 }],
        },
        0.03,
    )
    .unwrap();
    let (ratio_disk, resid_disk) = chart_scan(&dom, 256);
    let (ratio_ell, resid_ell) = chart_scan(&ellipse, 256);
    let (ratio_star, resid_star) = chart_scan(&star, 256);
    let half = Domain::new(DomainKind::Disk { radius: 1.0 }, 0.04).unwrap();
    let (ratio_half, _) = chart_scan(&half, 256);
    let contract_ok = ratio_disk < 0.5 && ratio_ell < 0.5 && ratio_star < 0.5;
    let resid_ok = resid_disk < 1e-6 && resid_ell < 1e-6 && resid_star < 1e-6;
    let halving_ok = ratio_half <= 0.65 * ratio_disk;
    gate.check(
        6,
        "series contraction",
        contract_ok && resid_ok && halving_ok,
        format!(
            "ratios disk {ratio_disk:.3} ellipse {ratio_ell:.3} star {ratio_star:.3}, \
             residuals {resid_disk:.1e}/{resid_ell:.1e}/{resid_star:.1e}, \
             halved-radius ratio {ratio_half:.3}"
        ),
    );

    // 7: parity suite.
    let rep = verify::parity_suite().unwrap();
    gate.check(7, "parity", rep.pass, rep.details.clone());

    // 8: counterexample growth with the normal bound intact.
    let t = Instant::now();
    let rows = ce_growth_demo(8);
    let dt = t.elapsed().as_secs_f64();
    let increasing = rows.windows(2).all(|w| w[1].tangential > w[0].tangential);
    let span = rows.last().unwrap().tangential / rows.first().unwrap().tangential;
    let normal_ok = rows
        .iter()
        .all(|r| r.normal <= 0.5 && r.normal_sup <= 0.5 + 1e-10);
    gate.check(
        8,
        "counterexample growth",
        increasing && span >= 3.0 && normal_ok && dt < 30.0,
        format!(
            "tangential {} span {span:.3}, normal bound {}, runtime {dt:.1}s",
            if increasing { "increasing" } else { "NOT increasing" },
            if normal_ok { "holds" } else { "violated" }
        ),
    );

    // 9: boundedness ledgers. The decomposition cap comes from the bank
    // above; the single-layer cap from ten random boundary densities.
    let sb = SpectralBox::new(grid);
    let dist = dom.distance_field(grid);
    let mut worst_layer: f64 = 0.0;
    for seed in 0..10u64 {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(300 + seed);
        let coefs: Vec<(f64, f64, f64)> = (1..=6)
            .map(|k| {
                (
                    k as f64,
                    rng.gen_range(-1.0..1.0) / k as f64,
                    rng.gen_range(-1.0..1.0) / k as f64,
                )
            })
            .collect();
        let len = dom.length;
        let g = BoundaryFunction::from_fn(&dom, 1024, |s| {
            let t = std::f64::consts::TAU * s / len;
            coefs
                .iter()
                .map(|&(k, a, b)| a * (k * t).cos() + b * (k * t).sin())
                .sum()
        });
        let ext = CollarExtension::build(&dom, &g, grid, dom.rho / 2.0).unwrap();
        let grad = ext.gradient(&sb).unwrap();
        let scan = BmoScan { mu, region: Some(&dist), stride: 1, ball_budget: usize::MAX };
        let (bmo, _, _) = bmo_seminorm_vec(&grad, &scan).unwrap();
        worst_layer = worst_layer.max(bmo / g.sup().max(1e-300));
    }
    gate.check(
        9,
        "boundedness ledgers",
        worst_vbmo_ratio < 100.0 && worst_layer < 30.0,
        format!(
            "decompose ratio {worst_vbmo_ratio:.2} (cap 100), \
             single-layer BMO ratio {worst_layer:.2} (cap 30)"
        ),
    );

    // 10: scanned seminorms against exhaustive brute force at N = 64.
    let t = Instant::now();
    let g64 = Grid::centered(64, 1.5);
    let collar64 = dom.collar_field(g64, 0.95);
    let mut worst_gap: f64 = 0.0;
    for seed in 0..10u64 {
        let v = random_trig_field(g64, 400 + seed);
        let f = v.component(0);
        let scan = BmoScan { mu, region: None, stride: 1, ball_budget: usize::MAX };
        let (scanned, _, _) = bmo_seminorm(&f, &scan).unwrap();
        let brute = brute_bmo(&f, mu);
        worst_gap = worst_gap.max((scanned - brute).abs() / brute.max(1e-300));
        let (scanned_b, _, _) =
            bnu_seminorm(&f, &dom, &collar64, &BnuScan { nu, center_stride: 4 }).unwrap();
        let brute_b = brute_bnu(&f, &dom, &collar64, nu);
        worst_gap = worst_gap.max((scanned_b - brute_b).abs() / brute_b.max(1e-300));
    }
    let dt = t.elapsed().as_secs_f64();
    gate.check(
        10,
        "seminorm oracle",
        worst_gap < 0.02 && dt < 60.0,
        format!("worst relative gap {worst_gap:.3e} over 10 fields, runtime {dt:.1}s"),
    );

    assert!(
        gate.failures.is_empty(),
        "acceptance failures:\n{}",
        gate.failures.join("\n")
    );
}
