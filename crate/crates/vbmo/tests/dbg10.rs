use vbmo::config::random_trig_field;
use vbmo::fields::seminorm::{bmo_seminorm, bnu_seminorm, BmoScan, BnuScan};
use vbmo::geometry::{Domain, DomainKind};
use vbmo::grid::Grid;

#[test]
fn dbg10() {
    let dom = Domain::new(DomainKind::Disk { radius: 1.0 }, 0.08).unwrap();
    let g64 = Grid::centered(64, 1.5);
    let collar = dom.collar_field(g64, 0.95);
    for seed in 0..10u64 {
        let f = random_trig_field(g64, 400 + seed).component(0);
        let s2 = bmo_seminorm(&f, &BmoScan { mu: 0.25, region: None, stride: 2, ball_budget: usize::MAX }).unwrap().0;
        let s1 = bmo_seminorm(&f, &BmoScan { mu: 0.25, region: None, stride: 1, ball_budget: usize::MAX }).unwrap().0;
        let b4 = bnu_seminorm(&f, &dom, &collar, &BnuScan { nu: 0.1, center_stride: 4 }).unwrap().0;
        let b1 = bnu_seminorm(&f, &dom, &collar, &BnuScan { nu: 0.1, center_stride: 1 }).unwrap().0;
        println!("seed {seed}: bmo gap {:.4e}  bnu gap {:.4e}", (s2-s1).abs()/s1, (b4-b1).abs()/b1);
    }
}
