use fc2d::btz1d::*;
use fc2d::domains::*;
use fc2d::runs::*;

const PI: f64 = std::f64::consts::PI;

#[test]
fn boom_extent_scan() {
    let d = 5;
    let op = build_operator(&BtzParams::new(d, 27, 12, 20, 6).unwrap()).unwrap();
    let f = |x: f64, y: f64| (0.5*(x*x+y*y)).exp() * ((10.0*PI*x).sin() + (10.0*PI*y).cos());
    let h = 1e-2;
    for ce in [0.5, 0.7, 0.9, 1.1] {
        let opts = DomainOptions { corner_extent: ce, ..Default::default() };
        let dom = boomerang(1.5, d, h, &opts).unwrap();
        let c = match dom.dec.patches[1].arc { fc2d::geometry::ArcSpan::C1 { c_xi, .. } => c_xi, _ => 0.0 };
        let (_, row) = continuation_row(&dom, &op, d, h, &f, false).unwrap();
        eprintln!("ce={ce}: c={c:.4} rel_inf={:.3e}", row.metrics.rel_inf);
    }
}
