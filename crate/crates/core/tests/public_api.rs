use fractv::frac1d::{frac_derivative_rl, frac_integral};
use fractv::grid::{extend_by_zero, l1_integral, lp_norm, translate};
use fractv::io::{read_pgm, read_signal_csv, write_pgm, write_signal_csv};
use fractv::verify::run_suite;
use fractv::{exec, gamma, tv_dual_estimate, tv_primal, Field2D, FracOrder, GridFunction, LpIndex, Side, Signal1D};

fn order(r: f64) -> FracOrder {
    FracOrder::new(r).unwrap()
}

#[test]
fn half_derivative_of_the_ramp() {
    let w = Signal1D::from_fn(2048, |x| x).unwrap();
    let d = frac_derivative_rl(&w, order(0.5), Side::Left).unwrap();
    let c = 1.0 / gamma(1.5).unwrap();
    for (x, v) in w.grid().nodes().zip(d.as_slice()).skip(205) {
        assert!((v - c * x.sqrt()).abs() < 2e-3, "x = {x}: {v}");
    }
}

#[test]
fn integral_of_one_is_the_power() {
    let w = Signal1D::from_fn(512, |_| 1.0).unwrap();
    let r = 0.7;
    let i = frac_integral(&w, r, Side::Left).unwrap();
    let c = 1.0 / gamma(r + 1.0).unwrap();
    let exact = Signal1D::from_fn(512, |x| c * x.powf(r)).unwrap();
    let err = l1_integral(&i.with_values((i.values() - exact.values()).into_dyn()).unwrap());
    assert!(err < 5e-3, "{err}");
}

#[test]
fn right_side_mirrors_left_side() {
    let w = Signal1D::from_fn(100, |x| (5.0 * x).cos() + x * x).unwrap();
    let mirrored = Signal1D::new(w.as_slice().iter().rev().copied().collect()).unwrap();
    let l = frac_derivative_rl(&mirrored, order(1.3), Side::Left).unwrap();
    let r = frac_derivative_rl(&w, order(1.3), Side::Right).unwrap();
    for (a, b) in l.as_slice().iter().rev().zip(r.as_slice()) {
        assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
    }
}

#[test]
fn geometry_helpers() {
    let one = Signal1D::from_fn(4, |_| 1.0).unwrap();
    assert_eq!(extend_by_zero(&one, 2).as_slice(), &[0.0, 0.0, 1.0, 1.0, 1.0, 1.0, 1.0, 0.0, 0.0]);
    let spike = Signal1D::new(vec![0.0, 1.0, 0.0, 0.0]).unwrap();
    assert_eq!(translate(&spike, 1).unwrap().as_slice(), &[0.0, 0.0, 1.0, 0.0]);
    assert!(translate(&spike, 5).is_err());
    for (p, v) in [(1.0, 7.0), (2.0, 5.0), (f64::INFINITY, 4.0)] {
        assert_eq!(lp_norm(&[3.0, 4.0], LpIndex::new(p).unwrap()), v);
    }
}

#[test]
fn first_order_variation_of_the_ramp_is_one() {
    let w = Signal1D::from_fn(64, |x| x).unwrap();
    let tv = tv_primal(&w, order(1.0), LpIndex::ONE).unwrap().value;
    assert!((tv - 1.0).abs() < 1e-12, "{tv}");
    let u = Field2D::from_fn(32, 32, |x, _| x).unwrap();
    assert!((tv_primal(&u, order(1.0), LpIndex::TWO).unwrap().value - 1.0).abs() < 1e-12);
}

#[test]
fn dual_estimate_stays_below_the_primal_value() {
    let u = Field2D::from_fn(32, 32, |x, y| (3.0 * x).sin() * (2.0 * y).cos()).unwrap();
    for r in [0.5, 1.0, 1.5] {
        for p in [LpIndex::ONE, LpIndex::TWO, LpIndex::INF] {
            let primal = tv_primal(&u, order(r), p).unwrap().value;
            let dual = tv_dual_estimate(&u, order(r), p, 16, 1).unwrap().value;
            assert!(dual <= primal * (1.0 + 1e-9), "r = {r}, p = {p}: {dual} > {primal}");
            assert!(dual > 0.0);
        }
    }
}

#[test]
fn file_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let w = Signal1D::from_fn(33, |x| (x * 7.1).exp().sin() / 3.0).unwrap();
    let path = dir.path().join("w.csv");
    write_signal_csv(&path, &w).unwrap();
    assert_eq!(read_signal_csv(&path).unwrap(), w);

    let u = Field2D::from_fn(9, 5, |x, y| 0.5 + 0.4 * (x - y)).unwrap();
    let path = dir.path().join("u.pgm");
    write_pgm(&path, &u, 65535).unwrap();
    let back = read_pgm(&path).unwrap();
    let worst = (back.values() - u.values()).iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    assert!(worst <= 0.5 / 65535.0 + 1e-15, "{worst}");
}

#[test]
fn thread_count_does_not_change_results() {
    let u = Field2D::from_fn(64, 48, |x, y| (9.0 * x * y).sin() + x).unwrap();
    let run =
        || (0..4).map(|k| tv_primal(&u, order(0.4 + 0.3 * k as f64), LpIndex::TWO).unwrap().value).collect::<Vec<_>>();
    assert_eq!(exec::with_threads(1, run), run());
    let suite = |names: &[&str]| run_suite(names, 64, 11).unwrap().to_json();
    let one = exec::with_threads(1, || suite(&["semigroup", "translation"]));
    assert_eq!(one, suite(&["semigroup", "translation"]));
}
