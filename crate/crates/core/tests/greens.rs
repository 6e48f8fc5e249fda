use std::collections::HashSet;

use lane_emden::exponents::gamma_n;
use lane_emden::greens::{
    ball_green, ball_robin, build_dumbbell, hhat, htilde_config, read_field, regular_part_h, robin,
    solve_meridian_poisson, tau_tilde, tau_tilde_ball_center, write_field, Ball, DomainKind, DomainSpec, GreenOptions,
    MeridianField,
};
use lane_emden::{make_exponents, GreensError};
use proptest::prelude::*;

fn axis(n: usize, y: f64) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[0] = y;
    v
}

fn opts(nx: usize) -> GreenOptions {
    let mut o = GreenOptions::with_nx(nx);
    o.solver.tol = 1e-12;
    o
}

fn max_error(f: &MeridianField, exact: impl Fn(f64, f64) -> f64) -> f64 {
    let g = f.grid;
    let mut e: f64 = 0.0;
    for j in 0..g.nr {
        for i in 0..g.nx {
            let v = f.at(i, j);
            if !v.is_nan() {
                e = e.max((v - exact(g.x(i), g.rho(j))).abs());
            }
        }
    }
    e
}

#[test]
fn ball_green_vanishes_on_the_sphere() {
    let b = Ball::new(0.0, 1.0);
    let y = [0.2, -0.1, 0.3, 0.0, 0.1, 0.05];
    let x = [0.6, 0.0, 0.8, 0.0, 0.0, 0.0];
    assert!(ball_green(&x, &y, &b).unwrap().abs() < 1e-15);
    assert!(matches!(ball_green(&y, &y, &b), Err(GreensError::Coincident)));
}

proptest! {
    #[test]
    fn ball_green_is_symmetric(
        x in prop::collection::vec(-0.4f64..0.4, 6),
        y in prop::collection::vec(-0.4f64..0.4, 6),
    ) {
        let b = Ball::new(0.0, 1.0);
        prop_assume!(x.iter().zip(&y).map(|(a, c)| (a - c).powi(2)).sum::<f64>() > 1e-6);
        let g1 = ball_green(&x, &y, &b).unwrap();
        let g2 = ball_green(&y, &x, &b).unwrap();
        prop_assert!((g1 - g2).abs() <= 1e-12 * g1.abs());
    }
}

#[test]
fn robin_at_ball_centre() {
    let b = Ball::new(0.0, 1.0);
    let gn = 1.0 / (4.0 * std::f64::consts::PI.powi(3));
    assert!((gamma_n(6) / gn - 1.0).abs() < 1e-14);
    assert!((ball_robin(&[0.0; 6], &b) / gn - 1.0).abs() < 1e-14);
    let h = regular_part_h(&DomainSpec::unit_ball(6), &[0.0; 6], &opts(128)).unwrap();
    assert!((robin(&h).unwrap() / gn - 1.0).abs() < 1e-3);
}

#[test]
fn robin_grows_towards_the_boundary() {
    let b = Ball::new(0.0, 1.0);
    let vals: Vec<f64> = (0..20).map(|i| ball_robin(&axis(6, i as f64 * 0.05), &b)).collect();
    assert!(vals.windows(2).all(|w| w[1] > w[0]));
    let y: f64 = 0.6;
    let closed = gamma_n(6) * (1.0 - y * y).powi(-4);
    assert!((ball_robin(&axis(6, y), &b) / closed - 1.0).abs() < 1e-13);
}

#[test]
fn zero_data_gives_zero_field() {
    let f = solve_meridian_poisson(&DomainSpec::unit_ball(5), &|_, _| 0.0, &|_, _| 0.0, &opts(64)).unwrap();
    assert!(max_error(&f, |_, _| 0.0) == 0.0);
}

#[test]
fn manufactured_quadratic_converges_at_second_order() {
    let n = 6;
    let dom = DomainSpec::unit_ball(n);
    let exact = |x: f64, r: f64| 1.0 - x * x - r * r;
    let errs: Vec<f64> = [32, 64, 128]
        .iter()
        .map(|&nx| {
            let f = solve_meridian_poisson(&dom, &|_, _| 2.0 * n as f64, &|_, _| 0.0, &opts(nx)).unwrap();
            max_error(&f, exact)
        })
        .collect();
    let order = (errs[0] / errs[2]).log2() / 2.0;
    assert!(order > 1.7, "errors {errs:?}");
}

#[test]
fn maximum_principle() {
    let dom = DomainSpec::ball(6, 0.5, 1.5);
    let f = solve_meridian_poisson(&dom, &|x, r| (x * 3.0).sin().powi(2) + r, &|_, _| 0.0, &opts(64)).unwrap();
    assert!(f.values.iter().filter(|v| !v.is_nan()).all(|&v| v >= 0.0));
}

#[test]
fn image_charge_regular_part_converges() {
    let n = 6;
    let b = Ball::new(0.0, 1.0);
    let y = 0.3;
    let exact = |x: f64, r: f64| {
        let mut p = vec![0.0; n];
        p[0] = x;
        p[1] = r;
        lane_emden::greens::ball_regular(&p, &axis(n, y), &b)
    };
    let errs: Vec<f64> = [32, 64, 128]
        .iter()
        .map(|&nx| max_error(&regular_part_h(&DomainSpec::unit_ball(n), &axis(n, y), &opts(nx)).unwrap(), exact))
        .collect();
    assert!(errs[2] < errs[1] && errs[1] < errs[0], "{errs:?}");
    assert!((errs[0] / errs[2]).log2() / 2.0 > 1.6, "{errs:?}");
}

#[test]
fn hhat_at_centre_is_constant() {
    let e = make_exponents(6, 1.2).unwrap();
    let f = hhat(&DomainSpec::unit_ball(6), &[0.0; 6], &e, &opts(64)).unwrap();
    let err = max_error(&f, |_, _| 1.0);
    assert!(err < 1e-8, "{err:e}");
}

#[test]
fn off_axis_source_is_unsupported() {
    let e = make_exponents(6, 1.2).unwrap();
    let (dom, _) = build_dumbbell(&DomainSpec::unit_lobes(2, 0.5), 0.1, 6, 0.02).unwrap();
    let y = [1.0, 0.1, 0.0, 0.0, 0.0, 0.0];
    assert!(matches!(hhat(&dom, &y, &e, &opts(64)), Err(GreensError::Unsupported(_))));
}

#[test]
fn disjoint_union_robin_matches_lobe() {
    let balls = vec![Ball::new(0.0, 1.0), Ball::new(3.0, 0.5)];
    let dom = DomainSpec::disjoint_union(6, balls.clone());
    let f = regular_part_h(&dom, &axis(6, 3.1), &opts(256)).unwrap();
    let single = ball_robin(&axis(6, 3.1), &balls[1]);
    assert!((robin(&f).unwrap() / single - 1.0).abs() < 2e-3);
}

#[test]
fn tau_matches_radial_oracle_and_is_even() {
    let e = make_exponents(6, 1.2).unwrap();
    let dom = DomainSpec::unit_ball(6);
    let o = opts(256);
    let t0 = tau_tilde(&dom, 0.0, &e, &o).unwrap();
    assert!((t0 / tau_tilde_ball_center(&e, 1.0) - 1.0).abs() < 1e-3);
    let a = tau_tilde(&dom, 0.2, &e, &o).unwrap();
    let b = tau_tilde(&dom, -0.2, &e, &o).unwrap();
    assert!((a - b).abs() < 1e-6 * a.abs());
    assert!(a > t0);
}

#[test]
fn tau_scales_with_ball_radius() {
    let e = make_exponents(6, 1.2).unwrap();
    let r: f64 = 0.7;
    let scaled = tau_tilde_ball_center(&e, r);
    assert!((scaled / (r.powf(-e.gamma_u) * tau_tilde_ball_center(&e, 1.0)) - 1.0).abs() < 1e-10);
}

#[test]
fn htilde_is_homogeneous_in_weights() {
    let e = make_exponents(6, 1.2).unwrap();
    let dom = DomainSpec::unit_ball(6);
    let o = opts(128);
    let lambda: f64 = 1.7;
    let a = htilde_config(&dom, &[1.0], &[0.1], &e, &o).unwrap().values[0];
    let b = htilde_config(&dom, &[lambda], &[0.1], &e, &o).unwrap().values[0];
    let pw = 6.0 * e.p / (e.q + 1.0);
    assert!((b / (lambda.powf(pw) * a) - 1.0).abs() < 1e-9);
}

#[test]
fn disjoint_lobes_do_not_see_each_other() {
    let e = make_exponents(6, 1.2).unwrap();
    let dom = DomainSpec::disjoint_union(6, vec![Ball::new(0.0, 1.0), Ball::new(2.5, 1.0)]);
    let o = opts(512);
    let two = htilde_config(&dom, &[1.0, 0.4], &[0.0, 2.5], &e, &o).unwrap();
    let other = htilde_config(&dom, &[1.0, 2.0], &[0.0, 2.5], &e, &o).unwrap();
    assert_eq!(two.values[0], other.values[0]);
    let alone = tau_tilde(&DomainSpec::unit_ball(6), 0.0, &e, &opts(256)).unwrap();
    assert!((two.values[0] / alone - 1.0).abs() < 1e-3);
}

#[test]
fn close_sources_overlap() {
    let e = make_exponents(6, 1.2).unwrap();
    let r = htilde_config(&DomainSpec::unit_ball(6), &[1.0, 1.0], &[0.0, 0.05], &e, &opts(64));
    assert!(matches!(r, Err(GreensError::SingularOverlap { .. })));
}

#[test]
fn dumbbell_geometry() {
    let lobes = DomainSpec::unit_lobes(2, 0.5);
    let (dom, grid) = build_dumbbell(&lobes, 0.0, 6, 0.02).unwrap();
    assert!(matches!(dom.kind, DomainKind::DisjointUnion { ref balls } if balls.len() == 2));
    assert_eq!(grid.mask_components(), 2);

    let h = 0.01;
    let (_, grid) = build_dumbbell(&lobes, 0.1, 6, h).unwrap();
    assert_eq!(grid.mask_components(), 1);
    let neck_x = 2.25;
    let i = ((neck_x - grid.spec.x0) / h).round() as u32;
    let column = grid.cells.iter().filter(|&&(ci, _)| ci == i).count();
    assert!(column >= 10, "neck column holds {column} cells");

    let mut prev: Option<HashSet<(u32, u32)>> = None;
    for eta in [0.0, 0.05, 0.1, 0.2, 0.4] {
        let (_, g) = build_dumbbell(&lobes, eta, 6, 0.01).unwrap();
        let cells: HashSet<_> = g.cells.iter().copied().collect();
        if let Some(p) = &prev {
            assert!(p.is_subset(&cells), "mask not monotone at eta = {eta}");
        }
        prev = Some(cells);
    }
    assert!(matches!(
        build_dumbbell(&lobes, 0.03, 6, 0.01),
        Err(GreensError::ResolutionTooCoarse { .. })
    ));
}

#[test]
fn field_files_round_trip() {
    let dom = DomainSpec::unit_ball(6);
    let f = regular_part_h(&dom, &axis(6, 0.2), &opts(32)).unwrap();
    let dir = std::env::temp_dir().join(format!("le-field-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let stem = dir.join("h");
    write_field(&stem, &f, &dom).unwrap();
    let (g, side) = read_field(&stem).unwrap();
    assert_eq!(side.domain_hash, dom.hash());
    assert_eq!(f.to_bytes(), g.to_bytes());
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn parallel_and_sequential_solves_agree_bitwise() {
    let e = make_exponents(6, 1.2).unwrap();
    let dom = DomainSpec::unit_ball(6);
    let mut seq = opts(128);
    seq.solver.exec = lane_emden::Exec::Sequential;
    let a = htilde_config(&dom, &[1.0], &[0.1], &e, &seq).unwrap().values[0];
    let b = htilde_config(&dom, &[1.0], &[0.1], &e, &opts(128)).unwrap().values[0];
    assert_eq!(a.to_bits(), b.to_bits());
}
