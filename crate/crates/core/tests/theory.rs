use std::f64::consts::PI;

use music_scatter::specfun::bessel_j;
use music_scatter::theory::{
    c_eps, c_eps_from_gram, c_eps_from_parameters, c_mu, identity_j0_sum, identity_j1_closed,
    identity_j1_sum, identity_j2_closed, identity_j2_sum, pearson, theorem_te_bracket,
    theorem_te_map, theorem_tm_map, theorem_tm_residual, tm_prefactor,
};
use music_scatter::{
    assemble_msr, compare_maps, decompose, image_map, predicted_map, strip_diagonal,
    uniform_directions, ArrayConfig, Background, ContrastMode, Generator, Inhomogeneity,
    Polarization, RankPolicy, RoiGrid, Scene, Side, TestFamily, TheoryParams, Vec2,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const J1_FIRST_MAX: f64 = 1.841_183_781_340_659;

fn random_points(n: usize, r_max: f64, seed: u64) -> Vec<Vec2> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let r = rng.random_range(0.0..r_max);
            let a = rng.random_range(0.0..2.0 * PI);
            Vec2::new(r * a.cos(), r * a.sin())
        })
        .collect()
}

#[test]
fn direction_sum_identities() {
    let n = 64;
    let k = 1.0;
    let d = uniform_directions(n).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for x in random_points(200, 8.0, 3) {
        let a = rng.random_range(0.0..2.0 * PI);
        let xi = Vec2::new(a.cos(), a.sin());
        let m = d[rng.random_range(0..n)];
        let r = x.norm();
        assert!((identity_j0_sum(&x, &d, k) - j0(r)).norm() < 1e-12);
        if r > 0.0 {
            let closed = identity_j1_closed(&x, &xi, n, k).unwrap();
            assert!((identity_j1_sum(&x, &xi, &d, k) - closed).norm() < 1e-10);
        }
        let s = identity_j2_sum(&x, &xi, &m, &d, k);
        assert!((s.re - identity_j2_closed(&x, &xi, &m, n, k)).abs() < 1e-10);
        assert!(s.im.abs() < 1e-10);
    }
    assert!(identity_j1_closed(&Vec2::zeros(), &Vec2::new(1.0, 0.0), n, k).is_err());
    let xi = Vec2::new(0.6, 0.8);
    let s = identity_j2_sum(&Vec2::zeros(), &xi, &d[5], &d, k);
    assert!((s.re - identity_j2_closed(&Vec2::zeros(), &xi, &d[5], n, k)).abs() < 1e-12);
}

#[test]
fn second_moment_of_directions() {
    for n in [3, 5, 12, 36] {
        let d = uniform_directions(n).unwrap();
        let (mut xx, mut xy, mut yy) = (0.0, 0.0, 0.0);
        for v in &d {
            xx += v.x * v.x;
            xy += v.x * v.y;
            yy += v.y * v.y;
        }
        let h = n as f64 / 2.0;
        assert!((xx - h).abs() < 1e-12 && xy.abs() < 1e-12 && (yy - h).abs() < 1e-12);
    }
}

#[test]
fn constants() {
    assert_eq!(c_eps(36), 1.0 / 1225.0);
    assert!((c_mu(36) - 5.8925e-3).abs() < 1e-7);
    assert_eq!(tm_prefactor(12), 121.0 / 120.0);
}

#[test]
fn tm_predictor_shape() {
    let k = 41.9;
    let p = TheoryParams::new(36, k, Vec2::new(0.01, 0.02)).unwrap();
    assert_eq!(theorem_tm_map(&p.center, &p, 1e6), 1e6);
    assert_eq!(theorem_tm_residual(&p.center, &p), 0.0);
    let x = p.center + Vec2::new(3.0 / k, 0.0);
    let want = tm_prefactor(36) / (1.0 - j0(3.0).powi(2)).sqrt();
    assert!((theorem_tm_map(&x, &p, 1e6) - want).abs() < 1e-12 * want);
    assert!(TheoryParams::new(2, k, Vec2::zeros()).is_err());
    assert!(TheoryParams::new(12, 0.0, Vec2::zeros()).is_err());
}

#[test]
fn te_predictor_is_minimal_at_center_with_first_ring() {
    let k = 41.9;
    let p = TheoryParams::new(36, k, Vec2::zeros()).unwrap();
    let along = |kr: f64| theorem_te_map(&Vec2::new(kr / k, 0.0), &p, 1e6).unwrap();
    let at_center = along(0.0);
    assert!((at_center - 1.0 / (1.0 - p.c_mu)).abs() < 1e-12);
    let samples: Vec<(f64, f64)> = (0..=4000).map(|i| 4.0 * i as f64 / 4000.0).map(|kr| (kr, along(kr))).collect();
    let (kr_max, v_max) = samples.iter().copied().fold((0.0, 0.0), |a, b| if b.1 > a.1 { b } else { a });
    assert!((kr_max - J1_FIRST_MAX).abs() < 2e-3, "ring at kr={kr_max}");
    assert!(v_max > at_center);
    assert!(samples.iter().all(|&(_, v)| v >= at_center - 1e-12));
    let b = theorem_te_bracket(&Vec2::new(J1_FIRST_MAX / k, 0.0), &p).unwrap();
    assert!(b > 0.0 && (1.0 / b.sqrt() - v_max).abs() < 1e-6 * v_max);
    let small = TheoryParams::new(4, k, Vec2::zeros()).unwrap();
    assert!(theorem_te_bracket(&Vec2::zeros(), &small).is_err());
    // With C_mu as defined the profile is (1 - C)^(-1) (1 - J1^2)^(-1/2).
    for kr in [0.3, 1.0, 2.5, 3.7] {
        let want = 1.0 / ((1.0 - p.c_mu) * (1.0 - j1(kr).powi(2)).sqrt());
        assert!((along(kr) - want).abs() < 1e-10 * want);
    }
}

fn single_tm(z: Vec2, f: f64) -> Scene {
    let bg = Background::vacuum(f).unwrap();
    let inc = Inhomogeneity::new(z, 0.01, 5.0 * bg.epsilon_b, bg.mu_b).unwrap();
    Scene::new(bg, ContrastMode::Permittivity, vec![inc]).unwrap()
}

#[test]
fn c_eps_from_data_matches_closed_form() {
    for n in [12, 36] {
        let scene = single_tm(Vec2::new(0.02, -0.03), 2e9);
        let df = strip_diagonal(&assemble_msr(&scene, &ArrayConfig::symmetric(n).unwrap(), Generator::Born).unwrap()).unwrap();
        let d = decompose(&df).unwrap();
        let s1 = d.singular_values[0];
        let from_gram = c_eps_from_gram(&df.entries, s1);
        let from_params = c_eps_from_parameters(&scene.inhomogeneities[0], &scene.background, s1);
        assert!((from_gram - c_eps(n)).abs() < 1e-12 * c_eps(n));
        assert!((from_params - c_eps(n)).abs() < 1e-12 * c_eps(n));
        // sigma_1 of the stripped single-inclusion matrix is (N - 1)|c|.
        let c = df.entries[(0, 1)].norm();
        assert!((s1 - (n as f64 - 1.0) * c).abs() < 1e-12 * s1);
    }
}

#[test]
fn empirical_tm_map_matches_predictor() {
    let z = Vec2::new(0.02, -0.03);
    let scene = single_tm(z, 2e9);
    let df = strip_diagonal(&assemble_msr(&scene, &ArrayConfig::symmetric(36).unwrap(), Generator::Born).unwrap()).unwrap();
    let d = decompose(&df).unwrap().with_rank(RankPolicy::Fixed(1)).unwrap();
    let grid = RoiGrid::square(0.1, 64).unwrap();
    let emp = image_map(&d, &grid, TestFamily::Tm, Side::Left, 1e6).unwrap();
    let params = TheoryParams::new(36, scene.wavenumber(), z).unwrap();
    let pred = predicted_map(&grid, &params, Polarization::Tm, 1e6).unwrap();
    let rep = compare_maps(&emp, &pred, &[z], grid.dx()).unwrap();
    assert!(rep.correlation > 0.999, "{rep:?}");
    assert!(rep.l2_rel < 1e-3, "{rep:?}");

    let off = TheoryParams::new(36, scene.wavenumber(), Vec2::new(-0.05, 0.06)).unwrap();
    let wrong = predicted_map(&grid, &off, Polarization::Tm, 1e6).unwrap();
    let rep = compare_maps(&emp, &wrong, &[z], grid.dx()).unwrap();
    assert!(rep.correlation < 0.5, "{rep:?}");
}

#[test]
fn compare_identical_maps_and_errors() {
    let grid = RoiGrid::square(0.1, 32).unwrap();
    let p = TheoryParams::new(36, 41.9, Vec2::new(0.01, 0.0)).unwrap();
    let a = predicted_map(&grid, &p, Polarization::Te, 1e6).unwrap();
    let rep = compare_maps(&a, &a, &[p.center], 0.0).unwrap();
    assert_eq!((rep.linf, rep.l2_rel, rep.correlation, rep.pixels), (0.0, 0.0, 1.0, 1024));
    let other = predicted_map(&RoiGrid::square(0.1, 16).unwrap(), &p, Polarization::Tm, 1e6).unwrap();
    assert!(compare_maps(&a, &other, &[], 0.0).is_err());
    assert!(compare_maps(&a, &a, &[p.center], 1.0).is_err());
    assert_eq!(pearson(&[1.0, 1.0], &[1.0, 2.0]), 0.0);
    let csv = rep.to_csv();
    assert!(csv.starts_with("linf,l2_rel,correlation,pixels\n"));
}

fn j0(x: f64) -> f64 {
    bessel_j(0, x).unwrap()
}

fn j1(x: f64) -> f64 {
    bessel_j(1, x).unwrap()
}

/// On permeability data both test families probe the same noise space but
/// give different maps. The dipole predictor describes the scalar-vector map;
/// the dipole-vector map (which peaks at the center) does not follow it.
#[test]
fn te_data_scalar_and_dipole_maps_differ() {
    let z = Vec2::new(0.02, -0.03);
    let bg = Background::vacuum(2e9).unwrap();
    let inc = Inhomogeneity::new(z, 0.01, bg.epsilon_b, 5.0 * bg.mu_b).unwrap();
    let scene = Scene::new(bg, ContrastMode::Permeability, vec![inc]).unwrap();
    let grid = RoiGrid::square(0.1, 64).unwrap();
    for n in [12, 36, 72] {
        let df = strip_diagonal(&assemble_msr(&scene, &ArrayConfig::symmetric(n).unwrap(), Generator::Born).unwrap()).unwrap();
        let d = decompose(&df).unwrap().with_rank(RankPolicy::Fixed(2)).unwrap();
        let scalar = image_map(&d, &grid, TestFamily::Tm, Side::Left, 1e6).unwrap();
        let dipole = image_map(&d, &grid, TestFamily::te_angle(0.0), Side::Left, 1e6).unwrap();
        let params = TheoryParams::new(n, scene.wavenumber(), z).unwrap();
        let pred = predicted_map(&grid, &params, Polarization::Te, 1e6).unwrap();

        let between = compare_maps(&scalar, &dipole, &[z], grid.dx()).unwrap();
        assert!(between.correlation < 0.5 && between.l2_rel > 0.2, "N={n} {between:?}");
        let rs = compare_maps(&scalar, &pred, &[z], grid.dx()).unwrap();
        assert!(rs.correlation > 0.99 && rs.l2_rel < 0.15, "N={n} {rs:?}");
        let rd = compare_maps(&dipole, &pred, &[z], grid.dx()).unwrap();
        assert!(rd.correlation < 0.5, "N={n} {rd:?}");
        assert_eq!(dipole.argmax(), grid.nearest(&z));
    }
}
