use music_scatter::music::{noise_projection, test_vector_te, test_vector_tm, DEFAULT_PEAK_CAP};
use music_scatter::scene::fresnel_mask;
use music_scatter::{
    apply_mask, assemble_msr, decompose, image_map, paper_scene, select_signal_rank,
    strip_diagonal, uniform_directions, ArrayConfig, Background, ContrastMode, Generator,
    Inhomogeneity, RankPolicy, RoiGrid, Scene, Side, TestFamily, Vec2,
};
use nalgebra::DMatrix;
use num_complex::Complex64;

fn single(mode: ContrastMode, z: Vec2) -> Scene {
    let bg = Background::vacuum(2e9).unwrap();
    let (e, m) = match mode {
        ContrastMode::Permittivity => (5.0, 1.0),
        ContrastMode::Permeability => (1.0, 5.0),
    };
    let inc = Inhomogeneity::new(z, 0.01, e * bg.epsilon_b, m * bg.mu_b).unwrap();
    Scene::new(bg, mode, vec![inc]).unwrap()
}

/// 41x41 grid over [-0.1, 0.1]^2 whose central pixel sits at the origin.
fn centered_grid() -> RoiGrid {
    let h = 0.1 + 0.1 / 40.0;
    RoiGrid::new(-h, h, -h, h, 41, 41).unwrap()
}

#[test]
fn threshold_rank_on_paper_spectra() {
    for (mode, want) in [(ContrastMode::Permittivity, 3), (ContrastMode::Permeability, 6)] {
        let s = paper_scene(mode, 2e9, 36).unwrap();
        let d = decompose(&assemble_msr(&s.scene, &s.array, Generator::Born).unwrap()).unwrap();
        assert_eq!(select_signal_rank(&d.singular_values, RankPolicy::default()).unwrap(), want);
        let spec = d.normalized_spectrum();
        assert_eq!(spec[0], 1.0);
        assert!(spec.windows(2).all(|w| w[1] <= w[0]));
    }
}

#[test]
fn threshold_that_keeps_everything_falls_back() {
    let sigma = [1.0, 0.9, 0.8];
    assert_eq!(select_signal_rank(&sigma, RankPolicy::Threshold(0.5)).unwrap(), 2);
    assert!(select_signal_rank(&[1.0], RankPolicy::Threshold(0.5)).is_err());
    assert!(select_signal_rank(&sigma, RankPolicy::Threshold(1.5)).is_err());
}

#[test]
fn projector_is_orthogonal_and_kills_signal_space() {
    let s = paper_scene(ContrastMode::Permittivity, 2e9, 12).unwrap();
    let m = apply_mask(&assemble_msr(&s.scene, &ArrayConfig::fresnel(), Generator::Born).unwrap(), &fresnel_mask()).unwrap();
    let d = decompose(&m).unwrap().with_rank(RankPolicy::Fixed(4)).unwrap();
    for (side, basis) in [(Side::Left, &d.left), (Side::Right, &d.right)] {
        let p = noise_projection(&d, side).unwrap();
        let pm = p.matrix();
        assert!((&pm * &pm - &pm).norm() < 1e-12);
        assert!((&pm - pm.adjoint()).norm() < 1e-12);
        assert_eq!(p.signal_rank(), 4);
        assert!((pm.trace().re - (p.dim() - 4) as f64).abs() < 1e-10);
        for c in 0..4 {
            let v: Vec<Complex64> = basis.column(c).iter().copied().collect();
            assert!(p.residual_norm(&v) < 1e-12);
        }
        let v: Vec<Complex64> = basis.column(5).iter().copied().collect();
        assert!((p.residual_norm(&v) - 1.0).abs() < 1e-12);
        let applied = p.apply(&v);
        let dense = &pm * nalgebra::DVector::from_vec(v.clone());
        for (a, b) in applied.iter().zip(dense.iter()) {
            assert!((a - b).norm() < 1e-12);
        }
    }
    assert!(noise_projection(&d, Side::Both).is_err());
    let unranked = decompose(&m).unwrap();
    assert!(noise_projection(&unranked, Side::Left).is_err());
}

#[test]
fn test_vectors_are_unit_norm() {
    for n in [3, 8, 36] {
        let d = uniform_directions(n).unwrap();
        let x = Vec2::new(0.031, -0.017);
        assert!((test_vector_tm(&x, &d, 41.9).unwrap().norm() - 1.0).abs() < 1e-14);
        for deg in [0.0f64, 33.0, 90.0] {
            let xi = Vec2::new(deg.to_radians().cos(), deg.to_radians().sin());
            assert!((test_vector_te(&x, &xi, &d, 41.9).unwrap().norm() - 1.0).abs() < 1e-14);
        }
    }
    let d = uniform_directions(8).unwrap();
    assert!(test_vector_te(&Vec2::zeros(), &Vec2::new(1.0, 1.0), &d, 1.0).is_err());
}

#[test]
fn te_vector_components() {
    let d = uniform_directions(6).unwrap();
    let x = Vec2::new(0.02, 0.05);
    let xi = Vec2::new(0.0, 1.0);
    let k = 30.0;
    let t = test_vector_te(&x, &xi, &d, k).unwrap();
    for (c, dn) in t.0.iter().zip(&d) {
        let want = Complex64::cis(k * dn.dot(&x)) * ((2.0f64 / 6.0).sqrt() * dn.y);
        assert!((c - want).norm() < 1e-15);
    }
}

#[test]
fn full_matrix_single_inclusion_peaks_at_center() {
    let grid = centered_grid();
    for (mode, family) in [
        (ContrastMode::Permittivity, TestFamily::Tm),
        (ContrastMode::Permeability, TestFamily::TeSweep),
    ] {
        let s = single(mode, Vec2::zeros());
        let m = assemble_msr(&s, &ArrayConfig::symmetric(24).unwrap(), Generator::Born).unwrap();
        let rank = if mode == ContrastMode::Permittivity { 1 } else { 2 };
        let d = decompose(&m).unwrap().with_rank(RankPolicy::Fixed(rank)).unwrap();
        let map = image_map(&d, &grid, family, Side::Left, DEFAULT_PEAK_CAP).unwrap();
        assert_eq!(map.argmax(), (20, 20));
        assert!(map.get(20, 20) > 1e5);
        assert!(map.values.iter().all(|v| v.is_finite() && *v > 0.0 && *v <= DEFAULT_PEAK_CAP));
        assert_eq!(map.meta.signal_rank, rank);
    }
}

#[test]
fn left_and_right_agree_on_reciprocal_data() {
    let s = paper_scene(ContrastMode::Permittivity, 2e9, 16).unwrap();
    let m = assemble_msr(&s.scene, &s.array, Generator::Born).unwrap();
    let d = decompose(&m).unwrap().with_rank(RankPolicy::Fixed(3)).unwrap();
    let grid = RoiGrid::square(0.1, 32).unwrap();
    let l = image_map(&d, &grid, TestFamily::Tm, Side::Left, 1e6).unwrap();
    let r = image_map(&d, &grid, TestFamily::Tm, Side::Right, 1e6).unwrap();
    let b = image_map(&d, &grid, TestFamily::Tm, Side::Both, 1e6).unwrap();
    for i in 0..l.values.len() {
        assert!((l.values[i] - r.values[i]).abs() <= 1e-8 * l.values[i]);
        assert!((b.values[i] - 0.5 * (l.values[i] + r.values[i])).abs() <= 1e-12 * b.values[i]);
    }
}

#[test]
fn argmax_tie_break_and_local_maxima() {
    let s = single(ContrastMode::Permittivity, Vec2::zeros());
    let m = assemble_msr(&s, &ArrayConfig::symmetric(8).unwrap(), Generator::Born).unwrap();
    let d = decompose(&m).unwrap().with_rank(RankPolicy::Fixed(1)).unwrap();
    let grid = RoiGrid::square(0.05, 8).unwrap();
    let mut map = image_map(&d, &grid, TestFamily::Tm, Side::Left, 10.0).unwrap();
    map.values.iter_mut().for_each(|v| *v = 3.0);
    assert_eq!(map.argmax(), (0, 0));
    assert_eq!(map.local_maxima().len(), 64);
    map.values[grid.index(5, 2)] = 4.0;
    assert_eq!(map.argmax(), (5, 2));
    assert!(map.is_local_max(5, 2));
    assert!(!map.is_local_max(4, 2));
    assert_eq!(map.argmax_near(&grid.point(0, 0), 1e-9), Some((0, 0)));
    assert_eq!(map.quantile(1.0), 4.0);
    assert_eq!(map.quantile(0.0), 3.0);
}

#[test]
fn invalid_imaging_inputs() {
    let s = paper_scene(ContrastMode::Permittivity, 2e9, 12).unwrap();
    let df = strip_diagonal(&assemble_msr(&s.scene, &s.array, Generator::Born).unwrap()).unwrap();
    let d = decompose(&df).unwrap();
    let grid = RoiGrid::square(0.1, 8).unwrap();
    assert!(image_map(&d, &grid, TestFamily::Tm, Side::Left, 1e6).is_err());
    let d = d.with_rank(RankPolicy::Fixed(3)).unwrap();
    assert!(image_map(&d, &grid, TestFamily::Tm, Side::Left, 0.0).is_err());
    assert!(image_map(&d, &grid, TestFamily::Te { xi: [1.0, 1.0] }, Side::Left, 1e6).is_err());
    let mut zero = df.clone();
    zero.entries = DMatrix::zeros(12, 12);
    assert!(decompose(&zero).is_err());
}

#[test]
fn diagonal_free_tm_peaks_at_all_paper_centers() {
    let s = paper_scene(ContrastMode::Permittivity, 2e9, 36).unwrap();
    let df = strip_diagonal(&assemble_msr(&s.scene, &s.array, Generator::Born).unwrap()).unwrap();
    let d = decompose(&df).unwrap().with_rank(RankPolicy::default()).unwrap();
    let grid = RoiGrid::square(0.1, 100).unwrap();
    let map = image_map(&d, &grid, TestFamily::Tm, Side::Left, DEFAULT_PEAK_CAP).unwrap();
    let k = d.wavenumber;
    for z in s.scene.centers() {
        let (i, j) = map.argmax_near(&z, 2.0 / k).unwrap();
        assert!((grid.point(i, j) - z).norm() <= 1.5 * grid.dx());
    }
}
