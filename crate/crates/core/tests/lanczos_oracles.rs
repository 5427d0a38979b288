mod support;

use curvlens::lanczos::{
    chebyshev_bound_ratio, chebyshev_t, lanczos_run, moment_match_check, ritz_decompose,
    Tridiagonal,
};
use curvlens::operator::apply_shifted;
use curvlens::rmt::{planted_matrix, sample_wigner, PlantedGroup, PlantedSpectrumSpec};
use curvlens::{DenseSymmetric, ProbeKind, SeedStream, SymmetricOperator};
use support::*;

#[test]
fn identity_breaks_down_after_one_step() {
    let id = DenseSymmetric::<f64>::identity(10);
    let seed: Vec<f64> = SeedStream::new(0).gaussian_vec(10);
    let run = lanczos_run(&id, 5, &seed, true).unwrap();
    assert!(run.breakdown);
    assert_eq!(run.tridiagonal.alphas.len(), 1);
    assert!((run.tridiagonal.alphas[0] - 1.0).abs() < 1e-14);
    let r = run.into_ritz(false).unwrap();
    assert_eq!(r.weights.len(), 1);
}

#[test]
fn diagonal_three_is_exact() {
    let d = DenseSymmetric::diagonal(&[1.0f64, 2.0, 3.0]);
    let seed = vec![1.0 / 3f64.sqrt(); 3];
    let r = lanczos_run(&d, 3, &seed, true)
        .unwrap()
        .into_ritz(true)
        .unwrap();
    assert!(max_abs_diff(&r.values, &[1.0, 2.0, 3.0]) < 1e-12);
    assert!(max_abs_diff(&r.weights, &[1.0 / 3.0; 3]) < 1e-12);
    assert!(moment_match_check(&d, &r, &seed, 5).unwrap() < 1e-8);
}

#[test]
fn single_step_tridiagonal() {
    let r = ritz_decompose(
        &Tridiagonal {
            alphas: vec![1.0f64],
            betas: vec![],
        },
        None,
    )
    .unwrap();
    assert_eq!(r.values, vec![1.0]);
    assert_eq!(r.weights, vec![1.0]);
}

#[test]
fn full_length_run_matches_oracle_spectrum() {
    let mut s = SeedStream::new(21);
    let w = sample_wigner::<f64>(50, &mut s, true).unwrap();
    let seed: Vec<f64> = s.gaussian_vec(50);
    let r = lanczos_run(&w, 50, &seed, true)
        .unwrap()
        .into_ritz(false)
        .unwrap();
    let oracle = jacobi_eigenvalues(50, w.entries());
    assert_eq!(r.values.len(), 50);
    assert!(max_abs_diff(&r.values, &oracle) < 1e-6);

    for n in [20, 64, 100] {
        let a = random_symmetric(n, &mut s);
        let seed: Vec<f64> = s.probe_vector(n, ProbeKind::Rademacher);
        let r = lanczos_run(&a, n, &seed, true)
            .unwrap()
            .into_ritz(false)
            .unwrap();
        assert!(
            max_abs_diff(&r.values, &a.eigenvalues().unwrap()) < 1e-6,
            "n = {n}"
        );
    }
}

#[test]
fn first_moment_identity() {
    let mut s = SeedStream::new(4);
    for _ in 0..10 {
        let a = random_symmetric(60, &mut s);
        let seed: Vec<f64> = s.gaussian_vec(60);
        let r = lanczos_run(&a, 12, &seed, true)
            .unwrap()
            .into_ritz(false)
            .unwrap();
        let nrm2: f64 = seed.iter().map(|x| x * x).sum();
        let exact = power_form(60, a.entries(), &seed, 1) / nrm2;
        let approx: f64 = r.values.iter().zip(&r.weights).map(|(t, w)| t * w).sum();
        assert!((approx - exact).abs() <= 1e-8 * exact.abs().max(1.0));
        assert!(moment_match_check(&a, &r, &seed, 1).unwrap() < 1e-10);
        assert!((r.weights.iter().sum::<f64>() - 1.0).abs() < 1e-10);
    }
}

#[test]
fn quadrature_is_exact_to_degree_two_m_minus_one() {
    let mut s = SeedStream::new(77);
    for trial in 0..20 {
        let n = 10 + (trial * 37) % 91;
        let m = 3 + trial % 6;
        let a = random_symmetric(n, &mut s);
        let seed: Vec<f64> = s.gaussian_vec(n);
        let r = lanczos_run(&a, m, &seed, true)
            .unwrap()
            .into_ritz(false)
            .unwrap();
        let nrm2: f64 = seed.iter().map(|x| x * x).sum();
        for k in 0..=(2 * m - 1) as u32 {
            let exact = power_form(n, a.entries(), &seed, k) / nrm2;
            let approx: f64 = r
                .values
                .iter()
                .zip(&r.weights)
                .map(|(t, w)| w * t.powi(k as i32))
                .sum();
            assert!(
                (approx - exact).abs() <= 1e-7 * exact.abs().max(1.0),
                "n={n} m={m} k={k}"
            );
        }
        assert!(moment_match_check(&a, &r, &seed, 2 * m as u32).is_err());
    }
}

#[test]
fn shift_invert_maps_ritz_values() {
    let mut s = SeedStream::new(1234);
    for _ in 0..50 {
        let n = 20 + s.index(60);
        let m = 2 + s.index(10);
        let mu: f64 = s.uniform(-5.0, 5.0);
        let a = random_symmetric(n, &mut s);
        let seed: Vec<f64> = s.gaussian_vec(n);
        let r = lanczos_run(&a, m, &seed, true)
            .unwrap()
            .into_ritz(false)
            .unwrap();
        let shifted = apply_shifted(&a, mu, true);
        let rs = lanczos_run(&shifted, m, &seed, true)
            .unwrap()
            .into_ritz(false)
            .unwrap();
        let mut expected: Vec<f64> = r.values.iter().map(|t| mu - t).collect();
        expected.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!(max_abs_diff(&rs.values, &expected) < 1e-10);
    }
}

#[test]
fn ritz_values_are_not_the_top_m_eigenvalues() {
    // a handful of large eigenvalues on top of a heavy low-lying bulk
    let spec = PlantedSpectrumSpec::new(
        vec![
            PlantedGroup::uniform(390, 0.0, 1.0),
            PlantedGroup::uniform(10, 5.0, 10.0),
        ],
        8,
    );
    let mut s = SeedStream::new(3);
    let (h, truth) = planted_matrix::<f64>(&spec, &mut s).unwrap();
    let m = 20;
    let top: f64 = truth.iter().rev().take(m).sum();
    let rest: f64 = truth.iter().rev().skip(m).sum();
    assert!(top < rest);

    let seed: Vec<f64> = s.probe_vector(400, ProbeKind::Rademacher);
    let r = lanczos_run(&h, m, &seed, true)
        .unwrap()
        .into_ritz(false)
        .unwrap();
    let lambda1 = *truth.last().unwrap();
    assert!((r.max_value() - lambda1).abs() < 1e-6 * lambda1);

    let mut ritz_desc = r.values.clone();
    ritz_desc.reverse();
    let top_m: Vec<f64> = truth.iter().rev().take(m).copied().collect();
    assert!(max_abs_diff(&ritz_desc, &top_m) > 0.5);

    // the quadrature mean is the seed's Rayleigh quotient, a trace estimate
    let quad_mean: f64 = r.values.iter().zip(&r.weights).map(|(t, w)| t * w).sum();
    let rayleigh = power_form(400, h.entries(), &seed, 1) / 400.0;
    assert!((quad_mean - rayleigh).abs() < 1e-8 * rayleigh);
    let top_mean = top / m as f64;
    assert!((quad_mean - top_mean).abs() > 1.0);
}

#[test]
fn reorthogonalization_contract() {
    let mut s = SeedStream::new(31);
    let w = sample_wigner::<f64>(500, &mut s, true).unwrap();
    let seed: Vec<f64> = s.gaussian_vec(500);
    let with = lanczos_run(&w, 100, &seed, true).unwrap();
    assert!(with.orthogonality_loss() < 1e-6);
    // without reorthogonalization the loss has started growing by m = 100 and
    // is macroscopic shortly after, once the extreme Ritz values converge
    let without = lanczos_run(&w, 100, &seed, false).unwrap();
    assert!(without.orthogonality_loss() > 1e4 * with.orthogonality_loss().max(f64::EPSILON));
    let longer = lanczos_run(&w, 150, &seed, false).unwrap();
    assert!(
        longer.orthogonality_loss() > 1e-3,
        "{}",
        longer.orthogonality_loss()
    );
    assert!(
        lanczos_run(&w, 150, &seed, true)
            .unwrap()
            .orthogonality_loss()
            < 1e-6
    );

    let big = random_symmetric(400, &mut s);
    let seed: Vec<f64> = s.gaussian_vec(400);
    let run = lanczos_run(&big, 200, &seed, true).unwrap();
    assert!(run.orthogonality_loss() < 1e-6);
    let r = run.into_ritz(true).unwrap();
    let vs = r.vectors.as_ref().unwrap();
    let loss = curvlens::lanczos::orthogonality_loss(vs);
    assert!(loss < 1e-6);
}

#[test]
fn bounds_table_matches_published_cells() {
    let cells: [(f64, usize, f64, f64); 12] = [
        (1.5, 5, 1.1e-4, 3.9e-2),
        (1.5, 10, 2e-10, 6.8e-4),
        (1.5, 15, 3.9e-16, 1.2e-5),
        (1.5, 20, 7.4e-22, 2.0e-7),
        (1.1, 5, 2.7e-2, 4.7e-1),
        (1.1, 10, 5.5e-5, 1.8e-1),
        (1.1, 15, 1.1e-7, 6.9e-2),
        (1.1, 20, 2.1e-10, 2.7e-2),
        (1.01, 5, 5.6e-1, 9.2e-1),
        (1.01, 10, 1.0e-1, 8.4e-1),
        (1.01, 15, 1.5e-2, 7.6e-1),
        (1.01, 20, 2.0e-3, 6.9e-1),
    ];
    let two_sig = |x: f64| {
        let e = x.abs().log10().floor();
        (x / 10f64.powf(e - 1.0)).round() * 10f64.powf(e - 1.0)
    };
    for (gap, m, l, r) in cells {
        let (lc, rc) = chebyshev_bound_ratio(gap, m).unwrap();
        // the published cells are rounded to 2 (or 1) significant figures
        let tol_l = if l == 2e-10 { 0.5e-10 } else { 0.051 * l };
        assert!((two_sig(lc) - l).abs() <= tol_l, "L({gap},{m}) = {lc:e}");
        assert!(
            (two_sig(rc) - r).abs() <= 0.051 * r,
            "R({gap},{m}) = {rc:e}"
        );
        assert!(lc < rc);
    }
    assert_eq!(chebyshev_t(9, 2.0f64), 70226.0);
    assert!(chebyshev_bound_ratio(1.0f64, 5).is_err());
}

#[test]
fn lanczos_errors() {
    let d = DenseSymmetric::<f64>::identity(3);
    assert!(lanczos_run(&d, 2, &[0.0, 0.0, 0.0], true).is_err());
    assert!(lanczos_run(&d, 2, &[1.0, 0.0], true).is_err());
    assert!(lanczos_run(&d, 0, &[1.0, 0.0, 0.0], true).is_err());
    assert!(lanczos_run(&d, 4, &[1.0, 0.0, 0.0], true).is_err());
}

#[test]
fn f32_lanczos_runs() {
    let d = DenseSymmetric::<f32>::diagonal(&[1.0, 2.0, 3.0, 4.0]);
    let r = lanczos_run(&d, 4, &[1.0, 1.0, 1.0, 1.0], true)
        .unwrap()
        .into_ritz(false)
        .unwrap();
    for (x, y) in r.values.iter().zip([1.0f32, 2.0, 3.0, 4.0]) {
        assert!((x - y).abs() < 1e-4);
    }
    assert!(d.dim() == 4);
}
