//! Inf-sup spectra, splitting, representation formulas and the auxiliary
//! eigenvalue problems.

mod common;

use std::f64::consts::PI;

use dualmix_core::infsup::{
    infsup_decay_rate, infsup_spectrum, laplace_eigenpairs, loglog_slope, p1p0_infsup, representation, split,
    stable_subspace_check, EigCount, WitnessTarget,
};
use dualmix_core::mesh::{gen_crossed, gen_right};
use dualmix_core::solvers::DualMixedProblem;
use dualmix_core::{Mesh, MeshFamily, Source, SpaceKind};

fn crossed(levels: &[usize]) -> Vec<Mesh> {
    levels.iter().map(|&n| gen_crossed(n).unwrap()).collect()
}

#[test]
fn drt0_pair_is_uniformly_stable() {
    let fit = infsup_decay_rate(&crossed(&[2, 4, 8, 16]), SpaceKind::DRT0).unwrap();
    assert!(fit.slope.abs() <= 0.1, "slope {}", fit.slope);
    for w in fit.beta.windows(2) {
        assert!(w[1] >= 0.9 * w[0], "beta {:?}", fit.beta);
    }
    let right: Vec<Mesh> = [4, 8, 16].iter().map(|&n| gen_right(n).unwrap()).collect();
    let fit = infsup_decay_rate(&right, SpaceKind::DRT0).unwrap();
    assert!(fit.slope.abs() <= 0.1 && fit.beta.iter().all(|&b| b > 0.99), "{fit:?}");
}

#[test]
fn decay_fit_needs_three_levels() {
    assert!(infsup_decay_rate(&crossed(&[2, 4]), SpaceKind::RT0C).is_err());
}

#[test]
fn stable_blocks_are_diagonal_with_the_eigenvalues() {
    for mesh in [gen_crossed(4).unwrap(), gen_right(6).unwrap()] {
        let s = infsup_spectrum(&mesh, SpaceKind::RT0C, EigCount::All).unwrap();
        for threshold in [0.3, 0.5, 0.7] {
            let sp = split(&s, threshold).unwrap();
            let (a11, b11) = sp.stable_blocks();
            assert_eq!(a11.nrows(), sp.n_tilde);
            for i in 0..sp.n_tilde {
                for j in 0..sp.n_tilde {
                    let d = if i == j { s.mu[i] } else { 0.0 };
                    assert!((a11[(i, j)] - d).abs() <= 1e-9, "A11[{i},{j}] = {}", a11[(i, j)]);
                    assert!((b11[(i, j)] + d).abs() <= 1e-9, "B11[{i},{j}] = {}", b11[(i, j)]);
                }
            }
        }
    }
}

#[test]
fn vanishing_threshold_puts_everything_in_the_stable_block() {
    let mesh = gen_crossed(4).unwrap();
    let s = infsup_spectrum(&mesh, SpaceKind::RT0C, EigCount::All).unwrap();
    let sp = split(&s, 1e-9).unwrap();
    assert_eq!(sp.n_tilde, s.len());
    let problem = DualMixedProblem::new(&mesh, SpaceKind::RT0C).unwrap();
    let load = problem.load(&Source::analytic(|p| p[0] - 3.0 * p[1] + p[0].sin())).unwrap();
    let direct = problem.solve_load(&load).unwrap();
    let parts = sp.solve(&load);
    assert!(parts.u2.iter().chain(&parts.sigma2).all(|&x| x == 0.0));
    assert!(parts.u1.iter().zip(&direct.u).all(|(a, b)| (a - b).abs() < 1e-10));
    assert!(split(&s, 0.0).is_err() && split(&s, 1.0).is_err());
}

fn alpha_profile(mesh: &Mesh, f: &Source) -> (f64, f64) {
    let s = infsup_spectrum(mesh, SpaceKind::RT0C, EigCount::All).unwrap();
    let load = DualMixedProblem::new(mesh, SpaceKind::RT0C).unwrap().load(f).unwrap();
    let rep = representation(&s, &load).unwrap();
    let max_all = rep.alpha.iter().fold(0.0f64, |m, a| m.max(a.abs()));
    let max_top = rep.alpha[rep.alpha.len() / 2..].iter().fold(0.0f64, |m, a| m.max(a.abs()));
    (max_top, max_all)
}

fn smooth_load() -> Source {
    Source::analytic(|p| 2.0 * PI * PI * (PI * p[0]).sin() * (PI * p[1]).sin())
}

// With a unit-mass Dirac and H^1-normalized eigenfunctions the upper-range
// coefficients shrink roughly like h, so the absolute thresholds are checked
// on the coarse meshes of the eigenvalue tables and the contrast on finer ones.
fn coarse_meshes() -> [Mesh; 2] {
    [gen_crossed(5).unwrap(), gen_right(8).unwrap()]
}

#[test]
fn smooth_load_has_alpha_concentrated_on_low_indices() {
    for mesh in coarse_meshes() {
        let (top, all) = alpha_profile(&mesh, &smooth_load());
        assert!(top < 0.01 * all, "top-half {top:e} vs overall {all:e}");
    }
}

#[test]
fn dirac_load_excites_the_upper_index_range() {
    let f = Source::DiracApprox([0.5, 0.5]);
    for mesh in coarse_meshes() {
        let (top, all) = alpha_profile(&mesh, &f);
        assert!(top > 0.1 * all, "top-half {top:e} vs overall {all:e}");
    }
}

#[test]
fn dirac_and_smooth_alpha_profiles_stay_apart_under_refinement() {
    let meshes =
        [4, 8, 12].map(|n| gen_crossed(n).unwrap()).into_iter().chain([8, 14, 20].map(|n| gen_right(n).unwrap()));
    for mesh in meshes {
        let (ts, als) = alpha_profile(&mesh, &smooth_load());
        let (td, ald) = alpha_profile(&mesh, &Source::DiracApprox([0.5, 0.5]));
        assert!(
            td / ald > 10.0 * ts / als,
            "{} vertices: dirac {:.3e}, smooth {:.3e}",
            mesh.n_vertices(),
            td / ald,
            ts / als
        );
    }
}

#[test]
fn zero_load_has_zero_coefficients() {
    let mesh = gen_right(5).unwrap();
    let s = infsup_spectrum(&mesh, SpaceKind::RT0C, EigCount::All).unwrap();
    let rep = representation(&s, &vec![0.0; s.n_q]).unwrap();
    assert!(rep.alpha.iter().chain(&rep.u_h).chain(&rep.sigma_h).all(|&x| x == 0.0));
    assert!(representation(&s, &[1.0]).is_err());
    let partial = infsup_spectrum(&mesh, SpaceKind::RT0C, EigCount::Smallest(3)).unwrap();
    assert!(representation(&partial, &vec![0.0; s.n_q]).is_err());
}

#[test]
fn first_laplace_eigenvalue_converges_from_above() {
    let mesh = gen_crossed(32).unwrap();
    let e = laplace_eigenpairs(&mesh, 3).unwrap();
    let exact = 2.0 * PI * PI;
    assert!(e.lambda[0] >= exact && e.lambda[0] <= 1.02 * exact, "lambda_1 = {}", e.lambda[0]);
    assert!(e.lambda[0] < e.lambda[1] && e.lambda[1] <= e.lambda[2]);
}

#[test]
fn laplace_eigenfunctions_are_orthogonal() {
    use dualmix_core::assembly::{mass_p1, stiffness_p1};
    let mesh = gen_right(8).unwrap();
    let e = laplace_eigenpairs(&mesh, 6).unwrap();
    let q = dualmix_core::FeSpace::new(&mesh, SpaceKind::P1C0);
    let (k, m) = (stiffness_p1(&q).unwrap(), mass_p1(&q).unwrap());
    for i in 0..6 {
        for j in 0..6 {
            let (wi, wj) = (e.w_vec(i), e.w_vec(j));
            let d = if i == j { 1.0 } else { 0.0 };
            assert!((m.bilinear(&wi, &wj) - d).abs() <= 1e-9);
            assert!((k.bilinear(&wi, &wj) - d * e.lambda[i]).abs() <= 1e-9 * e.lambda[5]);
        }
    }
    assert!(laplace_eigenpairs(&mesh, 50).is_err());
}

#[test]
fn low_laplace_modes_stay_uniformly_stable() {
    let meshes = crossed(&[4, 8, 16, 32]);
    let first = stable_subspace_check(&meshes, WitnessTarget::Laplace(1)).unwrap();
    let last: Vec<f64> = first.rows[1..].iter().map(|r| r.ratio).collect();
    let (lo, hi) = last.iter().fold((f64::MAX, 0.0f64), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    assert!(hi / lo < 1.2, "ratios {last:?}");
    for r in &first.rows {
        // the witness can never beat the optimal ratio
        assert!(r.ratio <= r.optimal + 1e-12, "{r:?}");
        assert!(r.bound <= r.ratio + 1e-12, "{r:?}");
    }

    let pair = stable_subspace_check(&meshes, WitnessTarget::LaplacePair(1, 2)).unwrap();
    let floor = pair.rows.iter().map(|r| r.ratio).fold(f64::MAX, f64::min);
    assert!(floor > 0.5, "{:?}", pair.rows);
}

#[test]
fn worst_infsup_witness_tracks_beta() {
    let meshes = crossed(&[4, 8, 16]);
    let worst = stable_subspace_check(&meshes, WitnessTarget::WorstInfSup).unwrap();
    let optimal: Vec<f64> = worst.rows.iter().map(|r| r.optimal).collect();
    let h: Vec<f64> = worst.rows.iter().map(|r| r.h).collect();
    for (mesh, &o) in meshes.iter().zip(&optimal) {
        let beta = infsup_spectrum(mesh, SpaceKind::RT0C, EigCount::Smallest(1)).unwrap().beta_h();
        assert!((o - beta).abs() <= 1e-8, "optimal {o} vs beta {beta}");
    }
    let slope = loglog_slope(&h, &optimal).unwrap();
    assert!((slope - 1.0).abs() <= 0.1, "slope {slope}");
}

#[test]
fn p1p0_constant_decays_linearly_on_right_meshes() {
    let levels = [8, 16, 32, 64];
    let mut h = Vec::new();
    let mut nu = Vec::new();
    for n in levels {
        let mesh = gen_right(n).unwrap();
        let r = p1p0_infsup(&mesh).unwrap();
        assert!((r.zeta * r.zeta - r.nu_min).abs() <= 1e-15);
        h.push(r.h);
        nu.push(r.nu_min);
    }
    let slope = loglog_slope(&h, &nu).unwrap();
    assert!((slope - 2.0).abs() <= 0.1, "slope {slope}");
}

#[test]
fn infsup_table_rows_follow_the_mesh_family() {
    let rows = dualmix_core::infsup::infsup_table(&MeshFamily::Crossed, &[1, 2, 4], SpaceKind::RT0C).unwrap();
    // crossed(1) has a single interior vertex, so three columns stay empty
    assert_eq!(rows[0].mu.iter().filter(|m| m.is_none()).count(), 3);
    assert_eq!(rows.iter().map(|r| r.n_label).collect::<Vec<_>>(), [5, 13, 41]);
    let mut csv = Vec::new();
    dualmix_core::infsup::write_infsup_csv(&rows, &mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert!(text.starts_with("level,h,n_label,mu_m3,mu_m2,mu_m1,mu_min,beta_h\n"));
    assert_eq!(text.lines().count(), 4);
}
