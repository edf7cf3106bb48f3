//! Approximation properties of the spaces and consistency of the assembled
//! forms under refinement.

mod common;

use std::f64::consts::PI;

use common::dense;
use dualmix_core::assembly::coupling_b;
use dualmix_core::mesh::{gen_crossed, gen_right, uniform_refine};
use dualmix_core::quadrature::QuadratureRule;
use dualmix_core::solvers::galerkin_solve;
use dualmix_core::{FeSpace, Mesh, Point, Source, SpaceKind};

fn rate(e: &[f64], h: &[f64]) -> Vec<f64> {
    e.windows(2).zip(h.windows(2)).map(|(e, h)| (e[0] / e[1]).ln() / (h[0] / h[1]).ln()).collect()
}

/// `L^2` norm of `g - v_h` for a vector field and a discrete flux.
fn flux_error(space: &FeSpace<'_>, coef: &[f64], g: impl Fn(Point) -> [f64; 2]) -> f64 {
    let mesh = space.mesh();
    let rule = QuadratureRule::degree5();
    let mut s = 0.0;
    for t in 0..mesh.n_triangles() {
        let el = mesh.element(t);
        for (lam, w) in rule.iter() {
            let v = space.eval_at(coef, t, lam);
            let e = g(el.from_barycentric(lam));
            s += w * el.area * ((v[0] - e[0]).powi(2) + (v[1] - e[1]).powi(2));
        }
    }
    s.sqrt()
}

fn scalar_l2(mesh: &Mesh, f: impl Fn(Point, usize, [f64; 3]) -> f64) -> f64 {
    let rule = QuadratureRule::degree5();
    let mut s = 0.0;
    for t in 0..mesh.n_triangles() {
        let el = mesh.element(t);
        for (lam, w) in rule.iter() {
            s += w * el.area * f(el.from_barycentric(lam), t, lam).powi(2);
        }
    }
    s.sqrt()
}

#[test]
fn rt0_interpolation_error_is_first_order() {
    let grad = |p: Point| {
        [PI * (PI * p[0]).cos() * (2.0 * PI * p[1]).sin(), 2.0 * PI * (PI * p[0]).sin() * (2.0 * PI * p[1]).cos()]
    };
    let mut mesh = gen_crossed(8).unwrap();
    let mut errs = Vec::new();
    let mut hs = Vec::new();
    for _ in 0..3 {
        for kind in [SpaceKind::RT0C, SpaceKind::DRT0] {
            let v = FeSpace::new(&mesh, kind);
            let e = flux_error(&v, &v.interpolate_rt0(grad).unwrap(), grad);
            if kind == SpaceKind::RT0C {
                errs.push(e);
                hs.push(mesh.h_max());
            } else {
                // the broken interpolant carries the same fluxes
                assert!((e - errs.last().unwrap()).abs() <= 1e-12 * e);
            }
        }
        mesh = uniform_refine(&mesh).unwrap();
    }
    for r in rate(&errs, &hs) {
        assert!((r - 1.0).abs() <= 0.15, "rate {r:.3} from {errs:?}");
    }
}

#[test]
fn p0_projection_constant_is_stable() {
    let f = |p: Point| (PI * p[0]).sin() * (PI * p[1]).sin();
    // |grad f| = pi / sqrt(2) on the unit square
    let grad_norm = PI / 2f64.sqrt();
    let mut c = Vec::new();
    for n in [4, 8, 16, 32] {
        let mesh = gen_right(n).unwrap();
        let p0 = FeSpace::new(&mesh, SpaceKind::P0).l2_project_p0(f).unwrap();
        let err = scalar_l2(&mesh, |x, t, _| f(x) - p0[t]);
        c.push(err / (mesh.h_max() * grad_norm));
    }
    let (lo, hi) = c.iter().fold((f64::MAX, 0.0f64), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    assert!(hi / lo < 1.05, "C_Pi estimates {c:?}");
    assert!(hi < 1.0 / PI, "C_Pi {hi} above the Poincare constant for convex cells");
}

#[test]
fn galerkin_is_second_order_in_l2() {
    let u = |p: Point| (PI * p[0]).sin() * (PI * p[1]).sin();
    let f = Source::analytic(move |p| 2.0 * PI * PI * (PI * p[0]).sin() * (PI * p[1]).sin());
    let mut errs = Vec::new();
    let mut hs = Vec::new();
    for n in [8, 16, 32] {
        let mesh = gen_right(n).unwrap();
        let q = FeSpace::new(&mesh, SpaceKind::P1C0);
        let nodal = q.to_nodal(&galerkin_solve(&mesh, &f).unwrap());
        let err = scalar_l2(&mesh, |x, t, lam| {
            let tri = mesh.triangles()[t];
            u(x) - (0..3).map(|k| lam[k] * nodal[tri[k]]).sum::<f64>()
        });
        errs.push(err);
        hs.push(mesh.h_max());
    }
    for r in rate(&errs, &hs) {
        assert!((r - 2.0).abs() <= 0.15, "rate {r:.3} from {errs:?}");
    }
}

#[test]
fn constant_field_is_orthogonal_to_interior_hat_gradients() {
    // the gradient of an interior hat integrates to zero over its patch
    for mesh in [gen_crossed(4).unwrap(), gen_right(5).unwrap()] {
        let v = FeSpace::new(&mesh, SpaceKind::RT0C);
        let q = FeSpace::new(&mesh, SpaceKind::P1C0);
        let b = coupling_b(&v, &q).unwrap();
        for c in [[1.0, 0.0], [0.0, 1.0], [0.3, -0.7]] {
            let coef = v.interpolate_rt0(|_| c).unwrap();
            let r = b.matvec(&coef);
            assert!(r.iter().all(|x| x.abs() < 1e-14), "max {:e}", r.iter().fold(0.0f64, |m, x| m.max(x.abs())));
        }
    }
}

#[test]
fn coupling_with_full_p1_space_sees_boundary_hats() {
    // boundary rows of the full P1 coupling carry the boundary flux of the field
    let mesh = gen_right(3).unwrap();
    let v = FeSpace::new(&mesh, SpaceKind::RT0C);
    let p1 = FeSpace::new(&mesh, SpaceKind::P1C);
    let b = dense(&coupling_b(&v, &p1).unwrap());
    let coef = v.interpolate_rt0(|_| [1.0, 0.0]).unwrap();
    let r = b * nalgebra::DVector::from_vec(coef);
    // (c, grad 1) = 0 for the sum of all hats
    assert!(r.sum().abs() < 1e-14);
    assert!(r.iter().any(|x| x.abs() > 1e-3));
}
