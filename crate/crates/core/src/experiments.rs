//! Error norms, exact solutions, convergence studies and the spurious
//! oscillation demo.
//!
//! The flux convention throughout is `sigma = -grad u`.

use std::f64::consts::PI;
use std::io::Write;
use std::str::FromStr;
use std::sync::Arc;

use serde::Serialize;

use crate::assembly::{mass_p1, stiffness_p1, ScalarFn, Source};
use crate::error::{Error, Result};
use crate::fespace::{FeSpace, SpaceKind};
use crate::infsup::loglog_slope;
use crate::mesh::{Mesh, MeshFamily, Point};
use crate::quadrature::QuadratureRule;
use crate::solvers::{DualMixedProblem, GalerkinProblem};

pub type VectorFn = Arc<dyn Fn(Point) -> [f64; 2] + Send + Sync>;

#[derive(Clone)]
pub struct ExactSolution {
    pub name: &'static str,
    pub u: ScalarFn,
    pub grad: VectorFn,
    /// `-Delta u`
    pub f: ScalarFn,
    pub smooth: bool,
}

impl std::fmt::Debug for ExactSolution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "ExactSolution({})", self.name)
    }
}

impl ExactSolution {
    /// `u = sin(pi x) sin(2 pi y)` on the unit square.
    pub fn smooth_square() -> Self {
        ExactSolution {
            name: "smooth-square",
            u: Arc::new(|p| (PI * p[0]).sin() * (2.0 * PI * p[1]).sin()),
            grad: Arc::new(|p| {
                [
                    PI * (PI * p[0]).cos() * (2.0 * PI * p[1]).sin(),
                    2.0 * PI * (PI * p[0]).sin() * (2.0 * PI * p[1]).cos(),
                ]
            }),
            f: Arc::new(|p| 5.0 * PI * PI * (PI * p[0]).sin() * (2.0 * PI * p[1]).sin()),
            smooth: true,
        }
    }

    /// `u = r^{2/3} sin(2 theta / 3)` on the L-shaped domain
    /// `(-1, 1)^2 \ [0, 1) x (-1, 0]`, with `theta` in `[0, 3 pi / 2]`
    /// measured from the positive x-axis. Harmonic, so `f = 0`.
    pub fn lshape_singular() -> Self {
        fn polar(p: Point) -> (f64, f64) {
            let r = p[0].hypot(p[1]);
            let mut t = p[1].atan2(p[0]);
            if t < 0.0 {
                t += 2.0 * PI;
            }
            (r, t)
        }
        ExactSolution {
            name: "lshape-singular",
            u: Arc::new(|p| {
                let (r, t) = polar(p);
                r.powf(2.0 / 3.0) * (2.0 * t / 3.0).sin()
            }),
            grad: Arc::new(|p| {
                let (r, t) = polar(p);
                if r == 0.0 {
                    return [f64::INFINITY, f64::INFINITY];
                }
                let c = 2.0 / 3.0 * r.powf(-1.0 / 3.0);
                [-c * (t / 3.0).sin(), c * (t / 3.0).cos()]
            }),
            f: Arc::new(|_| 0.0),
            smooth: false,
        }
    }

    pub fn source(&self) -> Source {
        let f = self.f.clone();
        Source::Analytic(f)
    }

    /// Largest relative mismatch between `f` and the five-point finite
    /// difference Laplacian of `u` with spacing `h`, over `points`.
    pub fn laplacian_defect(&self, points: &[Point], h: f64) -> f64 {
        points
            .iter()
            .map(|&p| {
                let u = |dx: f64, dy: f64| (self.u)([p[0] + dx, p[1] + dy]);
                let lap = (u(h, 0.0) + u(-h, 0.0) + u(0.0, h) + u(0.0, -h) - 4.0 * u(0.0, 0.0)) / (h * h);
                let f = (self.f)(p);
                (f + lap).abs() / f.abs().max(1.0)
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorNorms {
    pub sigma: f64,
    pub u_l2: f64,
    pub u_h1: f64,
}

/// `|sigma - sigma_h|`, `|u - u_h|` and `|grad (u - u_h)|` in `L^2` with the
/// degree-5 rule. `u_nodal` holds `u_h` at every vertex.
pub fn error_norms(v: &FeSpace<'_>, sigma_h: &[f64], u_nodal: &[f64], exact: &ExactSolution) -> Result<ErrorNorms> {
    v.check_kind(&[SpaceKind::RT0C, SpaceKind::DRT0], "flux error norm")?;
    let mesh = v.mesh();
    if u_nodal.len() != mesh.n_vertices() || sigma_h.len() != v.dof_count() {
        return Err(Error::DimensionMismatch("error_norms: coefficient vectors do not match the spaces".into()));
    }
    let p1 = FeSpace::new(mesh, SpaceKind::P1C);
    let rule = QuadratureRule::degree5();
    let (mut es, mut e0, mut e1) = (0.0, 0.0, 0.0);
    for t in 0..mesh.n_triangles() {
        let el = mesh.element(t);
        let tri = mesh.triangles()[t];
        let gh = p1.gradient(u_nodal, t);
        for (lam, w) in rule.iter() {
            let x = el.from_barycentric(lam);
            let wa = w * el.area;
            let uh = lam[0] * u_nodal[tri[0]] + lam[1] * u_nodal[tri[1]] + lam[2] * u_nodal[tri[2]];
            let g = (exact.grad)(x);
            let sh = v.eval_at(sigma_h, t, lam);
            e0 += wa * ((exact.u)(x) - uh).powi(2);
            e1 += wa * ((g[0] - gh[0]).powi(2) + (g[1] - gh[1]).powi(2));
            es += wa * ((-g[0] - sh[0]).powi(2) + (-g[1] - sh[1]).powi(2));
        }
    }
    Ok(ErrorNorms { sigma: es.sqrt(), u_l2: e0.sqrt(), u_h1: e1.sqrt() })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConvergenceCase {
    SmoothSquare,
    LShapeSingular,
}

impl FromStr for ConvergenceCase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "smooth-square" => Ok(ConvergenceCase::SmoothSquare),
            "lshape-singular" => Ok(ConvergenceCase::LShapeSingular),
            _ => Err(Error::InvalidArgument(format!("unknown case '{s}' (expected smooth-square or lshape-singular)"))),
        }
    }
}

impl ConvergenceCase {
    pub fn exact(self) -> ExactSolution {
        match self {
            ConvergenceCase::SmoothSquare => ExactSolution::smooth_square(),
            ConvergenceCase::LShapeSingular => ExactSolution::lshape_singular(),
        }
    }

    pub fn default_family(self) -> MeshFamily {
        match self {
            ConvergenceCase::SmoothSquare => MeshFamily::Crossed,
            ConvergenceCase::LShapeSingular => MeshFamily::LShape,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ConvergenceConfig {
    pub case: ConvergenceCase,
    pub family: MeshFamily,
    pub levels: Vec<usize>,
    pub element: SpaceKind,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceRow {
    /// Flux dofs plus all mesh vertices.
    pub dofs: usize,
    pub h: f64,
    pub errors: ErrorNorms,
    /// Rates against the previous row, `None` on the first row.
    pub rates: Option<[f64; 3]>,
}

impl ConvergenceRow {
    /// Mesh size measured as `dofs^{-1/2}`. Rates use this rather than
    /// `h` because `h_max` of unstructured meshes jitters between levels.
    pub fn h_eff(&self) -> f64 {
        (self.dofs as f64).powf(-0.5)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceStudy {
    pub rows: Vec<ConvergenceRow>,
    /// Log-log slopes against `dofs^{-1/2}` over the last three rows.
    pub asymptotic: Option<[f64; 3]>,
}

pub fn convergence_study(cfg: &ConvergenceConfig) -> Result<ConvergenceStudy> {
    if cfg.levels.is_empty() {
        return Err(Error::InvalidArgument("convergence study needs at least one level".into()));
    }
    let exact = cfg.case.exact();
    let mut rows: Vec<ConvergenceRow> = Vec::new();
    for &n in &cfg.levels {
        let mesh = cfg.family.level(n)?;
        let problem = DualMixedProblem::new(&mesh, cfg.element)?;
        let sol = if exact.smooth {
            problem.solve(&exact.source())?
        } else {
            let u = exact.u.clone();
            problem.solve_dirichlet(&exact.source(), move |p| u(p))?
        };
        let errors = error_norms(problem.v_space(), &sol.sigma, &sol.nodal, &exact)?;
        let dofs = problem.v_space().dof_count() + mesh.n_vertices();
        let rates = rows.last().map(|prev| {
            let scale = 0.5 * (dofs as f64 / prev.dofs as f64).ln();
            let r = |a: f64, b: f64| (a / b).ln() / scale;
            [r(prev.errors.sigma, errors.sigma), r(prev.errors.u_l2, errors.u_l2), r(prev.errors.u_h1, errors.u_h1)]
        });
        rows.push(ConvergenceRow { dofs, h: mesh.h_max(), errors, rates });
    }
    let asymptotic = if rows.len() >= 3 {
        let tail = &rows[rows.len() - 3..];
        let h: Vec<f64> = tail.iter().map(|r| r.h_eff()).collect();
        let fit = |g: fn(&ErrorNorms) -> f64| loglog_slope(&h, &tail.iter().map(|r| g(&r.errors)).collect::<Vec<_>>());
        Some([fit(|e| e.sigma)?, fit(|e| e.u_l2)?, fit(|e| e.u_h1)?])
    } else {
        None
    };
    Ok(ConvergenceStudy { rows, asymptotic })
}

pub const CONVERGENCE_CSV_HEADER: [&str; 7] =
    ["dofs", "sigma_err", "u_l2_err", "u_h1_err", "sigma_rate", "u_l2_rate", "u_h1_rate"];

pub fn write_convergence_csv<W: Write>(rows: &[ConvergenceRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(CONVERGENCE_CSV_HEADER)?;
    for r in rows {
        let mut rec = vec![
            r.dofs.to_string(),
            format!("{:.10e}", r.errors.sigma),
            format!("{:.10e}", r.errors.u_l2),
            format!("{:.10e}", r.errors.u_h1),
        ];
        match r.rates {
            Some(rates) => rec.extend(rates.iter().map(|x| format!("{x:.4}"))),
            None => rec.extend(["", "", ""].map(String::from)),
        }
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

/// Right-hand sides of the oscillation demo.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DemoLoad {
    /// Dirac approximation at `(1/3, 1/5)`.
    DiracOffCenter,
    /// Dirac approximation at `(1/2, 1/2)`.
    DiracCenter,
    /// `f = x - 3y + sin x`
    Smooth,
}

impl FromStr for DemoLoad {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dirac" | "dirac-off-center" => Ok(DemoLoad::DiracOffCenter),
            "dirac-center" => Ok(DemoLoad::DiracCenter),
            "smooth" => Ok(DemoLoad::Smooth),
            _ => Err(Error::InvalidArgument(format!(
                "unknown demo load '{s}' (expected dirac-off-center, dirac-center or smooth)"
            ))),
        }
    }
}

impl DemoLoad {
    pub fn source(self) -> Source {
        match self {
            DemoLoad::DiracOffCenter => Source::DiracApprox([1.0 / 3.0, 1.0 / 5.0]),
            DemoLoad::DiracCenter => Source::DiracApprox([0.5, 0.5]),
            DemoLoad::Smooth => Source::analytic(|p| p[0] - 3.0 * p[1] + p[0].sin()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct DemoLevel {
    pub n: usize,
    pub h: f64,
    /// `|u_h - u_G|_{H^1} / |u_G|_{H^1}`
    pub oscillation_index: f64,
    pub u_h: Vec<f64>,
    pub u_g: Vec<f64>,
}

pub fn spurious_solution_demo(
    family: &MeshFamily,
    levels: &[usize],
    load: DemoLoad,
    element: SpaceKind,
) -> Result<Vec<DemoLevel>> {
    levels
        .iter()
        .map(|&n| {
            let mesh = family.level(n)?;
            let f = load.source();
            let mixed = DualMixedProblem::new(&mesh, element)?.solve(&f)?;
            let galerkin = GalerkinProblem::new(&mesh)?;
            let ug = galerkin.solve(&f)?;
            let q = galerkin.q_space();
            let k = stiffness_p1(q)?;
            let m = mass_p1(q)?;
            let diff: Vec<f64> = mixed.u.iter().zip(&ug).map(|(a, b)| a - b).collect();
            let h1 = |x: &[f64]| (k.bilinear(x, x) + m.bilinear(x, x)).sqrt();
            Ok(DemoLevel {
                n,
                h: mesh.h_max(),
                oscillation_index: h1(&diff) / h1(&ug),
                u_h: mixed.nodal,
                u_g: q.to_nodal(&ug),
            })
        })
        .collect()
}

/// `x,y,u_h,u_g` rows, one per vertex.
pub fn write_nodal_csv<W: Write>(mesh: &Mesh, level: &DemoLevel, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["x", "y", "u_h", "u_g"])?;
    for (v, p) in mesh.vertices().iter().enumerate() {
        out.write_record([
            format!("{:.12e}", p[0]),
            format!("{:.12e}", p[1]),
            format!("{:.12e}", level.u_h[v]),
            format!("{:.12e}", level.u_g[v]),
        ])?;
    }
    out.flush()?;
    Ok(())
}
