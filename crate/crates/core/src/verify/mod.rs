//! Independent verification of a sampled patch.
//!
//! Only the grid points, the constants `(c, C)` and the per-row values of
//! `f` and `f′` are read. Tangents, the second fundamental form, the normal
//! frame `E₃ = H/|H|, E₄`, and all curvatures are recomputed from the
//! points by central differences.

mod geometry;
mod report;

pub use geometry::{local_geometry, point_geometry, Grid, LocalGeometry, PointGeometry};
pub use report::{Bound, ReportEntry, VerificationReport};

use crate::exec::{self, Exec};
use crate::extrinsic::SurfacePatch;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Level {
    /// Point checks on a 4×4 interior sub-grid, level circles on its rows.
    #[default]
    Fast,
    /// Every interior node, plus Codazzi and Ricci residuals.
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyTolerances {
    pub unit_sphere: f64,
    pub metric: f64,
    pub mean_curvature: f64,
    pub shape: f64,
    pub recovered: f64,
    pub biconservative: f64,
    pub pnmc: f64,
    pub grad_direction: f64,
    pub gauss: f64,
    pub level_constancy: f64,
    pub level_value: f64,
    pub non_biharmonic_floor: f64,
    pub codazzi: f64,
    pub ricci: f64,
}

impl Default for VerifyTolerances {
    fn default() -> Self {
        Self {
            unit_sphere: 1e-8,
            metric: 1e-6,
            mean_curvature: 1e-3,
            shape: 1e-3,
            recovered: 1e-3,
            biconservative: 1e-3,
            pnmc: 1e-3,
            grad_direction: 1e-3,
            gauss: 5e-3,
            level_constancy: 1e-3,
            level_value: 5e-3,
            non_biharmonic_floor: 1e-6,
            codazzi: 1e-2,
            ricci: 1e-2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct VerifyOptions {
    pub level: Level,
    /// Finite-difference step in grid nodes.
    pub stride: usize,
    pub tolerances: VerifyTolerances,
    pub exec: Exec,
}

impl VerifyOptions {
    pub fn new(level: Level) -> Self {
        Self {
            level,
            stride: 1,
            ..Default::default()
        }
    }
}

/// Residuals of the pointwise identities at one node; relative unless noted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointResiduals {
    pub metric_guu: f64,
    pub metric_gut: f64,
    pub metric_gtt: f64,
    pub mean_curvature: f64,
    pub a3_diagonal: f64,
    pub a3_offdiag: f64,
    pub a3_ratio: f64,
    pub a4_trace: f64,
    pub a4_spectrum: f64,
    pub a4_offdiag: f64,
    pub recovered_c: f64,
    pub recovered_big_c: f64,
    pub biconservative: f64,
    pub pnmc: f64,
    /// Angle between `grad f` and `∂_u`, radians.
    pub grad_f_direction: f64,
    /// `|K_intrinsic − (1 − 3f² − c²f³)|`, absolute.
    pub gauss_intrinsic: f64,
    /// `|K_extrinsic − K_intrinsic|`, absolute.
    pub gauss_extrinsic: f64,
    /// `1 − K_intrinsic`.
    pub one_minus_k: f64,
    pub level_value: f64,
    /// Absolute.
    pub codazzi: f64,
    pub ricci: f64,
}

impl PointResiduals {
    const NAN: Self = Self {
        metric_guu: f64::NAN,
        metric_gut: f64::NAN,
        metric_gtt: f64::NAN,
        mean_curvature: f64::NAN,
        a3_diagonal: f64::NAN,
        a3_offdiag: f64::NAN,
        a3_ratio: f64::NAN,
        a4_trace: f64::NAN,
        a4_spectrum: f64::NAN,
        a4_offdiag: f64::NAN,
        recovered_c: f64::NAN,
        recovered_big_c: f64::NAN,
        biconservative: f64::NAN,
        pnmc: f64::NAN,
        grad_f_direction: f64::NAN,
        gauss_intrinsic: f64::NAN,
        gauss_extrinsic: f64::NAN,
        one_minus_k: f64::NAN,
        level_value: f64::NAN,
        codazzi: f64::NAN,
        ricci: f64::NAN,
    };
}

fn sorted_eigenvalues(m: &nalgebra::Matrix2<f64>) -> (f64, f64) {
    let sym = 0.5 * (m + m.transpose());
    let ev = sym.symmetric_eigenvalues();
    (ev[0].min(ev[1]), ev[0].max(ev[1]))
}

/// Residuals at one node given the row's expected `f`, `f′`.
pub fn point_residuals(patch: &SurfacePatch, geom: &LocalGeometry) -> PointResiduals {
    let c = patch.params.c;
    let big_c2 = patch.params.big_c2();
    let f = patch.f_values[geom.i];
    let fp = patch.fprime_values[geom.i];
    let g = &geom.center;
    let fm = g.f;
    let (e, ff, gg) = (g.metric[(0, 0)], g.metric[(0, 1)], g.metric[(1, 1)]);

    let a3 = g.shape_operator(0);
    let a4 = g.shape_operator(1);
    let (l3min, l3max) = sorted_eigenvalues(&a3);
    let (l4min, l4max) = sorted_eigenvalues(&a4);
    let lam = c * f.powf(1.5);

    let gf = nalgebra::Vector2::new(geom.grad_f[0], geom.grad_f[1]);
    let bic = (a3 * gf + gf * fm).norm() / (fm * gf.norm());
    let expected_level = 0.75 * fp / f;
    let gauss_model = 1.0 - 3.0 * fm * fm - c * c * fm * fm * fm;

    PointResiduals {
        metric_guu: (e - 1.0).abs(),
        metric_gut: ff.abs(),
        metric_gtt: (gg * 9.0 * big_c2 * f.powf(1.5) / 8.0 - 1.0).abs(),
        mean_curvature: (fm - f).abs() / f,
        a3_diagonal: ((a3[(0, 0)] + f).abs()).max((a3[(1, 1)] - 3.0 * f).abs()) / f,
        a3_offdiag: a3[(0, 1)].abs() / f,
        a3_ratio: (3.0 * l3min / l3max + 1.0).abs(),
        a4_trace: a4.trace().abs() / f.powf(1.5),
        a4_spectrum: ((l4max - lam).abs()).max((l4min + lam).abs()) / lam,
        a4_offdiag: a4[(0, 1)].abs() / lam,
        recovered_c: (0.5 * (l4max - l4min) / fm.powf(1.5) - c).abs() / c,
        recovered_big_c: ((8.0 / (9.0 * gg * fm.powf(1.5))).sqrt() / big_c2.sqrt() - 1.0).abs(),
        biconservative: bic,
        pnmc: geom.normal_derivative_e3[0].max(geom.normal_derivative_e3[1]),
        grad_f_direction: gf[1].abs().atan2(gf[0].abs()),
        gauss_intrinsic: (geom.gauss_intrinsic - gauss_model).abs(),
        gauss_extrinsic: (geom.gauss_extrinsic - geom.gauss_intrinsic).abs(),
        one_minus_k: 1.0 - geom.gauss_intrinsic,
        level_value: (geom.level_curvature - expected_level).abs() / expected_level,
        codazzi: geom.codazzi,
        ricci: geom.ricci / (f * lam),
    }
}

fn spread(lo: usize, hi: usize, count: usize) -> Vec<usize> {
    if hi < lo {
        return Vec::new();
    }
    let n = hi - lo + 1;
    if n <= count {
        return (lo..=hi).collect();
    }
    let mut v: Vec<usize> = (0..count)
        .map(|k| lo + ((n - 1) as f64 * k as f64 / (count - 1) as f64).round() as usize)
        .collect();
    v.dedup();
    v
}

fn interior_columns(grid: &Grid, margin: usize) -> Vec<usize> {
    if grid.is_periodic() {
        (0..grid.n_t()).collect()
    } else if grid.n_t() > 2 * margin {
        (margin..grid.n_t() - margin).collect()
    } else {
        Vec::new()
    }
}

/// Nodes at which residuals are evaluated, and the rows used for the
/// level-circle checks.
fn centers(grid: &Grid, level: Level, margin: usize) -> (Vec<(usize, usize)>, Vec<usize>) {
    let rows: Vec<usize> = if grid.n_u() > 2 * margin {
        (margin..grid.n_u() - margin).collect()
    } else {
        Vec::new()
    };
    let cols = interior_columns(grid, margin);
    match level {
        Level::Full => {
            let pts = rows.iter().flat_map(|&i| cols.iter().map(move |&j| (i, j))).collect();
            (pts, rows)
        }
        Level::Fast => {
            let (Some(&r0), Some(&r1)) = (rows.first(), rows.last()) else {
                return (Vec::new(), Vec::new());
            };
            let srows = spread(r0, r1, 4);
            let scols = match (cols.first(), cols.last()) {
                (Some(&c0), Some(&c1)) => spread(c0, c1, 4),
                _ => Vec::new(),
            };
            let pts = srows.iter().flat_map(|&i| scols.iter().map(move |&j| (i, j))).collect();
            (pts, srows)
        }
    }
}

/// Residuals at the given nodes, `NAN` where the geometry could not be formed.
pub fn residuals_at(
    patch: &SurfacePatch,
    nodes: &[(usize, usize)],
    stride: usize,
    exec: Exec,
) -> Result<Vec<(LocalGeometry, PointResiduals)>> {
    let grid = Grid::new(patch)?;
    let out = exec::map(exec, nodes, |&(i, j)| match local_geometry(&grid, i, j, stride) {
        Ok(g) => {
            let r = point_residuals(patch, &g);
            Some((g, r))
        }
        Err(_) => None,
    });
    Ok(out
        .into_iter()
        .zip(nodes)
        .map(|(o, &(i, j))| {
            o.unwrap_or_else(|| {
                let g = LocalGeometry {
                    i,
                    j,
                    stride,
                    center: nan_point(),
                    christoffel: [nalgebra::Matrix2::from_element(f64::NAN); 2],
                    gauss_intrinsic: f64::NAN,
                    gauss_extrinsic: f64::NAN,
                    grad_f: [f64::NAN; 2],
                    normal_derivative_e3: [f64::NAN; 2],
                    level_curvature: f64::NAN,
                    codazzi: f64::NAN,
                    ricci: f64::NAN,
                };
                (g, PointResiduals::NAN)
            })
        })
        .collect())
}

fn nan_point() -> PointGeometry {
    let p = crate::extrinsic::Point::from_element(f64::NAN);
    PointGeometry {
        phi: p,
        phi_u: p,
        phi_t: p,
        metric: nalgebra::Matrix2::from_element(f64::NAN),
        normals: [p; 2],
        b: [p; 3],
        mean_curvature: p,
        f: f64::NAN,
        e3: p,
        e4: p,
    }
}

/// `| |Φ| − 1 |` at every grid point.
pub fn unit_sphere_residuals(patch: &SurfacePatch) -> Vec<f64> {
    patch.points.iter().map(|p| (p.norm() - 1.0).abs()).collect()
}

/// `4c f^{7/2}` per row, the size of the normal obstruction to biharmonicity.
pub fn non_biharmonic_witness(patch: &SurfacePatch) -> Vec<f64> {
    patch.f_values.iter().map(|f| 4.0 * patch.params.c * f.powf(3.5)).collect()
}

fn column<F: Fn(&PointResiduals) -> f64>(rs: &[(LocalGeometry, PointResiduals)], pick: F) -> Vec<f64> {
    rs.iter().map(|(_, r)| pick(r)).collect()
}

/// Relative spread `std/|mean|` of the level-curve geodesic curvature per row.
fn level_constancy(rows: &[usize], level: &[(LocalGeometry, PointResiduals)]) -> Vec<f64> {
    rows.iter()
        .map(|&i| {
            let v: Vec<f64> = level.iter().filter(|(g, _)| g.i == i).map(|(g, _)| g.level_curvature).collect();
            if v.is_empty() {
                return f64::NAN;
            }
            let n = v.len() as f64;
            let mean = v.iter().sum::<f64>() / n;
            let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
            var.sqrt() / mean.abs()
        })
        .collect()
}

pub const ENTRY_NAMES: [&str; 24] = [
    "unit_sphere",
    "metric_guu",
    "metric_gut",
    "metric_gtt",
    "mean_curvature",
    "a3_diagonal",
    "a3_offdiag",
    "a3_ratio",
    "a4_trace",
    "a4_spectrum",
    "a4_offdiag",
    "recovered_c",
    "recovered_C",
    "biconservative",
    "pnmc",
    "grad_f_direction",
    "gauss_intrinsic",
    "gauss_extrinsic",
    "gauss_one_minus_k",
    "level_circle_constancy",
    "level_circle_value",
    "non_biharmonic",
    "codazzi",
    "ricci",
];

/// Runs every check and aggregates the report.
pub fn verify_patch(patch: &SurfacePatch, options: &VerifyOptions) -> Result<VerificationReport> {
    if patch.n_u() < 8 || patch.n_t() < 8 {
        return Err(Error::Geometry(format!("grid {}x{} is smaller than 8x8", patch.n_u(), patch.n_t())));
    }
    let s = options.stride.max(1);
    let grid = Grid::new(patch)?;
    let (nodes, rows) = centers(&grid, options.level, 2 * s);
    if nodes.is_empty() {
        return Err(Error::Geometry(format!("no interior nodes for stride {s}")));
    }
    let rs = residuals_at(patch, &nodes, s, options.exec)?;
    let level_rs = match options.level {
        Level::Full => rs.clone(),
        Level::Fast => {
            let cols = interior_columns(&grid, 2 * s);
            let lnodes: Vec<(usize, usize)> = rows.iter().flat_map(|&i| cols.iter().map(move |&j| (i, j))).collect();
            residuals_at(patch, &lnodes, s, options.exec)?
        }
    };
    let t = &options.tolerances;
    let col = |pick: fn(&PointResiduals) -> f64| column(&rs, pick);

    let mut entries = vec![
        ReportEntry::upper(
            "unit_sphere",
            "points lie on the unit sphere",
            &unit_sphere_residuals(patch),
            t.unit_sphere,
        ),
        ReportEntry::upper("metric_guu", "g_uu = 1", &col(|r| r.metric_guu), t.metric),
        ReportEntry::upper("metric_gut", "g_ut = 0", &col(|r| r.metric_gut), t.metric),
        ReportEntry::upper("metric_gtt", "g_tt = 8/(9C^2) f^(-3/2)", &col(|r| r.metric_gtt), t.metric),
        ReportEntry::upper("mean_curvature", "|H| = f", &col(|r| r.mean_curvature), t.mean_curvature),
        ReportEntry::upper("a3_diagonal", "A3 = diag(-f, 3f) in (grad f, E2)", &col(|r| r.a3_diagonal), t.shape),
        ReportEntry::upper("a3_offdiag", "A3 is diagonal in (grad f, E2)", &col(|r| r.a3_offdiag), t.shape),
        ReportEntry::upper("a3_ratio", "eigenvalues of A3 in ratio -1:3", &col(|r| r.a3_ratio), t.shape),
        ReportEntry::upper("a4_trace", "A4 is trace free", &col(|r| r.a4_trace), t.shape),
        ReportEntry::upper("a4_spectrum", "eigenvalues of A4 are +-c f^(3/2)", &col(|r| r.a4_spectrum), t.shape),
        ReportEntry::upper("a4_offdiag", "A4 is diagonal in (grad f, E2)", &col(|r| r.a4_offdiag), t.shape),
        ReportEntry::upper("recovered_c", "c from the spectrum of A4", &col(|r| r.recovered_c), t.recovered),
        ReportEntry::upper("recovered_C", "C from g_tt", &col(|r| r.recovered_big_c), t.recovered),
        ReportEntry::upper(
            "biconservative",
            "A3(grad f) = -f grad f",
            &col(|r| r.biconservative),
            t.biconservative,
        ),
        ReportEntry::upper("pnmc", "H/|H| is parallel in the normal bundle", &col(|r| r.pnmc), t.pnmc),
        ReportEntry::upper(
            "grad_f_direction",
            "grad f is along d/du",
            &col(|r| r.grad_f_direction),
            t.grad_direction,
        ),
        ReportEntry::upper("gauss_intrinsic", "K = 1 - 3f^2 - c^2 f^3", &col(|r| r.gauss_intrinsic), t.gauss),
        ReportEntry::upper("gauss_extrinsic", "Gauss equation", &col(|r| r.gauss_extrinsic), t.gauss),
        ReportEntry::lower("gauss_one_minus_k", "1 - K > 0", &col(|r| r.one_minus_k), 0.0),
        ReportEntry::upper(
            "level_circle_constancy",
            "level curves of K have constant geodesic curvature",
            &level_constancy(&rows, &level_rs),
            t.level_constancy,
        ),
        ReportEntry::upper(
            "level_circle_value",
            "geodesic curvature of level curves is 3f'/(4f)",
            &column(&level_rs, |r| r.level_value),
            t.level_value,
        ),
        ReportEntry::lower(
            "non_biharmonic",
            "4c f^(7/2) > 0",
            &non_biharmonic_witness(patch),
            t.non_biharmonic_floor,
        ),
    ];
    if options.level == Level::Full {
        entries.push(ReportEntry::upper("codazzi", "Codazzi equation", &col(|r| r.codazzi), t.codazzi));
        entries.push(ReportEntry::upper(
            "ricci",
            "Ricci equation, [A3, A4] = 0",
            &col(|r| r.ricci),
            t.ricci,
        ));
    }
    Ok(VerificationReport { entries })
}

type Pick = fn(&PointResiduals) -> f64;

/// Largest value of each truncation-dominated residual at strides 1 and 2
/// over the same nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub name: &'static str,
    pub coarse: f64,
    pub fine: f64,
}

impl ConvergenceRow {
    pub fn ratio(&self) -> f64 {
        self.coarse / self.fine
    }
}

/// Compares residuals at FD step `h` (stride 1) and `2h` (stride 2) on the
/// interior nodes valid for both, sampled as in [`Level::Fast`].
pub fn convergence(patch: &SurfacePatch, exec: Exec) -> Result<Vec<ConvergenceRow>> {
    let grid = Grid::new(patch)?;
    let (nodes, _) = centers(&grid, Level::Fast, 4);
    let fine = residuals_at(patch, &nodes, 1, exec)?;
    let coarse = residuals_at(patch, &nodes, 2, exec)?;
    let max = |rs: &[(LocalGeometry, PointResiduals)], pick: Pick| column(rs, pick).into_iter().fold(0.0, f64::max);
    let picks: [(&'static str, Pick); 11] = [
        ("metric_guu", |r| r.metric_guu),
        ("metric_gtt", |r| r.metric_gtt),
        ("mean_curvature", |r| r.mean_curvature),
        ("a3_diagonal", |r| r.a3_diagonal),
        ("a3_ratio", |r| r.a3_ratio),
        ("a4_spectrum", |r| r.a4_spectrum),
        ("recovered_c", |r| r.recovered_c),
        ("gauss_intrinsic", |r| r.gauss_intrinsic),
        ("gauss_extrinsic", |r| r.gauss_extrinsic),
        ("level_circle_value", |r| r.level_value),
        ("codazzi", |r| r.codazzi),
    ];
    Ok(picks
        .iter()
        .map(|&(name, pick)| ConvergenceRow {
            name,
            coarse: max(&coarse, pick),
            fine: max(&fine, pick),
        })
        .collect())
}
