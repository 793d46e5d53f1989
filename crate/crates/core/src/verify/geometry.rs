//! Finite-difference geometry of a sampled patch.

use nalgebra::{Matrix2, Matrix3};

use crate::extrinsic::{Point, SurfacePatch};
use crate::{Error, Result};

/// Read access to the grid with uniform spacing and optional wrap in `t`.
#[derive(Debug, Clone, Copy)]
pub struct Grid<'a> {
    pub patch: &'a SurfacePatch,
    pub du: f64,
    pub dt: f64,
    periodic: bool,
}

fn uniform_step(nodes: &[f64], what: &str) -> Result<f64> {
    if nodes.len() < 2 {
        return Err(Error::Geometry(format!("{what} grid has fewer than 2 nodes")));
    }
    let h = (nodes[nodes.len() - 1] - nodes[0]) / (nodes.len() - 1) as f64;
    let uniform = nodes.windows(2).all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h.abs());
    if !(uniform && h > 0.0) {
        return Err(Error::Geometry(format!("{what} nodes are not uniformly increasing")));
    }
    Ok(h)
}

impl<'a> Grid<'a> {
    pub fn new(patch: &'a SurfacePatch) -> Result<Self> {
        if patch.points.len() != patch.n_u() * patch.n_t() {
            return Err(Error::Geometry("point count does not match the grid".into()));
        }
        Ok(Self {
            patch,
            du: uniform_step(&patch.u_nodes, "u")?,
            dt: uniform_step(&patch.t_nodes, "t")?,
            periodic: patch.is_periodic(),
        })
    }

    pub fn n_u(&self) -> usize {
        self.patch.n_u()
    }

    pub fn n_t(&self) -> usize {
        self.patch.n_t()
    }

    pub fn is_periodic(&self) -> bool {
        self.periodic
    }

    /// Whether `(i, j)` is at least `margin` nodes from every non-periodic edge.
    pub fn is_interior(&self, i: usize, j: usize, margin: usize) -> bool {
        let ok_u = i >= margin && i + margin < self.n_u();
        let ok_t = self.periodic || (j >= margin && j + margin < self.n_t());
        ok_u && ok_t
    }

    fn at(&self, i: isize, j: isize) -> &Point {
        let n_t = self.n_t() as isize;
        let j = if self.periodic { j.rem_euclid(n_t) } else { j };
        self.patch.point(i as usize, j as usize)
    }
}

/// First and second order quantities at one node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointGeometry {
    pub phi: Point,
    pub phi_u: Point,
    pub phi_t: Point,
    /// Components of the metric `(E, F, G)`.
    pub metric: Matrix2<f64>,
    /// Orthonormal basis of the normal space of the surface in S⁴.
    pub normals: [Point; 2],
    /// Second fundamental form `B(∂ᵢ, ∂ⱼ)`, ordered `uu, ut, tt`.
    pub b: [Point; 3],
    pub mean_curvature: Point,
    pub f: f64,
    pub e3: Point,
    pub e4: Point,
}

impl PointGeometry {
    pub fn det(&self) -> f64 {
        self.metric.determinant()
    }

    fn b_ij(&self, i: usize, j: usize) -> &Point {
        &self.b[i + j]
    }

    /// `⟨B(∂ᵢ, ∂ⱼ), E_α⟩` for `α = 0` (E₃) and `α = 1` (E₄).
    pub fn h(&self, alpha: usize) -> Matrix2<f64> {
        let e = if alpha == 0 { &self.e3 } else { &self.e4 };
        Matrix2::from_fn(|i, j| self.b_ij(i, j).dot(e))
    }

    /// Coordinates of the orthonormal tangent frame `e₁ = ∂_u/|∂_u|`,
    /// `e₂ ⟂ e₁`, as columns.
    pub fn tangent_frame(&self) -> Matrix2<f64> {
        let (e, f, g) = (self.metric[(0, 0)], self.metric[(0, 1)], self.metric[(1, 1)]);
        let lambda = 1.0 / (g - f * f / e).sqrt();
        Matrix2::new(1.0 / e.sqrt(), -f / e * lambda, 0.0, lambda)
    }

    /// Shape operator of `E₃` (`α = 0`) or `E₄` in the orthonormal tangent frame.
    pub fn shape_operator(&self, alpha: usize) -> Matrix2<f64> {
        let p = self.tangent_frame();
        p.transpose() * self.h(alpha) * p
    }
}

fn orthonormal_complement(basis: &[Point], count: usize) -> Vec<Point> {
    let mut q: Vec<Point> = Vec::new();
    for v in basis {
        let mut w = *v;
        for _ in 0..2 {
            for x in &q {
                w -= x * x.dot(&w);
            }
        }
        q.push(w.normalize());
    }
    let mut out = Vec::new();
    for _ in 0..count {
        let mut best: Option<Point> = None;
        for k in 0..5 {
            let mut w = Point::ith(k, 1.0);
            for _ in 0..2 {
                for x in q.iter().chain(out.iter()) {
                    w -= x * x.dot(&w);
                }
            }
            if best.is_none_or(|b| w.norm() > b.norm() + 1e-12) {
                best = Some(w);
            }
        }
        out.push(best.expect("five candidates").normalize());
    }
    out
}

/// Central differences at `(i, j)` with stride `s`; needs `s` nodes of
/// margin.
pub fn point_geometry(grid: &Grid, i: usize, j: usize, s: usize) -> Result<PointGeometry> {
    if !grid.is_interior(i, j, s) {
        return Err(Error::Geometry(format!("node ({i}, {j}) is within {s} of the boundary")));
    }
    let (i, j, s) = (i as isize, j as isize, s as isize);
    let hu = grid.du * s as f64;
    let ht = grid.dt * s as f64;
    let p = |a: isize, b: isize| *grid.at(i + a * s, j + b * s);
    let phi = p(0, 0);
    let phi_u = (p(1, 0) - p(-1, 0)) / (2.0 * hu);
    let phi_t = (p(0, 1) - p(0, -1)) / (2.0 * ht);
    let phi_uu = (p(1, 0) - 2.0 * phi + p(-1, 0)) / (hu * hu);
    let phi_tt = (p(0, 1) - 2.0 * phi + p(0, -1)) / (ht * ht);
    let phi_ut = (p(1, 1) - p(1, -1) - p(-1, 1) + p(-1, -1)) / (4.0 * hu * ht);

    let metric = Matrix2::new(phi_u.dot(&phi_u), phi_u.dot(&phi_t), phi_u.dot(&phi_t), phi_t.dot(&phi_t));
    let det = metric.determinant();
    if !(det >= 1e-12) {
        return Err(Error::Geometry(format!("degenerate metric at ({i}, {j}): det={det}")));
    }
    let normals = orthonormal_complement(&[phi, phi_u, phi_t], 2);
    let project = |v: &Point| normals.iter().map(|n| n * n.dot(v)).sum::<Point>();
    let b = [project(&phi_uu), project(&phi_ut), project(&phi_tt)];
    let (e, f, g) = (metric[(0, 0)], metric[(0, 1)], metric[(1, 1)]);
    let mean_curvature = (b[0] * g - b[1] * (2.0 * f) + b[2] * e) / (2.0 * det);
    let fm = mean_curvature.norm();
    if !(fm >= 1e-12) {
        return Err(Error::Geometry(format!("vanishing mean curvature at ({i}, {j})")));
    }
    let e3 = mean_curvature / fm;
    let (a, bb) = (e3.dot(&normals[0]), e3.dot(&normals[1]));
    let mut e4 = normals[0] * (-bb) + normals[1] * a;
    if b[0].dot(&e4) < 0.0 {
        e4 = -e4;
    }
    Ok(PointGeometry {
        phi,
        phi_u,
        phi_t,
        metric,
        normals: [normals[0], normals[1]],
        b,
        mean_curvature,
        f: fm,
        e3,
        e4,
    })
}

/// Everything the checks need at one interior node.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalGeometry {
    pub i: usize,
    pub j: usize,
    pub stride: usize,
    pub center: PointGeometry,
    /// `Γᵏᵢⱼ` as `christoffel[k]`, a symmetric matrix in `(i, j)`.
    pub christoffel: [Matrix2<f64>; 2],
    pub gauss_intrinsic: f64,
    pub gauss_extrinsic: f64,
    /// `(df(e₁), df(e₂))`, the orthonormal components of `grad f`.
    pub grad_f: [f64; 2],
    /// Norms of `∇⊥_{e₁} E₃` and `∇⊥_{e₂} E₃`.
    pub normal_derivative_e3: [f64; 2],
    /// Geodesic curvature of the `t`-coordinate curve.
    pub level_curvature: f64,
    /// Largest asymmetry of the covariant derivative of `B`.
    pub codazzi: f64,
    /// `|[A₃, A₄]₁₂|`.
    pub ricci: f64,
}

/// Geometry at `(i, j)` with stride `s`; needs `2s` nodes of margin.
pub fn local_geometry(grid: &Grid, i: usize, j: usize, s: usize) -> Result<LocalGeometry> {
    if s == 0 {
        return Err(Error::Geometry("stride must be at least 1".into()));
    }
    if !grid.is_interior(i, j, 2 * s) {
        return Err(Error::Geometry(format!("node ({i}, {j}) is within {} of the boundary", 2 * s)));
    }
    let n_t = grid.n_t() as isize;
    let at = |a: isize, b: isize| -> Result<PointGeometry> {
        let jj = (j as isize + b * s as isize).rem_euclid(n_t) as usize;
        point_geometry(grid, (i as isize + a * s as isize) as usize, jj, s)
    };
    let c = at(0, 0)?;
    let (up, um, tp, tm) = (at(1, 0)?, at(-1, 0)?, at(0, 1)?, at(0, -1)?);
    let (pp, pm, mp, mm) = (at(1, 1)?, at(1, -1)?, at(-1, 1)?, at(-1, -1)?);
    let hu = grid.du * s as f64;
    let ht = grid.dt * s as f64;

    let d_u = |x: f64, y: f64| (x - y) / (2.0 * hu);
    let d_t = |x: f64, y: f64| (x - y) / (2.0 * ht);
    let m = |g: &PointGeometry, a: usize, b: usize| g.metric[(a, b)];

    // ∂_k g_ij
    let dg = [
        Matrix2::from_fn(|a, b| d_u(m(&up, a, b), m(&um, a, b))),
        Matrix2::from_fn(|a, b| d_t(m(&tp, a, b), m(&tm, a, b))),
    ];
    let ginv = c.metric.try_inverse().ok_or_else(|| Error::Geometry("singular metric".into()))?;
    let christoffel: [Matrix2<f64>; 2] = std::array::from_fn(|k| {
        Matrix2::from_fn(|a, b| {
            (0..2)
                .map(|l| 0.5 * ginv[(k, l)] * (dg[a][(b, l)] + dg[b][(a, l)] - dg[l][(a, b)]))
                .sum()
        })
    });

    let (e, f, g) = (m(&c, 0, 0), m(&c, 0, 1), m(&c, 1, 1));
    let (e_u, e_t) = (dg[0][(0, 0)], dg[1][(0, 0)]);
    let (f_u, f_t) = (dg[0][(0, 1)], dg[1][(0, 1)]);
    let (g_u, g_t) = (dg[0][(1, 1)], dg[1][(1, 1)]);
    let e_tt = (m(&tp, 0, 0) - 2.0 * e + m(&tm, 0, 0)) / (ht * ht);
    let g_uu = (m(&up, 1, 1) - 2.0 * g + m(&um, 1, 1)) / (hu * hu);
    let f_ut = (m(&pp, 0, 1) - m(&pm, 0, 1) - m(&mp, 0, 1) + m(&mm, 0, 1)) / (4.0 * hu * ht);
    let det = c.det();
    let m1 = Matrix3::new(
        -0.5 * e_tt + f_ut - 0.5 * g_uu,
        0.5 * e_u,
        f_u - 0.5 * e_t,
        f_t - 0.5 * g_u,
        e,
        f,
        0.5 * g_t,
        f,
        g,
    );
    let m2 = Matrix3::new(0.0, 0.5 * e_t, 0.5 * g_u, 0.5 * e_t, e, f, 0.5 * g_u, f, g);
    let gauss_intrinsic = (m1.determinant() - m2.determinant()) / (det * det);
    let gauss_extrinsic = 1.0 + (c.b[0].dot(&c.b[2]) - c.b[1].norm_squared()) / det;

    let frame = c.tangent_frame();
    let df = [d_u(up.f, um.f), d_t(tp.f, tm.f)];
    let grad_f = [
        frame[(0, 0)] * df[0] + frame[(1, 0)] * df[1],
        frame[(0, 1)] * df[0] + frame[(1, 1)] * df[1],
    ];

    let normal_part = |v: &Point| c.normals.iter().map(|n| n * n.dot(v)).sum::<Point>();
    let de = |sel: fn(&PointGeometry) -> Point| [(sel(&up) - sel(&um)) / (2.0 * hu), (sel(&tp) - sel(&tm)) / (2.0 * ht)];
    let de3 = de(|x| x.e3);
    let de4 = de(|x| x.e4);
    let dn3 = [normal_part(&de3[0]), normal_part(&de3[1])];
    let normal_derivative_e3: [f64; 2] = std::array::from_fn(|a| (dn3[0] * frame[(0, a)] + dn3[1] * frame[(1, a)]).norm());

    let level_curvature = christoffel[0][(1, 1)] * det.sqrt() / (g * g.sqrt());

    // ∇⊥B in coordinates; ω[k][β][α] = ⟨∂_k E_β, E_α⟩
    let es = [c.e3, c.e4];
    let dbeta = [de3, de4];
    let omega: [[[f64; 2]; 2]; 2] =
        std::array::from_fn(|k| std::array::from_fn(|beta| std::array::from_fn(|alpha| dbeta[beta][k].dot(&es[alpha]))));
    let hs = [
        [c.h(0), c.h(1)],
        [up.h(0), up.h(1)],
        [um.h(0), um.h(1)],
        [tp.h(0), tp.h(1)],
        [tm.h(0), tm.h(1)],
    ];
    let dh = |k: usize, alpha: usize, a: usize, b: usize| {
        if k == 0 {
            (hs[1][alpha][(a, b)] - hs[2][alpha][(a, b)]) / (2.0 * hu)
        } else {
            (hs[3][alpha][(a, b)] - hs[4][alpha][(a, b)]) / (2.0 * ht)
        }
    };
    let cov = |alpha: usize, k: usize, a: usize, b: usize| {
        let h = &hs[0];
        let mut v = dh(k, alpha, a, b);
        for l in 0..2 {
            v -= christoffel[l][(k, a)] * h[alpha][(l, b)] + christoffel[l][(k, b)] * h[alpha][(a, l)];
        }
        for beta in 0..2 {
            v += h[beta][(a, b)] * omega[k][beta][alpha];
        }
        v
    };
    let mut codazzi: f64 = 0.0;
    for alpha in 0..2 {
        for b in 0..2 {
            codazzi = codazzi.max((cov(alpha, 0, 1, b) - cov(alpha, 1, 0, b)).abs());
        }
    }
    let a3 = c.shape_operator(0);
    let a4 = c.shape_operator(1);
    let ricci = (a3 * a4 - a4 * a3)[(0, 1)].abs();

    Ok(LocalGeometry {
        i,
        j,
        stride: s,
        center: c,
        christoffel,
        gauss_intrinsic,
        gauss_extrinsic,
        grad_f,
        normal_derivative_e3,
        level_curvature,
        codazzi,
        ricci,
    })
}
