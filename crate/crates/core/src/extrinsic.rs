//! The surface in S⁴ ⊂ E⁵ built from its directrix.
//!
//! The directrix γ̂ is a curve in the totally geodesic S³ orthogonal to
//! `e₂`, with curvature `k` and torsion `τ` given by the profile. The
//! surface is swept by the circles
//! `Φ(u, t) = γ̂(u) + (1/κ̂(u))((cos t − 1) e₁ + sin t e₂)`.

use std::f64::consts::{SQRT_2, TAU};

use nalgebra::{Matrix4, Vector4, Vector5};

use crate::odecore::{self, OdeProblem, Tolerances, Trajectory};
use crate::profile::{integrate_profile, ModelParams, ProfileOptions, ProfileSample, ProfileSolution, ProfileStop};
use crate::{Error, Result};

pub type Point = Vector5<f64>;

/// Directrix point and Frenet frame, as vectors of E⁵.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrenetState {
    pub gamma: Point,
    pub v1: Point,
    pub v2: Point,
    pub v3: Point,
}

impl FrenetState {
    fn vectors(&self) -> [&Point; 4] {
        [&self.v1, &self.v2, &self.v3, &self.gamma]
    }

    /// Gram matrix of `(V₁, V₂, V₃, γ̂)`.
    pub fn gram(&self) -> Matrix4<f64> {
        let v = self.vectors();
        Matrix4::from_fn(|i, j| v[i].dot(v[j]))
    }

    /// Largest entry of `|Gram − I|`.
    pub fn gram_drift(&self) -> f64 {
        (self.gram() - Matrix4::identity()).amax()
    }

    fn to_state(self) -> Vec<f64> {
        let mut y = Vec::with_capacity(20);
        for v in [self.gamma, self.v1, self.v2, self.v3] {
            y.extend_from_slice(v.as_slice());
        }
        y
    }

    fn from_state(y: &[f64]) -> Self {
        let p = |k: usize| Point::from_column_slice(&y[5 * k..5 * k + 5]);
        Self {
            gamma: p(0),
            v1: p(1),
            v2: p(2),
            v3: p(3),
        }
    }

    /// Gram–Schmidt in the order γ̂, V₁, V₂, V₃.
    pub fn orthonormalized(&self) -> Self {
        let mut out: Vec<Point> = Vec::with_capacity(4);
        for v in [self.gamma, self.v1, self.v2, self.v3] {
            let mut w = v;
            for q in &out {
                w -= q * q.dot(&w);
            }
            out.push(w.normalize());
        }
        Self {
            gamma: out[0],
            v1: out[1],
            v2: out[2],
            v3: out[3],
        }
    }
}

/// `e₁`-components `(γ¹, V₁¹, V₂¹, V₃¹)` of the frame at a profile point.
///
/// `γ¹ = 1/κ̂` and `V₁¹ = (1/κ̂)′ = −(√2/(2C)) f^{−7/4} f′`.
pub fn pinned_components(params: &ModelParams, f: f64, fp: f64) -> [f64; 4] {
    let (c, bc, c2) = (params.c, params.big_c, params.c2());
    let root = (1.0 + c2 * f).sqrt();
    let gamma1 = 1.0 / params.kappa_hat(f);
    let v1 = -SQRT_2 / (2.0 * bc) * f.powf(-1.75) * fp;
    let v2 = 2.0 * SQRT_2 * (3.0 + c2 * f) * f.powf(0.25) / (3.0 * bc * root);
    let v3 = -4.0 * SQRT_2 * c * f.powf(0.75) / (3.0 * bc * root);
    [gamma1, v1, v2, v3]
}

/// Frame at a profile point with the pinned `e₁`-components, zero
/// `e₂`-components, and the `e₃e₄e₅` block completed by orthonormalizing
/// the projections of the remaining coordinate directions.
pub fn initial_frame(params: &ModelParams, sample: &ProfileSample) -> Result<FrenetState> {
    let a = Vector4::from(pinned_components(params, sample.f, sample.fprime));
    let norm = a.norm();
    if !((norm - 1.0).abs() <= 1e-8) {
        return Err(Error::PinnedNorm { norm });
    }
    let a = a / norm;
    let mut cols: Vec<Vector4<f64>> = vec![a];
    for k in [1, 2, 3, 0] {
        if cols.len() == 4 {
            break;
        }
        let mut w = Vector4::ith(k, 1.0);
        for _ in 0..2 {
            for q in &cols {
                w -= q * q.dot(&w);
            }
        }
        let n = w.norm();
        if n > 1e-8 {
            cols.push(w / n);
        }
    }
    let m = Matrix4::from_columns(&cols);
    // rows of m: γ̂, V₁, V₂, V₃ in the coordinates (e₁, e₃, e₄, e₅)
    let row = |r: usize| Point::new(m[(r, 0)], 0.0, m[(r, 1)], m[(r, 2)], m[(r, 3)]);
    Ok(FrenetState {
        gamma: row(0),
        v1: row(1),
        v2: row(2),
        v3: row(3),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrenetOptions {
    pub tolerances: Tolerances,
    /// Gram drift above which integration is aborted.
    pub gram_limit: f64,
    /// Re-orthonormalize the frame after every `u`-interval of this length.
    pub renormalize: Option<f64>,
}

impl Default for FrenetOptions {
    fn default() -> Self {
        Self {
            tolerances: Tolerances::new(1e-12, 1e-14),
            gram_limit: 1e-6,
            renormalize: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FrenetSolution {
    pieces: Vec<Trajectory>,
    pub max_gram_drift: f64,
}

impl FrenetSolution {
    pub fn u_start(&self) -> f64 {
        self.pieces[0].u_first()
    }

    pub fn u_end(&self) -> f64 {
        self.pieces[self.pieces.len() - 1].u_last()
    }

    pub fn frame_at(&self, u: f64) -> FrenetState {
        let piece = self.pieces.iter().find(|p| p.covers(u)).unwrap_or_else(|| {
            if (u - self.u_start()).abs() < (u - self.u_end()).abs() {
                &self.pieces[0]
            } else {
                &self.pieces[self.pieces.len() - 1]
            }
        });
        FrenetState::from_state(&piece.eval(u))
    }

    /// Frames at every accepted step.
    pub fn nodes(&self) -> impl Iterator<Item = (f64, FrenetState)> + '_ {
        self.pieces
            .iter()
            .flat_map(|p| p.states().map(|(u, y)| (u, FrenetState::from_state(y))))
    }
}

/// Integrates `γ̂′ = V₁, V₁′ = kV₂ − γ̂, V₂′ = −kV₁ + τV₃, V₃′ = −τV₂` from
/// `u = 0`, with `k` and `τ` read from the profile's dense output.
pub fn integrate_frenet(profile: &ProfileSolution, start: FrenetState, u_end: f64, options: &FrenetOptions) -> Result<FrenetSolution> {
    if !profile.covers(u_end) {
        return Err(Error::OutsideDomain(format!(
            "profile ends at u={} before the requested u={u_end}",
            profile.u_max
        )));
    }
    let params = profile.params;
    let rhs = |u: f64, y: &[f64], dy: &mut [f64]| {
        let (f, fp) = profile.state_at(u);
        let k = params.curvature(f);
        let tau = params.torsion(f, fp);
        for i in 0..5 {
            let (g, v1, v2, v3) = (y[i], y[5 + i], y[10 + i], y[15 + i]);
            dy[i] = v1;
            dy[5 + i] = k * v2 - g;
            dy[10 + i] = -k * v1 + tau * v3;
            dy[15 + i] = -tau * v2;
        }
    };
    let step = options.renormalize.map_or(u_end.abs(), |s| s.abs().min(u_end.abs()));
    let mut pieces = Vec::new();
    let mut frame = start;
    let mut u = 0.0;
    let mut max_drift: f64 = 0.0;
    while u != u_end {
        let next = if (u_end - u).abs() <= step * (1.0 + 1e-12) {
            u_end
        } else {
            u + step.copysign(u_end)
        };
        let problem = OdeProblem::new(rhs, u, next, frame.to_state())?;
        let sol = odecore::integrate(&problem, options.tolerances, &[])?;
        for (v, y) in sol.trajectory.states() {
            let drift = FrenetState::from_state(y).gram_drift();
            max_drift = max_drift.max(drift);
            if drift > options.gram_limit {
                return Err(Error::GramDrift {
                    drift,
                    limit: options.gram_limit,
                    u: v,
                });
            }
        }
        let last = FrenetState::from_state(sol.trajectory.state(sol.trajectory.len() - 1));
        frame = if options.renormalize.is_some() {
            last.orthonormalized()
        } else {
            last
        };
        pieces.push(sol.trajectory);
        u = next;
    }
    Ok(FrenetSolution {
        pieces,
        max_gram_drift: max_drift,
    })
}

/// `Φ = γ̂ + (1/κ̂)((cos t − 1) e₁ + sin t e₂)`.
pub fn surface_point(frame: &FrenetState, kappa_hat: f64, t: f64) -> Point {
    let r = 1.0 / kappa_hat;
    let mut p = frame.gamma;
    p[0] += r * (t.cos() - 1.0);
    p[1] += r * t.sin();
    p
}

/// Grid layout of a patch: `n_u` rows evenly covering `[0, u_span]` and
/// `n_t` columns at `t_j = j·t_span/n_t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatchSpec {
    pub u_span: f64,
    pub n_u: usize,
    pub n_t: usize,
    pub t_span: f64,
}

impl PatchSpec {
    pub fn new(u_span: f64, n_u: usize, n_t: usize) -> Self {
        Self {
            u_span,
            n_u,
            n_t,
            t_span: TAU,
        }
    }

    /// The 64×64 grid used for verification, fine enough in both
    /// directions for second order differences.
    pub fn reference() -> Self {
        Self {
            u_span: 0.05,
            n_u: 64,
            n_t: 64,
            t_span: 0.05,
        }
    }

    /// A 64×64 grid four times coarser than [`PatchSpec::reference`], on
    /// which difference errors dominate rounding at strides 1 and 2.
    pub fn convergence() -> Self {
        Self {
            u_span: 0.2,
            t_span: 0.2,
            ..Self::reference()
        }
    }

    pub fn with_t_span(self, t_span: f64) -> Self {
        Self { t_span, ..self }
    }

    pub fn u_nodes(&self) -> Vec<f64> {
        let du = self.u_span / (self.n_u - 1) as f64;
        (0..self.n_u).map(|i| i as f64 * du).collect()
    }

    pub fn t_nodes(&self) -> Vec<f64> {
        let dt = self.t_span / self.n_t as f64;
        (0..self.n_t).map(|j| j as f64 * dt).collect()
    }

    fn validate(&self) -> Result<()> {
        if self.n_u < 4 || self.n_t < 4 {
            return Err(Error::InvalidParams(format!("grid {}x{} is smaller than 4x4", self.n_u, self.n_t)));
        }
        if !(self.u_span > 0.0 && self.u_span.is_finite()) {
            return Err(Error::InvalidParams(format!("u_span={} must be positive", self.u_span)));
        }
        if !(self.t_span > 0.0 && self.t_span <= TAU) {
            return Err(Error::InvalidParams(format!("t_span={} must lie in (0, 2π]", self.t_span)));
        }
        Ok(())
    }
}

/// Construction-side quality figures, not used by verification.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PatchDiagnostics {
    pub max_gram_drift: f64,
    /// `max |⟨γ̂, e₁⟩ − 1/κ̂|` over the Frenet nodes.
    pub max_constraint: f64,
    pub max_unit_residual: f64,
    pub max_guu_error: f64,
    pub max_gut: f64,
    /// `max |g_tt κ̂² − 1|`.
    pub max_gtt_error: f64,
    /// Largest entry of `|e₂|` over the frame, exactly zero by construction.
    pub max_e2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurfacePatch {
    pub params: ModelParams,
    pub f0: f64,
    pub t_span: f64,
    pub u_nodes: Vec<f64>,
    pub t_nodes: Vec<f64>,
    /// Row-major, `points[i * n_t + j] = Φ(u_i, t_j)`.
    pub points: Vec<Point>,
    pub f_values: Vec<f64>,
    pub fprime_values: Vec<f64>,
    pub kappa_hat_values: Vec<f64>,
    pub diagnostics: PatchDiagnostics,
}

impl SurfacePatch {
    pub fn n_u(&self) -> usize {
        self.u_nodes.len()
    }

    pub fn n_t(&self) -> usize {
        self.t_nodes.len()
    }

    pub fn point(&self, i: usize, j: usize) -> &Point {
        &self.points[i * self.n_t() + j]
    }

    pub fn point_mut(&mut self, i: usize, j: usize) -> &mut Point {
        let n_t = self.n_t();
        &mut self.points[i * n_t + j]
    }

    /// Whether the columns wrap around the full circle.
    pub fn is_periodic(&self) -> bool {
        (self.t_span - TAU).abs() < 1e-12
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PatchOptions {
    pub profile: ProfileOptions,
    pub frenet: FrenetOptions,
}

/// Runs profile, initial frame, Frenet integration and the circle sweep.
pub fn sample_patch(params: &ModelParams, f0: f64, spec: &PatchSpec, options: &PatchOptions) -> Result<SurfacePatch> {
    spec.validate()?;
    let profile = integrate_profile(params, f0, spec.u_span, &options.profile)?;
    if profile.stop == ProfileStop::TurningPoint {
        return Err(Error::OutsideDomain(format!(
            "profile reaches a turning point at u={} before u_span={}",
            profile.u_max, spec.u_span
        )));
    }
    let start = initial_frame(params, &profile.samples[0])?;
    let frenet = integrate_frenet(&profile, start, spec.u_span, &options.frenet)?;

    let mut diag = PatchDiagnostics {
        max_gram_drift: frenet.max_gram_drift,
        ..Default::default()
    };
    for (u, fr) in frenet.nodes() {
        let (f, _) = profile.state_at(u);
        diag.max_constraint = diag.max_constraint.max((fr.gamma[0] - 1.0 / params.kappa_hat(f)).abs());
        for v in fr.vectors() {
            diag.max_e2 = diag.max_e2.max(v[1].abs());
        }
    }

    let u_nodes = spec.u_nodes();
    let t_nodes = spec.t_nodes();
    let mut points = Vec::with_capacity(u_nodes.len() * t_nodes.len());
    let mut f_values = Vec::with_capacity(u_nodes.len());
    let mut fprime_values = Vec::with_capacity(u_nodes.len());
    let mut kappa_hat_values = Vec::with_capacity(u_nodes.len());
    for &u in &u_nodes {
        let (f, fp) = profile.state_at(u);
        let kh = params.kappa_hat(f);
        let frame = frenet.frame_at(u);
        // (1/κ̂)′ = −(3/4)(f′/f)/κ̂
        let dr = -0.75 * fp / f / kh;
        for &t in &t_nodes {
            let p = surface_point(&frame, kh, t);
            diag.max_unit_residual = diag.max_unit_residual.max((p.norm() - 1.0).abs());
            let (s, c) = t.sin_cos();
            let mut pu = frame.v1;
            pu[0] += dr * (c - 1.0);
            pu[1] += dr * s;
            let pt = Point::new(-s / kh, c / kh, 0.0, 0.0, 0.0);
            diag.max_guu_error = diag.max_guu_error.max((pu.norm_squared() - 1.0).abs());
            diag.max_gut = diag.max_gut.max(pu.dot(&pt).abs());
            diag.max_gtt_error = diag.max_gtt_error.max((pt.norm_squared() * kh * kh - 1.0).abs());
            points.push(p);
        }
        f_values.push(f);
        fprime_values.push(fp);
        kappa_hat_values.push(kh);
    }
    Ok(SurfacePatch {
        params: *params,
        f0,
        t_span: spec.t_span,
        u_nodes,
        t_nodes,
        points,
        f_values,
        fprime_values,
        kappa_hat_values,
        diagnostics: diag,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn f_ref() -> f64 {
        0.5f64.sqrt()
    }

    fn reference_sample() -> ProfileSample {
        let p = ModelParams::reference();
        ProfileSample::new(&p, 0.0, f_ref(), p.poly(f_ref()).sqrt())
    }

    #[test]
    fn pinned_components_at_reference() {
        let p = ModelParams::reference();
        let s = reference_sample();
        let a = pinned_components(&p, s.f, s.fprime);
        let r7 = 7f64.sqrt();
        let expected = [1.0 / r7, -1.0 / r7, 2.0 / r7, -1.0 / r7];
        for (x, e) in a.iter().zip(expected) {
            assert!((x - e).abs() < 1e-12, "{a:?}");
        }
        assert!((a.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn first_component_derivative_matches_difference() {
        let p = ModelParams::reference();
        let prof = integrate_profile(&p, f_ref(), 0.1, &ProfileOptions::default()).unwrap();
        let h = 1e-5;
        let g = |u: f64| 1.0 / p.kappa_hat(prof.state_at(u).0);
        let (f, fp) = prof.state_at(0.05);
        let fd = (g(0.05 + h) - g(0.05 - h)) / (2.0 * h);
        assert_relative_eq!(pinned_components(&p, f, fp)[1], fd, max_relative = 1e-8);
    }

    #[test]
    fn initial_frame_is_orthonormal() {
        let p = ModelParams::reference();
        let fr = initial_frame(&p, &reference_sample()).unwrap();
        assert!(fr.gram_drift() < 1e-15);
        assert_eq!([fr.gamma[1], fr.v1[1], fr.v2[1], fr.v3[1]], [0.0; 4]);
        let r7 = 7f64.sqrt();
        assert!((fr.gamma[0] - 1.0 / r7).abs() < 1e-15);
        assert!((fr.v2[0] - 2.0 / r7).abs() < 1e-15);
    }

    #[test]
    fn inconsistent_sample_is_rejected() {
        let p = ModelParams::reference();
        let mut s = reference_sample();
        s.fprime *= 1.5;
        assert!(matches!(initial_frame(&p, &s), Err(Error::PinnedNorm { .. })));
    }

    #[test]
    fn frenet_run_preserves_gram_and_constraint() {
        let p = ModelParams::reference();
        let prof = integrate_profile(&p, f_ref(), 0.2, &ProfileOptions::default()).unwrap();
        let start = initial_frame(&p, &prof.samples[0]).unwrap();
        let sol = integrate_frenet(&prof, start, 0.2, &FrenetOptions::default()).unwrap();
        assert!(sol.max_gram_drift <= 1e-8);
        for (u, fr) in sol.nodes() {
            let (f, _) = prof.state_at(u);
            assert!((fr.gamma[0] - 1.0 / p.kappa_hat(f)).abs() <= 1e-7);
            assert!((fr.gamma.norm() - 1.0).abs() <= 1e-8);
            assert_eq!(fr.v3[1], 0.0);
        }
    }

    #[test]
    fn renormalized_run_agrees() {
        let p = ModelParams::reference();
        let prof = integrate_profile(&p, f_ref(), 0.2, &ProfileOptions::default()).unwrap();
        let start = initial_frame(&p, &prof.samples[0]).unwrap();
        let a = integrate_frenet(&prof, start, 0.2, &FrenetOptions::default()).unwrap();
        let opts = FrenetOptions {
            renormalize: Some(0.05),
            ..FrenetOptions::default()
        };
        let b = integrate_frenet(&prof, start, 0.2, &opts).unwrap();
        assert_eq!(b.u_end(), 0.2);
        assert!((a.frame_at(0.2).gamma - b.frame_at(0.2).gamma).amax() < 1e-10);
        assert!((a.frame_at(0.13).v2 - b.frame_at(0.13).v2).amax() < 1e-10);
    }

    #[test]
    fn frenet_beyond_profile_fails() {
        let p = ModelParams::reference();
        let prof = integrate_profile(&p, f_ref(), 0.1, &ProfileOptions::default()).unwrap();
        let start = initial_frame(&p, &prof.samples[0]).unwrap();
        assert!(integrate_frenet(&prof, start, 0.2, &FrenetOptions::default()).is_err());
    }

    #[test]
    fn surface_point_basics() {
        let p = ModelParams::reference();
        let fr = initial_frame(&p, &reference_sample()).unwrap();
        let kh = 7f64.sqrt();
        assert_eq!(surface_point(&fr, kh, 0.0), fr.gamma);
        for t in [0.3, 1.0, 2.5, 4.0] {
            assert!((surface_point(&fr, kh, t).norm() - 1.0).abs() < 1e-14);
            let h = 1e-6;
            let d = (surface_point(&fr, kh, t + h) - surface_point(&fr, kh, t - h)) / (2.0 * h);
            assert_relative_eq!(d.norm(), 1.0 / kh, max_relative = 1e-8);
            assert!((surface_point(&fr, kh, t) - surface_point(&fr, kh, t + TAU)).amax() < 1e-15);
        }
    }

    #[test]
    fn patch_geometry() {
        let p = ModelParams::reference();
        let spec = PatchSpec::new(0.2, 16, 12);
        let patch = sample_patch(&p, f_ref(), &spec, &PatchOptions::default()).unwrap();
        let d = patch.diagnostics;
        assert!(d.max_unit_residual <= 1e-8);
        assert!(d.max_guu_error <= 1e-6 && d.max_gut <= 1e-6 && d.max_gtt_error <= 1e-6);
        assert!(d.max_gram_drift <= 1e-8 && d.max_constraint <= 1e-7);
        assert_eq!(d.max_e2, 0.0);
        assert_eq!(patch.points.len(), 16 * 12);
        assert!(patch.is_periodic());
        for i in 0..patch.n_u() {
            let g = 8.0 / (9.0 * p.big_c2()) * patch.f_values[i].powf(-1.5);
            assert_relative_eq!(g * patch.kappa_hat_values[i].powi(2), 1.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn patch_preconditions() {
        let p = ModelParams::reference();
        let opts = PatchOptions::default();
        assert!(sample_patch(&p, f_ref(), &PatchSpec::new(0.2, 3, 8), &opts).is_err());
        assert!(sample_patch(&p, f_ref(), &PatchSpec::new(1.0, 8, 8), &opts).is_err());
        assert!(sample_patch(&p, 0.1, &PatchSpec::new(0.1, 8, 8), &opts).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn pinned_vector_is_unit(c in 0.5f64..1.5, bc in 3.0f64..5.0, s in 0.1f64..0.9) {
            let p = ModelParams::new(c, bc).unwrap();
            let w = crate::profile::find_window(&p).unwrap().unwrap();
            let f = w.f_lo + s * w.width();
            let a = pinned_components(&p, f, p.poly(f).sqrt());
            prop_assert!((a.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
