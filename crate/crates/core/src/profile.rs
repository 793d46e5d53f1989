//! The mean curvature profile `f(u)` determined by the constants `(c, C)`.
//!
//! Along the surface `f` satisfies
//! `f f″ = (7/4) f′² + (4/3) f² − 4 f⁴ − (4/3) c² f⁵`, whose first integral is
//! `f′² = P(f) = 2C² f^{7/2} − (16/9) f² − 16 f⁴ − (16/9) c² f⁵`.
//! The profile lives on an interval of `f` where `P > 0`.

use std::f64::consts::SQRT_2;

use crate::odecore::{self, Direction, EventSpec, OdeProblem, Tolerances, Trajectory};
use crate::{Error, Result};

/// The two constants fixing a surface up to congruence, both taken positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub c: f64,
    pub big_c: f64,
}

impl ModelParams {
    pub fn new(c: f64, big_c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite() && big_c > 0.0 && big_c.is_finite()) {
            return Err(Error::InvalidParams(format!("c={c} and C={big_c} must be positive and finite")));
        }
        Ok(Self { c, big_c })
    }

    pub fn from_squares(c2: f64, big_c2: f64) -> Result<Self> {
        Self::new(c2.sqrt(), big_c2.sqrt())
    }

    /// `c² = √2`, `C² = (28/9)·2^{7/4}`, for which `f = 2^{−1/2}` has
    /// `κ = k = 1`.
    pub fn reference() -> Self {
        Self {
            c: 2f64.powf(0.25),
            big_c: (28.0 / 9.0 * 2f64.powf(1.75)).sqrt(),
        }
    }

    pub fn c2(&self) -> f64 {
        self.c * self.c
    }

    pub fn big_c2(&self) -> f64 {
        self.big_c * self.big_c
    }

    /// `P(f)`; the caller guarantees `f > 0`.
    pub fn poly(&self, f: f64) -> f64 {
        let c2 = self.c2();
        f * f * (2.0 * self.big_c2() * f * f.sqrt() - 16.0 / 9.0 - f * f * (16.0 + 16.0 / 9.0 * c2 * f))
    }

    /// `dP/df`.
    pub fn poly_derivative(&self, f: f64) -> f64 {
        let c2 = self.c2();
        let f2 = f * f;
        7.0 * self.big_c2() * f2 * f.sqrt() - 32.0 / 9.0 * f - 64.0 * f2 * f - 80.0 / 9.0 * c2 * f2 * f2
    }

    /// `f″` given by the second order equation.
    pub fn fsecond(&self, f: f64, fp: f64) -> f64 {
        let f2 = f * f;
        (1.75 * fp * fp + 4.0 / 3.0 * f2 - 4.0 * f2 * f2 - 4.0 / 3.0 * self.c2() * f2 * f2 * f) / f
    }

    /// Directrix curvature `k = f √(1 + c² f)`.
    pub fn curvature(&self, f: f64) -> f64 {
        f * (1.0 + self.c2() * f).sqrt()
    }

    /// Directrix torsion `τ = c f′ / (2 √f (1 + c² f))`.
    pub fn torsion(&self, f: f64, fp: f64) -> f64 {
        self.c * fp / (2.0 * f.sqrt() * (1.0 + self.c2() * f))
    }

    /// Curvature of the circles swept by the directrix, `(3C/(2√2)) f^{3/4}`.
    pub fn kappa_hat(&self, f: f64) -> f64 {
        3.0 * self.big_c / (2.0 * SQRT_2) * f.powf(0.75)
    }
}

/// `f P′(f)/2 − (7/4) f′² − (4/3) f² + 4 f⁴ + (4/3) c² f⁵`, the defect of
/// the second order equation when `f″` is given.
pub fn second_order_residual(f: f64, fp: f64, fsecond: f64, params: &ModelParams) -> f64 {
    let f2 = f * f;
    fsecond * f - 1.75 * fp * fp - 4.0 / 3.0 * f2 + 4.0 * f2 * f2 + 4.0 / 3.0 * params.c2() * f2 * f2 * f
}

/// `C²` solved from `f′² = P(f)` at one point, given `c²`.
pub fn big_c2_from_state(f: f64, fp: f64, c2: f64) -> f64 {
    let f2 = f * f;
    (fp * fp + 16.0 / 9.0 * f2 + 16.0 * f2 * f2 + 16.0 / 9.0 * c2 * f2 * f2 * f) / (2.0 * f2 * f * f.sqrt())
}

/// `P(f)`, rejecting `f ≤ 0`.
pub fn poly_p(f: f64, params: &ModelParams) -> Result<f64> {
    if !(f > 0.0) {
        return Err(Error::InvalidParams(format!("f={f} must be positive")));
    }
    Ok(params.poly(f))
}

/// A maximal interval of `f` on which `P > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FWindow {
    pub f_lo: f64,
    pub f_hi: f64,
}

impl FWindow {
    pub fn width(&self) -> f64 {
        self.f_hi - self.f_lo
    }

    pub fn contains(&self, f: f64) -> bool {
        f > self.f_lo && f < self.f_hi
    }
}

const ROOT_TOL: f64 = 1e-15;

/// Root-finds the zeros of `P` on either side of `f_seed`.
///
/// With `s = √f`, `P = s⁴ q(s)` and `q` has two sign changes in its
/// coefficients, so `P` has at most two positive roots and the window is
/// unique.
pub fn admissible_window(params: &ModelParams, f_seed: f64) -> Result<FWindow> {
    let p_seed = poly_p(f_seed, params)?;
    if !(p_seed > 0.0) {
        return Err(Error::OutsideWindow { f: f_seed, p: p_seed });
    }
    let p = |f: f64| params.poly(f);
    let mut lo = f_seed;
    while p(lo) > 0.0 {
        lo *= 0.5;
    }
    let mut hi = f_seed;
    while p(hi) > 0.0 {
        hi *= 2.0;
    }
    let f_lo = odecore::find_root(p, lo, 2.0 * lo, ROOT_TOL * f_seed)?;
    let f_hi = odecore::find_root(p, 0.5 * hi, hi, ROOT_TOL * f_seed)?;
    Ok(FWindow { f_lo, f_hi })
}

/// The window of `P` if it has one, found from the maximum of `P/f²`.
pub fn find_window(params: &ModelParams) -> Result<Option<FWindow>> {
    // q(s) = 2C²s³ − 16/9 − 16s⁴ − (16/9)c²s⁶ peaks where g vanishes
    let (bc2, c2) = (params.big_c2(), params.c2());
    let g = |s: f64| 6.0 * bc2 - 64.0 * s - 32.0 / 3.0 * c2 * s * s * s;
    let mut hi = 1.0;
    while g(hi) > 0.0 {
        hi *= 2.0;
    }
    let s = odecore::find_root(g, 0.0, hi, 1e-15)?;
    let f = s * s;
    if params.poly(f) > 0.0 {
        admissible_window(params, f).map(Some)
    } else {
        Ok(None)
    }
}

/// Taylor coefficients `a₀..a₄` of the solution through `(f, f′)`.
fn taylor(params: &ModelParams, f: f64, fp: f64) -> [f64; 5] {
    let mut a = [f, fp, 0.0, 0.0, 0.0];
    let c2 = params.c2();
    for n in 0..3 {
        let d1 = derive(&a);
        let d2 = derive(&d1);
        let f2 = mul(&a, &a);
        let f4 = mul(&f2, &f2);
        let f5 = mul(&f4, &a);
        let dd = mul(&d1, &d1);
        let rhs = 1.75 * dd[n] + 4.0 / 3.0 * f2[n] - 4.0 * f4[n] - 4.0 / 3.0 * c2 * f5[n];
        let lhs = mul(&a, &d2)[n];
        a[n + 2] = (rhs - lhs) / (a[0] * ((n + 2) * (n + 1)) as f64);
    }
    a
}

fn derive(a: &[f64; 5]) -> [f64; 5] {
    let mut d = [0.0; 5];
    for i in 1..5 {
        d[i - 1] = i as f64 * a[i];
    }
    d
}

fn mul(a: &[f64; 5], b: &[f64; 5]) -> [f64; 5] {
    let mut r = [0.0; 5];
    for i in 0..5 {
        for j in 0..5 - i {
            r[i + j] += a[i] * b[j];
        }
    }
    r
}

fn div(a: &[f64; 5], b: &[f64; 5]) -> [f64; 5] {
    let mut q = [0.0; 5];
    for n in 0..5 {
        let s: f64 = (0..n).map(|i| q[i] * b[n - i]).sum();
        q[n] = (a[n] - s) / b[0];
    }
    q
}

/// `(κ, κ′, κ″, κ‴)` of `κ = 3f′/(4f)` along the solution through `(f, f′)`,
/// differentiated through the second order equation.
pub fn kappa_jet(params: &ModelParams, f: f64, fp: f64) -> [f64; 4] {
    let a = taylor(params, f, fp);
    let mut k = div(&derive(&a), &a);
    k.iter_mut().for_each(|v| *v *= 0.75);
    [k[0], k[1], 2.0 * k[2], 6.0 * k[3]]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileSample {
    pub u: f64,
    pub f: f64,
    pub fprime: f64,
    pub kappa: f64,
    pub k: f64,
    pub tau: f64,
    pub kappa_hat: f64,
    pub residual_ode: f64,
    pub residual_fi: f64,
}

impl ProfileSample {
    pub fn new(params: &ModelParams, u: f64, f: f64, fprime: f64) -> Self {
        let fsecond = 0.5 * params.poly_derivative(f);
        Self {
            u,
            f,
            fprime,
            kappa: 0.75 * fprime / f,
            k: params.curvature(f),
            tau: params.torsion(f, fprime),
            kappa_hat: params.kappa_hat(f),
            residual_ode: second_order_residual(f, fprime, fsecond, params),
            residual_fi: fprime * fprime - params.poly(f),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileStop {
    Requested,
    /// `P(f)` fell to the turning-point guard.
    TurningPoint,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileOptions {
    pub tolerances: Tolerances,
    /// Relative turning-point guard; integration stops once
    /// `P(f) < eps_p · max(1, P(f₀))`.
    pub eps_p: f64,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        Self {
            tolerances: Tolerances::new(1e-12, 1e-14),
            eps_p: 1e-9,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ProfileSolution {
    pub params: ModelParams,
    pub samples: Vec<ProfileSample>,
    pub u_max: f64,
    pub stop: ProfileStop,
    trajectory: Trajectory,
}

/// Integrates `(f, f′)` from `f(0) = f0`, `f′(0) = √P(f0)` towards
/// `u_max_request`, which may be negative.
pub fn integrate_profile(params: &ModelParams, f0: f64, u_max_request: f64, options: &ProfileOptions) -> Result<ProfileSolution> {
    let p0 = poly_p(f0, params)?;
    let guard = options.eps_p * p0.max(1.0);
    if !(p0 > guard) {
        return Err(Error::OutsideWindow { f: f0, p: p0 });
    }
    let pr = *params;
    let rhs = move |_u: f64, y: &[f64], dy: &mut [f64]| {
        dy[0] = y[1];
        dy[1] = pr.fsecond(y[0], y[1]);
    };
    let problem = OdeProblem::new(rhs, 0.0, u_max_request, vec![f0, p0.sqrt()])?;
    let events = [
        EventSpec::new(
            move |_u, y: &[f64]| if y[0] > 0.0 { pr.poly(y[0]) - guard } else { -guard },
            Direction::Falling,
        ),
        EventSpec::new(|_u, y: &[f64]| y[1], Direction::Falling),
    ];
    let sol = odecore::integrate(&problem, options.tolerances, &events)?;
    let trajectory = sol.trajectory;
    let samples = trajectory
        .states()
        .map(|(u, y)| ProfileSample::new(params, u, y[0], y[1]))
        .collect();
    Ok(ProfileSolution {
        params: *params,
        samples,
        u_max: trajectory.u_last(),
        stop: if sol.event.is_some() {
            ProfileStop::TurningPoint
        } else {
            ProfileStop::Requested
        },
        trajectory,
    })
}

impl ProfileSolution {
    pub fn covers(&self, u: f64) -> bool {
        self.trajectory.covers(u)
    }

    /// `(f, f′)` at `u` from the dense output; extrapolates outside the range.
    pub fn state_at(&self, u: f64) -> (f64, f64) {
        let mut y = [0.0; 2];
        self.trajectory.eval_into(u, &mut y);
        (y[0], y[1])
    }

    pub fn sample_at(&self, u: f64) -> Option<ProfileSample> {
        if !self.covers(u) {
            return None;
        }
        let (f, fp) = self.state_at(u);
        Some(ProfileSample::new(&self.params, u, f, fp))
    }

    /// `n` samples evenly spaced between `0` and `u_max`.
    pub fn resample(&self, n: usize) -> Vec<ProfileSample> {
        (0..n)
            .filter_map(|i| {
                let u = if n == 1 { 0.0 } else { self.u_max * i as f64 / (n - 1) as f64 };
                self.sample_at(u)
            })
            .collect()
    }

    /// Largest `|f′² − P(f)|` over the stored samples.
    pub fn max_first_integral_defect(&self) -> f64 {
        self.samples.iter().map(|s| s.residual_fi.abs()).fold(0.0, f64::max)
    }
}
