//! The intrinsic pipeline: the third order ODE for the curvature κ of the
//! level curves of the Gaussian curvature, and the abstract surface it
//! determines.
//!
//! A solution κ on an interval where the validity inequalities hold gives
//! the metric `du² + θ(u)² ds²` with `θ = exp ∫κ`, Gaussian curvature
//! `K = −κ² − κ′`, mean curvature `f_K` and the constant `c²`.

use crate::odecore::{self, Direction, EventSpec, OdeProblem, Tolerances, Trajectory};
use crate::profile::{big_c2_from_state, ModelParams};
use crate::{Error, Result};

/// Values of κ, κ′ and κ″ at `u = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialTriple {
    pub kappa0: f64,
    pub dkappa0: f64,
    pub ddkappa0: f64,
}

impl InitialTriple {
    pub const fn new(kappa0: f64, dkappa0: f64, ddkappa0: f64) -> Self {
        Self { kappa0, dkappa0, ddkappa0 }
    }

    pub fn is_finite(&self) -> bool {
        self.kappa0.is_finite() && self.dkappa0.is_finite() && self.ddkappa0.is_finite()
    }
}

/// Signed margins of the validity inequalities at one point.
///
/// Every margin is positive exactly when its inequality holds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Margins {
    /// `κ`.
    pub kappa: f64,
    /// `κ′ + 1 + κ²`.
    pub dkappa: f64,
    /// `κ″ − (−4κ − 6κκ′ − 4κ³)`.
    pub ddkappa_lower: f64,
    /// `(−8κ − 14κκ′ − 8κ³)/3 − κ″`.
    pub ddkappa_upper: f64,
}

impl Margins {
    pub fn at(kappa: f64, dkappa: f64, ddkappa: f64) -> Self {
        let (lo, hi) = ddkappa_bounds(kappa, dkappa);
        Self {
            kappa,
            dkappa: dkappa + 1.0 + kappa * kappa,
            ddkappa_lower: ddkappa - lo,
            ddkappa_upper: hi - ddkappa,
        }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.kappa, self.dkappa, self.ddkappa_lower, self.ddkappa_upper]
    }

    pub fn min(&self) -> f64 {
        self.as_array().into_iter().fold(f64::INFINITY, f64::min)
    }

    pub fn all_positive(&self) -> bool {
        self.as_array().iter().all(|m| *m > 0.0)
    }
}

/// Admissibility verdict for an initial triple.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Admissibility {
    pub admissible: bool,
    pub margins: Margins,
    /// Open interval the second derivative must lie in.
    pub ddkappa_bounds: (f64, f64),
}

/// Bounds `(−4κ − 6κκ′ − 4κ³, (−8κ − 14κκ′ − 8κ³)/3)` on κ″.
pub fn ddkappa_bounds(kappa: f64, dkappa: f64) -> (f64, f64) {
    let k3 = kappa * kappa * kappa;
    let lo = -4.0 * kappa - 6.0 * kappa * dkappa - 4.0 * k3;
    let hi = (-8.0 * kappa - 14.0 * kappa * dkappa - 8.0 * k3) / 3.0;
    (lo, hi)
}

pub fn check_admissible(triple: InitialTriple) -> Admissibility {
    let margins = Margins::at(triple.kappa0, triple.dkappa0, triple.ddkappa0);
    Admissibility {
        admissible: triple.is_finite() && margins.all_positive(),
        margins,
        ddkappa_bounds: ddkappa_bounds(triple.kappa0, triple.dkappa0),
    }
}

/// κ‴ solved from `3κκ‴ + 26κ²κ″ − 3κ′κ″ + 72κ³κ′ + 32κ³ + 32κ⁵ = 0`.
pub fn kappa_rhs(kappa: f64, dkappa: f64, ddkappa: f64) -> Result<f64> {
    if kappa == 0.0 {
        return Err(Error::OutsideDomain("kappa = 0".into()));
    }
    Ok(kappa_rhs_unchecked(kappa, dkappa, ddkappa))
}

fn kappa_rhs_unchecked(k: f64, dk: f64, ddk: f64) -> f64 {
    let k2 = k * k;
    let k3 = k2 * k;
    (-26.0 * k2 * ddk + 3.0 * dk * ddk - 72.0 * k3 * dk - 32.0 * k3 - 32.0 * k3 * k2) / (3.0 * k)
}

/// Left side of the κ-equation in the chart where `f` decreases.
pub fn kappa2_residual(k: f64, dk: f64, ddk: f64, dddk: f64) -> f64 {
    let k2 = k * k;
    let k3 = k2 * k;
    3.0 * k * dddk + 26.0 * k2 * ddk - 3.0 * dk * ddk + 72.0 * k3 * dk + 32.0 * k3 + 32.0 * k3 * k2
}

/// Left side of the κ-equation in the chart where `f` increases.
pub fn kappa1_residual(k: f64, dk: f64, ddk: f64, dddk: f64) -> f64 {
    let k2 = k * k;
    let k3 = k2 * k;
    3.0 * k * dddk - 26.0 * k2 * ddk - 3.0 * dk * ddk + 72.0 * k3 * dk - 32.0 * k3 - 32.0 * k3 * k2
}

/// `κ″ + 6κκ′ + 4κ + 4κ³`, i.e. `4κ f_K²`.
fn d_term(k: f64, dk: f64, ddk: f64) -> f64 {
    ddk + 6.0 * k * dk + 4.0 * k + 4.0 * k * k * k
}

/// `f_K = sqrt((κ″ + 6κκ′ + 4κ + 4κ³)/(4κ))`.
pub fn f_k(k: f64, dk: f64, ddk: f64) -> f64 {
    (d_term(k, dk, ddk) / (4.0 * k)).sqrt()
}

/// `c² = −2√κ(3κ″ + 14κκ′ + 8κ + 8κ³)/(κ″ + 6κκ′ + 4κ + 4κ³)^{3/2}`.
pub fn c2_estimate(k: f64, dk: f64, ddk: f64) -> f64 {
    let d = d_term(k, dk, ddk);
    let n = 3.0 * ddk + 14.0 * k * dk + 8.0 * k + 8.0 * k * k * k;
    -2.0 * k.sqrt() * n / (d * d.sqrt())
}

/// The unique positive root of `1 − K − 3f² − c²f³ = 0`.
pub fn f_from_k(gauss: f64, c2: f64, tol: f64) -> Result<f64> {
    if !(gauss < 1.0) {
        return Err(Error::InvalidParams(format!("K={gauss} must be below 1")));
    }
    if !(c2 > 0.0 && c2.is_finite()) {
        return Err(Error::InvalidParams(format!("c2={c2} must be positive")));
    }
    let h = |x: f64| 1.0 - gauss - 3.0 * x * x - c2 * x * x * x;
    let mut hi = 1.0;
    while h(hi) > 0.0 {
        hi *= 2.0;
    }
    Ok(odecore::find_root(h, 0.0, hi, tol)?)
}

/// The constants `(c, C)` and the starting value `f₀` of the profile that
/// realizes `triple` at `u = 0`, read in the chart where `f′ = (4/3) κ f`.
pub fn matched_params(triple: InitialTriple) -> Result<(ModelParams, f64)> {
    let adm = check_admissible(triple);
    if !adm.admissible {
        return Err(Error::Inadmissible(format!("{triple:?}")));
    }
    let InitialTriple {
        kappa0: k,
        dkappa0: dk,
        ddkappa0: ddk,
    } = triple;
    let f = f_k(k, dk, ddk);
    let c2 = c2_estimate(k, dk, ddk);
    let fp = 4.0 / 3.0 * k * f;
    Ok((ModelParams::from_squares(c2, big_c2_from_state(f, fp, c2))?, f))
}

/// Which of the two reflected coordinate charts a solution is written in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Chart {
    /// `K` increases with `u`, `f` decreases.
    GaussIncreasing,
    /// `f` increases with `u`.
    MeanIncreasing,
}

impl Chart {
    fn sign(self) -> f64 {
        match self {
            Chart::GaussIncreasing => 1.0,
            Chart::MeanIncreasing => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntrinsicSample {
    pub u: f64,
    pub kappa: f64,
    pub dkappa: f64,
    pub ddkappa: f64,
    pub theta: f64,
    pub gauss: f64,
    pub f_k: f64,
    pub c2: f64,
}

impl IntrinsicSample {
    /// Builds a sample in the `K`-increasing chart.
    pub fn from_state(u: f64, kappa: f64, dkappa: f64, ddkappa: f64, log_theta: f64) -> Self {
        Self {
            u,
            kappa,
            dkappa,
            ddkappa,
            theta: log_theta.exp(),
            gauss: -kappa * kappa - dkappa,
            f_k: f_k(kappa, dkappa, ddkappa),
            c2: c2_estimate(kappa, dkappa, ddkappa),
        }
    }

    /// `−2κκ′ − κ″`, positive exactly when `K′ > 0` in the `K`-increasing chart.
    pub fn gauss_slope_margin(&self) -> f64 {
        -2.0 * self.kappa * self.dkappa - self.ddkappa
    }

    fn reflected(&self) -> Self {
        Self {
            u: -self.u,
            dkappa: -self.dkappa,
            ..*self
        }
    }
}

/// Why an integration run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stop {
    Requested,
    /// Index into [`Margins::as_array`] of the inequality that ran out.
    Validity(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntrinsicOptions {
    pub tolerances: Tolerances,
    /// Smallest margin accepted before the run is stopped.
    pub eps_valid: f64,
}

impl Default for IntrinsicOptions {
    fn default() -> Self {
        Self {
            tolerances: Tolerances::new(1e-12, 1e-14),
            eps_valid: 1e-4,
        }
    }
}

#[derive(Debug, Clone)]
pub struct IntrinsicSolution {
    pub samples: Vec<IntrinsicSample>,
    pub c2_reference: f64,
    pub u_max: f64,
    pub stop: Stop,
    pub chart: Chart,
    trajectory: Trajectory,
}

/// Integrates `(κ, κ′, κ″, log θ)` from `u = 0` towards `u_max_request`,
/// which may be negative.
pub fn integrate_intrinsic(triple: InitialTriple, u_max_request: f64, options: &IntrinsicOptions) -> Result<IntrinsicSolution> {
    let adm = check_admissible(triple);
    if !adm.admissible {
        return Err(Error::Inadmissible(format!("{triple:?}")));
    }
    if adm.margins.min() <= options.eps_valid {
        return Err(Error::Inadmissible(format!(
            "{triple:?} is within eps_valid={} of the boundary",
            options.eps_valid
        )));
    }
    let rhs = |_u: f64, y: &[f64], dy: &mut [f64]| {
        dy[0] = y[1];
        dy[1] = y[2];
        dy[2] = kappa_rhs_unchecked(y[0], y[1], y[2]);
        dy[3] = y[0];
    };
    let problem = OdeProblem::new(rhs, 0.0, u_max_request, vec![triple.kappa0, triple.dkappa0, triple.ddkappa0, 0.0])?;
    let eps = options.eps_valid;
    let events: Vec<EventSpec> = (0..4)
        .map(|i| {
            EventSpec::new(
                move |_u, y: &[f64]| Margins::at(y[0], y[1], y[2]).as_array()[i] - eps,
                Direction::Falling,
            )
        })
        .collect();
    let sol = odecore::integrate(&problem, options.tolerances, &events)?;
    let trajectory = sol.trajectory;
    let samples: Vec<IntrinsicSample> = trajectory
        .states()
        .map(|(u, y)| IntrinsicSample::from_state(u, y[0], y[1], y[2], y[3]))
        .collect();
    Ok(IntrinsicSolution {
        c2_reference: samples[0].c2,
        u_max: trajectory.u_last(),
        stop: sol.event.map_or(Stop::Requested, |e| Stop::Validity(e.index)),
        chart: Chart::GaussIncreasing,
        samples,
        trajectory,
    })
}

impl IntrinsicSolution {
    /// Largest `|c²(u)/c²(0) − 1|` over the stored samples.
    pub fn max_c2_drift(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| (s.c2 / self.c2_reference - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn covers(&self, u: f64) -> bool {
        self.trajectory.covers(self.chart.sign() * u)
    }

    /// Sample at an arbitrary `u` in the covered range, from the dense output.
    pub fn sample_at(&self, u: f64) -> Option<IntrinsicSample> {
        if !self.covers(u) {
            return None;
        }
        let s = self.chart.sign();
        let y = self.trajectory.eval(s * u);
        let sample = IntrinsicSample::from_state(s * u, y[0], y[1], y[2], y[3]);
        Some(match self.chart {
            Chart::GaussIncreasing => sample,
            Chart::MeanIncreasing => sample.reflected(),
        })
    }

    /// κ‴ at `u` from the derivative of the dense interpolant of κ″.
    pub fn dddkappa_at(&self, u: f64) -> Option<f64> {
        if !self.covers(u) {
            return None;
        }
        let s = self.chart.sign();
        let mut d = [0.0; 4];
        self.trajectory.derivative_into(s * u, &mut d);
        Some(s * d[2])
    }

    /// Initial triple read off the solution at `u`, in the `K`-increasing chart.
    pub fn triple_at(&self, u: f64) -> Option<InitialTriple> {
        let s = self.sample_at(u)?;
        let sign = self.chart.sign();
        Some(InitialTriple::new(s.kappa, sign * s.dkappa, s.ddkappa))
    }

    /// `n` samples evenly spaced between the first and last stored `u`.
    pub fn resample(&self, n: usize) -> Vec<IntrinsicSample> {
        let (a, b) = (self.samples[0].u, self.samples[self.samples.len() - 1].u);
        (0..n)
            .filter_map(|i| {
                let u = if n == 1 { a } else { a + (b - a) * i as f64 / (n - 1) as f64 };
                self.sample_at(u)
            })
            .collect()
    }

    /// Reflects `u ↦ −u`. Applied to a solution in the `K`-increasing chart
    /// this gives the chart in which `f_K` increases; applying it twice is
    /// the identity.
    pub fn to_f_chart(&self) -> IntrinsicSolution {
        let mut samples: Vec<IntrinsicSample> = self.samples.iter().map(IntrinsicSample::reflected).collect();
        samples.reverse();
        IntrinsicSolution {
            samples,
            c2_reference: self.c2_reference,
            u_max: -self.u_max,
            stop: self.stop,
            chart: match self.chart {
                Chart::GaussIncreasing => Chart::MeanIncreasing,
                Chart::MeanIncreasing => Chart::GaussIncreasing,
            },
            trajectory: self.trajectory.clone(),
        }
    }
}
