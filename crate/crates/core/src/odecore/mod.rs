//! Explicit adaptive Runge–Kutta integration and bracketed root finding.
//!
//! The integrator is the Dormand–Prince 5(4) pair with its fourth-order
//! continuous extension. Every accepted step stores its interpolation
//! coefficients, so a [`Trajectory`] can be evaluated anywhere between its
//! first and last node. Terminal events are located by bisection on the
//! dense output.

mod dopri;
mod root;

pub use dopri::{integrate, integrate_with, IntegratorOptions};
pub use root::find_root;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OdeError {
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("invalid tolerances: rel_tol={rel} abs_tol={abs}")]
    InvalidTolerances { rel: f64, abs: f64 },
    #[error("step size underflow at u={u}")]
    StepUnderflow { u: f64 },
    #[error("non-finite right-hand side at u={u}")]
    NonFinite { u: f64 },
    #[error("maximum number of steps ({steps}) reached at u={u}")]
    TooManySteps { steps: usize, u: f64 },
    #[error("invalid bracket [{a}, {b}]: f(a)={fa}, f(b)={fb} have the same sign")]
    InvalidBracket { a: f64, b: f64, fa: f64, fb: f64 },
}

/// Relative and absolute error tolerances of the step-size controller.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub rel: f64,
    pub abs: f64,
}

impl Tolerances {
    pub const fn new(rel: f64, abs: f64) -> Self {
        Self { rel, abs }
    }

    pub fn validate(&self) -> Result<(), OdeError> {
        if self.rel > 0.0 && self.abs > 0.0 && self.rel.is_finite() && self.abs.is_finite() {
            Ok(())
        } else {
            Err(OdeError::InvalidTolerances {
                rel: self.rel,
                abs: self.abs,
            })
        }
    }
}

impl Default for Tolerances {
    fn default() -> Self {
        Self::new(1e-10, 1e-12)
    }
}

/// An initial value problem `y' = rhs(u, y)`, `y(u_start) = initial_state`,
/// integrated towards `u_end` (which may lie on either side of `u_start`).
pub struct OdeProblem<F> {
    pub rhs: F,
    pub u_start: f64,
    pub u_end: f64,
    pub initial_state: Vec<f64>,
}

impl<F> OdeProblem<F>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    pub fn new(rhs: F, u_start: f64, u_end: f64, initial_state: Vec<f64>) -> Result<Self, OdeError> {
        if initial_state.is_empty() {
            return Err(OdeError::InvalidProblem("dimension must be at least 1".into()));
        }
        if !(u_start.is_finite() && u_end.is_finite()) || u_start == u_end {
            return Err(OdeError::InvalidProblem(format!(
                "u_start={u_start} and u_end={u_end} must be finite and distinct"
            )));
        }
        if initial_state.iter().any(|v| !v.is_finite()) {
            return Err(OdeError::InvalidProblem("initial state is not finite".into()));
        }
        Ok(Self {
            rhs,
            u_start,
            u_end,
            initial_state,
        })
    }

    pub fn dimension(&self) -> usize {
        self.initial_state.len()
    }

    fn direction(&self) -> f64 {
        (self.u_end - self.u_start).signum()
    }
}

/// Crossing direction an event reacts to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Any,
    /// Indicator goes from negative to non-negative.
    Rising,
    /// Indicator goes from positive to non-positive.
    Falling,
}

pub type Indicator<'a> = Box<dyn Fn(f64, &[f64]) -> f64 + Sync + 'a>;

/// A terminal event: integration stops at the first sign change of
/// `indicator` matching `direction`.
pub struct EventSpec<'a> {
    pub indicator: Indicator<'a>,
    pub direction: Direction,
}

impl<'a> EventSpec<'a> {
    pub fn new(indicator: impl Fn(f64, &[f64]) -> f64 + Sync + 'a, direction: Direction) -> Self {
        Self {
            indicator: Box::new(indicator),
            direction,
        }
    }

    fn triggered(&self, before: f64, after: f64) -> bool {
        match self.direction {
            Direction::Rising => before < 0.0 && after >= 0.0,
            Direction::Falling => before > 0.0 && after <= 0.0,
            Direction::Any => (before < 0.0 && after >= 0.0) || (before > 0.0 && after <= 0.0),
        }
    }
}

/// Location of the first event that fired.
#[derive(Debug, Clone, PartialEq)]
pub struct EventHit {
    /// Index of the event in the list passed to the integrator.
    pub index: usize,
    pub u: f64,
    pub state: Vec<f64>,
}

/// Output of an integration run.
#[derive(Debug, Clone)]
pub struct Solution {
    pub trajectory: Trajectory,
    pub event: Option<EventHit>,
}

#[derive(Debug, Clone)]
struct Segment {
    u0: f64,
    h: f64,
    // five coefficient rows of length `dim`, laid out contiguously
    coeffs: Vec<f64>,
}

/// Accepted nodes, states, and the piecewise dense-output interpolant.
#[derive(Debug, Clone)]
pub struct Trajectory {
    dim: usize,
    nodes: Vec<f64>,
    states: Vec<f64>,
    segments: Vec<Segment>,
}

impl Trajectory {
    fn new(dim: usize, u0: f64, y0: &[f64]) -> Self {
        Self {
            dim,
            nodes: vec![u0],
            states: y0.to_vec(),
            segments: Vec::new(),
        }
    }

    fn push(&mut self, u: f64, y: &[f64], segment: Segment) {
        self.nodes.push(u);
        self.states.extend_from_slice(y);
        self.segments.push(segment);
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn state(&self, index: usize) -> &[f64] {
        &self.states[index * self.dim..(index + 1) * self.dim]
    }

    pub fn states(&self) -> impl Iterator<Item = (f64, &[f64])> + '_ {
        self.nodes.iter().copied().zip(self.states.chunks_exact(self.dim))
    }

    pub fn u_first(&self) -> f64 {
        self.nodes[0]
    }

    pub fn u_last(&self) -> f64 {
        *self.nodes.last().expect("trajectory has at least one node")
    }

    /// Whether `u` lies in the closed range covered by the trajectory.
    pub fn covers(&self, u: f64) -> bool {
        let (a, b) = (self.u_first(), self.u_last());
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        u >= lo && u <= hi
    }

    fn segment_index(&self, u: f64) -> usize {
        let n = self.segments.len();
        if n <= 1 {
            return 0;
        }
        let forward = self.u_last() >= self.u_first();
        // number of interior nodes passed
        let interior = &self.nodes[1..n];
        let passed = if forward {
            interior.partition_point(|&x| x <= u)
        } else {
            interior.partition_point(|&x| x >= u)
        };
        passed.min(n - 1)
    }

    /// Evaluates the dense interpolant at `u`, writing into `out`.
    ///
    /// Values of `u` outside the covered range are extrapolated from the
    /// nearest segment.
    pub fn eval_into(&self, u: f64, out: &mut [f64]) {
        if self.segments.is_empty() {
            out.copy_from_slice(self.state(0));
            return;
        }
        let seg = &self.segments[self.segment_index(u)];
        let th = (u - seg.u0) / seg.h;
        let th1 = 1.0 - th;
        let d = self.dim;
        let c = &seg.coeffs;
        for i in 0..d {
            out[i] = c[i] + th * (c[d + i] + th1 * (c[2 * d + i] + th * (c[3 * d + i] + th1 * c[4 * d + i])));
        }
    }

    pub fn eval(&self, u: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.eval_into(u, &mut out);
        out
    }

    /// Derivative of the dense interpolant with respect to `u`.
    pub fn derivative_into(&self, u: f64, out: &mut [f64]) {
        if self.segments.is_empty() {
            out.iter_mut().for_each(|v| *v = 0.0);
            return;
        }
        let seg = &self.segments[self.segment_index(u)];
        let th = (u - seg.u0) / seg.h;
        let th1 = 1.0 - th;
        let d = self.dim;
        let c = &seg.coeffs;
        for i in 0..d {
            let (r2, r3, r4, r5) = (c[d + i], c[2 * d + i], c[3 * d + i], c[4 * d + i]);
            // y = r1 + th*(r2 + th1*(r3 + th*(r4 + th1*r5)))
            let inner = r4 + th1 * r5;
            let d_inner = -r5;
            let mid = r3 + th * inner;
            let d_mid = inner + th * d_inner;
            let outer = r2 + th1 * mid;
            let d_outer = -mid + th1 * d_mid;
            out[i] = (outer + th * d_outer) / seg.h;
        }
    }

    /// Drops everything after `u` and ends the trajectory at the
    /// interpolated state there.
    fn truncate_at(&mut self, u: f64) {
        let idx = self.segment_index(u);
        let y = self.eval(u);
        self.segments.truncate(idx + 1);
        self.nodes.truncate(idx + 1);
        self.states.truncate((idx + 1) * self.dim);
        if self.u_last() != u {
            self.nodes.push(u);
            self.states.extend_from_slice(&y);
        } else {
            // u coincides with an existing node; keep the stored state
            self.segments.truncate(idx);
        }
    }
}
