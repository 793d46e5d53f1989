use super::{EventHit, EventSpec, OdeError, OdeProblem, Segment, Solution, Tolerances, Trajectory};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

// continuous extension (Shampine), order 4
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

/// Controller settings beyond the tolerances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorOptions {
    pub tolerances: Tolerances,
    /// First trial step magnitude; `None` selects one automatically.
    pub initial_step: Option<f64>,
    /// Largest allowed step magnitude; `None` means the whole interval.
    pub max_step: Option<f64>,
    pub max_steps: usize,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self::from(Tolerances::default())
    }
}

impl From<Tolerances> for IntegratorOptions {
    fn from(tolerances: Tolerances) -> Self {
        Self {
            tolerances,
            initial_step: None,
            max_step: None,
            max_steps: 1_000_000,
        }
    }
}

/// Integrates `problem` with the given tolerances, stopping at the first
/// event if any fires.
pub fn integrate<F>(problem: &OdeProblem<F>, tolerances: Tolerances, events: &[EventSpec<'_>]) -> Result<Solution, OdeError>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    integrate_with(problem, &IntegratorOptions::from(tolerances), events)
}

fn eval_rhs<F>(rhs: &F, u: f64, y: &[f64], out: &mut [f64]) -> Result<(), OdeError>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    rhs(u, y, out);
    if out.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(OdeError::NonFinite { u })
    }
}

fn error_norm(err: &[f64], y0: &[f64], y1: &[f64], tol: &Tolerances) -> f64 {
    let n = err.len() as f64;
    let sum: f64 = err
        .iter()
        .zip(y0.iter().zip(y1))
        .map(|(e, (a, b))| {
            let sc = tol.abs + tol.rel * a.abs().max(b.abs());
            (e / sc).powi(2)
        })
        .sum();
    (sum / n).sqrt()
}

/// Starting step heuristic from Hairer, Nørsett & Wanner.
fn initial_step<F>(rhs: &F, u0: f64, y0: &[f64], f0: &[f64], dir: f64, h_max: f64, tol: &Tolerances) -> Result<f64, OdeError>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    let dim = y0.len();
    let sc: Vec<f64> = y0.iter().map(|y| tol.abs + tol.rel * y.abs()).collect();
    let rms = |v: &[f64]| (v.iter().zip(&sc).map(|(a, s)| (a / s).powi(2)).sum::<f64>() / dim as f64).sqrt();
    let d0 = rms(y0);
    let d1 = rms(f0);
    let mut h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h = h.min(h_max);
    let y1: Vec<f64> = y0.iter().zip(f0).map(|(y, f)| y + dir * h * f).collect();
    let mut f1 = vec![0.0; dim];
    eval_rhs(rhs, u0 + dir * h, &y1, &mut f1)?;
    let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
    let d2 = rms(&diff) / h;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(1.0 / 5.0)
    };
    Ok((100.0 * h).min(h1).min(h_max))
}

/// Integrates `problem` with full control over the step-size controller.
pub fn integrate_with<F>(problem: &OdeProblem<F>, options: &IntegratorOptions, events: &[EventSpec<'_>]) -> Result<Solution, OdeError>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    let tol = options.tolerances;
    tol.validate()?;
    let rhs = &problem.rhs;
    let dim = problem.dimension();
    let dir = problem.direction();
    let u_end = problem.u_end;
    let span = (u_end - problem.u_start).abs();
    let h_max = options.max_step.map_or(span, |m| m.abs().min(span));

    let mut u = problem.u_start;
    let mut y = problem.initial_state.clone();
    let mut k1 = vec![0.0; dim];
    eval_rhs(rhs, u, &y, &mut k1)?;

    let mut h = match options.initial_step {
        Some(h0) => h0.abs().min(h_max),
        None => initial_step(rhs, u, &y, &k1, dir, h_max, &tol)?,
    };

    let mut trajectory = Trajectory::new(dim, u, &y);
    let mut g_prev: Vec<f64> = events.iter().map(|e| (e.indicator)(u, &y)).collect();

    let (mut k2, mut k3, mut k4, mut k5, mut k6, mut k7) = (
        vec![0.0; dim],
        vec![0.0; dim],
        vec![0.0; dim],
        vec![0.0; dim],
        vec![0.0; dim],
        vec![0.0; dim],
    );
    let mut ytmp = vec![0.0; dim];
    let mut ynew = vec![0.0; dim];
    let mut err = vec![0.0; dim];
    let mut steps = 0usize;
    let mut last_rejected = false;

    while (u_end - u) * dir > 0.0 {
        if steps >= options.max_steps {
            return Err(OdeError::TooManySteps { steps, u });
        }
        let remaining = (u_end - u).abs();
        let mut last = false;
        if h >= remaining {
            h = remaining;
            last = true;
        }
        if h <= 16.0 * f64::EPSILON * u.abs().max(1.0) {
            return Err(OdeError::StepUnderflow { u });
        }
        let hs = dir * h;

        for i in 0..dim {
            ytmp[i] = y[i] + hs * A21 * k1[i];
        }
        eval_rhs(rhs, u + C2 * hs, &ytmp, &mut k2)?;
        for i in 0..dim {
            ytmp[i] = y[i] + hs * (A31 * k1[i] + A32 * k2[i]);
        }
        eval_rhs(rhs, u + C3 * hs, &ytmp, &mut k3)?;
        for i in 0..dim {
            ytmp[i] = y[i] + hs * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        eval_rhs(rhs, u + C4 * hs, &ytmp, &mut k4)?;
        for i in 0..dim {
            ytmp[i] = y[i] + hs * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        eval_rhs(rhs, u + C5 * hs, &ytmp, &mut k5)?;
        for i in 0..dim {
            ytmp[i] = y[i] + hs * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        let u_new = if last { u_end } else { u + hs };
        eval_rhs(rhs, u_new, &ytmp, &mut k6)?;
        for i in 0..dim {
            ynew[i] = y[i] + hs * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        eval_rhs(rhs, u_new, &ynew, &mut k7)?;
        for i in 0..dim {
            err[i] = hs * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        }
        let en = error_norm(&err, &y, &ynew, &tol);
        steps += 1;

        if !en.is_finite() {
            return Err(OdeError::NonFinite { u });
        }

        if en <= 1.0 {
            let mut coeffs = vec![0.0; 5 * dim];
            for i in 0..dim {
                let ydiff = ynew[i] - y[i];
                let bspl = hs * k1[i] - ydiff;
                coeffs[i] = y[i];
                coeffs[dim + i] = ydiff;
                coeffs[2 * dim + i] = bspl;
                coeffs[3 * dim + i] = ydiff - hs * k7[i] - bspl;
                coeffs[4 * dim + i] = hs * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
            }
            let u_prev = u;
            trajectory.push(u_new, &ynew, Segment { u0: u, h: hs, coeffs });
            u = u_new;
            std::mem::swap(&mut y, &mut ynew);
            std::mem::swap(&mut k1, &mut k7);

            if let Some(hit) = detect_event(events, &mut g_prev, &trajectory, u_prev, u, &y, tol.abs) {
                trajectory.truncate_at(hit.u);
                return Ok(Solution {
                    trajectory,
                    event: Some(hit),
                });
            }

            let mut fac = SAFETY * en.max(1e-10).powf(-0.2);
            fac = fac.clamp(FAC_MIN, FAC_MAX);
            if last_rejected {
                fac = fac.min(1.0);
            }
            h = (h * fac).min(h_max);
            last_rejected = false;
        } else {
            let fac = (SAFETY * en.powf(-0.2)).clamp(FAC_MIN, 1.0);
            h *= fac;
            last_rejected = true;
        }
    }

    Ok(Solution { trajectory, event: None })
}

/// Checks every event over the step just accepted and localizes the
/// earliest crossing by bisection on the dense output.
fn detect_event(
    events: &[EventSpec<'_>],
    g_prev: &mut [f64],
    trajectory: &Trajectory,
    u_prev: f64,
    u_new: f64,
    y_new: &[f64],
    u_tol: f64,
) -> Option<EventHit> {
    let mut best: Option<EventHit> = None;
    let dir = (u_new - u_prev).signum();
    let mut buf = vec![0.0; trajectory.dimension()];
    for (index, event) in events.iter().enumerate() {
        let g_new = (event.indicator)(u_new, y_new);
        if event.triggered(g_prev[index], g_new) {
            // invariant: event not triggered at `lo`, triggered at `hi`
            let g_lo0 = g_prev[index];
            let (mut lo, mut hi) = (u_prev, u_new);
            while (hi - lo).abs() > u_tol && (hi - lo).abs() > 4.0 * f64::EPSILON * hi.abs().max(1.0) {
                let mid = 0.5 * (lo + hi);
                trajectory.eval_into(mid, &mut buf);
                let g_mid = (event.indicator)(mid, &buf);
                if event.triggered(g_lo0, g_mid) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            let earlier = best.as_ref().is_none_or(|b| (lo - b.u) * dir < 0.0);
            if earlier {
                best = Some(EventHit {
                    index,
                    u: lo,
                    state: trajectory.eval(lo),
                });
            }
        }
        g_prev[index] = g_new;
    }
    best
}
