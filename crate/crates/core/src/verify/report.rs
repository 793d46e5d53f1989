use std::fmt;

/// Whether an entry's tolerance caps its largest value or floors its smallest.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bound {
    Upper,
    Lower,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportEntry {
    pub name: &'static str,
    /// The identity being checked, in words.
    pub identity: &'static str,
    /// Largest value, or the smallest one for [`Bound::Lower`].
    pub max: f64,
    pub mean: f64,
    pub tol: f64,
    pub bound: Bound,
    pub pass: bool,
}

impl ReportEntry {
    /// Passes when every value is finite and at most `tol`.
    pub fn upper(name: &'static str, identity: &'static str, values: &[f64], tol: f64) -> Self {
        let (extreme, mean, finite) = summarize(values, f64::max, f64::NEG_INFINITY);
        Self {
            name,
            identity,
            max: extreme,
            mean,
            tol,
            bound: Bound::Upper,
            pass: finite && extreme <= tol,
        }
    }

    /// Passes when every value is finite and strictly above `floor`.
    pub fn lower(name: &'static str, identity: &'static str, values: &[f64], floor: f64) -> Self {
        let (extreme, mean, finite) = summarize(values, f64::min, f64::INFINITY);
        Self {
            name,
            identity,
            max: extreme,
            mean,
            tol: floor,
            bound: Bound::Lower,
            pass: finite && extreme > floor,
        }
    }
}

fn summarize(values: &[f64], pick: fn(f64, f64) -> f64, init: f64) -> (f64, f64, bool) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN, false);
    }
    let finite = values.iter().all(|v| v.is_finite());
    if !finite {
        return (f64::NAN, f64::NAN, false);
    }
    let extreme = values.iter().copied().fold(init, pick);
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    (extreme, mean, true)
}

impl fmt::Display for ReportEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "name={} max={:.14e} mean={:.14e} tol={:.14e} pass={}",
            self.name,
            self.max,
            self.mean,
            self.tol,
            u8::from(self.pass)
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub entries: Vec<ReportEntry>,
}

impl VerificationReport {
    pub fn pass(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }

    pub fn entry(&self, name: &str) -> Option<&ReportEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &ReportEntry> {
        self.entries.iter().filter(|e| !e.pass)
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.entries {
            writeln!(f, "{e}")?;
        }
        Ok(())
    }
}
