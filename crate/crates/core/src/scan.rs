//! Parameter scans over initial triples and over the constants `(c, C)`.
//!
//! Cells are independent. A cell that cannot be evaluated reports its own
//! status instead of failing the scan, and results come back in grid order.

use std::fmt;
use std::str::FromStr;

use crate::exec::{self, Exec};
use crate::intrinsic::{check_admissible, integrate_intrinsic, matched_params, InitialTriple, IntrinsicOptions};
use crate::profile::{find_window, ModelParams};
use crate::{Error, Result};

pub const DEFAULT_U_PROBE: f64 = 1.0;

/// Values along one scan axis, given as `min:max:count` or `a,b,c`.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis(pub Vec<f64>);

impl Axis {
    pub fn linspace(min: f64, max: f64, count: usize) -> Self {
        match count {
            0 => Self(Vec::new()),
            1 => Self(vec![min]),
            n => Self((0..n).map(|k| min + (max - min) * k as f64 / (n - 1) as f64).collect()),
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

fn number(s: &str) -> Result<f64> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| Error::InvalidParams(format!("'{s}' is not a number")))?;
    if !v.is_finite() {
        return Err(Error::InvalidParams(format!("'{s}' is not finite")));
    }
    Ok(v)
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Ok(Self(Vec::new()));
        }
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            [min, max, count] => {
                let count: usize = count
                    .trim()
                    .parse()
                    .map_err(|_| Error::InvalidParams(format!("'{count}' is not a count")))?;
                Ok(Self::linspace(number(min)?, number(max)?, count))
            }
            [_] => s.split(',').map(number).collect::<Result<Vec<_>>>().map(Self),
            _ => Err(Error::InvalidParams(format!("axis '{s}' must be min:max:count or a comma list"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellStatus {
    Ok,
    Inadmissible,
    Failed,
}

impl fmt::Display for CellStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CellStatus::Ok => "ok",
            CellStatus::Inadmissible => "inadmissible",
            CellStatus::Failed => "failed",
        })
    }
}

/// One initial triple. Numeric outputs are `NaN` unless `status` is `Ok`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TripleCell {
    pub triple: InitialTriple,
    pub admissible: bool,
    pub min_margin: f64,
    /// End of the validity interval, capped at `u_probe`.
    pub u_max: f64,
    pub c2: f64,
    pub big_c2: f64,
    pub status: CellStatus,
}

pub fn triple_cell(triple: InitialTriple, u_probe: f64, options: &IntrinsicOptions) -> TripleCell {
    let adm = check_admissible(triple);
    let mut cell = TripleCell {
        triple,
        admissible: adm.admissible,
        min_margin: adm.margins.min(),
        u_max: f64::NAN,
        c2: f64::NAN,
        big_c2: f64::NAN,
        status: CellStatus::Inadmissible,
    };
    if !adm.admissible {
        return cell;
    }
    let run = integrate_intrinsic(triple, u_probe, options).and_then(|sol| Ok((sol.u_max, matched_params(triple)?)));
    match run {
        Ok((u_max, (params, _))) => {
            cell.u_max = u_max;
            cell.c2 = params.c2();
            cell.big_c2 = params.big_c2();
            cell.status = CellStatus::Ok;
        }
        Err(_) => cell.status = CellStatus::Failed,
    }
    cell
}

/// Every cell of the product grid, `κ₀` slowest and `κ₀″` fastest.
pub fn scan_triples(kappa0: &Axis, dkappa0: &Axis, ddkappa0: &Axis, u_probe: f64, exec: Exec) -> Vec<TripleCell> {
    let mut triples = Vec::with_capacity(kappa0.len() * dkappa0.len() * ddkappa0.len());
    for &k in kappa0.values() {
        for &dk in dkappa0.values() {
            for &ddk in ddkappa0.values() {
                triples.push(InitialTriple::new(k, dk, ddk));
            }
        }
    }
    let options = IntrinsicOptions::default();
    exec::map(exec, &triples, |&t| triple_cell(t, u_probe, &options))
}

/// The positivity window of `P` at one `(c, C)`; `NaN` endpoints when empty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowCell {
    pub c: f64,
    pub big_c: f64,
    pub nonempty: bool,
    pub f_lo: f64,
    pub f_hi: f64,
    pub width: f64,
    pub status: CellStatus,
}

pub fn window_cell(c: f64, big_c: f64) -> WindowCell {
    let mut cell = WindowCell {
        c,
        big_c,
        nonempty: false,
        f_lo: f64::NAN,
        f_hi: f64::NAN,
        width: f64::NAN,
        status: CellStatus::Ok,
    };
    match ModelParams::new(c, big_c).and_then(|p| find_window(&p)) {
        Ok(Some(w)) => {
            cell.nonempty = true;
            cell.f_lo = w.f_lo;
            cell.f_hi = w.f_hi;
            cell.width = w.width();
        }
        Ok(None) => cell.width = 0.0,
        Err(_) => cell.status = CellStatus::Failed,
    }
    cell
}

/// Every `(c, C)` pair, `c` slowest.
pub fn scan_windows(c: &Axis, big_c: &Axis, exec: Exec) -> Vec<WindowCell> {
    let pairs: Vec<(f64, f64)> = c
        .values()
        .iter()
        .flat_map(|&a| big_c.values().iter().map(move |&b| (a, b)))
        .collect();
    exec::map(exec, &pairs, |&(a, b)| window_cell(a, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn axis_parsing() {
        assert_eq!("0:1:3".parse::<Axis>().unwrap(), Axis(vec![0.0, 0.5, 1.0]));
        assert_eq!("-7.9,-7,-6".parse::<Axis>().unwrap(), Axis(vec![-7.9, -7.0, -6.0]));
        assert_eq!("2:3:1".parse::<Axis>().unwrap(), Axis(vec![2.0]));
        assert!("".parse::<Axis>().unwrap().is_empty());
        assert!("1:2".parse::<Axis>().is_err());
        assert!("a,b".parse::<Axis>().is_err());
        assert!("0:1:x".parse::<Axis>().is_err());
    }

    #[test]
    fn line_through_anchor() {
        let cells = scan_triples(
            &Axis(vec![1.0]),
            &Axis(vec![0.0]),
            &Axis(vec![-7.9, -7.0, -6.0, -5.5, -5.0]),
            DEFAULT_U_PROBE,
            Exec::default(),
        );
        let admissible: Vec<bool> = cells.iter().map(|c| c.admissible).collect();
        assert_eq!(admissible, [true, true, true, true, false]);
        assert_eq!(cells[4].status, CellStatus::Inadmissible);
        assert!(cells[4].u_max.is_nan());
        let anchor = cells[2];
        assert_eq!(anchor.status, CellStatus::Ok);
        assert!((anchor.c2 - 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(anchor.u_max, DEFAULT_U_PROBE);
    }

    #[test]
    fn u_max_is_capped() {
        let cells = scan_triples(&Axis(vec![1.0]), &Axis(vec![0.0]), &Axis(vec![-6.0]), 0.3, Exec::default());
        assert_eq!(cells[0].u_max, 0.3);
    }

    #[test]
    fn empty_grid_gives_empty_table() {
        let e = Axis(Vec::new());
        assert!(scan_triples(&e, &Axis(vec![0.0]), &Axis(vec![-6.0]), 1.0, Exec::default()).is_empty());
        assert!(scan_windows(&Axis(vec![1.0]), &e, Exec::default()).is_empty());
    }

    #[test]
    fn reference_window_and_vanishing_c() {
        let r = ModelParams::reference();
        let cells = scan_windows(&Axis(vec![r.c]), &Axis(vec![1e-6, r.big_c]), Exec::default());
        assert!(!cells[0].nonempty && cells[0].width == 0.0);
        assert!(cells[1].nonempty);
        assert!(cells[1].f_lo < 0.5f64.sqrt() && 0.5f64.sqrt() < cells[1].f_hi);
    }

    #[test]
    fn admissible_triples_land_in_windows() {
        let cells = scan_triples(
            &"0.5:2:4".parse().unwrap(),
            &"-0.5:0.5:3".parse().unwrap(),
            &"-12:-1:12".parse().unwrap(),
            0.2,
            Exec::default(),
        );
        let ok: Vec<_> = cells.iter().filter(|c| c.status == CellStatus::Ok).collect();
        assert!(ok.len() >= 5);
        for cell in ok {
            let w = window_cell(cell.c2.sqrt(), cell.big_c2.sqrt());
            let f0 = crate::intrinsic::f_k(cell.triple.kappa0, cell.triple.dkappa0, cell.triple.ddkappa0);
            assert!(w.nonempty && f0 > w.f_lo && f0 < w.f_hi, "{cell:?} {w:?}");
        }
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let k: Axis = "0.5:1.5:3".parse().unwrap();
        let dk: Axis = "-0.3:0.3:3".parse().unwrap();
        let ddk: Axis = "-9:-3:4".parse().unwrap();
        let a = scan_triples(&k, &dk, &ddk, 0.2, Exec::Sequential);
        let b = scan_triples(&k, &dk, &ddk, 0.2, Exec::Parallel);
        assert_eq!(format!("{a:?}"), format!("{b:?}"));
        let c: Axis = "0.5:2:5".parse().unwrap();
        assert_eq!(
            format!("{:?}", scan_windows(&c, &c, Exec::Sequential)),
            format!("{:?}", scan_windows(&c, &c, Exec::Parallel))
        );
    }

    proptest! {
        #[test]
        fn width_monotone_in_big_c(c in 0.2f64..3.0, b in 0.5f64..6.0, db in 0.0f64..2.0) {
            let lo = window_cell(c, b);
            let hi = window_cell(c, b + db);
            prop_assert!(hi.width >= lo.width - 1e-12);
        }

        #[test]
        fn cell_order_follows_grid(n in 0usize..4, m in 0usize..4) {
            let a = Axis::linspace(0.5, 2.0, n);
            let b = Axis::linspace(1.0, 4.0, m);
            let cells = scan_windows(&a, &b, Exec::default());
            prop_assert_eq!(cells.len(), n * m);
            for (idx, cell) in cells.iter().enumerate() {
                prop_assert_eq!(cell.c, a.values()[idx / m]);
                prop_assert_eq!(cell.big_c, b.values()[idx % m]);
            }
        }
    }
}
