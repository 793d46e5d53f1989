//! File formats: CSV tables, the patch metadata sidecar, and OBJ meshes.
//!
//! Numbers are written with 15 significant digits in scientific notation so
//! identical runs give identical bytes.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use crate::extrinsic::{Point, SurfacePatch};
use crate::intrinsic::IntrinsicSample;
use crate::profile::{ModelParams, ProfileSample};
use crate::scan::{TripleCell, WindowCell};
use crate::{Error, Result};

pub fn num(x: f64) -> String {
    format!("{x:.14e}")
}

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().from_writer(w)
}

pub const INTRINSIC_COLUMNS: [&str; 8] = ["u", "kappa", "dkappa", "ddkappa", "theta", "K", "f_K", "c2"];
pub const PROFILE_COLUMNS: [&str; 9] = ["u", "f", "fprime", "kappa", "k", "tau", "kappa_hat", "residual_ode", "residual_fi"];
pub const PATCH_COLUMNS: [&str; 9] = ["i", "j", "u", "t", "x1", "x2", "x3", "x4", "x5"];
pub const TRIPLE_COLUMNS: [&str; 9] = [
    "kappa0",
    "dkappa0",
    "ddkappa0",
    "admissible",
    "min_margin",
    "u_max",
    "c2",
    "C2",
    "status",
];
pub const WINDOW_COLUMNS: [&str; 7] = ["c", "C", "nonempty", "f_lo", "f_hi", "width", "status"];

pub fn write_intrinsic_csv<W: Write>(w: W, samples: &[IntrinsicSample]) -> Result<()> {
    let mut out = writer(w);
    out.write_record(INTRINSIC_COLUMNS)?;
    for s in samples {
        out.write_record([s.u, s.kappa, s.dkappa, s.ddkappa, s.theta, s.gauss, s.f_k, s.c2].map(num))?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_profile_csv<W: Write>(w: W, samples: &[ProfileSample]) -> Result<()> {
    let mut out = writer(w);
    out.write_record(PROFILE_COLUMNS)?;
    for s in samples {
        out.write_record([s.u, s.f, s.fprime, s.kappa, s.k, s.tau, s.kappa_hat, s.residual_ode, s.residual_fi].map(num))?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_patch_csv<W: Write>(w: W, patch: &SurfacePatch) -> Result<()> {
    let mut out = writer(w);
    out.write_record(PATCH_COLUMNS)?;
    for (i, &u) in patch.u_nodes.iter().enumerate() {
        for (j, &t) in patch.t_nodes.iter().enumerate() {
            let p = patch.point(i, j);
            let mut rec = vec![i.to_string(), j.to_string(), num(u), num(t)];
            rec.extend(p.iter().map(|&x| num(x)));
            out.write_record(&rec)?;
        }
    }
    out.flush()?;
    Ok(())
}

/// The sidecar holding the constants and the per-row profile values that
/// verification compares against.
pub fn write_patch_meta<W: Write>(mut w: W, patch: &SurfacePatch) -> Result<()> {
    writeln!(w, "c={}", num(patch.params.c))?;
    writeln!(w, "C={}", num(patch.params.big_c))?;
    writeln!(w, "f0={}", num(patch.f0))?;
    writeln!(w, "n_u={}", patch.n_u())?;
    writeln!(w, "n_t={}", patch.n_t())?;
    writeln!(w, "t_span={}", num(patch.t_span))?;
    for i in 0..patch.n_u() {
        writeln!(
            w,
            "row.{i}={},{},{}",
            num(patch.f_values[i]),
            num(patch.fprime_values[i]),
            num(patch.kappa_hat_values[i])
        )?;
    }
    Ok(())
}

/// `<patch>.meta` next to the patch file.
pub fn meta_path(patch: &Path) -> PathBuf {
    let mut s = patch.as_os_str().to_owned();
    s.push(".meta");
    PathBuf::from(s)
}

pub fn save_patch(path: &Path, patch: &SurfacePatch) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_patch_csv(&mut w, patch)?;
    w.flush()?;
    let mut m = BufWriter::new(File::create(meta_path(path))?);
    write_patch_meta(&mut m, patch)?;
    m.flush()?;
    Ok(())
}

fn parse<T: std::str::FromStr>(s: &str, what: &str) -> Result<T> {
    s.trim().parse().map_err(|_| Error::Format(format!("bad {what}: '{s}'")))
}

fn read_meta<R: BufRead>(r: R) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for line in r.lines() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Format(format!("metadata line '{line}' is not key=value")))?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}

fn meta_value<'m>(meta: &'m BTreeMap<String, String>, key: &str) -> Result<&'m str> {
    meta.get(key)
        .map(String::as_str)
        .ok_or_else(|| Error::Format(format!("metadata is missing '{key}'")))
}

/// Reads a patch CSV and its metadata. Construction diagnostics are not
/// stored and come back as zero.
pub fn read_patch<R: Read, M: BufRead>(csv_in: R, meta_in: M) -> Result<SurfacePatch> {
    let meta = read_meta(meta_in)?;
    let params = ModelParams::new(parse(meta_value(&meta, "c")?, "c")?, parse(meta_value(&meta, "C")?, "C")?)?;
    let n_u: usize = parse(meta_value(&meta, "n_u")?, "n_u")?;
    let n_t: usize = parse(meta_value(&meta, "n_t")?, "n_t")?;
    let mut f_values = Vec::with_capacity(n_u);
    let mut fprime_values = Vec::with_capacity(n_u);
    let mut kappa_hat_values = Vec::with_capacity(n_u);
    for i in 0..n_u {
        let row = meta_value(&meta, &format!("row.{i}"))?;
        let v: Vec<f64> = row.split(',').map(|s| parse(s, "row value")).collect::<Result<_>>()?;
        let [f, fp, kh] = v[..] else {
            return Err(Error::Format(format!("row.{i} must hold f,fprime,kappa_hat")));
        };
        f_values.push(f);
        fprime_values.push(fp);
        kappa_hat_values.push(kh);
    }

    let mut rd = csv::ReaderBuilder::new().from_reader(csv_in);
    if rd.headers()?.iter().ne(PATCH_COLUMNS) {
        return Err(Error::Format(format!("patch header must be {}", PATCH_COLUMNS.join(","))));
    }
    let mut u_nodes = vec![f64::NAN; n_u];
    let mut t_nodes = vec![f64::NAN; n_t];
    let mut points = vec![Point::from_element(f64::NAN); n_u * n_t];
    let mut seen = vec![false; n_u * n_t];
    for rec in rd.records() {
        let rec = rec?;
        if rec.len() != PATCH_COLUMNS.len() {
            return Err(Error::Format(format!("patch row has {} fields", rec.len())));
        }
        let i: usize = parse(&rec[0], "i")?;
        let j: usize = parse(&rec[1], "j")?;
        if i >= n_u || j >= n_t {
            return Err(Error::Format(format!("node ({i}, {j}) is outside the {n_u}x{n_t} grid")));
        }
        u_nodes[i] = parse(&rec[2], "u")?;
        t_nodes[j] = parse(&rec[3], "t")?;
        let mut p = Point::zeros();
        for k in 0..5 {
            p[k] = parse(&rec[4 + k], "coordinate")?;
        }
        points[i * n_t + j] = p;
        seen[i * n_t + j] = true;
    }
    if seen.iter().any(|s| !s) {
        return Err(Error::Format(format!("patch does not cover the {n_u}x{n_t} grid")));
    }
    Ok(SurfacePatch {
        params,
        f0: parse(meta_value(&meta, "f0")?, "f0")?,
        t_span: parse(meta_value(&meta, "t_span")?, "t_span")?,
        u_nodes,
        t_nodes,
        points,
        f_values,
        fprime_values,
        kappa_hat_values,
        diagnostics: Default::default(),
    })
}

pub fn load_patch(path: &Path) -> Result<SurfacePatch> {
    let meta = meta_path(path);
    let m = File::open(&meta).map_err(|e| Error::Format(format!("cannot open {}: {e}", meta.display())))?;
    read_patch(BufReader::new(File::open(path)?), BufReader::new(m))
}

fn flag(b: bool) -> String {
    u8::from(b).to_string()
}

pub fn write_triples_csv<W: Write>(w: W, cells: &[TripleCell]) -> Result<()> {
    let mut out = writer(w);
    out.write_record(TRIPLE_COLUMNS)?;
    for c in cells {
        out.write_record([
            num(c.triple.kappa0),
            num(c.triple.dkappa0),
            num(c.triple.ddkappa0),
            flag(c.admissible),
            num(c.min_margin),
            num(c.u_max),
            num(c.c2),
            num(c.big_c2),
            c.status.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_windows_csv<W: Write>(w: W, cells: &[WindowCell]) -> Result<()> {
    let mut out = writer(w);
    out.write_record(WINDOW_COLUMNS)?;
    for c in cells {
        out.write_record([
            num(c.c),
            num(c.big_c),
            flag(c.nonempty),
            num(c.f_lo),
            num(c.f_hi),
            num(c.width),
            c.status.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Parses `--proj`, three distinct 1-based coordinates such as `1,3,4`.
pub fn parse_projection(s: &str) -> Result<[usize; 3]> {
    let v: Vec<usize> = s.split(',').map(|x| parse(x, "coordinate")).collect::<Result<_>>()?;
    match v[..] {
        [a, b, c] if [a, b, c].iter().all(|&k| (1..=5).contains(&k)) && a != b && b != c && a != c => Ok([a - 1, b - 1, c - 1]),
        _ => Err(Error::InvalidParams(format!(
            "projection '{s}' must be three distinct indices in 1..=5"
        ))),
    }
}

/// Vertices projected onto `proj` and one quad per grid cell. With `wrap_t`
/// the last column is joined to the first.
pub fn write_obj<W: Write>(mut w: W, patch: &SurfacePatch, proj: [usize; 3], wrap_t: bool) -> Result<()> {
    let (n_u, n_t) = (patch.n_u(), patch.n_t());
    writeln!(
        w,
        "# {n_u}x{n_t} grid, coordinates x{},x{},x{}",
        proj[0] + 1,
        proj[1] + 1,
        proj[2] + 1
    )?;
    for p in &patch.points {
        writeln!(w, "v {} {} {}", num(p[proj[0]]), num(p[proj[1]]), num(p[proj[2]]))?;
    }
    let idx = |i: usize, j: usize| i * n_t + j + 1;
    let cols = if wrap_t { n_t } else { n_t.saturating_sub(1) };
    for i in 0..n_u.saturating_sub(1) {
        for j in 0..cols {
            let jn = (j + 1) % n_t;
            writeln!(w, "f {} {} {} {}", idx(i, j), idx(i + 1, j), idx(i + 1, jn), idx(i, jn))?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extrinsic::{sample_patch, PatchOptions, PatchSpec};
    use crate::scan::{scan_windows, Axis};

    fn small_patch() -> SurfacePatch {
        let spec = PatchSpec::new(0.05, 6, 5).with_t_span(0.05);
        sample_patch(&ModelParams::reference(), 0.5f64.sqrt(), &spec, &PatchOptions::default()).unwrap()
    }

    #[test]
    fn number_format() {
        assert_eq!(num(1.0), "1.00000000000000e0");
        assert_eq!(num(-0.000_123_456_789_012_345_6), "-1.23456789012346e-4");
    }

    #[test]
    fn patch_round_trip() {
        let p = small_patch();
        let mut csv_buf = Vec::new();
        let mut meta_buf = Vec::new();
        write_patch_csv(&mut csv_buf, &p).unwrap();
        write_patch_meta(&mut meta_buf, &p).unwrap();
        let q = read_patch(&csv_buf[..], &meta_buf[..]).unwrap();
        assert_eq!((q.n_u(), q.n_t()), (6, 5));
        for (a, b) in p.points.iter().zip(&q.points) {
            assert!((a - b).amax() <= 1e-14);
        }
        assert!((q.params.c - p.params.c).abs() < 1e-14);
        assert_eq!(q.f_values.len(), 6);
        let mut again = Vec::new();
        write_patch_csv(&mut again, &q).unwrap();
        assert_eq!(again, csv_buf);
    }

    #[test]
    fn patch_header_and_rows() {
        let p = small_patch();
        let mut buf = Vec::new();
        write_patch_csv(&mut buf, &p).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "i,j,u,t,x1,x2,x3,x4,x5");
        assert_eq!(lines.count(), 30);
    }

    #[test]
    fn missing_rows_are_rejected() {
        let p = small_patch();
        let mut csv_buf = Vec::new();
        let mut meta_buf = Vec::new();
        write_patch_csv(&mut csv_buf, &p).unwrap();
        write_patch_meta(&mut meta_buf, &p).unwrap();
        let text = String::from_utf8(csv_buf).unwrap();
        let cut: String = text.lines().take(10).map(|l| format!("{l}\n")).collect();
        assert!(read_patch(cut.as_bytes(), &meta_buf[..]).is_err());
        assert!(read_patch(text.as_bytes(), &b"c=1\n"[..]).is_err());
    }

    #[test]
    fn obj_faces() {
        let p = small_patch();
        let mut buf = Vec::new();
        write_obj(&mut buf, &p, [0, 2, 3], false).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().filter(|l| l.starts_with("v ")).count(), 30);
        assert_eq!(text.lines().filter(|l| l.starts_with("f ")).count(), 5 * 4);
        let mut wrapped = Vec::new();
        write_obj(&mut wrapped, &p, [0, 2, 3], true).unwrap();
        let text = String::from_utf8(wrapped).unwrap();
        assert_eq!(text.lines().filter(|l| l.starts_with("f ")).count(), 5 * 5);
        assert!(text.contains("f 5 10 6 1"));
    }

    #[test]
    fn projection_parsing() {
        assert_eq!(parse_projection("1,3,4").unwrap(), [0, 2, 3]);
        assert!(parse_projection("1,1,4").is_err());
        assert!(parse_projection("0,1,2").is_err());
        assert!(parse_projection("1,2").is_err());
    }

    #[test]
    fn window_table() {
        let cells = scan_windows(&Axis(vec![1.0]), &Axis(vec![1e-6, 3.0]), Default::default());
        let mut buf = Vec::new();
        write_windows_csv(&mut buf, &cells).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "c,C,nonempty,f_lo,f_hi,width,status");
        assert!(lines[1].contains(",0,NaN,NaN,0.00000000000000e0,ok"));
        assert_eq!(lines.len(), 3);
    }
}
