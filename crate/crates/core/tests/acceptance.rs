//! One line per acceptance criterion; exits non-zero if any fails.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use biconservative::exec::Exec;
use biconservative::extrinsic::{
    initial_frame, integrate_frenet, pinned_components, sample_patch, FrenetOptions, PatchOptions, PatchSpec, SurfacePatch,
};
use biconservative::intrinsic::{check_admissible, integrate_intrinsic, matched_params, InitialTriple, IntrinsicOptions, IntrinsicSample};
use biconservative::io;
use biconservative::profile::{integrate_profile, ModelParams, ProfileOptions, ProfileSample, ProfileStop};
use biconservative::verify::{convergence, verify_patch, Level, VerifyOptions};

const ANCHOR: InitialTriple = InitialTriple::new(1.0, 0.0, -6.0);

type Check = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Check + 'a>);

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn f_ref() -> f64 {
    std::f64::consts::FRAC_1_SQRT_2
}

fn reference_patch() -> SurfacePatch {
    sample_patch(
        &ModelParams::reference(),
        f_ref(),
        &PatchSpec::reference(),
        &PatchOptions::default(),
    )
    .unwrap()
}

fn admissibility_gate() -> Check {
    let a = check_admissible(ANCHOR);
    let bounds_exact = a.ddkappa_bounds == (-8.0, -16.0 / 3.0);
    let hi = check_admissible(InitialTriple::new(1.0, 0.0, -5.0)).admissible;
    let lo = check_admissible(InitialTriple::new(1.0, 0.0, -8.0)).admissible;
    ensure(
        a.admissible && bounds_exact && !hi && !lo,
        format!(
            "bounds=({}, {}) anchor={} -5:{} -8:{}",
            a.ddkappa_bounds.0, a.ddkappa_bounds.1, a.admissible, hi, lo
        ),
    )
}

fn intrinsic_anchor() -> Check {
    let s = IntrinsicSample::from_state(0.0, 1.0, 0.0, -6.0, 0.0);
    let identity = (1.0 - 3.0 * s.f_k * s.f_k - s.c2 * s.f_k.powi(3) - s.gauss).abs();
    ensure(
        s.gauss == -1.0 && (s.f_k - f_ref()).abs() <= 1e-9 && (s.c2 - 2f64.sqrt()).abs() <= 1e-9 && identity <= 1e-12,
        format!("K={} f_K={:.10} c2={:.10} identity={identity:e}", s.gauss, s.f_k, s.c2),
    )
}

fn conservation() -> Check {
    let sol = integrate_intrinsic(ANCHOR, 10.0, &IntrinsicOptions::default()).map_err(|e| e.to_string())?;
    let drift = sol.max_c2_drift();
    let (params, f0) = matched_params(ANCHOR).map_err(|e| e.to_string())?;
    let prof = integrate_profile(&params, f0, 10.0, &ProfileOptions::default()).map_err(|e| e.to_string())?;
    let defect = prof.max_first_integral_defect();
    ensure(
        sol.u_max >= 0.2 && drift <= 1e-8 && defect <= 1e-8 && prof.stop == ProfileStop::TurningPoint,
        format!(
            "u_max={:.4} c2_drift={drift:e} profile_u_max={:.4} fi_defect={defect:e}",
            sol.u_max, prof.u_max
        ),
    )
}

fn cross_pipeline() -> Check {
    let (params, f0) = matched_params(ANCHOR).map_err(|e| e.to_string())?;
    let intr = integrate_intrinsic(ANCHOR, -10.0, &IntrinsicOptions::default())
        .map_err(|e| e.to_string())?
        .to_f_chart();
    let prof = integrate_profile(&params, f0, 10.0, &ProfileOptions::default()).map_err(|e| e.to_string())?;
    let end = intr.u_max.abs().min(prof.u_max);
    let worst = (0..=1000)
        .map(|k| end * k as f64 / 1000.0)
        .map(|u| (intr.sample_at(u).map_or(f64::NAN, |s| s.f_k) - prof.state_at(u).0).abs())
        .fold(0.0, f64::max);
    ensure(worst <= 1e-6 && end > 0.0, format!("common=[0, {end:.4}] max_df={worst:e}"))
}

fn exact_anchors() -> Check {
    let p = ModelParams::from_squares(2f64.sqrt(), 28.0 / 9.0 * 2f64.powf(1.75)).map_err(|e| e.to_string())?;
    let fp = p.poly(f_ref()).sqrt();
    let s = ProfileSample::new(&p, 0.0, f_ref(), fp);
    let r7 = 7f64.sqrt();
    let pins = pinned_components(&p, f_ref(), fp);
    let expected = [1.0 / r7, -1.0 / r7, 2.0 / r7, -1.0 / r7];
    let mut worst = [
        (s.kappa - 1.0).abs(),
        (s.k - 1.0).abs(),
        (s.tau - 1.0 / 3.0).abs(),
        (s.kappa_hat - r7).abs(),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    for (a, b) in pins.iter().zip(expected) {
        worst = worst.max((a - b).abs());
    }
    ensure(worst <= 1e-9, format!("max_error={worst:e}"))
}

fn frame_quality() -> Check {
    let p = ModelParams::reference();
    let prof = integrate_profile(&p, f_ref(), 0.2, &ProfileOptions::default()).map_err(|e| e.to_string())?;
    let start = initial_frame(&p, &prof.samples[0]).map_err(|e| e.to_string())?;
    let sol = integrate_frenet(&prof, start, 0.2, &FrenetOptions::default()).map_err(|e| e.to_string())?;
    let constraint = (0..=400)
        .map(|k| 0.2 * k as f64 / 400.0)
        .map(|u| (sol.frame_at(u).gamma[0] - 1.0 / p.kappa_hat(prof.state_at(u).0)).abs())
        .fold(0.0, f64::max);
    let drift = sol.max_gram_drift;
    ensure(
        drift <= 1e-8 && constraint <= 1e-7,
        format!("gram_drift={drift:e} constraint={constraint:e}"),
    )
}

fn patch_geometry() -> Check {
    let patch = reference_patch();
    let d = patch.diagnostics;
    let report = verify_patch(&patch, &VerifyOptions::new(Level::Full)).map_err(|e| e.to_string())?;
    let fd_ok = ["unit_sphere", "metric_guu", "metric_gut", "metric_gtt"]
        .iter()
        .all(|n| report.entry(n).is_some_and(|e| e.pass));
    ensure(
        d.max_unit_residual <= 1e-8 && d.max_guu_error <= 1e-6 && d.max_gut <= 1e-6 && d.max_gtt_error <= 1e-6 && fd_ok,
        format!(
            "unit={:e} guu={:e} gut={:e} gtt={:e} fd_guu={:e} fd_gtt={:e}",
            d.max_unit_residual,
            d.max_guu_error,
            d.max_gut,
            d.max_gtt_error,
            report.entry("metric_guu").unwrap().max,
            report.entry("metric_gtt").unwrap().max
        ),
    )
}

fn independent_verification() -> Check {
    let report = verify_patch(&reference_patch(), &VerifyOptions::new(Level::Full)).map_err(|e| e.to_string())?;
    let failed: Vec<&str> = report.failures().map(|e| e.name).collect();
    ensure(report.pass(), format!("entries={} failed={failed:?}", report.entries.len()))
}

fn convergence_order() -> Check {
    let patch = sample_patch(
        &ModelParams::reference(),
        f_ref(),
        &PatchSpec::convergence(),
        &PatchOptions::default(),
    )
    .unwrap();
    let rows = convergence(&patch, Exec::default()).map_err(|e| e.to_string())?;
    let ratios: Vec<String> = rows.iter().map(|r| format!("{}:{:.3}", r.name, r.ratio())).collect();
    ensure(rows.iter().all(|r| (3.0..=5.0).contains(&r.ratio())), ratios.join(" "))
}

fn bin(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_biconservative")).args(args).output().unwrap()
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn negative_control(dir: &Path) -> Check {
    let mut patch = reference_patch();
    patch.point_mut(30, 30)[2] += 1e-2;
    let report = verify_patch(&patch, &VerifyOptions::new(Level::Fast)).map_err(|e| e.to_string())?;
    let flagged = report.entry("unit_sphere").is_some_and(|e| !e.pass);
    let path = dir.join("perturbed.csv");
    io::save_patch(&path, &patch).map_err(|e| e.to_string())?;
    let code = bin(&["verify", "--patch", arg(&path)]).status.code();
    ensure(
        !report.pass() && flagged && code == Some(1),
        format!("unit_sphere_flagged={flagged} exit={code:?}"),
    )
}

fn determinism(dir: &Path) -> Check {
    let mut outputs = Vec::new();
    for k in 0..2 {
        let patch = dir.join(format!("run{k}.csv"));
        let report = dir.join(format!("run{k}.txt"));
        let s = bin(&["surface", "--reference", "--out", arg(&patch)]).status.code();
        let v = bin(&["verify", "--patch", arg(&patch), "--out", arg(&report)]).status.code();
        if s != Some(0) || v != Some(0) {
            return Err(format!("surface exit={s:?} verify exit={v:?}"));
        }
        let read = |p: &Path| std::fs::read(p).map_err(|e| e.to_string());
        outputs.push([read(&patch)?, read(&io::meta_path(&patch))?, read(&report)?]);
    }
    ensure(
        outputs[0] == outputs[1],
        format!("patch_bytes={} report_bytes={}", outputs[0][0].len(), outputs[0][2].len()),
    )
}

fn main() {
    let dir = tempfile::tempdir().unwrap();
    let checks: Vec<Criterion> = vec![
        ("admissibility gate", Box::new(admissibility_gate)),
        ("intrinsic closed-form anchor", Box::new(intrinsic_anchor)),
        ("conservation", Box::new(conservation)),
        ("cross-pipeline agreement", Box::new(cross_pipeline)),
        ("exact-value anchors", Box::new(exact_anchors)),
        ("frame quality", Box::new(frame_quality)),
        ("patch geometry", Box::new(patch_geometry)),
        ("independent verification", Box::new(independent_verification)),
        ("convergence order", Box::new(convergence_order)),
        ("negative control", Box::new(|| negative_control(dir.path()))),
        ("determinism", Box::new(|| determinism(dir.path()))),
    ];
    let mut failures = 0;
    for (k, (name, check)) in checks.iter().enumerate() {
        let start = Instant::now();
        let result = std::panic::catch_unwind(std::panic::AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        let (verdict, detail) = match result {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failures += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {:>2} {verdict} {name} ({secs:.2}s): {detail}", k + 1);
    }
    if failures > 0 {
        println!("{failures} of {} criteria failed", checks.len());
        std::process::exit(1);
    }
    println!("all {} criteria passed", checks.len());
}
