use biconservative::exec::Exec;
use biconservative::extrinsic::{sample_patch, PatchOptions, PatchSpec, SurfacePatch};
use biconservative::profile::ModelParams;
use biconservative::verify::{convergence, point_geometry, verify_patch, Grid, Level, VerifyOptions, ENTRY_NAMES};

fn patch(spec: &PatchSpec) -> SurfacePatch {
    sample_patch(
        &ModelParams::reference(),
        std::f64::consts::FRAC_1_SQRT_2,
        spec,
        &PatchOptions::default(),
    )
    .unwrap()
}

#[test]
fn tangent_is_orthogonal_to_position() {
    let p = patch(&PatchSpec::reference());
    let grid = Grid::new(&p).unwrap();
    for (i, j) in [(5, 5), (30, 40), (58, 10)] {
        let g = point_geometry(&grid, i, j, 1).unwrap();
        assert!(g.phi.dot(&g.phi_u).abs() < 1e-9);
        assert!(g.phi.dot(&g.phi_t).abs() < 1e-9);
        assert!(g.e3.dot(&g.phi).abs() < 1e-9 && g.e4.dot(&g.phi).abs() < 1e-9);
    }
}

#[test]
fn reference_patch_passes_full() {
    let p = patch(&PatchSpec::reference());
    let report = verify_patch(&p, &VerifyOptions::new(Level::Full)).unwrap();
    let names: Vec<&str> = report.entries.iter().map(|e| e.name).collect();
    assert_eq!(names, ENTRY_NAMES);
    for e in &report.entries {
        assert!(e.pass, "{e}");
    }
}

#[test]
fn fast_level_matches_full_on_shared_entries() {
    let p = patch(&PatchSpec::reference());
    let fast = verify_patch(&p, &VerifyOptions::new(Level::Fast)).unwrap();
    assert!(fast.pass());
    assert_eq!(fast.entries.len(), ENTRY_NAMES.len() - 2);
    assert!(fast.entry("codazzi").is_none());
}

#[test]
fn level_curvature_sign() {
    let p = patch(&PatchSpec::reference());
    let grid = Grid::new(&p).unwrap();
    let g = biconservative::verify::local_geometry(&grid, 20, 20, 1).unwrap();
    let expected = 0.75 * p.fprime_values[20] / p.f_values[20];
    assert!(expected > 0.0);
    assert!((g.level_curvature - expected).abs() < 1e-5 * expected);
}

#[test]
fn perturbed_point_flags_unit_sphere() {
    let mut p = patch(&PatchSpec::reference());
    p.point_mut(30, 30)[2] += 1e-2;
    let report = verify_patch(&p, &VerifyOptions::new(Level::Fast)).unwrap();
    assert!(!report.pass());
    assert!(!report.entry("unit_sphere").unwrap().pass);
}

#[test]
fn smallest_grid_produces_report() {
    let p = patch(&PatchSpec::new(0.05, 8, 8).with_t_span(0.05));
    let report = verify_patch(&p, &VerifyOptions::new(Level::Full)).unwrap();
    assert_eq!(report.entries.len(), ENTRY_NAMES.len());
    let small = patch(&PatchSpec::new(0.05, 7, 8).with_t_span(0.05));
    assert!(verify_patch(&small, &VerifyOptions::new(Level::Fast)).is_err());
}

#[test]
fn report_lines_are_stable() {
    let p = patch(&PatchSpec::reference());
    let a = verify_patch(&p, &VerifyOptions::new(Level::Fast)).unwrap().to_string();
    let opts = VerifyOptions {
        exec: Exec::Sequential,
        ..VerifyOptions::new(Level::Fast)
    };
    let b = verify_patch(&p, &opts).unwrap().to_string();
    assert_eq!(a, b);
    let first = a.lines().next().unwrap();
    assert!(first.starts_with("name=unit_sphere max="));
    assert!(first.ends_with("pass=1"));
}

#[test]
fn halving_the_step_is_second_order() {
    let p = patch(&PatchSpec::convergence());
    for row in convergence(&p, Exec::default()).unwrap() {
        assert!((3.0..=5.0).contains(&row.ratio()), "{row:?}");
    }
}

#[test]
fn full_circle_is_periodic() {
    let p = patch(&PatchSpec::new(0.05, 8, 256));
    assert!(p.is_periodic());
    let report = verify_patch(&p, &VerifyOptions::new(Level::Fast)).unwrap();
    assert!(report.entry("unit_sphere").unwrap().pass);
    assert!(report.entry("level_circle_constancy").unwrap().pass);
}
