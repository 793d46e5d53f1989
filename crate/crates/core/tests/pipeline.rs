use biconservative::intrinsic::{integrate_intrinsic, matched_params, InitialTriple, IntrinsicOptions};
use biconservative::profile::{big_c2_from_state, integrate_profile, ProfileOptions};

const ANCHOR: InitialTriple = InitialTriple::new(1.0, 0.0, -6.0);

fn reflected() -> biconservative::intrinsic::IntrinsicSolution {
    integrate_intrinsic(ANCHOR, -1.0, &IntrinsicOptions::default())
        .unwrap()
        .to_f_chart()
}

#[test]
fn intrinsic_and_profile_agree() {
    let (params, f0) = matched_params(ANCHOR).unwrap();
    let intr = reflected();
    let prof = integrate_profile(&params, f0, 1.0, &ProfileOptions::default()).unwrap();
    let end = intr.u_max.abs().min(prof.u_max);
    assert!(end > 0.3);
    let mut worst: f64 = 0.0;
    for k in 0..=400 {
        let u = end * k as f64 / 400.0;
        let a = intr.sample_at(u).unwrap().f_k;
        let (b, _) = prof.state_at(u);
        worst = worst.max((a - b).abs());
    }
    assert!(worst <= 1e-6, "max |df| = {worst:e}");
}

#[test]
fn first_integral_constant_along_intrinsic_run() {
    let (params, _) = matched_params(ANCHOR).unwrap();
    let intr = reflected();
    for s in intr.resample(50) {
        if s.u < 0.0 {
            continue;
        }
        let fp = 4.0 / 3.0 * s.kappa * s.f_k;
        let c2 = big_c2_from_state(s.f_k, fp, s.c2);
        assert!((c2 / params.big_c2() - 1.0).abs() < 1e-8, "u={} C2={c2}", s.u);
    }
}

#[test]
fn level_curvature_matches_profile() {
    let (params, f0) = matched_params(ANCHOR).unwrap();
    let intr = reflected();
    let prof = integrate_profile(&params, f0, 0.3, &ProfileOptions::default()).unwrap();
    for u in [0.0, 0.1, 0.2, 0.3] {
        let a = intr.sample_at(u).unwrap();
        let b = prof.sample_at(u).unwrap();
        assert!((a.kappa - b.kappa).abs() < 1e-6);
    }
}
