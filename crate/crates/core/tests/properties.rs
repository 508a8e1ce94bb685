use boomsim::control::Phase;
use boomsim::harness::{rms_force_error, run_scenario, run_scenario_with, RunOptions, ScenarioConfig, Trace};

#[test]
fn bundled_config_is_the_replica() {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/paper_replica.json");
    let cfg = ScenarioConfig::load(&path, &[]).unwrap();
    assert_eq!(cfg, ScenarioConfig::replica());
}

#[test]
fn summary_matches_serialized_trace() {
    let out = run_scenario(&ScenarioConfig::replica()).unwrap();
    let back = Trace::from_csv(&out.trace.to_csv()).unwrap();
    assert_eq!(back.len(), out.trace.len());
    let t_contact = back.contact_time().unwrap();
    assert_eq!(Some(t_contact), out.summary.phase_boundaries.t_contact);
    let rms = rms_force_error(&back, out.summary.f_des, t_contact).unwrap();
    let want = out.summary.rms_force_error_after_contact.unwrap();
    assert!((rms - want).abs() < 1e-9, "{rms} vs {want}");
}

#[test]
fn replica_spans_the_boom_range_with_ordered_phases() {
    let out = run_scenario(&ScenarioConfig::replica()).unwrap();
    let (lo, hi) = out.summary.d2_range;
    assert!((lo - 0.3).abs() <= 0.02 && (hi - 1.0).abs() <= 0.02, "{lo} {hi}");
    assert!(out.trace.phases_monotone());
    let first = |p| out.trace.samples.iter().position(|s| s.phase == p).unwrap();
    assert!(first(Phase::Approach) < first(Phase::Stabilize) && first(Phase::Stabilize) < first(Phase::Sweep));
    assert!(out.trace.samples.windows(2).all(|w| w[1].t > w[0].t));
    for s in &out.trace.samples {
        match s.phase {
            Phase::Approach => assert_eq!(s.v_n_cmd, -0.02),
            Phase::Stabilize => assert_eq!(s.v_t_cmd, 0.0),
            Phase::Sweep => {}
        }
    }
}

/// Longest stretch (s) of Stabilize ticks that retreat while the contact
/// force is still short of the setpoint.
fn longest_premature_retreat(trace: &Trace, f_des: f64) -> f64 {
    let (mut start, mut longest) = (None, 0.0_f64);
    for s in &trace.samples {
        let bad = s.phase == Phase::Stabilize && s.f_n.abs() < f_des.abs() && s.v_n_cmd > 0.0;
        match (bad, start) {
            (true, None) => start = Some(s.t),
            (true, Some(t0)) => longest = longest.max(s.t - t0),
            (false, _) => start = None,
        }
    }
    longest
}

#[test]
fn never_retreats_before_reaching_the_setpoint() {
    for f_des in [-1.0, -2.0, -5.0, -10.0] {
        let mut cfg = ScenarioConfig::replica();
        cfg.setpoint.f_des = f_des;
        let out = run_scenario(&cfg.clone().quiet()).unwrap();
        assert!(longest_premature_retreat(&out.trace, f_des) < 0.1, "f_des {f_des}");
    }
    let cfg = ScenarioConfig::replica().quiet();
    let flipped = run_scenario_with(&cfg, RunOptions { inject_sign_flip: true }).unwrap();
    assert!(longest_premature_retreat(&flipped.trace, -2.0) >= 0.1);
}

#[test]
fn gain_hold_and_lowpass_still_regulate() {
    let mut cfg = ScenarioConfig::replica().quiet();
    cfg.toggles.gain_hold = true;
    let held = run_scenario(&cfg).unwrap();
    let scheduled = run_scenario(&ScenarioConfig::replica().quiet()).unwrap();
    assert!(!held.summary.diverged);
    // Contact-time gains overdamp the loop once the boom is long and soft.
    assert!(held.summary.sweep_force_rms.unwrap() > 2.0 * scheduled.summary.sweep_force_rms.unwrap());
    let k_f: Vec<f64> = held
        .trace
        .samples
        .iter()
        .filter(|s| s.phase != Phase::Approach)
        .map(|s| s.k_f)
        .collect();
    assert!(k_f.windows(2).all(|w| w[0] == w[1]));

    let mut cfg = ScenarioConfig::replica();
    cfg.toggles.lowpass_cutoff = Some(50.0);
    let filtered = run_scenario(&cfg).unwrap();
    assert!(!filtered.summary.diverged);
}

#[test]
fn seeds_change_noise_only() {
    let mut a = ScenarioConfig::replica();
    a.duration = 2.0;
    let mut b = a.clone();
    b.world.seed = 43;
    let ra = run_scenario(&a).unwrap();
    let rb = run_scenario(&b).unwrap();
    assert_ne!(ra.trace.to_csv(), rb.trace.to_csv());
    assert_eq!(rb.summary.seed, 43);
}
