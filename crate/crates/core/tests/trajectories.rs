use zeno_core::bloch::run_schedule;
use zeno_core::experiment::build_schedule;
use zeno_core::linalg3::Vec3C;
use zeno_core::montecarlo::{conditional_state_check, run_ensemble, run_trajectories};
use zeno_core::vsystem::{DensityMatrix3, SystemParams, REFERENCE_TAU_P};

const RESCALE: f64 = 1e-4;

#[test]
fn ensemble_mean_tracks_bloch() {
    let p = SystemParams::reference().rescaled(RESCALE);
    let tau_p = REFERENCE_TAU_P / RESCALE;
    let schedule = build_schedule(&p, tau_p, 4).unwrap();
    let est = run_ensemble(&Vec3C::basis(1), &p, &schedule, 4000, 11).unwrap();
    let bloch = run_schedule(&DensityMatrix3::basis(1), &p, &schedule);
    let d = est.mean_density.trace_distance(&bloch);
    let se = est.density_stderr;
    assert!(d <= 5.0 * se, "trace distance {d:e}, stderr {se:e}");
    assert_eq!(est.late_off_pulse_emissions, 0);
}

#[test]
fn conditional_states_match_projections() {
    let p = SystemParams::reference().rescaled(RESCALE);
    let f = conditional_state_check(&p, REFERENCE_TAU_P / RESCALE, 2000, 5).unwrap();
    assert!(f.no_emission.unwrap() >= 0.999, "{:?}", f.no_emission);
    assert!(f.emission.unwrap() >= 0.999, "{:?}", f.emission);
}

#[test]
fn records_serialize() {
    let p = SystemParams::reference().rescaled(RESCALE);
    let schedule = build_schedule(&p, REFERENCE_TAU_P / RESCALE, 2).unwrap();
    let recs = run_trajectories(&p, &schedule, 3, 1, true, |_| Vec3C::basis(1)).unwrap();
    for (i, r) in recs.iter().enumerate() {
        assert_eq!(r.stream, i as u64);
        let json = serde_json::to_string(r).unwrap();
        assert!(json.contains("emissions_per_pulse"));
        assert_eq!(r.emissions_per_pulse.len(), 2);
    }
}
