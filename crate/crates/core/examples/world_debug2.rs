use artislam::experiments::{slam_params_for, ExperimentConfig};
use artislam::sim::{generate_default_scenario, simulate, ScenarioKind};
use artislam::slam::{aslam_step, SelectionBank, SlamState};

fn main() {
    let scenario = generate_default_scenario(ScenarioKind::DynamicWorld, 0);
    let run = simulate(&scenario).unwrap();
    let cfg = ExperimentConfig { min_samples: 10, ..Default::default() };
    let params = slam_params_for(&scenario, &cfg);

    let mut state = SlamState::new(scenario.robot.initial);
    let mut bank = SelectionBank::new();
    let mut prev_err = 0.0f64;
    for k in 0..scenario.steps() {
        let committed_before: Vec<u64> = state.entries.iter().map(|e| e.id).collect();
        aslam_step(&mut state, &run.commanded[k], &run.observations[k], &mut bank, &params).unwrap();
        let t = &run.truth.poses[k];
        let r = state.robot();
        let err = ((r.x - t.x).powi(2) + (r.y - t.y).powi(2)).sqrt();
        if (err - prev_err).abs() > 0.08 || (300..340).contains(&k) {
            let obs_ids: Vec<u64> = run.observations[k]
                .iter()
                .map(|(id, _)| *id)
                .filter(|id| committed_before.contains(id))
                .collect();
            let mism: Vec<(u64, f64)> = obs_ids
                .iter()
                .map(|id| {
                    let est = state.landmark_estimate(*id).unwrap();
                    let truth_m = run.truth.landmarks[k]
                        .iter()
                        .find(|(i, _)| i == id)
                        .unwrap()
                        .1;
                    (*id, (est - truth_m).norm())
                })
                .collect();
            println!(
                "step {k:3}: err {err:7.3} (delta {:+.3}) theta_err {:+.4} P_tt {:.2e} committed-updates {mism:?}",
                err - prev_err,
                r.theta - t.theta,
                state.cov[(2, 2)],
            );
        }
        prev_err = err;
    }
}
