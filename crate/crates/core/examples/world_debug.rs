use artislam::experiments::{slam_params_for, ExperimentConfig};
use artislam::geometry::ModelKind;
use artislam::sim::{generate_default_scenario, simulate, ScenarioKind};
use artislam::slam::{aslam_step, ekf_slam_step, EkfSlamState, SelectionBank, SlamState};

fn main() {
    let scenario = generate_default_scenario(ScenarioKind::DynamicWorld, 0);
    let run = simulate(&scenario).unwrap();
    let cfg = ExperimentConfig { min_samples: 10, ..Default::default() };
    let params = slam_params_for(&scenario, &cfg);

    let truth_kind = |id: u64| -> ModelKind {
        scenario.landmarks.iter().find(|l| l.id == id).unwrap().config.kind()
    };

    let mut state = SlamState::new(scenario.robot.initial);
    let mut ekf = EkfSlamState::new(scenario.robot.initial);
    let mut bank = SelectionBank::new();
    for k in 0..scenario.steps() {
        aslam_step(&mut state, &run.commanded[k], &run.observations[k], &mut bank, &params).unwrap();
        ekf_slam_step(&mut ekf, &run.commanded[k], &run.observations[k], &params).unwrap();
        if k % 40 == 0 || k == scenario.steps() - 1 {
            let t = &run.truth.poses[k];
            let ra = state.robot();
            let re = ekf.robot();
            let ea = ((ra.x - t.x).powi(2) + (ra.y - t.y).powi(2)).sqrt();
            let ee = ((re.x - t.x).powi(2) + (re.y - t.y).powi(2)).sqrt();
            println!(
                "step {k:3}: committed {:2} | aslam err {ea:7.3} theta_err {:7.4} | ekf err {ee:7.3}",
                state.entries.len(),
                (ra.theta - t.theta).abs(),
            );
        }
    }
    let mut wrong = 0;
    for (t, id, model) in &bank.commits {
        let truth = truth_kind(*id);
        if *model != truth {
            wrong += 1;
            println!("WRONG commit: id {id} as {model} (truth {truth}) at t={t:.1}");
        }
    }
    println!("commits {} (wrong {wrong}), skipped {}", bank.commits.len(), state.skipped_observations);
}
