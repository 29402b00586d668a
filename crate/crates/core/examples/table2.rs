use artislam::experiments::{run_slam_experiment, Algorithm, ExperimentConfig};
use artislam::sim::{generate_default_scenario, ScenarioKind};

fn main() {
    let alphas_options = [
        [0.002, 4e-4, 4e-4, 0.002],
        [0.005, 1e-3, 1e-3, 0.005],
        [0.01, 2e-3, 2e-3, 0.01],
    ];
    for alphas in alphas_options {
        let t0 = std::time::Instant::now();
        let mut ates = [Vec::new(), Vec::new(), Vec::new()];
        let mut rpes = [Vec::new(), Vec::new(), Vec::new()];
        let mut commit_counts = Vec::new();
        let mut wrong_total = 0;
        let mut dyn_committed = [0, 0];
        for seed in 0..10u64 {
            let mut scenario = generate_default_scenario(ScenarioKind::DynamicWorld, seed);
            scenario.noise.alphas = alphas;
            for (i, algorithm) in [Algorithm::Aslam, Algorithm::Dyn, Algorithm::Ekf].iter().enumerate() {
                let cfg = ExperimentConfig { algorithm: *algorithm, min_samples: 10, ..Default::default() };
                let res = run_slam_experiment(&scenario, &cfg).unwrap();
                ates[i].push(res.metrics.ate_rmse);
                rpes[i].push(res.metrics.rpe_rmse);
                if i == 0 {
                    commit_counts.push(res.commits.len());
                    for (_, id, model) in &res.commits {
                        let truth = scenario.landmarks.iter().find(|l| l.id == *id).unwrap().config.kind();
                        if *model != truth {
                            wrong_total += 1;
                        }
                        if *id == 40 && *model == truth {
                            dyn_committed[0] += 1;
                        }
                        if *id == 41 && *model == truth {
                            dyn_committed[1] += 1;
                        }
                    }
                }
            }
        }
        let median = |v: &[f64]| -> f64 {
            let mut s = v.to_vec();
            s.sort_by(|a, b| a.partial_cmp(b).unwrap());
            s[s.len() / 2]
        };
        println!("=== alphas {alphas:?} ({:?}) ===", t0.elapsed());
        println!(
            "  commits/run {:?} wrong {} | rev 40 correct {}/10, pris 41 correct {}/10",
            commit_counts, wrong_total, dyn_committed[0], dyn_committed[1]
        );
        for (i, name) in ["aslam", "dyn  ", "ekf  "].iter().enumerate() {
            println!(
                "  {name}: ATE med {:.4}  RPE med {:.5}",
                median(&ates[i]),
                median(&rpes[i])
            );
        }
    }
}
