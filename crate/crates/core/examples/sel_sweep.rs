use artislam::geometry::ModelKind;
use artislam::rng::SplitMix64;
use artislam::selection::{SelectionParams, TrackSelector};
use nalgebra::{Matrix3, Vector3};

fn run(
    truth: &dyn Fn(f64) -> Vector3<f64>,
    sigma: f64,
    steps: usize,
    seed: u64,
    params: &SelectionParams,
) -> Option<(usize, ModelKind)> {
    let mut rng = SplitMix64::new(seed);
    let mut sel = TrackSelector::new(0);
    for i in 0..steps {
        let t = 0.1 * i as f64;
        let p = truth(t)
            + Vector3::new(
                rng.normal_scaled(sigma),
                rng.normal_scaled(sigma),
                rng.normal_scaled(sigma),
            );
        if let Some(ev) = sel.step(t, p, params).unwrap() {
            return Some((i, ev.model));
        }
    }
    None
}

fn sweep(label: &str, params: &SelectionParams, sigma: f64, rev_rate: f64, rev_r: f64, pri_rate: f64) {
    let tracks: Vec<(&str, Box<dyn Fn(f64) -> Vector3<f64>>, ModelKind)> = vec![
        ("static   ", Box::new(|_t| Vector3::new(1.0, 2.0, 1.0)), ModelKind::Static),
        (
            "prismatic",
            Box::new(move |t: f64| Vector3::new(1.0 + pri_rate * t, 2.0, 1.0)),
            ModelKind::Prismatic,
        ),
        (
            "revolute ",
            Box::new(move |t: f64| {
                let a = rev_rate * t;
                Vector3::new(1.0 + rev_r * a.cos(), 2.0 + rev_r * a.sin(), 1.0)
            }),
            ModelKind::Revolute,
        ),
    ];
    println!("--- {label} ---");
    for (name, truth, want) in &tracks {
        let mut correct = 0;
        let mut wrong = 0;
        let mut none = 0;
        let mut commit_steps = Vec::new();
        for seed in 0..100u64 {
            match run(truth.as_ref(), sigma, 400, 1000 + seed, params) {
                Some((step, model)) if model == *want => {
                    correct += 1;
                    commit_steps.push(step);
                }
                Some(_) => wrong += 1,
                None => none += 1,
            }
        }
        commit_steps.sort_unstable();
        let med = commit_steps.get(commit_steps.len() / 2).copied().unwrap_or(0);
        println!("  {name}: correct {correct:3} wrong {wrong:3} none {none:3} median-commit {med}");
    }
}

fn main() {
    let sigma: f64 = 0.02;
    for assumed in [0.05f64, 0.075, 0.1] {
        for p_static in [1e-6f64] {
            for p_moving in [3e-2f64, 1e-1, 3e-1] {
                let params = SelectionParams {
                    obs_cov: Matrix3::identity() * assumed * assumed,
                    process_noise: [p_static, p_moving, p_moving],
                    ..Default::default()
                };
                sweep(
                    &format!("assumed {assumed}, p_static {p_static:.0e}, p_moving {p_moving:.0e}"),
                    &params,
                    sigma,
                    2.0,
                    1.0,
                    0.2,
                );
            }
        }
    }
}
