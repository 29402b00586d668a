use artislam::geometry::ModelKind;
use artislam::rng::SplitMix64;
use artislam::selection::{SelectionParams, TrackSelector};
use nalgebra::Vector3;

fn main() {
    let sigma: f64 = 0.02;
    let params = SelectionParams::default();

    // Scan seeds on a moderate-rate revolute: want commit == Revolute with a
    // transient step where prismatic is argmax before commit.
    for omega in [1.0f64, 1.2, 1.4] {
        let mut good = Vec::new();
        for seed in 0..40u64 {
            let mut rng = SplitMix64::new(seed);
            let mut sel = TrackSelector::new(0);
            let mut pris_led = false;
            let mut outcome = None;
            for i in 0..300 {
                let t = 0.1 * i as f64;
                let a = omega * t;
                let p = Vector3::new(
                    1.0 + a.cos() + rng.normal_scaled(sigma),
                    2.0 + a.sin() + rng.normal_scaled(sigma),
                    1.0 + rng.normal_scaled(sigma),
                );
                match sel.step(t, p, &params) {
                    Ok(Some(ev)) => {
                        outcome = Some((i, ev.model));
                        break;
                    }
                    Ok(None) => {
                        let mu = &sel.belief.mu;
                        if mu[1] > mu[0] && mu[1] > mu[2] && mu[1] > 0.34 {
                            pris_led = true;
                        }
                    }
                    Err(e) => panic!("{e}"),
                }
            }
            if let Some((step, ModelKind::Revolute)) = outcome {
                if pris_led {
                    good.push((seed, step));
                }
            }
        }
        println!("omega {omega}: seeds with revolute commit + prismatic transient lead: {good:?}");
    }

    // Prismatic track: commit step distribution.
    let mut commits = Vec::new();
    for seed in 0..20u64 {
        let mut rng = SplitMix64::new(seed);
        let mut sel = TrackSelector::new(0);
        for i in 0..300 {
            let t = 0.1 * i as f64;
            let p = Vector3::new(
                1.0 + 0.2 * t + rng.normal_scaled(sigma),
                2.0 + rng.normal_scaled(sigma),
                1.0 + rng.normal_scaled(sigma),
            );
            if let Some(ev) = sel.step(t, p, &params).unwrap() {
                commits.push((seed, i, ev.model));
                break;
            }
        }
    }
    println!("prismatic commits: {commits:?}");
}
