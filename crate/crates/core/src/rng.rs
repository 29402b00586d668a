//! Portable 64-bit PRNG used for every stochastic stream in the crate.
//!
//! Simulation determinism must hold across platforms and across language
//! bindings, so the generator is pinned here rather than delegated to an
//! external crate. The update is the splitmix64 finalizer:
//!
//! ```text
//! state += 0x9E3779B97F4A7C15
//! z = state
//! z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//! z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//! output = z ^ (z >> 31)
//! ```
//!
//! Uniform doubles take the top 53 bits; normals use the Box-Muller
//! transform on two consecutive uniforms.

/// Splitmix64 generator. Cloning forks the stream at its current state.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    /// Derive an independent stream for a labeled substream (per landmark,
    /// per run, ...). Deterministic in (seed, label).
    pub fn fork(&self, label: u64) -> Self {
        let mut probe = Self::new(self.state ^ label.wrapping_mul(0xA076_1D64_78BD_642F));
        probe.next_u64();
        probe
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1) with 53 bits of mantissa.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in [lo, hi).
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Standard normal via Box-Muller. Consumes exactly two uniforms.
    pub fn normal(&mut self) -> f64 {
        // Guard against ln(0).
        let u1 = loop {
            let u = self.next_f64();
            if u > 0.0 {
                break u;
            }
        };
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Normal with the given standard deviation.
    pub fn normal_scaled(&mut self, sigma: f64) -> f64 {
        self.normal() * sigma
    }
}
