//! Deterministic synthetic data with planted difficulty structure.
//!
//! Each condition gets a base representation shared by all layers; each
//! layer then drifts away from it in proportion to the condition's
//! difficulty and the layer's drift coefficient. High-difficulty
//! conditions therefore have less stable similarity relations across
//! layers, which is exactly the structure the third-order analysis is
//! meant to detect.

use std::sync::Arc;

use crate::condition::ConditionSet;
use crate::error::{Error, Result};
use crate::ingest::{ActivityMatrix, FeatureVector, LayerId};
use crate::rng;

/// Stream domain for base representations.
const DOMAIN_BASE: u64 = 0xBA5E;
/// Stream domain offset for per-layer noise; layer ℓ uses DOMAIN_NOISE + ℓ.
const DOMAIN_NOISE: u64 = 0x4E01_5E00;

#[derive(Debug, Clone)]
pub struct SynthSpec {
    pub seed: u64,
    pub n: usize,
    pub h: usize,
    pub n_layers: usize,
    /// Per-condition difficulty in [0, 1].
    pub difficulty: Vec<f64>,
    pub noise_gain: f64,
    /// Per-layer drift coefficients: how strongly the layer is perturbed
    /// per unit difficulty.
    pub drift_profile: Vec<f64>,
}

impl SynthSpec {
    /// Difficulty rising linearly over conditions and drift rising linearly
    /// over layers, the default planted structure.
    pub fn linear(seed: u64, n: usize, h: usize, n_layers: usize, noise_gain: f64) -> Self {
        let difficulty = (0..n).map(|i| i as f64 / (n - 1).max(1) as f64).collect();
        let drift_profile = (0..n_layers)
            .map(|l| l as f64 / (n_layers - 1).max(1) as f64)
            .collect();
        SynthSpec {
            seed,
            n,
            h,
            n_layers,
            difficulty,
            noise_gain,
            drift_profile,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 8 {
            return Err(Error::Invalid("synth spec needs N >= 8".into()));
        }
        if self.h < 4 {
            return Err(Error::Invalid("synth spec needs H >= 4".into()));
        }
        if self.n_layers < 2 {
            return Err(Error::Invalid("synth spec needs at least 2 layers".into()));
        }
        if self.difficulty.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: self.difficulty.len(),
            });
        }
        if self.difficulty.iter().any(|d| !(0.0..=1.0).contains(d)) {
            return Err(Error::Invalid("difficulty values must lie in [0,1]".into()));
        }
        if self.drift_profile.len() != self.n_layers {
            return Err(Error::DimensionMismatch {
                expected: self.n_layers,
                got: self.drift_profile.len(),
            });
        }
        if !(self.noise_gain >= 0.0) {
            return Err(Error::Invalid("noise gain must be >= 0".into()));
        }
        Ok(())
    }

    pub fn condition_ids(&self) -> Vec<String> {
        (0..self.n).map(|i| format!("s{i:05}")).collect()
    }
}

/// Per-layer activity matrices plus the planted difficulty vector.
pub fn generate(spec: &SynthSpec) -> Result<(Vec<ActivityMatrix>, FeatureVector)> {
    spec.validate()?;
    let conditions = ConditionSet::new(spec.condition_ids())?;
    let layers = generate_layers(spec, &conditions);
    let difficulty = FeatureVector {
        conditions,
        name: "difficulty".into(),
        values: spec.difficulty.clone(),
    };
    Ok((layers, difficulty))
}

fn generate_layers(spec: &SynthSpec, conditions: &Arc<ConditionSet>) -> Vec<ActivityMatrix> {
    (0..spec.n_layers)
        .map(|l| {
            let drift = spec.drift_profile[l];
            let data: Vec<Vec<f64>> = (0..spec.n)
                .map(|s| {
                    let scale = spec.noise_gain * spec.difficulty[s] * drift;
                    (0..spec.h)
                        .map(|d| {
                            let base = rng::gaussian(spec.seed, DOMAIN_BASE, s, d);
                            let eps = rng::gaussian(spec.seed, DOMAIN_NOISE + l as u64, s, d);
                            base + scale * eps
                        })
                        .collect()
                })
                .collect();
            ActivityMatrix {
                conditions: Arc::clone(conditions),
                layer: LayerId::new("synth", l + 1),
                data,
            }
        })
        .collect()
}

/// Per-pair correlation values over all unordered pairs of `n_layers`
/// layers, with the middle band shifted by `middle_shift` on top of a
/// noisy baseline. Input material for the layer-group ANOVA.
pub fn banded_pair_values(
    seed: u64,
    n_layers: usize,
    baseline: f64,
    middle_shift: f64,
    noise_sd: f64,
) -> Result<Vec<((usize, usize), f64)>> {
    use crate::orders::{assign_layer_group, LayerGroup};
    let mut out = Vec::new();
    let mut k = 0;
    for i in 1..=n_layers {
        for j in (i + 1)..=n_layers {
            let group = assign_layer_group(i, j, n_layers)?;
            let shift = if group == LayerGroup::Middle { middle_shift } else { 0.0 };
            let value = baseline + shift + noise_sd * rng::gaussian(seed, 0xBA2D, k, 0);
            out.push(((i, j), value));
            k += 1;
        }
    }
    Ok(out)
}
