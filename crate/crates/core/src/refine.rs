//! Diffusion-style refinement orchestration.
//!
//! A linear-beta noise schedule, the forward noising identity
//! `x_t = sqrt(abar_t) x0 + sqrt(1-abar_t) eps`, reverse steps in either a
//! deterministic (noise-free) or stochastic (posterior-sampling) mode, and
//! a mask-conditioned sliding-window driver that partially noises each
//! window to `t_refine` and denoises it back with a pluggable predictor.
//!
//! Intensities are normalized by clipping HU to a fixed range and scaling
//! to [-1, 1]; all orchestration runs in f64. The external plug-in
//! boundary (subprocess protocol) exchanges little-endian f32 patches in
//! x-fastest order.

pub mod predictor;

pub use predictor::{
    ExternalPredictor, NoisePredictor, OraclePredictor, Patch, SmoothingPredictor, ZeroPredictor,
};

use crate::error::{Error, Result};
use crate::field::window_noise;
use crate::volume::{tile_sliding_windows, Volume3D, WindowBox};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Diffusion timetable: betas and their cumulative-product alphas.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSchedule {
    betas: Vec<f64>,
    alpha_bars: Vec<f64>,
}

impl NoiseSchedule {
    pub fn timesteps(&self) -> usize {
        self.betas.len()
    }

    /// Beta at 1-based timestep t.
    pub fn beta(&self, t: usize) -> f64 {
        self.betas[t - 1]
    }

    pub fn alpha(&self, t: usize) -> f64 {
        1.0 - self.betas[t - 1]
    }

    /// Cumulative product of alphas up to 1-based timestep t; t = 0 is 1.
    pub fn alpha_bar(&self, t: usize) -> f64 {
        if t == 0 {
            1.0
        } else {
            self.alpha_bars[t - 1]
        }
    }
}

/// Linear beta schedule from `beta_min` to `beta_max` over `t_total` steps.
pub fn build_schedule(t_total: usize, beta_min: f64, beta_max: f64) -> Result<NoiseSchedule> {
    if t_total == 0 {
        return Err(Error::InvalidParameter("schedule needs T >= 1".into()));
    }
    if !(beta_min > 0.0 && beta_min <= beta_max && beta_max < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "betas must satisfy 0 < beta_min <= beta_max < 1, got ({beta_min}, {beta_max})"
        )));
    }
    let mut betas = Vec::with_capacity(t_total);
    for i in 0..t_total {
        let frac = if t_total == 1 {
            0.0
        } else {
            i as f64 / (t_total - 1) as f64
        };
        betas.push(beta_min + (beta_max - beta_min) * frac);
    }
    let mut alpha_bars = Vec::with_capacity(t_total);
    let mut prod = 1.0;
    for &b in &betas {
        prod *= 1.0 - b;
        alpha_bars.push(prod);
    }
    Ok(NoiseSchedule { betas, alpha_bars })
}

/// Forward noising: `x_t = sqrt(abar_t) x0 + sqrt(1-abar_t) eps`.
pub fn forward_noise(
    x0: &[f64],
    t: usize,
    eps: &[f64],
    schedule: &NoiseSchedule,
) -> Result<Vec<f64>> {
    if x0.len() != eps.len() {
        return Err(Error::ShapeMismatch {
            expected: vec![x0.len()],
            got: vec![eps.len()],
        });
    }
    if t == 0 || t > schedule.timesteps() {
        return Err(Error::InvalidParameter(format!(
            "timestep {t} outside 1..={}",
            schedule.timesteps()
        )));
    }
    let a = schedule.alpha_bar(t);
    let (sa, sn) = (a.sqrt(), (1.0 - a).sqrt());
    Ok(x0
        .iter()
        .zip(eps)
        .map(|(x, e)| sa * x + sn * e)
        .collect())
}

/// Reverse-step mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReverseMode {
    /// Noise-free update; with a perfect predictor it inverts the forward
    /// chain exactly.
    Deterministic,
    /// Posterior mean plus sigma_t * z; z = 0 at the terminal step t = 1.
    Stochastic,
}

/// One reverse step from `x_t` to `x_{t-1}` given a noise prediction.
pub fn reverse_step(
    x_t: &[f64],
    t: usize,
    eps_hat: &[f64],
    schedule: &NoiseSchedule,
    mode: ReverseMode,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<f64>> {
    if x_t.len() != eps_hat.len() {
        return Err(Error::ShapeMismatch {
            expected: vec![x_t.len()],
            got: vec![eps_hat.len()],
        });
    }
    if t == 0 || t > schedule.timesteps() {
        return Err(Error::InvalidParameter(format!(
            "timestep {t} outside 1..={}",
            schedule.timesteps()
        )));
    }
    let a_t = schedule.alpha_bar(t);
    let a_prev = schedule.alpha_bar(t - 1);
    let (sa_t, sn_t) = (a_t.sqrt(), (1.0 - a_t).sqrt());

    match mode {
        ReverseMode::Deterministic => {
            let (sa_p, sn_p) = (a_prev.sqrt(), (1.0 - a_prev).sqrt());
            Ok(x_t
                .iter()
                .zip(eps_hat)
                .map(|(x, e)| {
                    let x0 = (x - sn_t * e) / sa_t;
                    sa_p * x0 + sn_p * e
                })
                .collect())
        }
        ReverseMode::Stochastic => {
            let beta_t = schedule.beta(t);
            let alpha_t = schedule.alpha(t);
            let c0 = a_prev.sqrt() * beta_t / (1.0 - a_t);
            let ct = alpha_t.sqrt() * (1.0 - a_prev) / (1.0 - a_t);
            let sigma = ((1.0 - a_prev) / (1.0 - a_t) * beta_t).sqrt();
            Ok(x_t
                .iter()
                .zip(eps_hat)
                .map(|(x, e)| {
                    let x0 = (x - sn_t * e) / sa_t;
                    let mean = c0 * x0 + ct * x;
                    if t == 1 {
                        mean
                    } else {
                        let z: f64 = rng.sample(StandardNormal);
                        mean + sigma * z
                    }
                })
                .collect())
        }
    }
}

/// Refinement driver settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefineConfig {
    /// Partial-noising depth: forward to this level, then reverse back.
    pub t_refine: usize,
    /// Cubic window edge, voxels (clamped per axis to the volume).
    pub window_edge: usize,
    /// Window overlap fraction in [0, 1).
    pub overlap: f64,
    pub mode: ReverseMode,
    pub seed: u64,
    /// Full schedule length and beta range.
    pub total_timesteps: usize,
    pub beta_min: f64,
    pub beta_max: f64,
    /// HU clip range mapped onto [-1, 1].
    pub hu_clip: (f64, f64),
}

impl Default for RefineConfig {
    fn default() -> Self {
        Self {
            t_refine: 5,
            window_edge: 128,
            overlap: 0.5,
            mode: ReverseMode::Stochastic,
            seed: 0,
            total_timesteps: 1000,
            beta_min: 1e-4,
            beta_max: 0.02,
            hu_clip: (-1000.0, 1000.0),
        }
    }
}

impl RefineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.t_refine > self.total_timesteps {
            return Err(Error::InvalidParameter(format!(
                "t_refine {} exceeds total timesteps {}",
                self.t_refine, self.total_timesteps
            )));
        }
        if self.window_edge == 0 {
            return Err(Error::InvalidParameter("window edge must be > 0".into()));
        }
        let clip_ok = self.hu_clip.0.is_finite()
            && self.hu_clip.1.is_finite()
            && self.hu_clip.0 < self.hu_clip.1;
        if !clip_ok {
            return Err(Error::InvalidParameter(format!(
                "HU clip range {:?} must be ordered",
                self.hu_clip
            )));
        }
        Ok(())
    }

    pub fn schedule(&self) -> Result<NoiseSchedule> {
        build_schedule(self.total_timesteps, self.beta_min, self.beta_max)
    }

    fn normalize(&self, v: f64) -> f64 {
        let (lo, hi) = self.hu_clip;
        2.0 * (v.clamp(lo, hi) - lo) / (hi - lo) - 1.0
    }

    fn denormalize(&self, n: f64) -> f64 {
        let (lo, hi) = self.hu_clip;
        (n + 1.0) / 2.0 * (hi - lo) + lo
    }
}

fn extract_patch(data: &[f64], dims: [usize; 3], b: &WindowBox) -> Vec<f64> {
    let mut out = Vec::with_capacity(b.size[0] * b.size[1] * b.size[2]);
    for z in 0..b.size[2] {
        for y in 0..b.size[1] {
            let row = b.start[0] + dims[0] * (b.start[1] + y + dims[1] * (b.start[2] + z));
            out.extend_from_slice(&data[row..row + b.size[0]]);
        }
    }
    out
}

/// Refine a volume by partially noising each sliding window to `t_refine`
/// and reverse-stepping it back under the predictor, conditioned on the
/// organ mask, then blending windows with partition-of-unity weights.
/// `t_refine = 0` returns the input bit-for-bit.
pub fn refine_volume(
    image: &Volume3D,
    organ_mask: &[bool],
    predictor: &dyn NoisePredictor,
    config: &RefineConfig,
) -> Result<Volume3D> {
    config.validate()?;
    if organ_mask.len() != image.voxels().len() {
        return Err(Error::ShapeMismatch {
            expected: vec![image.voxels().len()],
            got: vec![organ_mask.len()],
        });
    }
    if config.t_refine == 0 {
        return Ok(image.clone());
    }
    let schedule = config.schedule()?;
    let dims = image.dims();
    let tiling = tile_sliding_windows(dims, config.window_edge, config.overlap)?;

    let norm: Vec<f64> = image.voxels().iter().map(|&v| config.normalize(v)).collect();
    let cond_field: Vec<f64> = organ_mask.iter().map(|&m| if m { 1.0 } else { 0.0 }).collect();

    let mut accum = vec![0.0f64; norm.len()];
    for (w, b) in tiling.boxes().iter().enumerate() {
        let x0 = extract_patch(&norm, dims, b);
        let cond = Patch {
            dims: b.size,
            data: extract_patch(&cond_field, dims, b),
        };
        let eps = window_noise(config.seed, w, x0.len());
        let mut x = forward_noise(&x0, config.t_refine, &eps, &schedule)?;
        let mut rng = ChaCha8Rng::seed_from_u64(crate::seed::derive_seed_indexed(
            config.seed,
            "reverse",
            w as u64,
        ));
        for t in (1..=config.t_refine).rev() {
            let xt_patch = Patch {
                dims: b.size,
                data: x,
            };
            let eps_hat = predictor.predict(&xt_patch, t, &cond, b)?;
            if eps_hat.dims != b.size || eps_hat.data.len() != xt_patch.data.len() {
                return Err(Error::PredictorShape {
                    window: b.start,
                    expected: xt_patch.data.len(),
                    got: eps_hat.data.len(),
                });
            }
            if eps_hat.data.iter().any(|v| !v.is_finite()) {
                return Err(Error::PredictorLoad(
                    "predictor".into(),
                    format!("non-finite prediction in window at {:?}", b.start),
                ));
            }
            x = reverse_step(&xt_patch.data, t, &eps_hat.data, &schedule, config.mode, &mut rng)?;
        }
        let weights = tiling.weight_field(w);
        let mut k = 0usize;
        for z in 0..b.size[2] {
            for y in 0..b.size[1] {
                let row = b.start[0] + dims[0] * (b.start[1] + y + dims[1] * (b.start[2] + z));
                for xx in 0..b.size[0] {
                    accum[row + xx] += weights[k] * x[k];
                    k += 1;
                }
            }
        }
    }

    let out: Vec<f64> = accum.iter().map(|&n| config.denormalize(n)).collect();
    image.with_voxels(out)
}
