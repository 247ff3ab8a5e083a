//! Noise-predictor contract and reference implementations.
//!
//! A predictor receives the noisy window patch, the timestep, and the
//! organ-mask condition patch, and returns the predicted noise of the same
//! shape. Reference predictors exist so the orchestration can be exercised
//! and validated without any trained weights:
//!
//! - [`OraclePredictor`] recovers the exact noise that was added (it knows
//!   the original volume), turning refinement into an identity.
//! - [`ZeroPredictor`] predicts no noise.
//! - [`SmoothingPredictor`] denoises toward a Gaussian-blurred window.
//! - [`ExternalPredictor`] bridges to a subprocess so an externally
//!   trained network can be attached.
//!
//! Training such a network (L1 loss on predicted vs added noise over
//! mask-conditioned 128³ patches) happens outside this crate; any process
//! honoring the byte protocol below can serve as the predictor.
//!
//! # External protocol
//!
//! One request per prediction over stdin/stdout, little-endian:
//!
//! ```text
//! request:  magic b"EPRD" | version u32 = 1 | t u32 | nx u32 | ny u32 | nz u32
//!           | x_t  (nx*ny*nz f32, x-fastest)
//!           | cond (nx*ny*nz f32, x-fastest)
//! response: nx u32 | ny u32 | nz u32 | eps_hat (nx*ny*nz f32, x-fastest)
//! ```

use super::RefineConfig;
use crate::error::{Error, Result};
use crate::field::gaussian_blur;
use crate::volume::{Volume3D, VoxelGrid, WindowBox};
use std::io::{BufReader, Read, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::Mutex;

/// A dense window of voxels in x-fastest order.
#[derive(Debug, Clone, PartialEq)]
pub struct Patch {
    pub dims: [usize; 3],
    pub data: Vec<f64>,
}

impl Patch {
    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

/// The pluggable denoiser contract.
pub trait NoisePredictor: Sync {
    /// Predict the noise content of `x_t` at timestep `t`, conditioned on
    /// the organ-mask patch. The output must match the input shape.
    fn predict(
        &self,
        x_t: &Patch,
        t: usize,
        condition: &Patch,
        window: &WindowBox,
    ) -> Result<Patch>;

    /// Predictors that cannot serve concurrent calls declare themselves
    /// exclusive; the orchestrator then serializes access.
    fn exclusive(&self) -> bool {
        false
    }
}

/// Recovers the stored forward noise algebraically from the original
/// volume: `eps = (x_t - sqrt(abar_t) x0) / sqrt(1 - abar_t)`.
pub struct OraclePredictor {
    normalized: Vec<f64>,
    dims: [usize; 3],
    alpha_bars: Vec<f64>,
}

impl OraclePredictor {
    pub fn new(original: &Volume3D, config: &RefineConfig) -> Result<Self> {
        let schedule = config.schedule()?;
        let normalized = original
            .voxels()
            .iter()
            .map(|&v| {
                let (lo, hi) = config.hu_clip;
                2.0 * (v.clamp(lo, hi) - lo) / (hi - lo) - 1.0
            })
            .collect();
        Ok(Self {
            normalized,
            dims: original.dims(),
            alpha_bars: (1..=schedule.timesteps())
                .map(|t| schedule.alpha_bar(t))
                .collect(),
        })
    }
}

impl NoisePredictor for OraclePredictor {
    fn predict(
        &self,
        x_t: &Patch,
        t: usize,
        _condition: &Patch,
        window: &WindowBox,
    ) -> Result<Patch> {
        if t == 0 || t > self.alpha_bars.len() {
            return Err(Error::InvalidParameter(format!("oracle timestep {t}")));
        }
        let a = self.alpha_bars[t - 1];
        let (sa, sn) = (a.sqrt(), (1.0 - a).sqrt());
        let mut data = Vec::with_capacity(x_t.len());
        let mut k = 0usize;
        for z in 0..x_t.dims[2] {
            for y in 0..x_t.dims[1] {
                let row = window.start[0]
                    + self.dims[0] * (window.start[1] + y + self.dims[1] * (window.start[2] + z));
                for x in 0..x_t.dims[0] {
                    let x0 = self.normalized[row + x];
                    data.push((x_t.data[k] - sa * x0) / sn);
                    k += 1;
                }
            }
        }
        Ok(Patch {
            dims: x_t.dims,
            data,
        })
    }
}

/// Predicts zero noise everywhere.
pub struct ZeroPredictor;

impl NoisePredictor for ZeroPredictor {
    fn predict(
        &self,
        x_t: &Patch,
        _t: usize,
        _condition: &Patch,
        _window: &WindowBox,
    ) -> Result<Patch> {
        Ok(Patch {
            dims: x_t.dims,
            data: vec![0.0; x_t.len()],
        })
    }
}

/// Surrogate denoiser: treats a Gaussian-blurred window as the clean
/// estimate, so refinement smooths the volume.
pub struct SmoothingPredictor {
    pub sigma_vox: f64,
    alpha_bars_cache: Mutex<Option<Vec<f64>>>,
}

impl Default for SmoothingPredictor {
    fn default() -> Self {
        Self::new(1.0)
    }
}

impl SmoothingPredictor {
    pub fn new(sigma_vox: f64) -> Self {
        Self {
            sigma_vox,
            alpha_bars_cache: Mutex::new(None),
        }
    }

    /// The smoothing surrogate needs the schedule; the driver shares its
    /// own via this hook before use. Falls back to the default schedule.
    pub fn with_schedule(self, config: &RefineConfig) -> Result<Self> {
        let schedule = config.schedule()?;
        *self.alpha_bars_cache.lock().unwrap() = Some(
            (1..=schedule.timesteps())
                .map(|t| schedule.alpha_bar(t))
                .collect(),
        );
        Ok(self)
    }

    fn alpha_bar(&self, t: usize) -> f64 {
        let mut guard = self.alpha_bars_cache.lock().unwrap();
        if guard.is_none() {
            let schedule = RefineConfig::default()
                .schedule()
                .expect("default schedule is valid");
            *guard = Some(
                (1..=schedule.timesteps())
                    .map(|t| schedule.alpha_bar(t))
                    .collect(),
            );
        }
        guard.as_ref().unwrap()[t - 1]
    }
}

impl NoisePredictor for SmoothingPredictor {
    fn predict(
        &self,
        x_t: &Patch,
        t: usize,
        _condition: &Patch,
        _window: &WindowBox,
    ) -> Result<Patch> {
        let grid = VoxelGrid::new(x_t.dims, [1.0; 3])?;
        let smoothed = gaussian_blur(&grid, &x_t.data, self.sigma_vox);
        let a = self.alpha_bar(t);
        let (sa, sn) = (a.sqrt(), (1.0 - a).sqrt());
        // eps_hat consistent with x0_hat = smoothed / sqrt(abar).
        let data = x_t
            .data
            .iter()
            .zip(&smoothed)
            .map(|(x, s)| (x - sa * (s / sa)) / sn)
            .collect();
        Ok(Patch {
            dims: x_t.dims,
            data,
        })
    }
}

/// Bridges predictions to an external subprocess speaking the module-level
/// byte protocol. The child is spawned once and reused per call.
pub struct ExternalPredictor {
    command: String,
    child: Mutex<(Child, ChildStdin, BufReader<ChildStdout>)>,
}

impl ExternalPredictor {
    /// Spawn `command` (split on whitespace: program + args) with piped
    /// stdio.
    pub fn spawn(command: &str) -> Result<Self> {
        let parts: Vec<&str> = command.split_whitespace().collect();
        if parts.is_empty() {
            return Err(Error::PredictorLoad(
                command.to_string(),
                "empty command".into(),
            ));
        }
        let mut child = Command::new(parts[0])
            .args(&parts[1..])
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()
            .map_err(|e| Error::PredictorLoad(command.to_string(), e.to_string()))?;
        let stdin = child.stdin.take().ok_or_else(|| {
            Error::PredictorLoad(command.to_string(), "no stdin pipe".into())
        })?;
        let stdout = child.stdout.take().ok_or_else(|| {
            Error::PredictorLoad(command.to_string(), "no stdout pipe".into())
        })?;
        Ok(Self {
            command: command.to_string(),
            child: Mutex::new((child, stdin, BufReader::new(stdout))),
        })
    }
}

impl Drop for ExternalPredictor {
    fn drop(&mut self) {
        if let Ok(mut guard) = self.child.lock() {
            let _ = guard.0.kill();
            let _ = guard.0.wait();
        }
    }
}

impl NoisePredictor for ExternalPredictor {
    fn predict(
        &self,
        x_t: &Patch,
        t: usize,
        condition: &Patch,
        window: &WindowBox,
    ) -> Result<Patch> {
        let mut guard = self
            .child
            .lock()
            .map_err(|_| Error::PredictorLoad(self.command.clone(), "poisoned lock".into()))?;
        let (_, stdin, stdout) = &mut *guard;

        let mut req: Vec<u8> = Vec::with_capacity(24 + 8 * x_t.len());
        req.extend_from_slice(b"EPRD");
        req.extend_from_slice(&1u32.to_le_bytes());
        req.extend_from_slice(&(t as u32).to_le_bytes());
        for d in x_t.dims {
            req.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for &v in &x_t.data {
            req.extend_from_slice(&(v as f32).to_le_bytes());
        }
        for &v in &condition.data {
            req.extend_from_slice(&(v as f32).to_le_bytes());
        }
        stdin
            .write_all(&req)
            .and_then(|_| stdin.flush())
            .map_err(|e| {
                Error::PredictorLoad(
                    self.command.clone(),
                    format!("write failed in window at {:?}: {e}", window.start),
                )
            })?;

        let mut dims_buf = [0u8; 12];
        stdout.read_exact(&mut dims_buf).map_err(|e| {
            Error::PredictorLoad(self.command.clone(), format!("read dims failed: {e}"))
        })?;
        let mut dims = [0usize; 3];
        for a in 0..3 {
            dims[a] =
                u32::from_le_bytes(dims_buf[4 * a..4 * a + 4].try_into().unwrap()) as usize;
        }
        let n = dims[0] * dims[1] * dims[2];
        let mut payload = vec![0u8; n * 4];
        stdout.read_exact(&mut payload).map_err(|e| {
            Error::PredictorLoad(self.command.clone(), format!("read payload failed: {e}"))
        })?;
        let data: Vec<f64> = payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect();
        Ok(Patch { dims, data })
    }

    fn exclusive(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_predictor_matches_shape() {
        let patch = Patch {
            dims: [2, 3, 4],
            data: vec![1.0; 24],
        };
        let cond = patch.clone();
        let out = ZeroPredictor
            .predict(&patch, 1, &cond, &WindowBox { start: [0; 3], size: [2, 3, 4] })
            .unwrap();
        assert_eq!(out.dims, patch.dims);
        assert!(out.data.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn smoothing_predictor_prefers_smooth_windows() {
        // On a constant patch the blur is the identity, so eps_hat makes
        // x0_hat equal the constant.
        let patch = Patch {
            dims: [4, 4, 4],
            data: vec![0.25; 64],
        };
        let cond = Patch {
            dims: [4, 4, 4],
            data: vec![1.0; 64],
        };
        let p = SmoothingPredictor::default();
        let out = p
            .predict(&patch, 3, &cond, &WindowBox { start: [0; 3], size: [4, 4, 4] })
            .unwrap();
        // eps_hat = (x - x)/sn = 0 on constants.
        assert!(out.data.iter().all(|&v| v.abs() < 1e-12));
    }

    #[test]
    fn external_predictor_round_trips_through_a_subprocess() {
        // A tiny echo predictor: replies with zeros of the request shape.
        let script = r#"
import sys, struct
inp = sys.stdin.buffer
out = sys.stdout.buffer
while True:
    head = inp.read(24)
    if len(head) < 24:
        break
    magic, version, t, nx, ny, nz = struct.unpack('<4sIIIII', head)
    assert magic == b'EPRD' and version == 1
    n = nx * ny * nz
    inp.read(8 * n)  # x_t and condition payloads
    out.write(struct.pack('<III', nx, ny, nz))
    out.write(b'\x00' * (4 * n))
    out.flush()
"#;
        let tmp = std::env::temp_dir().join("echo_predictor_test.py");
        std::fs::write(&tmp, script).unwrap();
        let predictor = match ExternalPredictor::spawn(&format!("python3 {}", tmp.display())) {
            Ok(p) => p,
            // Environment without python3: the protocol is covered by unit
            // encoding tests elsewhere.
            Err(_) => return,
        };
        let patch = Patch {
            dims: [3, 2, 2],
            data: (0..12).map(|i| i as f64 / 10.0).collect(),
        };
        let cond = Patch {
            dims: [3, 2, 2],
            data: vec![1.0; 12],
        };
        let out = predictor
            .predict(&patch, 2, &cond, &WindowBox { start: [0; 3], size: [3, 2, 2] })
            .unwrap();
        assert_eq!(out.dims, patch.dims);
        assert!(out.data.iter().all(|&v| v == 0.0));
        assert!(predictor.exclusive());
    }
}
