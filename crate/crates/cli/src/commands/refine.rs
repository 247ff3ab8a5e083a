//! `refine`: post-hoc diffusion refinement of generated samples.

use crate::commands::resolve_path;
use crate::commands::write_volume_atomic;
use crate::error::{CmdError, DataResult};
use crate::manifest::{read_batch_manifest, write_batch_manifest, SampleStatus};
use lesionforge::io::nifti;
use lesionforge::lesion::LesionType;
use lesionforge::refine::{
    refine_volume, ExternalPredictor, NoisePredictor, OraclePredictor, RefineConfig,
    SmoothingPredictor, ZeroPredictor,
};
use lesionforge::volume::Volume3D;
use std::path::{Path, PathBuf};

enum PredictorSpec {
    Oracle,
    Zero,
    Smooth,
    External(String),
}

impl PredictorSpec {
    fn parse(s: &str) -> Result<Self, CmdError> {
        match s {
            "oracle" => Ok(Self::Oracle),
            "zero" => Ok(Self::Zero),
            "smooth" => Ok(Self::Smooth),
            other => {
                if let Some(cmd) = other.strip_prefix("external:") {
                    Ok(Self::External(cmd.to_string()))
                } else {
                    Err(CmdError::usage(format!(
                        "unknown predictor `{other}`; use oracle|zero|smooth|external:<cmd>"
                    )))
                }
            }
        }
    }

    /// Per-sample predictor instance. The external bridge is created once
    /// and reused since it declares itself exclusive anyway.
    fn build<'a>(
        &self,
        image: &Volume3D,
        rc: &RefineConfig,
        external: &'a Option<ExternalPredictor>,
    ) -> anyhow::Result<PredictorRef<'a>> {
        Ok(match self {
            PredictorSpec::Oracle => PredictorRef::Owned(Box::new(OraclePredictor::new(image, rc)?)),
            PredictorSpec::Zero => PredictorRef::Owned(Box::new(ZeroPredictor)),
            PredictorSpec::Smooth => {
                PredictorRef::Owned(Box::new(SmoothingPredictor::default().with_schedule(rc)?))
            }
            PredictorSpec::External(_) => PredictorRef::Shared(
                external
                    .as_ref()
                    .ok_or_else(|| anyhow::anyhow!("external predictor not spawned"))?,
            ),
        })
    }
}

enum PredictorRef<'a> {
    Owned(Box<dyn NoisePredictor>),
    Shared(&'a ExternalPredictor),
}

impl PredictorRef<'_> {
    fn as_dyn(&self) -> &dyn NoisePredictor {
        match self {
            PredictorRef::Owned(b) => b.as_ref(),
            PredictorRef::Shared(p) => *p,
        }
    }
}

pub fn run(
    manifest_path: &Path,
    predictor: &str,
    config_path: Option<&Path>,
    seed: Option<u64>,
    out: Option<PathBuf>,
) -> Result<(), CmdError> {
    let spec = PredictorSpec::parse(predictor)?;
    let mut config = match config_path {
        Some(p) => {
            let text = std::fs::read_to_string(p).data_ctx("reading refine config")?;
            serde_json::from_str::<RefineConfig>(&text).data_ctx("parsing refine config")?
        }
        None => RefineConfig::default(),
    };
    if let Some(s) = seed {
        config.seed = s;
    }
    config.validate().data()?;

    // A broken predictor must abort before any output is touched.
    let external = match &spec {
        PredictorSpec::External(cmd) => Some(ExternalPredictor::spawn(cmd).data()?),
        _ => None,
    };

    let mut manifest = read_batch_manifest(manifest_path).data()?;
    let base = manifest_path.parent().unwrap_or(Path::new(".")).to_path_buf();

    let mut refined_count = 0usize;
    let mut failed_count = 0usize;
    for row in &mut manifest.rows {
        if row.status != SampleStatus::Ok {
            continue;
        }
        match refine_row(row, &base, &spec, &config, &external) {
            Ok(path) => {
                row.refined = Some(path);
                refined_count += 1;
            }
            Err(e) => {
                eprintln!("sample {}: {e}", row.sample_id);
                row.status = SampleStatus::Failed;
                row.error = Some(format!("refinement failed: {e}"));
                failed_count += 1;
            }
        }
    }

    let out_path = out.unwrap_or_else(|| {
        let stem = manifest_path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "manifest".into());
        manifest_path.with_file_name(format!("{stem}_refined.jsonl"))
    });
    write_batch_manifest(&out_path, &manifest).data()?;
    println!(
        "refined {refined_count} samples ({failed_count} failed) -> {}",
        out_path.display()
    );
    if refined_count == 0 && failed_count > 0 {
        return Err(CmdError::data_msg("every sample failed refinement"));
    }
    Ok(())
}

fn refine_row(
    row: &crate::manifest::SampleRow,
    base: &Path,
    spec: &PredictorSpec,
    config: &RefineConfig,
    external: &Option<ExternalPredictor>,
) -> anyhow::Result<PathBuf> {
    let image_rel = row
        .image
        .as_ref()
        .ok_or_else(|| anyhow::anyhow!("row has no image path"))?;
    let labels_rel = row
        .labels
        .as_ref()
        .ok_or_else(|| anyhow::anyhow!("row has no labels path"))?;
    let image = nifti::read_volume(resolve_path(base, image_rel))?;
    let labels = nifti::read_labels(resolve_path(base, labels_rel))?;
    let lesion_type = LesionType::from_key(&row.lesion_type)?;
    let condition = super::generate::organ_condition_mask(&labels, lesion_type);

    let mut rc = config.clone();
    rc.seed = lesionforge::seed::derive_seed(config.seed ^ row.seed, "refine");
    let predictor = spec.build(&image, &rc, external)?;
    let refined = refine_volume(&image, &condition, predictor.as_dyn(), &rc)?;

    let refined_rel = {
        let name = format!("{}_refined.nii.gz", row.sample_id);
        image_rel.parent().map(|p| p.join(&name)).unwrap_or_else(|| name.into())
    };
    write_volume_atomic(&resolve_path(base, &refined_rel), &refined)?;
    Ok(refined_rel)
}
