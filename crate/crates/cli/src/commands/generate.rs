//! `generate`: batch lesion synthesis from a curated template pool.
//!
//! Per-sample seeds derive from (global seed, lesion type, index), every
//! artifact is written via temp-and-rename, and the manifest is assembled
//! in task order, so output bytes do not depend on the worker count.

use crate::commands::{resolve_path, write_labels_atomic, write_volume_atomic};
use crate::config::{hash_hex, GenerationConfig};
use crate::error::{CmdError, DataResult};
use crate::manifest::{
    read_curated_manifest, write_atomic, write_batch_manifest, BatchManifest, RunHeader,
    SampleRow, SampleStatus,
};
use lesionforge::curation::{select_templates, PoolEntry, ScanRecord};
use lesionforge::io::nifti;
use lesionforge::lesion::{LesionSpec, LesionType, SamplingParams};
use lesionforge::refine::{
    refine_volume, NoisePredictor, OraclePredictor, RefineConfig, SmoothingPredictor,
    ZeroPredictor,
};
use lesionforge::seed::{derive_seed, derive_seed_indexed};
use lesionforge::synth::{synthesize, Provenance, SynthSample, Template};
use lesionforge::volume::{LabelMap, Volume3D};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

/// Per-sample provenance written next to each artifact.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleProvenance {
    pub sample_id: String,
    /// Crop offset into the template grid, when a crop was applied.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub crop_start: Option<[usize; 3]>,
    #[serde(flatten)]
    pub core: Provenance,
}

struct Task {
    lesion_type: LesionType,
    sample_id: String,
    seed: u64,
}

pub fn run(
    config_path: &Path,
    manifest_path: &Path,
    out: Option<PathBuf>,
    seed_override: Option<u64>,
    workers_override: Option<usize>,
    grid_override: Option<usize>,
) -> Result<(), CmdError> {
    let (mut config, _) = GenerationConfig::load(config_path).data_ctx("loading config")?;
    if let Some(s) = seed_override {
        config.seed = s;
    }
    if let Some(w) = workers_override {
        config.workers = w.max(1);
    }
    if let Some(g) = grid_override {
        config.grid = g;
    }
    let out_dir = out
        .or_else(|| config.out_dir.clone())
        .ok_or_else(|| CmdError::usage("an output directory is required (--out or config out_dir)"))?;

    let config_bytes = std::fs::read(config_path).data()?;
    let manifest_bytes = std::fs::read(manifest_path).data()?;
    let config_hash = hash_hex(&config_bytes);
    // Outputs are a pure function of these inputs; the run id reflects that.
    let mut id_material = Vec::new();
    id_material.extend_from_slice(&config_bytes);
    id_material.extend_from_slice(&manifest_bytes);
    id_material.extend_from_slice(&config.seed.to_le_bytes());
    id_material.extend_from_slice(&(config.grid as u64).to_le_bytes());
    let run_id = hash_hex(&id_material)[..12].to_string();

    let curated = read_curated_manifest(manifest_path).data()?;
    let records = crate::manifest::curated_records(&curated);
    if records.is_empty() {
        return Err(CmdError::data_msg("curated manifest has no usable records"));
    }
    let params = config.sampling();
    params.validate().data()?;

    let sample_dir = out_dir.join("samples");
    std::fs::create_dir_all(&sample_dir).data_ctx("creating output directory")?;

    // Build pools and tasks in lesion-type order.
    let manifest_base = manifest_path.parent().unwrap_or(Path::new(".")).to_path_buf();
    let mut pools: BTreeMap<LesionType, Vec<PoolEntry>> = BTreeMap::new();
    let mut skipped: Vec<SampleRow> = Vec::new();
    let mut tasks: Vec<Task> = Vec::new();
    for (key, &count) in &config.counts {
        let ty = LesionType::from_key(key).data()?;
        if count == 0 {
            continue;
        }
        match select_templates(&records, ty) {
            Ok(entries) => {
                pools.insert(ty, entries);
                for index in 0..count {
                    tasks.push(Task {
                        lesion_type: ty,
                        sample_id: format!("{}_{index:04}", ty.key()),
                        seed: derive_seed_indexed(config.seed, ty.key(), index as u64),
                    });
                }
            }
            Err(e) => {
                eprintln!("skipping {key}: {e}");
                skipped.push(SampleRow {
                    sample_id: format!("{key}_skipped"),
                    lesion_type: key.clone(),
                    template_id: String::new(),
                    seed: 0,
                    status: SampleStatus::Skipped,
                    image: None,
                    labels: None,
                    report: None,
                    provenance: None,
                    refined: None,
                    error: Some(e.to_string()),
                });
            }
        }
    }

    // Preload every referenced template once; workers share them read-only.
    let mut templates: BTreeMap<String, Arc<Template>> = BTreeMap::new();
    for entries in pools.values() {
        for entry in entries {
            for scan_id in &entry.scan_ids {
                if templates.contains_key(scan_id) {
                    continue;
                }
                let record = records
                    .iter()
                    .find(|r| &r.scan_id == scan_id)
                    .expect("pool ids come from records");
                let template = load_template(&manifest_base, record).data_ctx("loading template")?;
                templates.insert(scan_id.clone(), Arc::new(template));
            }
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers.max(1))
        .build()
        .map_err(|e| CmdError::internal(anyhow::anyhow!("thread pool: {e}")))?;

    let ctx = GenContext {
        params: &params,
        pools: &pools,
        templates: &templates,
        sample_dir: &sample_dir,
        grid: config.grid,
        refine: config.refine.as_ref(),
    };
    let rows: Vec<SampleRow> = pool.install(|| {
        tasks
            .par_iter()
            .map(|task| match generate_one(task, &ctx) {
                Ok(row) => row,
                Err(e) => SampleRow {
                    sample_id: task.sample_id.clone(),
                    lesion_type: task.lesion_type.key().to_string(),
                    template_id: String::new(),
                    seed: task.seed,
                    status: SampleStatus::Failed,
                    image: None,
                    labels: None,
                    report: None,
                    provenance: None,
                    refined: None,
                    error: Some(e.to_string()),
                },
            })
            .collect()
    });

    let mut all_rows = skipped;
    all_rows.extend(rows);
    all_rows.sort_by(|a, b| a.sample_id.cmp(&b.sample_id));

    let manifest = BatchManifest {
        header: RunHeader {
            run_id,
            config_hash,
        },
        rows: all_rows,
    };
    let manifest_out = out_dir.join("manifest.jsonl");
    write_batch_manifest(&manifest_out, &manifest).data()?;

    let ok = manifest
        .rows
        .iter()
        .filter(|r| r.status == SampleStatus::Ok)
        .count();
    let failed = manifest
        .rows
        .iter()
        .filter(|r| r.status == SampleStatus::Failed)
        .count();
    println!(
        "generated {ok} samples ({failed} failed, {} skipped types) -> {}",
        manifest.rows.len() - ok - failed,
        manifest_out.display()
    );
    Ok(())
}

struct GenContext<'a> {
    params: &'a SamplingParams,
    pools: &'a BTreeMap<LesionType, Vec<PoolEntry>>,
    templates: &'a BTreeMap<String, Arc<Template>>,
    sample_dir: &'a Path,
    grid: usize,
    refine: Option<&'a crate::config::RefineSection>,
}

fn load_template(base: &Path, record: &ScanRecord) -> anyhow::Result<Template> {
    let image = nifti::read_volume(resolve_path(base, Path::new(&record.volume)))?;
    let mut labels = nifti::read_labels(resolve_path(base, Path::new(&record.labels)))?;
    // Curation-only structures (vertebrae, vessels, lobes) are not part of
    // the 25-class output scheme; synthesized samples keep organs only.
    for v in labels.voxels_mut() {
        if *v > 10 {
            *v = 0;
        }
    }
    Ok(Template {
        scan_id: record.scan_id.clone(),
        image,
        labels,
    })
}

/// Pick the pool entry for the spec's modality, falling back to any
/// admissible modality that actually has templates.
fn resolve_template<'a>(
    spec: &mut LesionSpec,
    entries: &'a [PoolEntry],
    seed: u64,
) -> anyhow::Result<&'a str> {
    let entry = entries
        .iter()
        .find(|e| e.modality == spec.enhancement)
        .or_else(|| entries.first())
        .ok_or_else(|| anyhow::anyhow!("no pool entries for {}", spec.lesion_type))?;
    spec.enhancement = entry.modality;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "template"));
    let idx = rng.gen_range(0..entry.scan_ids.len());
    Ok(&entry.scan_ids[idx])
}

fn crop_sample(sample: &SynthSample, grid: usize) -> anyhow::Result<(SynthSample, Option<[usize; 3]>)> {
    let dims = sample.image.dims();
    if grid == 0 || dims.iter().all(|&d| d <= grid) {
        return Ok((sample.clone(), None));
    }
    let centroid = sample
        .lesion_centroid()
        .ok_or_else(|| anyhow::anyhow!("sample has no lesion to crop around"))?;
    let mut start = [0usize; 3];
    let mut size = [0usize; 3];
    for a in 0..3 {
        size[a] = grid.min(dims[a]);
        let half = size[a] / 2;
        start[a] = centroid[a].saturating_sub(half).min(dims[a] - size[a]);
    }
    let image = sample.image.crop(start, size)?;
    let labels = sample.labels.crop(start, size)?;
    let lesion_mask = labels.mask_of(sample.provenance.spec.lesion_type.class_id());
    if lesion_mask.iter().all(|&m| !m) {
        anyhow::bail!("crop removed the entire lesion");
    }
    Ok((
        SynthSample {
            image,
            labels,
            lesion_mask,
            report: sample.report.clone(),
            provenance: sample.provenance.clone(),
        },
        Some(start),
    ))
}

fn build_predictor(
    spec: &str,
    image: &Volume3D,
    rc: &RefineConfig,
) -> anyhow::Result<Box<dyn NoisePredictor>> {
    match spec {
        "oracle" => Ok(Box::new(OraclePredictor::new(image, rc)?)),
        "zero" => Ok(Box::new(ZeroPredictor)),
        "smooth" => Ok(Box::new(SmoothingPredictor::default().with_schedule(rc)?)),
        other => {
            if let Some(cmd) = other.strip_prefix("external:") {
                Ok(Box::new(lesionforge::refine::ExternalPredictor::spawn(cmd)?))
            } else {
                anyhow::bail!("unknown predictor `{other}`; use oracle|zero|smooth|external:<cmd>")
            }
        }
    }
}

/// Condition mask for refinement: the target organ plus the lesion itself.
pub fn organ_condition_mask(labels: &LabelMap, lesion_type: LesionType) -> Vec<bool> {
    let organ_id = lesion_type.organ().class_id();
    let lesion_id = lesion_type.class_id();
    labels
        .voxels()
        .iter()
        .map(|&v| v == organ_id || v == lesion_id)
        .collect()
}

fn generate_one(task: &Task, ctx: &GenContext<'_>) -> anyhow::Result<SampleRow> {
    let mut spec = lesionforge::lesion::sample_spec(task.lesion_type, ctx.params, task.seed)?;
    let entries = ctx
        .pools
        .get(&task.lesion_type)
        .ok_or_else(|| anyhow::anyhow!("no pool for {}", task.lesion_type))?;
    let scan_id = resolve_template(&mut spec, entries, task.seed)?.to_string();
    let template = ctx
        .templates
        .get(&scan_id)
        .ok_or_else(|| anyhow::anyhow!("template {scan_id} not preloaded"))?;

    let sample = synthesize(template, &spec, ctx.params)?;
    let (sample, crop_start) = crop_sample(&sample, ctx.grid)?;

    let id = &task.sample_id;
    let image_name = format!("{id}_image.nii.gz");
    let labels_name = format!("{id}_labels.nii.gz");
    let report_name = format!("{id}_report.json");
    let prov_name = format!("{id}_provenance.json");

    write_volume_atomic(&ctx.sample_dir.join(&image_name), &sample.image)?;
    write_labels_atomic(&ctx.sample_dir.join(&labels_name), &sample.labels)?;
    let report_json = sample.report.to_json()?;
    write_atomic(&ctx.sample_dir.join(&report_name), report_json.as_bytes())?;
    let provenance = SampleProvenance {
        sample_id: id.clone(),
        crop_start,
        core: sample.provenance.clone(),
    };
    write_atomic(
        &ctx.sample_dir.join(&prov_name),
        serde_json::to_string_pretty(&provenance)?.as_bytes(),
    )?;

    let mut refined_path = None;
    if let Some(section) = ctx.refine {
        if section.enabled {
            let mut rc = section.config.clone();
            rc.seed = derive_seed(task.seed, "refine");
            let predictor = build_predictor(&section.predictor, &sample.image, &rc)?;
            let condition = organ_condition_mask(&sample.labels, task.lesion_type);
            let refined = refine_volume(&sample.image, &condition, predictor.as_ref(), &rc)?;
            let refined_name = format!("{id}_refined.nii.gz");
            write_volume_atomic(&ctx.sample_dir.join(&refined_name), &refined)?;
            refined_path = Some(PathBuf::from("samples").join(refined_name));
        }
    }

    Ok(SampleRow {
        sample_id: id.clone(),
        lesion_type: task.lesion_type.key().to_string(),
        template_id: scan_id,
        seed: task.seed,
        status: SampleStatus::Ok,
        image: Some(PathBuf::from("samples").join(image_name)),
        labels: Some(PathBuf::from("samples").join(labels_name)),
        report: Some(PathBuf::from("samples").join(report_name)),
        provenance: Some(PathBuf::from("samples").join(prov_name)),
        refined: refined_path,
        error: None,
    })
}
