//! `curate`: standardize template scans and derive the curated pool
//! manifest (scan range, contrast class, per-organ healthy flags).

use crate::commands::{resolve_path, write_labels_atomic, write_volume_atomic};
use crate::error::{CmdError, DataResult};
use crate::manifest::{read_input_manifest, write_curated_manifest, CuratedRow, InputRow};
use lesionforge::curation::{classify_record, CurationConfig, LandmarkPresence, ScanRecord};
use lesionforge::io::nifti;
use lesionforge::lesion::{LesionType, Organ};
use lesionforge::volume::{canonicalize_labels, canonicalize_orientation, resample_isotropic_1mm};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

pub fn run(manifest_in: &Path, out: &Path, config_path: Option<&Path>) -> Result<(), CmdError> {
    let config = match config_path {
        Some(p) => {
            let text = std::fs::read_to_string(p).data_ctx("reading keyword config")?;
            CurationConfig::from_json(&text).data_ctx("parsing keyword config")?
        }
        None => CurationConfig::default(),
    };

    let rows = read_input_manifest(manifest_in).data()?;
    if rows.is_empty() {
        return Err(CmdError::data_msg(format!(
            "no records in manifest {}",
            manifest_in.display()
        )));
    }
    std::fs::create_dir_all(out).data_ctx("creating output directory")?;
    let base = manifest_in.parent().unwrap_or(Path::new("."));

    let mut curated = Vec::with_capacity(rows.len());
    let mut ok_count = 0usize;
    for row in &rows {
        match curate_one(row, base, out, &config) {
            Ok(record) => {
                ok_count += 1;
                curated.push(CuratedRow::Ok { record });
            }
            Err(e) => {
                eprintln!("scan {}: {e}", row.scan_id);
                curated.push(CuratedRow::Failed {
                    scan_id: row.scan_id.clone(),
                    error: e.to_string(),
                });
            }
        }
    }

    let manifest_path = out.join("curated.jsonl");
    write_curated_manifest(&manifest_path, &curated).data()?;

    if ok_count == 0 {
        return Err(CmdError::data_msg("every manifest row failed curation"));
    }

    // Pool counts per (lesion type, modality).
    let records: Vec<ScanRecord> = crate::manifest::curated_records(&curated);
    println!("curated {ok_count}/{} scans -> {}", rows.len(), manifest_path.display());
    for ty in LesionType::ALL {
        match lesionforge::curation::select_templates(&records, ty) {
            Ok(entries) => {
                for e in entries {
                    println!(
                        "pool {:<20} {:<12} {} templates",
                        ty.key(),
                        e.modality.option_str(),
                        e.scan_ids.len()
                    );
                }
            }
            Err(_) => println!("pool {:<20} EMPTY", ty.key()),
        }
    }
    Ok(())
}

fn curate_one(
    row: &InputRow,
    base: &Path,
    out: &Path,
    config: &CurationConfig,
) -> anyhow::Result<ScanRecord> {
    let vol_path = resolve_path(base, &row.volume);
    let lbl_path = resolve_path(base, &row.labels);
    let volume = nifti::read_volume(&vol_path)?;
    let labels = nifti::read_labels(&lbl_path)?;

    // Standardize: canonical orientation, 1 mm isotropic grid.
    let (volume, _) = canonicalize_orientation(&volume);
    let (labels, _) = canonicalize_labels(&labels);
    let volume = resample_isotropic_1mm(&volume)?;
    let labels = labels.resample_isotropic_1mm_nearest()?;
    if volume.dims() != labels.dims() {
        anyhow::bail!(
            "image {:?} and labels {:?} disagree after standardization",
            volume.dims(),
            labels.dims()
        );
    }

    let std_volume = out.join(format!("{}_image.nii.gz", row.scan_id));
    let std_labels = out.join(format!("{}_labels.nii.gz", row.scan_id));
    write_volume_atomic(&std_volume, &volume)?;
    write_labels_atomic(&std_labels, &labels)?;

    let voxel_mm3 = volume.grid().voxel_mm3();
    let mut counts: BTreeMap<u16, usize> = BTreeMap::new();
    for &v in labels.voxels() {
        if v != 0 {
            *counts.entry(v).or_insert(0) += 1;
        }
    }
    let present = |id: u16| counts.get(&id).copied().unwrap_or(0) > 0;
    let s = config.structure_labels;
    let landmarks = LandmarkPresence {
        t1_vertebra: present(s.t1_vertebra),
        t8_vertebra: present(s.t8_vertebra),
        l5_vertebra: present(s.l5_vertebra),
        lung_upper_lobe_left: present(s.lung_upper_lobe_left),
        lung_upper_lobe_right: present(s.lung_upper_lobe_right),
        bladder: present(config.organ_label(Organ::Bladder)),
    };

    let mut organ_volumes = BTreeMap::new();
    for organ in Organ::ALL {
        let id = config.organ_label(organ);
        let count = counts.get(&id).copied().unwrap_or(0);
        organ_volumes.insert(organ.key().to_string(), count as f64 * voxel_mm3);
    }

    let mean_hu = |id: u16| -> Option<f64> {
        let mut sum = 0.0;
        let mut n = 0usize;
        for (hu, &lbl) in volume.voxels().iter().zip(labels.voxels()) {
            if lbl == id {
                sum += hu;
                n += 1;
            }
        }
        (n > 0).then(|| sum / n as f64)
    };
    let aorta_mean = mean_hu(s.aorta);
    let ivc_mean = mean_hu(s.inferior_vena_cava);

    Ok(classify_record(
        row.scan_id.clone(),
        std_volume.file_name().unwrap().to_string_lossy().into_owned(),
        std_labels.file_name().unwrap().to_string_lossy().into_owned(),
        row.impression.clone(),
        landmarks,
        organ_volumes,
        aorta_mean,
        ivc_mean,
        config,
    ))
}

// Paths in the curated manifest are relative to the manifest directory so
// output trees stay relocatable and byte-identical across runs.
pub fn record_volume_path(out_dir: &Path, record: &ScanRecord) -> PathBuf {
    resolve_path(out_dir, Path::new(&record.volume))
}

pub fn record_labels_path(out_dir: &Path, record: &ScanRecord) -> PathBuf {
    resolve_path(out_dir, Path::new(&record.labels))
}
