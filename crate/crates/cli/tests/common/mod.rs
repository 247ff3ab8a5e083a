//! Shared synthetic fixtures for the integration and acceptance suites:
//! procedurally built template scans (all ten organs, both contrast
//! phases, curation landmarks) plus desk-scale sampling parameters
//! suitable for 64³ grids.

#![allow(dead_code)]

use lesionforge::curation::CurationConfig;
use lesionforge::io::nifti;
use lesionforge::lesion::{LesionType, Organ, SamplingParams};
use lesionforge::synth::Template;
use lesionforge::volume::{LabelMap, Orientation, Volume3D, VoxelGrid};
use std::path::{Path, PathBuf};

pub const DIMS: [usize; 3] = [64, 64, 64];

/// Typical in-organ HU per target organ.
pub fn organ_hu(organ: Organ) -> f64 {
    match organ {
        Organ::Lung => -700.0,
        Organ::Liver => 60.0,
        Organ::Gallbladder => 20.0,
        Organ::Pancreas => 45.0,
        Organ::Esophagus => 40.0,
        Organ::Stomach => 35.0,
        Organ::Colorectal => 30.0,
        Organ::Kidney => 35.0,
        Organ::Bladder => 15.0,
        Organ::Bone => 250.0,
    }
}

/// Organ sphere centers on a 21 mm lattice: pairwise clearance > diameter.
fn organ_centers() -> Vec<[f64; 3]> {
    let lattice = [11.0, 32.0, 53.0];
    let mut centers = Vec::new();
    for z in lattice {
        for y in lattice {
            for x in lattice {
                centers.push([x, y, z]);
                if centers.len() == 10 {
                    return centers;
                }
            }
        }
    }
    unreachable!()
}

fn paint_sphere(
    image: &mut Volume3D,
    labels: &mut LabelMap,
    grid: &VoxelGrid,
    center: [f64; 3],
    radius: f64,
    hu: f64,
    id: u16,
) {
    let [nx, ny, nz] = grid.dims;
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                let dx = x as f64 - center[0];
                let dy = y as f64 - center[1];
                let dz = z as f64 - center[2];
                if dx * dx + dy * dy + dz * dz <= radius * radius {
                    let i = grid.index(x, y, z);
                    image.voxels_mut()[i] = hu;
                    labels.voxels_mut()[i] = id;
                }
            }
        }
    }
}

fn paint_box(
    image: &mut Volume3D,
    labels: &mut LabelMap,
    grid: &VoxelGrid,
    corner: [usize; 3],
    size: [usize; 3],
    hu: f64,
    id: u16,
) {
    for z in corner[2]..corner[2] + size[2] {
        for y in corner[1]..corner[1] + size[1] {
            for x in corner[0]..corner[0] + size[0] {
                let i = grid.index(x, y, z);
                image.voxels_mut()[i] = hu;
                labels.voxels_mut()[i] = id;
            }
        }
    }
}

/// A whole-body style template: ten organ spheres (radius 10 mm, > 4000
/// mm³), curation landmark boxes, and aorta/IVC boxes whose HU decide the
/// contrast class.
pub fn build_template(scan_id: &str, enhanced: bool) -> Template {
    let grid = VoxelGrid::new(DIMS, [1.0; 3]).unwrap();
    let mut image = Volume3D::new(
        DIMS,
        [1.0; 3],
        [0.0; 3],
        Orientation::canonical(),
        vec![20.0; grid.voxel_count()],
    )
    .unwrap();
    let mut labels = LabelMap::zeros(DIMS, [1.0; 3]).unwrap();

    for (organ, center) in Organ::ALL.into_iter().zip(organ_centers()) {
        paint_sphere(
            &mut image,
            &mut labels,
            &grid,
            center,
            10.0,
            organ_hu(organ),
            organ.class_id(),
        );
    }

    let s = CurationConfig::default().structure_labels;
    let (aorta_hu, ivc_hu) = if enhanced { (150.0, 120.0) } else { (45.0, 40.0) };
    // Landmarks live in lattice slots the organs do not use.
    paint_box(&mut image, &mut labels, &grid, [30, 28, 30], [3, 3, 3], 300.0, s.t1_vertebra);
    paint_box(&mut image, &mut labels, &grid, [51, 28, 30], [3, 3, 3], 300.0, s.t8_vertebra);
    paint_box(&mut image, &mut labels, &grid, [9, 40, 30], [3, 3, 3], 300.0, s.l5_vertebra);
    paint_box(&mut image, &mut labels, &grid, [51, 40, 30], [3, 3, 3], -750.0, s.lung_upper_lobe_left);
    paint_box(&mut image, &mut labels, &grid, [9, 51, 30], [3, 3, 3], -750.0, s.lung_upper_lobe_right);
    paint_box(&mut image, &mut labels, &grid, [30, 51, 30], [3, 3, 3], aorta_hu, s.aorta);
    paint_box(&mut image, &mut labels, &grid, [51, 51, 30], [3, 3, 3], ivc_hu, s.inferior_vena_cava);

    Template {
        scan_id: scan_id.to_string(),
        image,
        labels,
    }
}

/// Write the two-template library (enhanced + plain) and its input
/// manifest; returns the manifest path.
pub fn write_template_library(dir: &Path) -> PathBuf {
    std::fs::create_dir_all(dir).unwrap();
    let mut manifest = String::new();
    for (scan_id, enhanced) in [("tap_enhanced", true), ("tap_plain", false)] {
        let template = build_template(scan_id, enhanced);
        let vol = dir.join(format!("{scan_id}.nii.gz"));
        let lbl = dir.join(format!("{scan_id}_labels.nii.gz"));
        nifti::write_volume(&vol, &template.image).unwrap();
        nifti::write_labels(&lbl, &template.labels).unwrap();
        manifest.push_str(&format!(
            "{{\"scan_id\": \"{scan_id}\", \"volume\": \"{scan_id}.nii.gz\", \"labels\": \"{scan_id}_labels.nii.gz\", \"impression\": \"routine follow-up, no abnormal findings\"}}\n",
        ));
    }
    let path = dir.join("input_manifest.jsonl");
    std::fs::write(&path, manifest).unwrap();
    path
}

/// Desk-scale sampling parameters: small lesions that fit radius-10 organ
/// spheres on a 64³ grid.
pub fn desk_params() -> SamplingParams {
    let mut params = SamplingParams::default();
    for (ty, tp) in params.per_type.iter_mut() {
        let wall = matches!(
            ty,
            LesionType::GallbladderCancer
                | LesionType::EsophagealCancer
                | LesionType::GastricCancer
                | LesionType::ColorectalCancer
                | LesionType::BladderCancer
        );
        if wall {
            // Thin along Z, spread along the wall.
            tp.size_log_mu = [8.0f64.ln(), 13.0f64.ln(), 13.0f64.ln()];
            tp.size_log_sigma = [0.15; 3];
            tp.size_bounds_mm = (5.0, 16.0);
        } else if matches!(ty, LesionType::Gallstone | LesionType::KidneyStone) {
            tp.size_log_mu = [5.0f64.ln(); 3];
            tp.size_log_sigma = [0.2; 3];
            tp.size_bounds_mm = (3.0, 8.0);
        } else {
            tp.size_log_mu = [8.0f64.ln(); 3];
            tp.size_log_sigma = [0.2; 3];
            tp.size_bounds_mm = (4.0, 12.0);
        }
        // Keep the blur band comfortably inside the template.
        tp.ill_defined_blur_mm = (1.0, 2.0);
        tp.invasion_depth_mm = (2.0, 4.0);
    }
    params.validate().unwrap();
    params
}

/// Generation config JSON with the desk-scale parameters inlined.
pub fn write_generation_config(
    path: &Path,
    seed: u64,
    workers: usize,
    grid: usize,
    count_per_type: usize,
) -> PathBuf {
    let counts: std::collections::BTreeMap<String, usize> = LesionType::ALL
        .iter()
        .map(|t| (t.key().to_string(), count_per_type))
        .collect();
    let config = serde_json::json!({
        "seed": seed,
        "workers": workers,
        "grid": grid,
        "counts": counts,
        "sampling_params": desk_params(),
    });
    std::fs::write(path, serde_json::to_string_pretty(&config).unwrap()).unwrap();
    path.to_path_buf()
}

/// Path of the compiled CLI binary.
pub fn cli_bin() -> &'static str {
    env!("CARGO_BIN_EXE_lesionforge")
}

/// Run the CLI binary, returning (exit code, stdout, stderr).
pub fn run_cli(args: &[&str]) -> (i32, String, String) {
    let out = std::process::Command::new(cli_bin())
        .args(args)
        .output()
        .expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}
