//! `preview`: axial/coronal/sagittal mid-lesion slices with the lesion
//! contour burned in, windowed at soft tissue (W400/L40).

use crate::commands::resolve_path;
use crate::error::{CmdError, DataResult};
use crate::manifest::{read_batch_manifest, SampleStatus};
use image::GrayImage;
use lesionforge::io::nifti;
use lesionforge::lesion::LesionType;
use lesionforge::volume::{LabelMap, Volume3D};
use std::path::Path;

const WINDOW_WIDTH: f64 = 400.0;
const WINDOW_LEVEL: f64 = 40.0;

pub fn run(manifest_path: &Path, sample_id: &str, out: &Path) -> Result<(), CmdError> {
    let manifest = read_batch_manifest(manifest_path).data()?;
    let row = manifest
        .rows
        .iter()
        .find(|r| r.sample_id == sample_id)
        .ok_or_else(|| CmdError::data_msg(format!("sample `{sample_id}` not in manifest")))?;
    if row.status != SampleStatus::Ok {
        return Err(CmdError::data_msg(format!(
            "sample `{sample_id}` has status {:?}",
            row.status
        )));
    }
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let image = nifti::read_volume(resolve_path(
        base,
        row.image.as_ref().ok_or_else(|| CmdError::data_msg("row has no image"))?,
    ))
    .data()?;
    let labels = nifti::read_labels(resolve_path(
        base,
        row.labels.as_ref().ok_or_else(|| CmdError::data_msg("row has no labels"))?,
    ))
    .data()?;
    let lesion_type = LesionType::from_key(&row.lesion_type).data()?;
    let mask = labels.mask_of(lesion_type.class_id());
    if mask.iter().all(|&m| !m) {
        return Err(CmdError::data_msg(format!(
            "sample `{sample_id}` has an empty lesion mask"
        )));
    }

    let centroid = mask_centroid(&labels, &mask);
    std::fs::create_dir_all(out).data_ctx("creating output directory")?;

    for (plane, name) in [(Plane::Axial, "axial"), (Plane::Coronal, "coronal"), (Plane::Sagittal, "sagittal")]
    {
        let png = render_slice(&image, &labels, &mask, centroid, plane);
        let path = out.join(format!("{sample_id}_{name}.png"));
        png.save(&path)
            .map_err(|e| CmdError::data(anyhow::anyhow!("writing {}: {e}", path.display())))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn mask_centroid(labels: &LabelMap, mask: &[bool]) -> [usize; 3] {
    let grid = labels.grid();
    let mut acc = [0.0f64; 3];
    let mut n = 0usize;
    for (i, &m) in mask.iter().enumerate() {
        if m {
            let c = grid.coords(i);
            for a in 0..3 {
                acc[a] += c[a] as f64;
            }
            n += 1;
        }
    }
    [
        (acc[0] / n as f64).round() as usize,
        (acc[1] / n as f64).round() as usize,
        (acc[2] / n as f64).round() as usize,
    ]
}

#[derive(Clone, Copy)]
enum Plane {
    Axial,
    Coronal,
    Sagittal,
}

fn window(v: f64) -> u8 {
    let lo = WINDOW_LEVEL - WINDOW_WIDTH / 2.0;
    (((v - lo) / WINDOW_WIDTH).clamp(0.0, 1.0) * 255.0).round() as u8
}

fn render_slice(
    image: &Volume3D,
    labels: &LabelMap,
    mask: &[bool],
    centroid: [usize; 3],
    plane: Plane,
) -> GrayImage {
    let grid = labels.grid();
    let dims = image.dims();
    // In-plane coordinate axes (u, v) and the fixed axis.
    let (ua, va, fixed_axis) = match plane {
        Plane::Axial => (0usize, 1usize, 2usize),
        Plane::Coronal => (0, 2, 1),
        Plane::Sagittal => (1, 2, 0),
    };
    let fixed = centroid[fixed_axis];
    let (w, h) = (dims[ua] as u32, dims[va] as u32);
    let mut img = GrayImage::new(w, h);

    let voxel_at = |u: usize, v: usize| -> [usize; 3] {
        let mut c = [0usize; 3];
        c[ua] = u;
        c[va] = v;
        c[fixed_axis] = fixed;
        c
    };

    for v in 0..h as usize {
        for u in 0..w as usize {
            let c = voxel_at(u, v);
            let idx = grid.index(c[0], c[1], c[2]);
            let mut px = window(image.voxels()[idx]);
            if mask[idx] {
                // Contour: lesion voxel with an in-plane non-lesion neighbor.
                let mut boundary = false;
                for (du, dv) in [(-1i64, 0i64), (1, 0), (0, -1), (0, 1)] {
                    let nu = u as i64 + du;
                    let nv = v as i64 + dv;
                    if nu < 0 || nv < 0 || nu >= w as i64 || nv >= h as i64 {
                        boundary = true;
                        break;
                    }
                    let nc = voxel_at(nu as usize, nv as usize);
                    if !mask[grid.index(nc[0], nc[1], nc[2])] {
                        boundary = true;
                        break;
                    }
                }
                if boundary {
                    px = 255;
                }
            }
            img.put_pixel(u as u32, v as u32, image::Luma([px]));
        }
    }
    img
}
