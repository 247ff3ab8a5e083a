//! Template-scan selection rules.
//!
//! A candidate scan enters the template pool for a lesion type when its
//! scan range covers the target organ, its contrast class matches the
//! lesion's admissible modalities, and the target organ is healthy: larger
//! than 4000 mm³ and never mentioned in the report impression.

use crate::error::{Error, Result};
use crate::lesion::{Enhancement, LesionType, Organ};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Anatomical landmarks whose presence decides the scan-range class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LandmarkPresence {
    pub t1_vertebra: bool,
    pub t8_vertebra: bool,
    pub l5_vertebra: bool,
    pub lung_upper_lobe_left: bool,
    pub lung_upper_lobe_right: bool,
    pub bladder: bool,
}

/// Study-range classification of a template scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScanRange {
    Thorax,
    AbdomenPelvis,
    ThoraxAbdomenPelvis,
    Other,
}

impl ScanRange {
    /// Whether scans of this range image the given organ.
    pub fn covers(self, organ: Organ) -> bool {
        match self {
            ScanRange::ThoraxAbdomenPelvis => true,
            ScanRange::Thorax => matches!(organ, Organ::Lung | Organ::Esophagus | Organ::Bone),
            ScanRange::AbdomenPelvis => !matches!(organ, Organ::Lung | Organ::Esophagus),
            ScanRange::Other => false,
        }
    }
}

/// Contrast class of a scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ContrastClass {
    Plain,
    Enhanced,
}

impl ContrastClass {
    pub fn as_enhancement(self) -> Enhancement {
        match self {
            ContrastClass::Plain => Enhancement::PlainCt,
            ContrastClass::Enhanced => Enhancement::EnhancedCt,
        }
    }
}

/// Classify the study range from landmark presence. The most specific rule
/// wins: thorax-abdomen-pelvis, then thorax, then abdomen-pelvis.
pub fn classify_scan_range(present: &LandmarkPresence) -> ScanRange {
    let lungs = present.lung_upper_lobe_left && present.lung_upper_lobe_right;
    if present.t1_vertebra && lungs && present.bladder {
        ScanRange::ThoraxAbdomenPelvis
    } else if present.t1_vertebra && lungs && !present.l5_vertebra {
        ScanRange::Thorax
    } else if present.t8_vertebra && present.bladder && !present.t1_vertebra {
        ScanRange::AbdomenPelvis
    } else {
        ScanRange::Other
    }
}

/// A scan is non-contrast only when both vessel means sit below 80 HU.
pub fn classify_contrast(aorta_mean_hu: f64, ivc_mean_hu: f64) -> ContrastClass {
    if aorta_mean_hu < 80.0 && ivc_mean_hu < 80.0 {
        ContrastClass::Plain
    } else {
        ContrastClass::Enhanced
    }
}

/// Lowercase and collapse all whitespace runs to single spaces.
fn normalize_text(text: &str) -> String {
    text.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

/// Healthy-organ criterion: volume strictly above 4000 mm³ and no keyword
/// occurring as a (case-insensitive, whitespace-normalized) substring of
/// the impression.
pub fn is_healthy_organ(
    organ_volume_mm3: f64,
    impression_text: &str,
    organ_keywords: &[String],
) -> bool {
    if organ_volume_mm3 <= 4000.0 {
        return false;
    }
    let text = normalize_text(impression_text);
    !organ_keywords
        .iter()
        .any(|kw| text.contains(&normalize_text(kw)))
}

/// Derived classification of one candidate scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRecord {
    pub scan_id: String,
    /// Paths of the standardized volume and label map.
    pub volume: String,
    pub labels: String,
    pub impression: String,
    pub scan_range: ScanRange,
    pub contrast: ContrastClass,
    /// Organ volume in mm³, keyed by organ key; absent organs are 0.
    pub organ_volumes_mm3: BTreeMap<String, f64>,
    /// Healthy flag per organ key.
    pub healthy: BTreeMap<String, bool>,
    pub aorta_mean_hu: Option<f64>,
    pub ivc_mean_hu: Option<f64>,
}

impl ScanRecord {
    pub fn is_healthy_for(&self, organ: Organ) -> bool {
        self.healthy.get(organ.key()).copied().unwrap_or(false)
    }
}

/// Accepted template scans for one (lesion type, modality) combination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolEntry {
    pub lesion_type: LesionType,
    pub modality: Enhancement,
    pub scan_ids: Vec<String>,
}

/// Curated template pool across lesion types and modalities.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TemplatePool {
    pub entries: Vec<PoolEntry>,
}

impl TemplatePool {
    pub fn scan_ids(&self, lesion_type: LesionType, modality: Enhancement) -> Option<&[String]> {
        self.entries
            .iter()
            .find(|e| e.lesion_type == lesion_type && e.modality == modality)
            .map(|e| e.scan_ids.as_slice())
    }
}

/// Filter curated records down to the modality-correct, organ-covering,
/// healthy templates for a lesion type. Returns one pool entry per
/// admissible modality; an empty result is a curation failure naming the
/// (lesion, modality) pair.
pub fn select_templates(records: &[ScanRecord], lesion_type: LesionType) -> Result<Vec<PoolEntry>> {
    let organ = lesion_type.organ();
    let mut entries = Vec::new();
    for &modality in lesion_type.allowed_modalities() {
        let scan_ids: Vec<String> = records
            .iter()
            .filter(|r| r.contrast.as_enhancement() == modality)
            .filter(|r| r.scan_range.covers(organ))
            .filter(|r| r.is_healthy_for(organ))
            .map(|r| r.scan_id.clone())
            .collect();
        if !scan_ids.is_empty() {
            entries.push(PoolEntry {
                lesion_type,
                modality,
                scan_ids,
            });
        }
    }
    if entries.is_empty() {
        let modalities: Vec<&str> = lesion_type
            .allowed_modalities()
            .iter()
            .map(|m| m.option_str())
            .collect();
        return Err(Error::EmptyPool {
            lesion: lesion_type.key().to_string(),
            modality: modalities.join(" | "),
        });
    }
    Ok(entries)
}

/// Organ keyword vocabularies and structure label ids used to derive scan
/// records from label maps. Shipped defaults are editable configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurationConfig {
    /// Keyword list per organ key; matching is case-insensitive substring.
    pub keywords: BTreeMap<String, Vec<String>>,
    /// Label ids of the ten target organs in curation label maps.
    pub organ_labels: BTreeMap<String, u16>,
    /// Label ids of curation-only structures.
    pub structure_labels: StructureLabels,
}

/// Label ids of anatomical structures consulted only during curation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructureLabels {
    pub t1_vertebra: u16,
    pub t8_vertebra: u16,
    pub l5_vertebra: u16,
    pub lung_upper_lobe_left: u16,
    pub lung_upper_lobe_right: u16,
    pub aorta: u16,
    pub inferior_vena_cava: u16,
}

impl Default for CurationConfig {
    fn default() -> Self {
        let mut keywords = BTreeMap::new();
        let entries: [(&str, &[&str]); 10] = [
            ("lung", &["lung", "pulmonary", "pneumo"]),
            ("liver", &["liver", "hepatic", "hepato"]),
            ("gallbladder", &["gallbladder", "cholecyst", "biliary"]),
            ("pancreas", &["pancrea"]),
            ("esophagus", &["esophag", "oesophag"]),
            ("stomach", &["stomach", "gastric"]),
            ("colorectal", &["colon", "rectum", "rectal", "colorectal", "sigmoid", "cecum"]),
            ("kidney", &["kidney", "renal", "nephro"]),
            ("bladder", &["bladder", "vesical"]),
            ("bone", &["bone", "osseous", "vertebral lesion", "skeletal"]),
        ];
        for (organ, kws) in entries {
            keywords.insert(
                organ.to_string(),
                kws.iter().map(|s| s.to_string()).collect(),
            );
        }
        let organ_labels = Organ::ALL
            .into_iter()
            .map(|o| (o.key().to_string(), o.class_id()))
            .collect();
        CurationConfig {
            keywords,
            organ_labels,
            // Curation-only structures live above the 25-class scheme.
            structure_labels: StructureLabels {
                t1_vertebra: 31,
                t8_vertebra: 32,
                l5_vertebra: 33,
                lung_upper_lobe_left: 34,
                lung_upper_lobe_right: 35,
                aorta: 36,
                inferior_vena_cava: 37,
            },
        }
    }
}

impl CurationConfig {
    pub fn keywords_for(&self, organ: Organ) -> &[String] {
        self.keywords
            .get(organ.key())
            .map(|v| v.as_slice())
            .unwrap_or(&[])
    }

    pub fn organ_label(&self, organ: Organ) -> u16 {
        self.organ_labels
            .get(organ.key())
            .copied()
            .unwrap_or_else(|| organ.class_id())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(json: &str) -> Result<CurationConfig> {
        let cfg: CurationConfig = serde_json::from_str(json)?;
        for organ in Organ::ALL {
            let kws = cfg.keywords_for(organ);
            if kws.is_empty() {
                return Err(Error::InvalidParameter(format!(
                    "keyword list for organ `{}` is empty",
                    organ.key()
                )));
            }
        }
        Ok(cfg)
    }
}

/// Derive a full scan record from per-structure measurements.
#[allow(clippy::too_many_arguments)]
pub fn classify_record(
    scan_id: String,
    volume_path: String,
    labels_path: String,
    impression: String,
    landmarks: LandmarkPresence,
    organ_volumes_mm3: BTreeMap<String, f64>,
    aorta_mean_hu: Option<f64>,
    ivc_mean_hu: Option<f64>,
    config: &CurationConfig,
) -> ScanRecord {
    let scan_range = classify_scan_range(&landmarks);
    // Missing vessels read as air, far below the contrast threshold.
    let contrast = classify_contrast(
        aorta_mean_hu.unwrap_or(-1000.0),
        ivc_mean_hu.unwrap_or(-1000.0),
    );
    let mut healthy = BTreeMap::new();
    for organ in Organ::ALL {
        let vol = organ_volumes_mm3.get(organ.key()).copied().unwrap_or(0.0);
        healthy.insert(
            organ.key().to_string(),
            is_healthy_organ(vol, &impression, config.keywords_for(organ)),
        );
    }
    ScanRecord {
        scan_id,
        volume: volume_path,
        labels: labels_path,
        impression,
        scan_range,
        contrast,
        organ_volumes_mm3,
        healthy,
        aorta_mean_hu,
        ivc_mean_hu,
    }
}
