//! Structured lesion attributes, per-type sampling, and report encoding.
//!
//! A lesion is described by eight attributes (enhancement status, location,
//! size, shape, density, heterogeneity, surface, invasion), each with a
//! fixed option vocabulary. The five categorical attributes beyond
//! enhancement/location/size map onto classification labels with
//! cardinalities 4, 3, 2, 2, 2 in vocabulary order.

use crate::error::{Error, Result};
use crate::seed::derive_seed;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

/// The ten target organs, with their label-map class ids (1..=10).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Organ {
    Lung,
    Liver,
    Gallbladder,
    Pancreas,
    Esophagus,
    Stomach,
    Colorectal,
    Kidney,
    Bladder,
    Bone,
}

impl Organ {
    pub const ALL: [Organ; 10] = [
        Organ::Lung,
        Organ::Liver,
        Organ::Gallbladder,
        Organ::Pancreas,
        Organ::Esophagus,
        Organ::Stomach,
        Organ::Colorectal,
        Organ::Kidney,
        Organ::Bladder,
        Organ::Bone,
    ];

    /// Label-map class id (1..=10).
    pub fn class_id(self) -> u16 {
        match self {
            Organ::Lung => 1,
            Organ::Liver => 2,
            Organ::Gallbladder => 3,
            Organ::Pancreas => 4,
            Organ::Esophagus => 5,
            Organ::Stomach => 6,
            Organ::Colorectal => 7,
            Organ::Kidney => 8,
            Organ::Bladder => 9,
            Organ::Bone => 10,
        }
    }

    /// Report location option string.
    pub fn option_str(self) -> &'static str {
        match self {
            Organ::Lung => "Lung",
            Organ::Liver => "Liver",
            Organ::Gallbladder => "Gallbladder",
            Organ::Pancreas => "Pancreas",
            Organ::Esophagus => "Esophagus",
            Organ::Stomach => "Stomach",
            Organ::Colorectal => "Colorectal",
            Organ::Kidney => "Kidney",
            Organ::Bladder => "Bladder",
            Organ::Bone => "Bone",
        }
    }

    /// Machine-friendly identifier used in configs and manifests.
    pub fn key(self) -> &'static str {
        match self {
            Organ::Lung => "lung",
            Organ::Liver => "liver",
            Organ::Gallbladder => "gallbladder",
            Organ::Pancreas => "pancreas",
            Organ::Esophagus => "esophagus",
            Organ::Stomach => "stomach",
            Organ::Colorectal => "colorectal",
            Organ::Kidney => "kidney",
            Organ::Bladder => "bladder",
            Organ::Bone => "bone",
        }
    }

    pub fn from_key(key: &str) -> Result<Organ> {
        Organ::ALL
            .into_iter()
            .find(|o| o.key() == key)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown organ `{key}`")))
    }
}

/// The fifteen lesion types, with their label-map class ids (11..=25).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LesionType {
    LungTumor,
    LiverTumor,
    GallbladderCancer,
    PancreasTumor,
    EsophagealCancer,
    GastricCancer,
    ColorectalCancer,
    KidneyTumor,
    BladderCancer,
    BoneMetastasis,
    LiverCyst,
    Gallstone,
    PancreasCyst,
    KidneyCyst,
    KidneyStone,
}

impl LesionType {
    pub const ALL: [LesionType; 15] = [
        LesionType::LungTumor,
        LesionType::LiverTumor,
        LesionType::GallbladderCancer,
        LesionType::PancreasTumor,
        LesionType::EsophagealCancer,
        LesionType::GastricCancer,
        LesionType::ColorectalCancer,
        LesionType::KidneyTumor,
        LesionType::BladderCancer,
        LesionType::BoneMetastasis,
        LesionType::LiverCyst,
        LesionType::Gallstone,
        LesionType::PancreasCyst,
        LesionType::KidneyCyst,
        LesionType::KidneyStone,
    ];

    /// Label-map class id (11..=25).
    pub fn class_id(self) -> u16 {
        match self {
            LesionType::LungTumor => 11,
            LesionType::LiverTumor => 12,
            LesionType::GallbladderCancer => 13,
            LesionType::PancreasTumor => 14,
            LesionType::EsophagealCancer => 15,
            LesionType::GastricCancer => 16,
            LesionType::ColorectalCancer => 17,
            LesionType::KidneyTumor => 18,
            LesionType::BladderCancer => 19,
            LesionType::BoneMetastasis => 20,
            LesionType::LiverCyst => 21,
            LesionType::Gallstone => 22,
            LesionType::PancreasCyst => 23,
            LesionType::KidneyCyst => 24,
            LesionType::KidneyStone => 25,
        }
    }

    pub fn organ(self) -> Organ {
        match self {
            LesionType::LungTumor => Organ::Lung,
            LesionType::LiverTumor | LesionType::LiverCyst => Organ::Liver,
            LesionType::GallbladderCancer | LesionType::Gallstone => Organ::Gallbladder,
            LesionType::PancreasTumor | LesionType::PancreasCyst => Organ::Pancreas,
            LesionType::EsophagealCancer => Organ::Esophagus,
            LesionType::GastricCancer => Organ::Stomach,
            LesionType::ColorectalCancer => Organ::Colorectal,
            LesionType::KidneyTumor | LesionType::KidneyCyst | LesionType::KidneyStone => {
                Organ::Kidney
            }
            LesionType::BladderCancer => Organ::Bladder,
            LesionType::BoneMetastasis => Organ::Bone,
        }
    }

    /// Benign types never invade surrounding structures.
    pub fn is_benign(self) -> bool {
        matches!(
            self,
            LesionType::LiverCyst
                | LesionType::Gallstone
                | LesionType::PancreasCyst
                | LesionType::KidneyCyst
                | LesionType::KidneyStone
        )
    }

    /// Template modalities admissible for this lesion type.
    pub fn allowed_modalities(self) -> &'static [Enhancement] {
        match self {
            LesionType::LungTumor | LesionType::KidneyStone => &[Enhancement::PlainCt],
            LesionType::LiverCyst | LesionType::Gallstone => {
                &[Enhancement::EnhancedCt, Enhancement::PlainCt]
            }
            _ => &[Enhancement::EnhancedCt],
        }
    }

    /// Machine-friendly identifier used in configs and manifests.
    pub fn key(self) -> &'static str {
        match self {
            LesionType::LungTumor => "lung_tumor",
            LesionType::LiverTumor => "liver_tumor",
            LesionType::GallbladderCancer => "gallbladder_cancer",
            LesionType::PancreasTumor => "pancreas_tumor",
            LesionType::EsophagealCancer => "esophageal_cancer",
            LesionType::GastricCancer => "gastric_cancer",
            LesionType::ColorectalCancer => "colorectal_cancer",
            LesionType::KidneyTumor => "kidney_tumor",
            LesionType::BladderCancer => "bladder_cancer",
            LesionType::BoneMetastasis => "bone_metastasis",
            LesionType::LiverCyst => "liver_cyst",
            LesionType::Gallstone => "gallstone",
            LesionType::PancreasCyst => "pancreas_cyst",
            LesionType::KidneyCyst => "kidney_cyst",
            LesionType::KidneyStone => "kidney_stone",
        }
    }

    pub fn from_key(key: &str) -> Result<LesionType> {
        LesionType::ALL
            .into_iter()
            .find(|t| t.key() == key)
            .ok_or_else(|| Error::UnknownLesionType(key.to_string()))
    }
}

impl fmt::Display for LesionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

macro_rules! attribute_enum {
    ($(#[$doc:meta])* $name:ident { $($variant:ident => $option:literal),+ $(,)? }) => {
        $(#[$doc])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
        pub enum $name {
            $(#[serde(rename = $option)] $variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            /// Exact report option string.
            pub fn option_str(self) -> &'static str {
                match self {
                    $($name::$variant => $option),+
                }
            }

            pub fn from_option_str(s: &str) -> Result<$name> {
                match s {
                    $($option => Ok($name::$variant),)+
                    other => Err(Error::UnknownOption {
                        attribute: stringify!($name).to_string(),
                        value: other.to_string(),
                    }),
                }
            }

            /// Classification label: position in the option vocabulary.
            pub fn label(self) -> u8 {
                Self::ALL.iter().position(|v| *v == self).unwrap() as u8
            }
        }
    };
}

attribute_enum!(
    /// Intravenous contrast agent usage.
    Enhancement {
        EnhancedCt => "Enhanced CT",
        PlainCt => "Plain CT",
    }
);

attribute_enum!(
    /// Morphological characteristics of the lesion.
    Shape {
        RoundLike => "Round-like",
        Irregular => "Irregular",
        WallThickening => "Wall thickening",
        PunctateNodular => "Punctate, nodular",
    }
);

attribute_enum!(
    /// Radiographic attenuation relative to surrounding normal tissue.
    Density {
        Hypodense => "Hypodense",
        Isodense => "Isodense",
        Hyperdense => "Hyperdense",
    }
);

attribute_enum!(
    /// Uniformity of attenuation within the lesion.
    Heterogeneity {
        Homogeneous => "Homogeneous",
        Heterogeneous => "Heterogeneous",
    }
);

attribute_enum!(
    /// Border and surface texture.
    Surface {
        WellDefined => "Well-defined margin",
        IllDefined => "Ill-defined margin",
    }
);

attribute_enum!(
    /// Relation to adjacent structures.
    Invasion {
        NoCloseRelationship => "No close relationship with surrounding structures",
        CloseRelationship => "Close relationship with adjacent structures",
    }
);

/// Lesion extents in millimetres across the axial (Z), sagittal (X) and
/// coronal (Y) planes, reported as "Z×X×Y mm".
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SizeMm {
    pub z: f64,
    pub x: f64,
    pub y: f64,
}

impl SizeMm {
    pub fn new(z: f64, x: f64, y: f64) -> Self {
        Self { z, x, y }
    }

    pub fn min(&self) -> f64 {
        self.z.min(self.x).min(self.y)
    }

    pub fn max(&self) -> f64 {
        self.z.max(self.x).max(self.y)
    }

    pub fn render(&self) -> String {
        format!("{}×{}×{} mm", self.z, self.x, self.y)
    }

    pub fn parse(s: &str) -> Result<SizeMm> {
        let body = s.strip_suffix(" mm").ok_or_else(|| Error::UnknownOption {
            attribute: "Size".into(),
            value: s.to_string(),
        })?;
        let parts: Vec<&str> = body.split('×').collect();
        if parts.len() != 3 {
            return Err(Error::UnknownOption {
                attribute: "Size".into(),
                value: s.to_string(),
            });
        }
        let mut vals = [0.0f64; 3];
        for (v, p) in vals.iter_mut().zip(&parts) {
            *v = p.parse().map_err(|_| Error::UnknownOption {
                attribute: "Size".into(),
                value: s.to_string(),
            })?;
        }
        Ok(SizeMm::new(vals[0], vals[1], vals[2]))
    }
}

impl Serialize for SizeMm {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.render())
    }
}

impl<'de> Deserialize<'de> for SizeMm {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        SizeMm::parse(&s).map_err(serde::de::Error::custom)
    }
}

/// One sampled realization of the eight structured attributes plus the
/// geometry seed that drives the voxel construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LesionSpec {
    pub lesion_type: LesionType,
    pub enhancement: Enhancement,
    pub size_mm: SizeMm,
    pub shape: Shape,
    pub density: Density,
    pub heterogeneity: Heterogeneity,
    pub surface: Surface,
    pub invasion: Invasion,
    pub seed: u64,
}

impl LesionSpec {
    pub fn organ(&self) -> Organ {
        self.lesion_type.organ()
    }

    /// Check every structural invariant against the sampling parameters.
    pub fn validate(&self, params: &SamplingParams) -> Result<()> {
        let tp = params.for_type(self.lesion_type)?;
        for (axis, v) in [
            ("Z", self.size_mm.z),
            ("X", self.size_mm.x),
            ("Y", self.size_mm.y),
        ] {
            if !(v > 0.0 && v >= tp.size_bounds_mm.0 && v <= tp.size_bounds_mm.1) {
                return Err(Error::InvalidParameter(format!(
                    "{axis} extent {v} mm outside bounds {:?}",
                    tp.size_bounds_mm
                )));
            }
        }
        if self.lesion_type.is_benign() && self.invasion != Invasion::NoCloseRelationship {
            return Err(Error::InvalidParameter(format!(
                "benign lesion `{}` cannot invade",
                self.lesion_type
            )));
        }
        if tp.shape_weights[self.shape.label() as usize] <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "shape `{}` not in the configured family of `{}`",
                self.shape.option_str(),
                self.lesion_type
            )));
        }
        if !self
            .lesion_type
            .allowed_modalities()
            .contains(&self.enhancement)
        {
            return Err(Error::InvalidParameter(format!(
                "modality `{}` not allowed for `{}`",
                self.enhancement.option_str(),
                self.lesion_type
            )));
        }
        Ok(())
    }

    /// Render the eight attributes into a structured report.
    pub fn render_report(&self) -> StructuredReport {
        StructuredReport {
            enhancement: self.enhancement,
            location: LocationField(self.organ()),
            size_mm: self.size_mm,
            shape: self.shape,
            density: self.density,
            heterogeneity: self.heterogeneity,
            surface: self.surface,
            invasion: self.invasion,
        }
    }
}

/// Location attribute wrapper serializing as the organ option string.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LocationField(pub Organ);

impl Serialize for LocationField {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(self.0.option_str())
    }
}

impl<'de> Deserialize<'de> for LocationField {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Organ::ALL
            .into_iter()
            .find(|o| o.option_str() == s)
            .map(LocationField)
            .ok_or_else(|| serde::de::Error::custom(format!("unknown location `{s}`")))
    }
}

/// The textual 8-attribute report. Serializes to the fixed-key JSON object
/// `{enhancement, location, size_mm, shape, density, heterogeneity,
/// surface, invasion}` with the exact option strings as values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructuredReport {
    pub enhancement: Enhancement,
    pub location: LocationField,
    pub size_mm: SizeMm,
    pub shape: Shape,
    pub density: Density,
    pub heterogeneity: Heterogeneity,
    pub surface: Surface,
    pub invasion: Invasion,
}

impl StructuredReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(json: &str) -> Result<StructuredReport> {
        Ok(serde_json::from_str(json)?)
    }

    /// Whether the report is exactly the rendering of the given spec.
    pub fn matches_spec(&self, spec: &LesionSpec) -> bool {
        *self == spec.render_report()
    }
}

/// Classification label vector over the five categorical attributes, in
/// vocabulary order: shape (0..=3), density (0..=2), heterogeneity,
/// surface, invasion (0..=1 each).
pub fn report_class_labels(report: &StructuredReport) -> [u8; 5] {
    [
        report.shape.label(),
        report.density.label(),
        report.heterogeneity.label(),
        report.surface.label(),
        report.invasion.label(),
    ]
}

/// Label vector from raw option strings; unknown strings are rejected.
pub fn report_class_labels_from_strings(
    shape: &str,
    density: &str,
    heterogeneity: &str,
    surface: &str,
    invasion: &str,
) -> Result<[u8; 5]> {
    Ok([
        Shape::from_option_str(shape)?.label(),
        Density::from_option_str(density)?.label(),
        Heterogeneity::from_option_str(heterogeneity)?.label(),
        Surface::from_option_str(surface)?.label(),
        Invasion::from_option_str(invasion)?.label(),
    ])
}

/// Per-type sampling distributions and graphical-operation parameters.
///
/// The shipped defaults are illustrative working values, not fitted
/// clinical distributions; they are meant to be edited per deployment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeParams {
    /// Log-normal (mu, sigma) of each extent in log-mm, order (Z, X, Y).
    pub size_log_mu: [f64; 3],
    pub size_log_sigma: [f64; 3],
    /// Hard clamp applied after sampling, mm.
    pub size_bounds_mm: (f64, f64),
    /// Sampled extents are rounded to this granularity (0 disables).
    pub size_quantum_mm: f64,
    /// Option weights in vocabulary order; must be non-negative and sum to 1.
    pub shape_weights: [f64; 4],
    pub density_weights: [f64; 3],
    pub heterogeneity_weights: [f64; 2],
    pub surface_weights: [f64; 2],
    pub invasion_weights: [f64; 2],
    /// When both modalities are admissible: probability of Enhanced CT.
    pub enhanced_probability: f64,
    /// HU offset ranges relative to the surrounding-tissue ring mean.
    pub hypodense_offset_hu: (f64, f64),
    pub hyperdense_offset_hu: (f64, f64),
    pub isodense_band_hu: f64,
    /// Fine-noise sigma for homogeneous lesions (HU).
    pub homogeneous_noise_hu: f64,
    /// Low-frequency amplitude range for heterogeneous lesions (HU).
    pub heterogeneity_amplitude_hu: (f64, f64),
    /// Lattice spacing of the low-frequency value noise (mm).
    pub noise_lattice_mm: f64,
    /// Boundary blur sigma ranges (mm) per surface option.
    pub well_defined_blur_mm: (f64, f64),
    pub ill_defined_blur_mm: (f64, f64),
    /// Depth range (mm) a close-relationship lesion extends past the organ.
    pub invasion_depth_mm: (f64, f64),
    /// Focus count and radius range for punctate/nodular lesions.
    pub punctate_focus_count: (u32, u32),
    pub punctate_focus_radius_mm: (f64, f64),
    /// Radial modulation amplitude range for irregular shapes.
    pub irregular_amplitude: (f64, f64),
}

fn weights_valid(w: &[f64]) -> bool {
    w.iter().all(|&x| x >= 0.0) && (w.iter().sum::<f64>() - 1.0).abs() < 1e-6
}

impl TypeParams {
    pub fn validate(&self) -> Result<()> {
        for (name, mu, sigma) in [
            ("Z", self.size_log_mu[0], self.size_log_sigma[0]),
            ("X", self.size_log_mu[1], self.size_log_sigma[1]),
            ("Y", self.size_log_mu[2], self.size_log_sigma[2]),
        ] {
            if !mu.is_finite() || !(sigma.is_finite() && sigma > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "size log-normal for axis {name}: mu {mu}, sigma {sigma}"
                )));
            }
        }
        if !(self.size_bounds_mm.0 > 0.0 && self.size_bounds_mm.0 <= self.size_bounds_mm.1) {
            return Err(Error::InvalidParameter(format!(
                "size bounds {:?} must be ordered and positive",
                self.size_bounds_mm
            )));
        }
        for (name, w) in [
            ("shape", &self.shape_weights[..]),
            ("density", &self.density_weights[..]),
            ("heterogeneity", &self.heterogeneity_weights[..]),
            ("surface", &self.surface_weights[..]),
            ("invasion", &self.invasion_weights[..]),
        ] {
            if !weights_valid(w) {
                return Err(Error::InvalidParameter(format!(
                    "{name} weights {w:?} must be non-negative and sum to 1"
                )));
            }
        }
        for (name, (lo, hi)) in [
            ("hypodense offset", self.hypodense_offset_hu),
            ("hyperdense offset", self.hyperdense_offset_hu),
            ("heterogeneity amplitude", self.heterogeneity_amplitude_hu),
            ("well-defined blur", self.well_defined_blur_mm),
            ("ill-defined blur", self.ill_defined_blur_mm),
            ("invasion depth", self.invasion_depth_mm),
            ("punctate radius", self.punctate_focus_radius_mm),
            ("irregular amplitude", self.irregular_amplitude),
        ] {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::InvalidParameter(format!(
                    "{name} bounds ({lo}, {hi}) must be ordered"
                )));
            }
        }
        if self.hypodense_offset_hu.1 >= 0.0 {
            return Err(Error::InvalidParameter(
                "hypodense offsets must be negative".into(),
            ));
        }
        if self.hyperdense_offset_hu.0 <= 0.0 {
            return Err(Error::InvalidParameter(
                "hyperdense offsets must be positive".into(),
            ));
        }
        if self.punctate_focus_count.0 == 0
            || self.punctate_focus_count.0 > self.punctate_focus_count.1
        {
            return Err(Error::InvalidParameter(format!(
                "punctate focus count {:?} must be an ordered positive range",
                self.punctate_focus_count
            )));
        }
        if !(0.0..=1.0).contains(&self.enhanced_probability) {
            return Err(Error::InvalidParameter(
                "enhanced probability must be in [0, 1]".into(),
            ));
        }
        Ok(())
    }
}

/// Sampling parameters for every lesion type, keyed by type identifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingParams {
    pub per_type: BTreeMap<LesionType, TypeParams>,
}

impl SamplingParams {
    pub fn for_type(&self, lesion_type: LesionType) -> Result<&TypeParams> {
        self.per_type
            .get(&lesion_type)
            .ok_or_else(|| Error::UnknownLesionType(lesion_type.key().to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        for (ty, tp) in &self.per_type {
            tp.validate()
                .map_err(|e| Error::InvalidParameter(format!("{}: {e}", ty.key())))?;
            // Benign types must put all invasion weight on the no-invasion option.
            if ty.is_benign() && tp.invasion_weights[1] != 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "{}: benign types cannot carry invasion weight",
                    ty.key()
                )));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(json: &str) -> Result<SamplingParams> {
        let params: SamplingParams = serde_json::from_str(json)?;
        params.validate()?;
        Ok(params)
    }
}

fn base_params(median_mm: [f64; 3], sigma: f64) -> TypeParams {
    TypeParams {
        size_log_mu: median_mm.map(|m| m.ln()),
        size_log_sigma: [sigma; 3],
        size_bounds_mm: (3.0, 120.0),
        size_quantum_mm: 0.1,
        shape_weights: [1.0, 0.0, 0.0, 0.0],
        density_weights: [1.0, 0.0, 0.0],
        heterogeneity_weights: [0.8, 0.2],
        surface_weights: [0.7, 0.3],
        invasion_weights: [1.0, 0.0],
        enhanced_probability: 0.5,
        hypodense_offset_hu: (-100.0, -20.0),
        hyperdense_offset_hu: (20.0, 400.0),
        isodense_band_hu: 5.0,
        homogeneous_noise_hu: 3.0,
        heterogeneity_amplitude_hu: (25.0, 60.0),
        noise_lattice_mm: 8.0,
        well_defined_blur_mm: (0.3, 0.8),
        ill_defined_blur_mm: (1.5, 4.0),
        invasion_depth_mm: (2.0, 10.0),
        punctate_focus_count: (2, 6),
        punctate_focus_radius_mm: (1.5, 3.0),
        irregular_amplitude: (0.15, 0.35),
    }
}

impl Default for SamplingParams {
    /// Illustrative defaults tuned for desk-scale grids (64³ and up).
    fn default() -> Self {
        use LesionType::*;
        let mut per_type = BTreeMap::new();
        for ty in LesionType::ALL {
            let mut p = match ty {
                LungTumor => {
                    let mut p = base_params([16.0, 16.0, 15.0], 0.35);
                    p.shape_weights = [0.4, 0.5, 0.0, 0.1];
                    // Solid tissue on an aerated background reads bright.
                    p.density_weights = [0.0, 0.0, 1.0];
                    p.hyperdense_offset_hu = (300.0, 700.0);
                    p
                }
                LiverTumor => {
                    let mut p = base_params([18.0, 18.0, 17.0], 0.4);
                    p.shape_weights = [0.5, 0.5, 0.0, 0.0];
                    p.density_weights = [0.7, 0.1, 0.2];
                    p.heterogeneity_weights = [0.4, 0.6];
                    p.surface_weights = [0.4, 0.6];
                    p.invasion_weights = [0.8, 0.2];
                    p
                }
                GallbladderCancer => {
                    let mut p = base_params([14.0, 14.0, 13.0], 0.35);
                    p.shape_weights = [0.0, 0.4, 0.6, 0.0];
                    p.density_weights = [0.2, 0.3, 0.5];
                    p.invasion_weights = [0.7, 0.3];
                    p
                }
                PancreasTumor => {
                    let mut p = base_params([14.0, 14.0, 13.0], 0.35);
                    p.shape_weights = [0.3, 0.7, 0.0, 0.0];
                    p.density_weights = [0.8, 0.2, 0.0];
                    p.surface_weights = [0.3, 0.7];
                    p.invasion_weights = [0.7, 0.3];
                    p
                }
                EsophagealCancer => {
                    let mut p = base_params([12.0, 12.0, 14.0], 0.3);
                    p.shape_weights = [0.0, 0.2, 0.8, 0.0];
                    p.density_weights = [0.0, 0.4, 0.6];
                    p.invasion_weights = [0.8, 0.2];
                    p
                }
                GastricCancer => {
                    let mut p = base_params([15.0, 16.0, 16.0], 0.35);
                    p.shape_weights = [0.0, 0.3, 0.7, 0.0];
                    p.density_weights = [0.2, 0.3, 0.5];
                    p.invasion_weights = [0.75, 0.25];
                    p
                }
                ColorectalCancer => {
                    let mut p = base_params([15.0, 15.0, 15.0], 0.35);
                    p.shape_weights = [0.0, 0.4, 0.6, 0.0];
                    p.density_weights = [0.0, 0.4, 0.6];
                    p.invasion_weights = [0.75, 0.25];
                    p
                }
                KidneyTumor => {
                    let mut p = base_params([17.0, 17.0, 16.0], 0.4);
                    p.shape_weights = [0.4, 0.6, 0.0, 0.0];
                    p.density_weights = [0.4, 0.2, 0.4];
                    p.heterogeneity_weights = [0.4, 0.6];
                    p.invasion_weights = [0.8, 0.2];
                    p
                }
                BladderCancer => {
                    let mut p = base_params([14.0, 14.0, 13.0], 0.35);
                    p.shape_weights = [0.0, 0.5, 0.5, 0.0];
                    p.density_weights = [0.0, 0.3, 0.7];
                    p.invasion_weights = [0.8, 0.2];
                    p
                }
                BoneMetastasis => {
                    let mut p = base_params([12.0, 12.0, 12.0], 0.4);
                    p.shape_weights = [0.3, 0.3, 0.0, 0.4];
                    p.density_weights = [0.5, 0.0, 0.5];
                    p.hyperdense_offset_hu = (100.0, 500.0);
                    p.hypodense_offset_hu = (-400.0, -100.0);
                    p
                }
                LiverCyst => {
                    let mut p = base_params([15.0, 15.0, 14.0], 0.45);
                    p.density_weights = [1.0, 0.0, 0.0];
                    p.heterogeneity_weights = [0.95, 0.05];
                    p.surface_weights = [0.9, 0.1];
                    p
                }
                Gallstone => {
                    let mut p = base_params([8.0, 8.0, 8.0], 0.4);
                    p.size_bounds_mm = (3.0, 30.0);
                    p.shape_weights = [0.6, 0.0, 0.0, 0.4];
                    p.density_weights = [0.0, 0.0, 1.0];
                    p.hyperdense_offset_hu = (150.0, 800.0);
                    p.heterogeneity_weights = [0.9, 0.1];
                    p.surface_weights = [0.95, 0.05];
                    p
                }
                PancreasCyst => {
                    let mut p = base_params([12.0, 12.0, 11.0], 0.4);
                    p.density_weights = [1.0, 0.0, 0.0];
                    p.heterogeneity_weights = [0.9, 0.1];
                    p.surface_weights = [0.9, 0.1];
                    p
                }
                KidneyCyst => {
                    let mut p = base_params([14.0, 14.0, 13.0], 0.45);
                    p.density_weights = [1.0, 0.0, 0.0];
                    p.heterogeneity_weights = [0.95, 0.05];
                    p.surface_weights = [0.9, 0.1];
                    p
                }
                KidneyStone => {
                    let mut p = base_params([6.0, 6.0, 6.0], 0.4);
                    p.size_bounds_mm = (3.0, 25.0);
                    p.shape_weights = [0.5, 0.0, 0.0, 0.5];
                    p.density_weights = [0.0, 0.0, 1.0];
                    p.hyperdense_offset_hu = (200.0, 900.0);
                    p.heterogeneity_weights = [0.95, 0.05];
                    p.surface_weights = [0.95, 0.05];
                    p
                }
            };
            if ty.is_benign() {
                p.invasion_weights = [1.0, 0.0];
            }
            per_type.insert(ty, p);
        }
        let params = SamplingParams { per_type };
        params.validate().expect("default parameters are valid");
        params
    }
}

fn weighted_choice(rng: &mut ChaCha8Rng, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.gen::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        u -= w;
        if u <= 0.0 && w > 0.0 {
            return i;
        }
    }
    weights
        .iter()
        .rposition(|&w| w > 0.0)
        .expect("weights validated non-degenerate")
}

fn quantize(v: f64, quantum: f64) -> f64 {
    if quantum > 0.0 {
        (v / quantum).round() * quantum
    } else {
        v
    }
}

/// Draw a lesion spec for the given type. Extents are drawn i.i.d. per
/// axis from the configured log-normals and clamped to bounds; categorical
/// attributes follow the option weights; benign types always come out
/// non-invasive. Fully deterministic for a fixed seed.
pub fn sample_spec(
    lesion_type: LesionType,
    params: &SamplingParams,
    rng_seed: u64,
) -> Result<LesionSpec> {
    let tp = params.for_type(lesion_type)?;
    tp.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(rng_seed, "sample-spec"));

    let mut extents = [0.0f64; 3];
    for a in 0..3 {
        let dist = LogNormal::new(tp.size_log_mu[a], tp.size_log_sigma[a])
            .map_err(|e| Error::InvalidParameter(format!("log-normal: {e}")))?;
        let raw: f64 = dist.sample(&mut rng);
        let clamped = raw.clamp(tp.size_bounds_mm.0, tp.size_bounds_mm.1);
        extents[a] =
            quantize(clamped, tp.size_quantum_mm).clamp(tp.size_bounds_mm.0, tp.size_bounds_mm.1);
    }
    let size_mm = SizeMm::new(extents[0], extents[1], extents[2]);

    let shape = Shape::ALL[weighted_choice(&mut rng, &tp.shape_weights)];
    let density = Density::ALL[weighted_choice(&mut rng, &tp.density_weights)];
    let heterogeneity = Heterogeneity::ALL[weighted_choice(&mut rng, &tp.heterogeneity_weights)];
    let surface = Surface::ALL[weighted_choice(&mut rng, &tp.surface_weights)];
    let invasion = if lesion_type.is_benign() {
        Invasion::NoCloseRelationship
    } else {
        Invasion::ALL[weighted_choice(&mut rng, &tp.invasion_weights)]
    };

    let modalities = lesion_type.allowed_modalities();
    let enhancement = if modalities.len() == 1 {
        modalities[0]
    } else if rng.gen::<f64>() < tp.enhanced_probability {
        Enhancement::EnhancedCt
    } else {
        Enhancement::PlainCt
    };

    let spec = LesionSpec {
        lesion_type,
        enhancement,
        size_mm,
        shape,
        density,
        heterogeneity,
        surface,
        invasion,
        seed: rng_seed,
    };
    spec.validate(params)?;
    Ok(spec)
}
