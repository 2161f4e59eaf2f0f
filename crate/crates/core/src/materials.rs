//! Solid and coolant properties.
//!
//! Temperature-dependent solid properties are polynomials in the absolute
//! temperature, clamped to the range over which they were fitted. Outside
//! that range the curve is held at its endpoint value, so positivity proven
//! on the range carries over to every temperature.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Stefan–Boltzmann constant in W/(m² K⁴).
pub const STEFAN_BOLTZMANN: f64 = 5.67e-8;

/// Reference temperature at which constant-property values are sampled (23 °C).
pub const ROOM_TEMPERATURE: f64 = 296.15;

const ML_PER_MIN_TO_M3_PER_S: f64 = 1e-6 / 60.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PropertyUnit {
    #[serde(rename = "J/(kg K)")]
    SpecificHeat,
    #[serde(rename = "W/(m K)")]
    Conductivity,
}

/// Clamped polynomial `θ ↦ Σ cᵢ θⁱ` with ascending-degree coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct PropertyCurve {
    coefficients: Vec<f64>,
    valid_range: (f64, f64),
    unit: PropertyUnit,
}

impl PropertyCurve {
    pub fn new(coefficients: Vec<f64>, valid_range: (f64, f64), unit: PropertyUnit) -> Result<Self> {
        if coefficients.is_empty() {
            return Err(Error::InvalidInput("property curve needs at least one coefficient".into()));
        }
        if coefficients.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("property curve coefficients must be finite".into()));
        }
        let (lo, hi) = valid_range;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidInput(format!(
                "property curve range [{lo}, {hi}] must satisfy lo < hi"
            )));
        }
        Ok(Self {
            coefficients,
            valid_range,
            unit,
        })
    }

    pub fn constant(value: f64, valid_range: (f64, f64), unit: PropertyUnit) -> Result<Self> {
        Self::new(vec![value], valid_range, unit)
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn valid_range(&self) -> (f64, f64) {
        self.valid_range
    }

    pub fn unit(&self) -> PropertyUnit {
        self.unit
    }

    pub fn degree(&self) -> usize {
        self.coefficients.len() - 1
    }

    fn horner(&self, theta: f64) -> f64 {
        self.coefficients.iter().rev().fold(0.0, |acc, &c| acc * theta + c)
    }

    fn horner_derivative(&self, theta: f64) -> f64 {
        self.coefficients
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(0.0, |acc, (i, &c)| acc * theta + i as f64 * c)
    }

    /// Value at `clamp(θ, lo, hi)`.
    pub fn eval(&self, theta: f64) -> f64 {
        let (lo, hi) = self.valid_range;
        self.horner(theta.clamp(lo, hi))
    }

    /// Derivative of [`eval`](Self::eval). Zero strictly outside the range;
    /// at the endpoints the interior one-sided derivative is returned.
    pub fn derivative(&self, theta: f64) -> f64 {
        let (lo, hi) = self.valid_range;
        if theta < lo || theta > hi {
            0.0
        } else {
            self.horner_derivative(theta)
        }
    }

    /// Minimum of the curve over `samples` equispaced points of its range.
    pub fn sampled_extrema(&self, samples: usize) -> (f64, f64) {
        let (lo, hi) = self.valid_range;
        let n = samples.max(2);
        (0..n)
            .map(|i| self.horner(lo + (hi - lo) * i as f64 / (n - 1) as f64))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(mn, mx), v| (mn.min(v), mx.max(v)))
    }

    /// Degree-0 curve equal to this one at `theta`.
    pub fn frozen_at(&self, theta: f64) -> Self {
        Self {
            coefficients: vec![self.eval(theta)],
            valid_range: self.valid_range,
            unit: self.unit,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolidMaterial {
    pub name: String,
    pub density: f64,
    pub specific_heat: PropertyCurve,
    pub conductivity: PropertyCurve,
}

/// Number of samples used when validating a material at construction.
const VALIDATION_SAMPLES: usize = 1025;

impl SolidMaterial {
    /// Builds a material, rejecting non-positive density, specific heat, or conductivity.
    pub fn new(
        name: impl Into<String>,
        density: f64,
        specific_heat: PropertyCurve,
        conductivity: PropertyCurve,
    ) -> Result<Self> {
        let name = name.into();
        if !(density.is_finite() && density > 0.0) {
            return Err(Error::InvalidInput(format!("material `{name}`: density must be positive")));
        }
        let (c_min, _) = specific_heat.sampled_extrema(VALIDATION_SAMPLES);
        if !(c_min > 0.0) {
            return Err(Error::InvalidInput(format!(
                "material `{name}`: specific heat must be positive over its range (min {c_min})"
            )));
        }
        let report = ellipticity_of(&conductivity, VALIDATION_SAMPLES)?;
        if !report.pass {
            return Err(Error::EllipticityViolation {
                value: report.k1,
                temperature: f64::NAN,
            });
        }
        Ok(Self {
            name,
            density,
            specific_heat,
            conductivity,
        })
    }

    /// Constant-property twin: both curves frozen at `theta`.
    pub fn frozen_at(&self, theta: f64) -> Self {
        Self {
            name: self.name.clone(),
            density: self.density,
            specific_heat: self.specific_heat.frozen_at(theta),
            conductivity: self.conductivity.frozen_at(theta),
        }
    }

    /// Volumetric heat capacity ρ c(θ) in J/(m³ K).
    pub fn volumetric_heat_capacity(&self, theta: f64) -> f64 {
        self.density * self.specific_heat.eval(theta)
    }
}

/// Constant-property coolant.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Coolant {
    /// kg/m³
    pub density: f64,
    /// J/(kg K)
    pub specific_heat: f64,
    /// m³/s
    pub flow_rate: f64,
}

impl Coolant {
    pub fn new(density: f64, specific_heat: f64, flow_rate: f64) -> Result<Self> {
        // zero flow is admitted; it switches the channel off
        if !(density > 0.0 && specific_heat > 0.0 && flow_rate >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "coolant needs positive density/specific heat and non-negative flow, got ({density}, {specific_heat}, {flow_rate})"
            )));
        }
        Ok(Self {
            density,
            specific_heat,
            flow_rate,
        })
    }

    pub fn from_ml_per_min(density: f64, specific_heat: f64, flow_ml_min: f64) -> Result<Self> {
        Self::new(density, specific_heat, flow_ml_min * ML_PER_MIN_TO_M3_PER_S)
    }

    /// Water at the tabulated values with the given flow rate in mL/min.
    pub fn water(flow_ml_min: f64) -> Result<Self> {
        Self::from_ml_per_min(1000.0, 4183.0, flow_ml_min)
    }
}

pub fn ml_per_min_to_m3_per_s(q: f64) -> f64 {
    q * ML_PER_MIN_TO_M3_PER_S
}

/// Heat capacity rate χ = ρ_f Q c_f in W/K.
pub fn heat_capacity_rate(coolant: &Coolant) -> f64 {
    coolant.density * coolant.flow_rate * coolant.specific_heat
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EllipticityReport {
    pub k1: f64,
    pub sampled_min: f64,
    pub sampled_max: f64,
    pub sample_count: usize,
    pub pass: bool,
}

pub fn check_ellipticity(material: &SolidMaterial, samples: usize) -> Result<EllipticityReport> {
    ellipticity_of(&material.conductivity, samples)
}

/// Samples a conductivity curve at equispaced points of its range; `k1` is the minimum.
pub fn ellipticity_of(conductivity: &PropertyCurve, samples: usize) -> Result<EllipticityReport> {
    if samples < 2 {
        return Err(Error::InvalidInput("ellipticity check needs at least 2 samples".into()));
    }
    let (mn, mx) = conductivity.sampled_extrema(samples);
    Ok(EllipticityReport {
        k1: mn,
        sampled_min: mn,
        sampled_max: mx,
        sample_count: samples,
        pass: mn > 0.0,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BuiltinMaterial {
    CfrpLike,
    GfrpLike,
    EpoxyLike,
}

impl BuiltinMaterial {
    pub const ALL: [BuiltinMaterial; 3] = [Self::CfrpLike, Self::GfrpLike, Self::EpoxyLike];

    pub fn name(self) -> &'static str {
        match self {
            Self::CfrpLike => "cfrp_like",
            Self::GfrpLike => "gfrp_like",
            Self::EpoxyLike => "epoxy_like",
        }
    }
}

impl std::str::FromStr for BuiltinMaterial {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::UnknownMaterial(s.to_string()))
    }
}

/// Constant (CMP) or temperature-dependent (TDMP) material properties.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PropertyMode {
    #[serde(rename = "CMP")]
    Constant,
    #[serde(rename = "TDMP")]
    TemperatureDependent,
}

impl PropertyMode {
    pub fn label(self) -> &'static str {
        match self {
            Self::Constant => "CMP",
            Self::TemperatureDependent => "TDMP",
        }
    }
}

impl std::str::FromStr for PropertyMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "CMP" => Ok(Self::Constant),
            "TDMP" => Ok(Self::TemperatureDependent),
            _ => Err(Error::InvalidInput(format!("unknown property mode `{s}` (expected CMP or TDMP)"))),
        }
    }
}

/// On-disk curve: `{ "coeffs": [...], "range": [lo, hi] }`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveRecord {
    pub coeffs: Vec<f64>,
    pub range: [f64; 2],
}

/// On-disk material: `{ name, density, c_s, k_s }`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaterialRecord {
    pub name: String,
    pub density: f64,
    pub c_s: CurveRecord,
    pub k_s: CurveRecord,
}

impl MaterialRecord {
    pub fn to_material(&self) -> Result<SolidMaterial> {
        let c = PropertyCurve::new(
            self.c_s.coeffs.clone(),
            (self.c_s.range[0], self.c_s.range[1]),
            PropertyUnit::SpecificHeat,
        )?;
        let k = PropertyCurve::new(
            self.k_s.coeffs.clone(),
            (self.k_s.range[0], self.k_s.range[1]),
            PropertyUnit::Conductivity,
        )?;
        SolidMaterial::new(self.name.clone(), self.density, c, k)
    }

    pub fn from_material(m: &SolidMaterial) -> Self {
        let rec = |c: &PropertyCurve| CurveRecord {
            coeffs: c.coefficients().to_vec(),
            range: [c.valid_range().0, c.valid_range().1],
        };
        Self {
            name: m.name.clone(),
            density: m.density,
            c_s: rec(&m.specific_heat),
            k_s: rec(&m.conductivity),
        }
    }
}

const BUILTIN_COEFFICIENTS: &str = include_str!("../data/materials.json");

/// Parses a coefficients file holding either one material record or a list of them.
pub fn parse_material_records(json: &str) -> Result<Vec<MaterialRecord>> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        One(MaterialRecord),
        Many(Vec<MaterialRecord>),
    }
    Ok(match serde_json::from_str::<OneOrMany>(json)? {
        OneOrMany::One(r) => vec![r],
        OneOrMany::Many(v) => v,
    })
}

pub fn load_material_file(path: &Path, name: Option<&str>) -> Result<SolidMaterial> {
    let text = std::fs::read_to_string(path)?;
    let records = parse_material_records(&text)?;
    let record = match name {
        Some(n) => records.iter().find(|r| r.name == n),
        None => records.first(),
    }
    .ok_or_else(|| Error::UnknownMaterial(name.unwrap_or("<first>").to_string()))?;
    record.to_material()
}

pub fn builtin_material(which: BuiltinMaterial, mode: PropertyMode) -> SolidMaterial {
    let records = parse_material_records(BUILTIN_COEFFICIENTS).expect("bundled coefficients parse");
    let tdmp = records
        .iter()
        .find(|r| r.name == which.name())
        .expect("bundled coefficients cover every builtin")
        .to_material()
        .expect("bundled coefficients are admissible");
    match mode {
        PropertyMode::TemperatureDependent => tdmp,
        PropertyMode::Constant => tdmp.frozen_at(ROOM_TEMPERATURE),
    }
}

/// Looks up a builtin by name.
pub fn builtin_material_by_name(name: &str, mode: PropertyMode) -> Result<SolidMaterial> {
    Ok(builtin_material(name.parse()?, mode))
}

/// Applies a property mode to an arbitrary material.
pub fn with_mode(material: &SolidMaterial, mode: PropertyMode) -> SolidMaterial {
    match mode {
        PropertyMode::TemperatureDependent => material.clone(),
        PropertyMode::Constant => material.frozen_at(ROOM_TEMPERATURE),
    }
}
