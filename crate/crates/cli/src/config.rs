//! The single JSON document a run is driven by.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use testvec::trilinear::Settings;
use testvec::{Error, Field, MultChar, RepSpec, UnitChar};

fn default_precision() -> u32 {
    6
}

fn default_budget() -> u64 {
    20_000_000
}

fn default_tol() -> f64 {
    1e-9
}

fn default_samples() -> usize {
    20
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub p: u64,
    #[serde(default = "default_precision")]
    pub precision: u32,
    /// Lowest effective precision an operation may fall to.
    #[serde(default)]
    pub floor: Option<u32>,
    #[serde(default = "default_budget")]
    pub budget: u64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Explicit shells of the torus integral; unset picks level + 1.
    #[serde(default)]
    pub radius: Option<u32>,
    #[serde(default)]
    pub seed: u64,
    /// Random spot-checks per run.
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Fault injection: relative error put into the Satake parameter alpha.
    #[serde(default)]
    pub alpha_perturbation: f64,
    #[serde(default)]
    pub specs: Vec<SpecConfig>,
    #[serde(default)]
    pub lemmas: LemmaConfig,
    #[serde(default)]
    pub tree: Option<TreeConfig>,
    /// Where the JSON report goes; stdout when unset.
    #[serde(default)]
    pub report: Option<PathBuf>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LemmaConfig {
    #[serde(default = "LemmaConfig::default_r_max")]
    pub r_max: u32,
    /// Level at which the coset identities are checked exhaustively.
    #[serde(default = "LemmaConfig::default_level")]
    pub structure_level: u32,
}

impl LemmaConfig {
    fn default_r_max() -> u32 {
        3
    }

    fn default_level() -> u32 {
        3
    }
}

impl Default for LemmaConfig {
    fn default() -> Self {
        LemmaConfig { r_max: 3, structure_level: 3 }
    }
}

/// Value at the uniformizer: `re + i im`, or `scale * exp(2 pi i k / order)`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum Unramified {
    Cartesian {
        re: f64,
        #[serde(default)]
        im: f64,
    },
    Root {
        root_of_unity: i64,
        order: u64,
        #[serde(default = "Unramified::unit_scale")]
        scale: f64,
    },
}

impl Unramified {
    fn unit_scale() -> f64 {
        1.0
    }

    pub fn value(&self) -> Result<Complex64, Error> {
        match *self {
            Unramified::Cartesian { re, im } => Ok(Complex64::new(re, im)),
            Unramified::Root { order: 0, .. } => Err(Error::Config("root of unity of order 0".into())),
            Unramified::Root { root_of_unity, order, scale } => {
                let frac = root_of_unity.rem_euclid(order as i64) as f64 / order as f64;
                Ok(Complex64::from_polar(scale, std::f64::consts::TAU * frac))
            }
        }
    }
}

impl Default for Unramified {
    fn default() -> Self {
        Unramified::Cartesian { re: 1.0, im: 0.0 }
    }
}

/// Character `x -> u^val(x) chi(unit part)`, chi primitive of the given
/// conductor with exponents on the fixed generators of `(Z/p^m)^x`.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CharConfig {
    #[serde(default)]
    pub unramified: Unramified,
    #[serde(default)]
    pub unit_exponents: Vec<i64>,
    #[serde(default)]
    pub conductor: u32,
}

impl CharConfig {
    pub fn build(&self, p: u64) -> Result<MultChar, Error> {
        let value = self.unramified.value()?;
        if !(value.norm() > 0.0) || !value.norm().is_finite() {
            return Err(Error::Config(format!("unramified value {value} must be finite and nonzero")));
        }
        let unit = UnitChar::from_exponents(p, &self.unit_exponents, self.conductor)?;
        Ok(MultChar::new(value, unit))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpecialModel {
    #[default]
    Quotient,
    Subspace,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpecConfig {
    Principal { mu: CharConfig, mu_prime: CharConfig },
    Special { eta: CharConfig, #[serde(default)] model: SpecialModel },
    Reducible { eta: CharConfig },
    Supercuspidal { conductor: u32, omega: CharConfig, label: String },
}

impl SpecConfig {
    pub fn build(&self, p: u64) -> Result<RepSpec, Error> {
        match self {
            SpecConfig::Principal { mu, mu_prime } => RepSpec::principal(mu.build(p)?, mu_prime.build(p)?),
            SpecConfig::Special { eta, model: SpecialModel::Quotient } => Ok(RepSpec::special_quotient(eta.build(p)?)),
            SpecConfig::Special { eta, model: SpecialModel::Subspace } => Ok(RepSpec::special_subspace(eta.build(p)?)),
            SpecConfig::Reducible { eta } => RepSpec::reducible(eta.build(p)?),
            SpecConfig::Supercuspidal { conductor, omega, label } => RepSpec::stub(*conductor, omega.build(p)?, label),
        }
    }
}

/// Paths on the tree: either the three paths of a conductor triple, or
/// explicit segments `gamma^shift` applied to the standard path of a length.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TreeConfig {
    Conductors { conductors: [u32; 3] },
    Paths { paths: Vec<PathConfig> },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathConfig {
    pub length: u32,
    #[serde(default)]
    pub shift: i64,
    /// Reverse the orientation.
    #[serde(default)]
    pub reversed: bool,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig, Error> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let cfg: RunConfig =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), Error> {
        if self.precision < 2 {
            return Err(Error::Config(format!("precision {} < 2", self.precision)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Config("tolerance must be positive".into()));
        }
        self.field()?;
        self.rep_specs()?;
        Ok(())
    }

    pub fn field(&self) -> Result<Field, Error> {
        Field::with_floor(self.p, self.precision, self.floor.unwrap_or(1))
    }

    pub fn rep_specs(&self) -> Result<Vec<RepSpec>, Error> {
        self.specs.iter().map(|s| s.build(self.p)).collect()
    }

    pub fn triple(&self) -> Result<[RepSpec; 3], Error> {
        let specs = self.rep_specs()?;
        specs
            .try_into()
            .map_err(|v: Vec<RepSpec>| Error::Config(format!("three representation specs needed, found {}", v.len())))
    }

    pub fn settings(&self) -> Settings {
        Settings {
            budget: self.budget,
            tol: self.tol,
            radius: self.radius,
            alpha_perturbation: self.alpha_perturbation,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_all_kinds() {
        let text = r#"{
            "p": 3, "precision": 8,
            "specs": [
                {"kind": "principal", "mu": {"unramified": {"re": 0.7, "im": 0.2}}, "mu_prime": {"unramified": {"re": 0.9, "im": 0.3}, "unit_exponents": [1], "conductor": 1}},
                {"kind": "special", "eta": {"unramified": {"root_of_unity": 1, "order": 2}}, "model": "subspace"},
                {"kind": "supercuspidal", "conductor": 2, "omega": {}, "label": "sigma"}
            ],
            "tree": {"conductors": [2, 1, 3]}
        }"#;
        let cfg: RunConfig = serde_json::from_str(text).unwrap();
        cfg.validate().unwrap();
        let [a, b, c] = cfg.triple().unwrap();
        assert_eq!(a.conductor(), 1);
        assert!(matches!(b.kind, testvec::RepKind::SpecialSubspace { .. }));
        assert!((b.central().at_pi() - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        assert!(c.is_stub());
        assert!(matches!(cfg.tree, Some(TreeConfig::Conductors { .. })));
        assert_eq!(cfg.budget, 20_000_000);
    }

    #[test]
    fn rejects_bad_input() {
        let bad = |t: &str| serde_json::from_str::<RunConfig>(t).map_err(|e| e.to_string()).and_then(|c| c.validate().map_err(|e| e.to_string()));
        assert!(bad(r#"{"p": 4}"#).is_err());
        assert!(bad(r#"{"p": 3, "precision": 1}"#).is_err());
        assert!(bad(r#"{"p": 3, "colour": 1}"#).is_err());
        assert!(bad(r#"{"p": 3, "specs": [{"kind": "principal", "mu": {"unit_exponents": [3], "conductor": 2}, "mu_prime": {}}]}"#).is_err());
        assert!(bad(r#"{"p": 3, "specs": [{"kind": "reducible", "eta": {"unramified": {"re": 0}}}]}"#).is_err());
        assert!(bad(r#"{"p": 3, "specs": [{"kind": "reducible", "eta": {"unramified": {"root_of_unity": 1, "order": 0}}}]}"#).is_err());
        assert!(bad(r#"{"p": 3}"#).is_ok());
    }
}
