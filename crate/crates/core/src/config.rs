//! Run configuration: a TOML file with sections `cell`, `grid`, `model`,
//! `scf`, `homogenization`, `green`, `output` and `run`, plus dotted-key
//! overrides (`scf.tolerance=1e-8`) applied on top of the file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cell::{Grid3, UnitCell};
use crate::coulomb::GreenEvalConfig;
use crate::homogenization::{GridRule, HomogenizationPlan, ModeCutoff};
use crate::solver::{NuclearModel, ScfConfig};

/// A rejected configuration value, with the dotted path of the offending key.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{key}: {message}")]
pub struct ConfigError {
    pub key: String,
    pub message: String,
}

impl ConfigError {
    fn new(key: &str, message: impl Into<String>) -> Self {
        Self { key: key.to_string(), message: message.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CellSection {
    pub q_side: f64,
    pub length_x3: f64,
}

impl Default for CellSection {
    fn default() -> Self {
        let c = UnitCell::standard();
        Self { q_side: c.q_side(), length_x3: c.length_x3() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub n1: usize,
    pub n2: usize,
    pub n3: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        Self { n1: 32, n2: 4, n3: 64 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// `(5 pi/2) |cos(n pi x1)| exp(-x3^2/8)`.
    Standard,
    SeparableCosGauss,
    Constant,
    /// In-plane invariant `amplitude * exp(-x3^2 / gauss_width)`.
    X3Gauss,
    /// In-plane invariant profile given by `values` on a uniform `x3` grid.
    X3Profile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub kind: ModelKind,
    pub n: u32,
    pub amplitude: f64,
    pub gauss_width: f64,
    pub value: f64,
    pub values: Vec<f64>,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            kind: ModelKind::Standard,
            n: 1,
            amplitude: 2.5 * std::f64::consts::PI,
            gauss_width: 8.0,
            value: 1.0,
            values: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScfSection {
    pub tolerance: f64,
    pub max_iterations: usize,
    pub mixing: f64,
    pub anderson_depth: usize,
    pub energy_safeguard: bool,
    pub eigensolver_tol: f64,
    pub eigensolver_max_iter: usize,
    pub kinetic_exponent: f64,
    pub potential_shift: f64,
    /// `[k1, k2, k3]`; empty for no truncation.
    pub mode_cutoff: Vec<usize>,
}

impl Default for ScfSection {
    fn default() -> Self {
        let c = ScfConfig::default();
        Self {
            tolerance: c.tolerance,
            max_iterations: c.max_iterations,
            mixing: c.mixing,
            anderson_depth: c.anderson_depth,
            energy_safeguard: c.energy_safeguard,
            eigensolver_tol: c.eigensolver_tol,
            eigensolver_max_iter: c.eigensolver_max_iter,
            kinetic_exponent: c.kinetic_exponent,
            potential_shift: c.potential_shift,
            mode_cutoff: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HomogenizationSection {
    pub n_values: Vec<u32>,
    /// Points in `x1` per unit of `N`.
    pub per_n_x1: usize,
    pub n2: usize,
    pub n3: usize,
    /// Points of the 1D reference grid (defaults to `n3`).
    pub reference_n3: Option<usize>,
    /// Lp exponents of the density error; `inf` for the sup norm.
    pub norms: Vec<f64>,
    pub filter: bool,
    pub k1_per_n: usize,
    pub k2: usize,
    pub k3: usize,
    pub filter_iterates: bool,
    pub parallel: bool,
}

impl Default for HomogenizationSection {
    fn default() -> Self {
        let p = HomogenizationPlan::desk();
        let k = ModeCutoff::STANDARD;
        Self {
            n_values: p.n_values,
            per_n_x1: p.grid_rule.per_n_x1,
            n2: p.grid_rule.n2,
            n3: p.grid_rule.n3,
            reference_n3: None,
            norms: p.norms,
            filter: true,
            k1_per_n: k.k1_per_n,
            k2: k.k2,
            k3: k.k3,
            filter_iterates: false,
            parallel: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GreenSection {
    pub lattice_cutoff: usize,
    pub quad_points: usize,
}

impl Default for GreenSection {
    fn default() -> Self {
        let g = GreenEvalConfig::default();
        Self { lattice_cutoff: g.lattice_cutoff, quad_points: g.quad_points }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
    pub format: OutputFormat,
    /// Also write the full 3D density as raw little-endian `f64`.
    pub dump_field: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: PathBuf::from("out"), format: OutputFormat::Csv, dump_field: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    /// Worker threads, 0 for one per core.
    pub threads: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub cell: CellSection,
    pub grid: GridSection,
    pub model: ModelSection,
    pub scf: ScfSection,
    pub homogenization: HomogenizationSection,
    pub green: GreenSection,
    pub output: OutputSection,
    pub run: RunSection,
}

fn set_path(table: &mut toml::Table, key: &str, value: toml::Value) -> Result<(), ConfigError> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(ConfigError::new(key, "malformed key"));
    }
    let mut cur = table;
    for part in &parts[..parts.len() - 1] {
        let entry = cur.entry(part.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry.as_table_mut().ok_or_else(|| ConfigError::new(key, format!("`{part}` is not a section")))?;
    }
    cur.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

/// Parse the right-hand side of `key=value` as a TOML value, falling back to
/// a bare string.
fn parse_value(raw: &str) -> toml::Value {
    let wrapped = format!("v = {raw}");
    match wrapped.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.to_string())),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

/// Locate the first unknown or mistyped key by deserializing section by
/// section, so the message carries the key path.
fn deserialize(table: toml::Table) -> Result<RunConfig, ConfigError> {
    fn section<T: for<'de> Deserialize<'de> + Default>(t: &toml::Table, name: &str) -> Result<T, ConfigError> {
        match t.get(name) {
            None => Ok(T::default()),
            Some(toml::Value::Table(s)) => {
                for (k, v) in s {
                    let mut one = toml::Table::new();
                    one.insert(k.clone(), v.clone());
                    if let Err(e) = T::deserialize(toml::Value::Table(one)) {
                        return Err(ConfigError::new(&format!("{name}.{k}"), e.to_string().trim().to_string()));
                    }
                }
                T::deserialize(toml::Value::Table(s.clone()))
                    .map_err(|e| ConfigError::new(name, e.to_string().trim().to_string()))
            }
            Some(_) => Err(ConfigError::new(name, "expected a section")),
        }
    }
    const SECTIONS: [&str; 8] = ["cell", "grid", "model", "scf", "homogenization", "green", "output", "run"];
    if let Some(k) = table.keys().find(|k| !SECTIONS.contains(&k.as_str())) {
        return Err(ConfigError::new(k, "unknown section"));
    }
    Ok(RunConfig {
        cell: section(&table, "cell")?,
        grid: section(&table, "grid")?,
        model: section(&table, "model")?,
        scf: section(&table, "scf")?,
        homogenization: section(&table, "homogenization")?,
        green: section(&table, "green")?,
        output: section(&table, "output")?,
        run: section(&table, "run")?,
    })
}

impl RunConfig {
    /// Parse TOML text, apply `key=value` overrides, then validate.
    pub fn from_str_with_overrides(text: &str, overrides: &[String]) -> Result<Self, ConfigError> {
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| {
            ConfigError::new("<file>", e.to_string().trim().to_string())
        })?;
        for o in overrides {
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| ConfigError::new(o, "override must have the form key=value"))?;
            set_path(&mut table, k.trim(), parse_value(v.trim()))?;
        }
        let cfg = deserialize(table)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self, ConfigError> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p)
                .map_err(|e| ConfigError::new("--config", format!("{}: {e}", p.display())))?,
            None => String::new(),
        };
        Self::from_str_with_overrides(&text, overrides)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).unwrap_or_default()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let pos = |key: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(ConfigError::new(key, format!("must be a positive number, got {v}")))
            }
        };
        pos("cell.q_side", self.cell.q_side)?;
        pos("cell.length_x3", self.cell.length_x3)?;
        for (k, n) in [("grid.n1", self.grid.n1), ("grid.n2", self.grid.n2)] {
            if n == 0 || (n != 1 && n % 2 == 1) {
                return Err(ConfigError::new(k, format!("must be 1 or a positive even integer, got {n}")));
            }
        }
        if self.grid.n3 < 2 || self.grid.n3 % 2 == 1 {
            return Err(ConfigError::new("grid.n3", format!("must be an even integer >= 2, got {}", self.grid.n3)));
        }

        let m = &self.model;
        match m.kind {
            ModelKind::Standard | ModelKind::SeparableCosGauss if m.n == 0 => {
                return Err(ConfigError::new("model.n", "must be >= 1"))
            }
            ModelKind::SeparableCosGauss | ModelKind::X3Gauss => {
                if !(m.amplitude.is_finite() && m.amplitude >= 0.0) {
                    return Err(ConfigError::new("model.amplitude", "must be >= 0"));
                }
                pos("model.gauss_width", m.gauss_width)?;
            }
            ModelKind::Constant => pos("model.value", m.value)?,
            ModelKind::X3Profile => {
                if m.values.len() < 2 || m.values.len() % 2 == 1 {
                    return Err(ConfigError::new("model.values", "needs an even number (>= 2) of samples"));
                }
                if m.values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                    return Err(ConfigError::new("model.values", "samples must be >= 0"));
                }
            }
            _ => {}
        }

        let s = &self.scf;
        pos("scf.tolerance", s.tolerance)?;
        if s.max_iterations == 0 {
            return Err(ConfigError::new("scf.max_iterations", "must be >= 1"));
        }
        if !(s.mixing > 0.0 && s.mixing <= 1.0) {
            return Err(ConfigError::new("scf.mixing", format!("must lie in (0, 1], got {}", s.mixing)));
        }
        pos("scf.eigensolver_tol", s.eigensolver_tol)?;
        if s.eigensolver_max_iter == 0 {
            return Err(ConfigError::new("scf.eigensolver_max_iter", "must be >= 1"));
        }
        if !(s.kinetic_exponent.is_finite() && s.kinetic_exponent > 1.5) {
            return Err(ConfigError::new(
                "scf.kinetic_exponent",
                format!("must be > 3/2, got {}", s.kinetic_exponent),
            ));
        }
        if !s.potential_shift.is_finite() {
            return Err(ConfigError::new("scf.potential_shift", "must be finite"));
        }
        if !(s.mode_cutoff.is_empty() || s.mode_cutoff.len() == 3) {
            return Err(ConfigError::new("scf.mode_cutoff", "must be empty or [k1, k2, k3]"));
        }

        let h = &self.homogenization;
        if h.n_values.is_empty() {
            return Err(ConfigError::new("homogenization.n_values", "must not be empty"));
        }
        if h.n_values[0] == 0 || h.n_values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ConfigError::new("homogenization.n_values", "must be positive and strictly increasing"));
        }
        if h.per_n_x1 == 0 || h.per_n_x1 % 2 == 1 {
            return Err(ConfigError::new("homogenization.per_n_x1", "must be a positive even integer"));
        }
        if h.n2 == 0 || (h.n2 != 1 && h.n2 % 2 == 1) {
            return Err(ConfigError::new("homogenization.n2", "must be 1 or a positive even integer"));
        }
        if h.n3 < 2 || h.n3 % 2 == 1 {
            return Err(ConfigError::new("homogenization.n3", "must be an even integer >= 2"));
        }
        if let Some(r) = h.reference_n3 {
            if r < 2 || r % 2 == 1 {
                return Err(ConfigError::new("homogenization.reference_n3", "must be an even integer >= 2"));
            }
        }
        if h.norms.iter().any(|p| p.is_nan() || *p < 1.0) {
            return Err(ConfigError::new("homogenization.norms", "exponents must be >= 1 (or inf)"));
        }

        if self.green.lattice_cutoff < 2 {
            return Err(ConfigError::new("green.lattice_cutoff", "must be >= 2"));
        }
        if self.green.quad_points < 16 {
            return Err(ConfigError::new("green.quad_points", "must be >= 16"));
        }
        Ok(())
    }

    pub fn cell(&self) -> UnitCell {
        UnitCell::new(self.cell.q_side, self.cell.length_x3).expect("validated")
    }

    pub fn grid3(&self) -> Result<Grid3, ConfigError> {
        Grid3::new(self.cell(), self.grid.n1, self.grid.n2, self.grid.n3)
            .map_err(|e| ConfigError::new("grid", e.to_string()))
    }

    pub fn line_grid(&self) -> Result<Grid3, ConfigError> {
        Grid3::line(self.cell.length_x3, self.grid.n3).map_err(|e| ConfigError::new("grid.n3", e.to_string()))
    }

    /// The nuclear density; `x3_gauss` is tabulated on the `x3` points of `line`.
    pub fn model(&self, line: &Grid3) -> NuclearModel {
        let m = &self.model;
        match m.kind {
            ModelKind::Standard => NuclearModel::standard(m.n),
            ModelKind::SeparableCosGauss => {
                NuclearModel::SeparableCosGauss { n: m.n, amplitude: m.amplitude, gauss_width: m.gauss_width }
            }
            ModelKind::Constant => NuclearModel::Constant(m.value),
            ModelKind::X3Gauss => NuclearModel::X3Profile(
                (0..line.dims()[2])
                    .map(|j| m.amplitude * (-line.coord(2, j).powi(2) / m.gauss_width).exp())
                    .collect(),
            ),
            ModelKind::X3Profile => NuclearModel::X3Profile(m.values.clone()),
        }
    }

    pub fn scf_config(&self) -> ScfConfig {
        let s = &self.scf;
        ScfConfig {
            tolerance: s.tolerance,
            max_iterations: s.max_iterations,
            mixing: s.mixing,
            anderson_depth: s.anderson_depth,
            eigensolver_tol: s.eigensolver_tol,
            eigensolver_max_iter: s.eigensolver_max_iter,
            kinetic_exponent: s.kinetic_exponent,
            potential_shift: s.potential_shift,
            mode_cutoff: if s.mode_cutoff.len() == 3 {
                Some([s.mode_cutoff[0], s.mode_cutoff[1], s.mode_cutoff[2]])
            } else {
                None
            },
            energy_safeguard: s.energy_safeguard,
        }
    }

    pub fn green_config(&self) -> GreenEvalConfig {
        GreenEvalConfig { lattice_cutoff: self.green.lattice_cutoff, quad_points: self.green.quad_points }
    }

    pub fn plan(&self) -> Result<HomogenizationPlan, ConfigError> {
        let h = &self.homogenization;
        let line = Grid3::line(self.cell.length_x3, h.n3).map_err(|e| ConfigError::new("homogenization.n3", e.to_string()))?;
        Ok(HomogenizationPlan {
            n_values: h.n_values.clone(),
            base_model: self.model(&line),
            cell: self.cell(),
            grid_rule: GridRule { per_n_x1: h.per_n_x1, n2: h.n2, n3: h.n3 },
            reference_n3: h.reference_n3.unwrap_or(h.n3),
            solver_config: self.scf_config(),
            norms: h.norms.clone(),
            filter: h.filter.then_some(ModeCutoff { k1_per_n: h.k1_per_n, k2: h.k2, k3: h.k3 }),
            filter_iterates: h.filter_iterates,
            parallel: h.parallel,
        })
    }
}
