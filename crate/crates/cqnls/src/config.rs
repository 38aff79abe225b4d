//! Declarative run configuration.
//!
//! A run is described by one TOML file with four optional sections, each
//! falling back to documented defaults:
//!
//! ```toml
//! [grid]
//! r_max = 64.0          # domain radius
//! n = 4095              # interior nodes
//!
//! [integrator]
//! dt0 = 1e-3            # base step (cap for the adaptive law)
//! t_end = 1.0           # horizon
//! cadence = 10          # steps between diagnostics records
//! blowup_factor = 3.0   # gradient-norm bar, in units of ‖∇W‖
//! adapt = false         # shrink dt as the solution focuses
//! max_steps = 50000000
//!
//! [experiment]
//! side = "above"        # "below" | "above"
//! tol = 1e-10           # tuner tolerance, relative to E^c(W)
//! energy_factor = 1.0   # energy target in units of E^c(W)
//! gate_delta_factor = 0.2
//! virial_r = 8.0
//!
//! [experiment.shape]
//! kind = "truncated_ground_state"   # | "gaussian" | "ring"
//! mu = 1.0
//! rho = 30.0
//! # sigma = ...  (gaussian, ring)
//! # r0 = ...     (ring)
//!
//! [[sweep]]             # sweep entries (sweep command only)
//! kind = "gaussian"
//! sigma = 2.0
//! side = "below"
//!
//! [output]
//! # dir = "artifacts"   # default: print to stdout, write no files
//! emit_plots = false    # also write a plot script next to the CSVs
//! ```
//!
//! Unknown keys are hard errors naming the key. Values can be overridden
//! from the command line with repeatable `--override key=value` flags
//! using dotted paths (`integrator.dt0=5e-4`).

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::dynamics::IntegratorConfig;
use crate::error::{Error, Result};
use crate::experiments::{ExperimentOptions, Shape, Side, SweepEntry};
use crate::grid::{make_grid, RadialGrid};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub r_max: f64,
    pub n: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { r_max: 64.0, n: 4095 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorSection {
    pub dt0: f64,
    pub t_end: f64,
    pub cadence: usize,
    pub blowup_factor: f64,
    pub adapt: bool,
    pub max_steps: usize,
}

impl Default for IntegratorSection {
    fn default() -> Self {
        let d = IntegratorConfig::default();
        Self {
            dt0: d.dt0,
            t_end: d.t_end,
            cadence: d.cadence,
            blowup_factor: d.blowup_factor,
            adapt: d.adapt,
            max_steps: d.max_steps,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShapeSection {
    pub kind: String,
    pub mu: Option<f64>,
    pub rho: Option<f64>,
    pub sigma: Option<f64>,
    pub r0: Option<f64>,
}

impl Default for ShapeSection {
    fn default() -> Self {
        Self {
            kind: "truncated_ground_state".into(),
            mu: Some(1.0),
            rho: Some(30.0),
            sigma: None,
            r0: None,
        }
    }
}

/// Builds a [`Shape`] from loose fields, rejecting both missing and
/// inapplicable parameters by their full config path. Parameter values
/// are not range-checked here: sweep entries defer that to run time so a
/// bad entry fails its own run instead of the whole batch.
fn build_shape(
    ctx: &str,
    kind: &str,
    mu: Option<f64>,
    rho: Option<f64>,
    sigma: Option<f64>,
    r0: Option<f64>,
) -> Result<Shape> {
    let need = |name: &str, v: Option<f64>| {
        v.ok_or_else(|| Error::Config(format!("{ctx}.{name} is required for kind = \"{kind}\"")))
    };
    let forbid = |name: &str, v: Option<f64>| {
        if v.is_some() {
            Err(Error::Config(format!("{ctx}.{name} does not apply to kind = \"{kind}\"")))
        } else {
            Ok(())
        }
    };
    let shape = match kind {
        "truncated_ground_state" => {
            forbid("sigma", sigma)?;
            forbid("r0", r0)?;
            Shape::TruncatedGroundState { mu: need("mu", mu)?, rho: need("rho", rho)? }
        }
        "gaussian" => {
            forbid("mu", mu)?;
            forbid("rho", rho)?;
            forbid("r0", r0)?;
            Shape::Gaussian { sigma: need("sigma", sigma)? }
        }
        "ring" => {
            forbid("mu", mu)?;
            forbid("rho", rho)?;
            Shape::Ring { r0: need("r0", r0)?, sigma: need("sigma", sigma)? }
        }
        other => {
            return Err(Error::Config(format!(
                "{ctx}.kind: unknown shape \"{other}\" (expected truncated_ground_state, gaussian, or ring)"
            )));
        }
    };
    shape.validate().map_err(|e| Error::Config(format!("{ctx}: {e}")))?;
    Ok(shape)
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentSection {
    pub shape: ShapeSection,
    pub side: String,
    pub tol: f64,
    pub energy_factor: f64,
    pub gate_delta_factor: f64,
    pub virial_r: f64,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        let d = ExperimentOptions::default();
        Self {
            shape: ShapeSection::default(),
            side: "above".into(),
            tol: d.tol,
            energy_factor: d.energy_factor,
            gate_delta_factor: d.gate_delta_factor,
            virial_r: d.virial_r,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
    pub emit_plots: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepEntrySection {
    pub kind: String,
    pub mu: Option<f64>,
    pub rho: Option<f64>,
    pub sigma: Option<f64>,
    pub r0: Option<f64>,
    pub side: String,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub grid: GridConfig,
    pub integrator: IntegratorSection,
    pub experiment: ExperimentSection,
    pub sweep: Vec<SweepEntrySection>,
    pub output: OutputSection,
}

impl RunConfig {
    pub fn make_grid(&self) -> Result<RadialGrid> {
        make_grid(self.grid.r_max, self.grid.n)
            .map_err(|e| Error::Config(format!("grid: {e}")))
    }

    pub fn integrator_config(&self) -> Result<IntegratorConfig> {
        let cfg = IntegratorConfig {
            dt0: self.integrator.dt0,
            t_end: self.integrator.t_end,
            cadence: self.integrator.cadence,
            blowup_factor: self.integrator.blowup_factor,
            adapt: self.integrator.adapt,
            max_steps: self.integrator.max_steps,
        };
        cfg.validate().map_err(|e| Error::Config(format!("integrator: {e}")))?;
        Ok(cfg)
    }

    pub fn experiment_shape(&self) -> Result<Shape> {
        let s = &self.experiment.shape;
        build_shape("experiment.shape", &s.kind, s.mu, s.rho, s.sigma, s.r0)
    }

    pub fn experiment_side(&self) -> Result<Side> {
        self.experiment
            .side
            .parse()
            .map_err(|e| Error::Config(format!("experiment.side: {e}")))
    }

    /// Experiment options without an output directory; the caller wires
    /// `out_dir` from its own arguments.
    pub fn experiment_options(&self) -> Result<ExperimentOptions> {
        let e = &self.experiment;
        for (key, v) in [
            ("experiment.tol", e.tol),
            ("experiment.energy_factor", e.energy_factor),
            ("experiment.gate_delta_factor", e.gate_delta_factor),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{key} = {v} (want finite and > 0)")));
            }
        }
        if !(e.virial_r >= 1.0 && e.virial_r.is_finite()) {
            return Err(Error::Config(format!("experiment.virial_r = {} (want >= 1)", e.virial_r)));
        }
        Ok(ExperimentOptions {
            tol: e.tol,
            energy_factor: e.energy_factor,
            gate_delta_factor: e.gate_delta_factor,
            virial_r: e.virial_r,
            out_dir: None,
        })
    }

    pub fn sweep_entries(&self) -> Result<Vec<SweepEntry>> {
        let cfg = self.integrator_config()?;
        self.sweep
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let ctx = format!("sweep[{i}]");
                let shape = build_shape(&ctx, &s.kind, s.mu, s.rho, s.sigma, s.r0)?;
                let side: Side =
                    s.side.parse().map_err(|e| Error::Config(format!("{ctx}.side: {e}")))?;
                Ok(SweepEntry { shape, side, cfg })
            })
            .collect()
    }
}

/// Sets `value` at a dotted `path` inside a TOML table, creating
/// intermediate tables. The final deserialization rejects paths that do
/// not correspond to known keys.
fn apply_override(root: &mut toml::Table, path: &str, value: &str) -> Result<()> {
    let mut parts = path.split('.').collect::<Vec<_>>();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("override path \"{path}\" has an empty segment")));
    }
    let leaf = parts.pop().expect("split is nonempty");
    let mut table = root;
    for part in parts {
        let slot = table
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = slot.as_table_mut().ok_or_else(|| {
            Error::Config(format!("override path \"{path}\": \"{part}\" is not a table"))
        })?;
    }
    let parsed = if value == "true" {
        toml::Value::Boolean(true)
    } else if value == "false" {
        toml::Value::Boolean(false)
    } else if let Ok(i) = value.parse::<i64>() {
        toml::Value::Integer(i)
    } else if let Ok(f) = value.parse::<f64>() {
        toml::Value::Float(f)
    } else {
        toml::Value::String(value.to_string())
    };
    table.insert(leaf.to_string(), parsed);
    Ok(())
}

/// Loads a config file (defaults when `path` is `None`) and applies
/// `key=value` overrides. Every failure is a [`Error::Config`] whose
/// message names the offending key.
pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<RunConfig> {
    let mut table: toml::Table = match path {
        None => toml::Table::new(),
        Some(p) => {
            let text = fs::read_to_string(p)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?;
            text.parse()
                .map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
        }
    };
    for item in overrides {
        let (key, value) = item.split_once('=').ok_or_else(|| {
            Error::Config(format!("override \"{item}\" is not of the form key=value"))
        })?;
        apply_override(&mut table, key, value)?;
    }
    toml::Value::Table(table)
        .try_into()
        .map_err(|e| Error::Config(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_load_without_a_file() {
        let cfg = load(None, &[]).unwrap();
        assert_eq!(cfg.grid.n, 4095);
        assert_eq!(cfg.grid.r_max, 64.0);
        let shape = cfg.experiment_shape().unwrap();
        assert_eq!(shape, Shape::TruncatedGroundState { mu: 1.0, rho: 30.0 });
        assert_eq!(cfg.experiment_side().unwrap(), Side::Above);
        cfg.integrator_config().unwrap();
        cfg.experiment_options().unwrap();
    }

    #[test]
    fn output_section_defaults_and_overrides() {
        let cfg = load(None, &[]).unwrap();
        assert_eq!(cfg.output.dir, None);
        assert!(!cfg.output.emit_plots);
        let cfg = load(
            None,
            &["output.dir=artifacts/run1".into(), "output.emit_plots=true".into()],
        )
        .unwrap();
        assert_eq!(cfg.output.dir.as_deref(), Some(Path::new("artifacts/run1")));
        assert!(cfg.output.emit_plots);
    }

    #[test]
    fn overrides_reach_nested_keys() {
        let cfg = load(
            None,
            &[
                "grid.n=511".into(),
                "integrator.dt0=5e-4".into(),
                "integrator.adapt=true".into(),
                "experiment.side=below".into(),
                "experiment.shape.kind=gaussian".into(),
                "experiment.shape.sigma=2".into(),
                "experiment.shape.mu=".into(),
            ],
        );
        // Clearing mu is not supported; expressed as empty string it fails
        // the final typed deserialization.
        assert!(cfg.is_err());
        let cfg = load(
            None,
            &[
                "grid.n=511".into(),
                "integrator.dt0=5e-4".into(),
                "experiment.side=below".into(),
            ],
        )
        .unwrap();
        assert_eq!(cfg.grid.n, 511);
        assert_eq!(cfg.integrator.dt0, 5e-4);
        assert_eq!(cfg.experiment_side().unwrap(), Side::Below);
    }

    #[test]
    fn unknown_keys_are_named() {
        let err = load(None, &["grid.spacing=0.1".into()]).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("spacing"), "message should name the key: {msg}");
    }

    #[test]
    fn shape_parameter_mismatches_are_named() {
        let cfg = load(
            None,
            &[
                "experiment.shape.kind=gaussian".into(),
                "experiment.shape.sigma=2".into(),
                "experiment.shape.mu=1".into(),
            ],
        )
        .unwrap();
        let err = cfg.experiment_shape().unwrap_err();
        assert!(err.to_string().contains("experiment.shape.mu"), "got: {err}");

        let cfg = load(None, &["experiment.shape.kind=ring".into()]).unwrap();
        let err = cfg.experiment_shape().unwrap_err();
        assert!(err.to_string().contains("experiment.shape.r0"), "got: {err}");
    }

    #[test]
    fn sweep_entries_build() {
        let text = r#"
            [[sweep]]
            kind = "gaussian"
            sigma = 2.0
            side = "below"

            [[sweep]]
            kind = "ring"
            r0 = 3.0
            sigma = 0.5
            side = "above"
        "#;
        let dir = std::env::temp_dir().join("cqnls-config-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("sweep.toml");
        std::fs::write(&path, text).unwrap();
        let cfg = load(Some(&path), &[]).unwrap();
        let entries = cfg.sweep_entries().unwrap();
        assert_eq!(entries.len(), 2);
        assert_eq!(entries[0].shape, Shape::Gaussian { sigma: 2.0 });
        assert_eq!(entries[1].side, Side::Above);
        std::fs::remove_file(&path).ok();
    }
}
