//! Scenario files: schema, loading, `key=value` overrides and variants.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::presets;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Spectrum,
    Degeneracy,
    Floquet,
    Ramp,
    Lifetime,
    Steady,
    Wigner,
    Surface,
    Validity,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Degeneracy => "degeneracy",
            Command::Floquet => "floquet",
            Command::Ramp => "ramp",
            Command::Lifetime => "lifetime",
            Command::Steady => "steady",
            Command::Wigner => "wigner",
            Command::Surface => "surface",
            Command::Validity => "validity",
        }
    }

    /// Sweep axes the command accepts; empty when it takes no `[sweep]`.
    pub fn axes(self) -> &'static [&'static str] {
        match self {
            Command::Spectrum | Command::Degeneracy | Command::Steady => &["eps2_over_K", "delta_over_K"],
            Command::Floquet => &["eps2_over_K"],
            Command::Lifetime => &["eps2_over_K", "delta_over_K", "delta_phi", "gamma_phi_over_K"],
            Command::Validity => &["delta_phi"],
            Command::Ramp | Command::Wigner | Command::Surface => &[],
        }
    }
}

/// Circuit energies are E/h in MHz per junction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CircuitSection {
    #[serde(rename = "EJ1")]
    pub ej1: f64,
    #[serde(rename = "EJ2")]
    pub ej2: f64,
    #[serde(rename = "EJ3")]
    pub ej3: f64,
    #[serde(rename = "EC")]
    pub ec: f64,
    pub delta_phi: f64,
    pub drive_mhz: f64,
    /// Replace `drive_mhz` by the frequency that zeroes Δ at δφ = 0.
    pub resonant_drive: bool,
    #[serde(rename = "M")]
    pub m: u32,
    #[serde(rename = "N")]
    pub n: u32,
    pub topology: String,
    pub detuning_ext_mhz: f64,
}

impl Default for CircuitSection {
    fn default() -> Self {
        Self {
            ej1: 80_000.0,
            ej2: 80_000.0,
            ej3: 80_000.0,
            ec: 250.0,
            delta_phi: 0.0,
            drive_mhz: 12_000.0,
            resonant_drive: false,
            m: 1,
            n: 1,
            topology: "sts".into(),
            detuning_ext_mhz: 0.0,
        }
    }
}

/// Flat bath: one κ and one temperature (or occupation) at every frequency.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BathSection {
    /// κ/h in kHz, converted to a rate without 2π.
    pub gamma_khz: f64,
    /// κ relative to K; takes precedence over `gamma_khz`.
    #[serde(rename = "gamma_over_K", skip_serializing_if = "Option::is_none")]
    pub gamma_over_k: Option<f64>,
    pub temperature_mk: f64,
    /// Fixed thermal occupation; takes precedence over the temperature.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_th: Option<f64>,
}

impl Default for BathSection {
    fn default() -> Self {
        Self { gamma_khz: 8.0, gamma_over_k: None, temperature_mk: 50.0, n_th: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub dissipators: String,
    #[serde(rename = "eps2_over_K")]
    pub eps2_over_k: f64,
    #[serde(rename = "delta_over_K")]
    pub delta_over_k: f64,
    /// Only used by the commands that build H from ratios.
    #[serde(rename = "lambda_over_K")]
    pub lambda_over_k: f64,
    #[serde(rename = "gamma_phi_over_K")]
    pub gamma_phi_over_k: f64,
    pub compensate: bool,
    pub suppress_lambda: bool,
    pub track_drive_shift: bool,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            dissipators: "o2-rwa".into(),
            eps2_over_k: 0.0,
            delta_over_k: 0.0,
            lambda_over_k: 0.0,
            gamma_phi_over_k: 0.0,
            compensate: false,
            suppress_lambda: false,
            track_drive_shift: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub axis: String,
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl SweepSection {
    pub fn values(&self) -> Vec<f64> {
        kerrcat::fock::linspace(self.min, self.max, self.points)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NumericsSection {
    /// Fock truncation; unset picks a per-command default (adaptive for lifetimes).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    pub max_dim: usize,
    pub dim_step: usize,
    pub initial_pairs: usize,
    pub max_pairs: usize,
    pub pair_tolerance: f64,
    pub tail_tolerance: f64,
    pub n_pairs: usize,
    pub levels: usize,
    pub cluster_width: f64,
    pub floquet_steps: usize,
    pub floquet_max_steps: usize,
    pub floquet_tolerance: f64,
    pub exact_drive: bool,
    /// Ramp length in units of 1/K.
    pub ramp_duration_k: f64,
    pub ramp_steepness: f64,
    pub ramp_steps: usize,
    pub ramp_records: usize,
    /// Phase-space grid spans [−extent, extent] in x and p.
    pub grid_extent: f64,
    pub grid_points: usize,
}

impl Default for NumericsSection {
    fn default() -> Self {
        let life = kerrcat::lifetime::LifetimeOptions::default();
        let floq = kerrcat::spectra::FloquetOptions::default();
        Self {
            dim: None,
            max_dim: life.max_dim,
            dim_step: life.dim_step,
            initial_pairs: life.initial_pairs,
            max_pairs: life.max_pairs,
            pair_tolerance: life.pair_tolerance,
            tail_tolerance: life.tail_tolerance,
            n_pairs: 6,
            levels: 6,
            cluster_width: 0.05,
            floquet_steps: floq.initial_steps,
            floquet_max_steps: floq.max_steps,
            floquet_tolerance: floq.tolerance,
            exact_drive: floq.exact_drive,
            ramp_duration_k: 64.0,
            ramp_steepness: 3.0,
            ramp_steps: 4000,
            ramp_records: 200,
            grid_extent: 4.0,
            grid_points: 101,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    /// Output directory; `--out` takes precedence.
    pub dir: String,
    /// Only "csv" tables are written.
    pub format: String,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: ".".into(), format: "csv".into() }
    }
}

/// A named series: the base scenario with extra overrides.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Variant {
    pub label: String,
    #[serde(default)]
    pub set: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,
    /// Stem of every output file.
    #[serde(default = "default_name")]
    pub name: String,
    #[serde(default)]
    pub circuit: CircuitSection,
    #[serde(default)]
    pub bath: BathSection,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub numerics: NumericsSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default, rename = "variant", skip_serializing_if = "Vec::is_empty")]
    pub variants: Vec<Variant>,
}

fn default_name() -> String {
    "kerrcat".into()
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    fn to_table(&self) -> toml::Table {
        toml::Table::try_from(self).expect("scenario serializes")
    }
}

/// Reads a scenario from a TOML file, a JSON sidecar (its `scenario` field) or
/// a built-in preset written `@name`.
pub fn load_table(source: &str) -> Result<toml::Table, String> {
    if let Some(name) = source.strip_prefix('@') {
        let text = presets::get(name).ok_or_else(|| format!("unknown preset '{name}'; available: {}", presets::names().join(", ")))?;
        return text.parse::<toml::Table>().map_err(|e| format!("preset {name}: {e}"));
    }
    let text = std::fs::read_to_string(source).map_err(|e| format!("cannot read {source}: {e}"))?;
    if Path::new(source).extension().is_some_and(|e| e == "json") {
        let mut value: serde_json::Value = serde_json::from_str(&text).map_err(|e| format!("{source}: {e}"))?;
        if let Some(inner) = value.get_mut("scenario") {
            value = inner.take();
        }
        let scenario: Scenario = serde_json::from_value(value).map_err(|e| format!("{source}: {e}"))?;
        return Ok(scenario.to_table());
    }
    text.parse::<toml::Table>().map_err(|e| format!("{source}: {e}"))
}

/// Sets a dotted key from `key=value`. Values are read as TOML literals and
/// fall back to plain strings.
pub fn apply_override(table: &mut toml::Table, spec: &str) -> Result<(), String> {
    let (key, raw) = spec.split_once('=').ok_or_else(|| format!("override '{spec}' is not key=value"))?;
    let parts: Vec<&str> = key.trim().split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(format!("override key '{key}' is malformed"));
    }
    let raw = raw.trim();
    let value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let mut node = table;
    for part in &parts[..parts.len() - 1] {
        let entry = node.entry(part.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        node = entry.as_table_mut().ok_or_else(|| format!("override key '{key}': '{part}' is not a section"))?;
    }
    node.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

fn from_table(table: toml::Table) -> Result<Scenario, String> {
    toml::Value::Table(table).try_into().map_err(|e: toml::de::Error| e.to_string())
}

/// One output series after variant and command-line overrides.
#[derive(Clone, Debug)]
pub struct Series {
    pub label: String,
    pub scenario: Scenario,
}

/// Resolves the base scenario and its series. Command-line overrides apply to
/// the base and again on top of each variant, so they always win.
pub fn resolve(mut table: toml::Table, overrides: &[String]) -> Result<(Scenario, Vec<Series>), String> {
    for o in overrides {
        apply_override(&mut table, o)?;
    }
    let base = from_table(table)?;
    if base.variants.is_empty() {
        return Ok((base.clone(), vec![Series { label: String::new(), scenario: base }]));
    }
    let mut plain = base.clone();
    plain.variants.clear();
    let mut series = Vec::new();
    for v in &base.variants {
        if v.label.is_empty() || !v.label.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
            return Err(format!("variant label '{}' must be nonempty and use only [A-Za-z0-9_-]", v.label));
        }
        if series.iter().any(|s: &Series| s.label == v.label) {
            return Err(format!("duplicate variant label '{}'", v.label));
        }
        let mut t = plain.to_table();
        for o in v.set.iter().chain(overrides) {
            apply_override(&mut t, o).map_err(|e| format!("variant {}: {e}", v.label))?;
        }
        let scenario = from_table(t).map_err(|e| format!("variant {}: {e}", v.label))?;
        if !scenario.variants.is_empty() {
            return Err(format!("variant {} may not define variants", v.label));
        }
        series.push(Series { label: v.label.clone(), scenario });
    }
    Ok((base, series))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_parse_literals_and_strings() {
        let mut t = toml::Table::new();
        apply_override(&mut t, "circuit.M=2").unwrap();
        apply_override(&mut t, "model.dissipators=o34").unwrap();
        apply_override(&mut t, "model.compensate = true").unwrap();
        apply_override(&mut t, "circuit.topology=\"squid\"").unwrap();
        let s = from_table(t).unwrap();
        assert_eq!(s.circuit.m, 2);
        assert_eq!(s.model.dissipators, "o34");
        assert!(s.model.compensate);
        assert_eq!(s.circuit.topology, "squid");
    }

    #[test]
    fn integers_fill_float_fields() {
        let mut t = toml::Table::new();
        apply_override(&mut t, "circuit.EC=100").unwrap();
        assert_eq!(from_table(t).unwrap().circuit.ec, 100.0);
    }

    #[test]
    fn unknown_keys_list_the_valid_ones() {
        let err = Scenario::parse("[circuit]\nEJ4 = 1.0\n").unwrap_err();
        assert!(err.contains("EJ4") && err.contains("EJ1") && err.contains("topology"), "{err}");
    }

    #[test]
    fn malformed_overrides() {
        let mut t = toml::Table::new();
        assert!(apply_override(&mut t, "circuit.M").is_err());
        assert!(apply_override(&mut t, "circuit..M=1").is_err());
        apply_override(&mut t, "name=x").unwrap();
        assert!(apply_override(&mut t, "name.sub=1").is_err());
    }

    #[test]
    fn command_line_beats_variants() {
        let text = "name = \"t\"\n[[variant]]\nlabel = \"a\"\nset = [\"circuit.M=3\"]\n[[variant]]\nlabel = \"b\"\n";
        let (_, series) = resolve(text.parse().unwrap(), &["circuit.N=6".into()]).unwrap();
        assert_eq!(series.len(), 2);
        assert_eq!((series[0].scenario.circuit.m, series[0].scenario.circuit.n), (3, 6));
        assert_eq!((series[1].scenario.circuit.m, series[1].scenario.circuit.n), (1, 6));
        let (_, series) = resolve(text.parse().unwrap(), &["circuit.M=2".into()]).unwrap();
        assert_eq!(series[0].scenario.circuit.m, 2);
    }

    #[test]
    fn duplicate_labels_rejected() {
        let text = "[[variant]]\nlabel = \"a\"\n[[variant]]\nlabel = \"a\"\n";
        assert!(resolve(text.parse().unwrap(), &[]).is_err());
    }
}
