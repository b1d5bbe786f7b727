//! Config-driven command-line front end.
//!
//! A run is described by a single TOML file with a fixed schema (unknown keys
//! are rejected), and every command is a deterministic function of that file:
//! reruns produce byte-identical CSV artifacts. Floats are written with 17
//! significant digits and LF line endings behind a `# schema=1` version
//! comment.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use serde::Deserialize;

use crate::domains::{region_expectation, region_probability, SelectionDomain};
use crate::keyrate::{
    model_integration, model_observable, model_simplified, rate_map, GridSpec, RateMap,
};
use crate::physics::{DeviceParams, IntensitySet};
use crate::thresholds::ThresholdSet;
use crate::turbulence::{ChannelParams, JointPdtc};
use crate::validation::{mc_observable_model, mc_region_means, mc_region_probability};

/// Failure modes of a CLI run, split by the exit code they map to.
#[derive(Debug)]
pub enum CliError {
    /// Unparseable or invalid configuration (exit code 2).
    Config(String),
    /// A computation or I/O failure after validation (exit code 1).
    Compute(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Compute(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "invalid config: {msg}"),
            CliError::Compute(msg) => write!(f, "{msg}"),
        }
    }
}

impl std::error::Error for CliError {}

fn config_err(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

fn compute_err(e: impl std::fmt::Display) -> CliError {
    CliError::Compute(e.to_string())
}

// ---------------------------------------------------------------------------
// Configuration schema
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub device: DeviceConfig,
    pub intensities: IntensitiesConfig,
    #[serde(default)]
    pub channels: Option<ChannelsConfig>,
    #[serde(default)]
    pub grid: Option<GridConfig>,
    #[serde(default)]
    pub models: Option<Vec<ModelKind>>,
    #[serde(default)]
    pub domain: Option<DomainConfig>,
    #[serde(default)]
    pub mc: Option<McConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceConfig {
    pub y0: f64,
    pub eta_d: f64,
    pub e_d: f64,
    pub f_e: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntensitiesConfig {
    pub alice: IntensityConfig,
    pub bob: IntensityConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntensityConfig {
    pub s: f64,
    pub p_s: f64,
    pub mu: f64,
    pub nu: f64,
    pub omega: f64,
}

/// Either a fixed pair of turbulent channels or a distance sweep. The
/// variants carry `deny_unknown_fields` so a stray key fails both and is
/// reported instead of being silently ignored.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum ChannelsConfig {
    Joint(JointChannels),
    Sweep(SweepChannels),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointChannels {
    pub eta0_a: f64,
    pub sigma_a: f64,
    pub eta0_b: f64,
    pub sigma_b: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepChannels {
    /// Per-arm fibre-equivalent distances, in km.
    pub distances_km: Vec<f64>,
    /// Attenuation in dB/km; eta = 10^(-att * d / 10) per arm.
    #[serde(default = "default_attenuation")]
    pub att_db_per_km: f64,
    /// Log-intensity standard deviation, shared by both arms.
    pub sigma: f64,
}

fn default_attenuation() -> f64 {
    0.2
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub resolution: usize,
    pub eta_min: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Simplified,
    Integration,
    Observable,
}

impl ModelKind {
    fn name(self) -> &'static str {
        match self {
            ModelKind::Simplified => "simplified",
            ModelKind::Integration => "integration",
            ModelKind::Observable => "observable",
        }
    }
}

/// Selection domain specification; `kind` selects the variant and the other
/// fields are required exactly when the variant uses them.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub kind: String,
    #[serde(default)]
    pub eta_at: Option<f64>,
    #[serde(default)]
    pub eta_bt: Option<f64>,
    #[serde(default)]
    pub x_min: Option<f64>,
    #[serde(default)]
    pub x_max: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    pub n: usize,
    pub seed: u64,
}

impl RunConfig {
    /// Parse and fully validate a config file; nothing is computed yet.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let config: RunConfig = toml::from_str(&text).map_err(config_err)?;
        // Eagerly validate every numeric block so bad values are reported
        // before any computation starts.
        config.device()?;
        config.alice()?;
        config.bob()?;
        config.grid_spec()?;
        if let Some(channels) = &config.channels {
            channels.validate()?;
        }
        if let Some(domain) = &config.domain {
            domain.validate()?;
        }
        if let Some(mc) = &config.mc {
            if mc.n < crate::validation::MIN_SAMPLES {
                return Err(CliError::Config(format!(
                    "mc.n must be at least {}, got {}",
                    crate::validation::MIN_SAMPLES,
                    mc.n
                )));
            }
        }
        Ok(config)
    }

    pub fn device(&self) -> Result<DeviceParams, CliError> {
        let d = &self.device;
        DeviceParams::new(d.y0, d.eta_d, d.e_d, d.f_e).map_err(config_err)
    }

    pub fn alice(&self) -> Result<IntensitySet, CliError> {
        let i = &self.intensities.alice;
        IntensitySet::new(i.s, i.p_s, i.mu, i.nu, i.omega).map_err(config_err)
    }

    pub fn bob(&self) -> Result<IntensitySet, CliError> {
        let i = &self.intensities.bob;
        IntensitySet::new(i.s, i.p_s, i.mu, i.nu, i.omega).map_err(config_err)
    }

    pub fn grid_spec(&self) -> Result<GridSpec, CliError> {
        let spec = match &self.grid {
            Some(g) => GridSpec {
                resolution: g.resolution,
                eta_min: g.eta_min,
            },
            None => GridSpec::default(),
        };
        if spec.resolution < 64 {
            return Err(CliError::Config(format!(
                "grid.resolution must be at least 64, got {}",
                spec.resolution
            )));
        }
        if !(spec.eta_min > 0.0 && spec.eta_min < 1.0) {
            return Err(CliError::Config(format!(
                "grid.eta_min must lie in (0, 1), got {}",
                spec.eta_min
            )));
        }
        Ok(spec)
    }

    fn models(&self) -> Vec<ModelKind> {
        match &self.models {
            Some(list) => {
                // Fixed evaluation order regardless of config order.
                let mut out = Vec::new();
                for kind in [
                    ModelKind::Simplified,
                    ModelKind::Integration,
                    ModelKind::Observable,
                ] {
                    if list.contains(&kind) && !out.contains(&kind) {
                        out.push(kind);
                    }
                }
                out
            }
            None => vec![
                ModelKind::Simplified,
                ModelKind::Integration,
                ModelKind::Observable,
            ],
        }
    }

    fn joint_channels(&self) -> Result<JointPdtc, CliError> {
        match &self.channels {
            Some(ChannelsConfig::Joint(c)) => {
                let a = ChannelParams::new(c.eta0_a, c.sigma_a).map_err(config_err)?;
                let b = ChannelParams::new(c.eta0_b, c.sigma_b).map_err(config_err)?;
                Ok(JointPdtc::new(a, b))
            }
            Some(ChannelsConfig::Sweep { .. }) => Err(CliError::Config(
                "this command needs fixed channels (eta0_a/sigma_a/eta0_b/sigma_b), \
                 not a distance sweep"
                    .into(),
            )),
            None => Err(CliError::Config("missing [channels] section".into())),
        }
    }

    /// Build the configured selection domain; `kind = "boundary"` computes a
    /// rate map at the configured grid first.
    fn build_domain(&self, map: &mut Option<Arc<RateMap>>) -> Result<SelectionDomain, CliError> {
        let spec = match &self.domain {
            Some(d) => d,
            None => return Ok(SelectionDomain::Full),
        };
        let need = |field: Option<f64>, name: &str| {
            field.ok_or_else(|| {
                CliError::Config(format!("domain.{name} is required for kind = \"{}\"", spec.kind))
            })
        };
        match spec.kind.as_str() {
            "full" => Ok(SelectionDomain::Full),
            "square" => SelectionDomain::square(
                need(spec.eta_at, "eta_at")?,
                need(spec.eta_bt, "eta_bt")?,
            )
            .map_err(config_err),
            "joint" => SelectionDomain::joint(
                need(spec.eta_at, "eta_at")?,
                need(spec.eta_bt, "eta_bt")?,
                need(spec.x_min, "x_min")?,
                need(spec.x_max, "x_max")?,
            )
            .map_err(config_err),
            "boundary" => {
                if map.is_none() {
                    *map = Some(Arc::new(self.compute_map()?));
                }
                Ok(SelectionDomain::boundary(map.as_ref().unwrap().clone()))
            }
            other => Err(CliError::Config(format!(
                "domain.kind must be one of full, square, joint, boundary; got \"{other}\""
            ))),
        }
    }

    fn compute_map(&self) -> Result<RateMap, CliError> {
        rate_map(&self.device()?, &self.alice()?, &self.bob()?, &self.grid_spec()?)
            .map_err(compute_err)
    }

    fn mc(&self) -> McConfig {
        self.mc.clone().unwrap_or(McConfig {
            n: 100_000,
            seed: 1,
        })
    }
}

impl ChannelsConfig {
    fn validate(&self) -> Result<(), CliError> {
        match self {
            ChannelsConfig::Joint(c) => {
                ChannelParams::new(c.eta0_a, c.sigma_a).map_err(config_err)?;
                ChannelParams::new(c.eta0_b, c.sigma_b).map_err(config_err)?;
                Ok(())
            }
            ChannelsConfig::Sweep(c) => {
                if c.distances_km.is_empty() {
                    return Err(CliError::Config("channels.distances_km is empty".into()));
                }
                if c.distances_km.iter().any(|d| !d.is_finite() || *d < 0.0) {
                    return Err(CliError::Config(
                        "channels.distances_km entries must be finite and nonnegative".into(),
                    ));
                }
                if !(c.att_db_per_km > 0.0 && c.att_db_per_km.is_finite()) {
                    return Err(CliError::Config(format!(
                        "channels.att_db_per_km must be positive, got {}",
                        c.att_db_per_km
                    )));
                }
                ChannelParams::new(0.5, c.sigma).map_err(config_err)?;
                Ok(())
            }
        }
    }
}

impl DomainConfig {
    fn validate(&self) -> Result<(), CliError> {
        match self.kind.as_str() {
            "full" | "square" | "joint" | "boundary" => Ok(()),
            other => Err(CliError::Config(format!(
                "domain.kind must be one of full, square, joint, boundary; got \"{other}\""
            ))),
        }
    }
}

// ---------------------------------------------------------------------------
// CSV output
// ---------------------------------------------------------------------------

/// 17 significant digits, enough to round-trip any f64 bit pattern.
fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

struct Csv {
    text: String,
}

impl Csv {
    fn new(header: &str) -> Self {
        Self {
            text: format!("# schema=1\n{header}\n"),
        }
    }

    fn row(&mut self, fields: &[String]) {
        let _ = writeln!(self.text, "{}", fields.join(","));
    }

    fn write(&self, dir: &Path, name: &str) -> Result<(), CliError> {
        fs::create_dir_all(dir)
            .map_err(|e| CliError::Compute(format!("creating {}: {e}", dir.display())))?;
        let path = dir.join(name);
        fs::write(&path, self.text.as_bytes())
            .map_err(|e| CliError::Compute(format!("writing {}: {e}", path.display())))
    }
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

/// `rate-map`: the static key rate on the configured grid, row-major.
pub fn cmd_rate_map(config: &RunConfig, out: &Path, quiet: bool) -> Result<(), CliError> {
    let map = config.compute_map()?;
    let mut csv = Csv::new("eta_a,eta_b,rate");
    for ia in 0..map.grid_a().len() {
        for ib in 0..map.grid_b().len() {
            csv.row(&[
                fmt_float(map.grid_a()[ia]),
                fmt_float(map.grid_b()[ib]),
                fmt_float(map.value(ia, ib)),
            ]);
        }
    }
    csv.write(out, "rate_map.csv")?;
    if !quiet {
        println!(
            "rate_map.csv: {} x {} grid",
            map.grid_a().len(),
            map.grid_b().len()
        );
    }
    Ok(())
}

/// `thresholds`: R = 0 boundary polyline plus the derived threshold summary.
pub fn cmd_thresholds(config: &RunConfig, out: &Path, quiet: bool) -> Result<(), CliError> {
    let map = config.compute_map()?;
    let ts = ThresholdSet::from_map(&map).map_err(compute_err)?;
    let mut boundary = Csv::new("eta_a,eta_b");
    for &(a, b) in &ts.boundary {
        boundary.row(&[fmt_float(a), fmt_float(b)]);
    }
    boundary.write(out, "boundary.csv")?;
    let mut summary = Csv::new("eta_a_critical,eta_b_critical,x_min,x_max");
    summary.row(&[
        fmt_float(ts.eta_a_critical),
        fmt_float(ts.eta_b_critical),
        fmt_float(ts.x_min),
        fmt_float(ts.x_max),
    ]);
    summary.write(out, "thresholds.csv")?;
    if !quiet {
        println!(
            "thresholds: eta_a_critical={:.6e} eta_b_critical={:.6e} x_min={:.6} x_max={:.6} \
             ({} boundary points)",
            ts.eta_a_critical,
            ts.eta_b_critical,
            ts.x_min,
            ts.x_max,
            ts.boundary.len()
        );
    }
    Ok(())
}

/// `sweep`: turbulent-channel rates over a fibre-equivalent distance sweep,
/// one row per (distance, model); the domain column names the effective
/// selection (the integration model ignores selection and reports "full").
pub fn cmd_sweep(config: &RunConfig, out: &Path, quiet: bool) -> Result<(), CliError> {
    let (distances, att, sigma) = match &config.channels {
        Some(ChannelsConfig::Sweep(c)) => {
            let mut d = c.distances_km.clone();
            d.sort_by(|a, b| a.partial_cmp(b).unwrap());
            d.dedup();
            (d, c.att_db_per_km, c.sigma)
        }
        Some(ChannelsConfig::Joint(_)) => {
            return Err(CliError::Config(
                "sweep needs [channels] with distances_km/att_db_per_km/sigma".into(),
            ))
        }
        None => return Err(CliError::Config("missing [channels] section".into())),
    };
    let device = config.device()?;
    let alice = config.alice()?;
    let bob = config.bob()?;
    let mut map = None;
    let domain = config.build_domain(&mut map)?;
    let domain_name = config
        .domain
        .as_ref()
        .map(|d| d.kind.clone())
        .unwrap_or_else(|| "full".to_string());
    let models = config.models();

    // One worker per distance; results land in a preallocated slot each, so
    // the output order is independent of completion order.
    let mut results: Vec<Option<Result<Vec<(ModelKind, f64)>, CliError>>> =
        (0..distances.len()).map(|_| None).collect();
    std::thread::scope(|scope| {
        for (slot, d) in results.iter_mut().zip(&distances) {
            let (device, alice, bob, domain, models) =
                (&device, &alice, &bob, &domain, &models);
            scope.spawn(move || {
                *slot = Some(sweep_point(*d, att, sigma, device, alice, bob, domain, models));
            });
        }
    });

    let mut csv = Csv::new("distance_km,loss_db,model,domain,rate");
    for (d, slot) in distances.iter().zip(results) {
        let rows = slot.expect("worker completed")?;
        // Total channel loss across both arms.
        let loss_db = 2.0 * att * d;
        for (kind, rate) in rows {
            let dom = match kind {
                ModelKind::Integration => "full",
                _ => domain_name.as_str(),
            };
            csv.row(&[
                fmt_float(*d),
                fmt_float(loss_db),
                kind.name().to_string(),
                dom.to_string(),
                fmt_float(rate),
            ]);
        }
    }
    csv.write(out, "sweep.csv")?;
    if !quiet {
        println!(
            "sweep.csv: {} distances x {} models, domain {domain_name}",
            distances.len(),
            models.len()
        );
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn sweep_point(
    d: f64,
    att: f64,
    sigma: f64,
    device: &DeviceParams,
    alice: &IntensitySet,
    bob: &IntensitySet,
    domain: &SelectionDomain,
    models: &[ModelKind],
) -> Result<Vec<(ModelKind, f64)>, CliError> {
    let eta0 = 10f64.powf(-att * d / 10.0);
    let ch = ChannelParams::new(eta0, sigma).map_err(compute_err)?;
    let joint = JointPdtc::new(ch, ch);
    let mut rows = Vec::with_capacity(models.len());
    for &kind in models {
        let rate = match kind {
            ModelKind::Simplified => {
                model_simplified(&joint, domain, device, alice, bob).map_err(compute_err)?
            }
            ModelKind::Integration => {
                model_integration(&joint, device, alice, bob).map_err(compute_err)?
            }
            ModelKind::Observable => {
                model_observable(&joint, domain, device, alice, bob).map_err(compute_err)?
            }
        };
        rows.push((kind, rate));
    }
    Ok(rows)
}

/// `validate`: Monte-Carlo oracles against quadrature for the configured
/// scenario; prints one pass/fail line per 3-sigma check.
pub fn cmd_validate(config: &RunConfig, _out: &Path, quiet: bool) -> Result<(), CliError> {
    let joint = config.joint_channels()?;
    let device = config.device()?;
    let alice = config.alice()?;
    let bob = config.bob()?;
    let mut map = None;
    let domain = config.build_domain(&mut map)?;
    let mc = config.mc();

    let mut all_pass = true;
    let mut check = |name: &str, mc_value: f64, se: f64, quad: f64| {
        let pass = (mc_value - quad).abs() <= 3.0 * se;
        all_pass &= pass;
        if !quiet {
            println!(
                "{}: {name} mc={} quad={} se={}",
                if pass { "PASS" } else { "FAIL" },
                fmt_float(mc_value),
                fmt_float(quad),
                fmt_float(se)
            );
        }
    };

    let prob = mc_region_probability(&joint, &domain, mc.n, mc.seed).map_err(compute_err)?;
    let quad_prob = region_probability(&joint, &domain).map_err(compute_err)?;
    check("region_probability", prob.value, prob.std_error, quad_prob);

    let (mean_a, mean_b) = mc_region_means(&joint, &domain, mc.n, mc.seed).map_err(compute_err)?;
    let quad_a = region_expectation(&joint, &domain, |a, _| a).map_err(compute_err)?;
    let quad_b = region_expectation(&joint, &domain, |_, b| b).map_err(compute_err)?;
    check("conditional_mean_a", mean_a.value, mean_a.std_error, quad_a);
    check("conditional_mean_b", mean_b.value, mean_b.std_error, quad_b);

    let model =
        mc_observable_model(&joint, &domain, &device, &alice, &bob, mc.n, mc.seed)
            .map_err(compute_err)?;
    let quad_model =
        model_observable(&joint, &domain, &device, &alice, &bob).map_err(compute_err)?;
    check("observable_model", model.value, model.std_error, quad_model);

    if !quiet {
        println!("seed={} n={}", mc.seed, mc.n);
    }
    if all_pass {
        Ok(())
    } else {
        Err(CliError::Compute("validation checks failed".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write as _;

    fn base_config() -> String {
        "[device]\n\
         y0 = 3.5e-6\n\
         eta_d = 0.45\n\
         e_d = 0.01\n\
         f_e = 1.16\n\
         \n\
         [intensities.alice]\n\
         s = 0.3\n\
         p_s = 0.5\n\
         mu = 0.3\n\
         nu = 0.09\n\
         omega = 2e-4\n\
         \n\
         [intensities.bob]\n\
         s = 0.3\n\
         p_s = 0.5\n\
         mu = 0.3\n\
         nu = 0.09\n\
         omega = 2e-4\n"
            .to_string()
    }

    fn load(text: &str) -> Result<RunConfig, CliError> {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        file.write_all(text.as_bytes()).unwrap();
        RunConfig::load(file.path())
    }

    #[test]
    fn parses_minimal_config() {
        let config = load(&base_config()).unwrap();
        assert!(config.channels.is_none());
        assert_eq!(config.grid_spec().unwrap().resolution, 128);
        assert_eq!(config.models().len(), 3);
    }

    #[test]
    fn rejects_unknown_keys() {
        let text = base_config() + "\n[device2]\nx = 1\n";
        assert!(matches!(load(&text), Err(CliError::Config(_))));
        let text = base_config().replace("f_e = 1.16", "f_e = 1.16\nextra = 3");
        assert!(matches!(load(&text), Err(CliError::Config(_))));
    }

    #[test]
    fn rejects_invalid_values() {
        let text = base_config().replace("e_d = 0.01", "e_d = 0.7");
        assert!(matches!(load(&text), Err(CliError::Config(_))));
        let text = base_config() + "\n[grid]\nresolution = 16\neta_min = 1e-3\n";
        assert!(matches!(load(&text), Err(CliError::Config(_))));
        let text = base_config() + "\n[mc]\nn = 10\nseed = 1\n";
        assert!(matches!(load(&text), Err(CliError::Config(_))));
        let text = base_config() + "\n[domain]\nkind = \"wedge\"\n";
        assert!(matches!(load(&text), Err(CliError::Config(_))));
    }

    #[test]
    fn parses_both_channel_forms() {
        let text = base_config()
            + "\n[channels]\neta0_a = 0.1\nsigma_a = 0.9\neta0_b = 0.1\nsigma_b = 0.9\n";
        let config = load(&text).unwrap();
        assert!(matches!(config.channels, Some(ChannelsConfig::Joint(_))));
        config.joint_channels().unwrap();

        let text = base_config() + "\n[channels]\ndistances_km = [10.0, 20.0]\nsigma = 0.9\n";
        let config = load(&text).unwrap();
        match config.channels {
            Some(ChannelsConfig::Sweep(ref c)) => {
                assert_eq!(c.att_db_per_km, 0.2);
            }
            ref other => panic!("expected sweep channels, got {other:?}"),
        }
        assert!(config.joint_channels().is_err());

        // A stray key inside [channels] must be rejected, not swallowed by
        // the untagged enum.
        let text = base_config()
            + "\n[channels]\ndistances_km = [10.0]\nsigma = 0.9\nmodels = [\"observable\"]\n";
        assert!(matches!(load(&text), Err(CliError::Config(_))));
    }

    #[test]
    fn domain_requires_variant_fields() {
        let text = base_config() + "\n[domain]\nkind = \"joint\"\neta_at = 0.01\n";
        let config = load(&text).unwrap();
        let mut map = None;
        assert!(matches!(
            config.build_domain(&mut map),
            Err(CliError::Config(_))
        ));
        let text = base_config()
            + "\n[domain]\nkind = \"joint\"\neta_at = 0.01\neta_bt = 0.01\nx_min = 0.5\nx_max = 2.0\n";
        let config = load(&text).unwrap();
        let domain = config.build_domain(&mut map).unwrap();
        assert!(matches!(domain, SelectionDomain::Joint { .. }));
    }

    #[test]
    fn float_format_has_17_significant_digits() {
        assert_eq!(fmt_float(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_float(1.0), "1.0000000000000000e0");
        let x = 2.0790592733073372e-8;
        assert_eq!(fmt_float(x).parse::<f64>().unwrap(), x);
    }
}
