//! Run configuration: layered flat dotted keys with typed validation.
//!
//! Layers, later ones winning: the built-in defaults, an optional TOML file,
//! `--set key=value` overrides, then `QISIM_SEED`. Every key must already
//! exist in the defaults or in the list of optional keys.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use qisim_core::eit::DecayShape;
use qisim_core::qubit::SixState;
use qisim_core::spectral::hz_to_rad;
use sha2::{Digest, Sha256};
use toml::Value;

use crate::CliError;

pub const DEFAULT_CONFIG: &str = include_str!("../configs/default.toml");

const OPTIONAL_KEYS: &[(&str, Kind)] = &[
    ("source.sigma_hz", Kind::Float),
    ("eit.gamma_s_hz", Kind::Float),
    ("eit.tau_mem_s", Kind::Float),
    ("channel.background_b", Kind::Float),
    ("channel.V_src", Kind::Float),
    ("grids.n_freq", Kind::Integer),
    ("grids.freq_span_factor", Kind::Float),
];

/// Keys of which exactly one must be set.
const BANDWIDTH_KEYS: [&str; 2] = ["source.T_p_s", "source.sigma_hz"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Float,
    Integer,
    Bool,
    Str,
    Array,
}

impl Kind {
    fn of(v: &Value) -> Self {
        match v {
            Value::Float(_) => Kind::Float,
            Value::Integer(_) => Kind::Integer,
            Value::Boolean(_) => Kind::Bool,
            Value::Array(_) => Kind::Array,
            _ => Kind::Str,
        }
    }

    fn accepts(self, v: &Value) -> bool {
        match (self, Kind::of(v)) {
            (Kind::Float, Kind::Integer) => true,
            (a, b) => a == b,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PumpKind {
    Gaussian,
    FlatLimit,
    DeltaLimit,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bandwidth {
    PulseDuration(f64),
    SigmaHz(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Formats {
    pub csv: bool,
    pub json: bool,
    pub svg: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SourceConfig {
    pub gamma_hz: f64,
    pub pump_kind: PumpKind,
    pub bandwidth: Bandwidth,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EitConfig {
    pub od: f64,
    pub rabi_hz: f64,
    pub gamma_ge_hz: f64,
    pub gamma_s_hz: Option<f64>,
    pub target_window_hz: f64,
    pub target_delay_s: f64,
    pub length_m: f64,
    pub eta0: f64,
    pub tau_mem_s: Option<f64>,
    pub decay_shape: DecayShape,
    pub pulse_fwhm_s: f64,
    pub ramp_s: f64,
    pub storage_time_s: f64,
    pub spectrum_span_hz: f64,
    pub spectrum_points: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelConfig {
    pub eta_u: f64,
    pub eta_d: f64,
    pub phase_jitter_rad: f64,
    pub background_b: Option<f64>,
    pub v_src: Option<f64>,
    pub jitter_samples: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    pub n_freq: Option<usize>,
    pub freq_span_factor: Option<f64>,
    pub n_time: usize,
    pub time_span_factor: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub directory: PathBuf,
    pub formats: Formats,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VisibilitySweep {
    pub sigma_hz: Vec<f64>,
    pub t_p_s: Vec<f64>,
    pub curve_points: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimedistSweep {
    pub t_p_s: Vec<f64>,
    pub with_storage: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StoreSweep {
    pub states: Vec<SixState>,
    pub storage_times_s: Vec<f64>,
    pub fit_time_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BellSweep {
    pub storage_times_s: Vec<f64>,
    pub local_s: f64,
    pub target_visibility: f64,
    pub calibration_time_s: f64,
    pub curve_time_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct G13Sweep {
    pub g0: f64,
    pub threshold: f64,
    pub crossing_s: f64,
    pub t_max_s: f64,
    pub n_times: usize,
}

/// Validated configuration for every command.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub source: SourceConfig,
    pub eit: EitConfig,
    pub channel: ChannelConfig,
    pub grids: GridConfig,
    pub output: OutputConfig,
    pub visibility: VisibilitySweep,
    pub timedist: TimedistSweep,
    pub store: StoreSweep,
    pub bell: BellSweep,
    pub g13: G13Sweep,
    echo: BTreeMap<String, Value>,
}

impl RunConfig {
    /// Built-in defaults only.
    pub fn defaults() -> Self {
        Self::load(None, &[], None).expect("built-in configuration is valid")
    }

    /// Merges the layers and validates the result.
    pub fn load(file: Option<&Path>, sets: &[String], env_seed: Option<&str>) -> Result<Self, CliError> {
        let mut map = defaults_map();
        if let Some(path) = file {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            let table: toml::Table = text.parse().map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            let mut layer = BTreeMap::new();
            flatten("", &Value::Table(table), &mut layer);
            apply_layer(&mut map, layer)?;
        }
        let mut layer = BTreeMap::new();
        for s in sets {
            let (k, v) = parse_assignment(s)?;
            layer.insert(k, v);
        }
        apply_layer(&mut map, layer)?;
        if let Some(seed) = env_seed {
            let seed: u64 = seed
                .trim()
                .parse()
                .map_err(|_| CliError::Config(format!("QISIM_SEED must be an unsigned integer, got `{seed}`")))?;
            map.insert("seed".into(), Value::Integer(seed as i64));
        }
        Self::from_map(map)
    }

    /// Flat dotted-key view of the merged configuration.
    pub fn echo(&self) -> &BTreeMap<String, Value> {
        &self.echo
    }

    /// sha256 of the canonical JSON form of [`RunConfig::echo`].
    pub fn input_hash(&self) -> String {
        let json = serde_json::to_string(&self.echo_json()).expect("config echo serializes");
        hex(&Sha256::digest(json.as_bytes()))
    }

    pub fn echo_json(&self) -> serde_json::Value {
        serde_json::to_value(&self.echo).expect("config echo serializes")
    }

    pub fn gamma(&self) -> f64 {
        hz_to_rad(self.source.gamma_hz)
    }

    fn from_map(map: BTreeMap<String, Value>) -> Result<Self, CliError> {
        let r = Reader { map: &map };
        let bandwidth = match (r.opt_f64("source.T_p_s")?, r.opt_f64("source.sigma_hz")?) {
            (Some(t), None) => Bandwidth::PulseDuration(positive("source.T_p_s", t)?),
            (None, Some(s)) => Bandwidth::SigmaHz(positive("source.sigma_hz", s)?),
            _ => return Err(CliError::Config("set exactly one of source.T_p_s and source.sigma_hz".into())),
        };
        let pump_kind = match r.str("source.pump_kind")?.as_str() {
            "gaussian" => PumpKind::Gaussian,
            "flat_limit" => PumpKind::FlatLimit,
            "delta_limit" => PumpKind::DeltaLimit,
            other => {
                return Err(CliError::Config(format!(
                    "source.pump_kind must be gaussian, flat_limit or delta_limit, got `{other}`"
                )))
            }
        };
        let source = SourceConfig { gamma_hz: r.positive("source.gamma_hz")?, pump_kind, bandwidth };
        let decay_shape = match r.str("eit.decay_shape")?.as_str() {
            "gaussian" => DecayShape::Gaussian,
            "exponential" => DecayShape::Exponential,
            other => {
                return Err(CliError::Config(format!("eit.decay_shape must be gaussian or exponential, got `{other}`")))
            }
        };
        let eit = EitConfig {
            od: r.positive("eit.od")?,
            rabi_hz: r.non_negative("eit.rabi_hz")?,
            gamma_ge_hz: r.positive("eit.gamma_ge_hz")?,
            gamma_s_hz: r.opt_f64("eit.gamma_s_hz")?.map(|v| non_negative("eit.gamma_s_hz", v)).transpose()?,
            target_window_hz: r.positive("eit.target_window_hz")?,
            target_delay_s: r.positive("eit.target_delay_s")?,
            length_m: r.positive("eit.length_m")?,
            eta0: unit_interval("eit.eta0", r.f64("eit.eta0")?)?,
            tau_mem_s: r.opt_f64("eit.tau_mem_s")?.map(|v| positive("eit.tau_mem_s", v)).transpose()?,
            decay_shape,
            pulse_fwhm_s: r.positive("eit.pulse_fwhm_s")?,
            ramp_s: r.positive("eit.ramp_s")?,
            storage_time_s: r.non_negative("eit.storage_time_s")?,
            spectrum_span_hz: r.positive("eit.spectrum_span_hz")?,
            spectrum_points: r.count("eit.spectrum_points", 2)?,
        };
        let channel = ChannelConfig {
            eta_u: unit_interval("channel.eta_U", r.f64("channel.eta_U")?)?,
            eta_d: unit_interval("channel.eta_D", r.f64("channel.eta_D")?)?,
            phase_jitter_rad: r.non_negative("channel.phase_jitter_rad")?,
            background_b: r
                .opt_f64("channel.background_b")?
                .map(|v| non_negative("channel.background_b", v))
                .transpose()?,
            v_src: r.opt_f64("channel.V_src")?.map(|v| unit_interval("channel.V_src", v)).transpose()?,
            jitter_samples: r.count("channel.jitter_samples", 0)?,
        };
        let grids = GridConfig {
            n_freq: match map.get("grids.n_freq") {
                Some(_) => Some(r.count("grids.n_freq", 8)?),
                None => None,
            },
            freq_span_factor: r
                .opt_f64("grids.freq_span_factor")?
                .map(|v| positive("grids.freq_span_factor", v))
                .transpose()?,
            n_time: r.count("grids.n_time", 2)?,
            time_span_factor: r.positive("grids.time_span_factor")?,
        };
        let mut formats = Formats::default();
        for f in r.str_list("output.formats")? {
            match f.as_str() {
                "csv" => formats.csv = true,
                "json" => formats.json = true,
                "svg" => formats.svg = true,
                other => return Err(CliError::Config(format!("unknown output format `{other}`"))),
            }
        }
        let output = OutputConfig { directory: PathBuf::from(r.str("output.directory")?), formats };
        let visibility = VisibilitySweep {
            sigma_hz: r.f64_list("visibility.sigma_hz")?,
            t_p_s: r.f64_list("visibility.T_p_s")?,
            curve_points: r.count("visibility.curve_points", 0)?,
        };
        let timedist =
            TimedistSweep { t_p_s: r.positive_list("timedist.T_p_s")?, with_storage: r.bool("timedist.with_storage")? };
        let states = r
            .str_list("store.states")?
            .iter()
            .map(|s| SixState::parse(s).ok_or_else(|| CliError::Config(format!("unknown state `{s}` in store.states"))))
            .collect::<Result<Vec<_>, _>>()?;
        let store = StoreSweep {
            states,
            storage_times_s: r.non_negative_list("store.storage_times_s")?,
            fit_time_s: r.non_negative("store.fit_time_s")?,
        };
        let bell = BellSweep {
            storage_times_s: r.non_negative_list("bell.storage_times_s")?,
            local_s: r.positive("bell.local_s")?,
            target_visibility: unit_interval("bell.target_visibility", r.f64("bell.target_visibility")?)?,
            calibration_time_s: r.non_negative("bell.calibration_time_s")?,
            curve_time_s: r.non_negative("bell.curve_time_s")?,
        };
        if bell.local_s > 2.0 * std::f64::consts::SQRT_2 {
            return Err(CliError::Config(format!("bell.local_s = {} exceeds 2√2", bell.local_s)));
        }
        let g13 = G13Sweep {
            g0: r.f64("g13.g0")?,
            threshold: r.f64("g13.threshold")?,
            crossing_s: r.positive("g13.crossing_s")?,
            t_max_s: r.positive("g13.t_max_s")?,
            n_times: r.count("g13.n_times", 2)?,
        };
        if !(g13.threshold > 1.0 && g13.g0 > g13.threshold) {
            return Err(CliError::Config(format!(
                "need g13.g0 > g13.threshold > 1, got {} and {}",
                g13.g0, g13.threshold
            )));
        }
        let seed = match map.get("seed") {
            Some(Value::Integer(s)) if *s >= 0 => *s as u64,
            other => return Err(CliError::Config(format!("seed must be a non-negative integer, got {other:?}"))),
        };
        Ok(Self { seed, source, eit, channel, grids, output, visibility, timedist, store, bell, g13, echo: map })
    }
}

fn defaults_map() -> BTreeMap<String, Value> {
    let table: toml::Table = DEFAULT_CONFIG.parse().expect("built-in configuration parses");
    let mut map = BTreeMap::new();
    flatten("", &Value::Table(table), &mut map);
    map
}

fn flatten(prefix: &str, v: &Value, out: &mut BTreeMap<String, Value>) {
    match v {
        Value::Table(t) => {
            for (k, v) in t {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, v, out);
            }
        }
        other => {
            out.insert(prefix.to_string(), other.clone());
        }
    }
}

fn expected_kind(defaults: &BTreeMap<String, Value>, key: &str) -> Option<Kind> {
    defaults.get(key).map(Kind::of).or_else(|| OPTIONAL_KEYS.iter().find(|(k, _)| *k == key).map(|(_, kind)| *kind))
}

fn apply_layer(map: &mut BTreeMap<String, Value>, layer: BTreeMap<String, Value>) -> Result<(), CliError> {
    let defaults = defaults_map();
    for (k, v) in &layer {
        let kind = expected_kind(&defaults, k).ok_or_else(|| CliError::Config(format!("unknown key `{k}`")))?;
        if !kind.accepts(v) {
            return Err(CliError::Config(format!("`{k}` expects a {kind:?} value, got `{v}`")));
        }
    }
    let [a, b] = BANDWIDTH_KEYS;
    match (layer.contains_key(a), layer.contains_key(b)) {
        (true, true) => return Err(CliError::Config(format!("set only one of {a} and {b}"))),
        (true, false) => {
            map.remove(b);
        }
        (false, true) => {
            map.remove(a);
        }
        (false, false) => {}
    }
    map.extend(layer);
    Ok(())
}

/// Parses `key=value`; the value is read as TOML, falling back to a bare string.
pub fn parse_assignment(s: &str) -> Result<(String, Value), CliError> {
    let (k, v) =
        s.split_once('=').ok_or_else(|| CliError::Config(format!("override `{s}` is not of the form key=value")))?;
    let key = k.trim();
    if key.is_empty() {
        return Err(CliError::Config(format!("override `{s}` has an empty key")));
    }
    let raw = v.trim();
    let value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()));
    Ok((key.to_string(), value))
}

struct Reader<'a> {
    map: &'a BTreeMap<String, Value>,
}

impl Reader<'_> {
    fn get(&self, key: &str) -> Result<&Value, CliError> {
        self.map.get(key).ok_or_else(|| CliError::Config(format!("missing key `{key}`")))
    }

    fn opt_f64(&self, key: &str) -> Result<Option<f64>, CliError> {
        self.map.get(key).map(|v| as_f64(key, v)).transpose()
    }

    fn f64(&self, key: &str) -> Result<f64, CliError> {
        as_f64(key, self.get(key)?)
    }

    fn positive(&self, key: &str) -> Result<f64, CliError> {
        positive(key, self.f64(key)?)
    }

    fn non_negative(&self, key: &str) -> Result<f64, CliError> {
        non_negative(key, self.f64(key)?)
    }

    fn count(&self, key: &str, min: usize) -> Result<usize, CliError> {
        match self.get(key)? {
            Value::Integer(n) if *n >= min as i64 => Ok(*n as usize),
            v => Err(CliError::Config(format!("`{key}` must be an integer ≥ {min}, got `{v}`"))),
        }
    }

    fn bool(&self, key: &str) -> Result<bool, CliError> {
        self.get(key)?.as_bool().ok_or_else(|| CliError::Config(format!("`{key}` must be true or false")))
    }

    fn str(&self, key: &str) -> Result<String, CliError> {
        self.get(key)?.as_str().map(str::to_string).ok_or_else(|| CliError::Config(format!("`{key}` must be a string")))
    }

    fn array(&self, key: &str) -> Result<&Vec<Value>, CliError> {
        self.get(key)?.as_array().ok_or_else(|| CliError::Config(format!("`{key}` must be an array")))
    }

    fn f64_list(&self, key: &str) -> Result<Vec<f64>, CliError> {
        self.array(key)?.iter().map(|v| as_f64(key, v)).collect()
    }

    fn positive_list(&self, key: &str) -> Result<Vec<f64>, CliError> {
        self.f64_list(key)?.into_iter().map(|v| positive(key, v)).collect()
    }

    fn non_negative_list(&self, key: &str) -> Result<Vec<f64>, CliError> {
        self.f64_list(key)?.into_iter().map(|v| non_negative(key, v)).collect()
    }

    fn str_list(&self, key: &str) -> Result<Vec<String>, CliError> {
        self.array(key)?
            .iter()
            .map(|v| {
                v.as_str().map(str::to_string).ok_or_else(|| CliError::Config(format!("`{key}` must hold strings")))
            })
            .collect()
    }
}

fn as_f64(key: &str, v: &Value) -> Result<f64, CliError> {
    let x = match v {
        Value::Float(f) => *f,
        Value::Integer(i) => *i as f64,
        _ => return Err(CliError::Config(format!("`{key}` must be a number, got `{v}`"))),
    };
    if x.is_finite() {
        Ok(x)
    } else {
        Err(CliError::Config(format!("`{key}` must be finite")))
    }
}

fn positive(key: &str, x: f64) -> Result<f64, CliError> {
    if x > 0.0 {
        Ok(x)
    } else {
        Err(CliError::Config(format!("`{key}` must be positive, got {x}")))
    }
}

fn non_negative(key: &str, x: f64) -> Result<f64, CliError> {
    if x >= 0.0 {
        Ok(x)
    } else {
        Err(CliError::Config(format!("`{key}` must be non-negative, got {x}")))
    }
}

fn unit_interval(key: &str, x: f64) -> Result<f64, CliError> {
    if (0.0..=1.0).contains(&x) {
        Ok(x)
    } else {
        Err(CliError::Config(format!("`{key}` must lie in [0, 1], got {x}")))
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
