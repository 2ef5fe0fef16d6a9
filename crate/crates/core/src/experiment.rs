//! Pulse schedules, the method comparison behind the reference tables,
//! configuration parsing and reports.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::bloch::{run_schedule, Segment};
use crate::error::{Result, ZenoError};
use crate::linalg3::Vec3C;
use crate::montecarlo::run_ensemble;
use crate::pulse::{pulse_spacing, PredictionInputs};
use crate::vsystem::{
    validate_measurement_regime, DensityMatrix3, GeneratorKind, RegimeWarning, SystemParams,
    REFERENCE_A3, REFERENCE_OMEGA3, REFERENCE_TAU_P, REFERENCE_T_PI,
};

pub const REPORT_SCHEMA: &str = "zeno-report/1";
pub const CSV_HEADER: &str = "n,ideal_pp,modified_pp,quantum_jump,bloch,monte_carlo,mc_stderr,observed";
/// Pulse counts of the reference tables.
pub const TABLE_N_VALUES: [u32; 7] = [1, 2, 4, 8, 16, 32, 64];
/// Largest allowed difference between the quantum-jump result with zeroed
/// small parameters and the modified projection result.
pub const IDENTITY_TOL: f64 = 1e-14;

/// Measured level-2 populations of the reference experiment, kept as text.
/// Context only; never compared against.
pub const OBSERVED_TABLE1: [(u32, &str); 7] = [
    (1, "0.995"),
    (2, "0.500"),
    (4, "0.335"),
    (8, "0.194"),
    (16, "0.103"),
    (32, "0.013"),
    (64, "-0.006"),
];
pub const OBSERVED_PROVENANCE: &str = "Observed: measured level-2 populations of the ion-trap experiment \
whose parameters are the defaults, copied verbatim (including the negative n = 64 entry). \
Reference data only, not used in any check.";
pub const ATTRIBUTION_NOTE: &str = "monte_carlo: emissions in the transient after a pulse are \
attributed to that pulse; values are the final level-2 population of the rescaled schedule.";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    IdealPp,
    ModifiedPp,
    QuantumJump,
    Bloch,
    MonteCarlo,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::IdealPp,
        Method::ModifiedPp,
        Method::QuantumJump,
        Method::Bloch,
        Method::MonteCarlo,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::IdealPp => "ideal_pp",
            Method::ModifiedPp => "modified_pp",
            Method::QuantumJump => "quantum_jump",
            Method::Bloch => "bloch",
            Method::MonteCarlo => "monte_carlo",
        }
    }

    pub fn from_name(s: &str) -> Option<Method> {
        Method::ALL.into_iter().find(|m| m.name() == s)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McOptions {
    pub n_traj: usize,
    pub master_seed: u64,
    /// Factor applied to all rates (times scale inversely) before the
    /// Monte Carlo run. The small parameters are unchanged.
    pub rescale_factor: f64,
}

impl Default for McOptions {
    fn default() -> Self {
        McOptions {
            n_traj: 10_000,
            master_seed: 0,
            rescale_factor: 1e-4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputOptions {
    pub format: OutputFormat,
    /// Written to stdout when absent.
    pub path: Option<PathBuf>,
}

impl Default for OutputOptions {
    fn default() -> Self {
        OutputOptions {
            format: OutputFormat::Csv,
            path: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub params: SystemParams,
    pub tau_p: f64,
    /// Ascending, without duplicates.
    pub n_values: Vec<u32>,
    /// In the order of [`Method::ALL`].
    pub methods: Vec<Method>,
    pub mc: McOptions,
    pub output: OutputOptions,
}

impl ExperimentConfig {
    /// The reference parameter set with the four deterministic methods.
    pub fn table1() -> Self {
        ExperimentConfig {
            params: SystemParams::reference(),
            tau_p: REFERENCE_TAU_P,
            n_values: TABLE_N_VALUES.to_vec(),
            methods: vec![
                Method::IdealPp,
                Method::ModifiedPp,
                Method::QuantumJump,
                Method::Bloch,
            ],
            mc: McOptions::default(),
            output: OutputOptions::default(),
        }
    }

    /// The reference set with `omega3 = a3 / 2`.
    pub fn table2() -> Self {
        ExperimentConfig {
            params: SystemParams::strong_probe(),
            ..Self::table1()
        }
    }

    pub fn has(&self, m: Method) -> bool {
        self.methods.contains(&m)
    }

    /// True for the parameters of the reference experiment.
    pub fn is_reference(&self) -> bool {
        self.params == SystemParams::reference() && self.tau_p == REFERENCE_TAU_P
    }
}

// ---------------------------------------------------------------------------
// Config parsing
// ---------------------------------------------------------------------------

const TOP_KEYS: [&str; 9] = [
    "t_pi_s",
    "a3_per_s",
    "omega3_per_s",
    "omega3_over_a3",
    "tau_p_s",
    "n_values",
    "methods",
    "mc",
    "output",
];
const MC_KEYS: [&str; 3] = ["n_traj", "master_seed", "rescale_factor"];
const OUTPUT_KEYS: [&str; 2] = ["format", "path"];

fn check_keys(obj: &Map<String, Value>, prefix: &str, allowed: &[&str]) -> Result<()> {
    match obj.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(ZenoError::config(format!("{prefix}{k}"), "unknown field")),
        None => Ok(()),
    }
}

fn positive(obj: &Map<String, Value>, path: &str, key: &str, default: f64) -> Result<f64> {
    let Some(v) = obj.get(key) else {
        return Ok(default);
    };
    let x = v
        .as_f64()
        .ok_or_else(|| ZenoError::config(path, "expected a number"))?;
    if !(x > 0.0) || !x.is_finite() {
        return Err(ZenoError::config(path, format!("must be positive and finite, got {x}")));
    }
    Ok(x)
}

fn object<'a>(v: &'a Value, path: &str) -> Result<&'a Map<String, Value>> {
    v.as_object()
        .ok_or_else(|| ZenoError::config(path, "expected an object"))
}

/// Parses a JSON config. Missing fields take the reference values; unknown
/// fields are rejected. Pulse counts that do not fit into the pi pulse are
/// a schedule error.
pub fn parse_config(source: &str) -> Result<ExperimentConfig> {
    let root: Value =
        serde_json::from_str(source).map_err(|e| ZenoError::config("$", e.to_string()))?;
    let obj = object(&root, "$")?;
    check_keys(obj, "", &TOP_KEYS)?;
    let defaults = ExperimentConfig::table1();

    let t_pi = positive(obj, "t_pi_s", "t_pi_s", REFERENCE_T_PI)?;
    let a3 = positive(obj, "a3_per_s", "a3_per_s", REFERENCE_A3)?;
    let omega3 = match (obj.get("omega3_per_s"), obj.get("omega3_over_a3")) {
        (Some(_), Some(_)) => {
            return Err(ZenoError::config(
                "omega3_over_a3",
                "give either omega3_per_s or omega3_over_a3, not both",
            ))
        }
        (_, Some(_)) => a3 * positive(obj, "omega3_over_a3", "omega3_over_a3", 1.0)?,
        _ => positive(obj, "omega3_per_s", "omega3_per_s", REFERENCE_OMEGA3)?,
    };
    let tau_p = positive(obj, "tau_p_s", "tau_p_s", REFERENCE_TAU_P)?;
    let params = if t_pi == REFERENCE_T_PI {
        SystemParams {
            omega3,
            a3,
            ..SystemParams::reference()
        }
    } else {
        SystemParams::new(std::f64::consts::PI / t_pi, omega3, a3)
            .map_err(|e| ZenoError::config("t_pi_s", e.to_string()))?
    };

    let n_values = match obj.get("n_values") {
        None => defaults.n_values.clone(),
        Some(v) => {
            let items = v
                .as_array()
                .ok_or_else(|| ZenoError::config("n_values", "expected an array"))?;
            let mut out = Vec::with_capacity(items.len());
            for (i, item) in items.iter().enumerate() {
                let n = item
                    .as_u64()
                    .filter(|&n| n >= 1 && n <= u32::MAX as u64)
                    .ok_or_else(|| {
                        ZenoError::config(format!("n_values[{i}]"), "expected a positive integer")
                    })?;
                out.push(n as u32);
            }
            out.sort_unstable();
            out.dedup();
            if out.is_empty() {
                return Err(ZenoError::config("n_values", "must not be empty"));
            }
            out
        }
    };
    for &n in &n_values {
        pulse_spacing(&params, tau_p, n)?;
    }

    let methods = match obj.get("methods") {
        None => defaults.methods.clone(),
        Some(v) => {
            let items = v
                .as_array()
                .ok_or_else(|| ZenoError::config("methods", "expected an array"))?;
            let mut chosen = Vec::new();
            for (i, item) in items.iter().enumerate() {
                let m = item.as_str().and_then(Method::from_name).ok_or_else(|| {
                    ZenoError::config(
                        format!("methods[{i}]"),
                        "expected one of ideal_pp, modified_pp, quantum_jump, bloch, monte_carlo",
                    )
                })?;
                chosen.push(m);
            }
            let methods: Vec<Method> = Method::ALL.into_iter().filter(|m| chosen.contains(m)).collect();
            if methods.is_empty() {
                return Err(ZenoError::config("methods", "at least one method is required"));
            }
            methods
        }
    };

    let mut mc = McOptions::default();
    if let Some(v) = obj.get("mc") {
        let m = object(v, "mc")?;
        check_keys(m, "mc.", &MC_KEYS)?;
        if let Some(x) = m.get("n_traj") {
            mc.n_traj = x
                .as_u64()
                .filter(|&n| n >= 1)
                .ok_or_else(|| ZenoError::config("mc.n_traj", "expected a positive integer"))?
                as usize;
        }
        if let Some(x) = m.get("master_seed") {
            mc.master_seed = x
                .as_u64()
                .ok_or_else(|| ZenoError::config("mc.master_seed", "expected a 64-bit unsigned integer"))?;
        }
        mc.rescale_factor = positive(m, "mc.rescale_factor", "rescale_factor", mc.rescale_factor)?;
    }

    let mut output = OutputOptions::default();
    if let Some(v) = obj.get("output") {
        let o = object(v, "output")?;
        check_keys(o, "output.", &OUTPUT_KEYS)?;
        if let Some(f) = o.get("format") {
            output.format = match f.as_str() {
                Some("csv") => OutputFormat::Csv,
                Some("json") => OutputFormat::Json,
                _ => return Err(ZenoError::config("output.format", "expected \"csv\" or \"json\"")),
            };
        }
        if let Some(p) = o.get("path") {
            let s = p
                .as_str()
                .filter(|s| !s.is_empty())
                .ok_or_else(|| ZenoError::config("output.path", "expected a non-empty string"))?;
            output.path = Some(PathBuf::from(s));
        }
    }

    Ok(ExperimentConfig {
        params,
        tau_p,
        n_values,
        methods,
        mc,
        output,
    })
}

// ---------------------------------------------------------------------------
// Schedules and the comparison
// ---------------------------------------------------------------------------

/// `n` repetitions of a free rf interval `T_pi/n - tau_p` followed by a
/// probe pulse of length `tau_p`.
pub fn build_schedule(p: &SystemParams, tau_p: f64, n: u32) -> Result<Vec<Segment>> {
    let dt = pulse_spacing(p, tau_p, n)?;
    let off = Segment::new(GeneratorKind::ProbeOff, dt)?;
    let on = Segment::new(GeneratorKind::ProbeOn, tau_p)?;
    Ok((0..n).flat_map(|_| [off, on]).collect())
}

/// One line of the comparison table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub n: u32,
    pub values: BTreeMap<Method, f64>,
    pub mc_stderr: Option<f64>,
    pub mc_master_seed: Option<u64>,
    /// Measured value, reference parameters only.
    pub observed: Option<String>,
    pub warnings: Vec<RegimeWarning>,
}

impl ComparisonRow {
    pub fn value(&self, m: Method) -> Option<f64> {
        self.values.get(&m).copied()
    }

    pub fn observed_value(&self) -> Option<f64> {
        self.observed.as_deref().and_then(|s| s.parse().ok())
    }
}

fn with_row(e: ZenoError, n: u32) -> ZenoError {
    let ctx = |s: String| format!("n = {n}: {s}");
    match e {
        ZenoError::InvalidArgument(s) => ZenoError::InvalidArgument(ctx(s)),
        ZenoError::NoStationaryState(s) => ZenoError::NoStationaryState(ctx(s)),
        ZenoError::Regime(v) => ZenoError::Regime(v.into_iter().map(ctx).collect()),
        ZenoError::Schedule(s) => ZenoError::Schedule(ctx(s)),
        ZenoError::InternalConsistency(s) => ZenoError::InternalConsistency(ctx(s)),
        other => other,
    }
}

fn observed_for(cfg: &ExperimentConfig, n: u32) -> Option<String> {
    if !cfg.is_reference() {
        return None;
    }
    OBSERVED_TABLE1
        .iter()
        .find(|(k, _)| *k == n)
        .map(|(_, v)| v.to_string())
}

fn compute_row(cfg: &ExperimentConfig, n: u32) -> Result<ComparisonRow> {
    let p = &cfg.params;
    let inputs = PredictionInputs::new(p, cfg.tau_p, n)?;
    let dt = pulse_spacing(p, cfg.tau_p, n)?;
    let mut values = BTreeMap::new();
    let mut mc_stderr = None;
    let mut mc_master_seed = None;
    for &m in &cfg.methods {
        let v = match m {
            Method::IdealPp => inputs.ideal(),
            Method::ModifiedPp => inputs.modified(),
            Method::QuantumJump => inputs.quantum_jump(),
            Method::Bloch => {
                let schedule = build_schedule(p, cfg.tau_p, n)?;
                run_schedule(&DensityMatrix3::basis(1), p, &schedule).population(2)
            }
            Method::MonteCarlo => {
                let f = cfg.mc.rescale_factor;
                let scaled = p.rescaled(f);
                let schedule = build_schedule(&scaled, cfg.tau_p / f, n)?;
                let est = run_ensemble(&Vec3C::basis(1), &scaled, &schedule, cfg.mc.n_traj, cfg.mc.master_seed)?;
                mc_stderr = Some(est.pop_stderr[1]);
                mc_master_seed = Some(cfg.mc.master_seed);
                est.pop_mean[1]
            }
        };
        values.insert(m, v);
    }
    Ok(ComparisonRow {
        n,
        values,
        mc_stderr,
        mc_master_seed,
        observed: observed_for(cfg, n),
        warnings: validate_measurement_regime(p, cfg.tau_p, dt),
    })
}

/// Evaluates every configured method for every `n`, rows in ascending `n`.
pub fn run_comparison(cfg: &ExperimentConfig) -> Result<Vec<ComparisonRow>> {
    if cfg.methods.is_empty() {
        return Err(ZenoError::config("methods", "at least one method is required"));
    }
    if cfg.n_values.is_empty() {
        return Err(ZenoError::config("n_values", "must not be empty"));
    }
    let mut rows = cfg
        .n_values
        .par_iter()
        .map(|&n| compute_row(cfg, n).map_err(|e| with_row(e, n)))
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by_key(|r| r.n);
    Ok(rows)
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: String,
    pub config: ExperimentConfig,
    pub rows: Vec<ComparisonRow>,
    pub notes: Vec<String>,
}

/// Checks row invariants: predicted values in `[0, 1]` and the zeroth
/// order of the quantum-jump formula equal to the modified projection
/// result.
pub fn check_rows(rows: &[ComparisonRow], cfg: &ExperimentConfig) -> Result<()> {
    for row in rows {
        for (m, &v) in &row.values {
            if !(-1e-12..=1.0 + 1e-12).contains(&v) {
                return Err(ZenoError::InternalConsistency(format!(
                    "n = {}: {m} = {v} outside [0, 1]",
                    row.n
                )));
            }
        }
        let inputs = PredictionInputs::new(&cfg.params, cfg.tau_p, row.n).map_err(|e| with_row(e, row.n))?;
        let gap = (inputs.zeroth_order().quantum_jump() - inputs.modified()).abs();
        if gap > IDENTITY_TOL {
            return Err(ZenoError::InternalConsistency(format!(
                "n = {}: zeroth-order quantum jump differs from modified projection by {gap:e}",
                row.n
            )));
        }
    }
    Ok(())
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.5}")).unwrap_or_default()
}

pub fn to_csv(rows: &[ComparisonRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.n,
            cell(r.value(Method::IdealPp)),
            cell(r.value(Method::ModifiedPp)),
            cell(r.value(Method::QuantumJump)),
            cell(r.value(Method::Bloch)),
            cell(r.value(Method::MonteCarlo)),
            cell(r.mc_stderr),
            r.observed.as_deref().unwrap_or(""),
        );
    }
    out
}

pub fn to_json(rows: &[ComparisonRow], cfg: &ExperimentConfig) -> Result<String> {
    let mut notes = Vec::new();
    if rows.iter().any(|r| r.observed.is_some()) {
        notes.push(OBSERVED_PROVENANCE.to_string());
    }
    if cfg.has(Method::MonteCarlo) {
        notes.push(ATTRIBUTION_NOTE.to_string());
    }
    let report = Report {
        schema: REPORT_SCHEMA.to_string(),
        config: cfg.clone(),
        rows: rows.to_vec(),
        notes,
    };
    let mut s = serde_json::to_string_pretty(&report)
        .map_err(|e| ZenoError::InternalConsistency(format!("report serialization: {e}")))?;
    s.push('\n');
    Ok(s)
}

pub fn parse_report(text: &str) -> Result<Report> {
    let report: Report =
        serde_json::from_str(text).map_err(|e| ZenoError::config("report", e.to_string()))?;
    if report.schema != REPORT_SCHEMA {
        return Err(ZenoError::config("schema", format!("unsupported schema {}", report.schema)));
    }
    Ok(report)
}

/// Serializes `rows` in the configured format after re-checking the row
/// invariants, and writes the result to the configured path if any.
pub fn emit_report(rows: &[ComparisonRow], cfg: &ExperimentConfig) -> Result<String> {
    if cfg.methods.is_empty() {
        return Err(ZenoError::config("methods", "at least one method is required"));
    }
    if rows.is_empty() {
        return Err(ZenoError::InvalidArgument("no rows to report".into()));
    }
    check_rows(rows, cfg)?;
    let text = match cfg.output.format {
        OutputFormat::Csv => to_csv(rows),
        OutputFormat::Json => to_json(rows, cfg)?,
    };
    if let Some(path) = &cfg.output.path {
        std::fs::write(path, &text).map_err(|e| ZenoError::Io(format!("{}: {e}", path.display())))?;
    }
    Ok(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_gives_reference_defaults() {
        let cfg = parse_config("{}").unwrap();
        assert_eq!(cfg, ExperimentConfig::table1());
        assert!(cfg.is_reference());
    }

    #[test]
    fn strong_probe_override() {
        let cfg = parse_config(r#"{"omega3_over_a3": 0.5}"#).unwrap();
        assert_eq!(cfg.params, SystemParams::strong_probe());
        assert!(!cfg.is_reference());
    }

    #[test]
    fn config_errors_name_the_field() {
        let field = |src: &str| match parse_config(src) {
            Err(ZenoError::Config { field, .. }) => field,
            other => panic!("{other:?}"),
        };
        assert_eq!(field(r#"{"a3_per_s": -1}"#), "a3_per_s");
        assert_eq!(field(r#"{"bogus": 1}"#), "bogus");
        assert_eq!(field(r#"{"mc": {"seed": 1}}"#), "mc.seed");
        assert_eq!(field(r#"{"methods": []}"#), "methods");
        assert_eq!(field(r#"{"methods": ["bloch", "x"]}"#), "methods[1]");
        assert_eq!(field(r#"{"n_values": [0]}"#), "n_values[0]");
        assert_eq!(field(r#"{"omega3_per_s": 1, "omega3_over_a3": 0.5}"#), "omega3_over_a3");
        assert_eq!(field(r#"{"output": {"format": "xml"}}"#), "output.format");
        assert_eq!(field("{"), "$");
        assert_eq!(field("[]"), "$");
    }

    #[test]
    fn too_many_pulses_is_a_schedule_error() {
        let e = parse_config(r#"{"n_values": [107]}"#).unwrap_err();
        assert!(matches!(e, ZenoError::Schedule(_)));
        assert_eq!(e.exit_code(), 3);
        assert!(parse_config(r#"{"n_values": [106]}"#).is_ok());
    }

    #[test]
    fn schedule_shape() {
        let p = SystemParams::reference();
        let s = build_schedule(&p, REFERENCE_TAU_P, 1).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].kind, GeneratorKind::ProbeOff);
        assert!((s[0].duration - (REFERENCE_T_PI - REFERENCE_TAU_P)).abs() < 1e-15);
        assert_eq!(s[1], Segment::new(GeneratorKind::ProbeOn, REFERENCE_TAU_P).unwrap());
        let s = build_schedule(&p, REFERENCE_TAU_P, 16).unwrap();
        assert!((s[0].duration - 0.0136).abs() < 1e-15);
        assert!(build_schedule(&p, REFERENCE_TAU_P, 107).is_err());
    }

    #[test]
    fn schedule_sums_to_t_pi() {
        let p = SystemParams::reference();
        for n in 1..=106 {
            let total: f64 = build_schedule(&p, REFERENCE_TAU_P, n)
                .unwrap()
                .iter()
                .map(|s| s.duration)
                .sum();
            assert!((total - p.t_pi()).abs() <= 1e-12 * p.t_pi(), "n = {n}");
        }
    }

    #[test]
    fn single_ideal_row() {
        let cfg = parse_config(r#"{"n_values": [1], "methods": ["ideal_pp"]}"#).unwrap();
        let rows = run_comparison(&cfg).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(cell(rows[0].value(Method::IdealPp)), "1.00000");
        assert_eq!(to_csv(&rows), format!("{CSV_HEADER}\n1,1.00000,,,,,,0.995\n"));
    }

    #[test]
    fn csv_rounds_half_to_even() {
        assert_eq!(cell(Some(0.015625)), "0.01562");
        assert_eq!(cell(Some(0.046875)), "0.04688");
        assert_eq!(cell(Some(0.1234549)), "0.12345");
    }

    #[test]
    fn observed_only_for_reference_parameters() {
        let mut cfg = ExperimentConfig::table2();
        cfg.methods = vec![Method::IdealPp];
        let rows = run_comparison(&cfg).unwrap();
        assert!(rows.iter().all(|r| r.observed.is_none()));
        let rows = run_comparison(&ExperimentConfig {
            methods: vec![Method::IdealPp],
            ..ExperimentConfig::table1()
        })
        .unwrap();
        assert_eq!(rows[6].observed_value(), Some(-0.006));
    }

    #[test]
    fn json_round_trip_and_determinism() {
        let mut cfg = ExperimentConfig::table1();
        cfg.output.format = OutputFormat::Json;
        let rows = run_comparison(&cfg).unwrap();
        let a = emit_report(&rows, &cfg).unwrap();
        let b = emit_report(&run_comparison(&cfg).unwrap(), &cfg).unwrap();
        assert_eq!(a, b);
        let back = parse_report(&a).unwrap();
        assert_eq!(back.rows, rows);
        assert_eq!(back.config, cfg);
    }

    #[test]
    fn unwritable_path_is_io_error() {
        let mut cfg = ExperimentConfig::table1();
        cfg.methods = vec![Method::IdealPp];
        cfg.output.path = Some(PathBuf::from("/nonexistent-dir/report.csv"));
        let rows = run_comparison(&cfg).unwrap();
        assert!(matches!(emit_report(&rows, &cfg), Err(ZenoError::Io(_))));
    }

    #[test]
    fn empty_methods_rejected_before_emission() {
        let mut cfg = ExperimentConfig::table1();
        cfg.methods.clear();
        assert!(matches!(run_comparison(&cfg), Err(ZenoError::Config { .. })));
        let rows = vec![ComparisonRow {
            n: 1,
            values: BTreeMap::new(),
            mc_stderr: None,
            mc_master_seed: None,
            observed: None,
            warnings: vec![],
        }];
        assert!(matches!(emit_report(&rows, &cfg), Err(ZenoError::Config { .. })));
    }

    #[test]
    fn row_errors_carry_context() {
        let mut cfg = ExperimentConfig::table1();
        cfg.n_values = vec![200];
        match run_comparison(&cfg) {
            Err(ZenoError::Schedule(s)) => assert!(s.starts_with("n = 200:"), "{s}"),
            other => panic!("{other:?}"),
        }
    }
}
