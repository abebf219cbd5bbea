//! Command runners behind the thin binary: scans to CSV with run
//! manifests, and the analysis report.
//!
//! CSV files are comma-separated with `.` decimals and LF line endings;
//! the first line is a `#`-prefixed schema version comment. Manifests are
//! JSON, written next to each output as `<out>.manifest.json`; re-running
//! the recorded command (or passing the manifest as `--config`) reproduces
//! the output byte-exactly, timestamps aside.

use crate::config::{CircuitConfig, PartialConfig};
use crate::error::{Error, Result};
use crate::markov::eigen::EigenOptions;
use crate::metrics::haar_reference_cached;
use crate::scan::{
    compare_minima, critical_condition_residual, find_optimal_i, fit_exponential_decay, scan_gap,
    scan_idh, GapEntry, GapProfile, IdhEntry, IdhProfile,
};
use crate::topology::{build_topology, TopologyKind};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

pub const GAP_CSV_SCHEMA: &str = "coregap-gap-csv-v1";
pub const ENSEMBLE_CSV_SCHEMA: &str = "coregap-ensemble-csv-v1";
pub const ANALYSIS_SCHEMA: &str = "coregap-analysis-v1";
pub const MANIFEST_SCHEMA: &str = "coregap-manifest-v1";

const GAP_HEADER: &str =
    "topology,n_cores,n_qubits_per_core,p_single,c_rand,I,D,lambda,delta,one_minus_delta";
const ENSEMBLE_HEADER: &str = "topology,n_cores,n_qubits_per_core,p_single,I,L,n_samples,idh,dh";

/// Everything needed to reproduce a run, serialized alongside each output.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema: String,
    pub tool: String,
    pub version: String,
    pub command: String,
    pub created_unix: u64,
    pub finished_unix: u64,
    pub threads: Option<usize>,
    pub config: CircuitConfig,
    pub i_min: usize,
    pub i_max: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_samples: Option<usize>,
    pub outputs: Vec<OutputDigest>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OutputDigest {
    pub path: String,
    pub sha256: String,
}

fn now_unix() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

/// Loads a config source: either the flat `key = value` format or a
/// previously written manifest (JSON), whose resolved config is reused.
pub fn load_config_source(path: &Path) -> Result<PartialConfig> {
    let text = std::fs::read_to_string(path)?;
    if text.trim_start().starts_with('{') {
        let manifest: RunManifest = serde_json::from_str(&text)?;
        let c = manifest.config;
        Ok(PartialConfig {
            n_cores: Some(c.n_cores),
            n_qubits_per_core: Some(c.n_qubits_per_core),
            intracore_steps: Some(c.intracore_steps),
            n_layers: Some(c.n_layers),
            topology: Some(c.topology),
            p_single: Some(c.p_single),
            c_rand: Some(c.c_rand),
            master_seed: Some(c.master_seed),
            ensemble_size: Some(c.ensemble_size),
        })
    } else {
        PartialConfig::from_text(&text)
    }
}

/// Prints the link set of a topology.
pub fn run_topology(kind: TopologyKind, n_cores: usize, out: &mut impl Write) -> Result<()> {
    let links = build_topology(kind, n_cores)?;
    writeln!(out, "topology: {kind}, cores: {n_cores}")?;
    for (a, b) in links.links() {
        writeln!(out, "  ({a}, {b})")?;
    }
    writeln!(out, "n_links: {}", links.n_links())?;
    Ok(())
}

#[derive(Clone, Debug)]
pub struct ScanRequest {
    pub config: CircuitConfig,
    pub i_min: usize,
    pub i_max: usize,
    pub out_path: PathBuf,
    pub threads: Option<usize>,
}

fn i_range(req: &ScanRequest) -> Result<Vec<usize>> {
    if req.i_max < req.i_min {
        return Err(Error::OutOfRange {
            what: "i_max",
            value: req.i_max as f64,
            range: ">= i_min",
        });
    }
    Ok((req.i_min..=req.i_max).collect())
}

fn write_output(path: &Path, bytes: &[u8]) -> Result<OutputDigest> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(path, bytes)?;
    Ok(OutputDigest {
        path: path.display().to_string(),
        sha256: sha256_hex(bytes),
    })
}

fn write_manifest(manifest: &RunManifest, out_path: &Path) -> Result<PathBuf> {
    let path = PathBuf::from(format!("{}.manifest.json", out_path.display()));
    let mut json = serde_json::to_string_pretty(manifest)?;
    json.push('\n');
    std::fs::write(&path, json)?;
    Ok(path)
}

/// Gap scan → CSV + manifest.
pub fn run_gap_scan(req: &ScanRequest) -> Result<RunManifest> {
    let created = now_unix();
    let i_values = i_range(req)?;
    let profile = scan_gap(&req.config, &i_values, &EigenOptions::default())?;
    let mut csv = String::new();
    csv.push_str(&format!("# {GAP_CSV_SCHEMA}\n{GAP_HEADER}\n"));
    let c = &req.config;
    for e in &profile.entries {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            c.topology,
            c.n_cores,
            c.n_qubits_per_core,
            c.p_single,
            c.c_rand,
            e.i,
            e.depth,
            e.lambda,
            e.delta,
            1.0 - e.delta,
        ));
    }
    let digest = write_output(&req.out_path, csv.as_bytes())?;
    let manifest = RunManifest {
        schema: MANIFEST_SCHEMA.to_string(),
        tool: "coregap".to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        command: "gap-scan".to_string(),
        created_unix: created,
        finished_unix: now_unix(),
        threads: req.threads,
        config: req.config.clone(),
        i_min: req.i_min,
        i_max: req.i_max,
        n_samples: None,
        outputs: vec![digest],
    };
    write_manifest(&manifest, &req.out_path)?;
    Ok(manifest)
}

/// Ensemble scan → CSV + manifest. Creates or reuses the Haar-reference
/// cache under `cache_dir`.
pub fn run_ensemble_scan(req: &ScanRequest, cache_dir: &Path) -> Result<RunManifest> {
    let created = now_unix();
    let i_values = i_range(req)?;
    let c = &req.config;
    let haar = haar_reference_cached(
        c.total_qubits(),
        c.ensemble_size,
        c.master_seed,
        cache_dir,
    )?;
    let profile = scan_idh(c, &i_values, c.ensemble_size, &haar)?;
    let mut csv = String::new();
    csv.push_str(&format!("# {ENSEMBLE_CSV_SCHEMA}\n{ENSEMBLE_HEADER}\n"));
    for e in &profile.entries {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            c.topology,
            c.n_cores,
            c.n_qubits_per_core,
            c.p_single,
            e.i,
            c.n_layers,
            e.n_samples,
            e.idh,
            e.dh,
        ));
    }
    let digest = write_output(&req.out_path, csv.as_bytes())?;
    let manifest = RunManifest {
        schema: MANIFEST_SCHEMA.to_string(),
        tool: "coregap".to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        command: "ensemble-scan".to_string(),
        created_unix: created,
        finished_unix: now_unix(),
        threads: req.threads,
        config: req.config.clone(),
        i_min: req.i_min,
        i_max: req.i_max,
        n_samples: Some(c.ensemble_size),
        outputs: vec![digest],
    };
    write_manifest(&manifest, &req.out_path)?;
    Ok(manifest)
}

/// Analysis report emitted by `analyze`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub schema: String,
    pub i_star_gap: usize,
    pub gap_interior: bool,
    pub i_star_idh: usize,
    pub idh_interior: bool,
    pub i_star_abs_difference: usize,
    pub decay_fit: DecayFitReport,
    pub critical_residuals: Vec<CriticalResidual>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DecayFitReport {
    pub slope: f64,
    pub intercept: f64,
    pub kappa: f64,
    pub lambda_prefactor: f64,
    pub max_abs_residual: f64,
    /// A log-linear profile (tiny residual) predicts no interior optimum.
    pub consistent_with_pure_exponential: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CriticalResidual {
    pub i: usize,
    pub residual: f64,
}

const PURE_EXPONENTIAL_RESIDUAL_TOL: f64 = 1e-8;

struct CsvReader<'a> {
    path: &'a Path,
}

impl<'a> CsvReader<'a> {
    fn rows(&self, expect_schema: &str, expect_header: &str) -> Result<Vec<(usize, Vec<String>)>> {
        let text = std::fs::read_to_string(self.path)?;
        let err = |line: usize, message: String| Error::CsvParse {
            path: self.path.display().to_string(),
            line,
            message,
        };
        let mut rows = Vec::new();
        let mut header_seen = false;
        let mut schema_seen = false;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                if !schema_seen && comment.trim() != expect_schema {
                    return Err(err(
                        line_no,
                        format!("expected schema `{expect_schema}`, found `{}`", comment.trim()),
                    ));
                }
                schema_seen = true;
                continue;
            }
            if !header_seen {
                if line != expect_header {
                    return Err(err(line_no, format!("expected header `{expect_header}`")));
                }
                header_seen = true;
                continue;
            }
            rows.push((
                line_no,
                line.split(',').map(|s| s.trim().to_string()).collect(),
            ));
        }
        if !header_seen {
            return Err(err(1, "missing header row".to_string()));
        }
        Ok(rows)
    }
}

fn parse_field<T: FromStr>(
    path: &Path,
    line: usize,
    fields: &[String],
    idx: usize,
    name: &str,
) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    let raw = fields.get(idx).ok_or_else(|| Error::CsvParse {
        path: path.display().to_string(),
        line,
        message: format!("missing column {idx} ({name})"),
    })?;
    raw.parse().map_err(|e| Error::CsvParse {
        path: path.display().to_string(),
        line,
        message: format!("column {name}: {e}"),
    })
}

/// Reads a gap-scan CSV back into a profile.
pub fn read_gap_csv(path: &Path) -> Result<GapProfile> {
    let rows = CsvReader { path }.rows(GAP_CSV_SCHEMA, GAP_HEADER)?;
    if rows.is_empty() {
        return Err(Error::CsvParse {
            path: path.display().to_string(),
            line: 2,
            message: "no data rows".to_string(),
        });
    }
    let mut entries = Vec::with_capacity(rows.len());
    let mut arch: Option<(usize, usize)> = None;
    for (line, fields) in &rows {
        let topology: TopologyKind =
            parse_field::<String>(path, *line, fields, 0, "topology")?
                .parse()
                .map_err(|e| Error::CsvParse {
                    path: path.display().to_string(),
                    line: *line,
                    message: e,
                })?;
        let n_cores: usize = parse_field(path, *line, fields, 1, "n_cores")?;
        let i: usize = parse_field(path, *line, fields, 5, "I")?;
        let depth: usize = parse_field(path, *line, fields, 6, "D")?;
        let lambda: f64 = parse_field(path, *line, fields, 7, "lambda")?;
        let delta: f64 = parse_field(path, *line, fields, 8, "delta")?;
        let links = build_topology(topology, n_cores)?;
        let fingerprint = (n_cores, links.n_links());
        if *arch.get_or_insert(fingerprint) != fingerprint {
            return Err(Error::CsvParse {
                path: path.display().to_string(),
                line: *line,
                message: "mixed architectures in one profile".to_string(),
            });
        }
        entries.push(GapEntry {
            i,
            lambda,
            depth,
            delta,
            complex_flag: false,
        });
    }
    let (n_cores, n_links) = arch.expect("rows checked non-empty");
    Ok(GapProfile {
        entries,
        n_cores,
        n_links,
    })
}

/// Reads an ensemble-scan CSV back into a profile.
pub fn read_ensemble_csv(path: &Path) -> Result<IdhProfile> {
    let rows = CsvReader { path }.rows(ENSEMBLE_CSV_SCHEMA, ENSEMBLE_HEADER)?;
    if rows.is_empty() {
        return Err(Error::CsvParse {
            path: path.display().to_string(),
            line: 2,
            message: "no data rows".to_string(),
        });
    }
    let mut entries = Vec::with_capacity(rows.len());
    for (line, fields) in &rows {
        entries.push(IdhEntry {
            i: parse_field(path, *line, fields, 4, "I")?,
            n_samples: parse_field(path, *line, fields, 6, "n_samples")?,
            idh: parse_field(path, *line, fields, 7, "idh")?,
            dh: parse_field(path, *line, fields, 8, "dh")?,
        });
    }
    Ok(IdhProfile { entries })
}

/// Joint analysis of a gap CSV and an ensemble CSV.
pub fn run_analyze(gap_csv: &Path, ensemble_csv: &Path) -> Result<AnalysisReport> {
    let gap = read_gap_csv(gap_csv)?;
    let idh = read_ensemble_csv(ensemble_csv)?;
    let optimum = find_optimal_i(&gap)?;
    let minima = compare_minima(&gap, &idh)?;
    let fit = fit_exponential_decay(&gap)?;
    let mut critical_residuals = Vec::new();
    for e in &gap.entries[1..gap.entries.len().saturating_sub(1)] {
        if let Ok(residual) = critical_condition_residual(&gap, e.i) {
            critical_residuals.push(CriticalResidual { i: e.i, residual });
        }
    }
    Ok(AnalysisReport {
        schema: ANALYSIS_SCHEMA.to_string(),
        i_star_gap: optimum.i,
        gap_interior: optimum.interior,
        i_star_idh: minima.i_star_idh,
        idh_interior: minima.idh_interior,
        i_star_abs_difference: minima.abs_difference,
        decay_fit: DecayFitReport {
            slope: fit.slope,
            intercept: fit.intercept,
            kappa: fit.kappa,
            lambda_prefactor: fit.lambda_prefactor,
            max_abs_residual: fit.max_abs_residual,
            consistent_with_pure_exponential: fit.max_abs_residual
                < PURE_EXPONENTIAL_RESIDUAL_TOL,
        },
        critical_residuals,
    })
}
