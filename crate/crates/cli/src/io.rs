//! Input tables, summary files and chain files.

use std::fmt;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use vfusion::simbench::Aggregate;
use vfusion::FusionError;

/// Failure carrying the process exit code: 2 for bad configuration or
/// input, 3 for a design that is singular at initialisation, 1 otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }

    pub fn io(path: &Path, err: impl fmt::Display) -> Self {
        Self {
            code: 1,
            message: format!("{}: {err}", path.display()),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<FusionError> for CliError {
    fn from(e: FusionError) -> Self {
        let code = match e {
            FusionError::SingularDesign(_) | FusionError::SingularSystem => 3,
            FusionError::DimensionMismatch(_)
            | FusionError::TooSmall { .. }
            | FusionError::NonFinite(_)
            | FusionError::ConstantColumn(_)
            | FusionError::InvalidHyperParam { .. }
            | FusionError::InvalidConfig(_)
            | FusionError::EmptyInput
            | FusionError::DegenerateGroups => 2,
            _ => 1,
        };
        Self { code, message: e.to_string() }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// A numeric table read column-wise.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl Table {
    pub fn rows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.headers.iter().position(|h| h == name)
    }
}

/// Reads a comma-separated table whose first row is a header. Every field
/// must parse as a number with `.` as the decimal point.
pub fn read_table(path: &Path) -> CliResult<Table> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| table_error(path, e))?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| table_error(path, e))?
        .iter()
        .map(str::to_owned)
        .collect();
    if headers.is_empty() || headers.iter().all(String::is_empty) {
        return Err(CliError::config(format!("{}: missing header row", path.display())));
    }
    let mut columns = vec![Vec::new(); headers.len()];
    for record in reader.records() {
        let record = record.map_err(|e| table_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        for (k, field) in record.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                CliError::config(format!(
                    "{}: line {line}, column {:?}: cannot parse {field:?} as a number",
                    path.display(),
                    headers[k]
                ))
            })?;
            columns[k].push(v);
        }
    }
    Ok(Table { headers, columns })
}

fn table_error(path: &Path, e: csv::Error) -> CliError {
    if let csv::ErrorKind::Io(_) = e.kind() {
        return CliError::io(path, e);
    }
    let line = e.position().map(|p| format!("line {}: ", p.line())).unwrap_or_default();
    CliError::config(format!("{}: {line}{e}", path.display()))
}

/// Run settings echoed into every output file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub command: String,
    pub input: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub response: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub predictors: Vec<String>,
    pub n: usize,
    pub p: usize,
    /// Slab scale actually used.
    pub g: f64,
    /// `true` when `g` was resolved from `auto`.
    pub g_auto: bool,
    pub a_omega: f64,
    pub b_omega: f64,
    pub threshold: f64,
    pub preprocess: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub route: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slab: Option<String>,
}

/// Summary written by `fit` and `smooth`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub beta_mean: Vec<f64>,
    pub delta_prob: Vec<f64>,
    /// Estimated blocks as 1-based coefficient indices.
    pub partition: Vec<Vec<usize>>,
    pub sigma2_mean: f64,
    pub omega_mean: f64,
    pub seed: u64,
    pub iterations: usize,
    pub burn_in: usize,
    pub metadata: Metadata,
}

/// Summary written by `select`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectSummary {
    pub beta_mean: Vec<f64>,
    pub xi_prob: Vec<f64>,
    /// 1-based indices with `xi_prob > threshold`.
    pub selected: Vec<usize>,
    pub sigma2_mean: f64,
    pub omega_mean: f64,
    pub seed: u64,
    pub iterations: usize,
    pub burn_in: usize,
    pub metadata: Metadata,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudySettings {
    pub case: u8,
    pub n: usize,
    pub rho: f64,
    pub replicates: usize,
    pub seed: u64,
    pub g: f64,
    pub g_auto: bool,
    pub a_omega: f64,
    pub b_omega: f64,
    pub iterations: usize,
    pub burn_in: usize,
    pub threshold: f64,
    pub preprocess: String,
    pub route: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyMetrics {
    pub mse: Aggregate,
    pub pse: Aggregate,
    pub p_b: Aggregate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRow {
    /// 1-based.
    pub replicate: usize,
    pub seed: u64,
    pub mse: f64,
    pub pse: f64,
    pub p_b: f64,
    pub rand_index: f64,
    pub delta_prob: Vec<f64>,
    pub beta_hat: Vec<f64>,
}

/// Report written by `simulate`. The Rand index is not one of the study's
/// metrics and is kept apart from them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub settings: StudySettings,
    pub metrics: StudyMetrics,
    pub supplementary_rand_index: Aggregate,
    pub per_replicate: Vec<ReplicateRow>,
}

/// Opens `path` for writing, or standard output when `None`.
pub fn output(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| CliError::io(p, e))?)),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn display_path(path: Option<&Path>) -> PathBuf {
    path.map_or_else(|| PathBuf::from("<stdout>"), Path::to_path_buf)
}

pub fn write_json<T: Serialize>(path: Option<&Path>, value: &T) -> CliResult<()> {
    let mut w = output(path)?;
    let err = |e: &dyn fmt::Display| CliError::io(&display_path(path), e);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| err(&e))?;
    writeln!(w).and_then(|_| w.flush()).map_err(|e| err(&e))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<T> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_reader(io::BufReader::new(file))
        .map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

pub fn read_fit_summary(path: &Path) -> CliResult<FitSummary> {
    read_json(path)
}

pub fn read_select_summary(path: &Path) -> CliResult<SelectSummary> {
    read_json(path)
}

pub fn read_report(path: &Path) -> CliResult<SimulationReport> {
    read_json(path)
}

/// One kept draw as it appears in a chain file.
pub struct ChainRow<'a> {
    pub iter: usize,
    pub sigma2: f64,
    pub omega: f64,
    pub indicators: &'a [bool],
    pub beta: &'a [f64],
}

/// Writes `iter,sigma2,omega,{label}_1..,beta_1..` with 17 significant digits.
pub fn write_chain<'a>(
    path: &Path,
    label: &str,
    rows: impl IntoIterator<Item = ChainRow<'a>>,
) -> CliResult<()> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut rows = rows.into_iter().peekable();
    let (k, p) = rows.peek().map_or((0, 0), |r| (r.indicators.len(), r.beta.len()));
    let mut header = String::from("iter,sigma2,omega");
    for j in 1..=k {
        header.push_str(&format!(",{label}_{j}"));
    }
    for j in 1..=p {
        header.push_str(&format!(",beta_{j}"));
    }
    let result = (|| -> io::Result<()> {
        writeln!(w, "{header}")?;
        let mut line = String::new();
        for r in rows {
            line.clear();
            line.push_str(&format!("{},{:.16e},{:.16e}", r.iter, r.sigma2, r.omega));
            for &b in r.indicators {
                line.push_str(if b { ",1" } else { ",0" });
            }
            for v in r.beta {
                line.push_str(&format!(",{v:.16e}"));
            }
            writeln!(w, "{line}")?;
        }
        w.flush()
    })();
    result.map_err(|e| CliError::io(path, e))
}

/// A chain file read back.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainTable {
    pub iter: Vec<usize>,
    pub sigma2: Vec<f64>,
    pub omega: Vec<f64>,
    pub indicators: Vec<Vec<bool>>,
    pub beta: Vec<Vec<f64>>,
}

impl ChainTable {
    pub fn beta_mean(&self) -> Vec<f64> {
        let m = self.beta.len() as f64;
        let p = self.beta.first().map_or(0, Vec::len);
        (0..p)
            .map(|j| self.beta.iter().map(|b| b[j]).sum::<f64>() / m)
            .collect()
    }
}

pub fn read_chain(path: &Path) -> CliResult<ChainTable> {
    let table = read_table(path)?;
    let cols = &table.columns;
    if table.headers.len() < 3 || table.headers[..3] != ["iter", "sigma2", "omega"] {
        return Err(CliError::config(format!("{}: not a chain file", path.display())));
    }
    let k = table.headers.iter().filter(|h| !h.starts_with("beta_")).count() - 3;
    let rows = table.rows();
    Ok(ChainTable {
        iter: cols[0].iter().map(|&v| v as usize).collect(),
        sigma2: cols[1].clone(),
        omega: cols[2].clone(),
        indicators: (0..rows)
            .map(|i| (3..3 + k).map(|c| cols[c][i] != 0.0).collect())
            .collect(),
        beta: (0..rows)
            .map(|i| (3 + k..table.headers.len()).map(|c| cols[c][i]).collect())
            .collect(),
    })
}
