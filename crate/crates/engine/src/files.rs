//! On-disk formats: JSONL trial logs, parameter files, decks, simulation
//! configs and optimizer traces.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use recall_core::mlr::{MlrParams, Windows};
use recall_core::optim::TraceEntry;
use recall_core::rpl::RplParams;
use recall_core::TrialRecord;

use crate::error::{EngineError, Result};

/// A line of a trial log that did not yield a record.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkippedLine {
    /// 1-based.
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrialLog {
    pub records: Vec<TrialRecord>,
    pub skipped: Vec<SkippedLine>,
}

/// Reads one trial per line. Blank lines are ignored; lines that are not a
/// valid trial are skipped and reported.
pub fn parse_trial_log<R: BufRead>(reader: R) -> std::io::Result<TrialLog> {
    let mut log = TrialLog::default();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match parse_json::<TrialRecord>(&line) {
            Ok(r) => log.records.push(r),
            Err(reason) => log.skipped.push(SkippedLine { line: i + 1, reason }),
        }
    }
    Ok(log)
}

pub fn read_trial_log(path: &Path) -> Result<TrialLog> {
    let file = fs::File::open(path).map_err(|e| EngineError::io(path, e))?;
    parse_trial_log(BufReader::new(file)).map_err(|e| EngineError::io(path, e))
}

/// Deserializes `text`, prefixing errors with the path of the offending field.
pub fn parse_json<T: DeserializeOwned>(text: &str) -> std::result::Result<T, String> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        if path == "." {
            e.inner().to_string()
        } else {
            format!("{path}: {}", e.inner())
        }
    })
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| EngineError::io(path, e))?;
    parse_json(&text).map_err(|e| EngineError::Data(format!("{}: {e}", path.display())))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn write_jsonl<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut out = Vec::new();
    for row in rows {
        serde_json::to_writer(&mut out, &row).expect("serializable");
        out.push(b'\n');
    }
    write_atomic(path, &out)
}

/// Writes through a sibling temporary file and a rename, so readers never
/// see a half-written file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp"));
    let mut f = fs::File::create(&tmp).map_err(|e| EngineError::io(&tmp, e))?;
    f.write_all(bytes).and_then(|_| f.sync_all()).map_err(|e| EngineError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| EngineError::io(path, e))
}

/// Logistic-model parameter file: the coefficient families plus their
/// window sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MlrParamsFile {
    beta: f64,
    w_c: Vec<f64>,
    w_t: Vec<f64>,
    w_s: Vec<f64>,
    w_r0: f64,
    w_r1: f64,
    w_r2: f64,
    n: usize,
    m: usize,
    l: usize,
}

pub fn mlr_params_from_json(text: &str) -> std::result::Result<MlrParams, String> {
    let f: MlrParamsFile = parse_json(text)?;
    for (field, len, declared, size) in [("w_c", f.w_c.len(), "n", f.n), ("w_t", f.w_t.len(), "m", f.m), ("w_s", f.w_s.len(), "l", f.l)] {
        if len != size {
            return Err(format!("{field}: has {len} entries but {declared} = {size}"));
        }
    }
    let params = MlrParams { beta: f.beta, w_c: f.w_c, w_t: f.w_t, w_s: f.w_s, w_r0: f.w_r0, w_r1: f.w_r1, w_r2: f.w_r2 };
    params.validate().map_err(|e| e.to_string())?;
    Ok(params)
}

pub fn mlr_params_to_json(params: &MlrParams) -> String {
    let Windows { n, m, l } = params.windows();
    let file = MlrParamsFile {
        beta: params.beta,
        w_c: params.w_c.clone(),
        w_t: params.w_t.clone(),
        w_s: params.w_s.clone(),
        w_r0: params.w_r0,
        w_r1: params.w_r1,
        w_r2: params.w_r2,
        n,
        m,
        l,
    };
    serde_json::to_string_pretty(&file).expect("serializable") + "\n"
}

pub fn rpl_params_from_json(text: &str) -> std::result::Result<RplParams, String> {
    let params: RplParams = parse_json(text)?;
    params.validate().map_err(|e| e.to_string())?;
    Ok(params)
}

pub fn rpl_params_to_json(params: &RplParams) -> String {
    serde_json::to_string_pretty(params).expect("serializable") + "\n"
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Mlr,
    Rpl,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Mlr => "mlr",
            ModelKind::Rpl => "rpl",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParamsFile {
    Mlr(MlrParams),
    Rpl(RplParams),
}

impl ParamsFile {
    pub fn kind(&self) -> ModelKind {
        match self {
            ParamsFile::Mlr(_) => ModelKind::Mlr,
            ParamsFile::Rpl(_) => ModelKind::Rpl,
        }
    }

    pub fn to_json(&self) -> String {
        match self {
            ParamsFile::Mlr(p) => mlr_params_to_json(p),
            ParamsFile::Rpl(p) => rpl_params_to_json(p),
        }
    }

    pub fn parse(text: &str, kind: ModelKind) -> std::result::Result<Self, String> {
        match kind {
            ModelKind::Mlr => mlr_params_from_json(text).map(ParamsFile::Mlr),
            ModelKind::Rpl => rpl_params_from_json(text).map(ParamsFile::Rpl),
        }
    }

    /// Picks the model from the keys present: `beta` means logistic, `s_0`
    /// means power law.
    pub fn parse_any(text: &str) -> std::result::Result<Self, String> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
        match (value.get("beta").is_some(), value.get("s_0").is_some()) {
            (true, false) => Self::parse(text, ModelKind::Mlr),
            (false, true) => Self::parse(text, ModelKind::Rpl),
            _ => Err(String::from("cannot tell the model kind: expected exactly one of the keys beta, s_0")),
        }
    }
}

pub fn load_params(path: &Path, kind: ModelKind) -> Result<ParamsFile> {
    let text = fs::read_to_string(path).map_err(|e| EngineError::io(path, e))?;
    ParamsFile::parse(&text, kind).map_err(|e| EngineError::Data(format!("{}: {e}", path.display())))
}

pub fn save_params(params: &ParamsFile, path: &Path) -> Result<()> {
    write_atomic(path, params.to_json().as_bytes())
}

/// One optimizer iteration per line.
pub fn write_trace(path: &Path, trace: &[TraceEntry]) -> Result<()> {
    write_jsonl(path, trace)
}
