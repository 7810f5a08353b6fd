use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::Context;
use serde::Serialize;

/// Outcome of a command that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Violation,
}

impl Status {
    pub fn code(self) -> u8 {
        match self {
            Status::Pass => 0,
            Status::Violation => 2,
        }
    }

    pub fn from_passed(passed: bool) -> Self {
        if passed {
            Status::Pass
        } else {
            Status::Violation
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    code: u8,
    inner: anyhow::Error,
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        self.code
    }

    pub fn usage(inner: anyhow::Error) -> Self {
        Self { code: 1, inner }
    }

    pub fn context(self, what: impl fmt::Display + Send + Sync + 'static) -> Self {
        Self { code: self.code, inner: self.inner.context(what) }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.inner)
    }
}

/// Library errors that mean "the input is not a valid object" exit with 2;
/// the rest are usage errors.
pub fn is_violation(e: &hybridiq::Error) -> bool {
    matches!(
        e.code(),
        "NotHermitian"
            | "NonFinite"
            | "NotAState"
            | "BadWeight"
            | "BadKernel"
            | "NotPositive"
            | "NotNormalized"
            | "BadEffect"
            | "IncompleteChannel"
            | "IncompleteKraus"
            | "NotPSDCoefficients"
            | "BadBasis"
            | "NotAnEnsemble"
            | "IncompleteInstrument"
    )
}

impl From<hybridiq::Error> for CliError {
    fn from(e: hybridiq::Error) -> Self {
        let code = if is_violation(&e) { 2 } else { 1 };
        Self { code, inner: anyhow::Error::new(e) }
    }
}

impl From<anyhow::Error> for CliError {
    fn from(inner: anyhow::Error) -> Self {
        Self { code: 1, inner }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self { code: 1, inner: e.into() }
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display())).map_err(CliError::usage)
}

pub fn write_file(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display())).map_err(CliError::usage)
}

/// Writes `text` to `out`, or to standard output.
pub fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(p) => write_file(p, text),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

pub fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable report");
    s.push('\n');
    s
}

/// Seventeen significant digits.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

pub fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub struct Csv {
    writer: csv::Writer<Vec<u8>>,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(header).expect("in-memory write");
        Self { writer }
    }

    pub fn row(&mut self, fields: &[String]) {
        self.writer.write_record(fields).expect("in-memory write");
    }

    pub fn finish(self) -> String {
        let bytes = self.writer.into_inner().expect("in-memory flush");
        String::from_utf8(bytes).expect("fields are UTF-8")
    }
}
