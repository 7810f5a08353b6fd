//! JSON documents for matrices, spaces, kernels, states, channels and LOCC
//! protocols, plus a validator that reports measured deviations.
//!
//! Floats go through `serde_json`, which prints the shortest representation
//! that parses back to the same bits.

use std::collections::BTreeMap;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value;

use crate::channel::{
    check_basis, from_coeff_kernel, matrix_unit_basis, non_interacting, pauli_basis, CoeffKernel, HybridChannel,
    KrausBlock, COMPLETENESS_TOL,
};
use crate::classical::{validate_kernel, ClassicalSpace, MarkovKernel, KERNEL_TOL};
use crate::error::{Error, Result};
use crate::locc::{LoccProtocol, Round, Side};
use crate::operator::{hermitian_eig, kraus_gram_sum, CMatrix, HTOL};
use crate::state::{HybridState, STATE_TOL};

#[derive(Debug, Clone, Serialize, Deserialize)]
struct MatrixJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rows: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cols: Option<usize>,
    re: Vec<f64>,
    #[serde(default)]
    im: Vec<f64>,
}

impl Serialize for CMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let (dim, rows, cols) = if self.is_square() {
            (Some(self.rows()), None, None)
        } else {
            (None, Some(self.rows()), Some(self.cols()))
        };
        MatrixJson { dim, rows, cols, re: self.re_parts(), im: self.im_parts() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for CMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let m = MatrixJson::deserialize(d)?;
        let (rows, cols) = match (m.dim, m.rows, m.cols) {
            (Some(d), None, None) => (d, d),
            (None, Some(r), Some(c)) => (r, c),
            (Some(d), Some(r), Some(c)) if r == d && c == d => (d, d),
            _ => return Err(D::Error::custom("matrix needs either \"dim\" or both \"rows\" and \"cols\"")),
        };
        let im = if m.im.is_empty() { vec![0.0; m.re.len()] } else { m.im };
        CMatrix::from_parts(rows, cols, &m.re, &im).map_err(D::Error::custom)
    }
}

fn parse_err(e: serde_json::Error) -> Error {
    Error::Parse(e.to_string())
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("serializable document")
}

pub fn matrix_from_json(text: &str) -> Result<CMatrix> {
    serde_json::from_str(text).map_err(parse_err)
}

pub fn space_from_json(text: &str) -> Result<ClassicalSpace> {
    let space: ClassicalSpace = serde_json::from_str(text).map_err(parse_err)?;
    space.validate()?;
    Ok(space)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KernelJson {
    #[serde(rename = "P")]
    pub p: Vec<f64>,
    pub rows: usize,
    pub cols: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub src_space: Option<ClassicalSpace>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dst_space: Option<ClassicalSpace>,
}

impl KernelJson {
    pub fn from_kernel(k: &MarkovKernel) -> Self {
        Self {
            p: k.matrix().to_vec(),
            rows: k.rows(),
            cols: k.cols(),
            src_space: Some(k.src().clone()),
            dst_space: Some(k.dst().clone()),
        }
    }

    /// Missing spaces fall back to `default` when its size fits, then to a
    /// counting space.
    pub fn into_kernel(self, default: Option<&ClassicalSpace>) -> Result<MarkovKernel> {
        if self.p.len() != self.rows * self.cols {
            return Err(Error::ShapeMismatch(format!(
                "{} entries for a {}x{} kernel",
                self.p.len(),
                self.rows,
                self.cols
            )));
        }
        let pick = |given: Option<ClassicalSpace>, n: usize| -> Result<ClassicalSpace> {
            let space = match given {
                Some(s) => s,
                None => match default {
                    Some(s) if s.len() == n => s.clone(),
                    _ => ClassicalSpace::counting(n),
                },
            };
            space.validate()?;
            if space.len() != n {
                return Err(Error::SpaceMismatch(format!("space has {} cells, kernel needs {n}", space.len())));
            }
            Ok(space)
        };
        let src = pick(self.src_space, self.cols)?;
        let dst = match self.dst_space {
            None if self.rows == self.cols => src.clone(),
            given => pick(given, self.rows)?,
        };
        MarkovKernel::new(src, dst, self.p)
    }
}

/// State document as written, before any validation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateJson {
    pub space: ClassicalSpace,
    pub qdim: usize,
    pub masses: Vec<CMatrix>,
}

impl StateJson {
    pub fn from_state(w: &HybridState) -> Self {
        Self { space: w.space().clone(), qdim: w.qdim(), masses: w.masses().to_vec() }
    }

    fn check_shape(&self) -> Result<()> {
        self.space.validate()?;
        if self.masses.len() != self.space.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} mass blocks for {} cells",
                self.masses.len(),
                self.space.len()
            )));
        }
        if let Some((n, m)) =
            self.masses.iter().enumerate().find(|(_, m)| m.rows() != self.qdim || m.cols() != self.qdim)
        {
            return Err(Error::DimensionMismatch(format!(
                "cell {n} block is {}x{}, expected {}x{}",
                m.rows(),
                m.cols(),
                self.qdim,
                self.qdim
            )));
        }
        Ok(())
    }

    pub fn into_state(self) -> Result<HybridState> {
        self.check_shape()?;
        HybridState::new(self.space, self.masses)
    }
}

pub fn state_from_json(text: &str) -> Result<HybridState> {
    let raw: StateJson = serde_json::from_str(text).map_err(parse_err)?;
    raw.into_state()
}

pub fn state_to_json(w: &HybridState) -> String {
    to_json(&StateJson::from_state(w))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlockJson {
    pub m: usize,
    pub n: usize,
    #[serde(rename = "L")]
    pub ops: Vec<CMatrix>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChannelJson {
    pub src_space: ClassicalSpace,
    pub dst_space: ClassicalSpace,
    pub qdim_src: usize,
    pub qdim_dst: usize,
    pub blocks: Vec<BlockJson>,
}

impl ChannelJson {
    pub fn from_channel(ch: &HybridChannel) -> Self {
        Self {
            src_space: ch.src().clone(),
            dst_space: ch.dst().clone(),
            qdim_src: ch.qdim_src(),
            qdim_dst: ch.qdim_dst(),
            blocks: ch.blocks().map(|(m, n, ops)| BlockJson { m, n, ops: ops.to_vec() }).collect(),
        }
    }

    pub fn into_channel(self) -> Result<HybridChannel> {
        self.src_space.validate()?;
        self.dst_space.validate()?;
        let blocks = self.blocks.into_iter().map(|b| KrausBlock { m: b.m, n: b.n, ops: b.ops });
        HybridChannel::from_blocks(self.src_space, self.dst_space, self.qdim_src, self.qdim_dst, blocks)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum BasisJson {
    Named(String),
    Explicit(Vec<CMatrix>),
}

impl BasisJson {
    pub fn resolve(&self, qdim: Option<usize>) -> Result<Vec<CMatrix>> {
        match self {
            BasisJson::Explicit(b) => Ok(b.clone()),
            BasisJson::Named(name) if name == "pauli" => Ok(pauli_basis()),
            BasisJson::Named(name) if name == "matrix_units" => match qdim {
                Some(d) => Ok(matrix_unit_basis(d)),
                None => Err(Error::BadBasis("\"matrix_units\" needs \"qdim\"".into())),
            },
            BasisJson::Named(name) => Err(Error::BadBasis(format!("unknown basis name {name:?}"))),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
pub struct CoeffEntryJson {
    pub m: usize,
    pub n: usize,
    pub coeffs: CMatrix,
}

/// Constructor-level channel descriptions, lowered to Kraus blocks.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ChannelSpec {
    NonInteracting {
        kernel: KernelJson,
        kraus: Vec<CMatrix>,
    },
    CoeffKernel {
        basis: BasisJson,
        k: Vec<CoeffEntryJson>,
        #[serde(default)]
        qdim: Option<usize>,
        #[serde(default)]
        src_space: Option<ClassicalSpace>,
        #[serde(default)]
        dst_space: Option<ClassicalSpace>,
    },
}

impl ChannelSpec {
    pub fn lower(self, default: Option<&ClassicalSpace>) -> Result<HybridChannel> {
        match self {
            ChannelSpec::NonInteracting { kernel, kraus } => non_interacting(&kernel.into_kernel(default)?, &kraus),
            ChannelSpec::CoeffKernel { basis, k, qdim, src_space, dst_space } => {
                let basis = basis.resolve(qdim)?;
                let d = qdim.or_else(|| basis.first().map(CMatrix::rows)).unwrap_or(0);
                check_basis(&basis, d)?;
                let cells = |pick: fn(&CoeffEntryJson) -> usize| k.iter().map(pick).max().map_or(1, |x| x + 1);
                let src = match (src_space, default) {
                    (Some(s), _) => s,
                    (None, Some(s)) => s.clone(),
                    (None, None) => ClassicalSpace::counting(cells(|e| e.n)),
                };
                let dst = match (dst_space, default) {
                    (Some(s), _) => s,
                    (None, Some(s)) => s.clone(),
                    (None, None) => ClassicalSpace::counting(cells(|e| e.m)),
                };
                src.validate()?;
                dst.validate()?;
                let kernel = CoeffKernel::new(src, dst, d, k.into_iter().map(|e| ((e.m, e.n), e.coeffs)))?;
                from_coeff_kernel(&basis, &kernel)
            }
        }
    }
}

/// Channel document in either block form or constructor form.
pub fn channel_from_json(text: &str, default: Option<&ClassicalSpace>) -> Result<HybridChannel> {
    let value: Value = serde_json::from_str(text).map_err(parse_err)?;
    channel_from_value(value, default)
}

fn channel_from_value(value: Value, default: Option<&ClassicalSpace>) -> Result<HybridChannel> {
    if value.get("type").is_some() {
        let spec: ChannelSpec = serde_json::from_value(value).map_err(parse_err)?;
        spec.lower(default)
    } else {
        let raw: ChannelJson = serde_json::from_value(value).map_err(parse_err)?;
        raw.into_channel()
    }
}

pub fn channel_to_json(ch: &HybridChannel) -> String {
    to_json(&ChannelJson::from_channel(ch))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RoundJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub side: Option<u8>,
    pub outcomes: usize,
    pub instrument: BTreeMap<String, Vec<CMatrix>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProtocolJson {
    pub dims: [usize; 2],
    pub rounds: Vec<RoundJson>,
}

pub fn history_key(history: &[usize]) -> String {
    history.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(".")
}

pub fn parse_history(key: &str) -> Result<Vec<usize>> {
    if key.is_empty() {
        return Ok(Vec::new());
    }
    key.split('.')
        .map(|t| match t.parse::<usize>() {
            Ok(x) if x >= 1 => Ok(x),
            _ => Err(Error::Parse(format!("bad history {key:?}"))),
        })
        .collect()
}

impl ProtocolJson {
    pub fn from_protocol(p: &LoccProtocol) -> Self {
        let (d1, d2) = p.dims();
        let rounds = p
            .rounds()
            .iter()
            .map(|r| RoundJson {
                side: Some(r.side.number()),
                outcomes: r.outcomes,
                instrument: r.instrument.iter().map(|(h, ops)| (history_key(h), ops.clone())).collect(),
            })
            .collect();
        Self { dims: [d1, d2], rounds }
    }

    pub fn into_protocol(self) -> Result<LoccProtocol> {
        let mut rounds = Vec::with_capacity(self.rounds.len());
        for (r, round) in self.rounds.into_iter().enumerate() {
            let side = match round.side {
                Some(k) => Side::from_number(k)?,
                None => Side::alternating(r),
            };
            let mut instrument = BTreeMap::new();
            for (key, ops) in round.instrument {
                let history = parse_history(&key)?;
                if history.len() != r {
                    return Err(Error::Parse(format!(
                        "round {} has history {key:?} of length {}",
                        r + 1,
                        history.len()
                    )));
                }
                instrument.insert(history, ops);
            }
            rounds.push(Round::new(side, round.outcomes, instrument));
        }
        LoccProtocol::new((self.dims[0], self.dims[1]), rounds)
    }
}

pub fn protocol_from_json(text: &str) -> Result<LoccProtocol> {
    let raw: ProtocolJson = serde_json::from_str(text).map_err(parse_err)?;
    raw.into_protocol()
}

pub fn protocol_to_json(p: &LoccProtocol) -> String {
    to_json(&ProtocolJson::from_protocol(p))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DocumentKind {
    Space,
    Kernel,
    State,
    Channel,
    Protocol,
}

/// Guesses the document type from its top-level keys.
pub fn document_kind(value: &Value) -> Result<DocumentKind> {
    let has = |k: &str| value.get(k).is_some();
    if !value.is_object() {
        return Err(Error::Parse("top-level value is not an object".into()));
    }
    Ok(if has("rounds") {
        DocumentKind::Protocol
    } else if has("masses") {
        DocumentKind::State
    } else if has("blocks") || has("type") {
        DocumentKind::Channel
    } else if has("P") {
        DocumentKind::Kernel
    } else if has("weights") {
        DocumentKind::Space
    } else {
        return Err(Error::Parse("unrecognized document".into()));
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub deviation: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl Check {
    fn measured(name: &str, deviation: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            deviation: Some(deviation),
            tolerance: Some(tolerance),
            passed: deviation <= tolerance,
            detail: None,
        }
    }

    fn outcome(name: &str, result: Result<()>) -> Self {
        match result {
            Ok(()) => Self { name: name.into(), deviation: None, tolerance: None, passed: true, detail: None },
            Err(e) => Self::failed(&e),
        }
    }

    fn failed(e: &Error) -> Self {
        Self { name: e.code().into(), deviation: None, tolerance: None, passed: false, detail: Some(e.to_string()) }
    }

    fn with_detail(mut self, detail: String) -> Self {
        self.detail = Some(detail);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub kind: DocumentKind,
    pub passed: bool,
    pub checks: Vec<Check>,
}

impl ValidationReport {
    fn new(kind: DocumentKind, checks: Vec<Check>) -> Self {
        Self { kind, passed: checks.iter().all(|c| c.passed), checks }
    }

    /// Names of the failed checks.
    pub fn violations(&self) -> Vec<&str> {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect()
    }
}

/// Validates a document. Syntax errors and unknown document types are
/// returned as `Err(Parse)`; everything else becomes a check in the report.
/// `tol`, when given, replaces every numeric tolerance.
pub fn validate_json(text: &str, tol: Option<f64>) -> Result<ValidationReport> {
    let value: Value = serde_json::from_str(text).map_err(parse_err)?;
    let kind = document_kind(&value)?;
    let checks = match kind {
        DocumentKind::Space => {
            let space: ClassicalSpace = serde_json::from_value(value).map_err(parse_err)?;
            vec![Check::outcome("BadWeight", space.validate())]
        }
        DocumentKind::Kernel => {
            let raw: KernelJson = serde_json::from_value(value).map_err(parse_err)?;
            kernel_checks(&raw, tol.unwrap_or(KERNEL_TOL))
        }
        DocumentKind::State => {
            let raw: StateJson = serde_json::from_value(value).map_err(parse_err)?;
            state_checks(&raw, tol)
        }
        DocumentKind::Channel => {
            if value.get("type").is_some() {
                let spec: ChannelSpec = serde_json::from_value(value).map_err(parse_err)?;
                match spec.lower(None) {
                    Ok(ch) => channel_checks(&ChannelJson::from_channel(&ch), tol.unwrap_or(COMPLETENESS_TOL)),
                    Err(e) => vec![Check::failed(&e)],
                }
            } else {
                let raw: ChannelJson = serde_json::from_value(value).map_err(parse_err)?;
                channel_checks(&raw, tol.unwrap_or(COMPLETENESS_TOL))
            }
        }
        DocumentKind::Protocol => {
            let raw: ProtocolJson = serde_json::from_value(value).map_err(parse_err)?;
            match raw.into_protocol().and_then(|p| p.completeness_deviation()) {
                Ok(dev) => vec![Check::measured("IncompleteInstrument", dev, tol.unwrap_or(COMPLETENESS_TOL))],
                Err(e) => vec![Check::failed(&e)],
            }
        }
    };
    Ok(ValidationReport::new(kind, checks))
}

fn kernel_checks(raw: &KernelJson, tol: f64) -> Vec<Check> {
    if raw.p.len() != raw.rows * raw.cols {
        return vec![Check::failed(&Error::ShapeMismatch(format!(
            "{} entries for a {}x{} kernel",
            raw.p.len(),
            raw.rows,
            raw.cols
        )))];
    }
    let negative = raw.p.iter().fold(0.0f64, |acc, &x| acc.max(-x));
    let mut column = 0.0f64;
    for n in 0..raw.cols {
        let s: f64 = (0..raw.rows).map(|m| raw.p[m * raw.cols + n]).sum();
        column = column.max((s - 1.0).abs());
    }
    let mut check = Check::measured("BadKernel", negative.max(column), tol);
    if let Err(v) = validate_kernel(&raw.p, raw.rows, raw.cols) {
        check = check.with_detail(v.to_string());
    }
    vec![check]
}

fn state_checks(raw: &StateJson, tol: Option<f64>) -> Vec<Check> {
    if let Err(e) = raw.check_shape() {
        return vec![Check::failed(&e)];
    }
    let mut hermitian = 0.0f64;
    let mut negativity = 0.0f64;
    let mut worst_cell = None;
    for (n, m) in raw.masses.iter().enumerate() {
        hermitian = hermitian.max(m.hermiticity_defect());
        let Ok(e) = hermitian_eig(&m.hermitian_part()) else {
            return vec![Check::failed(&Error::NumericalFailure(format!("eigensolver failed on cell {n}")))];
        };
        let scale = e.eigenvalues.iter().map(|l| l.abs()).sum::<f64>().max(1.0);
        let neg = (-e.min() / scale).max(0.0);
        if neg > negativity {
            negativity = neg;
            worst_cell = Some(n);
        }
    }
    let total: f64 = raw.masses.iter().map(|m| m.trace().re).sum();
    let mut positive = Check::measured("NotPositive", negativity, tol.unwrap_or(STATE_TOL));
    if let (false, Some(n)) = (positive.passed, worst_cell) {
        positive = positive.with_detail(format!("cell {n}"));
    }
    vec![
        Check::measured("NotHermitian", hermitian, tol.unwrap_or(HTOL)),
        positive,
        Check::measured("NotNormalized", (total - 1.0).abs(), tol.unwrap_or(STATE_TOL))
            .with_detail(format!("total trace {total}")),
    ]
}

fn channel_checks(raw: &ChannelJson, tol: f64) -> Vec<Check> {
    let mut checks = vec![Check::outcome("BadWeight", raw.src_space.validate().and_then(|_| raw.dst_space.validate()))];
    let mut per_source: Vec<Vec<&CMatrix>> = vec![Vec::new(); raw.src_space.len()];
    for b in &raw.blocks {
        if b.m >= raw.dst_space.len() || b.n >= raw.src_space.len() {
            checks.push(Check::failed(&Error::ShapeMismatch(format!("block ({}, {}) outside the spaces", b.m, b.n))));
            return checks;
        }
        if let Some(l) = b.ops.iter().find(|l| l.rows() != raw.qdim_dst || l.cols() != raw.qdim_src) {
            checks.push(Check::failed(&Error::ShapeMismatch(format!(
                "block ({}, {}) has a {}x{} operator, expected {}x{}",
                b.m,
                b.n,
                l.rows(),
                l.cols(),
                raw.qdim_dst,
                raw.qdim_src
            ))));
            return checks;
        }
        per_source[b.n].extend(b.ops.iter());
    }
    let id = CMatrix::identity(raw.qdim_src);
    let mut worst = (0.0f64, 0usize);
    for (n, ops) in per_source.iter().enumerate() {
        let dev = kraus_gram_sum(ops.iter().copied(), raw.qdim_src).max_abs_diff(&id);
        if dev > worst.0 {
            worst = (dev, n);
        }
    }
    let mut complete = Check::measured("IncompleteChannel", worst.0, tol);
    if !complete.passed {
        complete = complete.with_detail(format!("source cell {}", worst.1));
    }
    checks.push(complete);
    checks
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::random_channel;
    use crate::locc::random_protocol;
    use crate::random::rng_from_seed;
    use crate::state::random_state;

    #[test]
    fn matrix_round_trip_is_bit_exact() {
        let w = random_state(&ClassicalSpace::counting(1), 3, 5);
        let m = w.mass(0).clone();
        let text = serde_json::to_string(&m).unwrap();
        assert!(text.starts_with("{\"dim\":3,"));
        assert_eq!(matrix_from_json(&text).unwrap(), m);

        let rect = CMatrix::zeros(2, 3);
        let text = serde_json::to_string(&rect).unwrap();
        assert!(text.contains("\"rows\":2") && text.contains("\"cols\":3"));
        assert_eq!(matrix_from_json(&text).unwrap(), rect);
        assert!(matrix_from_json(r#"{"dim":2,"re":[1,0,0],"im":[0,0,0]}"#).is_err());
    }

    #[test]
    fn state_channel_protocol_round_trips() {
        let space = ClassicalSpace::new(vec![0.5, 1.25, 2.0]).unwrap();
        let w = random_state(&space, 2, 1);
        assert_eq!(state_from_json(&state_to_json(&w)).unwrap(), w);

        let ch = random_channel(&space, &ClassicalSpace::counting(2), 2, 3, 2, 4).unwrap();
        let back = channel_from_json(&channel_to_json(&ch), None).unwrap();
        assert_eq!(back.blocks().count(), ch.blocks().count());
        for ((m, n, a), (m2, n2, b)) in ch.blocks().zip(back.blocks()) {
            assert_eq!((m, n, a), (m2, n2, b));
        }

        let p = random_protocol(&mut rng_from_seed(3), (2, 2), 3, 2).unwrap();
        assert_eq!(protocol_from_json(&protocol_to_json(&p)).unwrap(), p);
    }

    #[test]
    fn constructor_specs_lower_to_blocks() {
        let text = r#"{"type":"non_interacting",
            "kernel":{"P":[0.5,0.5,0.5,0.5],"rows":2,"cols":2},
            "kraus":[{"dim":2,"re":[1,0,0,1],"im":[0,0,0,0]}]}"#;
        let ch = channel_from_json(text, None).unwrap();
        assert_eq!(ch.block_count(), 4);

        let text = r#"{"type":"coeff_kernel","basis":"pauli",
            "k":[{"m":0,"n":0,"coeffs":{"dim":4,"re":[1,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0]}}]}"#;
        let ch = channel_from_json(text, None).unwrap();
        assert_eq!(ch.block(0, 0).len(), 1);
    }

    #[test]
    fn validation_reports() {
        let ok = r#"{"space":{"weights":[1.0]},"qdim":1,"masses":[{"dim":1,"re":[1.0],"im":[0.0]}]}"#;
        assert!(validate_json(ok, None).unwrap().passed);

        let low = r#"{"space":{"weights":[1.0]},"qdim":1,"masses":[{"dim":1,"re":[0.8],"im":[0.0]}]}"#;
        let r = validate_json(low, None).unwrap();
        assert_eq!(r.violations(), vec!["NotNormalized"]);

        assert!(matches!(validate_json("{", None), Err(Error::Parse(_))));
        assert!(matches!(validate_json("{\"x\":1}", None), Err(Error::Parse(_))));

        let incomplete = r#"{"src_space":{"weights":[1.0]},"dst_space":{"weights":[1.0]},"qdim_src":1,"qdim_dst":1,
            "blocks":[{"m":0,"n":0,"L":[{"dim":1,"re":[0.5],"im":[0.0]}]}]}"#;
        let r = validate_json(incomplete, None).unwrap();
        assert_eq!(r.violations(), vec!["IncompleteChannel"]);
        assert!((r.checks[1].deviation.unwrap() - 0.75).abs() < 1e-15);
    }

    #[test]
    fn protocol_history_keys() {
        assert_eq!(history_key(&[1, 2]), "1.2");
        assert_eq!(parse_history("").unwrap(), Vec::<usize>::new());
        assert_eq!(parse_history("3.1").unwrap(), vec![3, 1]);
        assert!(parse_history("0").is_err());
    }
}
