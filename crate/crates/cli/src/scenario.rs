//! JSON scenario files.
//!
//! Complex entries are `[re, im]` (a bare number is read as real); matrices are row-major
//! nested arrays. A minimal file:
//!
//! ```json
//! {
//!   "dim_s": 2,
//!   "coupling": {"product": {"a": [[0, 0], [0, 1]], "b": [[0.5, -0.5], [-0.5, 0.5]], "lambda": 3.141592653589793}},
//!   "pointer": "computational",
//!   "apparatus_state": {"vector": [1, 0]},
//!   "states": [{"vector": [0.7071067811865476, 0.7071067811865476]}]
//! }
//! ```

use std::path::Path;

use qmlab::linop::{CMatrix, C64};
use qmlab::models::quadrature::QuadratureConfig;
use qmlab::models::ProductCouplingSpec;
use qmlab::quantum::{Effect, Povm, State};
use qmlab::scheme::{Cell, Coupling, MeasurementScheme, ReadingScale};
use qmlab::QmError;
use serde::Deserialize;

use crate::error::{CliError, CliResult};

pub const DEFAULT_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Analysis {
    Povm,
    Components,
    Verdicts,
    Correlations,
}

pub const ALL_ANALYSES: [Analysis; 4] = [Analysis::Povm, Analysis::Components, Analysis::Verdicts, Analysis::Correlations];

/// A scheme with its reading scale and input states.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub scheme: MeasurementScheme,
    pub scale: ReadingScale,
    pub states: Vec<State>,
    /// Generators when the coupling was given in product form.
    pub product: Option<ProductCouplingSpec>,
    pub analyses: Vec<Analysis>,
    pub tolerance: f64,
}

impl Scenario {
    pub fn wants(&self, a: Analysis) -> bool {
        self.analyses.contains(&a)
    }
}

/// The quadrature model, which is evaluated structurally rather than as a dense scheme.
#[derive(Debug, Clone)]
pub struct QuadScenario {
    pub name: String,
    pub config: QuadratureConfig,
    /// Real coherent amplitude of the signal.
    pub alpha: f64,
}

#[derive(Debug, Clone)]
pub enum Loaded {
    Scheme(Box<Scenario>),
    Quadrature(QuadScenario),
}

impl Loaded {
    pub fn name(&self) -> &str {
        match self {
            Loaded::Scheme(s) => &s.name,
            Loaded::Quadrature(q) => &q.name,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawComplex {
    Pair([f64; 2]),
    Real(f64),
}

impl RawComplex {
    fn value(&self) -> C64 {
        match *self {
            RawComplex::Pair([re, im]) => C64::new(re, im),
            RawComplex::Real(re) => C64::new(re, 0.0),
        }
    }
}

type RawMatrix = Vec<Vec<RawComplex>>;

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
enum RawCoupling {
    Unitary(RawMatrix),
    Kraus(Vec<RawMatrix>),
    Product { a: RawMatrix, b: RawMatrix, lambda: f64 },
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawPointer {
    Named(String),
    Effects {
        effects: Vec<RawMatrix>,
        #[serde(default)]
        labels: Option<Vec<f64>>,
    },
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawState {
    Vector { vector: Vec<RawComplex> },
    Matrix(RawMatrix),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCell {
    pointers: Vec<usize>,
    value: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScale {
    cells: Vec<RawCell>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    #[serde(default)]
    name: Option<String>,
    dim_s: usize,
    coupling: RawCoupling,
    pointer: RawPointer,
    #[serde(default)]
    pointer_map: Option<Vec<usize>>,
    apparatus_state: RawState,
    #[serde(default)]
    reading_scale: Option<RawScale>,
    states: Vec<RawState>,
    #[serde(default)]
    analyses: Option<Vec<Analysis>>,
    #[serde(default)]
    tolerance: Option<f64>,
}

fn matrix(raw: &RawMatrix) -> CliResult<CMatrix> {
    let rows = raw.len();
    if rows == 0 {
        return Err(QmError::DimensionMismatch("empty matrix".into()).into());
    }
    let cols = raw[0].len();
    if raw.iter().any(|r| r.len() != cols) {
        return Err(QmError::DimensionMismatch("ragged matrix rows".into()).into());
    }
    Ok(CMatrix::from_fn(rows, cols, |r, c| raw[r][c].value()))
}

fn square(raw: &RawMatrix, n: usize, what: &str) -> CliResult<CMatrix> {
    let m = matrix(raw)?;
    if m.rows() != n || m.cols() != n {
        return Err(QmError::DimensionMismatch(format!("{what} is {}x{}, expected {n}x{n}", m.rows(), m.cols())).into());
    }
    Ok(m)
}

fn state(raw: &RawState, n: usize, what: &str) -> CliResult<State> {
    match raw {
        RawState::Vector { vector } => {
            if vector.len() != n {
                return Err(QmError::DimensionMismatch(format!("{what} has {} entries, expected {n}", vector.len())).into());
            }
            let v: Vec<C64> = vector.iter().map(RawComplex::value).collect();
            Ok(State::pure(&v)?)
        }
        RawState::Matrix(m) => Ok(State::new(square(m, n, what)?)?),
    }
}

fn state_dim(raw: &RawState) -> usize {
    match raw {
        RawState::Vector { vector } => vector.len(),
        RawState::Matrix(m) => m.len(),
    }
}

/// Parses scenario JSON; syntax and schema errors carry line and column.
pub fn parse_scenario(text: &str, name: &str) -> CliResult<Scenario> {
    let raw: RawScenario = serde_json::from_str(text).map_err(|e| {
        // serde_json appends its own " at line L column C"
        let full = e.to_string();
        let message = full.rsplit_once(" at line ").map_or(full.as_str(), |(m, _)| m).to_string();
        CliError::Parse { line: e.line(), column: e.column(), message }
    })?;
    build(raw, name)
}

pub fn load_file(path: &Path) -> CliResult<Scenario> {
    let text = std::fs::read_to_string(path)?;
    parse_scenario(&text, &path.display().to_string())
}

fn build(raw: RawScenario, name: &str) -> CliResult<Scenario> {
    let ds = raw.dim_s;
    let da = match &raw.pointer {
        RawPointer::Effects { effects, .. } => effects.first().map_or(0, Vec::len),
        RawPointer::Named(_) => state_dim(&raw.apparatus_state),
    };
    if ds == 0 || da == 0 {
        return Err(QmError::DimensionMismatch("object and apparatus dimensions must be positive".into()).into());
    }
    let pointer = match &raw.pointer {
        RawPointer::Named(n) if n == "computational" => Povm::computational(da),
        RawPointer::Named(n) => return Err(CliError::Input(format!("unknown pointer \"{n}\""))),
        RawPointer::Effects { effects, labels } => {
            let mats = effects
                .iter()
                .enumerate()
                .map(|(i, m)| square(m, da, &format!("pointer effect {i}")))
                .collect::<CliResult<Vec<_>>>()?;
            let labels = labels.clone().unwrap_or_else(|| (0..mats.len()).map(|i| i as f64).collect());
            if labels.len() != mats.len() {
                return Err(CliError::Input(format!("{} labels for {} pointer effects", labels.len(), mats.len())));
            }
            Povm::new(mats.into_iter().zip(labels).map(|(m, l)| Effect::new(m, l)).collect::<Result<_, _>>()?)?
        }
    };
    let ta = state(&raw.apparatus_state, da, "apparatus state")?;
    let (coupling, product) = match &raw.coupling {
        RawCoupling::Unitary(u) => (Coupling::unitary(square(u, ds * da, "unitary")?)?, None),
        RawCoupling::Kraus(ks) => (
            Coupling::channel(
                ks.iter()
                    .enumerate()
                    .map(|(i, k)| square(k, ds * da, &format!("Kraus operator {i}")))
                    .collect::<CliResult<_>>()?,
            )?,
            None,
        ),
        RawCoupling::Product { a, b, lambda } => {
            let spec = ProductCouplingSpec::new(square(a, ds, "generator a")?, square(b, da, "generator b")?, *lambda)?;
            (Coupling::unitary(spec.unitary())?, Some(spec))
        }
    };
    let scheme = MeasurementScheme::new(ds, pointer, raw.pointer_map, ta, coupling)?;
    let scale = match raw.reading_scale {
        None => ReadingScale::finest(&scheme),
        Some(s) => ReadingScale::new(s.cells.into_iter().map(|c| Cell { pointers: c.pointers, value: c.value }).collect())?,
    };
    scale.validate_for(&scheme)?;
    if raw.states.is_empty() {
        return Err(CliError::Input("scenario lists no input states".into()));
    }
    let states = raw
        .states
        .iter()
        .enumerate()
        .map(|(i, s)| state(s, ds, &format!("state {i}")))
        .collect::<CliResult<Vec<_>>>()?;
    let tolerance = raw.tolerance.unwrap_or(DEFAULT_TOLERANCE);
    if !(tolerance.is_finite() && tolerance > 0.0) {
        return Err(CliError::Input(format!("tolerance {tolerance} must be positive")));
    }
    Ok(Scenario {
        name: raw.name.unwrap_or_else(|| name.to_string()),
        scheme,
        scale,
        states,
        product,
        analyses: raw.analyses.unwrap_or_else(|| ALL_ANALYSES.to_vec()),
        tolerance,
    })
}
