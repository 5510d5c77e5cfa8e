//! The fixture catalogue addressable as `builtin:NAME[?key=value&...]`.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;

use qmlab::models::quadrature::QuadratureConfig;
use qmlab::models::{build_cnot, build_controlled_rotation, build_shift_model, plus_state, uniform_state, ProductScheme};
use qmlab::scheme::ReadingScale;

use crate::error::{CliError, CliResult};
use crate::scenario::{load_file, Loaded, QuadScenario, Scenario, ALL_ANALYSES, DEFAULT_TOLERANCE};

pub const BUILTIN_PREFIX: &str = "builtin:";

/// Names of the dense fixtures, each usable as `builtin:NAME`.
pub const DENSE_BUILTINS: [&str; 3] = ["cnot", "crot", "shift3"];

/// The quadrature fixture small enough for the dense oracle.
pub const SMALL_QUAD: &str = "builtin:quad?N=16&lambda=1&M=64";

/// Resolves `--scenario`: either a builtin or a JSON file path.
pub fn load(spec: &str) -> CliResult<Loaded> {
    match spec.strip_prefix(BUILTIN_PREFIX) {
        Some(rest) => builtin(rest),
        None => Ok(Loaded::Scheme(Box::new(load_file(std::path::Path::new(spec))?))),
    }
}

fn parse_query(q: &str) -> CliResult<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for pair in q.split('&').filter(|p| !p.is_empty()) {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| CliError::Input(format!("builtin parameter \"{pair}\" is not key=value")))?;
        out.insert(k.to_string(), v.to_string());
    }
    Ok(out)
}

struct Params {
    map: BTreeMap<String, String>,
    fixture: &'static str,
}

impl Params {
    fn take<T: std::str::FromStr>(&mut self, key: &str) -> CliResult<Option<T>> {
        match self.map.remove(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| CliError::Input(format!("builtin:{} parameter {key}={v} is not a valid number", self.fixture))),
        }
    }

    fn finish(self) -> CliResult<()> {
        match self.map.keys().next() {
            Some(k) => Err(CliError::Input(format!("builtin:{} has no parameter \"{k}\"", self.fixture))),
            None => Ok(()),
        }
    }
}

fn dense(name: String, p: ProductScheme, scale: ReadingScale, state: qmlab::quantum::State) -> Loaded {
    Loaded::Scheme(Box::new(Scenario {
        name,
        scheme: p.scheme,
        scale,
        states: vec![state],
        product: Some(p.spec),
        analyses: ALL_ANALYSES.to_vec(),
        tolerance: DEFAULT_TOLERANCE,
    }))
}

fn builtin(rest: &str) -> CliResult<Loaded> {
    let (name, query) = rest.split_once('?').unwrap_or((rest, ""));
    let fixture: &'static str = match name {
        "cnot" => "cnot",
        "crot" => "crot",
        "shift3" => "shift3",
        "quad" => "quad",
        other => return Err(CliError::Input(format!("unknown builtin \"{other}\""))),
    };
    let mut p = Params { map: parse_query(query)?, fixture };
    let full = format!("{BUILTIN_PREFIX}{rest}");
    let loaded = match fixture {
        "cnot" => {
            let s = build_cnot()?;
            let scale = ReadingScale::finest(&s.scheme);
            dense(full, s, scale, plus_state())
        }
        "crot" => {
            let theta = p.take("theta")?.unwrap_or(FRAC_PI_2);
            let s = build_controlled_rotation(theta)?;
            let scale = ReadingScale::finest(&s.scheme);
            dense(full, s, scale, plus_state())
        }
        "shift3" => {
            let m = build_shift_model(3, &[0, 1, 2])?;
            dense(full, m.product, m.scale, uniform_state(3))
        }
        _ => {
            let n = p.take("N")?.unwrap_or(64);
            let lambda = p.take("lambda")?.unwrap_or(2.0);
            let alpha = p.take("alpha")?.unwrap_or(1.0);
            let bins = p.take("bins")?.unwrap_or(2);
            let mut config = QuadratureConfig::new(n, lambda).with_bins(bins);
            if let Some(m) = p.take("M")? {
                config = config.with_probe_dim(m);
            }
            Loaded::Quadrature(QuadScenario { name: full, config, alpha })
        }
    };
    p.finish()?;
    Ok(loaded)
}
