use serde_json::Value;

use super::config::{ExperimentConfig, SweepAxis};
use super::record::RunRecord;
use super::run::run;
use crate::error::{Error, Result};
use crate::rng::mix64;

pub const MAX_AXES: usize = 2;
pub const MAX_GRID: usize = 10_000;

/// One grid point: the coordinates and the fully typed config for it.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub index: u64,
    pub point: Vec<(String, Value)>,
    pub config: ExperimentConfig,
}

fn sweep_error(message: String) -> Error {
    Error::Config { path: "sweep".into(), message }
}

/// Writes `value` at a dotted path, creating nothing: every parent must exist.
fn set_path(root: &mut Value, path: &str, value: Value) -> Result<()> {
    let mut node = root;
    let parts: Vec<&str> = path.split('.').collect();
    for (i, key) in parts.iter().enumerate() {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| sweep_error(format!("`{}` is not a table", parts[..i].join("."))))?;
        if i + 1 == parts.len() {
            if !obj.contains_key(*key) {
                return Err(sweep_error(format!("no field `{path}` to sweep")));
            }
            obj.insert((*key).to_string(), value);
            return Ok(());
        }
        node = obj
            .get_mut(*key)
            .ok_or_else(|| sweep_error(format!("no field `{path}` to sweep")))?;
    }
    Err(sweep_error("empty sweep path".into()))
}

/// Expands the grid in row-major order (first axis outermost).
///
/// Point `i` is seeded with `mix64(seed, i)` so points are independent but reproducible.
/// Without a sweep the base config is the single point, seeded as given.
pub fn expand(base: &ExperimentConfig) -> Result<Vec<SweepPoint>> {
    let axes: &[SweepAxis] = base.sweep.as_ref().map(|s| s.axes.as_slice()).unwrap_or(&[]);
    let mut plain = base.clone();
    plain.sweep = None;
    if axes.is_empty() {
        return Ok(vec![SweepPoint { index: 0, point: Vec::new(), config: plain }]);
    }
    if axes.len() > MAX_AXES {
        return Err(sweep_error(format!("{} axes given, at most {MAX_AXES} supported", axes.len())));
    }
    let mut size = 1usize;
    for a in axes {
        if a.values.is_empty() {
            return Err(sweep_error(format!("axis `{}` has no values", a.path)));
        }
        size = size.saturating_mul(a.values.len());
    }
    if size > MAX_GRID {
        return Err(sweep_error(format!("grid has {size} points, limit is {MAX_GRID}")));
    }
    let tree = serde_json::to_value(&plain)?;
    let mut out = Vec::with_capacity(size);
    for index in 0..size {
        let mut rem = index;
        let mut coords = vec![0usize; axes.len()];
        for (j, a) in axes.iter().enumerate().rev() {
            coords[j] = rem % a.values.len();
            rem /= a.values.len();
        }
        let mut t = tree.clone();
        let mut point = Vec::with_capacity(axes.len());
        for (a, &c) in axes.iter().zip(&coords) {
            set_path(&mut t, &a.path, a.values[c].clone())?;
            point.push((a.path.clone(), a.values[c].clone()));
        }
        let mut config = ExperimentConfig::from_value(t).map_err(|e| match e {
            Error::Config { path, message } => Error::Config { path, message: format!("sweep point {index}: {message}") },
            other => other,
        })?;
        config.seed = mix64(base.seed, index as u64);
        out.push(SweepPoint { index: index as u64, point, config });
    }
    Ok(out)
}

/// Runs every grid point in order.
pub fn run_sweep(base: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    expand(base)?
        .into_iter()
        .map(|p| {
            let mut r = run(&p.config)?;
            r.point = p.point;
            Ok(r)
        })
        .collect()
}
