//! Final compressed state as snapshot files: `y.csv`, `y_1.csv` .. `y_m.csv`
//! and a `checkpoint.json` listing them.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::schemes::SoeState;

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    n: usize,
    t: f64,
    y: String,
    aux: Vec<String>,
}

pub fn write_checkpoint(state: &SoeState, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let manifest = Manifest {
        n: state.n,
        t: state.t,
        y: "y.csv".into(),
        aux: (1..=state.aux.len()).map(|i| format!("y_{i}.csv")).collect(),
    };
    state.y.write_snapshot(dir.join(&manifest.y))?;
    for (field, name) in state.aux.iter().zip(&manifest.aux) {
        field.write_snapshot(dir.join(name))?;
    }
    let path = dir.join("checkpoint.json");
    let json = serde_json::to_string_pretty(&manifest)?;
    std::fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))
}

pub fn read_checkpoint(dir: impl AsRef<Path>) -> Result<SoeState> {
    let dir = dir.as_ref();
    let path = dir.join("checkpoint.json");
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let manifest: Manifest = serde_json::from_str(&text)?;
    let y = GridFunction::read_snapshot(dir.join(&manifest.y))?;
    let aux = manifest
        .aux
        .iter()
        .map(|name| {
            let field = GridFunction::read_snapshot(dir.join(name))?;
            field.check_same_grid(&y)?;
            Ok(field)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SoeState {
        y,
        aux,
        n: manifest.n,
        t: manifest.t,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::{run_model_problem, ExperimentSpec};

    #[test]
    fn round_trip() {
        let spec = ExperimentSpec {
            grid_n: 6,
            final_time: 1.0,
            steps: 5,
            ..ExperimentSpec::default()
        };
        let state = run_model_problem(&spec, 5).unwrap().final_state;
        let dir = tempfile::tempdir().unwrap();
        write_checkpoint(&state, dir.path()).unwrap();
        assert!(dir.path().join("y_12.csv").exists());
        assert_eq!(read_checkpoint(dir.path()).unwrap(), state);
    }
}
