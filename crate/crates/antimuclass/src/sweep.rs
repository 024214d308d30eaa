//! One-parameter grids over the training configuration.
//!
//! Every grid value is trained and evaluated with homogeneous and
//! heterogeneous ant populations over several seeds. The resulting table has
//! one row per value with the mean held-out rate of each population. Cell
//! seeds depend only on the value's grid position and the seed index, so the
//! table does not depend on the order or parallelism of execution.

use std::fmt::Write as _;

use antimuclass_core::pipeline::{classify_raster, held_out_confusion, train};
use antimuclass_core::rng::derive_seed;
use antimuclass_core::{LabelMap, Raster, RunConfig};
use rayon::prelude::*;

use crate::config;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    /// A configuration key, e.g. `NbrItr`.
    pub param: String,
    pub values: Vec<String>,
    pub seeds: usize,
    pub master_seed: u64,
    pub base: RunConfig,
}

/// One training run of the grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Cell {
    pub value_index: usize,
    pub seed_index: usize,
    pub heterogeneous: bool,
    pub config: RunConfig,
}

/// Held-out rate in percent, or why the run failed.
pub type CellOutcome = std::result::Result<f64, String>;

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub value: String,
    /// Mean rate of the successful homogeneous runs.
    pub api_rate: Option<f64>,
    /// Mean rate of the successful heterogeneous runs.
    pub api_h_rate: Option<f64>,
    pub failures: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepTable {
    pub param: String,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    /// Tab-separated table: the parameter, both mean rates and a status.
    pub fn to_tsv(&self) -> String {
        let rate = |r: Option<f64>| r.map_or_else(|| "NA".to_string(), |r| format!("{r:.4}"));
        let mut s = format!("{}\tapi_rate\tapi_h_rate\tstatus\n", self.param);
        for row in &self.rows {
            let status = match row.failures.first() {
                None => "ok".to_string(),
                Some(first) => format!("{} failed: {}", row.failures.len(), first.replace(['\t', '\n'], " ")),
            };
            let _ = writeln!(s, "{}\t{}\t{}\t{status}", row.value, rate(row.api_rate), rate(row.api_h_rate));
        }
        s
    }
}

/// Expands the grid into cells, value-major, homogeneous before
/// heterogeneous.
pub fn plan(spec: &SweepSpec) -> Result<Vec<Cell>> {
    let bad = |msg: String| Error::Config { line: 0, msg };
    if spec.values.is_empty() {
        return Err(bad("the sweep grid is empty".into()));
    }
    if spec.seeds == 0 {
        return Err(bad("a sweep needs at least one seed".into()));
    }
    if spec.param == "seed" || spec.param == "heterogeneous" {
        return Err(bad(format!("{} is set by the sweep itself", spec.param)));
    }
    let mut cells = Vec::with_capacity(spec.values.len() * spec.seeds * 2);
    for (vi, value) in spec.values.iter().enumerate() {
        let mut cfg = spec.base.clone();
        config::set(&mut cfg, &spec.param, value).map_err(bad)?;
        for si in 0..spec.seeds {
            let seed = derive_seed(spec.master_seed, &[vi as u64, si as u64]);
            for heterogeneous in [false, true] {
                let config = RunConfig { seed, heterogeneous, ..cfg.clone() };
                cells.push(Cell { value_index: vi, seed_index: si, heterogeneous, config });
            }
        }
    }
    Ok(cells)
}

/// Trains on `raster`/`labels` and scores the pixels not used for training.
pub fn run_cell(cell: &Cell, raster: &Raster, labels: &LabelMap) -> CellOutcome {
    let go = || -> antimuclass_core::Result<f64> {
        let tm = train(raster, labels, &cell.config)?;
        let pred = classify_raster(&tm, raster)?;
        Ok(held_out_confusion(&tm, &pred, labels)?.classification_rate())
    };
    go().map_err(|e| e.to_string())
}

/// Folds per-cell outcomes (in `cells` order) into the table.
pub fn assemble(spec: &SweepSpec, cells: &[Cell], outcomes: &[CellOutcome]) -> SweepTable {
    let rows = spec
        .values
        .iter()
        .enumerate()
        .map(|(vi, value)| {
            let mean = |het: bool| {
                let rates: Vec<f64> = cells
                    .iter()
                    .zip(outcomes)
                    .filter(|(c, _)| c.value_index == vi && c.heterogeneous == het)
                    .filter_map(|(_, o)| o.as_ref().ok().copied())
                    .collect();
                (!rates.is_empty()).then(|| rates.iter().sum::<f64>() / rates.len() as f64)
            };
            let failures = cells
                .iter()
                .zip(outcomes)
                .filter(|(c, _)| c.value_index == vi)
                .filter_map(|(_, o)| o.as_ref().err().cloned())
                .collect();
            SweepRow { value: value.clone(), api_rate: mean(false), api_h_rate: mean(true), failures }
        })
        .collect();
    SweepTable { param: spec.param.clone(), rows }
}

/// Runs every cell, in parallel when threads are available.
pub fn sweep(spec: &SweepSpec, raster: &Raster, labels: &LabelMap) -> Result<SweepTable> {
    let cells = plan(spec)?;
    let outcomes: Vec<CellOutcome> = cells.par_iter().map(|c| run_cell(c, raster, labels)).collect();
    Ok(assemble(spec, &cells, &outcomes))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(values: &[&str]) -> SweepSpec {
        SweepSpec {
            param: "NbrItr".into(),
            values: values.iter().map(|v| v.to_string()).collect(),
            seeds: 2,
            master_seed: 1,
            base: RunConfig::default(),
        }
    }

    #[test]
    fn plan_shape() {
        let cells = plan(&spec(&["15", "25", "30"])).unwrap();
        assert_eq!(cells.len(), 12);
        assert_eq!(cells[4].config.nbr_itr, 25);
        assert!(!cells[4].heterogeneous && cells[5].heterogeneous);
        assert_eq!(cells[4].config.seed, cells[5].config.seed);
        assert_ne!(cells[4].config.seed, cells[6].config.seed);
    }

    #[test]
    fn plan_rejects_bad_grids() {
        assert!(plan(&spec(&[])).is_err());
        assert!(plan(&SweepSpec { param: "Nope".into(), ..spec(&["1"]) }).is_err());
        assert!(plan(&SweepSpec { param: "seed".into(), ..spec(&["1"]) }).is_err());
        assert!(plan(&spec(&["many"])).is_err());
    }

    #[test]
    fn failures_are_recorded() {
        let s = spec(&["1", "2"]);
        let cells = plan(&s).unwrap();
        let outcomes: Vec<CellOutcome> =
            cells.iter().map(|c| if c.value_index == 1 && c.seed_index == 0 { Err("boom".into()) } else { Ok(90.0) }).collect();
        let table = assemble(&s, &cells, &outcomes);
        assert_eq!(table.rows[0].failures.len(), 0);
        assert_eq!(table.rows[1].failures.len(), 2);
        assert_eq!(table.rows[1].api_rate, Some(90.0));
        let tsv = table.to_tsv();
        assert_eq!(tsv.lines().next().unwrap(), "NbrItr\tapi_rate\tapi_h_rate\tstatus");
        assert!(tsv.contains("1\t90.0000\t90.0000\tok\n"));
        assert!(tsv.contains("2 failed: boom"));
    }
}
