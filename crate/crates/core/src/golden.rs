//! Bundled expected tables and their regeneration.

use rayon::prelude::*;
use rug::Rational;
use serde::{Deserialize, Serialize};

use crate::deform::HomotopySeries;
use crate::diagnostics::{ratio_sequence, reference_error};
use crate::error::{HamError, Result};
use crate::expfun::parse_rational;
use crate::problems;
use crate::reference;
use crate::residual::residual_of;

pub const NAMES: [&str; 4] = ["table1", "table2", "table3", "figure1"];

/// Absolute tolerance on ratio cells.
pub const RATIO_TOL: f64 = 1e-4;
/// Absolute tolerance on plotted ratio limits.
pub const LIMIT_TOL: f64 = 0.03;

fn source(name: &str) -> Result<&'static str> {
    match name {
        "table1" => Ok(include_str!("../data/table1.csv")),
        "table2" => Ok(include_str!("../data/table2.csv")),
        "table3" => Ok(include_str!("../data/table3.csv")),
        "figure1" => Ok(include_str!("../data/figure1.csv")),
        other => Err(HamError::Parse(format!("unknown table '{other}'"))),
    }
}

/// `(problem id, series order)` behind each table.
pub fn setup(name: &str) -> (&'static str, usize) {
    match name {
        "table1" => ("ex1", 50),
        "table2" => ("ex2", 50),
        _ => ("ex6", 30),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    /// `rat_index`
    Rat,
    /// `∫₀^∞ |u_ref − S_index|`
    Err,
    /// `Res` of `S_index`
    Res,
    /// terminal ratio `rat_index`
    Limit,
}

impl Quantity {
    /// Ratios compare absolutely; errors and residuals to within a factor 10.
    pub fn deviation(self, computed: f64, expected: f64) -> f64 {
        match self {
            Quantity::Rat | Quantity::Limit => (computed - expected).abs(),
            Quantity::Err | Quantity::Res => (computed / expected).log10().abs(),
        }
    }

    pub fn tolerance(self) -> f64 {
        match self {
            Quantity::Rat => RATIO_TOL,
            Quantity::Limit => LIMIT_TOL,
            Quantity::Err | Quantity::Res => 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoldenCell {
    pub quantity: Quantity,
    pub h: String,
    pub column: String,
    pub index: usize,
    pub expected: f64,
    pub flag: Option<String>,
}

pub fn load(name: &str) -> Result<Vec<GoldenCell>> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(source(name)?.as_bytes());
    let mut out = Vec::new();
    for rec in rdr.deserialize::<GoldenCell>() {
        let mut cell = rec.map_err(|e| HamError::Parse(e.to_string()))?;
        if cell.flag.as_deref() == Some("") {
            cell.flag = None;
        }
        out.push(cell);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    #[serde(flatten)]
    pub cell: GoldenCell,
    pub computed: f64,
    pub deviation: f64,
    pub within: bool,
}

impl CellResult {
    pub fn status(&self) -> &'static str {
        match (self.within, self.cell.flag.is_some()) {
            (true, false) => "ok",
            (true, true) => "flagged",
            (false, _) => "FAIL",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableRun {
    pub schema_version: u32,
    pub name: String,
    pub problem: String,
    pub order: usize,
    pub cells: Vec<CellResult>,
    /// Full ratio sequence per `h`, `rat_1 …`.
    pub ratios: Vec<(String, Vec<f64>)>,
}

impl TableRun {
    pub fn failures(&self) -> usize {
        self.cells.iter().filter(|c| !c.within).count()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("quantity,h,column,index,expected,computed,deviation,status\n");
        for c in &self.cells {
            out.push_str(&format!(
                "{},{},{},{},{},{:.6e},{:.3e},{}\n",
                serde_json::to_value(c.cell.quantity).unwrap().as_str().unwrap(),
                c.cell.h,
                c.cell.column,
                c.cell.index,
                c.cell.expected,
                c.computed,
                c.deviation,
                c.status()
            ));
        }
        out
    }

    /// `h,k,rat` rows for every stored ratio sequence.
    pub fn ratios_csv(&self) -> String {
        let mut out = String::from("h,k,rat\n");
        for (h, seq) in &self.ratios {
            for (i, r) in seq.iter().enumerate() {
                out.push_str(&format!("{h},{},{r:.10}\n", i + 1));
            }
        }
        out
    }
}

/// The distinct `h` labels of a table, in file order.
pub fn h_labels(name: &str) -> Result<Vec<String>> {
    let mut hs: Vec<String> = Vec::new();
    for c in load(name)? {
        if !hs.contains(&c.h) {
            hs.push(c.h);
        }
    }
    Ok(hs)
}

/// The series behind a table, one per `h`, built in parallel.
pub fn build_series(name: &str) -> Result<Vec<(String, HomotopySeries<Rational>)>> {
    let (id, order) = setup(name);
    let entry = problems::get(id)?;
    h_labels(name)?
        .into_par_iter()
        .map(|h| {
            let s = HomotopySeries::build(entry.problem.clone(), parse_rational(&h)?, order)?;
            Ok((h, s))
        })
        .collect()
}

/// Recomputes every cell of a bundled table.
pub fn regenerate(name: &str, prec: u32) -> Result<TableRun> {
    compare(name, &build_series(name)?, prec)
}

/// Diffs a table against already built series (as from [`build_series`]).
pub fn compare(name: &str, series: &[(String, HomotopySeries<Rational>)], prec: u32) -> Result<TableRun> {
    let cells = load(name)?;
    let (id, order) = setup(name);
    let reference = if cells.iter().any(|c| c.quantity == Quantity::Err) {
        Some(reference::closed_form(id)?)
    } else {
        None
    };
    let per_h: Vec<(String, Vec<f64>, Vec<CellResult>)> = series
        .par_iter()
        .map(|(hs, series)| {
            let ratios = ratio_sequence(series, prec)?;
            let mut out = Vec::new();
            for cell in cells.iter().filter(|c| &c.h == hs) {
                let computed = match cell.quantity {
                    Quantity::Rat | Quantity::Limit => *ratios.get(cell.index - 1).ok_or(
                        HamError::OrderOutOfRange { requested: cell.index + 1, computed: series.order() },
                    )?,
                    Quantity::Err => {
                        reference_error(series, cell.index, reference.as_ref().unwrap(), prec)?
                    }
                    Quantity::Res => residual_of(series, cell.index, prec)?,
                };
                let deviation = cell.quantity.deviation(computed, cell.expected);
                out.push(CellResult {
                    cell: cell.clone(),
                    computed,
                    deviation,
                    within: deviation <= cell.quantity.tolerance(),
                });
            }
            Ok((hs.clone(), ratios, out))
        })
        .collect::<Result<_>>()?;
    let mut run = TableRun {
        schema_version: 1,
        name: name.to_string(),
        problem: id.to_string(),
        order,
        cells: Vec::new(),
        ratios: Vec::new(),
    };
    for (h, ratios, cells) in per_h {
        run.ratios.push((h, ratios));
        run.cells.extend(cells);
    }
    Ok(run)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_tables_parse() {
        assert_eq!(load("table1").unwrap().len(), 35);
        assert_eq!(load("table2").unwrap().len(), 28);
        assert_eq!(load("table3").unwrap().len(), 16);
        assert_eq!(load("figure1").unwrap().len(), 4);
        let t2 = load("table2").unwrap();
        assert_eq!(t2.iter().filter(|c| c.flag.is_some()).count(), 2);
        assert!(load("table9").is_err());
    }

    #[test]
    fn deviations() {
        assert!((Quantity::Res.deviation(1e-9, 1e-10) - 1.0).abs() < 1e-12);
        assert_eq!(Quantity::Rat.deviation(0.5, 0.25), 0.25);
    }
}
