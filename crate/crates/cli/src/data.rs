use std::path::Path;

use anyhow::{bail, Context, Result};
use nalgebra::{DMatrix, DVector};

/// A dataset stored one example per CSV row. Inputs come from columns
/// `x1, x2, …` and targets from `y` or `y1, y2, …`; both matrices hold one
/// example per column.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub x: DMatrix<f64>,
    pub y: DMatrix<f64>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.x.ncols()
    }

    /// The single target row as a vector.
    pub fn scalar_targets(&self) -> Result<DVector<f64>> {
        if self.y.nrows() != 1 {
            bail!("expected exactly one target column, found {}", self.y.nrows());
        }
        Ok(self.y.row(0).transpose())
    }
}

fn column_index(name: &str, prefix: char) -> Option<usize> {
    let rest = name.strip_prefix(prefix)?;
    if rest.is_empty() && prefix == 'y' {
        return Some(1);
    }
    rest.parse::<usize>().ok().filter(|&k| k >= 1)
}

pub fn read_dataset(path: &Path) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let headers = rdr.headers()?.clone();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (col, name) in headers.iter().enumerate() {
        if let Some(k) = column_index(name, 'x') {
            xs.push((k, col));
        } else if let Some(k) = column_index(name, 'y') {
            ys.push((k, col));
        } else {
            bail!("{}: unexpected column '{name}' (use y, y1.., x1..)", path.display());
        }
    }
    xs.sort_unstable();
    ys.sort_unstable();
    for (cols, p) in [(&xs, 'x'), (&ys, 'y')] {
        if cols.iter().enumerate().any(|(i, (k, _))| *k != i + 1) {
            bail!("{}: {p} columns must be numbered 1, 2, … without gaps", path.display());
        }
    }
    if xs.is_empty() {
        bail!("{}: no input columns", path.display());
    }
    let mut xv: Vec<f64> = Vec::new();
    let mut yv: Vec<f64> = Vec::new();
    let mut m = 0;
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let get = |col: usize| -> Result<f64> {
            let s = rec.get(col).unwrap_or("");
            s.parse::<f64>()
                .with_context(|| format!("{} row {}: bad number '{s}'", path.display(), line + 2))
        };
        for &(_, c) in &xs {
            xv.push(get(c)?);
        }
        for &(_, c) in &ys {
            yv.push(get(c)?);
        }
        m += 1;
    }
    if m == 0 {
        bail!("{}: no rows", path.display());
    }
    Ok(Dataset {
        x: DMatrix::from_column_slice(xs.len(), m, &xv),
        y: DMatrix::from_column_slice(ys.len(), m, &yv),
    })
}
