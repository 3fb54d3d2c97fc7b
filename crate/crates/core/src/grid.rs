//! Uniform dyadic grids on `[0, 1]` and real-valued sample paths on them.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Uniform grid of `[0, 1]` with `n_steps` subintervals, `n_steps` a power of
/// two so that every ladder value `2^-j >= step` is an exact multiple of the
/// step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grid {
    n_steps: usize,
}

impl Grid {
    pub fn new(n_steps: usize) -> Result<Self> {
        if n_steps < 2 || !n_steps.is_power_of_two() {
            return Err(Error::BadGridSize(n_steps));
        }
        Ok(Grid { n_steps })
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    /// Number of nodes, `n_steps + 1`.
    pub fn n_nodes(&self) -> usize {
        self.n_steps + 1
    }

    pub fn step(&self) -> f64 {
        1.0 / self.n_steps as f64
    }

    pub fn node(&self, k: usize) -> f64 {
        k as f64 / self.n_steps as f64
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_nodes()).map(move |k| self.node(k))
    }

    /// Nearest grid node index for a time in `[0, 1]`.
    pub fn snap(&self, t: f64) -> usize {
        let k = (t.clamp(0.0, 1.0) * self.n_steps as f64).round() as usize;
        k.min(self.n_steps)
    }

    /// Converts an aligned epsilon to a whole number of grid steps.
    pub fn eps_to_steps(&self, eps: f64) -> Result<usize> {
        let steps = eps * self.n_steps as f64;
        let rounded = steps.round();
        if rounded < 1.0 || (steps - rounded).abs() > 1e-9 * steps.max(1.0) {
            return Err(Error::EpsNotAligned {
                eps,
                step: self.step(),
            });
        }
        Ok(rounded as usize)
    }
}

/// A real-valued path sampled on a [`Grid`], with the clamp convention
/// `X_t = X_{(t v 0) ^ 1}` for evaluation outside the node range.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath {
    grid: Grid,
    values: Vec<f64>,
    label: String,
}

impl SamplePath {
    pub fn new(grid: Grid, values: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        if values.len() != grid.n_nodes() {
            return Err(Error::BadInput(format!(
                "path needs {} values, got {}",
                grid.n_nodes(),
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::BadInput(format!("non-finite path value {v}")));
        }
        Ok(SamplePath {
            grid,
            values,
            label: label.into(),
        })
    }

    /// Path built by evaluating `f` at every node time.
    pub fn from_fn(grid: Grid, label: impl Into<String>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.nodes().map(f).collect();
        SamplePath::new(grid, values, label)
    }

    pub fn zero(grid: Grid) -> Self {
        SamplePath {
            grid,
            values: vec![0.0; grid.n_nodes()],
            label: "zero".into(),
        }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn set_label(&mut self, label: impl Into<String>) {
        self.label = label.into();
    }

    /// Clamped node access: any signed index maps into `[0, n_steps]`.
    pub fn at(&self, k: i64) -> f64 {
        let n = self.grid.n_steps as i64;
        self.values[k.clamp(0, n) as usize]
    }

    /// Clamped evaluation at an arbitrary time (snapped to the nearest node).
    pub fn eval(&self, t: f64) -> f64 {
        self.values[self.grid.snap(t)]
    }

    pub fn same_grid(&self, other: &SamplePath) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch(
                self.grid.n_steps(),
                other.grid.n_steps(),
            ));
        }
        Ok(())
    }

    /// Node-wise sum with a shared grid.
    pub fn add(&self, other: &SamplePath, label: impl Into<String>) -> Result<SamplePath> {
        self.same_grid(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + b)
            .collect();
        SamplePath::new(self.grid, values, label)
    }

    pub fn scale(&self, c: f64, label: impl Into<String>) -> SamplePath {
        SamplePath {
            grid: self.grid,
            values: self.values.iter().map(|v| c * v).collect(),
            label: label.into(),
        }
    }

    /// Freezes the path at time `tau` (snapped to the nearest node).
    pub fn stopped(&self, tau: f64) -> SamplePath {
        let k = self.grid.snap(tau);
        let mut values = self.values.clone();
        let frozen = values[k];
        for v in values.iter_mut().skip(k + 1) {
            *v = frozen;
        }
        SamplePath {
            grid: self.grid,
            values,
            label: format!("{}|stop", self.label),
        }
    }

    /// Shifted path `t -> X_{(tau + t) ^ 1}` on the same grid, `tau` snapped.
    pub fn shifted(&self, tau: f64) -> SamplePath {
        let k = self.grid.snap(tau) as i64;
        let values = (0..self.grid.n_nodes() as i64)
            .map(|j| self.at(k + j))
            .collect();
        SamplePath {
            grid: self.grid,
            values,
            label: format!("{}|shift", self.label),
        }
    }

    /// Writes the path as CSV `t,value` rows at full double precision.
    /// `header_comments` lines are emitted first, each prefixed with `#`.
    pub fn write_csv<W: Write>(&self, mut w: W, header_comments: &[String]) -> Result<()> {
        for line in header_comments {
            writeln!(w, "# {line}")?;
        }
        writeln!(w, "t,value")?;
        for (k, v) in self.values.iter().enumerate() {
            writeln!(w, "{:.17e},{:.17e}", self.grid.node(k), v)?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>, header_comments: &[String]) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(f), header_comments)
    }

    /// Reads a `t,value` CSV written by [`Self::write_csv`]; the grid size is
    /// recovered from the row count.
    pub fn read_csv<R: Read>(r: R, label: impl Into<String>) -> Result<SamplePath> {
        let reader = BufReader::new(r);
        let mut values = Vec::new();
        let mut saw_header = false;
        for line in reader.lines() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if !saw_header {
                if line != "t,value" {
                    return Err(Error::Format(format!("expected 't,value' header, got '{line}'")));
                }
                saw_header = true;
                continue;
            }
            let (_, v) = line
                .split_once(',')
                .ok_or_else(|| Error::Format(format!("bad CSV row '{line}'")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|e| Error::Format(format!("bad value in '{line}': {e}")))?;
            values.push(v);
        }
        if values.len() < 3 {
            return Err(Error::Format("too few rows".into()));
        }
        let grid = Grid::new(values.len() - 1)?;
        SamplePath::new(grid, values, label)
    }

    pub fn load_csv(path: impl AsRef<Path>, label: impl Into<String>) -> Result<SamplePath> {
        let f = std::fs::File::open(path)?;
        SamplePath::read_csv(f, label)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_nodes() {
        let g = Grid::new(4).unwrap();
        let nodes: Vec<f64> = g.nodes().collect();
        assert_eq!(nodes, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        let g2 = Grid::new(2).unwrap();
        assert_eq!(g2.nodes().collect::<Vec<_>>(), vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn grid_rejects_non_power_of_two() {
        assert!(matches!(Grid::new(3), Err(Error::BadGridSize(3))));
        assert!(matches!(Grid::new(1), Err(Error::BadGridSize(1))));
        assert!(matches!(Grid::new(0), Err(Error::BadGridSize(0))));
    }

    #[test]
    fn clamp_convention() {
        let g = Grid::new(4).unwrap();
        let p = SamplePath::new(g, vec![1.0, 2.0, 3.0, 4.0, 5.0], "p").unwrap();
        assert_eq!(p.at(-3), 1.0);
        assert_eq!(p.at(100), 5.0);
        assert_eq!(p.eval(-0.5), 1.0);
        assert_eq!(p.eval(2.0), 5.0);
    }

    #[test]
    fn stop_and_shift() {
        let g = Grid::new(4).unwrap();
        let p = SamplePath::new(g, vec![0.0, 1.0, 2.0, 3.0, 4.0], "p").unwrap();
        assert_eq!(p.stopped(1.0).values(), p.values());
        assert_eq!(p.stopped(0.0).values(), &[0.0; 5]);
        assert_eq!(p.stopped(0.5).values(), &[0.0, 1.0, 2.0, 2.0, 2.0]);
        assert_eq!(p.shifted(0.0).values(), p.values());
        // beyond 1 the shift clamps at X_1
        assert_eq!(p.shifted(0.5).values(), &[2.0, 3.0, 4.0, 4.0, 4.0]);
        // stop(shift(x, tau), 0) is the constant X_tau
        let s = p.shifted(0.75).stopped(0.0);
        assert_eq!(s.values(), &[3.0; 5]);
    }

    #[test]
    fn eps_alignment() {
        let g = Grid::new(16).unwrap();
        assert_eq!(g.eps_to_steps(0.25).unwrap(), 4);
        assert!(g.eps_to_steps(0.1).is_err());
    }

    #[test]
    fn csv_roundtrip() {
        let g = Grid::new(4).unwrap();
        let p = SamplePath::new(g, vec![0.0, 0.1, -0.25, 1.0 / 3.0, 4.0], "p").unwrap();
        let mut buf = Vec::new();
        p.write_csv(&mut buf, &["seed=7".into()]).unwrap();
        let q = SamplePath::read_csv(&buf[..], "q").unwrap();
        assert_eq!(p.values(), q.values());
    }
}
