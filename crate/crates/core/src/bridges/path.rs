use std::io::Write;

use crate::error::{Error, Result};

/// Closed time grid `0 = s_0 < ... < s_n = t`.
///
/// The time-to-go `t - s_i` is stored alongside each time and never
/// recomputed, so [`TimeGrid::reversed`] swaps the two columns and is an exact
/// involution.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    times: Vec<f64>,
    time_to_go: Vec<f64>,
}

impl TimeGrid {
    /// `times` must start at 0, end at `t` and increase strictly. A last
    /// point within `1e-12 t` of `t` is snapped onto it.
    pub fn new(mut times: Vec<f64>, t: f64) -> Result<Self> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::Domain(format!("horizon must be positive, got {t}")));
        }
        if times.len() < 2 || times[0] != 0.0 {
            return Err(Error::TimeOrdering("grid must start at 0 and have at least two points".into()));
        }
        let last = times.len() - 1;
        if (times[last] - t).abs() > 1e-12 * t {
            return Err(Error::TimeOrdering(format!("grid ends at {} instead of {t}", times[last])));
        }
        times[last] = t;
        if let Some(w) = times.windows(2).find(|w| !(w[0] < w[1])) {
            return Err(Error::TimeOrdering(format!("grid not increasing at {} -> {}", w[0], w[1])));
        }
        let time_to_go = times.iter().map(|s| t - s).collect();
        Ok(TimeGrid { times, time_to_go })
    }

    /// `n` equal intervals.
    pub fn uniform(n: usize, t: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("uniform grid needs at least one interval".into()));
        }
        let times = (0..=n).map(|i| if i == n { t } else { t * i as f64 / n as f64 }).collect();
        Self::new(times, t)
    }

    /// `2^level + 1` points.
    pub fn dyadic(level: u32, t: f64) -> Result<Self> {
        Self::uniform(1usize << level, t)
    }

    /// A point at `first` followed by `n` equal intervals on `[first, t]`.
    /// Used to read off the sign of a path immediately after time 0.
    pub fn with_first_step(first: f64, n: usize, t: f64) -> Result<Self> {
        if !(first > 0.0 && first < t) || n == 0 {
            return Err(Error::Domain(format!("first step {first} must lie in (0, {t})")));
        }
        let mut times = vec![0.0];
        times.extend((0..=n).map(|i| first + (t - first) * i as f64 / n as f64));
        Self::new(times, t)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn time_to_go(&self) -> &[f64] {
        &self.time_to_go
    }

    pub fn horizon(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Index of the grid point at time `s` (to within `1e-12 t`).
    pub fn index_of(&self, s: f64) -> Result<usize> {
        let tol = 1e-12 * self.horizon();
        self.times.iter().position(|&u| (u - s).abs() <= tol).ok_or(Error::MissingGridPoint(s))
    }

    pub fn reversed(&self) -> TimeGrid {
        let mut times = self.time_to_go.clone();
        times.reverse();
        let mut time_to_go = self.times.clone();
        time_to_go.reverse();
        TimeGrid { times, time_to_go }
    }

    /// Grid of the remaining path after time `s`, re-based to start at 0.
    pub fn shifted(&self, s: f64) -> Result<TimeGrid> {
        let i = self.index_of(s)?;
        if i + 1 >= self.len() {
            return Err(Error::Domain("cannot shift to the horizon".into()));
        }
        let base = self.times[i];
        let times = self.times[i..].iter().map(|u| u - base).collect();
        Ok(TimeGrid { times, time_to_go: self.time_to_go[i..].to_vec() })
    }
}

/// One path on a [`TimeGrid`]. `pinned` records that the endpoints are the
/// bridge's `x` and `y` exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSample {
    grid: TimeGrid,
    values: Vec<f64>,
    pinned: bool,
}

impl PathSample {
    pub fn new(grid: TimeGrid, values: Vec<f64>, pinned: bool) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!("{} values on a grid of {} points", values.len(), grid.len())));
        }
        Ok(PathSample { grid, values, pinned })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn times(&self) -> &[f64] {
        self.grid.times()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn pinned(&self) -> bool {
        self.pinned
    }

    pub fn horizon(&self) -> f64 {
        self.grid.horizon()
    }

    pub fn value_at(&self, s: f64) -> Result<f64> {
        Ok(self.values[self.grid.index_of(s)?])
    }

    /// Time-reversed path `s -> X_{t-s}`.
    pub fn reversed(&self) -> PathSample {
        let mut values = self.values.clone();
        values.reverse();
        PathSample { grid: self.grid.reversed(), values, pinned: self.pinned }
    }

    /// The path after time `s`, re-based to start at 0 (the shift `θ_s`).
    pub fn shifted(&self, s: f64) -> Result<PathSample> {
        let i = self.grid.index_of(s)?;
        let grid = self.grid.shifted(s)?;
        Ok(PathSample { grid, values: self.values[i..].to_vec(), pinned: false })
    }
}

/// Reverses `path`, which must live on `[0, t]`.
pub fn reverse(path: &PathSample, t: f64) -> Result<PathSample> {
    if (path.horizon() - t).abs() > 1e-12 * t.abs() {
        return Err(Error::Domain(format!("path horizon {} is not {t}", path.horizon())));
    }
    Ok(path.reversed())
}

/// Many paths on one grid, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PathPool {
    grid: TimeGrid,
    values: Vec<f64>,
    pinned: bool,
}

impl PathPool {
    pub fn from_rows(grid: TimeGrid, rows: Vec<Vec<f64>>, pinned: bool) -> Result<Self> {
        let m = grid.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != m) {
            return Err(Error::GridMismatch(format!("row of {} values on {m} grid points", bad.len())));
        }
        Ok(PathPool { grid, values: rows.concat(), pinned })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn pinned(&self) -> bool {
        self.pinned
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let m = self.grid.len();
        &self.values[i * m..(i + 1) * m]
    }

    pub fn rows(&self) -> Vec<&[f64]> {
        self.values.chunks_exact(self.grid.len()).collect()
    }

    pub fn path(&self, i: usize) -> PathSample {
        PathSample { grid: self.grid.clone(), values: self.row(i).to_vec(), pinned: self.pinned }
    }

    /// Values of every path at grid index `j`.
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.values.chunks_exact(self.grid.len()).map(|r| r[j]).collect()
    }

    /// Values of every path at time `s`.
    pub fn column_at(&self, s: f64) -> Result<Vec<f64>> {
        Ok(self.column(self.grid.index_of(s)?))
    }

    pub fn reversed(&self) -> PathPool {
        let m = self.grid.len();
        let mut values = self.values.clone();
        for row in values.chunks_exact_mut(m) {
            row.reverse();
        }
        PathPool { grid: self.grid.reversed(), values, pinned: self.pinned }
    }

    /// Long-format CSV with header `draw_id,time,value`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "draw_id,time,value")?;
        for (i, row) in self.values.chunks_exact(self.grid.len()).enumerate() {
            for (s, v) in self.grid.times().iter().zip(row) {
                writeln!(out, "{i},{s},{v}")?;
            }
        }
        Ok(())
    }
}
