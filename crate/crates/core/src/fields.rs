//! Cartesian grid on the reference box, cell-centred state storage, discrete
//! differential operators and snapshot / time-series output.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::scalar::{Point, Real};

/// Minimum number of cells per axis.
pub const MIN_CELLS: usize = 8;

/// Uniform Cartesian grid on the box `B = [lo, hi]` in one or two dimensions.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid<T> {
    dim: usize,
    cells: [usize; 2],
    lo: Point<T>,
    hi: Point<T>,
    h: T,
}

impl<T: Real> Grid<T> {
    pub fn new_1d(lo: T, hi: T, n: usize) -> Result<Self> {
        Self::new(1, [n, 1], [lo, T::zero()], [hi, T::zero()])
    }

    pub fn new_2d(lo: Point<T>, hi: Point<T>, n: [usize; 2]) -> Result<Self> {
        Self::new(2, n, lo, hi)
    }

    fn new(dim: usize, cells: [usize; 2], lo: Point<T>, hi: Point<T>) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::InvalidArgument(format!("grid dimension {dim} not in {{1, 2}}")));
        }
        for axis in 0..dim {
            if cells[axis] < MIN_CELLS {
                return Err(Error::InvalidArgument(format!(
                    "grid needs at least {MIN_CELLS} cells per axis, got {}",
                    cells[axis]
                )));
            }
            if !(hi[axis] > lo[axis]) {
                return Err(Error::InvalidArgument("grid extent must be positive".into()));
            }
        }
        let h = (hi[0] - lo[0]) / T::from_usize(cells[0]).unwrap();
        if dim == 2 {
            let hy = (hi[1] - lo[1]) / T::from_usize(cells[1]).unwrap();
            if ((hy - h) / h).abs() > T::lit(1e-10) {
                return Err(Error::InvalidArgument("grid spacing must be uniform across axes".into()));
            }
        }
        Ok(Self { dim, cells, lo, hi, h })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn cells(&self) -> [usize; 2] {
        self.cells
    }

    #[inline]
    pub fn lo(&self) -> Point<T> {
        self.lo
    }

    #[inline]
    pub fn hi(&self) -> Point<T> {
        self.hi
    }

    /// Grid spacing.
    #[inline]
    pub fn h(&self) -> T {
        self.h
    }

    /// Cell volume `h^d`.
    #[inline]
    pub fn cell_volume(&self) -> T {
        self.h.powi(self.dim as i32)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.cells[0] * self.cells[1]
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i + self.cells[0] * j
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> (usize, usize) {
        (idx % self.cells[0], idx / self.cells[0])
    }

    pub fn center(&self, idx: usize) -> Point<T> {
        let (i, j) = self.coords(idx);
        let half = T::lit(0.5);
        let x = self.lo[0] + (T::from_usize(i).unwrap() + half) * self.h;
        let y = if self.dim == 2 {
            self.lo[1] + (T::from_usize(j).unwrap() + half) * self.h
        } else {
            T::zero()
        };
        [x, y]
    }

    /// True when the cell touches `∂B`.
    pub fn is_boundary_cell(&self, idx: usize) -> bool {
        let (i, j) = self.coords(idx);
        i == 0
            || i + 1 == self.cells[0]
            || (self.dim == 2 && (j == 0 || j + 1 == self.cells[1]))
    }

    pub fn contains(&self, x: Point<T>) -> bool {
        (0..self.dim).all(|a| x[a] >= self.lo[a] && x[a] <= self.hi[a])
    }

    /// Distance from `x` to the nearest face of `∂B` (negative outside).
    pub fn distance_to_boundary(&self, x: Point<T>) -> T {
        (0..self.dim)
            .map(|a| (x[a] - self.lo[a]).min(self.hi[a] - x[a]))
            .fold(T::infinity(), T::min)
    }

    /// Neighbour of `idx` along `axis` in direction `dir` (±1), if inside.
    #[inline]
    pub fn neighbor(&self, idx: usize, axis: usize, forward: bool) -> Option<usize> {
        let (i, j) = self.coords(idx);
        let (c, n) = if axis == 0 { (i, self.cells[0]) } else { (j, self.cells[1]) };
        if forward {
            (c + 1 < n).then(|| if axis == 0 { idx + 1 } else { idx + self.cells[0] })
        } else {
            (c > 0).then(|| if axis == 0 { idx - 1 } else { idx - self.cells[0] })
        }
    }

    /// Cell centres, in storage order.
    pub fn centers(&self) -> Vec<Point<T>> {
        (0..self.len()).map(|k| self.center(k)).collect()
    }

    /// Sum over cells in storage order multiplied by the cell volume.
    pub fn integrate(&self, values: impl IntoIterator<Item = T>) -> T {
        ordered_sum(values) * self.cell_volume()
    }
}

/// Fixed-order summation; every global reduction goes through here.
#[inline]
pub fn ordered_sum<T: Real>(values: impl IntoIterator<Item = T>) -> T {
    values.into_iter().fold(T::zero(), |acc, v| acc + v)
}

/// Ghost-cell treatment at `∂B`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Boundary {
    /// Odd reflection: the field vanishes on the boundary face.
    NoSlip,
    /// Even reflection: zero normal derivative.
    Neumann,
    /// Linear extrapolation from the two nearest interior cells.
    Extrapolate,
}

#[inline]
fn ghost<T: Real>(inner: T, second: T, bc: Boundary) -> T {
    match bc {
        Boundary::NoSlip => -inner,
        Boundary::Neumann => inner,
        Boundary::Extrapolate => inner + inner - second,
    }
}

/// Centred difference of `f` along `axis` at cell `idx`, with ghost cells.
#[inline]
pub fn centered_diff<T: Real>(f: &[T], grid: &Grid<T>, idx: usize, axis: usize, bc: Boundary) -> T {
    let fwd = grid.neighbor(idx, axis, true);
    let bwd = grid.neighbor(idx, axis, false);
    let c = f[idx];
    let (r, l) = match (fwd, bwd) {
        (Some(r), Some(l)) => (f[r], f[l]),
        (Some(r), None) => (f[r], ghost(c, f[r], bc)),
        (None, Some(l)) => (ghost(c, f[l], bc), f[l]),
        (None, None) => (c, c),
    };
    (r - l) / (grid.h() + grid.h())
}

/// Centred second-order divergence with no-slip ghost cells.
pub fn divergence<T: Real>(field: &[Point<T>], grid: &Grid<T>) -> Vec<T> {
    let comps: Vec<Vec<T>> = (0..grid.dim())
        .map(|a| field.iter().map(|v| v[a]).collect())
        .collect();
    (0..grid.len())
        .map(|k| {
            ordered_sum((0..grid.dim()).map(|a| centered_diff(&comps[a], grid, k, a, Boundary::NoSlip)))
        })
        .collect()
}

/// Centred second-order gradient with linearly extrapolated ghost cells.
pub fn gradient<T: Real>(field: &[T], grid: &Grid<T>) -> Vec<Point<T>> {
    gradient_with(field, grid, Boundary::Extrapolate)
}

pub fn gradient_with<T: Real>(field: &[T], grid: &Grid<T>, bc: Boundary) -> Vec<Point<T>> {
    (0..grid.len())
        .map(|k| {
            let mut g = [T::zero(); 2];
            for (a, ga) in g.iter_mut().enumerate().take(grid.dim()) {
                *ga = centered_diff(field, grid, k, a, bc);
            }
            g
        })
        .collect()
}

/// Conserved cell-centred state: density, momentum and internal energy density.
#[derive(Clone, Debug, PartialEq)]
pub struct State {
    pub time: f64,
    pub rho: Vec<f64>,
    pub momentum: Vec<Point<f64>>,
    pub rhoe: Vec<f64>,
}

impl State {
    pub fn zeros(cells: usize) -> Self {
        Self {
            time: 0.0,
            rho: vec![0.0; cells],
            momentum: vec![[0.0; 2]; cells],
            rhoe: vec![0.0; cells],
        }
    }

    pub fn len(&self) -> usize {
        self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }

    /// Total mass `Σ ρ h^d`.
    pub fn mass(&self, grid: &Grid<f64>) -> f64 {
        grid.integrate(self.rho.iter().copied())
    }

    /// First non-finite entry, reported as `(field, cell)`.
    pub fn find_non_finite(&self) -> Option<(&'static str, usize)> {
        if let Some(k) = self.rho.iter().position(|v| !v.is_finite()) {
            return Some(("rho", k));
        }
        if let Some(k) = self.momentum.iter().position(|v| !(v[0].is_finite() && v[1].is_finite())) {
            return Some(("momentum", k));
        }
        self.rhoe.iter().position(|v| !v.is_finite()).map(|k| ("rhoe", k))
    }
}

const SNAPSHOT_MAGIC: &str = "NSF-SNAPSHOT 1";

/// Writes a snapshot: a text header terminated by `end`, followed by
/// little-endian `f64` blocks (`rho`, momentum components, `rhoe`) in storage order.
pub fn write_snapshot(state: &State, grid: &Grid<f64>, path: &Path) -> Result<()> {
    if state.len() != grid.len() {
        return Err(Error::Snapshot("state does not match grid".into()));
    }
    let mut out = BufWriter::new(fs::File::create(path)?);
    let [nx, ny] = grid.cells();
    writeln!(out, "{SNAPSHOT_MAGIC}")?;
    writeln!(out, "dim {}", grid.dim())?;
    writeln!(out, "cells {nx} {ny}")?;
    writeln!(out, "lo {:?} {:?}", grid.lo()[0], grid.lo()[1])?;
    writeln!(out, "hi {:?} {:?}", grid.hi()[0], grid.hi()[1])?;
    writeln!(out, "time {:?}", state.time)?;
    let mut names = vec!["rho"];
    names.extend(["m0", "m1"].iter().take(grid.dim()));
    names.push("rhoe");
    writeln!(out, "fields {}", names.join(" "))?;
    writeln!(out, "end")?;
    let mut put = |vals: &mut dyn Iterator<Item = f64>| -> std::io::Result<()> {
        for v in vals {
            out.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    };
    put(&mut state.rho.iter().copied())?;
    for a in 0..grid.dim() {
        put(&mut state.momentum.iter().map(|m| m[a]))?;
    }
    put(&mut state.rhoe.iter().copied())?;
    out.flush()?;
    Ok(())
}

pub fn read_snapshot(path: &Path) -> Result<(State, Grid<f64>)> {
    let bytes = fs::read(path)?;
    let mut pos = 0usize;
    let mut next_line = || -> Result<String> {
        let rest = &bytes[pos..];
        let end = rest
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| Error::Snapshot("truncated header".into()))?;
        pos += end + 1;
        String::from_utf8(rest[..end].to_vec()).map_err(|_| Error::Snapshot("header is not UTF-8".into()))
    };
    if next_line()? != SNAPSHOT_MAGIC {
        return Err(Error::Snapshot("bad magic line".into()));
    }
    let mut dim = 0usize;
    let mut cells = [0usize; 2];
    let mut lo = [0.0; 2];
    let mut hi = [0.0; 2];
    let mut time = 0.0;
    let mut fields = Vec::new();
    loop {
        let line = next_line()?;
        let mut it = line.split_whitespace();
        let key = it.next().unwrap_or("");
        let vals: Vec<&str> = it.collect();
        let bad = || Error::Snapshot(format!("malformed header line `{line}`"));
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad());
        match key {
            "end" => break,
            "dim" => dim = vals.first().ok_or_else(bad)?.parse().map_err(|_| bad())?,
            "cells" if vals.len() == 2 => {
                cells = [vals[0].parse().map_err(|_| bad())?, vals[1].parse().map_err(|_| bad())?]
            }
            "lo" if vals.len() == 2 => lo = [num(vals[0])?, num(vals[1])?],
            "hi" if vals.len() == 2 => hi = [num(vals[0])?, num(vals[1])?],
            "time" if vals.len() == 1 => time = num(vals[0])?,
            "fields" => fields = vals.iter().map(|s| s.to_string()).collect(),
            _ => return Err(bad()),
        }
    }
    let grid = match dim {
        1 => Grid::new_1d(lo[0], hi[0], cells[0])?,
        2 => Grid::new_2d(lo, hi, cells)?,
        _ => return Err(Error::Snapshot(format!("unsupported dimension {dim}"))),
    };
    if dim == 1 && cells[1] != 1 {
        return Err(Error::Snapshot("1D snapshot must have one row".into()));
    }
    if fields.len() != dim + 2 {
        return Err(Error::Snapshot("field list does not match dimension".into()));
    }
    let n = grid.len();
    let payload = &bytes[pos..];
    if payload.len() != 8 * n * fields.len() {
        return Err(Error::Snapshot(format!(
            "shape mismatch: expected {} payload bytes, found {}",
            8 * n * fields.len(),
            payload.len()
        )));
    }
    let mut blocks: Vec<Vec<f64>> = Vec::with_capacity(fields.len());
    for (f, name) in fields.iter().enumerate() {
        let block: Vec<f64> = payload[8 * n * f..8 * n * (f + 1)]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        if let Some(k) = block.iter().position(|v| !v.is_finite()) {
            return Err(Error::Snapshot(format!("non-finite value in field `{name}` at cell {k}")));
        }
        blocks.push(block);
    }
    let mut state = State::zeros(n);
    state.time = time;
    state.rho = blocks.remove(0);
    for a in 0..dim {
        let comp = blocks.remove(0);
        for (m, v) in state.momentum.iter_mut().zip(comp) {
            m[a] = v;
        }
    }
    state.rhoe = blocks.remove(0);
    Ok((state, grid))
}

/// CSV time-series writer with a fixed column order.
pub struct CsvWriter<W: Write> {
    out: W,
    columns: usize,
}

impl<W: Write> CsvWriter<W> {
    pub fn new(mut out: W, header: &[&str]) -> Result<Self> {
        writeln!(out, "{}", header.join(","))?;
        Ok(Self { out, columns: header.len() })
    }

    pub fn row(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.columns {
            return Err(Error::InvalidArgument(format!(
                "csv row has {} values, header has {}",
                values.len(),
                self.columns
            )));
        }
        let line: Vec<String> = values.iter().map(|v| format!("{v:e}")).collect();
        writeln!(self.out, "{}", line.join(","))?;
        Ok(())
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type Grid = super::Grid<f64>;

    fn grid2(n: usize) -> Grid {
        Grid::new_2d([0.0, 0.0], [1.0, 1.0], [n, n]).unwrap()
    }

    #[test]
    fn rejects_coarse_grid() {
        assert!(Grid::new_1d(0.0, 1.0, 4).is_err());
    }

    #[test]
    fn divergence_of_constant_is_zero_in_interior() {
        let g = grid2(16);
        let f = vec![[0.3, -1.2]; g.len()];
        let d = divergence(&f, &g);
        for k in (0..g.len()).filter(|&k| !g.is_boundary_cell(k)) {
            assert_eq!(d[k], 0.0);
        }
    }

    #[test]
    fn divergence_of_identity_is_two() {
        let g = grid2(16);
        let f: Vec<_> = g.centers();
        let d = divergence(&f, &g);
        for k in (0..g.len()).filter(|&k| !g.is_boundary_cell(k)) {
            assert!((d[k] - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_of_ramp_is_exact_everywhere() {
        let g = Grid::new_1d(0.0, 2.0, 32).unwrap();
        let f: Vec<f64> = g.centers().iter().map(|x| 3.0 * x[0] - 1.0).collect();
        for v in gradient(&f, &g) {
            assert!((v[0] - 3.0).abs() < 1e-12);
        }
        let c = vec![4.0; g.len()];
        assert!(gradient(&c, &g).iter().all(|v| v[0] == 0.0));
    }

    fn sine_error(n: usize, use_div: bool) -> f64 {
        let g = Grid::new_1d(0.0, 1.0, n).unwrap();
        let xs = g.centers();
        let approx: Vec<f64> = if use_div {
            let f: Vec<_> = xs.iter().map(|x| [x[0].sin(), 0.0]).collect();
            divergence(&f, &g)
        } else {
            let f: Vec<f64> = xs.iter().map(|x| x[0].sin()).collect();
            gradient(&f, &g).iter().map(|v| v[0]).collect()
        };
        (0..g.len())
            .filter(|&k| !g.is_boundary_cell(k))
            .map(|k| (approx[k] - xs[k][0].cos()).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn operators_are_second_order_on_sine() {
        for use_div in [true, false] {
            let e: Vec<f64> = [32, 64, 128].iter().map(|&n| sine_error(n, use_div)).collect();
            for w in e.windows(2) {
                assert!((w[0] / w[1]).log2() >= 1.9, "errors {e:?}");
            }
        }
    }

    #[test]
    fn csv_rejects_wrong_width() {
        let mut w = CsvWriter::new(Vec::new(), &["t", "M"]).unwrap();
        w.row(&[0.0, 1.0]).unwrap();
        assert!(w.row(&[0.0]).is_err());
        let text = String::from_utf8(w.into_inner()).unwrap();
        assert!(text.starts_with("t,M\n"));
    }
}
