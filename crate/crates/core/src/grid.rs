//! Cell partition of feature space and the distance/density thresholds
//! derived from it.
//!
//! Each dimension's `[min, max]` range is cut into equal-width sections; a
//! point's cell is the tuple of its section indices. A cell's neighborhood is
//! the hypercube of cells whose indices differ by at most one in every
//! dimension. All per-point work is restricted to neighborhoods.

use std::collections::HashMap;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::dataset::{euclidean, Dataset};
use crate::error::{Error, Result};
use crate::exec::Execution;

pub const DEFAULT_TARGET_FRACTION: f64 = 0.075;

/// Section indices of one cell, one entry per dimension.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellId(pub Vec<usize>);

#[derive(Debug, Clone)]
pub struct Cell {
    pub id: CellId,
    pub members: Vec<usize>,
}

#[derive(Debug)]
pub struct Grid {
    sections: Vec<usize>,
    ranges: Vec<(f64, f64)>,
    degenerate_dims: Vec<usize>,
    cells: Vec<Cell>,
    lookup: HashMap<CellId, usize>,
    point_cell: Vec<usize>,
    neighbors: OnceLock<Vec<Vec<usize>>>,
}

/// Number of equal-width sections per dimension for a target fraction of
/// points per section, clamped to `[1, n_points]`.
pub fn sections_for(target_fraction: f64, n_points: usize) -> usize {
    let m = (1.0 / target_fraction + 1e-9).floor() as usize;
    m.clamp(1, n_points.max(1))
}

/// Partitions the dataset into cells.
///
/// A dimension with `min == max` gets a single section and is reported in
/// [`Grid::degenerate_dims`].
pub fn build_grid(data: &Dataset, target_fraction: f64) -> Result<Grid> {
    if !(target_fraction > 0.0 && target_fraction <= 1.0) {
        return Err(Error::Domain(format!(
            "target_fraction must lie in (0, 1], got {target_fraction}"
        )));
    }
    let ranges = data.ranges();
    let m = sections_for(target_fraction, data.len());
    let mut degenerate_dims = Vec::new();
    let sections: Vec<usize> = ranges
        .iter()
        .enumerate()
        .map(|(i, &(lo, hi))| {
            if hi > lo {
                m
            } else {
                degenerate_dims.push(i);
                1
            }
        })
        .collect();

    let mut by_cell: std::collections::BTreeMap<CellId, Vec<usize>> = Default::default();
    for (i, p) in data.points().enumerate() {
        by_cell.entry(bin(p, &ranges, &sections)).or_default().push(i);
    }
    let cells: Vec<Cell> = by_cell
        .into_iter()
        .map(|(id, members)| Cell { id, members })
        .collect();
    let lookup: HashMap<CellId, usize> = cells
        .iter()
        .enumerate()
        .map(|(ci, c)| (c.id.clone(), ci))
        .collect();
    let mut point_cell = vec![0; data.len()];
    for (ci, c) in cells.iter().enumerate() {
        for &p in &c.members {
            point_cell[p] = ci;
        }
    }
    Ok(Grid {
        sections,
        ranges,
        degenerate_dims,
        cells,
        lookup,
        point_cell,
        neighbors: OnceLock::new(),
    })
}

fn bin(p: &[f64], ranges: &[(f64, f64)], sections: &[usize]) -> CellId {
    CellId(
        p.iter()
            .zip(ranges)
            .zip(sections)
            .map(|((&v, &(lo, hi)), &m)| {
                if m == 1 {
                    0
                } else {
                    // closed upper edge: v == hi lands in section m - 1
                    (((v - lo) / (hi - lo) * m as f64).floor() as usize).min(m - 1)
                }
            })
            .collect(),
    )
}

impl Grid {
    pub fn sections(&self) -> &[usize] {
        &self.sections
    }

    pub fn ranges(&self) -> &[(f64, f64)] {
        &self.ranges
    }

    pub fn degenerate_dims(&self) -> &[usize] {
        &self.degenerate_dims
    }

    /// Occupied cells in lexicographic order of their ids.
    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn cell_of(&self, point: usize) -> &CellId {
        &self.cells[self.point_cell[point]].id
    }

    pub fn cell_index_of(&self, point: usize) -> usize {
        self.point_cell[point]
    }

    pub fn members(&self, cell: &CellId) -> &[usize] {
        self.lookup
            .get(cell)
            .map_or(&[], |&ci| self.cells[ci].members.as_slice())
    }

    /// Smallest section width over non-degenerate dimensions.
    pub fn min_cell_side(&self) -> f64 {
        self.ranges
            .iter()
            .zip(&self.sections)
            .filter(|((lo, hi), _)| hi > lo)
            .map(|(&(lo, hi), &m)| (hi - lo) / m as f64)
            .fold(f64::INFINITY, f64::min)
    }

    /// All cells (occupied or not) within the radius-1 hypercube around
    /// `cell`, including `cell` itself, clipped at the grid boundary.
    pub fn neighbor_cells(&self, cell: &CellId) -> Vec<CellId> {
        let mut out = vec![Vec::with_capacity(cell.0.len())];
        for (&c, &m) in cell.0.iter().zip(&self.sections) {
            let lo = c.saturating_sub(1);
            let hi = (c + 1).min(m - 1);
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    (lo..=hi).map(move |v| {
                        let mut next = prefix.clone();
                        next.push(v);
                        next
                    })
                })
                .collect();
        }
        out.into_iter().map(CellId).collect()
    }

    /// Indices (into [`Grid::cells`]) of the occupied neighbors of each
    /// occupied cell.
    pub fn occupied_neighbors(&self) -> &[Vec<usize>] {
        self.neighbors.get_or_init(|| {
            let q = self.sections.len();
            let enumerable = 3f64.powi(q as i32) <= self.cells.len() as f64;
            self.cells
                .iter()
                .map(|c| {
                    if enumerable {
                        let mut v: Vec<usize> = self
                            .neighbor_cells(&c.id)
                            .iter()
                            .filter_map(|id| self.lookup.get(id).copied())
                            .collect();
                        v.sort_unstable();
                        v
                    } else {
                        self.cells
                            .iter()
                            .enumerate()
                            .filter(|(_, o)| chebyshev_le_one(&c.id, &o.id))
                            .map(|(oi, _)| oi)
                            .collect()
                    }
                })
                .collect()
        })
    }

    /// Every point that shares a neighborhood with `point`, including itself.
    pub fn neighborhood_points(&self, point: usize) -> impl Iterator<Item = usize> + '_ {
        self.occupied_neighbors()[self.point_cell[point]]
            .iter()
            .flat_map(move |&ci| self.cells[ci].members.iter().copied())
    }
}

fn chebyshev_le_one(a: &CellId, b: &CellId) -> bool {
    a.0.iter().zip(&b.0).all(|(&x, &y)| x.abs_diff(y) <= 1)
}

/// How point densities are counted.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityMode {
    /// Only points in the neighbor cells are considered.
    #[default]
    Neighborhood,
    /// All pairs; a validation fallback.
    Exact,
}

/// Logarithm used in the density threshold denominator.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LogBase {
    #[default]
    Natural,
    Two,
    Ten,
}

impl LogBase {
    pub fn log(self, x: f64) -> f64 {
        match self {
            LogBase::Natural => x.ln(),
            LogBase::Two => x.log2(),
            LogBase::Ten => x.log10(),
        }
    }
}

/// `a(p)` per point and `d(c)` per occupied cell. `None` marks points with no
/// other point in their neighborhood and cells made only of such points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceProfile {
    pub point_avg: Vec<Option<f64>>,
    pub cell_avg: Vec<Option<f64>>,
}

/// `n(p)` per point (self included) and `n(c)` per occupied cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityCounts {
    pub point: Vec<usize>,
    pub cell: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityProfile {
    pub distance: DistanceProfile,
    pub density: DensityCounts,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub rt: f64,
    pub dt: f64,
    pub coef_rt: f64,
    pub coef_dt: f64,
}

fn check_coef(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be positive and finite, got {v}")))
    }
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Distance threshold: the mean over cells of the mean neighborhood distance,
/// divided by `q * coef_rt`. A point's own zero self-distance is excluded.
pub fn compute_rt(
    grid: &Grid,
    data: &Dataset,
    coef_rt: f64,
    exec: Execution,
) -> Result<(f64, DistanceProfile)> {
    check_coef("coef_rt", coef_rt)?;
    grid.occupied_neighbors();
    let point_avg = exec.map(data.len(), |p| {
        let origin = data.point(p);
        mean(
            grid.neighborhood_points(p)
                .filter(|&o| o != p)
                .map(|o| euclidean(origin, data.point(o))),
        )
    });
    let cell_avg: Vec<Option<f64>> = grid
        .cells()
        .iter()
        .map(|c| mean(c.members.iter().filter_map(|&p| point_avg[p])))
        .collect();
    let overall = mean(cell_avg.iter().flatten().copied()).ok_or(Error::DegenerateGeometry)?;
    let rt = overall / (data.dim() as f64 * coef_rt);
    Ok((rt, DistanceProfile { point_avg, cell_avg }))
}

/// Counts, for every point, the points within `rt` of it (itself included).
pub fn compute_density(
    grid: &Grid,
    data: &Dataset,
    rt: f64,
    mode: DensityMode,
    exec: Execution,
) -> DensityCounts {
    grid.occupied_neighbors();
    let point = exec.map(data.len(), |p| {
        let origin = data.point(p);
        let within = |o: &usize| euclidean(origin, data.point(*o)) <= rt;
        match mode {
            DensityMode::Neighborhood => grid.neighborhood_points(p).filter(within).count(),
            DensityMode::Exact => (0..data.len()).filter(within).count(),
        }
    });
    let cell = grid
        .cells()
        .iter()
        .map(|c| c.members.iter().map(|&p| point[p] as f64).sum::<f64>() / c.members.len() as f64)
        .collect();
    DensityCounts { point, cell }
}

/// Density threshold: mean cell density divided by `log(N)`, times `coef_dt`.
pub fn compute_dt(
    counts: &DensityCounts,
    n_points: usize,
    coef_dt: f64,
    log_base: LogBase,
) -> Result<f64> {
    check_coef("coef_dt", coef_dt)?;
    if n_points < 3 {
        return Err(Error::DatasetTooSmall(n_points));
    }
    let mean_cell = mean(counts.cell.iter().copied()).unwrap_or(0.0);
    Ok(mean_cell / log_base.log(n_points as f64) * coef_dt)
}

/// Runs [`compute_rt`], [`compute_density`] and [`compute_dt`] in sequence.
pub fn thresholds(
    grid: &Grid,
    data: &Dataset,
    coef_rt: f64,
    coef_dt: f64,
    log_base: LogBase,
    mode: DensityMode,
    exec: Execution,
) -> Result<(Thresholds, DensityProfile)> {
    let (rt, distance) = compute_rt(grid, data, coef_rt, exec)?;
    let density = compute_density(grid, data, rt, mode, exec);
    let dt = compute_dt(&density, data.len(), coef_dt, log_base)?;
    Ok((
        Thresholds {
            rt,
            dt,
            coef_rt,
            coef_dt,
        },
        DensityProfile { distance, density },
    ))
}
