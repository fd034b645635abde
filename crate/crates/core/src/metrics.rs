//! Fidelity and capacity measurements.

use std::fmt;

use rayon::prelude::*;
use thiserror::Error;

use crate::container::StegoContainer;
use crate::mesh_io::Mesh;
use crate::payload::{PayloadError, PublicLayout};
use crate::topology::Strategy;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("vertex counts differ: {0} vs {1}")]
    CountMismatch(usize, usize),
    #[error("point set is empty")]
    Empty,
    #[error("inputs do not come from the same mesh: {0}")]
    Inconsistent(String),
    #[error(transparent)]
    Layout(#[from] PayloadError),
}

/// Signal-to-noise ratio in decibels. Identical meshes have no noise and
/// report [`Snr::Infinite`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Snr {
    Finite(f64),
    Infinite,
}

impl Snr {
    pub fn value(&self) -> Option<f64> {
        match self {
            Snr::Finite(v) => Some(*v),
            Snr::Infinite => None,
        }
    }
}

impl fmt::Display for Snr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Snr::Finite(v) => write!(f, "{v:.2}"),
            Snr::Infinite => f.write_str("inf"),
        }
    }
}

/// `10 log10( sum |v - mean|^2 / sum |v'' - v|^2 )`, means taken per axis
/// over the original vertices.
pub fn snr(original: &Mesh, recovered: &Mesh) -> Result<Snr, MetricsError> {
    let (a, b) = (original.vertices(), recovered.vertices());
    if a.len() != b.len() {
        return Err(MetricsError::CountMismatch(a.len(), b.len()));
    }
    let n = a.len() as f64;
    let mut mean = [0.0; 3];
    for v in a {
        for k in 0..3 {
            mean[k] += v[k];
        }
    }
    let mean = mean.map(|s| s / n);
    let mut signal = 0.0;
    let mut noise = 0.0;
    for (v, r) in a.iter().zip(b) {
        for k in 0..3 {
            signal += (v[k] - mean[k]).powi(2);
            noise += (r[k] - v[k]).powi(2);
        }
    }
    if noise == 0.0 {
        return Ok(Snr::Infinite);
    }
    Ok(Snr::Finite(10.0 * (signal / noise).log10()))
}

fn dist2(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)
}

/// `max_{a in A} min_{b in B} |a - b|` by exhaustive search.
pub fn directed_hausdorff_brute(a: &[[f64; 3]], b: &[[f64; 3]]) -> Result<f64, MetricsError> {
    if a.is_empty() || b.is_empty() {
        return Err(MetricsError::Empty);
    }
    let worst = a
        .par_iter()
        .map(|p| b.iter().map(|q| dist2(p, q)).fold(f64::INFINITY, f64::min))
        .reduce(|| 0.0, f64::max);
    Ok(worst.sqrt())
}

/// Uniform grid over a point set for exact nearest-neighbour queries.
struct Grid<'a> {
    points: &'a [[f64; 3]],
    origin: [f64; 3],
    cell: f64,
    dims: [usize; 3],
    starts: Vec<usize>,
    order: Vec<u32>,
}

impl<'a> Grid<'a> {
    fn new(points: &'a [[f64; 3]]) -> Self {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for p in points {
            for k in 0..3 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        let extent = [0, 1, 2].map(|k| hi[k] - lo[k]);
        let largest = extent.iter().cloned().fold(0.0, f64::max);
        let target_cells = (points.len() / 2).max(1) as f64;
        let cell = if largest > 0.0 {
            let volume: f64 = extent.iter().map(|e| e.max(largest * 1e-3)).product();
            (volume / target_cells).cbrt()
        } else {
            1.0
        };
        // at most ~1000 cells along any axis, so no point is ever clamped
        let cell = cell.max(largest / 1000.0);
        let dims = extent.map(|e| (e / cell).floor() as usize + 1);
        let cell_count = dims[0] * dims[1] * dims[2];
        let mut counts = vec![0usize; cell_count + 1];
        let mut grid = Self {
            points,
            origin: lo,
            cell,
            dims,
            starts: Vec::new(),
            order: Vec::new(),
        };
        let ids: Vec<usize> = points.iter().map(|p| grid.flat(grid.cell_of(p))).collect();
        for &id in &ids {
            counts[id + 1] += 1;
        }
        for i in 1..counts.len() {
            counts[i] += counts[i - 1];
        }
        let mut fill = counts.clone();
        let mut order = vec![0u32; points.len()];
        for (i, &id) in ids.iter().enumerate() {
            order[fill[id]] = i as u32;
            fill[id] += 1;
        }
        grid.starts = counts;
        grid.order = order;
        grid
    }

    fn cell_of(&self, p: &[f64; 3]) -> [usize; 3] {
        [0, 1, 2].map(|k| {
            let c = ((p[k] - self.origin[k]) / self.cell).floor();
            if c <= 0.0 {
                0
            } else {
                (c as usize).min(self.dims[k] - 1)
            }
        })
    }

    fn flat(&self, c: [usize; 3]) -> usize {
        (c[2] * self.dims[1] + c[1]) * self.dims[0] + c[0]
    }

    fn scan_cell(&self, c: [usize; 3], q: &[f64; 3], best: &mut f64) {
        let id = self.flat(c);
        for &i in &self.order[self.starts[id]..self.starts[id + 1]] {
            *best = best.min(dist2(q, &self.points[i as usize]));
        }
    }

    /// Squared distance from `q` to its nearest point.
    fn nearest2(&self, q: &[f64; 3]) -> f64 {
        let center = self.cell_of(q);
        let max_ring = self.dims.iter().max().copied().unwrap_or(1);
        let mut best = f64::INFINITY;
        for ring in 0..=max_ring {
            let lo = center.map(|c| c as isize - ring as isize);
            let hi = center.map(|c| c as isize + ring as isize);
            for z in lo[2].max(0)..=hi[2].min(self.dims[2] as isize - 1) {
                for y in lo[1].max(0)..=hi[1].min(self.dims[1] as isize - 1) {
                    let on_shell_yz = z == lo[2] || z == hi[2] || y == lo[1] || y == hi[1];
                    if on_shell_yz {
                        for x in lo[0].max(0)..=hi[0].min(self.dims[0] as isize - 1) {
                            self.scan_cell([x as usize, y as usize, z as usize], q, &mut best);
                        }
                    } else {
                        for x in [lo[0], hi[0]] {
                            if x >= 0 && x < self.dims[0] as isize {
                                self.scan_cell([x as usize, y as usize, z as usize], q, &mut best);
                            }
                        }
                    }
                }
            }
            // anything outside the scanned rings is at least `ring` cells away
            let bound = ring as f64 * self.cell;
            if best <= bound * bound {
                break;
            }
        }
        best
    }
}

/// Directed Hausdorff distance using a uniform grid over `b`. Exact: returns
/// the same value as [`directed_hausdorff_brute`].
pub fn directed_hausdorff_grid(a: &[[f64; 3]], b: &[[f64; 3]]) -> Result<f64, MetricsError> {
    if a.is_empty() || b.is_empty() {
        return Err(MetricsError::Empty);
    }
    let grid = Grid::new(b);
    let worst = a
        .par_iter()
        .map(|p| grid.nearest2(p))
        .reduce(|| 0.0, f64::max);
    Ok(worst.sqrt())
}

/// Below this many point pairs the brute-force search is used.
const BRUTE_FORCE_PAIRS: usize = 1 << 20;

/// Symmetric Hausdorff distance between two vertex sets.
pub fn hausdorff(a: &Mesh, b: &Mesh) -> Result<f64, MetricsError> {
    hausdorff_points(a.vertices(), b.vertices())
}

pub fn hausdorff_points(a: &[[f64; 3]], b: &[[f64; 3]]) -> Result<f64, MetricsError> {
    let directed = if a.len().saturating_mul(b.len()) <= BRUTE_FORCE_PAIRS {
        directed_hausdorff_brute
    } else {
        directed_hausdorff_grid
    };
    Ok(directed(a, b)?.max(directed(b, a)?))
}

/// Fidelity and capacity figures for one pipeline run.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub vertex_count: usize,
    pub face_count: usize,
    pub strategy: Strategy,
    pub precision: u32,
    pub embed_count: usize,
    /// `|S_e| / n`.
    pub utilization: f64,
    /// `l_p`.
    pub embed_bits: u64,
    /// `l_ai`.
    pub aux_bits: u64,
    /// `(l_p - l_ai) / n`.
    pub er_bpv: f64,
    pub payload_bits: u64,
    pub snr: Snr,
    pub hausdorff: f64,
}

/// Aggregate metrics for an original mesh, the container produced from it
/// and the mesh recovered from that container.
pub fn evaluate(
    original: &Mesh,
    container: &StegoContainer,
    recovered: &Mesh,
) -> Result<EvalReport, MetricsError> {
    let n = original.vertex_count();
    if recovered.vertex_count() != n {
        return Err(MetricsError::CountMismatch(n, recovered.vertex_count()));
    }
    if container.vertex_count() != n {
        return Err(MetricsError::CountMismatch(n, container.vertex_count()));
    }
    if container.faces != original.faces() || recovered.faces() != original.faces() {
        return Err(MetricsError::Inconsistent("face lists differ".into()));
    }
    let layout = PublicLayout::from_container(container)?;
    let capacity = layout.capacity(&container.aux);
    Ok(EvalReport {
        vertex_count: n,
        face_count: original.face_count(),
        strategy: container.strategy,
        precision: container.precision,
        embed_count: layout.partition.embed_set().len(),
        utilization: layout.partition.utilization(),
        embed_bits: capacity.embed_bits,
        aux_bits: capacity.aux_bits,
        er_bpv: capacity.er(),
        payload_bits: container.aux.payload_bits,
        snr: snr(original, recovered)?,
        hausdorff: hausdorff(original, recovered)?,
    })
}
