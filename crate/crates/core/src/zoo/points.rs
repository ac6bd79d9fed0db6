//! Marked point sets stored per unit cube, and the embedding of a global
//! point set into cube-local states.

use serde::Serialize;

use crate::engine::config::{Configuration, Patch, PatchMut};
use crate::error::{invalid, Error, Result};
use crate::lattice::{BoxRegion, NeighborhoodTemplate, Site, MAX_DIM};

/// Largest `f64` below one; local coordinates never reach 1.
const BELOW_ONE: f64 = 1.0 - f64::EPSILON / 2.0;

#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize)]
pub enum Mark {
    #[default]
    None,
    /// Center height above the substrate.
    Height(f64),
    /// Binary color.
    Color(u8),
}

impl Mark {
    pub fn height(&self) -> Option<f64> {
        match self {
            Mark::Height(h) => Some(*h),
            _ => None,
        }
    }

    pub fn color(&self) -> Option<u8> {
        match self {
            Mark::Color(c) => Some(*c),
            _ => None,
        }
    }
}

/// A point with coordinates in the first `d` slots of `pos`.
///
/// Inside a configuration `pos` is local to the cube `v + [0,1)^d`; in a
/// global point set it is absolute.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MarkedPoint {
    pub pos: [f64; MAX_DIM],
    pub mark: Mark,
}

impl MarkedPoint {
    pub fn new(pos: &[f64], mark: Mark) -> Self {
        let mut p = [0.0; MAX_DIM];
        p[..pos.len()].copy_from_slice(pos);
        Self { pos: p, mark }
    }

    /// Distance in `d` horizontal coordinates plus the height mark, if any.
    pub fn distance(&self, other: &MarkedPoint, dim: usize) -> f64 {
        let mut d2: f64 = (0..dim).map(|a| (self.pos[a] - other.pos[a]).powi(2)).sum();
        if let (Some(h1), Some(h2)) = (self.mark.height(), other.mark.height()) {
            d2 += (h1 - h2).powi(2);
        }
        d2.sqrt()
    }
}

/// The local state of one cube.
pub type MarkedPointSet = Vec<MarkedPoint>;

/// Global point set: positions are absolute.
pub type PointCloud = Vec<MarkedPoint>;

pub(crate) fn check_dim(dim: usize) -> Result<()> {
    if !(1..=MAX_DIM).contains(&dim) {
        return Err(invalid(
            "dimension",
            format!("must be in 1..={MAX_DIM}, got {dim}"),
        ));
    }
    Ok(())
}

pub(crate) fn euclid(a: &[f64; MAX_DIM], b: &[f64; MAX_DIM], dim: usize) -> f64 {
    (0..dim).map(|k| (a[k] - b[k]).powi(2)).sum::<f64>().sqrt()
}

/// Position of `p`, stored in the cube at `offset`, relative to the origin
/// of the center cube.
#[inline]
pub(crate) fn relative(offset: &Site, p: &MarkedPoint, dim: usize) -> [f64; MAX_DIM] {
    let mut out = [0.0; MAX_DIM];
    for (a, x) in out.iter_mut().enumerate().take(dim) {
        *x = offset.coord(a) as f64 + p.pos[a];
    }
    out
}

/// Calls `f(cube, index, position relative to the center cube, point)` for
/// every point in the patch.
pub(crate) fn for_each_point<'a>(
    patch: &Patch<'a, MarkedPointSet>,
    template: &NeighborhoodTemplate,
    mut f: impl FnMut(usize, usize, [f64; MAX_DIM], &'a MarkedPoint),
) {
    let dim = template.dim();
    for (i, o) in template.offsets().iter().enumerate() {
        for (j, p) in patch.get(i).iter().enumerate() {
            f(i, j, relative(o, p, dim), p);
        }
    }
}

/// Splits a position relative to the center cube into a cube offset and a
/// local position in `[0,1)^d`.
pub(crate) fn split_position(y: &[f64; MAX_DIM], dim: usize) -> (Site, [f64; MAX_DIM]) {
    let mut cube = [0i64; MAX_DIM];
    let mut local = [0.0; MAX_DIM];
    for a in 0..dim {
        let f = y[a].floor();
        cube[a] = f as i64;
        local[a] = (y[a] - f).clamp(0.0, BELOW_ONE);
    }
    (Site::new(&cube[..dim]), local)
}

/// Stores a point at a position relative to the center cube.
///
/// Panics if the target cube is outside the template; models size their
/// templates so this cannot happen.
pub(crate) fn place(
    patch: &mut PatchMut<'_, MarkedPointSet>,
    template: &NeighborhoodTemplate,
    y: &[f64; MAX_DIM],
    mark: Mark,
) {
    let (cube, local) = split_position(y, template.dim());
    let i = template
        .index_of(&cube)
        .expect("placement stays within the model's neighborhood");
    patch.get_mut(i).push(MarkedPoint { pos: local, mark });
}

/// `η_X(v) = -v + (X ∩ C_v)` for every cube of `region`.
///
/// Fails if a point lies outside the union of the region's cubes.
pub fn embed(points: &[MarkedPoint], region: &BoxRegion) -> Result<Configuration<MarkedPointSet>> {
    let dim = region.dim();
    let mut config = Configuration::filled(*region, MarkedPointSet::new());
    for p in points {
        if p.pos[..dim].iter().any(|x| !x.is_finite()) {
            return Err(invalid("points", "non-finite coordinate"));
        }
        let (cube, local) = split_position(&p.pos, dim);
        let cell = config.get_mut(&cube).map_err(|_| {
            Error::Geometry(format!(
                "point {:?} lies outside the embedded region",
                &p.pos[..dim]
            ))
        })?;
        cell.push(MarkedPoint {
            pos: local,
            mark: p.mark,
        });
    }
    Ok(config)
}

/// Inverse of [`embed`]: absolute positions, in cube order.
pub fn unembed(config: &Configuration<MarkedPointSet>) -> PointCloud {
    let dim = config.region().dim();
    let mut out = Vec::new();
    for (v, cell) in config.iter() {
        for p in cell {
            out.push(MarkedPoint {
                pos: relative(&v, p, dim),
                mark: p.mark,
            });
        }
    }
    out
}

/// Number of half-open cells of side `spacing/√d` covering the unit cube:
/// an upper bound on how many points at mutual distance `>= spacing` fit.
pub fn packing_cap(dim: usize, spacing: f64) -> usize {
    let per_axis = ((dim as f64).sqrt() / spacing).ceil().max(1.0) as usize;
    per_axis.pow(dim as u32)
}
