//! Additive set functions: sums of a patch functional over a window, and
//! per-point functionals of continuum point sets.

use std::fmt;

use crate::engine::cluster::Region;
use crate::engine::config::{Configuration, Patch, PatchLayout};
use crate::error::{invalid, Error, Result};
use crate::lattice::{NeighborhoodTemplate, Site, Window, MAX_DIM};
use crate::zoo::continuum::CONTACT_TOL;
use crate::zoo::points::{check_dim, embed, for_each_point, Mark, MarkedPoint, MarkedPointSet};

/// Functional `H` of the recentered patch `L_v(ξ|_{N_v})`.
pub trait LocalFunctional<S>: Send + Sync {
    fn name(&self) -> String;

    /// Offsets the functional reads.
    fn template(&self, dim: usize) -> Result<NeighborhoodTemplate> {
        Ok(NeighborhoodTemplate::identity(dim))
    }

    fn evaluate(&self, patch: &Patch<'_, S>) -> f64;
}

/// `H ≡ 1`.
#[derive(Clone, Copy, Debug, Default)]
pub struct ConstantOne;

impl<S> LocalFunctional<S> for ConstantOne {
    fn name(&self) -> String {
        "one".into()
    }

    fn evaluate(&self, _: &Patch<'_, S>) -> f64 {
        1.0
    }
}

/// `H(ξ) = ξ(0)^k` for integer states.
#[derive(Clone, Copy, Debug)]
pub struct CenterMoment {
    pub k: u32,
}

impl CenterMoment {
    pub fn new(k: u32) -> Result<Self> {
        if k == 0 {
            return Err(invalid("k", "moment order must be at least 1"));
        }
        Ok(Self { k })
    }
}

impl LocalFunctional<u32> for CenterMoment {
    fn name(&self) -> String {
        format!("moment{}", self.k)
    }

    fn evaluate(&self, patch: &Patch<'_, u32>) -> f64 {
        f64::from(*patch.get(0)).powi(self.k as i32)
    }
}

/// `S_H^A(ξ) = Σ_{v∈A} H(L_v(ξ|_{N_v}))`.
pub fn eval_additive<S, H>(h: &H, window: &Window, config: &Configuration<S>) -> Result<f64>
where
    H: LocalFunctional<S> + ?Sized,
{
    let template = h.template(window.dim())?;
    let layout = PatchLayout::new(config.region(), &template);
    let mut sum = 0.0;
    for v in window.iter() {
        sum += h.evaluate(&config.patch(&layout, v)?);
    }
    Ok(sum)
}

/// Per-site values `H(L_v ξ)` in window order.
pub fn site_values<S, H>(h: &H, window: &Window, config: &Configuration<S>) -> Result<Vec<f64>>
where
    H: LocalFunctional<S> + ?Sized,
{
    let template = h.template(window.dim())?;
    let layout = PatchLayout::new(config.region(), &template);
    window
        .iter()
        .map(|v| Ok(h.evaluate(&config.patch(&layout, v)?)))
        .collect()
}

/// Functional `φ(θ, (-x + X) ∩ (B_R × T))` of a point with mark `θ` and
/// the other points within horizontal distance `R`, positions relative to `x`.
pub trait PointFunctional: Send + Sync + fmt::Debug {
    fn name(&self) -> String;

    /// Interaction range `R`.
    fn range(&self) -> f64;

    fn supports(&self, dim: usize) -> Result<()> {
        check_dim(dim)
    }

    fn evaluate(&self, mark: Mark, others: &[MarkedPoint], dim: usize) -> f64;
}

/// Cubes that can hold points within `r` of the unit cube.
fn reach_template(dim: usize, r: f64) -> Result<NeighborhoodTemplate> {
    if r == 0.0 {
        Ok(NeighborhoodTemplate::identity(dim))
    } else {
        NeighborhoodTemplate::cubes_within(dim, r)
    }
}

fn horizontal(p: &MarkedPoint, dim: usize) -> f64 {
    p.pos[..dim].iter().map(|c| c * c).sum::<f64>().sqrt()
}

/// Counts points.
#[derive(Clone, Copy, Debug, Default)]
pub struct Phi1;

impl PointFunctional for Phi1 {
    fn name(&self) -> String {
        "phi1".into()
    }

    fn range(&self) -> f64 {
        0.0
    }

    fn evaluate(&self, _: Mark, _: &[MarkedPoint], _: usize) -> f64 {
        1.0
    }
}

/// Half the number of other points within `r`: sums to the number of
/// close pairs.
#[derive(Clone, Copy, Debug)]
pub struct Phi2 {
    pub r: f64,
}

impl Phi2 {
    pub fn new(r: f64) -> Result<Self> {
        if !(r.is_finite() && r > 0.0) {
            return Err(invalid("r1", format!("must be positive, got {r}")));
        }
        Ok(Self { r })
    }
}

impl PointFunctional for Phi2 {
    fn name(&self) -> String {
        format!("phi2(r1={})", self.r)
    }

    fn range(&self) -> f64 {
        self.r
    }

    fn evaluate(&self, _: Mark, others: &[MarkedPoint], dim: usize) -> f64 {
        0.5 * others
            .iter()
            .filter(|p| horizontal(p, dim) <= self.r)
            .count() as f64
    }
}

/// Indicator that the point's height is at most `r`.
#[derive(Clone, Copy, Debug)]
pub struct Phi3 {
    pub r: f64,
}

impl Phi3 {
    pub fn new(r: f64) -> Result<Self> {
        if !(r.is_finite() && r > 0.0) {
            return Err(invalid("r3", format!("must be positive, got {r}")));
        }
        Ok(Self { r })
    }
}

impl PointFunctional for Phi3 {
    fn name(&self) -> String {
        format!("phi3(r3={})", self.r)
    }

    fn range(&self) -> f64 {
        0.0
    }

    fn evaluate(&self, mark: Mark, _: &[MarkedPoint], _: usize) -> f64 {
        match mark.height() {
            Some(h) if h <= self.r => 1.0,
            _ => 0.0,
        }
    }
}

/// Half the number of balls in contact: sums to the number of contacts.
#[derive(Clone, Copy, Debug, Default)]
pub struct Phi4;

impl PointFunctional for Phi4 {
    fn name(&self) -> String {
        "phi4".into()
    }

    fn range(&self) -> f64 {
        1.0 + CONTACT_TOL
    }

    fn evaluate(&self, mark: Mark, others: &[MarkedPoint], dim: usize) -> f64 {
        let me = MarkedPoint::new(&[0.0; MAX_DIM], mark);
        0.5 * others
            .iter()
            .filter(|p| (me.distance(p, dim) - 1.0).abs() <= CONTACT_TOL)
            .count() as f64
    }
}

/// Height of the ball if it is exposed, i.e. some vertical drop strikes it
/// first; deposited balls only, substrate dimension 1.
#[derive(Clone, Copy, Debug, Default)]
pub struct Phi5;

/// Contact height of a unit ball dropped at horizontal offset `u` onto a
/// ball at `(x, h)`, if the shadows overlap.
fn contact_height(x: f64, h: f64, u: f64) -> Option<f64> {
    let rho = (u - x).abs();
    (rho < 1.0).then(|| h + (1.0 - rho * rho).sqrt())
}

/// Horizontal positions where two upper unit semicircles centered at
/// `(0, h0)` and `(x1, h1)` cross.
fn crossings(h0: f64, x1: f64, h1: f64) -> Vec<f64> {
    let d2 = x1 * x1 + (h1 - h0) * (h1 - h0);
    if d2 == 0.0 || d2 > 4.0 {
        return Vec::new();
    }
    let d = d2.sqrt();
    let a = d / 2.0;
    let k = (1.0 - a * a).max(0.0).sqrt();
    let (mx, my) = (x1 / 2.0, h0 + (h1 - h0) / 2.0);
    let (px, py) = (-(h1 - h0) / d, x1 / d);
    [(mx + k * px, my + k * py), (mx - k * px, my - k * py)]
        .into_iter()
        .filter(|(_, y)| *y >= h0.max(h1) - 1e-12)
        .map(|(x, _)| x)
        .collect()
}

impl Phi5 {
    /// Whether the ball at the origin with height `h` is exposed among `others`.
    pub fn exposed(h: f64, others: &[MarkedPoint]) -> bool {
        let near: Vec<(f64, f64)> = others
            .iter()
            .filter_map(|p| Some((p.pos[0], p.mark.height()?)))
            .filter(|(x, _)| x.abs() < 2.0)
            .collect();
        let mut cuts = vec![-1.0, 1.0];
        for &(x, g) in &near {
            cuts.extend([x - 1.0, x + 1.0]);
            cuts.extend(crossings(h, x, g));
        }
        cuts.retain(|u| (-1.0..=1.0).contains(u));
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        // Between consecutive cuts every comparison keeps its sign.
        cuts.windows(2).any(|w| {
            let u = 0.5 * (w[0] + w[1]);
            let mine = contact_height(0.0, h, u).expect("inside own shadow");
            near.iter()
                .all(|&(x, g)| contact_height(x, g, u).is_none_or(|other| mine > other))
        })
    }
}

impl PointFunctional for Phi5 {
    fn name(&self) -> String {
        "phi5".into()
    }

    fn range(&self) -> f64 {
        2.0
    }

    fn supports(&self, dim: usize) -> Result<()> {
        if dim != 1 {
            return Err(Error::Unsupported(format!(
                "phi5 is defined for substrate dimension 1 only, got {dim}"
            )));
        }
        Ok(())
    }

    fn evaluate(&self, mark: Mark, others: &[MarkedPoint], _: usize) -> f64 {
        match mark.height() {
            Some(h) if Self::exposed(h, others) => h,
            _ => 0.0,
        }
    }
}

/// Parses a functional name with optional parameter.
pub fn phi_library(name: &str, param: Option<f64>) -> Result<Box<dyn PointFunctional>> {
    let need = |what: &'static str| param.ok_or_else(|| invalid(what, "parameter required"));
    Ok(match name {
        "phi1" => Box::new(Phi1),
        "phi2" => Box::new(Phi2::new(need("r1")?)?),
        "phi3" => Box::new(Phi3::new(need("r3")?)?),
        "phi4" => Box::new(Phi4),
        "phi5" => Box::new(Phi5),
        other => {
            return Err(invalid(
                "functional",
                format!(
                    "unknown point functional '{other}' (available: phi1, phi2, phi3, phi4, phi5)"
                ),
            ))
        }
    })
}

/// `H_φ(η) = Σ_{(x,θ) ∈ η(0)} φ(θ, (-x + X_η) ∩ (B_R × T))`, reading the
/// cubes within `R` of the unit cube.
pub struct HPhi<'a> {
    phi: &'a dyn PointFunctional,
    dim: usize,
    template: NeighborhoodTemplate,
}

impl<'a> HPhi<'a> {
    pub fn new(phi: &'a dyn PointFunctional, dim: usize) -> Result<Self> {
        phi.supports(dim)?;
        Ok(Self {
            phi,
            dim,
            template: reach_template(dim, phi.range())?,
        })
    }
}

impl LocalFunctional<MarkedPointSet> for HPhi<'_> {
    fn name(&self) -> String {
        format!("H[{}]", self.phi.name())
    }

    fn template(&self, dim: usize) -> Result<NeighborhoodTemplate> {
        if dim != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: dim,
            });
        }
        Ok(self.template.clone())
    }

    fn evaluate(&self, patch: &Patch<'_, MarkedPointSet>) -> f64 {
        let (dim, template) = (self.dim, &self.template);
        let center = template.center_index();
        let r = self.phi.range();
        let mut total = 0.0;
        let mut others = Vec::new();
        for (j, p) in patch.get(center).iter().enumerate() {
            others.clear();
            for_each_point(patch, template, |i, k, y, q| {
                if (i, k) == (center, j) {
                    return;
                }
                let mut rel = *q;
                for (a, x) in rel.pos.iter_mut().enumerate().take(dim) {
                    *x = y[a] - p.pos[a];
                }
                if horizontal(&rel, dim) <= r {
                    others.push(rel);
                }
            });
            total += self.phi.evaluate(p.mark, &others, dim);
        }
        total
    }
}

/// `S_φ^Ã(X)`: sum of `φ` over points of `X` in the cubes of `area`.
///
/// `materialized` lists the cubes over which `X` is known; it must contain
/// every cube within `R` of `area`.
pub fn eval_point_functional(
    phi: &dyn PointFunctional,
    area: &Window,
    points: &[MarkedPoint],
    materialized: &impl Region,
) -> Result<f64> {
    let dim = area.dim();
    phi.supports(dim)?;
    let halo = reach_template(dim, phi.range())?;
    for v in area.iter() {
        if let Some(w) = halo
            .around(*v)
            .into_iter()
            .find(|w| !materialized.contains_site(w))
        {
            return Err(Error::Unmaterialized(w));
        }
    }
    let r = phi.range();
    let mut sorted: Vec<&MarkedPoint> = points.iter().collect();
    sorted.sort_by(|a, b| a.pos[0].total_cmp(&b.pos[0]));
    let mut total = 0.0;
    let mut others = Vec::new();
    for (i, p) in sorted.iter().enumerate() {
        if !area.contains(&cube_of(p, dim)) {
            continue;
        }
        others.clear();
        let lo = sorted.partition_point(|q| q.pos[0] < p.pos[0] - r);
        for (j, q) in sorted.iter().enumerate().skip(lo) {
            if q.pos[0] > p.pos[0] + r {
                break;
            }
            if j == i {
                continue;
            }
            let mut rel = **q;
            for a in 0..dim {
                rel.pos[a] = q.pos[a] - p.pos[a];
            }
            if horizontal(&rel, dim) <= r {
                others.push(rel);
            }
        }
        total += phi.evaluate(p.mark, &others, dim);
    }
    Ok(total)
}

fn cube_of(p: &MarkedPoint, dim: usize) -> Site {
    let c: Vec<i64> = p.pos[..dim].iter().map(|x| x.floor() as i64).collect();
    Site::new(&c)
}

/// Both sides of `S_φ^Ã(X) = S_{H_φ}^A(η_X)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IdentityCheck {
    pub direct: f64,
    pub embedded: f64,
    pub equal: bool,
}

/// Relative tolerance of [`embedding_identity_check`].
pub const IDENTITY_TOL: f64 = 1e-12;

/// Evaluates the point-set side directly and the lattice side through the
/// cube embedding over the bounding box of `A` plus the `R` halo.
pub fn embedding_identity_check(
    phi: &dyn PointFunctional,
    window: &Window,
    points: &[MarkedPoint],
) -> Result<IdentityCheck> {
    let dim = window.dim();
    phi.supports(dim)?;
    let halo = reach_template(dim, phi.range())?;
    let region = window.bounding_box().expand(halo.radius());
    let inside: Vec<MarkedPoint> = points
        .iter()
        .copied()
        .filter(|p| region.contains(&cube_of(p, dim)))
        .collect();
    let direct = eval_point_functional(phi, window, &inside, &region)?;
    let config = embed(&inside, &region)?;
    let embedded = eval_additive(&HPhi::new(phi, dim)?, window, &config)?;
    let scale = direct.abs().max(embedded.abs());
    let equal = (direct - embedded).abs() <= IDENTITY_TOL * scale;
    Ok(IdentityCheck {
        direct,
        embedded,
        equal,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::config::identity_deltas;
    use crate::lattice::BoxRegion;

    fn pt(x: &[f64]) -> MarkedPoint {
        MarkedPoint::new(x, Mark::None)
    }

    fn ball(x: f64, h: f64) -> MarkedPoint {
        MarkedPoint::new(&[x], Mark::Height(h))
    }

    fn line(lo: i64, hi: i64) -> Window {
        Window::new((lo..=hi).map(Site::at)).unwrap()
    }

    #[test]
    fn constant_one_counts_sites() {
        let w = Window::centered_box(2, 3).unwrap();
        let cfg = Configuration::filled(BoxRegion::centered(2, 3), 0u32);
        assert_eq!(eval_additive(&ConstantOne, &w, &cfg).unwrap(), 49.0);
    }

    #[test]
    fn center_height_of_empty_start_is_zero() {
        let w = Window::centered_box(1, 5).unwrap();
        let cfg = Configuration::filled(BoxRegion::centered(1, 6), 0u32);
        assert_eq!(
            eval_additive(&CenterMoment::new(1).unwrap(), &w, &cfg).unwrap(),
            0.0
        );
    }

    #[test]
    fn additive_over_disjoint_windows() {
        let region = BoxRegion::centered(1, 20);
        let cfg = Configuration::from_fn(region, |s| (s.coord(0).rem_euclid(7) * 3 % 5) as u32);
        let a = line(-10, -1);
        let b = line(0, 12);
        let ab = line(-10, 12);
        let h = CenterMoment::new(2).unwrap();
        let sa = eval_additive(&h, &a, &cfg).unwrap();
        let sb = eval_additive(&h, &b, &cfg).unwrap();
        let sab = eval_additive(&h, &ab, &cfg).unwrap();
        // Independent oracle: direct sum of squares.
        let direct: f64 = (-10..=12)
            .map(|x| f64::from(*cfg.get(&Site::at(x)).unwrap()).powi(2))
            .sum();
        assert_eq!(sa + sb, sab);
        assert_eq!(sab, direct);
    }

    #[test]
    fn unmaterialized_patch_is_an_error() {
        let cfg = Configuration::filled(BoxRegion::centered(1, 1), MarkedPointSet::new());
        let phi = Phi2::new(1.0).unwrap();
        assert!(eval_additive(&HPhi::new(&phi, 1).unwrap(), &line(0, 0), &cfg).is_err());
    }

    #[test]
    fn phi1_counts_points() {
        let x = [pt(&[0.5]), pt(&[1.5]), pt(&[2.2])];
        let area = line(0, 2);
        let s = eval_point_functional(&Phi1, &area, &x, &line(-2, 4)).unwrap();
        assert_eq!(s, 3.0);
    }

    #[test]
    fn phi2_pairs_and_boundary_half_weight() {
        let phi = Phi2::new(1.0).unwrap();
        let x = [pt(&[0.3]), pt(&[1.2])];
        assert_eq!(
            eval_point_functional(&phi, &line(0, 1), &x, &line(-3, 4)).unwrap(),
            1.0
        );
        assert_eq!(
            eval_point_functional(&phi, &line(0, 0), &x, &line(-3, 4)).unwrap(),
            0.5
        );
    }

    #[test]
    fn halo_must_be_materialized() {
        let phi = Phi2::new(1.0).unwrap();
        let err = eval_point_functional(&phi, &line(0, 1), &[], &line(0, 1)).unwrap_err();
        assert!(matches!(err, Error::Unmaterialized(_)));
    }

    #[test]
    fn stack_functionals() {
        let stack = [ball(0.5, 0.5), ball(0.5, 1.5)];
        let area = line(0, 0);
        let mat = line(-3, 3);
        let phi3 = Phi3::new(0.5).unwrap();
        assert_eq!(
            eval_point_functional(&phi3, &area, &stack, &mat).unwrap(),
            1.0
        );
        assert_eq!(
            eval_point_functional(&Phi4, &area, &stack, &mat).unwrap(),
            1.0
        );
    }

    #[test]
    fn phi5_lone_and_buried() {
        let area = line(-1, 1);
        let mat = line(-4, 4);
        assert_eq!(
            eval_point_functional(&Phi5, &area, &[ball(0.5, 0.5)], &mat).unwrap(),
            0.5
        );
        // The bottom ball of a vertical stack is hidden under the top one.
        let stack = [ball(0.5, 0.5), ball(0.5, 1.5)];
        assert_eq!(
            eval_point_functional(&Phi5, &area, &stack, &mat).unwrap(),
            1.5
        );
        // Two substrate balls side by side at distance 1 are both exposed.
        let pair = [ball(0.2, 0.5), ball(1.2, 0.5)];
        assert_eq!(
            eval_point_functional(&Phi5, &area, &pair, &mat).unwrap(),
            1.0
        );
    }

    #[test]
    fn phi5_partial_cover_stays_exposed() {
        // A ball resting on the right shoulder leaves the left part of the
        // lower ball exposed.
        let lower = ball(0.5, 0.5);
        let upper = ball(1.1, 0.5 + (1.0f64 - 0.36).sqrt());
        let area = line(0, 1);
        let mat = line(-3, 4);
        let s = eval_point_functional(&Phi5, &area, &[lower, upper], &mat).unwrap();
        assert!((s - (0.5 + upper.mark.height().unwrap())).abs() < 1e-12);
    }

    #[test]
    fn phi5_rejects_planar_substrate() {
        let area = Window::centered_box(2, 1).unwrap();
        assert!(matches!(
            embedding_identity_check(&Phi5, &area, &[]),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn identity_on_empty_set() {
        let c = embedding_identity_check(&Phi1, &line(0, 5), &[]).unwrap();
        assert_eq!((c.direct, c.embedded, c.equal), (0.0, 0.0, true));
    }

    #[test]
    fn identity_on_scattered_points_in_two_dimensions() {
        let w = Window::centered_box(2, 3).unwrap();
        let mut x = Vec::new();
        for k in 0..80 {
            let a = -5.0 + (k as f64 * 0.618_033_988_749_894_9).fract() * 10.0;
            let b = -5.0 + (k as f64 * 0.754_877_666_246_692_7).fract() * 10.0;
            x.push(pt(&[a, b]));
        }
        for phi in [&Phi1 as &dyn PointFunctional, &Phi2::new(1.0).unwrap()] {
            let c = embedding_identity_check(phi, &w, &x).unwrap();
            assert!(c.equal, "{c:?}");
        }
    }

    #[test]
    fn phi2_matches_brute_force_pair_count() {
        let mut x = Vec::new();
        for k in 0..100 {
            x.push(pt(&[2.0 + (k as f64 * 0.381_966).fract() * 16.0]));
        }
        let phi = Phi2::new(1.0).unwrap();
        let s = eval_point_functional(&phi, &line(0, 21), &x, &line(-2, 23)).unwrap();
        let mut pairs = 0;
        for i in 0..x.len() {
            for j in i + 1..x.len() {
                if (x[i].pos[0] - x[j].pos[0]).abs() <= 1.0 {
                    pairs += 1;
                }
            }
        }
        assert_eq!(s, pairs as f64);
    }

    #[test]
    fn hphi_direct_patch() {
        let phi = Phi2::new(1.0).unwrap();
        let t = NeighborhoodTemplate::cubes_within(1, 1.0).unwrap();
        let mut states = vec![MarkedPointSet::new(); t.len()];
        states[t.center_index()].push(pt(&[0.5]));
        states[t.index_of(&Site::at(1)).unwrap()].push(pt(&[0.2]));
        let d = identity_deltas(t.len());
        let h = HPhi::new(&phi, 1).unwrap();
        assert_eq!(h.evaluate(&Patch::from_slice(&states, &d)), 0.5);
    }
}
