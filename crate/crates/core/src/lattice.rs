//! Lattice geometry on `Z^d`: sites, neighborhood templates, windows and the
//! set operators (neighborhood, exterior boundary, interior) used by the
//! dynamics and by the window-sequence conditions of the limit theorems.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::ops::{Add, Neg, Sub};

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// Largest lattice dimension supported.
pub const MAX_DIM: usize = 3;

/// A point of `Z^d`, `1 <= d <= MAX_DIM`.
///
/// Unused trailing coordinates are kept at zero so that equality, hashing
/// and the lexicographic order only depend on the used coordinates.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Site {
    dim: u8,
    coords: [i64; MAX_DIM],
}

impl Site {
    /// Panics if `coords` is empty or longer than [`MAX_DIM`].
    pub fn new(coords: &[i64]) -> Self {
        Self::try_new(coords).expect("site dimension out of range")
    }

    pub fn try_new(coords: &[i64]) -> Result<Self> {
        if coords.is_empty() || coords.len() > MAX_DIM {
            return Err(Error::DimensionMismatch {
                expected: MAX_DIM,
                found: coords.len(),
            });
        }
        let mut c = [0; MAX_DIM];
        c[..coords.len()].copy_from_slice(coords);
        Ok(Self {
            dim: coords.len() as u8,
            coords: c,
        })
    }

    pub fn origin(dim: usize) -> Self {
        Self::new(&vec![0; dim])
    }

    /// 1-d shorthand.
    pub fn at(x: i64) -> Self {
        Self::new(&[x])
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    #[inline]
    pub fn coords(&self) -> &[i64] {
        &self.coords[..self.dim as usize]
    }

    #[inline]
    pub fn coord(&self, axis: usize) -> i64 {
        self.coords[axis]
    }

    pub fn is_origin(&self) -> bool {
        self.coords().iter().all(|&c| c == 0)
    }

    /// Sup-norm length.
    pub fn max_norm(&self) -> i64 {
        self.coords().iter().map(|c| c.abs()).max().unwrap_or(0)
    }

    /// Euclidean length.
    pub fn norm(&self) -> f64 {
        (self.coords().iter().map(|&c| (c * c) as f64).sum::<f64>()).sqrt()
    }
}

impl Add for Site {
    type Output = Site;
    #[inline]
    fn add(self, rhs: Site) -> Site {
        debug_assert_eq!(self.dim, rhs.dim);
        let mut coords = self.coords;
        for (c, r) in coords.iter_mut().zip(rhs.coords) {
            *c += r;
        }
        Site {
            dim: self.dim,
            coords,
        }
    }
}

impl Sub for Site {
    type Output = Site;
    #[inline]
    fn sub(self, rhs: Site) -> Site {
        self + (-rhs)
    }
}

impl Neg for Site {
    type Output = Site;
    #[inline]
    fn neg(self) -> Site {
        let mut coords = self.coords;
        for c in coords.iter_mut() {
            *c = -*c;
        }
        Site {
            dim: self.dim,
            coords,
        }
    }
}

impl fmt::Debug for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.coords().iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

impl Serialize for Site {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.coords().serialize(serializer)
    }
}

/// Canonically ordered set of sites.
pub type SiteSet = BTreeSet<Site>;

/// The finite symmetric interaction window `N` around the origin.
///
/// `N_v = v + N` is the set of sites whose states an event at `v` may read
/// or rewrite. Offsets are kept sorted; index `i` of a patch always refers
/// to `offsets()[i]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NeighborhoodTemplate {
    dim: usize,
    offsets: Vec<Site>,
    center: usize,
}

impl NeighborhoodTemplate {
    /// Validates that the offsets contain the origin, are symmetric and share
    /// the dimension `dim`. Duplicates are removed.
    pub fn new(dim: usize, offsets: impl IntoIterator<Item = Site>) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::InvalidTemplate(format!(
                "dimension {dim} out of range"
            )));
        }
        let set: SiteSet = offsets.into_iter().collect();
        if let Some(bad) = set.iter().find(|s| s.dim() != dim) {
            return Err(Error::InvalidTemplate(format!(
                "offset {bad} has dimension {}, expected {dim}",
                bad.dim()
            )));
        }
        if !set.contains(&Site::origin(dim)) {
            return Err(Error::InvalidTemplate("must contain the origin".into()));
        }
        if let Some(bad) = set.iter().find(|s| !set.contains(&-**s)) {
            return Err(Error::InvalidTemplate(format!(
                "not symmetric: {bad} present but {} missing",
                -*bad
            )));
        }
        let offsets: Vec<Site> = set.into_iter().collect();
        let center = offsets
            .iter()
            .position(|s| s.is_origin())
            .expect("origin checked above");
        Ok(Self {
            dim,
            offsets,
            center,
        })
    }

    /// `{0}`: no interaction.
    pub fn identity(dim: usize) -> Self {
        Self::new(dim, [Site::origin(dim)]).expect("identity template is valid")
    }

    /// `{-r..r}^d`.
    pub fn box_radius(dim: usize, radius: i64) -> Self {
        Self::new(dim, BoxRegion::centered(dim, radius.max(0)).sites())
            .expect("box template is valid")
    }

    /// Cubes `C_w = w + [0,1]^d` at distance at most `range` from `C_0`.
    ///
    /// Every point within distance `range` of a point of `C_0` lies in one of
    /// these cubes.
    pub fn cubes_within(dim: usize, range: f64) -> Result<Self> {
        if !(range.is_finite() && range > 0.0) {
            return Err(Error::InvalidTemplate(format!(
                "range {range} must be positive"
            )));
        }
        let r = range.floor() as i64 + 1;
        let offsets = BoxRegion::centered(dim, r).sites().filter(|w| {
            let d2: f64 = w
                .coords()
                .iter()
                .map(|&c| {
                    let gap = (c.abs() - 1).max(0) as f64;
                    gap * gap
                })
                .sum();
            d2.sqrt() <= range
        });
        Self::new(dim, offsets)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn offsets(&self) -> &[Site] {
        &self.offsets
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    /// Index of the zero offset.
    #[inline]
    pub fn center_index(&self) -> usize {
        self.center
    }

    /// Degree bound `D = |N| - 1`.
    pub fn degree(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn index_of(&self, offset: &Site) -> Option<usize> {
        self.offsets.binary_search(offset).ok()
    }

    pub fn contains(&self, offset: &Site) -> bool {
        self.index_of(offset).is_some()
    }

    /// Sup-norm radius of the template.
    pub fn radius(&self) -> i64 {
        self.offsets.iter().map(Site::max_norm).max().unwrap_or(0)
    }

    /// Offsets of the 2-neighborhood `N + N`.
    pub fn doubled(&self) -> Self {
        let mut set = SiteSet::new();
        for a in &self.offsets {
            for b in &self.offsets {
                set.insert(*a + *b);
            }
        }
        Self::new(self.dim, set).expect("sum of symmetric templates is symmetric")
    }

    /// `v + N`.
    pub fn around(&self, v: Site) -> impl Iterator<Item = Site> + '_ {
        self.offsets.iter().map(move |o| v + *o)
    }
}

/// A non-empty finite set of sites.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Window {
    dim: usize,
    sites: SiteSet,
}

impl Window {
    pub fn new(sites: impl IntoIterator<Item = Site>) -> Result<Self> {
        let sites: SiteSet = sites.into_iter().collect();
        let first = sites
            .iter()
            .next()
            .ok_or_else(|| Error::InvalidWindow("window must be non-empty".into()))?;
        let dim = first.dim();
        if let Some(bad) = sites.iter().find(|s| s.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: bad.dim(),
            });
        }
        Ok(Self { dim, sites })
    }

    /// `([-r, r] ∩ Z)^d`.
    pub fn centered_box(dim: usize, radius: i64) -> Result<Self> {
        if radius < 0 {
            return Err(Error::InvalidWindow(format!("negative radius {radius}")));
        }
        Self::new(BoxRegion::centered(dim, radius).sites())
    }

    /// `{0, .., side-1}^d`.
    pub fn cube(dim: usize, side: i64) -> Result<Self> {
        if side < 1 {
            return Err(Error::InvalidWindow(format!(
                "side {side} must be positive"
            )));
        }
        Self::new(BoxRegion::new(dim, [0; MAX_DIM], [side - 1; MAX_DIM]).sites())
    }

    pub fn single(site: Site) -> Self {
        Self::new([site]).expect("single site window")
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn sites(&self) -> &SiteSet {
        &self.sites
    }

    pub fn iter(&self) -> impl Iterator<Item = &Site> {
        self.sites.iter()
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, site: &Site) -> bool {
        self.sites.contains(site)
    }

    pub fn is_subset(&self, other: &Window) -> bool {
        self.sites.is_subset(&other.sites)
    }

    pub fn bounding_box(&self) -> BoxRegion {
        BoxRegion::bounding(self.sites.iter()).expect("window is non-empty")
    }
}

/// An axis-aligned inclusive box of sites, used as dense storage layout.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BoxRegion {
    dim: usize,
    lo: [i64; MAX_DIM],
    hi: [i64; MAX_DIM],
}

impl BoxRegion {
    /// Unused axes (beyond `dim`) are collapsed to zero.
    pub fn new(dim: usize, lo: [i64; MAX_DIM], hi: [i64; MAX_DIM]) -> Self {
        assert!((1..=MAX_DIM).contains(&dim), "dimension out of range");
        let mut l = [0; MAX_DIM];
        let mut h = [0; MAX_DIM];
        l[..dim].copy_from_slice(&lo[..dim]);
        h[..dim].copy_from_slice(&hi[..dim]);
        Self { dim, lo: l, hi: h }
    }

    pub fn centered(dim: usize, radius: i64) -> Self {
        Self::new(dim, [-radius; MAX_DIM], [radius; MAX_DIM])
    }

    pub fn bounding<'a>(sites: impl IntoIterator<Item = &'a Site>) -> Option<Self> {
        let mut it = sites.into_iter();
        let first = it.next()?;
        let dim = first.dim();
        let mut lo = first.coords;
        let mut hi = first.coords;
        for s in it {
            for a in 0..dim {
                lo[a] = lo[a].min(s.coords[a]);
                hi[a] = hi[a].max(s.coords[a]);
            }
        }
        Some(Self { dim, lo, hi })
    }

    pub fn expand(&self, by: i64) -> Self {
        let mut lo = self.lo;
        let mut hi = self.hi;
        for a in 0..self.dim {
            lo[a] -= by;
            hi[a] += by;
        }
        Self {
            dim: self.dim,
            lo,
            hi,
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lo(&self) -> Site {
        Site {
            dim: self.dim as u8,
            coords: self.lo,
        }
    }

    pub fn hi(&self) -> Site {
        Site {
            dim: self.dim as u8,
            coords: self.hi,
        }
    }

    #[inline]
    pub fn extent(&self, axis: usize) -> usize {
        if self.hi[axis] < self.lo[axis] {
            0
        } else {
            (self.hi[axis] - self.lo[axis] + 1) as usize
        }
    }

    pub fn len(&self) -> usize {
        (0..self.dim).map(|a| self.extent(a)).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn contains(&self, s: &Site) -> bool {
        s.dim() == self.dim
            && (0..self.dim).all(|a| self.lo[a] <= s.coords[a] && s.coords[a] <= self.hi[a])
    }

    pub fn contains_box(&self, other: &BoxRegion) -> bool {
        other.is_empty() || (self.contains(&other.lo()) && self.contains(&other.hi()))
    }

    /// Row-major strides, last axis fastest.
    pub fn strides(&self) -> [isize; MAX_DIM] {
        let mut strides = [0isize; MAX_DIM];
        let mut acc = 1isize;
        for a in (0..self.dim).rev() {
            strides[a] = acc;
            acc *= self.extent(a) as isize;
        }
        strides
    }

    /// Dense index of a site inside the box.
    #[inline]
    pub fn index(&self, s: &Site) -> Option<usize> {
        if !self.contains(s) {
            return None;
        }
        let mut idx = 0usize;
        for a in 0..self.dim {
            idx = idx * self.extent(a) + (s.coords[a] - self.lo[a]) as usize;
        }
        Some(idx)
    }

    pub fn site_at(&self, mut index: usize) -> Site {
        let mut coords = [0; MAX_DIM];
        for a in (0..self.dim).rev() {
            let e = self.extent(a);
            coords[a] = self.lo[a] + (index % e) as i64;
            index /= e;
        }
        Site {
            dim: self.dim as u8,
            coords,
        }
    }

    /// All sites in row-major (= lexicographic) order.
    pub fn sites(&self) -> impl Iterator<Item = Site> {
        let b = *self;
        (0..b.len()).map(move |i| b.site_at(i))
    }
}

/// `N_A = ∪_{v∈A} (v + N)`.
pub fn neighborhood(window: &Window, template: &NeighborhoodTemplate) -> SiteSet {
    dilate(window.sites(), template)
}

/// `∂_ext A = N_A \ A`.
pub fn exterior_boundary(window: &Window, template: &NeighborhoodTemplate) -> SiteSet {
    neighborhood(window, template)
        .difference(window.sites())
        .copied()
        .collect()
}

/// `A° = {v : v + N ⊆ A}`, which equals `Z^d \ N_{A^c}` for symmetric `N`.
pub fn interior(sites: &SiteSet, template: &NeighborhoodTemplate) -> SiteSet {
    sites
        .iter()
        .filter(|v| template.around(**v).all(|w| sites.contains(&w)))
        .copied()
        .collect()
}

/// `N_v^+ = N_{N_v}`.
pub fn two_neighborhood(v: Site, template: &NeighborhoodTemplate) -> SiteSet {
    let once: SiteSet = template.around(v).collect();
    dilate(&once, template)
}

pub(crate) fn dilate(sites: &SiteSet, template: &NeighborhoodTemplate) -> SiteSet {
    let mut out = SiteSet::new();
    for v in sites {
        out.extend(template.around(*v));
    }
    out
}

/// Per-window entry of a [`WindowSequenceReport`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WindowCheck {
    pub size: usize,
    pub boundary_size: usize,
    /// `|∂_ext A| / |A|`.
    pub boundary_ratio: f64,
    /// Whether `(N_A)° = A`.
    pub interior_consistent: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WindowSequenceReport {
    pub windows: Vec<WindowCheck>,
    /// Boundary ratio strictly decreasing along the sequence.
    pub ratio_decreasing: bool,
    pub violations: Vec<String>,
}

impl WindowSequenceReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks a finite prefix of a window sequence against the vanishing
/// boundary-ratio and interior-consistency conditions.
pub fn check_window_sequence(
    windows: &[Window],
    template: &NeighborhoodTemplate,
) -> Result<WindowSequenceReport> {
    if windows.is_empty() {
        return Err(Error::InvalidWindow(
            "window sequence must be non-empty".into(),
        ));
    }
    let mut checks = Vec::with_capacity(windows.len());
    let mut violations = Vec::new();
    for (i, w) in windows.iter().enumerate() {
        if w.dim() != template.dim() {
            return Err(Error::DimensionMismatch {
                expected: template.dim(),
                found: w.dim(),
            });
        }
        let nbhd = neighborhood(w, template);
        let boundary_size = nbhd.len() - w.len();
        let consistent = interior(&nbhd, template) == *w.sites();
        if !consistent {
            violations.push(format!("window {i}: (N_A)° differs from A"));
        }
        checks.push(WindowCheck {
            size: w.len(),
            boundary_size,
            boundary_ratio: boundary_size as f64 / w.len() as f64,
            interior_consistent: consistent,
        });
    }
    let ratio_decreasing = checks
        .windows(2)
        .all(|p| p[1].boundary_ratio < p[0].boundary_ratio);
    if !ratio_decreasing {
        violations.push("boundary ratio is not strictly decreasing".into());
    }
    Ok(WindowSequenceReport {
        windows: checks,
        ratio_decreasing,
        violations,
    })
}

/// Graph distances from the origin in the Cayley graph generated by the
/// template offsets, for all sites within `max_steps` steps.
pub fn graph_distances(template: &NeighborhoodTemplate, max_steps: usize) -> BTreeMap<Site, usize> {
    let origin = Site::origin(template.dim());
    let mut dist = BTreeMap::new();
    dist.insert(origin, 0usize);
    let mut queue = VecDeque::from([origin]);
    while let Some(s) = queue.pop_front() {
        let d = dist[&s];
        if d == max_steps {
            continue;
        }
        for w in template.around(s) {
            if let std::collections::btree_map::Entry::Vacant(e) = dist.entry(w) {
                e.insert(d + 1);
                queue.push_back(w);
            }
        }
    }
    dist
}

#[cfg(test)]
mod tests {
    use super::*;

    fn interval(lo: i64, hi: i64) -> SiteSet {
        (lo..=hi).map(Site::at).collect()
    }

    fn square(lo: i64, hi: i64) -> SiteSet {
        let mut s = SiteSet::new();
        for x in lo..=hi {
            for y in lo..=hi {
                s.insert(Site::new(&[x, y]));
            }
        }
        s
    }

    /// Direct enumeration oracle: scan a bounding box and test membership by
    /// definition, independent of the dilation code path.
    fn enumerate_neighborhood(a: &SiteSet, n: &NeighborhoodTemplate) -> SiteSet {
        let bb = BoxRegion::bounding(a.iter()).unwrap().expand(n.radius());
        bb.sites()
            .filter(|w| a.iter().any(|v| n.contains(&(*w - *v))))
            .collect()
    }

    #[test]
    fn template_rejects_asymmetric_and_missing_origin() {
        assert!(NeighborhoodTemplate::new(1, [Site::at(0), Site::at(1)]).is_err());
        assert!(NeighborhoodTemplate::new(1, [Site::at(-1), Site::at(1)]).is_err());
        let t = NeighborhoodTemplate::new(1, [Site::at(-1), Site::at(0), Site::at(1)]).unwrap();
        assert_eq!(t.degree(), 2);
        assert_eq!(t.offsets()[t.center_index()], Site::at(0));
    }

    #[test]
    fn neighborhood_examples() {
        let n1 = NeighborhoodTemplate::box_radius(1, 1);
        let a = Window::new(interval(0, 9)).unwrap();
        assert_eq!(neighborhood(&a, &n1), interval(-1, 10));
        let id = NeighborhoodTemplate::identity(1);
        assert_eq!(
            neighborhood(&Window::single(Site::at(0)), &id),
            interval(0, 0)
        );

        let n2 = NeighborhoodTemplate::box_radius(2, 1);
        let a2 = Window::new(square(-1, 1)).unwrap();
        let got = neighborhood(&a2, &n2);
        assert_eq!(got, enumerate_neighborhood(a2.sites(), &n2));
        assert_eq!(got, square(-2, 2));
    }

    #[test]
    fn exterior_boundary_examples() {
        let n1 = NeighborhoodTemplate::box_radius(1, 1);
        let a = Window::new(interval(0, 9)).unwrap();
        assert_eq!(
            exterior_boundary(&a, &n1),
            [Site::at(-1), Site::at(10)].into_iter().collect()
        );
        let single = Window::single(Site::at(0));
        assert_eq!(
            exterior_boundary(&single, &n1),
            [Site::at(-1), Site::at(1)].into_iter().collect()
        );
        let n2 = NeighborhoodTemplate::box_radius(2, 1);
        let a2 = Window::new(square(-1, 1)).unwrap();
        let ring = exterior_boundary(&a2, &n2);
        let oracle: SiteSet = enumerate_neighborhood(a2.sites(), &n2)
            .difference(a2.sites())
            .copied()
            .collect();
        assert_eq!(ring, oracle);
        assert_eq!(ring.len(), 16);
    }

    #[test]
    fn interior_examples() {
        let n1 = NeighborhoodTemplate::box_radius(1, 1);
        assert_eq!(interior(&interval(0, 9), &n1), interval(1, 8));
        assert!(interior(&interval(0, 0), &n1).is_empty());
        let n2 = NeighborhoodTemplate::box_radius(2, 1);
        assert_eq!(interior(&square(-2, 2), &n2), square(-1, 1));
        // Complement definition on a finite scan: v ∉ N_{A^c}.
        let a = square(-2, 2);
        let scan = BoxRegion::centered(2, 4);
        let complement: SiteSet = scan.sites().filter(|s| !a.contains(s)).collect();
        let oracle: SiteSet = scan
            .sites()
            .filter(|v| BoxRegion::centered(2, 3).contains(v))
            .filter(|v| !complement.iter().any(|w| n2.contains(&(*v - *w))))
            .collect();
        assert_eq!(interior(&a, &n2), oracle);
    }

    #[test]
    fn two_neighborhood_examples() {
        let n1 = NeighborhoodTemplate::box_radius(1, 1);
        assert_eq!(two_neighborhood(Site::at(0), &n1), interval(-2, 2));
        let id = NeighborhoodTemplate::identity(1);
        assert_eq!(two_neighborhood(Site::at(0), &id), interval(0, 0));
        let n2 = NeighborhoodTemplate::box_radius(2, 1);
        let got = two_neighborhood(Site::origin(2), &n2);
        let once = enumerate_neighborhood(&[Site::origin(2)].into_iter().collect(), &n2);
        assert_eq!(got, enumerate_neighborhood(&once, &n2));
        assert_eq!(got, square(-2, 2));
        let d = n2.degree();
        assert!(got.len() <= 1 + d * d);
    }

    #[test]
    fn boxes_satisfy_sequence_conditions() {
        for dim in 1..=2 {
            let n = NeighborhoodTemplate::box_radius(dim, 1);
            let windows: Vec<Window> = [2, 4, 8]
                .iter()
                .map(|&r| Window::centered_box(dim, r).unwrap())
                .collect();
            let report = check_window_sequence(&windows, &n).unwrap();
            assert!(report.is_clean(), "{report:?}");
            assert!(report.windows.iter().all(|w| w.interior_consistent));
            assert!(report.ratio_decreasing);
        }
        let n1 = NeighborhoodTemplate::box_radius(1, 1);
        let r = check_window_sequence(&[Window::single(Site::at(0))], &n1).unwrap();
        assert_eq!(r.windows[0].boundary_ratio, 2.0);
        assert!(r.windows[0].interior_consistent);
    }

    #[test]
    fn l_shaped_window_matches_enumeration() {
        let n = NeighborhoodTemplate::box_radius(2, 1);
        // An L made of a 4x2 bar and a 2x4 bar.
        let mut l = SiteSet::new();
        for x in 0..4 {
            for y in 0..2 {
                l.insert(Site::new(&[x, y]));
            }
        }
        for x in 0..2 {
            for y in 2..4 {
                l.insert(Site::new(&[x, y]));
            }
        }
        let w = Window::new(l.clone()).unwrap();
        let report = check_window_sequence(std::slice::from_ref(&w), &n).unwrap();
        let nb = enumerate_neighborhood(&l, &n);
        let expected_ratio = (nb.len() - l.len()) as f64 / l.len() as f64;
        assert_eq!(report.windows[0].boundary_ratio, expected_ratio);
        // Interior of the neighborhood by definition: sites whose full
        // neighborhood lies in nb.
        let scan = BoxRegion::bounding(nb.iter()).unwrap();
        let int: SiteSet = scan
            .sites()
            .filter(|v| n.offsets().iter().all(|o| nb.contains(&(*v + *o))))
            .collect();
        assert_eq!(report.windows[0].interior_consistent, int == l);
        assert!(report.windows[0].interior_consistent);
    }

    #[test]
    fn cubes_within_matches_radius_rule() {
        let t = NeighborhoodTemplate::cubes_within(1, 0.5).unwrap();
        assert_eq!(t.offsets(), &[Site::at(-1), Site::at(0), Site::at(1)]);
        let t1 = NeighborhoodTemplate::cubes_within(1, 1.0).unwrap();
        assert_eq!(t1.len(), 5);
        let t2 = NeighborhoodTemplate::cubes_within(1, 2.0).unwrap();
        assert_eq!(t2.len(), 7);
        // Corner cubes (±2,±2) sit at distance √2 > 1.
        let t3 = NeighborhoodTemplate::cubes_within(2, 1.0).unwrap();
        assert_eq!(t3.len(), 21);
    }

    #[test]
    fn graph_distance_on_nearest_neighbor_line() {
        let n = NeighborhoodTemplate::box_radius(1, 1);
        let d = graph_distances(&n, 5);
        assert_eq!(d[&Site::at(3)], 3);
        assert_eq!(d[&Site::at(-5)], 5);
        assert!(!d.contains_key(&Site::at(6)));
    }

    #[test]
    fn box_region_indexing_round_trips() {
        let b = BoxRegion::new(2, [-2, 3, 0], [1, 5, 0]);
        for (i, s) in b.sites().enumerate() {
            assert_eq!(b.index(&s), Some(i));
        }
        assert_eq!(b.len(), 12);
    }
}
