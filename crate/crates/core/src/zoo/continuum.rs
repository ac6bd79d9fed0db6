//! Continuum models on `R^d` embedded into unit cubes: random sequential
//! adsorption, ballistic deposition, and off-lattice voter, exclusion and
//! zero-range dynamics.

use crate::engine::config::{Configuration, Patch, PatchLayout, PatchMut};
use rand::Rng;

use crate::engine::model::{Initial, JumpModel, LabelRng};
use crate::error::{invalid, Error, Result};
use crate::lattice::{NeighborhoodTemplate, MAX_DIM};
use crate::zoo::points::{
    check_dim, euclid, for_each_point, packing_cap, place, relative, Mark, MarkedPoint,
    MarkedPointSet,
};

/// Absolute tolerance for geometric contact, in ball-diameter units.
pub const CONTACT_TOL: f64 = 1e-9;

fn positive(name: &'static str, v: f64) -> Result<()> {
    if !(v.is_finite() && v > 0.0) {
        return Err(invalid(
            name,
            format!("must be positive and finite, got {v}"),
        ));
    }
    Ok(())
}

fn uniform_point(rng: &mut LabelRng, dim: usize) -> [f64; MAX_DIM] {
    let mut x = [0.0; MAX_DIM];
    for c in x.iter_mut().take(dim) {
        *c = rng.uniform();
    }
    x
}

/// Uniform point of the closed ball of radius `r`, by rejection from the cube.
fn uniform_in_ball(rng: &mut LabelRng, dim: usize, r: f64) -> [f64; MAX_DIM] {
    loop {
        let mut y = [0.0; MAX_DIM];
        for c in y.iter_mut().take(dim) {
            *c = 2.0 * rng.uniform() - 1.0;
        }
        if y.iter().map(|c| c * c).sum::<f64>() <= 1.0 {
            for c in y.iter_mut() {
                *c *= r;
            }
            return y;
        }
    }
}

fn min_distance_ok(
    patch: &Patch<'_, MarkedPointSet>,
    template: &NeighborhoodTemplate,
    x: &[f64; MAX_DIM],
    spacing: f64,
    skip: Option<(usize, usize)>,
) -> bool {
    let dim = template.dim();
    let mut ok = true;
    for_each_point(patch, template, |i, j, y, _| {
        if ok && Some((i, j)) != skip && euclid(x, &y, dim) < spacing {
            ok = false;
        }
    });
    ok
}

/// Checks that all points of `config` are pairwise at least `spacing` apart.
fn check_spacing(
    config: &Configuration<MarkedPointSet>,
    template: &NeighborhoodTemplate,
    spacing: f64,
) -> Result<()> {
    let layout = PatchLayout::new(config.region(), template);
    let dim = template.dim();
    let center = template.center_index();
    for (v, cell) in config.iter() {
        if cell.is_empty() {
            continue;
        }
        if let Some(p) = cell
            .iter()
            .find(|p| p.pos[..dim].iter().any(|c| !(0.0..1.0).contains(c)))
        {
            return Err(Error::InvalidInitialCondition(format!(
                "point {:?} in cube {v} has local coordinates outside [0,1)",
                &p.pos[..dim]
            )));
        }
        if !config.covers_patch(&layout, &v) {
            continue;
        }
        let patch = config.patch(&layout, &v)?;
        for (j, p) in cell.iter().enumerate() {
            let x = relative(&crate::lattice::Site::origin(dim), p, dim);
            if !min_distance_ok(&patch, template, &x, spacing, Some((center, j))) {
                return Err(Error::InvalidInitialCondition(format!(
                    "points closer than {spacing} near cube {v}"
                )));
            }
        }
    }
    Ok(())
}

/// Random sequential adsorption of unit-diameter balls, optionally with
/// desorption of each adsorbed ball at rate `desorption`.
#[derive(Clone, Debug)]
pub struct Rsa {
    lambda: f64,
    desorption: f64,
    template: NeighborhoodTemplate,
    cap: usize,
}

impl Rsa {
    pub fn new(lambda: f64, desorption: f64, dim: usize) -> Result<Self> {
        positive("lambda", lambda)?;
        if !(desorption.is_finite() && desorption >= 0.0) {
            return Err(invalid(
                "desorption",
                format!("must be non-negative, got {desorption}"),
            ));
        }
        check_dim(dim)?;
        Ok(Self {
            lambda,
            desorption,
            template: NeighborhoodTemplate::cubes_within(dim, 1.0)?,
            cap: packing_cap(dim, 1.0),
        })
    }
}

impl JumpModel for Rsa {
    type State = MarkedPointSet;

    fn name(&self) -> &str {
        "rsa"
    }

    fn template(&self) -> &NeighborhoodTemplate {
        &self.template
    }

    fn c_max(&self) -> f64 {
        self.lambda + self.desorption * self.cap as f64
    }

    fn local_rate(&self, patch: &Patch<'_, MarkedPointSet>) -> f64 {
        let n = patch.get(self.template.center_index()).len();
        self.lambda + self.desorption * n as f64
    }

    fn jump(&self, patch: &mut PatchMut<'_, MarkedPointSet>, rng: &mut LabelRng) {
        let c = self.template.center_index();
        let n = patch.get(c).len();
        let total = self.lambda + self.desorption * n as f64;
        if rng.uniform() * total >= self.lambda {
            let k = rng.index(n);
            patch.get_mut(c).remove(k);
            return;
        }
        let x = uniform_point(rng, self.template.dim());
        if min_distance_ok(&patch.as_patch(), &self.template, &x, 1.0, None) {
            place(patch, &self.template, &x, Mark::None);
        }
    }

    fn validate_initial(&self, config: &Configuration<MarkedPointSet>) -> Result<()> {
        check_spacing(config, &self.template, 1.0)
    }
}

/// Multilayer ballistic deposition: balls fall vertically and stick at
/// first contact with the substrate or a deposited ball. Marks are center
/// heights.
#[derive(Clone, Debug)]
pub struct MultilayerBdStick {
    lambda: f64,
    template: NeighborhoodTemplate,
}

impl MultilayerBdStick {
    pub fn new(lambda: f64, dim: usize) -> Result<Self> {
        positive("lambda", lambda)?;
        if !(1..=2).contains(&dim) {
            return Err(invalid(
                "dimension",
                format!("substrate dimension must be 1 or 2, got {dim}"),
            ));
        }
        Ok(Self {
            lambda,
            template: NeighborhoodTemplate::cubes_within(dim, 1.0)?,
        })
    }

    /// Resting height of a ball dropped at `x` onto the patch.
    pub fn landing_height(&self, patch: &Patch<'_, MarkedPointSet>, x: &[f64; MAX_DIM]) -> f64 {
        let dim = self.template.dim();
        let mut h: f64 = 0.5;
        for_each_point(patch, &self.template, |_, _, y, p| {
            let rho = euclid(x, &y, dim);
            if rho < 1.0 {
                if let Some(theta) = p.mark.height() {
                    h = h.max(theta + (1.0 - rho * rho).sqrt());
                }
            }
        });
        h
    }
}

impl JumpModel for MultilayerBdStick {
    type State = MarkedPointSet;

    fn name(&self) -> &str {
        "multilayer_bd_stick"
    }

    fn template(&self) -> &NeighborhoodTemplate {
        &self.template
    }

    fn c_max(&self) -> f64 {
        self.lambda
    }

    fn local_rate(&self, _: &Patch<'_, MarkedPointSet>) -> f64 {
        self.lambda
    }

    fn jump(&self, patch: &mut PatchMut<'_, MarkedPointSet>, rng: &mut LabelRng) {
        let x = uniform_point(rng, self.template.dim());
        let h = self.landing_height(&patch.as_patch(), &x);
        place(patch, &self.template, &x, Mark::Height(h));
    }
}

/// Monolayer ballistic deposition on the line with rolling: a ball hitting
/// a deposited ball rolls off it and is kept only if it comes to rest on
/// the substrate.
#[derive(Clone, Debug)]
pub struct MonolayerBdRolling1d {
    lambda: f64,
    template: NeighborhoodTemplate,
}

/// Largest displacement between arrival and resting position.
pub const ROLLING_REACH: f64 = 1.0;

impl MonolayerBdRolling1d {
    pub fn new(lambda: f64) -> Result<Self> {
        positive("lambda", lambda)?;
        Ok(Self {
            lambda,
            template: NeighborhoodTemplate::cubes_within(1, ROLLING_REACH + 1.0)?,
        })
    }

    /// Resting position for an arrival at `x`, or `None` if rejected.
    pub fn resting_position(
        &self,
        patch: &Patch<'_, MarkedPointSet>,
        x: f64,
        rng: &mut LabelRng,
    ) -> Option<f64> {
        let mut centers = Vec::new();
        for_each_point(patch, &self.template, |_, _, y, _| centers.push(y[0]));
        let mut near: Vec<f64> = centers
            .iter()
            .copied()
            .filter(|c| (c - x).abs() < 1.0)
            .collect();
        if near.is_empty() {
            return Some(x);
        }
        let best = near
            .iter()
            .map(|c| (c - x).abs())
            .fold(f64::INFINITY, f64::min);
        near.retain(|c| (c - x).abs() == best);
        let target = near[rng.index(near.len())];
        let side = if x > target {
            1.0
        } else if x < target {
            -1.0
        } else if rng.bernoulli(0.5) {
            1.0
        } else {
            -1.0
        };
        let rest = target + side;
        let blocked = centers
            .iter()
            .any(|c| *c != target && (c - rest).abs() < 1.0 - CONTACT_TOL);
        (!blocked).then_some(rest)
    }
}

impl JumpModel for MonolayerBdRolling1d {
    type State = MarkedPointSet;

    fn name(&self) -> &str {
        "monolayer_bd_rolling_1d"
    }

    fn template(&self) -> &NeighborhoodTemplate {
        &self.template
    }

    fn c_max(&self) -> f64 {
        self.lambda
    }

    fn local_rate(&self, _: &Patch<'_, MarkedPointSet>) -> f64 {
        self.lambda
    }

    fn jump(&self, patch: &mut PatchMut<'_, MarkedPointSet>, rng: &mut LabelRng) {
        let x = rng.uniform();
        if let Some(rest) = self.resting_position(&patch.as_patch(), x, rng) {
            place(patch, &self.template, &[rest, 0.0, 0.0], Mark::None);
        }
    }

    fn validate_initial(&self, config: &Configuration<MarkedPointSet>) -> Result<()> {
        check_spacing(config, &self.template, 1.0 - CONTACT_TOL)
    }
}

/// Jump law: uniform on the closed ball of the given radius.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UniformBall {
    pub radius: f64,
}

impl UniformBall {
    pub fn new(radius: f64) -> Result<Self> {
        positive("jump_radius", radius)?;
        Ok(Self { radius })
    }

    fn sample(&self, rng: &mut LabelRng, dim: usize) -> [f64; MAX_DIM] {
        uniform_in_ball(rng, dim, self.radius)
    }
}

/// Continuum exclusion: each particle attempts jumps at rate `lambda`,
/// blocked if the destination is within `spacing` of another particle.
#[derive(Clone, Debug)]
pub struct ContinuumExclusion {
    lambda: f64,
    spacing: f64,
    law: UniformBall,
    template: NeighborhoodTemplate,
    cap: usize,
}

impl ContinuumExclusion {
    pub fn new(lambda: f64, spacing: f64, law: UniformBall, dim: usize) -> Result<Self> {
        positive("lambda", lambda)?;
        positive("epsilon", spacing)?;
        check_dim(dim)?;
        Ok(Self {
            lambda,
            spacing,
            law,
            template: NeighborhoodTemplate::cubes_within(dim, law.radius + spacing)?,
            cap: packing_cap(dim, spacing),
        })
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }
}

/// Product initial law with at most one point per cube: with probability
/// `density` a cube holds one point uniform in `[0, 1 - spacing)^d`, so points
/// in different cubes are at least `spacing` apart.
pub fn spaced_initial(dim: usize, spacing: f64, density: f64) -> Result<Initial<MarkedPointSet>> {
    check_dim(dim)?;
    if !(spacing > 0.0 && spacing < 1.0) {
        return Err(invalid(
            "epsilon",
            format!("spaced initial law needs spacing in (0, 1), got {spacing}"),
        ));
    }
    if !(0.0..=1.0).contains(&density) {
        return Err(invalid(
            "initial_density",
            format!("must lie in [0, 1], got {density}"),
        ));
    }
    Ok(Initial::sampled(move |rng| {
        if rng.random::<f64>() >= density {
            return Vec::new();
        }
        let mut pos = [0.0; MAX_DIM];
        for c in pos.iter_mut().take(dim) {
            *c = rng.random::<f64>() * (1.0 - spacing);
        }
        vec![MarkedPoint {
            pos,
            mark: Mark::None,
        }]
    }))
}

impl JumpModel for ContinuumExclusion {
    type State = MarkedPointSet;

    fn name(&self) -> &str {
        "exclusion"
    }

    fn template(&self) -> &NeighborhoodTemplate {
        &self.template
    }

    fn c_max(&self) -> f64 {
        self.lambda * self.cap as f64
    }

    fn local_rate(&self, patch: &Patch<'_, MarkedPointSet>) -> f64 {
        self.lambda * patch.get(self.template.center_index()).len() as f64
    }

    fn jump(&self, patch: &mut PatchMut<'_, MarkedPointSet>, rng: &mut LabelRng) {
        let dim = self.template.dim();
        let c = self.template.center_index();
        let k = rng.index(patch.get(c).len());
        let p = patch.get(c)[k];
        let step = self.law.sample(rng, dim);
        let mut dest = [0.0; MAX_DIM];
        for a in 0..dim {
            dest[a] = p.pos[a] + step[a];
        }
        if min_distance_ok(
            &patch.as_patch(),
            &self.template,
            &dest,
            self.spacing,
            Some((c, k)),
        ) {
            patch.get_mut(c).remove(k);
            place(patch, &self.template, &dest, p.mark);
        }
    }

    fn validate_initial(&self, config: &Configuration<MarkedPointSet>) -> Result<()> {
        check_spacing(config, &self.template, self.spacing)
    }
}

/// Jump rates `λ_n` of a zero-range particle with `n` close neighbors.
#[derive(Clone, Debug, PartialEq)]
pub enum ZeroRangeRates {
    /// `λ_n = λ / (n + 1)`.
    Harmonic(f64),
    /// `λ_n = values[n]` for `n < values.len()`, zero beyond.
    Table(Vec<f64>),
}

impl ZeroRangeRates {
    pub fn rate(&self, n: usize) -> f64 {
        match self {
            ZeroRangeRates::Harmonic(l) => l / (n as f64 + 1.0),
            ZeroRangeRates::Table(v) => v.get(n).copied().unwrap_or(0.0),
        }
    }

    /// `sup_n (n + 1) λ_n`.
    pub fn crowd_bound(&self) -> f64 {
        match self {
            ZeroRangeRates::Harmonic(l) => *l,
            ZeroRangeRates::Table(v) => v
                .iter()
                .enumerate()
                .map(|(n, r)| (n as f64 + 1.0) * r)
                .fold(0.0, f64::max),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match self {
            ZeroRangeRates::Harmonic(l) => l.is_finite() && *l > 0.0,
            ZeroRangeRates::Table(v) => {
                v.iter().all(|r| r.is_finite() && *r >= 0.0) && v.iter().any(|r| *r > 0.0)
            }
        };
        if ok {
            Ok(())
        } else {
            Err(invalid(
                "rates",
                "rates must be finite, non-negative and not all zero",
            ))
        }
    }
}

/// Continuum zero-range process: a particle with `n` others within
/// `radius` jumps at rate `λ_n`; jumps always succeed.
#[derive(Clone, Debug)]
pub struct ZeroRange {
    rates: ZeroRangeRates,
    radius: f64,
    law: UniformBall,
    template: NeighborhoodTemplate,
    c_max: f64,
}

impl ZeroRange {
    pub fn new(rates: ZeroRangeRates, radius: f64, law: UniformBall, dim: usize) -> Result<Self> {
        rates.validate()?;
        positive("epsilon", radius)?;
        check_dim(dim)?;
        // Points in one cell of side radius/√d are mutually within `radius`,
        // so a cell holding m points contributes at most sup_n (n+1) λ_n.
        let c_max = packing_cap(dim, radius) as f64 * rates.crowd_bound();
        Ok(Self {
            template: NeighborhoodTemplate::cubes_within(dim, law.radius.max(radius))?,
            rates,
            radius,
            law,
            c_max,
        })
    }

    fn particle_rates(&self, patch: &Patch<'_, MarkedPointSet>) -> Vec<f64> {
        let dim = self.template.dim();
        let c = self.template.center_index();
        let cell = patch.get(c);
        let origin = crate::lattice::Site::origin(dim);
        cell.iter()
            .enumerate()
            .map(|(j, p)| {
                let x = relative(&origin, p, dim);
                let mut n = 0;
                for_each_point(patch, &self.template, |i, k, y, _| {
                    if (i, k) != (c, j) && euclid(&x, &y, dim) <= self.radius {
                        n += 1;
                    }
                });
                self.rates.rate(n)
            })
            .collect()
    }
}

impl JumpModel for ZeroRange {
    type State = MarkedPointSet;

    fn name(&self) -> &str {
        "zero_range"
    }

    fn template(&self) -> &NeighborhoodTemplate {
        &self.template
    }

    fn c_max(&self) -> f64 {
        self.c_max
    }

    fn local_rate(&self, patch: &Patch<'_, MarkedPointSet>) -> f64 {
        self.particle_rates(patch).iter().sum()
    }

    fn jump(&self, patch: &mut PatchMut<'_, MarkedPointSet>, rng: &mut LabelRng) {
        let dim = self.template.dim();
        let c = self.template.center_index();
        let weights = self.particle_rates(&patch.as_patch());
        let k = rng.choose_weighted(&weights);
        let p = patch.get_mut(c).remove(k);
        let step = self.law.sample(rng, dim);
        let mut dest = [0.0; MAX_DIM];
        for a in 0..dim {
            dest[a] = p.pos[a] + step[a];
        }
        place(patch, &self.template, &dest, p.mark);
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VoterVariant {
    /// Copy a uniformly chosen point within range with probability `p`.
    I,
    /// Copy the nearest point within range.
    II,
}

/// Immigration-only two-color voter model in the continuum.
#[derive(Clone, Debug)]
pub struct VoterContinuum {
    lambda: f64,
    range: f64,
    copy_prob: f64,
    variant: VoterVariant,
    template: NeighborhoodTemplate,
}

impl VoterContinuum {
    /// `lambda = 0` is allowed and gives a model without events.
    pub fn new(
        lambda: f64,
        range: f64,
        copy_prob: f64,
        variant: VoterVariant,
        dim: usize,
    ) -> Result<Self> {
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(invalid(
                "lambda",
                format!("must be non-negative, got {lambda}"),
            ));
        }
        positive("range", range)?;
        if !(0.0..=1.0).contains(&copy_prob) {
            return Err(invalid("p", format!("must lie in [0, 1], got {copy_prob}")));
        }
        check_dim(dim)?;
        Ok(Self {
            lambda,
            range,
            copy_prob,
            variant,
            template: NeighborhoodTemplate::cubes_within(dim, range)?,
        })
    }

    fn color(
        &self,
        patch: &Patch<'_, MarkedPointSet>,
        x: &[f64; MAX_DIM],
        rng: &mut LabelRng,
    ) -> u8 {
        let dim = self.template.dim();
        let mut near: Vec<(f64, u8)> = Vec::new();
        for_each_point(patch, &self.template, |_, _, y, p| {
            let d = euclid(x, &y, dim);
            if d <= self.range {
                near.push((d, p.mark.color().unwrap_or(0)));
            }
        });
        let copied = match self.variant {
            _ if near.is_empty() => None,
            VoterVariant::I => {
                let pick = near[rng.index(near.len())].1;
                rng.bernoulli(self.copy_prob).then_some(pick)
            }
            VoterVariant::II => near.iter().min_by(|a, b| a.0.total_cmp(&b.0)).map(|n| n.1),
        };
        copied.unwrap_or_else(|| u8::from(rng.bernoulli(0.5)))
    }
}

impl JumpModel for VoterContinuum {
    type State = MarkedPointSet;

    fn name(&self) -> &str {
        match self.variant {
            VoterVariant::I => "voter_I",
            VoterVariant::II => "voter_II",
        }
    }

    fn template(&self) -> &NeighborhoodTemplate {
        &self.template
    }

    fn c_max(&self) -> f64 {
        self.lambda
    }

    fn local_rate(&self, _: &Patch<'_, MarkedPointSet>) -> f64 {
        self.lambda
    }

    fn jump(&self, patch: &mut PatchMut<'_, MarkedPointSet>, rng: &mut LabelRng) {
        let x = uniform_point(rng, self.template.dim());
        let color = self.color(&patch.as_patch(), &x, rng);
        place(patch, &self.template, &x, Mark::Color(color));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::config::identity_deltas;
    use crate::lattice::Site;
    use crate::zoo::points::MarkedPoint;

    /// Patch states in template order with the given points placed by
    /// position relative to the center cube.
    fn patch_with(template: &NeighborhoodTemplate, pts: &[(f64, Mark)]) -> Vec<MarkedPointSet> {
        let mut states = vec![MarkedPointSet::new(); template.len()];
        let d = identity_deltas(template.len());
        let mut pm = PatchMut::from_slice(&mut states, &d);
        for (x, m) in pts {
            place(&mut pm, template, &[*x, 0.0, 0.0], *m);
        }
        states
    }

    #[test]
    fn stick_heights() {
        let m = MultilayerBdStick::new(1.0, 1).unwrap();
        let d = identity_deltas(m.template().len());
        let empty = patch_with(m.template(), &[]);
        assert_eq!(
            m.landing_height(&Patch::from_slice(&empty, &d), &[0.3, 0.0, 0.0]),
            0.5
        );
        let one = patch_with(m.template(), &[(0.0, Mark::Height(0.5))]);
        let p = Patch::from_slice(&one, &d);
        assert_eq!(m.landing_height(&p, &[0.0, 0.0, 0.0]), 1.5);
        let h = m.landing_height(&p, &[0.6, 0.0, 0.0]);
        assert!((h - 1.3).abs() < 1e-12, "{h}");
    }

    #[test]
    fn rolling_examples() {
        let m = MonolayerBdRolling1d::new(1.0).unwrap();
        let d = identity_deltas(m.template().len());
        let one = patch_with(m.template(), &[(0.0, Mark::None)]);
        let rest = m.resting_position(&Patch::from_slice(&one, &d), 0.4, &mut LabelRng::new(0.5));
        assert_eq!(rest, Some(1.0));
        let two = patch_with(m.template(), &[(0.0, Mark::None), (1.8, Mark::None)]);
        let rest = m.resting_position(&Patch::from_slice(&two, &d), 0.8, &mut LabelRng::new(0.5));
        assert_eq!(rest, None);
        let empty = patch_with(m.template(), &[]);
        let rest = m.resting_position(
            &Patch::from_slice(&empty, &d),
            0.25,
            &mut LabelRng::new(0.5),
        );
        assert_eq!(rest, Some(0.25));
    }

    #[test]
    fn rolling_direction_is_uniform_on_a_direct_hit() {
        let m = MonolayerBdRolling1d::new(1.0).unwrap();
        let d = identity_deltas(m.template().len());
        let s = patch_with(m.template(), &[(0.5, Mark::None)]);
        let p = Patch::from_slice(&s, &d);
        let mut right = 0;
        let n = 1000;
        for k in 0..n {
            let rest = m
                .resting_position(&p, 0.5, &mut LabelRng::new((k as f64 + 0.5) / n as f64))
                .unwrap();
            assert!(rest == 1.5 || rest == -0.5, "{rest}");
            if rest == 1.5 {
                right += 1;
            }
        }
        assert!((400..=600).contains(&right), "{right}");
    }

    #[test]
    fn rsa_rejects_close_arrival_across_cube_boundary() {
        let m = Rsa::new(1.0, 0.0, 1).unwrap();
        let d = identity_deltas(m.template().len());
        // Existing point at local 0.95 of cube -1, i.e. -0.05; arrival at 0.94.
        let s = patch_with(m.template(), &[(-0.05, Mark::None)]);
        let p = Patch::from_slice(&s, &d);
        assert!(!min_distance_ok(
            &p,
            m.template(),
            &[0.94, 0.0, 0.0],
            1.0,
            None
        ));
        assert!(min_distance_ok(
            &p,
            m.template(),
            &[0.96, 0.0, 0.0],
            1.0,
            None
        ));
    }

    #[test]
    fn exclusion_blocks_close_destination() {
        let law = UniformBall::new(0.5).unwrap();
        let m = ContinuumExclusion::new(1.0, 0.2, law, 1).unwrap();
        let d = identity_deltas(m.template().len());
        let s = patch_with(m.template(), &[(0.1, Mark::None), (0.31, Mark::None)]);
        let p = Patch::from_slice(&s, &d);
        let c = m.template().center_index();
        // Destination 0.49 is 0.18 < ε from the other particle.
        assert!(!min_distance_ok(
            &p,
            m.template(),
            &[0.49, 0.0, 0.0],
            0.2,
            Some((c, 0))
        ));
        assert!(min_distance_ok(
            &p,
            m.template(),
            &[0.75, 0.0, 0.0],
            0.2,
            Some((c, 0))
        ));
    }

    #[test]
    fn exclusion_validation_rejects_crowded_start() {
        let law = UniformBall::new(0.5).unwrap();
        let m = ContinuumExclusion::new(1.0, 0.2, law, 1).unwrap();
        let region = crate::lattice::BoxRegion::centered(1, 3);
        let mut cfg = Configuration::filled(region, MarkedPointSet::new());
        cfg.set(
            &Site::at(0),
            vec![
                MarkedPoint::new(&[0.1], Mark::None),
                MarkedPoint::new(&[0.2], Mark::None),
            ],
        )
        .unwrap();
        assert!(matches!(
            m.validate_initial(&cfg),
            Err(Error::InvalidInitialCondition(_))
        ));
    }

    #[test]
    fn zero_range_bound_and_frozen_pairs() {
        let law = UniformBall::new(0.5).unwrap();
        let m = ZeroRange::new(ZeroRangeRates::Table(vec![2.0]), 0.3, law, 1).unwrap();
        assert_eq!(m.c_max(), 4.0 * 2.0);
        let d = identity_deltas(m.template().len());
        let s = patch_with(m.template(), &[(0.1, Mark::None), (0.3, Mark::None)]);
        assert_eq!(m.local_rate(&Patch::from_slice(&s, &d)), 0.0);
        let lone = patch_with(m.template(), &[(0.1, Mark::None)]);
        assert_eq!(m.local_rate(&Patch::from_slice(&lone, &d)), 2.0);
    }

    #[test]
    fn voter_ii_copies_single_neighbor() {
        let m = VoterContinuum::new(1.0, 1.0, 1.0, VoterVariant::II, 1).unwrap();
        let d = identity_deltas(m.template().len());
        let s = patch_with(m.template(), &[(0.5, Mark::Color(1))]);
        let p = Patch::from_slice(&s, &d);
        for k in 0..50 {
            let mut rng = LabelRng::new(k as f64 / 50.0);
            assert_eq!(m.color(&p, &[0.2, 0.0, 0.0], &mut rng), 1);
        }
    }
}
