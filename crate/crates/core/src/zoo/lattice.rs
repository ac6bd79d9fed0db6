//! Integer-valued lattice models: ballistic deposition, its surface
//! relaxation variant and a two-state flip model.

use crate::engine::config::{Patch, PatchMut};
use crate::engine::model::{EnumerableModel, JumpModel, LabelRng};
use crate::error::{invalid, Result};
use crate::lattice::NeighborhoodTemplate;

fn check_rate(name: &'static str, value: f64) -> Result<()> {
    if !(value.is_finite() && value > 0.0) {
        return Err(invalid(
            name,
            format!("must be positive and finite, got {value}"),
        ));
    }
    Ok(())
}

/// Lattice ballistic deposition: a particle arriving at `v` sticks one layer
/// above the highest column in `v + N`.
///
/// With a cap, arrivals that would exceed the cap are suppressed; the
/// dynamics are then finite and exactly enumerable.
#[derive(Clone, Debug)]
pub struct LatticeBd {
    lambda: f64,
    template: NeighborhoodTemplate,
    cap: Option<u32>,
}

impl LatticeBd {
    pub fn new(lambda: f64, template: NeighborhoodTemplate) -> Result<Self> {
        check_rate("lambda", lambda)?;
        Ok(Self {
            lambda,
            template,
            cap: None,
        })
    }

    pub fn with_cap(mut self, cap: u32) -> Self {
        self.cap = Some(cap);
        self
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn cap(&self) -> Option<u32> {
        self.cap
    }

    fn new_height(patch: &Patch<'_, u32>) -> u32 {
        patch.iter().copied().max().unwrap_or(0) + 1
    }

    fn allowed(&self, height: u32) -> bool {
        self.cap.is_none_or(|c| height <= c)
    }
}

impl JumpModel for LatticeBd {
    type State = u32;

    fn name(&self) -> &str {
        "lattice_bd"
    }

    fn template(&self) -> &NeighborhoodTemplate {
        &self.template
    }

    fn c_max(&self) -> f64 {
        self.lambda
    }

    fn local_rate(&self, patch: &Patch<'_, u32>) -> f64 {
        if self.allowed(Self::new_height(patch)) {
            self.lambda
        } else {
            0.0
        }
    }

    fn jump(&self, patch: &mut PatchMut<'_, u32>, _: &mut LabelRng) {
        let h = Self::new_height(&patch.as_patch());
        *patch.get_mut(self.template.center_index()) = h;
    }
}

impl EnumerableModel for LatticeBd {
    fn kernel(&self, patch: &Patch<'_, u32>) -> Vec<(Vec<u32>, f64)> {
        let rate = self.local_rate(patch);
        if rate == 0.0 {
            return Vec::new();
        }
        let mut after = patch.to_vec();
        after[self.template.center_index()] = Self::new_height(patch);
        vec![(after, rate)]
    }

    /// Heights strictly below the cap: there the cap has never been active.
    fn within_truncation(&self, state: &u32) -> bool {
        self.cap.is_none_or(|c| *state < c)
    }
}

/// Deposition with surface relaxation: the particle lands on a lowest
/// column of `v + N`, ties broken uniformly.
#[derive(Clone, Debug)]
pub struct LatticeBdRelaxed {
    lambda: f64,
    template: NeighborhoodTemplate,
    cap: Option<u32>,
}

impl LatticeBdRelaxed {
    pub fn new(lambda: f64, template: NeighborhoodTemplate) -> Result<Self> {
        check_rate("lambda", lambda)?;
        Ok(Self {
            lambda,
            template,
            cap: None,
        })
    }

    pub fn with_cap(mut self, cap: u32) -> Self {
        self.cap = Some(cap);
        self
    }

    fn lowest(patch: &Patch<'_, u32>) -> (u32, Vec<usize>) {
        let min = patch.iter().copied().min().unwrap_or(0);
        let idx = (0..patch.len()).filter(|&i| *patch.get(i) == min).collect();
        (min, idx)
    }
}

impl JumpModel for LatticeBdRelaxed {
    type State = u32;

    fn name(&self) -> &str {
        "lattice_bd_relaxed"
    }

    fn template(&self) -> &NeighborhoodTemplate {
        &self.template
    }

    fn c_max(&self) -> f64 {
        self.lambda
    }

    fn local_rate(&self, patch: &Patch<'_, u32>) -> f64 {
        let (min, _) = Self::lowest(patch);
        if self.cap.is_none_or(|c| min < c) {
            self.lambda
        } else {
            0.0
        }
    }

    fn jump(&self, patch: &mut PatchMut<'_, u32>, rng: &mut LabelRng) {
        let (_, idx) = Self::lowest(&patch.as_patch());
        let pick = idx[rng.index(idx.len())];
        *patch.get_mut(pick) += 1;
    }
}

impl EnumerableModel for LatticeBdRelaxed {
    fn kernel(&self, patch: &Patch<'_, u32>) -> Vec<(Vec<u32>, f64)> {
        let rate = self.local_rate(patch);
        if rate == 0.0 {
            return Vec::new();
        }
        let (_, idx) = Self::lowest(patch);
        let share = rate / idx.len() as f64;
        idx.iter()
            .map(|&i| {
                let mut after = patch.to_vec();
                after[i] += 1;
                (after, share)
            })
            .collect()
    }

    fn within_truncation(&self, state: &u32) -> bool {
        self.cap.is_none_or(|c| *state < c)
    }
}

/// Independent two-state sites: `0 -> 1` at rate `up`, `1 -> 0` at rate `down`.
#[derive(Clone, Debug)]
pub struct SpinFlip {
    up: f64,
    down: f64,
    template: NeighborhoodTemplate,
}

impl SpinFlip {
    pub fn new(dim: usize, up: f64, down: f64) -> Result<Self> {
        for (name, v) in [("up", up), ("down", down)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(invalid(name, format!("must be non-negative, got {v}")));
            }
        }
        if up == 0.0 && down == 0.0 {
            return Err(invalid("up", "at least one flip rate must be positive"));
        }
        Ok(Self {
            up,
            down,
            template: NeighborhoodTemplate::identity(dim),
        })
    }
}

impl JumpModel for SpinFlip {
    type State = u32;

    fn name(&self) -> &str {
        "flip"
    }

    fn template(&self) -> &NeighborhoodTemplate {
        &self.template
    }

    fn c_max(&self) -> f64 {
        self.up.max(self.down)
    }

    fn local_rate(&self, patch: &Patch<'_, u32>) -> f64 {
        if *patch.get(0) == 0 {
            self.up
        } else {
            self.down
        }
    }

    fn jump(&self, patch: &mut PatchMut<'_, u32>, _: &mut LabelRng) {
        let s = patch.get_mut(0);
        *s = u32::from(*s == 0);
    }
}

impl EnumerableModel for SpinFlip {
    fn kernel(&self, patch: &Patch<'_, u32>) -> Vec<(Vec<u32>, f64)> {
        let s = *patch.get(0);
        vec![(vec![u32::from(s == 0)], self.local_rate(patch))]
    }
}
