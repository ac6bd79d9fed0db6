//! The model contract driven by the engine: a declared rate bound, a local
//! rate function and an outcome sampler fed by one uniform label per event.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::engine::config::{Configuration, Patch, PatchMut};
use crate::engine::streams::{site_rng, StreamTag};
use crate::error::Result;
use crate::lattice::{NeighborhoodTemplate, Site};

/// A translation-invariant jump model on `Z^d`.
///
/// Patches are indexed in the order of `template().offsets()`. `jump` is
/// only called after thinning accepted the event; it must sample from the
/// normalized kernel `α*(x,·)/α*(x)` using `rng` as its only randomness and
/// may rewrite any state in the patch.
pub trait JumpModel: Send + Sync {
    type State: Clone + PartialEq + fmt::Debug + Send + Sync + Default;

    fn name(&self) -> &str;

    fn template(&self) -> &NeighborhoodTemplate;

    /// Uniform bound on `local_rate`; also the rate of every event stream.
    fn c_max(&self) -> f64;

    /// Total jump rate `α*(x)` of the patch.
    fn local_rate(&self, patch: &Patch<'_, Self::State>) -> f64;

    fn jump(&self, patch: &mut PatchMut<'_, Self::State>, rng: &mut LabelRng);

    /// Rejects initial configurations the model cannot evolve.
    fn validate_initial(&self, _config: &Configuration<Self::State>) -> Result<()> {
        Ok(())
    }
}

/// Models whose jump kernel from any patch has finitely many outcomes.
pub trait EnumerableModel: JumpModel {
    /// Every outcome patch with its rate. Outcomes equal to the current patch
    /// may be listed; they carry no generator mass.
    fn kernel(&self, patch: &Patch<'_, Self::State>) -> Vec<(Vec<Self::State>, f64)>;

    /// Whether a local state lies inside the enumerated truncation.
    fn within_truncation(&self, _state: &Self::State) -> bool {
        true
    }
}

/// Randomness available to an outcome sampler.
///
/// The first uniform is the rescaled event label itself; later draws come
/// from a generator seeded by that label, so every outcome is a fixed
/// function of the patch and the label.
#[derive(Clone, Debug)]
pub struct LabelRng {
    label: f64,
    first: bool,
    rng: Option<ChaCha8Rng>,
}

impl LabelRng {
    pub fn new(label: f64) -> Self {
        Self {
            label,
            first: true,
            rng: None,
        }
    }

    /// A uniform in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        if self.first {
            self.first = false;
            return self.label;
        }
        let label = self.label;
        self.rng
            .get_or_insert_with(|| ChaCha8Rng::seed_from_u64(label.to_bits()))
            .random()
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    /// Uniform index in `0..n`; `n` must be positive.
    pub fn index(&mut self, n: usize) -> usize {
        assert!(n > 0, "index of an empty range");
        ((self.uniform() * n as f64) as usize).min(n - 1)
    }

    /// Index `i` with probability `weights[i] / Σ weights`. Weights must be
    /// non-negative with a positive sum.
    pub fn choose_weighted(&mut self, weights: &[f64]) -> usize {
        let total: f64 = weights.iter().sum();
        assert!(total > 0.0, "weights must have positive mass");
        let target = self.uniform() * total;
        let mut acc = 0.0;
        for (i, w) in weights.iter().enumerate() {
            acc += w;
            if target < acc {
                return i;
            }
        }
        weights
            .iter()
            .rposition(|w| *w > 0.0)
            .expect("positive mass")
    }
}

/// Sampler for per-site initial states.
pub type InitialSampler<S> = Arc<dyn Fn(&mut ChaCha8Rng) -> S + Send + Sync>;

/// Initial distribution `ν`, applied independently at every site.
#[derive(Clone)]
pub enum Initial<S> {
    Fixed(S),
    Sampled(InitialSampler<S>),
}

impl<S: Clone> Initial<S> {
    pub fn sampled(f: impl Fn(&mut ChaCha8Rng) -> S + Send + Sync + 'static) -> Self {
        Initial::Sampled(Arc::new(f))
    }

    /// The state of `site`; a pure function of `(seed, site)`.
    pub fn sample(&self, seed: u64, site: &Site) -> S {
        match self {
            Initial::Fixed(s) => s.clone(),
            Initial::Sampled(f) => f(&mut site_rng(seed, site, StreamTag::Initial)),
        }
    }

    pub fn is_deterministic(&self) -> bool {
        matches!(self, Initial::Fixed(_))
    }
}

impl<S: Default> Default for Initial<S> {
    fn default() -> Self {
        Initial::Fixed(S::default())
    }
}

impl<S: fmt::Debug> fmt::Debug for Initial<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Initial::Fixed(s) => f.debug_tuple("Fixed").field(s).finish(),
            Initial::Sampled(_) => f.write_str("Sampled(..)"),
        }
    }
}

/// Seeds of one run: event streams and initial draw.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RunSeeds {
    pub stream: u64,
    pub init: u64,
}

impl RunSeeds {
    pub fn new(stream: u64, init: u64) -> Self {
        Self { stream, init }
    }

    /// Seeds of replicate `index` under `master`.
    pub fn from_master(master: u64, index: u64) -> Self {
        let base = mix(master ^ mix(index.wrapping_add(0x9E37_79B9_7F4A_7C15)));
        Self {
            stream: mix(base ^ 0x5EED_0001),
            init: mix(base ^ 0x5EED_0002),
        }
    }
}

/// SplitMix64 finalizer.
pub fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
