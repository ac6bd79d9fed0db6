//! Monte Carlo drivers for the law of large numbers, the central limit
//! theorem and the locality estimates behind them.
//!
//! Replicate `i` of a plan with seed `s` always uses [`RunSeeds::from_master`]
//! `(s, i)`; replicates run on the current rayon pool and are aggregated in
//! index order, so reports do not depend on the number of workers.

pub mod limits;
pub mod probes;
pub mod summary;

use rayon::prelude::*;
use serde::Serialize;

use crate::engine::model::{Initial, JumpModel, RunSeeds};
use crate::engine::simulate::WindowSim;
use crate::error::{invalid, Error, Result};
use crate::functionals::{site_values, LocalFunctional};
use crate::lattice::{BoxRegion, Window};

pub use limits::{
    covariance_decay, estimate_sigma, increment_moment_probe, run_clt, run_lln, CltReport, CltRow,
    DecayReport, DecayRow, IncrementReport, IncrementRow, LlnReport, LlnRow, SigmaOptions,
    SigmaReport,
};
pub use probes::{
    cluster_tail_probe, coupling_check, oracle_compare, tail_time_scale, ClusterReport, ClusterRow,
    CouplingReport, CouplingRow, OracleReport, TailScale,
};
pub use summary::{Estimate, LineFit};

/// Windows, observation times, replicate count and master seed of an
/// experiment. The model, functional and initial law are passed alongside.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentPlan {
    #[serde(serialize_with = "window_sizes")]
    pub windows: Vec<Window>,
    pub times: Vec<f64>,
    pub replicates: usize,
    pub seed: u64,
}

fn window_sizes<S: serde::Serializer>(w: &[Window], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(w.iter().map(Window::len))
}

impl ExperimentPlan {
    /// Windows must be nested and strictly growing; times strictly
    /// increasing and non-negative.
    pub fn new(
        windows: Vec<Window>,
        times: Vec<f64>,
        replicates: usize,
        seed: u64,
    ) -> Result<Self> {
        if windows.is_empty() {
            return Err(Error::InvalidWindow(
                "at least one window is required".into(),
            ));
        }
        for pair in windows.windows(2) {
            if !(pair[0].is_subset(&pair[1]) && pair[0].len() < pair[1].len()) {
                return Err(Error::InvalidWindow(
                    "windows must be strictly increasing".into(),
                ));
            }
        }
        if times.is_empty() {
            return Err(invalid("times", "at least one time is required"));
        }
        if times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err(invalid("times", "times must be finite and non-negative"));
        }
        if times.windows(2).any(|p| p[0] >= p[1]) {
            return Err(invalid("times", "times must be strictly increasing"));
        }
        if replicates == 0 {
            return Err(invalid("replicates", "must be positive"));
        }
        Ok(Self {
            windows,
            times,
            replicates,
            seed,
        })
    }

    pub fn largest(&self) -> &Window {
        self.windows.last().expect("validated non-empty")
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().expect("validated non-empty")
    }

    pub fn seeds(&self, replicate: usize) -> RunSeeds {
        RunSeeds::from_master(self.seed, replicate as u64)
    }
}

/// Runs `f(0..n)` on the current pool and returns the results in index
/// order; the first failing index determines the error.
pub fn replicate<T: Send>(
    n: usize,
    f: impl Fn(usize) -> Result<T> + Sync + Send,
) -> Result<Vec<T>> {
    let out: Vec<Result<T>> = (0..n).into_par_iter().map(f).collect();
    out.into_iter().collect()
}

/// A model, a patch functional and an initial law: everything needed to
/// sample the field `v ↦ H(L_v ξ_t^{A,ν})`.
pub struct Observed<'a, M: JumpModel + ?Sized, H: ?Sized> {
    pub model: &'a M,
    pub functional: &'a H,
    pub initial: &'a Initial<M::State>,
}

impl<'a, M, H> Observed<'a, M, H>
where
    M: JumpModel + ?Sized,
    H: LocalFunctional<M::State> + ?Sized,
{
    pub fn new(model: &'a M, functional: &'a H, initial: &'a Initial<M::State>) -> Self {
        Self {
            model,
            functional,
            initial,
        }
    }

    /// Field values at each of the increasing `times`, in window order.
    pub fn fields(&self, window: &Window, times: &[f64], seeds: RunSeeds) -> Result<Vec<Vec<f64>>> {
        let reach = self.functional.template(window.dim())?.radius();
        let mut sim = WindowSim::with_margin(self.model, window, self.initial, seeds, reach)?;
        let mut out = Vec::with_capacity(times.len());
        for &t in times {
            sim.advance_to(t)?;
            out.push(site_values(self.functional, window, sim.config())?);
        }
        Ok(out)
    }

    /// `S_H^A(ξ_t^{A,ν})` at each of the increasing `times`.
    pub fn sums(&self, window: &Window, times: &[f64], seeds: RunSeeds) -> Result<Vec<f64>> {
        Ok(self
            .fields(window, times, seeds)?
            .iter()
            .map(|f| summary::pairwise_sum(f))
            .collect())
    }
}

/// Field values laid out by the window's bounding box; the window must be
/// a full box.
pub(crate) fn box_layout(window: &Window) -> Result<(BoxRegion, Vec<usize>)> {
    let bb = window.bounding_box();
    if bb.len() != window.len() {
        return Err(Error::InvalidWindow(
            "lattice sums need a box-shaped window".into(),
        ));
    }
    let slots = window
        .iter()
        .map(|v| bb.index(v).expect("window inside its bounding box"))
        .collect();
    Ok((bb, slots))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plan_validation() {
        let w = |r| Window::centered_box(1, r).unwrap();
        assert!(ExperimentPlan::new(vec![w(2), w(4)], vec![0.5, 1.0], 10, 1).is_ok());
        assert!(ExperimentPlan::new(vec![w(4), w(2)], vec![1.0], 10, 1).is_err());
        assert!(ExperimentPlan::new(vec![w(2)], vec![1.0, 0.5], 10, 1).is_err());
        assert!(ExperimentPlan::new(vec![w(2)], vec![1.0], 0, 1).is_err());
        assert!(ExperimentPlan::new(vec![], vec![1.0], 3, 1).is_err());
    }

    #[test]
    fn replicate_keeps_index_order() {
        let v = replicate(100, |i| Ok(i * i)).unwrap();
        assert_eq!(v, (0..100).map(|i| i * i).collect::<Vec<_>>());
        let err = replicate(10, |i| {
            if i >= 3 {
                Err(invalid("i", format!("{i}")))
            } else {
                Ok(i)
            }
        });
        assert!(matches!(err, Err(Error::InvalidParameter { reason, .. }) if reason == "3"));
    }
}
