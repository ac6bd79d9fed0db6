//! Locality probes: influence-cluster tails, exact coupling of nested
//! windows, and comparison with the exact law of small systems.

use std::hash::Hash;

use serde::Serialize;

use crate::engine::cluster::reverse_reach;
use crate::engine::config::Configuration;
use crate::engine::generator::generator_matrix;
use crate::engine::model::{EnumerableModel, Initial, JumpModel, RunSeeds};
use crate::engine::simulate::{check_coupling_input, compare_probes, WindowSim};
use crate::engine::streams::StreamFamily;
use crate::error::{invalid, Error, Result};
use crate::lattice::{graph_distances, BoxRegion, NeighborhoodTemplate, Site, Window};
use crate::stats::replicate;
use crate::stats::summary::Estimate;

/// Stream seed perturbation used to decouple the inner run when a coupling
/// fault is injected.
const FAULT_SALT: u64 = 0xFA01_7FA0_17FA_017F;

/// Time scale of the cluster tail bound for a template and rate bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TailScale {
    /// Maximal number of neighbors `D`.
    pub degree: usize,
    /// `θ = 4 D² c_max`, so that `c_max / (c_max + θ) < 1 / (4D²)`.
    pub theta: f64,
    /// `δ = 0.99 ln 2 / θ`, so that `e^{θδ} < 2`.
    pub delta: f64,
}

pub fn tail_time_scale(template: &NeighborhoodTemplate, c_max: f64) -> Result<TailScale> {
    if !(c_max.is_finite() && c_max > 0.0) {
        return Err(invalid("c_max", format!("must be positive, got {c_max}")));
    }
    let degree = template.degree().max(1);
    let theta = 4.0 * (degree * degree) as f64 * c_max;
    Ok(TailScale {
        degree,
        theta,
        delta: 0.99 * std::f64::consts::LN_2 / theta,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClusterRow {
    pub n: usize,
    pub time: f64,
    pub empirical_p: f64,
    pub std_err: f64,
    pub bound: f64,
    pub replicates: usize,
    /// `empirical_p <= 2^{-n} + 3 std_err`.
    pub within_bound: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClusterReport {
    pub scale: TailScale,
    pub rows: Vec<ClusterRow>,
    /// Empirical log-probabilities decrease at least linearly in `n`:
    /// successive positive probabilities drop by at least the bound's factor
    /// up to sampling error.
    pub log_linear: bool,
}

/// Empirical probability that a site at graph distance at least `2n` from
/// the origin affects the origin by time `δn`.
pub fn cluster_tail_probe(
    template: &NeighborhoodTemplate,
    c_max: f64,
    n_values: &[usize],
    replicates: usize,
    seed: u64,
) -> Result<ClusterReport> {
    if n_values.is_empty() || n_values.contains(&0) {
        return Err(invalid("n", "values must be positive"));
    }
    if replicates == 0 {
        return Err(invalid("replicates", "must be positive"));
    }
    let scale = tail_time_scale(template, c_max)?;
    let dim = template.dim();
    let plus = template.doubled();
    let origin = Site::origin(dim);
    let n_max = *n_values.iter().max().expect("non-empty");
    let region = BoxRegion::centered(dim, plus.radius() * (4 * n_max as i64 + 20));
    let distances = graph_distances(template, 2 * n_max);

    let hits = replicate(replicates, |i| {
        let family = StreamFamily::new(RunSeeds::from_master(seed, i as u64).stream, c_max)?;
        n_values
            .iter()
            .map(|&n| {
                let t = scale.delta * n as f64;
                let members = reverse_reach(&family, &plus, origin, [origin], t, &region).map_err(
                    |e| match e {
                        Error::ClusterEscape { site, .. } => Error::Geometry(format!(
                            "cluster reached {site} at the probe region boundary; region too small"
                        )),
                        e => e,
                    },
                )?;
                Ok(members
                    .iter()
                    .any(|w| distances.get(&(*w - origin)).is_none_or(|d| *d >= 2 * n)))
            })
            .collect::<Result<Vec<bool>>>()
    })?;

    let mut rows = Vec::new();
    for (k, &n) in n_values.iter().enumerate() {
        let count = hits.iter().filter(|h| h[k]).count();
        let p = count as f64 / replicates as f64;
        let std_err = (p * (1.0 - p) / replicates as f64).sqrt();
        let bound = 0.5f64.powi(n as i32);
        rows.push(ClusterRow {
            n,
            time: scale.delta * n as f64,
            empirical_p: p,
            std_err,
            bound,
            replicates,
            within_bound: p <= bound + 3.0 * std_err,
        });
    }
    let log_linear = rows.windows(2).all(|w| {
        let (a, b) = (&w[0], &w[1]);
        let steps = (b.n - a.n) as i32;
        b.empirical_p <= a.empirical_p * 0.5f64.powi(steps) + 3.0 * a.std_err.hypot(b.std_err)
            || b.empirical_p == 0.0
    });
    Ok(ClusterReport {
        scale,
        rows,
        log_linear,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CouplingRow {
    pub replicate: usize,
    pub probe_site: Site,
    pub hypothesis_met: bool,
    pub agreement: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CouplingReport {
    pub rows: Vec<CouplingRow>,
    /// Probes whose influence cluster stays inside the inner window.
    pub hypothesis_met: usize,
    /// Probes excluded because their cluster left the inner window.
    pub escaped: usize,
    /// Probes with contained cluster but disagreeing neighborhoods.
    pub violations: usize,
}

/// Runs `A ⊆ B` on shared streams for each replicate and checks agreement on
/// `N_v` at every probe whose cluster lies in `A`.
///
/// `inject_fault` drives the inner window with unrelated streams; it exists
/// to exercise the failure path and must be false for real checks.
#[allow(clippy::too_many_arguments)]
pub fn coupling_check<M: JumpModel + ?Sized>(
    model: &M,
    inner: &Window,
    outer: &Window,
    initial: &Initial<M::State>,
    tau: f64,
    probes: &[Site],
    replicates: usize,
    seed: u64,
    inject_fault: bool,
) -> Result<CouplingReport> {
    check_coupling_input(inner, outer, probes)?;
    let per_rep = replicate(replicates, |i| {
        let seeds = RunSeeds::from_master(seed, i as u64);
        let inner_stream = if inject_fault {
            seeds.stream ^ FAULT_SALT
        } else {
            seeds.stream
        };
        let mut a = WindowSim::with_streams(model, inner, initial, seeds.init, inner_stream, 0)?;
        a.advance_to(tau)?;
        let mut b = WindowSim::new(model, outer, initial, seeds)?;
        b.advance_to(tau)?;
        compare_probes(
            model,
            inner,
            a.config(),
            b.config(),
            tau,
            seeds.stream,
            probes,
        )
    })?;
    let mut rows = Vec::new();
    for (replicate, probes) in per_rep.into_iter().enumerate() {
        rows.extend(probes.into_iter().map(|p| CouplingRow {
            replicate,
            probe_site: p.site,
            hypothesis_met: p.hypothesis_met,
            agreement: p.agreement,
        }));
    }
    let hypothesis_met = rows.iter().filter(|r| r.hypothesis_met).count();
    let violations = rows
        .iter()
        .filter(|r| r.hypothesis_met && !r.agreement)
        .count();
    Ok(CouplingReport {
        escaped: rows.len() - hypothesis_met,
        hypothesis_met,
        violations,
        rows,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleReport {
    pub tau: f64,
    pub simulated: Estimate,
    pub exact: f64,
    pub z: f64,
    /// Number of enumerated states.
    pub states: usize,
    /// `|z| <= 3`.
    pub pass: bool,
}

/// Compares the simulated mean of `f(ξ_τ^A)` from the fixed initial state
/// with the exact mean from the rate matrix of the window.
///
/// Fails with [`Error::TruncationBreach`] if any simulated state leaves the
/// model's truncation range.
#[allow(clippy::too_many_arguments)]
pub fn oracle_compare<M, F>(
    model: &M,
    window: &Window,
    start: &M::State,
    tau: f64,
    f: F,
    replicates: usize,
    seed: u64,
    cap: usize,
) -> Result<OracleReport>
where
    M: EnumerableModel + ?Sized,
    M::State: Hash + Eq,
    F: Fn(&Configuration<M::State>) -> f64 + Sync,
{
    if replicates < 2 {
        return Err(invalid("replicates", "need at least two replicates"));
    }
    let initial = Initial::Fixed(start.clone());
    let check = |config: &Configuration<M::State>| -> Result<()> {
        match config.iter().find(|(_, s)| !model.within_truncation(s)) {
            Some((v, s)) => Err(Error::TruncationBreach(format!(
                "state {s:?} at {v} reached the truncation cap of {}",
                model.name()
            ))),
            None => Ok(()),
        }
    };
    let values = replicate(replicates, |i| {
        let mut sim = WindowSim::new(
            model,
            window,
            &initial,
            RunSeeds::from_master(seed, i as u64),
        )?;
        check(sim.config())?;
        sim.advance_to_inspect(tau, |_, config| check(config))?;
        Ok(f(sim.config()))
    })?;
    let simulated = Estimate::of_mean(&values);
    let region = window.bounding_box().expand(model.template().radius());
    let start_config = Configuration::filled(region, start.clone());
    let q = generator_matrix(model, window, &start_config, cap)?;
    let exact = q.expectation(tau, &f)?;
    let z = simulated.z_score(exact);
    Ok(OracleReport {
        tau,
        simulated,
        exact,
        z,
        states: q.len(),
        pass: z.abs() <= 3.0,
    })
}
