//! Law of large numbers, central limit theorem, limiting covariance and
//! increment moments.

use serde::Serialize;

use crate::engine::model::{JumpModel, RunSeeds};
use crate::error::{invalid, Result};
use crate::functionals::LocalFunctional;
use crate::lattice::{check_window_sequence, BoxRegion, Site};
use crate::stats::summary::{covariance, ks_normal, linear_fit, mean, shape, Estimate, LineFit};
use crate::stats::{box_layout, replicate, ExperimentPlan, Observed};

/// Seed salt separating the replicates of the lattice-sum estimator from
/// those of the window-variance estimator.
const LATTICE_SUM_SALT: u64 = 0x51_6D_A5_B0;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LlnRow {
    pub window_size: usize,
    pub tau: f64,
    pub replicates: usize,
    pub mean: f64,
    pub std_err: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LlnReport {
    pub rows: Vec<LlnRow>,
    /// Whether the window sequence passes the boundary and interior checks.
    pub windows_clean: bool,
    /// False when the densities of the two largest windows at the last time
    /// differ by more than three combined standard errors.
    pub stabilized: bool,
}

/// Estimates `E[|A_n|^{-1} S_H^{A_n}(ξ_τ^{A_n,ν})]` for every window and time.
pub fn run_lln<M, H>(obs: &Observed<'_, M, H>, plan: &ExperimentPlan) -> Result<LlnReport>
where
    M: JumpModel + ?Sized,
    H: LocalFunctional<M::State> + ?Sized,
{
    let windows_clean = check_window_sequence(&plan.windows, obs.model.template())?.is_clean();
    let mut rows = Vec::new();
    let mut last = Vec::new();
    for w in &plan.windows {
        let size = w.len() as f64;
        let sums = replicate(plan.replicates, |i| obs.sums(w, &plan.times, plan.seeds(i)))?;
        for (k, &tau) in plan.times.iter().enumerate() {
            let dens: Vec<f64> = sums.iter().map(|s| s[k] / size).collect();
            let e = Estimate::of_mean(&dens);
            rows.push(LlnRow {
                window_size: w.len(),
                tau,
                replicates: plan.replicates,
                mean: e.value,
                std_err: e.std_err,
            });
            if k + 1 == plan.times.len() {
                last.push(e);
            }
        }
    }
    let stabilized = match last.as_slice() {
        [.., a, b] => a.value == b.value || a.agrees_with(b, 3.0),
        _ => true,
    };
    Ok(LlnReport {
        rows,
        windows_clean,
        stabilized,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CltRow {
    pub window_size: usize,
    pub s: f64,
    pub t: f64,
    /// `|A|^{-1} Cov(S_s, S_t)`.
    pub cov_scaled: f64,
    pub cov_std_err: f64,
    /// Shape of the law of `S_t`.
    pub skew: f64,
    pub ex_kurtosis: f64,
    /// Kolmogorov–Smirnov distance to the fitted normal.
    pub gof_stat: f64,
    pub replicates: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CltReport {
    pub rows: Vec<CltRow>,
    /// `|A|^{-1} Var S_τ` of the largest window is within three standard
    /// errors of zero.
    pub degenerate: bool,
    /// `|A|^{-1} Var S_τ` for the two largest windows, if there are two.
    pub largest_variances: Option<(Estimate, Estimate)>,
    /// The two largest-window variances agree within 5% or three combined
    /// standard errors, whichever is looser.
    pub variance_stable: bool,
}

/// Scaled covariances for every window and pair `s <= t` of plan times,
/// with the shape of the law of each `S_t`.
pub fn run_clt<M, H>(obs: &Observed<'_, M, H>, plan: &ExperimentPlan) -> Result<CltReport>
where
    M: JumpModel + ?Sized,
    H: LocalFunctional<M::State> + ?Sized,
{
    let mut rows = Vec::new();
    let mut variances = Vec::new();
    let last = plan.times.len() - 1;
    for w in &plan.windows {
        let size = w.len() as f64;
        let sums = replicate(plan.replicates, |i| obs.sums(w, &plan.times, plan.seeds(i)))?;
        let column = |k: usize| -> Vec<f64> { sums.iter().map(|s| s[k]).collect() };
        for j in 0..plan.times.len() {
            let xt = column(j);
            let (skew, ex_kurtosis) = shape(&xt);
            let gof_stat = ks_normal(&xt);
            for i in 0..=j {
                let c = covariance(&column(i), &xt);
                rows.push(CltRow {
                    window_size: w.len(),
                    s: plan.times[i],
                    t: plan.times[j],
                    cov_scaled: c.value / size,
                    cov_std_err: c.std_err / size,
                    skew,
                    ex_kurtosis,
                    gof_stat,
                    replicates: plan.replicates,
                });
                if i == last && j == last {
                    variances.push(Estimate {
                        value: c.value / size,
                        std_err: c.std_err / size,
                        n: c.n,
                    });
                }
            }
        }
    }
    let top = *variances.last().expect("at least one window");
    let resolved = top.value.abs() > 3.0 * top.std_err;
    let degenerate = !resolved || top.value == 0.0;
    let largest_variances = match variances.as_slice() {
        [.., a, b] => Some((*a, *b)),
        _ => None,
    };
    let variance_stable = largest_variances.is_none_or(|(a, b)| {
        let relative = 0.05 * a.value.abs().max(b.value.abs());
        let statistical = 3.0 * a.std_err.hypot(b.std_err);
        (a.value - b.value).abs() <= relative.max(statistical)
    });
    Ok(CltReport {
        rows,
        degenerate,
        largest_variances,
        variance_stable,
    })
}

/// Parameters of the lattice-sum estimator of `σ(s,t)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SigmaOptions {
    /// Truncation radius `r` of `Σ_{|z|_∞ <= r}`.
    pub radius: usize,
    /// Distance kept from the window boundary by every sampled site.
    pub margin: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SigmaReport {
    pub s: f64,
    pub t: f64,
    /// `|A|^{-1} Cov(S_s, S_t)` on the largest window.
    pub scaling: Estimate,
    /// `Σ_{|z| <= r} Cov(Y_{0,s}, Y_{z,t})` from interior sites.
    pub sum: Estimate,
    pub agree: bool,
    /// Contribution of each shell `|z|_∞ = k` to the lattice sum.
    pub shells: Vec<f64>,
    /// The outermost shell carries more than 1% of the sum.
    pub truncation_warning: bool,
}

/// Per-replicate interior averages: `Y_s`, `Y_t` and `Y_s(v) Y_t(v+z)` for
/// each offset.
struct InteriorMoments {
    mean_s: f64,
    mean_t: f64,
    products: Vec<f64>,
}

fn interior_moments(
    fields_s: &[f64],
    fields_t: &[f64],
    slots: &[usize],
    bb: &BoxRegion,
    offsets: &[Site],
    margin: i64,
) -> Result<InteriorMoments> {
    let mut ys = vec![0.0; bb.len()];
    let mut yt = vec![0.0; bb.len()];
    for (k, &slot) in slots.iter().enumerate() {
        ys[slot] = fields_s[k];
        yt[slot] = fields_t[k];
    }
    let inner = bb.expand(-margin);
    if inner.is_empty() {
        return Err(invalid(
            "margin",
            "window too small for the requested margin and radius",
        ));
    }
    let sites: Vec<(Site, usize)> = inner
        .sites()
        .map(|v| (v, bb.index(&v).expect("inner")))
        .collect();
    let n = sites.len() as f64;
    let mean_s = sites.iter().map(|(_, i)| ys[*i]).sum::<f64>() / n;
    let mean_t = sites.iter().map(|(_, i)| yt[*i]).sum::<f64>() / n;
    let products = offsets
        .iter()
        .map(|z| {
            sites
                .iter()
                .map(|(v, i)| ys[*i] * yt[bb.index(&(*v + *z)).expect("offset stays in window")])
                .sum::<f64>()
                / n
        })
        .collect();
    Ok(InteriorMoments {
        mean_s,
        mean_t,
        products,
    })
}

/// Offsets of the box `|z|_∞ <= r`.
fn box_offsets(dim: usize, r: i64) -> Vec<Site> {
    BoxRegion::centered(dim, r).sites().collect()
}

/// Samples the field on the largest window and returns per-replicate
/// interior moments for the given offsets.
fn sample_interior<M, H>(
    obs: &Observed<'_, M, H>,
    plan: &ExperimentPlan,
    s: f64,
    t: f64,
    offsets: &[Site],
    margin: i64,
    salt: u64,
) -> Result<Vec<InteriorMoments>>
where
    M: JumpModel + ?Sized,
    H: LocalFunctional<M::State> + ?Sized,
{
    let w = plan.largest();
    let (bb, slots) = box_layout(w)?;
    let times: Vec<f64> = if s == t { vec![s] } else { vec![s, t] };
    replicate(plan.replicates, |i| {
        let seeds = RunSeeds::from_master(plan.seed ^ salt, i as u64);
        let f = obs.fields(w, &times, seeds)?;
        interior_moments(
            &f[0],
            f.last().expect("one time"),
            &slots,
            &bb,
            offsets,
            margin,
        )
    })
}

fn check_times(s: f64, t: f64) -> Result<()> {
    if !(s.is_finite() && t.is_finite() && 0.0 <= s && s <= t) {
        return Err(invalid(
            "times",
            format!("need 0 <= s <= t, got s={s}, t={t}"),
        ));
    }
    Ok(())
}

/// `σ(s,t)` by the window-variance scaling on the largest window and by the
/// truncated lattice sum of interior covariances.
pub fn estimate_sigma<M, H>(
    obs: &Observed<'_, M, H>,
    plan: &ExperimentPlan,
    s: f64,
    t: f64,
    options: SigmaOptions,
) -> Result<SigmaReport>
where
    M: JumpModel + ?Sized,
    H: LocalFunctional<M::State> + ?Sized,
{
    check_times(s, t)?;
    let w = plan.largest();
    let size = w.len() as f64;
    let times: Vec<f64> = if s == t { vec![s] } else { vec![s, t] };
    let sums = replicate(plan.replicates, |i| obs.sums(w, &times, plan.seeds(i)))?;
    let xs: Vec<f64> = sums.iter().map(|v| v[0]).collect();
    let xt: Vec<f64> = sums.iter().map(|v| *v.last().expect("one time")).collect();
    let c = covariance(&xs, &xt);
    let scaling = Estimate {
        value: c.value / size,
        std_err: c.std_err / size,
        n: c.n,
    };

    let r = options.radius as i64;
    let offsets = box_offsets(w.dim(), r);
    let margin = options.margin as i64 + r;
    let moments = sample_interior(obs, plan, s, t, &offsets, margin, LATTICE_SUM_SALT)?;
    let mu_s = mean(&moments.iter().map(|m| m.mean_s).collect::<Vec<_>>());
    let mu_t = mean(&moments.iter().map(|m| m.mean_t).collect::<Vec<_>>());
    let per_rep: Vec<f64> = moments
        .iter()
        .map(|m| m.products.iter().map(|p| p - mu_s * mu_t).sum())
        .collect();
    let sum = Estimate::of_mean(&per_rep);
    let mut shells = vec![0.0; options.radius + 1];
    for (k, z) in offsets.iter().enumerate() {
        let cov = mean(&moments.iter().map(|m| m.products[k]).collect::<Vec<_>>()) - mu_s * mu_t;
        shells[z.max_norm() as usize] += cov;
    }
    let outer = *shells.last().expect("radius >= 0");
    let total: f64 = shells.iter().sum();
    Ok(SigmaReport {
        s,
        t,
        scaling,
        sum,
        agree: scaling.agrees_with(&sum, 3.0),
        truncation_warning: options.radius > 0 && outer.abs() > 0.01 * total.abs(),
        shells,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayRow {
    pub distance: usize,
    pub abs_cov: f64,
    pub std_err: f64,
    /// `K e^{-distance/K}` for the fitted `K`; `NaN` without a fit.
    pub envelope: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayReport {
    pub s: f64,
    pub t: f64,
    pub rows: Vec<DecayRow>,
    /// Number of leading rows whose covariance exceeds three standard errors.
    pub significant: usize,
    /// Least-squares fit of `ln |Cov|` against distance on the significant rows.
    pub fit: Option<LineFit>,
    /// `K = max(1/rate, e^{intercept})`, so that `K e^{-z/K}` dominates the fit.
    pub k: Option<f64>,
    /// No significant row exceeds its predecessor by three combined standard errors.
    pub decreasing: bool,
    /// Every significant row is below the envelope plus three standard errors.
    pub below_envelope: bool,
    /// Some requested distances lie beyond the resolvable range.
    pub noise_floor_warning: bool,
}

/// `|Cov(Y_{0,s}, Y_{z,t})|` along the first axis, averaged over `±z`, with
/// an exponential envelope fitted on the statistically significant range.
pub fn covariance_decay<M, H>(
    obs: &Observed<'_, M, H>,
    plan: &ExperimentPlan,
    s: f64,
    t: f64,
    distances: &[usize],
    margin: usize,
) -> Result<DecayReport>
where
    M: JumpModel + ?Sized,
    H: LocalFunctional<M::State> + ?Sized,
{
    check_times(s, t)?;
    if distances.is_empty() || distances.windows(2).any(|p| p[0] >= p[1]) {
        return Err(invalid(
            "distances",
            "must be non-empty and strictly increasing",
        ));
    }
    let dim = plan.largest().dim();
    let axis = |d: usize, sign: i64| {
        let mut c = [0i64; 3];
        c[0] = sign * d as i64;
        Site::new(&c[..dim])
    };
    let offsets: Vec<Site> = distances
        .iter()
        .flat_map(|&d| [axis(d, 1), axis(d, -1)])
        .collect();
    let reach = *distances.last().expect("non-empty") as i64 + margin as i64;
    let moments = sample_interior(obs, plan, s, t, &offsets, reach, 0)?;
    let mu_s = mean(&moments.iter().map(|m| m.mean_s).collect::<Vec<_>>());
    let mu_t = mean(&moments.iter().map(|m| m.mean_t).collect::<Vec<_>>());
    let mut rows = Vec::new();
    let mut estimates = Vec::new();
    for (k, &d) in distances.iter().enumerate() {
        let per_rep: Vec<f64> = moments
            .iter()
            .map(|m| 0.5 * (m.products[2 * k] + m.products[2 * k + 1]) - mu_s * mu_t)
            .collect();
        let e = Estimate::of_mean(&per_rep);
        estimates.push(e);
        rows.push(DecayRow {
            distance: d,
            abs_cov: e.value.abs(),
            std_err: e.std_err,
            envelope: f64::NAN,
        });
    }
    let significant = rows
        .iter()
        .take_while(|r| r.abs_cov > 3.0 * r.std_err)
        .count();
    let fit = linear_fit(
        &rows[..significant]
            .iter()
            .map(|r| r.distance as f64)
            .collect::<Vec<_>>(),
        &rows[..significant]
            .iter()
            .map(|r| r.abs_cov.ln())
            .collect::<Vec<_>>(),
    );
    let k = fit
        .filter(|f| f.slope < 0.0)
        .map(|f| (-1.0 / f.slope).max(f.intercept.exp()));
    if let Some(k) = k {
        for r in &mut rows {
            r.envelope = k * (-(r.distance as f64) / k).exp();
        }
    }
    let decreasing = rows[..significant]
        .windows(2)
        .all(|p| p[1].abs_cov <= p[0].abs_cov + 3.0 * p[0].std_err.hypot(p[1].std_err));
    let below_envelope = k.is_some()
        && rows[..significant]
            .iter()
            .all(|r| r.abs_cov <= r.envelope + 3.0 * r.std_err);
    Ok(DecayReport {
        s,
        t,
        significant,
        fit,
        k,
        decreasing,
        below_envelope,
        noise_floor_warning: significant < rows.len(),
        rows,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IncrementRow {
    pub gap: f64,
    pub fourth_moment: f64,
    pub std_err: f64,
    pub replicates: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IncrementReport {
    pub base: f64,
    pub rows: Vec<IncrementRow>,
    /// Fitted power of the gap in the fourth moment, over positive moments.
    pub exponent: Option<f64>,
}

/// `E[(|A|^{-1/2}(S_t - S_s - E[S_t - S_s]))^4]` on the largest window for
/// `s` the first plan time and `t` each plan time.
pub fn increment_moment_probe<M, H>(
    obs: &Observed<'_, M, H>,
    plan: &ExperimentPlan,
) -> Result<IncrementReport>
where
    M: JumpModel + ?Sized,
    H: LocalFunctional<M::State> + ?Sized,
{
    let w = plan.largest();
    let norm = (w.len() as f64).sqrt();
    let sums = replicate(plan.replicates, |i| obs.sums(w, &plan.times, plan.seeds(i)))?;
    let base = plan.times[0];
    let mut rows = Vec::new();
    for (k, &t) in plan.times.iter().enumerate() {
        let inc: Vec<f64> = sums.iter().map(|s| (s[k] - s[0]) / norm).collect();
        let m = mean(&inc);
        let fourth: Vec<f64> = inc.iter().map(|x| (x - m).powi(4)).collect();
        let e = Estimate::of_mean(&fourth);
        rows.push(IncrementRow {
            gap: t - base,
            fourth_moment: e.value,
            std_err: if k == 0 { 0.0 } else { e.std_err },
            replicates: plan.replicates,
        });
    }
    let usable: Vec<&IncrementRow> = rows
        .iter()
        .filter(|r| r.gap > 0.0 && r.fourth_moment > 0.0)
        .collect();
    let exponent = linear_fit(
        &usable.iter().map(|r| r.gap.ln()).collect::<Vec<_>>(),
        &usable
            .iter()
            .map(|r| r.fourth_moment.ln())
            .collect::<Vec<_>>(),
    )
    .map(|f| f.slope);
    Ok(IncrementReport {
        base,
        rows,
        exponent,
    })
}
