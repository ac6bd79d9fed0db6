//! Builds the configured model and functional and runs one experiment.

use serde::Serialize;
use serde_json::json;

use ipsim::engine::{simulate_window, EnumerableModel, Initial, JumpModel, RunSeeds};
use ipsim::functionals::{
    eval_additive, phi_library, CenterMoment, ConstantOne, HPhi, LocalFunctional, PointFunctional,
};
use ipsim::lattice::{NeighborhoodTemplate, Site, Window};
use ipsim::stats::{self, ExperimentPlan, Observed, SigmaOptions};
use ipsim::zoo::{
    spaced_initial, ContinuumExclusion, LatticeBd, LatticeBdRelaxed, MarkedPointSet,
    MonolayerBdRolling1d, MultilayerBdStick, Rsa, SpinFlip, UniformBall, VoterContinuum,
    VoterVariant, ZeroRange, ZeroRangeRates,
};
use ipsim::{Error, Result};

use crate::config::{Component, Experiment, RunConfig};

/// One CSV table: file name, header line and data lines.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub file: &'static str,
    pub header: &'static str,
    pub rows: Vec<String>,
}

/// A pass/fail assertion made by an experiment.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub table: Table,
    pub report: serde_json::Value,
    pub checks: Vec<Check>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Round-trip exact rendering of a real number.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn site_field(s: &Site) -> String {
    s.coords()
        .iter()
        .map(i64::to_string)
        .collect::<Vec<_>>()
        .join(" ")
}

enum Built {
    Lattice(Box<dyn EnumerableModel<State = u32>>),
    Points(
        Box<dyn JumpModel<State = MarkedPointSet>>,
        Initial<MarkedPointSet>,
    ),
}

fn param(c: &Component, key: &str) -> f64 {
    c.real(key).expect("validated by the config parser")
}

fn build_model(cfg: &RunConfig) -> Result<Built> {
    let m = &cfg.model;
    let dim = cfg.window.dimension;
    let lattice_template =
        || NeighborhoodTemplate::box_radius(dim, m.integer("neighborhood_radius").unwrap_or(1));
    let cap = m.integer("cap").map(|c| c as u32);
    Ok(match m.name.as_str() {
        "lattice_bd" => {
            let mut model = LatticeBd::new(param(m, "lambda"), lattice_template())?;
            if let Some(c) = cap {
                model = model.with_cap(c);
            }
            Built::Lattice(Box::new(model))
        }
        "lattice_bd_relaxed" => {
            let mut model = LatticeBdRelaxed::new(param(m, "lambda"), lattice_template())?;
            if let Some(c) = cap {
                model = model.with_cap(c);
            }
            Built::Lattice(Box::new(model))
        }
        "flip" => Built::Lattice(Box::new(SpinFlip::new(
            dim,
            param(m, "up"),
            param(m, "down"),
        )?)),
        "rsa" => Built::Points(
            Box::new(Rsa::new(param(m, "lambda"), param(m, "desorption"), dim)?),
            Initial::default(),
        ),
        "multilayer_bd_stick" => Built::Points(
            Box::new(MultilayerBdStick::new(param(m, "lambda"), dim)?),
            Initial::default(),
        ),
        "monolayer_bd_rolling_1d" => Built::Points(
            Box::new(MonolayerBdRolling1d::new(param(m, "lambda"))?),
            Initial::default(),
        ),
        "exclusion" => {
            let eps = param(m, "epsilon");
            let law = UniformBall::new(param(m, "jump_radius"))?;
            Built::Points(
                Box::new(ContinuumExclusion::new(param(m, "lambda"), eps, law, dim)?),
                spaced_initial(dim, eps, param(m, "initial_density"))?,
            )
        }
        "zero_range" => {
            let eps = param(m, "epsilon");
            let rates = match m.reals("rates") {
                Some(r) => ZeroRangeRates::Table(r.to_vec()),
                None => ZeroRangeRates::Harmonic(param(m, "lambda")),
            };
            let law = UniformBall::new(param(m, "jump_radius"))?;
            Built::Points(
                Box::new(ZeroRange::new(rates, eps, law, dim)?),
                spaced_initial(dim, eps, param(m, "initial_density"))?,
            )
        }
        "voter_I" => Built::Points(
            Box::new(VoterContinuum::new(
                param(m, "lambda"),
                param(m, "range"),
                param(m, "p"),
                VoterVariant::I,
                dim,
            )?),
            Initial::default(),
        ),
        "voter_II" => Built::Points(
            Box::new(VoterContinuum::new(
                param(m, "lambda"),
                param(m, "range"),
                1.0,
                VoterVariant::II,
                dim,
            )?),
            Initial::default(),
        ),
        other => {
            return Err(Error::Unsupported(format!(
                "model `{other}` is not registered"
            )))
        }
    })
}

fn lattice_functional(f: &Component) -> Result<Box<dyn LocalFunctional<u32>>> {
    Ok(match f.name.as_str() {
        "one" => Box::new(ConstantOne),
        "moment" => Box::new(CenterMoment::new(f.integer("k").unwrap_or(1) as u32)?),
        other => {
            return Err(Error::Unsupported(format!(
                "functional `{other}` needs a point model"
            )))
        }
    })
}

/// The point functional behind a `phi*` name; `None` for `one`.
fn point_functional(f: &Component) -> Result<Option<Box<dyn PointFunctional>>> {
    match f.name.as_str() {
        "one" => Ok(None),
        name => phi_library(name, f.real("r1").or(f.real("r3"))).map(Some),
    }
}

fn window_of(dim: usize, coords: &[Vec<i64>]) -> Result<Window> {
    Window::new(coords.iter().map(|c| {
        let mut full = c.clone();
        full.resize(dim, 0);
        Site::new(&full)
    }))
}

fn boxes(cfg: &RunConfig) -> Result<Vec<Window>> {
    cfg.window
        .radii
        .iter()
        .map(|&r| Window::centered_box(cfg.window.dimension, r))
        .collect()
}

/// Validates that the model and functional can be built.
pub fn check(cfg: &RunConfig) -> Result<()> {
    match build_model(cfg)? {
        Built::Lattice(_) => lattice_functional(&cfg.statistic.functional).map(drop),
        Built::Points(..) => {
            if let Some(phi) = point_functional(&cfg.statistic.functional)? {
                HPhi::new(&*phi, cfg.window.dimension)?;
            }
            Ok(())
        }
    }
}

/// Runs the configured experiment.
pub fn execute(cfg: &RunConfig, inject_fault: bool) -> Result<Outcome> {
    match build_model(cfg)? {
        Built::Lattice(model) => {
            let h = lattice_functional(&cfg.statistic.functional)?;
            if cfg.statistic.experiment == Experiment::Oracle {
                return oracle(cfg, &*model, &*h);
            }
            run_with(cfg, &*model, &*h, &Initial::default(), inject_fault)
        }
        Built::Points(model, initial) => match point_functional(&cfg.statistic.functional)? {
            Some(phi) => {
                let h = HPhi::new(&*phi, cfg.window.dimension)?;
                run_with(cfg, &*model, &h, &initial, inject_fault)
            }
            None => run_with(cfg, &*model, &ConstantOne, &initial, inject_fault),
        },
    }
}

/// The event record of replicate `index` on the largest window, as JSON lines.
pub fn trace(cfg: &RunConfig, index: u64) -> Result<Vec<u8>> {
    let window = match (&cfg.window.sites, cfg.window.radii.last()) {
        (Some(sites), _) => window_of(cfg.window.dimension, sites)?,
        (None, Some(&r)) => Window::centered_box(cfg.window.dimension, r)?,
        (None, None) => {
            return Err(Error::InvalidWindow(
                "trace needs window radii or sites".into(),
            ))
        }
    };
    let seeds = RunSeeds::from_master(cfg.run.seed, index);
    let mut out = Vec::new();
    match build_model(cfg)? {
        Built::Lattice(m) => {
            simulate_window(&*m, &window, &Initial::default(), cfg.run.tau, seeds)?
                .write_ndjson(&mut out)
        }
        Built::Points(m, initial) => {
            simulate_window(&*m, &window, &initial, cfg.run.tau, seeds)?.write_ndjson(&mut out)
        }
    }
    .expect("writing to memory");
    Ok(out)
}

fn run_with<M, H>(
    cfg: &RunConfig,
    model: &M,
    h: &H,
    initial: &Initial<M::State>,
    inject_fault: bool,
) -> Result<Outcome>
where
    M: JumpModel + ?Sized,
    H: LocalFunctional<M::State> + ?Sized,
{
    let st = &cfg.statistic;
    let run = &cfg.run;
    let obs = Observed::new(model, h, initial);
    let plan = |times: Vec<f64>| ExperimentPlan::new(boxes(cfg)?, times, run.replicates, run.seed);
    let pair_times = || {
        if st.s == st.t {
            vec![st.s]
        } else {
            vec![st.s, st.t]
        }
    };
    Ok(match st.experiment {
        Experiment::Lln => {
            let r = stats::run_lln(&obs, &plan(run.times.clone())?)?;
            let per_window = run.times.len();
            let rows = r
                .rows
                .iter()
                .enumerate()
                .map(|(i, row)| {
                    format!(
                        "{},{},{},{},{},{},{},{}",
                        model.name(),
                        h.name(),
                        cfg.window.radii[i / per_window],
                        row.window_size,
                        num(row.tau),
                        row.replicates,
                        num(row.mean),
                        num(row.std_err)
                    )
                })
                .collect();
            Outcome {
                table: Table {
                    file: "lln.csv",
                    header:
                        "model,functional,window_radius,window_size,tau,replicates,mean,std_err",
                    rows,
                },
                report: json!(r),
                checks: Vec::new(),
            }
        }
        Experiment::Clt => {
            let r = stats::run_clt(&obs, &plan(run.times.clone())?)?;
            let rows = r
                .rows
                .iter()
                .map(|row| {
                    format!(
                        "{},{},{},{},{},{},{},{}",
                        row.window_size,
                        num(row.s),
                        num(row.t),
                        num(row.cov_scaled),
                        num(row.skew),
                        num(row.ex_kurtosis),
                        num(row.gof_stat),
                        row.replicates
                    )
                })
                .collect();
            Outcome {
                table: Table {
                    file: "clt.csv",
                    header: "window_size,s,t,cov_scaled,skew,ex_kurtosis,gof_stat,replicates",
                    rows,
                },
                report: json!(r),
                checks: Vec::new(),
            }
        }
        Experiment::Sigma => {
            let options = SigmaOptions {
                radius: st.sigma_radius,
                margin: st.margin,
            };
            let r = stats::estimate_sigma(&obs, &plan(pair_times())?, st.s, st.t, options)?;
            let row = format!(
                "{},{},{},{},{},{},{}",
                num(r.s),
                num(r.t),
                num(r.scaling.value),
                num(r.sum.value),
                num(r.scaling.std_err),
                num(r.sum.std_err),
                r.agree
            );
            Outcome {
                table: Table {
                    file: "sigma.csv",
                    header: "s,t,sigma_scaling,sigma_sum,se_a,se_b,agree",
                    rows: vec![row],
                },
                checks: vec![Check {
                    name: "sigma_methods_agree",
                    pass: r.agree,
                }],
                report: json!(r),
            }
        }
        Experiment::Decay => {
            let r = stats::covariance_decay(
                &obs,
                &plan(pair_times())?,
                st.s,
                st.t,
                &st.distances,
                st.margin,
            )?;
            let rows = r
                .rows
                .iter()
                .map(|row| {
                    format!(
                        "{},{},{},{}",
                        row.distance,
                        num(row.abs_cov),
                        num(row.std_err),
                        num(row.envelope)
                    )
                })
                .collect();
            Outcome {
                table: Table {
                    file: "decay.csv",
                    header: "distance,abs_cov,std_err,envelope",
                    rows,
                },
                checks: vec![
                    Check {
                        name: "decay_decreasing",
                        pass: r.decreasing,
                    },
                    Check {
                        name: "decay_below_envelope",
                        pass: r.below_envelope,
                    },
                ],
                report: json!(r),
            }
        }
        Experiment::Cluster => {
            let r = stats::cluster_tail_probe(
                model.template(),
                model.c_max(),
                &st.n_values,
                run.replicates,
                run.seed,
            )?;
            let rows = r
                .rows
                .iter()
                .map(|row| {
                    format!(
                        "{},{},{},{},{}",
                        row.n,
                        num(row.time),
                        num(row.empirical_p),
                        num(row.bound),
                        row.replicates
                    )
                })
                .collect();
            Outcome {
                table: Table {
                    file: "cluster.csv",
                    header: "n,time,empirical_p,bound,replicates",
                    rows,
                },
                checks: vec![
                    Check {
                        name: "cluster_within_bound",
                        pass: r.rows.iter().all(|row| row.within_bound),
                    },
                    Check {
                        name: "cluster_log_linear",
                        pass: r.log_linear,
                    },
                ],
                report: json!(r),
            }
        }
        Experiment::Couple => {
            let windows = boxes(cfg)?;
            let probes: Vec<Site> = window_of(cfg.window.dimension, &st.probes)?
                .iter()
                .copied()
                .collect();
            let (inner, outer) = (
                windows.first().expect("validated"),
                windows.last().expect("validated"),
            );
            let r = stats::coupling_check(
                model,
                inner,
                outer,
                initial,
                run.tau,
                &probes,
                run.replicates,
                run.seed,
                inject_fault,
            )?;
            let rows = r
                .rows
                .iter()
                .map(|row| {
                    format!(
                        "{},{},{}",
                        site_field(&row.probe_site),
                        row.hypothesis_met,
                        row.agreement
                    )
                })
                .collect();
            Outcome {
                table: Table {
                    file: "couple.csv",
                    header: "probe_site,hypothesis_met,agreement",
                    rows,
                },
                checks: vec![Check {
                    name: "coupling_no_violations",
                    pass: r.violations == 0,
                }],
                report: json!({
                    "hypothesis_met": r.hypothesis_met,
                    "escaped": r.escaped,
                    "violations": r.violations,
                }),
            }
        }
        Experiment::Increments => {
            let r = stats::increment_moment_probe(&obs, &plan(run.times.clone())?)?;
            let rows = r
                .rows
                .iter()
                .map(|row| {
                    format!(
                        "{},{},{},{}",
                        num(row.gap),
                        num(row.fourth_moment),
                        num(row.std_err),
                        row.replicates
                    )
                })
                .collect();
            Outcome {
                table: Table {
                    file: "increments.csv",
                    header: "gap,fourth_moment,std_err,replicates",
                    rows,
                },
                report: json!(r),
                checks: Vec::new(),
            }
        }
        Experiment::Oracle => {
            return Err(Error::Unsupported(format!(
                "oracle needs a finite-state lattice model, not `{}`",
                model.name()
            )))
        }
    })
}

fn oracle(
    cfg: &RunConfig,
    model: &dyn EnumerableModel<State = u32>,
    h: &dyn LocalFunctional<u32>,
) -> Result<Outcome> {
    let window = match &cfg.window.sites {
        Some(sites) => window_of(cfg.window.dimension, sites)?,
        None => Window::centered_box(cfg.window.dimension, cfg.window.radii[0])?,
    };
    let reach = h.template(window.dim())?.radius();
    if reach > model.template().radius() {
        return Err(Error::Unsupported(format!(
            "functional `{}` reads beyond the model's neighborhood",
            h.name()
        )));
    }
    let size = window.len() as f64;
    let f = |c: &ipsim::engine::Configuration<u32>| {
        eval_additive(h, &window, c).map_or(f64::NAN, |s| s / size)
    };
    let run = &cfg.run;
    let r = stats::oracle_compare(
        model,
        &window,
        &0,
        run.tau,
        f,
        run.replicates,
        run.seed,
        cfg.statistic.state_cap,
    )?;
    let row = format!(
        "{},{},{},{},{}",
        h.name(),
        num(r.tau),
        num(r.simulated.value),
        num(r.exact),
        num(r.z)
    );
    Ok(Outcome {
        table: Table {
            file: "oracle.csv",
            header: "functional,tau,simulated,exact,z",
            rows: vec![row],
        },
        checks: vec![Check {
            name: "oracle_within_3_se",
            pass: r.pass,
        }],
        report: json!(r),
    })
}
