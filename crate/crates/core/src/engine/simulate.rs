//! Time-ordered processing of stream events: thinning, the patch update and
//! windowed dynamics where only sites of the active window fire.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::io::{self, Write};

use serde::Serialize;

use crate::engine::cluster::influence_cluster;
use crate::engine::config::{Configuration, PatchLayout};
use crate::engine::model::{Initial, JumpModel, LabelRng, RunSeeds};
use crate::engine::streams::{check_site_range, EventStream, StreamFamily};
use crate::error::{invalid, Error, Result};
use crate::lattice::{BoxRegion, Site, Window};

/// Relative slack allowed when comparing a rate against `c_max`, to absorb
/// rounding in summed rates.
pub const RATE_SLACK: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    /// The thinning test selected a jump.
    Jump,
    /// The label fell in the no-change part of the unit interval.
    Thinned,
}

/// Applies one stream point `(v, u)` in place.
///
/// With `a = α*(x)/c_max`, labels `u < a` select a jump whose sampler sees
/// the rescaled label `u / a`; labels in `[a, 1)` leave the patch unchanged.
pub fn apply_event<M: JumpModel + ?Sized>(
    model: &M,
    config: &mut Configuration<M::State>,
    layout: &PatchLayout,
    v: Site,
    u: f64,
) -> Result<EventKind> {
    let c_max = model.c_max();
    let mut patch = config.patch_mut(layout, &v)?;
    let rate = model.local_rate(&patch.as_patch());
    if !(rate.is_finite() && rate >= 0.0) || rate > c_max * (1.0 + RATE_SLACK) {
        return Err(Error::RateBoundViolation {
            model: model.name().to_string(),
            site: v,
            rate,
            c_max,
        });
    }
    if rate == 0.0 {
        return Ok(EventKind::Thinned);
    }
    let accept = (rate / c_max).min(1.0);
    if u >= accept {
        return Ok(EventKind::Thinned);
    }
    let rescaled = (u / accept).min(1.0 - f64::EPSILON / 2.0);
    model.jump(&mut patch, &mut LabelRng::new(rescaled));
    Ok(EventKind::Jump)
}

#[derive(Clone, Copy, Debug)]
struct Pending {
    time: f64,
    slot: usize,
    label: f64,
}

impl PartialEq for Pending {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Pending {}

impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Pending {
    // Slots follow lexicographic site order, which breaks time ties.
    fn cmp(&self, other: &Self) -> Ordering {
        self.time
            .total_cmp(&other.time)
            .then(self.slot.cmp(&other.slot))
    }
}

/// One processed stream point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Step {
    pub time: f64,
    pub site: Site,
    pub label: f64,
    pub kind: EventKind,
}

/// Dynamics with generator `G^A`: only stream points of sites in `A` fire;
/// states are materialized on (the bounding box of) `N_A`.
pub struct WindowSim<'m, M: JumpModel + ?Sized> {
    model: &'m M,
    window: Window,
    config: Configuration<M::State>,
    layout: PatchLayout,
    sites: Vec<Site>,
    streams: Vec<EventStream>,
    queue: BinaryHeap<Reverse<Pending>>,
    time: f64,
    processed: usize,
    jumps: usize,
}

impl<'m, M: JumpModel + ?Sized> WindowSim<'m, M> {
    pub fn new(
        model: &'m M,
        window: &Window,
        initial: &Initial<M::State>,
        seeds: RunSeeds,
    ) -> Result<Self> {
        Self::with_streams(model, window, initial, seeds.init, seeds.stream, 0)
    }

    /// Like [`WindowSim::new`], materializing at least `margin` sites around
    /// the window so that functionals reading further than `N` can be
    /// evaluated. Sites outside `N_A` keep their initial states.
    pub fn with_margin(
        model: &'m M,
        window: &Window,
        initial: &Initial<M::State>,
        seeds: RunSeeds,
        margin: i64,
    ) -> Result<Self> {
        Self::with_streams(model, window, initial, seeds.init, seeds.stream, margin)
    }

    pub(crate) fn with_streams(
        model: &'m M,
        window: &Window,
        initial: &Initial<M::State>,
        init_seed: u64,
        stream_seed: u64,
        margin: i64,
    ) -> Result<Self> {
        let template = model.template();
        if window.dim() != template.dim() {
            return Err(Error::DimensionMismatch {
                expected: template.dim(),
                found: window.dim(),
            });
        }
        let region = window.bounding_box().expand(template.radius().max(margin));
        check_site_range(&region.lo())?;
        check_site_range(&region.hi())?;
        let config = Configuration::from_fn(region, |s| initial.sample(init_seed, &s));
        model.validate_initial(&config)?;
        Self::from_configuration(model, window, config, stream_seed)
    }

    /// Starts from an explicit configuration whose region must cover `N_A`.
    pub fn from_configuration(
        model: &'m M,
        window: &Window,
        config: Configuration<M::State>,
        stream_seed: u64,
    ) -> Result<Self> {
        let template = model.template();
        let layout = config.layout(template);
        if let Some(v) = window.iter().find(|v| !config.covers_patch(&layout, v)) {
            return Err(Error::Unmaterialized(*v));
        }
        let c_max = model.c_max();
        if !(c_max.is_finite() && c_max >= 0.0) {
            return Err(invalid(
                "c_max",
                format!("must be finite and non-negative, got {c_max}"),
            ));
        }
        let sites: Vec<Site> = window.iter().copied().collect();
        let mut streams = Vec::new();
        let mut queue = BinaryHeap::new();
        // A zero bound means no site can ever jump: there is nothing to stream.
        if c_max > 0.0 {
            let family = StreamFamily::new(stream_seed, c_max)?;
            streams.reserve(sites.len());
            for (slot, s) in sites.iter().enumerate() {
                let mut st = family.stream(*s);
                let a = st.next().expect("streams are infinite");
                queue.push(Reverse(Pending {
                    time: a.time,
                    slot,
                    label: a.label,
                }));
                streams.push(st);
            }
        }
        Ok(Self {
            model,
            window: window.clone(),
            config,
            layout,
            sites,
            streams,
            queue,
            time: 0.0,
            processed: 0,
            jumps: 0,
        })
    }

    pub fn model(&self) -> &M {
        self.model
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn config(&self) -> &Configuration<M::State> {
        &self.config
    }

    pub fn into_config(self) -> Configuration<M::State> {
        self.config
    }

    pub fn layout(&self) -> &PatchLayout {
        &self.layout
    }

    pub fn region(&self) -> &BoxRegion {
        self.config.region()
    }

    /// Current time: the horizon of the last `advance_*` call.
    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn processed(&self) -> usize {
        self.processed
    }

    pub fn jumps(&self) -> usize {
        self.jumps
    }

    pub fn next_event_time(&self) -> Option<f64> {
        self.queue.peek().map(|p| p.0.time)
    }

    /// Processes the next stream point if it occurs by `horizon`.
    pub fn step(&mut self, horizon: f64) -> Result<Option<Step>> {
        let Some(Reverse(p)) = self.queue.peek().copied() else {
            return Ok(None);
        };
        if p.time > horizon {
            return Ok(None);
        }
        self.queue.pop();
        let site = self.sites[p.slot];
        let kind = apply_event(self.model, &mut self.config, &self.layout, site, p.label)?;
        let a = self.streams[p.slot].next().expect("streams are infinite");
        self.queue.push(Reverse(Pending {
            time: a.time,
            slot: p.slot,
            label: a.label,
        }));
        self.processed += 1;
        if kind == EventKind::Jump {
            self.jumps += 1;
        }
        Ok(Some(Step {
            time: p.time,
            site,
            label: p.label,
            kind,
        }))
    }

    pub fn advance_to(&mut self, horizon: f64) -> Result<()> {
        self.check_horizon(horizon)?;
        while self.step(horizon)?.is_some() {}
        self.time = horizon;
        Ok(())
    }

    /// Advances, calling `inspect` after every processed stream point.
    pub fn advance_to_inspect(
        &mut self,
        horizon: f64,
        mut inspect: impl FnMut(&Step, &Configuration<M::State>) -> Result<()>,
    ) -> Result<()> {
        self.check_horizon(horizon)?;
        while let Some(step) = self.step(horizon)? {
            inspect(&step, &self.config)?;
        }
        self.time = horizon;
        Ok(())
    }

    /// Advances and appends a full record of every processed stream point.
    pub fn advance_recording(
        &mut self,
        horizon: f64,
        out: &mut Vec<EventRecord<M::State>>,
    ) -> Result<()> {
        self.check_horizon(horizon)?;
        while let Some(Reverse(p)) = self.queue.peek().copied() {
            if p.time > horizon {
                break;
            }
            let site = self.sites[p.slot];
            let before = self.config.patch(&self.layout, &site)?.to_vec();
            let step = self.step(horizon)?.expect("peeked event is due");
            let after = self.config.patch(&self.layout, &site)?.to_vec();
            out.push(EventRecord {
                time: step.time,
                site,
                label: step.label,
                kind: step.kind,
                before,
                after,
            });
        }
        self.time = horizon;
        Ok(())
    }

    fn check_horizon(&self, horizon: f64) -> Result<()> {
        if !(horizon >= self.time && horizon.is_finite()) {
            return Err(invalid(
                "tau",
                format!(
                    "horizon {horizon} must be finite and not before {}",
                    self.time
                ),
            ));
        }
        Ok(())
    }
}

/// One processed stream point with the patch `v + N` before and after.
#[derive(Clone, Debug, PartialEq)]
pub struct EventRecord<S> {
    pub time: f64,
    pub site: Site,
    pub label: f64,
    pub kind: EventKind,
    pub before: Vec<S>,
    pub after: Vec<S>,
}

/// A recorded windowed run on `[0, horizon]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory<S> {
    pub initial: Configuration<S>,
    pub events: Vec<EventRecord<S>>,
    pub horizon: f64,
    pub final_state: Configuration<S>,
}

impl<S: std::fmt::Debug> Trajectory<S> {
    /// One JSON object per line: time, site, kind and the patch change.
    pub fn write_ndjson(&self, mut w: impl Write) -> io::Result<()> {
        for e in &self.events {
            let line = serde_json::json!({
                "time": e.time,
                "site": e.site,
                "label": e.label,
                "kind": e.kind,
                "before": format!("{:?}", e.before),
                "after": format!("{:?}", e.after),
            });
            writeln!(w, "{line}")?;
        }
        Ok(())
    }
}

/// Runs the windowed dynamics on `[0, tau]` and records every stream point.
pub fn simulate_window<M: JumpModel + ?Sized>(
    model: &M,
    window: &Window,
    initial: &Initial<M::State>,
    tau: f64,
    seeds: RunSeeds,
) -> Result<Trajectory<M::State>> {
    if tau.is_nan() || tau < 0.0 {
        return Err(invalid("tau", format!("must be non-negative, got {tau}")));
    }
    let mut sim = WindowSim::new(model, window, initial, seeds)?;
    let initial_state = sim.config().clone();
    let mut events = Vec::new();
    sim.advance_recording(tau, &mut events)?;
    Ok(Trajectory {
        initial: initial_state,
        events,
        horizon: tau,
        final_state: sim.into_config(),
    })
}

/// Final state of the windowed dynamics at `tau`, without recording.
pub fn final_state<M: JumpModel + ?Sized>(
    model: &M,
    window: &Window,
    initial: &Initial<M::State>,
    tau: f64,
    seeds: RunSeeds,
) -> Result<Configuration<M::State>> {
    let mut sim = WindowSim::new(model, window, initial, seeds)?;
    sim.advance_to(tau)?;
    Ok(sim.into_config())
}

/// Coupling outcome at one probe site.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ProbeAgreement {
    pub site: Site,
    /// Whether the influence cluster of the probe lies inside the smaller window.
    pub hypothesis_met: bool,
    /// Whether both runs agree on the probe's neighborhood at the horizon.
    pub agreement: bool,
}

impl ProbeAgreement {
    pub fn is_violation(&self) -> bool {
        self.hypothesis_met && !self.agreement
    }
}

#[derive(Clone, Debug)]
pub struct CoupledRun<S> {
    pub inner: Trajectory<S>,
    pub outer: Trajectory<S>,
    pub probes: Vec<ProbeAgreement>,
}

/// Runs windows `A ⊆ B` on the same streams and initial draw and reports,
/// per probe `v ∈ A`, cluster containment and agreement on `N_v`.
pub fn coupled_windows<M: JumpModel + ?Sized>(
    model: &M,
    inner: &Window,
    outer: &Window,
    initial: &Initial<M::State>,
    tau: f64,
    seeds: RunSeeds,
    probes: &[Site],
) -> Result<CoupledRun<M::State>> {
    check_coupling_input(inner, outer, probes)?;
    let a = simulate_window(model, inner, initial, tau, seeds)?;
    let b = simulate_window(model, outer, initial, tau, seeds)?;
    let probes = compare_probes(
        model,
        inner,
        &a.final_state,
        &b.final_state,
        tau,
        seeds.stream,
        probes,
    )?;
    Ok(CoupledRun {
        inner: a,
        outer: b,
        probes,
    })
}

pub(crate) fn check_coupling_input(inner: &Window, outer: &Window, probes: &[Site]) -> Result<()> {
    if !inner.is_subset(outer) {
        return Err(Error::InvalidWindow("coupling requires A ⊆ B".into()));
    }
    if let Some(p) = probes.iter().find(|p| !inner.contains(p)) {
        return Err(Error::InvalidWindow(format!(
            "probe {p} is not in the inner window"
        )));
    }
    Ok(())
}

pub(crate) fn compare_probes<M: JumpModel + ?Sized>(
    model: &M,
    inner: &Window,
    a: &Configuration<M::State>,
    b: &Configuration<M::State>,
    tau: f64,
    stream_seed: u64,
    probes: &[Site],
) -> Result<Vec<ProbeAgreement>> {
    let template = model.template();
    let family = if model.c_max() > 0.0 {
        Some(StreamFamily::new(stream_seed, model.c_max())?)
    } else {
        None
    };
    let mut out = Vec::with_capacity(probes.len());
    for &v in probes {
        let hypothesis_met = match &family {
            None => true,
            Some(f) => match influence_cluster(f, template, v, tau, inner.sites()) {
                Ok(_) => true,
                Err(Error::ClusterEscape { .. }) => false,
                Err(e) => return Err(e),
            },
        };
        let mut agreement = true;
        for w in template.around(v) {
            if a.get(&w)? != b.get(&w)? {
                agreement = false;
                break;
            }
        }
        out.push(ProbeAgreement {
            site: v,
            hypothesis_met,
            agreement,
        });
    }
    Ok(out)
}
