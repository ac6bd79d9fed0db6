//! Influence clusters by reverse reachability over realized stream points.
//!
//! The oriented graph has an edge `(u,T) -> (z,T')` whenever `z ∈ N_u^+` and
//! `T < T'`, and `(w,0) -> (z,T)` whenever `z ∈ N_w^+`. Reaching an arrival
//! `(z,T)` backwards reaches every earlier arrival at each `u ∈ N_z^+` and
//! the time-zero points of `N_z^+`, so it is enough to track the latest
//! reached arrival per site.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use serde::Serialize;

use crate::engine::streams::StreamFamily;
use crate::error::{invalid, Error, Result};
use crate::lattice::{BoxRegion, NeighborhoodTemplate, Site, SiteSet, Window};

/// Sites where a cluster is allowed to live.
pub trait Region {
    fn contains_site(&self, site: &Site) -> bool;
}

impl Region for SiteSet {
    fn contains_site(&self, site: &Site) -> bool {
        self.contains(site)
    }
}

impl Region for BoxRegion {
    fn contains_site(&self, site: &Site) -> bool {
        self.contains(site)
    }
}

impl Region for Window {
    fn contains_site(&self, site: &Site) -> bool {
        self.contains(site)
    }
}

/// `C_{v,τ}`: sites whose time-zero point reaches an arrival at `N_v^+` by `τ`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct InfluenceCluster {
    pub center: Site,
    pub time: OrderedTime,
    pub members: SiteSet,
}

/// A time stored for reports; compared by bit pattern.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct OrderedTime(pub f64);

impl PartialEq for OrderedTime {
    fn eq(&self, other: &Self) -> bool {
        self.0.to_bits() == other.0.to_bits()
    }
}

impl Eq for OrderedTime {}

/// Computes `C_{v,τ}`; fails with [`Error::ClusterEscape`] as soon as a
/// member falls outside `region`.
pub fn influence_cluster(
    family: &StreamFamily,
    template: &NeighborhoodTemplate,
    v: Site,
    tau: f64,
    region: &impl Region,
) -> Result<InfluenceCluster> {
    let plus = template.doubled();
    let members = reverse_reach(family, &plus, v, plus.around(v), tau, region)?;
    Ok(InfluenceCluster {
        center: v,
        time: OrderedTime(tau),
        members,
    })
}

/// Sites `w` such that `(w,0)` reaches some arrival at a target by `tau`,
/// where `plus` is the 2-neighborhood template.
pub fn reverse_reach(
    family: &StreamFamily,
    plus: &NeighborhoodTemplate,
    center: Site,
    targets: impl IntoIterator<Item = Site>,
    tau: f64,
    region: &impl Region,
) -> Result<SiteSet> {
    if tau.is_nan() || tau < 0.0 {
        return Err(invalid("tau", format!("must be non-negative, got {tau}")));
    }
    let mut times = ArrivalCache::new(family, tau);
    let mut latest: HashMap<Site, f64> = HashMap::new();
    let mut heap = BinaryHeap::new();
    for z in targets {
        if let Some(t) = times.last_before(z, f64::INFINITY) {
            if latest.get(&z).is_none_or(|&old| t > old) {
                latest.insert(z, t);
                heap.push(Reached { time: t, site: z });
            }
        }
    }
    let mut members = SiteSet::new();
    while let Some(Reached { time, site: z }) = heap.pop() {
        if latest[&z] > time {
            continue;
        }
        for u in plus.around(z) {
            if !region.contains_site(&u) {
                return Err(Error::ClusterEscape { center, site: u });
            }
            members.insert(u);
            if let Some(t) = times.last_before(u, time) {
                if latest.get(&u).is_none_or(|&old| t > old) {
                    latest.insert(u, t);
                    heap.push(Reached { time: t, site: u });
                }
            }
        }
    }
    Ok(members)
}

struct Reached {
    time: f64,
    site: Site,
}

impl PartialEq for Reached {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Reached {}

impl PartialOrd for Reached {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Reached {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time
            .total_cmp(&other.time)
            .then_with(|| self.site.cmp(&other.site))
    }
}

struct ArrivalCache<'a> {
    family: &'a StreamFamily,
    tau: f64,
    times: HashMap<Site, Vec<f64>>,
}

impl<'a> ArrivalCache<'a> {
    fn new(family: &'a StreamFamily, tau: f64) -> Self {
        Self {
            family,
            tau,
            times: HashMap::new(),
        }
    }

    /// Latest arrival at `site` that is `<= tau` and strictly before `bound`.
    fn last_before(&mut self, site: Site, bound: f64) -> Option<f64> {
        let (family, tau) = (self.family, self.tau);
        let ts = self.times.entry(site).or_insert_with(|| {
            family
                .arrivals_until(site, tau)
                .into_iter()
                .map(|a| a.time)
                .collect()
        });
        let k = ts.partition_point(|&t| t < bound);
        (k > 0).then(|| ts[k - 1])
    }
}
