//! Per-site Poisson event streams.
//!
//! Every site owns an independent ChaCha substream keyed by the experiment
//! seed and the site coordinates, so a stream can be regenerated anywhere
//! without knowing which other sites are materialized.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::lattice::{Site, MAX_DIM};

/// Coordinates must satisfy `|c| < COORD_LIMIT` to be packed into a stream id.
pub const COORD_LIMIT: i64 = 1 << 19;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum StreamTag {
    Events = 0,
    Initial = 1,
}

/// 20 bits per axis, 2 bits of dimension, 2 bits of tag.
pub(crate) fn stream_id(site: &Site, tag: StreamTag) -> u64 {
    let mut id = 0u64;
    for a in 0..MAX_DIM {
        let c = site.coord(a);
        debug_assert!(c.abs() < COORD_LIMIT, "coordinate {c} out of stream range");
        id = (id << 20) | ((c + COORD_LIMIT) as u64 & 0xF_FFFF);
    }
    (id << 4) | ((site.dim() as u64 & 0x3) << 2) | tag as u64
}

pub(crate) fn site_rng(seed: u64, site: &Site, tag: StreamTag) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id(site, tag));
    rng
}

pub(crate) fn check_site_range(site: &Site) -> Result<()> {
    if site.coords().iter().any(|c| c.abs() >= COORD_LIMIT) {
        return Err(Error::InvalidWindow(format!(
            "site {site} outside the supported coordinate range ±{COORD_LIMIT}"
        )));
    }
    Ok(())
}

/// One point `(T_i, U_i)` of a site's stream.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Arrival {
    pub time: f64,
    pub label: f64,
}

/// The family of streams `{P_v}` for one seed and rate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StreamFamily {
    seed: u64,
    rate: f64,
}

impl StreamFamily {
    pub fn new(seed: u64, rate: f64) -> Result<Self> {
        if !(rate.is_finite() && rate > 0.0) {
            return Err(invalid(
                "c_max",
                format!("stream rate must be positive, got {rate}"),
            ));
        }
        Ok(Self { seed, rate })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn stream(&self, site: Site) -> EventStream {
        EventStream {
            site,
            rate: self.rate,
            rng: site_rng(self.seed, &site, StreamTag::Events),
            time: 0.0,
        }
    }

    /// All arrivals of `site` with `T <= horizon`.
    pub fn arrivals_until(&self, site: Site, horizon: f64) -> Vec<Arrival> {
        self.stream(site)
            .take_while(|a| a.time <= horizon)
            .collect()
    }
}

/// Lazily generated stream of one site; arrival times strictly increase.
#[derive(Clone, Debug)]
pub struct EventStream {
    site: Site,
    rate: f64,
    rng: ChaCha8Rng,
    time: f64,
}

impl EventStream {
    pub fn site(&self) -> Site {
        self.site
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }
}

impl Iterator for EventStream {
    type Item = Arrival;

    fn next(&mut self) -> Option<Arrival> {
        loop {
            let u: f64 = self.rng.random();
            let next = self.time - (1.0 - u).ln() / self.rate;
            let label: f64 = self.rng.random();
            // A zero gap would break strict ordering; redraw (probability ~2^-53).
            if next > self.time {
                self.time = next;
                return Some(Arrival { time: next, label });
            }
        }
    }
}

/// Streams materialized for a finite set of sites up to a time horizon.
#[derive(Clone, Debug)]
pub struct RealizedStreams {
    family: StreamFamily,
    horizon: f64,
    arrivals: BTreeMap<Site, Vec<Arrival>>,
}

impl RealizedStreams {
    pub fn family(&self) -> &StreamFamily {
        &self.family
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn get(&self, site: &Site) -> Option<&[Arrival]> {
        self.arrivals.get(site).map(Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Site, &Vec<Arrival>)> {
        self.arrivals.iter()
    }

    pub fn total(&self) -> usize {
        self.arrivals.values().map(Vec::len).sum()
    }
}

/// Realizes the streams of `sites` on `[0, horizon]`.
pub fn make_streams<'a>(
    seed: u64,
    sites: impl IntoIterator<Item = &'a Site>,
    c_max: f64,
    horizon: f64,
) -> Result<RealizedStreams> {
    let family = StreamFamily::new(seed, c_max)?;
    if horizon.is_nan() || horizon < 0.0 {
        return Err(invalid(
            "tau",
            format!("horizon must be non-negative, got {horizon}"),
        ));
    }
    let mut arrivals = BTreeMap::new();
    for s in sites {
        check_site_range(s)?;
        arrivals.insert(*s, family.arrivals_until(*s, horizon));
    }
    Ok(RealizedStreams {
        family,
        horizon,
        arrivals,
    })
}
