//! Dense configuration storage over a box of sites, and patch views
//! `x|_{N_v}` indexed by template offset.

use crate::error::{Error, Result};
use crate::lattice::{BoxRegion, NeighborhoodTemplate, Site};

/// Local states on a fixed box of materialized sites.
#[derive(Clone, Debug, PartialEq)]
pub struct Configuration<S> {
    region: BoxRegion,
    states: Vec<S>,
}

impl<S: Clone> Configuration<S> {
    pub fn filled(region: BoxRegion, state: S) -> Self {
        Self {
            states: vec![state; region.len()],
            region,
        }
    }
}

impl<S> Configuration<S> {
    pub fn from_fn(region: BoxRegion, mut f: impl FnMut(Site) -> S) -> Self {
        let states = region.sites().map(&mut f).collect();
        Self { region, states }
    }

    pub fn region(&self) -> &BoxRegion {
        &self.region
    }

    pub fn get(&self, site: &Site) -> Result<&S> {
        self.region
            .index(site)
            .map(|i| &self.states[i])
            .ok_or(Error::Unmaterialized(*site))
    }

    pub fn get_mut(&mut self, site: &Site) -> Result<&mut S> {
        match self.region.index(site) {
            Some(i) => Ok(&mut self.states[i]),
            None => Err(Error::Unmaterialized(*site)),
        }
    }

    pub fn set(&mut self, site: &Site, state: S) -> Result<()> {
        *self.get_mut(site)? = state;
        Ok(())
    }

    /// `(site, state)` pairs in lexicographic site order.
    pub fn iter(&self) -> impl Iterator<Item = (Site, &S)> {
        self.region.sites().zip(self.states.iter())
    }

    pub fn states(&self) -> &[S] {
        &self.states
    }

    pub fn layout(&self, template: &NeighborhoodTemplate) -> PatchLayout {
        PatchLayout::new(&self.region, template)
    }

    /// Whether `site + N` lies inside the materialized region.
    pub fn covers_patch(&self, layout: &PatchLayout, site: &Site) -> bool {
        layout.fits(&self.region, site)
    }

    pub fn patch<'a>(&'a self, layout: &'a PatchLayout, site: &Site) -> Result<Patch<'a, S>> {
        let base = self.patch_base(layout, site)?;
        Ok(Patch {
            states: &self.states,
            base,
            deltas: &layout.deltas,
        })
    }

    pub fn patch_mut<'a>(
        &'a mut self,
        layout: &'a PatchLayout,
        site: &Site,
    ) -> Result<PatchMut<'a, S>> {
        let base = self.patch_base(layout, site)?;
        Ok(PatchMut {
            states: &mut self.states,
            base,
            deltas: &layout.deltas,
        })
    }

    fn patch_base(&self, layout: &PatchLayout, site: &Site) -> Result<usize> {
        debug_assert_eq!(
            layout.region, self.region,
            "layout built for another region"
        );
        if !layout.fits(&self.region, site) {
            let missing = layout
                .offsets
                .iter()
                .map(|o| *site + *o)
                .find(|w| !self.region.contains(w))
                .unwrap_or(*site);
            return Err(Error::Unmaterialized(missing));
        }
        Ok(self.region.index(site).expect("center inside region"))
    }
}

/// Precomputed index offsets of a template inside a dense region.
#[derive(Clone, Debug)]
pub struct PatchLayout {
    region: BoxRegion,
    offsets: Vec<Site>,
    deltas: Vec<isize>,
    lo: Site,
    hi: Site,
}

impl PatchLayout {
    pub fn new(region: &BoxRegion, template: &NeighborhoodTemplate) -> Self {
        let strides = region.strides();
        let deltas = template
            .offsets()
            .iter()
            .map(|o| {
                o.coords()
                    .iter()
                    .zip(strides)
                    .map(|(c, s)| *c as isize * s)
                    .sum()
            })
            .collect();
        let bb = BoxRegion::bounding(template.offsets()).expect("template is non-empty");
        Self {
            region: *region,
            offsets: template.offsets().to_vec(),
            deltas,
            lo: bb.lo(),
            hi: bb.hi(),
        }
    }

    #[inline]
    fn fits(&self, region: &BoxRegion, site: &Site) -> bool {
        region.contains(&(*site + self.lo)) && region.contains(&(*site + self.hi))
    }

    pub fn offsets(&self) -> &[Site] {
        &self.offsets
    }
}

/// Read-only view of the states on `v + N`; index `i` is template offset `i`.
#[derive(Clone, Copy)]
pub struct Patch<'a, S> {
    states: &'a [S],
    base: usize,
    deltas: &'a [isize],
}

impl<'a, S> Patch<'a, S> {
    /// Patch over an owned slice laid out in template order.
    pub fn from_slice(states: &'a [S], identity: &'a [isize]) -> Self {
        debug_assert_eq!(states.len(), identity.len());
        Self {
            states,
            base: 0,
            deltas: identity,
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.deltas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.deltas.is_empty()
    }

    #[inline]
    pub fn get(&self, i: usize) -> &'a S {
        &self.states[(self.base as isize + self.deltas[i]) as usize]
    }

    pub fn iter(&self) -> impl Iterator<Item = &'a S> + '_ {
        (0..self.len()).map(move |i| self.get(i))
    }

    pub fn to_vec(&self) -> Vec<S>
    where
        S: Clone,
    {
        self.iter().cloned().collect()
    }
}

/// Mutable view of the states on `v + N`.
pub struct PatchMut<'a, S> {
    states: &'a mut [S],
    base: usize,
    deltas: &'a [isize],
}

impl<'a, S> PatchMut<'a, S> {
    pub fn from_slice(states: &'a mut [S], identity: &'a [isize]) -> Self {
        debug_assert_eq!(states.len(), identity.len());
        Self {
            states,
            base: 0,
            deltas: identity,
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.deltas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.deltas.is_empty()
    }

    #[inline]
    pub fn get(&self, i: usize) -> &S {
        &self.states[(self.base as isize + self.deltas[i]) as usize]
    }

    #[inline]
    pub fn get_mut(&mut self, i: usize) -> &mut S {
        &mut self.states[(self.base as isize + self.deltas[i]) as usize]
    }

    pub fn as_patch(&self) -> Patch<'_, S> {
        Patch {
            states: self.states,
            base: self.base,
            deltas: self.deltas,
        }
    }

    pub fn to_vec(&self) -> Vec<S>
    where
        S: Clone,
    {
        (0..self.len()).map(|i| self.get(i).clone()).collect()
    }

    pub fn assign(&mut self, values: &[S])
    where
        S: Clone,
    {
        for (i, v) in values.iter().enumerate() {
            *self.get_mut(i) = v.clone();
        }
    }
}

/// `[0, 1, .., n-1]` as index deltas, for patches stored in template order.
pub fn identity_deltas(n: usize) -> Vec<isize> {
    (0..n as isize).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn patch_reads_template_order() {
        let region = BoxRegion::centered(2, 3);
        let cfg = Configuration::from_fn(region, |s| s.coord(0) * 10 + s.coord(1));
        let t = NeighborhoodTemplate::box_radius(2, 1);
        let layout = cfg.layout(&t);
        let v = Site::new(&[1, -1]);
        let p = cfg.patch(&layout, &v).unwrap();
        for (i, o) in t.offsets().iter().enumerate() {
            let w = v + *o;
            assert_eq!(*p.get(i), w.coord(0) * 10 + w.coord(1));
        }
    }

    #[test]
    fn patch_outside_region_is_an_error() {
        let cfg = Configuration::filled(BoxRegion::centered(1, 2), 0u32);
        let layout = cfg.layout(&NeighborhoodTemplate::box_radius(1, 1));
        assert!(cfg.patch(&layout, &Site::at(1)).is_ok());
        assert_eq!(
            cfg.patch(&layout, &Site::at(2)).err(),
            Some(Error::Unmaterialized(Site::at(3)))
        );
    }

    #[test]
    fn patch_mut_writes_through() {
        let mut cfg = Configuration::filled(BoxRegion::centered(1, 3), 0u32);
        let layout = cfg.layout(&NeighborhoodTemplate::box_radius(1, 1));
        {
            let mut p = cfg.patch_mut(&layout, &Site::at(0)).unwrap();
            *p.get_mut(0) = 7;
            *p.get_mut(2) = 9;
        }
        assert_eq!(*cfg.get(&Site::at(-1)).unwrap(), 7);
        assert_eq!(*cfg.get(&Site::at(1)).unwrap(), 9);
        assert_eq!(*cfg.get(&Site::at(0)).unwrap(), 0);
    }
}
