//! Exact rate matrix of a windowed model with a finite reachable state
//! space, and its transient law by uniformization.

use std::collections::{HashMap, VecDeque};
use std::hash::Hash;

use crate::engine::config::{Configuration, PatchLayout};
use crate::engine::model::EnumerableModel;
use crate::error::{invalid, Error, Result};
use crate::lattice::{BoxRegion, Window};

/// Default bound on the number of enumerated global states.
pub const DEFAULT_STATE_CAP: usize = 4096;

/// Sparse rate matrix `Q` over the states reachable from a start
/// configuration; state 0 is the start.
#[derive(Clone, Debug)]
pub struct GeneratorMatrix<S> {
    region: BoxRegion,
    states: Vec<Vec<S>>,
    rows: Vec<Vec<(usize, f64)>>,
    diagonal: Vec<f64>,
}

/// Enumerates the states reachable under `G^A` from `start` by breadth-first
/// search and collects `Q[x][y] = Σ_{v∈A} α_v(x, {y})` for `y ≠ x`.
pub fn generator_matrix<M>(
    model: &M,
    window: &Window,
    start: &Configuration<M::State>,
    cap: usize,
) -> Result<GeneratorMatrix<M::State>>
where
    M: EnumerableModel + ?Sized,
    M::State: Hash + Eq,
{
    let template = model.template();
    let region = *start.region();
    let layout = PatchLayout::new(&region, template);
    if let Some(v) = window.iter().find(|v| !start.covers_patch(&layout, v)) {
        return Err(Error::Unmaterialized(*v));
    }
    let mut index: HashMap<Vec<M::State>, usize> = HashMap::new();
    let mut states: Vec<Vec<M::State>> = Vec::new();
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut queue = VecDeque::new();

    index.insert(start.states().to_vec(), 0);
    states.push(start.states().to_vec());
    queue.push_back(0usize);
    while let Some(i) = queue.pop_front() {
        let current = Configuration::from_fn(region, {
            let mut it = states[i].iter().cloned();
            move |_| it.next().expect("state vector matches region")
        });
        let mut row: HashMap<usize, f64> = HashMap::new();
        for v in window.iter() {
            let patch = current.patch(&layout, v)?;
            let before = patch.to_vec();
            for (after, rate) in model.kernel(&patch) {
                if rate < 0.0 || !rate.is_finite() {
                    return Err(invalid("rate", format!("kernel rate {rate} at {v}")));
                }
                if rate == 0.0 || after == before {
                    continue;
                }
                let mut next = current.clone();
                next.patch_mut(&layout, v)?.assign(&after);
                let key = next.states().to_vec();
                let j = match index.get(&key) {
                    Some(&j) => j,
                    None => {
                        if states.len() >= cap {
                            return Err(Error::StateSpaceTooLarge { cap });
                        }
                        let j = states.len();
                        index.insert(key.clone(), j);
                        states.push(key);
                        queue.push_back(j);
                        j
                    }
                };
                *row.entry(j).or_insert(0.0) += rate;
            }
        }
        let mut row: Vec<(usize, f64)> = row.into_iter().collect();
        row.sort_by_key(|e| e.0);
        if rows.len() <= i {
            rows.resize(i + 1, Vec::new());
        }
        rows[i] = row;
    }
    rows.resize(states.len(), Vec::new());
    let diagonal = rows
        .iter()
        .map(|r| -r.iter().map(|e| e.1).sum::<f64>())
        .collect();
    Ok(GeneratorMatrix {
        region,
        states,
        rows,
        diagonal,
    })
}

impl<S: Clone> GeneratorMatrix<S> {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Off-diagonal entries of row `i`, sorted by column.
    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn diagonal(&self, i: usize) -> f64 {
        self.diagonal[i]
    }

    pub fn configuration(&self, i: usize) -> Configuration<S> {
        let mut it = self.states[i].iter().cloned();
        Configuration::from_fn(self.region, move |_| it.next().expect("sized to region"))
    }

    pub fn index_of(&self, config: &Configuration<S>) -> Option<usize>
    where
        S: PartialEq,
    {
        if *config.region() != self.region {
            return None;
        }
        self.states
            .iter()
            .position(|s| s.as_slice() == config.states())
    }

    pub fn dense(&self) -> Vec<Vec<f64>> {
        let n = self.len();
        let mut q = vec![vec![0.0; n]; n];
        for (i, row) in self.rows.iter().enumerate() {
            q[i][i] = self.diagonal[i];
            for &(j, r) in row {
                q[i][j] = r;
            }
        }
        q
    }

    /// `π0 e^{tQ}` by uniformization.
    pub fn transient_distribution(&self, initial: &[f64], t: f64) -> Result<Vec<f64>> {
        if initial.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                found: initial.len(),
            });
        }
        if !(t >= 0.0 && t.is_finite()) {
            return Err(invalid("tau", format!("must be non-negative, got {t}")));
        }
        let q = self.diagonal.iter().fold(0.0f64, |m, d| m.max(-d));
        if q == 0.0 || t == 0.0 {
            return Ok(initial.to_vec());
        }
        let qt = q * t;
        let mut term = initial.to_vec();
        let mut out = vec![0.0; self.len()];
        let mut log_w = -qt;
        let mut acc = 0.0;
        let k_max = (qt + 12.0 * qt.sqrt() + 60.0).ceil() as usize;
        for k in 0..=k_max {
            if k > 0 {
                log_w += qt.ln() - (k as f64).ln();
                term = self.uniformized_step(&term, q);
            }
            let w = log_w.exp();
            acc += w;
            for (o, x) in out.iter_mut().zip(&term) {
                *o += w * x;
            }
            if k as f64 > qt && 1.0 - acc < 1e-16 {
                break;
            }
        }
        Ok(out)
    }

    /// `π (I + Q/q)`.
    fn uniformized_step(&self, pi: &[f64], q: f64) -> Vec<f64> {
        let mut next: Vec<f64> = pi
            .iter()
            .zip(&self.diagonal)
            .map(|(p, d)| p * (1.0 + d / q))
            .collect();
        for (i, row) in self.rows.iter().enumerate() {
            if pi[i] == 0.0 {
                continue;
            }
            for &(j, r) in row {
                next[j] += pi[i] * r / q;
            }
        }
        next
    }

    /// `E[f(ξ_t)]` started from state 0.
    pub fn expectation(&self, t: f64, f: impl Fn(&Configuration<S>) -> f64) -> Result<f64> {
        let mut pi0 = vec![0.0; self.len()];
        pi0[0] = 1.0;
        let pi = self.transient_distribution(&pi0, t)?;
        Ok(pi
            .iter()
            .enumerate()
            .filter(|(_, p)| **p != 0.0)
            .map(|(i, p)| p * f(&self.configuration(i)))
            .sum())
    }
}
