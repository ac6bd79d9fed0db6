//! Closed-form and exhaustive-enumeration oracles.

use ipsim::engine::{
    generator_matrix, simulate_window, Configuration, Initial, JumpModel, RunSeeds,
};
use ipsim::lattice::{BoxRegion, NeighborhoodTemplate, Site, Window};
use ipsim::stats::{oracle_compare, Estimate};
use ipsim::zoo::{
    LatticeBd, SpinFlip, UniformBall, VoterContinuum, VoterVariant, ZeroRange, ZeroRangeRates,
};
use ipsim::zoo::{Mark, MarkedPoint};

/// Jamming density of unit intervals on the line, from the parking integral
/// `∫_0^∞ exp(-2 ∫_0^t (1 - e^{-u})/u du) dt`.
fn parking_integral() -> f64 {
    let inner = |u: f64| {
        if u < 1e-8 {
            1.0 - u / 2.0
        } else {
            -(-u).exp_m1() / u
        }
    };
    let (h, end) = (1e-3, 400.0);
    let (mut t, mut f, mut y) = (0.0f64, 0.0f64, 0.0f64);
    // RK4 on (F' = inner(t), y' = exp(-2F)).
    while t < end {
        let k1f = inner(t);
        let k1y = (-2.0 * f).exp();
        let k2f = inner(t + h / 2.0);
        let k2y = (-2.0 * (f + h / 2.0 * k1f)).exp();
        let k3y = (-2.0 * (f + h / 2.0 * k2f)).exp();
        let k4f = inner(t + h);
        let k4y = (-2.0 * (f + h * k2f)).exp();
        y += h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
        f += h / 6.0 * (k1f + 4.0 * k2f + k4f);
        t += h;
    }
    // Beyond `end` the integrand is e^{-2γ}/t² up to e^{-t} corrections.
    let euler_gamma = 0.577_215_664_901_532_9_f64;
    y + (-2.0 * euler_gamma).exp() / end
}

/// Frozen value of [`parking_integral`]; the acceptance harness uses it.
const PARKING_CONSTANT: f64 = 0.747_597_920_2;

#[test]
fn parking_constant_oracle() {
    let c = parking_integral();
    assert!((c - PARKING_CONSTANT).abs() < 1e-8, "{c}");
}

fn line(sites: &[i64]) -> Window {
    Window::new(sites.iter().map(|&x| Site::at(x))).unwrap()
}

#[test]
fn flip_generator_is_two_state_chain() {
    let m = SpinFlip::new(1, 1.0, 1.0).unwrap();
    let w = line(&[0]);
    let start = Configuration::filled(BoxRegion::centered(1, 0), 0u32);
    let q = generator_matrix(&m, &w, &start, 16).unwrap();
    assert_eq!(q.dense(), vec![vec![-1.0, 1.0], vec![1.0, -1.0]]);
    for t in [0.1, 0.5, 1.0, 3.0] {
        let p = q
            .expectation(t, |c| f64::from(*c.get(&Site::at(0)).unwrap()))
            .unwrap();
        let exact = (1.0 - (-2.0 * t).exp()) / 2.0;
        assert!((p - exact).abs() < 1e-13, "t={t}: {p} vs {exact}");
    }
}

/// Transitions of two-site capped deposition with frozen zero walls,
/// written out directly on height pairs.
fn capped_pair_rates(h0: u32, h1: u32, cap: u32) -> Vec<((u32, u32), f64)> {
    let mut out = Vec::new();
    let at0 = h0.max(h1) + 1;
    if at0 <= cap {
        out.push(((at0, h1), 1.0));
    }
    let at1 = h0.max(h1) + 1;
    if at1 <= cap {
        out.push(((h0, at1), 1.0));
    }
    out
}

#[test]
fn capped_pair_generator_matches_enumeration() {
    let cap = 3;
    let m = LatticeBd::new(1.0, NeighborhoodTemplate::box_radius(1, 1))
        .unwrap()
        .with_cap(cap);
    let w = line(&[0, 1]);
    let start = Configuration::filled(BoxRegion::new(1, [-1, 0, 0], [2, 0, 0]), 0u32);
    let q = generator_matrix(&m, &w, &start, 4096).unwrap();
    let pair = |i: usize| {
        let c = q.configuration(i);
        (*c.get(&Site::at(0)).unwrap(), *c.get(&Site::at(1)).unwrap())
    };
    let mut seen = std::collections::BTreeSet::new();
    for i in 0..q.len() {
        let (h0, h1) = pair(i);
        seen.insert((h0, h1));
        let mut expected = capped_pair_rates(h0, h1, cap);
        expected.sort_by_key(|e| e.0);
        let mut got: Vec<((u32, u32), f64)> = q.row(i).iter().map(|&(j, r)| (pair(j), r)).collect();
        got.sort_by_key(|e| e.0);
        assert_eq!(got, expected, "row {h0},{h1}");
        let row_sum: f64 = q.row(i).iter().map(|e| e.1).sum::<f64>() + q.diagonal(i);
        assert_eq!(row_sum, 0.0);
    }
    // Reachable pairs from (0,0): the walls pin every deposit to max + 1.
    let mut reach = std::collections::BTreeSet::new();
    let mut stack = vec![(0u32, 0u32)];
    while let Some(s) = stack.pop() {
        if reach.insert(s) {
            stack.extend(capped_pair_rates(s.0, s.1, cap).into_iter().map(|e| e.0));
        }
    }
    assert_eq!(seen, reach);
}

#[test]
fn state_space_cap_is_enforced() {
    let m = LatticeBd::new(1.0, NeighborhoodTemplate::box_radius(1, 1))
        .unwrap()
        .with_cap(40);
    let w = line(&[0, 1, 2]);
    let start = Configuration::filled(BoxRegion::new(1, [-1, 0, 0], [3, 0, 0]), 0u32);
    assert!(matches!(
        generator_matrix(&m, &w, &start, 50),
        Err(ipsim::Error::StateSpaceTooLarge { cap: 50 })
    ));
}

#[test]
fn flip_probability_matches_closed_form() {
    let m = SpinFlip::new(1, 1.0, 1.0).unwrap();
    let r = oracle_compare(
        &m,
        &line(&[0]),
        &0,
        0.5,
        |c| f64::from(*c.get(&Site::at(0)).unwrap()),
        20_000,
        5,
        16,
    )
    .unwrap();
    let exact = (1.0 - (-1.0f64).exp()) / 2.0;
    assert!((r.exact - exact).abs() < 1e-13);
    assert!(r.pass, "{r:?}");
}

#[test]
fn capped_pair_mean_height_matches_matrix_exponential() {
    let m = LatticeBd::new(1.0, NeighborhoodTemplate::box_radius(1, 1))
        .unwrap()
        .with_cap(12);
    let f = |c: &Configuration<u32>| f64::from(*c.get(&Site::at(0)).unwrap());
    let r = oracle_compare(&m, &line(&[0, 1]), &0, 0.5, f, 20_000, 9, 4096).unwrap();
    assert!(r.pass, "{r:?}");
}

fn poisson_counts(lambda: f64, tau: f64, reps: u64) -> Vec<f64> {
    let m = LatticeBd::new(lambda, NeighborhoodTemplate::box_radius(1, 1)).unwrap();
    let w = line(&[0]);
    (0..reps)
        .map(|i| {
            let tr = simulate_window(
                &m,
                &w,
                &Initial::default(),
                tau,
                RunSeeds::from_master(21, i),
            )
            .unwrap();
            assert_eq!(
                tr.events.len(),
                tr.events
                    .iter()
                    .filter(|e| e.kind == ipsim::engine::EventKind::Jump)
                    .count()
            );
            f64::from(*tr.final_state.get(&Site::at(0)).unwrap())
        })
        .collect()
}

#[test]
fn single_active_site_height_is_poisson() {
    let (lambda, tau) = (1.5, 2.0);
    let xs = poisson_counts(lambda, tau, 20_000);
    let mean = Estimate::of_mean(&xs);
    assert!(mean.z_score(lambda * tau).abs() < 3.0, "{mean:?}");
    let var = ipsim::stats::summary::covariance(&xs, &xs);
    assert!(var.z_score(lambda * tau).abs() < 3.0, "{var:?}");
}

#[test]
fn processed_events_equal_stream_points() {
    let m = LatticeBd::new(1.0, NeighborhoodTemplate::box_radius(1, 1)).unwrap();
    let w = Window::centered_box(1, 6).unwrap();
    let seeds = RunSeeds::new(77, 78);
    let tr = simulate_window(&m, &w, &Initial::default(), 3.0, seeds).unwrap();
    let streams = ipsim::engine::StreamFamily::new(77, m.c_max()).unwrap();
    let total: usize = w
        .iter()
        .map(|v| streams.arrivals_until(*v, 3.0).len())
        .sum();
    assert_eq!(tr.events.len(), total);
}

#[test]
fn isolated_zero_range_particle_jumps_at_rate_lambda() {
    let law = UniformBall::new(0.5).unwrap();
    let m = ZeroRange::new(ZeroRangeRates::Harmonic(2.0), 0.3, law, 1).unwrap();
    let w = Window::centered_box(1, 40).unwrap();
    let tau = 1.5;
    let mut counts = Vec::new();
    for i in 0..4000u64 {
        let mut start =
            Configuration::filled(w.bounding_box().expand(m.template().radius()), Vec::new());
        start
            .set(&Site::at(0), vec![MarkedPoint::new(&[0.5], Mark::None)])
            .unwrap();
        let mut sim = ipsim::engine::WindowSim::from_configuration(
            &m,
            &w,
            start,
            RunSeeds::from_master(4, i).stream,
        )
        .unwrap();
        sim.advance_to(tau).unwrap();
        counts.push(sim.jumps() as f64);
    }
    let e = Estimate::of_mean(&counts);
    assert!(e.z_score(2.0 * tau).abs() < 3.0, "{e:?}");
}

#[test]
fn voter_without_copying_flips_fair_coins() {
    let m = VoterContinuum::new(1.0, 1.0, 0.0, VoterVariant::I, 1).unwrap();
    let w = Window::centered_box(1, 50).unwrap();
    let mut ones = 0usize;
    let mut total = 0usize;
    for i in 0..20u64 {
        let tr = simulate_window(
            &m,
            &w,
            &Initial::default(),
            5.0,
            RunSeeds::from_master(8, i),
        )
        .unwrap();
        for (_, cell) in tr.final_state.iter() {
            for p in cell {
                total += 1;
                ones += usize::from(p.mark.color() == Some(1));
            }
        }
    }
    let p = ones as f64 / total as f64;
    let se = (0.25 / total as f64).sqrt();
    assert!((p - 0.5).abs() < 3.0 * se, "{p} over {total}");
}

#[test]
fn first_arrival_in_empty_space_gets_uniform_color() {
    let m = VoterContinuum::new(1.0, 1.0, 1.0, VoterVariant::II, 1).unwrap();
    let w = line(&[0]);
    let mut ones = 0;
    let mut n = 0;
    for i in 0..4000u64 {
        let tr = simulate_window(
            &m,
            &w,
            &Initial::default(),
            5.0,
            RunSeeds::from_master(12, i),
        )
        .unwrap();
        if let Some(first) = tr.events.first() {
            let placed = first.after.iter().flatten().next().unwrap();
            ones += usize::from(placed.mark.color() == Some(1));
            n += 1;
        }
    }
    let p = ones as f64 / n as f64;
    assert!((p - 0.5).abs() < 3.0 * (0.25 / n as f64).sqrt(), "{p}");
}
