//! Coupling, cluster tails and the large-window limits on models whose
//! answers are known.

use ipsim::engine::{Initial, JumpModel};
use ipsim::functionals::{CenterMoment, HPhi, Phi1};
use ipsim::lattice::{NeighborhoodTemplate, Site, Window};
use ipsim::stats::{
    cluster_tail_probe, coupling_check, estimate_sigma, run_clt, run_lln, ExperimentPlan, Observed,
    SigmaOptions,
};
use ipsim::zoo::{LatticeBd, MultilayerBdStick, Rsa, SpinFlip};

fn boxes(dim: usize, radii: &[i64]) -> Vec<Window> {
    radii
        .iter()
        .map(|&r| Window::centered_box(dim, r).unwrap())
        .collect()
}

#[test]
fn nested_lattice_windows_agree_where_clusters_stay_inside() {
    let m = LatticeBd::new(1.0, NeighborhoodTemplate::box_radius(1, 1)).unwrap();
    let inner = Window::centered_box(1, 20).unwrap();
    let outer = Window::centered_box(1, 40).unwrap();
    let probes: Vec<Site> = (-10..=10).map(Site::at).collect();
    let r = coupling_check(
        &m,
        &inner,
        &outer,
        &Initial::default(),
        1.0,
        &probes,
        40,
        7,
        false,
    )
    .unwrap();
    assert_eq!(r.violations, 0);
    assert!(
        r.hypothesis_met > r.rows.len() / 2,
        "{} of {}",
        r.hypothesis_met,
        r.rows.len()
    );
}

#[test]
fn nested_rsa_windows_agree_where_clusters_stay_inside() {
    let m = Rsa::new(1.0, 0.2, 1).unwrap();
    let inner = Window::centered_box(1, 15).unwrap();
    let outer = Window::centered_box(1, 30).unwrap();
    let probes: Vec<Site> = (-5..=5).map(Site::at).collect();
    let r = coupling_check(
        &m,
        &inner,
        &outer,
        &Initial::default(),
        0.5,
        &probes,
        30,
        8,
        false,
    )
    .unwrap();
    assert_eq!(r.violations, 0);
    assert!(r.hypothesis_met > 0);
}

#[test]
fn decoupled_streams_are_caught() {
    let m = LatticeBd::new(1.0, NeighborhoodTemplate::box_radius(1, 1)).unwrap();
    let inner = Window::centered_box(1, 20).unwrap();
    let outer = Window::centered_box(1, 40).unwrap();
    let probes: Vec<Site> = (-10..=10).map(Site::at).collect();
    let r = coupling_check(
        &m,
        &inner,
        &outer,
        &Initial::default(),
        1.0,
        &probes,
        20,
        7,
        true,
    )
    .unwrap();
    assert!(r.violations > 0);
}

#[test]
fn cluster_tail_stays_below_geometric_bound() {
    let n = NeighborhoodTemplate::box_radius(1, 1);
    let r = cluster_tail_probe(&n, 1.0, &[1, 2, 3], 3000, 11).unwrap();
    assert_eq!(r.scale.theta, 16.0);
    for row in &r.rows {
        assert!(row.within_bound, "{row:?}");
    }
    assert!(r.log_linear);
}

#[test]
fn stick_deposition_keeps_every_ball() {
    let m = MultilayerBdStick::new(1.3, 1).unwrap();
    let phi = HPhi::new(&Phi1, 1).unwrap();
    let init = Initial::default();
    let obs = Observed::new(&m, &phi, &init);
    let plan = ExperimentPlan::new(boxes(1, &[10, 20, 40]), vec![0.5, 2.0], 200, 3).unwrap();
    let r = run_lln(&obs, &plan).unwrap();
    for row in &r.rows {
        let exact = 1.3 * row.tau;
        assert!(
            (row.mean - exact).abs() <= 3.0 * row.std_err + 1e-12,
            "{row:?}"
        );
    }
}

/// `Cov(X_s, X_t)` for one flip site started at 0 with unit rates.
fn flip_covariance(s: f64, t: f64) -> f64 {
    let p = |u: f64| (1.0 - (-2.0 * u).exp()) / 2.0;
    p(s) * ((1.0 + (-2.0 * (t - s)).exp()) / 2.0 - p(t))
}

#[test]
fn independent_sites_give_single_site_covariance() {
    let m = SpinFlip::new(1, 1.0, 1.0).unwrap();
    let h = CenterMoment::new(1).unwrap();
    let init = Initial::Fixed(0u32);
    let obs = Observed::new(&m, &h, &init);
    let plan = ExperimentPlan::new(boxes(1, &[60]), vec![0.5, 1.0], 400, 5).unwrap();
    let r = estimate_sigma(
        &obs,
        &plan,
        0.5,
        1.0,
        SigmaOptions {
            radius: 2,
            margin: 0,
        },
    )
    .unwrap();
    let exact = flip_covariance(0.5, 1.0);
    assert!(
        r.scaling.z_score(exact).abs() < 3.5,
        "{:?} vs {exact}",
        r.scaling
    );
    assert!(r.sum.z_score(exact).abs() < 3.5, "{:?} vs {exact}", r.sum);
    assert!(r.agree);
}

#[test]
fn flip_clt_rows_are_close_to_gaussian() {
    let m = SpinFlip::new(1, 1.0, 1.0).unwrap();
    let h = CenterMoment::new(1).unwrap();
    let init = Initial::Fixed(0u32);
    let obs = Observed::new(&m, &h, &init);
    let plan = ExperimentPlan::new(boxes(1, &[25, 100]), vec![1.0], 2000, 9).unwrap();
    let r = run_clt(&obs, &plan).unwrap();
    let exact = flip_covariance(1.0, 1.0);
    let last = r.rows.last().unwrap();
    assert!(
        (last.cov_scaled - exact).abs() < 4.0 * last.cov_std_err,
        "{last:?}"
    );
    assert!(
        last.skew.abs() < 0.2 && last.ex_kurtosis.abs() < 0.3,
        "{last:?}"
    );
    assert!(!r.degenerate);
    assert!(m.c_max() > 0.0);
}
