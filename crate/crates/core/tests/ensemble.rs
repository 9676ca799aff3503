//! Ensemble integrals against each other and against their limits.

use rand::Rng;

use lcsfid::closedform::state_fidelity_closed;
use lcsfid::ensemble::{
    ensemble_gate_fidelity, ensemble_state_fidelity, mc_estimate, IntegrationOptions, Integrator, McIntegrand,
};
use lcsfid::model::DeviceParams;
use lcsfid::protocol::PulseSchedule;
use lcsfid::stochastics::stream_rng;
use lcsfid::Error;

#[test]
fn closed_form_stays_in_range() {
    let mut rng = stream_rng(99, 0);
    for n in 1..=8 {
        for _ in 0..10_000 {
            let e: Vec<f64> = (0..=n).map(|_| rng.random_range(-20.0..20.0)).collect();
            let f = state_fidelity_closed(&e).unwrap();
            assert!((-1e-12..=1.0 + 1e-12).contains(&f), "n={n} {f}");
        }
    }
}

#[test]
fn monte_carlo_variance_scales_inversely_with_draws() {
    let p = DeviceParams::natural(0.04, 3.0, -3.0).unwrap();
    let s = PulseSchedule::nominal(3).unwrap();
    let small = mc_estimate(&p, &s, &IntegrationOptions::monte_carlo(20_000, 1)).unwrap();
    let large = mc_estimate(&p, &s, &IntegrationOptions::monte_carlo(320_000, 1)).unwrap();
    let ratio = (small.stderr / large.stderr).powi(2);
    assert!((ratio - 16.0).abs() < 2.0, "variance ratio {ratio}");
}

#[test]
fn oracle_integrand_agrees_with_closed_form_integrand() {
    // short lifetime so the dwell never outlasts a cycle
    let p = DeviceParams::natural(0.01, 4.0, -2.0).unwrap();
    let s = PulseSchedule::nominal(2).unwrap();
    let closed = IntegrationOptions::monte_carlo(2_000, 3);
    let oracle = IntegrationOptions {
        integrand: McIntegrand::Oracle,
        t_bin: Some(0.2),
        ..closed.clone()
    };
    let truncated = IntegrationOptions {
        t_bin: Some(0.2),
        ..closed
    };
    let a = mc_estimate(&p, &s, &truncated).unwrap();
    let b = mc_estimate(&p, &s, &oracle).unwrap();
    assert!((a.value - b.value).abs() < 1e-10, "{} vs {}", a.value, b.value);
}

#[test]
fn quadrature_agrees_with_monte_carlo_under_truncation() {
    let p = DeviceParams::natural(0.05, 5.0, 1.5).unwrap();
    let s = PulseSchedule::uniform_shift(3, 0.01).unwrap();
    let quad = IntegrationOptions {
        t_bin: Some(0.08),
        ..IntegrationOptions::default()
    };
    let mc = IntegrationOptions {
        t_bin: Some(0.08),
        ..IntegrationOptions::monte_carlo(400_000, 17)
    };
    let q = ensemble_state_fidelity(&p, &s, &quad).unwrap();
    let m = mc_estimate(&p, &s, &mc).unwrap();
    assert!((q.value - m.value).abs() <= 3.0 * m.stderr, "{} vs {} +- {}", q.value, m.value, m.stderr);
}

#[test]
fn post_selection_helps() {
    let p = DeviceParams::natural(0.1, f64::INFINITY, -3.0).unwrap();
    let s = PulseSchedule::nominal(3).unwrap();
    let open = ensemble_state_fidelity(&p, &s, &IntegrationOptions::default()).unwrap().value;
    let narrow = IntegrationOptions {
        t_bin: Some(0.05),
        ..IntegrationOptions::default()
    };
    assert!(ensemble_state_fidelity(&p, &s, &narrow).unwrap().value > open);
}

#[test]
fn exact_evaluation_without_dephasing() {
    let p = DeviceParams::natural(0.05, f64::INFINITY, -1.0).unwrap();
    let r = ensemble_gate_fidelity(&p, 0.0, 0.0, &IntegrationOptions::default()).unwrap();
    assert_eq!(r.method, Integrator::Exact);
    assert_eq!(r.evaluations, 1);
    // E[cos 2 pi (t0 + t1)] for two exponential dwells
    let k = 2.0 * std::f64::consts::PI * 0.05;
    let expected = 0.5 * (1.0 + (1.0 - k * k) / (1.0 + k * k).powi(2));
    assert!((r.value - expected).abs() < 1e-12);
}

#[test]
fn doubling_the_rule_changes_little() {
    let p = DeviceParams::natural(0.03, 0.8, -3.0).unwrap();
    let s = PulseSchedule::nominal(4).unwrap();
    let base = ensemble_state_fidelity(&p, &s, &IntegrationOptions::default()).unwrap();
    let finer = IntegrationOptions {
        hermite_order: 512,
        ..IntegrationOptions::default()
    };
    let fine = ensemble_state_fidelity(&p, &s, &finer).unwrap();
    assert!((base.value - fine.value).abs() <= 1e-6 * base.value.abs().max(1e-300));
}

#[test]
fn invalid_options_are_rejected() {
    let p = DeviceParams::natural(0.03, 0.8, -3.0).unwrap();
    let bad = IntegrationOptions {
        hermite_order: 4,
        ..IntegrationOptions::default()
    };
    assert!(matches!(
        ensemble_gate_fidelity(&p, 0.0, 0.0, &bad),
        Err(Error::InvalidParameter { .. })
    ));
}
