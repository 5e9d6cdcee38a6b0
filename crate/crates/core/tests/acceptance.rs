//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Criteria listed in `KNOWN_FAILURES` are reported as FAIL but do not fail the run.

use lskin::*;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use std::time::{Duration, Instant};

const KNOWN_FAILURES: &[u32] = &[9];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn within_budget(start: Instant, budget: Duration) -> (bool, String) {
    let used = start.elapsed();
    (used < budget, format!("{:.2}s of {}s", used.as_secs_f64(), budget.as_secs()))
}

fn sweep(from: f64, to: f64, step: f64) -> Vec<f64> {
    let n = ((to - from) / step).round() as usize;
    (0..=n).map(|k| ((from + k as f64 * step) * 1e10).round() / 1e10).collect()
}

fn dense_rapidities(spec: &ChainSpec) -> NumericSpectrum {
    let x = build_damping(spec).xc.mapv(|v| Complex64::new(v, 0.0));
    numeric_spectrum(&x).expect("dense eigensolver")
}

/// Within `tol` of `tᵢ = ±γᵢ` or of a Jordan Bloch block on the periodic grid.
fn near_ep(spec: &ChainSpec, tol: f64) -> bool {
    if !classify_ep(spec, tol).is_empty() {
        return true;
    }
    if spec.boundary == Boundary::Open {
        return false;
    }
    let r = derive_rates(spec);
    (0..spec.cells).any(|k| {
        let q = 2.0 * std::f64::consts::PI * k as f64 / spec.cells as f64;
        let a = Complex64::new(spec.t1 + r.g1, 0.0) + (spec.t2 - r.g2) * Complex64::from_polar(1.0, -q);
        let b = Complex64::new(spec.t1 - r.g1, 0.0) + (spec.t2 + r.g2) * Complex64::from_polar(1.0, q);
        a.norm().min(b.norm()) < tol
    })
}

fn ac1() -> Outcome {
    let start = Instant::now();
    let mut runner = TestRunner::new(Config { cases: 50, failure_persistence: None, ..Config::default() });
    let strategy = (
        -2.0..2.0f64,
        -2.0..2.0f64,
        0.0..2.0f64,
        -1.0..1.0f64,
        0.0..2.0f64,
        -1.0..1.0f64,
        1usize..=12,
        any::<bool>(),
    )
        .prop_filter_map("spec near an exceptional point", |(t1, t2, g1, e1, g2, e2, cells, pbc)| {
            let b = if pbc { Boundary::Periodic } else { Boundary::Open };
            let spec = ChainSpec::new(t1, t2, b, cells).strengths(g1, e1 * g1, g2, e2 * g2);
            (!near_ep(&spec, 0.05)).then_some(spec)
        });
    let worst = std::cell::Cell::new(0.0f64);
    let result = runner.run(&strategy, |spec| {
        let g = derive_rates(&spec).g;
        let x = dense_rapidities(&spec).values;
        let hs = build_hs(&spec).mapv(|v| Complex64::new(v, 0.0));
        let shifted: Vec<_> = numeric_spectrum(&hs).unwrap().values.iter().map(|e| g + Complex64::i() * e).collect();
        let d = multiset_distance(&x, &shifted);
        worst.set(worst.get().max(d));
        prop_assert!(d < 1e-10, "{spec:?}: {d}");
        Ok(())
    });
    let (fast, time) = within_budget(start, Duration::from_secs(10));
    outcome(result.is_ok() && fast, format!("max distance {:.2e} over 50 specs, {time}", worst.get()))
}

fn ac2() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut skipped = 0;
    let mut checked = 0;
    for g2 in [0.0, 0.5] {
        for t1 in sweep(-3.0, 3.0, 0.1) {
            for b in [Boundary::Open, Boundary::Periodic] {
                let spec = ChainSpec::new(t1, 1.0, b, 46).balanced(1.5, g2);
                if near_ep(&spec, 1e-6) {
                    skipped += 1;
                    continue;
                }
                let (_, closed) = rapidities_closed_form(&spec);
                worst = worst.max(multiset_distance(&closed, &dense_rapidities(&spec).values));
                checked += 1;
            }
        }
    }
    let (fast, time) = within_budget(start, Duration::from_secs(60));
    outcome(
        worst < 1e-9 && fast,
        format!("max distance {worst:.2e} over {checked} sweep points ({skipped} exceptional points skipped), {time}"),
    )
}

fn ac3() -> Outcome {
    let mut worst_obc: f64 = 0.0;
    let mut worst_dense: f64 = 0.0;
    let mut worst_pbc: f64 = 0.0;
    let mut worst_tc: f64 = 0.0;
    for g1 in [0.5, 1.5] {
        for t1 in sweep(0.0, 3.0, 0.1) {
            let open = ChainSpec::new(t1, 1.0, Boundary::Open, 200).balanced(g1, 0.0);
            let report = gap_closed_form(&open);
            worst_obc = worst_obc.max((report.delta_obc - report.delta_numeric).abs());
            if (t1 * 10.0).round() as i64 % 5 == 0 && !near_ep(&open, 1e-6) {
                let dense = 2.0 * dense_rapidities(&open).values.iter().map(|b| b.re).fold(f64::INFINITY, f64::min);
                worst_dense = worst_dense.max((report.delta_obc - dense).abs());
            }
            let periodic = open.with_boundary(Boundary::Periodic);
            let report = gap_closed_form(&periodic);
            let formula = report.delta_pbc.expect("periodic gap with γ₂ = 0");
            worst_pbc = worst_pbc.max((formula - report.delta_numeric).abs());
        }
        // Both branches evaluated at t_c.
        let tc = gap_closed_form(&ChainSpec::new(0.0, 1.0, Boundary::Periodic, 4).balanced(g1, 0.0)).tc;
        let inner = 2.0 * g1 - 2.0 * (g1 * g1 - (tc - 1.0).powi(2)).sqrt();
        let outer = 2.0 * g1 - 2.0 * g1 / (tc * tc - g1 * g1).sqrt();
        worst_tc = worst_tc.max((inner - outer).abs());
    }
    let pass = worst_obc < 2e-3 && worst_dense < 2e-3 && worst_pbc < 2e-3 && worst_tc < 1e-9;
    outcome(
        pass,
        format!(
            "open {worst_obc:.2e} (dense {worst_dense:.2e}), periodic {worst_pbc:.2e}, branch mismatch at t_c {worst_tc:.2e}"
        ),
    )
}

fn fig7(g1: f64, g2: f64, t1: f64, boundary: Boundary, cells: usize) -> ChainSpec {
    ChainSpec::new(t1, 1.0, boundary, cells).balanced(g1, g2)
}

fn ac4() -> Outcome {
    let mut currents = Vec::new();
    for (g1, g2) in [(1.5, 0.5), (0.02, 0.01)] {
        let spec = fig7(g1, g2, 1.0, Boundary::Periodic, 12);
        let t = 1e4 / (g1 + g2);
        let tr = trajectory(&spec, &InitialState::FullyFilled, &[t], Propagation::ExactModes).unwrap();
        currents.push(tr.current[0]);
    }
    let err = (currents[0] - 1.0 / 24.0).abs();
    let spread = (currents[0] - currents[1]).abs();
    outcome(err < 1e-4 && spread < 1e-9, format!("j = {:.10} and {:.10}, |j − 1/24| = {err:.2e}, spread {spread:.2e}", currents[0], currents[1]))
}

fn ac5() -> Outcome {
    let n = 32.0;
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for t1 in [-0.5, 0.0, 0.5] {
        let spec = ChainSpec::new(t1, 1.0, Boundary::Periodic, 32).balanced(1.5, 0.0);
        let a = asymptotic_current(&spec, &InitialState::FullyFilled, 1e5 / 1.5).unwrap();
        let expected = (t1 + 1.0) / (2.0 * n);
        let j = a.background + a.amplitude;
        worst = worst.max((j - expected).abs());
        parts.push(format!("t1={t1}: {j:.5} vs {expected:.5}"));
    }
    outcome(worst < 5.0 / (n * n), format!("{}; max error {worst:.2e} (bound {:.2e})", parts.join(", "), 5.0 / (n * n)))
}

fn ac6() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for t1 in [1.0, -0.8] {
        for b in [Boundary::Periodic, Boundary::Open] {
            let spec = fig7(1.5, 0.5, t1, b, 8);
            let times: Vec<f64> = (0..=40).map(|k| k as f64 * 0.5 / 2.0).collect();
            let dev0 = initial_covariance(&spec, &InitialState::FullyFilled).unwrap();
            let ss = steady_covariance(&spec).unwrap();
            let modes = evolve_modesum(&mode_set(&spec).unwrap(), &dev0, &times).unwrap();
            let abs0 = Covariance { c: &dev0.c + &ss.c, time: Some(0.0) };
            let ode = evolve_ode(&spec, &abs0, &times).unwrap();
            for (m, o) in modes.iter().zip(&ode) {
                let diff = &(&m.c + &ss.c) - &o.c;
                worst = worst.max(diff.iter().map(|z| z.norm()).fold(0.0, f64::max));
            }
        }
    }
    let (fast, time) = within_budget(start, Duration::from_secs(30));
    outcome(worst < 1e-6 && fast, format!("max |ΔC| {worst:.2e} over γt ∈ [0, 20], {time}"))
}

fn ac7() -> Outcome {
    let mut worst: f64 = 0.0;
    for (g1, g2) in [(0.2, 0.8), (0.1, 0.05)] {
        for b in [Boundary::Open, Boundary::Periodic] {
            let spec = ChainSpec::new(1.0, 1.0, b, 6).loss_only(g1, g2);
            let g = g1 + g2;
            let times: Vec<f64> = (0..=20).map(|k| k as f64 * 0.5 / g).collect();
            for init in [InitialState::FullyFilled, InitialState::SingleParticle(6)] {
                let eff = effective_dynamics(&spec, &init, &times).unwrap();
                let ss = steady_covariance(&spec).unwrap();
                let devs = evolve_modesum(&mode_set(&spec).unwrap(), &initial_covariance(&spec, &init).unwrap(), &times).unwrap();
                for (qe, dev) in eff.correlators.iter().zip(&devs) {
                    let q = correlator(&Covariance { c: &dev.c + &ss.c, time: dev.time });
                    worst = worst.max((qe - &q).iter().map(|z| z.norm()).fold(0.0, f64::max));
                }
            }
        }
    }
    outcome(worst < 1e-9, format!("max |Q_eff − Q| {worst:.2e}"))
}

fn ac8() -> Outcome {
    let strong = skin_parameter(&ChainSpec::new(1.0, 1.0, Boundary::Open, 14).loss_only(0.2, 0.8)).unwrap().r2.abs();
    let weak = skin_parameter(&ChainSpec::new(1.0, 1.0, Boundary::Open, 14).loss_only(0.1, 0.05)).unwrap().r2.abs();
    let pass = (strong * 1e4).round() / 1e4 == 0.0741
        && (weak * 1e4).round() / 1e4 == 0.7403
        && (strong * 1e3).round() / 1e3 == 0.074
        && (weak * 1e2).round() / 1e2 == 0.74;
    outcome(pass, format!("|r²| = {strong:.4} and {weak:.4}"))
}

fn ac9() -> Outcome {
    let start = Instant::now();
    let cells: Vec<usize> = (8..=16).collect();
    let mut pass = true;
    let mut parts = Vec::new();
    for g1 in [0.4, 0.6, 0.8] {
        let spec = ChainSpec::new(1.0, 1.0, Boundary::Open, 8).balanced(g1, 0.0);
        let fit = lifetime_scan(&spec, &cells, &InitialState::FullyFilled, 3.0).unwrap();
        let xi = skin_parameter(&spec).unwrap().xi;
        let rel = (fit.xi_fit - xi).abs() / xi;
        pass &= fit.r_squared > 0.99 && rel < 0.1;
        parts.push(format!("γ1={g1}: R²={:.4}, ξ_fit={:.3} vs ξ={xi:.3} ({:.1}%)", fit.r_squared, fit.xi_fit, 100.0 * rel));
    }
    let (fast, time) = within_budget(start, Duration::from_secs(300));
    outcome(pass && fast, format!("{}; {time}", parts.join(", ")))
}

fn ac10() -> Outcome {
    let spec = ChainSpec::new(1.0, 1.0, Boundary::Open, 8).balanced(2.5, 0.2);
    let cells: Vec<usize> = (8..=16).collect();
    let fit = lifetime_scan(&spec, &cells, &InitialState::FullyFilled, 5.0).unwrap();
    let delta = gap_closed_form(&spec).delta_obc;
    outcome(
        fit.delta_eff >= delta - 1e-6,
        format!("Δ_eff = {:.4} (R² {:.4}), Δ_OBC = {delta:.4}", fit.delta_eff, fit.r_squared),
    )
}

fn ac11() -> Outcome {
    let spec = ChainSpec::new(1.0, 1.0, Boundary::Open, 14).loss_only(0.2, 0.8);
    let g = 1.0;
    let times: Vec<f64> = (1..=60).map(|k| k as f64 * 0.05 / g).collect();
    let d = boundary_sensitivity(&spec, &times).unwrap();
    let early = d.times.iter().zip(&d.max_difference).filter(|(t, _)| **t * g < 2.0).map(|(_, x)| *x).fold(0.0, f64::max);
    let diverges = d.divergence_time.is_some_and(|t| t * g >= 2.0);
    let init = InitialState::SingleParticle(14);
    let late = [1e4 / g];
    let open = trajectory(&spec, &init, &late, Propagation::ExactModes).unwrap().current[0];
    let periodic_spec = spec.with_boundary(Boundary::Periodic);
    let periodic = trajectory(&periodic_spec, &init, &late, Propagation::ExactModes).unwrap().current[0];
    // Total bond current: the per-site mean times the number of sites.
    let total = periodic * periodic_spec.sites() as f64;
    let pass = early < 1e-8 && diverges && open.abs() < 1e-6 && (total - 1.0 / 14.0).abs() < 1e-4;
    outcome(
        pass,
        format!(
            "max early difference {early:.2e}, divergence at γt = {:?}, open current {open:.2e}, periodic total current {total:.6} vs 1/N = {:.6}",
            d.divergence_time.map(|t| t * g),
            1.0 / 14.0
        ),
    )
}

fn random_spec() -> impl Strategy<Value = ChainSpec> {
    (-1.5..1.5f64, -1.5..1.5f64, 0.0..1.5f64, 0.0..1.5f64, 0.0..1.5f64, 0.0..1.5f64, 2usize..6, any::<bool>()).prop_map(
        |(t1, t2, l1, a1, l2, a2, cells, pbc)| {
            let b = if pbc { Boundary::Periodic } else { Boundary::Open };
            ChainSpec::new(t1, t2, b, cells).bond1(l1, a1).bond2(l2, a2)
        },
    )
}

fn ac12() -> Outcome {
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut run = |name: &str, cases: u32, test: &dyn Fn(ChainSpec) -> std::result::Result<(), TestCaseError>| {
        let mut runner = TestRunner::new(Config { cases, failure_persistence: None, ..Config::default() });
        if let Err(e) = runner.run(&random_spec(), test) {
            failures.push(format!("{name}: {e}"));
        }
    };
    run("covariance drift and occupation bounds", 64, &|spec| {
        let g = derive_rates(&spec).g;
        prop_assume!(g > 0.05);
        let c0 = covariance_from_occupations(&vec![1.0; spec.sites()]);
        let out = evolve_ode(&spec, &c0, &[1.0 / g, 10.0 / g]).unwrap();
        for cov in &out {
            prop_assert!(cov.antisymmetry_drift() < 1e-9 && cov.real_part_drift() < 1e-9);
            prop_assert!(occupation(cov).iter().all(|&x| (-1e-8..=1.0 + 1e-8).contains(&x)));
        }
        Ok(())
    });
    run("biorthogonality", 64, &|spec| {
        prop_assume!(!near_ep(&spec, 0.05));
        let m = mode_set(&spec);
        prop_assume!(m.is_ok());
        let m = m.unwrap();
        prop_assert!(m.bio_residual < 1e-9, "{}", m.bio_residual);
        Ok(())
    });
    run("winding refinement", 64, &|spec| {
        let a = winding_number(&spec, 500);
        let b = winding_number(&spec, 2000);
        prop_assume!(a.is_ok() && b.is_ok());
        prop_assert_eq!(a.unwrap(), b.unwrap());
        Ok(())
    });
    run("Sylvester residual", 100, &|spec| {
        let d = build_damping(&spec);
        let x = d.x_full().mapv(|v| Complex64::new(v, 0.0));
        let y = d.y_full().mapv(|v| Complex64::new(v, 0.0));
        let rates = dense_rapidities(&spec).values;
        prop_assume!(rates.iter().all(|b| b.re > 0.05));
        let c = solve_sylvester(&x, &y).unwrap();
        let xh = x.t().mapv(|z| z.conj());
        let res = &(&xh.dot(&c.c) + &c.c.dot(&x)) - &y.mapv(|z| z * Complex64::i());
        let r = res.iter().map(|z| z.norm()).fold(0.0, f64::max);
        prop_assert!(r < 1e-10, "residual {r}");
        Ok(())
    });
    let (fast, time) = within_budget(start, Duration::from_secs(600));
    let detail = if failures.is_empty() { format!("all properties hold, {time}") } else { failures.join("; ") };
    outcome(failures.is_empty() && fast, detail)
}

type Criterion = (u32, &'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 12] = [
        (1, "spectral identity", ac1),
        (2, "closed-form spectra", ac2),
        (3, "gap formulas", ac3),
        (4, "steady current", ac4),
        (5, "quasi-steady current", ac5),
        (6, "dynamics equivalence", ac6),
        (7, "loss-only identity", ac7),
        (8, "skin parameters", ac8),
        (9, "lifetime scaling", ac9),
        (10, "effective-gap bound", ac10),
        (11, "boundary sensitivity", ac11),
        (12, "property suites", ac12),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut unexpected = 0;
    for (id, name, run) in criteria {
        let label = format!("AC{id}");
        if !filter.is_empty() && !filter.iter().any(|f| f == &label) {
            continue;
        }
        let o = run();
        let known = KNOWN_FAILURES.contains(&id);
        let status = if o.pass { "PASS" } else { "FAIL" };
        let note = if !o.pass && known { " (known)" } else { "" };
        println!("{label} {status}{note} {name}: {}", o.detail);
        if !o.pass && !known {
            unexpected += 1;
        }
    }
    if unexpected > 0 {
        std::process::exit(1);
    }
}
