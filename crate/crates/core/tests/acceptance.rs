//! Acceptance gate: every shipped guarantee exercised at its stated
//! tolerance. Each test covers one criterion and prints one verdict line.

mod common;

use common::{
    grid_drifting_ball_opt, grid_drifting_simplex_opt, grid_fixed_ball2_opt, grid_onela_ball_opt,
    grid_onela_simplex_opt,
};
use driftbench_core::{
    build_drift_expert, build_oco_pball, build_onela_2ball, build_onela_mts, check_duals,
    check_feasibility_with_tol, emit_bundle, gen_comparator_path, gen_costs, norm,
    offline_drifting_opt, offline_fixed_opt, offline_onela_opt, parse_bundle,
    projection_lemma_gap, run, run_scenario, service_decomposition, shift_for_cap, Body, Bundle,
    ComparatorKind, ComparatorSpec, CostModel, CostModelKind, Lookahead, NormSpec, Regularizer,
    RunConfig, Scenario, Setting, Trace, Vector,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn v(values: Vec<f64>) -> Vector {
    Vector::new(values).unwrap()
}

/// Prints the criterion's verdict line, then fails the test on any recorded
/// violation (listing the first few).
fn verdict(idx: usize, label: &str, failures: Vec<String>) {
    let ok = failures.is_empty();
    println!(
        "criterion {idx:02} {} {label}",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(
        ok,
        "criterion {idx:02} ({label}): {} violations, e.g. {:?}",
        failures.len(),
        &failures[..failures.len().min(3)]
    );
}

/// The four regularizer/body pairings with their in-domain samplers.
fn pairings() -> Vec<(Regularizer, Body, bool)> {
    let n = 4;
    let k = v(vec![0.5, -0.25, 1.0, 0.0]);
    vec![
        (
            Regularizer::centered_squared_l2(k.clone()),
            Body::p_ball(NormSpec::Finite(2.0), k, 1.0).unwrap(),
            false,
        ),
        (
            Regularizer::neg_entropy(n).unwrap(),
            Body::simplex(n).unwrap(),
            true,
        ),
        (
            Regularizer::shifted_neg_entropy(0.25, n).unwrap(),
            Body::simplex(n).unwrap(),
            true,
        ),
        (
            Regularizer::p_norm_squared(1.5).unwrap(),
            Body::p_ball(NormSpec::Finite(1.5), Vector::zeros(4).unwrap(), 1.0).unwrap(),
            false,
        ),
    ]
}

fn sample_point(rng: &mut ChaCha8Rng, dim: usize, positive: bool) -> Vector {
    let values: Vec<f64> = (0..dim)
        .map(|_| {
            if positive {
                rng.gen_range(1e-3..5.0)
            } else {
                rng.gen_range(-5.0..5.0)
            }
        })
        .collect();
    v(values)
}

#[test]
fn criterion_01_projection_lemma() {
    let mut failures = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for (reg, body, positive) in pairings() {
        for trial in 0..10_000 {
            let y1 = sample_point(&mut rng, 4, positive);
            let y2 = sample_point(&mut rng, 4, positive);
            let gap = projection_lemma_gap(&reg, &body, &y1, &y2).unwrap();
            if gap < -1e-9 {
                failures.push(format!(
                    "{:?} trial {trial}: gap {gap:.3e}",
                    reg.kind()
                ));
            }
        }
    }
    verdict(
        1,
        "projection lemma: sigma-contraction over 4 pairings x 10^4 pairs",
        failures,
    );
}

// The entropy regularizers promise their convexity constant on probability
// vectors, so identity trials normalize positive samples onto the simplex.
fn sample_domain_point(rng: &mut ChaCha8Rng, dim: usize, positive: bool) -> Vector {
    let raw = sample_point(rng, dim, positive);
    if positive {
        let total: f64 = raw.iter().sum();
        raw.scale(1.0 / total).unwrap()
    } else {
        raw
    }
}

#[test]
fn criterion_02_identity_suite() {
    let mut failures = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    for (reg, _, positive) in pairings() {
        for trial in 0..10_000 {
            let a = sample_domain_point(&mut rng, 4, positive);
            let b = sample_domain_point(&mut rng, 4, positive);
            let c = sample_domain_point(&mut rng, 4, positive);
            let r = reg.three_point_residual(&a, &b, &c).unwrap();
            if r.abs() > 1e-9 {
                failures.push(format!("{:?} three-point residual {r:.3e}", reg.kind()));
            }
            let breg = reg.bregman(&a, &b).unwrap();
            if breg < -1e-12 {
                failures.push(format!("{:?} negative divergence {breg:.3e}", reg.kind()));
            }
            let gap = reg.strong_convexity_gap(&a, &b).unwrap();
            if gap < -1e-9 {
                failures.push(format!("{:?} convexity gap {gap:.3e}", reg.kind()));
            }
            if failures.len() > 5 {
                break;
            }
            let _ = trial;
        }
    }
    for _ in 0..10_000 {
        let a: f64 = rng.gen_range(1e-6..1e3);
        let b: f64 = rng.gen_range(1e-6..1e3);
        if (a - b) > a * (a.ln() - b.ln()) + 1e-12 {
            failures.push(format!("scalar log inequality failed at a={a}, b={b}"));
        }
    }
    verdict(
        2,
        "identity suite: three-point equality, divergence sign, convexity gap, scalar log bound",
        failures,
    );
}

/// Uniform random costs from the library generator.
fn random_costs(seed: u64, t_len: usize, n: usize, lo: f64, hi: f64) -> Vec<Vector> {
    gen_costs(
        &CostModel {
            kind: CostModelKind::UniformRandom { lo, hi },
            nonneg: lo >= 0.0,
            seed,
        },
        t_len,
        n,
    )
    .unwrap()
}

fn oco_ball_scenario(costs: Vec<Vector>, eta: f64, p: f64, n: usize) -> Scenario {
    let (reg, body) = if p == 2.0 {
        (
            Regularizer::centered_squared_l2(Vector::zeros(n).unwrap()),
            Body::p_ball(NormSpec::Finite(2.0), Vector::zeros(n).unwrap(), 1.0).unwrap(),
        )
    } else {
        (
            Regularizer::p_norm_squared(p).unwrap(),
            Body::p_ball(NormSpec::Finite(p), Vector::zeros(n).unwrap(), 1.0).unwrap(),
        )
    };
    Scenario {
        body,
        regularizer: reg,
        eta,
        lookahead: Lookahead::Zero,
        x0: Vector::zeros(n).unwrap(),
        costs,
    }
}

fn expert_scenario(costs: Vec<Vector>, eta: f64, alpha: f64, n: usize, one_la: bool) -> Scenario {
    Scenario {
        body: Body::simplex(n).unwrap(),
        regularizer: Regularizer::shifted_neg_entropy(shift_for_cap(eta, alpha), n).unwrap(),
        eta,
        lookahead: if one_la { Lookahead::One } else { Lookahead::Zero },
        x0: Vector::constant(n, 1.0 / n as f64).unwrap(),
        costs,
    }
}

fn onela_ball_scenario(costs: Vec<Vector>, eta: f64, n: usize) -> Scenario {
    let k = Vector::constant(n, 2.0).unwrap();
    Scenario {
        body: Body::p_ball(NormSpec::Finite(2.0), k.clone(), 1.0).unwrap(),
        regularizer: Regularizer::centered_squared_l2(k.clone()),
        eta,
        lookahead: Lookahead::One,
        x0: k,
        costs,
    }
}

/// One random instance per program family; returns the trace, the costs, and
/// the built certificate.
fn random_family_instance(
    family: usize,
    rng: &mut ChaCha8Rng,
    seed: u64,
    t_len: usize,
) -> (Scenario, Trace, driftbench_core::DualCertificate) {
    match family {
        0 => {
            let n = rng.gen_range(2..=4);
            let p = [1.3, 1.5, 1.8, 2.0, 2.0][rng.gen_range(0..5)];
            let eta = rng.gen_range(0.05..1.5);
            let costs = random_costs(seed, t_len, n, -1.0, 1.0);
            let s = oco_ball_scenario(costs, eta, p, n);
            let trace = run(&s).unwrap();
            let cert = build_oco_pball(&trace, eta).unwrap();
            (s, trace, cert)
        }
        1 => {
            let n = rng.gen_range(2..=8);
            let eta = rng.gen_range(0.05..0.5);
            let alpha = (n as f64).ln() / eta;
            let drift = rng.gen_range(0.0..3.0);
            let costs = random_costs(seed, t_len, n, 0.0, 1.0);
            let s = expert_scenario(costs, eta, alpha, n, false);
            let trace = run(&s).unwrap();
            let cert = build_drift_expert(&trace, eta, alpha, drift).unwrap();
            (s, trace, cert)
        }
        2 => {
            let n = rng.gen_range(2..=3);
            let eta = rng.gen_range(1.0..2.0);
            let costs = random_costs(seed, t_len, n, 0.0, 1.0);
            let s = onela_ball_scenario(costs, eta, n);
            let trace = run(&s).unwrap();
            let cert = build_onela_2ball(&trace, eta).unwrap();
            (s, trace, cert)
        }
        _ => {
            let n = rng.gen_range(2..=6);
            let eta = rng.gen_range(0.05..0.5);
            let alpha = (n as f64).ln() / eta;
            let costs = random_costs(seed, t_len, n, 0.0, 1.0);
            let s = expert_scenario(costs, eta, alpha, n, true);
            let trace = run(&s).unwrap();
            let cert = build_onela_mts(&trace, eta, alpha).unwrap();
            (s, trace, cert)
        }
    }
}

#[test]
fn criterion_03_dual_feasibility() {
    let mut failures = Vec::new();
    let family_names = ["oco-pball", "drift-expert", "onela-2ball", "onela-mts"];
    for family in 0..4 {
        let mut rng = ChaCha8Rng::seed_from_u64(303 + family as u64);
        for i in 0..1000u64 {
            let t_len = rng.gen_range(1..=25);
            let (s, _trace, cert) =
                random_family_instance(family, &mut rng, 9000 + i, t_len);
            let report = check_feasibility_with_tol(&cert, &s.costs, &s.body, 1e-8).unwrap();
            if !report.is_feasible() {
                failures.push(format!(
                    "{} instance {i}: {} violations, worst {:?}",
                    family_names[family],
                    report.violations.len(),
                    report.violations.first()
                ));
            }
            // Inject a single fault into every 20th certificate: nudging one
            // multiplier toward infeasibility must be flagged.
            if i % 20 == 0 && !cert.a.is_empty() {
                let mut bad = cert.clone();
                let t = rng.gen_range(0..bad.a.len());
                // Simplex MTS rows bound a from above; the others from below.
                if family == 3 {
                    bad.a[t] += 1e-3;
                } else {
                    bad.a[t] -= 1e-3;
                }
                let flagged = check_feasibility_with_tol(&bad, &s.costs, &s.body, 1e-8)
                    .unwrap();
                if flagged.is_feasible() {
                    failures.push(format!(
                        "{} instance {i}: fault in a[{t}] went undetected",
                        family_names[family]
                    ));
                }
            }
            if failures.len() > 8 {
                break;
            }
        }
    }
    // End-to-end: a corrupted trace point must fail verification.
    for seed in 0..5u64 {
        let mut cfg = RunConfig::new(Setting::OcoPball, 2, 30);
        cfg.seed = seed;
        let artifacts = run_scenario(&cfg).unwrap();
        let mut bundle = Bundle::new(
            Some(artifacts.config.clone()),
            artifacts.trace.clone(),
            Some(artifacts.certificate.clone()),
        );
        let mid = bundle.trace.steps.len() / 2;
        let mut coords = bundle.trace.steps[mid].x.clone().into_inner();
        coords[0] += 1e-3;
        bundle.trace.steps[mid].x = v(coords);
        let report = check_duals(&bundle, None).unwrap();
        if report.passes() {
            failures.push(format!("seed {seed}: corrupted trace passed verification"));
        }
    }
    verdict(
        3,
        "dual feasibility: 10^3 scenarios per family at 1e-8, injected faults detected",
        failures,
    );
}

#[test]
fn criterion_04_weak_duality() {
    let mut failures = Vec::new();
    let family_names = ["oco-pball", "drift-expert", "onela-2ball", "onela-mts"];
    for family in 0..4 {
        let mut rng = ChaCha8Rng::seed_from_u64(404 + family as u64);
        for i in 0..200u64 {
            let t_len = rng.gen_range(1..=9);
            let (s, _trace, cert) =
                random_family_instance(family, &mut rng, 40000 + i, t_len);
            let opt = match family {
                0 => offline_fixed_opt(&s.costs, &s.body).unwrap().1,
                1 => {
                    let budget = cert.drift_budget.unwrap();
                    offline_drifting_opt(&s.costs, &s.body, budget).unwrap().value
                }
                2 => {
                    offline_onela_opt(&s.costs, &s.body, &NormSpec::Finite(2.0), 1.0, None)
                        .unwrap()
                        .value
                }
                _ => {
                    let alpha = cert.alpha.unwrap();
                    offline_onela_opt(&s.costs, &s.body, &NormSpec::Finite(1.0), alpha, None)
                        .unwrap()
                        .value
                }
            };
            let slack = opt - cert.objective;
            if slack < -1e-6 * opt.abs().max(1.0) {
                failures.push(format!(
                    "{} instance {i}: dual {:.12} above optimum {:.12}",
                    family_names[family], cert.objective, opt
                ));
            }
            if failures.len() > 8 {
                break;
            }
        }
    }
    verdict(
        4,
        "weak duality: certificate objective below oracle optimum, 200 instances per family",
        failures,
    );
}

#[test]
fn criterion_05_competitive_ratio_reproduction() {
    let mut failures = Vec::new();
    for t_len in [100usize, 1000] {
        let mut cfg = RunConfig::new(Setting::Onela2Ball, 2, t_len);
        cfg.center = Some(vec![2.0, 2.0]);
        cfg.radius = Some(1.0);
        cfg.epsilon = Some(1.0);
        cfg.eta = Some(1.0);
        cfg.cost_model = Some(CostModelKind::UniformRandom { lo: 0.0, hi: 1.0 });
        cfg.seed = 505;
        let artifacts = run_scenario(&cfg).unwrap();
        let opt = artifacts.oracle.as_ref().unwrap().value;
        let tol = 1e-6 * opt.abs();
        let service = artifacts.trace.total_service;
        let movement = artifacts.trace.total_movement;
        let (d, eta, eps) = (1.0, 1.0, 1.0);
        if service > opt + d / eta + tol {
            failures.push(format!(
                "T={t_len}: service {service:.6} above optimum {opt:.6} + {:.2}",
                d / eta
            ));
        }
        if movement > (eta / eps) * opt + tol {
            failures.push(format!(
                "T={t_len}: movement {movement:.6} above {:.2} x optimum {opt:.6}",
                eta / eps
            ));
        }
        if service + movement > (1.0 + d / eps) * opt + d + tol {
            failures.push(format!("T={t_len}: combined bound broken"));
        }
        for name in ["service_bound", "movement_bound", "combined_competitive"] {
            let rec = artifacts
                .report
                .checks
                .iter()
                .find(|c| c.name == name)
                .unwrap();
            if !rec.pass || rec.skipped {
                failures.push(format!("T={t_len}: report check {name} did not pass"));
            }
        }
    }
    verdict(
        5,
        "competitive ratio at eta = D: service, movement, and combined bounds at T in {100, 1000}",
        failures,
    );
}

#[test]
fn criterion_06_drifting_regret_reproduction() {
    let mut failures = Vec::new();
    for n in [5usize, 20] {
        for drift in [0.0f64, 3.0, 10.0] {
            for eta in [0.01f64, 0.1] {
                let mut cfg = RunConfig::new(Setting::DriftExpert, n, 2000);
                cfg.eta = Some(eta);
                cfg.alpha = Some((n as f64).ln() / eta);
                cfg.drift = Some(drift);
                cfg.comparator = Some(ComparatorSpec::Switching {
                    switches: drift as usize,
                });
                cfg.cost_model = Some(CostModelKind::UniformRandom { lo: 0.0, hi: 1.0 });
                cfg.seed = 606;
                let artifacts = run_scenario(&cfg).unwrap();
                for name in ["service_bound_drifting_experts", "regret_drifting_experts"] {
                    let rec = artifacts
                        .report
                        .checks
                        .iter()
                        .find(|c| c.name == name)
                        .unwrap();
                    if !rec.pass || rec.skipped {
                        failures.push(format!(
                            "n={n} L={drift} eta={eta}: {name} slack {:.3e}",
                            rec.slack
                        ));
                    }
                }
            }
        }
    }
    verdict(
        6,
        "drifting regret: switching comparators over n x L x eta grid at T = 2000",
        failures,
    );
}

#[test]
fn criterion_07_decomposition_residuals() {
    let mut failures = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    for i in 0..200u64 {
        let eta = rng.gen_range(0.05..1.0);
        let costs = random_costs(70000 + i, 50, 2, -1.0, 1.0);
        let s = oco_ball_scenario(costs.clone(), eta, 2.0, 2);
        let trace = run(&s).unwrap();
        let cert = build_oco_pball(&trace, eta).unwrap();
        let comparator = gen_comparator_path(
            &ComparatorKind::Geodesic,
            &s.body,
            trace.len(),
            0.8,
            70000 + i,
        )
        .unwrap();
        let d = service_decomposition(&trace, &comparator.points).unwrap();
        let scale = d.eta_scaled_service.abs().max(1.0);
        if d.identity_residual.abs() > 1e-7 * scale {
            failures.push(format!(
                "instance {i}: decomposition residual {:.3e}",
                d.identity_residual
            ));
        }
        let q = NormSpec::Finite(2.0);
        let rhs: f64 = costs
            .iter()
            .map(|c| {
                let nc = norm(c.as_slice(), &q);
                eta * eta * nc * nc
            })
            .sum::<f64>()
            - eta * 1.0 * cert.a.iter().take(trace.len()).sum::<f64>();
        let lhs = d.step_divergences + d.projection_terms;
        if lhs > rhs + 1e-7 * rhs.abs().max(1.0) {
            failures.push(format!(
                "instance {i}: step terms {lhs:.6e} above bound {rhs:.6e}"
            ));
        }
    }
    verdict(
        7,
        "service decomposition: identity residual and step-term bound on 200 ball runs",
        failures,
    );
}

#[test]
fn criterion_08_per_step_chains() {
    let mut failures = Vec::new();
    let two = NormSpec::Finite(2.0);
    let one = NormSpec::Finite(1.0);
    // Lookahead ball runs at eta = D: multiplier, movement, and gain chains.
    for seed in 0..20u64 {
        let costs = random_costs(80000 + seed, 60, 2, 0.0, 1.0);
        let s = onela_ball_scenario(costs.clone(), 1.0, 2);
        let trace = run(&s).unwrap();
        let cert = build_onela_2ball(&trace, 1.0).unwrap();
        let k = Vector::constant(2, 2.0).unwrap();
        let (d, eps, eta) = (1.0, 1.0, 1.0);
        for (t, step) in trace.steps.iter().enumerate() {
            let c2 = norm(step.cost.as_slice(), &two);
            let a_t = cert.a[t + 1];
            if a_t > c2 + 1e-9 {
                failures.push(format!("seed {seed} t={t}: multiplier {a_t} above {c2}"));
            }
            if step.movement > eta * c2 + 1e-9 {
                failures.push(format!("seed {seed} t={t}: movement {}", step.movement));
            }
            let gain = step.cost.dot(&k).unwrap() - d * a_t;
            if gain < eps * norm(step.cost.as_slice(), &one) - 1e-9 {
                failures.push(format!("seed {seed} t={t}: dual gain {gain} too small"));
            }
        }
    }
    // MTS runs: halved movement against the shifted-capacity multiplier.
    for seed in 0..20u64 {
        let n = 4;
        let eta = 0.1;
        let alpha = (n as f64).ln() / eta;
        let theta = shift_for_cap(eta, alpha);
        let costs = random_costs(81000 + seed, 60, n, 0.0, 1.0);
        let s = expert_scenario(costs, eta, alpha, n, true);
        let trace = run(&s).unwrap();
        let cert = build_onela_mts(&trace, eta, alpha).unwrap();
        for (t, step) in trace.steps.iter().enumerate() {
            let cap = eta * (1.0 + n as f64 * theta) * cert.a[t + 1];
            if step.movement / 2.0 > cap + 1e-9 {
                failures.push(format!(
                    "seed {seed} t={t}: halved movement {:.3e} above {cap:.3e}",
                    step.movement / 2.0
                ));
            }
        }
    }
    verdict(
        8,
        "per-step chains: multiplier, movement, dual-gain, and MTS movement caps at 1e-9",
        failures,
    );
}

#[test]
fn criterion_09_oracle_equivalence() {
    let mut failures = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(909);

    // Simplex fixed point: exact agreement with expert enumeration.
    for i in 0..200u64 {
        let n = rng.gen_range(2..=6);
        let t_len = rng.gen_range(1..=10);
        let costs = random_costs(90000 + i, t_len, n, -1.0, 1.0);
        let (_, value) = offline_fixed_opt(&costs, &Body::simplex(n).unwrap()).unwrap();
        let enumerated = (0..n)
            .map(|j| costs.iter().map(|c| c.as_slice()[j]).sum::<f64>())
            .fold(f64::INFINITY, f64::min);
        if value != enumerated {
            failures.push(format!("simplex instance {i}: {value} != {enumerated}"));
        }
    }

    // Planar ball fixed point: closed form to 1e-12, angle sweep to 1e-4.
    for i in 0..100u64 {
        let t_len = rng.gen_range(1..=10);
        let costs = random_costs(91000 + i, t_len, 2, -1.0, 1.0);
        let k = v(vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]);
        let radius = rng.gen_range(0.5..2.0);
        let body = Body::p_ball(NormSpec::Finite(2.0), k.clone(), radius).unwrap();
        let (_, value) = offline_fixed_opt(&costs, &body).unwrap();
        let mut total = [0.0f64; 2];
        for c in &costs {
            total[0] += c.as_slice()[0];
            total[1] += c.as_slice()[1];
        }
        let closed = total[0] * k.as_slice()[0] + total[1] * k.as_slice()[1]
            - radius * (total[0] * total[0] + total[1] * total[1]).sqrt();
        if (value - closed).abs() > 1e-12 {
            failures.push(format!(
                "ball instance {i}: {value} vs closed form {closed}"
            ));
        }
        let swept = grid_fixed_ball2_opt(&costs, &k, radius, 20001);
        if (value - swept).abs() > 1e-4 {
            failures.push(format!("ball instance {i}: {value} vs sweep {swept}"));
        }
    }

    // Drifting solvers against the exact lattice DP (simplex) and the
    // budget-quantized DP (ball).
    for (i, (n, g)) in [(2usize, 120usize), (3, 40)].iter().enumerate() {
        for (j, l_budget) in [0.3f64, 0.8, 1.5].iter().enumerate() {
            let costs = random_costs(92000 + 10 * i as u64 + j as u64, 6, *n, -1.0, 1.0);
            let body = Body::simplex(*n).unwrap();
            let solver = offline_drifting_opt(&costs, &body, *l_budget).unwrap().value;
            let dp = grid_drifting_simplex_opt(&costs, *n, *g, *l_budget);
            if (solver - dp).abs() > 5e-2 {
                failures.push(format!(
                    "drifting simplex n={n} L={l_budget}: solver {solver:.6} vs dp {dp:.6}"
                ));
            }
        }
    }
    for (j, l_budget) in [0.4f64, 1.0].iter().enumerate() {
        let costs = random_costs(93000 + j as u64, 5, 2, -0.6, 0.6);
        let k = vec![0.0, 0.0];
        let body = Body::p_ball(NormSpec::Finite(2.0), v(k.clone()), 1.0).unwrap();
        let solver = offline_drifting_opt(&costs, &body, *l_budget).unwrap().value;
        let dp = grid_drifting_ball_opt(&costs, &k, 1.0, 28, *l_budget, 48);
        if (solver - dp).abs() > 5e-2 {
            failures.push(format!(
                "drifting ball L={l_budget}: solver {solver:.6} vs dp {dp:.6}"
            ));
        }
    }

    // Lookahead solvers against the movement-charging DPs.
    for (i, (n, g)) in [(2usize, 40usize), (3, 14)].iter().enumerate() {
        let costs = random_costs(94000 + i as u64, 5, *n, 0.0, 0.6);
        let k = vec![2.0; *n];
        let body = Body::p_ball(NormSpec::Finite(2.0), v(k.clone()), 1.0).unwrap();
        let solver = offline_onela_opt(&costs, &body, &NormSpec::Finite(2.0), 1.0, None)
            .unwrap()
            .value;
        let dp = grid_onela_ball_opt(&costs, &k, 1.0, *g, 1.0);
        if (solver - dp).abs() > 5e-2 {
            failures.push(format!(
                "lookahead ball n={n}: solver {solver:.6} vs dp {dp:.6}"
            ));
        }
    }
    for (i, (n, g)) in [(2usize, 60usize), (3, 24)].iter().enumerate() {
        let alpha = (*n as f64).ln() / 0.3;
        let costs = random_costs(95000 + i as u64, 6, *n, 0.0, 1.0);
        let body = Body::simplex(*n).unwrap();
        let solver = offline_onela_opt(&costs, &body, &NormSpec::Finite(1.0), alpha, None)
            .unwrap()
            .value;
        let dp = grid_onela_simplex_opt(&costs, *n, *g, alpha);
        if (solver - dp).abs() > 5e-2 {
            failures.push(format!(
                "lookahead simplex n={n}: solver {solver:.6} vs dp {dp:.6}"
            ));
        }
    }

    verdict(
        9,
        "oracle equivalence: enumeration, closed forms, and lattice DPs agree",
        failures,
    );
}

#[test]
fn criterion_10_determinism_and_round_trip() {
    let mut failures = Vec::new();
    for setting in [
        Setting::OcoPball,
        Setting::DriftExpert,
        Setting::Onela2Ball,
        Setting::OnelaMts,
    ] {
        let n = if setting == Setting::Onela2Ball { 2 } else { 4 };
        let mut cfg = RunConfig::new(setting, n, 40);
        cfg.seed = 1010;
        let first = run_scenario(&cfg).unwrap();
        let second = run_scenario(&cfg).unwrap();
        let bundle_a = Bundle::new(
            Some(first.config.clone()),
            first.trace.clone(),
            Some(first.certificate.clone()),
        );
        let bundle_b = Bundle::new(
            Some(second.config.clone()),
            second.trace.clone(),
            Some(second.certificate.clone()),
        );
        let bytes_a = emit_bundle(&bundle_a).unwrap();
        let bytes_b = emit_bundle(&bundle_b).unwrap();
        if bytes_a != bytes_b {
            failures.push(format!("{setting}: reruns differ at the byte level"));
        }
        match parse_bundle(&bytes_a) {
            Ok(parsed) => {
                if parsed != bundle_a {
                    failures.push(format!("{setting}: parse(emit(x)) changed the bundle"));
                }
            }
            Err(e) => failures.push(format!("{setting}: round-trip parse failed: {e}")),
        }
    }
    verdict(
        10,
        "determinism: byte-identical reruns and exact parse/emit round-trips",
        failures,
    );
}
