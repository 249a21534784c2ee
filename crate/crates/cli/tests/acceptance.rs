//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Every stochastic check uses master seed 0.

use std::time::Instant;

use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use regret_design::config::{PandemicConfig, PricingConfig, QuadraticConfig};
use regret_design::experiments::{
    compare, optimized_vs_uniform, sweep, Experiment, PandemicExperiment, PricingExperiment,
    QuadraticExperiment,
};
use regret_design::RayonExecutor;
use regret_design_core::design::Prior;
use regret_design_core::design::{
    c_optimal_allocation, kkt_group_allocation, random_search, round_allocation, DesignObjective,
};
use regret_design_core::estimation::{
    component_points, covariance, group_points, price_points, simulate_estimate, Allocation,
    CovarianceModel,
};
use regret_design_core::harness::{compare_designs, NamedAllocation};
use regret_design_core::numerics::{cross_derivative_matrix, FdConfig, Matrix, RngStream};
use regret_design_core::problem::Objective;
use regret_design_core::problems::{
    pricing_d, quadratic_d, sir_trajectory, PricingProblem, QuadraticProblem, SirParams,
};

const SEED: u64 = 0;

type Outcome = Result<String, String>;

fn exec() -> RayonExecutor {
    RayonExecutor::from_env().expect("worker pool")
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    format!("error: {e}")
}

/// 1. The empirical regret curve over splits bottoms out near the closed form.
fn quadratic_closed_form() -> Outcome {
    let exec = exec();
    let exp = QuadraticExperiment::new(QuadraticConfig::default()).map_err(err)?;
    let budget = 100;
    let design = exp.design(budget, SEED, &exec).map_err(err)?;
    let closed = design.allocation.counts().expect("integer design")[0];
    let mut named = exp.splits(budget).map_err(err)?;
    named.push(NamedAllocation::new(
        "closed_form",
        design.allocation.clone(),
    ));
    named.push(NamedAllocation::new(
        "uniform",
        exp.uniform(budget).map_err(err)?,
    ));
    let reports = compare(&exp, &named, 300, SEED, &exec).map_err(err)?;
    let (splits, rest) = reports.split_at(reports.len() - 2);
    let best = splits
        .iter()
        .zip(&named)
        .min_by(|a, b| a.0.report.mean_regret.total_cmp(&b.0.report.mean_regret))
        .map(|(_, n)| n.allocation.counts().unwrap()[0])
        .unwrap();
    let (cf, uni) = (&rest[0].report, &rest[1].report);
    check(
        best.abs_diff(closed) <= 10 && cf.mean_regret < uni.mean_regret,
        format!(
            "empirical argmin n0={best}, closed form n0={closed}; closed-form regret {:.4} vs uniform {:.4}",
            cf.mean_regret, uni.mean_regret
        ),
    )
}

/// 2. The deterministic regret bound holds on every noisy estimate.
fn deterministic_bound() -> Outcome {
    let exp = QuadraticExperiment::new(QuadraticConfig::default()).map_err(err)?;
    let (checks, skipped) = exp.verify_bound(SEED).map_err(err)?;
    let held = checks.iter().filter(|(_, c)| c.holds).count();
    check(
        skipped == 0 && held == checks.len() && checks.len() == 1000,
        format!(
            "bound held on {held} of {} draws, {skipped} outside the θ₁ region",
            checks.len()
        ),
    )
}

fn pricing_config(theta0: f64) -> PricingConfig {
    PricingConfig {
        prior_mean: vec![theta0, 1.0],
        ..PricingConfig::default()
    }
}

/// 3. Optimized pricing designs beat uniform, with the expected magnitude.
fn pricing_table() -> Outcome {
    let exec = exec();
    let mut wins = 0;
    let mut at_four = f64::NAN;
    let mut rows = Vec::new();
    for k in 1..=8 {
        let exp = PricingExperiment::new(pricing_config(-(k as f64))).map_err(err)?;
        let (_, reports) = optimized_vs_uniform(&exp, 100, 300, SEED, &exec).map_err(err)?;
        let (opt, uni) = (reports[0].report.mean_regret, reports[1].report.mean_regret);
        if opt <= uni {
            wins += 1;
        }
        if k == 4 {
            at_four = opt;
        }
        rows.push(format!("-{k}:{:.2}/{:.2}", opt * 100.0, uni * 100.0));
    }
    check(
        wins >= 7 && (0.5e-2..=2.5e-2).contains(&at_four),
        format!(
            "optimized ≤ uniform on {wins}/8; θ=(-4,1) optimized {:.2}e-2; rows (×1e-2, opt/uni) {}",
            at_four * 100.0,
            rows.join(" ")
        ),
    )
}

/// 4. Pricing regret decays like 1/n.
fn pricing_decay() -> Outcome {
    let exec = exec();
    let exp = PricingExperiment::new(PricingConfig::default()).map_err(err)?;
    let (_, result) = sweep(&exp, &[100, 300, 1000, 3000], 300, SEED, &exec).map_err(err)?;
    let means: Vec<String> = result
        .optimized
        .iter()
        .map(|r| format!("{:.3e}", r.mean_regret))
        .collect();
    check(
        (-1.3..=-0.7).contains(&result.loglog_slope),
        format!(
            "loglog slope {:.3} (regret {})",
            result.loglog_slope,
            means.join(", ")
        ),
    )
}

/// 5. Pandemic: the KKT design favors high-contact groups and beats uniform.
fn pandemic_directional() -> Outcome {
    let exec = exec();
    let budgets = [10, 30];
    let mut ok = true;
    let mut detail = Vec::new();
    for (label, kappa, check_allocation) in [
        ("κ=1/105", 1.0 / 105.0, true),
        ("κ=1/70", 1.0 / 70.0, false),
    ] {
        let exp = PandemicExperiment::new(PandemicConfig {
            kappa,
            prior_draws: 200,
            ..PandemicConfig::default()
        })
        .map_err(err)?;
        let designs = exp.designs(&budgets, SEED, &exec).map_err(err)?;
        for (&c, design) in budgets.iter().zip(&designs) {
            let m = design.allocation.counts().expect("integer design").to_vec();
            if check_allocation {
                let shape = m[2] == 1 && m[0] >= m[1] && m[1] > m[2];
                ok &= shape;
                detail.push(format!(
                    "{label} C={c} M={m:?} shape {}",
                    if shape { "ok" } else { "FAIL" }
                ));
            }
            let named = [
                NamedAllocation::new("optimized", design.allocation.clone()),
                NamedAllocation::new("uniform", exp.uniform(c).map_err(err)?),
            ];
            let reports = compare(&exp, &named, 200, SEED, &exec).map_err(err)?;
            let (opt, uni) = (reports[0].report.mean_regret, reports[1].report.mean_regret);
            ok &= opt < uni;
            detail.push(format!("{label} C={c} regret {opt:.1} vs uniform {uni:.1}"));
        }
    }
    check(ok, detail.join("; "))
}

fn relative_error(analytic: &[f64], fd: &[f64]) -> f64 {
    let diff: f64 = analytic
        .iter()
        .zip(fd)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    let norm: f64 = analytic.iter().map(|a| a * a).sum::<f64>().sqrt();
    diff / norm
}

/// 6. Analytic cross-derivatives agree with the stencil, which converges at
/// second order.
fn derivative_oracles() -> Outcome {
    let mut rng = RngStream::new(SEED, 6).rng();
    let mut unit = || regret_design_core::numerics::rng::sample_unit(&mut rng);
    let quad = QuadraticProblem::new();
    let fd = FdConfig::default();
    let mut worst_quad = 0.0f64;
    let mut worst_price = 0.0f64;
    let mut coarse = 0.0;
    let mut fine = 0.0;
    for _ in 0..100 {
        let theta = [-10.0 + 20.0 * unit(), 0.5 + 9.5 * unit()];
        let x = [QuadraticProblem::optimum(&theta)];
        let d = cross_derivative_matrix(|x, t| quad.evaluate(x, t), &x, &theta, fd).map_err(err)?;
        worst_quad = worst_quad.max(relative_error(
            &quadratic_d(&theta).map_err(err)?,
            d.as_slice(),
        ));

        let theta = [-8.0 + 7.0 * unit(), 0.5 + 1.5 * unit()];
        let x = [0.5 + 9.0 * unit()];
        let f = |x: &[f64], t: &[f64]| -PricingProblem::revenue(x[0], t);
        let analytic = pricing_d(x[0], &theta);
        let d = cross_derivative_matrix(f, &x, &theta, fd).map_err(err)?;
        worst_price = worst_price.max(relative_error(&analytic, d.as_slice()));
        let err_at = |h: f64| -> Result<f64, String> {
            let d = cross_derivative_matrix(f, &x, &theta, FdConfig::new(h).map_err(err)?)
                .map_err(err)?;
            Ok(analytic
                .iter()
                .zip(d.as_slice())
                .map(|(a, b)| (a - b).abs())
                .sum())
        };
        coarse += err_at(0.02)?;
        fine += err_at(0.01)?;
    }
    let ratio = coarse / fine;
    check(
        worst_quad <= 1e-5 && worst_price <= 1e-5 && (3.5..=4.5).contains(&ratio),
        format!("worst relative error quadratic {worst_quad:.2e}, pricing {worst_price:.2e}; halving h cuts error {ratio:.2}×"),
    )
}

fn empirical_covariance(
    model: &CovarianceModel,
    alloc: &Allocation,
    theta: &[f64],
    reps: usize,
    stream: RngStream,
) -> Result<(Matrix, usize), String> {
    let exec = exec();
    use regret_design_core::numerics::Executor;
    let draws = exec.map(reps, |r| {
        simulate_estimate(model, alloc, theta, stream.child(r as u64)).ok()
    });
    let kept: Vec<Vec<f64>> = draws.into_iter().flatten().collect();
    let p = theta.len();
    let n = kept.len() as f64;
    let mut mean = vec![0.0; p];
    for d in &kept {
        for (m, v) in mean.iter_mut().zip(d) {
            *m += v / n;
        }
    }
    let mut cov = vec![0.0; p * p];
    for d in &kept {
        for i in 0..p {
            for j in 0..p {
                cov[i * p + j] += (d[i] - mean[i]) * (d[j] - mean[j]) / (n - 1.0);
            }
        }
    }
    Ok((
        Matrix::from_row_major(p, p, cov).map_err(err)?,
        reps - kept.len(),
    ))
}

fn frobenius_gap(
    model: &CovarianceModel,
    alloc: &Allocation,
    theta: &[f64],
    reps: usize,
    key: u64,
) -> Result<(f64, usize), String> {
    let (emp, failed) = empirical_covariance(
        model,
        alloc,
        theta,
        reps,
        RngStream::new(SEED, 7).child(key),
    )?;
    let exact = covariance(model, alloc, theta).map_err(err)?;
    let diff: Vec<f64> = emp
        .as_slice()
        .iter()
        .zip(exact.as_slice())
        .map(|(a, b)| a - b)
        .collect();
    let gap = Matrix::from_row_major(emp.rows(), emp.cols(), diff)
        .map_err(err)?
        .frobenius_norm()
        / exact.frobenius_norm();
    Ok((gap, failed))
}

/// 7. Simulated estimates have the covariance the design objective assumes.
fn estimator_consistency() -> Outcome {
    let diag = CovarianceModel::DiagonalMean {
        sigma: vec![1.0, 3f64.sqrt()],
    };
    let alloc = Allocation::from_counts(component_points(2), vec![22, 78]).map_err(err)?;
    let (g_diag, _) = frobenius_gap(&diag, &alloc, &[10.0, 5.0], 100_000, 0)?;

    let lognormal = CovarianceModel::LognormalGroupMean { groups: 3 };
    let alloc = Allocation::from_counts(group_points(3), vec![5, 4, 1]).map_err(err)?;
    let theta = SirParams::worked_example().contacts.as_slice().to_vec();
    let (g_log, _) = frobenius_gap(&lognormal, &alloc, &theta, 100_000, 1)?;

    let logistic = CovarianceModel::LogisticMle;
    let alloc =
        Allocation::uniform(price_points(&PricingProblem::default_grid()), 10_000).map_err(err)?;
    let (g_mle, failed) = frobenius_gap(&logistic, &alloc, &[-4.0, 1.0], 4000, 2)?;

    check(
        g_diag <= 0.05 && g_log <= 0.05 && g_mle <= 0.10 && failed == 0,
        format!("relative Frobenius gap: diagonal {g_diag:.4}, lognormal {g_log:.4}, logistic {g_mle:.4} ({failed} failed fits)"),
    )
}

fn runner(cases: u32) -> TestRunner {
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

fn weighted_variance(d: &[f64], sigma: &[f64], w: &[f64]) -> f64 {
    d.iter()
        .zip(sigma)
        .zip(w)
        .map(|((d, s), w)| d * d * s * s / w)
        .sum()
}

fn allocation_optimality() -> Result<(), String> {
    // Two components: the closed form beats every point of a 999-point grid.
    runner(100)
        .run(
            &(
                prop::array::uniform2(-5.0..5.0f64),
                prop::array::uniform2(0.1..3.0f64),
            ),
            |(d, s)| {
                prop_assume!(d.iter().all(|v| v.abs() > 1e-3));
                let w = c_optimal_allocation(&d, &s).unwrap().fractions();
                let best = weighted_variance(&d, &s, &w);
                for k in 1..1000 {
                    let g = k as f64 / 1000.0;
                    prop_assert!(best <= weighted_variance(&d, &s, &[g, 1.0 - g]) + 1e-9);
                }
                Ok(())
            },
        )
        .map_err(|e| format!("grid oracle: {e}"))?;
    // Four components: the closed form beats 10⁴ Dirichlet(1, …, 1) samples.
    runner(100)
        .run(
            &(
                prop::array::uniform4(-5.0..5.0f64),
                prop::array::uniform4(0.1..3.0f64),
                any::<u64>(),
            ),
            |(d, s, seed)| {
                prop_assume!(d.iter().all(|v| v.abs() > 1e-3));
                let w = c_optimal_allocation(&d, &s).unwrap().fractions();
                let best = weighted_variance(&d, &s, &w);
                let mut rng = RngStream::new(seed, 0).rng();
                for _ in 0..10_000 {
                    let e: Vec<f64> = (0..4)
                        .map(|_| {
                            -regret_design_core::numerics::rng::sample_unit(&mut rng)
                                .max(1e-300)
                                .ln()
                        })
                        .collect();
                    let total: f64 = e.iter().sum();
                    let sample: Vec<f64> = e.iter().map(|v| v / total).collect();
                    prop_assert!(best <= weighted_variance(&d, &s, &sample) + 1e-9);
                }
                Ok(())
            },
        )
        .map_err(|e| format!("Dirichlet oracle: {e}"))
}

fn sir_properties() -> Result<(), String> {
    let base = SirParams::worked_example();
    runner(20)
        .run(
            &(
                prop::collection::vec(0.2..20.0f64, 9),
                prop::array::uniform3(0.0..0.2f64),
                0usize..3,
            ),
            |(theta, x, k)| {
                let states = sir_trajectory(&base, &theta, &x).unwrap();
                let mut prev_s = f64::INFINITY;
                for st in &states {
                    for g in 0..3 {
                        let total = st.s[g] + st.i[g] + st.r[g];
                        prop_assert!(
                            (total - base.group_sizes[g]).abs() <= 1e-9 * base.group_sizes[g]
                        );
                        prop_assert!(st.s[g] >= 0.0 && st.i[g] >= 0.0);
                    }
                    let s: f64 = st.s.iter().sum();
                    prop_assert!(s <= prev_s);
                    prev_s = s;
                }
                let cumulative = |x: &[f64]| {
                    sir_trajectory(&base, &theta, x)
                        .unwrap()
                        .last()
                        .unwrap()
                        .cumulative_infections(&base.group_sizes)
                };
                let mut more = x;
                more[k] += 0.05;
                prop_assert!(cumulative(&more) <= cumulative(&x) + 1e-9);
                Ok(())
            },
        )
        .map_err(|e| format!("SIR: {e}"))
}

fn rounding_exactness() -> Result<(), String> {
    runner(2000)
        .run(
            &(prop::collection::vec(0.0..1.0f64, 2..8), 0u64..3, 0u64..500),
            |(raw, floor, extra)| {
                let total_w: f64 = raw.iter().sum();
                prop_assume!(total_w > 1e-6);
                let m = raw.len() as u64;
                let total = floor * m + extra;
                prop_assume!(total > 0);
                let w: Vec<f64> = raw.iter().map(|v| v / total_w).collect();
                let frac = Allocation::from_fractions(component_points(raw.len()), w, 1).unwrap();
                let a = round_allocation(&frac, total, floor).unwrap();
                let counts = a.counts().unwrap();
                prop_assert_eq!(counts.iter().sum::<u64>(), total);
                prop_assert!(counts.iter().all(|&c| c >= floor));
                Ok(())
            },
        )
        .map_err(|e| format!("rounding: {e}"))?;
    runner(10_000)
        .run(
            &(
                prop::array::uniform3(0.0..100.0f64),
                3u64..400,
                any::<u64>(),
            ),
            |(rho, c, seed)| {
                prop_assume!(rho.iter().sum::<f64>() > 0.0);
                let a = kkt_group_allocation(&rho, c, &mut RngStream::new(seed, 0).rng()).unwrap();
                let counts = a.counts().unwrap();
                prop_assert_eq!(counts.iter().sum::<u64>(), c);
                prop_assert!(counts.iter().all(|&v| v >= 1));
                Ok(())
            },
        )
        .map_err(|e| format!("KKT: {e}"))
}

fn thread_determinism() -> Result<(), String> {
    let one = RayonExecutor::new(1).map_err(err)?;
    let four = RayonExecutor::new(4).map_err(err)?;
    let problem = PricingProblem::default();
    let prior = Prior::normal(vec![-4.0, 1.0], &Matrix::identity(2).scaled(0.01)).map_err(err)?;
    let points = price_points(&PricingProblem::default_grid());
    let search = |exec: &RayonExecutor| {
        let obj = DesignObjective::build(
            &problem,
            CovarianceModel::LogisticMle,
            points.clone(),
            &prior,
            100,
            100,
            RngStream::new(SEED, 1),
            FdConfig::default(),
            exec,
        )
        .map_err(err)?;
        let found = random_search(&obj, 500, RngStream::new(SEED, 2), exec).map_err(err)?;
        let named = [
            NamedAllocation::new("optimized", found.allocation.clone()),
            NamedAllocation::new(
                "uniform",
                Allocation::uniform(points.clone(), 100).map_err(err)?,
            ),
        ];
        let reports = compare_designs(
            &problem,
            &CovarianceModel::LogisticMle,
            &prior,
            &named,
            100,
            RngStream::new(SEED, 3),
            exec,
        )
        .map_err(err)?;
        Ok::<_, String>((found.allocation, found.objective.to_bits(), reports))
    };
    let (a, b) = (search(&one)?, search(&four)?);
    if a != b {
        return Err("pricing design or regret differs between 1 and 4 threads".into());
    }
    let exp = PandemicExperiment::new(PandemicConfig {
        prior_draws: 50,
        ..PandemicConfig::default()
    })
    .map_err(err)?;
    let run = |exec: &RayonExecutor| {
        optimized_vs_uniform(&exp, 10, 50, SEED, exec)
            .map(|(d, r)| (d.allocation, d.objective.to_bits(), r))
    };
    if run(&one).map_err(err)? != run(&four).map_err(err)? {
        return Err("pandemic design or regret differs between 1 and 4 threads".into());
    }
    Ok(())
}

/// 8. Property suites with fixed seeds.
fn property_suites() -> Outcome {
    let suites: [(&str, fn() -> Result<(), String>); 4] = [
        ("allocation optimality", allocation_optimality),
        ("SIR conservation and monotonicity", sir_properties),
        ("rounding exactness", rounding_exactness),
        ("thread-count determinism", thread_determinism),
    ];
    let mut failures = Vec::new();
    for (name, suite) in suites {
        if let Err(e) = suite() {
            failures.push(format!("{name}: {e}"));
        }
    }
    if failures.is_empty() {
        Ok(suites.iter().map(|s| s.0).collect::<Vec<_>>().join(", ") + " green")
    } else {
        Err(failures.join("; "))
    }
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("quadratic closed-form optimality", quadratic_closed_form),
        ("deterministic regret bound", deterministic_bound),
        ("pricing optimized vs uniform", pricing_table),
        ("pricing O(1/n) decay", pricing_decay),
        ("pandemic directional reproduction", pandemic_directional),
        ("derivative oracles", derivative_oracles),
        ("estimator consistency", estimator_consistency),
        ("property suites", property_suites),
    ];
    let mut failed = 0;
    for (i, (name, criterion)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = criterion();
        let secs = start.elapsed().as_secs_f64();
        let (tag, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("{tag} {}. {name} [{secs:.1}s]: {detail}", i + 1);
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
