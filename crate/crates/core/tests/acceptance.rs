//! Acceptance suite: one test per criterion, each printing a PASS/FAIL
//! line (run with `--nocapture` to see them on success).

mod common;

use std::time::Instant;

use rand_chacha::rand_core::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use parlay_kelly::asymptotics::{
    build_family, default_eps_grid, sextic_eps_grid, shrinkage_sweep, thorp_exact,
    PerturbationFamily,
};
use parlay_kelly::book::{
    book_wealth, build_optimal_book, parlay_growth, solve_all, verify_ticket_kkt, Ticket,
};
use parlay_kelly::cli::random_event;
use parlay_kelly::joint::for_each_state;
use parlay_kelly::market::MarketSet;
use parlay_kelly::single::{solve_single_event, verify_single_kkt};
use parlay_kelly::singles::{optimize_singles, optimize_ticket_space};
use parlay_kelly::Caps;

fn report(n: usize, name: &str, failures: &[String]) {
    if failures.is_empty() {
        println!("acceptance {n} ({name}): PASS");
    } else {
        println!("acceptance {n} ({name}): FAIL");
        for f in failures {
            println!("  - {f}");
        }
    }
    assert!(failures.is_empty(), "criterion {n} failed: {failures:?}");
}

/// Criterion 1: the closed form matches an independent numerical
/// maximizer on 200 seeded random events (stakes 1e-6, objective 1e-9),
/// with E[1/W*] = 1 within 1e-10 everywhere; under 10 s.
#[test]
fn criterion_1_single_event_closed_form_vs_oracle() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1001);
    let mut failures = Vec::new();
    for trial in 0..200 {
        let outcomes = 2 + (rng.next_u64() % 5) as usize; // 2..=6
        let event = random_event(&mut rng, &format!("t{trial}"), outcomes, 1.01, 1.2);
        let sol = solve_single_event(&event).expect("overround instances have positive cash");
        let (_, oracle_stakes, oracle_value) = common::brute_force_single(&event, 400_000);

        let growth: f64 = event
            .probs()
            .iter()
            .zip(sol.wealth())
            .map(|(p, w)| p * w.ln())
            .sum();
        let stake_err = sol
            .stakes()
            .iter()
            .zip(&oracle_stakes)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        if stake_err > 1e-6 {
            failures.push(format!("trial {trial}: stake deviation {stake_err:.3e}"));
        }
        if (growth - oracle_value).abs() > 1e-9 {
            failures.push(format!(
                "trial {trial}: objective deviation {:.3e}",
                (growth - oracle_value).abs()
            ));
        }
        let kkt = verify_single_kkt(&event, &sol);
        if kkt.expectation_residual > 1e-10 {
            failures.push(format!(
                "trial {trial}: E[1/W] residual {:.3e}",
                kkt.expectation_residual
            ));
        }
    }
    let elapsed = start.elapsed();
    if elapsed.as_secs_f64() >= 10.0 {
        failures.push(format!("runtime {elapsed:?} exceeds 10 s"));
    }
    println!("  (200 events in {elapsed:?})");
    report(1, "single-event closed form vs oracle", &failures);
}

fn random_small_markets(rng: &mut ChaCha8Rng, trial: usize) -> MarketSet {
    let m = 1 + (rng.next_u64() % 3) as usize;
    let events = (0..m)
        .map(|j| {
            let n = 2 + (rng.next_u64() % 2) as usize;
            random_event(rng, &format!("t{trial}e{j}"), n, 1.02, 1.1)
        })
        .collect();
    MarketSet::new(events).unwrap()
}

/// Criterion 2: on 50 seeded random instances the outer-product book
/// matches the generic ticket-space optimizer within 1e-8 in value, its
/// KKT report is clean (g = 1 ± 1e-10 on support, g < 1 off it), the
/// wealth factorization holds at every joint outcome within 1e-12, and
/// the budget closes within 1e-12; under 60 s.
#[test]
fn criterion_2_exact_parlay_formula() {
    let start = Instant::now();
    let caps = Caps::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2002);
    let mut failures = Vec::new();
    for trial in 0..50 {
        let markets = random_small_markets(&mut rng, trial);
        let book = build_optimal_book(&markets).unwrap();
        let v_par = parlay_growth(&markets).unwrap();

        let oracle = match optimize_ticket_space(&markets, 1e-9, 200_000, &caps) {
            Ok(o) => o,
            Err(e) => {
                failures.push(format!("trial {trial}: oracle failed: {e}"));
                continue;
            }
        };
        if (oracle.objective - v_par).abs() > 1e-8 {
            failures.push(format!(
                "trial {trial}: |oracle - closed form| = {:.3e}",
                (oracle.objective - v_par).abs()
            ));
        }
        if oracle.objective > v_par + 1e-11 {
            failures.push(format!(
                "trial {trial}: closed form below oracle by {:.3e}",
                oracle.objective - v_par
            ));
        }

        let kkt = verify_ticket_kkt(&book, &markets, &caps).unwrap();
        if !kkt.pass || kkt.on_support_max_residual > 1e-10 {
            failures.push(format!(
                "trial {trial}: book KKT failed (on-support {:.3e}, {} violations)",
                kkt.on_support_max_residual, kkt.violation_count
            ));
        }
        if kkt.off_support_max_g >= 1.0 {
            failures.push(format!(
                "trial {trial}: off-support gradient {:.12} not below 1",
                kkt.off_support_max_g
            ));
        }

        let solutions = solve_all(&markets).unwrap();
        let mut factorization: f64 = 0.0;
        for_each_state(&markets, |state, _| {
            let product: f64 = state
                .iter()
                .enumerate()
                .map(|(j, &i)| solutions[j].wealth()[i])
                .product();
            let direct = book_wealth(&book, &markets, state).unwrap();
            factorization = factorization.max((product - direct).abs());
        });
        if factorization > 1e-12 {
            failures.push(format!(
                "trial {trial}: factorization residual {factorization:.3e}"
            ));
        }
        if (book.total_stake() - 1.0).abs() > 1e-12 {
            failures.push(format!(
                "trial {trial}: budget residual {:.3e}",
                (book.total_stake() - 1.0).abs()
            ));
        }
    }
    let elapsed = start.elapsed();
    if elapsed.as_secs_f64() >= 60.0 {
        failures.push(format!("runtime {elapsed:?} exceeds 60 s"));
    }
    println!("  (50 instances in {elapsed:?})");
    report(2, "exact parlay formula vs generic optimizer", &failures);
}

/// Criterion 3: the optimal book's support is exactly the outer product
/// of the per-event active supports (plus cash factors).
#[test]
fn criterion_3_active_ticket_criterion() {
    let mut rng = ChaCha8Rng::seed_from_u64(2002); // same instances as criterion 2
    let mut failures = Vec::new();
    for trial in 0..50 {
        let markets = random_small_markets(&mut rng, trial);
        let book = build_optimal_book(&markets).unwrap();
        let solutions = solve_all(&markets).unwrap();
        let mut expected: Vec<Ticket> = vec![Ticket::cash(markets.len())];
        for (j, sol) in solutions.iter().enumerate() {
            let mut next = Vec::new();
            for t in &expected {
                next.push(t.clone());
                for &i in sol.active_set() {
                    let mut legs = t.legs().to_vec();
                    legs[j] = Some(i);
                    next.push(Ticket::new(legs));
                }
            }
            expected = next;
        }
        expected.sort();
        if expected != book.active_tickets() {
            failures.push(format!(
                "trial {trial}: support mismatch ({} expected, {} actual)",
                expected.len(),
                book.active_tickets().len()
            ));
        }
    }
    report(3, "active-ticket support criterion", &failures);
}

/// Criterion 4: two even-money binaries reproduce the exact two-bet
/// fractions f_i = m_i(1 − m_j²)/(1 − m_1²m_2²) to 1e-10.
#[test]
fn criterion_4_thorp_two_binary_check() {
    let caps = Caps::default();
    let mut failures = Vec::new();
    for &m1 in &[0.05, 0.1, 0.2] {
        for &m2 in &[0.05, 0.1, 0.2] {
            let markets = MarketSet::new(vec![
                parlay_kelly::market::Event::new(
                    "a",
                    vec![(1.0 + m1) / 2.0, (1.0 - m1) / 2.0],
                    vec![0.5, 0.5],
                )
                .unwrap(),
                parlay_kelly::market::Event::new(
                    "b",
                    vec![(1.0 + m2) / 2.0, (1.0 - m2) / 2.0],
                    vec![0.5, 0.5],
                )
                .unwrap(),
            ])
            .unwrap();
            let sol = optimize_singles(&markets, 1e-12, 20_000, &caps).unwrap();
            let (f1, f2) = thorp_exact(m1, m2);
            let e1 = (sol.stakes()[0][0] - f1).abs();
            let e2 = (sol.stakes()[1][0] - f2).abs();
            if e1 > 1e-10 || e2 > 1e-10 {
                failures.push(format!(
                    "(m1, m2) = ({m1}, {m2}): deviations ({e1:.3e}, {e2:.3e})"
                ));
            }
        }
    }
    report(4, "Thorp two-binary exact solution", &failures);
}

fn acceptance_families() -> Vec<(&'static str, PerturbationFamily)> {
    vec![
        (
            "binary-binary",
            build_family(
                &[vec![0.5, 0.5], vec![0.5, 0.5]],
                &[vec![0.1, -0.1], vec![0.15, -0.15]],
            )
            .unwrap(),
        ),
        (
            "binary-ternary",
            build_family(
                &[vec![0.5, 0.5], vec![0.3, 0.3, 0.4]],
                &[vec![0.1, -0.1], vec![0.05, 0.1, -0.15]],
            )
            .unwrap(),
        ),
        (
            "ternary-ternary",
            build_family(
                &[vec![0.3, 0.3, 0.4], vec![0.25, 0.35, 0.4]],
                &[vec![0.05, 0.1, -0.15], vec![0.12, 0.08, -0.2]],
            )
            .unwrap(),
        ),
    ]
}

/// Criterion 5: cubic shrinkage. Fitted slope of ‖x_sim − x_ind‖ in
/// [2.85, 3.15] on each family; Δ within 10% of −Λαε³ at the smallest
/// grid point.
#[test]
fn criterion_5_cubic_shrinkage() {
    let caps = Caps::default();
    let mut failures = Vec::new();
    for (name, family) in acceptance_families() {
        let summary = shrinkage_sweep(&family, &default_eps_grid(&family), &caps).unwrap();
        let slope = summary.delta_fit.slope;
        if !(2.85..=3.15).contains(&slope) {
            failures.push(format!(
                "{name}: delta slope {slope:.4} outside [2.85, 3.15]"
            ));
        }
        for (j, ratios) in summary.delta_ratio_at_smallest.iter().enumerate() {
            for (k, r) in ratios.iter().enumerate() {
                if (r - 1.0).abs() > 0.10 {
                    failures.push(format!(
                        "{name}: delta/prediction ratio event {j} coord {k} = {r:.4}"
                    ));
                }
            }
        }
        println!("  {name}: delta slope {slope:.4}");
    }
    report(5, "cubic stake shrinkage", &failures);
}

/// Criterion 6: residual law. Fitted slope of ‖F_j(x_ind(ε), ε)‖ in
/// [2.85, 3.15] per event; prefactor within 10% of Λ_j a_j.
#[test]
fn criterion_6_residual_law() {
    let caps = Caps::default();
    let mut failures = Vec::new();
    for (name, family) in acceptance_families() {
        let summary = shrinkage_sweep(&family, &default_eps_grid(&family), &caps).unwrap();
        for (j, fit) in summary.residual_fits.iter().enumerate() {
            if !(2.85..=3.15).contains(&fit.slope) {
                failures.push(format!(
                    "{name}: residual slope event {j} = {:.4} outside [2.85, 3.15]",
                    fit.slope
                ));
            }
        }
        for (j, ratios) in summary.residual_ratio_at_smallest.iter().enumerate() {
            for (k, r) in ratios.iter().enumerate() {
                if (r - 1.0).abs() > 0.10 {
                    failures.push(format!(
                        "{name}: residual/prediction ratio event {j} coord {k} = {r:.4}"
                    ));
                }
            }
        }
        let slopes: Vec<String> = summary
            .residual_fits
            .iter()
            .map(|f| format!("{:.4}", f.slope))
            .collect();
        println!("  {name}: residual slopes {}", slopes.join(", "));
    }
    report(6, "cubic residual law at the isolated point", &failures);
}

/// Criterion 7: quartic loss. Gap nonnegative on every record; fitted
/// slope of the gap in [3.8, 4.2].
#[test]
fn criterion_7_quartic_growth_loss() {
    let caps = Caps::default();
    let mut failures = Vec::new();
    for (name, family) in acceptance_families() {
        let summary = shrinkage_sweep(&family, &default_eps_grid(&family), &caps).unwrap();
        for record in &summary.records {
            if record.gap < -1e-11 {
                failures.push(format!(
                    "{name}: negative gap {:.3e} at eps {:.4}",
                    record.gap, record.eps
                ));
            }
        }
        let slope = summary.gap_fit.slope;
        if !(3.8..=4.2).contains(&slope) {
            failures.push(format!("{name}: gap slope {slope:.4} outside [3.8, 4.2]"));
        }
        println!("  {name}: gap slope {slope:.4}");
    }
    report(7, "quartic growth loss", &failures);
}

/// Criterion 8: sextic remark. On the larger-ε grid the fitted slope of
/// G_sing(x_sim) − G_sing(x_ind) lies in [5.4, 6.6], unless the quantity
/// sinks below the 1e-12 noise floor, which must then be reported.
#[test]
fn criterion_8_sextic_reoptimization_gain() {
    let caps = Caps::default();
    let mut failures = Vec::new();
    for (name, family) in acceptance_families() {
        let summary = shrinkage_sweep(&family, &sextic_eps_grid(&family), &caps).unwrap();
        match (summary.sextic_fit, summary.sextic_below_noise_floor) {
            (Some(fit), _) => {
                if !(5.4..=6.6).contains(&fit.slope) {
                    failures.push(format!(
                        "{name}: sextic slope {:.4} outside [5.4, 6.6]",
                        fit.slope
                    ));
                }
                println!("  {name}: sextic slope {:.4}", fit.slope);
            }
            (None, true) => {
                println!("  {name}: sextic check skipped (below noise floor)");
            }
            (None, false) => {
                failures.push(format!(
                    "{name}: sextic fit missing without a noise-floor flag"
                ));
            }
        }
    }
    report(8, "sextic re-optimization gain", &failures);
}

/// Criterion 9: the two-event running example's regression pins.
#[test]
fn criterion_9_running_example_pins() {
    let markets = MarketSet::new(vec![
        parlay_kelly::market::Event::new("e1", vec![0.6, 0.4], vec![0.5, 0.5]).unwrap(),
        parlay_kelly::market::Event::new("e2", vec![0.5, 0.3, 0.2], vec![0.45, 0.35, 0.25])
            .unwrap(),
    ])
    .unwrap();
    let mut failures = Vec::new();

    let solutions = solve_all(&markets).unwrap();
    for (cash, expected) in solutions.iter().map(|s| s.cash()).zip([0.8, 10.0 / 11.0]) {
        if (cash - expected).abs() > 1e-6 {
            failures.push(format!("cash {cash} != {expected}"));
        }
    }

    let book = build_optimal_book(&markets).unwrap();
    let expectations = [
        (vec![None, None], 0.727273),
        (vec![Some(0), None], 0.181818),
        (vec![None, Some(0)], 0.072727),
        (vec![Some(0), Some(0)], 0.018182),
    ];
    for (legs, pin) in expectations {
        let stake = book.stake(&Ticket::new(legs.clone()));
        if (stake - pin).abs() > 1e-6 {
            failures.push(format!("stake {stake:.7} != {pin} on {legs:?}"));
        }
    }
    if book.stakes().len() != 4 {
        failures.push(format!("support size {} != 4", book.stakes().len()));
    }

    let v_par = parlay_growth(&markets).unwrap();
    if (v_par - 0.0251607).abs() > 1e-6 {
        failures.push(format!("v_par {v_par:.7} != 0.0251607"));
    }
    report(9, "running-example regression pins", &failures);
}

/// Criterion 10: determinism. Fixed seed and thread cap produce
/// byte-identical output across runs of every command.
#[test]
fn criterion_10_byte_identical_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let mut failures = Vec::new();

    let run = |args: &[&str]| -> Vec<u8> {
        let out = std::process::Command::new(env!("CARGO_BIN_EXE_parlay-kelly"))
            .args(args)
            .env("PARLAY_KELLY_THREADS", "4")
            .output()
            .expect("binary runs");
        assert_eq!(
            out.status.code(),
            Some(0),
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        out.stdout
    };

    let gen_args = ["gen", "--seed", "7", "--events", "2", "--outcomes", "3"];
    let generated = run(&gen_args);
    if generated != run(&gen_args) {
        failures.push("gen output differs between runs".to_string());
    }
    let market_path = dir.path().join("m.json");
    std::fs::write(&market_path, &generated).unwrap();
    let market = market_path.to_str().unwrap();

    let family_path = dir.path().join("family.json");
    std::fs::write(
        &family_path,
        r#"{"family":[{"baseline":[0.5,0.5],"direction":[0.1,-0.1]},
                      {"baseline":[0.5,0.5],"direction":[0.15,-0.15]}]}"#,
    )
    .unwrap();
    let family = family_path.to_str().unwrap();

    let book_path = dir.path().join("book.json");
    std::fs::write(
        &book_path,
        run(&["build-book", "--input", market, "--format", "json"]),
    )
    .unwrap();
    let book = book_path.to_str().unwrap();

    let command_sets: Vec<Vec<&str>> = vec![
        vec!["solve-event", "--input", market, "--format", "json"],
        vec![
            "verify", "--input", market, "--book", book, "--format", "json",
        ],
        vec!["build-book", "--input", market, "--format", "json"],
        vec!["build-book", "--input", market, "--format", "csv"],
        vec!["optimize-singles", "--input", market, "--format", "json"],
        vec!["optimize-tickets", "--input", market, "--format", "json"],
        vec!["compare", "--input", market, "--format", "json"],
        vec!["sweep", "--input", family, "--format", "csv"],
        vec!["sweep", "--input", family, "--format", "json"],
    ];
    for args in &command_sets {
        let first = run(args);
        let second = run(args);
        if first != second {
            failures.push(format!("{args:?} output differs between runs"));
        }
    }

    // In-process determinism of the numerical solver.
    let markets =
        parlay_kelly::io::parse_market_json(std::str::from_utf8(&generated).unwrap()).unwrap();
    let caps = Caps::default();
    let one = optimize_singles(&markets, 1e-11, 10_000, &caps).unwrap();
    let two = optimize_singles(&markets, 1e-11, 10_000, &caps).unwrap();
    if one.stakes() != two.stakes() || one.objective() != two.objective() {
        failures.push("optimize_singles is not bit-deterministic".to_string());
    }

    report(10, "seeded byte-identical determinism", &failures);
}
