//! Command-line front end.
//!
//! Exit codes: 0 success, 1 validation/usage error, 2 solver or cap
//! error, 3 verification failure.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand_chacha::rand_core::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::asymptotics::{
    default_eps_grid, sextic_eps_grid, shrinkage_sweep, PerturbationFamily, SweepSummary,
};
use crate::book::{
    book_objective, build_optimal_book, solve_all, verify_ticket_kkt, TicketBook, TicketKktReport,
};
use crate::error::{Error, Result};
use crate::io::{
    book_to_csv, book_to_json_value, market_to_json_value, parse_book_json, parse_family_json,
    parse_market_json,
};
use crate::market::{Event, MarketSet};
use crate::single::{single_event_growth, solve_single_event, verify_single_kkt, SingleKktReport};
use crate::singles::{growth_gap, optimize_singles, optimize_ticket_space};
use crate::Caps;

#[derive(Debug, Parser)]
#[command(
    name = "parlay-kelly",
    version,
    about = "Log-optimal staking over independent multi-outcome events: exact parlay books, singles-only optimization, and low-edge sweeps"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve each event's Kelly problem in isolation (closed form)
    SolveEvent(CommonArgs),
    /// Build the exact optimal parlay book (outer product)
    BuildBook(CommonArgs),
    /// Numerically maximize the singles-only growth rate
    OptimizeSingles(CommonArgs),
    /// Run the generic ticket-space optimizer over the full menu
    OptimizeTickets(CommonArgs),
    /// Report V_par, V_sing, their gap, and KKT checks
    Compare(CommonArgs),
    /// Verify a book file against the exact first-order conditions
    Verify(VerifyArgs),
    /// Sweep a perturbation family and fit convergence orders
    Sweep(CommonArgs),
    /// Generate a random solvable market instance (seeded)
    Gen(GenArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Json,
    Csv,
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Input file: market JSON (family JSON for `sweep`)
    #[arg(long)]
    input: PathBuf,
    /// Output format
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
    /// Solver tolerance (projected-KKT residual)
    #[arg(long, default_value_t = 1e-11)]
    tol: f64,
    /// Iteration budget for the numerical solvers
    #[arg(long, default_value_t = 10_000)]
    max_iter: usize,
    /// Cap on enumerated joint outcome states
    #[arg(long, default_value_t = 100_000)]
    state_cap: usize,
    /// Cap on the enumerated ticket menu
    #[arg(long, default_value_t = 1_000_000)]
    menu_cap: usize,
    /// Cap on the ticket menu accepted by the ticket-space optimizer
    #[arg(long, default_value_t = 5_000)]
    ticket_cap: usize,
    /// Hide stakes below this threshold in table output
    #[arg(long, default_value_t = 1e-12)]
    min_stake: f64,
    /// Report growth rates in bits (log base 2) instead of nats
    #[arg(long)]
    log2: bool,
}

impl CommonArgs {
    fn caps(&self) -> Caps {
        Caps {
            max_tickets: self.menu_cap,
            max_states: self.state_cap,
            max_oracle_tickets: self.ticket_cap,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::Validation(format!(
                "--tol must be > 0, got {}",
                self.tol
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::Validation("--max-iter must be positive".into()));
        }
        if self.state_cap == 0 || self.menu_cap == 0 || self.ticket_cap == 0 {
            return Err(Error::Validation("caps must be positive".into()));
        }
        if self.min_stake.is_nan() || self.min_stake < 0.0 {
            return Err(Error::Validation("--min-stake must be >= 0".into()));
        }
        Ok(())
    }

    /// Growth-rate scale factor and unit label.
    fn units(&self) -> (f64, &'static str) {
        if self.log2 {
            (std::f64::consts::LOG2_E, "bits")
        } else {
            (1.0, "nats")
        }
    }
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Book file to verify (JSON, as produced by `build-book --format json`)
    #[arg(long)]
    book: PathBuf,
}

#[derive(Debug, Args)]
struct GenArgs {
    /// RNG seed; identical seeds produce byte-identical output
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of events
    #[arg(long, default_value_t = 2)]
    events: usize,
    /// Outcomes per event
    #[arg(long, default_value_t = 3)]
    outcomes: usize,
    /// Lower bound of the target overround
    #[arg(long, default_value_t = 1.0)]
    overround_min: f64,
    /// Upper bound of the target overround
    #[arg(long, default_value_t = 1.1)]
    overround_max: f64,
}

/// Parse `argv`, dispatch, and map outcomes to process exit codes.
pub fn main_entry() -> i32 {
    // Internal computations are sequential; a thread cap is accepted for
    // compatibility and validated, never exceeded.
    if let Ok(raw) = std::env::var("PARLAY_KELLY_THREADS") {
        match raw.parse::<usize>() {
            Ok(n) if n >= 1 => {}
            _ => {
                eprintln!("error: PARLAY_KELLY_THREADS must be a positive integer, got '{raw}'");
                return 1;
            }
        }
    }
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are not errors.
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            if code == 0 {
                print!("{e}");
            } else {
                eprint!("{e}");
            }
            return code;
        }
    };
    match run(cli) {
        Ok(verified) => {
            if verified {
                0
            } else {
                3
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Validation(_) | Error::Schema(_) | Error::InvalidOdds(_) | Error::Io(_) => 1,
        _ => 2,
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::SolveEvent(args) => cmd_solve_event(&args).map(|_| true),
        Command::BuildBook(args) => cmd_build_book(&args).map(|_| true),
        Command::OptimizeSingles(args) => cmd_optimize_singles(&args).map(|_| true),
        Command::OptimizeTickets(args) => cmd_optimize_tickets(&args).map(|_| true),
        Command::Compare(args) => cmd_compare(&args).map(|_| true),
        Command::Verify(args) => cmd_verify(&args),
        Command::Sweep(args) => cmd_sweep(&args).map(|_| true),
        Command::Gen(args) => cmd_gen(&args).map(|_| true),
    }
}

fn read_markets(path: &Path) -> Result<MarketSet> {
    parse_market_json(&std::fs::read_to_string(path)?)
}

fn read_family(path: &Path) -> Result<PerturbationFamily> {
    parse_family_json(&std::fs::read_to_string(path)?)
}

fn print_json(value: &Value) {
    println!("{}", serde_json::to_string(value).expect("json render"));
}

fn single_kkt_json(report: &SingleKktReport) -> Value {
    json!({
        "expectation_residual": report.expectation_residual,
        "active_residual": report.active_residual,
        "inactive_margin": report.inactive_margin,
        "budget_residual": report.budget_residual,
        "tol": report.tol,
        "pass": report.pass,
    })
}

fn ticket_kkt_json(report: &TicketKktReport) -> Value {
    json!({
        "multiplier": report.multiplier,
        "tol": report.tol,
        "checked_tickets": report.checked_tickets,
        "on_support_max_residual": report.on_support_max_residual,
        "off_support_max_g": if report.off_support_max_g.is_finite() {
            json!(report.off_support_max_g)
        } else {
            Value::Null
        },
        "strict_ok": report.strict_ok,
        "violation_count": report.violation_count,
        "pass": report.pass,
    })
}

// ---------------------------------------------------------------------
// solve-event

fn cmd_solve_event(args: &CommonArgs) -> Result<()> {
    args.validate()?;
    let markets = read_markets(&args.input)?;
    let solutions = solve_all(&markets)?;
    let (scale, unit) = args.units();

    match args.format {
        Format::Table => {
            let mut out = String::new();
            for (event, sol) in markets.events().iter().zip(&solutions) {
                let report = verify_single_kkt(event, sol);
                let growth = single_event_growth(event, sol) * scale;
                writeln!(out, "event {}", event.name()).unwrap();
                writeln!(out, "  cash    {:.6}", sol.cash()).unwrap();
                writeln!(out, "  growth  {growth:.7} {unit}").unwrap();
                writeln!(
                    out,
                    "  kkt     {}",
                    if report.pass { "pass" } else { "FAIL" }
                )
                .unwrap();
                writeln!(
                    out,
                    "  {:<10} {:>9} {:>9} {:>9} {:>9}",
                    "outcome", "prob", "price", "stake", "wealth"
                )
                .unwrap();
                for i in 0..event.len() {
                    writeln!(
                        out,
                        "  {:<10} {:>9.6} {:>9.6} {:>9.6} {:>9.6}{}",
                        event.labels()[i],
                        event.probs()[i],
                        event.prices()[i],
                        sol.stakes()[i],
                        sol.wealth()[i],
                        if sol.stakes()[i] > 0.0 { "  *" } else { "" },
                    )
                    .unwrap();
                }
            }
            print!("{out}");
        }
        Format::Json => {
            let events: Vec<Value> = markets
                .events()
                .iter()
                .zip(&solutions)
                .map(|(event, sol)| {
                    json!({
                        "name": event.name(),
                        "cash": sol.cash(),
                        "growth": single_event_growth(event, sol) * scale,
                        "active_set": sol.active_set().iter()
                            .map(|&i| event.labels()[i].clone()).collect::<Vec<_>>(),
                        "outcomes": (0..event.len()).map(|i| json!({
                            "label": event.labels()[i],
                            "prob": event.probs()[i],
                            "price": event.prices()[i],
                            "stake": sol.stakes()[i],
                            "wealth": sol.wealth()[i],
                        })).collect::<Vec<_>>(),
                        "kkt": single_kkt_json(&verify_single_kkt(event, sol)),
                    })
                })
                .collect();
            print_json(&json!({ "events": events, "units": unit }));
        }
        Format::Csv => {
            println!("event,label,prob,price,stake,wealth,active");
            for (event, sol) in markets.events().iter().zip(&solutions) {
                for i in 0..event.len() {
                    println!(
                        "{},{},{},{},{},{},{}",
                        event.name(),
                        event.labels()[i],
                        event.probs()[i],
                        event.prices()[i],
                        sol.stakes()[i],
                        sol.wealth()[i],
                        sol.stakes()[i] > 0.0,
                    );
                }
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------
// build-book / optimize-tickets

/// Tickets sorted by descending stake, ties broken lexicographically.
fn sorted_by_stake(book: &TicketBook) -> Vec<(crate::book::Ticket, f64)> {
    let mut rows: Vec<_> = book.stakes().iter().map(|(t, &x)| (t.clone(), x)).collect();
    rows.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    rows
}

fn book_table(book: &TicketBook, markets: &MarketSet, min_stake: f64) -> Result<String> {
    let mut out = String::new();
    let names: Vec<&str> = markets.events().iter().map(Event::name).collect();
    writeln!(
        out,
        "  {:<24} {:>10} {:>10}",
        names.join(" / "),
        "stake",
        "price"
    )
    .unwrap();
    for (ticket, stake) in sorted_by_stake(book) {
        if stake < min_stake {
            continue;
        }
        let legs: Vec<String> = ticket
            .legs()
            .iter()
            .enumerate()
            .map(|(j, leg)| match leg {
                None => "-".to_string(),
                Some(i) => markets.events()[j].labels()[*i].clone(),
            })
            .collect();
        writeln!(
            out,
            "  {:<24} {:>10.6} {:>10.6}",
            legs.join(" / "),
            stake,
            crate::book::ticket_price(&ticket, markets)?,
        )
        .unwrap();
    }
    Ok(out)
}

fn cmd_build_book(args: &CommonArgs) -> Result<()> {
    args.validate()?;
    let markets = read_markets(&args.input)?;
    let book = build_optimal_book(&markets)?;
    let v_par = crate::book::parlay_growth(&markets)?;
    let (scale, unit) = args.units();

    match args.format {
        Format::Table => {
            println!("optimal parlay book ({} tickets)", book.stakes().len());
            print!("{}", book_table(&book, &markets, args.min_stake)?);
            println!("v_par = {:.7} {unit}", v_par * scale);
        }
        Format::Json => {
            let mut value = book_to_json_value(&book, &markets)?;
            value["v_par"] = json!(v_par * scale);
            value["units"] = json!(unit);
            print_json(&value);
        }
        Format::Csv => print!("{}", book_to_csv(&book, &markets)?),
    }
    Ok(())
}

fn cmd_optimize_tickets(args: &CommonArgs) -> Result<()> {
    args.validate()?;
    let markets = read_markets(&args.input)?;
    let caps = args.caps();
    let oracle = optimize_ticket_space(&markets, args.tol, args.max_iter, &caps)?;
    let (scale, unit) = args.units();

    match args.format {
        Format::Table => {
            println!(
                "ticket-space optimum ({} iterations, certificate {:.3e})",
                oracle.iterations, oracle.certificate
            );
            print!("{}", book_table(&oracle.book, &markets, args.min_stake)?);
            println!("objective = {:.7} {unit}", oracle.objective * scale);
        }
        Format::Json => {
            let mut value = book_to_json_value(&oracle.book, &markets)?;
            value["objective"] = json!(oracle.objective * scale);
            value["certificate"] = json!(oracle.certificate);
            value["iterations"] = json!(oracle.iterations);
            value["units"] = json!(unit);
            print_json(&value);
        }
        Format::Csv => print!("{}", book_to_csv(&oracle.book, &markets)?),
    }
    Ok(())
}

// ---------------------------------------------------------------------
// optimize-singles

fn cmd_optimize_singles(args: &CommonArgs) -> Result<()> {
    args.validate()?;
    let markets = read_markets(&args.input)?;
    let caps = args.caps();
    let sol = optimize_singles(&markets, args.tol, args.max_iter, &caps)?;
    let (scale, unit) = args.units();

    match args.format {
        Format::Table => {
            println!(
                "singles-only optimum ({} iterations, residual {:.3e})",
                sol.iterations(),
                sol.kkt_residual()
            );
            println!("  {:<12} {:<10} {:>10}", "event", "outcome", "stake");
            for (event, stakes) in markets.events().iter().zip(sol.stakes()) {
                for (label, stake) in event.labels().iter().zip(stakes) {
                    println!("  {:<12} {:<10} {:>10.6}", event.name(), label, stake);
                }
            }
            println!("  cash {:.6}", sol.cash());
            println!("v_sing = {:.7} {unit}", sol.objective() * scale);
        }
        Format::Json => {
            let events: Vec<Value> = markets
                .events()
                .iter()
                .zip(sol.stakes())
                .map(|(event, stakes)| {
                    json!({
                        "name": event.name(),
                        "stakes": (0..event.len()).map(|i| json!({
                            "label": event.labels()[i],
                            "stake": stakes[i],
                        })).collect::<Vec<_>>(),
                    })
                })
                .collect();
            print_json(&json!({
                "events": events,
                "cash": sol.cash(),
                "v_sing": sol.objective() * scale,
                "kkt_residual": sol.kkt_residual(),
                "iterations": sol.iterations(),
                "units": unit,
            }));
        }
        Format::Csv => {
            println!("event,label,stake");
            for (event, stakes) in markets.events().iter().zip(sol.stakes()) {
                for (label, stake) in event.labels().iter().zip(stakes) {
                    println!("{},{},{}", event.name(), label, stake);
                }
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------
// compare

fn cmd_compare(args: &CommonArgs) -> Result<()> {
    args.validate()?;
    let markets = read_markets(&args.input)?;
    let caps = args.caps();
    let report = growth_gap(&markets, args.tol, args.max_iter, &caps)?;
    let solutions = solve_all(&markets)?;
    let single_reports: Vec<SingleKktReport> = markets
        .events()
        .iter()
        .zip(&solutions)
        .map(|(e, s)| verify_single_kkt(e, s))
        .collect();
    let book = build_optimal_book(&markets)?;
    let ticket_report = verify_ticket_kkt(&book, &markets, &caps)?;
    let (scale, unit) = args.units();

    match args.format {
        Format::Table => {
            println!("v_par  = {:.7} {unit}", report.v_par * scale);
            println!("v_sing = {:.7} {unit}", report.v_sing * scale);
            println!("gap    = {:.3e} {unit}", report.gap * scale);
            for (event, r) in markets.events().iter().zip(&single_reports) {
                println!(
                    "single kkt {}: {} (E[1/W] residual {:.2e})",
                    event.name(),
                    if r.pass { "pass" } else { "FAIL" },
                    r.expectation_residual
                );
            }
            println!(
                "ticket kkt: {} ({} tickets, max on-support residual {:.2e})",
                if ticket_report.pass { "pass" } else { "FAIL" },
                ticket_report.checked_tickets,
                ticket_report.on_support_max_residual
            );
        }
        Format::Json => {
            print_json(&json!({
                "v_par": report.v_par * scale,
                "v_sing": report.v_sing * scale,
                "gap": report.gap * scale,
                "single_kkt": markets.events().iter().zip(&single_reports).map(|(e, r)| {
                    let mut v = single_kkt_json(r);
                    v["event"] = json!(e.name());
                    v
                }).collect::<Vec<_>>(),
                "ticket_kkt": ticket_kkt_json(&ticket_report),
                "units": unit,
            }));
        }
        Format::Csv => {
            println!("quantity,value");
            println!("v_par,{}", report.v_par * scale);
            println!("v_sing,{}", report.v_sing * scale);
            println!("gap,{}", report.gap * scale);
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------
// verify

fn cmd_verify(args: &VerifyArgs) -> Result<bool> {
    args.common.validate()?;
    let markets = read_markets(&args.common.input)?;
    let book = parse_book_json(&std::fs::read_to_string(&args.book)?, &markets)?;
    let caps = args.common.caps();

    let solutions = solve_all(&markets)?;
    let single_reports: Vec<SingleKktReport> = markets
        .events()
        .iter()
        .zip(&solutions)
        .map(|(e, s)| verify_single_kkt(e, s))
        .collect();
    let ticket_report = verify_ticket_kkt(&book, &markets, &caps)?;
    let objective = book_objective(&book, &markets, &caps)?;
    let pass = ticket_report.pass && single_reports.iter().all(|r| r.pass);

    match args.common.format {
        Format::Table => {
            for (event, r) in markets.events().iter().zip(&single_reports) {
                println!(
                    "single kkt {}: {} (E[1/W] residual {:.2e}, inactive margin {:.2e})",
                    event.name(),
                    if r.pass { "pass" } else { "FAIL" },
                    r.expectation_residual,
                    r.inactive_margin
                );
            }
            println!(
                "ticket kkt: {} ({} tickets, {} violations)",
                if ticket_report.pass { "pass" } else { "FAIL" },
                ticket_report.checked_tickets,
                ticket_report.violation_count
            );
            for v in &ticket_report.violations {
                println!(
                    "  violation {:?}: stake {:.6e}, gradient {:.12}, {:?}",
                    v.ticket.legs(),
                    v.stake,
                    v.gradient,
                    v.kind
                );
            }
            println!("book objective = {objective:.7} nats");
            println!("verification: {}", if pass { "pass" } else { "FAIL" });
        }
        Format::Json | Format::Csv => {
            print_json(&json!({
                "single_kkt": markets.events().iter().zip(&single_reports).map(|(e, r)| {
                    let mut v = single_kkt_json(r);
                    v["event"] = json!(e.name());
                    v
                }).collect::<Vec<_>>(),
                "ticket_kkt": ticket_kkt_json(&ticket_report),
                "objective": objective,
                "pass": pass,
            }));
        }
    }
    Ok(pass)
}

// ---------------------------------------------------------------------
// sweep

fn sweep_json(summary: &SweepSummary, scale: f64) -> Value {
    json!({
        "fits": {
            "delta_slope": summary.delta_fit.slope,
            "gap_slope": summary.gap_fit.slope,
            "residual_slopes": summary.residual_fits.iter().map(|f| f.slope).collect::<Vec<_>>(),
            "sextic_slope": summary.sextic_fit.map(|f| f.slope),
            "sextic_below_noise_floor": summary.sextic_below_noise_floor,
        },
        "delta_ratio_at_smallest": summary.delta_ratio_at_smallest,
        "residual_ratio_at_smallest": summary.residual_ratio_at_smallest,
        "records": summary.records.iter().map(|r| json!({
            "eps": r.eps,
            "x_ind": r.x_ind,
            "x_sim": r.x_sim,
            "delta": r.delta,
            "predicted_delta": r.predicted_delta,
            "v_par": r.v_par * scale,
            "v_sing": r.v_sing * scale,
            "gap": r.gap * scale,
            "residual": r.kkt_residual_at_isolated,
            "predicted_residual": r.predicted_residual,
            "singles_value_at_isolated": r.singles_value_at_isolated * scale,
            "support_ok": r.support_ok,
        })).collect::<Vec<_>>(),
    })
}

fn cmd_sweep(args: &CommonArgs) -> Result<()> {
    args.validate()?;
    let family = read_family(&args.input)?;
    let caps = args.caps();
    let summary = shrinkage_sweep(&family, &default_eps_grid(&family), &caps)?;
    let sextic = shrinkage_sweep(&family, &sextic_eps_grid(&family), &caps)?;
    let (scale, unit) = args.units();

    match args.format {
        Format::Table => {
            println!(
                "shrinkage sweep: {} events, eps_max {:.6}",
                family.len(),
                family.eps_max()
            );
            println!(
                "  slope ||x_sim - x_ind||      = {:+.4}  (cubic predicted)",
                summary.delta_fit.slope
            );
            println!(
                "  slope v_par - v_sing         = {:+.4}  (quartic predicted)",
                summary.gap_fit.slope
            );
            for (j, fit) in summary.residual_fits.iter().enumerate() {
                println!(
                    "  {:<28} = {:+.4}  (cubic predicted)",
                    format!("slope ||F_{}(x_ind)||", j + 1),
                    fit.slope
                );
            }
            match (&sextic.sextic_fit, sextic.sextic_below_noise_floor) {
                (Some(fit), _) => println!(
                    "  slope G(x_sim) - G(x_ind)    = {:+.4}  (sextic predicted, larger grid)",
                    fit.slope
                ),
                (None, true) => {
                    println!("  sextic check skipped: below noise floor on the larger grid")
                }
                (None, false) => {}
            }
            println!("  delta/prediction at smallest eps:");
            for (j, ratios) in summary.delta_ratio_at_smallest.iter().enumerate() {
                let formatted: Vec<String> = ratios.iter().map(|r| format!("{r:+.4}")).collect();
                println!("    event {}: {}", j + 1, formatted.join(" "));
            }
            println!("  records ({unit}):");
            println!(
                "    {:>10} {:>13} {:>13} {:>11} {:>8}",
                "eps", "v_par", "v_sing", "gap", "support"
            );
            for r in &summary.records {
                println!(
                    "    {:>10.6} {:>13.7} {:>13.7} {:>11.4e} {:>8}",
                    r.eps,
                    r.v_par * scale,
                    r.v_sing * scale,
                    r.gap * scale,
                    if r.support_ok { "ok" } else { "broken" }
                );
            }
        }
        Format::Json => {
            print_json(&json!({
                "eps_max": family.eps_max(),
                "default_grid": sweep_json(&summary, scale),
                "sextic_grid": sweep_json(&sextic, scale),
                "units": unit,
            }));
        }
        Format::Csv => {
            println!(
                "eps,event,coord,x_ind,x_sim,delta,predicted_delta,v_par,v_sing,gap,residual,predicted_residual"
            );
            for r in &summary.records {
                for (j, fe) in family.events().iter().enumerate() {
                    for (k, &coord) in fe.support().iter().enumerate() {
                        println!(
                            "{},{},{},{},{},{},{},{},{},{},{},{}",
                            r.eps,
                            j + 1,
                            coord + 1,
                            r.x_ind[j][k],
                            r.x_sim[j][k],
                            r.delta[j][k],
                            r.predicted_delta[j][k],
                            r.v_par * scale,
                            r.v_sing * scale,
                            r.gap * scale,
                            r.kkt_residual_at_isolated[j][k],
                            r.predicted_residual[j][k],
                        );
                    }
                }
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------
// gen

/// Uniform draw in the open interval (0, 1), built directly from the top
/// 53 bits so the stream is stable across platforms.
fn unit_open(rng: &mut ChaCha8Rng) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / 9_007_199_254_740_992.0)
}

/// Positive vector summing to 1 (exponential draws, normalized).
fn random_simplex(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n).map(|_| -unit_open(rng).ln()).collect();
    let total: f64 = v.iter().sum();
    for x in &mut v {
        *x /= total;
    }
    v
}

/// Generate one random event with target overround drawn from
/// `[lo, hi]`, rejection-sampling until the event is well-conditioned and
/// has a positive-cash optimum.
pub fn random_event(rng: &mut ChaCha8Rng, name: &str, outcomes: usize, lo: f64, hi: f64) -> Event {
    loop {
        let probs = random_simplex(rng, outcomes);
        if probs.iter().any(|&p| p < 0.02) {
            continue;
        }
        let overround = lo + unit_open(rng) * (hi - lo);
        let mut prices = random_simplex(rng, outcomes);
        for q in &mut prices {
            *q *= overround;
        }
        if prices.iter().any(|&q| q < 0.02) {
            continue;
        }
        let labels = (1..=outcomes).map(|i| format!("o{i}")).collect();
        let event = match Event::with_labels(name, labels, probs, prices) {
            Ok(e) => e,
            Err(_) => continue,
        };
        if solve_single_event(&event).is_ok() {
            return event;
        }
    }
}

/// Seeded random solvable market set.
pub fn random_markets(
    seed: u64,
    events: usize,
    outcomes: usize,
    lo: f64,
    hi: f64,
) -> Result<MarketSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let events = (1..=events)
        .map(|j| random_event(&mut rng, &format!("e{j}"), outcomes, lo, hi))
        .collect();
    MarketSet::new(events)
}

fn cmd_gen(args: &GenArgs) -> Result<()> {
    if args.events == 0 {
        return Err(Error::Validation("--events must be positive".into()));
    }
    if args.outcomes < 2 {
        return Err(Error::Validation("--outcomes must be at least 2".into()));
    }
    if !(args.overround_min > 0.0 && args.overround_min <= args.overround_max) {
        return Err(Error::Validation(format!(
            "invalid overround range [{}, {}]",
            args.overround_min, args.overround_max
        )));
    }
    let markets = random_markets(
        args.seed,
        args.events,
        args.outcomes,
        args.overround_min,
        args.overround_max,
    )?;
    print_json(&market_to_json_value(&markets));
    Ok(())
}
