//! Exact single-event Kelly solver in implicit-cash form.
//!
//! Cash is an implicit claim paying 1 in every state, so a cash level `c`
//! floors terminal wealth: `W_i = c + s_i/π_i`. The optimum has
//! `s*_i = (p_i − c*π_i)_+` and `W*_i = max(c*, p_i/π_i)`, where the cash
//! level solves `c* = (1 − P_A)/(1 − Q_A)` over the active prefix of
//! outcomes sorted by edge ratio.

use crate::error::{Error, Result};
use crate::market::Event;

/// Relative slack used when comparing an edge ratio against the running
/// cash level. Outcomes sitting exactly on the boundary `p_i = c π_i`
/// (common in symmetric constructions) are reported inactive; without the
/// slack, round-off would flip their membership nondeterministically.
pub const ACTIVATION_SLACK: f64 = 1e-12;

/// The closed-form single-event optimum.
#[derive(Debug, Clone)]
pub struct SingleEventSolution {
    event_name: String,
    cash: f64,
    stakes: Vec<f64>,
    active_set: Vec<usize>,
    active_prob_mass: f64,
    active_price_mass: f64,
    wealth: Vec<f64>,
    multiplier: f64,
}

impl SingleEventSolution {
    pub fn event_name(&self) -> &str {
        &self.event_name
    }

    /// Optimal cash level `c*` in `(0, 1]`.
    pub fn cash(&self) -> f64 {
        self.cash
    }

    /// Stakes `s*_i` in original outcome order; zero off the active set.
    pub fn stakes(&self) -> &[f64] {
        &self.stakes
    }

    /// Indices with strictly positive stake, ascending.
    pub fn active_set(&self) -> &[usize] {
        &self.active_set
    }

    /// `P_A = ∑_{i∈A} p_i`.
    pub fn active_prob_mass(&self) -> f64 {
        self.active_prob_mass
    }

    /// `Q_A = ∑_{i∈A} π_i`.
    pub fn active_price_mass(&self) -> f64 {
        self.active_price_mass
    }

    /// Terminal wealth `W*_i = max(c*, p_i/π_i)` per outcome.
    pub fn wealth(&self) -> &[f64] {
        &self.wealth
    }

    /// Budget multiplier; equals 1 at the optimum.
    pub fn multiplier(&self) -> f64 {
        self.multiplier
    }

    pub fn is_all_cash(&self) -> bool {
        self.active_set.is_empty()
    }

    /// One-event wealth factor `F(i) = c* + s*_i/π_i`.
    pub fn wealth_factor(&self, outcome: usize) -> Result<f64> {
        self.wealth
            .get(outcome)
            .copied()
            .ok_or_else(|| Error::IndexOutOfRange {
                event: self.event_name.clone(),
                index: outcome,
                len: self.wealth.len(),
            })
    }
}

/// Solve one event exactly.
///
/// Outcomes are sorted by `p_i/π_i` descending (stable, ties by original
/// index) and prefixes are scanned: a prefix of size `k` has cash level
/// `c_k = (1 − P_k)/(1 − Q_k)`, and the scan extends while the next
/// outcome's ratio strictly exceeds the running cash level. The empty
/// prefix gives the all-cash solution `c* = 1`.
///
/// Errors with [`Error::NoPositiveCash`] when the scan drives `Q_A >= 1`
/// or activates every outcome: in either case the positive-cash
/// assumption fails and the optimum would invest the whole bankroll.
pub fn solve_single_event(event: &Event) -> Result<SingleEventSolution> {
    let n = event.len();
    let probs = event.probs();
    let prices = event.prices();
    let ratios = event.edge_ratios();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| ratios[b].partial_cmp(&ratios[a]).unwrap().then(a.cmp(&b)));

    let mut cash = 1.0;
    let mut prob_mass = 0.0;
    let mut price_mass = 0.0;
    let mut active_len = 0;
    while active_len < n {
        let i = order[active_len];
        if ratios[i] <= cash * (1.0 + ACTIVATION_SLACK) {
            break;
        }
        prob_mass += probs[i];
        price_mass += prices[i];
        if price_mass >= 1.0 {
            return Err(Error::NoPositiveCash(event.name().to_string()));
        }
        cash = (1.0 - prob_mass) / (1.0 - price_mass);
        active_len += 1;
    }
    if active_len == n {
        // Full active set means P_A = 1 and c* = 0.
        return Err(Error::NoPositiveCash(event.name().to_string()));
    }

    let mut stakes = vec![0.0; n];
    for &i in &order[..active_len] {
        stakes[i] = probs[i] - cash * prices[i];
    }
    let wealth: Vec<f64> = (0..n).map(|i| cash + stakes[i] / prices[i]).collect();
    let mut active_set: Vec<usize> = order[..active_len].to_vec();
    active_set.sort_unstable();

    Ok(SingleEventSolution {
        event_name: event.name().to_string(),
        cash,
        stakes,
        active_set,
        active_prob_mass: prob_mass,
        active_price_mass: price_mass,
        wealth,
        multiplier: 1.0,
    })
}

/// Expected log wealth of the solution, `∑_i p_i log W*_i`, in nats.
pub fn single_event_growth(event: &Event, sol: &SingleEventSolution) -> f64 {
    event
        .probs()
        .iter()
        .zip(sol.wealth())
        .map(|(p, w)| p * w.ln())
        .sum()
}

/// First-order optimality report for a single-event solution.
#[derive(Debug, Clone)]
pub struct SingleKktReport {
    /// `|E[1/W*] − 1|`.
    pub expectation_residual: f64,
    /// `max_{i∈A} |p_i/(π_i W*_i) − 1|`.
    pub active_residual: f64,
    /// `max_{i∉A} (p_i/(π_i W*_i) − 1)`; negative away from boundary ties.
    pub inactive_margin: f64,
    /// `|c + ∑ s_i − 1|`.
    pub budget_residual: f64,
    pub tol: f64,
    pub pass: bool,
}

/// Default tolerance for KKT verification reports.
pub const VERIFY_TOL: f64 = 1e-10;

/// Check the stationarity conditions `E[1/W*] = 1`, `p_i/(π_i W*_i) = 1`
/// on the active set, `<= 1` off it, plus the budget identity.
///
/// Boundary outcomes (`p_i = c*π_i` exactly) are inactive with margin 0,
/// so the inactive condition is tested as `margin <= tol` rather than
/// strict negativity.
pub fn verify_single_kkt(event: &Event, sol: &SingleEventSolution) -> SingleKktReport {
    verify_single_kkt_with_tol(event, sol, VERIFY_TOL)
}

pub fn verify_single_kkt_with_tol(
    event: &Event,
    sol: &SingleEventSolution,
    tol: f64,
) -> SingleKktReport {
    let probs = event.probs();
    let prices = event.prices();
    let mut inv_wealth_expectation = 0.0;
    let mut active_residual: f64 = 0.0;
    let mut inactive_margin = f64::NEG_INFINITY;
    for i in 0..event.len() {
        let w = sol.wealth()[i];
        inv_wealth_expectation += probs[i] / w;
        let ratio = probs[i] / (prices[i] * w);
        if sol.stakes()[i] > 0.0 {
            active_residual = active_residual.max((ratio - 1.0).abs());
        } else {
            inactive_margin = inactive_margin.max(ratio - 1.0);
        }
    }
    if inactive_margin == f64::NEG_INFINITY {
        inactive_margin = 0.0;
    }
    let expectation_residual = (inv_wealth_expectation - 1.0).abs();
    let budget_residual = (sol.cash() + sol.stakes().iter().sum::<f64>() - 1.0).abs();
    let pass = expectation_residual <= tol
        && active_residual <= tol
        && inactive_margin <= tol
        && budget_residual <= tol;
    SingleKktReport {
        expectation_residual,
        active_residual,
        inactive_margin,
        budget_residual,
        tol,
        pass,
    }
}
