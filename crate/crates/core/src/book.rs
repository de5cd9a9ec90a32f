//! The full ticket menu and the exact optimal parlay book.
//!
//! A ticket selects one outcome in each of a subset of events (omitted
//! legs are `None`) and pays `stake/π_γ` when every selected leg wins,
//! where `π_γ` is the product of the selected-leg prices. The optimal
//! book over the whole menu is the outer product of the one-event Kelly
//! strategies: `x*_γ = ∏_{ℓ omitted} c*_ℓ · ∏_{ℓ selected} s*_{ℓ,γ_ℓ}`,
//! and its terminal wealth factorizes as `W(I) = ∏_ℓ F_ℓ(I_ℓ)`.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::joint::{check_state_cap, for_each_state};
use crate::market::MarketSet;
use crate::single::{single_event_growth, solve_single_event, SingleEventSolution, VERIFY_TOL};
use crate::Caps;

/// A selection vector over the events: `None` omits the event, `Some(i)`
/// backs outcome `i` (0-based). Ordering is lexicographic with omission
/// smallest, which makes book iteration deterministic.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Ticket {
    legs: Vec<Option<usize>>,
}

impl Ticket {
    pub fn new(legs: Vec<Option<usize>>) -> Self {
        Ticket { legs }
    }

    /// The pure-cash ticket omitting every event.
    pub fn cash(m: usize) -> Self {
        Ticket {
            legs: vec![None; m],
        }
    }

    pub fn legs(&self) -> &[Option<usize>] {
        &self.legs
    }

    pub fn is_cash(&self) -> bool {
        self.legs.iter().all(Option::is_none)
    }

    /// Number of selected legs.
    pub fn arity(&self) -> usize {
        self.legs.iter().filter(|l| l.is_some()).count()
    }

    /// Does this ticket pay at joint outcome `state`?
    pub fn matches(&self, state: &[usize]) -> bool {
        self.legs
            .iter()
            .zip(state)
            .all(|(leg, &i)| leg.is_none_or(|g| g == i))
    }

    fn validate(&self, markets: &MarketSet) -> Result<()> {
        if self.legs.len() != markets.len() {
            return Err(Error::Validation(format!(
                "ticket has {} legs, market set has {} events",
                self.legs.len(),
                markets.len()
            )));
        }
        for (j, leg) in self.legs.iter().enumerate() {
            if let Some(i) = leg {
                let event = &markets.events()[j];
                if *i >= event.len() {
                    return Err(Error::IndexOutOfRange {
                        event: event.name().to_string(),
                        index: *i,
                        len: event.len(),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Product of the selected-leg prices; 1 for the pure-cash ticket.
pub fn ticket_price(ticket: &Ticket, markets: &MarketSet) -> Result<f64> {
    ticket.validate(markets)?;
    let mut price = 1.0;
    for (j, leg) in ticket.legs().iter().enumerate() {
        if let Some(i) = leg {
            price *= markets.events()[j].prices()[*i];
        }
    }
    Ok(price)
}

/// Number of tickets in the full menu, `∏ (n_ℓ + 1)`.
pub fn ticket_count(markets: &MarketSet) -> u128 {
    markets
        .events()
        .iter()
        .map(|e| e.len() as u128 + 1)
        .product()
}

/// All `∏(n_ℓ + 1)` tickets in lexicographic order (omit < 1 < 2 < ...).
pub fn enumerate_tickets(markets: &MarketSet, cap: usize) -> Result<Vec<Ticket>> {
    let required = ticket_count(markets);
    if required > cap as u128 {
        return Err(Error::MenuTooLarge { required, cap });
    }
    let sizes = markets.sizes();
    let m = sizes.len();
    let mut tickets = Vec::with_capacity(required as usize);
    let mut legs: Vec<Option<usize>> = vec![None; m];
    loop {
        tickets.push(Ticket::new(legs.clone()));
        let mut k = m;
        loop {
            if k == 0 {
                return Ok(tickets);
            }
            k -= 1;
            legs[k] = match legs[k] {
                None => Some(0),
                Some(i) if i + 1 < sizes[k] => Some(i + 1),
                Some(_) => None,
            };
            if legs[k].is_some() {
                break;
            }
        }
    }
}

/// An allocation of the bankroll across tickets. Sparse: only strictly
/// positive stakes are stored; every other ticket implicitly holds zero.
#[derive(Debug, Clone, PartialEq)]
pub struct TicketBook {
    stakes: BTreeMap<Ticket, f64>,
}

impl TicketBook {
    /// Build from explicit stakes, validating nonnegativity and the unit
    /// budget `∑ x_γ = 1` (within 1e-12). Exact zeros are dropped.
    pub fn from_stakes(stakes: BTreeMap<Ticket, f64>) -> Result<Self> {
        let mut total = 0.0;
        for (ticket, &x) in &stakes {
            if !x.is_finite() || x < 0.0 {
                return Err(Error::Validation(format!(
                    "ticket {:?} has invalid stake {x}",
                    ticket.legs()
                )));
            }
            total += x;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Validation(format!(
                "book stakes sum to {total}, expected 1"
            )));
        }
        let stakes = stakes.into_iter().filter(|(_, x)| *x > 0.0).collect();
        Ok(TicketBook { stakes })
    }

    /// Stakes in lexicographic ticket order.
    pub fn stakes(&self) -> &BTreeMap<Ticket, f64> {
        &self.stakes
    }

    pub fn stake(&self, ticket: &Ticket) -> f64 {
        self.stakes.get(ticket).copied().unwrap_or(0.0)
    }

    pub fn total_stake(&self) -> f64 {
        self.stakes.values().sum()
    }

    /// Tickets holding strictly positive stake, in lexicographic order.
    pub fn active_tickets(&self) -> Vec<Ticket> {
        self.stakes.keys().cloned().collect()
    }
}

/// The exact optimal book: outer product of the per-event solutions.
///
/// Only the support is materialized (`∏(|A_ℓ| + 1)` tickets); all other
/// stakes are exact zeros.
pub fn build_optimal_book(markets: &MarketSet) -> Result<TicketBook> {
    let solutions = solve_all(markets)?;
    Ok(outer_product_book(&solutions))
}

/// Solve every event, propagating the offending event's name on failure.
pub fn solve_all(markets: &MarketSet) -> Result<Vec<SingleEventSolution>> {
    markets.events().iter().map(solve_single_event).collect()
}

fn outer_product_book(solutions: &[SingleEventSolution]) -> TicketBook {
    let mut partial: Vec<(Vec<Option<usize>>, f64)> = vec![(Vec::new(), 1.0)];
    for sol in solutions {
        let mut next = Vec::with_capacity(partial.len() * (sol.active_set().len() + 1));
        for (legs, weight) in &partial {
            let mut cash_legs = legs.clone();
            cash_legs.push(None);
            next.push((cash_legs, weight * sol.cash()));
            for &i in sol.active_set() {
                let mut sel = legs.clone();
                sel.push(Some(i));
                next.push((sel, weight * sol.stakes()[i]));
            }
        }
        partial = next;
    }
    let stakes = partial
        .into_iter()
        .map(|(legs, x)| (Ticket::new(legs), x))
        .collect();
    TicketBook { stakes }
}

/// Terminal wealth of a book at a realized joint outcome:
/// `W(I) = ∑_{γ ⪯ I} x_γ/π_γ` over compatible tickets.
pub fn book_wealth(book: &TicketBook, markets: &MarketSet, state: &[usize]) -> Result<f64> {
    if state.len() != markets.len() {
        return Err(Error::Validation(format!(
            "outcome vector has {} entries, market set has {} events",
            state.len(),
            markets.len()
        )));
    }
    for (j, &i) in state.iter().enumerate() {
        let event = &markets.events()[j];
        if i >= event.len() {
            return Err(Error::IndexOutOfRange {
                event: event.name().to_string(),
                index: i,
                len: event.len(),
            });
        }
    }
    let mut wealth = 0.0;
    for (ticket, &x) in book.stakes() {
        if ticket.matches(state) {
            wealth += x / ticket_price(ticket, markets)?;
        }
    }
    Ok(wealth)
}

/// The optimal growth rate `V_par = ∑_ℓ E[log F_ℓ(I_ℓ)]` in nats.
pub fn parlay_growth(markets: &MarketSet) -> Result<f64> {
    let solutions = solve_all(markets)?;
    Ok(markets
        .events()
        .iter()
        .zip(&solutions)
        .map(|(e, s)| single_event_growth(e, s))
        .sum())
}

/// Exact expected log wealth of an arbitrary book, by full enumeration.
pub fn book_objective(book: &TicketBook, markets: &MarketSet, caps: &Caps) -> Result<f64> {
    let wealth = wealth_table(book, markets, caps)?;
    let mut objective = 0.0;
    let mut flat = 0usize;
    let mut infeasible: Option<Vec<usize>> = None;
    for_each_state(markets, |state, prob| {
        let w = wealth[flat];
        if w <= 0.0 {
            infeasible.get_or_insert_with(|| state.to_vec());
        } else {
            objective += prob * w.ln();
        }
        flat += 1;
    });
    if let Some(state) = infeasible {
        let w = book_wealth(book, markets, &state)?;
        return Err(Error::InfeasibleStakes { state, wealth: w });
    }
    Ok(objective)
}

/// Wealth at every joint state, indexed by lexicographic flat state index.
fn wealth_table(book: &TicketBook, markets: &MarketSet, caps: &Caps) -> Result<Vec<f64>> {
    let states = check_state_cap(markets, caps.max_states)?;
    let sizes = markets.sizes();
    let m = sizes.len();
    let mut strides = vec![1usize; m];
    for j in (0..m.saturating_sub(1)).rev() {
        strides[j] = strides[j + 1] * sizes[j + 1];
    }
    let mut wealth = vec![0.0; states];
    for (ticket, &x) in book.stakes() {
        ticket.validate(markets)?;
        let payout = x / ticket_price(ticket, markets)?;
        // Add the payout to every compatible state via an odometer over
        // the omitted events.
        let omitted: Vec<usize> = (0..m).filter(|&j| ticket.legs()[j].is_none()).collect();
        let base: usize = (0..m)
            .filter_map(|j| ticket.legs()[j].map(|i| i * strides[j]))
            .sum();
        let mut idx = vec![0usize; omitted.len()];
        loop {
            let flat = base
                + omitted
                    .iter()
                    .zip(&idx)
                    .map(|(&j, &i)| i * strides[j])
                    .sum::<usize>();
            wealth[flat] += payout;
            let mut k = omitted.len();
            loop {
                if k == 0 {
                    break;
                }
                k -= 1;
                idx[k] += 1;
                if idx[k] < sizes[omitted[k]] {
                    break;
                }
                idx[k] = 0;
            }
            if idx.iter().all(|&i| i == 0) {
                break;
            }
        }
    }
    Ok(wealth)
}

/// Status of one outcome in its event's single-event optimum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum LegStatus {
    Active,
    /// Zero stake with `p_i = c*π_i` up to round-off; the strict KKT
    /// inequality degenerates to equality on these.
    Boundary,
    StrictlyInactive,
}

fn classify_legs(markets: &MarketSet, solutions: &[SingleEventSolution]) -> Vec<Vec<LegStatus>> {
    markets
        .events()
        .iter()
        .zip(solutions)
        .map(|(event, sol)| {
            let ratios = event.edge_ratios();
            (0..event.len())
                .map(|i| {
                    if sol.stakes()[i] > 0.0 {
                        LegStatus::Active
                    } else if ratios[i] >= sol.cash() * (1.0 - 1e-9) {
                        LegStatus::Boundary
                    } else {
                        LegStatus::StrictlyInactive
                    }
                })
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TicketViolationKind {
    /// A supported ticket's gradient differs from 1 beyond tolerance.
    OnSupportResidual,
    /// An unsupported ticket's gradient exceeds 1 beyond tolerance.
    OffSupportHigh,
    /// A ticket with a strictly inactive leg fails `g < 1 − margin`.
    StrictInactiveNotBelowOne,
}

#[derive(Debug, Clone)]
pub struct TicketViolation {
    pub ticket: Ticket,
    pub stake: f64,
    pub gradient: f64,
    pub kind: TicketViolationKind,
}

/// Result of checking the ticket-space KKT system over the entire menu.
#[derive(Debug, Clone)]
pub struct TicketKktReport {
    /// Budget multiplier; 1 at an optimum.
    pub multiplier: f64,
    pub tol: f64,
    /// Margin used to certify strict inequality in floating point.
    pub strict_margin: f64,
    pub checked_tickets: usize,
    /// `max |g_γ − 1|` over supported tickets.
    pub on_support_max_residual: f64,
    /// `max g_γ` over unsupported tickets; `-inf` when the support is full.
    pub off_support_max_g: f64,
    /// Every off-support ticket containing a strictly inactive leg
    /// satisfied `g_γ < 1 − strict_margin`.
    pub strict_ok: bool,
    /// First violations in lexicographic ticket order (capped).
    pub violations: Vec<TicketViolation>,
    /// Total violation count, including those not listed.
    pub violation_count: usize,
    pub pass: bool,
}

const MAX_LISTED_VIOLATIONS: usize = 64;

/// Margin for testing the strict off-support inequality `g_γ < 1`.
pub const STRICT_MARGIN: f64 = 1e-12;

/// Verify the first-order conditions of a book over every ticket in the
/// menu: `g_γ = E[1_{γ⪯I}/(π_γ W(I))]` must equal 1 (within `tol`) on the
/// support and stay `<= 1` off it, strictly below 1 whenever the ticket
/// backs a strictly inactive leg. Expectations are exact.
pub fn verify_ticket_kkt(
    book: &TicketBook,
    markets: &MarketSet,
    caps: &Caps,
) -> Result<TicketKktReport> {
    verify_ticket_kkt_with_tol(book, markets, caps, VERIFY_TOL)
}

pub fn verify_ticket_kkt_with_tol(
    book: &TicketBook,
    markets: &MarketSet,
    caps: &Caps,
    tol: f64,
) -> Result<TicketKktReport> {
    let tickets = enumerate_tickets(markets, caps.max_tickets)?;
    let wealth = wealth_table(book, markets, caps)?;
    let solutions = solve_all(markets)?;
    let statuses = classify_legs(markets, &solutions);

    // Reject books that leave some state worthless; log-wealth KKT is
    // meaningless there.
    {
        let mut flat = 0usize;
        let mut bad: Option<(Vec<usize>, f64)> = None;
        for_each_state(markets, |state, _| {
            if wealth[flat] <= 0.0 && bad.is_none() {
                bad = Some((state.to_vec(), wealth[flat]));
            }
            flat += 1;
        });
        if let Some((state, w)) = bad {
            return Err(Error::InfeasibleStakes { state, wealth: w });
        }
    }

    let sizes = markets.sizes();
    let m = sizes.len();
    let mut strides = vec![1usize; m];
    for j in (0..m.saturating_sub(1)).rev() {
        strides[j] = strides[j + 1] * sizes[j + 1];
    }

    let mut report = TicketKktReport {
        multiplier: 1.0,
        tol,
        strict_margin: STRICT_MARGIN,
        checked_tickets: tickets.len(),
        on_support_max_residual: 0.0,
        off_support_max_g: f64::NEG_INFINITY,
        strict_ok: true,
        violations: Vec::new(),
        violation_count: 0,
        pass: true,
    };

    for ticket in &tickets {
        let price = ticket_price(ticket, markets)?;
        // g = sum over compatible states of P(I) / (π_γ W(I)); selected
        // legs contribute fixed probability factors, omitted legs are
        // enumerated.
        let omitted: Vec<usize> = (0..m).filter(|&j| ticket.legs()[j].is_none()).collect();
        let mut selected_prob = 1.0;
        let mut base = 0usize;
        for (j, leg) in ticket.legs().iter().enumerate() {
            if let Some(i) = leg {
                selected_prob *= markets.events()[j].probs()[*i];
                base += i * strides[j];
            }
        }
        let mut gradient = 0.0;
        let mut idx = vec![0usize; omitted.len()];
        loop {
            let mut flat = base;
            let mut prob = selected_prob;
            for (k, &j) in omitted.iter().enumerate() {
                flat += idx[k] * strides[j];
                prob *= markets.events()[j].probs()[idx[k]];
            }
            gradient += prob / (price * wealth[flat]);
            let mut k = omitted.len();
            loop {
                if k == 0 {
                    break;
                }
                k -= 1;
                idx[k] += 1;
                if idx[k] < sizes[omitted[k]] {
                    break;
                }
                idx[k] = 0;
            }
            if idx.iter().all(|&i| i == 0) {
                break;
            }
        }

        let stake = book.stake(ticket);
        let mut violation = None;
        if stake > 0.0 {
            let residual = (gradient - 1.0).abs();
            report.on_support_max_residual = report.on_support_max_residual.max(residual);
            if residual > tol {
                violation = Some(TicketViolationKind::OnSupportResidual);
            }
        } else {
            report.off_support_max_g = report.off_support_max_g.max(gradient);
            let has_strict_inactive = ticket.legs().iter().enumerate().any(
                |(j, leg)| matches!(leg, Some(i) if statuses[j][*i] == LegStatus::StrictlyInactive),
            );
            if has_strict_inactive && gradient >= 1.0 - STRICT_MARGIN {
                report.strict_ok = false;
                violation = Some(TicketViolationKind::StrictInactiveNotBelowOne);
            } else if gradient > 1.0 + tol {
                violation = Some(TicketViolationKind::OffSupportHigh);
            }
        }
        if let Some(kind) = violation {
            report.pass = false;
            report.violation_count += 1;
            if report.violations.len() < MAX_LISTED_VIOLATIONS {
                report.violations.push(TicketViolation {
                    ticket: ticket.clone(),
                    stake,
                    gradient,
                    kind,
                });
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::Event;
    use approx::assert_relative_eq;

    fn running_markets() -> MarketSet {
        MarketSet::new(vec![
            Event::new("e1", vec![0.6, 0.4], vec![0.5, 0.5]).unwrap(),
            Event::new("e2", vec![0.5, 0.3, 0.2], vec![0.45, 0.35, 0.25]).unwrap(),
        ])
        .unwrap()
    }

    #[test]
    fn menu_sizes() {
        let one = MarketSet::new(vec![
            Event::new("a", vec![0.6, 0.4], vec![0.5, 0.5]).unwrap()
        ])
        .unwrap();
        assert_eq!(enumerate_tickets(&one, 10).unwrap().len(), 3);
        assert_eq!(
            enumerate_tickets(&running_markets(), 100).unwrap().len(),
            12
        );
        let three = MarketSet::new(
            (0..3)
                .map(|i| Event::new(format!("e{i}"), vec![0.6, 0.4], vec![0.5, 0.5]).unwrap())
                .collect(),
        )
        .unwrap();
        assert_eq!(enumerate_tickets(&three, 27).unwrap().len(), 27);
        assert!(matches!(
            enumerate_tickets(&three, 26),
            Err(Error::MenuTooLarge {
                required: 27,
                cap: 26
            })
        ));
    }

    #[test]
    fn tickets_are_lexicographic() {
        let tickets = enumerate_tickets(&running_markets(), 100).unwrap();
        for pair in tickets.windows(2) {
            assert!(pair[0] < pair[1]);
        }
        assert!(tickets[0].is_cash());
        assert_eq!(tickets[1].legs(), &[None, Some(0)]);
    }

    #[test]
    fn ticket_prices() {
        let ms = running_markets();
        assert_relative_eq!(ticket_price(&Ticket::cash(2), &ms).unwrap(), 1.0);
        assert_relative_eq!(
            ticket_price(&Ticket::new(vec![Some(0), None]), &ms).unwrap(),
            0.5
        );
        assert_relative_eq!(
            ticket_price(&Ticket::new(vec![Some(0), Some(0)]), &ms).unwrap(),
            0.225
        );
        assert!(ticket_price(&Ticket::new(vec![Some(2), None]), &ms).is_err());
    }

    #[test]
    fn running_example_book() {
        let ms = running_markets();
        let book = build_optimal_book(&ms).unwrap();
        assert_eq!(book.stakes().len(), 4);
        let x = |legs: Vec<Option<usize>>| book.stake(&Ticket::new(legs));
        assert_relative_eq!(x(vec![None, None]), 8.0 / 11.0, epsilon = 1e-14);
        assert_relative_eq!(x(vec![Some(0), None]), 2.0 / 11.0, epsilon = 1e-14);
        assert_relative_eq!(x(vec![None, Some(0)]), 0.8 / 11.0, epsilon = 1e-14);
        assert_relative_eq!(x(vec![Some(0), Some(0)]), 0.2 / 11.0, epsilon = 1e-14);
        assert_relative_eq!(book.total_stake(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn single_event_book_equals_solution() {
        let ms = MarketSet::new(vec![Event::new(
            "a",
            vec![0.5, 0.3, 0.2],
            vec![0.45, 0.35, 0.25],
        )
        .unwrap()])
        .unwrap();
        let book = build_optimal_book(&ms).unwrap();
        assert_relative_eq!(book.stake(&Ticket::cash(1)), 10.0 / 11.0, epsilon = 1e-14);
        assert_relative_eq!(
            book.stake(&Ticket::new(vec![Some(0)])),
            1.0 / 11.0,
            epsilon = 1e-14
        );
    }

    #[test]
    fn all_cash_event_zeroes_its_tickets() {
        let ms = MarketSet::new(vec![
            Event::new("edge", vec![0.6, 0.4], vec![0.5, 0.5]).unwrap(),
            Event::new("flat", vec![0.5, 0.5], vec![0.52, 0.52]).unwrap(),
        ])
        .unwrap();
        let book = build_optimal_book(&ms).unwrap();
        for ticket in book.active_tickets() {
            assert!(ticket.legs()[1].is_none(), "{ticket:?}");
        }
    }

    #[test]
    fn wealth_factorizes() {
        let ms = running_markets();
        let book = build_optimal_book(&ms).unwrap();
        let w = book_wealth(&book, &ms, &[0, 0]).unwrap();
        assert_relative_eq!(w, (10.0 / 9.0) * 1.2, epsilon = 1e-12);
        let w = book_wealth(&book, &ms, &[1, 2]).unwrap();
        assert_relative_eq!(w, 0.8 * (10.0 / 11.0), epsilon = 1e-12);
        assert!(book_wealth(&book, &ms, &[1, 3]).is_err());
    }

    #[test]
    fn cash_only_book_pays_one_everywhere() {
        let ms = running_markets();
        let mut stakes = BTreeMap::new();
        stakes.insert(Ticket::cash(2), 1.0);
        let book = TicketBook::from_stakes(stakes).unwrap();
        for i in 0..2 {
            for j in 0..3 {
                assert_relative_eq!(book_wealth(&book, &ms, &[i, j]).unwrap(), 1.0);
            }
        }
    }

    #[test]
    fn growth_is_sum_of_event_growths() {
        let ms = running_markets();
        let v = parlay_growth(&ms).unwrap();
        assert_relative_eq!(v, 0.0251607, epsilon = 1e-7);
        let one = MarketSet::new(vec![ms.events()[0].clone()]).unwrap();
        let sol = solve_single_event(&ms.events()[0]).unwrap();
        assert_relative_eq!(
            parlay_growth(&one).unwrap(),
            single_event_growth(&ms.events()[0], &sol),
            epsilon = 1e-15
        );
    }

    #[test]
    fn book_objective_matches_growth() {
        let ms = running_markets();
        let book = build_optimal_book(&ms).unwrap();
        let caps = Caps::default();
        assert_relative_eq!(
            book_objective(&book, &ms, &caps).unwrap(),
            parlay_growth(&ms).unwrap(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn kkt_passes_on_optimal_book() {
        let ms = running_markets();
        let book = build_optimal_book(&ms).unwrap();
        let report = verify_ticket_kkt(&book, &ms, &Caps::default()).unwrap();
        assert!(report.pass, "{:?}", report.violations);
        assert!(report.on_support_max_residual < 1e-12);
    }

    #[test]
    fn kkt_gradient_of_inactive_leg_ticket() {
        // Ticket (e1=1, e2=2): leg 2 of event 2 is strictly inactive, so
        // the factorized gradient is p_22/(π_22 F_2(2)) = 0.3/(0.35 · 10/11).
        let ms = running_markets();
        let book = build_optimal_book(&ms).unwrap();
        let report = verify_ticket_kkt(&book, &ms, &Caps::default()).unwrap();
        assert!(report.pass);
        assert!(report.off_support_max_g <= 1.0 + report.tol);

        // Cross-check against direct enumeration of
        // E[1_{γ⪯I}/(π_γ W(I))] using the book wealth.
        let ticket = Ticket::new(vec![Some(0), Some(1)]);
        let price = ticket_price(&ticket, &ms).unwrap();
        let mut gradient = 0.0;
        for_each_state(&ms, |state, prob| {
            if ticket.matches(state) {
                let w = book_wealth(&book, &ms, state).unwrap();
                gradient += prob / (price * w);
            }
        });
        let expected = 0.3 / (0.35 * (10.0 / 11.0));
        assert_relative_eq!(gradient, expected, epsilon = 1e-12);
        assert_relative_eq!(expected, 0.942857, epsilon = 1e-6);
    }

    #[test]
    fn growth_zero_when_no_edge() {
        let ms = MarketSet::new(vec![
            Event::new("f1", vec![0.5, 0.5], vec![0.52, 0.52]).unwrap(),
            Event::new("f2", vec![0.4, 0.6], vec![0.45, 0.62]).unwrap(),
        ])
        .unwrap();
        assert_eq!(parlay_growth(&ms).unwrap(), 0.0);
    }

    #[test]
    fn kkt_fails_on_uniform_book() {
        let ms = running_markets();
        let tickets = enumerate_tickets(&ms, 100).unwrap();
        let n = tickets.len() as f64;
        let stakes: BTreeMap<Ticket, f64> = tickets.into_iter().map(|t| (t, 1.0 / n)).collect();
        let book = TicketBook::from_stakes(stakes).unwrap();
        let report = verify_ticket_kkt(&book, &ms, &Caps::default()).unwrap();
        assert!(!report.pass);
        assert!(report.violation_count > 0);
        assert!(!report.violations.is_empty());
    }

    #[test]
    fn active_tickets_match_outer_product_support() {
        let ms = MarketSet::new(vec![
            Event::new("a", vec![0.6, 0.4], vec![0.5, 0.5]).unwrap(),
            Event::new("b", vec![0.7, 0.3], vec![0.6, 0.42]).unwrap(),
        ])
        .unwrap();
        let book = build_optimal_book(&ms).unwrap();
        // Both events have exactly one active leg: 2×2 support tickets.
        assert_eq!(book.active_tickets().len(), 4);
    }

    #[test]
    fn full_parlay_stake_is_product_of_event_stakes() {
        let ms = running_markets();
        let book = build_optimal_book(&ms).unwrap();
        let solutions = solve_all(&ms).unwrap();
        let full = Ticket::new(vec![Some(0), Some(0)]);
        let expected = solutions[0].stakes()[0] * solutions[1].stakes()[0];
        assert_eq!(book.stake(&full), expected);
    }
}
