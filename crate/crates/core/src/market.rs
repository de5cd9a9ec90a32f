//! Events, market sets, and price diagnostics.
//!
//! An [`Event`] is one multi-outcome market: bettor probabilities `p_i`
//! (summing to 1) and state prices `π_i` (cost of a claim paying 1 if
//! outcome `i` occurs; the reciprocal of decimal odds). A [`MarketSet`]
//! is a collection of such events assumed mutually independent.

use crate::error::{Error, Result};

/// Input probabilities may be off from 1 by at most this much before the
/// event is rejected; anything smaller is renormalized away.
pub const PROB_SUM_TOLERANCE: f64 = 1e-9;

/// Convert decimal odds to a state price, `π = 1/odds`.
pub fn price_from_odds(odds: f64) -> Result<f64> {
    if !odds.is_finite() || odds <= 1.0 {
        return Err(Error::InvalidOdds(odds));
    }
    Ok(1.0 / odds)
}

/// One multi-outcome market with fixed probabilities and state prices.
///
/// Immutable after construction; all invariants are checked by
/// [`Event::new`] / [`Event::with_labels`].
#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    name: String,
    labels: Vec<String>,
    probs: Vec<f64>,
    prices: Vec<f64>,
}

impl Event {
    /// Validate and build an event. Outcome labels default to `"1"`,
    /// `"2"`, ... in outcome order.
    pub fn new(name: impl Into<String>, probs: Vec<f64>, prices: Vec<f64>) -> Result<Self> {
        let labels = (1..=probs.len()).map(|i| i.to_string()).collect();
        Self::with_labels(name, labels, probs, prices)
    }

    pub fn with_labels(
        name: impl Into<String>,
        labels: Vec<String>,
        mut probs: Vec<f64>,
        prices: Vec<f64>,
    ) -> Result<Self> {
        let name = name.into();
        let fail = |reason: String| Err(Error::Validation(format!("event '{name}': {reason}")));

        let n = probs.len();
        if n < 2 {
            return fail(format!("needs at least 2 outcomes, got {n}"));
        }
        if prices.len() != n || labels.len() != n {
            return fail(format!(
                "outcome count mismatch: {n} probs, {} prices, {} labels",
                prices.len(),
                labels.len()
            ));
        }
        for (i, &p) in probs.iter().enumerate() {
            if !p.is_finite() || p <= 0.0 {
                return fail(format!("probability {p} of outcome {} must be > 0", i + 1));
            }
        }
        for (i, &q) in prices.iter().enumerate() {
            if !q.is_finite() || q <= 0.0 {
                return fail(format!("price {q} of outcome {} must be > 0", i + 1));
            }
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > PROB_SUM_TOLERANCE {
            return fail(format!("probabilities sum to {sum}, expected 1"));
        }
        // Renormalize to an exact unit sum; skip when already within
        // round-off so that re-validating a valid event is the identity.
        if (sum - 1.0).abs() > 1e-14 {
            for p in &mut probs {
                *p /= sum;
            }
        }
        for i in 0..n {
            if labels[i..].iter().skip(1).any(|l| *l == labels[i]) {
                return fail(format!("duplicate outcome label '{}'", labels[i]));
            }
        }
        Ok(Event {
            name,
            labels,
            probs,
            prices,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Number of outcomes.
    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        false // n >= 2 by construction
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prices(&self) -> &[f64] {
        &self.prices
    }

    /// Total price mass `∑_i π_i`; above 1 means the book takes margin.
    pub fn overround(&self) -> f64 {
        self.prices.iter().sum()
    }

    /// `p_i/π_i` in outcome order. Outcomes whose ratio exceeds the cash
    /// level are worth backing.
    pub fn edge_ratios(&self) -> Vec<f64> {
        self.probs
            .iter()
            .zip(&self.prices)
            .map(|(p, q)| p / q)
            .collect()
    }
}

/// A set of mutually independent events with unique names.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketSet {
    events: Vec<Event>,
}

impl MarketSet {
    pub fn new(events: Vec<Event>) -> Result<Self> {
        if events.is_empty() {
            return Err(Error::Validation(
                "market set needs at least 1 event".into(),
            ));
        }
        for i in 0..events.len() {
            if events[i + 1..].iter().any(|e| e.name() == events[i].name()) {
                return Err(Error::Validation(format!(
                    "duplicate event name '{}'",
                    events[i].name()
                )));
            }
        }
        Ok(MarketSet { events })
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    /// Number of events, `m`.
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        false // m >= 1 by construction
    }

    /// Outcome counts `n_ℓ` per event.
    pub fn sizes(&self) -> Vec<usize> {
        self.events.iter().map(Event::len).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn odds_conversion() {
        assert_relative_eq!(price_from_odds(2.0).unwrap(), 0.5);
        assert_relative_eq!(price_from_odds(1.25).unwrap(), 0.8);
        assert_relative_eq!(price_from_odds(4.0).unwrap(), 0.25);
    }

    #[test]
    fn odds_rejects_nonsense() {
        assert!(matches!(price_from_odds(1.0), Err(Error::InvalidOdds(_))));
        assert!(matches!(price_from_odds(0.5), Err(Error::InvalidOdds(_))));
        assert!(matches!(
            price_from_odds(f64::INFINITY),
            Err(Error::InvalidOdds(_))
        ));
        assert!(matches!(
            price_from_odds(f64::NAN),
            Err(Error::InvalidOdds(_))
        ));
    }

    #[test]
    fn valid_three_outcome_event() {
        let e = Event::new("e", vec![0.5, 0.3, 0.2], vec![0.45, 0.35, 0.25]).unwrap();
        assert_relative_eq!(e.overround(), 1.05, epsilon = 1e-15);
        let r = e.edge_ratios();
        assert_relative_eq!(r[0], 0.5 / 0.45, epsilon = 1e-15);
        assert_relative_eq!(r[1], 0.3 / 0.35, epsilon = 1e-15);
        assert_relative_eq!(r[2], 0.8, epsilon = 1e-15);
    }

    #[test]
    fn fair_book_has_unit_overround_and_ratios() {
        let e = Event::new("e", vec![0.5, 0.5], vec![0.5, 0.5]).unwrap();
        assert_relative_eq!(e.overround(), 1.0);
        assert!(e.edge_ratios().iter().all(|&r| (r - 1.0).abs() < 1e-15));
        let e2 = Event::new("e", vec![0.5, 0.5], vec![0.52, 0.52]).unwrap();
        assert_relative_eq!(e2.overround(), 1.04, epsilon = 1e-15);
    }

    #[test]
    fn rejects_bad_probability_sum() {
        let err = Event::new("e", vec![0.5, 0.48], vec![0.5, 0.5]).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn renormalizes_small_drift() {
        let e = Event::new("e", vec![0.5 + 3e-10, 0.5], vec![0.5, 0.5]).unwrap();
        let sum: f64 = e.probs().iter().sum();
        assert!((sum - 1.0).abs() < 1e-14);
    }

    #[test]
    fn revalidation_is_identity() {
        let e = Event::new("e", vec![0.3 + 1e-10, 0.3, 0.4], vec![0.3, 0.3, 0.41]).unwrap();
        let e2 = Event::new("e", e.probs().to_vec(), e.prices().to_vec()).unwrap();
        assert_eq!(e.probs(), e2.probs());
        assert_eq!(e.prices(), e2.prices());
    }

    #[test]
    fn rejects_nonpositive_entries() {
        assert!(Event::new("e", vec![1.0, 0.0], vec![0.5, 0.5]).is_err());
        assert!(Event::new("e", vec![0.5, 0.5], vec![0.5, -0.1]).is_err());
        assert!(Event::new("e", vec![0.5, 0.5], vec![0.5, f64::NAN]).is_err());
    }

    #[test]
    fn rejects_single_outcome() {
        assert!(Event::new("e", vec![1.0], vec![0.9]).is_err());
    }

    #[test]
    fn market_set_rejects_duplicates() {
        let e1 = Event::new("a", vec![0.6, 0.4], vec![0.5, 0.5]).unwrap();
        let e2 = Event::new("a", vec![0.5, 0.5], vec![0.5, 0.5]).unwrap();
        assert!(MarketSet::new(vec![e1, e2]).is_err());
        assert!(MarketSet::new(vec![]).is_err());
    }
}
