//! JSON and CSV schemas for markets, families, and ticket books.
//!
//! Market input: `{"events":[{"name":"e1","outcomes":[{"label":"H",
//! "prob":0.5,"price":0.45}, {"label":"D","prob":0.3,"odds":2.857}]}]}`
//! with exactly one of `price`/`odds` per outcome and unique labels.
//!
//! Family input: `{"family":[{"baseline":[0.5,0.5],"direction":[0.1,-0.1]}]}`.
//!
//! Book output/input: `{"tickets":[{"legs":["H",null,"A"],
//! "stake":0.018182,"price":0.225}]}` with `null` marking omitted legs.

use std::collections::BTreeMap;

use serde::Deserialize;
use serde_json::{json, Value};

use crate::asymptotics::{build_family, PerturbationFamily};
use crate::book::{ticket_price, Ticket, TicketBook};
use crate::error::{Error, Result};
use crate::market::{price_from_odds, Event, MarketSet};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMarketFile {
    events: Vec<RawEvent>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEvent {
    name: String,
    outcomes: Vec<RawOutcome>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutcome {
    label: String,
    prob: f64,
    #[serde(default)]
    price: Option<f64>,
    #[serde(default)]
    odds: Option<f64>,
}

fn schema_err(e: serde_json::Error) -> Error {
    Error::Schema(e.to_string())
}

/// Parse and validate a market file.
pub fn parse_market_json(text: &str) -> Result<MarketSet> {
    let raw: RawMarketFile = serde_json::from_str(text).map_err(schema_err)?;
    let events = raw
        .events
        .into_iter()
        .map(event_from_raw)
        .collect::<Result<Vec<_>>>()?;
    MarketSet::new(events)
}

fn event_from_raw(raw: RawEvent) -> Result<Event> {
    let mut labels = Vec::with_capacity(raw.outcomes.len());
    let mut probs = Vec::with_capacity(raw.outcomes.len());
    let mut prices = Vec::with_capacity(raw.outcomes.len());
    for outcome in raw.outcomes {
        let price = match (outcome.price, outcome.odds) {
            (Some(price), None) => price,
            (None, Some(odds)) => price_from_odds(odds)?,
            (Some(_), Some(_)) => {
                return Err(Error::Schema(format!(
                    "event '{}' outcome '{}': give either price or odds, not both",
                    raw.name, outcome.label
                )))
            }
            (None, None) => {
                return Err(Error::Schema(format!(
                    "event '{}' outcome '{}': one of price or odds is required",
                    raw.name, outcome.label
                )))
            }
        };
        labels.push(outcome.label);
        probs.push(outcome.prob);
        prices.push(price);
    }
    Event::with_labels(raw.name, labels, probs, prices)
}

/// Canonical JSON value for a market set (keys sorted, full precision).
pub fn market_to_json_value(markets: &MarketSet) -> Value {
    json!({
        "events": markets.events().iter().map(|e| {
            json!({
                "name": e.name(),
                "outcomes": (0..e.len()).map(|i| json!({
                    "label": e.labels()[i],
                    "prob": e.probs()[i],
                    "price": e.prices()[i],
                })).collect::<Vec<_>>(),
            })
        }).collect::<Vec<_>>(),
    })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFamilyFile {
    family: Vec<RawFamilyEvent>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFamilyEvent {
    baseline: Vec<f64>,
    direction: Vec<f64>,
}

/// Parse and validate a perturbation-family file.
pub fn parse_family_json(text: &str) -> Result<PerturbationFamily> {
    let raw: RawFamilyFile = serde_json::from_str(text).map_err(schema_err)?;
    let (baselines, directions): (Vec<_>, Vec<_>) = raw
        .family
        .into_iter()
        .map(|fe| (fe.baseline, fe.direction))
        .unzip();
    build_family(&baselines, &directions)
}

// Top level tolerates the report fields `build-book --format json`
// appends (v_par, units), so its output feeds `verify` directly.
#[derive(Debug, Deserialize)]
struct RawBookFile {
    tickets: Vec<RawTicket>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTicket {
    legs: Vec<Option<String>>,
    stake: f64,
    #[serde(default)]
    #[allow(dead_code)] // informational on output; recomputed on input
    price: Option<f64>,
}

/// Parse a book file, resolving outcome labels against `markets`.
pub fn parse_book_json(text: &str, markets: &MarketSet) -> Result<TicketBook> {
    let raw: RawBookFile = serde_json::from_str(text).map_err(schema_err)?;
    let mut stakes: BTreeMap<Ticket, f64> = BTreeMap::new();
    for raw_ticket in raw.tickets {
        if raw_ticket.legs.len() != markets.len() {
            return Err(Error::Schema(format!(
                "ticket has {} legs, market set has {} events",
                raw_ticket.legs.len(),
                markets.len()
            )));
        }
        let mut legs = Vec::with_capacity(markets.len());
        for (event, leg) in markets.events().iter().zip(&raw_ticket.legs) {
            match leg {
                None => legs.push(None),
                Some(label) => {
                    let idx = event
                        .labels()
                        .iter()
                        .position(|l| l == label)
                        .ok_or_else(|| {
                            Error::Schema(format!(
                                "event '{}' has no outcome labeled '{label}'",
                                event.name()
                            ))
                        })?;
                    legs.push(Some(idx));
                }
            }
        }
        let ticket = Ticket::new(legs);
        if stakes.insert(ticket, raw_ticket.stake).is_some() {
            return Err(Error::Schema(format!(
                "duplicate ticket {:?} in book file",
                raw_ticket.legs
            )));
        }
    }
    TicketBook::from_stakes(stakes)
}

fn ticket_legs_json(ticket: &Ticket, markets: &MarketSet) -> Vec<Value> {
    ticket
        .legs()
        .iter()
        .enumerate()
        .map(|(j, leg)| match leg {
            None => Value::Null,
            Some(i) => Value::String(markets.events()[j].labels()[*i].clone()),
        })
        .collect()
}

/// Canonical JSON value for a book (lexicographic ticket order).
pub fn book_to_json_value(book: &TicketBook, markets: &MarketSet) -> Result<Value> {
    let mut tickets = Vec::with_capacity(book.stakes().len());
    for (ticket, &stake) in book.stakes() {
        tickets.push(json!({
            "legs": ticket_legs_json(ticket, markets),
            "stake": stake,
            "price": ticket_price(ticket, markets)?,
        }));
    }
    Ok(json!({ "tickets": tickets }))
}

/// CSV rendering of a book: one ticket per row, legs as labels with `-`
/// for omitted events.
pub fn book_to_csv(book: &TicketBook, markets: &MarketSet) -> Result<String> {
    let mut out = String::new();
    for event in markets.events() {
        out.push_str(event.name());
        out.push(',');
    }
    out.push_str("stake,price\n");
    for (ticket, &stake) in book.stakes() {
        for (j, leg) in ticket.legs().iter().enumerate() {
            match leg {
                None => out.push('-'),
                Some(i) => out.push_str(&markets.events()[j].labels()[*i]),
            }
            out.push(',');
        }
        out.push_str(&format!("{},{}\n", stake, ticket_price(ticket, markets)?));
    }
    Ok(out)
}
