//! Python bindings for the parlay-kelly engine.
//!
//! Exposes the closed-form single-event solver, the exact parlay book,
//! the singles-only optimizer, and the perturbation sweep machinery.
//!
//! Usage from Python:
//!
//!     import parlay_kelly_py as pk
//!     e1 = pk.Event("e1", [0.6, 0.4], prices=[0.5, 0.5])
//!     e2 = pk.Event("e2", [0.5, 0.3, 0.2], prices=[0.45, 0.35, 0.25])
//!     ms = pk.MarketSet([e1, e2])
//!     book = pk.build_book(ms)
//!     print(book.v_par, book.tickets())

use pyo3::exceptions::{PyIndexError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use parlay_kelly::asymptotics as asym;
use parlay_kelly::book;
use parlay_kelly::error::Error as CoreError;
use parlay_kelly::market;
use parlay_kelly::single;
use parlay_kelly::singles;
use parlay_kelly::Caps;

fn to_py_err(e: CoreError) -> PyErr {
    match e {
        CoreError::Validation(_)
        | CoreError::Schema(_)
        | CoreError::InvalidOdds(_)
        | CoreError::Family(_)
        | CoreError::OrderEstimation(_) => PyValueError::new_err(e.to_string()),
        CoreError::IndexOutOfRange { .. } => PyIndexError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn default_caps() -> Caps {
    Caps::default()
}

/// One multi-outcome market: probabilities plus state prices or decimal
/// odds (exactly one of the two).
#[pyclass(frozen, from_py_object)]
#[derive(Clone)]
struct Event {
    inner: market::Event,
}

#[pymethods]
impl Event {
    #[new]
    #[pyo3(signature = (name, probs, prices=None, odds=None, labels=None))]
    fn new(
        name: String,
        probs: Vec<f64>,
        prices: Option<Vec<f64>>,
        odds: Option<Vec<f64>>,
        labels: Option<Vec<String>>,
    ) -> PyResult<Self> {
        let prices = match (prices, odds) {
            (Some(p), None) => p,
            (None, Some(odds)) => odds
                .into_iter()
                .map(market::price_from_odds)
                .collect::<Result<Vec<_>, _>>()
                .map_err(to_py_err)?,
            (Some(_), Some(_)) => {
                return Err(PyValueError::new_err(
                    "give either prices or odds, not both",
                ))
            }
            (None, None) => return Err(PyValueError::new_err("one of prices or odds is required")),
        };
        let inner = match labels {
            Some(labels) => market::Event::with_labels(name, labels, probs, prices),
            None => market::Event::new(name, probs, prices),
        }
        .map_err(to_py_err)?;
        Ok(Event { inner })
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name().to_string()
    }

    #[getter]
    fn labels(&self) -> Vec<String> {
        self.inner.labels().to_vec()
    }

    #[getter]
    fn probs(&self) -> Vec<f64> {
        self.inner.probs().to_vec()
    }

    #[getter]
    fn prices(&self) -> Vec<f64> {
        self.inner.prices().to_vec()
    }

    fn overround(&self) -> f64 {
        self.inner.overround()
    }

    fn edge_ratios(&self) -> Vec<f64> {
        self.inner.edge_ratios()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Event('{}', outcomes={}, overround={:.4})",
            self.inner.name(),
            self.inner.len(),
            self.inner.overround()
        )
    }
}

/// A set of independent events.
#[pyclass(frozen, skip_from_py_object)]
#[derive(Clone)]
struct MarketSet {
    inner: market::MarketSet,
}

#[pymethods]
impl MarketSet {
    #[new]
    fn new(events: Vec<Event>) -> PyResult<Self> {
        let inner = market::MarketSet::new(events.into_iter().map(|e| e.inner).collect())
            .map_err(to_py_err)?;
        Ok(MarketSet { inner })
    }

    /// Parse the JSON market schema used by the CLI.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(MarketSet {
            inner: parlay_kelly::io::parse_market_json(text).map_err(to_py_err)?,
        })
    }

    fn events(&self) -> Vec<Event> {
        self.inner
            .events()
            .iter()
            .map(|e| Event { inner: e.clone() })
            .collect()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("MarketSet(events={})", self.inner.len())
    }
}

/// The closed-form single-event optimum.
#[pyclass(frozen)]
struct SingleSolution {
    #[pyo3(get)]
    cash: f64,
    #[pyo3(get)]
    stakes: Vec<f64>,
    #[pyo3(get)]
    active_set: Vec<usize>,
    #[pyo3(get)]
    wealth: Vec<f64>,
    #[pyo3(get)]
    growth: f64,
    #[pyo3(get)]
    kkt_pass: bool,
}

#[pymethods]
impl SingleSolution {
    fn __repr__(&self) -> String {
        format!(
            "SingleSolution(cash={:.6}, active={:?}, growth={:.7})",
            self.cash, self.active_set, self.growth
        )
    }
}

/// Solve one event's Kelly problem exactly.
#[pyfunction]
fn solve_event(event: &Event) -> PyResult<SingleSolution> {
    let sol = single::solve_single_event(&event.inner).map_err(to_py_err)?;
    let report = single::verify_single_kkt(&event.inner, &sol);
    Ok(SingleSolution {
        cash: sol.cash(),
        stakes: sol.stakes().to_vec(),
        active_set: sol.active_set().to_vec(),
        wealth: sol.wealth().to_vec(),
        growth: single::single_event_growth(&event.inner, &sol),
        kkt_pass: report.pass,
    })
}

/// Convert decimal odds to a state price.
#[pyfunction]
fn price_from_odds(odds: f64) -> PyResult<f64> {
    market::price_from_odds(odds).map_err(to_py_err)
}

type PyTicketRow = (Vec<Option<String>>, f64, f64);

fn ticket_rows(book: &book::TicketBook, markets: &market::MarketSet) -> PyResult<Vec<PyTicketRow>> {
    book.stakes()
        .iter()
        .map(|(ticket, &stake)| {
            let legs = ticket
                .legs()
                .iter()
                .enumerate()
                .map(|(j, leg)| leg.map(|i| markets.events()[j].labels()[i].clone()))
                .collect();
            let price = book::ticket_price(ticket, markets).map_err(to_py_err)?;
            Ok((legs, stake, price))
        })
        .collect()
}

/// The optimal parlay book: sparse tickets plus the growth rate.
#[pyclass(frozen)]
struct Book {
    rows: Vec<PyTicketRow>,
    #[pyo3(get)]
    v_par: f64,
    json: String,
}

#[pymethods]
impl Book {
    /// `(legs, stake, price)` rows in lexicographic ticket order; `None`
    /// marks an omitted event.
    fn tickets(&self) -> Vec<PyTicketRow> {
        self.rows.clone()
    }

    /// Canonical JSON, identical to `parlay-kelly build-book --format json`
    /// minus the report fields.
    fn to_json(&self) -> String {
        self.json.clone()
    }

    fn __len__(&self) -> usize {
        self.rows.len()
    }

    fn __repr__(&self) -> String {
        format!("Book(tickets={}, v_par={:.7})", self.rows.len(), self.v_par)
    }
}

/// Build the exact optimal parlay book (outer product of the one-event
/// solutions).
#[pyfunction]
fn build_book(markets: &MarketSet) -> PyResult<Book> {
    let book = book::build_optimal_book(&markets.inner).map_err(to_py_err)?;
    let v_par = book::parlay_growth(&markets.inner).map_err(to_py_err)?;
    let json = parlay_kelly::io::book_to_json_value(&book, &markets.inner)
        .map_err(to_py_err)?
        .to_string();
    Ok(Book {
        rows: ticket_rows(&book, &markets.inner)?,
        v_par,
        json,
    })
}

/// Result of the singles-only optimization.
#[pyclass(frozen)]
struct SinglesResult {
    #[pyo3(get)]
    stakes: Vec<Vec<f64>>,
    #[pyo3(get)]
    cash: f64,
    #[pyo3(get)]
    objective: f64,
    #[pyo3(get)]
    kkt_residual: f64,
    #[pyo3(get)]
    iterations: usize,
}

#[pymethods]
impl SinglesResult {
    fn __repr__(&self) -> String {
        format!(
            "SinglesResult(objective={:.7}, residual={:.3e}, iterations={})",
            self.objective, self.kkt_residual, self.iterations
        )
    }
}

/// Maximize the singles-only growth rate numerically.
#[pyfunction]
#[pyo3(signature = (markets, tol=1e-11, max_iter=10_000))]
fn optimize_singles(markets: &MarketSet, tol: f64, max_iter: usize) -> PyResult<SinglesResult> {
    let sol = singles::optimize_singles(&markets.inner, tol, max_iter, &default_caps())
        .map_err(to_py_err)?;
    Ok(SinglesResult {
        stakes: sol.stakes().to_vec(),
        cash: sol.cash(),
        objective: sol.objective(),
        kkt_residual: sol.kkt_residual(),
        iterations: sol.iterations(),
    })
}

/// Run the generic ticket-space optimizer; returns `(tickets, objective,
/// certificate, iterations)`.
#[pyfunction]
#[pyo3(signature = (markets, tol=1e-9, max_iter=200_000))]
fn optimize_tickets(
    markets: &MarketSet,
    tol: f64,
    max_iter: usize,
) -> PyResult<(Vec<PyTicketRow>, f64, f64, usize)> {
    let oracle = singles::optimize_ticket_space(&markets.inner, tol, max_iter, &default_caps())
        .map_err(to_py_err)?;
    Ok((
        ticket_rows(&oracle.book, &markets.inner)?,
        oracle.objective,
        oracle.certificate,
        oracle.iterations,
    ))
}

/// Compare the exact parlay optimum with the singles-only optimum;
/// returns `(v_par, v_sing, gap)` in nats.
#[pyfunction]
#[pyo3(signature = (markets, tol=1e-11, max_iter=10_000))]
fn growth_gap(markets: &MarketSet, tol: f64, max_iter: usize) -> PyResult<(f64, f64, f64)> {
    let report =
        singles::growth_gap(&markets.inner, tol, max_iter, &default_caps()).map_err(to_py_err)?;
    Ok((report.v_par, report.v_sing, report.gap))
}

/// Exact two-binary simultaneous Kelly fractions.
#[pyfunction]
fn thorp_exact(m1: f64, m2: f64) -> PyResult<(f64, f64)> {
    if m1.abs() >= 1.0 || m2.abs() >= 1.0 {
        return Err(PyValueError::new_err("edges must satisfy |m| < 1"));
    }
    Ok(asym::thorp_exact(m1, m2))
}

/// Log-log least squares; returns `(slope, intercept, r_squared)`.
#[pyfunction]
fn estimate_order(xs: Vec<f64>, ys: Vec<f64>) -> PyResult<(f64, f64, f64)> {
    let fit = asym::estimate_order(&xs, &ys).map_err(to_py_err)?;
    Ok((fit.slope, fit.intercept, fit.r_squared))
}

/// Run a shrinkage sweep over a perturbation family and return the
/// fitted orders and per-ε records as a dict.
#[pyfunction]
#[pyo3(signature = (baselines, directions, sextic_grid=false))]
fn sweep<'py>(
    py: Python<'py>,
    baselines: Vec<Vec<f64>>,
    directions: Vec<Vec<f64>>,
    sextic_grid: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let family = asym::build_family(&baselines, &directions).map_err(to_py_err)?;
    let grid = if sextic_grid {
        asym::sextic_eps_grid(&family)
    } else {
        asym::default_eps_grid(&family)
    };
    let summary = asym::shrinkage_sweep(&family, &grid, &default_caps()).map_err(to_py_err)?;

    let out = PyDict::new(py);
    out.set_item("eps_max", family.eps_max())?;
    out.set_item("delta_slope", summary.delta_fit.slope)?;
    out.set_item("gap_slope", summary.gap_fit.slope)?;
    out.set_item(
        "residual_slopes",
        summary
            .residual_fits
            .iter()
            .map(|f| f.slope)
            .collect::<Vec<_>>(),
    )?;
    out.set_item("sextic_slope", summary.sextic_fit.map(|f| f.slope))?;
    out.set_item("sextic_below_noise_floor", summary.sextic_below_noise_floor)?;
    out.set_item("delta_ratio_at_smallest", summary.delta_ratio_at_smallest)?;
    out.set_item(
        "residual_ratio_at_smallest",
        summary.residual_ratio_at_smallest,
    )?;
    let records: Vec<Bound<'py, PyDict>> = summary
        .records
        .iter()
        .map(|r| {
            let rec = PyDict::new(py);
            rec.set_item("eps", r.eps)?;
            rec.set_item("x_ind", &r.x_ind)?;
            rec.set_item("x_sim", &r.x_sim)?;
            rec.set_item("delta", &r.delta)?;
            rec.set_item("predicted_delta", &r.predicted_delta)?;
            rec.set_item("v_par", r.v_par)?;
            rec.set_item("v_sing", r.v_sing)?;
            rec.set_item("gap", r.gap)?;
            rec.set_item("residual", &r.kkt_residual_at_isolated)?;
            rec.set_item("predicted_residual", &r.predicted_residual)?;
            rec.set_item("singles_value_at_isolated", r.singles_value_at_isolated)?;
            rec.set_item("support_ok", r.support_ok)?;
            Ok(rec)
        })
        .collect::<PyResult<_>>()?;
    out.set_item("records", records)?;
    Ok(out)
}

#[pymodule]
fn parlay_kelly_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<Event>()?;
    m.add_class::<MarketSet>()?;
    m.add_class::<SingleSolution>()?;
    m.add_class::<Book>()?;
    m.add_class::<SinglesResult>()?;
    m.add_function(wrap_pyfunction!(price_from_odds, m)?)?;
    m.add_function(wrap_pyfunction!(solve_event, m)?)?;
    m.add_function(wrap_pyfunction!(build_book, m)?)?;
    m.add_function(wrap_pyfunction!(optimize_singles, m)?)?;
    m.add_function(wrap_pyfunction!(optimize_tickets, m)?)?;
    m.add_function(wrap_pyfunction!(growth_gap, m)?)?;
    m.add_function(wrap_pyfunction!(thorp_exact, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_order, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    Ok(())
}
