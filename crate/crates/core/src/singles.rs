//! Numerical concave maximizers for the singles-only problem and the
//! generic ticket-space oracle.
//!
//! The singles-only wealth is the first-order truncation of the parlay
//! product: `W(x) = 1 + ∑_j x_j^T Z_j`, where `Z_{jk}(i) = [i=k]/π_{jk} − 1`
//! is the excess return of a unit stake on outcome `k` of event `j`. Both
//! solvers compute exact expectations by full enumeration of the joint
//! outcome space and are deterministic fixed-order iterations.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::book::{enumerate_tickets, parlay_growth, ticket_count, ticket_price, TicketBook};
use crate::error::{Error, Result};
use crate::joint::{check_state_cap, for_each_state};
use crate::market::{Event, MarketSet};
use crate::single::solve_single_event;
use crate::Caps;

/// Default projected-KKT residual tolerance for the solvers.
pub const DEFAULT_TOL: f64 = 1e-11;
/// Default iteration budget.
pub const DEFAULT_MAX_ITER: usize = 10_000;

/// Excess return of one unit staked on outcome `coord` of `event` when
/// outcome `occurred` is realized: `[occurred = coord]/π_coord − 1`.
pub fn excess_return(event: &Event, occurred: usize, coord: usize) -> f64 {
    let hit = if occurred == coord {
        1.0 / event.prices()[coord]
    } else {
        0.0
    };
    hit - 1.0
}

fn check_shapes(markets: &MarketSet, stakes: &[Vec<f64>]) -> Result<()> {
    if stakes.len() != markets.len()
        || stakes
            .iter()
            .zip(markets.events())
            .any(|(x, e)| x.len() != e.len())
    {
        return Err(Error::Validation(
            "stake vector shape does not match the market set".into(),
        ));
    }
    Ok(())
}

/// Flattened view of per-event stakes with cached payout coefficients.
struct Workspace {
    sizes: Vec<usize>,
    offsets: Vec<usize>,
    inv_prices: Vec<f64>,
    dim: usize,
}

impl Workspace {
    fn new(markets: &MarketSet) -> Self {
        let sizes = markets.sizes();
        let mut offsets = Vec::with_capacity(sizes.len());
        let mut dim = 0;
        for &n in &sizes {
            offsets.push(dim);
            dim += n;
        }
        let inv_prices = markets
            .events()
            .iter()
            .flat_map(|e| e.prices().iter().map(|q| 1.0 / q))
            .collect();
        Workspace {
            sizes,
            offsets,
            inv_prices,
            dim,
        }
    }

    fn flatten(&self, stakes: &[Vec<f64>]) -> Vec<f64> {
        stakes.iter().flatten().copied().collect()
    }

    fn unflatten(&self, x: &[f64]) -> Vec<Vec<f64>> {
        self.sizes
            .iter()
            .zip(&self.offsets)
            .map(|(&n, &off)| x[off..off + n].to_vec())
            .collect()
    }

    /// Wealth in a joint state: `1 + ∑_j (x_{j,I_j}/π_{j,I_j} − ∑_k x_{jk})`.
    fn wealth(&self, x: &[f64], state: &[usize], block_totals: &[f64]) -> f64 {
        let mut w = 1.0;
        for (j, &i) in state.iter().enumerate() {
            let k = self.offsets[j] + i;
            w += x[k] * self.inv_prices[k] - block_totals[j];
        }
        w
    }

    fn block_totals(&self, x: &[f64]) -> Vec<f64> {
        self.sizes
            .iter()
            .zip(&self.offsets)
            .map(|(&n, &off)| x[off..off + n].iter().sum())
            .collect()
    }

    /// Exact objective, returning the offending state when wealth is
    /// nonpositive somewhere.
    fn objective(&self, markets: &MarketSet, x: &[f64]) -> Result<f64> {
        let totals = self.block_totals(x);
        let mut value = 0.0;
        let mut bad: Option<(Vec<usize>, f64)> = None;
        for_each_state(markets, |state, prob| {
            let w = self.wealth(x, state, &totals);
            if w <= 0.0 {
                if bad.is_none() {
                    bad = Some((state.to_vec(), w));
                }
            } else {
                value += prob * w.ln();
            }
        });
        if let Some((state, wealth)) = bad {
            return Err(Error::InfeasibleStakes { state, wealth });
        }
        Ok(value)
    }

    /// Exact objective and score `g_k = E[Z_k / W]`, optionally with the
    /// Hessian `H = −E[Z Z^T / W^2]`.
    fn objective_grad(
        &self,
        markets: &MarketSet,
        x: &[f64],
        want_hessian: bool,
    ) -> Result<(f64, Vec<f64>, Option<DMatrix<f64>>)> {
        let totals = self.block_totals(x);
        let n = self.dim;
        let mut value = 0.0;
        let mut grad = vec![0.0; n];
        let mut hess = if want_hessian {
            Some(DMatrix::<f64>::zeros(n, n))
        } else {
            None
        };
        let mut z = vec![0.0; n];
        let mut bad: Option<(Vec<usize>, f64)> = None;
        for_each_state(markets, |state, prob| {
            if bad.is_some() {
                return;
            }
            let w = self.wealth(x, state, &totals);
            if w <= 0.0 {
                bad = Some((state.to_vec(), w));
                return;
            }
            value += prob * w.ln();
            for (j, &i) in state.iter().enumerate() {
                for k in 0..self.sizes[j] {
                    let idx = self.offsets[j] + k;
                    z[idx] = if k == i { self.inv_prices[idx] } else { 0.0 } - 1.0;
                }
            }
            let scale = prob / w;
            for k in 0..n {
                grad[k] += scale * z[k];
            }
            if let Some(h) = hess.as_mut() {
                let s2 = prob / (w * w);
                for a in 0..n {
                    for b in a..n {
                        let v = s2 * z[a] * z[b];
                        h[(a, b)] -= v;
                        if a != b {
                            h[(b, a)] -= v;
                        }
                    }
                }
            }
        });
        if let Some((state, wealth)) = bad {
            return Err(Error::InfeasibleStakes { state, wealth });
        }
        Ok((value, grad, hess))
    }
}

/// Exact singles-only objective `E[log(1 + ∑_j x_j^T Z_j)]` by full
/// enumeration.
pub fn singles_objective(markets: &MarketSet, stakes: &[Vec<f64>], caps: &Caps) -> Result<f64> {
    check_shapes(markets, stakes)?;
    check_state_cap(markets, caps.max_states)?;
    let ws = Workspace::new(markets);
    ws.objective(markets, &ws.flatten(stakes))
}

/// Exact singles-only score map `F_{jk}(x) = E[Z_{jk} / (1 + ∑ x^T Z)]`,
/// the gradient of [`singles_objective`].
pub fn singles_score(
    markets: &MarketSet,
    stakes: &[Vec<f64>],
    caps: &Caps,
) -> Result<Vec<Vec<f64>>> {
    check_shapes(markets, stakes)?;
    check_state_cap(markets, caps.max_states)?;
    let ws = Workspace::new(markets);
    let (_, grad, _) = ws.objective_grad(markets, &ws.flatten(stakes), false)?;
    Ok(ws.unflatten(&grad))
}

/// A solution of the singles-only simultaneous problem.
#[derive(Debug, Clone)]
pub struct SinglesSolution {
    stakes: Vec<Vec<f64>>,
    cash: f64,
    objective: f64,
    kkt_residual: f64,
    iterations: usize,
}

impl SinglesSolution {
    /// Per-event stake vectors in full outcome coordinates.
    pub fn stakes(&self) -> &[Vec<f64>] {
        &self.stakes
    }

    /// Unbet bankroll, `1 − ∑ stakes`.
    pub fn cash(&self) -> f64 {
        self.cash
    }

    /// Achieved `E[log W]` in nats.
    pub fn objective(&self) -> f64 {
        self.objective
    }

    /// Projected-KKT residual at exit.
    pub fn kkt_residual(&self) -> f64 {
        self.kkt_residual
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }
}

/// Projected residual: `|g_k|` on the support, `max(g_k, 0)` off it.
fn projected_residual(x: &[f64], grad: &[f64]) -> f64 {
    let mut res: f64 = 0.0;
    for (xi, gi) in x.iter().zip(grad) {
        if *xi > 0.0 {
            res = res.max(gi.abs());
        } else {
            res = res.max(gi.max(0.0));
        }
    }
    res
}

fn free_residual(x: &[f64], grad: &[f64], free: &[bool]) -> f64 {
    let mut res: f64 = 0.0;
    for k in 0..x.len() {
        if free[k] {
            if x[k] > 0.0 {
                res = res.max(grad[k].abs());
            } else {
                res = res.max(grad[k].max(0.0));
            }
        }
    }
    res
}

/// Maximize the singles-only objective over `{x >= 0, ∑ x <= 1}`.
///
/// Damped projected Newton on the active coordinate set, started from the
/// isolated closed-form stakes; coordinates pinned at zero are released
/// only once the current support is stationary, which keeps the sparse
/// representative when the optimum is degenerate (fair events make the
/// within-event excess returns linearly dependent). Falls back to a
/// projected gradient step when the reduced Hessian cannot be factored.
pub fn optimize_singles(
    markets: &MarketSet,
    tol: f64,
    max_iter: usize,
    caps: &Caps,
) -> Result<SinglesSolution> {
    check_state_cap(markets, caps.max_states)?;
    let ws = Workspace::new(markets);

    // Isolated eventwise Kelly stakes as the starting point.
    let mut x = Vec::with_capacity(ws.dim);
    for event in markets.events() {
        x.extend_from_slice(solve_single_event(event)?.stakes());
    }

    // The isolated point can violate joint wealth positivity when the
    // per-event cash levels are small; shrink radially until feasible.
    {
        let totals = ws.block_totals(&x);
        let mut min_excess = 0.0;
        for (j, event) in markets.events().iter().enumerate() {
            let mut worst = f64::INFINITY;
            for i in 0..event.len() {
                let k = ws.offsets[j] + i;
                worst = worst.min(x[k] * ws.inv_prices[k] - totals[j]);
            }
            min_excess += worst;
        }
        if 1.0 + min_excess <= 1e-9 {
            let theta = 0.95 / (-min_excess);
            for v in &mut x {
                *v *= theta;
            }
        }
    }

    let mut free: Vec<bool> = x.iter().map(|&v| v > 0.0).collect();
    let mut iterations = 0;
    loop {
        let (mut value, mut grad, _) = ws.objective_grad(markets, &x, false)?;
        let mut res = free_residual(&x, &grad, &free);
        while res > tol {
            if iterations >= max_iter {
                return Err(Error::NoConvergence {
                    max_iter,
                    residual: res,
                });
            }
            iterations += 1;

            let active: Vec<usize> = (0..ws.dim).filter(|&k| free[k]).collect();
            let (_, _, hess) = ws.objective_grad(markets, &x, true)?;
            let hess = hess.expect("hessian requested");
            let nf = active.len();
            let mut reduced = DMatrix::<f64>::zeros(nf, nf);
            for (a, &ka) in active.iter().enumerate() {
                for (b, &kb) in active.iter().enumerate() {
                    reduced[(a, b)] = -hess[(ka, kb)];
                }
            }
            let g_free = DVector::from_iterator(nf, active.iter().map(|&k| grad[k]));
            let direction = match Cholesky::new(reduced) {
                Some(chol) => chol.solve(&g_free),
                // Near-singular curvature: fall back to a plain ascent step.
                None => g_free.clone(),
            };

            let mut step = 1.0;
            let mut accepted = false;
            while step > 1e-22 {
                let mut candidate = x.clone();
                for (a, &k) in active.iter().enumerate() {
                    candidate[k] = (candidate[k] + step * direction[a]).max(0.0);
                }
                if candidate.iter().sum::<f64>() > 1.0 {
                    step *= 0.5;
                    continue;
                }
                match ws.objective_grad(markets, &candidate, false) {
                    Ok((v2, g2, _)) => {
                        let r2 = free_residual(&candidate, &g2, &free);
                        // The exact objective carries ~1e-16 summation
                        // round-off; comparisons below that scale would
                        // veto genuinely optimal Newton steps, so the
                        // endgame merit is residual decrease.
                        let noise = 1e-14 * value.abs().max(1.0);
                        let improved_value = v2 > value + noise;
                        let improved_residual = v2 >= value - noise && r2 <= 0.9 * res;
                        if improved_value || improved_residual {
                            x = candidate;
                            value = v2;
                            grad = g2;
                            res = r2;
                            accepted = true;
                            break;
                        }
                    }
                    Err(Error::InfeasibleStakes { .. }) => {}
                    Err(e) => return Err(e),
                }
                step *= 0.5;
            }
            if !accepted {
                // Numerically stationary on this support.
                break;
            }
            // Coordinates pinned at zero with nonpositive gradient leave
            // the free set.
            for &k in &active {
                if x[k] == 0.0 && grad[k] <= 0.0 {
                    free[k] = false;
                }
            }
        }

        if res > tol {
            return Err(Error::NoConvergence {
                max_iter,
                residual: res,
            });
        }
        // The support is stationary; release any pinned coordinate whose
        // gradient says it genuinely belongs in the solution.
        let releases: Vec<usize> = (0..ws.dim).filter(|&k| !free[k] && grad[k] > tol).collect();
        if releases.is_empty() {
            let cash = 1.0 - x.iter().sum::<f64>();
            return Ok(SinglesSolution {
                stakes: ws.unflatten(&x),
                cash,
                objective: value,
                kkt_residual: projected_residual(&x, &grad),
                iterations,
            });
        }
        for k in releases {
            free[k] = true;
        }
    }
}

/// Output of the generic ticket-space oracle.
#[derive(Debug, Clone)]
pub struct TicketOracleSolution {
    pub book: TicketBook,
    /// Achieved `E[log W]` in nats.
    pub objective: f64,
    /// `max_γ g_γ − 1` at exit; an upper bound on the optimality gap.
    pub certificate: f64,
    pub iterations: usize,
}

/// Maximize `E[log W_x(I)]` over the full ticket simplex by
/// multiplicative mirror-ascent updates `x_γ ← x_γ · exp(η (g_γ − 1))`.
///
/// Deliberately independent of the closed form: uniform start over the
/// whole menu, no use of the single-event solutions. The identity
/// `∑_γ x_γ g_γ = 1` makes the unit step the classical multiplicative
/// update; the step is adapted by backtracking on the exact objective.
/// Stops when on-support gradients are within `tol` of 1 and no ticket's
/// gradient exceeds `1 + tol` (a duality certificate), or when no step
/// improves the objective beyond round-off.
pub fn optimize_ticket_space(
    markets: &MarketSet,
    tol: f64,
    max_iter: usize,
    caps: &Caps,
) -> Result<TicketOracleSolution> {
    let required = ticket_count(markets);
    if required > caps.max_oracle_tickets as u128 {
        return Err(Error::MenuTooLarge {
            required,
            cap: caps.max_oracle_tickets,
        });
    }
    let states = check_state_cap(markets, caps.max_states)?;
    let tickets = enumerate_tickets(markets, caps.max_oracle_tickets)?;
    let nt = tickets.len();

    let inv_price: Vec<f64> = tickets
        .iter()
        .map(|t| Ok(1.0 / ticket_price(t, markets)?))
        .collect::<Result<_>>()?;
    // Compatible tickets per state and state probabilities, precomputed.
    let mut state_probs = Vec::with_capacity(states);
    let mut compat: Vec<Vec<usize>> = Vec::with_capacity(states);
    for_each_state(markets, |state, prob| {
        state_probs.push(prob);
        compat.push(
            tickets
                .iter()
                .enumerate()
                .filter(|(_, t)| t.matches(state))
                .map(|(k, _)| k)
                .collect(),
        );
    });

    let eval = |x: &[f64]| -> (f64, Vec<f64>) {
        let mut value = 0.0;
        let mut grad = vec![0.0; nt];
        for (s, members) in compat.iter().enumerate() {
            let w: f64 = members.iter().map(|&k| x[k] * inv_price[k]).sum();
            value += state_probs[s] * w.ln();
            let scale = state_probs[s] / w;
            for &k in members {
                grad[k] += scale * inv_price[k];
            }
        }
        (value, grad)
    };

    let support_eps = 1e-9;
    let mut x = vec![1.0 / nt as f64; nt];
    let (mut value, mut grad) = eval(&x);
    let mut eta = 1.0;
    let mut iterations = 0;
    let mut certificate;
    loop {
        let max_g = grad.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        certificate = max_g - 1.0;
        let on_support_res = x
            .iter()
            .zip(&grad)
            .filter(|(xi, _)| **xi > support_eps)
            .map(|(_, gi)| (gi - 1.0).abs())
            .fold(0.0f64, f64::max);
        if on_support_res <= tol && max_g <= 1.0 + tol {
            break;
        }
        if iterations >= max_iter {
            return Err(Error::NoConvergence {
                max_iter,
                residual: certificate.max(on_support_res),
            });
        }
        iterations += 1;

        let threshold = 1e-17 * value.abs().max(1.0);
        let mut stepped = false;
        while eta > 1e-13 {
            let mut candidate: Vec<f64> = x
                .iter()
                .zip(&grad)
                .map(|(xi, gi)| xi * (eta * (gi - 1.0)).clamp(-60.0, 60.0).exp())
                .collect();
            let total: f64 = candidate.iter().sum();
            for v in &mut candidate {
                *v /= total;
            }
            let (v2, g2) = eval(&candidate);
            if v2 > value + threshold {
                x = candidate;
                value = v2;
                grad = g2;
                eta = (eta * 2.0).min(1e13);
                stepped = true;
                break;
            }
            eta *= 0.5;
        }
        if !stepped {
            // No step improves the exact objective beyond round-off: the
            // iterate is numerically optimal even if the flat directions
            // keep the certificate from reaching tol.
            break;
        }
    }

    let stakes = tickets
        .into_iter()
        .zip(x)
        .filter(|(_, v)| *v > 0.0)
        .collect();
    Ok(TicketOracleSolution {
        book: TicketBook::from_stakes(stakes)?,
        objective: value,
        certificate,
        iterations,
    })
}

/// How the exact parlay optimum compares with the singles-only optimum.
#[derive(Debug, Clone)]
pub struct GrowthGapReport {
    /// Closed-form `V_par`.
    pub v_par: f64,
    /// Numerically maximized `V_sing`.
    pub v_sing: f64,
    /// `V_par − V_sing >= 0`: what forbidding parlays costs, in nats.
    pub gap: f64,
}

/// Compute `V_par` (closed form) and `V_sing` (numerical) and their gap.
pub fn growth_gap(
    markets: &MarketSet,
    tol: f64,
    max_iter: usize,
    caps: &Caps,
) -> Result<GrowthGapReport> {
    let v_par = parlay_growth(markets)?;
    let singles = optimize_singles(markets, tol, max_iter, caps)?;
    let v_sing = singles.objective();
    Ok(GrowthGapReport {
        v_par,
        v_sing,
        gap: v_par - v_sing,
    })
}
