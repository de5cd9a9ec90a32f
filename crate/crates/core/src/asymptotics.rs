//! Low-edge perturbation families and empirical order verification.
//!
//! A family fixes, per event, a fair baseline price vector `π` (summing
//! to 1) and a balanced tilt direction `d` (summing to 0), and sets
//! `p_i(ε) = π_i + ε d_i` with prices held at `π`. The edge then vanishes
//! linearly: the active-support excess returns have mean `a ε` with
//! `a_i = d_i/π_i` and second moment `C = diag(1/π)_A − 𝟙𝟙ᵀ` at `ε = 0`,
//! so every perturbation coefficient is known in closed form:
//!
//! * isolated stakes follow the ray `x_ind(ε) = α ε` with `α = C⁻¹a`,
//! * the simultaneous singles optimum shrinks cubically,
//!   `x_sim = x_ind − Λ_j α_j ε³ + O(ε⁴)` with `Λ_j = ∑_{k≠j} a_kᵀC_k⁻¹a_k`,
//! * the singles score at the isolated point is `−Λ_j a_j ε³ + O(ε⁴)`,
//! * the growth lost by forbidding parlays is `O(ε⁴)`, and the singles
//!   value gained by re-optimizing is `O(ε⁶)`.
//!
//! [`shrinkage_sweep`] measures all of these over a geometric ε-grid and
//! fits log-log slopes.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::book::parlay_growth;
use crate::error::{Error, Result};
use crate::market::{Event, MarketSet};
use crate::single::solve_single_event;
use crate::singles::{optimize_singles, singles_objective, singles_score};
use crate::Caps;

/// Probabilities along the family must stay inside this open interval.
const PROB_LO: f64 = 0.001;
const PROB_HI: f64 = 0.999;

/// Residual tolerance used for the simultaneous solves inside sweeps.
pub const SWEEP_SOLVER_TOL: f64 = 1e-12;
const SWEEP_MAX_ITER: usize = 10_000;

/// Quantities smaller than this are considered indistinguishable from
/// round-off when fitting orders.
pub const NOISE_FLOOR: f64 = 1e-12;

/// One event of a perturbation family.
#[derive(Debug, Clone)]
pub struct FamilyEvent {
    baseline: Vec<f64>,
    direction: Vec<f64>,
    support: Vec<usize>,
}

impl FamilyEvent {
    /// Fair baseline prices `π` (also the event's fixed prices).
    pub fn baseline(&self) -> &[f64] {
        &self.baseline
    }

    /// Probability tilt `d` with `∑ d_i = 0`.
    pub fn direction(&self) -> &[f64] {
        &self.direction
    }

    /// Declared active support `A = {i : d_i > 0}`.
    pub fn support(&self) -> &[usize] {
        &self.support
    }
}

/// An ε-parametrized market family with vanishing edge at `ε = 0`.
#[derive(Debug, Clone)]
pub struct PerturbationFamily {
    events: Vec<FamilyEvent>,
    eps_max: f64,
}

/// Validate and build a family from per-event baselines and directions.
pub fn build_family(baselines: &[Vec<f64>], directions: &[Vec<f64>]) -> Result<PerturbationFamily> {
    if baselines.is_empty() || baselines.len() != directions.len() {
        return Err(Error::Family(format!(
            "need matching nonempty baseline/direction lists, got {} and {}",
            baselines.len(),
            directions.len()
        )));
    }
    let mut events = Vec::with_capacity(baselines.len());
    let mut eps_max = f64::INFINITY;
    for (j, (baseline, direction)) in baselines.iter().zip(directions).enumerate() {
        let label = format!("event {}", j + 1);
        let n = baseline.len();
        if n < 2 || direction.len() != n {
            return Err(Error::Family(format!(
                "{label}: baseline and direction must share a length >= 2"
            )));
        }
        if baseline.iter().any(|&q| !q.is_finite() || q <= 0.0) {
            return Err(Error::Family(format!(
                "{label}: baseline prices must be > 0"
            )));
        }
        let price_sum: f64 = baseline.iter().sum();
        if (price_sum - 1.0).abs() > 1e-12 {
            return Err(Error::Family(format!(
                "{label}: baseline must be fair, ∑π = {price_sum}"
            )));
        }
        if direction.iter().any(|d| !d.is_finite()) {
            return Err(Error::Family(format!("{label}: direction must be finite")));
        }
        let tilt_sum: f64 = direction.iter().sum();
        if tilt_sum.abs() > 1e-12 {
            return Err(Error::Family(format!(
                "{label}: direction must be balanced, ∑d = {tilt_sum}"
            )));
        }
        let support: Vec<usize> = (0..n).filter(|&i| direction[i] > 0.0).collect();
        if support.is_empty() {
            return Err(Error::Family(format!(
                "{label}: empty support (no d_i > 0)"
            )));
        }
        if support.len() == n {
            return Err(Error::Family(format!(
                "{label}: full support (every d_i > 0 is impossible for balanced d)"
            )));
        }
        for i in 0..n {
            let d = direction[i];
            if d > 0.0 {
                eps_max = eps_max.min((PROB_HI - baseline[i]) / d);
            } else if d < 0.0 {
                eps_max = eps_max.min((baseline[i] - PROB_LO) / (-d));
            }
        }
        events.push(FamilyEvent {
            baseline: baseline.clone(),
            direction: direction.clone(),
            support,
        });
    }
    if !eps_max.is_finite() || eps_max <= 0.0 {
        return Err(Error::Family(format!(
            "degenerate validity bound {eps_max}"
        )));
    }
    Ok(PerturbationFamily { events, eps_max })
}

impl PerturbationFamily {
    pub fn events(&self) -> &[FamilyEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        false // at least one event by construction
    }

    /// Largest ε keeping every probability inside (0.001, 0.999).
    pub fn eps_max(&self) -> f64 {
        self.eps_max
    }

    fn check_eps(&self, eps: f64) -> Result<()> {
        if !(0.0..=self.eps_max).contains(&eps) {
            return Err(Error::Family(format!(
                "eps {eps} outside [0, {}]",
                self.eps_max
            )));
        }
        Ok(())
    }

    /// Materialize the market at a given ε: `p = π + ε d`, prices `π`.
    pub fn markets_at(&self, eps: f64) -> Result<MarketSet> {
        self.check_eps(eps)?;
        let events = self
            .events
            .iter()
            .enumerate()
            .map(|(j, fe)| {
                let probs = fe
                    .baseline
                    .iter()
                    .zip(&fe.direction)
                    .map(|(q, d)| q + eps * d)
                    .collect();
                Event::new(format!("e{}", j + 1), probs, fe.baseline.clone())
            })
            .collect::<Result<Vec<_>>>()?;
        MarketSet::new(events)
    }

    /// Closed-form perturbation coefficients on the declared supports.
    pub fn coefficients(&self) -> Result<AsymptoticCoefficients> {
        let mut a = Vec::with_capacity(self.len());
        let mut c = Vec::with_capacity(self.len());
        let mut alpha = Vec::with_capacity(self.len());
        for (j, fe) in self.events.iter().enumerate() {
            let k = fe.support.len();
            let a_j: Vec<f64> = fe
                .support
                .iter()
                .map(|&i| fe.direction[i] / fe.baseline[i])
                .collect();
            let mut c_j = DMatrix::<f64>::from_element(k, k, -1.0);
            for (r, &i) in fe.support.iter().enumerate() {
                c_j[(r, r)] += 1.0 / fe.baseline[i];
            }
            let chol = Cholesky::new(c_j.clone()).ok_or_else(|| {
                Error::Family(format!(
                    "event {}: moment matrix not positive definite",
                    j + 1
                ))
            })?;
            let alpha_j = chol.solve(&DVector::from_vec(a_j.clone()));
            a.push(a_j);
            c.push(c_j);
            alpha.push(alpha_j.iter().copied().collect::<Vec<f64>>());
        }
        let self_terms: Vec<f64> = a
            .iter()
            .zip(&alpha)
            .map(|(aj, alj)| aj.iter().zip(alj).map(|(x, y)| x * y).sum())
            .collect();
        let total: f64 = self_terms.iter().sum();
        let lambda = self_terms.iter().map(|t| total - t).collect();
        Ok(AsymptoticCoefficients {
            a,
            c,
            alpha,
            lambda,
        })
    }
}

/// The closed-form expansion coefficients of a family.
#[derive(Debug, Clone)]
pub struct AsymptoticCoefficients {
    /// `a_j`, the per-ε mean excess return on each support.
    pub a: Vec<Vec<f64>>,
    /// `C_j = diag(1/π)_A − 𝟙𝟙ᵀ`, the ε→0 second-moment matrices.
    pub c: Vec<DMatrix<f64>>,
    /// `α_j = C_j⁻¹ a_j`, the isolated first-order ray.
    pub alpha: Vec<Vec<f64>>,
    /// `Λ_j = ∑_{k≠j} a_kᵀ C_k⁻¹ a_k`, the cubic shrinkage factors.
    pub lambda: Vec<f64>,
}

/// Per-event stake vectors restricted to the declared supports, with a
/// per-event flag telling whether the realized support matched.
#[derive(Debug, Clone)]
pub struct RestrictedStakes {
    /// Support-coordinate stakes per event, in declared support order.
    pub stakes: Vec<Vec<f64>>,
    /// Realized support equals the declared one.
    pub support_ok: Vec<bool>,
}

impl RestrictedStakes {
    pub fn all_supports_ok(&self) -> bool {
        self.support_ok.iter().all(|&b| b)
    }
}

/// Closed-form isolated stakes at `p(ε)`, restricted to the declared
/// supports. A mismatch between the realized and declared active set is
/// flagged, not fatal.
pub fn isolated_stakes(family: &PerturbationFamily, eps: f64) -> Result<RestrictedStakes> {
    let markets = family.markets_at(eps)?;
    let mut stakes = Vec::with_capacity(family.len());
    let mut support_ok = Vec::with_capacity(family.len());
    for (fe, event) in family.events().iter().zip(markets.events()) {
        let sol = solve_single_event(event)?;
        support_ok.push(sol.active_set() == fe.support());
        stakes.push(fe.support.iter().map(|&i| sol.stakes()[i]).collect());
    }
    Ok(RestrictedStakes { stakes, support_ok })
}

/// Simultaneous singles-only stakes at `p(ε)` (solved to residual
/// [`SWEEP_SOLVER_TOL`]), restricted to the declared supports.
pub fn simultaneous_stakes(
    family: &PerturbationFamily,
    eps: f64,
    caps: &Caps,
) -> Result<RestrictedStakes> {
    let markets = family.markets_at(eps)?;
    let sol = optimize_singles(&markets, SWEEP_SOLVER_TOL, SWEEP_MAX_ITER, caps)?;
    let mut stakes = Vec::with_capacity(family.len());
    let mut support_ok = Vec::with_capacity(family.len());
    for (j, fe) in family.events().iter().enumerate() {
        let realized: Vec<usize> = (0..fe.baseline.len())
            .filter(|&i| sol.stakes()[j][i] > 0.0)
            .collect();
        support_ok.push(realized == fe.support);
        stakes.push(fe.support.iter().map(|&i| sol.stakes()[j][i]).collect());
    }
    Ok(RestrictedStakes { stakes, support_ok })
}

/// The exact singles score at the isolated point, with its cubic
/// prediction `−Λ_j a_j ε³`.
#[derive(Debug, Clone)]
pub struct IsolatedResidual {
    /// `F_j(x_ind(ε), ε)` per event on the declared support.
    pub residual: Vec<Vec<f64>>,
    /// `−Λ_j a_j ε³` per event.
    pub predicted: Vec<Vec<f64>>,
}

/// Evaluate the singles-only KKT map exactly at the isolated stakes.
pub fn kkt_residual_at_isolated(
    family: &PerturbationFamily,
    eps: f64,
    caps: &Caps,
) -> Result<IsolatedResidual> {
    let markets = family.markets_at(eps)?;
    let isolated = isolated_stakes(family, eps)?;
    let full = expand_to_full(family, &isolated.stakes);
    let score = singles_score(&markets, &full, caps)?;
    let coeffs = family.coefficients()?;
    let mut residual = Vec::with_capacity(family.len());
    let mut predicted = Vec::with_capacity(family.len());
    for (j, fe) in family.events().iter().enumerate() {
        residual.push(fe.support.iter().map(|&i| score[j][i]).collect());
        predicted.push(
            coeffs.a[j]
                .iter()
                .map(|&a| -coeffs.lambda[j] * a * eps.powi(3))
                .collect(),
        );
    }
    Ok(IsolatedResidual {
        residual,
        predicted,
    })
}

fn expand_to_full(family: &PerturbationFamily, restricted: &[Vec<f64>]) -> Vec<Vec<f64>> {
    family
        .events()
        .iter()
        .zip(restricted)
        .map(|(fe, r)| {
            let mut full = vec![0.0; fe.baseline.len()];
            for (k, &i) in fe.support.iter().enumerate() {
                full[i] = r[k];
            }
            full
        })
        .collect()
}

/// A log-log least-squares fit `log y ≈ slope · log x + intercept`.
#[derive(Debug, Clone, Copy)]
pub struct OrderFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares on `(log x, log y)`; the slope estimates the
/// power-law order of `y` in `x`.
pub fn estimate_order(xs: &[f64], ys: &[f64]) -> Result<OrderFit> {
    if xs.len() != ys.len() || xs.len() < 3 {
        return Err(Error::OrderEstimation(format!(
            "need >= 3 paired points, got {} and {}",
            xs.len(),
            ys.len()
        )));
    }
    for (&x, &y) in xs.iter().zip(ys) {
        if !x.is_finite() || x <= 0.0 || !y.is_finite() || y <= 0.0 {
            return Err(Error::OrderEstimation(format!(
                "nonpositive point (x={x}, y={y}); shrink the grid"
            )));
        }
    }
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ly.iter().map(|y| (y - my) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::OrderEstimation(
            "grid points must be distinct".into(),
        ));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| {
            let e = y - (intercept + slope * x);
            e * e
        })
        .sum();
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - ss_res / syy };
    Ok(OrderFit {
        slope,
        intercept,
        r_squared,
    })
}

/// Exact simultaneous Kelly fractions for two independent even-money
/// binary bets with edges `m1`, `m2`:
/// `f_1 = m_1(1 − m_2²)/(1 − m_1²m_2²)` and symmetrically `f_2`.
pub fn thorp_exact(m1: f64, m2: f64) -> (f64, f64) {
    debug_assert!(m1.abs() < 1.0 && m2.abs() < 1.0);
    let denom = 1.0 - m1 * m1 * m2 * m2;
    (m1 * (1.0 - m2 * m2) / denom, m2 * (1.0 - m1 * m1) / denom)
}

/// One grid point of a shrinkage sweep. Stake-like vectors live on the
/// declared supports, per event.
#[derive(Debug, Clone)]
pub struct SweepRecord {
    pub eps: f64,
    pub x_ind: Vec<Vec<f64>>,
    pub x_sim: Vec<Vec<f64>>,
    /// `x_sim − x_ind`.
    pub delta: Vec<Vec<f64>>,
    /// `−Λ_j α_j ε³`.
    pub predicted_delta: Vec<Vec<f64>>,
    pub v_par: f64,
    pub v_sing: f64,
    /// `v_par − v_sing >= 0`.
    pub gap: f64,
    /// Exact singles score at the isolated point.
    pub kkt_residual_at_isolated: Vec<Vec<f64>>,
    /// `−Λ_j a_j ε³`.
    pub predicted_residual: Vec<Vec<f64>>,
    /// `G_sing(x_ind)`, the singles value of the isolated test point.
    pub singles_value_at_isolated: f64,
    /// Both solvers realized the declared supports at this ε.
    pub support_ok: bool,
}

/// Fitted orders and prefactor checks over a sweep grid.
#[derive(Debug, Clone)]
pub struct SweepSummary {
    pub records: Vec<SweepRecord>,
    /// Order of `‖x_sim − x_ind‖` (expected 3).
    pub delta_fit: OrderFit,
    /// Order of `v_par − v_sing` (expected 4).
    pub gap_fit: OrderFit,
    /// Per-event order of `‖F_j(x_ind)‖` (expected 3).
    pub residual_fits: Vec<OrderFit>,
    /// Order of `G_sing(x_sim) − G_sing(x_ind)` (expected 6); `None` when
    /// the quantity falls under [`NOISE_FLOOR`] somewhere on the grid.
    pub sextic_fit: Option<OrderFit>,
    pub sextic_below_noise_floor: bool,
    /// `Δ_j/(−Λ_j α_j ε³)` componentwise at the smallest valid ε.
    pub delta_ratio_at_smallest: Vec<Vec<f64>>,
    /// `F_j/(−Λ_j a_j ε³)` componentwise at the smallest valid ε.
    pub residual_ratio_at_smallest: Vec<Vec<f64>>,
}

/// Default sweep grid: 6 geometric points with ratio 1.5 topping out at
/// `0.2 · eps_max`.
pub fn default_eps_grid(family: &PerturbationFamily) -> Vec<f64> {
    geometric_grid(0.2 * family.eps_max(), 1.5, 6)
}

/// Larger-ε grid for the sextic check, whose signal would otherwise sink
/// below round-off: 5 points, ratio 1.5, topping out at `0.35 · eps_max`.
pub fn sextic_eps_grid(family: &PerturbationFamily) -> Vec<f64> {
    geometric_grid(0.35 * family.eps_max(), 1.5, 5)
}

fn geometric_grid(top: f64, ratio: f64, points: usize) -> Vec<f64> {
    (0..points)
        .rev()
        .map(|k| top / ratio.powi(k as i32))
        .collect()
}

/// Run the full comparison at every grid point and fit the predicted
/// orders: cubic stake shrinkage, quartic growth loss, cubic score
/// residual, and the sextic re-optimization gain.
///
/// Records whose realized supports deviate from the declared ones are
/// flagged and excluded from the fits; fewer than 4 valid records is an
/// error.
pub fn shrinkage_sweep(
    family: &PerturbationFamily,
    eps_grid: &[f64],
    caps: &Caps,
) -> Result<SweepSummary> {
    if eps_grid.len() < 4 {
        return Err(Error::Sweep(format!(
            "grid needs >= 4 points, got {}",
            eps_grid.len()
        )));
    }
    let mut sorted = eps_grid.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for &eps in &sorted {
        if !(eps > 0.0 && eps <= family.eps_max()) {
            return Err(Error::Sweep(format!(
                "grid point {eps} outside (0, {}]",
                family.eps_max()
            )));
        }
    }

    let coeffs = family.coefficients()?;
    let mut records = Vec::with_capacity(sorted.len());
    for &eps in &sorted {
        let markets = family.markets_at(eps)?;
        let isolated = isolated_stakes(family, eps)?;
        let simultaneous = simultaneous_stakes(family, eps, caps)?;
        let support_ok = isolated.all_supports_ok() && simultaneous.all_supports_ok();

        let sim_full = expand_to_full(family, &simultaneous.stakes);
        let ind_full = expand_to_full(family, &isolated.stakes);
        let v_par = parlay_growth(&markets)?;
        let v_sing = singles_objective(&markets, &sim_full, caps)?;
        let singles_value_at_isolated = singles_objective(&markets, &ind_full, caps)?;
        let residual = kkt_residual_at_isolated(family, eps, caps)?;

        let delta: Vec<Vec<f64>> = simultaneous
            .stakes
            .iter()
            .zip(&isolated.stakes)
            .map(|(s, i)| s.iter().zip(i).map(|(a, b)| a - b).collect())
            .collect();
        let predicted_delta: Vec<Vec<f64>> = coeffs
            .alpha
            .iter()
            .enumerate()
            .map(|(j, alpha)| {
                alpha
                    .iter()
                    .map(|&al| -coeffs.lambda[j] * al * eps.powi(3))
                    .collect()
            })
            .collect();

        records.push(SweepRecord {
            eps,
            x_ind: isolated.stakes,
            x_sim: simultaneous.stakes,
            delta,
            predicted_delta,
            v_par,
            v_sing,
            gap: v_par - v_sing,
            kkt_residual_at_isolated: residual.residual,
            predicted_residual: residual.predicted,
            singles_value_at_isolated,
            support_ok,
        });
    }

    let valid: Vec<&SweepRecord> = records.iter().filter(|r| r.support_ok).collect();
    if valid.len() < 4 {
        return Err(Error::Sweep(format!(
            "only {} of {} records kept their declared support",
            valid.len(),
            records.len()
        )));
    }

    let eps_vals: Vec<f64> = valid.iter().map(|r| r.eps).collect();
    let norm = |vv: &[Vec<f64>]| -> f64 {
        vv.iter()
            .flat_map(|v| v.iter())
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt()
    };

    let delta_fit = estimate_order(
        &eps_vals,
        &valid.iter().map(|r| norm(&r.delta)).collect::<Vec<_>>(),
    )?;
    let gap_fit = estimate_order(&eps_vals, &valid.iter().map(|r| r.gap).collect::<Vec<_>>())?;
    let mut residual_fits = Vec::with_capacity(family.len());
    for j in 0..family.len() {
        residual_fits.push(estimate_order(
            &eps_vals,
            &valid
                .iter()
                .map(|r| norm(std::slice::from_ref(&r.kkt_residual_at_isolated[j])))
                .collect::<Vec<_>>(),
        )?);
    }

    let sextic_values: Vec<f64> = valid
        .iter()
        .map(|r| r.v_sing - r.singles_value_at_isolated)
        .collect();
    let sextic_below_noise_floor = sextic_values.iter().any(|&v| v < NOISE_FLOOR);
    let sextic_fit = if sextic_below_noise_floor {
        None
    } else {
        Some(estimate_order(&eps_vals, &sextic_values)?)
    };

    let smallest = valid[0];
    let ratio = |num: &[Vec<f64>], den: &[Vec<f64>]| -> Vec<Vec<f64>> {
        num.iter()
            .zip(den)
            .map(|(ns, ds)| ns.iter().zip(ds).map(|(n, d)| n / d).collect())
            .collect()
    };
    let delta_ratio_at_smallest = ratio(&smallest.delta, &smallest.predicted_delta);
    let residual_ratio_at_smallest = ratio(
        &smallest.kkt_residual_at_isolated,
        &smallest.predicted_residual,
    );

    Ok(SweepSummary {
        records,
        delta_fit,
        gap_fit,
        residual_fits,
        sextic_fit,
        sextic_below_noise_floor,
        delta_ratio_at_smallest,
        residual_ratio_at_smallest,
    })
}
