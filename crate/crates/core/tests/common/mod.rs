//! Shared test machinery: an independent numerical maximizer of the
//! single-event problem, used as the oracle against the closed form.
//!
//! The oracle works on the raw `(c, s_1, ..., s_n)` simplex with
//! projected gradient ascent and never touches the edge-ratio scan or
//! the cash-level formula, so agreement with the closed form is a real
//! two-route check.

use parlay_kelly::market::Event;

/// Euclidean projection onto the probability simplex.
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (k, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let t = (cumsum - 1.0) / (k as f64 + 1.0);
        if u - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

/// Projected-gradient maximization of `∑ p_i log(c + s_i/π_i)` over the
/// `(c, s)` simplex. Returns `(cash, stakes, objective)`.
pub fn brute_force_single(event: &Event, max_iters: usize) -> (f64, Vec<f64>, f64) {
    let n = event.len();
    let probs = event.probs().to_vec();
    let prices = event.prices().to_vec();
    let objective = |y: &[f64]| -> f64 {
        let mut v = 0.0;
        for i in 0..n {
            let w = y[0] + y[i + 1] / prices[i];
            if w <= 0.0 {
                return f64::NEG_INFINITY;
            }
            v += probs[i] * w.ln();
        }
        v
    };
    let gradient = |y: &[f64]| -> Vec<f64> {
        let mut g = vec![0.0; n + 1];
        for i in 0..n {
            let w = y[0] + y[i + 1] / prices[i];
            g[0] += probs[i] / w;
            g[i + 1] = probs[i] / (w * prices[i]);
        }
        g
    };

    let mut y = vec![1.0 / (n as f64 + 1.0); n + 1];
    let mut value = objective(&y);
    let mut step = 1.0;
    for _ in 0..max_iters {
        let g = gradient(&y);
        let mut moved = false;
        while step > 1e-18 {
            let trial: Vec<f64> = y.iter().zip(&g).map(|(a, b)| a + step * b).collect();
            let candidate = project_simplex(&trial);
            let v2 = objective(&candidate);
            if v2 > value + 1e-16 * value.abs().max(1.0) {
                y = candidate;
                value = v2;
                step *= 1.25;
                moved = true;
                break;
            }
            step *= 0.5;
        }
        if !moved {
            break;
        }
    }
    (y[0], y[1..].to_vec(), value)
}
