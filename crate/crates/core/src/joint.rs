//! Exhaustive enumeration of the joint outcome space.
//!
//! All expectations in this crate are exact sums over `∏ n_ℓ` joint
//! states, visited in lexicographic order so results are reproducible to
//! the last bit.

use crate::error::{Error, Result};
use crate::market::MarketSet;

/// Number of joint states `∏ n_ℓ` without overflow.
pub fn state_count(markets: &MarketSet) -> u128 {
    markets.events().iter().map(|e| e.len() as u128).product()
}

/// Check the joint state space against a cap, returning its size.
pub fn check_state_cap(markets: &MarketSet, cap: usize) -> Result<usize> {
    let required = state_count(markets);
    if required > cap as u128 {
        return Err(Error::StateCapExceeded { required, cap });
    }
    Ok(required as usize)
}

/// Visit every joint state `I = (I_1, ..., I_m)` in lexicographic order
/// together with its probability `∏_ℓ p_{ℓ, I_ℓ}`.
pub fn for_each_state<F: FnMut(&[usize], f64)>(markets: &MarketSet, mut visit: F) {
    let sizes = markets.sizes();
    let m = sizes.len();
    let mut state = vec![0usize; m];
    loop {
        let mut prob = 1.0;
        for (j, &i) in state.iter().enumerate() {
            prob *= markets.events()[j].probs()[i];
        }
        visit(&state, prob);
        // Odometer increment, last event fastest.
        let mut k = m;
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            state[k] += 1;
            if state[k] < sizes[k] {
                break;
            }
            state[k] = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::Event;

    fn markets() -> MarketSet {
        MarketSet::new(vec![
            Event::new("a", vec![0.6, 0.4], vec![0.5, 0.5]).unwrap(),
            Event::new("b", vec![0.5, 0.3, 0.2], vec![0.45, 0.35, 0.25]).unwrap(),
        ])
        .unwrap()
    }

    #[test]
    fn enumerates_all_states_with_unit_mass() {
        let ms = markets();
        assert_eq!(state_count(&ms), 6);
        let mut count = 0;
        let mut total = 0.0;
        let mut last: Option<Vec<usize>> = None;
        for_each_state(&ms, |state, prob| {
            count += 1;
            total += prob;
            if let Some(prev) = &last {
                assert!(prev.as_slice() < state, "lexicographic order");
            }
            last = Some(state.to_vec());
        });
        assert_eq!(count, 6);
        assert!((total - 1.0).abs() < 1e-14);
    }

    #[test]
    fn cap_is_enforced() {
        let ms = markets();
        assert!(check_state_cap(&ms, 6).is_ok());
        assert!(matches!(
            check_state_cap(&ms, 5),
            Err(Error::StateCapExceeded {
                required: 6,
                cap: 5
            })
        ));
    }
}
