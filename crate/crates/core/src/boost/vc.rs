//! VC-dimension bounds for boosted stumps and MLPs.

use serde::{Deserialize, Serialize};

use super::BoostError;

/// Upper bound on the VC dimension of `k`-round boosting over a base class of
/// VC dimension `d_base`: `2·k·d_base·ln(k·e)`, natural log.
pub fn vc_bound_boost(d_base: u64, k: u64) -> Result<f64, BoostError> {
    if d_base == 0 || k == 0 {
        return Err(BoostError::InvalidArgument(format!(
            "d_base and k must be >= 1, got d_base={d_base}, k={k}"
        )));
    }
    let (d, k) = (d_base as f64, k as f64);
    // ln(k·e) = ln k + 1
    Ok(2.0 * k * d * (k.ln() + 1.0))
}

/// Asymptotic orders for the VC dimension of an MLP with `V` units and `E`
/// connections: `E²` (tight order) and `E²·V²` (upper order). These are
/// constants-free proxies, not counts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlpVcOrders {
    pub order_lower: f64,
    pub order_upper: f64,
    pub note: String,
}

pub fn vc_bound_mlp(units: u64, connections: u64) -> Result<MlpVcOrders, BoostError> {
    if units == 0 || connections == 0 {
        return Err(BoostError::InvalidArgument(format!(
            "units and connections must be >= 1, got V={units}, E={connections}"
        )));
    }
    let (v, e) = (units as f64, connections as f64);
    Ok(MlpVcOrders {
        order_lower: e * e,
        order_upper: e * e * v * v,
        note: "constants-free orders Θ(E²) and O(E²V²), not counts".into(),
    })
}

/// Smallest `k` with `vc_bound_boost(d_base, k) ≥ target_vc`.
///
/// One concrete choice of complexity mapping from a network's VC proxy to
/// an ensemble size.
pub fn conjecture_map(target_vc: f64, d_base: u64) -> Result<u64, BoostError> {
    if !(target_vc.is_finite() && target_vc > 0.0) {
        return Err(BoostError::InvalidArgument(format!(
            "target_vc must be finite and > 0, got {target_vc}"
        )));
    }
    let reaches = |k: u64| vc_bound_boost(d_base, k).map(|b| b >= target_vc);
    let mut hi = 1u64;
    while !reaches(hi)? {
        hi = hi.checked_mul(2).ok_or_else(|| {
            BoostError::InvalidArgument(format!("target_vc {target_vc} out of range"))
        })?;
    }
    let mut lo = hi / 2; // bound(lo) < target, or lo == 0
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if reaches(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boost_bound_values() {
        let expected = 30.0 * (1.0 + 5f64.ln());
        assert!((vc_bound_boost(3, 5).unwrap() - expected).abs() < 1e-9);
        assert!((expected - 78.28).abs() < 0.01);
        for d in 1..10 {
            assert_eq!(vc_bound_boost(d, 1).unwrap(), 2.0 * d as f64);
        }
        assert!(vc_bound_boost(0, 1).is_err());
        assert!(vc_bound_boost(1, 0).is_err());
    }

    #[test]
    fn mlp_orders() {
        let o = vc_bound_mlp(3, 6).unwrap();
        assert_eq!((o.order_lower, o.order_upper), (36.0, 324.0));
        let o2 = vc_bound_mlp(3, 12).unwrap();
        assert_eq!(o2.order_lower, 4.0 * o.order_lower);
        assert_eq!(o2.order_upper, 4.0 * o.order_upper);
        assert!(vc_bound_mlp(0, 3).is_err());
    }

    #[test]
    fn conjecture_map_examples() {
        for d in 1..20 {
            assert_eq!(conjecture_map(2.0 * d as f64, d).unwrap(), 1);
        }
        assert_eq!(conjecture_map(78.28, 3).unwrap(), 5);
        assert!(conjecture_map(0.0, 3).is_err());
        assert!(conjecture_map(f64::INFINITY, 3).is_err());
    }
}
