//! Closed-form and numeric reference quantities for clearing-price policies
//! under known bid and cost distributions, and brute-force loss minimizers
//! used as test oracles.

use thiserror::Error;

use crate::datagen::{AuctionRecord, BidDistribution};
use crate::losses::{clearing_loss, LossSpec};
use crate::market::MarketInstance;

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("balance equation has no root: {0}")]
    NoRoot(String),
    #[error("{name} = {value} is out of range: {expected}")]
    OutOfRange { name: &'static str, value: f64, expected: &'static str },
}

const BISECTION_ITERS: usize = 200;

/// Endpoints of the root set of expected demand minus expected supply,
/// `Σ μ_i (1 - F_i(p)) - Σ λ_j G_j(p)`, which is nonincreasing in `p`.
pub fn balance_interval(
    buyers: &[(f64, BidDistribution)],
    sellers: &[(f64, BidDistribution)],
) -> Result<(f64, f64), OracleError> {
    let demand: f64 = buyers.iter().map(|(mu, _)| mu).sum();
    let supply: f64 = sellers.iter().map(|(lambda, _)| lambda).sum();
    if buyers.iter().chain(sellers).any(|(q, _)| !(q.is_finite() && *q >= 0.0)) {
        return Err(OracleError::NoRoot("quantities must be finite and >= 0".into()));
    }
    if demand <= 0.0 || supply <= 0.0 {
        return Err(OracleError::NoRoot(format!("total demand {demand} and supply {supply} must both be positive")));
    }
    // (Σμ - ΣλG) - ΣμF: keeps tiny F(p) from being absorbed when 1 - F(p) rounds to 1
    let excess = |p: f64| -> f64 {
        let filled: f64 = buyers.iter().map(|(mu, f)| mu * f.cdf(p)).sum();
        let s: f64 = sellers.iter().map(|(lambda, g)| lambda * g.cdf(p)).sum();
        (demand - s) - filled
    };

    let supports = buyers.iter().chain(sellers).map(|(_, d)| d.support());
    let lower = supports.clone().map(|s| s.0).fold(f64::INFINITY, f64::min);
    let upper = supports.map(|s| s.1).filter(|u| u.is_finite()).fold(lower, f64::max);
    let lo = lower - 1.0;
    let mut hi = upper + 1.0;
    let mut doublings = 0;
    while excess(hi) >= 0.0 {
        doublings += 1;
        if doublings > 1100 {
            return Err(OracleError::NoRoot("excess demand stays nonnegative".into()));
        }
        hi = hi * 2.0 + 1.0;
    }

    // inf { p : excess(p) <= 0 }
    let root_lo = bisect(lo, hi, |p| excess(p) <= 0.0);
    // sup { p : excess(p) >= 0 } is the last point where `excess < 0` is false
    let root_hi = bisect(lo, hi, |p| excess(p) < 0.0);
    Ok((root_lo.min(root_hi), root_hi.max(root_lo)))
}

/// Boundary of a monotone predicate that is false at `a` and true at `b`.
fn bisect(mut a: f64, mut b: f64, pred: impl Fn(f64) -> bool) -> f64 {
    for _ in 0..BISECTION_ITERS {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        if pred(mid) {
            b = mid;
        } else {
            a = mid;
        }
        if b - a < 1e-13 {
            break;
        }
    }
    0.5 * (a + b)
}

/// Price balancing expected demand and supply; the midpoint of the root set
/// when the balance function is flat at zero.
pub fn balance_price(
    buyers: &[(f64, BidDistribution)],
    sellers: &[(f64, BidDistribution)],
) -> Result<f64, OracleError> {
    let (lo, hi) = balance_interval(buyers, sellers)?;
    Ok(0.5 * (lo + hi))
}

/// `F^{-1}(1 - λ/n)`: the clearing policy for `n` i.i.d. bidders and zero cost.
pub fn quantile_price(dist: &BidDistribution, n: usize, lambda: f64) -> Result<f64, OracleError> {
    check_lambda_le_n(n, lambda)?;
    Ok(dist.quantile(1.0 - lambda / n as f64))
}

fn check_lambda_le_n(n: usize, lambda: f64) -> Result<(), OracleError> {
    if n == 0 {
        return Err(OracleError::OutOfRange { name: "n", value: 0.0, expected: "n >= 1" });
    }
    if !(0.0..=n as f64).contains(&lambda) {
        return Err(OracleError::OutOfRange { name: "lambda", value: lambda, expected: "0 <= lambda <= n" });
    }
    Ok(())
}

/// `1 - e^{-λ}`.
pub fn match_rate_lower_bound(lambda: f64) -> f64 {
    -(-lambda).exp_m1()
}

/// Multiplicative welfare guarantee relative to the no-reserve welfare; the
/// same number as [`match_rate_lower_bound`].
pub fn welfare_lower_bound(lambda: f64) -> f64 {
    match_rate_lower_bound(lambda)
}

/// `ln(1 / (1 - mr))`, the inverse of [`match_rate_lower_bound`].
pub fn lambda_for_target_match_rate(mr: f64) -> Result<f64, OracleError> {
    if !(0.0..1.0).contains(&mr) {
        return Err(OracleError::OutOfRange { name: "match rate", value: mr, expected: "0 <= mr < 1" });
    }
    Ok(-(-mr).ln_1p())
}

/// `1 - (1 - λ/n)^n`: match rate of the quantile policy with `n` i.i.d. bidders.
pub fn exact_iid_match_rate(n: usize, lambda: f64) -> Result<f64, OracleError> {
    check_lambda_le_n(n, lambda)?;
    Ok(1.0 - (1.0 - lambda / n as f64).powi(n as i32))
}

/// Inclusive price grid `lo, lo + h, ..., hi` with `steps` points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriceGrid {
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
}

impl PriceGrid {
    pub fn new(lo: f64, hi: f64, steps: usize) -> Self {
        assert!(steps >= 2 && lo < hi, "grid needs steps >= 2 and lo < hi");
        Self { lo, hi, steps }
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        let h = (self.hi - self.lo) / (self.steps - 1) as f64;
        (0..self.steps).map(move |k| if k + 1 == self.steps { self.hi } else { self.lo + k as f64 * h })
    }
}

#[derive(Debug, Clone, Copy)]
pub enum OracleTarget<'a> {
    Record(&'a AuctionRecord),
    /// Always evaluated with the market clearing loss; the loss kind and
    /// parameters are ignored.
    Instance(&'a MarketInstance),
}

/// Exhaustive minimization over the grid plus every in-range breakpoint.
/// Ties resolve to the smallest price.
pub fn brute_force_min_loss(target: OracleTarget<'_>, loss: &LossSpec, grid: PriceGrid) -> (f64, f64) {
    let (mut candidates, eval): (Vec<f64>, Box<dyn Fn(f64) -> f64 + '_>) = match target {
        OracleTarget::Record(r) => (loss.breakpoints(r), Box::new(move |p| loss.value(p, r))),
        OracleTarget::Instance(m) => (m.breakpoints(), Box::new(move |p| clearing_loss(p, m).value)),
    };
    candidates.retain(|p| (grid.lo..=grid.hi).contains(p));
    candidates.extend(grid.points());
    candidates.sort_by(f64::total_cmp);
    let mut best = (f64::NAN, f64::INFINITY);
    for p in candidates {
        let v = eval(p);
        if v < best.1 {
            best = (p, v);
        }
    }
    best
}

/// Grid minimizer of the dataset-average auction clearing loss.
///
/// Uses sorted bids and costs with prefix sums, so each grid point costs
/// `O(log N)` while still evaluating the loss exactly.
pub fn brute_force_min_mean_clearing_loss(records: &[AuctionRecord], lambda: f64, grid: PriceGrid) -> (f64, f64) {
    let mut bids: Vec<f64> = records.iter().flat_map(|r| r.bids.iter().copied()).collect();
    let mut costs: Vec<f64> = records.iter().map(|r| r.cost).collect();
    bids.sort_by(f64::total_cmp);
    costs.sort_by(f64::total_cmp);
    let prefix = |xs: &[f64]| {
        let mut acc = vec![0.0; xs.len() + 1];
        for (k, x) in xs.iter().enumerate() {
            acc[k + 1] = acc[k] + x;
        }
        acc
    };
    let bid_prefix = prefix(&bids);
    let cost_prefix = prefix(&costs);
    let n = records.len().max(1) as f64;

    let mean_loss = |p: f64| {
        // Σ_{b > p} (b - p)
        let k = bids.partition_point(|&b| b <= p);
        let demand = (bid_prefix[bids.len()] - bid_prefix[k]) - p * (bids.len() - k) as f64;
        // Σ_{c < p} (p - c)
        let j = costs.partition_point(|&c| c < p);
        let supply = p * j as f64 - cost_prefix[j];
        (demand + lambda * supply) / n
    };
    let mut best = (f64::NAN, f64::INFINITY);
    for p in grid.points() {
        let v = mean_loss(p);
        if v < best.1 {
            best = (p, v);
        }
    }
    best
}
