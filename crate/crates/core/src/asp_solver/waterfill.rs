//! Price search for one ASP.
//!
//! With effective prices p_f = c_f + lambda_f and p_b = c_b + lambda_b, write
//! s = 1/sqrt(p_f) and t = 1/sqrt(p_b). Each MU then receives
//!
//!   f = max(sqrt(R A) s, (A + sqrt(A C) s/t) / kappa)
//!   b = max(sqrt(R C) t, (C + sqrt(A C) t/s) / kappa)
//!
//! where the first branch is the unconstrained optimum and the second the
//! cheapest allocation on the QoE = 0 surface. Both branches switch together,
//! so the compute sum is piecewise linear in s for fixed t and the compute
//! budget is met by an exact segment solve. The bandwidth price is found by
//! bracketing on t around that inner solve.

use super::Pair;

/// One term max(k s, alpha + beta s) of a convex piecewise-linear sum.
#[derive(Debug, Clone, Copy)]
pub(crate) struct MaxAffine {
    pub k: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl MaxAffine {
    #[inline]
    pub fn eval(&self, s: f64) -> f64 {
        (self.k * s).max(self.alpha + self.beta * s)
    }

    /// Point where the linear branch takes over, infinite if it never does.
    fn breakpoint(&self) -> f64 {
        if self.k > self.beta {
            self.alpha / (self.k - self.beta)
        } else {
            f64::INFINITY
        }
    }
}

pub(crate) fn sum_at(terms: &[MaxAffine], s: f64) -> f64 {
    terms.iter().map(|t| t.eval(s)).sum()
}

/// Largest s in (0, s_max] with sum(s) <= target, or None when even s -> 0
/// overshoots (sum of intercepts >= target).
pub(crate) fn solve_budget(terms: &[MaxAffine], target: f64, s_max: f64) -> Option<f64> {
    if sum_at(terms, s_max) <= target {
        return Some(s_max);
    }
    let floor: f64 = terms.iter().map(|t| t.alpha).sum();
    if floor >= target {
        return None;
    }
    let mut knots: Vec<f64> = terms
        .iter()
        .map(MaxAffine::breakpoint)
        .filter(|b| *b > 0.0 && *b < s_max)
        .collect();
    knots.sort_by(f64::total_cmp);
    knots.push(s_max);
    let mut lo = 0.0;
    for &hi in &knots {
        if hi <= lo {
            continue;
        }
        if sum_at(terms, hi) >= target {
            // Linear on [lo, hi]: classify each term at the midpoint.
            let mid = 0.5 * (lo + hi);
            let (mut a, mut k) = (0.0, 0.0);
            for t in terms {
                if t.k * mid >= t.alpha + t.beta * mid {
                    k += t.k;
                } else {
                    a += t.alpha;
                    k += t.beta;
                }
            }
            let s = if k > 0.0 { (target - a) / k } else { hi };
            return Some(s.clamp(lo, hi));
        }
        lo = hi;
    }
    Some(s_max)
}

/// Compute-side terms for a given bandwidth variable t.
pub(crate) fn compute_terms(pairs: &[Pair], kappa: f64, t: f64, out: &mut Vec<MaxAffine>) {
    out.clear();
    out.extend(pairs.iter().map(|p| MaxAffine {
        k: (p.r * p.a).sqrt(),
        alpha: p.a / kappa,
        beta: (p.a * p.c).sqrt() / (kappa * t),
    }));
}

/// Per-MU allocation at given (s, t), plus whether the QoE floor binds.
#[inline]
pub(crate) fn joint_alloc(p: &Pair, kappa: f64, s: f64, t: f64) -> (f64, f64, bool) {
    let w = (p.a.sqrt() / s + p.c.sqrt() / t) / kappa;
    let lifted = p.r.sqrt() < w;
    if lifted {
        let ac = (p.a * p.c).sqrt();
        ((p.a + ac * s / t) / kappa, (p.c + ac * t / s) / kappa, true)
    } else {
        ((p.r * p.a).sqrt() * s, (p.r * p.c).sqrt() * t, false)
    }
}

/// Bandwidth sum after the compute budget has been met at this t.
pub(crate) fn bandwidth_sum(
    pairs: &[Pair],
    kappa: f64,
    f_max: f64,
    s_max: f64,
    t: f64,
    scratch: &mut Vec<MaxAffine>,
) -> Option<(f64, f64)> {
    compute_terms(pairs, kappa, t, scratch);
    let s = solve_budget(scratch, f_max, s_max)?;
    let total = pairs.iter().map(|p| joint_alloc(p, kappa, s, t).1).sum();
    Some((s, total))
}

/// Smallest bandwidth sum reachable while spending at most `f_max` on
/// compute and keeping every QoE at zero or above. None if compute alone
/// cannot meet the latency bound.
pub(crate) fn min_bandwidth_sum(pairs: &[Pair], kappa: f64, f_max: f64) -> Option<f64> {
    let sum_a: f64 = pairs.iter().map(|p| p.a).sum();
    let sum_ac: f64 = pairs.iter().map(|p| (p.a * p.c).sqrt()).sum();
    let slack = kappa * f_max - sum_a;
    if slack <= 0.0 {
        return None;
    }
    let rho = slack / sum_ac;
    Some(pairs.iter().map(|p| (p.c + (p.a * p.c).sqrt() / rho) / kappa).sum())
}
