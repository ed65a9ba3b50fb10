//! Polynomial-time exact solvers for the single-customer-type special cases:
//! MNL by sorting, NL by bisection over the competitor share with a
//! knapsack-style dynamic program across nests.

use crate::choice::{pow_guarded, pow_m1_times};
use crate::error::{Error, Result};
use crate::instance::{CnlInstance, SolutionVector};
use crate::reform::phi_set;

/// Default absolute tolerance factor (times `q_1`) for [`nl_t1_solve`].
pub const NL_EPS_REL: f64 = 1e-9;

fn require_single_type(inst: &CnlInstance) -> Result<()> {
    if inst.num_types() != 1 {
        return Err(Error::Precondition(format!(
            "single-type solver called with T = {}",
            inst.num_types()
        )));
    }
    Ok(())
}

/// Exact solver for the T = 1 MNL case: open the `r` candidates with the
/// largest utilities (ties by lowest index). Requires one nest, or all
/// dissimilarity parameters equal to 1.
pub fn mnl_t1_solve(inst: &CnlInstance) -> Result<SolutionVector> {
    require_single_type(inst)?;
    let mnl = inst.num_nests() == 1
        || (0..inst.num_nests()).all(|n| inst.sigma(0, n) == 1.0);
    if !mnl {
        return Err(Error::Precondition(
            "instance is not MNL: several nests with sigma < 1".into(),
        ));
    }
    let m = inst.m();
    let mut idx: Vec<usize> = (0..m).collect();
    let score = |i: usize| -> f64 { (0..inst.num_nests()).map(|n| inst.weight(0, n, i)).sum() };
    idx.sort_by(|&a, &b| score(b).total_cmp(&score(a)).then(a.cmp(&b)));
    let open: Vec<usize> = {
        let mut o: Vec<usize> = idx.into_iter().take(inst.r()).collect();
        o.sort_unstable();
        o
    };
    let mut sol = SolutionVector::from_open(m, &open);
    sol.value = Some(phi_set(inst, 0, &open));
    Ok(sol)
}

fn one_hot_nest(inst: &CnlInstance, i: usize) -> Option<usize> {
    let mut hot = None;
    for n in 0..inst.num_nests() {
        let a = inst.alpha(0, i, n);
        if a > 1.0 - 1e-12 {
            hot = Some(n);
        } else if a > 1e-12 {
            return None;
        }
    }
    hot
}

struct NlNest {
    sigma: f64,
    ucomp: f64,
    /// Candidate weights sorted descending, as prefix sums; `prefix[u]` is
    /// the mass of opening the `u` strongest sites of the nest.
    prefix: Vec<f64>,
    /// Site indices in the same descending order.
    sites: Vec<usize>,
}

fn nl_structure(inst: &CnlInstance) -> Result<Vec<NlNest>> {
    require_single_type(inst)?;
    let mut nest_of = vec![0usize; inst.m()];
    for i in 0..inst.num_facilities() {
        match one_hot_nest(inst, i) {
            Some(n) => {
                if i < inst.m() {
                    nest_of[i] = n;
                }
            }
            None => {
                return Err(Error::Precondition(format!(
                    "facility {i} has fractional nest membership; not an NL instance"
                )))
            }
        }
    }
    let mut nests: Vec<NlNest> = (0..inst.num_nests())
        .map(|n| NlNest {
            sigma: inst.sigma(0, n),
            ucomp: inst.ucomp(0, n),
            prefix: vec![0.0],
            sites: Vec::new(),
        })
        .collect();
    for i in 0..inst.m() {
        nests[nest_of[i]].sites.push(i);
    }
    for nest in &mut nests {
        nest.sites.sort_by(|&a, &b| {
            let wa: f64 = (0..inst.num_nests()).map(|n| inst.weight(0, n, a)).sum();
            let wb: f64 = (0..inst.num_nests()).map(|n| inst.weight(0, n, b)).sum();
            wb.total_cmp(&wa).then(a.cmp(&b))
        });
        let mut acc = 0.0;
        for &i in &nest.sites {
            acc += (0..inst.num_nests()).map(|n| inst.weight(0, n, i)).sum::<f64>();
            nest.prefix.push(acc);
        }
    }
    Ok(nests)
}

/// Per-nest surrogate `W^(sigma-1) U^c - delta W^sigma` with `u` sites open.
fn nest_term(nest: &NlNest, u: usize, delta: f64) -> f64 {
    let w = nest.ucomp + nest.prefix[u];
    pow_m1_times(w, nest.sigma, nest.ucomp) - delta * pow_guarded(w, nest.sigma)
}

/// Minimum of the parametric surrogate `G(x, delta)` over all feasible `x`
/// with exactly `r` open sites, by dynamic programming over nests (within a
/// nest the strongest prefix is optimal). Returns the minimum, the per-nest
/// open counts attaining it, and the inner-loop operation count.
pub fn nl_g_min(inst: &CnlInstance, delta: f64) -> Result<(f64, Vec<usize>, u64)> {
    let nests = nl_structure(inst)?;
    let r = inst.r();
    let mut ops = 0u64;
    // dp[j]: min cost over processed nests with j sites open.
    let mut dp = vec![f64::INFINITY; r + 1];
    dp[0] = 0.0;
    let mut choice: Vec<Vec<usize>> = Vec::with_capacity(nests.len());
    for nest in &nests {
        let cap = nest.sites.len();
        let mut next = vec![f64::INFINITY; r + 1];
        let mut pick = vec![0usize; r + 1];
        for j in 0..=r {
            for u in 0..=cap.min(j) {
                ops += 1;
                if dp[j - u].is_finite() {
                    let c = dp[j - u] + nest_term(nest, u, delta);
                    if c < next[j] {
                        next[j] = c;
                        pick[j] = u;
                    }
                }
            }
        }
        dp = next;
        choice.push(pick);
    }
    if !dp[r].is_finite() {
        return Err(Error::Domain("budget exceeds candidate count".into()));
    }
    // Recover per-nest counts.
    let mut counts = vec![0usize; nests.len()];
    let mut j = r;
    for (n, pick) in choice.iter().enumerate().rev() {
        counts[n] = pick[j];
        j -= pick[j];
    }
    Ok((dp[r], counts, ops))
}

/// Bisection + DP exact solver for the T = 1 nested-logit case. Finds the
/// minimum competitor share `delta` such that some feasible `x` attains it,
/// within `eps` (default `1e-9 * q_1`) on the objective.
pub fn nl_t1_solve(inst: &CnlInstance, eps: Option<f64>) -> Result<SolutionVector> {
    let nests = nl_structure(inst)?;
    let q = inst.q(0);
    let eps = eps.unwrap_or(NL_EPS_REL * q);
    let m = inst.m();
    let r = inst.r();

    if nests.iter().all(|n| n.ucomp <= 0.0) {
        // No competitor mass: every nonempty solution captures everything.
        let open: Vec<usize> = (0..r).collect();
        let mut sol = SolutionVector::from_open(m, &open);
        sol.value = Some(phi_set(inst, 0, &open));
        return Ok(sol);
    }

    let feasible = |delta: f64| -> Result<Option<Vec<usize>>> {
        let (g, counts, _) = nl_g_min(inst, delta)?;
        Ok(if g <= 0.0 { Some(counts) } else { None })
    };

    // delta is the competitor share F-complement; its optimum lies in (0, 1].
    let mut lo = 0.0f64;
    let mut hi = 2.0f64;
    let mut best = feasible(hi)?.expect("delta = 2 is always feasible");
    let tol = (eps / (q * 2.0)).max(f64::EPSILON);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        match feasible(mid)? {
            Some(counts) => {
                hi = mid;
                best = counts;
            }
            None => lo = mid,
        }
    }

    let mut open = Vec::with_capacity(r);
    for (nest, &u) in nests.iter().zip(&best) {
        open.extend_from_slice(&nest.sites[..u]);
    }
    open.sort_unstable();
    let mut sol = SolutionVector::from_open(m, &open);
    sol.value = Some(phi_set(inst, 0, &open));
    Ok(sol)
}
