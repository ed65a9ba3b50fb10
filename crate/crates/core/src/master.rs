//! Exact solver for the cut-pool master problem over binary location vectors
//! with an equality cardinality budget — no external MILP solver.
//!
//! With `x` fixed, the continuous block collapses in closed form by the
//! monotone cut senses: the optimizer pushes `y` down to the max of its OA1
//! tangents, `z` up to the min of its OA2 tangents, `theta` down to
//! `max(0, OA3 tangents)` and `phi` up against the link, the submodular cuts
//! and `q`. Maximizing over `x` is then pure combinatorics: exhaustive
//! enumeration up to a ceiling, branch-and-bound with per-cut sorting bounds
//! above it.

use crate::cuts::CutPool;
use crate::error::{Error, Result};
use crate::instance::{CnlInstance, SolutionVector};
use crate::par::{self, BestSubset};
use crate::reform::ReformPoint;

/// Exhaustive enumeration is allowed up to this many subsets.
pub const EXHAUSTIVE_CEILING: u128 = 2_000_000;

const PRUNE_TOL: f64 = 1e-12;

/// `c * v` with the convention `0 * inf = 0`, so dropped blocks with
/// infinite `y`/`z` stay well defined.
fn lin(c: f64, v: f64) -> f64 {
    if c == 0.0 {
        0.0
    } else {
        c * v
    }
}

fn open_to_x(m: usize, open: &[usize]) -> Vec<bool> {
    let mut x = vec![false; m];
    for &i in open {
        x[i] = true;
    }
    x
}

/// Sum of the `k` largest values in `vals`.
pub(crate) fn top_k_sum(mut vals: Vec<f64>, k: usize) -> f64 {
    if k == 0 {
        return 0.0;
    }
    vals.sort_by(|a, b| b.total_cmp(a));
    vals.iter().take(k).sum()
}

/// Exact optimum of the master problem with `x` fixed, together with the
/// optimal continuous point. An upper bound on `F(x)` for any pool state;
/// equals `F(x)` once the pool holds cuts anchored at the lift of `x`.
pub fn evaluate_pool(inst: &CnlInstance, pool: &CutPool, x: &[bool]) -> (f64, ReformPoint) {
    let tcount = inst.num_types();
    let ncount = inst.num_nests();
    let open: Vec<usize> = (0..inst.m()).filter(|&i| x[i]).collect();

    let mut w = vec![vec![0.0; ncount]; tcount];
    let mut y = vec![vec![f64::NEG_INFINITY; ncount]; tcount];
    let mut z = vec![0.0; tcount];
    let mut theta = vec![vec![0.0; ncount]; tcount];
    let mut phi = vec![0.0; tcount];
    let mut pre = vec![0.0; tcount];

    for t in 0..tcount {
        for n in 0..ncount {
            w[t][n] = inst.nest_weight(t, n, x);
        }
        z[t] = pool.oa2[t]
            .iter()
            .map(|c| c.constant + c.coeff_w.iter().zip(&w[t]).map(|(g, wn)| g * wn).sum::<f64>())
            .fold(f64::INFINITY, f64::min);
        let mut theta_sum = 0.0;
        for n in 0..ncount {
            if inst.ucomp(t, n) <= 0.0 {
                continue;
            }
            y[t][n] = pool.oa1[t][n]
                .iter()
                .map(|c| c.constant + c.coeff_w * w[t][n])
                .fold(f64::NEG_INFINITY, f64::max);
            theta[t][n] = pool.oa3[t][n]
                .iter()
                .map(|c| c.constant + lin(c.coeff_y, y[t][n]) + lin(c.coeff_z, z[t]))
                .fold(0.0, f64::max);
            theta_sum += theta[t][n];
        }
        let link = inst.q(t) * (1.0 - theta_sum);
        pre[t] = link.min(inst.q(t)).max(0.0);
    }

    let mut total = 0.0;
    for (g, types) in pool.groups.iter().enumerate() {
        let sum_pre: f64 = types.iter().map(|&t| pre[t]).sum();
        let cap = pool.sc[g]
            .iter()
            .map(|c| c.constant + open.iter().map(|&i| c.coeff_x[i]).sum::<f64>())
            .fold(f64::INFINITY, f64::min);
        let group_val = sum_pre.min(cap).max(0.0);
        if sum_pre > 0.0 {
            let scale = group_val / sum_pre;
            for &t in types {
                phi[t] = pre[t] * scale;
            }
        }
        total += group_val;
    }
    (total, ReformPoint { w, y, z, theta, phi })
}

fn evaluate_pool_value(inst: &CnlInstance, pool: &CutPool, x: &[bool]) -> f64 {
    evaluate_pool(inst, pool, x).0
}

/// Valid upper bound on `evaluate_pool` over all completions of a partial
/// assignment: `open` is fixed open, `free` may still be opened, exactly `k`
/// of them will be. Per-cut extremes are taken by sorting, so the bound is
/// exact when `k == 0` and `free` is irrelevant.
pub fn node_bound(
    inst: &CnlInstance,
    pool: &CutPool,
    open: &[usize],
    free: &[usize],
    k: usize,
) -> f64 {
    let tcount = inst.num_types();
    let ncount = inst.num_nests();
    let mut pre = vec![0.0; tcount];

    for t in 0..tcount {
        // Base and maximal nest weights over completions.
        let mut w_base = vec![0.0; ncount];
        let mut w_max = vec![0.0; ncount];
        for n in 0..ncount {
            let base: f64 =
                inst.ucomp(t, n) + open.iter().map(|&i| inst.weight(t, n, i)).sum::<f64>();
            w_base[n] = base;
            w_max[n] = base
                + top_k_sum(free.iter().map(|&i| inst.weight(t, n, i)).collect(), k);
        }
        // z is maximized cut-wise: each OA2 cut is nondecreasing in x.
        let z_ub = pool.oa2[t]
            .iter()
            .map(|c| {
                let fixed: f64 = c.constant
                    + c.coeff_w.iter().zip(&w_base).map(|(g, w)| g * w).sum::<f64>();
                let site_coeffs: Vec<f64> = free
                    .iter()
                    .map(|&i| (0..ncount).map(|n| c.coeff_w[n] * inst.weight(t, n, i)).sum())
                    .collect();
                fixed + top_k_sum(site_coeffs, k)
            })
            .fold(f64::INFINITY, f64::min);
        let mut theta_sum = 0.0;
        for n in 0..ncount {
            if inst.ucomp(t, n) <= 0.0 {
                continue;
            }
            // y is minimized at maximal W (OA1 cuts are nonincreasing in x).
            let y_lb = pool.oa1[t][n]
                .iter()
                .map(|c| c.constant + c.coeff_w * w_max[n])
                .fold(f64::NEG_INFINITY, f64::max);
            let theta_lb = pool.oa3[t][n]
                .iter()
                .map(|c| c.constant + lin(c.coeff_y, y_lb) + lin(c.coeff_z, z_ub))
                .fold(0.0, f64::max);
            theta_sum += theta_lb;
        }
        let link = inst.q(t) * (1.0 - theta_sum);
        pre[t] = link.min(inst.q(t)).max(0.0);
    }

    let mut total = 0.0;
    for (g, types) in pool.groups.iter().enumerate() {
        let sum_pre: f64 = types.iter().map(|&t| pre[t]).sum();
        let cap = pool.sc[g]
            .iter()
            .map(|c| {
                c.constant
                    + open.iter().map(|&i| c.coeff_x[i]).sum::<f64>()
                    + top_k_sum(free.iter().map(|&i| c.coeff_x[i]).collect(), k)
            })
            .fold(f64::INFINITY, f64::min);
        total += sum_pre.min(cap).max(0.0);
    }
    total
}

/// Branch order: sites with the largest absolute submodular-cut coefficient
/// mass first, ties by index.
pub fn branch_order(inst: &CnlInstance, pool: &CutPool) -> Vec<usize> {
    let m = inst.m();
    let mut score = vec![0.0; m];
    for cuts in &pool.sc {
        for c in cuts {
            for i in 0..m {
                score[i] += c.coeff_x[i].abs();
            }
        }
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| score[b].total_cmp(&score[a]).then(a.cmp(&b)));
    order
}

/// Result of one branch-and-bound run.
#[derive(Clone, Debug)]
pub struct BnbOutcome {
    pub x: Vec<bool>,
    pub value: f64,
    /// Valid upper bound on the true optimum; equals `value` when complete.
    pub ub: f64,
    pub nodes: usize,
    pub complete: bool,
}

#[derive(Clone, Debug)]
struct Node {
    bound: f64,
    depth: usize,
    open: Vec<usize>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == std::cmp::Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // Best-bound-first, then depth-first, then lexicographically smaller
    // open set; BinaryHeap pops the maximum.
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.bound
            .total_cmp(&other.bound)
            .then(self.depth.cmp(&other.depth))
            .then_with(|| other.open.cmp(&self.open))
    }
}

/// Generic best-bound-first branch-and-bound over `sum x = r`.
///
/// `order` fixes the branching sequence of sites. `bound_fn(open, free, k)`
/// must upper-bound `eval` over completions opening exactly `k` of `free`.
/// With `rebound` set, bounds are recomputed on pop — required when `eval`
/// tightens the bound state as a side effect (lazy cuts); recomputed bounds
/// must only decrease. `stop(nodes)` aborts with a still-valid upper bound.
pub fn branch_and_bound(
    m: usize,
    r: usize,
    order: &[usize],
    init: Option<(Vec<usize>, f64)>,
    rebound: bool,
    mut bound_fn: impl FnMut(&[usize], &[usize], usize) -> f64,
    mut eval: impl FnMut(&[bool]) -> f64,
    mut stop: impl FnMut(usize) -> bool,
) -> BnbOutcome {
    assert_eq!(order.len(), m);
    assert!(r >= 1 && r <= m);
    let mut best: Option<BestSubset> = init.map(|(mut open, value)| {
        open.sort_unstable();
        BestSubset { open, value }
    });
    let best_val = |b: &Option<BestSubset>| b.as_ref().map_or(f64::NEG_INFINITY, |s| s.value);

    let mut heap = std::collections::BinaryHeap::new();
    let root_bound = bound_fn(&[], order, r);
    heap.push(Node { bound: root_bound, depth: 0, open: Vec::new() });
    let mut nodes = 0usize;
    let mut complete = true;
    let mut ub = f64::NEG_INFINITY;

    while let Some(node) = heap.pop() {
        nodes += 1;
        if stop(nodes) {
            complete = false;
            ub = node.bound.max(best_val(&best));
            break;
        }
        // Stored bounds only tighten, so once the best stored bound cannot
        // beat the incumbent nothing remaining can.
        if node.bound <= best_val(&best) + PRUNE_TOL {
            break;
        }
        let free = &order[node.depth..];
        let k = r - node.open.len();
        if rebound {
            let b = bound_fn(&node.open, free, k);
            if b <= best_val(&best) + PRUNE_TOL {
                continue;
            }
        }
        if k == 0 || k == free.len() {
            // Forced completion: close (or open) everything remaining.
            let mut open = node.open.clone();
            if k > 0 {
                open.extend_from_slice(free);
            }
            open.sort_unstable();
            let x = open_to_x(m, &open);
            let v = eval(&x);
            let take = match &best {
                None => true,
                Some(b) => par::better(v, &open, b),
            };
            if take {
                best = Some(BestSubset { open, value: v });
            }
            continue;
        }
        let site = free[0];
        let rest = &order[node.depth + 1..];
        // Open-first child ordering; the heap re-sorts by bound anyway.
        let mut open_child = node.open.clone();
        open_child.push(site);
        let b = bound_fn(&open_child, rest, k - 1);
        if b > best_val(&best) + PRUNE_TOL {
            heap.push(Node { bound: b, depth: node.depth + 1, open: open_child });
        }
        if rest.len() >= k {
            let b = bound_fn(&node.open, rest, k);
            if b > best_val(&best) + PRUNE_TOL {
                heap.push(Node { bound: b, depth: node.depth + 1, open: node.open });
            }
        }
    }

    let best = best.expect("branch-and-bound explored no leaf");
    if complete {
        ub = best.value;
    }
    BnbOutcome { x: open_to_x(m, &best.open), value: best.value, ub, nodes, complete }
}

/// How `solve_master` searches the binary space.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MasterMode {
    Exhaustive,
    BranchAndBound,
    /// Exhaustive when `C(m, r)` is within the ceiling, else branch-and-bound.
    Auto,
}

#[derive(Clone, Debug)]
pub struct MasterSolution {
    pub x: SolutionVector,
    pub value: f64,
    pub point: ReformPoint,
    pub nodes: usize,
}

/// Maximize the master over all feasible `x` (equality budget). The returned
/// value upper-bounds `F(x)` for every feasible `x`.
pub fn solve_master(inst: &CnlInstance, pool: &CutPool, mode: MasterMode) -> Result<MasterSolution> {
    let m = inst.m();
    let r = inst.r();
    let combos = par::binomial(m, r);
    let exhaustive = match mode {
        MasterMode::Exhaustive => {
            if combos > EXHAUSTIVE_CEILING {
                return Err(Error::Resource(format!(
                    "C({m}, {r}) = {combos} exceeds the exhaustive ceiling {EXHAUSTIVE_CEILING}"
                )));
            }
            true
        }
        MasterMode::BranchAndBound => false,
        MasterMode::Auto => combos <= EXHAUSTIVE_CEILING,
    };

    let (x, value, nodes) = if exhaustive {
        let (best, count) = par::max_over_subsets(m, r, |open| {
            evaluate_pool_value(inst, pool, &open_to_x(m, open))
        });
        (open_to_x(m, &best.open), best.value, count as usize)
    } else {
        let order = branch_order(inst, pool);
        let out = branch_and_bound(
            m,
            r,
            &order,
            None,
            false,
            |open, free, k| node_bound(inst, pool, open, free, k),
            |x| evaluate_pool_value(inst, pool, x),
            |_| false,
        );
        (out.x, out.value, out.nodes)
    };

    let point = evaluate_pool(inst, pool, &x).1;
    let mut sol = SolutionVector { x, value: None };
    sol.value = Some(value);
    Ok(MasterSolution { x: sol, value, point, nodes })
}
