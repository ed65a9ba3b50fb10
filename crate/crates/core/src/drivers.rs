//! End-to-end solvers: the cutting-plane algorithm, branch-and-cut with lazy
//! cuts, the direct outer-approximation (DOA) baseline, the greedy + exchange
//! heuristic, and exhaustive enumeration for oracle-scale instances.

use std::cell::RefCell;
use std::time::Instant;

use serde::Serialize;

use crate::cuts::{check_violations, make_oa_cuts, make_sc_cuts, Aggregation, CutPool, LinearCut, Violation};
use crate::error::{Error, Result};
use crate::instance::{CnlInstance, SolutionVector};
use crate::master::{self, branch_and_bound, branch_order, node_bound, solve_master, MasterMode};
use crate::par;
use crate::reform::{lift, marginal_gain, objective_gradient, objective_value_continuous, phi_set};

pub const DEFAULT_ITER_CAP: usize = 10_000;
pub const DEFAULT_TIME_CAP: f64 = 3600.0;
/// Relative factor applied to total demand for the default gap tolerance.
pub const DEFAULT_EPS_REL: f64 = 1e-6;
/// Constraint-violation tolerance for cut separation.
pub const VIOLATION_TOL: f64 = 1e-9;
const EXCHANGE_PASS_CAP: usize = 50;
const IMPROVE_TOL: f64 = 1e-12;

/// Shared solver controls. `eps` is an absolute gap tolerance; when unset it
/// defaults to `1e-6` times total demand.
#[derive(Clone, Copy, Debug)]
pub struct SolveParams {
    pub eps: Option<f64>,
    pub iter_cap: usize,
    pub time_cap: f64,
    pub aggregation: Aggregation,
}

impl Default for SolveParams {
    fn default() -> Self {
        Self {
            eps: None,
            iter_cap: DEFAULT_ITER_CAP,
            time_cap: DEFAULT_TIME_CAP,
            aggregation: Aggregation::PerType,
        }
    }
}

impl SolveParams {
    pub fn eps_for(&self, inst: &CnlInstance) -> f64 {
        self.eps.unwrap_or(DEFAULT_EPS_REL * inst.total_demand())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    Converged,
    IterationCap,
    TimeCap,
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Termination::Converged => "converged",
            Termination::IterationCap => "iteration-cap",
            Termination::TimeCap => "time-cap",
        })
    }
}

/// Outcome of one solver run. `ub` is `+inf` for heuristics that certify
/// nothing; for the DOA baseline it is clamped to `lb` from below and the
/// optimality flag is forced off, since its cuts do not bound a non-concave
/// objective.
#[derive(Clone, Debug, Serialize)]
pub struct SolveReport {
    pub method: String,
    pub incumbent: Vec<bool>,
    pub lb: f64,
    pub ub: f64,
    pub optimal: bool,
    pub iterations: usize,
    pub cuts_oa: usize,
    pub cuts_sc: usize,
    pub time_s: f64,
    pub termination: Termination,
    /// `(lb, ub)` after each iteration.
    pub history: Vec<(f64, f64)>,
    /// Candidate sequence, for diagnostics only.
    #[serde(skip)]
    pub candidates: Vec<Vec<bool>>,
}

impl SolveReport {
    /// Relative optimality gap, clamped at zero; `+inf` without a bound.
    pub fn gap(&self) -> f64 {
        if !self.ub.is_finite() {
            return f64::INFINITY;
        }
        ((self.ub - self.lb) / self.ub.abs().max(1e-12)).max(0.0)
    }

    /// Checks the report's structural invariants against the instance.
    pub fn validate(&self, inst: &CnlInstance) -> Result<()> {
        if self.lb > self.ub + 1e-9 {
            return Err(Error::Domain(format!("LB {} above UB {}", self.lb, self.ub)));
        }
        let f = objective_of_open(inst, &x_to_open(&self.incumbent));
        if (f - self.lb).abs() > 1e-9 {
            return Err(Error::Domain(format!(
                "LB {} does not match incumbent objective {f}",
                self.lb
            )));
        }
        Ok(())
    }
}

fn x_to_open(x: &[bool]) -> Vec<usize> {
    (0..x.len()).filter(|&i| x[i]).collect()
}

/// `F` restricted to an open set, summing the per-type captured demands.
pub fn objective_of_open(inst: &CnlInstance, open: &[usize]) -> f64 {
    (0..inst.num_types()).map(|t| phi_set(inst, t, open)).sum()
}

/// Greedy construction: add the site with the largest total marginal gain
/// until `r` sites are open (ties by lowest index). Returns sorted indices.
pub fn greedy_construct(inst: &CnlInstance) -> Vec<usize> {
    let mut open: Vec<usize> = Vec::with_capacity(inst.r());
    for _ in 0..inst.r() {
        let mut best: Option<(f64, usize)> = None;
        for i in 0..inst.m() {
            if open.contains(&i) {
                continue;
            }
            let gain: f64 = (0..inst.num_types())
                .map(|t| marginal_gain(inst, t, &open, i))
                .sum();
            if best.map_or(true, |(g, _)| gain > g) {
                best = Some((gain, i));
            }
        }
        open.push(best.expect("r <= m").1);
    }
    open.sort_unstable();
    open
}

/// Greedy heuristic, optionally followed by first-improvement exchange
/// passes (lexicographic scan, at most 50 passes). No upper bound.
pub fn greedy_solve(inst: &CnlInstance, exchange: bool) -> Result<SolveReport> {
    let start = Instant::now();
    let mut open = greedy_construct(inst);
    let mut val = objective_of_open(inst, &open);
    if exchange {
        for _ in 0..EXCHANGE_PASS_CAP {
            let mut improved = false;
            'scan: for pos in 0..open.len() {
                for j in 0..inst.m() {
                    if open.contains(&j) {
                        continue;
                    }
                    let mut cand = open.clone();
                    cand[pos] = j;
                    cand.sort_unstable();
                    let v = objective_of_open(inst, &cand);
                    if v > val + IMPROVE_TOL {
                        open = cand;
                        val = v;
                        improved = true;
                        break 'scan;
                    }
                }
            }
            if !improved {
                break;
            }
        }
    }
    let incumbent = SolutionVector::from_open(inst.m(), &open).x;
    Ok(SolveReport {
        method: if exchange { "greedy".into() } else { "greedy-noex".into() },
        incumbent,
        lb: val,
        ub: f64::INFINITY,
        optimal: false,
        iterations: 1,
        cuts_oa: 0,
        cuts_sc: 0,
        time_s: start.elapsed().as_secs_f64(),
        termination: Termination::Converged,
        history: vec![(val, f64::INFINITY)],
        candidates: vec![SolutionVector::from_open(inst.m(), &open).x],
    })
}

/// Brute-force maximization of `F` over all feasible subsets.
pub fn exhaustive_solve(inst: &CnlInstance) -> Result<SolveReport> {
    let start = Instant::now();
    let combos = par::binomial(inst.m(), inst.r());
    if combos > master::EXHAUSTIVE_CEILING {
        return Err(Error::Resource(format!(
            "C({}, {}) = {combos} exceeds the exhaustive ceiling",
            inst.m(),
            inst.r()
        )));
    }
    let (best, count) =
        par::max_over_subsets(inst.m(), inst.r(), |open| objective_of_open(inst, open));
    let incumbent = SolutionVector::from_open(inst.m(), &best.open).x;
    Ok(SolveReport {
        method: "exhaustive".into(),
        incumbent: incumbent.clone(),
        lb: best.value,
        ub: best.value,
        optimal: true,
        iterations: count as usize,
        cuts_oa: 0,
        cuts_sc: 0,
        time_s: start.elapsed().as_secs_f64(),
        termination: Termination::Converged,
        history: vec![(best.value, best.value)],
        candidates: vec![incumbent],
    })
}

fn keep_violated_oa(cuts: Vec<LinearCut>, viols: &[Violation]) -> Vec<LinearCut> {
    cuts.into_iter()
        .filter(|c| match *c {
            LinearCut::Oa1 { t, n, .. } => viols.contains(&Violation::Y { t, n }),
            LinearCut::Oa2 { t, .. } => viols.contains(&Violation::Z { t }),
            LinearCut::Oa3 { t, n, .. } => viols.contains(&Violation::Theta { t, n }),
            LinearCut::Sc { .. } => false,
        })
        .collect()
}

/// Cutting-plane algorithm: alternately solve the master exactly and cut off
/// its candidate with OA/SC cuts anchored at the candidate's exact lift.
/// Finite convergence: once a candidate is cut, the master value at that
/// candidate equals `F` there, so candidates never repeat.
pub fn cp_solve(inst: &CnlInstance, params: &SolveParams) -> Result<SolveReport> {
    let start = Instant::now();
    let eps = params.eps_for(inst);
    let mut pool = CutPool::new(inst, params.aggregation);

    let g_open = greedy_construct(inst);
    let gx = SolutionVector::from_open(inst.m(), &g_open).x;
    let mut lb = objective_of_open(inst, &g_open);
    let mut incumbent = gx.clone();
    let seed = lift(inst, &gx)?;
    pool.add_oa_cuts(make_oa_cuts(inst, &seed)?);
    pool.add_sc_cuts(make_sc_cuts(inst, &gx));

    let mut ub = f64::INFINITY;
    let mut history = Vec::new();
    let mut candidates: Vec<Vec<bool>> = Vec::new();
    let mut termination = Termination::IterationCap;
    let mut iterations = 0;

    for _ in 0..params.iter_cap {
        if start.elapsed().as_secs_f64() > params.time_cap {
            termination = Termination::TimeCap;
            break;
        }
        iterations += 1;
        let ms = solve_master(inst, &pool, MasterMode::Auto)?;
        ub = ub.min(ms.value);
        let xbar = ms.x.x;
        let f = objective_of_open(inst, &x_to_open(&xbar));
        if f > lb {
            lb = f;
            incumbent = xbar.clone();
        }
        history.push((lb, ub));
        candidates.push(xbar.clone());
        if ub - lb <= eps {
            termination = Termination::Converged;
            break;
        }

        let viols = check_violations(inst, &xbar, &ms.point, VIOLATION_TOL);
        let before = pool.count_oa + pool.count_sc;
        let exact = lift(inst, &xbar)?;
        pool.add_oa_cuts(keep_violated_oa(make_oa_cuts(inst, &exact)?, &viols));
        let sc: Vec<LinearCut> = make_sc_cuts(inst, &xbar)
            .into_iter()
            .filter(|c| match *c {
                LinearCut::Sc { t, .. } => viols.contains(&Violation::Phi { t }),
                _ => false,
            })
            .collect();
        pool.add_sc_cuts(sc);
        if pool.count_oa + pool.count_sc == before {
            // No separating cut exists: the master already agrees with F at
            // its own optimum, so the remaining gap is numerical noise.
            termination = Termination::Converged;
            break;
        }
    }

    Ok(SolveReport {
        method: "cp".into(),
        incumbent,
        lb,
        ub,
        optimal: ub - lb <= eps,
        iterations,
        cuts_oa: pool.count_oa,
        cuts_sc: pool.count_sc,
        time_s: start.elapsed().as_secs_f64(),
        termination,
        history,
        candidates,
    })
}

/// Branch-and-cut: one branch-and-bound over `x` against the master bound,
/// appending OA/SC cuts lazily whenever a leaf candidate is evaluated. Open
/// nodes see the tightened pool when their bounds are recomputed on pop.
pub fn bc_solve(inst: &CnlInstance, params: &SolveParams) -> Result<SolveReport> {
    let start = Instant::now();
    let eps = params.eps_for(inst);
    let pool = RefCell::new(CutPool::new(inst, params.aggregation));

    let g_open = greedy_construct(inst);
    let gx = SolutionVector::from_open(inst.m(), &g_open).x;
    let lb0 = objective_of_open(inst, &g_open);
    {
        let mut p = pool.borrow_mut();
        let seed = lift(inst, &gx)?;
        p.add_oa_cuts(make_oa_cuts(inst, &seed)?);
        p.add_sc_cuts(make_sc_cuts(inst, &gx));
    }
    let order = branch_order(inst, &pool.borrow());

    let lift_error = RefCell::new(None);
    let leaves: RefCell<Vec<Vec<bool>>> = RefCell::new(Vec::new());
    let out = branch_and_bound(
        inst.m(),
        inst.r(),
        &order,
        Some((g_open.clone(), lb0)),
        true,
        |open, free, k| node_bound(inst, &pool.borrow(), open, free, k),
        |x| {
            let f = objective_of_open(inst, &x_to_open(x));
            leaves.borrow_mut().push(x.to_vec());
            match lift(inst, x) {
                Ok(p) => {
                    let mut pl = pool.borrow_mut();
                    match make_oa_cuts(inst, &p) {
                        Ok(oa) => pl.add_oa_cuts(oa),
                        Err(e) => *lift_error.borrow_mut() = Some(e),
                    }
                    pl.add_sc_cuts(make_sc_cuts(inst, x));
                }
                Err(e) => *lift_error.borrow_mut() = Some(e),
            }
            f
        },
        |nodes| nodes > params.iter_cap || start.elapsed().as_secs_f64() > params.time_cap,
    );
    if let Some(e) = lift_error.into_inner() {
        return Err(e);
    }

    let lb = out.value;
    let ub = if out.complete { out.value } else { out.ub };
    let termination = if out.complete {
        Termination::Converged
    } else if start.elapsed().as_secs_f64() > params.time_cap {
        Termination::TimeCap
    } else {
        Termination::IterationCap
    };
    let pool = pool.into_inner();
    Ok(SolveReport {
        method: "bc".into(),
        incumbent: out.x.clone(),
        lb,
        ub,
        optimal: ub - lb <= eps,
        iterations: out.nodes,
        cuts_oa: pool.count_oa,
        cuts_sc: pool.count_sc,
        time_s: start.elapsed().as_secs_f64(),
        termination,
        history: vec![(lb, ub)],
        candidates: leaves.into_inner(),
    })
}

struct TangentCut {
    coeff: Vec<f64>,
    constant: f64,
}

/// Interior nudge for tangent anchors: at a binary point a nest with no
/// competitor mass and all members closed has W = 0, where `F` has an
/// infinite one-sided slope. Anchoring the tangent just inside the box
/// keeps the gradient finite and, on a concave relaxation, keeps the cut
/// globally valid.
const TANGENT_NUDGE: f64 = 1e-9;

fn tangent_at(inst: &CnlInstance, x: &[bool]) -> Result<TangentCut> {
    let xf: Vec<f64> = x
        .iter()
        .map(|&b| if b { 1.0 - TANGENT_NUDGE } else { TANGENT_NUDGE })
        .collect();
    let coeff = objective_gradient(inst, &xf)?;
    let f = objective_value_continuous(inst, &xf)?;
    let constant = f - coeff.iter().zip(&xf).map(|(g, v)| g * v).sum::<f64>();
    Ok(TangentCut { coeff, constant })
}

/// Direct outer approximation: cutting planes on `max theta` with
/// `theta <= F(xbar) + grad F(xbar)^T (x - xbar)` tangents of `F` itself.
/// Valid only when `F` is concave (Separated configuration); in general a
/// heuristic, so the optimality flag is always false.
pub fn doa_solve(inst: &CnlInstance, params: &SolveParams) -> Result<SolveReport> {
    let start = Instant::now();
    let eps = params.eps_for(inst);
    let m = inst.m();
    let r = inst.r();
    let total_q = inst.total_demand();
    let mut cuts: Vec<TangentCut> = Vec::new();

    let mut lb = 0.0;
    let mut incumbent = vec![false; m];

    let cut_value = |cuts: &[TangentCut], open: &[usize]| -> f64 {
        cuts.iter()
            .map(|c| c.constant + open.iter().map(|&i| c.coeff[i]).sum::<f64>())
            .fold(total_q, f64::min)
    };

    let mut ub = f64::INFINITY;
    let mut history = Vec::new();
    let mut candidates: Vec<Vec<bool>> = Vec::new();
    let mut termination = Termination::IterationCap;
    let mut iterations = 0;

    for _ in 0..params.iter_cap {
        if start.elapsed().as_secs_f64() > params.time_cap {
            termination = Termination::TimeCap;
            break;
        }
        iterations += 1;

        let (xhat, val) = if par::binomial(m, r) <= master::EXHAUSTIVE_CEILING {
            let (best, _) = par::max_over_subsets(m, r, |open| cut_value(&cuts, open));
            (SolutionVector::from_open(m, &best.open).x, best.value)
        } else {
            let mut score = vec![0.0; m];
            for c in &cuts {
                for i in 0..m {
                    score[i] += c.coeff[i].abs();
                }
            }
            let mut order: Vec<usize> = (0..m).collect();
            order.sort_by(|&a, &b| score[b].total_cmp(&score[a]).then(a.cmp(&b)));
            let out = branch_and_bound(
                m,
                r,
                &order,
                None,
                false,
                |open, free, k| {
                    cuts.iter()
                        .map(|c| {
                            c.constant
                                + open.iter().map(|&i| c.coeff[i]).sum::<f64>()
                                + master::top_k_sum(free.iter().map(|&i| c.coeff[i]).collect(), k)
                        })
                        .fold(total_q, f64::min)
                },
                |x| cut_value(&cuts, &x_to_open(x)),
                |_| false,
            );
            (out.x, out.value)
        };

        ub = val.max(lb);
        let f = objective_of_open(inst, &x_to_open(&xhat));
        if f > lb {
            lb = f;
            incumbent = xhat.clone();
        }
        ub = ub.max(lb);
        history.push((lb, ub));
        let revisit = candidates.contains(&xhat);
        candidates.push(xhat.clone());
        if ub - lb <= eps || revisit {
            termination = Termination::Converged;
            break;
        }
        cuts.push(tangent_at(inst, &xhat)?);
    }

    let cuts_oa = cuts.len();
    Ok(SolveReport {
        method: "doa".into(),
        incumbent,
        lb,
        ub,
        optimal: false,
        iterations,
        cuts_oa,
        cuts_sc: 0,
        time_s: start.elapsed().as_secs_f64(),
        termination,
        history,
        candidates,
    })
}
