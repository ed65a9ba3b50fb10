//! Valid linear cuts for the convexified master problem: tangent
//! (outer-approximation) cuts of the three nonlinear constraint functions and
//! submodular cuts on the per-type captured demand, plus the pool that stores
//! them for a solve.
//!
//! Senses: `y >= tangent(Psi^y)`, `z <= tangent(Psi^z)`,
//! `theta >= tangent(Psi^theta)` and `phi <= linear(x)` for submodular cuts.
//! Together with the link `phi_t <= q_t - sum_n q_t theta_tn` and the
//! structural bounds `theta >= 0`, `0 <= phi <= q`, the master is an
//! upper-bounding relaxation of the capture problem.

use crate::error::Result;
use crate::instance::CnlInstance;
use crate::reform::{marginal_gain, phi_set, psi_theta, psi_y, psi_y_grad, psi_z, psi_z_grad, ReformPoint};

/// Anchors closer than this produce duplicate cuts, which are dropped.
const DUP_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CutKind {
    Oa1,
    Oa2,
    Oa3,
    Sc1,
    Sc2,
}

/// One valid linear cut. Coefficients refer to the variable block named by
/// the variant; the bounded variable and sense are fixed per kind.
#[derive(Clone, Debug)]
pub enum LinearCut {
    /// `y_tn >= constant + coeff_w * W_tn` (coeff_w <= 0).
    Oa1 { t: usize, n: usize, coeff_w: f64, constant: f64 },
    /// `z_t <= constant + sum_n coeff_w[n] * W_tn` (coeff_w >= 0).
    Oa2 { t: usize, coeff_w: Vec<f64>, constant: f64 },
    /// `theta_tn >= constant + coeff_y * y_tn + coeff_z * z_t`
    /// (coeff_y >= 0, coeff_z <= 0).
    Oa3 { t: usize, n: usize, coeff_y: f64, coeff_z: f64, constant: f64 },
    /// `phi_t <= constant + sum_i coeff_x[i] * x_i`.
    Sc { t: usize, kind: CutKind, coeff_x: Vec<f64>, constant: f64 },
}

impl LinearCut {
    pub fn kind(&self) -> CutKind {
        match self {
            LinearCut::Oa1 { .. } => CutKind::Oa1,
            LinearCut::Oa2 { .. } => CutKind::Oa2,
            LinearCut::Oa3 { .. } => CutKind::Oa3,
            LinearCut::Sc { kind, .. } => *kind,
        }
    }
}

/// Tangent cuts of all three constraint families anchored at `at`.
///
/// One OA1 cut per `(t, n)` with competitor mass, one OA2 cut per `t`, one
/// OA3 cut per `(t, n)` with competitor mass (anchored at the point's
/// `(y, z)` when finite). Every cut holds with equality at the anchor.
pub fn make_oa_cuts(inst: &CnlInstance, at: &ReformPoint) -> Result<Vec<LinearCut>> {
    let mut out = Vec::new();
    for t in 0..inst.num_types() {
        for n in 0..inst.num_nests() {
            if inst.ucomp(t, n) <= 0.0 {
                continue;
            }
            let wbar = at.w[t][n];
            let g = psi_y_grad(inst, t, n, wbar)?;
            let val = psi_y(inst, t, n, wbar)?;
            out.push(LinearCut::Oa1 { t, n, coeff_w: g, constant: val - g * wbar });
        }
        let grads = psi_z_grad(inst, t, &at.w[t])?;
        let val = psi_z(inst, t, &at.w[t])?;
        let mut constant = val;
        for n in 0..inst.num_nests() {
            constant -= grads[n] * at.w[t][n];
        }
        out.push(LinearCut::Oa2 { t, coeff_w: grads, constant });
        for n in 0..inst.num_nests() {
            if inst.ucomp(t, n) <= 0.0 {
                continue;
            }
            let (ybar, zbar) = (at.y[t][n], at.z[t]);
            if !ybar.is_finite() || !zbar.is_finite() {
                continue;
            }
            let e = psi_theta(ybar, zbar)?;
            out.push(LinearCut::Oa3 {
                t,
                n,
                coeff_y: e,
                coeff_z: -e,
                constant: e * (1.0 - ybar + zbar),
            });
        }
    }
    Ok(out)
}

/// Submodular cuts (both families) anchored at a feasible binary solution.
pub fn make_sc_cuts(inst: &CnlInstance, xbar: &[bool]) -> Vec<LinearCut> {
    let m = inst.m();
    let open: Vec<usize> = (0..m).filter(|&i| xbar[i]).collect();
    let all: Vec<usize> = (0..m).collect();
    let mut out = Vec::new();
    for t in 0..inst.num_types() {
        let phi_bar = phi_set(inst, t, &open);

        // SC1: gains at xbar for closed sites, losses relative to the full
        // set for open sites.
        let mut coeff1 = vec![0.0; m];
        let mut const1 = phi_bar;
        for i in 0..m {
            if xbar[i] {
                let without: Vec<usize> = all.iter().copied().filter(|&j| j != i).collect();
                let rho = marginal_gain(inst, t, &without, i);
                coeff1[i] = rho;
                const1 -= rho;
            } else {
                coeff1[i] = marginal_gain(inst, t, &open, i);
            }
        }
        out.push(LinearCut::Sc { t, kind: CutKind::Sc1, coeff_x: coeff1, constant: const1 });

        // SC2: gains from the empty set for closed sites, losses relative to
        // xbar itself for open sites.
        let mut coeff2 = vec![0.0; m];
        let mut const2 = phi_bar;
        for i in 0..m {
            if xbar[i] {
                let without: Vec<usize> = open.iter().copied().filter(|&j| j != i).collect();
                let rho = marginal_gain(inst, t, &without, i);
                coeff2[i] = rho;
                const2 -= rho;
            } else {
                coeff2[i] = marginal_gain(inst, t, &[], i);
            }
        }
        out.push(LinearCut::Sc { t, kind: CutKind::Sc2, coeff_x: coeff2, constant: const2 });
    }
    out
}

/// How submodular cuts are grouped over customer types before storage.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Aggregation {
    /// One cut per customer type (default).
    PerType,
    /// Types grouped into chunks of the given size; cuts summed per chunk.
    Grouped(usize),
    /// All types summed into a single cut.
    Single,
}

impl Aggregation {
    fn group_of(&self, t: usize) -> usize {
        match self {
            Aggregation::PerType => t,
            Aggregation::Grouped(k) => t / (*k).max(1),
            Aggregation::Single => 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Oa1Data {
    pub coeff_w: f64,
    pub constant: f64,
}

#[derive(Clone, Debug)]
pub struct Oa2Data {
    pub coeff_w: Vec<f64>,
    pub constant: f64,
}

#[derive(Clone, Debug)]
pub struct Oa3Data {
    pub coeff_y: f64,
    pub coeff_z: f64,
    pub constant: f64,
}

/// Aggregated submodular cut bounding `sum_{t in group} phi_t`.
#[derive(Clone, Debug)]
pub struct ScData {
    pub coeff_x: Vec<f64>,
    pub constant: f64,
}

/// Per-solve cut storage. Pools only grow; structural bounds
/// (`theta >= 0`, `0 <= phi <= q`) are present from construction.
#[derive(Clone, Debug)]
pub struct CutPool {
    pub oa1: Vec<Vec<Vec<Oa1Data>>>,
    pub oa2: Vec<Vec<Oa2Data>>,
    pub oa3: Vec<Vec<Vec<Oa3Data>>>,
    /// Submodular cuts per type group.
    pub sc: Vec<Vec<ScData>>,
    /// Type indices in each group.
    pub groups: Vec<Vec<usize>>,
    pub group_of: Vec<usize>,
    pub count_oa: usize,
    pub count_sc: usize,
}

impl CutPool {
    pub fn new(inst: &CnlInstance, aggregation: Aggregation) -> Self {
        let tcount = inst.num_types();
        let ncount = inst.num_nests();
        let group_of: Vec<usize> = (0..tcount).map(|t| aggregation.group_of(t)).collect();
        let ngroups = group_of.iter().copied().max().map_or(0, |g| g + 1);
        let mut groups = vec![Vec::new(); ngroups];
        for t in 0..tcount {
            groups[group_of[t]].push(t);
        }
        Self {
            oa1: vec![vec![Vec::new(); ncount]; tcount],
            oa2: vec![Vec::new(); tcount],
            oa3: vec![vec![Vec::new(); ncount]; tcount],
            sc: vec![Vec::new(); ngroups],
            groups,
            group_of,
            count_oa: 0,
            count_sc: 0,
        }
    }

    /// Store outer-approximation cuts, dropping near-duplicates.
    pub fn add_oa_cuts(&mut self, cuts: Vec<LinearCut>) {
        for cut in cuts {
            match cut {
                LinearCut::Oa1 { t, n, coeff_w, constant } => {
                    let list = &mut self.oa1[t][n];
                    if !list
                        .iter()
                        .any(|c| (c.coeff_w - coeff_w).abs() <= DUP_TOL && (c.constant - constant).abs() <= DUP_TOL)
                    {
                        list.push(Oa1Data { coeff_w, constant });
                        self.count_oa += 1;
                    }
                }
                LinearCut::Oa2 { t, coeff_w, constant } => {
                    let list = &mut self.oa2[t];
                    let dup = list.iter().any(|c| {
                        (c.constant - constant).abs() <= DUP_TOL
                            && c.coeff_w
                                .iter()
                                .zip(&coeff_w)
                                .all(|(a, b)| (a - b).abs() <= DUP_TOL)
                    });
                    if !dup {
                        list.push(Oa2Data { coeff_w, constant });
                        self.count_oa += 1;
                    }
                }
                LinearCut::Oa3 { t, n, coeff_y, coeff_z, constant } => {
                    let list = &mut self.oa3[t][n];
                    let dup = list.iter().any(|c| {
                        (c.coeff_y - coeff_y).abs() <= DUP_TOL
                            && (c.coeff_z - coeff_z).abs() <= DUP_TOL
                            && (c.constant - constant).abs() <= DUP_TOL
                    });
                    if !dup {
                        list.push(Oa3Data { coeff_y, coeff_z, constant });
                        self.count_oa += 1;
                    }
                }
                LinearCut::Sc { .. } => {
                    panic!("submodular cuts go through add_sc_cuts");
                }
            }
        }
    }

    /// Store submodular cuts, summing per-type cuts over each type group.
    pub fn add_sc_cuts(&mut self, cuts: Vec<LinearCut>) {
        let ngroups = self.groups.len();
        let m = cuts
            .iter()
            .find_map(|c| match c {
                LinearCut::Sc { coeff_x, .. } => Some(coeff_x.len()),
                _ => None,
            })
            .unwrap_or(0);
        // Aggregate separately per cut family so SC1 and SC2 stay distinct.
        for kind in [CutKind::Sc1, CutKind::Sc2] {
            let mut agg: Vec<Option<ScData>> = vec![None; ngroups];
            for cut in &cuts {
                if let LinearCut::Sc { t, kind: k, coeff_x, constant } = cut {
                    if *k != kind {
                        continue;
                    }
                    let g = self.group_of[*t];
                    let entry = agg[g].get_or_insert_with(|| ScData {
                        coeff_x: vec![0.0; m],
                        constant: 0.0,
                    });
                    for i in 0..m {
                        entry.coeff_x[i] += coeff_x[i];
                    }
                    entry.constant += constant;
                }
            }
            for (g, data) in agg.into_iter().enumerate() {
                if let Some(data) = data {
                    let dup = self.sc[g].iter().any(|c| {
                        (c.constant - data.constant).abs() <= DUP_TOL
                            && c.coeff_x
                                .iter()
                                .zip(&data.coeff_x)
                                .all(|(a, b)| (a - b).abs() <= DUP_TOL)
                    });
                    if !dup {
                        self.sc[g].push(data);
                        self.count_sc += 1;
                    }
                }
            }
        }
    }
}

/// A nonlinear constraint violated by a candidate master point.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Violation {
    Theta { t: usize, n: usize },
    Y { t: usize, n: usize },
    Z { t: usize },
    Phi { t: usize },
}

/// Which of the reformulation's nonlinear constraints the candidate point
/// violates beyond `tol` at the binary solution `x`.
pub fn check_violations(
    inst: &CnlInstance,
    x: &[bool],
    point: &ReformPoint,
    tol: f64,
) -> Vec<Violation> {
    let open: Vec<usize> = (0..inst.m()).filter(|&i| x[i]).collect();
    let mut out = Vec::new();
    for t in 0..inst.num_types() {
        for n in 0..inst.num_nests() {
            if inst.ucomp(t, n) <= 0.0 {
                continue;
            }
            if let Ok(exact) = psi_y(inst, t, n, point.w[t][n]) {
                if point.y[t][n] < exact - tol {
                    out.push(Violation::Y { t, n });
                }
            }
            let target = if point.y[t][n].is_finite() && point.z[t].is_finite() {
                (point.y[t][n] - point.z[t]).exp()
            } else {
                0.0
            };
            if point.theta[t][n] < target - tol {
                out.push(Violation::Theta { t, n });
            }
        }
        if let Ok(exact) = psi_z(inst, t, &point.w[t]) {
            if point.z[t] > exact + tol {
                out.push(Violation::Z { t });
            }
        }
        let phi_exact = phi_set(inst, t, &open);
        if point.phi[t] > phi_exact + tol {
            out.push(Violation::Phi { t });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{CnlInstance, InstanceData, NestConfig};
    use crate::reform::lift;

    fn two_nest_inst() -> CnlInstance {
        CnlInstance::new(InstanceData {
            m: 3,
            num_types: 2,
            num_nests: 2,
            n_competitors: 1,
            r: 2,
            config: NestConfig::Sharing,
            q: vec![1.0, 2.0],
            sigma: vec![vec![0.4, 0.8], vec![0.6, 0.9]],
            alpha: vec![
                vec![vec![0.7, 0.3], vec![0.2, 0.8], vec![1.0, 0.0], vec![0.5, 0.5]],
                vec![vec![0.3, 0.7], vec![0.5, 0.5], vec![0.0, 1.0], vec![0.6, 0.4]],
            ],
            v: vec![vec![0.4, -0.2, 0.1, 0.3], vec![-0.1, 0.2, 0.5, 0.0]],
        })
        .unwrap()
    }

    #[test]
    fn oa_cuts_tight_at_anchor() {
        let inst = two_nest_inst();
        let x = vec![true, false, true];
        let p = lift(&inst, &x).unwrap();
        for cut in make_oa_cuts(&inst, &p).unwrap() {
            match cut {
                LinearCut::Oa1 { t, n, coeff_w, constant } => {
                    let rhs = constant + coeff_w * p.w[t][n];
                    assert!((p.y[t][n] - rhs).abs() < 1e-9, "OA1 not tight");
                    assert!(coeff_w <= 0.0);
                }
                LinearCut::Oa2 { t, ref coeff_w, constant } => {
                    let rhs: f64 =
                        constant + coeff_w.iter().zip(&p.w[t]).map(|(g, w)| g * w).sum::<f64>();
                    assert!((p.z[t] - rhs).abs() < 1e-9, "OA2 not tight");
                    assert!(coeff_w.iter().all(|&g| g >= 0.0));
                }
                LinearCut::Oa3 { t, n, coeff_y, coeff_z, constant } => {
                    let rhs = constant + coeff_y * p.y[t][n] + coeff_z * p.z[t];
                    assert!((p.theta[t][n] - rhs).abs() < 1e-9, "OA3 not tight");
                    assert!(coeff_y >= 0.0 && coeff_z <= 0.0);
                }
                LinearCut::Sc { .. } => unreachable!(),
            }
        }
    }

    #[test]
    fn oa1_degenerates_at_sigma_one() {
        let mut data = two_nest_inst().data().clone();
        for t in 0..2 {
            for n in 0..2 {
                data.sigma[t][n] = 1.0;
            }
        }
        let inst = CnlInstance::new(data).unwrap();
        let x = vec![true, true, false];
        let p = lift(&inst, &x).unwrap();
        for cut in make_oa_cuts(&inst, &p).unwrap() {
            if let LinearCut::Oa1 { t, n, coeff_w, constant } = cut {
                assert_eq!(coeff_w, 0.0);
                assert!((constant - inst.ucomp(t, n).ln()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn sc1_at_empty_anchor_reduces_to_gains() {
        let inst = two_nest_inst();
        let xbar = vec![false, false, false];
        for cut in make_sc_cuts(&inst, &xbar) {
            if let LinearCut::Sc { t, kind: CutKind::Sc1, coeff_x, constant } = cut {
                assert!(constant.abs() < 1e-12);
                for i in 0..3 {
                    let rho = marginal_gain(&inst, t, &[], i);
                    assert!((coeff_x[i] - rho).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn sc_cuts_tight_at_anchor() {
        let inst = two_nest_inst();
        let xbar = vec![true, true, false];
        let open = vec![0usize, 1];
        for cut in make_sc_cuts(&inst, &xbar) {
            if let LinearCut::Sc { t, coeff_x, constant, .. } = cut {
                let mut val = constant;
                for i in 0..3 {
                    if xbar[i] {
                        val += coeff_x[i];
                    }
                }
                let phi_bar = phi_set(&inst, t, &open);
                assert!((val - phi_bar).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn lifted_point_has_no_violations() {
        let inst = two_nest_inst();
        let x = vec![false, true, true];
        let p = lift(&inst, &x).unwrap();
        assert!(check_violations(&inst, &x, &p, 1e-9).is_empty());
    }

    #[test]
    fn inflated_z_is_reported() {
        let inst = two_nest_inst();
        let x = vec![false, true, true];
        let mut p = lift(&inst, &x).unwrap();
        p.z[0] += 1.0;
        let v = check_violations(&inst, &x, &p, 1e-9);
        assert!(v.contains(&Violation::Z { t: 0 }));
    }

    #[test]
    fn duplicate_cuts_are_dropped() {
        let inst = two_nest_inst();
        let x = vec![true, false, true];
        let p = lift(&inst, &x).unwrap();
        let mut pool = CutPool::new(&inst, Aggregation::PerType);
        pool.add_oa_cuts(make_oa_cuts(&inst, &p).unwrap());
        let before = pool.count_oa;
        pool.add_oa_cuts(make_oa_cuts(&inst, &p).unwrap());
        assert_eq!(pool.count_oa, before);
        pool.add_sc_cuts(make_sc_cuts(&inst, &x));
        let before_sc = pool.count_sc;
        pool.add_sc_cuts(make_sc_cuts(&inst, &x));
        assert_eq!(pool.count_sc, before_sc);
    }

    #[test]
    fn aggregation_groups_types() {
        let inst = two_nest_inst();
        let pool = CutPool::new(&inst, Aggregation::Single);
        assert_eq!(pool.groups.len(), 1);
        assert_eq!(pool.groups[0], vec![0, 1]);
        let pool = CutPool::new(&inst, Aggregation::PerType);
        assert_eq!(pool.groups.len(), 2);
    }
}
