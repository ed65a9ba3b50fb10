//! Change of variables turning the capture objective into a convex program,
//! the nonlinear constraint functions with their gradients, and the
//! submodular per-type set function with marginal gains.
//!
//! For a binary solution `x` the lifted point carries, per type `t` and nest
//! `n`, the nest weight `W_tn`, `y_tn = (sigma-1) ln W_tn + ln U^c_tn`,
//! `z_t = ln sum_n W_tn^sigma`, `theta_tn = exp(y_tn - z_t)` and
//! `phi_t = q_t (1 - sum_n theta_tn)`. Blocks with `U^c_tn = 0` contribute
//! nothing to the objective and are dropped: their `y` is `-inf` and their
//! `theta` is zero.

use crate::choice::{pow_guarded, pow_m1_times};
use crate::error::{Error, Result};
use crate::instance::{CnlInstance, W_GUARD};

/// Arguments to `exp(y - z)` larger than this are rejected as out of range.
pub const EXP_ARG_MAX: f64 = 700.0;

/// The auxiliary continuous point associated with a binary solution.
#[derive(Clone, Debug)]
pub struct ReformPoint {
    pub w: Vec<Vec<f64>>,
    pub y: Vec<Vec<f64>>,
    pub z: Vec<f64>,
    pub theta: Vec<Vec<f64>>,
    pub phi: Vec<f64>,
}

impl ReformPoint {
    pub fn total_phi(&self) -> f64 {
        self.phi.iter().sum()
    }
}

/// Exactly lift a feasible binary solution into the reformulation's
/// variable space. `sum_t phi_t` equals the objective value of `x`.
pub fn lift(inst: &CnlInstance, x: &[bool]) -> Result<ReformPoint> {
    let tcount = inst.num_types();
    let ncount = inst.num_nests();
    let mut w = vec![vec![0.0; ncount]; tcount];
    let mut y = vec![vec![f64::NEG_INFINITY; ncount]; tcount];
    let mut z = vec![0.0; tcount];
    let mut theta = vec![vec![0.0; ncount]; tcount];
    let mut phi = vec![0.0; tcount];

    for t in 0..tcount {
        let mut denom = 0.0;
        for n in 0..ncount {
            w[t][n] = inst.nest_weight(t, n, x);
            denom += pow_guarded(w[t][n], inst.sigma(t, n));
        }
        if denom == 0.0 {
            return Err(Error::Domain(
                "cannot lift: all nest weights are zero for some type".into(),
            ));
        }
        z[t] = denom.ln();
        let mut theta_sum = 0.0;
        for n in 0..ncount {
            let uc = inst.ucomp(t, n);
            if uc > 0.0 {
                y[t][n] = (inst.sigma(t, n) - 1.0) * w[t][n].ln() + uc.ln();
                theta[t][n] = (y[t][n] - z[t]).exp();
                theta_sum += theta[t][n];
            }
        }
        phi[t] = inst.q(t) * (1.0 - theta_sum);
    }
    Ok(ReformPoint { w, y, z, theta, phi })
}

/// `Psi^theta(y, z) = exp(y - z)`.
pub fn psi_theta(y: f64, z: f64) -> Result<f64> {
    let arg = y - z;
    if arg > EXP_ARG_MAX {
        return Err(Error::NumericRange(format!("exp argument {arg} too large")));
    }
    if arg.is_nan() {
        return Err(Error::NumericRange("indeterminate exp argument".into()));
    }
    Ok(arg.exp())
}

/// Gradient of `Psi^theta` with respect to `(y, z)`.
pub fn psi_theta_grad(y: f64, z: f64) -> Result<(f64, f64)> {
    let e = psi_theta(y, z)?;
    Ok((e, -e))
}

/// `Psi^y_tn(W) = (sigma - 1) ln W + ln U^c_tn`.
pub fn psi_y(inst: &CnlInstance, t: usize, n: usize, w: f64) -> Result<f64> {
    let uc = inst.ucomp(t, n);
    if w <= 0.0 {
        return Err(Error::Domain(format!("nonpositive nest weight {w}")));
    }
    if uc <= 0.0 {
        return Err(Error::Domain(format!(
            "no competitor mass in nest {n} for type {t}"
        )));
    }
    Ok((inst.sigma(t, n) - 1.0) * w.ln() + uc.ln())
}

/// Derivative of `Psi^y_tn` in `W`; nonpositive since `sigma <= 1`.
pub fn psi_y_grad(inst: &CnlInstance, t: usize, n: usize, w: f64) -> Result<f64> {
    if w <= 0.0 {
        return Err(Error::Domain(format!("nonpositive nest weight {w}")));
    }
    Ok((inst.sigma(t, n) - 1.0) / w)
}

/// `Psi^z_t(W) = ln sum_n W_tn^sigma_tn`.
pub fn psi_z(inst: &CnlInstance, t: usize, w_row: &[f64]) -> Result<f64> {
    let mut d = 0.0;
    for n in 0..inst.num_nests() {
        d += pow_guarded(w_row[n], inst.sigma(t, n));
    }
    if d == 0.0 {
        return Err(Error::Domain("all nest weights are zero".into()));
    }
    Ok(d.ln())
}

/// Gradient of `Psi^z_t`; each component is nonnegative.
pub fn psi_z_grad(inst: &CnlInstance, t: usize, w_row: &[f64]) -> Result<Vec<f64>> {
    let mut d = 0.0;
    for n in 0..inst.num_nests() {
        d += pow_guarded(w_row[n], inst.sigma(t, n));
    }
    if d == 0.0 {
        return Err(Error::Domain("all nest weights are zero".into()));
    }
    let mut g = vec![0.0; inst.num_nests()];
    for n in 0..inst.num_nests() {
        let s = inst.sigma(t, n);
        g[n] = s * pow_m1_times(w_row[n], s, 1.0) / d;
    }
    Ok(g)
}

/// Per-type captured demand `Phi_t(S)` of a candidate subset `S`.
pub fn phi_set(inst: &CnlInstance, t: usize, s: &[usize]) -> f64 {
    let ncount = inst.num_nests();
    let mut num = 0.0;
    let mut denom = 0.0;
    for n in 0..ncount {
        let mut w = inst.ucomp(t, n);
        for &i in s {
            w += inst.weight(t, n, i);
        }
        denom += pow_guarded(w, inst.sigma(t, n));
        num += pow_m1_times(w, inst.sigma(t, n), inst.ucomp(t, n));
    }
    if denom == 0.0 {
        return 0.0;
    }
    inst.q(t) * (1.0 - num / denom)
}

/// Marginal gain `rho_ti(S) = Phi_t(S + i) - Phi_t(S)`; zero when `i` is
/// already in `S`.
pub fn marginal_gain(inst: &CnlInstance, t: usize, s: &[usize], i: usize) -> f64 {
    if s.contains(&i) {
        return 0.0;
    }
    let mut with = s.to_vec();
    with.push(i);
    phi_set(inst, t, &with) - phi_set(inst, t, s)
}

/// Objective value on the continuous relaxation `x in [0,1]^m`.
pub fn objective_value_continuous(inst: &CnlInstance, x: &[f64]) -> Result<f64> {
    let mut total = 0.0;
    for t in 0..inst.num_types() {
        let mut num = 0.0;
        let mut denom = 0.0;
        for n in 0..inst.num_nests() {
            let mut w = inst.ucomp(t, n);
            let mut cand = 0.0;
            for mem in inst.members(t, n) {
                if mem.facility < inst.m() {
                    let c = mem.weight * x[mem.facility];
                    w += c;
                    cand += c;
                }
            }
            denom += pow_guarded(w, inst.sigma(t, n));
            num += pow_m1_times(w, inst.sigma(t, n), cand);
        }
        if denom == 0.0 {
            return Err(Error::Domain("zero denominator in relaxed objective".into()));
        }
        total += inst.q(t) * num / denom;
    }
    Ok(total)
}

/// Analytic gradient of the objective on the continuous relaxation.
pub fn objective_gradient(inst: &CnlInstance, x: &[f64]) -> Result<Vec<f64>> {
    let m = inst.m();
    let mut grad = vec![0.0; m];
    for t in 0..inst.num_types() {
        let ncount = inst.num_nests();
        let mut w = vec![0.0; ncount];
        let mut cand = vec![0.0; ncount];
        let mut denom = 0.0;
        let mut num = 0.0;
        for n in 0..ncount {
            let mut wn = inst.ucomp(t, n);
            let mut cn = 0.0;
            for mem in inst.members(t, n) {
                if mem.facility < m {
                    let c = mem.weight * x[mem.facility];
                    wn += c;
                    cn += c;
                }
            }
            w[n] = wn;
            cand[n] = cn;
            denom += pow_guarded(wn, inst.sigma(t, n));
            num += pow_m1_times(wn, inst.sigma(t, n), cn);
        }
        if denom == 0.0 {
            return Err(Error::Domain("zero denominator in objective gradient".into()));
        }
        let q = inst.q(t);
        for n in 0..ncount {
            if w[n] < W_GUARD {
                continue;
            }
            let s = inst.sigma(t, n);
            let pow_s1 = ((s - 1.0) * w[n].ln()).exp();
            let pow_s2 = ((s - 2.0) * w[n].ln()).exp();
            // d numerator / dx_i and d denominator / dx_i, both via a_in.
            let num_coeff = (s - 1.0) * pow_s2 * cand[n] + pow_s1;
            let den_coeff = s * pow_s1;
            for mem in inst.members(t, n) {
                if mem.facility < m {
                    let a = mem.weight;
                    grad[mem.facility] +=
                        q * (num_coeff * a / denom - num * den_coeff * a / (denom * denom));
                }
            }
        }
    }
    Ok(grad)
}
