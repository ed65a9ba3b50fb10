//! CNL choice probabilities, the captured-demand objective and utility
//! correlation diagnostics.

use crate::error::{Error, Result};
use crate::instance::{CnlInstance, NestConfig, SolutionVector, W_GUARD};

/// `w^s` computed as `exp(s ln w)`, with tiny weights treated as zero.
pub fn pow_guarded(w: f64, s: f64) -> f64 {
    if w < W_GUARD {
        0.0
    } else {
        (s * w.ln()).exp()
    }
}

/// `w^(s-1) * mass`, zero when the nest carries no mass.
pub fn pow_m1_times(w: f64, s: f64, mass: f64) -> f64 {
    if w < W_GUARD || mass == 0.0 {
        0.0
    } else {
        ((s - 1.0) * w.ln()).exp() * mass
    }
}

/// Which choice model a correlation estimate should assume.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CorrelationModel {
    Cnl,
    Nl,
    Mnl,
}

impl CnlInstance {
    /// Total preference weight `W_tn` of nest `n` for type `t` under the open
    /// set `x`: open candidates plus all competitor facilities.
    pub fn nest_weight(&self, t: usize, n: usize, x: &[bool]) -> f64 {
        let mut w = 0.0;
        for mem in self.members(t, n) {
            if mem.facility >= self.m() {
                w += mem.weight;
            } else if x[mem.facility] {
                w += mem.weight;
            }
        }
        w
    }

    /// Candidate-only part of the nest weight.
    pub fn nest_candidate_mass(&self, t: usize, n: usize, x: &[bool]) -> f64 {
        let mut w = 0.0;
        for mem in self.members(t, n) {
            if mem.facility < self.m() && x[mem.facility] {
                w += mem.weight;
            }
        }
        w
    }

    /// Probability that a customer of type `t` selects facility `i`, given
    /// the open candidates `x`. `i` must be an open candidate or a competitor.
    pub fn choice_probability(&self, t: usize, i: usize, x: &[bool]) -> Result<f64> {
        if self.is_candidate(i) && !x[i] {
            return Err(Error::Precondition(format!("facility {i} is not open")));
        }
        let mut num = 0.0;
        let mut denom = 0.0;
        for n in 0..self.num_nests() {
            let w = self.nest_weight(t, n, x);
            denom += pow_guarded(w, self.sigma(t, n));
            num += pow_m1_times(w, self.sigma(t, n), self.weight(t, n, i));
        }
        if denom == 0.0 {
            return Err(Error::Domain(
                "no facility available: all nest weights are zero".into(),
            ));
        }
        Ok(num / denom)
    }

    /// Expected captured demand `F(x)` over all customer types.
    pub fn objective_value(&self, sol: &SolutionVector) -> Result<f64> {
        let mut total = 0.0;
        for t in 0..self.num_types() {
            total += self.objective_term(t, &sol.x)?;
        }
        Ok(total)
    }

    /// Per-type contribution `q_t * sum_n W^(s-1) A_n / sum_n W^s` where
    /// `A_n` is the open-candidate mass of nest `n`.
    pub fn objective_term(&self, t: usize, x: &[bool]) -> Result<f64> {
        let mut num = 0.0;
        let mut denom = 0.0;
        for n in 0..self.num_nests() {
            let w = self.nest_weight(t, n, x);
            denom += pow_guarded(w, self.sigma(t, n));
            num += pow_m1_times(w, self.sigma(t, n), self.nest_candidate_mass(t, n, x));
        }
        if denom == 0.0 {
            return Err(Error::Domain(
                "degenerate instance: empty solution and no competitor mass".into(),
            ));
        }
        Ok(self.q(t) * num / denom)
    }

    /// Separated-configuration form of the objective, written as a sum of
    /// fractions with constant numerators. Only valid on `Separated` instances.
    pub fn objective_value_separated(&self, sol: &SolutionVector) -> Result<f64> {
        if self.config() != NestConfig::Separated {
            return Err(Error::Precondition(
                "objective_value_separated requires a separated configuration".into(),
            ));
        }
        let mut total = 0.0;
        for t in 0..self.num_types() {
            // Competitor nests contribute the constant U^c_t; candidate nests
            // contribute W^sigma that grows with x.
            let mut ucomp_pow = 0.0;
            let mut cand_pow = 0.0;
            for n in 0..self.num_nests() {
                let uc = self.ucomp(t, n);
                if uc > 0.0 {
                    ucomp_pow += pow_guarded(uc, self.sigma(t, n));
                } else {
                    let w = self.nest_candidate_mass(t, n, &sol.x);
                    cand_pow += pow_guarded(w, self.sigma(t, n));
                }
            }
            if ucomp_pow == 0.0 {
                // No competitor mass at all: every nonempty solution captures
                // everything, the empty solution captures nothing.
                if cand_pow == 0.0 {
                    if sol.open_count() == 0 {
                        total += 0.0;
                        continue;
                    }
                    return Err(Error::Domain(
                        "degenerate instance: no mass in any nest".into(),
                    ));
                }
                total += self.q(t);
            } else {
                total += self.q(t) * (1.0 - ucomp_pow / (ucomp_pow + cand_pow));
            }
        }
        Ok(total)
    }

    /// Approximate utility correlation between facilities `i` and `j` for
    /// type `t` under the given model.
    pub fn correlation_estimate(
        &self,
        t: usize,
        i: usize,
        j: usize,
        model: CorrelationModel,
    ) -> f64 {
        debug_assert_ne!(i, j);
        match model {
            CorrelationModel::Mnl => 0.0,
            CorrelationModel::Cnl => {
                let mut c = 0.0;
                for n in 0..self.num_nests() {
                    let ai = self.alpha(t, i, n);
                    let aj = self.alpha(t, j, n);
                    if ai > 0.0 && aj > 0.0 {
                        let s = self.sigma(t, n);
                        c += (ai * aj).sqrt() * (1.0 - s * s);
                    }
                }
                c
            }
            CorrelationModel::Nl => {
                for n in 0..self.num_nests() {
                    if self.alpha(t, i, n) > 0.0 && self.alpha(t, j, n) > 0.0 {
                        let s = self.sigma(t, n);
                        return 1.0 - s * s;
                    }
                }
                0.0
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{InstanceData, NestConfig};

    fn inst(data: InstanceData) -> CnlInstance {
        CnlInstance::new(data).unwrap()
    }

    fn mnl_like(v: Vec<f64>, m: usize, r: usize) -> CnlInstance {
        let nf = v.len();
        inst(InstanceData {
            m,
            num_types: 1,
            num_nests: 1,
            n_competitors: nf - m,
            r,
            config: NestConfig::Sharing,
            q: vec![1.0],
            sigma: vec![vec![1.0]],
            alpha: vec![vec![vec![1.0]; nf]],
            v: vec![v],
        })
    }

    #[test]
    fn nest_weight_single_competitor() {
        // x = 0, one competitor with alpha=1, v=0, sigma=1 -> W = 1.
        let inst = mnl_like(vec![0.0, 0.0], 1, 1);
        let x = vec![false];
        assert!((inst.nest_weight(0, 0, &x) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn nest_weight_empty_nest() {
        // No competitor, x = 0 -> empty sum.
        let inst = mnl_like(vec![0.0, 0.0], 2, 1);
        let x = vec![false, false];
        assert_eq!(inst.nest_weight(0, 0, &x), 0.0);
    }

    #[test]
    fn symmetric_probabilities() {
        // Two open candidates, equal utilities, no competitor -> 0.5 each.
        let inst = mnl_like(vec![0.0, 0.0], 2, 2);
        let x = vec![true, true];
        assert!((inst.choice_probability(0, 0, &x).unwrap() - 0.5).abs() < 1e-12);
        assert!((inst.choice_probability(0, 1, &x).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn mnl_reduction() {
        // sigma=1, V=(1,3), both open, no competitor -> (0.25, 0.75).
        let inst = mnl_like(vec![0.0, 3f64.ln()], 2, 2);
        let x = vec![true, true];
        assert!((inst.choice_probability(0, 0, &x).unwrap() - 0.25).abs() < 1e-12);
        assert!((inst.choice_probability(0, 1, &x).unwrap() - 0.75).abs() < 1e-12);
    }

    #[test]
    fn closed_candidate_is_a_precondition_error() {
        let inst = mnl_like(vec![0.0, 0.0], 2, 2);
        let x = vec![true, false];
        assert!(inst.choice_probability(0, 1, &x).is_err());
    }

    #[test]
    fn probability_errors_on_empty_market() {
        let inst = mnl_like(vec![0.0, 0.0], 2, 1);
        let x = vec![false, false];
        assert!(inst.choice_probability(0, 0, &x).is_err());
    }

    #[test]
    fn objective_zero_when_nothing_open() {
        let inst = mnl_like(vec![0.0, 0.0], 1, 1);
        let sol = SolutionVector::empty(1);
        assert_eq!(inst.objective_value(&sol).unwrap(), 0.0);
    }

    #[test]
    fn objective_captures_everything_without_competitors() {
        let inst = mnl_like(vec![0.3, -0.7], 2, 2);
        let sol = SolutionVector::from_open(2, &[0, 1]);
        assert!((inst.objective_value(&sol).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn objective_domain_error_when_degenerate() {
        let inst = mnl_like(vec![0.0, 0.0], 2, 1);
        let sol = SolutionVector::empty(2);
        assert!(inst.objective_value(&sol).is_err());
    }

    #[test]
    fn correlation_mnl_limit() {
        // All sigma = 1 -> zero correlation under CNL formula.
        let inst = mnl_like(vec![0.0, 0.0], 2, 2);
        assert_eq!(inst.correlation_estimate(0, 0, 1, CorrelationModel::Cnl), 0.0);
        assert_eq!(inst.correlation_estimate(0, 0, 1, CorrelationModel::Mnl), 0.0);
    }

    #[test]
    fn correlation_full_overlap_small_sigma() {
        // Both fully in one nest, sigma -> 0: correlation -> 1.
        let data = InstanceData {
            m: 2,
            num_types: 1,
            num_nests: 1,
            n_competitors: 0,
            r: 1,
            config: NestConfig::Sharing,
            q: vec![1.0],
            sigma: vec![vec![1e-8]],
            alpha: vec![vec![vec![1.0], vec![1.0]]],
            v: vec![vec![0.0, 0.0]],
        };
        let inst = CnlInstance::new(data).unwrap();
        let c = inst.correlation_estimate(0, 0, 1, CorrelationModel::Cnl);
        assert!((c - 1.0).abs() < 1e-9);
    }

    #[test]
    fn correlation_separated_candidate_vs_competitor_is_zero() {
        let data = InstanceData {
            m: 1,
            num_types: 1,
            num_nests: 2,
            n_competitors: 1,
            r: 1,
            config: NestConfig::Separated,
            q: vec![1.0],
            sigma: vec![vec![0.5, 0.5]],
            alpha: vec![vec![vec![1.0, 0.0], vec![0.0, 1.0]]],
            v: vec![vec![0.0, 0.0]],
        };
        let inst = CnlInstance::new(data).unwrap();
        assert_eq!(inst.correlation_estimate(0, 0, 1, CorrelationModel::Cnl), 0.0);
    }
}
