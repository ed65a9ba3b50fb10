//! Problem data for the maximum capture problem under the CNL choice model.
//!
//! Facilities are indexed `0..m` for candidate locations and
//! `m..m + n_competitors` for competitor facilities. Memberships with zero
//! mass are stored sparsely as per-nest member lists; the exponentiated
//! utilities `exp(v / sigma)` are cached per `(type, nest, facility)` at
//! construction since they appear in every weight and cut evaluation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Nest weights below this threshold are treated as exactly zero so that
/// empty nests cannot produce NaN through `0^sigma` paths.
pub const W_GUARD: f64 = 1e-300;

/// Tolerance on the per-facility membership normalization `sum_n alpha = 1`.
pub const ALPHA_SUM_TOL: f64 = 1e-9;

/// Whether competitor facilities share nests with candidate locations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NestConfig {
    Sharing,
    Separated,
}

/// A facility with positive membership in some nest, with its cached
/// contribution `alpha * exp(v / sigma)` to that nest's weight.
#[derive(Clone, Copy, Debug)]
pub struct NestMember {
    pub facility: usize,
    pub weight: f64,
}

/// Plain construction data for [`CnlInstance`]. `alpha` is dense
/// `[type][facility][nest]`, with candidates first, then competitors.
#[derive(Clone, Debug)]
pub struct InstanceData {
    pub m: usize,
    pub num_types: usize,
    pub num_nests: usize,
    pub n_competitors: usize,
    pub r: usize,
    pub config: NestConfig,
    pub q: Vec<f64>,
    pub sigma: Vec<Vec<f64>>,
    pub alpha: Vec<Vec<Vec<f64>>>,
    pub v: Vec<Vec<f64>>,
}

/// An immutable CNL instance. Safe to share across threads; all evaluation
/// operations are pure.
#[derive(Clone, Debug)]
pub struct CnlInstance {
    data: InstanceData,
    /// Sparse member lists per `[type][nest]`.
    members: Vec<Vec<Vec<NestMember>>>,
    /// Cached dense weights `alpha * exp(v / sigma)` per `[type][nest][facility]`.
    weights: Vec<Vec<Vec<f64>>>,
    /// Competitor mass per `[type][nest]` (the constant part of each nest weight).
    ucomp: Vec<Vec<f64>>,
    total_demand: f64,
}

impl CnlInstance {
    pub fn new(data: InstanceData) -> Result<Self> {
        let nf = data.m + data.n_competitors;
        if data.m == 0 {
            return Err(Error::Config("m must be positive".into()));
        }
        if data.r < 1 || data.r > data.m {
            return Err(Error::Config(format!(
                "cardinality budget r={} outside 1..={}",
                data.r, data.m
            )));
        }
        if data.q.len() != data.num_types
            || data.sigma.len() != data.num_types
            || data.alpha.len() != data.num_types
            || data.v.len() != data.num_types
        {
            return Err(Error::Config("per-type array length mismatch".into()));
        }
        for t in 0..data.num_types {
            if data.q[t] < 0.0 {
                return Err(Error::Config(format!("negative demand q[{t}]")));
            }
            if data.sigma[t].len() != data.num_nests
                || data.alpha[t].len() != nf
                || data.v[t].len() != nf
            {
                return Err(Error::Config("per-nest/facility array length mismatch".into()));
            }
            for n in 0..data.num_nests {
                let s = data.sigma[t][n];
                if !(s > 0.0 && s <= 1.0) {
                    return Err(Error::Config(format!(
                        "sigma[{t}][{n}]={s} outside (0, 1]"
                    )));
                }
            }
            for i in 0..nf {
                let mut sum = 0.0;
                for n in 0..data.num_nests {
                    let a = data.alpha[t][i][n];
                    if !(0.0..=1.0).contains(&a) {
                        return Err(Error::Config(format!(
                            "alpha[{t}][{i}][{n}]={a} outside [0, 1]"
                        )));
                    }
                    sum += a;
                }
                if (sum - 1.0).abs() > ALPHA_SUM_TOL {
                    return Err(Error::Config(format!(
                        "alpha[{t}][{i}] sums to {sum}, expected 1"
                    )));
                }
            }
        }

        let mut members = Vec::with_capacity(data.num_types);
        let mut weights = Vec::with_capacity(data.num_types);
        let mut ucomp = Vec::with_capacity(data.num_types);
        for t in 0..data.num_types {
            let mut mt = Vec::with_capacity(data.num_nests);
            let mut wt = Vec::with_capacity(data.num_nests);
            let mut ut = Vec::with_capacity(data.num_nests);
            for n in 0..data.num_nests {
                let mut list = Vec::new();
                let mut dense = vec![0.0; nf];
                let mut uc = 0.0;
                let mut cand_mass = false;
                for i in 0..nf {
                    let a = data.alpha[t][i][n];
                    if a > 0.0 {
                        let w = a * (data.v[t][i] / data.sigma[t][n]).exp();
                        list.push(NestMember { facility: i, weight: w });
                        dense[i] = w;
                        if i >= data.m {
                            uc += w;
                        } else {
                            cand_mass = true;
                        }
                    }
                }
                if data.config == NestConfig::Separated && cand_mass && uc > 0.0 {
                    return Err(Error::Config(format!(
                        "separated configuration but nest {n} (type {t}) mixes candidate and competitor mass"
                    )));
                }
                mt.push(list);
                wt.push(dense);
                ut.push(uc);
            }
            members.push(mt);
            weights.push(wt);
            ucomp.push(ut);
        }
        let total_demand = data.q.iter().sum();
        Ok(Self { data, members, weights, ucomp, total_demand })
    }

    pub fn m(&self) -> usize {
        self.data.m
    }

    pub fn num_types(&self) -> usize {
        self.data.num_types
    }

    pub fn num_nests(&self) -> usize {
        self.data.num_nests
    }

    pub fn n_competitors(&self) -> usize {
        self.data.n_competitors
    }

    pub fn num_facilities(&self) -> usize {
        self.data.m + self.data.n_competitors
    }

    pub fn is_candidate(&self, i: usize) -> bool {
        i < self.data.m
    }

    pub fn r(&self) -> usize {
        self.data.r
    }

    pub fn config(&self) -> NestConfig {
        self.data.config
    }

    pub fn q(&self, t: usize) -> f64 {
        self.data.q[t]
    }

    pub fn total_demand(&self) -> f64 {
        self.total_demand
    }

    pub fn sigma(&self, t: usize, n: usize) -> f64 {
        self.data.sigma[t][n]
    }

    pub fn v(&self, t: usize, i: usize) -> f64 {
        self.data.v[t][i]
    }

    pub fn alpha(&self, t: usize, i: usize, n: usize) -> f64 {
        self.data.alpha[t][i][n]
    }

    /// Cached `alpha * exp(v / sigma)`; zero off-membership.
    pub fn weight(&self, t: usize, n: usize, i: usize) -> f64 {
        self.weights[t][n][i]
    }

    pub fn members(&self, t: usize, n: usize) -> &[NestMember] {
        &self.members[t][n]
    }

    /// Constant competitor mass `U^c_{tn}` of nest `n` for type `t`.
    pub fn ucomp(&self, t: usize, n: usize) -> f64 {
        self.ucomp[t][n]
    }

    pub fn data(&self) -> &InstanceData {
        &self.data
    }

    /// Copy of the instance with a different cardinality budget.
    pub fn with_r(&self, r: usize) -> Result<Self> {
        let mut data = self.data.clone();
        data.r = r;
        Self::new(data)
    }
}

/// A binary open/close decision over the candidate locations, optionally
/// carrying its cached objective value.
#[derive(Clone, Debug, PartialEq)]
pub struct SolutionVector {
    pub x: Vec<bool>,
    pub value: Option<f64>,
}

impl SolutionVector {
    pub fn empty(m: usize) -> Self {
        Self { x: vec![false; m], value: None }
    }

    pub fn from_open(m: usize, open: &[usize]) -> Self {
        let mut x = vec![false; m];
        for &i in open {
            x[i] = true;
        }
        Self { x, value: None }
    }

    pub fn open_count(&self) -> usize {
        self.x.iter().filter(|&&b| b).count()
    }

    pub fn open_indices(&self) -> Vec<usize> {
        (0..self.x.len()).filter(|&i| self.x[i]).collect()
    }
}
