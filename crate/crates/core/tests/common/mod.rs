#![allow(dead_code)]

use cnl_mcp::cuts::LinearCut;
use cnl_mcp::drivers::objective_of_open;
use cnl_mcp::gen::{generate, GenConfig};
use cnl_mcp::instance::{CnlInstance, NestConfig};
use cnl_mcp::par;
use cnl_mcp::reform::ReformPoint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Sample a generator configuration in the desk-scale ranges: `m` in the
/// given window, `r in [2,4]`, `T in [1,5]`, `N in [2, min(4, m/2)]`, with
/// moderate overlap and mid-range dissimilarities. The window must keep
/// `m >= 4` so every nest can hold two candidates.
pub fn random_config(seed: u64, config: NestConfig, m_lo: usize, m_hi: usize) -> GenConfig {
    let mut meta = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(1));
    let m = meta.gen_range(m_lo..=m_hi);
    let r = meta.gen_range(2..=4usize.min(m));
    let t = meta.gen_range(1..=5usize);
    let n = meta.gen_range(2..=4.min(m / 2));
    GenConfig {
        m,
        num_types: t,
        num_nests: n,
        r,
        seed,
        gamma: 1.0 + 0.5 * meta.gen::<f64>(),
        sigma_mean: 0.3 + 0.4 * meta.gen::<f64>(),
        config,
        ..Default::default()
    }
}

pub fn random_sharing(seed: u64) -> CnlInstance {
    generate(&random_config(seed, NestConfig::Sharing, 6, 12)).expect("generable config")
}

pub fn random_separated(seed: u64) -> CnlInstance {
    generate(&random_config(seed, NestConfig::Separated, 6, 12)).expect("generable config")
}

/// Seeded T = 1 nested-logit instance (one-hot memberships, `N <= 3`).
pub fn random_nl_t1(seed: u64) -> CnlInstance {
    let mut meta = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x2545_f491_4f6c_dd1d).wrapping_add(7));
    let n = meta.gen_range(2..=3usize);
    let m = meta.gen_range((2 * n).max(6)..=12);
    let cfg = GenConfig {
        m,
        num_types: 1,
        num_nests: n,
        r: meta.gen_range(2..=4.min(m)),
        seed,
        gamma: 1.0,
        sigma_mean: 0.3 + 0.4 * meta.gen::<f64>(),
        config: NestConfig::Sharing,
        ..Default::default()
    };
    // gamma = 1 makes candidates one-hot; competitors still spill over, so
    // one-hot the whole instance to get a true NL structure.
    cnl_mcp::gen::simplify_to_nl(&generate(&cfg).expect("generable config"))
        .expect("valid NL instance")
}

/// Exhaustive optimum of `F` (sequential, deterministic tie-break).
pub fn brute_force(inst: &CnlInstance) -> (Vec<usize>, f64) {
    let (best, _) =
        par::max_over_subsets_seq(inst.m(), inst.r(), |open| objective_of_open(inst, open));
    (best.open, best.value)
}

pub fn open_to_x(m: usize, open: &[usize]) -> Vec<bool> {
    let mut x = vec![false; m];
    for &i in open {
        x[i] = true;
    }
    x
}

/// Signed feasibility slack of a cut at the lifted point of `x`;
/// nonnegative means satisfied.
pub fn cut_slack(cut: &LinearCut, x: &[bool], p: &ReformPoint) -> f64 {
    match cut {
        LinearCut::Oa1 { t, n, coeff_w, constant } => {
            p.y[*t][*n] - (constant + coeff_w * p.w[*t][*n])
        }
        LinearCut::Oa2 { t, coeff_w, constant } => {
            let rhs: f64 =
                constant + coeff_w.iter().zip(&p.w[*t]).map(|(g, w)| g * w).sum::<f64>();
            rhs - p.z[*t]
        }
        LinearCut::Oa3 { t, n, coeff_y, coeff_z, constant } => {
            p.theta[*t][*n] - (constant + coeff_y * p.y[*t][*n] + coeff_z * p.z[*t])
        }
        LinearCut::Sc { t, coeff_x, constant, .. } => {
            let rhs: f64 = constant
                + coeff_x
                    .iter()
                    .zip(x)
                    .map(|(c, &xi)| if xi { *c } else { 0.0 })
                    .sum::<f64>();
            rhs - p.phi[*t]
        }
    }
}

/// A deterministic pseudo-random feasible solution.
pub fn random_feasible(inst: &CnlInstance, seed: u64) -> Vec<bool> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx: Vec<usize> = (0..inst.m()).collect();
    for i in (1..idx.len()).rev() {
        let j = rng.gen_range(0..=i);
        idx.swap(i, j);
    }
    idx.truncate(inst.r());
    idx.sort_unstable();
    open_to_x(inst.m(), &idx)
}
