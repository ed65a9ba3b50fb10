//! Seeded synthetic instance generation, model simplification (CNL to MNL
//! and CNL to NL), and the percent-loss metric.
//!
//! All randomness comes from a ChaCha8 stream in a fixed, documented draw
//! order, so a seed reproduces an instance byte for byte:
//! 1. costs `c_ti ~ U[lo, hi]` for every `(t, facility)` unless provided;
//! 2. candidate nest memberships: one primary nest per location, then
//!    `ceil((gamma - 1) m)` distinct locations each gaining one extra nest
//!    (whole assignment resampled until every nest has two members);
//! 3. membership degrees `alpha ~ U[0, 1]` per `(t, i, member nest)` in
//!    ascending nest order, normalized;
//! 4. dissimilarities `sigma_tn` via Box-Muller (one draw per parameter),
//!    clipped to `[0.1, 1]`;
//! 5. competitor memberships (Sharing only): anchored on their own nest with
//!    uniform spillover on the others.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{CnlInstance, InstanceData, NestConfig};

const ASSIGN_ATTEMPTS: usize = 10_000;

/// Generator parameters, mirroring the experiment setup they come from.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GenConfig {
    pub m: usize,
    pub num_types: usize,
    pub num_nests: usize,
    pub r: usize,
    pub seed: u64,
    /// Utility sensitivity: `v = -beta * cost`.
    pub beta: f64,
    /// Competitor cost scaling: competitor utilities use `beta * alpha_comp`.
    pub alpha_comp: f64,
    /// Overlap rate; average nests per location. 1 gives an NL structure.
    pub gamma: f64,
    pub sigma_mean: f64,
    pub sigma_std: f64,
    pub config: NestConfig,
    pub cost_range: (f64, f64),
    /// Optional explicit costs, `T x (m + n_competitors)`.
    pub costs: Option<Vec<Vec<f64>>>,
    /// Optional demands; default unit per type.
    pub demands: Option<Vec<f64>>,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            m: 10,
            num_types: 2,
            num_nests: 5,
            r: 3,
            seed: 0,
            beta: 0.05,
            alpha_comp: 1.0,
            gamma: 1.2,
            sigma_mean: 0.5,
            sigma_std: 0.2,
            config: NestConfig::Sharing,
            cost_range: (1.0, 100.0),
            costs: None,
            demands: None,
        }
    }
}

impl GenConfig {
    /// One competitor per nest in both configurations.
    pub fn n_competitors(&self) -> usize {
        self.num_nests
    }
}

/// One standard Box-Muller draw (the sine branch is discarded).
pub fn box_muller(rng: &mut ChaCha8Rng, mean: f64, std: f64) -> f64 {
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    mean + std * (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn sample_sigma(rng: &mut ChaCha8Rng, mean: f64, std: f64) -> f64 {
    box_muller(rng, mean, std).clamp(0.1, 1.0)
}

/// Candidate nest memberships: `memberships[i]` is the sorted nest list of
/// location `i`; total membership count is exactly `m + ceil((gamma-1) m)`.
fn assign_nests(rng: &mut ChaCha8Rng, m: usize, nn: usize, gamma: f64) -> Result<Vec<Vec<usize>>> {
    let extra = ((gamma - 1.0) * m as f64).ceil() as usize;
    for _ in 0..ASSIGN_ATTEMPTS {
        let mut membership: Vec<Vec<usize>> = (0..m).map(|_| vec![rng.gen_range(0..nn)]).collect();
        for _ in 0..extra {
            // Rejection-sample a location with room for another nest, then a
            // distinct extra nest for it.
            let i = loop {
                let i = rng.gen_range(0..m);
                if membership[i].len() < nn {
                    break i;
                }
            };
            let n = loop {
                let n = rng.gen_range(0..nn);
                if !membership[i].contains(&n) {
                    break n;
                }
            };
            membership[i].push(n);
            membership[i].sort_unstable();
        }
        let mut count = vec![0usize; nn];
        for mem in &membership {
            for &n in mem {
                count[n] += 1;
            }
        }
        if count.iter().all(|&c| c >= 2) {
            return Ok(membership);
        }
    }
    Err(Error::Config(
        "could not place two candidates in every nest; raise m or gamma, or lower N".into(),
    ))
}

/// Generate a seeded instance per the documented draw order.
pub fn generate(cfg: &GenConfig) -> Result<CnlInstance> {
    let m = cfg.m;
    let nn = cfg.num_nests;
    let tcount = cfg.num_types;
    let nc = cfg.n_competitors();
    let nf = m + nc;
    if cfg.gamma < 1.0 {
        return Err(Error::Config(format!("gamma = {} below 1", cfg.gamma)));
    }
    if cfg.gamma > nn as f64 {
        return Err(Error::Config(format!(
            "gamma = {} exceeds nest count {nn}: impossible assignment",
            cfg.gamma
        )));
    }
    if 2 * nn > m {
        return Err(Error::Config(format!(
            "{nn} nests cannot each hold 2 of {m} candidate locations"
        )));
    }
    if cfg.sigma_std < 0.0 {
        return Err(Error::Config("negative sigma stddev".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    // 1. costs
    let costs: Vec<Vec<f64>> = match &cfg.costs {
        Some(c) => {
            if c.len() != tcount || c.iter().any(|row| row.len() != nf) {
                return Err(Error::Config(format!(
                    "cost matrix must be {tcount} x {nf}"
                )));
            }
            c.clone()
        }
        None => {
            let (lo, hi) = cfg.cost_range;
            (0..tcount)
                .map(|_| (0..nf).map(|_| rng.gen_range(lo..=hi)).collect())
                .collect()
        }
    };

    // 2. candidate memberships (shared across types)
    let membership = assign_nests(&mut rng, m, nn, cfg.gamma)?;

    // 3. membership degrees
    let total_nests = match cfg.config {
        NestConfig::Sharing => nn,
        // Competitors get their own appended nests.
        NestConfig::Separated => nn + nc,
    };
    let mut alpha = vec![vec![vec![0.0; total_nests]; nf]; tcount];
    for t in 0..tcount {
        for i in 0..m {
            let mut sum = 0.0;
            let draws: Vec<f64> = membership[i].iter().map(|_| rng.gen::<f64>()).collect();
            for d in &draws {
                sum += d;
            }
            for (pos, &n) in membership[i].iter().enumerate() {
                alpha[t][i][n] = draws[pos] / sum;
            }
        }
    }

    // 4. dissimilarities
    let mut sigma = vec![vec![0.0; total_nests]; tcount];
    for t in 0..tcount {
        for n in 0..total_nests {
            sigma[t][n] = sample_sigma(&mut rng, cfg.sigma_mean, cfg.sigma_std);
        }
    }

    // 5. competitor memberships
    for t in 0..tcount {
        for j in 0..nc {
            let i = m + j;
            match cfg.config {
                NestConfig::Sharing => {
                    // Anchor on nest j, uniform spillover on the rest.
                    let mut raw = vec![0.0; nn];
                    let mut sum = 0.0;
                    for (n, slot) in raw.iter_mut().enumerate() {
                        *slot = if n == j { 1.0 } else { 0.25 * rng.gen::<f64>() };
                        sum += *slot;
                    }
                    for (n, slot) in raw.iter().enumerate() {
                        alpha[t][i][n] = slot / sum;
                    }
                }
                NestConfig::Separated => {
                    alpha[t][i][nn + j] = 1.0;
                }
            }
        }
    }

    // utilities and demands
    let v: Vec<Vec<f64>> = (0..tcount)
        .map(|t| {
            (0..nf)
                .map(|i| {
                    if i < m {
                        -cfg.beta * costs[t][i]
                    } else {
                        -cfg.beta * cfg.alpha_comp * costs[t][i]
                    }
                })
                .collect()
        })
        .collect();
    let q = match &cfg.demands {
        Some(d) => {
            if d.len() != tcount {
                return Err(Error::Config("demand vector length mismatch".into()));
            }
            d.clone()
        }
        None => vec![1.0; tcount],
    };

    CnlInstance::new(InstanceData {
        m,
        num_types: tcount,
        num_nests: total_nests,
        n_competitors: nc,
        r: cfg.r,
        config: cfg.config,
        q,
        sigma,
        alpha,
        v,
    })
}

/// Copy with every dissimilarity parameter set to 1 (MNL behavior).
pub fn simplify_to_mnl(inst: &CnlInstance) -> Result<CnlInstance> {
    let mut data = inst.data().clone();
    for row in &mut data.sigma {
        for s in row.iter_mut() {
            *s = 1.0;
        }
    }
    CnlInstance::new(data)
}

/// Copy with one-hot memberships at each facility's argmax nest (ties to the
/// lowest nest index); dissimilarities unchanged.
pub fn simplify_to_nl(inst: &CnlInstance) -> Result<CnlInstance> {
    let mut data = inst.data().clone();
    for rows in &mut data.alpha {
        for row in rows.iter_mut() {
            let mut best = 0usize;
            for (n, &a) in row.iter().enumerate() {
                if a > row[best] {
                    best = n;
                }
            }
            for (n, a) in row.iter_mut().enumerate() {
                *a = if n == best { 1.0 } else { 0.0 };
            }
        }
    }
    CnlInstance::new(data)
}

/// Relative objective shortfall (in percent) of optimizing a simplified
/// model but operating under the true one. `solve_simplified` and
/// `solve_exact` return open-location vectors for their instance.
pub fn percent_loss<FS, FE>(
    inst: &CnlInstance,
    simplified: &CnlInstance,
    solve_simplified: FS,
    solve_exact: FE,
) -> Result<f64>
where
    FS: FnOnce(&CnlInstance) -> Result<Vec<bool>>,
    FE: FnOnce(&CnlInstance) -> Result<Vec<bool>>,
{
    let xs = solve_simplified(simplified)?;
    let xe = solve_exact(inst)?;
    let open = |x: &[bool]| -> Vec<usize> { (0..x.len()).filter(|&i| x[i]).collect() };
    let f_star = crate::drivers::objective_of_open(inst, &open(&xe));
    let f_simple = crate::drivers::objective_of_open(inst, &open(&xs));
    if f_star <= 0.0 {
        return Err(Error::Domain("nonpositive optimal objective".into()));
    }
    Ok((f_star - f_simple) / f_star * 100.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_one_gives_nl_structure() {
        let cfg = GenConfig { gamma: 1.0, seed: 7, ..Default::default() };
        let inst = generate(&cfg).unwrap();
        for i in 0..inst.m() {
            let members = (0..inst.num_nests())
                .filter(|&n| inst.alpha(0, i, n) > 0.0)
                .count();
            assert_eq!(members, 1);
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let cfg = GenConfig { seed: 42, ..Default::default() };
        let a = generate(&cfg).unwrap();
        let b = generate(&cfg).unwrap();
        assert_eq!(format!("{:?}", a.data()), format!("{:?}", b.data()));
    }

    #[test]
    fn membership_count_matches_gamma() {
        let cfg = GenConfig { m: 15, gamma: 1.4, seed: 3, ..Default::default() };
        let inst = generate(&cfg).unwrap();
        let expected = 15 + ((1.4 - 1.0) * 15.0f64).ceil() as usize;
        let total: usize = (0..15)
            .map(|i| (0..inst.num_nests()).filter(|&n| inst.alpha(0, i, n) > 0.0).count())
            .sum();
        assert_eq!(total, expected);
    }

    #[test]
    fn sigma_sampler_is_centered() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 20_000;
        let mean: f64 = (0..n).map(|_| box_muller(&mut rng, 0.5, 0.2)).sum::<f64>() / n as f64;
        assert!((mean - 0.5).abs() < 0.07, "mean {mean}");
    }

    #[test]
    fn separated_config_is_valid_and_pure() {
        let cfg = GenConfig { config: NestConfig::Separated, seed: 5, ..Default::default() };
        let inst = generate(&cfg).unwrap();
        assert_eq!(inst.config(), NestConfig::Separated);
        // Competitor mass only in the appended nests.
        for n in 0..5 {
            assert_eq!(inst.ucomp(0, n), 0.0);
        }
        assert!((5..10).any(|n| inst.ucomp(0, n) > 0.0));
    }

    #[test]
    fn impossible_configs_are_rejected() {
        let cfg = GenConfig { m: 6, num_nests: 5, ..Default::default() };
        assert!(generate(&cfg).is_err());
        let cfg = GenConfig { gamma: 9.0, ..Default::default() };
        assert!(generate(&cfg).is_err());
    }

    #[test]
    fn mnl_simplification_is_idempotent_and_unit_sigma() {
        let inst = generate(&GenConfig { seed: 9, ..Default::default() }).unwrap();
        let mnl = simplify_to_mnl(&inst).unwrap();
        for t in 0..mnl.num_types() {
            for n in 0..mnl.num_nests() {
                assert_eq!(mnl.sigma(t, n), 1.0);
            }
        }
        let again = simplify_to_mnl(&mnl).unwrap();
        assert_eq!(format!("{:?}", again.data()), format!("{:?}", mnl.data()));
    }

    #[test]
    fn nl_simplification_is_one_hot() {
        let inst = generate(&GenConfig { seed: 13, ..Default::default() }).unwrap();
        let nl = simplify_to_nl(&inst).unwrap();
        for t in 0..nl.num_types() {
            for i in 0..nl.num_facilities() {
                let ones = (0..nl.num_nests()).filter(|&n| nl.alpha(t, i, n) == 1.0).count();
                let sum: f64 = (0..nl.num_nests()).map(|n| nl.alpha(t, i, n)).sum();
                assert_eq!(ones, 1);
                assert_eq!(sum, 1.0);
            }
        }
        let again = simplify_to_nl(&nl).unwrap();
        assert_eq!(format!("{:?}", again.data()), format!("{:?}", nl.data()));
    }

    #[test]
    fn identity_simplification_has_zero_loss() {
        let inst = generate(&GenConfig { seed: 21, ..Default::default() }).unwrap();
        let loss = percent_loss(
            &inst,
            &inst,
            |i| Ok(crate::drivers::greedy_solve(i, true)?.incumbent),
            |i| Ok(crate::drivers::greedy_solve(i, true)?.incumbent),
        )
        .unwrap();
        assert!(loss.abs() < 1e-12);
    }
}
