//! Deterministic enumeration over fixed-size candidate subsets, with a
//! sequential implementation and an optional rayon-parallel one behind the
//! `parallel` feature. Both return bit-identical results: the winner is the
//! maximum under the total order (value descending, open set lexicographically
//! ascending), which is associative under any reduction order.

/// `C(n, k)` saturating at `u128::MAX`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Best subset found by an enumeration, as sorted open indices.
#[derive(Clone, Debug)]
pub struct BestSubset {
    pub open: Vec<usize>,
    pub value: f64,
}

/// Total order used everywhere ties must resolve deterministically.
pub fn better(value: f64, open: &[usize], than: &BestSubset) -> bool {
    value > than.value || (value == than.value && open < than.open.as_slice())
}

/// Visit every `r`-subset of `start..m` (prefixed by `prefix`) in
/// lexicographic order.
fn enumerate_from<F: FnMut(&[usize])>(m: usize, r: usize, start: usize, prefix: &mut Vec<usize>, f: &mut F) {
    if prefix.len() == r {
        f(prefix);
        return;
    }
    let need = r - prefix.len();
    for i in start..=m - need {
        prefix.push(i);
        enumerate_from(m, r, i + 1, prefix, f);
        prefix.pop();
    }
}

/// Visit every `r`-subset of `0..m` in lexicographic order.
pub fn for_each_subset<F: FnMut(&[usize])>(m: usize, r: usize, mut f: F) {
    assert!(r >= 1 && r <= m);
    let mut prefix = Vec::with_capacity(r);
    enumerate_from(m, r, 0, &mut prefix, &mut f);
}

/// Sequential maximization of `eval` over all `r`-subsets of `0..m`.
/// Returns the best subset and the number of subsets evaluated.
pub fn max_over_subsets_seq<F: Fn(&[usize]) -> f64>(m: usize, r: usize, eval: F) -> (BestSubset, u64) {
    let mut best = BestSubset { open: Vec::new(), value: f64::NEG_INFINITY };
    let mut count = 0u64;
    for_each_subset(m, r, |open| {
        count += 1;
        let v = eval(open);
        if best.open.is_empty() || better(v, open, &best) {
            best = BestSubset { open: open.to_vec(), value: v };
        }
    });
    (best, count)
}

/// Parallel maximization over all `r`-subsets, split by first element.
/// Identical result to [`max_over_subsets_seq`].
#[cfg(feature = "parallel")]
pub fn max_over_subsets<F: Fn(&[usize]) -> f64 + Sync>(m: usize, r: usize, eval: F) -> (BestSubset, u64) {
    use rayon::prelude::*;
    assert!(r >= 1 && r <= m);
    let parts: Vec<(Option<BestSubset>, u64)> = (0..=m - r)
        .into_par_iter()
        .map(|first| {
            let mut best: Option<BestSubset> = None;
            let mut count = 0u64;
            let mut prefix = vec![first];
            enumerate_from(m, r, first + 1, &mut prefix, &mut |open: &[usize]| {
                count += 1;
                let v = eval(open);
                let take = match &best {
                    None => true,
                    Some(b) => better(v, open, b),
                };
                if take {
                    best = Some(BestSubset { open: open.to_vec(), value: v });
                }
            });
            (best, count)
        })
        .collect();
    let mut best: Option<BestSubset> = None;
    let mut count = 0u64;
    for (part, c) in parts {
        count += c;
        if let Some(p) = part {
            let take = match &best {
                None => true,
                Some(b) => better(p.value, &p.open, b),
            };
            if take {
                best = Some(p);
            }
        }
    }
    (best.expect("nonempty enumeration"), count)
}

/// Without the `parallel` feature this is the sequential implementation.
#[cfg(not(feature = "parallel"))]
pub fn max_over_subsets<F: Fn(&[usize]) -> f64 + Sync>(m: usize, r: usize, eval: F) -> (BestSubset, u64) {
    max_over_subsets_seq(m, r, eval)
}
