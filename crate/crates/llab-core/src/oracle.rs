//! Brute-force reference computations.
//!
//! Everything here favors transparent exhaustive enumeration over speed:
//! these are the quantities the learners are checked against, so they are
//! computed straight from the definitions with exact integer arithmetic
//! wherever a comparison or a supremum is taken.

use crate::caps::Caps;
use crate::concept::{ClassRef, LabeledSequence};
use crate::error::{Error, Result};

/// The best single hypothesis on `s`: exhaustive minimum of the mistake
/// count, ties resolved toward the lowest hypothesis index. Returns
/// `(index, mistakes)`.
pub fn opt_mistakes(class: &ClassRef, s: &LabeledSequence) -> Result<(usize, u64)> {
    if class.n_hypotheses() == 0 {
        return Err(Error::InvalidInput("class has no hypotheses".into()));
    }
    s.validate(class)?;
    let mut best = (0usize, u64::MAX);
    for h in 0..class.n_hypotheses() {
        let mistakes = s.entries().iter().filter(|&&(x, y)| class.eval(h, x) != y).count() as u64;
        if mistakes < best.1 {
            best = (h, mistakes);
        }
    }
    Ok(best)
}

/// Sequential Rademacher complexity of the class's 0-1 loss at horizon `t`,
/// by exact enumeration of every complete example-valued tree of depth `t`
/// and every sign path.
///
/// A tree assigns an `(x, y)` example to each of its `2^t - 1` node slots;
/// a sign path contributes the best over hypotheses of the signed loss sum
/// along the path it selects. The returned value is normalized by `t`, so
/// it lies in `[-1, 1]` and in `[0, 1]` for any class with at least one
/// hypothesis per signed pattern; a singleton class gives exactly `0` and
/// two hypotheses that split a single example give exactly `0.5` at
/// `t = 1`. All sums are integers until one final division, so those
/// anchors are exact in floating point.
pub fn sequential_rademacher(class: &ClassRef, t: usize, caps: &Caps) -> Result<f64> {
    if class.n_hypotheses() == 0 {
        return Err(Error::InvalidInput("class has no hypotheses".into()));
    }
    if t == 0 {
        return Err(Error::InvalidInput("horizon must be positive".into()));
    }
    if t > 24 {
        return Err(Error::Resource(format!("horizon {t} needs 2^{t} sign paths")));
    }
    let (nx, ny, nh) = (class.n_points(), class.n_labels(), class.n_hypotheses());
    let alphabet = nx * ny;
    let slots = (1usize << t) - 1;
    let n_trees = (alphabet as u128)
        .checked_pow(slots as u32)
        .ok_or_else(|| Error::Resource(format!("{alphabet}^{slots} trees overflows a count")))?;
    if n_trees > caps.max_rademacher_trees as u128 {
        return Err(Error::Resource(format!(
            "exact enumeration needs {n_trees} trees, cap is {}",
            caps.max_rademacher_trees
        )));
    }

    let mut digits = vec![0usize; slots];
    let mut best: i64 = i64::MIN;
    loop {
        // Sum over all sign paths of the per-path supremum. Slots are laid
        // out level-order: slot(level, addr) = 2^level - 1 + addr, and a
        // path bit of 1 both flips the sign to +1 and selects the right
        // child.
        let mut tree_sum: i64 = 0;
        for path in 0..(1usize << t) {
            let mut sup = i64::MIN;
            for h in 0..nh {
                let mut acc: i64 = 0;
                let mut addr = 0usize;
                for level in 0..t {
                    let bit = (path >> (t - 1 - level)) & 1;
                    let d = digits[(1usize << level) - 1 + addr];
                    let (x, y) = (d / ny, d % ny);
                    let loss = i64::from(class.eval(h, x) != y);
                    acc += if bit == 1 { loss } else { -loss };
                    addr = addr * 2 + bit;
                }
                sup = sup.max(acc);
            }
            tree_sum += sup;
        }
        best = best.max(tree_sum);

        let mut i = slots;
        loop {
            if i == 0 {
                let scale = (1u64 << t) as f64 * t as f64;
                return Ok(best as f64 / scale);
            }
            i -= 1;
            digits[i] += 1;
            if digits[i] < alphabet {
                break;
            }
            digits[i] = 0;
        }
    }
}

/// Worst-case gap between the empirical loss on the multiset `k` (indices
/// into `s`, duplicates counted) and the loss on all of `s`:
/// `sup over h of |mean over k - mean over s|` of the 0-1 loss.
///
/// The supremum is taken over integer numerators and divided once, so
/// equal means compare exactly.
pub fn aulln_error(class: &ClassRef, k: &[usize], s: &LabeledSequence) -> Result<f64> {
    if class.n_hypotheses() == 0 {
        return Err(Error::InvalidInput("class has no hypotheses".into()));
    }
    s.validate(class)?;
    if s.is_empty() {
        return Err(Error::InvalidInput("sequence must be non-empty".into()));
    }
    if k.is_empty() {
        return Err(Error::InvalidInput("index multiset must be non-empty".into()));
    }
    if let Some(&bad) = k.iter().find(|&&i| i >= s.len()) {
        return Err(Error::InvalidInput(format!(
            "index {bad} out of range, sequence has {} entries",
            s.len()
        )));
    }
    let (kk, tt) = (k.len() as u64, s.len() as u64);
    let mut best_num: u64 = 0;
    for h in 0..class.n_hypotheses() {
        let errs = |&(x, y): &(usize, usize)| class.eval(h, x) != y;
        let cnt_s = s.entries().iter().filter(|e| errs(e)).count() as u64;
        let cnt_k = k.iter().filter(|&&i| errs(&s.entries()[i])).count() as u64;
        best_num = best_num.max((cnt_k * tt).abs_diff(cnt_s * kk));
    }
    Ok(best_num as f64 / (kk * tt) as f64)
}
