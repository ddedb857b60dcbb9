//! Exhaustive checks of the two base-rate impossibility results over small
//! finite populations.
//!
//! A population is summarized by its 2×2×2 contingency table over
//! (group, label, flag); every probability in the claims is a ratio of cell
//! sums, so all comparisons are done by integer cross-multiplication.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest population size accepted by the enumerators.
pub const MAX_N: usize = 14;

/// Cell counts indexed by `4·pv + 2·y + o` with `pv ∈ {0 = a, 1 = b}`,
/// `y` the true label and `o` the flag.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FinitePopulation {
    pub counts: [u32; 8],
}

/// Per-group totals of a population.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GroupCounts {
    pub size: u64,
    pub positives: u64,
    pub flagged: u64,
    pub flagged_positives: u64,
}

impl FinitePopulation {
    pub fn cell(&self, pv: usize, y: usize, o: usize) -> u32 {
        self.counts[4 * pv + 2 * y + o]
    }

    pub fn len(&self) -> u64 {
        self.counts.iter().map(|&c| c as u64).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn group(&self, pv: usize) -> GroupCounts {
        let c = |y, o| self.cell(pv, y, o) as u64;
        GroupCounts {
            size: c(0, 0) + c(0, 1) + c(1, 0) + c(1, 1),
            positives: c(1, 0) + c(1, 1),
            flagged: c(0, 1) + c(1, 1),
            flagged_positives: c(1, 1),
        }
    }

    /// Equal flag rates in both groups.
    pub fn statistical_parity(&self) -> bool {
        let (a, b) = (self.group(0), self.group(1));
        a.flagged * b.size == b.flagged * a.size
    }

    /// `P(Y=1 | O=1) > P(Y=1)`; false when nothing is flagged.
    pub fn effective(&self) -> bool {
        let (a, b) = (self.group(0), self.group(1));
        let n = a.size + b.size;
        let flagged = a.flagged + b.flagged;
        let tp = a.flagged_positives + b.flagged_positives;
        let pos = a.positives + b.positives;
        flagged > 0 && tp * n > pos * flagged
    }

    /// Sign of `P(Y=1 | O=1, PV=v) − P(Y=1 | PV=v)`, or `None` when the
    /// group has no flagged rows.
    pub fn precision_vs_base_rate(&self, pv: usize) -> Option<std::cmp::Ordering> {
        let g = self.group(pv);
        (g.flagged > 0).then(|| (g.flagged_positives * g.size).cmp(&(g.positives * g.flagged)))
    }

    /// Flagged-population base-rate ratio equals the population ratio:
    /// `prec_a / prec_b = br_a / br_b`, cross-multiplied.
    pub fn ratio_preserved(&self) -> bool {
        let (a, b) = (self.group(0), self.group(1));
        a.flagged_positives * b.flagged * b.positives * a.size
            == b.flagged_positives * a.flagged * a.positives * b.size
    }

    pub fn both_groups_have_positives(&self) -> bool {
        self.group(0).positives > 0 && self.group(1).positives > 0
    }

    fn exceeds(&self, pv: usize) -> bool {
        self.precision_vs_base_rate(pv) == Some(std::cmp::Ordering::Greater)
    }
}

/// Every contingency table with total `n` in which both groups are nonempty,
/// in lexicographic order of the counts.
pub fn enumerate_populations(n: usize) -> Result<Vec<FinitePopulation>> {
    if n > MAX_N {
        return Err(Error::InvalidArgument(format!(
            "population size {n} exceeds the limit of {MAX_N}"
        )));
    }
    let mut out = Vec::new();
    let mut counts = [0u32; 8];
    fill(&mut counts, 0, n as u32, &mut out);
    Ok(out)
}

fn fill(counts: &mut [u32; 8], idx: usize, left: u32, out: &mut Vec<FinitePopulation>) {
    if idx == 7 {
        counts[7] = left;
        let p = FinitePopulation { counts: *counts };
        if p.group(0).size > 0 && p.group(1).size > 0 {
            out.push(p);
        }
        return;
    }
    for c in 0..=left {
        counts[idx] = c;
        fill(counts, idx + 1, left - c, out);
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClaimId {
    /// Parity and effectiveness imply over-estimated base rate in some group.
    Claim1,
    /// Adding base-rate ratio preservation makes it every group.
    Claim2,
}

/// How many enumerated populations met each premise.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PremiseCounts {
    pub statistical_parity: u64,
    pub effective: u64,
    /// Claim 2 only: exact ratio preservation among populations with
    /// positives in both groups.
    pub ratio_preserved: u64,
    /// Populations meeting all of the claim's premises.
    pub all_premises: u64,
    pub skipped_not_effective: u64,
    pub skipped_no_parity: u64,
    /// Claim 2 only: a group without positives.
    pub skipped_degenerate: u64,
}

impl PremiseCounts {
    fn merge(&mut self, o: &PremiseCounts) {
        self.statistical_parity += o.statistical_parity;
        self.effective += o.effective;
        self.ratio_preserved += o.ratio_preserved;
        self.all_premises += o.all_premises;
        self.skipped_not_effective += o.skipped_not_effective;
        self.skipped_no_parity += o.skipped_no_parity;
        self.skipped_degenerate += o.skipped_degenerate;
    }
}

/// Outcome of checking one claim over all populations up to `max_n`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClaimVerdict {
    pub claim: ClaimId,
    pub max_n: usize,
    pub populations_checked: u64,
    pub premises: PremiseCounts,
    /// Populations meeting every premise but not the conclusion.
    pub counterexamples: Vec<FinitePopulation>,
    /// Populations showing that a dropped premise is needed (see
    /// [`is_witness`]), at most [`WITNESS_LIMIT`] kept.
    pub witnesses: Vec<FinitePopulation>,
    pub witness_count: u64,
}

pub const WITNESS_LIMIT: usize = 5;

impl ClaimVerdict {
    pub fn holds(&self) -> bool {
        self.counterexamples.is_empty()
    }

    fn empty(claim: ClaimId, max_n: usize) -> Self {
        Self {
            claim,
            max_n,
            populations_checked: 0,
            premises: PremiseCounts::default(),
            counterexamples: Vec::new(),
            witnesses: Vec::new(),
            witness_count: 0,
        }
    }

    /// Combines verdicts over disjoint population sets. Lists are kept
    /// sorted so the result does not depend on merge order.
    pub fn merge(mut self, other: ClaimVerdict) -> ClaimVerdict {
        self.max_n = self.max_n.max(other.max_n);
        self.populations_checked += other.populations_checked;
        self.premises.merge(&other.premises);
        self.counterexamples.extend(other.counterexamples);
        self.counterexamples.sort();
        self.witnesses.extend(other.witnesses);
        self.witnesses.sort();
        self.witnesses.truncate(WITNESS_LIMIT);
        self.witness_count += other.witness_count;
        self
    }
}

/// `Some(conclusion)` when `p` meets every premise of `claim`, else `None`.
pub fn check(claim: ClaimId, p: &FinitePopulation) -> Option<bool> {
    if !(p.statistical_parity() && p.effective()) {
        return None;
    }
    match claim {
        ClaimId::Claim1 => Some(p.exceeds(0) || p.exceeds(1)),
        ClaimId::Claim2 => {
            if !(p.both_groups_have_positives() && p.ratio_preserved()) {
                return None;
            }
            Some(p.exceeds(0) && p.exceeds(1))
        }
    }
}

/// Premise-necessity witnesses.
///
/// Claim 1: an effective detector without parity whose flagged precision
/// is below the base rate in both groups.
/// Claim 2: parity and effectiveness hold, ratio preservation does not, and
/// some group's flagged precision equals its base rate.
pub fn is_witness(claim: ClaimId, p: &FinitePopulation) -> bool {
    use std::cmp::Ordering::{Equal, Less};
    match claim {
        ClaimId::Claim1 => {
            p.effective()
                && !p.statistical_parity()
                && p.precision_vs_base_rate(0) == Some(Less)
                && p.precision_vs_base_rate(1) == Some(Less)
        }
        ClaimId::Claim2 => {
            p.effective()
                && p.statistical_parity()
                && p.both_groups_have_positives()
                && !p.ratio_preserved()
                && (p.precision_vs_base_rate(0) == Some(Equal)
                    || p.precision_vs_base_rate(1) == Some(Equal))
        }
    }
}

fn verify_size(claim: ClaimId, n: usize) -> Result<ClaimVerdict> {
    let mut v = ClaimVerdict::empty(claim, n);
    for p in enumerate_populations(n)? {
        v.populations_checked += 1;
        let sp = p.statistical_parity();
        let eff = p.effective();
        v.premises.statistical_parity += sp as u64;
        v.premises.effective += eff as u64;
        if !eff {
            v.premises.skipped_not_effective += 1;
        } else if !sp {
            v.premises.skipped_no_parity += 1;
        } else if claim == ClaimId::Claim2 && !p.both_groups_have_positives() {
            v.premises.skipped_degenerate += 1;
        } else if claim == ClaimId::Claim2 && p.ratio_preserved() {
            v.premises.ratio_preserved += 1;
        }
        match check(claim, &p) {
            Some(true) => v.premises.all_premises += 1,
            Some(false) => {
                v.premises.all_premises += 1;
                v.counterexamples.push(p);
            }
            None => {}
        }
        if is_witness(claim, &p) {
            v.witness_count += 1;
            if v.witnesses.len() < WITNESS_LIMIT {
                v.witnesses.push(p);
            }
        }
    }
    Ok(v)
}

fn verify(claim: ClaimId, max_n: usize) -> Result<ClaimVerdict> {
    if max_n > MAX_N {
        return Err(Error::InvalidArgument(format!(
            "population size {max_n} exceeds the limit of {MAX_N}"
        )));
    }
    (1..=max_n).try_fold(ClaimVerdict::empty(claim, max_n), |acc, n| {
        Ok(acc.merge(verify_size(claim, n)?))
    })
}

/// Checks Claim 1 on every population of size at most `max_n`.
pub fn verify_claim1(max_n: usize) -> Result<ClaimVerdict> {
    verify(ClaimId::Claim1, max_n)
}

/// Checks Claim 2 on every population of size at most `max_n`.
pub fn verify_claim2(max_n: usize) -> Result<ClaimVerdict> {
    verify(ClaimId::Claim2, max_n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn binom(n: u64, k: u64) -> u64 {
        (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
    }

    /// Tables of total `n` over 8 cells minus those with an empty group.
    fn expected_count(n: u64) -> u64 {
        let all = binom(n + 7, 7);
        let one_group = binom(n + 3, 3);
        // both groups empty only when n = 0
        all + (n == 0) as u64 - 2 * one_group
    }

    #[test]
    fn counts_match_stars_and_bars() {
        for n in 0..=8 {
            assert_eq!(
                enumerate_populations(n).unwrap().len() as u64,
                expected_count(n as u64),
                "n = {n}"
            );
        }
        assert_eq!(enumerate_populations(2).unwrap().len(), 16);
    }

    #[test]
    fn enumeration_is_duplicate_free_and_valid() {
        let pops = enumerate_populations(6).unwrap();
        let set: HashSet<_> = pops.iter().collect();
        assert_eq!(set.len(), pops.len());
        for p in &pops {
            assert_eq!(p.len(), 6);
            assert!(p.group(0).size > 0 && p.group(1).size > 0);
        }
    }

    #[test]
    fn too_large_is_rejected() {
        assert!(enumerate_populations(MAX_N + 1).is_err());
        assert!(verify_claim1(MAX_N + 1).is_err());
    }

    #[test]
    fn hand_built_population() {
        // group a: 1 flagged positive, 1 unflagged negative
        // group b: 1 flagged positive, 1 unflagged negative
        let mut counts = [0; 8];
        counts[3] = 1; // a, y=1, o=1
        counts[0] = 1; // a, y=0, o=0
        counts[7] = 1; // b, y=1, o=1
        counts[4] = 1; // b, y=0, o=0
        let p = FinitePopulation { counts };
        assert!(p.statistical_parity());
        assert!(p.effective());
        assert!(p.ratio_preserved());
        assert_eq!(check(ClaimId::Claim1, &p), Some(true));
        assert_eq!(check(ClaimId::Claim2, &p), Some(true));
    }

    #[test]
    fn small_sizes_have_no_counterexamples() {
        for claim in [verify_claim1(6).unwrap(), verify_claim2(6).unwrap()] {
            assert!(claim.holds(), "{claim:?}");
            assert!(claim.premises.all_premises > 0);
        }
    }

    #[test]
    fn merge_order_does_not_matter() {
        let a = verify_size(ClaimId::Claim1, 5).unwrap();
        let b = verify_size(ClaimId::Claim1, 6).unwrap();
        assert_eq!(a.clone().merge(b.clone()), b.merge(a));
    }
}
