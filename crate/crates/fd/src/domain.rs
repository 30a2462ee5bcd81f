//! Integer finite domains stored as ordered, disjoint, inclusive intervals.

use std::fmt;

use serde::{Deserialize, Serialize};

/// A finite set of integers kept as sorted `(lo, hi)` runs.
///
/// Runs are inclusive, strictly increasing and never adjacent: for
/// consecutive runs `a` and `b`, `a.1 + 1 < b.0`. This keeps sparse domains
/// such as `{32, 64, 256, 512, 1024}` at one entry per value while a dense
/// range like `[0..100]` is a single run.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(into = "Vec<(i64, i64)>", try_from = "Vec<(i64, i64)>")]
pub struct IntervalSet {
    runs: Vec<(i64, i64)>,
}

impl IntervalSet {
    pub fn empty() -> Self {
        IntervalSet { runs: Vec::new() }
    }

    /// `[lo..hi]`; empty when `lo > hi`.
    pub fn range(lo: i64, hi: i64) -> Self {
        if lo > hi {
            Self::empty()
        } else {
            IntervalSet {
                runs: vec![(lo, hi)],
            }
        }
    }

    pub fn singleton(v: i64) -> Self {
        Self::range(v, v)
    }

    /// Builds a set from arbitrary (unsorted, possibly repeated) values.
    pub fn from_values<I: IntoIterator<Item = i64>>(values: I) -> Self {
        let mut vals: Vec<i64> = values.into_iter().collect();
        vals.sort_unstable();
        vals.dedup();
        let mut runs: Vec<(i64, i64)> = Vec::new();
        for v in vals {
            match runs.last_mut() {
                Some(last) if last.1.checked_add(1) == Some(v) => last.1 = v,
                _ => runs.push((v, v)),
            }
        }
        IntervalSet { runs }
    }

    /// Builds a set from arbitrary inclusive ranges, merging overlaps.
    pub fn from_ranges<I: IntoIterator<Item = (i64, i64)>>(ranges: I) -> Self {
        let mut rs: Vec<(i64, i64)> = ranges.into_iter().filter(|(l, h)| l <= h).collect();
        rs.sort_unstable();
        let mut runs: Vec<(i64, i64)> = Vec::with_capacity(rs.len());
        for (lo, hi) in rs {
            match runs.last_mut() {
                Some(last) if lo <= last.1.saturating_add(1) => last.1 = last.1.max(hi),
                _ => runs.push((lo, hi)),
            }
        }
        IntervalSet { runs }
    }

    pub fn runs(&self) -> &[(i64, i64)] {
        &self.runs
    }

    pub fn is_empty(&self) -> bool {
        self.runs.is_empty()
    }

    pub fn min(&self) -> Option<i64> {
        self.runs.first().map(|r| r.0)
    }

    pub fn max(&self) -> Option<i64> {
        self.runs.last().map(|r| r.1)
    }

    /// Number of values. Saturates at `u64::MAX` for the full `i64` range.
    pub fn size(&self) -> u64 {
        self.runs
            .iter()
            .map(|&(lo, hi)| (hi as i128 - lo as i128 + 1) as u128)
            .sum::<u128>()
            .min(u64::MAX as u128) as u64
    }

    pub fn is_fixed(&self) -> bool {
        matches!(self.runs.as_slice(), [(lo, hi)] if lo == hi)
    }

    /// The single value, if the set has exactly one.
    pub fn value(&self) -> Option<i64> {
        match self.runs.as_slice() {
            [(lo, hi)] if lo == hi => Some(*lo),
            _ => None,
        }
    }

    pub fn contains(&self, v: i64) -> bool {
        self.run_index(v).is_ok()
    }

    // Ok(i) if v lies in run i, Err(i) with the insertion point otherwise.
    fn run_index(&self, v: i64) -> Result<usize, usize> {
        self.runs.binary_search_by(|&(lo, hi)| {
            if hi < v {
                std::cmp::Ordering::Less
            } else if lo > v {
                std::cmp::Ordering::Greater
            } else {
                std::cmp::Ordering::Equal
            }
        })
    }

    /// Keeps only values `>= v`. Returns whether anything was removed.
    pub fn remove_below(&mut self, v: i64) -> bool {
        let Some(min) = self.min() else { return false };
        if v <= min {
            return false;
        }
        let cut = match self.run_index(v) {
            Ok(i) => {
                self.runs[i].0 = v;
                i
            }
            Err(i) => i,
        };
        self.runs.drain(..cut);
        true
    }

    /// Keeps only values `<= v`. Returns whether anything was removed.
    pub fn remove_above(&mut self, v: i64) -> bool {
        let Some(max) = self.max() else { return false };
        if v >= max {
            return false;
        }
        let keep = match self.run_index(v) {
            Ok(i) => {
                self.runs[i].1 = v;
                i + 1
            }
            Err(i) => i,
        };
        self.runs.truncate(keep);
        true
    }

    pub fn remove_value(&mut self, v: i64) -> bool {
        let Ok(i) = self.run_index(v) else {
            return false;
        };
        let (lo, hi) = self.runs[i];
        match (lo == v, hi == v) {
            (true, true) => {
                self.runs.remove(i);
            }
            (true, false) => self.runs[i].0 = v + 1,
            (false, true) => self.runs[i].1 = v - 1,
            (false, false) => {
                self.runs[i].1 = v - 1;
                self.runs.insert(i + 1, (v + 1, hi));
            }
        }
        true
    }

    pub fn intersect(&self, other: &IntervalSet) -> IntervalSet {
        let mut out = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < self.runs.len() && j < other.runs.len() {
            let (a_lo, a_hi) = self.runs[i];
            let (b_lo, b_hi) = other.runs[j];
            let lo = a_lo.max(b_lo);
            let hi = a_hi.min(b_hi);
            if lo <= hi {
                out.push((lo, hi));
            }
            if a_hi < b_hi {
                i += 1;
            } else {
                j += 1;
            }
        }
        IntervalSet { runs: out }
    }

    /// Replaces `self` with `self ∩ other`. Returns whether anything was removed.
    pub fn retain_in(&mut self, other: &IntervalSet) -> bool {
        let next = self.intersect(other);
        if next != *self {
            *self = next;
            true
        } else {
            false
        }
    }

    pub fn is_subset_of(&self, other: &IntervalSet) -> bool {
        self.intersect(other) == *self
    }

    pub fn iter(&self) -> impl Iterator<Item = i64> + '_ {
        self.runs.iter().flat_map(|&(lo, hi)| lo..=hi)
    }
}

impl From<IntervalSet> for Vec<(i64, i64)> {
    fn from(s: IntervalSet) -> Self {
        s.runs
    }
}

impl TryFrom<Vec<(i64, i64)>> for IntervalSet {
    type Error = String;

    fn try_from(runs: Vec<(i64, i64)>) -> Result<Self, Self::Error> {
        for (k, &(lo, hi)) in runs.iter().enumerate() {
            if lo > hi {
                return Err(format!("run {k} has lo > hi"));
            }
            if k > 0 && runs[k - 1].1 as i128 + 1 >= lo as i128 {
                return Err(format!("run {k} overlaps or touches its predecessor"));
            }
        }
        Ok(IntervalSet { runs })
    }
}

impl fmt::Display for IntervalSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.runs.as_slice() {
            [] => write!(f, "{{}}"),
            [(lo, hi)] if lo != hi => write!(f, "[{lo}..{hi}]"),
            runs => {
                write!(f, "{{")?;
                for (k, &(lo, hi)) in runs.iter().enumerate() {
                    if k > 0 {
                        write!(f, ", ")?;
                    }
                    if lo == hi {
                        write!(f, "{lo}")?;
                    } else {
                        write!(f, "{lo}..{hi}")?;
                    }
                }
                write!(f, "}}")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    fn well_formed(s: &IntervalSet) -> bool {
        s.runs.iter().all(|(l, h)| l <= h)
            && s.runs.windows(2).all(|w| w[0].1 + 1 < w[1].0)
    }

    #[test]
    fn sparse_memory_domain() {
        let d = IntervalSet::from_values([32, 64, 256, 512, 1024]);
        assert_eq!(d.size(), 5);
        assert_eq!(d.min(), Some(32));
        assert_eq!(d.max(), Some(1024));
        assert_eq!(d.runs().len(), 5);
        assert_eq!(d.to_string(), "{32, 64, 256, 512, 1024}");
    }

    #[test]
    fn adjacent_values_merge() {
        let d = IntervalSet::from_values([3, 1, 2, 5]);
        assert_eq!(d.runs(), &[(1, 3), (5, 5)]);
        let r = IntervalSet::from_ranges([(0, 2), (3, 4), (8, 9), (9, 12)]);
        assert_eq!(r.runs(), &[(0, 4), (8, 12)]);
    }

    #[test]
    fn remove_value_splits_run() {
        let mut d = IntervalSet::range(4, 6);
        assert!(d.remove_value(5));
        assert_eq!(d.runs(), &[(4, 4), (6, 6)]);
        assert!(!d.remove_value(5));
        assert!(d.remove_value(4));
        assert_eq!(d.value(), Some(6));
    }

    #[test]
    fn bounds_removal() {
        let mut d = IntervalSet::from_values([1, 2, 3, 7, 8, 12]);
        assert!(d.remove_below(5));
        assert_eq!(d.runs(), &[(7, 8), (12, 12)]);
        assert!(d.remove_above(7));
        assert_eq!(d.value(), Some(7));
        assert!(d.remove_above(0));
        assert!(d.is_empty());
    }

    #[test]
    fn serde_rejects_malformed_runs() {
        let ok: IntervalSet = serde_json::from_str("[[0,1],[3,3]]").unwrap();
        assert_eq!(ok.size(), 3);
        assert!(serde_json::from_str::<IntervalSet>("[[0,1],[2,3]]").is_err());
        assert!(serde_json::from_str::<IntervalSet>("[[4,1]]").is_err());
    }

    fn arb_set() -> impl Strategy<Value = BTreeSet<i64>> {
        proptest::collection::btree_set(-20i64..20, 0..15)
    }

    proptest! {
        #[test]
        fn operations_match_btreeset(a in arb_set(), b in arb_set(), v in -22i64..22) {
            let sa = IntervalSet::from_values(a.iter().copied());
            let sb = IntervalSet::from_values(b.iter().copied());
            prop_assert!(well_formed(&sa));
            prop_assert_eq!(sa.size() as usize, a.len());
            prop_assert_eq!(sa.contains(v), a.contains(&v));
            prop_assert_eq!(sa.min(), a.iter().next().copied());
            prop_assert_eq!(sa.max(), a.iter().next_back().copied());

            let inter = sa.intersect(&sb);
            prop_assert!(well_formed(&inter));
            let expect: Vec<i64> = a.intersection(&b).copied().collect();
            prop_assert_eq!(inter.iter().collect::<Vec<_>>(), expect);

            let mut below = sa.clone();
            below.remove_below(v);
            prop_assert!(well_formed(&below));
            prop_assert_eq!(below.iter().collect::<Vec<_>>(), a.iter().copied().filter(|&x| x >= v).collect::<Vec<_>>());

            let mut above = sa.clone();
            above.remove_above(v);
            prop_assert!(well_formed(&above));
            prop_assert_eq!(above.iter().collect::<Vec<_>>(), a.iter().copied().filter(|&x| x <= v).collect::<Vec<_>>());

            let mut without = sa.clone();
            let removed = without.remove_value(v);
            prop_assert_eq!(removed, a.contains(&v));
            prop_assert!(well_formed(&without));
            prop_assert_eq!(without.iter().collect::<Vec<_>>(), a.iter().copied().filter(|&x| x != v).collect::<Vec<_>>());
        }
    }
}
