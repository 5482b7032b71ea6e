//! Ranked result lists, the unit passed between every pipeline stage.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedEntry {
    pub doc_id: String,
    pub score: f64,
}

impl RankedEntry {
    pub fn new(doc_id: impl Into<String>, score: f64) -> Self {
        Self {
            doc_id: doc_id.into(),
            score,
        }
    }
}

/// Score descending, then doc id ascending.
pub fn rank_order(a: &RankedEntry, b: &RankedEntry) -> Ordering {
    b.score.total_cmp(&a.score).then_with(|| a.doc_id.cmp(&b.doc_id))
}

/// Sorts `entries` by [`rank_order`] and keeps the best `depth`.
pub fn top_k(mut entries: Vec<RankedEntry>, depth: usize) -> Vec<RankedEntry> {
    if depth == 0 {
        return Vec::new();
    }
    if entries.len() > depth {
        entries.select_nth_unstable_by(depth - 1, rank_order);
        entries.truncate(depth);
    }
    entries.sort_unstable_by(rank_order);
    entries
}

/// Ordered `(doc_id, score)` results for one query.
///
/// Entries are always sorted by score descending with ties broken by
/// ascending doc id, and no doc id appears twice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedList {
    pub query_id: String,
    pub source_tag: String,
    entries: Vec<RankedEntry>,
}

impl RankedList {
    pub fn empty(query_id: impl Into<String>, source_tag: impl Into<String>) -> Self {
        Self {
            query_id: query_id.into(),
            source_tag: source_tag.into(),
            entries: Vec::new(),
        }
    }

    /// Sorts arbitrary scored entries and truncates to `depth`.
    /// Duplicate doc ids are an integrity error.
    pub fn from_scores(
        query_id: impl Into<String>,
        source_tag: impl Into<String>,
        entries: Vec<RankedEntry>,
        depth: usize,
    ) -> Result<Self> {
        let query_id = query_id.into();
        let mut seen = BTreeSet::new();
        for e in &entries {
            if !seen.insert(e.doc_id.as_str()) {
                return Err(Error::Integrity(format!(
                    "duplicate doc id `{}` in ranking for query `{query_id}`",
                    e.doc_id
                )));
            }
        }
        drop(seen);
        Ok(Self {
            query_id,
            source_tag: source_tag.into(),
            entries: top_k(entries, depth),
        })
    }

    /// Skips the duplicate check; callers guarantee unique ids.
    pub(crate) fn from_unique(
        query_id: impl Into<String>,
        source_tag: impl Into<String>,
        entries: Vec<RankedEntry>,
        depth: usize,
    ) -> Self {
        Self {
            query_id: query_id.into(),
            source_tag: source_tag.into(),
            entries: top_k(entries, depth),
        }
    }

    /// Top `depth` of a dense score vector over `doc_ids`, selecting on
    /// indices so only the kept entries allocate.
    pub(crate) fn from_score_vector(
        query_id: impl Into<String>,
        source_tag: impl Into<String>,
        doc_ids: &[String],
        scores: &[f64],
        depth: usize,
    ) -> Self {
        let order = |&a: &usize, &b: &usize| {
            scores[b]
                .total_cmp(&scores[a])
                .then_with(|| doc_ids[a].cmp(&doc_ids[b]))
        };
        let mut idx: Vec<usize> = (0..scores.len()).collect();
        if depth == 0 {
            idx.clear();
        } else if idx.len() > depth {
            idx.select_nth_unstable_by(depth - 1, order);
            idx.truncate(depth);
        }
        idx.sort_unstable_by(order);
        Self {
            query_id: query_id.into(),
            source_tag: source_tag.into(),
            entries: idx
                .into_iter()
                .map(|i| RankedEntry::new(doc_ids[i].as_str(), scores[i]))
                .collect(),
        }
    }

    pub fn entries(&self) -> &[RankedEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn doc_ids(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.doc_id.as_str())
    }

    /// 1-based rank of a document, if present.
    pub fn rank_of(&self, doc_id: &str) -> Option<usize> {
        self.entries.iter().position(|e| e.doc_id == doc_id).map(|i| i + 1)
    }

    pub fn truncated(&self, depth: usize) -> Self {
        Self {
            query_id: self.query_id.clone(),
            source_tag: self.source_tag.clone(),
            entries: self.entries[..self.entries.len().min(depth)].to_vec(),
        }
    }

    pub fn is_well_formed(&self) -> bool {
        let sorted = self
            .entries
            .windows(2)
            .all(|w| rank_order(&w[0], &w[1]) == Ordering::Less);
        let mut seen = BTreeSet::new();
        sorted && self.entries.iter().all(|e| seen.insert(e.doc_id.as_str()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    #[test]
    fn ties_break_by_doc_id() {
        let list = RankedList::from_scores(
            "q",
            "t",
            vec![
                RankedEntry::new("b", 1.0),
                RankedEntry::new("a", 1.0),
                RankedEntry::new("c", 2.0),
            ],
            10,
        )
        .unwrap();
        let ids: Vec<_> = list.doc_ids().collect();
        assert_eq!(ids, ["c", "a", "b"]);
        assert!(list.is_well_formed());
    }

    #[test]
    fn duplicates_rejected() {
        let err = RankedList::from_scores(
            "q",
            "t",
            vec![RankedEntry::new("a", 1.0), RankedEntry::new("a", 2.0)],
            5,
        );
        assert!(err.is_err());
    }

    proptest! {
        #[test]
        fn top_k_is_prefix_of_full_sort(scores in prop::collection::vec(-3i32..3, 0..40), k in 1usize..50) {
            let entries: Vec<_> = scores.iter().enumerate()
                .map(|(i, &s)| RankedEntry::new(format!("d{i:03}"), f64::from(s)))
                .collect();
            let full = top_k(entries.clone(), entries.len());
            let part = top_k(entries, k);
            prop_assert_eq!(&full[..part.len()], &part[..]);
            prop_assert_eq!(part.len(), k.min(scores.len()));
        }
    }
}
