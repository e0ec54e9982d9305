//! Personalized re-ranking of baseline results.
//!
//! A link starts at weight zero for every (user, query). Each click on it
//! under that query adds `weight_dwell(dwell, W)`: at least 0.3 for the click
//! itself, up to 1.0 more for dwell. `W` spans the user's clicks for the
//! query, from the earliest open to the latest close (or open, for pending
//! clicks).

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::index::BaselineResult;
use crate::miner::weight_dwell;
use crate::usage::{ClickEvent, UsageLog};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedResult {
    pub doc_id: String,
    pub uri: String,
    pub title: String,
    pub baseline_rank: usize,
    pub score: f64,
    pub rank: usize,
}

/// Utilization scores of every link the user clicked under one query.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScoreTable {
    scores: BTreeMap<String, f64>,
}

impl ScoreTable {
    /// Scores from a user's clicks under one query. Clicks belonging to
    /// other users or queries must already be filtered out.
    pub fn from_clicks<'a, I>(clicks: I) -> Self
    where
        I: IntoIterator<Item = &'a ClickEvent>,
    {
        let clicks: Vec<&ClickEvent> = clicks.into_iter().collect();
        let window = match (clicks.iter().map(|c| c.open_ts).min(), clicks.iter().map(|c| c.last_ts()).max()) {
            (Some(lo), Some(hi)) => (hi.0 - lo.0) as f64 / 60.0,
            _ => return Self::default(),
        };
        let mut scores: BTreeMap<String, f64> = BTreeMap::new();
        for click in clicks {
            let dwell_min = click.dwell_seconds() as f64 / 60.0;
            *scores.entry(click.doc_id.clone()).or_insert(0.0) += weight_dwell(dwell_min, window);
        }
        Self { scores }
    }

    pub fn for_query(log: &UsageLog, user: &str, query: &str) -> Self {
        Self::from_clicks(log.clicks_for(user, query))
    }

    /// Zero for links the user never clicked.
    pub fn score(&self, doc_id: &str) -> f64 {
        self.scores.get(doc_id).copied().unwrap_or(0.0)
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.scores.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

/// Score of one link for one user and (normalized) query.
pub fn link_score(log: &UsageLog, user: &str, query: &str, doc_id: &str) -> f64 {
    ScoreTable::for_query(log, user, query).score(doc_id)
}

/// Stable sort of `baseline` by score, highest first. Links with equal
/// scores (including every never-clicked link) keep their baseline order,
/// so nothing is dropped and a first search returns the baseline unchanged.
pub fn rank_with(baseline: &[BaselineResult], scores: &ScoreTable) -> Vec<RankedResult> {
    let mut ranked: Vec<RankedResult> = baseline
        .iter()
        .map(|b| RankedResult {
            doc_id: b.doc_id.clone(),
            uri: b.uri.clone(),
            title: b.title.clone(),
            baseline_rank: b.baseline_rank,
            score: scores.score(&b.doc_id),
            rank: 0,
        })
        .collect();
    ranked.sort_by(|a, b| b.score.total_cmp(&a.score));
    for (i, r) in ranked.iter_mut().enumerate() {
        r.rank = i + 1;
    }
    ranked
}

pub fn rank(log: &UsageLog, user: &str, query: &str, baseline: &[BaselineResult]) -> Vec<RankedResult> {
    rank_with(baseline, &ScoreTable::for_query(log, user, query))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::usage::Timestamp;
    use alloc::format;
    use alloc::vec;
    use proptest::prelude::*;

    const MIN: i64 = 60;

    fn baseline(ids: &[&str]) -> Vec<BaselineResult> {
        ids.iter()
            .enumerate()
            .map(|(i, id)| BaselineResult {
                doc_id: (*id).into(),
                uri: format!("https://example.org/{id}"),
                title: (*id).into(),
                match_score: ids.len() - i,
                baseline_rank: i + 1,
            })
            .collect()
    }

    fn order(ranked: &[RankedResult]) -> Vec<&str> {
        ranked.iter().map(|r| r.doc_id.as_str()).collect()
    }

    #[test]
    fn never_clicked_scores_zero() {
        assert_eq!(link_score(&UsageLog::new(), "a", "card", "d1"), 0.0);
    }

    #[test]
    fn single_click_gets_full_weight() {
        let mut log = UsageLog::new();
        log.open_click("a", "card", "d1", Timestamp(0), None).unwrap();
        log.close_click("a", "card", "d1", Timestamp(0)).unwrap();
        assert_eq!(link_score(&log, "a", "card", "d1"), 1.3);
    }

    #[test]
    fn two_clicks_in_forty_minute_window() {
        let mut log = UsageLog::new();
        log.open_click("a", "card", "d1", Timestamp(0), None).unwrap();
        log.close_click("a", "card", "d1", Timestamp(10 * MIN)).unwrap();
        log.open_click("a", "card", "d1", Timestamp(20 * MIN), None).unwrap();
        log.close_click("a", "card", "d1", Timestamp(40 * MIN)).unwrap();
        assert!((link_score(&log, "a", "card", "d1") - 1.35).abs() < 1e-12);
    }

    #[test]
    fn pending_open_counts_as_click_floor() {
        let mut log = UsageLog::new();
        log.open_click("a", "q", "d1", Timestamp(0), None).unwrap();
        log.close_click("a", "q", "d1", Timestamp(10 * MIN)).unwrap();
        log.open_click("a", "q", "d2", Timestamp(5 * MIN), None).unwrap();
        assert!((link_score(&log, "a", "q", "d2") - 0.3).abs() < 1e-12);
        assert!((link_score(&log, "a", "q", "d1") - 1.3).abs() < 1e-12);
    }

    #[test]
    fn first_search_keeps_baseline() {
        let ranked = rank(&UsageLog::new(), "a", "card", &baseline(&["d1", "d2", "d3"]));
        assert_eq!(order(&ranked), vec!["d1", "d2", "d3"]);
        assert_eq!(ranked.iter().map(|r| r.rank).collect::<Vec<_>>(), vec![1, 2, 3]);
        assert!(ranked.iter().all(|r| r.score == 0.0 && r.rank == r.baseline_rank));
    }

    #[test]
    fn clicked_link_promoted_to_first() {
        let mut scores = BTreeMap::new();
        scores.insert(String::from("d3"), 1.35);
        let ranked = rank_with(&baseline(&["d1", "d2", "d3"]), &ScoreTable { scores });
        assert_eq!(order(&ranked), vec!["d3", "d1", "d2"]);
        assert_eq!(ranked[0].baseline_rank, 3);
    }

    #[test]
    fn equal_scores_keep_baseline_order() {
        let mut scores = BTreeMap::new();
        scores.insert(String::from("d1"), 0.9);
        scores.insert(String::from("d2"), 0.9);
        let ranked = rank_with(&baseline(&["d1", "d2"]), &ScoreTable { scores });
        assert_eq!(order(&ranked), vec!["d1", "d2"]);
    }

    #[test]
    fn scores_are_per_query_and_per_user() {
        let mut log = UsageLog::new();
        log.open_click("a", "card", "d2", Timestamp(0), None).unwrap();
        log.close_click("a", "card", "d2", Timestamp(60)).unwrap();
        let base = baseline(&["d1", "d2"]);
        assert_eq!(order(&rank(&log, "a", "card", &base)), vec!["d2", "d1"]);
        assert_eq!(order(&rank(&log, "a", "atm", &base)), vec!["d1", "d2"]);
        assert_eq!(order(&rank(&log, "b", "card", &base)), vec!["d1", "d2"]);
    }

    proptest! {
        #[test]
        fn ranking_is_a_permutation_of_baseline(
            n in 1usize..8,
            clicks in proptest::collection::vec((0usize..8, 0i64..5000, 0i64..900), 0..12),
        ) {
            let ids: Vec<String> = (0..n).map(|i| format!("d{i}")).collect();
            let refs: Vec<&str> = ids.iter().map(String::as_str).collect();
            let base = baseline(&refs);
            let mut log = UsageLog::new();
            for (doc, at, dwell) in &clicks {
                let doc = format!("d{doc}");
                log.open_click("a", "q", &doc, Timestamp(*at), None).unwrap();
                log.close_click("a", "q", &doc, Timestamp(at + dwell)).unwrap();
            }
            let ranked = rank(&log, "a", "q", &base);
            let mut got: Vec<&str> = order(&ranked);
            got.sort_unstable();
            let mut want = refs.clone();
            want.sort_unstable();
            prop_assert_eq!(got, want);
            for (i, r) in ranked.iter().enumerate() {
                prop_assert_eq!(r.rank, i + 1);
                prop_assert!(r.score >= 0.0);
            }
            for pair in ranked.windows(2) {
                prop_assert!(pair[0].score > pair[1].score
                    || (pair[0].score == pair[1].score && pair[0].baseline_rank < pair[1].baseline_rank));
            }
        }

        #[test]
        fn another_click_never_demotes(
            clicks in proptest::collection::vec((0usize..4, 0i64..3000, 0i64..600), 1..10),
            target in 0usize..4,
            at_frac in 0.0f64..1.0,
            dwell_frac in 0.0f64..1.0,
        ) {
            let ids = ["d0", "d1", "d2", "d3"];
            let base = baseline(&ids);
            let mut log = UsageLog::new();
            for (doc, at, dwell) in &clicks {
                log.open_click("a", "q", ids[*doc], Timestamp(*at), None).unwrap();
                log.close_click("a", "q", ids[*doc], Timestamp(at + dwell)).unwrap();
            }
            let lo = log.clicks().iter().map(|c| c.open_ts.0).min().unwrap();
            let hi = log.clicks().iter().map(|c| c.last_ts().0).max().unwrap();
            // the extra click lies inside the existing window, so W is unchanged
            let at = lo + ((hi - lo) as f64 * at_frac) as i64;
            let dwell = ((hi - at) as f64 * dwell_frac) as i64;
            let before = rank(&log, "a", "q", &base);
            log.open_click("a", "q", ids[target], Timestamp(at), None).unwrap();
            log.close_click("a", "q", ids[target], Timestamp(at + dwell)).unwrap();
            let after = rank(&log, "a", "q", &base);
            let pos = |r: &[RankedResult]| r.iter().find(|x| x.doc_id == ids[target]).unwrap().rank;
            prop_assert!(pos(&after) <= pos(&before));
        }
    }
}
