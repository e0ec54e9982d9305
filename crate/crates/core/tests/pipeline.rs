use clickrank_core::index::{normalize_query, tokenize_query, CorpusIndex, Document};
use clickrank_core::miner::{mine, MiningConfig, MiningMode};
use clickrank_core::rank::rank;
use clickrank_core::text::StopwordList;
use clickrank_core::usage::{Timestamp, UsageLog, DEFAULT_SESSION_TIMEOUT_SECS};

fn index() -> (CorpusIndex, StopwordList) {
    let stop = StopwordList::default();
    let mut idx = CorpusIndex::new(10);
    for (id, body) in [
        ("faq", "How do I block my card? Call the card line."),
        ("rates", "Card rates and card fees for every card."),
        ("atm", "Find an ATM. ATM withdrawals with your card."),
    ] {
        let doc = Document { doc_id: id.into(), uri: format!("https://example.org/{id}"), title: id.into(), body: body.into() };
        idx.ingest(doc, &stop).unwrap();
    }
    (idx, stop)
}

#[test]
fn search_click_rerank_and_mine() {
    let (idx, stop) = index();
    let raw = "The CARD";
    let query = normalize_query(raw, &stop);
    assert_eq!(query, "card");
    let baseline = idx.match_query(&tokenize_query(raw, &stop)).unwrap();
    let order: Vec<&str> = baseline.iter().map(|b| b.doc_id.as_str()).collect();
    assert_eq!(order, ["rates", "faq", "atm"]);

    let mut log = UsageLog::new();
    let t = 1_792_152_000;
    log.record_search("u", &query, Timestamp(t)).unwrap();
    log.open_click("u", &query, "atm", Timestamp(t + 5), Some(3)).unwrap();
    log.close_click("u", &query, "atm", Timestamp(t + 305)).unwrap();
    log.open_click("u", &query, "faq", Timestamp(t + 400), Some(2)).unwrap();
    log.close_click("u", &query, "faq", Timestamp(t + 430)).unwrap();

    let ranked = rank(&log, "u", &query, &baseline);
    let order: Vec<&str> = ranked.iter().map(|r| r.doc_id.as_str()).collect();
    assert_eq!(order, ["atm", "faq", "rates"]);
    assert_eq!(ranked.iter().map(|r| r.rank).collect::<Vec<_>>(), [1, 2, 3]);

    // another user sees the plain baseline
    let other = rank(&log, "v", &query, &baseline);
    assert!(other.iter().all(|r| r.rank == r.baseline_rank));

    let db: Vec<_> = log.sessions_of("u", DEFAULT_SESSION_TIMEOUT_SECS).iter().map(|s| s.to_record()).collect();
    assert_eq!(db.len(), 1);
    for mode in [MiningMode::Plain, MiningMode::TimeWeighted, MiningMode::DwellWeighted] {
        let config = MiningConfig::covering(mode, 0.1, &db).unwrap();
        let pats = mine(&db, &config).unwrap();
        let items: Vec<Vec<String>> = pats.iter().map(|p| p.items.clone()).collect();
        assert!(items.contains(&vec!["atm".to_string(), "faq".to_string()]), "{mode:?}: {items:?}");
        assert_eq!(pats.len(), 3);
    }
}

#[test]
fn replaying_the_journal_rebuilds_the_log() {
    let mut log = UsageLog::new();
    log.record_search("a", "card", Timestamp(10)).unwrap();
    log.open_click("a", "card", "d", Timestamp(11), None).unwrap();
    log.record_search("b", "atm", Timestamp(12)).unwrap();
    let rebuilt = UsageLog::from_events(log.journal().iter().cloned()).unwrap();
    assert_eq!(rebuilt, log);
    assert!(rebuilt.has_pending("a", "card", "d"));
}
