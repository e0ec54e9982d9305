//! Level-wise sequential pattern mining over click sequences.
//!
//! Three support-counting modes share one GSP loop:
//!
//! - [`MiningMode::Plain`]: every input sequence contributes 1.
//! - [`MiningMode::TimeWeighted`]: a sequence contributes the mean recency
//!   weight of its items, `(ts - min_ts) / (max_ts - min_ts) + 0.3`.
//! - [`MiningMode::DwellWeighted`]: a sequence contributes the mean dwell
//!   weight of its items, `dwell_minutes / window_minutes + 0.3` with dwell
//!   clamped to the window.
//!
//! The weight belongs to the input sequence, not to the candidate pattern,
//! so support stays anti-monotone and apriori pruning remains sound.
//! Items are single ids (a click stream is totally ordered); containment is
//! order-preserving subsequence with unbounded gaps.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

/// Additive floor of both weight functions.
pub const WEIGHT_FLOOR: f64 = 0.3;
/// Weight when the observation window is empty (or the item sits at its end).
pub const WEIGHT_CEILING: f64 = 1.0 + WEIGHT_FLOOR;

#[derive(Debug, Clone, PartialEq)]
pub enum MinerError {
    InvalidConfig(&'static str),
    /// Parallel per-item arrays of a sequence differ in length.
    MismatchedLengths,
    EmptySequence,
    OutOfWindow { ts: i64, min_ts: i64, max_ts: i64 },
}

impl fmt::Display for MinerError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MinerError::InvalidConfig(why) => write!(f, "invalid mining config: {why}"),
            MinerError::MismatchedLengths => f.write_str("sequence item arrays differ in length"),
            MinerError::EmptySequence => f.write_str("sequence has no items"),
            MinerError::OutOfWindow { ts, min_ts, max_ts } => {
                write!(f, "timestamp {ts} outside observation window [{min_ts}, {max_ts}]")
            }
        }
    }
}

impl core::error::Error for MinerError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MiningMode {
    /// GSP
    Plain,
    /// WTGSP
    TimeWeighted,
    /// WMGSP
    DwellWeighted,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MiningConfig {
    mode: MiningMode,
    min_sup: f64,
    min_ts: i64,
    max_ts: i64,
}

impl MiningConfig {
    /// `min_sup` is an absolute (possibly weighted) support threshold.
    /// `min_ts..=max_ts` is the observation window in unix seconds.
    pub fn new(mode: MiningMode, min_sup: f64, min_ts: i64, max_ts: i64) -> Result<Self, MinerError> {
        if !min_sup.is_finite() || min_sup <= 0.0 {
            return Err(MinerError::InvalidConfig("min_sup must be a positive finite number"));
        }
        if max_ts < min_ts {
            return Err(MinerError::InvalidConfig("max_ts precedes min_ts"));
        }
        Ok(Self { mode, min_sup, min_ts, max_ts })
    }

    /// Config whose window spans every item of `db`, from the earliest item
    /// timestamp to the latest item end (timestamp plus dwell).
    pub fn covering<I>(mode: MiningMode, min_sup: f64, db: &[SequenceRecord<I>]) -> Result<Self, MinerError> {
        let mut bounds: Option<(i64, i64)> = None;
        for seq in db {
            for (ts, dwell) in seq.item_ts.iter().zip(&seq.item_dwell_min) {
                let end = ts + dwell_seconds(*dwell);
                bounds = Some(match bounds {
                    None => (*ts, end.max(*ts)),
                    Some((lo, hi)) => (lo.min(*ts), hi.max(end).max(*ts)),
                });
            }
        }
        let (min_ts, max_ts) = bounds.unwrap_or((0, 0));
        Self::new(mode, min_sup, min_ts, max_ts)
    }

    pub fn mode(&self) -> MiningMode {
        self.mode
    }

    pub fn min_sup(&self) -> f64 {
        self.min_sup
    }

    pub fn min_ts(&self) -> i64 {
        self.min_ts
    }

    pub fn max_ts(&self) -> i64 {
        self.max_ts
    }

    pub fn window_minutes(&self) -> f64 {
        (self.max_ts - self.min_ts) as f64 / 60.0
    }
}

fn dwell_seconds(minutes: f64) -> i64 {
    if minutes.is_finite() && minutes > 0.0 {
        // no float rounding in core without libm
        let secs = minutes * 60.0;
        let whole = secs as i64;
        if secs - whole as f64 >= 0.5 { whole + 1 } else { whole }
    } else {
        0
    }
}

/// One input sequence: item ids with a timestamp (unix seconds) and dwell
/// (minutes) per item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceRecord<I> {
    items: Vec<I>,
    item_ts: Vec<i64>,
    item_dwell_min: Vec<f64>,
}

impl<I> SequenceRecord<I> {
    pub fn new(items: Vec<I>, item_ts: Vec<i64>, item_dwell_min: Vec<f64>) -> Result<Self, MinerError> {
        if items.is_empty() {
            return Err(MinerError::EmptySequence);
        }
        if items.len() != item_ts.len() || items.len() != item_dwell_min.len() {
            return Err(MinerError::MismatchedLengths);
        }
        Ok(Self { items, item_ts, item_dwell_min })
    }

    /// A sequence with no timing information (all timestamps 0, no dwell).
    pub fn untimed(items: Vec<I>) -> Result<Self, MinerError> {
        let n = items.len();
        Self::new(items, alloc::vec![0; n], alloc::vec![0.0; n])
    }

    pub fn items(&self) -> &[I] {
        &self.items
    }

    pub fn item_ts(&self) -> &[i64] {
        &self.item_ts
    }

    pub fn item_dwell_min(&self) -> &[f64] {
        &self.item_dwell_min
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pattern<I> {
    pub items: Vec<I>,
    pub support: f64,
}

impl<I> Pattern<I> {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

/// Recency weight of an item: its position within the window plus 0.3.
/// A zero-width window yields 1.3.
pub fn weight_time(item_ts: i64, min_ts: i64, max_ts: i64) -> Result<f64, MinerError> {
    if item_ts < min_ts || item_ts > max_ts {
        return Err(MinerError::OutOfWindow { ts: item_ts, min_ts, max_ts });
    }
    if max_ts == min_ts {
        return Ok(WEIGHT_CEILING);
    }
    Ok((item_ts - min_ts) as f64 / (max_ts - min_ts) as f64 + WEIGHT_FLOOR)
}

/// Utilization weight of an item: its dwell as a fraction of the window
/// plus 0.3. Dwell is clamped to `[0, window]`; a zero-width window yields
/// 1.3.
pub fn weight_dwell(dwell_minutes: f64, window_minutes: f64) -> f64 {
    let dwell = if dwell_minutes < 0.0 || dwell_minutes.is_nan() {
        log::warn!("negative dwell {dwell_minutes} min clamped to 0");
        0.0
    } else {
        dwell_minutes
    };
    if window_minutes.is_nan() || window_minutes <= 0.0 {
        return WEIGHT_CEILING;
    }
    let dwell = if dwell > window_minutes { window_minutes } else { dwell };
    dwell / window_minutes + WEIGHT_FLOOR
}

/// The amount one input sequence adds to the support of each pattern it
/// contains.
pub fn sequence_weight<I>(seq: &SequenceRecord<I>, config: &MiningConfig) -> Result<f64, MinerError> {
    if seq.items.is_empty() {
        return Err(MinerError::EmptySequence);
    }
    let n = seq.items.len() as f64;
    match config.mode {
        MiningMode::Plain => Ok(1.0),
        MiningMode::TimeWeighted => {
            let mut sum = 0.0;
            for ts in &seq.item_ts {
                sum += weight_time(*ts, config.min_ts, config.max_ts)?;
            }
            Ok(sum / n)
        }
        MiningMode::DwellWeighted => {
            let window = config.window_minutes();
            let sum: f64 = seq.item_dwell_min.iter().map(|d| weight_dwell(*d, window)).sum();
            Ok(sum / n)
        }
    }
}

/// True iff `pattern` occurs in `items` in order, gaps allowed.
pub fn contains<I: PartialEq>(items: &[I], pattern: &[I]) -> bool {
    let mut rest = items.iter();
    pattern.iter().all(|p| rest.any(|i| i == p))
}

fn join<I: Ord + Clone>(frequent_prev: &BTreeSet<Vec<I>>) -> BTreeSet<Vec<I>> {
    let mut out = BTreeSet::new();
    let Some(k_minus_1) = frequent_prev.iter().next().map(Vec::len) else {
        return out;
    };
    if k_minus_1 == 1 {
        for p in frequent_prev {
            for q in frequent_prev {
                let mut c = p.clone();
                c.push(q[0].clone());
                out.insert(c);
            }
        }
        return out;
    }
    // q's prefix (all but last) -> q's last items
    let mut by_prefix: BTreeMap<&[I], Vec<&I>> = BTreeMap::new();
    for q in frequent_prev {
        by_prefix.entry(&q[..k_minus_1 - 1]).or_default().push(&q[k_minus_1 - 1]);
    }
    for p in frequent_prev {
        if let Some(lasts) = by_prefix.get(&p[1..]) {
            for last in lasts {
                let mut c = p.clone();
                c.push((*last).clone());
                out.insert(c);
            }
        }
    }
    out
}

/// GSP candidate generation: join patterns of length k-1 that overlap in
/// k-2 items, then drop any candidate with a (k-1)-subsequence that is not
/// frequent. For k = 2 every ordered pair (including self pairs) is joined.
pub fn generate_candidates<I: Ord + Clone>(frequent_prev: &BTreeSet<Vec<I>>) -> BTreeSet<Vec<I>> {
    let mut candidates = join(frequent_prev);
    candidates.retain(|c| {
        (0..c.len()).all(|skip| {
            let sub: Vec<I> = c
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != skip)
                .map(|(_, x)| x.clone())
                .collect();
            frequent_prev.contains(&sub)
        })
    });
    candidates
}

/// All frequent patterns of `db` with their exact supports, sorted by
/// support descending then items ascending.
///
/// Support of a pattern is the sum, over input sequences that contain it, of
/// [`sequence_weight`], accumulated in database order.
pub fn mine<I: Ord + Clone>(db: &[SequenceRecord<I>], config: &MiningConfig) -> Result<Vec<Pattern<I>>, MinerError> {
    let weights = db
        .iter()
        .map(|seq| sequence_weight(seq, config))
        .collect::<Result<Vec<f64>, _>>()?;

    let mut level: BTreeMap<Vec<I>, f64> = BTreeMap::new();
    for (seq, w) in db.iter().zip(&weights) {
        let distinct: BTreeSet<&I> = seq.items.iter().collect();
        for item in distinct {
            *level.entry(alloc::vec![item.clone()]).or_insert(0.0) += w;
        }
    }
    level.retain(|_, support| *support >= config.min_sup);

    let mut found: Vec<Pattern<I>> = Vec::new();
    while !level.is_empty() {
        let frequent: BTreeSet<Vec<I>> = level.keys().cloned().collect();
        found.extend(level.into_iter().map(|(items, support)| Pattern { items, support }));

        let mut next = BTreeMap::new();
        for candidate in generate_candidates(&frequent) {
            let mut support = 0.0;
            for (seq, w) in db.iter().zip(&weights) {
                if contains(&seq.items, &candidate) {
                    support += w;
                }
            }
            if support >= config.min_sup {
                next.insert(candidate, support);
            }
        }
        level = next;
    }

    found.sort_by(|a, b| b.support.total_cmp(&a.support).then_with(|| a.items.cmp(&b.items)));
    Ok(found)
}
