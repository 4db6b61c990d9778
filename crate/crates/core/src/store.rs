//! Rating, role-rule and observation databases.

use std::io::{Read, Write};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{AgentId, CoreError, NativeRange, Rating, ReputationType, Term};

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("opinion bin {bin} outside 1..={bins}")]
    BadBin { bin: usize, bins: usize },

    #[error("bin count must be positive")]
    NoBins,

    #[error("line {line}: {reason}")]
    Parse { line: u64, reason: String },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Core(#[from] CoreError),
}

/// Conjunction of per-field equality tests; `None` matches anything.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RatingPattern {
    pub source: Option<AgentId>,
    pub target: Option<AgentId>,
    pub term: Option<Term>,
    pub rep_type: Option<ReputationType>,
    pub interaction_id: Option<String>,
}

impl RatingPattern {
    pub fn any() -> Self {
        Self::default()
    }

    pub fn source(mut self, source: &AgentId) -> Self {
        self.source = Some(source.clone());
        self
    }

    pub fn target(mut self, target: &AgentId) -> Self {
        self.target = Some(target.clone());
        self
    }

    pub fn term(mut self, term: &Term) -> Self {
        self.term = Some(term.clone());
        self
    }

    pub fn rep_type(mut self, rep_type: ReputationType) -> Self {
        self.rep_type = Some(rep_type);
        self
    }

    pub fn interaction(mut self, id: impl Into<String>) -> Self {
        self.interaction_id = Some(id.into());
        self
    }

    pub fn matches(&self, r: &Rating) -> bool {
        self.source.as_ref().is_none_or(|s| *s == r.source)
            && self.target.as_ref().is_none_or(|t| *t == r.target)
            && self.term.as_ref().is_none_or(|t| *t == r.term)
            && self.rep_type.is_none_or(|k| k == r.rep_type)
            && self
                .interaction_id
                .as_ref()
                .is_none_or(|i| r.interaction_id.as_ref() == Some(i))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Entry {
    seq: u64,
    rating: Rating,
}

/// Ordered multiset of ratings with an optional per-source history cap.
///
/// When an owner is set the cap only bounds the owner's own ratings, so
/// witness reports copied into the store are kept regardless. Without an
/// owner every source is capped independently.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RatingStore {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    owner: Option<AgentId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    history_cap: Option<usize>,
    #[serde(default)]
    next_seq: u64,
    #[serde(default)]
    entries: Vec<Entry>,
}

impl RatingStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_cap(history_cap: usize) -> Self {
        Self {
            history_cap: Some(history_cap.max(1)),
            ..Self::default()
        }
    }

    pub fn owned_by(mut self, owner: AgentId) -> Self {
        self.owner = Some(owner);
        self
    }

    pub fn owner(&self) -> Option<&AgentId> {
        self.owner.as_ref()
    }

    pub fn history_cap(&self) -> Option<usize> {
        self.history_cap
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn insert(&mut self, rating: Rating) {
        let source = rating.source.clone();
        self.entries.push(Entry {
            seq: self.next_seq,
            rating,
        });
        self.next_seq += 1;
        self.evict(&source);
    }

    fn evict(&mut self, source: &AgentId) {
        let Some(cap) = self.history_cap else { return };
        if self.owner.as_ref().is_some_and(|o| o != source) {
            return;
        }
        let mut mine: Vec<(u64, u64)> = self
            .entries
            .iter()
            .filter(|e| e.rating.source == *source)
            .map(|e| (e.rating.timestamp, e.seq))
            .collect();
        if mine.len() <= cap {
            return;
        }
        mine.sort_unstable();
        let doomed: Vec<u64> = mine[..mine.len() - cap].iter().map(|&(_, s)| s).collect();
        self.entries.retain(|e| !doomed.contains(&e.seq));
    }

    /// Matching ratings in timestamp order (insertion order among equals).
    pub fn query(&self, pattern: &RatingPattern) -> Vec<&Rating> {
        let mut hits: Vec<&Entry> = self.entries.iter().filter(|e| pattern.matches(&e.rating)).collect();
        hits.sort_by_key(|e| (e.rating.timestamp, e.seq));
        hits.into_iter().map(|e| &e.rating).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Rating> {
        self.entries.iter().map(|e| &e.rating)
    }

    /// Latest timestamp in the store.
    pub fn latest_timestamp(&self) -> Option<u64> {
        self.entries.iter().map(|e| e.rating.timestamp).max()
    }

    /// Writes the store as tab-separated records with a header line.
    pub fn write_tsv<W: Write>(&self, out: W) -> Result<(), StoreError> {
        let mut w = csv::WriterBuilder::new()
            .delimiter(b'\t')
            .has_headers(false)
            .from_writer(out);
        w.write_record(TSV_HEADER)?;
        for r in self.query(&RatingPattern::any()) {
            w.write_record([
                r.source.as_str(),
                r.target.as_str(),
                r.term.as_str(),
                r.rep_type.code(),
                &r.value.to_string(),
                &r.raw_value.to_string(),
                &r.timestamp.to_string(),
                r.interaction_id.as_deref().unwrap_or(""),
            ])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    /// Reads records written by [`RatingStore::write_tsv`] into an uncapped store.
    pub fn read_tsv<R: Read>(input: R) -> Result<Self, StoreError> {
        let mut reader = csv::ReaderBuilder::new()
            .delimiter(b'\t')
            .has_headers(true)
            .from_reader(input);
        let header = reader.headers()?.clone();
        if header.iter().ne(TSV_HEADER) {
            return Err(StoreError::Parse {
                line: 1,
                reason: format!("unexpected header {:?}", header.iter().collect::<Vec<_>>()),
            });
        }
        let mut store = Self::new();
        for rec in reader.records() {
            let rec = rec?;
            let line = rec.position().map_or(0, |p| p.line());
            let bad = |reason: String| StoreError::Parse { line, reason };
            let field = |i: usize| rec.get(i).unwrap_or("");
            let num = |i: usize| -> Result<f64, StoreError> {
                field(i)
                    .parse::<f64>()
                    .map_err(|e| bad(format!("field {}: {e}", TSV_HEADER[i])))
            };
            let rep_type = ReputationType::from_code(field(3))
                .ok_or_else(|| bad(format!("unknown reputation type {:?}", field(3))))?;
            let rating = Rating {
                source: AgentId::new(field(0))?,
                target: AgentId::new(field(1))?,
                term: Term::new(field(2))?,
                rep_type,
                value: num(4)?,
                raw_value: num(5)?,
                timestamp: field(6).parse().map_err(|e| bad(format!("field timestamp: {e}")))?,
                interaction_id: Some(field(7).to_string()).filter(|s| !s.is_empty()),
            };
            rating.validate()?;
            store.insert(rating);
        }
        Ok(store)
    }
}

/// Column order of the flat-file format.
pub const TSV_HEADER: [&str; 8] = [
    "source",
    "target",
    "term",
    "rep_type",
    "value",
    "raw_value",
    "timestamp",
    "interaction_id",
];

/// `(role_a, role_b, term, e, v)`: an agent in `role_b` is expected, with
/// likelihood `e`, to perform at `v` for `term` when dealing with `role_a`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoleRule {
    pub role_a: String,
    pub role_b: String,
    pub term: Term,
    pub likelihood: f64,
    pub expected_value: f64,
    #[serde(default = "default_rule_range")]
    pub range: NativeRange,
}

fn default_rule_range() -> NativeRange {
    NativeRange::Signed
}

impl RoleRule {
    pub fn validate(&self) -> Result<(), CoreError> {
        if !(0.0..=1.0).contains(&self.likelihood) {
            return Err(CoreError::Invalid {
                what: "role rule",
                reason: format!("likelihood {} outside [0, 1]", self.likelihood),
            });
        }
        crate::model::normalize_rating(self.expected_value, self.range).map(|_| ())
    }
}

/// Role assignments plus the rules that apply to them.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RoleBook {
    #[serde(default)]
    pub roles: IndexMap<AgentId, Vec<String>>,
    #[serde(default)]
    pub rules: Vec<RoleRule>,
}

impl RoleBook {
    /// Rules applying to an interaction between `a` and `b` on `term`.
    pub fn matching(&self, a: &AgentId, b: &AgentId, term: &Term) -> Vec<&RoleRule> {
        let (Some(ra), Some(rb)) = (self.roles.get(a), self.roles.get(b)) else {
            return Vec::new();
        };
        self.rules
            .iter()
            .filter(|r| r.term == *term && ra.contains(&r.role_a) && rb.contains(&r.role_b))
            .collect()
    }
}

/// A past witness opinion paired with the outcome of the interaction it
/// informed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationRecord {
    pub assessor: AgentId,
    pub witness: AgentId,
    pub target: AgentId,
    pub term: Term,
    pub interaction_id: String,
    /// Expected value of the witness opinion, in `[0, 1]`.
    pub opinion_value: f64,
    /// Rating the assessor gave after the interaction, in `[0, 1]`.
    pub outcome_rating: f64,
}

/// 1-based index of the bin holding `value` among `bins` equal bins of
/// `[0, 1]`. Bins are half-open except the last, which is closed at 1.
pub fn opinion_bin(value: f64, bins: usize) -> Result<usize, StoreError> {
    if bins == 0 {
        return Err(StoreError::NoBins);
    }
    let v = value.clamp(0.0, 1.0);
    Ok(((v * bins as f64).floor() as usize + 1).min(bins))
}

/// `[lo, hi]` bounds of a 1-based bin.
pub fn bin_bounds(bin: usize, bins: usize) -> Result<(f64, f64), StoreError> {
    if bins == 0 {
        return Err(StoreError::NoBins);
    }
    if bin == 0 || bin > bins {
        return Err(StoreError::BadBin { bin, bins });
    }
    let width = 1.0 / bins as f64;
    Ok(((bin - 1) as f64 * width, (bin as f64 * width).min(1.0)))
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ObservationStore {
    records: Vec<ObservationRecord>,
}

impl ObservationStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, record: ObservationRecord) {
        self.records.push(record);
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &ObservationRecord> {
        self.records.iter()
    }

    /// Past opinions from `witness` on `term` that fell in `opinion_bin`.
    pub fn query(
        &self,
        assessor: &AgentId,
        witness: &AgentId,
        term: &Term,
        opinion_bin: usize,
        bins: usize,
    ) -> Result<Vec<&ObservationRecord>, StoreError> {
        bin_bounds(opinion_bin, bins)?;
        let mut out = Vec::new();
        for r in &self.records {
            if r.assessor == *assessor
                && r.witness == *witness
                && r.term == *term
                && self::opinion_bin(r.opinion_value, bins)? == opinion_bin
            {
                out.push(r);
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn id(s: &str) -> AgentId {
        AgentId::new(s).unwrap()
    }

    fn rating(src: &str, dst: &str, term: &str, k: ReputationType, v: f64, ts: u64) -> Rating {
        Rating {
            source: id(src),
            target: id(dst),
            term: Term::new(term).unwrap(),
            rep_type: k,
            value: v,
            raw_value: v,
            timestamp: ts,
            interaction_id: Some(format!("{src}-{ts}")),
        }
    }

    use ReputationType::*;

    #[test]
    fn cap_evicts_oldest_per_source() {
        let mut s = RatingStore::with_cap(2);
        s.insert(rating("a", "b", "q", Interaction, 0.1, 5));
        s.insert(rating("a", "b", "q", Interaction, 0.2, 1));
        s.insert(rating("a", "b", "q", Interaction, 0.3, 7));
        let ts: Vec<u64> = s.iter().map(|r| r.timestamp).collect();
        assert_eq!(ts, vec![5, 7]);
    }

    #[test]
    fn cap_ties_evict_earliest_insert() {
        let mut s = RatingStore::with_cap(1);
        s.insert(rating("a", "b", "q", Interaction, 0.1, 3));
        s.insert(rating("a", "b", "q", Interaction, 0.2, 3));
        assert_eq!(s.iter().map(|r| r.value).collect::<Vec<_>>(), vec![0.2]);
    }

    #[test]
    fn uncapped_keeps_everything() {
        let mut s = RatingStore::new();
        for i in 0..50 {
            s.insert(rating("a", "b", "q", Interaction, 0.5, i));
        }
        assert_eq!(s.len(), 50);
    }

    #[test]
    fn cap_is_per_source() {
        let mut s = RatingStore::with_cap(2);
        for src in ["a", "c"] {
            for ts in 0..2 {
                s.insert(rating(src, "b", "q", Interaction, 0.5, ts));
            }
        }
        assert_eq!(s.len(), 4);
    }

    #[test]
    fn owned_store_caps_only_owner() {
        let mut s = RatingStore::with_cap(1).owned_by(id("a"));
        for ts in 0..3 {
            s.insert(rating("a", "b", "q", Interaction, 0.5, ts));
            s.insert(rating("w", "b", "q", Witness, 0.5, ts));
        }
        assert_eq!(s.query(&RatingPattern::any().source(&id("a"))).len(), 1);
        assert_eq!(s.query(&RatingPattern::any().source(&id("w"))).len(), 3);
    }

    #[test]
    fn pattern_queries() {
        let mut s = RatingStore::new();
        s.insert(rating("a", "b", "q", Interaction, 0.1, 2));
        s.insert(rating("a", "b", "t", Interaction, 0.2, 1));
        s.insert(rating("a", "c", "q", Interaction, 0.3, 0));
        s.insert(rating("w", "b", "q", Witness, 0.4, 0));

        let own = s.query(
            &RatingPattern::any()
                .source(&id("a"))
                .target(&id("b"))
                .term(&Term::new("q").unwrap()),
        );
        assert_eq!(own.len(), 1);
        assert_eq!(own[0].value, 0.1);

        let about_b = s.query(&RatingPattern::any().target(&id("b")).term(&Term::new("q").unwrap()));
        assert_eq!(about_b.iter().map(|r| r.value).collect::<Vec<_>>(), vec![0.4, 0.1]);

        let all = s.query(&RatingPattern::any());
        assert_eq!(all.len(), 4);
        assert!(all.windows(2).all(|w| w[0].timestamp <= w[1].timestamp));

        assert_eq!(s.query(&RatingPattern::any().interaction("a-1")).len(), 1);
    }

    #[test]
    fn bins() {
        assert_eq!(opinion_bin(0.65, 5).unwrap(), 4);
        assert_eq!(opinion_bin(1.0, 5).unwrap(), 5);
        assert_eq!(opinion_bin(0.0, 5).unwrap(), 1);
        assert_eq!(opinion_bin(0.6, 5).unwrap(), 4);
        let (lo, hi) = bin_bounds(4, 5).unwrap();
        assert!((lo - 0.6).abs() < 1e-12 && (hi - 0.8).abs() < 1e-12);
        assert!(matches!(bin_bounds(0, 5), Err(StoreError::BadBin { .. })));
        assert!(matches!(bin_bounds(6, 5), Err(StoreError::BadBin { .. })));
    }

    #[test]
    fn observation_query_by_bin() {
        let mut obs = ObservationStore::new();
        let empty = obs.query(&id("a"), &id("w"), &Term::new("q").unwrap(), 4, 5).unwrap();
        assert!(empty.is_empty());
        for (i, o) in [0.61, 0.79, 0.8, 1.0, 0.3].into_iter().enumerate() {
            obs.insert(ObservationRecord {
                assessor: id("a"),
                witness: id("w"),
                target: id("b"),
                term: Term::new("q").unwrap(),
                interaction_id: i.to_string(),
                opinion_value: o,
                outcome_rating: 1.0,
            });
        }
        let q = Term::new("q").unwrap();
        assert_eq!(obs.query(&id("a"), &id("w"), &q, 4, 5).unwrap().len(), 2);
        assert_eq!(obs.query(&id("a"), &id("w"), &q, 5, 5).unwrap().len(), 2);
        assert_eq!(obs.query(&id("a"), &id("x"), &q, 5, 5).unwrap().len(), 0);
        assert!(obs.query(&id("a"), &id("w"), &q, 7, 5).is_err());
    }

    #[test]
    fn tsv_round_trip() {
        let mut s = RatingStore::new();
        s.insert(rating("a", "b", "on time", Interaction, 0.25, 2));
        s.insert(rating("w", "b", "q", Certified, 1.0, 0));
        let mut buf = Vec::new();
        s.write_tsv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("source\ttarget\tterm\trep_type\tvalue\traw_value\ttimestamp\tinteraction_id\n"));
        let back = RatingStore::read_tsv(buf.as_slice()).unwrap();
        assert_eq!(
            back.iter().cloned().collect::<Vec<_>>(),
            s.query(&RatingPattern::any()).into_iter().cloned().collect::<Vec<_>>()
        );
    }

    #[test]
    fn tsv_rejects_garbage() {
        let text = "source\ttarget\tterm\trep_type\tvalue\traw_value\ttimestamp\tinteraction_id\n\
                    a\tb\tq\tZ\t0.5\t0.5\t1\t\n";
        assert!(RatingStore::read_tsv(text.as_bytes()).is_err());
        let text = "nope\n";
        assert!(RatingStore::read_tsv(text.as_bytes()).is_err());
    }

    #[test]
    fn role_book_matching() {
        let mut book = RoleBook::default();
        book.roles.insert(id("a"), vec!["buyer".into()]);
        book.roles.insert(id("b"), vec!["courier".into(), "member".into()]);
        book.rules.push(RoleRule {
            role_a: "buyer".into(),
            role_b: "courier".into(),
            term: Term::new("q").unwrap(),
            likelihood: 0.8,
            expected_value: 0.5,
            range: NativeRange::Signed,
        });
        assert_eq!(book.matching(&id("a"), &id("b"), &Term::new("q").unwrap()).len(), 1);
        assert!(book.matching(&id("b"), &id("a"), &Term::new("q").unwrap()).is_empty());
        assert!(book.matching(&id("a"), &id("b"), &Term::new("t").unwrap()).is_empty());
    }
}
