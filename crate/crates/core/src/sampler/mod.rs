//! Keyword-stratified sampling: emergency enrichment scores, bucket
//! assignment, the capped working pool and the seeded silver/gold/few-shot
//! split.

mod keywords;

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::ops::Range;

use serde::{Deserialize, Serialize};

use crate::filter::InquiryRecord;
use crate::predictions::RecordId;
use crate::rng;

pub use keywords::{KeywordError, KeywordLists, SECTION_NAMES};

pub const STRONG_WEIGHT: i32 = 2;
pub const MODERATE_WEIGHT: i32 = 1;
pub const DOCTOR_WEIGHT: i32 = 1;
pub const PAST_TENSE_WEIGHT: i32 = -1;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchedPhrases {
    pub strong: Vec<String>,
    pub moderate: Vec<String>,
    pub past_tense: Vec<String>,
    pub doctor_escalation: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnrichmentScore {
    pub value: i32,
    pub matched: MatchedPhrases,
}

fn occurrences<'a>(haystack: &'a str, needle: &'a str) -> impl Iterator<Item = Range<usize>> + 'a {
    haystack
        .match_indices(needle)
        .map(move |(start, m)| start..start + m.len())
}

/// Phrases occurring somewhere outside every span in `shadow`.
fn matches_outside(text: &str, phrases: &[String], shadow: &[Range<usize>]) -> Vec<String> {
    phrases
        .iter()
        .filter(|p| {
            occurrences(text, p)
                .any(|occ| !shadow.iter().any(|s| s.start <= occ.start && occ.end <= s.end))
        })
        .cloned()
        .collect()
}

/// Presence-based enrichment score.
///
/// Strong phrases add 2, moderate phrases add 1, physician escalation phrases
/// add 1 and past-tense indicators subtract 1; each category counts at most
/// once. Moderate and past-tense occurrences that sit entirely inside a
/// strong-phrase occurrence (e.g. "chest pain" within "crushing chest pain")
/// do not count. Matching is case-insensitive raw substring search.
pub fn emergency_score(record: &InquiryRecord, kw: &KeywordLists) -> EnrichmentScore {
    let patient = record.patient_text.to_lowercase();
    let physician = record.physician_text.to_lowercase();

    let strong_spans: Vec<Range<usize>> = kw
        .strong_emergency
        .iter()
        .flat_map(|p| occurrences(&patient, p))
        .collect();
    let matched = MatchedPhrases {
        strong: matches_outside(&patient, &kw.strong_emergency, &[]),
        moderate: matches_outside(&patient, &kw.moderate_emergency, &strong_spans),
        past_tense: matches_outside(&patient, &kw.past_tense, &strong_spans),
        doctor_escalation: matches_outside(&physician, &kw.doctor_escalation, &[]),
    };

    let mut value = 0;
    if !matched.strong.is_empty() {
        value += STRONG_WEIGHT;
    }
    if !matched.moderate.is_empty() {
        value += MODERATE_WEIGHT;
    }
    if !matched.doctor_escalation.is_empty() {
        value += DOCTOR_WEIGHT;
    }
    if !matched.past_tense.is_empty() {
        value += PAST_TENSE_WEIGHT;
    }
    EnrichmentScore { value, matched }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Bucket {
    Emergency,
    Selfcare,
    Urgent,
    Schedule,
    Unassigned,
}

impl Bucket {
    /// Buckets that feed the pool, in fill order.
    pub const POOLED: [Bucket; 4] = [Bucket::Emergency, Bucket::Selfcare, Bucket::Urgent, Bucket::Schedule];

    pub const fn as_str(self) -> &'static str {
        match self {
            Bucket::Emergency => "emergency",
            Bucket::Selfcare => "selfcare",
            Bucket::Urgent => "urgent",
            Bucket::Schedule => "schedule",
            Bucket::Unassigned => "unassigned",
        }
    }
}

impl fmt::Display for Bucket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BucketAssignment {
    pub id: RecordId,
    pub bucket: Bucket,
    pub score: i32,
    /// Emergency candidate admitted on a score of exactly 1.
    pub low_priority_emergency: bool,
}

impl BucketAssignment {
    /// Sort key: score descending, low-priority emergencies last, id ascending.
    pub fn priority_key(&self) -> (core::cmp::Reverse<i32>, bool, RecordId) {
        (core::cmp::Reverse(self.score), self.low_priority_emergency, self.id)
    }
}

fn contains_any(text: &str, phrases: &[String]) -> bool {
    phrases.iter().any(|p| text.contains(p.as_str()))
}

/// Ordered keyword rules; emergency signals take precedence.
pub fn assign_bucket(record: &InquiryRecord, score: &EnrichmentScore, kw: &KeywordLists) -> BucketAssignment {
    let text = record.patient_text.to_lowercase();
    let (bucket, low_priority) = if score.value >= 2 {
        (Bucket::Emergency, false)
    } else if score.value == 1 {
        (Bucket::Emergency, true)
    } else if contains_any(&text, &kw.selfcare) && !contains_any(&text, &kw.selfcare_excluders) {
        (Bucket::Selfcare, false)
    } else if contains_any(&text, &kw.urgent) {
        (Bucket::Urgent, false)
    } else if contains_any(&text, &kw.schedule) {
        (Bucket::Schedule, false)
    } else {
        (Bucket::Unassigned, false)
    };
    BucketAssignment {
        id: record.id,
        bucket,
        score: score.value,
        low_priority_emergency: low_priority,
    }
}

/// Scores and assigns every record, preserving input order.
pub fn assign_all(records: &[InquiryRecord], kw: &KeywordLists) -> Vec<BucketAssignment> {
    records
        .iter()
        .map(|r| assign_bucket(r, &emergency_score(r, kw), kw))
        .collect()
}

/// Per-bucket counts for the four pooled buckets.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BucketCounts {
    pub emergency: usize,
    pub selfcare: usize,
    pub urgent: usize,
    pub schedule: usize,
}

impl BucketCounts {
    pub fn get(&self, bucket: Bucket) -> usize {
        match bucket {
            Bucket::Emergency => self.emergency,
            Bucket::Selfcare => self.selfcare,
            Bucket::Urgent => self.urgent,
            Bucket::Schedule => self.schedule,
            Bucket::Unassigned => 0,
        }
    }

    fn slot(&mut self, bucket: Bucket) -> &mut usize {
        match bucket {
            Bucket::Emergency => &mut self.emergency,
            Bucket::Selfcare => &mut self.selfcare,
            Bucket::Urgent => &mut self.urgent,
            Bucket::Schedule => &mut self.schedule,
            Bucket::Unassigned => panic!("unassigned records never enter the pool"),
        }
    }

    pub fn total(&self) -> usize {
        self.emergency + self.selfcare + self.urgent + self.schedule
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSizes {
    pub silver: usize,
    pub gold: usize,
    pub fewshot: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplingPlan {
    pub caps: BucketCounts,
    pub pool_size: usize,
    pub split_sizes: SplitSizes,
    pub seed: u64,
}

impl Default for SamplingPlan {
    fn default() -> Self {
        Self {
            caps: BucketCounts {
                emergency: 1200,
                selfcare: 800,
                urgent: 500,
                schedule: 500,
            },
            pool_size: 1040,
            split_sizes: SplitSizes {
                silver: 700,
                gold: 300,
                fewshot: 40,
            },
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BucketShortfall {
    pub bucket: Bucket,
    pub available: usize,
    pub quota: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SamplingError {
    #[error("pool size {pool_size} does not equal split sizes total {splits_total}")]
    PlanSizes { pool_size: usize, splits_total: usize },
    #[error("bucket caps must be positive")]
    ZeroCap,
    #[error("no assignment for record {0}")]
    MissingAssignment(RecordId),
    #[error("candidate shortfall: need {needed}, have {have} ({})", fmt_shortfall(.buckets))]
    Shortfall {
        needed: usize,
        have: usize,
        buckets: Vec<BucketShortfall>,
    },
    #[error("pool has {actual} records, plan expects {expected}")]
    PoolSize { expected: usize, actual: usize },
    #[error("duplicate record id {0} in pool")]
    DuplicateId(RecordId),
}

fn fmt_shortfall(buckets: &[BucketShortfall]) -> String {
    let parts: Vec<String> = buckets
        .iter()
        .map(|b| alloc::format!("{}: {} available / quota {}", b.bucket, b.available, b.quota))
        .collect();
    parts.join(", ")
}

impl SamplingPlan {
    pub fn validate(&self) -> Result<(), SamplingError> {
        let s = self.split_sizes;
        let splits_total = s.silver + s.gold + s.fewshot;
        if splits_total != self.pool_size {
            return Err(SamplingError::PlanSizes {
                pool_size: self.pool_size,
                splits_total,
            });
        }
        if Bucket::POOLED.iter().any(|b| self.caps.get(*b) == 0) {
            return Err(SamplingError::ZeroCap);
        }
        Ok(())
    }

    /// `round(cap * pool / sum(caps))` per bucket, remainder to emergency.
    pub fn quotas(&self) -> BucketCounts {
        let total_caps = self.caps.total() as u128;
        let pool = self.pool_size as u128;
        let round = |cap: usize| ((2 * cap as u128 * pool + total_caps) / (2 * total_caps)) as usize;
        let mut q = BucketCounts {
            emergency: round(self.caps.emergency),
            selfcare: round(self.caps.selfcare),
            urgent: round(self.caps.urgent),
            schedule: round(self.caps.schedule),
        };
        let assigned = q.total();
        if assigned <= self.pool_size {
            q.emergency += self.pool_size - assigned;
        } else {
            q.emergency = q.emergency.saturating_sub(assigned - self.pool_size);
        }
        q
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolMember {
    pub id: RecordId,
    pub bucket: Bucket,
    pub score: i32,
    pub low_priority_emergency: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkingPool {
    /// Pool records in bucket order, then priority order.
    pub records: Vec<InquiryRecord>,
    pub members: Vec<PoolMember>,
    pub quotas: BucketCounts,
    /// Candidates per bucket after applying caps.
    pub available: BucketCounts,
    pub taken: BucketCounts,
}

impl WorkingPool {
    pub fn ids(&self) -> Vec<RecordId> {
        self.members.iter().map(|m| m.id).collect()
    }
}

/// Selects the working pool from bucketed candidates.
///
/// Each bucket is sorted by priority and truncated to its cap. Buckets are
/// then filled in order emergency, selfcare, urgent, schedule up to their
/// quotas, with any unfilled quota carried to the next bucket; quota still
/// unfilled after the schedule bucket is drawn from spare capped candidates
/// of earlier buckets, again in bucket order.
pub fn build_working_pool(
    records: &[InquiryRecord],
    assignments: &[BucketAssignment],
    plan: &SamplingPlan,
) -> Result<WorkingPool, SamplingError> {
    plan.validate()?;
    let by_id: BTreeMap<RecordId, &BucketAssignment> = assignments.iter().map(|a| (a.id, a)).collect();

    let mut candidates: BTreeMap<Bucket, Vec<(&BucketAssignment, &InquiryRecord)>> = BTreeMap::new();
    for record in records {
        let a = by_id
            .get(&record.id)
            .ok_or(SamplingError::MissingAssignment(record.id))?;
        if a.bucket != Bucket::Unassigned {
            candidates.entry(a.bucket).or_default().push((a, record));
        }
    }

    let mut available = BucketCounts::default();
    for bucket in Bucket::POOLED {
        let list = candidates.entry(bucket).or_default();
        list.sort_by_key(|(a, _)| a.priority_key());
        list.truncate(plan.caps.get(bucket));
        *available.slot(bucket) = list.len();
    }

    let quotas = plan.quotas();
    if available.total() < plan.pool_size {
        return Err(SamplingError::Shortfall {
            needed: plan.pool_size,
            have: available.total(),
            buckets: Bucket::POOLED
                .iter()
                .map(|&b| BucketShortfall {
                    bucket: b,
                    available: available.get(b),
                    quota: quotas.get(b),
                })
                .collect(),
        });
    }

    let mut taken = BucketCounts::default();
    let mut carry = 0usize;
    for bucket in Bucket::POOLED {
        let want = quotas.get(bucket) + carry;
        let got = want.min(available.get(bucket));
        *taken.slot(bucket) = got;
        carry = want - got;
    }
    for bucket in Bucket::POOLED {
        if carry == 0 {
            break;
        }
        let spare = available.get(bucket) - taken.get(bucket);
        let extra = spare.min(carry);
        *taken.slot(bucket) += extra;
        carry -= extra;
    }
    debug_assert_eq!(carry, 0);

    let mut pool_records = Vec::with_capacity(plan.pool_size);
    let mut members = Vec::with_capacity(plan.pool_size);
    for bucket in Bucket::POOLED {
        for (a, record) in candidates[&bucket].iter().take(taken.get(bucket)) {
            pool_records.push((*record).clone());
            members.push(PoolMember {
                id: a.id,
                bucket,
                score: a.score,
                low_priority_emergency: a.low_priority_emergency,
            });
        }
    }

    Ok(WorkingPool {
        records: pool_records,
        members,
        quotas,
        available,
        taken,
    })
}

/// Three disjoint id sets, each sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Splits {
    pub silver: Vec<RecordId>,
    pub gold: Vec<RecordId>,
    pub fewshot: Vec<RecordId>,
}

/// Seeded Fisher–Yates shuffle of the pool ids, then consecutive slices for
/// silver, gold and few-shot.
pub fn split_pool(pool_ids: &[RecordId], plan: &SamplingPlan) -> Result<Splits, SamplingError> {
    plan.validate()?;
    if pool_ids.len() != plan.pool_size {
        return Err(SamplingError::PoolSize {
            expected: plan.pool_size,
            actual: pool_ids.len(),
        });
    }
    let mut seen = BTreeSet::new();
    for id in pool_ids {
        if !seen.insert(*id) {
            return Err(SamplingError::DuplicateId(*id));
        }
    }

    let mut ids = pool_ids.to_vec();
    rng::shuffle(&mut ids, &mut rng::seeded(plan.seed));

    let s = plan.split_sizes;
    let take = |range: Range<usize>| {
        let mut part = ids[range].to_vec();
        part.sort_unstable();
        part
    };
    Ok(Splits {
        silver: take(0..s.silver),
        gold: take(s.silver..s.silver + s.gold),
        fewshot: take(s.silver + s.gold..plan.pool_size),
    })
}

/// Human-readable summary of the sampling rules, recorded in manifests.
pub fn rule_summary() -> String {
    alloc::format!(
        "weights strong={STRONG_WEIGHT} moderate={MODERATE_WEIGHT} doctor={DOCTOR_WEIGHT} past_tense={PAST_TENSE_WEIGHT}; \
         quotas=round(cap*pool/sum(caps)) remainder->emergency; carry-forward then wrap; ties by id; generator {}",
        rng::GENERATOR_NAME
    )
    .to_string()
}
