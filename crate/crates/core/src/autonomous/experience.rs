//! Ring buffer of self-experience.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::gridworld::Action;
use crate::error::{Error, Result};

/// Free-form affect label attached to an experience (e.g. `"pain"`).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EmotionTag(pub String);

impl EmotionTag {
    pub fn new(s: impl Into<String>) -> Self {
        Self(s.into())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperienceRecord {
    pub state: usize,
    pub action: Action,
    pub reward: f64,
    pub next_state: usize,
    #[serde(default)]
    pub emotion: Option<EmotionTag>,
    pub timestamp: u64,
}

impl ExperienceRecord {
    pub fn new(state: usize, action: Action, reward: f64, next_state: usize, timestamp: u64) -> Self {
        Self {
            state,
            action,
            reward,
            next_state,
            emotion: None,
            timestamp,
        }
    }

    pub fn with_emotion(mut self, tag: EmotionTag) -> Self {
        self.emotion = Some(tag);
        self
    }
}

/// FIFO ring buffer; the oldest record is evicted when full.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperienceBuffer {
    capacity: usize,
    records: VecDeque<ExperienceRecord>,
}

impl ExperienceBuffer {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::param("capacity", "must be >= 1"));
        }
        Ok(Self {
            capacity,
            records: VecDeque::with_capacity(capacity),
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn record(&mut self, rec: ExperienceRecord) -> Result<()> {
        if !rec.reward.is_finite() {
            return Err(Error::NonFinite("experience reward".into()));
        }
        if self.records.len() == self.capacity {
            self.records.pop_front();
        }
        self.records.push_back(rec);
        Ok(())
    }

    /// Matching records, newest first.
    pub fn query(&self, pred: impl Fn(&ExperienceRecord) -> bool) -> Vec<&ExperienceRecord> {
        self.records.iter().rev().filter(|r| pred(r)).collect()
    }

    /// Oldest first.
    pub fn iter(&self) -> impl Iterator<Item = &ExperienceRecord> {
        self.records.iter()
    }
}

pub fn record_experience(buffer: &mut ExperienceBuffer, rec: ExperienceRecord) -> Result<()> {
    buffer.record(rec)
}

pub fn query_experience(buffer: &ExperienceBuffer, pred: impl Fn(&ExperienceRecord) -> bool) -> Vec<&ExperienceRecord> {
    buffer.query(pred)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rec(t: u64) -> ExperienceRecord {
        ExperienceRecord::new(t as usize % 5, Action::Right, 0.0, 0, t)
    }

    #[test]
    fn empty_query_is_empty() {
        let b = ExperienceBuffer::new(3).unwrap();
        assert!(b.query(|_| true).is_empty());
        assert!(ExperienceBuffer::new(0).is_err());
    }

    #[test]
    fn exact_state_query_finds_the_record() {
        let mut b = ExperienceBuffer::new(4).unwrap();
        b.record(rec(2)).unwrap();
        b.record(rec(3)).unwrap();
        let hits = b.query(|r| r.state == 2);
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].timestamp, 2);
    }

    #[test]
    fn oldest_are_evicted() {
        let mut b = ExperienceBuffer::new(10).unwrap();
        for t in 0..15 {
            b.record(rec(t)).unwrap();
        }
        assert_eq!(b.len(), 10);
        let ts: Vec<u64> = b.query(|_| true).iter().map(|r| r.timestamp).collect();
        assert_eq!(ts, (5..15).rev().collect::<Vec<_>>());
    }

    #[test]
    fn non_finite_reward_is_rejected() {
        let mut b = ExperienceBuffer::new(2).unwrap();
        let mut r = rec(0);
        r.reward = f64::NAN;
        assert!(b.record(r).is_err());
    }

    proptest! {
        #[test]
        fn never_exceeds_capacity(cap in 1usize..20, n in 0u64..60) {
            let mut b = ExperienceBuffer::new(cap).unwrap();
            for t in 0..n {
                b.record(rec(t)).unwrap();
                prop_assert!(b.len() <= cap);
            }
            let q1: Vec<_> = b.query(|r| r.state % 2 == 0).into_iter().cloned().collect();
            let q2: Vec<_> = b.query(|r| r.state % 2 == 0).into_iter().cloned().collect();
            prop_assert_eq!(q1, q2);
        }
    }
}
