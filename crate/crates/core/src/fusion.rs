//! Decision fusion over a buffer of confident per-frame classifications.
//!
//! Only observations with confidence >= P enter the buffer, which keeps the
//! N most recent. When it is full, position k (0 = oldest) weighs (k+1)/N,
//! each label scores the sum of its weights, and the best label is emitted.
//! Ties go to the label seen most recently. The buffer is then cleared and
//! the next F frames are ignored.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gesture::GestureObservation;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FusionConfig {
    /// Confidence threshold P.
    pub threshold: f64,
    /// Buffer capacity N.
    pub capacity: usize,
    /// Blank period F, in frames.
    pub blank_frames: u64,
}

impl Default for FusionConfig {
    fn default() -> Self {
        Self {
            threshold: 0.9,
            capacity: 20,
            blank_frames: 50,
        }
    }
}

impl FusionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.threshold > 0.0 && self.threshold <= 1.0) || self.capacity == 0 {
            return Err(Error::InvalidParameter("fusion needs 0 < P <= 1 and N >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PushOutcome {
    Accepted,
    BelowThreshold,
    Blanked,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FusionCounters {
    pub accepted: u64,
    pub below_threshold: u64,
    pub blanked: u64,
    pub decisions: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusionDecision {
    pub label: String,
    /// Frame of the newest buffered observation.
    pub frame_index: u64,
    /// Winning score in units of 1/N.
    pub score: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FusionBuffer {
    pub cfg: FusionConfig,
    entries: VecDeque<GestureObservation>,
    /// Frames up to and including this one are rejected.
    blank_until: Option<u64>,
    pub counters: FusionCounters,
}

/// Winner of a full buffer given oldest-first labels.
pub fn weighted_winner<S: AsRef<str>>(labels: &[S]) -> Option<(String, u64)> {
    // label -> (score, last position)
    let mut scores: Vec<(&str, u64, usize)> = Vec::new();
    for (k, l) in labels.iter().enumerate() {
        let l = l.as_ref();
        let w = k as u64 + 1;
        match scores.iter_mut().find(|s| s.0 == l) {
            Some(s) => {
                s.1 += w;
                s.2 = k;
            }
            None => scores.push((l, w, k)),
        }
    }
    scores
        .into_iter()
        .max_by(|a, b| a.1.cmp(&b.1).then(a.2.cmp(&b.2)))
        .map(|(l, s, _)| (l.to_string(), s))
}

impl FusionBuffer {
    pub fn new(cfg: FusionConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            entries: VecDeque::with_capacity(cfg.capacity),
            blank_until: None,
            counters: FusionCounters::default(),
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn labels(&self) -> Vec<&str> {
        self.entries.iter().map(|o| o.label.as_str()).collect()
    }

    /// Frames left in the blank period as seen from `frame`.
    pub fn cooldown_remaining(&self, frame: u64) -> u64 {
        self.blank_until.map_or(0, |b| b.saturating_sub(frame))
    }

    pub fn push(&mut self, obs: GestureObservation) -> PushOutcome {
        if self.blank_until.is_some_and(|b| obs.frame_index <= b) {
            self.counters.blanked += 1;
            return PushOutcome::Blanked;
        }
        if !(obs.confidence >= self.cfg.threshold) {
            self.counters.below_threshold += 1;
            return PushOutcome::BelowThreshold;
        }
        if self.entries.len() == self.cfg.capacity {
            self.entries.pop_front();
        }
        self.entries.push_back(obs);
        self.counters.accepted += 1;
        PushOutcome::Accepted
    }

    /// Emits a decision when the buffer is full.
    pub fn fuse(&mut self) -> Option<FusionDecision> {
        if self.entries.len() < self.cfg.capacity {
            return None;
        }
        let (label, score) = weighted_winner(&self.labels())?;
        let frame_index = self.entries.back()?.frame_index;
        self.entries.clear();
        self.blank_until = Some(frame_index + self.cfg.blank_frames);
        self.counters.decisions += 1;
        Some(FusionDecision {
            label,
            frame_index,
            score,
        })
    }

    pub fn observe(&mut self, obs: GestureObservation) -> (PushOutcome, Option<FusionDecision>) {
        let outcome = self.push(obs);
        let decision = if outcome == PushOutcome::Accepted { self.fuse() } else { None };
        (outcome, decision)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gesture::GestureKind;

    fn obs(label: &str, confidence: f64, frame: u64) -> GestureObservation {
        GestureObservation {
            label: label.into(),
            confidence,
            frame_index: frame,
            kind: GestureKind::Static,
        }
    }

    #[test]
    fn threshold_gate() {
        let mut b = FusionBuffer::new(FusionConfig::default()).unwrap();
        assert_eq!(b.push(obs("a", 0.89, 0)), PushOutcome::BelowThreshold);
        assert_eq!(b.push(obs("a", 0.95, 1)), PushOutcome::Accepted);
        assert_eq!(b.push(obs("a", 0.9, 2)), PushOutcome::Accepted);
        assert_eq!(b.len(), 2);
    }

    #[test]
    fn ring_keeps_most_recent() {
        let cfg = FusionConfig::default();
        let mut b = FusionBuffer::new(cfg).unwrap();
        for i in 0..25 {
            b.push(obs(&format!("g{i}"), 1.0, i));
        }
        assert_eq!(b.len(), 20);
        assert_eq!(b.labels()[0], "g5");
    }

    #[test]
    fn identical_labels_win() {
        let mut b = FusionBuffer::new(FusionConfig::default()).unwrap();
        let mut out = None;
        for i in 0..20 {
            out = b.observe(obs("fist", 0.99, i)).1;
        }
        assert_eq!(out.unwrap().label, "fist");
        assert!(b.is_empty());
    }

    #[test]
    fn recency_weighting_against_direct_sum() {
        // 12 A in the oldest slots, 8 B in the newest
        let labels: Vec<&str> = std::iter::repeat_n("A", 12).chain(std::iter::repeat_n("B", 8)).collect();
        let a: f64 = (1..=12).map(|k| k as f64 / 20.0).sum();
        let bsum: f64 = (13..=20).map(|k| k as f64 / 20.0).sum();
        let expect = if a > bsum { "A" } else { "B" };
        assert_eq!(weighted_winner(&labels).unwrap().0, expect);
        assert_eq!(expect, "B");
    }

    #[test]
    fn ties_go_to_most_recent() {
        // A at 1 and 4 (5), B at 2 and 3 (5)
        assert_eq!(weighted_winner(&["A", "B", "B", "A"]).unwrap().0, "A");
        assert_eq!(weighted_winner(&["B", "A", "A", "B"]).unwrap().0, "B");
    }

    #[test]
    fn blank_period_after_decision() {
        let mut b = FusionBuffer::new(FusionConfig::default()).unwrap();
        let mut t = None;
        for i in 0..20 {
            if let Some(d) = b.observe(obs("a", 1.0, i)).1 {
                t = Some(d.frame_index);
            }
        }
        let t = t.unwrap();
        assert_eq!(t, 19);
        for f in t + 1..=t + 50 {
            assert_eq!(b.push(obs("a", 1.0, f)), PushOutcome::Blanked);
        }
        assert_eq!(b.cooldown_remaining(t + 10), 40);
        assert_eq!(b.push(obs("a", 1.0, t + 51)), PushOutcome::Accepted);
    }
}
