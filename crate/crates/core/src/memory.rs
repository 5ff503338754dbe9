//! Per-agent memory: a recency-decayed short-term buffer (STM), a durable
//! long-term store of high-engagement items (LTM), and the activity memory
//! (AM) summarizing the agent's own recent actions.

use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::model::{Action, ActionKind, ContentId, ContentItem, Counters};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EngagementWeights {
    pub reshare: f64,
    pub like: f64,
    pub dislike: f64,
    pub comment: f64,
}

impl Default for EngagementWeights {
    fn default() -> Self {
        EngagementWeights { reshare: 2.0, like: 1.0, dislike: 1.0, comment: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MemoryConfig {
    /// STM capacity.
    pub stm_capacity: usize,
    /// Entries untouched for more than this many iterations decay.
    pub decay_horizon: u32,
    /// LTM promotion runs every this many iterations.
    pub ltm_period: u32,
    /// Fraction of STM entries (by engagement score) promoted to LTM.
    pub promotion_quantile: f64,
    /// Length of the activity-memory FIFO.
    pub am_window: usize,
    pub weights: EngagementWeights,
}

impl Default for MemoryConfig {
    fn default() -> Self {
        MemoryConfig {
            stm_capacity: 20,
            decay_horizon: 3,
            ltm_period: 5,
            promotion_quantile: 0.1,
            am_window: 10,
            weights: EngagementWeights::default(),
        }
    }
}

/// Maps a comment to a sentiment in [-1, 1].
pub trait SentimentAnalyzer: Send + Sync {
    fn sentiment(&self, text: &str) -> f64;
}

/// Scores every text as neutral.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeutralAnalyzer;

impl SentimentAnalyzer for NeutralAnalyzer {
    fn sentiment(&self, _text: &str) -> f64 {
        0.0
    }
}

/// Signed word-list analyzer: (positive hits - negative hits) / total hits.
#[derive(Debug, Clone)]
pub struct WordListAnalyzer {
    positive: Vec<String>,
    negative: Vec<String>,
}

impl Default for WordListAnalyzer {
    fn default() -> Self {
        let pos = ["good", "great", "love", "excellent", "agree", "thanks", "amazing", "helpful", "nice", "awesome"];
        let neg = ["bad", "terrible", "hate", "awful", "disagree", "wrong", "useless", "horrible", "fake", "worst"];
        WordListAnalyzer {
            positive: pos.iter().map(|s| s.to_string()).collect(),
            negative: neg.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl SentimentAnalyzer for WordListAnalyzer {
    fn sentiment(&self, text: &str) -> f64 {
        let (mut pos, mut neg) = (0usize, 0usize);
        for word in text.split(|c: char| !c.is_alphanumeric()).filter(|w| !w.is_empty()) {
            let w = word.to_lowercase();
            if self.positive.contains(&w) {
                pos += 1;
            } else if self.negative.contains(&w) {
                neg += 1;
            }
        }
        if pos + neg == 0 {
            0.0
        } else {
            (pos as f64 - neg as f64) / (pos + neg) as f64
        }
    }
}

fn weighted_score(counters: &Counters, sentiment_sum: f64, w: &EngagementWeights) -> f64 {
    w.reshare * counters.reshares as f64 + w.like * counters.likes as f64 - w.dislike * counters.dislikes as f64
        + w.comment * sentiment_sum
}

/// `w_r * reshares + w_l * likes - w_d * dislikes + w_c * sum(sentiment(comment))`.
pub fn engagement_score(
    entry: &StmEntry,
    comments: &[&str],
    analyzer: &dyn SentimentAnalyzer,
    weights: &EngagementWeights,
) -> f64 {
    let sentiment: f64 = comments.iter().map(|c| analyzer.sentiment(c)).sum();
    weighted_score(&entry.counters, sentiment, weights)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StmEntry {
    pub content_id: ContentId,
    pub counters: Counters,
    /// Sum of comment sentiments at the last observation.
    #[serde(default)]
    pub comment_sentiment: f64,
    pub last_touched: u32,
}

impl StmEntry {
    pub fn score(&self, weights: &EngagementWeights) -> f64 {
        weighted_score(&self.counters, self.comment_sentiment, weights)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LtmEntry {
    pub content_id: ContentId,
    pub engagement_score: f64,
    pub promoted_at: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AmEntry {
    pub iteration: u32,
    pub kind: ActionKind,
    #[serde(default)]
    pub target: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActivityMemory {
    window: usize,
    recent: VecDeque<AmEntry>,
    last_performed: BTreeMap<ActionKind, u32>,
}

impl ActivityMemory {
    pub fn new(window: usize) -> Self {
        ActivityMemory { window: window.max(1), recent: VecDeque::new(), last_performed: BTreeMap::new() }
    }

    pub fn recent(&self) -> impl Iterator<Item = &AmEntry> {
        self.recent.iter()
    }

    pub fn len(&self) -> usize {
        self.recent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.recent.is_empty()
    }

    pub fn last_performed(&self, kind: ActionKind) -> Option<u32> {
        self.last_performed.get(&kind).copied()
    }

    pub fn record(&mut self, action: &Action, now: u32) {
        let target = action
            .content_target()
            .map(|c| format!("#{c}"))
            .or_else(|| action.agent_target().map(|a| a.to_string()));
        self.recent.push_back(AmEntry { iteration: now, kind: action.kind(), target });
        while self.recent.len() > self.window {
            self.recent.pop_front();
        }
        self.last_performed.insert(action.kind(), now);
    }

    /// Deterministic text rendering of recent actions and per-kind gaps.
    pub fn summary(&self, now: u32) -> String {
        if self.recent.is_empty() && self.last_performed.is_empty() {
            return "No recent activity recorded.".to_string();
        }
        let mut s = String::from("Your recent actions (oldest first):\n");
        for e in &self.recent {
            s.push_str(&format!("- iteration {}: {}", e.iteration, phrase(e.kind)));
            if let Some(t) = &e.target {
                s.push_str(&format!(" ({t})"));
            }
            s.push('\n');
        }
        s.push_str("Time since each action type:\n");
        for kind in ActionKind::ALL {
            match self.last_performed.get(&kind) {
                Some(&t) => {
                    let gap = now.saturating_sub(t);
                    let unit = if gap == 1 { "iteration" } else { "iterations" };
                    s.push_str(&format!("- You last {} {} {} ago.\n", phrase(kind), gap, unit));
                }
                None => s.push_str(&format!("- You have never {}.\n", phrase(kind))),
            }
        }
        s
    }
}

fn phrase(kind: ActionKind) -> &'static str {
    match kind {
        ActionKind::Post => "posted",
        ActionKind::ReShare => "re-shared",
        ActionKind::Like => "liked",
        ActionKind::Dislike => "disliked",
        ActionKind::Comment => "commented",
        ActionKind::Follow => "followed",
        ActionKind::Inactive => "remained inactive",
    }
}

/// STM, LTM and AM of one agent. Always starts empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryUnit {
    pub stm: BTreeMap<ContentId, StmEntry>,
    pub ltm: BTreeMap<ContentId, LtmEntry>,
    pub am: ActivityMemory,
}

impl MemoryUnit {
    pub fn new(config: &MemoryConfig) -> Self {
        MemoryUnit { stm: BTreeMap::new(), ltm: BTreeMap::new(), am: ActivityMemory::new(config.am_window) }
    }

    /// Insert or refresh `item`; evict the lowest-scoring entry if the
    /// buffer grows past capacity (ties: least recently touched, then
    /// lowest id).
    pub fn stm_observe(&mut self, item: &ContentItem, now: u32, config: &MemoryConfig, analyzer: &dyn SentimentAnalyzer) {
        let comment_sentiment = item.comments.iter().map(|(_, c)| analyzer.sentiment(c)).sum();
        self.stm.insert(
            item.id,
            StmEntry { content_id: item.id, counters: item.counters, comment_sentiment, last_touched: now },
        );
        while self.stm.len() > config.stm_capacity {
            let w = &config.weights;
            let victim = self
                .stm
                .values()
                .min_by(|a, b| {
                    a.score(w)
                        .total_cmp(&b.score(w))
                        .then(a.last_touched.cmp(&b.last_touched))
                        .then(a.content_id.cmp(&b.content_id))
                })
                .map(|e| e.content_id)
                .expect("non-empty");
            self.stm.remove(&victim);
        }
    }

    pub fn stm_decay(&mut self, now: u32, horizon: u32) {
        self.stm.retain(|_, e| now.saturating_sub(e.last_touched) <= horizon);
    }

    /// Copy the top `quantile` of STM entries by score into LTM. At least
    /// one entry is promoted when STM is non-empty; every entry tied with
    /// the cut-off score is promoted too. Returns the promoted ids.
    pub fn ltm_evaluate(&mut self, now: u32, quantile: f64, weights: &EngagementWeights) -> Vec<ContentId> {
        if self.stm.is_empty() {
            return Vec::new();
        }
        let mut scores: Vec<f64> = self.stm.values().map(|e| e.score(weights)).collect();
        scores.sort_by(|a, b| b.total_cmp(a));
        let n = scores.len();
        let count = ((quantile * n as f64) - 1e-9).ceil().clamp(1.0, n as f64) as usize;
        let cutoff = scores[count - 1];
        let mut promoted = Vec::new();
        for e in self.stm.values() {
            let score = e.score(weights);
            if score >= cutoff {
                self.ltm
                    .entry(e.content_id)
                    .and_modify(|l| l.engagement_score = score)
                    .or_insert(LtmEntry { content_id: e.content_id, engagement_score: score, promoted_at: now });
                promoted.push(e.content_id);
            }
        }
        promoted
    }

    pub fn am_record(&mut self, action: &Action, now: u32) {
        self.am.record(action, now);
    }

    pub fn am_summary(&self, now: u32) -> String {
        self.am.summary(now)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AgentId, Topic};
    use proptest::prelude::*;

    fn item(id: u64, counters: Counters) -> ContentItem {
        ContentItem {
            id: ContentId(id),
            author: AgentId::from("x"),
            iteration: 0,
            text: String::new(),
            topic: Topic::Music,
            parent: None,
            root: ContentId(id),
            counters,
            comments: Vec::new(),
            last_activity: 0,
        }
    }

    fn likes(n: u64) -> Counters {
        Counters { likes: n, ..Counters::default() }
    }

    #[test]
    fn observe_inserts_and_refreshes() {
        let cfg = MemoryConfig::default();
        let mut m = MemoryUnit::new(&cfg);
        m.stm_observe(&item(1, Counters::default()), 3, &cfg, &NeutralAnalyzer);
        assert_eq!(m.stm.len(), 1);
        assert_eq!(m.stm[&ContentId(1)].last_touched, 3);
        m.stm_observe(&item(1, likes(2)), 5, &cfg, &NeutralAnalyzer);
        assert_eq!(m.stm.len(), 1);
        assert_eq!(m.stm[&ContentId(1)].last_touched, 5);
        assert_eq!(m.stm[&ContentId(1)].counters.likes, 2);
    }

    #[test]
    fn eviction_drops_minimum_score() {
        let cfg = MemoryConfig::default();
        let mut m = MemoryUnit::new(&cfg);
        // Distinct scores: item i has (i * 7) % 23 likes.
        let scores: Vec<u64> = (1..=21).map(|i| (i * 7) % 23).collect();
        for (i, s) in scores.iter().enumerate() {
            m.stm_observe(&item(i as u64 + 1, likes(*s)), 1, &cfg, &NeutralAnalyzer);
        }
        assert_eq!(m.stm.len(), 20);
        // Oracle: full sort of the scores.
        let mut sorted: Vec<(u64, u64)> = scores.iter().enumerate().map(|(i, s)| (*s, i as u64 + 1)).collect();
        sorted.sort();
        let evicted = ContentId(sorted[0].1);
        assert!(!m.stm.contains_key(&evicted));
    }

    #[test]
    fn decay_removes_stale_entries() {
        let cfg = MemoryConfig::default();
        let mut m = MemoryUnit::new(&cfg);
        for (id, t) in [(1, 1), (2, 4), (3, 5)] {
            m.stm_observe(&item(id, Counters::default()), t, &cfg, &NeutralAnalyzer);
        }
        m.stm_decay(8, 3);
        assert_eq!(m.stm.keys().copied().collect::<Vec<_>>(), vec![ContentId(3)]);

        let mut fresh = MemoryUnit::new(&cfg);
        fresh.stm_observe(&item(1, Counters::default()), 4, &cfg, &NeutralAnalyzer);
        fresh.stm_decay(4, 3);
        assert_eq!(fresh.stm.len(), 1);

        let mut empty = MemoryUnit::new(&cfg);
        empty.stm_decay(10, 3);
        assert!(empty.stm.is_empty());
    }

    #[test]
    fn score_formula() {
        let w = EngagementWeights::default();
        let e = StmEntry {
            content_id: ContentId(1),
            counters: Counters { reshares: 3, likes: 2, dislikes: 1, comments: 0 },
            comment_sentiment: 0.0,
            last_touched: 0,
        };
        assert_eq!(engagement_score(&e, &[], &NeutralAnalyzer, &w), 2.0 * 3.0 + 2.0 - 1.0);
        let zero = StmEntry { counters: Counters::default(), ..e.clone() };
        assert_eq!(engagement_score(&zero, &[], &NeutralAnalyzer, &w), 0.0);
        struct Negative;
        impl SentimentAnalyzer for Negative {
            fn sentiment(&self, _: &str) -> f64 {
                -1.0
            }
        }
        assert_eq!(engagement_score(&zero, &["boo"], &Negative, &w), -1.0);
    }

    #[test]
    fn word_list_analyzer_is_signed() {
        let a = WordListAnalyzer::default();
        assert_eq!(a.sentiment("This is great, I love it"), 1.0);
        assert_eq!(a.sentiment("terrible and wrong"), -1.0);
        assert_eq!(a.sentiment("good but bad"), 0.0);
        assert_eq!(a.sentiment("nothing here"), 0.0);
    }

    #[test]
    fn ltm_promotes_top_quantile() {
        let cfg = MemoryConfig::default();
        let mut m = MemoryUnit::new(&cfg);
        for i in 1..=10 {
            m.stm_observe(&item(i, likes(i * 3)), 1, &cfg, &NeutralAnalyzer);
        }
        let promoted = m.ltm_evaluate(5, 0.1, &cfg.weights);
        assert_eq!(promoted, vec![ContentId(10)]);
        assert_eq!(m.ltm[&ContentId(10)].promoted_at, 5);
        assert_eq!(m.stm.len(), 10, "originals stay in STM");

        let mut empty = MemoryUnit::new(&cfg);
        assert!(empty.ltm_evaluate(5, 0.1, &cfg.weights).is_empty());
    }

    #[test]
    fn ltm_tie_rule_matches_enumeration() {
        let cfg = MemoryConfig::default();
        let mut m = MemoryUnit::new(&cfg);
        let like_counts = [5u64, 9, 9, 1, 3, 9, 2, 0, 4, 7];
        for (i, l) in like_counts.iter().enumerate() {
            m.stm_observe(&item(i as u64 + 1, likes(*l)), 1, &cfg, &NeutralAnalyzer);
        }
        let promoted = m.ltm_evaluate(5, 0.1, &cfg.weights);
        // Enumeration: the quantile asks for one entry; the top score 9 is
        // shared by three entries, all of which qualify.
        let max = *like_counts.iter().max().unwrap();
        let expected: Vec<ContentId> = like_counts
            .iter()
            .enumerate()
            .filter(|(_, l)| **l == max)
            .map(|(i, _)| ContentId(i as u64 + 1))
            .collect();
        assert_eq!(promoted, expected);
    }

    #[test]
    fn activity_memory_window_and_gaps() {
        let cfg = MemoryConfig::default();
        let mut m = MemoryUnit::new(&cfg);
        assert_eq!(m.am_summary(1), "No recent activity recorded.");
        m.am_record(&Action::Post { text: "hi".into() }, 4);
        assert_eq!(m.am.last_performed(ActionKind::Post), Some(4));
        for t in 5..15 {
            m.am_record(&Action::Inactive, t);
        }
        assert_eq!(m.am.len(), 10);
        assert_eq!(m.am.recent().next().unwrap().iteration, 5);
        assert_eq!(m.am.last_performed(ActionKind::Inactive), Some(14));
        let s = m.am_summary(16);
        assert!(s.contains("remained inactive 2 iterations ago"), "{s}");
        assert!(s.contains("never re-shared"));
        assert!(s.contains("posted 12 iterations ago"));
    }

    #[test]
    fn summary_golden() {
        let cfg = MemoryConfig::default();
        let mut m = MemoryUnit::new(&cfg);
        m.am_record(&Action::Post { text: "hi".into() }, 2);
        m.am_record(&Action::Like { target: ContentId(3) }, 6);
        let expected = "Your recent actions (oldest first):\n\
- iteration 2: posted\n\
- iteration 6: liked (#3)\n\
Time since each action type:\n\
- You last posted 5 iterations ago.\n\
- You have never re-shared.\n\
- You last liked 1 iteration ago.\n\
- You have never disliked.\n\
- You have never commented.\n\
- You have never followed.\n\
- You have never remained inactive.\n";
        assert_eq!(m.am_summary(7), expected);
        assert_eq!(m.am_summary(7), m.am_summary(7));
    }

    proptest! {
        #[test]
        fn decay_bounds_age(touches in proptest::collection::vec(0u32..50, 0..40), now in 50u32..60, horizon in 0u32..10) {
            let cfg = MemoryConfig { stm_capacity: 100, ..MemoryConfig::default() };
            let mut m = MemoryUnit::new(&cfg);
            for (i, t) in touches.iter().enumerate() {
                m.stm_observe(&item(i as u64, Counters::default()), *t, &cfg, &NeutralAnalyzer);
            }
            m.stm_decay(now, horizon);
            for e in m.stm.values() {
                prop_assert!(now - e.last_touched <= horizon);
            }
        }

        #[test]
        fn capacities_hold(n in 0usize..60, cap in 1usize..25, window in 1usize..12) {
            let cfg = MemoryConfig { stm_capacity: cap, am_window: window, ..MemoryConfig::default() };
            let mut m = MemoryUnit::new(&cfg);
            for i in 0..n {
                m.stm_observe(&item(i as u64, likes(i as u64 % 7)), i as u32, &cfg, &NeutralAnalyzer);
                m.am_record(&Action::Inactive, i as u32);
                prop_assert!(m.stm.len() <= cap);
                prop_assert!(m.am.len() <= window);
            }
        }

        #[test]
        fn score_monotonicity(r in 0u64..50, l in 0u64..50, d in 0u64..50, dr in 0u64..5, dl in 0u64..5, dd in 0u64..5) {
            let w = EngagementWeights::default();
            let base = StmEntry {
                content_id: ContentId(0),
                counters: Counters { reshares: r, likes: l, dislikes: d, comments: 0 },
                comment_sentiment: 0.0,
                last_touched: 0,
            };
            let s0 = base.score(&w);
            let mut up = base.clone();
            up.counters.reshares += dr;
            up.counters.likes += dl;
            prop_assert!(up.score(&w) >= s0);
            let mut down = base.clone();
            down.counters.dislikes += dd;
            prop_assert!(down.score(&w) <= s0);
        }

        #[test]
        fn promotion_separates_scores(likes_list in proptest::collection::vec(0u64..20, 1..30), q in 0.01f64..1.0) {
            let cfg = MemoryConfig { stm_capacity: 100, ..MemoryConfig::default() };
            let mut m = MemoryUnit::new(&cfg);
            for (i, l) in likes_list.iter().enumerate() {
                m.stm_observe(&item(i as u64, likes(*l)), 1, &cfg, &NeutralAnalyzer);
            }
            let promoted = m.ltm_evaluate(5, q, &cfg.weights);
            prop_assert!(!promoted.is_empty());
            let min_promoted = promoted.iter().map(|id| m.stm[id].score(&cfg.weights)).fold(f64::INFINITY, f64::min);
            for e in m.stm.values() {
                if !promoted.contains(&e.content_id) {
                    prop_assert!(e.score(&cfg.weights) < min_promoted);
                }
            }
        }
    }
}
