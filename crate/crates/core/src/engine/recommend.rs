use std::cmp::Reverse;
use std::collections::BTreeSet;

use rand::seq::index::sample;
use rand::Rng;

use super::config::FeedStrategy;
use crate::model::{AgentProfile, ContentId, ContentItem};
use crate::store::ContentStore;

/// Build the feed for `agent` at iteration `now`.
///
/// The pool is every item not authored by the agent and not already
/// re-shared by it. Re-shares that followees made in the previous
/// iteration go first; the remaining slots are filled by topic match then
/// recency (preference) or uniformly at random.
pub fn recommend_feed<R: Rng + ?Sized>(
    agent: &AgentProfile,
    store: &ContentStore,
    already_reshared: &BTreeSet<ContentId>,
    strategy: FeedStrategy,
    k: usize,
    now: u32,
    rng: &mut R,
) -> Vec<ContentId> {
    let pool: Vec<&ContentItem> = store
        .iter()
        .filter(|c| c.author != agent.id && !already_reshared.contains(&c.id))
        .collect();

    let mut forced: Vec<&ContentItem> = pool
        .iter()
        .copied()
        .filter(|c| !c.is_original() && c.iteration + 1 == now && agent.following.contains(&c.author))
        .collect();
    forced.sort_by_key(|c| Reverse(c.id));
    forced.truncate(k);
    let mut feed: Vec<ContentId> = forced.iter().map(|c| c.id).collect();
    let rest: Vec<&ContentItem> = pool.into_iter().filter(|c| !feed.contains(&c.id)).collect();
    let slots = k - feed.len();
    if slots == 0 || rest.is_empty() {
        return feed;
    }

    match strategy {
        FeedStrategy::Preference => {
            // Random keys break ties among same-iteration items.
            let mut keyed: Vec<(bool, u32, u64, ContentId)> =
                rest.iter().map(|c| (c.topic == agent.topic, c.iteration, rng.random::<u64>(), c.id)).collect();
            keyed.sort_by(|a, b| b.0.cmp(&a.0).then(b.1.cmp(&a.1)).then(a.2.cmp(&b.2)).then(a.3.cmp(&b.3)));
            feed.extend(keyed.into_iter().take(slots).map(|k| k.3));
        }
        FeedStrategy::Random => {
            let n = slots.min(rest.len());
            feed.extend(sample(rng, rest.len(), n).into_iter().map(|i| rest[i].id));
        }
    }
    feed
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AgentId, Characterization, Topic};
    use crate::rng::seeded;
    use proptest::prelude::*;

    fn me(topic: Topic) -> AgentProfile {
        AgentProfile {
            id: AgentId::from("me"),
            identity_text: String::new(),
            characterization: Characterization::None,
            topic,
            following: BTreeSet::new(),
        }
    }

    fn rank_key(c: &ContentItem, topic: &Topic) -> (bool, u32) {
        (c.topic == *topic, c.iteration)
    }

    #[test]
    fn preference_puts_matches_first_then_recency() {
        let mut s = ContentStore::new();
        for i in 0..3 {
            s.add_original(AgentId::from("x"), i + 1, String::new(), Topic::Music);
        }
        for i in 0..5 {
            s.add_original(AgentId::from("y"), i + 1, String::new(), Topic::Religion);
        }
        let feed = recommend_feed(&me(Topic::Music), &s, &BTreeSet::new(), FeedStrategy::Preference, 5, 9, &mut seeded(1));
        let items: Vec<&ContentItem> = feed.iter().map(|id| s.get(*id).unwrap()).collect();
        assert!(items[..3].iter().all(|c| c.topic == Topic::Music));
        assert_eq!(items[3].iteration, 5);
        assert_eq!(items[4].iteration, 4);
    }

    #[test]
    fn excludes_own_and_reshared() {
        let mut s = ContentStore::new();
        let own = s.add_original(AgentId::from("me"), 1, String::new(), Topic::Music);
        let other = s.add_original(AgentId::from("x"), 1, String::new(), Topic::Music);
        let mine = s.add_reshare(AgentId::from("me"), 2, other).unwrap();
        let seen: BTreeSet<ContentId> = [other].into();
        for strat in [FeedStrategy::Preference, FeedStrategy::Random] {
            let feed = recommend_feed(&me(Topic::Music), &s, &seen, strat, 5, 3, &mut seeded(2));
            assert!(feed.is_empty(), "{feed:?} {own} {mine}");
        }
        let empty = ContentStore::new();
        assert!(recommend_feed(&me(Topic::Music), &empty, &BTreeSet::new(), FeedStrategy::Preference, 5, 1, &mut seeded(0)).is_empty());
    }

    #[test]
    fn followee_reshare_is_delivered() {
        let mut s = ContentStore::new();
        let o = s.add_original(AgentId::from("far"), 1, String::new(), Topic::Religion);
        for i in 0..20 {
            s.add_original(AgentId::from("z"), 2, format!("{i}"), Topic::Music);
        }
        let r = s.add_reshare(AgentId::from("friend"), 2, o).unwrap();
        let mut agent = me(Topic::Music);
        let without = recommend_feed(&agent, &s, &BTreeSet::new(), FeedStrategy::Preference, 5, 3, &mut seeded(3));
        assert!(!without.contains(&r));
        agent.following.insert(AgentId::from("friend"));
        let with = recommend_feed(&agent, &s, &BTreeSet::new(), FeedStrategy::Preference, 5, 3, &mut seeded(3));
        assert_eq!(with[0], r);
        assert_eq!(with.len(), 5);
    }

    proptest! {
        #[test]
        fn preference_matches_exhaustive_sort(
            items in proptest::collection::vec((0u32..6, 0usize..4, 0usize..3), 0..40),
            k in 1usize..10,
            seed in any::<u64>(),
        ) {
            let mut s = ContentStore::new();
            for (it, topic, author) in &items {
                s.add_original(AgentId(format!("a{author}")), *it, String::new(), Topic::SYNTHETIC[*topic].clone());
            }
            let agent = AgentProfile { id: AgentId::from("a0"), ..me(Topic::Music) };
            let feed = recommend_feed(&agent, &s, &BTreeSet::new(), FeedStrategy::Preference, k, 7, &mut seeded(seed));
            let mut oracle: Vec<(bool, u32)> = s.iter().filter(|c| c.author != agent.id).map(|c| rank_key(c, &agent.topic)).collect();
            oracle.sort_by(|a, b| b.cmp(a));
            oracle.truncate(k);
            let got: Vec<(bool, u32)> = feed.iter().map(|id| rank_key(s.get(*id).unwrap(), &agent.topic)).collect();
            prop_assert_eq!(got, oracle);
            let distinct: BTreeSet<_> = feed.iter().collect();
            prop_assert_eq!(distinct.len(), feed.len());
        }

        #[test]
        fn random_feed_is_a_subset_without_repeats(n in 0usize..30, k in 1usize..8, seed in any::<u64>()) {
            let mut s = ContentStore::new();
            for i in 0..n {
                s.add_original(AgentId(format!("a{}", i % 3)), 1, String::new(), Topic::Music);
            }
            let agent = AgentProfile { id: AgentId::from("a0"), ..me(Topic::Music) };
            let feed = recommend_feed(&agent, &s, &BTreeSet::new(), FeedStrategy::Random, k, 2, &mut seeded(seed));
            let eligible = s.iter().filter(|c| c.author != agent.id).count();
            prop_assert_eq!(feed.len(), k.min(eligible));
            let distinct: BTreeSet<_> = feed.iter().collect();
            prop_assert_eq!(distinct.len(), feed.len());
            prop_assert!(feed.iter().all(|id| s.get(*id).unwrap().author != agent.id));
        }
    }
}
