//! Append-only content store with parent/root bookkeeping.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::model::{AgentId, ContentId, ContentItem, Counters, Topic};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StoreError {
    #[error("content {0} does not exist")]
    Dangling(ContentId),
    #[error("duplicate content id {0}")]
    Duplicate(ContentId),
    #[error("parent chain starting at {0} contains a cycle")]
    Cycle(ContentId),
    #[error("content {id}: {message}")]
    Inconsistent { id: ContentId, message: String },
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ContentStore {
    items: BTreeMap<ContentId, ContentItem>,
    next_id: u64,
}

impl ContentStore {
    pub fn new() -> Self {
        ContentStore { items: BTreeMap::new(), next_id: 1 }
    }

    /// Rebuild a store from dumped items; referential integrity is checked.
    pub fn from_items(items: impl IntoIterator<Item = ContentItem>) -> Result<Self, StoreError> {
        let mut map = BTreeMap::new();
        for item in items {
            let id = item.id;
            if map.insert(id, item).is_some() {
                return Err(StoreError::Duplicate(id));
            }
        }
        let next_id = map.keys().next_back().map_or(1, |id| id.0 + 1);
        let store = ContentStore { items: map, next_id };
        store.validate()?;
        Ok(store)
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn get(&self, id: ContentId) -> Option<&ContentItem> {
        self.items.get(&id)
    }

    pub fn contains(&self, id: ContentId) -> bool {
        self.items.contains_key(&id)
    }

    /// Items in ascending id order (creation order for engine-built stores).
    pub fn iter(&self) -> impl DoubleEndedIterator<Item = &ContentItem> {
        self.items.values()
    }

    pub fn add_original(&mut self, author: AgentId, iteration: u32, text: String, topic: Topic) -> ContentId {
        let id = self.allocate();
        self.items.insert(
            id,
            ContentItem {
                id,
                author,
                iteration,
                text,
                topic,
                parent: None,
                root: id,
                counters: Counters::default(),
                comments: Vec::new(),
                last_activity: iteration,
            },
        );
        id
    }

    /// Create a re-share node of `parent` and bump the parent's re-share
    /// counter. The new node inherits the parent's root and topic.
    pub fn add_reshare(&mut self, author: AgentId, iteration: u32, parent: ContentId) -> Result<ContentId, StoreError> {
        let (root, topic, text) = {
            let p = self.items.get(&parent).ok_or(StoreError::Dangling(parent))?;
            (p.root, p.topic.clone(), p.text.clone())
        };
        let id = self.allocate();
        self.items.insert(
            id,
            ContentItem {
                id,
                author,
                iteration,
                text,
                topic,
                parent: Some(parent),
                root,
                counters: Counters::default(),
                comments: Vec::new(),
                last_activity: iteration,
            },
        );
        let p = self.items.get_mut(&parent).expect("checked above");
        p.counters.reshares += 1;
        p.last_activity = p.last_activity.max(iteration);
        Ok(id)
    }

    pub fn get_mut(&mut self, id: ContentId) -> Result<&mut ContentItem, StoreError> {
        self.items.get_mut(&id).ok_or(StoreError::Dangling(id))
    }

    fn allocate(&mut self) -> ContentId {
        let id = ContentId(self.next_id);
        self.next_id += 1;
        id
    }

    /// Direct re-share children of every item that has at least one.
    pub fn children(&self) -> BTreeMap<ContentId, Vec<ContentId>> {
        let mut out: BTreeMap<ContentId, Vec<ContentId>> = BTreeMap::new();
        for item in self.items.values() {
            if let Some(p) = item.parent {
                out.entry(p).or_default().push(item.id);
            }
        }
        out
    }

    /// Follow parent links to the originating post.
    pub fn origin_of(&self, id: ContentId) -> Result<ContentId, StoreError> {
        let mut cur = id;
        let mut steps = 0usize;
        loop {
            let item = self.items.get(&cur).ok_or(StoreError::Dangling(cur))?;
            match item.parent {
                None => return Ok(cur),
                Some(p) => {
                    cur = p;
                    steps += 1;
                    if steps > self.items.len() {
                        return Err(StoreError::Cycle(id));
                    }
                }
            }
        }
    }

    /// Ids of items each agent has already re-shared (the parents of the
    /// re-share nodes they authored).
    pub fn reshared_by(&self) -> BTreeMap<AgentId, BTreeSet<ContentId>> {
        let mut out: BTreeMap<AgentId, BTreeSet<ContentId>> = BTreeMap::new();
        for item in self.items.values() {
            if let Some(p) = item.parent {
                out.entry(item.author.clone()).or_default().insert(p);
            }
        }
        out
    }

    /// Check that every parent and root resolves, roots are originals
    /// reachable through parent links, and re-share counters match the
    /// number of child nodes.
    pub fn validate(&self) -> Result<(), StoreError> {
        let children = self.children();
        for item in self.items.values() {
            match item.parent {
                None if item.root != item.id => {
                    return Err(StoreError::Inconsistent {
                        id: item.id,
                        message: "original whose root is not itself".into(),
                    })
                }
                Some(p) if !self.contains(p) => return Err(StoreError::Dangling(p)),
                _ => {}
            }
            let origin = self.origin_of(item.id)?;
            if origin != item.root {
                return Err(StoreError::Inconsistent {
                    id: item.id,
                    message: format!("root {} but parent chain ends at {}", item.root, origin),
                });
            }
            let n_children = children.get(&item.id).map_or(0, Vec::len) as u64;
            if item.counters.reshares != n_children {
                return Err(StoreError::Inconsistent {
                    id: item.id,
                    message: format!("reshare counter {} but {} children", item.counters.reshares, n_children),
                });
            }
        }
        Ok(())
    }
}
