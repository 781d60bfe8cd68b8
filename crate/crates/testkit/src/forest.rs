//! Reply forests and the check that two of them have the same shape.

use std::collections::{BTreeMap, HashMap};
use std::hash::Hash;

/// Parent of every message, following `In-Reply-To` only and keeping parents
/// that are present in the list. Duplicate ids keep their first entry.
pub fn in_reply_to_forest(messages: &[(String, Option<String>)]) -> BTreeMap<String, Option<String>> {
    let mut forest = BTreeMap::new();
    for (id, _) in messages {
        forest.entry(id.clone()).or_insert(None);
    }
    let mut seen = std::collections::HashSet::new();
    for (id, parent) in messages {
        if !seen.insert(id.clone()) {
            continue;
        }
        let parent = parent.clone().filter(|p| p != id && forest.contains_key(p));
        forest.insert(id.clone(), parent);
    }
    forest
}

/// Whether `map` carries the expected forest onto the actual one: every node
/// maps to a distinct actual node whose parent is the image of its parent.
pub fn isomorphic<A, B>(
    expected: &BTreeMap<A, Option<A>>,
    actual: &HashMap<B, Option<B>>,
    map: &HashMap<A, B>,
) -> Result<(), String>
where
    A: Ord + Hash + Eq + Clone + std::fmt::Debug,
    B: Hash + Eq + Clone + std::fmt::Debug,
{
    if expected.len() != actual.len() {
        return Err(format!("{} expected nodes, {} actual", expected.len(), actual.len()));
    }
    let mut images = std::collections::HashSet::new();
    for (node, parent) in expected {
        let image = map.get(node).ok_or_else(|| format!("{node:?} has no image"))?;
        if !images.insert(image.clone()) {
            return Err(format!("{image:?} is the image of two nodes"));
        }
        let actual_parent = actual
            .get(image)
            .ok_or_else(|| format!("{image:?} missing from actual forest"))?;
        let expected_parent = parent.as_ref().map(|p| map.get(p).cloned());
        let expected_parent = match expected_parent {
            None => None,
            Some(None) => return Err(format!("parent {parent:?} has no image")),
            Some(Some(p)) => Some(p),
        };
        if *actual_parent != expected_parent {
            return Err(format!(
                "{node:?}: expected parent {expected_parent:?}, found {actual_parent:?}"
            ));
        }
    }
    Ok(())
}
