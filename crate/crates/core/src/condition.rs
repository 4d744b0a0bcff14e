use std::collections::HashMap;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Ordered set of unique condition (sentence) identifiers.
///
/// Every matrix and vector in the pipeline is indexed by one of these; two
/// structures are comparable only when their condition sets have identical
/// ids in identical order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConditionSet {
    ids: Vec<String>,
    index: HashMap<String, usize>,
}

impl ConditionSet {
    pub fn new<I, S>(ids: I) -> Result<Arc<Self>>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let ids: Vec<String> = ids.into_iter().map(Into::into).collect();
        if ids.len() < 2 {
            return Err(Error::InsufficientData(format!(
                "condition set needs at least 2 conditions, got {}",
                ids.len()
            )));
        }
        let mut index = HashMap::with_capacity(ids.len());
        for (i, id) in ids.iter().enumerate() {
            if index.insert(id.clone(), i).is_some() {
                return Err(Error::DuplicateCondition { id: id.clone() });
            }
        }
        Ok(Arc::new(ConditionSet { ids, index }))
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn id(&self, i: usize) -> &str {
        &self.ids[i]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }
}
