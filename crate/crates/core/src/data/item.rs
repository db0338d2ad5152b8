use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

/// A multiple-choice item with a keyed answer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Item {
    pub id: String,
    pub stem: String,
    pub options: Vec<String>,
    /// 0-based index of the correct option.
    pub key: usize,
    #[serde(flatten)]
    pub extra: BTreeMap<String, Value>,
}

impl Item {
    pub fn new(id: impl Into<String>, stem: impl Into<String>, options: Vec<String>, key: usize) -> Self {
        Self {
            id: id.into(),
            stem: stem.into(),
            options,
            key,
            extra: BTreeMap::new(),
        }
    }

    pub fn n_options(&self) -> usize {
        self.options.len()
    }

    fn validate(&self) -> Result<()> {
        let bad = |message: String| Error::InvalidItem {
            item_id: self.id.clone(),
            message,
        };
        if self.id.is_empty() {
            return Err(bad("empty item id".into()));
        }
        if self.options.len() < 2 {
            return Err(bad(format!("needs at least 2 options, has {}", self.options.len())));
        }
        if self.key >= self.options.len() {
            return Err(bad(format!(
                "key {} out of range for {} options",
                self.key,
                self.options.len()
            )));
        }
        if let Some(i) = self.options.iter().position(|o| o.is_empty()) {
            return Err(bad(format!("option {i} is empty")));
        }
        Ok(())
    }
}

/// Ordered collection of items. Item order is the canonical column order
/// for every matrix built against the bank.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ItemBank {
    pub metadata: BTreeMap<String, Value>,
    items: Vec<Item>,
    #[serde(flatten)]
    pub extra: BTreeMap<String, Value>,
}

#[derive(Deserialize)]
struct RawBank {
    #[serde(default)]
    metadata: BTreeMap<String, Value>,
    items: Vec<Item>,
    #[serde(flatten)]
    extra: BTreeMap<String, Value>,
}

impl ItemBank {
    pub fn new(items: Vec<Item>, metadata: BTreeMap<String, Value>) -> Result<Self> {
        if items.is_empty() {
            return Err(Error::Validation("item bank is empty".into()));
        }
        let mut seen = HashSet::new();
        for item in &items {
            item.validate()?;
            if !seen.insert(item.id.as_str()) {
                return Err(Error::InvalidItem {
                    item_id: item.id.clone(),
                    message: "duplicate item id".into(),
                });
            }
        }
        Ok(Self {
            metadata,
            items,
            extra: BTreeMap::new(),
        })
    }

    pub fn items(&self) -> &[Item] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn item_ids(&self) -> Vec<String> {
        self.items.iter().map(|i| i.id.clone()).collect()
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.items.iter().position(|i| i.id == id)
    }

    pub fn get(&self, id: &str) -> Option<&Item> {
        self.items.iter().find(|i| i.id == id)
    }
}

pub fn read_item_bank(path: impl AsRef<Path>) -> Result<ItemBank> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let raw: RawBank = serde_json::from_str(&text).map_err(|e| Error::parse(path, e))?;
    let mut bank = ItemBank::new(raw.items, raw.metadata)?;
    bank.extra = raw.extra;
    Ok(bank)
}

pub fn write_item_bank(path: impl AsRef<Path>, bank: &ItemBank) -> Result<()> {
    let path = path.as_ref();
    let mut text = serde_json::to_string_pretty(bank).map_err(|e| Error::parse(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}
