use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ordered table of asset tickers with reverse lookup.
///
/// Tickers are uppercase-normalized, unique and nonempty; the position in
/// the table is the asset's 0-based id everywhere else in the crate.
/// Serializes as the plain ticker list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct SymbolTable {
    tickers: Vec<String>,
    index: HashMap<String, usize>,
}

impl TryFrom<Vec<String>> for SymbolTable {
    type Error = Error;
    fn try_from(tickers: Vec<String>) -> Result<Self> {
        SymbolTable::new(tickers)
    }
}

impl From<SymbolTable> for Vec<String> {
    fn from(table: SymbolTable) -> Vec<String> {
        table.tickers
    }
}

impl SymbolTable {
    /// Builds a table from tickers in the given order.
    pub fn new<I, S>(tickers: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut out = Vec::new();
        let mut index = HashMap::new();
        for t in tickers {
            let norm = t.as_ref().trim().to_ascii_uppercase();
            if norm.is_empty() {
                return Err(Error::InvalidProblem("empty ticker".into()));
            }
            if index.insert(norm.clone(), out.len()).is_some() {
                return Err(Error::InvalidProblem(format!("duplicate ticker {norm}")));
            }
            out.push(norm);
        }
        Ok(SymbolTable { tickers: out, index })
    }

    pub fn len(&self) -> usize {
        self.tickers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tickers.is_empty()
    }

    pub fn ticker(&self, id: usize) -> &str {
        &self.tickers[id]
    }

    pub fn tickers(&self) -> &[String] {
        &self.tickers
    }

    /// Id of a ticker, normalizing case the same way as construction.
    pub fn id(&self, ticker: &str) -> Option<usize> {
        self.index.get(&ticker.trim().to_ascii_uppercase()).copied()
    }

    /// Sub-table containing `keep` (ids into `self`) in the given order.
    pub fn subset(&self, keep: &[usize]) -> Result<Self> {
        SymbolTable::new(keep.iter().map(|&id| self.tickers[id].clone()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalizes_and_indexes() {
        let t = SymbolTable::new(["btc", "Usdt", "ETH"]).unwrap();
        assert_eq!(t.tickers(), &["BTC", "USDT", "ETH"]);
        assert_eq!(t.id("usdt"), Some(1));
        assert_eq!(t.id("missing"), None);
    }

    #[test]
    fn rejects_duplicates_and_empty() {
        assert!(SymbolTable::new(["BTC", "btc"]).is_err());
        assert!(SymbolTable::new([""]).is_err());
    }
}
