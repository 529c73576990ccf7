//! Ulam-Harris-Neveu vertex labels.

use std::fmt;

use crate::error::{CoreError, Result};

/// A vertex label: a finite sequence of positive integers, the empty
/// sequence being the root. Concatenation is associative with the root as
/// identity, and the parent drops the last digit.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct UhnLabel {
    digits: Vec<u32>,
}

impl UhnLabel {
    pub fn root() -> Self {
        UhnLabel { digits: Vec::new() }
    }

    /// Builds a label from digits; every digit must be >= 1.
    pub fn new(digits: impl Into<Vec<u32>>) -> Result<Self> {
        let digits = digits.into();
        if digits.iter().any(|&d| d == 0) {
            return Err(CoreError::InvalidArgument(
                "label digits must be positive".into(),
            ));
        }
        Ok(UhnLabel { digits })
    }

    pub fn is_root(&self) -> bool {
        self.digits.is_empty()
    }

    pub fn depth(&self) -> usize {
        self.digits.len()
    }

    pub fn digits(&self) -> &[u32] {
        &self.digits
    }

    /// Parent label; `None` for the root.
    pub fn parent(&self) -> Option<UhnLabel> {
        if self.digits.is_empty() {
            return None;
        }
        Some(UhnLabel { digits: self.digits[..self.digits.len() - 1].to_vec() })
    }

    /// k-th child label, k >= 1.
    pub fn child(&self, k: u32) -> UhnLabel {
        debug_assert!(k >= 1);
        let mut digits = self.digits.clone();
        digits.push(k);
        UhnLabel { digits }
    }

    /// Concatenation `self` followed by `other`.
    pub fn concat(&self, other: &UhnLabel) -> UhnLabel {
        let mut digits = self.digits.clone();
        digits.extend_from_slice(&other.digits);
        UhnLabel { digits }
    }

    /// Partial order: `self <= other` iff `self` is an ancestor-or-self.
    pub fn is_prefix_of(&self, other: &UhnLabel) -> bool {
        other.digits.len() >= self.digits.len()
            && other.digits[..self.digits.len()] == self.digits[..]
    }

    /// Stable stream key for this label.
    pub fn stream_key(&self) -> u64 {
        crate::rng::label_key(&self.digits)
    }

    /// Parses the text form produced by `Display`: `o` for the root,
    /// dot-separated positive integers otherwise.
    pub fn parse(s: &str) -> Result<Self> {
        if s == "o" {
            return Ok(UhnLabel::root());
        }
        let digits = s
            .split('.')
            .map(|part| {
                part.parse::<u32>().ok().filter(|&d| d >= 1).ok_or_else(|| {
                    CoreError::InvalidArgument(format!("bad label segment {part:?} in {s:?}"))
                })
            })
            .collect::<Result<Vec<u32>>>()?;
        Ok(UhnLabel { digits })
    }
}

impl fmt::Display for UhnLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.digits.is_empty() {
            return write!(f, "o");
        }
        let mut first = true;
        for d in &self.digits {
            if !first {
                write!(f, ".")?;
            }
            write!(f, "{d}")?;
            first = false;
        }
        Ok(())
    }
}
