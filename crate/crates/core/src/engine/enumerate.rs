//! Intersectional slice enumeration and its combinatorics.

use itertools::Itertools;

use super::slice::SliceFilter;
use super::{EngineError, Result};

/// All non-empty attribute subsets of a declared attribute list, with the
/// value combinations (slices) each subset induces.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SliceEnumeration {
    attributes: Vec<(String, Vec<String>)>,
}

pub fn enumerate_slices(attributes: &[(String, Vec<String>)]) -> Result<SliceEnumeration> {
    if attributes.is_empty() {
        return Err(EngineError::Config("slice enumeration needs at least one attribute".into()));
    }
    if let Some((name, _)) = attributes.iter().find(|(_, cats)| cats.is_empty()) {
        return Err(EngineError::Config(format!("attribute {name:?} has no categories")));
    }
    if !attributes.iter().map(|(name, _)| name).all_unique() {
        return Err(EngineError::Config("attribute names must be unique".into()));
    }
    Ok(SliceEnumeration {
        attributes: attributes.to_vec(),
    })
}

impl SliceEnumeration {
    pub fn attribute_count(&self) -> usize {
        self.attributes.len()
    }

    /// `2^k - 1`; `None` on overflow.
    pub fn subset_count(&self) -> Option<u128> {
        1u128.checked_shl(self.attributes.len() as u32).map(|p| p - 1)
    }

    /// `k!`, the number of attribute orderings; `None` on overflow.
    pub fn ordering_count(&self) -> Option<u128> {
        (1..=self.attributes.len() as u128).try_fold(1u128, |acc, i| acc.checked_mul(i))
    }

    /// Number of slices over subsets of at most `max_depth` attributes,
    /// computed without enumerating them.
    pub fn slice_count(&self, max_depth: usize) -> Option<u128> {
        let sizes: Vec<u128> = self.attributes.iter().map(|(_, c)| c.len() as u128).collect();
        // Elementary symmetric sums e_1..e_depth of the category sizes.
        let depth = max_depth.min(sizes.len());
        let mut e = vec![0u128; depth + 1];
        e[0] = 1;
        for s in sizes {
            for j in (1..=depth).rev() {
                e[j] = e[j].checked_add(e[j - 1].checked_mul(s)?)?;
            }
        }
        e[1..].iter().try_fold(0u128, |acc, &x| acc.checked_add(x))
    }

    /// Lazily yields every slice: subsets by size, then lexicographically by
    /// declared attribute position; values in declared category order.
    pub fn slices(&self) -> impl Iterator<Item = SliceFilter> + '_ {
        self.slices_up_to(self.attributes.len())
    }

    pub fn slices_up_to(&self, max_depth: usize) -> impl Iterator<Item = SliceFilter> + '_ {
        let k = self.attributes.len();
        (1..=max_depth.min(k))
            .flat_map(move |size| (0..k).combinations(size))
            .flat_map(move |subset| {
                subset
                    .iter()
                    .map(|&i| self.attributes[i].1.iter().map(move |v| (self.attributes[i].0.as_str(), v.as_str())))
                    .multi_cartesian_product()
                    .map(SliceFilter::from_clauses)
            })
    }
}
