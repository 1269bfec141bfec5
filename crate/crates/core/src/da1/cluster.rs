use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::qoe::QoeModel;

/// Users (by position in `models`) grouped by model structure index.
pub fn cluster_users(models: &[QoeModel]) -> BTreeMap<u8, Vec<usize>> {
    let mut groups: BTreeMap<u8, Vec<usize>> = BTreeMap::new();
    for (i, m) in models.iter().enumerate() {
        groups.entry(m.structure_index()).or_default().push(i);
    }
    groups
}
