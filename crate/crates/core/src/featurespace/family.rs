//! Feature families and the perturbation constraints they impose.
//!
//! Every feature belongs to one family, and each family declares whether an
//! attacker can add the feature to a sample and whether it can be removed
//! without breaking the sample. Only three permission shapes exist: add and
//! remove, add only, and frozen. A family that could be removed but not
//! added makes no sense for this domain and is rejected.

use serde::{Deserialize, Serialize};

use super::FeatureVector;
use crate::{Error, Result};

/// Permission pair for one family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilyPermission {
    pub addable: bool,
    pub removable: bool,
}

/// Maps features to families and families to perturbation permissions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureFamilyTable {
    dim: usize,
    family_of: Vec<u16>,
    permissions: Vec<FamilyPermission>,
}

impl FeatureFamilyTable {
    pub fn new(
        dim: usize,
        family_of: Vec<u16>,
        permissions: Vec<FamilyPermission>,
    ) -> Result<Self> {
        if family_of.len() != dim {
            return Err(Error::Config(format!(
                "family map covers {} features, dimension is {dim}",
                family_of.len()
            )));
        }
        if permissions.is_empty() {
            return Err(Error::Config("no feature families declared".into()));
        }
        for p in &permissions {
            if !p.addable && p.removable {
                return Err(Error::Config(
                    "a family cannot be removable without being addable".into(),
                ));
            }
        }
        if let Some(&bad) = family_of
            .iter()
            .find(|&&f| f as usize >= permissions.len())
        {
            return Err(Error::Config(format!(
                "feature mapped to unknown family {bad}"
            )));
        }
        Ok(Self {
            dim,
            family_of,
            permissions,
        })
    }

    /// The permission mix used by the synthetic generator: eight families
    /// modelled on Android feature sets, where hardware features, requested
    /// permissions and intents can only be added, used permissions are
    /// frozen, and component / API / network features are fully editable.
    pub fn android_style(dim: usize, n_families: usize) -> Result<Self> {
        const PATTERN: [(bool, bool); 8] = [
            (true, false),
            (true, false),
            (true, true),
            (true, false),
            (true, true),
            (false, false),
            (true, true),
            (true, true),
        ];
        if n_families == 0 {
            return Err(Error::Config("need at least one family".into()));
        }
        let permissions = (0..n_families)
            .map(|f| {
                let (addable, removable) = PATTERN[f % PATTERN.len()];
                FamilyPermission { addable, removable }
            })
            .collect();
        let family_of = (0..dim).map(|i| (i % n_families) as u16).collect();
        Self::new(dim, family_of, permissions)
    }

    /// Add-only variant: every family may be extended, none may shrink.
    /// Models feature spaces where samples are only ever augmented.
    pub fn add_only(dim: usize, n_families: usize) -> Result<Self> {
        if n_families == 0 {
            return Err(Error::Config("need at least one family".into()));
        }
        let permissions = vec![
            FamilyPermission {
                addable: true,
                removable: false,
            };
            n_families
        ];
        let family_of = (0..dim).map(|i| (i % n_families) as u16).collect();
        Self::new(dim, family_of, permissions)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_families(&self) -> usize {
        self.permissions.len()
    }

    pub fn family_of(&self, feature: u32) -> u16 {
        self.family_of[feature as usize]
    }

    pub fn families(&self) -> &[u16] {
        &self.family_of
    }

    pub fn permissions(&self) -> &[FamilyPermission] {
        &self.permissions
    }

    pub fn feature_addable(&self, feature: u32) -> bool {
        self.permissions[self.family_of[feature as usize] as usize].addable
    }

    pub fn feature_removable(&self, feature: u32) -> bool {
        self.permissions[self.family_of[feature as usize] as usize].removable
    }

    /// True when no family permits removal.
    pub fn is_add_only(&self) -> bool {
        self.permissions.iter().all(|p| !p.removable)
    }
}

/// Reverts every illegal change in `perturbed` back to the value it has in
/// `original`: additions in non-addable families are dropped, removals in
/// non-removable families are restored. Legal changes survive untouched.
pub fn validate_perturbations(
    original: &FeatureVector,
    perturbed: &FeatureVector,
    table: &FeatureFamilyTable,
) -> Result<FeatureVector> {
    if original.dim() != table.dim() {
        return Err(Error::DimensionMismatch {
            expected: table.dim(),
            got: original.dim(),
        });
    }
    if perturbed.dim() != table.dim() {
        return Err(Error::DimensionMismatch {
            expected: table.dim(),
            got: perturbed.dim(),
        });
    }
    let mut kept: Vec<u32> = Vec::with_capacity(perturbed.count_enabled());
    for &f in perturbed.enabled() {
        if original.contains(f) || table.feature_addable(f) {
            kept.push(f);
        }
    }
    for &f in original.enabled() {
        if !perturbed.contains(f) && !table.feature_removable(f) {
            kept.push(f);
        }
    }
    kept.sort_unstable();
    kept.dedup();
    FeatureVector::new(table.dim(), kept)
}

/// Thresholds a real-valued vector into binary (values below 0.5 become 0,
/// everything else 1) and then restores validity against `original`.
pub fn discretize(
    real: &[f64],
    original: &FeatureVector,
    table: &FeatureFamilyTable,
) -> Result<FeatureVector> {
    if real.len() != table.dim() {
        return Err(Error::DimensionMismatch {
            expected: table.dim(),
            got: real.len(),
        });
    }
    let enabled: Vec<u32> = real
        .iter()
        .enumerate()
        .filter(|(_, &v)| v >= 0.5)
        .map(|(i, _)| i as u32)
        .collect();
    let thresholded = FeatureVector::new(table.dim(), enabled)?;
    validate_perturbations(original, &thresholded, table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::featurespace::l0_distance;
    use proptest::prelude::*;

    fn fv(dim: usize, idx: &[u32]) -> FeatureVector {
        FeatureVector::new(dim, idx.to_vec()).unwrap()
    }

    fn uniform_table(dim: usize, addable: bool, removable: bool) -> FeatureFamilyTable {
        FeatureFamilyTable::new(
            dim,
            vec![0; dim],
            vec![FamilyPermission { addable, removable }],
        )
        .unwrap()
    }

    #[test]
    fn removal_only_permission_is_rejected() {
        let err = FeatureFamilyTable::new(
            4,
            vec![0; 4],
            vec![FamilyPermission {
                addable: false,
                removable: true,
            }],
        );
        assert!(err.is_err());
    }

    #[test]
    fn add_only_family_restores_removals_and_keeps_additions() {
        let table = uniform_table(8, true, false);
        let original = fv(8, &[1, 2]);
        let perturbed = fv(8, &[2, 5]);
        let out = validate_perturbations(&original, &perturbed, &table).unwrap();
        assert_eq!(out.enabled(), &[1, 2, 5]);
    }

    #[test]
    fn frozen_family_drops_additions_and_restores_removals() {
        let table = uniform_table(8, false, false);
        let original = fv(8, &[1, 2]);
        let perturbed = fv(8, &[2, 5]);
        let out = validate_perturbations(&original, &perturbed, &table).unwrap();
        assert_eq!(out, original);
    }

    #[test]
    fn fully_editable_family_keeps_both_changes() {
        let table = uniform_table(8, true, true);
        let original = fv(8, &[1, 2]);
        let perturbed = fv(8, &[2, 5]);
        let out = validate_perturbations(&original, &perturbed, &table).unwrap();
        assert_eq!(out, perturbed);
    }

    #[test]
    fn validation_is_idempotent_on_mixed_families() {
        let table = FeatureFamilyTable::android_style(16, 8).unwrap();
        let original = fv(16, &[0, 3, 5, 10]);
        let perturbed = fv(16, &[1, 3, 7, 13, 14]);
        let once = validate_perturbations(&original, &perturbed, &table).unwrap();
        let twice = validate_perturbations(&original, &once, &table).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn discretize_thresholds_at_half() {
        let table = uniform_table(4, true, true);
        let original = FeatureVector::empty(4);
        let out = discretize(&[0.49, 0.5, 0.51, 0.0], &original, &table).unwrap();
        assert_eq!(out.enabled(), &[1, 2]);
    }

    #[test]
    fn discretize_respects_family_permissions() {
        let table = uniform_table(4, true, false);
        let original = fv(4, &[0]);
        let out = discretize(&[0.1, 0.9, 0.2, 0.6], &original, &table).unwrap();
        assert_eq!(out.enabled(), &[0, 1, 3]);
    }

    /// Bit-by-bit reference: for each feature decide independently whether
    /// the perturbed value may stand.
    fn validate_reference(
        original: &FeatureVector,
        perturbed: &FeatureVector,
        table: &FeatureFamilyTable,
    ) -> FeatureVector {
        let mut enabled = Vec::new();
        for f in 0..table.dim() as u32 {
            let was = original.contains(f);
            let now = perturbed.contains(f);
            let keep = if was == now {
                now
            } else if now {
                table.feature_addable(f)
            } else {
                !table.feature_removable(f)
            };
            if keep {
                enabled.push(f);
            }
        }
        FeatureVector::new(table.dim(), enabled).unwrap()
    }

    #[test]
    fn exhaustive_check_against_bit_reference_at_dim_twelve() {
        let dim = 12;
        let table = FeatureFamilyTable::android_style(dim, 8).unwrap();
        let to_vec = |mask: u32| {
            let enabled = (0..dim as u32).filter(|i| mask & (1 << i) != 0).collect();
            FeatureVector::new(dim, enabled).unwrap()
        };
        for orig_mask in 0u32..(1 << dim) {
            let original = to_vec(orig_mask);
            for pert_mask in 0u32..(1 << dim) {
                let perturbed = to_vec(pert_mask);
                let fast = validate_perturbations(&original, &perturbed, &table).unwrap();
                let slow = validate_reference(&original, &perturbed, &table);
                assert_eq!(fast, slow, "orig {orig_mask:b} pert {pert_mask:b}");
            }
        }
    }

    fn arb_vector(dim: usize) -> impl Strategy<Value = FeatureVector> {
        prop::collection::btree_set(0u32..dim as u32, 0..=dim)
            .prop_map(move |set| FeatureVector::new(dim, set.into_iter().collect()).unwrap())
    }

    proptest! {
        #[test]
        fn validated_output_never_breaks_permissions(
            a in arb_vector(40),
            b in arb_vector(40),
            n_fam in 1usize..8,
        ) {
            let table = FeatureFamilyTable::android_style(40, n_fam).unwrap();
            let out = validate_perturbations(&a, &b, &table).unwrap();
            for f in 0..40u32 {
                let was = a.contains(f);
                let now = out.contains(f);
                if now && !was {
                    prop_assert!(table.feature_addable(f));
                }
                if was && !now {
                    prop_assert!(table.feature_removable(f));
                }
            }
            let again = validate_perturbations(&a, &out, &table).unwrap();
            prop_assert_eq!(&again, &out);
            let legal_changes = l0_distance(&a, &out).unwrap();
            let requested = l0_distance(&a, &b).unwrap();
            prop_assert!(legal_changes <= requested);
        }
    }
}
