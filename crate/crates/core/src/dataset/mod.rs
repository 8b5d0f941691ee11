//! Dataset plumbing: manifests, linear anchoring of score scales, merging,
//! k-fold partitioning and training-time augmentation.

mod anchor;
mod augment;
mod folds;
mod manifest;

pub use anchor::{anchor_apply, anchor_fit, merge, prefix_ids, AnchorTransform, COMBINED};
pub use augment::{augment, AugmentOp, AugmentSpec};
pub use folds::{kfold_split, ratio_split, FoldPlan, FoldRoles, RatioSplit, DEFAULT_FOLDS};
pub use manifest::{load_manifest, DatasetManifest, ManifestEntry};
