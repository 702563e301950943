//! Object-centric visual token compression.
//!
//! Query probability masks from a segmentation head are filtered into a set
//! of valid soft masks and a hard partition of the token grid; features are
//! then merged into one token per object (or down to a fixed budget) and
//! ordered by centroid.
//!
//! ```
//! use objtoken::{competitive_filter, merge_hard, FeatureMap, MaskStack};
//!
//! let features = FeatureMap::new(1, 2, 1, vec![1.0, 3.0]).unwrap();
//! let masks = MaskStack::new(2, 1, 2, vec![0.9, 0.2, 0.1, 0.8]).unwrap();
//! let valid = competitive_filter(&masks);
//! let tokens = merge_hard(&features, &valid).unwrap();
//! assert_eq!(tokens.len(), 2);
//! ```

pub mod analytics;
pub mod error;
pub mod fixed_rate;
pub mod masks;
pub mod merge;
pub mod pipeline;
pub mod sequence_io;
pub mod synth;
pub mod tensor_io;

pub use error::{Error, Result};
pub use fixed_rate::{fixed_rate_merge, plan_segments, BudgetPlan, FixedRateOutput, Strategy};
pub use masks::{competitive_filter, downsample_masks, soft_to_hard, SoftMask, ValidMasks};
pub use merge::{centroid_sort, merge_hard, merge_soft, MergedToken, TokenKind, TokenSequence};
pub use tensor_io::{read_bundle, write_bundle, Bundle, FeatureMap, MaskStack, Tensor};
