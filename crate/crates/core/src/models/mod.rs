//! RGCN and MVRGCN: robust autoencoders in front of Chebyshev graph
//! convolution towers, fused per view into a softmax head.

mod checkpoint;
mod fusion;
mod model;
mod spec;
mod tower;
mod train;

pub use checkpoint::{
    decode_checkpoint, load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, Checkpoint,
    CHECKPOINT_MAGIC,
};
pub use fusion::{fuse_views, fuse_views_backward};
pub use model::{build_model, evaluate, gradcheck_model, BatchLoss, Model, ModelPlan};
pub use spec::{parse_key_values, AeKind, Arch, ConvSpec, Fusion, ModelSpec, MODEL_KEYS};
pub use tower::rescaled_laplacian;
pub use train::{split_accuracy, train_mvrgcn, train_model, train_rgcn, EpochRecord, EvalSplit, TrainReport};
