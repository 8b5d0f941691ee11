//! ColorNet-mini: a small convolutional feature stage followed by the
//! rating head (dropout, 10-unit dense, rectifier, 1-unit dense), trained
//! end to end on an L1 objective with ADAM.
//!
//! Everything runs in 64-bit floats on the CPU. Forward passes are pure
//! functions of the model, input and dropout seed, so training is
//! bit-reproducible for a fixed seed.

mod checkpoint;
mod gemm;
mod model;
mod optim;
mod tensor;
mod train;

pub use checkpoint::{decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint, MAGIC};
pub use model::{
    backward, forward, l1_loss, predict, prepare_input, ForwardCache, Gradients, Mode, ModelConfig, OutputScale,
    ParamGroup, ParamTensor, RatingModel,
};
pub use optim::{adam_step, decay_learning_rates, OptimizerState};
pub use tensor::Tensor;
pub use train::{train, train_monitored, TrainOutcome, TrainPlan, TrainingPair};
