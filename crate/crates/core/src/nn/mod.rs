//! A small dense network with hand-written gradients.

pub mod checkpoint;
pub mod loss;
pub mod mlp;
pub mod optim;

pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint};
pub use loss::{
    consistency_and_grads, kl, loss_and_grad, loss_ce, loss_mse, loss_symkl, mean_symkl_rows,
    softmax, softmax_rows, LossSpec, PROB_FLOOR,
};
pub use mlp::{
    backward, forward, forward_cached, init_mlp, pass_dropout_key, train_dropout_key, Cache,
    Dropout, Layer, MlpParams,
};
pub use optim::{
    clip_global_norm, optimizer_step, swa_update, OptimizerKind, OptimizerState, SwaAccumulator,
    TrainConfig,
};
