//! Small GAN trainer on synthetic targets.

pub mod energy;
pub mod gan;
pub mod mlp;
pub mod snapshot;
pub mod train;

pub use energy::energy_distance;
pub use gan::{gan_field, gan_gradients, gan_losses, GanBatch, GanLoss, GanLosses, Target, ToyGanConfig};
pub use mlp::{init_params, mlp_backward, mlp_forward, Activation, FinalActivation, MlpSpec};
pub use snapshot::{read_snapshot, write_snapshot, SnapshotHeader};
pub use train::{initial_params, train_toy_gan, train_toy_gan_full, Evaluator, GanRun};
