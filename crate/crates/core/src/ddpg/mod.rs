//! Deep deterministic policy gradient learner.

mod agent;
pub mod codec;
pub mod net;
pub mod optim;
pub mod replay;

pub use agent::{act, train, ActorPolicy, Agent, EpisodeLog, Hyperparams, ObsScale, Trainer};
pub use codec::{decode, encode, SavedAgent};
pub use net::{Activation, Gradients, Layer, Mlp, Trace};
pub use optim::{Optimizer, OptimizerKind};
pub use replay::{ReplayBuffer, Transition};
