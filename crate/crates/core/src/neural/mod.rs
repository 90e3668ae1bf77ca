//! From-scratch differentiable building blocks: LSTM and dense layers,
//! the actor and critic networks, and the optimizer.

pub mod adam;
pub mod layers;
pub mod nets;
pub mod tensor;

pub use adam::{adam_step, Adam};
pub use layers::{lstm_cell_forward, Dense, Init, Lstm, LstmCache, ParamLayout, Segment};
pub use nets::{
    squash_action, ActorCache, ActorNet, CriticCache, CriticNet, Network, RecurrentState, HIDDEN,
};
pub use tensor::SeqTensor;
