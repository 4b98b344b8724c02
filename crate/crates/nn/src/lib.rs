//! A deliberately small reverse-mode automatic differentiation kernel.
//!
//! It provides exactly the building blocks a streaming motion classifier
//! needs: dilated causal 1-D convolutions, dense layers, LSTM cells, ReLU,
//! softmax cross-entropy and the Adam / RMSProp optimizers. Everything is
//! `f64`, row-major, and single-sample: batching is done by accumulating
//! gradients from independent graphs.
//!
//! ```
//! use gatenav_nn::{Graph, ParamStore, Dense, Tensor};
//! use rand::SeedableRng;
//!
//! let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
//! let mut store = ParamStore::new();
//! let head = Dense::new(&mut store, "head", 3, 2, &mut rng);
//!
//! let grads = {
//!     let mut g = Graph::new(&store);
//!     let x = g.input(Tensor::from_vec(vec![3], vec![0.5, -1.0, 2.0]).unwrap());
//!     let logits = head.forward(&mut g, x).unwrap();
//!     let loss = g.softmax_cross_entropy(logits, 1).unwrap();
//!     g.backward(loss).unwrap()
//! };
//! store.accumulate(&grads).unwrap();
//! ```

mod checkpoint;
mod error;
mod graph;
pub mod kernels;
mod layers;
mod optim;
mod param;
mod tensor;

pub use checkpoint::{Checkpoint, ParamRecord, CHECKPOINT_FORMAT};
pub use error::{NnError, Result};
pub use graph::{Gradients, Graph, Var};
pub use layers::{receptive_field, CausalConv1d, Dense, LayerSpec, LstmCell, LstmState};
pub use optim::{Adam, RmsProp};
pub use param::{ParamId, ParamStore, Parameter};
pub use tensor::Tensor;
