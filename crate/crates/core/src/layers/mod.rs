//! SE(3)×SE(3)-transformer layers, equivariant rectifiers and the
//! neighbourhood graph they run on.

mod elu;
mod graph;
mod transformer;

pub use elu::{elu_layer, EluParams};
pub use graph::{knn_graph, NeighborGraph};
pub use transformer::{
    attention_weights, se3_layer, transformer_layer, DegreeChannels, LayerParams, LayerShape,
};
