//! Discrete architecture spaces: layered CNN genomes, convolutional-cell
//! genomes, and the dimension descriptors that let search drivers treat both
//! uniformly.
//!
//! Genomes are immutable values; every operation here is pure, so they can be
//! sampled and validated from any number of workers concurrently.

mod descriptor;
mod io;

pub use descriptor::{
    ActivationRule, ChoiceValue, Dimension, EncodedGenome, SpaceDescriptor, SpaceError,
};
pub use io::{read_genomes_jsonl, write_genomes_jsonl};

use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;

/// Per-layer nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Identity,
    Relu,
}

/// Per-layer normalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    None,
    Batchnorm,
}

/// Hyperparameters of one convolutional layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LayerParams {
    pub filters: u32,
    pub kernel_h: u32,
    pub kernel_w: u32,
    pub stride: u32,
    pub activation: Activation,
    pub normalization: Normalization,
}

/// A point in the layered-CNN space: a stack of convolutional layers plus a
/// DAG of connections. Node 0 is the network input; layers are 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LayeredCnnGenome {
    pub num_layers: usize,
    pub layers: Vec<LayerParams>,
    /// Directed edges `(src, dst)` with `src < dst`; `src == 0` is the input.
    pub connections: BTreeSet<(usize, usize)>,
}

/// The eight block operations of the cell space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CellOp {
    #[serde(rename = "identity")]
    Identity,
    #[serde(rename = "avgpool3x3")]
    AvgPool3x3,
    #[serde(rename = "maxpool3x3")]
    MaxPool3x3,
    #[serde(rename = "dilatedconv3x3")]
    DilatedConv3x3,
    #[serde(rename = "conv1x7_7x1")]
    Conv1x7_7x1,
    #[serde(rename = "sepconv3x3")]
    SepConv3x3,
    #[serde(rename = "sepconv5x5")]
    SepConv5x5,
    #[serde(rename = "sepconv7x7")]
    SepConv7x7,
}

impl CellOp {
    pub const ALL: [CellOp; 8] = [
        CellOp::Identity,
        CellOp::AvgPool3x3,
        CellOp::MaxPool3x3,
        CellOp::DilatedConv3x3,
        CellOp::Conv1x7_7x1,
        CellOp::SepConv3x3,
        CellOp::SepConv5x5,
        CellOp::SepConv7x7,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CellOp::Identity => "identity",
            CellOp::AvgPool3x3 => "avgpool3x3",
            CellOp::MaxPool3x3 => "maxpool3x3",
            CellOp::DilatedConv3x3 => "dilatedconv3x3",
            CellOp::Conv1x7_7x1 => "conv1x7_7x1",
            CellOp::SepConv3x3 => "sepconv3x3",
            CellOp::SepConv5x5 => "sepconv5x5",
            CellOp::SepConv7x7 => "sepconv7x7",
        }
    }
}

impl fmt::Display for CellOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One two-input block of a cell. Input indices: 0 and 1 are the two cell
/// inputs; `2 + j` is the output of block `j` (0-based, earlier blocks only).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BlockParams {
    pub input_a: usize,
    pub input_b: usize,
    pub op_a: CellOp,
    pub op_b: CellOp,
}

/// A point in the convolutional-cell space.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CellGenome {
    pub blocks: Vec<BlockParams>,
    pub force_concat_input_1: bool,
    pub force_concat_input_2: bool,
}

impl CellGenome {
    /// Block outputs not consumed by any other block (these get concatenated
    /// into the cell output, plus any force-concatenated cell inputs).
    pub fn unused_block_outputs(&self) -> Vec<usize> {
        let consumed: BTreeSet<usize> = self
            .blocks
            .iter()
            .flat_map(|b| [b.input_a, b.input_b])
            .filter(|&i| i >= 2)
            .map(|i| i - 2)
            .collect();
        (0..self.blocks.len()).filter(|k| !consumed.contains(k)).collect()
    }
}

/// A sampled architecture in either space.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Genome {
    Layered(LayeredCnnGenome),
    Cell(CellGenome),
}

impl Genome {
    pub fn as_layered(&self) -> Option<&LayeredCnnGenome> {
        match self {
            Genome::Layered(g) => Some(g),
            Genome::Cell(_) => None,
        }
    }

    pub fn as_cell(&self) -> Option<&CellGenome> {
        match self {
            Genome::Cell(g) => Some(g),
            Genome::Layered(_) => None,
        }
    }
}

/// A single violated invariant. Violations are data, not faults: `validate`
/// returns all of them rather than failing on the first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Violation {
    /// Edge `(src, dst)` with `src >= dst` breaks the topological order.
    NonTopologicalEdge { src: usize, dst: usize },
    /// Edge endpoint outside `[0, num_layers]`.
    EdgeOutOfRange { src: usize, dst: usize },
    /// A layer has no incoming edge.
    MissingIncomingEdge { layer: usize },
    /// `layers.len()` disagrees with `num_layers`.
    LayerCountMismatch { declared: usize, actual: usize },
    /// `num_layers` outside `[1, max_layers]`.
    LayerCountOutOfRange { num_layers: usize, max_layers: usize },
    /// A categorical field holds a value outside the space's declared set.
    ChoiceOutOfSet { dimension: String, value: String },
    /// A cell block references itself or a later block.
    ForwardReference { block: usize, input: usize },
    /// Cell block count differs from the space's fixed B.
    BlockCountMismatch { declared: usize, actual: usize },
    /// Genome kind does not match the space.
    WrongGenomeKind,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonTopologicalEdge { src, dst } => {
                write!(f, "non-topological edge ({src}, {dst})")
            }
            Violation::EdgeOutOfRange { src, dst } => {
                write!(f, "edge ({src}, {dst}) out of range")
            }
            Violation::MissingIncomingEdge { layer } => {
                write!(f, "layer {layer} has no incoming edge")
            }
            Violation::LayerCountMismatch { declared, actual } => {
                write!(f, "num_layers {declared} but {actual} layer records")
            }
            Violation::LayerCountOutOfRange { num_layers, max_layers } => {
                write!(f, "num_layers {num_layers} outside [1, {max_layers}]")
            }
            Violation::ChoiceOutOfSet { dimension, value } => {
                write!(f, "{dimension}: value {value} not in declared choice set")
            }
            Violation::ForwardReference { block, input } => {
                write!(f, "block {block} references input {input} (forward reference)")
            }
            Violation::BlockCountMismatch { declared, actual } => {
                write!(f, "space fixes {declared} blocks but genome has {actual}")
            }
            Violation::WrongGenomeKind => write!(f, "genome kind does not match space"),
        }
    }
}

/// How layered-CNN connections are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Connectivity {
    /// Fixed chain: layer l receives exactly node l-1. Connections are not
    /// search dimensions.
    Chain,
    /// Every (src, dst) pair is an independent binary dimension.
    Searched,
}

/// Declared choice sets for a layered-CNN space. The canonical spaces use the
/// full sets; micro spaces shrink them until enumeration is feasible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayeredSpace {
    pub max_layers: usize,
    pub filters: Vec<u32>,
    pub kernel_h: Vec<u32>,
    pub kernel_w: Vec<u32>,
    pub strides: Vec<u32>,
    pub activations: Vec<Activation>,
    pub normalizations: Vec<Normalization>,
    pub connectivity: Connectivity,
}

impl LayeredSpace {
    /// The full per-layer choice sets searched over in the 10- and 20-layer
    /// experiments.
    pub fn canonical(max_layers: usize) -> Self {
        LayeredSpace {
            max_layers,
            filters: vec![32, 64, 128],
            kernel_h: vec![1, 3, 5, 7],
            kernel_w: vec![1, 3, 5, 7],
            strides: vec![1, 2],
            activations: vec![Activation::Identity, Activation::Relu],
            normalizations: vec![Normalization::None, Normalization::Batchnorm],
            connectivity: Connectivity::Searched,
        }
    }

    /// Reduced space small enough to enumerate exhaustively (4368 genomes):
    /// the oracle space for search-driver tests.
    pub fn micro() -> Self {
        LayeredSpace {
            max_layers: 3,
            filters: vec![8, 16],
            kernel_h: vec![1, 3],
            kernel_w: vec![3],
            strides: vec![1, 2],
            activations: vec![Activation::Identity, Activation::Relu],
            normalizations: vec![Normalization::None],
            connectivity: Connectivity::Chain,
        }
    }
}

/// Declared shape of a convolutional-cell space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSpace {
    /// Number of blocks per cell (B). Default 5.
    pub blocks: usize,
    pub ops: Vec<CellOp>,
}

impl Default for CellSpace {
    fn default() -> Self {
        CellSpace { blocks: 5, ops: CellOp::ALL.to_vec() }
    }
}

/// A searchable architecture space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Space {
    Layered(LayeredSpace),
    Cell(CellSpace),
}

impl Space {
    pub fn micro() -> Self {
        Space::Layered(LayeredSpace::micro())
    }

    /// Returns all violated invariants; the genome is valid iff the list is
    /// empty.
    pub fn validate(&self, genome: &Genome) -> Vec<Violation> {
        match (self, genome) {
            (Space::Layered(space), Genome::Layered(g)) => validate_layered(space, g),
            (Space::Cell(space), Genome::Cell(g)) => validate_cell(space, g),
            _ => vec![Violation::WrongGenomeKind],
        }
    }

    /// Adds a chain edge from the nearest earlier node to every layer that
    /// lacks an incoming edge, so every sampled point yields a trainable
    /// network. No-op for cell genomes and already-valid layered genomes.
    pub fn repair(&self, genome: &mut Genome) {
        if let Genome::Layered(g) = genome {
            for layer in 1..=g.num_layers {
                let has_incoming = g.connections.iter().any(|&(_, dst)| dst == layer);
                if !has_incoming {
                    g.connections.insert((layer - 1, layer));
                }
            }
        }
    }
}

fn validate_layered(space: &LayeredSpace, g: &LayeredCnnGenome) -> Vec<Violation> {
    let mut out = Vec::new();
    if g.num_layers < 1 || g.num_layers > space.max_layers {
        out.push(Violation::LayerCountOutOfRange {
            num_layers: g.num_layers,
            max_layers: space.max_layers,
        });
    }
    if g.layers.len() != g.num_layers {
        out.push(Violation::LayerCountMismatch {
            declared: g.num_layers,
            actual: g.layers.len(),
        });
    }
    for (i, layer) in g.layers.iter().enumerate() {
        let dim = |name: &str| format!("layer{}.{}", i + 1, name);
        let check = |out: &mut Vec<Violation>, ok: bool, name: &str, value: String| {
            if !ok {
                out.push(Violation::ChoiceOutOfSet { dimension: dim(name), value });
            }
        };
        check(&mut out, space.filters.contains(&layer.filters), "filters", layer.filters.to_string());
        check(&mut out, space.kernel_h.contains(&layer.kernel_h), "kernel_h", layer.kernel_h.to_string());
        check(&mut out, space.kernel_w.contains(&layer.kernel_w), "kernel_w", layer.kernel_w.to_string());
        check(&mut out, space.strides.contains(&layer.stride), "stride", layer.stride.to_string());
        check(
            &mut out,
            space.activations.contains(&layer.activation),
            "activation",
            format!("{:?}", layer.activation).to_lowercase(),
        );
        check(
            &mut out,
            space.normalizations.contains(&layer.normalization),
            "normalization",
            format!("{:?}", layer.normalization).to_lowercase(),
        );
    }
    for &(src, dst) in &g.connections {
        if dst > g.num_layers || src > g.num_layers {
            out.push(Violation::EdgeOutOfRange { src, dst });
        } else if src >= dst {
            out.push(Violation::NonTopologicalEdge { src, dst });
        }
    }
    // Incoming-edge coverage; it also implies the final layer is reachable
    // from the input, since src chains strictly decrease to node 0.
    for layer in 1..=g.num_layers.min(g.layers.len()) {
        let has_incoming = g.connections.iter().any(|&(src, dst)| dst == layer && src < dst);
        if !has_incoming {
            out.push(Violation::MissingIncomingEdge { layer });
        }
    }
    out
}

fn validate_cell(space: &CellSpace, g: &CellGenome) -> Vec<Violation> {
    let mut out = Vec::new();
    if g.blocks.len() != space.blocks {
        out.push(Violation::BlockCountMismatch {
            declared: space.blocks,
            actual: g.blocks.len(),
        });
    }
    for (k, block) in g.blocks.iter().enumerate() {
        for input in [block.input_a, block.input_b] {
            if input >= 2 + k {
                out.push(Violation::ForwardReference { block: k + 1, input });
            }
        }
        for op in [block.op_a, block.op_b] {
            if !space.ops.contains(&op) {
                out.push(Violation::ChoiceOutOfSet {
                    dimension: format!("block{}.op", k + 1),
                    value: op.name().to_string(),
                });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_layer_genome() -> LayeredCnnGenome {
        LayeredCnnGenome {
            num_layers: 1,
            layers: vec![LayerParams {
                filters: 32,
                kernel_h: 3,
                kernel_w: 3,
                stride: 1,
                activation: Activation::Relu,
                normalization: Normalization::None,
            }],
            connections: [(0, 1)].into_iter().collect(),
        }
    }

    #[test]
    fn minimal_genome_is_valid() {
        let space = Space::Layered(LayeredSpace::canonical(10));
        assert!(space.validate(&Genome::Layered(one_layer_genome())).is_empty());
    }

    #[test]
    fn non_topological_edge_is_reported() {
        let mut g = one_layer_genome();
        g.num_layers = 3;
        g.layers = vec![g.layers[0]; 3];
        g.connections = [(0, 1), (1, 2), (3, 2), (2, 3)].into_iter().collect();
        let space = Space::Layered(LayeredSpace::canonical(10));
        let violations = space.validate(&Genome::Layered(g));
        assert!(violations.contains(&Violation::NonTopologicalEdge { src: 3, dst: 2 }));
    }

    #[test]
    fn missing_incoming_edge_is_reported_and_repaired() {
        let mut g = one_layer_genome();
        g.num_layers = 2;
        g.layers = vec![g.layers[0]; 2];
        g.connections = [(0, 1)].into_iter().collect();
        let space = Space::Layered(LayeredSpace::canonical(10));
        let violations = space.validate(&Genome::Layered(g.clone()));
        assert_eq!(violations, vec![Violation::MissingIncomingEdge { layer: 2 }]);

        let mut genome = Genome::Layered(g);
        space.repair(&mut genome);
        assert!(space.validate(&genome).is_empty());
        assert!(genome.as_layered().unwrap().connections.contains(&(1, 2)));
    }

    #[test]
    fn cell_forward_reference_is_reported() {
        let block = |a: usize, b: usize| BlockParams {
            input_a: a,
            input_b: b,
            op_a: CellOp::Identity,
            op_b: CellOp::SepConv3x3,
        };
        let g = CellGenome {
            // Block 1 may only reference inputs 0 and 1; index 3 is block 2's
            // output.
            blocks: vec![block(3, 0), block(0, 1), block(0, 1), block(0, 1), block(0, 1)],
            force_concat_input_1: false,
            force_concat_input_2: false,
        };
        let space = Space::Cell(CellSpace::default());
        let violations = space.validate(&Genome::Cell(g));
        assert_eq!(violations, vec![Violation::ForwardReference { block: 1, input: 3 }]);
    }

    #[test]
    fn choice_out_of_set_names_dimension() {
        let mut g = one_layer_genome();
        g.layers[0].filters = 8;
        let space = Space::Layered(LayeredSpace::canonical(10));
        let violations = space.validate(&Genome::Layered(g));
        assert_eq!(
            violations,
            vec![Violation::ChoiceOutOfSet {
                dimension: "layer1.filters".into(),
                value: "8".into()
            }]
        );
    }

    #[test]
    fn unused_block_outputs_tracks_consumption() {
        let block = |a: usize, b: usize| BlockParams {
            input_a: a,
            input_b: b,
            op_a: CellOp::Identity,
            op_b: CellOp::Identity,
        };
        // Block 2 consumes block 1's output (index 2); blocks 2 and 3 are
        // unconsumed.
        let g = CellGenome {
            blocks: vec![block(0, 1), block(2, 0), block(1, 3)],
            force_concat_input_1: true,
            force_concat_input_2: false,
        };
        assert_eq!(g.unused_block_outputs(), vec![2]);
    }
}
