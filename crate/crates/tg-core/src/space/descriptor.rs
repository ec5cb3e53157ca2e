//! Dimension-level view of a space: an ordered list of categorical
//! dimensions, some conditionally active, shared by the TPE and controller
//! drivers so neither needs space-specific sampling code.

use super::{
    Activation, BlockParams, CellGenome, CellSpace, Connectivity, Genome, LayerParams,
    LayeredCnnGenome, LayeredSpace, Normalization, Space,
};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;

/// Value of one categorical choice, for reporting and config round-trips.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ChoiceValue {
    Int(i64),
    Bool(bool),
    Str(String),
}

impl fmt::Display for ChoiceValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChoiceValue::Int(v) => write!(f, "{v}"),
            ChoiceValue::Bool(v) => write!(f, "{v}"),
            ChoiceValue::Str(v) => write!(f, "{v}"),
        }
    }
}

/// Activation condition: the dimension is active iff its parent dimension is
/// active and the parent's assigned choice index is in `active_when`.
/// Parents always have a smaller dimension index, so conditions form a tree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActivationRule {
    pub parent: usize,
    pub active_when: BTreeSet<usize>,
}

/// One categorical dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dimension {
    pub name: String,
    pub choices: Vec<ChoiceValue>,
    pub condition: Option<ActivationRule>,
}

/// A genome encoded as one choice index per dimension; `None` marks an
/// inactive dimension.
pub type EncodedGenome = Vec<Option<usize>>;

#[derive(Debug, thiserror::Error)]
pub enum SpaceError {
    #[error("space cardinality {cardinality} exceeds enumeration cap {cap}")]
    CapExceeded { cardinality: u128, cap: u128 },
    #[error("space is empty")]
    EmptySpace,
    #[error("vector length {got} does not match {expected} dimensions")]
    VectorLength { got: usize, expected: usize },
    #[error("missing value for active dimension {name}")]
    MissingActiveDimension { name: String },
    #[error("value assigned to inactive dimension {name}")]
    InactiveDimensionAssigned { name: String },
    #[error("choice index {index} out of range for dimension {name}")]
    ChoiceIndexOutOfRange { name: String, index: usize },
    #[error("value {value} for dimension {name} is not in the declared choice set")]
    ValueNotInChoiceSet { name: String, value: String },
    #[error("genome kind does not match space")]
    WrongGenomeKind,
    #[error("genome file: {0}")]
    Io(#[from] std::io::Error),
    #[error("genome line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Ordered dimension list for a space.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceDescriptor {
    dimensions: Vec<Dimension>,
}

impl SpaceDescriptor {
    fn new(dimensions: Vec<Dimension>) -> Self {
        let mut seen = BTreeSet::new();
        for (i, dim) in dimensions.iter().enumerate() {
            assert!(seen.insert(dim.name.clone()), "duplicate dimension name {}", dim.name);
            assert!(!dim.choices.is_empty(), "dimension {} has no choices", dim.name);
            if let Some(rule) = &dim.condition {
                assert!(rule.parent < i, "condition of {} must reference an earlier dimension", dim.name);
            }
        }
        SpaceDescriptor { dimensions }
    }

    pub fn dimensions(&self) -> &[Dimension] {
        &self.dimensions
    }

    pub fn len(&self) -> usize {
        self.dimensions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dimensions.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.dimensions.iter().position(|d| d.name == name)
    }

    /// Whether dimension `dim` is active under the earlier assignments in
    /// `vector`.
    pub fn is_active(&self, vector: &EncodedGenome, dim: usize) -> bool {
        match &self.dimensions[dim].condition {
            None => true,
            Some(rule) => match vector[rule.parent] {
                Some(choice) => rule.active_when.contains(&choice),
                None => false,
            },
        }
    }

    /// Checks structural consistency of an encoded vector: correct length,
    /// every active dimension assigned an in-range index, every inactive
    /// dimension unassigned.
    pub fn check_vector(&self, vector: &EncodedGenome) -> Result<(), SpaceError> {
        if vector.len() != self.dimensions.len() {
            return Err(SpaceError::VectorLength {
                got: vector.len(),
                expected: self.dimensions.len(),
            });
        }
        for (i, dim) in self.dimensions.iter().enumerate() {
            let active = self.is_active(vector, i);
            match (active, vector[i]) {
                (true, None) => {
                    return Err(SpaceError::MissingActiveDimension { name: dim.name.clone() })
                }
                (false, Some(_)) => {
                    return Err(SpaceError::InactiveDimensionAssigned { name: dim.name.clone() })
                }
                (true, Some(c)) if c >= dim.choices.len() => {
                    return Err(SpaceError::ChoiceIndexOutOfRange { name: dim.name.clone(), index: c })
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Draws every active dimension uniformly, walking dimensions in tree
    /// order. Deterministic for a given RNG state.
    pub fn sample_vector<R: Rng>(&self, rng: &mut R) -> EncodedGenome {
        let mut vector: EncodedGenome = Vec::with_capacity(self.dimensions.len());
        for i in 0..self.dimensions.len() {
            if self.is_active(&vector_with_len(&vector, self.dimensions.len()), i) {
                let n = self.dimensions[i].choices.len();
                vector.push(Some(rng.random_range(0..n)));
            } else {
                vector.push(None);
            }
        }
        vector
    }

    /// Number of distinct assignments, saturating at `u128::MAX`. Walks the
    /// conditional tree by enumerating assignments of condition parents.
    pub fn cardinality(&self) -> u128 {
        // Dimensions that gate others must be enumerated explicitly; free
        // dimensions multiply in directly.
        fn count(desc: &SpaceDescriptor, vector: &mut EncodedGenome, dim: usize) -> u128 {
            if dim == desc.dimensions.len() {
                return 1;
            }
            let is_parent = desc
                .dimensions
                .iter()
                .any(|d| d.condition.as_ref().is_some_and(|r| r.parent == dim));
            if !desc.is_active(vector, dim) {
                vector[dim] = None;
                return count(desc, vector, dim + 1);
            }
            if !is_parent {
                let rest = count(desc, vector, dim + 1);
                return rest.saturating_mul(desc.dimensions[dim].choices.len() as u128);
            }
            let mut total: u128 = 0;
            for choice in 0..desc.dimensions[dim].choices.len() {
                vector[dim] = Some(choice);
                total = total.saturating_add(count(desc, vector, dim + 1));
            }
            vector[dim] = None;
            total
        }
        let mut vector = vec![None; self.dimensions.len()];
        count(self, &mut vector, 0)
    }

    /// Exhaustive, duplicate-free, deterministic (lexicographic) enumeration
    /// of encoded vectors.
    pub fn enumerate_vectors(&self) -> EnumerateVectors<'_> {
        EnumerateVectors { desc: self, current: None, done: self.dimensions.is_empty() }
    }
}

fn vector_with_len(prefix: &EncodedGenome, len: usize) -> EncodedGenome {
    let mut v = prefix.clone();
    v.resize(len, None);
    v
}

/// Odometer over encoded vectors in lexicographic dimension order.
pub struct EnumerateVectors<'a> {
    desc: &'a SpaceDescriptor,
    current: Option<EncodedGenome>,
    done: bool,
}

impl EnumerateVectors<'_> {
    fn first(&self) -> EncodedGenome {
        let mut vector: EncodedGenome = Vec::with_capacity(self.desc.len());
        for i in 0..self.desc.len() {
            let padded = vector_with_len(&vector, self.desc.len());
            vector.push(if self.desc.is_active(&padded, i) { Some(0) } else { None });
        }
        vector
    }

    fn advance(&self, vector: &mut EncodedGenome) -> bool {
        for i in (0..self.desc.len()).rev() {
            let Some(choice) = vector[i] else { continue };
            if choice + 1 < self.desc.dimensions[i].choices.len() {
                vector[i] = Some(choice + 1);
                // Recompute activity for all later dimensions.
                for j in i + 1..self.desc.len() {
                    vector[j] = if self.desc.is_active(vector, j) { Some(0) } else { None };
                }
                return true;
            }
        }
        false
    }
}

impl Iterator for EnumerateVectors<'_> {
    type Item = EncodedGenome;

    fn next(&mut self) -> Option<EncodedGenome> {
        if self.done {
            return None;
        }
        match self.current.take() {
            None => {
                let first = self.first();
                self.current = Some(first.clone());
                Some(first)
            }
            Some(vector) => {
                let mut next = vector;
                if self.advance(&mut next) {
                    self.current = Some(next.clone());
                    Some(next)
                } else {
                    self.done = true;
                    None
                }
            }
        }
    }
}

pub const DEFAULT_ENUMERATION_CAP: u128 = 1_000_000;

const LAYER_DIM_NAMES: [&str; 6] =
    ["filters", "kernel_h", "kernel_w", "stride", "activation", "normalization"];

impl Space {
    /// The ordered dimension list for this space.
    pub fn descriptor(&self) -> SpaceDescriptor {
        match self {
            Space::Layered(space) => layered_descriptor(space),
            Space::Cell(space) => cell_descriptor(space),
        }
    }

    /// Encodes a genome as one choice index per dimension. Fails when a field
    /// value is not in the declared choice set.
    pub fn encode(&self, genome: &Genome) -> Result<EncodedGenome, SpaceError> {
        match (self, genome) {
            (Space::Layered(space), Genome::Layered(g)) => encode_layered(space, g),
            (Space::Cell(space), Genome::Cell(g)) => encode_cell(space, g),
            _ => Err(SpaceError::WrongGenomeKind),
        }
    }

    /// Inverse of `encode`. The vector must assign exactly the active
    /// dimensions.
    pub fn decode(&self, vector: &EncodedGenome) -> Result<Genome, SpaceError> {
        let desc = self.descriptor();
        desc.check_vector(vector)?;
        match self {
            Space::Layered(space) => Ok(Genome::Layered(decode_layered(space, &desc, vector))),
            Space::Cell(space) => Ok(Genome::Cell(decode_cell(space, vector))),
        }
    }

    /// Uniform draw over the dimension tree, repaired to a valid genome.
    /// Deterministic given the seed.
    pub fn sample_uniform(&self, seed: u64) -> Genome {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        self.sample_uniform_with(&mut rng)
    }

    /// As `sample_uniform` but drawing from a caller-owned RNG stream.
    pub fn sample_uniform_with<R: Rng>(&self, rng: &mut R) -> Genome {
        let desc = self.descriptor();
        let vector = desc.sample_vector(rng);
        let mut genome = self.decode(&vector).expect("sampled vector is well-formed");
        self.repair(&mut genome);
        debug_assert!(self.validate(&genome).is_empty());
        genome
    }

    /// Total number of genomes, saturating at `u128::MAX`.
    pub fn cardinality(&self) -> u128 {
        self.descriptor().cardinality()
    }

    /// Exhaustive deterministic enumeration, refused when the cardinality
    /// exceeds `cap`.
    pub fn enumerate(&self, cap: u128) -> Result<impl Iterator<Item = Genome> + '_, SpaceError> {
        let cardinality = self.cardinality();
        if cardinality > cap {
            return Err(SpaceError::CapExceeded { cardinality, cap });
        }
        if cardinality == 0 {
            return Err(SpaceError::EmptySpace);
        }
        let desc = self.descriptor();
        Ok(EnumerateOwned { space: self, desc, state: None, done: false })
    }
}

/// Owning enumeration iterator (holds its descriptor).
struct EnumerateOwned<'a> {
    space: &'a Space,
    desc: SpaceDescriptor,
    state: Option<EncodedGenome>,
    done: bool,
}

impl Iterator for EnumerateOwned<'_> {
    type Item = Genome;

    fn next(&mut self) -> Option<Genome> {
        if self.done {
            return None;
        }
        let vector = match &self.state {
            None => {
                let e = EnumerateVectors { desc: &self.desc, current: None, done: false };
                let first = e.first();
                self.state = Some(first.clone());
                first
            }
            Some(current) => {
                let e = EnumerateVectors { desc: &self.desc, current: None, done: false };
                let mut next = current.clone();
                if e.advance(&mut next) {
                    self.state = Some(next.clone());
                    next
                } else {
                    self.done = true;
                    return None;
                }
            }
        };
        let mut genome = self.space.decode(&vector).expect("enumerated vector is well-formed");
        self.space.repair(&mut genome);
        Some(genome)
    }
}

fn layered_descriptor(space: &LayeredSpace) -> SpaceDescriptor {
    let mut dims = Vec::new();
    dims.push(Dimension {
        name: "num_layers".into(),
        choices: (1..=space.max_layers as i64).map(ChoiceValue::Int).collect(),
        condition: None,
    });
    for layer in 1..=space.max_layers {
        // Active iff num_layers >= layer, i.e. parent choice index >= layer-1.
        let rule = ActivationRule {
            parent: 0,
            active_when: (layer - 1..space.max_layers).collect(),
        };
        let int_choices = |values: &[u32]| values.iter().map(|&v| ChoiceValue::Int(v as i64)).collect();
        let choice_sets: [Vec<ChoiceValue>; 6] = [
            int_choices(&space.filters),
            int_choices(&space.kernel_h),
            int_choices(&space.kernel_w),
            int_choices(&space.strides),
            space
                .activations
                .iter()
                .map(|a| ChoiceValue::Str(format!("{a:?}").to_lowercase()))
                .collect(),
            space
                .normalizations
                .iter()
                .map(|n| ChoiceValue::Str(format!("{n:?}").to_lowercase()))
                .collect(),
        ];
        for (name, choices) in LAYER_DIM_NAMES.iter().zip(choice_sets) {
            dims.push(Dimension {
                name: format!("layer{layer}.{name}"),
                choices,
                condition: Some(rule.clone()),
            });
        }
    }
    if space.connectivity == Connectivity::Searched {
        for dst in 1..=space.max_layers {
            for src in 0..dst {
                dims.push(Dimension {
                    name: format!("conn.{src}.{dst}"),
                    choices: vec![ChoiceValue::Bool(false), ChoiceValue::Bool(true)],
                    condition: Some(ActivationRule {
                        parent: 0,
                        active_when: (dst - 1..space.max_layers).collect(),
                    }),
                });
            }
        }
    }
    SpaceDescriptor::new(dims)
}

fn cell_descriptor(space: &CellSpace) -> SpaceDescriptor {
    let mut dims = Vec::new();
    let op_choices: Vec<ChoiceValue> =
        space.ops.iter().map(|op| ChoiceValue::Str(op.name().into())).collect();
    for k in 0..space.blocks {
        let input_choices: Vec<ChoiceValue> =
            (0..2 + k as i64).map(ChoiceValue::Int).collect();
        dims.push(Dimension {
            name: format!("block{}.input_a", k + 1),
            choices: input_choices.clone(),
            condition: None,
        });
        dims.push(Dimension {
            name: format!("block{}.input_b", k + 1),
            choices: input_choices,
            condition: None,
        });
        dims.push(Dimension {
            name: format!("block{}.op_a", k + 1),
            choices: op_choices.clone(),
            condition: None,
        });
        dims.push(Dimension {
            name: format!("block{}.op_b", k + 1),
            choices: op_choices.clone(),
            condition: None,
        });
    }
    for name in ["force_concat_input_1", "force_concat_input_2"] {
        dims.push(Dimension {
            name: name.into(),
            choices: vec![ChoiceValue::Bool(false), ChoiceValue::Bool(true)],
            condition: None,
        });
    }
    SpaceDescriptor::new(dims)
}

fn position_of<T: PartialEq + fmt::Display>(
    set: &[T],
    value: &T,
    name: &str,
) -> Result<usize, SpaceError> {
    set.iter().position(|v| v == value).ok_or_else(|| SpaceError::ValueNotInChoiceSet {
        name: name.to_string(),
        value: value.to_string(),
    })
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", format!("{self:?}").to_lowercase())
    }
}

impl fmt::Display for Normalization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", format!("{self:?}").to_lowercase())
    }
}

fn encode_layered(space: &LayeredSpace, g: &LayeredCnnGenome) -> Result<EncodedGenome, SpaceError> {
    if g.num_layers < 1 || g.num_layers > space.max_layers || g.layers.len() != g.num_layers {
        return Err(SpaceError::ValueNotInChoiceSet {
            name: "num_layers".into(),
            value: g.num_layers.to_string(),
        });
    }
    let mut vector: EncodedGenome = Vec::new();
    vector.push(Some(g.num_layers - 1));
    for layer in 1..=space.max_layers {
        if layer > g.num_layers {
            vector.extend(std::iter::repeat(None).take(6));
            continue;
        }
        let p = &g.layers[layer - 1];
        let name = |field: &str| format!("layer{layer}.{field}");
        vector.push(Some(position_of(&space.filters, &p.filters, &name("filters"))?));
        vector.push(Some(position_of(&space.kernel_h, &p.kernel_h, &name("kernel_h"))?));
        vector.push(Some(position_of(&space.kernel_w, &p.kernel_w, &name("kernel_w"))?));
        vector.push(Some(position_of(&space.strides, &p.stride, &name("stride"))?));
        vector.push(Some(position_of(&space.activations, &p.activation, &name("activation"))?));
        vector.push(Some(position_of(
            &space.normalizations,
            &p.normalization,
            &name("normalization"),
        )?));
    }
    if space.connectivity == Connectivity::Searched {
        for dst in 1..=space.max_layers {
            for src in 0..dst {
                vector.push(if dst <= g.num_layers {
                    Some(usize::from(g.connections.contains(&(src, dst))))
                } else {
                    None
                });
            }
        }
    }
    Ok(vector)
}

fn decode_layered(
    space: &LayeredSpace,
    desc: &SpaceDescriptor,
    vector: &EncodedGenome,
) -> LayeredCnnGenome {
    let num_layers = vector[0].expect("checked") + 1;
    let mut layers = Vec::with_capacity(num_layers);
    for layer in 1..=num_layers {
        let base = 1 + (layer - 1) * 6;
        let at = |off: usize| vector[base + off].expect("checked active dimension");
        layers.push(LayerParams {
            filters: space.filters[at(0)],
            kernel_h: space.kernel_h[at(1)],
            kernel_w: space.kernel_w[at(2)],
            stride: space.strides[at(3)],
            activation: space.activations[at(4)],
            normalization: space.normalizations[at(5)],
        });
    }
    let mut connections = BTreeSet::new();
    match space.connectivity {
        Connectivity::Chain => {
            for layer in 1..=num_layers {
                connections.insert((layer - 1, layer));
            }
        }
        Connectivity::Searched => {
            let mut dim = 1 + space.max_layers * 6;
            for dst in 1..=space.max_layers {
                for src in 0..dst {
                    debug_assert_eq!(desc.dimensions()[dim].name, format!("conn.{src}.{dst}"));
                    if let Some(present) = vector[dim] {
                        if present == 1 {
                            connections.insert((src, dst));
                        }
                    }
                    dim += 1;
                }
            }
        }
    }
    LayeredCnnGenome { num_layers, layers, connections }
}

fn encode_cell(space: &CellSpace, g: &CellGenome) -> Result<EncodedGenome, SpaceError> {
    if g.blocks.len() != space.blocks {
        return Err(SpaceError::ValueNotInChoiceSet {
            name: "blocks".into(),
            value: g.blocks.len().to_string(),
        });
    }
    let mut vector: EncodedGenome = Vec::new();
    for (k, block) in g.blocks.iter().enumerate() {
        let name = |field: &str| format!("block{}.{field}", k + 1);
        for (input, field) in [(block.input_a, "input_a"), (block.input_b, "input_b")] {
            if input >= 2 + k {
                return Err(SpaceError::ValueNotInChoiceSet {
                    name: name(field),
                    value: input.to_string(),
                });
            }
            vector.push(Some(input));
        }
        for (op, field) in [(block.op_a, "op_a"), (block.op_b, "op_b")] {
            vector.push(Some(position_of(&space.ops, &op, &name(field))?));
        }
    }
    vector.push(Some(usize::from(g.force_concat_input_1)));
    vector.push(Some(usize::from(g.force_concat_input_2)));
    Ok(vector)
}

fn decode_cell(space: &CellSpace, vector: &EncodedGenome) -> CellGenome {
    let mut blocks = Vec::with_capacity(space.blocks);
    for k in 0..space.blocks {
        let base = k * 4;
        let at = |off: usize| vector[base + off].expect("checked active dimension");
        blocks.push(BlockParams {
            input_a: at(0),
            input_b: at(1),
            op_a: space.ops[at(2)],
            op_b: space.ops[at(3)],
        });
    }
    let base = space.blocks * 4;
    CellGenome {
        blocks,
        force_concat_input_1: vector[base] == Some(1),
        force_concat_input_2: vector[base + 1] == Some(1),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_binary_dim_space() -> Space {
        // layers in {1,2}, two binary per-layer dimensions, chain wiring:
        // cardinality 4 + 16 = 20.
        Space::Layered(LayeredSpace {
            max_layers: 2,
            filters: vec![32, 64],
            kernel_h: vec![1, 3],
            kernel_w: vec![3],
            strides: vec![1],
            activations: vec![Activation::Relu],
            normalizations: vec![Normalization::None],
            connectivity: Connectivity::Chain,
        })
    }

    #[test]
    fn cardinality_counts_by_hand() {
        assert_eq!(two_binary_dim_space().cardinality(), 20);
        assert_eq!(Space::micro().cardinality(), 4368);
        // Cell space: prod_k ((2+k)^2 * 64) * 4 over 5 blocks.
        let expected: u128 =
            (0..5u32).map(|k| ((2 + k) as u128).pow(2) * 64).product::<u128>() * 4;
        assert_eq!(Space::Cell(CellSpace::default()).cardinality(), expected);
    }

    #[test]
    fn enumerate_single_binary_space() {
        let space = Space::Layered(LayeredSpace {
            max_layers: 1,
            filters: vec![32, 64],
            kernel_h: vec![3],
            kernel_w: vec![3],
            strides: vec![1],
            activations: vec![Activation::Relu],
            normalizations: vec![Normalization::None],
            connectivity: Connectivity::Chain,
        });
        let genomes: Vec<Genome> = space.enumerate(10).unwrap().collect();
        assert_eq!(genomes.len(), 2);
        let filters: Vec<u32> =
            genomes.iter().map(|g| g.as_layered().unwrap().layers[0].filters).collect();
        assert_eq!(filters, vec![32, 64]);
        for g in &genomes {
            assert!(g.as_layered().unwrap().connections.contains(&(0, 1)));
        }
    }

    #[test]
    fn enumerate_counts_match_cardinality_and_are_unique() {
        let space = two_binary_dim_space();
        let genomes: Vec<Genome> = space.enumerate(100).unwrap().collect();
        assert_eq!(genomes.len(), 20);
        let unique: std::collections::HashSet<_> = genomes.iter().collect();
        assert_eq!(unique.len(), 20);

        let micro = Space::micro();
        assert_eq!(micro.enumerate(10_000).unwrap().count() as u128, micro.cardinality());
    }

    #[test]
    fn enumerate_cap_error_carries_cardinality() {
        let space = two_binary_dim_space();
        let err = match space.enumerate(10) {
            Ok(_) => panic!("expected cap error"),
            Err(e) => e,
        };
        match err {
            SpaceError::CapExceeded { cardinality, cap } => {
                assert_eq!(cardinality, 20);
                assert_eq!(cap, 10);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn sample_uniform_is_deterministic_and_valid() {
        for space in [
            Space::micro(),
            Space::Layered(LayeredSpace::canonical(10)),
            Space::Cell(CellSpace::default()),
        ] {
            let a = space.sample_uniform(42);
            let b = space.sample_uniform(42);
            assert_eq!(a, b);
            assert!(space.validate(&a).is_empty(), "sample must validate in {space:?}");
            assert_ne!(space.sample_uniform(1), space.sample_uniform(2));
        }
    }

    #[test]
    fn single_genome_space_samples_it() {
        let space = Space::Layered(LayeredSpace {
            max_layers: 1,
            filters: vec![32],
            kernel_h: vec![3],
            kernel_w: vec![3],
            strides: vec![1],
            activations: vec![Activation::Relu],
            normalizations: vec![Normalization::None],
            connectivity: Connectivity::Chain,
        });
        assert_eq!(space.cardinality(), 1);
        let only: Vec<Genome> = space.enumerate(10).unwrap().collect();
        assert_eq!(space.sample_uniform(9), only[0]);
    }

    #[test]
    fn uniform_frequencies_within_binomial_bound() {
        // 10^4 draws from a 2-choice dimension: each frequency within 5 sigma
        // of 0.5 (sigma = sqrt(n/4) = 50 counts).
        let space = two_binary_dim_space();
        let desc = space.descriptor();
        let dim = desc.index_of("layer1.filters").unwrap();
        let mut counts = [0u32; 2];
        for seed in 0..10_000u64 {
            let g = space.sample_uniform(seed);
            let v = space.encode(&g).unwrap();
            counts[v[dim].unwrap()] += 1;
        }
        let sigma = (10_000f64 * 0.25).sqrt();
        for c in counts {
            assert!((c as f64 - 5000.0).abs() < 5.0 * sigma, "counts {counts:?}");
        }
    }

    #[test]
    fn encode_decode_round_trip_random_genomes() {
        for space in [
            Space::micro(),
            Space::Layered(LayeredSpace::canonical(6)),
            Space::Cell(CellSpace::default()),
        ] {
            for seed in 0..100u64 {
                let g = space.sample_uniform(seed);
                let v = space.encode(&g).unwrap();
                assert_eq!(space.decode(&v).unwrap(), g, "round trip failed in {space:?}");
            }
        }
    }

    #[test]
    fn decode_rejects_missing_active_dimension() {
        let space = two_binary_dim_space();
        let desc = space.descriptor();
        let g = space.sample_uniform(3);
        let mut v = space.encode(&g).unwrap();
        // Force a 2-layer genome, then strip layer2.filters.
        v[0] = Some(1);
        for i in 0..desc.len() {
            if desc.is_active(&v, i) && v[i].is_none() {
                v[i] = Some(0);
            }
        }
        let idx = desc.index_of("layer2.filters").unwrap();
        v[idx] = None;
        match space.decode(&v) {
            Err(SpaceError::MissingActiveDimension { name }) => assert_eq!(name, "layer2.filters"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn decode_rejects_inactive_dimension_assignment() {
        let space = two_binary_dim_space();
        let desc = space.descriptor();
        let mut v = vec![None; desc.len()];
        v[0] = Some(0); // one layer
        for i in 0..desc.len() {
            if desc.is_active(&v, i) && v[i].is_none() {
                v[i] = Some(0);
            }
        }
        let idx = desc.index_of("layer2.filters").unwrap();
        v[idx] = Some(0);
        match space.decode(&v) {
            Err(SpaceError::InactiveDimensionAssigned { name }) => {
                assert_eq!(name, "layer2.filters")
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn canonical_space_cardinality_formula() {
        // max 2 layers, searched connectivity: sum over L of 768^L * 2^(L(L+1)/2).
        let space = Space::Layered(LayeredSpace::canonical(2));
        let per_layer = 3u128 * 4 * 4 * 2 * 2 * 2;
        let expected = per_layer * 2 + per_layer * per_layer * 8;
        assert_eq!(space.cardinality(), expected);
    }

    #[test]
    fn round_trip_on_enumerated_micro_space() {
        let space = Space::micro();
        for g in space.enumerate(10_000).unwrap() {
            let v = space.encode(&g).unwrap();
            assert_eq!(space.decode(&v).unwrap(), g);
        }
    }
}
