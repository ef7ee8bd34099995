//! Array form of a trained tree and its on-disk encoding.
//!
//! File layout, little-endian:
//!
//! ```text
//! magic "ADBT" | version u32 | node_count u32 | name_count u16
//! name_count x (len u16, UTF-8 bytes)          feature selection
//! node_count x (feature u16, threshold f64, left u32, right u32, leaf_class u8)
//! ```
//!
//! `leaf_class` is the class ordinal for a leaf, [`UNKNOWN_CLASS`] for a
//! tied leaf and [`NOT_LEAF`] for an internal node.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use super::{NodeKind, Prediction, Tree};
use crate::features::{Feature, FeatureSelection, FeatureVector};
use crate::graph::io::ByteCursor;
use crate::kernels::Implementation;
use crate::{Error, Result};

pub const MODEL_MAGIC: &[u8; 4] = b"ADBT";
pub const MODEL_VERSION: u32 = 1;
pub const NOT_LEAF: u8 = 255;
pub const UNKNOWN_CLASS: u8 = 254;

#[derive(Debug, Clone, Copy, PartialEq)]
#[repr(C)]
pub struct FlatNode {
    pub threshold: f64,
    pub left: u32,
    pub right: u32,
    pub feature: u16,
    pub leaf_class: u8,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlatTree {
    nodes: Vec<FlatNode>,
    selection: FeatureSelection,
    // selection resolved per node, so lookup skips one indirection
    node_features: Vec<Feature>,
}

impl FlatTree {
    pub fn from_tree(tree: &Tree) -> Self {
        let nodes = tree
            .nodes()
            .iter()
            .map(|node| match node.kind {
                NodeKind::Internal { split, left, right } => FlatNode {
                    threshold: split.threshold,
                    left: left as u32,
                    right: right as u32,
                    feature: split.feature as u16,
                    leaf_class: NOT_LEAF,
                },
                NodeKind::Leaf => FlatNode {
                    threshold: 0.0,
                    left: 0,
                    right: 0,
                    feature: 0,
                    leaf_class: match node.prediction() {
                        Prediction::Known(imp) => imp.ordinal() as u8,
                        Prediction::Unknown => UNKNOWN_CLASS,
                    },
                },
            })
            .collect();
        Self::assemble(nodes, tree.selection().clone())
    }

    /// Builds from raw records after checking that every internal node
    /// points forward to valid children and every leaf class is encodable.
    pub fn from_nodes(nodes: Vec<FlatNode>, selection: FeatureSelection) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::Format("model has no nodes".into()));
        }
        let count = nodes.len();
        for (i, node) in nodes.iter().enumerate() {
            match node.leaf_class {
                NOT_LEAF => {
                    let forward = |c: u32| (c as usize) > i && (c as usize) < count;
                    if !forward(node.left) || !forward(node.right) {
                        return Err(Error::Format(format!("node {i} has invalid children")));
                    }
                    if node.feature as usize >= selection.len() {
                        return Err(Error::Format(format!("node {i} feature out of range")));
                    }
                }
                UNKNOWN_CLASS => {}
                c if (c as usize) < Implementation::COUNT => {}
                c => return Err(Error::Format(format!("node {i} has bad class {c}"))),
            }
        }
        Ok(Self::assemble(nodes, selection))
    }

    fn assemble(nodes: Vec<FlatNode>, selection: FeatureSelection) -> Self {
        let node_features = nodes
            .iter()
            .map(|n| {
                let index = if n.leaf_class == NOT_LEAF { n.feature as usize } else { 0 };
                selection.features()[index]
            })
            .collect();
        FlatTree {
            nodes,
            selection,
            node_features,
        }
    }

    pub fn nodes(&self) -> &[FlatNode] {
        &self.nodes
    }

    pub fn selection(&self) -> &FeatureSelection {
        &self.selection
    }

    #[inline]
    pub fn predict(&self, features: &FeatureVector) -> Prediction {
        let mut i = 0usize;
        loop {
            let node = &self.nodes[i];
            if node.leaf_class != NOT_LEAF {
                return decode_class(node.leaf_class);
            }
            let value = features.get(self.node_features[i]);
            i = if value < node.threshold { node.left } else { node.right } as usize;
        }
    }

    pub fn predict_projected(&self, values: &[f64]) -> Prediction {
        let mut i = 0usize;
        loop {
            let node = &self.nodes[i];
            if node.leaf_class != NOT_LEAF {
                return decode_class(node.leaf_class);
            }
            let value = values[node.feature as usize];
            i = if value < node.threshold { node.left } else { node.right } as usize;
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + self.nodes.len() * 19);
        out.extend_from_slice(MODEL_MAGIC);
        out.extend_from_slice(&MODEL_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.nodes.len() as u32).to_le_bytes());
        out.extend_from_slice(&(self.selection.len() as u16).to_le_bytes());
        for name in self.selection.names() {
            out.extend_from_slice(&(name.len() as u16).to_le_bytes());
            out.extend_from_slice(name.as_bytes());
        }
        for n in &self.nodes {
            out.extend_from_slice(&n.feature.to_le_bytes());
            out.extend_from_slice(&n.threshold.to_le_bytes());
            out.extend_from_slice(&n.left.to_le_bytes());
            out.extend_from_slice(&n.right.to_le_bytes());
            out.push(n.leaf_class);
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut cursor = ByteCursor { bytes, pos: 0 };
        if cursor.take(4)? != MODEL_MAGIC {
            return Err(Error::Format("bad model magic".into()));
        }
        let version = cursor.u32()?;
        if version != MODEL_VERSION {
            return Err(Error::Format(format!("unsupported model version {version}")));
        }
        let node_count = cursor.u32()? as usize;
        let name_count = cursor.u16()? as usize;
        let mut names = Vec::with_capacity(name_count);
        for _ in 0..name_count {
            let len = cursor.u16()? as usize;
            let raw = cursor.take(len)?;
            let name = std::str::from_utf8(raw).map_err(|_| Error::Format("feature name is not UTF-8".into()))?;
            names.push(name.to_string());
        }
        let selection = FeatureSelection::from_names(&names)?;
        let mut nodes = Vec::with_capacity(node_count.min(bytes.len() / 19 + 1));
        for _ in 0..node_count {
            let feature = cursor.u16()?;
            let threshold = cursor.f64()?;
            let left = cursor.u32()?;
            let right = cursor.u32()?;
            let leaf_class = cursor.u8()?;
            nodes.push(FlatNode {
                threshold,
                left,
                right,
                feature,
                leaf_class,
            });
        }
        if cursor.pos != bytes.len() {
            return Err(Error::Format("trailing bytes after model".into()));
        }
        Self::from_nodes(nodes, selection)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        out.write_all(&self.to_bytes())
            .and_then(|_| out.flush())
            .map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let mut bytes = Vec::new();
        File::open(path)
            .and_then(|mut f| f.read_to_end(&mut bytes))
            .map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

#[inline]
fn decode_class(class: u8) -> Prediction {
    match Implementation::from_ordinal(class as usize) {
        Some(imp) => Prediction::Known(imp),
        None => Prediction::Unknown,
    }
}

impl Tree {
    /// Writes the flat encoding of this tree.
    pub fn serialize(&self, path: &Path) -> Result<()> {
        FlatTree::from_tree(self).write(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{CountVariant, KernelId};
    use crate::tree::tests::sample_with;
    use crate::tree::TrainConfig;

    fn small_tree() -> Tree {
        let labels = [
            Implementation::DEFAULT,
            Implementation::new(KernelId::VertexPull, CountVariant::GroupReduce),
            Implementation::new(KernelId::VertexPush, CountVariant::DirectAtomic),
        ];
        let samples: Vec<_> = (0..90)
            .map(|i| sample_with((i * 5 % 91) as f64, 100.0 + (i % 3) as f64 * 50.0, labels[i % 3]))
            .collect();
        Tree::fit(&samples, &FeatureSelection::default_model(), &TrainConfig::default()).unwrap()
    }

    #[test]
    fn flat_matches_tree() {
        let tree = small_tree();
        assert!(tree.node_count() > 1);
        let flat = FlatTree::from_tree(&tree);
        for i in 0..500 {
            let s = sample_with((i % 97) as f64, 80.0 + i as f64, Implementation::DEFAULT);
            assert_eq!(flat.predict(&s.features), tree.predict(&s.features));
        }
    }

    #[test]
    fn byte_round_trip_is_canonical() {
        let flat = FlatTree::from_tree(&small_tree());
        let bytes = flat.to_bytes();
        let back = FlatTree::from_bytes(&bytes).unwrap();
        assert_eq!(back, flat);
        assert_eq!(back.to_bytes(), bytes);
        let node_count = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        assert_eq!(node_count, flat.nodes().len());
    }

    #[test]
    fn rejects_corruption() {
        let bytes = FlatTree::from_tree(&small_tree()).to_bytes();
        assert!(FlatTree::from_bytes(&bytes[..bytes.len() - 3]).is_err());
        let mut bad_magic = bytes.clone();
        bad_magic[1] = b'X';
        assert!(matches!(FlatTree::from_bytes(&bad_magic), Err(Error::Format(_))));
        let mut bad_version = bytes.clone();
        bad_version[4] = 9;
        assert!(FlatTree::from_bytes(&bad_version).is_err());
        let mut trailing = bytes.clone();
        trailing.push(0);
        assert!(FlatTree::from_bytes(&trailing).is_err());
    }

    #[test]
    fn unknown_feature_name_is_rejected() {
        let flat = FlatTree::from_tree(&small_tree());
        let mut bytes = flat.to_bytes();
        // first name starts after the 14-byte header and its 2-byte length
        bytes[16] = b'X';
        assert!(matches!(FlatTree::from_bytes(&bytes), Err(Error::UnknownFeature(_))));
    }

    #[test]
    fn backward_child_is_rejected() {
        let sel = FeatureSelection::all();
        let nodes = vec![
            FlatNode { threshold: 1.0, left: 0, right: 1, feature: 0, leaf_class: NOT_LEAF },
            FlatNode { threshold: 0.0, left: 0, right: 0, feature: 0, leaf_class: 3 },
        ];
        assert!(FlatTree::from_nodes(nodes, sel.clone()).is_err());
        let leaf = vec![FlatNode { threshold: 0.0, left: 0, right: 0, feature: 0, leaf_class: 200 }];
        assert!(FlatTree::from_nodes(leaf, sel).is_err());
    }
}
