//! `id3 v1` text format: header, then each tree as a preorder node list.
//!
//! ```text
//! id3 v1
//! mode TreeLeaf
//! n_classes 4
//! radices 5 5 3
//! trees 1
//! tree 3
//! internal 0 1 2
//! leaf 4 0 0 0
//! leaf 0 3 0 0
//! ```

use std::fs;
use std::path::Path;

use super::{DecisionTree, Forest, Id3Mode, Node};
use crate::error::{Error, Result};
use crate::util::Lines;

pub fn write_forest(f: &Forest) -> String {
    let join = |v: &[usize]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
    let mut out = String::from("id3 v1\n");
    out.push_str(&format!("mode {}\n", f.mode));
    out.push_str(&format!("n_classes {}\n", f.n_classes));
    out.push_str(&format!("radices {}\n", join(&f.radices)));
    out.push_str(&format!("trees {}\n", f.trees.len()));
    for t in &f.trees {
        out.push_str(&format!("tree {}\n", t.nodes().len()));
        for n in t.nodes() {
            match n {
                Node::Internal { feature, children } => {
                    out.push_str(&format!("internal {feature} {}\n", join(children)))
                }
                Node::Leaf { hist } => out.push_str(&format!("leaf {}\n", join(hist))),
            }
        }
    }
    out
}

pub fn parse_forest(text: &str) -> Result<Forest> {
    let mut lines = Lines::new(text);
    lines.expect_exact("id3 v1")?;
    let mode: Id3Mode = lines.single_str("mode")?.parse()?;
    let n_classes = lines.single_usize("n_classes")?;
    let radices = lines
        .keyed("radices")?
        .iter()
        .map(|t| lines.usize(t))
        .collect::<Result<Vec<_>>>()?;
    let n_trees = lines.single_usize("trees")?;
    if n_trees == 0 || (mode == Id3Mode::TreeLeaf && n_trees != 1) {
        return Err(lines.error("bad tree count for mode"));
    }
    let mut trees = Vec::with_capacity(n_trees);
    for _ in 0..n_trees {
        let n_nodes = lines.single_usize("tree")?;
        let mut nodes = Vec::with_capacity(n_nodes);
        for _ in 0..n_nodes {
            let node = match lines.peek_key() {
                Some("internal") => {
                    let f = lines.keyed("internal")?;
                    let v = f.iter().map(|t| lines.usize(t)).collect::<Result<Vec<_>>>()?;
                    let (&feature, children) = v
                        .split_first()
                        .ok_or_else(|| lines.error("internal node needs a feature"))?;
                    Node::Internal {
                        feature,
                        children: children.to_vec(),
                    }
                }
                Some("leaf") => {
                    let f = lines.keyed("leaf")?;
                    Node::Leaf {
                        hist: f.iter().map(|t| lines.usize(t)).collect::<Result<_>>()?,
                    }
                }
                _ => return Err(lines.error("expected `internal` or `leaf`")),
            };
            nodes.push(node);
        }
        trees.push(DecisionTree::from_nodes(nodes, &radices, n_classes)?);
    }
    lines.expect_end()?;
    Ok(Forest {
        mode,
        n_classes,
        radices,
        trees,
    })
}

pub fn save_forest(path: &Path, f: &Forest) -> Result<()> {
    fs::write(path, write_forest(f)).map_err(|e| Error::io(path, e))
}

pub fn load_forest(path: &Path) -> Result<Forest> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_forest(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::roles::{id3_train, Id3Config};

    #[test]
    fn round_trip_tree_and_forest() {
        let x: Vec<Vec<usize>> = (0..40).map(|i| vec![i % 3, (i / 3) % 2, (i * 7) % 4]).collect();
        let y: Vec<usize> = x.iter().map(|r| (r[0] + r[2]) % 4).collect();
        for cfg in [Id3Config::tree(4), Id3Config::forest(4, 5)] {
            let f = id3_train(&x, &y, &[3, 2, 4], &cfg).unwrap();
            let text = write_forest(&f);
            let back = parse_forest(&text).unwrap();
            assert_eq!(back, f);
            assert_eq!(write_forest(&back), text);
        }
    }

    #[test]
    fn rejects_cycles_and_bad_arity() {
        let bad = "id3 v1\nmode TreeLeaf\nn_classes 2\nradices 2\ntrees 1\ntree 2\ninternal 0 0 1\nleaf 1 0\n";
        assert!(parse_forest(bad).is_err());
        let bad = "id3 v1\nmode TreeLeaf\nn_classes 2\nradices 2\ntrees 1\ntree 2\ninternal 0 1\nleaf 1 0\n";
        assert!(parse_forest(bad).is_err());
    }
}
