use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::ward::{Merge, WardTree};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DendrogramFormat {
    Json,
    Newick,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct DendrogramDoc {
    n: usize,
    leaves: Vec<String>,
    merges: Vec<Merge>,
    cross_component_merges: Vec<usize>,
}

fn leaf_names(tree: &WardTree, sample_ids: Option<&[String]>) -> Result<Vec<String>> {
    match sample_ids {
        Some(ids) if ids.len() == tree.n => Ok(ids.to_vec()),
        Some(ids) => Err(Error::DimensionMismatch(format!(
            "{} sample ids for {} leaves",
            ids.len(),
            tree.n
        ))),
        None => Ok((0..tree.n).map(|i| format!("s{i}")).collect()),
    }
}

pub fn export_dendrogram(
    tree: &WardTree,
    sample_ids: Option<&[String]>,
    format: DendrogramFormat,
) -> Result<String> {
    let leaves = leaf_names(tree, sample_ids)?;
    match format {
        DendrogramFormat::Json => {
            let doc = DendrogramDoc {
                n: tree.n,
                leaves,
                merges: tree.merges.clone(),
                cross_component_merges: tree.cross_component.clone(),
            };
            Ok(serde_json::to_string_pretty(&doc)?)
        }
        DendrogramFormat::Newick => Ok(to_newick(tree, &leaves)),
    }
}

/// Rebuilds a tree from its JSON export, returning it with the leaf names.
pub fn parse_dendrogram_json(text: &str) -> Result<(WardTree, Vec<String>)> {
    let doc: DendrogramDoc = serde_json::from_str(text)?;
    if doc.leaves.len() != doc.n {
        return Err(Error::MalformedFile(format!(
            "{} leaf names for n = {}",
            doc.leaves.len(),
            doc.n
        )));
    }
    let tree = WardTree {
        n: doc.n,
        merges: doc.merges,
        cross_component: doc.cross_component_merges,
    };
    tree.validate()?;
    Ok((tree, doc.leaves))
}

fn quote_name(name: &str) -> String {
    let special = |c: char| c.is_whitespace() || "()[]':;,".contains(c);
    if name.is_empty() || name.chars().any(special) {
        format!("'{}'", name.replace('\'', "''"))
    } else {
        name.to_string()
    }
}

/// Rooted binary Newick. A node's height is its merge cost (leaves at 0)
/// and each branch length is parent height minus child height. Constrained
/// trees can have inverted costs, which yields negative lengths.
fn to_newick(tree: &WardTree, leaves: &[String]) -> String {
    let n = tree.n;
    let height = |node: usize| {
        if node < n {
            0.0
        } else {
            tree.merges[node - n].cost
        }
    };
    let root = 2 * n - 2;
    let mut out = String::new();
    // explicit stack: (node, parent height, state)
    enum Step {
        Enter(usize, Option<f64>),
        Between,
        Close(usize, Option<f64>),
    }
    let mut stack = vec![Step::Enter(root, None)];
    while let Some(step) = stack.pop() {
        match step {
            Step::Enter(node, parent) => {
                if node < n {
                    out.push_str(&quote_name(&leaves[node]));
                    if let Some(p) = parent {
                        let _ = write!(out, ":{}", p - height(node));
                    }
                } else {
                    let m = &tree.merges[node - n];
                    let h = height(node);
                    out.push('(');
                    stack.push(Step::Close(node, parent));
                    stack.push(Step::Enter(m.right, Some(h)));
                    stack.push(Step::Between);
                    stack.push(Step::Enter(m.left, Some(h)));
                }
            }
            Step::Between => out.push(','),
            Step::Close(node, parent) => {
                out.push(')');
                if let Some(p) = parent {
                    let _ = write!(out, ":{}", p - height(node));
                }
            }
        }
    }
    out.push(';');
    out
}
