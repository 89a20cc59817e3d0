use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::scalar::Scalar;

/// Per-node fraction of neighbors sharing the node's label. Isolated nodes
/// score 1.0.
pub fn homophily_ratios<T: Scalar>(g: &Graph<T>) -> Result<Vec<f64>> {
    let missing = |v: usize| Error::validation(format!("node {v}"), "homophily needs a label");
    (0..g.num_nodes())
        .map(|i| {
            let own = g.label(i).ok_or_else(|| missing(i))?;
            let nb = g.neighbors(i);
            if nb.is_empty() {
                return Ok(1.0);
            }
            let mut same = 0usize;
            for &j in nb {
                if g.label(j).ok_or_else(|| missing(j))? == own {
                    same += 1;
                }
            }
            Ok(same as f64 / nb.len() as f64)
        })
        .collect()
}

pub fn mean_homophily<T: Scalar>(g: &Graph<T>) -> Result<f64> {
    let h = homophily_ratios(g)?;
    Ok(if h.is_empty() {
        1.0
    } else {
        h.iter().sum::<f64>() / h.len() as f64
    })
}
