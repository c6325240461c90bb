use nalgebra::{DMatrix, DVector};
use petgraph::algo::{condensation, tarjan_scc};
use petgraph::graph::DiGraph;
use petgraph::Direction;

use super::{EngineError, Generator, DEFAULT_STATE_CAP};

/// Closed communicating classes of the chain, each sorted.
fn closed_classes(gen: &Generator) -> Vec<Vec<usize>> {
    let mut graph = DiGraph::<usize, ()>::new();
    let nodes: Vec<_> = (0..gen.len()).map(|i| graph.add_node(i)).collect();
    for (i, &from) in nodes.iter().enumerate() {
        for &(j, _) in gen.row(i) {
            graph.add_edge(from, nodes[j], ());
        }
    }
    if tarjan_scc(&graph).len() == 1 {
        return vec![(0..gen.len()).collect()];
    }
    let dag = condensation(graph, true);
    let mut closed: Vec<Vec<usize>> = dag
        .node_indices()
        .filter(|&c| dag.neighbors_directed(c, Direction::Outgoing).next().is_none())
        .map(|c| {
            let mut block = dag[c].clone();
            block.sort_unstable();
            block
        })
        .collect();
    closed.sort();
    closed
}

/// Unique stationary law of a finite chain with a single closed class.
///
/// Solves `pi G = 0`, `sum(pi) = 1` by dense LU. Transient states get zero
/// mass. Fails on chains with more than one closed class or more than
/// [`DEFAULT_STATE_CAP`] states.
pub fn stationary_distribution(gen: &Generator) -> Result<Vec<f64>, EngineError> {
    let n = gen.len();
    if n == 0 {
        return Err(EngineError::InvalidArgument("empty generator".into()));
    }
    if n > DEFAULT_STATE_CAP {
        return Err(EngineError::StateSpaceTooLarge {
            states: n,
            cap: DEFAULT_STATE_CAP,
        });
    }
    gen.validate()?;
    let classes = closed_classes(gen);
    if classes.len() > 1 {
        return Err(EngineError::Reducible { blocks: classes });
    }

    let mut m: DMatrix<f64> = gen.to_dense().transpose();
    for j in 0..n {
        m[(n - 1, j)] = 1.0;
    }
    let mut rhs = DVector::zeros(n);
    rhs[n - 1] = 1.0;
    let pi = m
        .lu()
        .solve(&rhs)
        .ok_or_else(|| EngineError::Singular("stationary system".into()))?;
    let mut pi: Vec<f64> = pi
        .iter()
        .map(|&x| if x < 0.0 && x > -1e-14 { 0.0 } else { x })
        .collect();

    let mut residual = vec![0.0; n];
    gen.left_mul(&pi, &mut residual);
    let worst = residual.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    let tol = 1e-10 * gen.max_exit_rate().max(1.0);
    if worst > tol || pi.iter().any(|&x| x < 0.0) {
        return Err(EngineError::Singular(format!("stationary residual {worst:e}")));
    }
    let total: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|x| *x /= total);
    Ok(pi)
}
