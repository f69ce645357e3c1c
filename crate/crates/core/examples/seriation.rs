//! Reordering a distance matrix so that similar points sit next to each other.
use embedflow::clustering::{pairwise_distances, DistanceMetric, Linkage};
use embedflow::seriation::{order_greedy, order_linkage, order_nn_heuristic};
use embedflow::Matrix;

fn main() -> anyhow::Result<()> {
    // Points on a line, listed out of order.
    let xs = [7.0, 1.0, 4.0, 0.0, 8.0, 3.0, 5.5];
    let points = Matrix::from_rows(&xs.iter().map(|&x| [x, 0.0]).collect::<Vec<_>>())?;
    let dist = pairwise_distances(&points, DistanceMetric::Euclidean)?;
    let show = |name: &str, order: Vec<usize>| {
        let ordered: Vec<f64> = order.iter().map(|&i| xs[i]).collect();
        println!("{name:<8} {order:?} -> {ordered:?}");
    };
    show("linkage", order_linkage(&dist, Linkage::Average));
    show("nn", order_nn_heuristic(&dist));
    show("greedy", order_greedy(&dist));
    Ok(())
}
