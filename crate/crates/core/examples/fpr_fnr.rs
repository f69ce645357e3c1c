//! Per-point false positive / false negative rates of a 2D layout against
//! high-dimensional clusters, grown along the layout's minimum spanning tree.
use embedflow::metrics::{euclidean_distances, fpr_fnr, kruskal_mst, mst_confusion};

fn main() -> anyhow::Result<()> {
    // HD clusters {p0, p1} and {p2, p3}, interleaved on a 2D line.
    let coords = [[0.0, 0.0], [5.0, 0.0], [1.0, 0.0], [6.0, 0.0]];
    let hd_labels = [0, 0, 1, 1];
    let mst = kruskal_mst(&euclidean_distances(&coords))?;
    for e in &mst.edges {
        println!("mst edge {}-{} weight {}", e.u, e.v, e.weight);
    }
    let (fpr, fnr) = fpr_fnr(&hd_labels, &mst)?;
    for (i, c) in mst_confusion(&hd_labels, &mst)?.iter().enumerate() {
        println!("p{i}: {c:?} FPR={:.3} FNR={:.3}", fpr[i], fnr[i]);
    }
    Ok(())
}
