//! Coarsens a kNN graph, lays a signal out along the clustering tree and
//! max-pools it level by level.
//!
//! `cargo run --release --example coarsen_pool -- [vertices] [levels]`

use ndarray::Array3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rgcn::data::random_geometric_graph;
use rgcn::graph::coarsen;
use rgcn::spectral::{graph_max_pool, SignalBatch};

fn main() -> rgcn::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(50);
    let levels: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(3);
    let g = random_geometric_graph(n, 6, 1)?;
    let map = coarsen(&g, levels, 0);
    for (l, graph) in map.levels.iter().enumerate() {
        let fakes = map.fake_mask(l).iter().filter(|&&f| f).count();
        println!(
            "level {l}: {} vertices, {} edges, padded to {} ({fakes} fake)",
            graph.n(),
            graph.num_edges(),
            map.padded_len(l)
        );
    }

    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let signal: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
    // fake slots hold -inf so they never win a pool
    let laid_out: Vec<f64> = map
        .permute_signal(&signal)
        .into_iter()
        .zip(map.fake_mask(0))
        .map(|(v, fake)| if fake { f64::NEG_INFINITY } else { v })
        .collect();
    let mut x = SignalBatch::new(Array3::from_shape_vec((1, laid_out.len(), 1), laid_out).expect("shape"));
    for l in 1..=levels {
        x = graph_max_pool(&x, 2)?;
        let max = x.data.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        println!("after pool {l}: {} slots, max {max:.3}", x.n());
    }
    let back = map.unpermute_signal(&map.permute_signal(&signal));
    println!("permute/unpermute round trip exact: {}", back == signal);
    Ok(())
}
