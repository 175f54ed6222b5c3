//! Sketch shards independently, ship them as bytes and merge them.

use sketchlab::estimators::default_estimate;
use sketchlab::{Seed, Sketch, SketchConfig};

fn main() -> sketchlab::Result<()> {
    let config = SketchConfig::bottom_k(256)?;
    let seed = Seed::from(42);
    // four overlapping shards of one id space
    let shards: Vec<Vec<u8>> = (0..4u64)
        .map(|s| Sketch::of_set(config, seed, (s * 20_000..s * 20_000 + 30_000).map(u64::to_le_bytes)).to_bytes())
        .collect();
    for (i, b) in shards.iter().enumerate() {
        println!("shard {i}: {} bytes", b.len());
    }

    let mut merged = Sketch::empty(config, seed);
    for bytes in &shards {
        merged = merged.merge(&Sketch::from_bytes(bytes)?)?;
    }
    let direct = Sketch::of_set(config, seed, (0..90_000u64).map(u64::to_le_bytes));
    println!("merged == sketch of the union: {}", merged == direct);
    println!("estimate {:.0} for 90000 distinct ids", default_estimate(&merged)?.value);

    let other = Sketch::empty(config, Seed::from(43));
    match merged.merge(&other) {
        Ok(_) => println!("unexpected merge across seeds"),
        Err(e) => println!("merge across seeds rejected: {e}"),
    }
    Ok(())
}
