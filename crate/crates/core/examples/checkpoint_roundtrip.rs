//! Saves a team of actors, reads the file back, and confirms the restored
//! policies act identically.

use pic::cli::{load_checkpoint, load_into, save_checkpoint};
use pic::learner::Actor;
use pic::numerics::Matrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> pic::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let team: Vec<Actor> = (0..3).map(|_| Actor::new(14, 5, &[128, 128], &mut rng)).collect();
    let names: Vec<String> = (0..team.len()).map(|i| format!("agent{i}")).collect();
    let path = std::env::temp_dir().join("pic_roundtrip.ckpt");
    let sets: Vec<_> = names.iter().map(String::as_str).zip(team.iter().map(|a| &a.params)).collect();
    save_checkpoint(&path, &sets)?;

    for t in load_checkpoint(&path)? {
        println!("{:<24} {:?}", t.name, t.value.dim());
    }

    let mut restored: Vec<Actor> = (0..3).map(|_| Actor::new(14, 5, &[128, 128], &mut rng)).collect();
    let mut slots: Vec<_> = names
        .iter()
        .map(String::as_str)
        .zip(restored.iter_mut().map(|a| &mut a.params))
        .collect();
    load_into(&path, &mut slots)?;

    let obs = Matrix::from_shape_fn((4, 14), |(r, c)| ((r * 14 + c) as f64).sin());
    for (a, b) in team.iter().zip(&restored) {
        assert_eq!(a.act(&obs)?, b.act(&obs)?);
    }
    println!("{} bytes, {} actors restored bit-for-bit", std::fs::metadata(&path).map_or(0, |m| m.len()), restored.len());
    std::fs::remove_file(&path).ok();
    Ok(())
}
