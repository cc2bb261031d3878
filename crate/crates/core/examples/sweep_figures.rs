//! Writes every sweep preset as CSV into a directory (default `sweeps/`).

use silverbullet::explorer::{sweep_preset, write_csv, PRESETS};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::path::PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "sweeps".into()));
    std::fs::create_dir_all(&dir)?;
    for preset in PRESETS {
        let rows = sweep_preset(preset)?;
        let path = dir.join(format!("{preset}.csv"));
        write_csv(&rows, std::fs::File::create(&path)?)?;
        let valid = rows.iter().filter(|r| r.valid).count();
        println!("{preset}: {} rows ({valid} valid) -> {}", rows.len(), path.display());
    }
    Ok(())
}
