//! Counter-table layout and SRAM cost across subbank sizes.

use silverbullet::analytic;
use silverbullet::{MechanismConfig, Scheme};

fn main() {
    println!("{:>6} {:>6} {:>5} {:>5} {:>5} {:>6} {:>10}", "S_SB", "N_SB", "frac", "pend", "index", "entry", "bytes");
    for exp in 3..=12 {
        let config = MechanismConfig::new(64, 1 << exp, 65536, Scheme::ExtendedCounterRegion);
        let g = analytic::table_geometry(&config, 8);
        println!(
            "{:>6} {:>6} {:>5} {:>5} {:>5} {:>6} {:>10.1}",
            config.subbank_rows, config.n_subbanks, g.frac_bits, g.pending_bits, g.index_bits, g.entry_bits, g.table_bytes
        );
    }
}
