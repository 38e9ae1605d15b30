//! Centralised optimum for the 39-bus case after four 1 pu load increases.
use std::path::PathBuf;

use alc::olc::{solve_olc, DEFAULT_TOLERANCE};
use alc::scenario::load_case;

fn main() -> alc::Result<()> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/ieee39.json");
    let mut prob = load_case(&path)?;
    for id in [1, 6, 9, 16] {
        let i = prob.network.index_of(id).expect("bus exists");
        prob.p_in[i] -= 1.0;
    }
    let sol = solve_olc(&prob, DEFAULT_TOLERANCE)?;
    println!("optimal cost {:.6}, KKT residual {:.2e}", sol.objective, sol.kkt.max());
    for (b, d) in prob.network.buses().iter().zip(&sol.d) {
        println!("bus {:>2} theta {:>3}: d = {:+.4}", b.id, b.theta.unwrap_or(0.0), d);
    }
    Ok(())
}
