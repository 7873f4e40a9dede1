//! Endostatine, TNP-470 and angiostatine given from day 5 to 10, compared
//! on primary size and metastatic index at day 15.
//!
//! ```text
//! cargo run --release --example three_drugs
//! ```

use std::path::Path;

use angiomet::config::RunConfig;
use angiomet::runner::compare;

fn main() -> angiomet::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let configs = ["endostatine", "tnp470", "angiostatine"]
        .iter()
        .map(|n| Ok((n.to_string(), RunConfig::load(&dir.join(format!("{n}.cfg")))?)))
        .collect::<angiomet::Result<Vec<_>>>()?;
    for (name, cfg) in &configs {
        let s = cfg.aa.as_ref().unwrap().schedule()?;
        println!("{name:<13} e/clr = {:.2}", s.efficacy_ratio());
    }
    let (table, _) = compare(&configs)?;
    print!("{}", table.table());
    println!("lowest final MI first: {}", table.ranking().join(", "));
    Ok(())
}
