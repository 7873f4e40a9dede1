//! Three ways of giving six 20 mg doses of endostatine, compared on the
//! primary tumor and on the metastases.
//!
//! ```text
//! cargo run --release --example protocols
//! ```

use std::path::Path;

use angiomet::config::RunConfig;
use angiomet::runner::compare;

fn main() -> angiomet::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let configs = ["endostatine", "endostatine_spread", "endostatine_dense"]
        .iter()
        .map(|n| Ok((n.to_string(), RunConfig::load(&dir.join(format!("{n}.cfg")))?)))
        .collect::<angiomet::Result<Vec<_>>>()?;
    for (name, cfg) in &configs {
        println!("{name:<19} doses at {:?}", cfg.aa.as_ref().unwrap().times);
    }
    let (table, _) = compare(&configs)?;
    print!("{}", table.table());
    Ok(())
}
