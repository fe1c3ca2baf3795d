//! Scans a small sync file end to end: biallelic reduction, adapted CMH,
//! Benjamini-Hochberg adjustment, results table.
//!
//! Run with `cargo run --example sync_scan`.

use std::io::Cursor;

use driftscan::output::read_results;
use driftscan::pipeline::{scan, ScanConfig};
use driftscan::sync::Manifest;

const SYNC: &str = "\
2L\t1001\tA\t40:0:35:0:0:0\t22:0:55:0:0:0\t38:0:40:0:0:0\t20:0:61:0:0:0
2L\t1002\tC\t0:0:70:9:0:0\t0:0:72:8:0:0\t0:0:66:12:0:0\t0:0:70:10:0:0
2L\t1003\tG\t0:3:0:77:0:0\t0:41:0:39:0:0\t0:2:0:80:0:0\t0:37:0:41:0:0
2L\t1004\tT\t0:0:0:0:80:0\t0:0:0:0:75:0\t0:0:0:0:81:0\t0:0:0:0:79:0
";

const MANIFEST: &str = "\
replicate,generation,model
1,0,two_step:1000
1,60,two_step:1000
2,0,two_step:1000
2,60,two_step:1000
";

fn main() -> driftscan::Result<()> {
    let manifest = Manifest::parse(MANIFEST)?;
    let cfg = ScanConfig::for_manifest(&manifest, Some(300));
    let mut table = Vec::new();
    let mut log = Vec::new();
    let summary = scan(Cursor::new(SYNC), &manifest, &cfg, &mut table, &mut log)?;

    print!("{}", String::from_utf8_lossy(&table));
    eprint!("{}", String::from_utf8_lossy(&log));
    println!("{summary:?}");
    let rows = read_results(Cursor::new(&table))?;
    println!("{} rows read back", rows.len());
    Ok(())
}
