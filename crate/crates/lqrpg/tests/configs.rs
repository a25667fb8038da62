//! The shipped system files must stay in sync with the built-in benchmarks.
//! Run with `LQRPG_BLESS=1` to regenerate them.

use std::path::PathBuf;

use lqrpg::benchmarks::Benchmark;
use lqrpg::config::SystemConfig;

fn path(b: Benchmark) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(format!("{}.toml", b.name()))
}

#[test]
fn shipped_configs_match_the_benchmarks() {
    let bless = std::env::var_os("LQRPG_BLESS").is_some();
    for b in Benchmark::ALL {
        let expected = b.config().to_toml();
        if bless {
            std::fs::write(path(b), &expected).unwrap();
        }
        let on_disk = std::fs::read_to_string(path(b)).unwrap();
        assert_eq!(on_disk, expected, "{} is stale", path(b).display());
        assert_eq!(SystemConfig::from_toml_str(&on_disk).unwrap(), b.config());
    }
}
