#![no_main]

use fraclat::cli::config::{Command, RunConfig};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(cfg) = RunConfig::parse(text) else {
        return;
    };
    for cmd in [
        Command::Ids { sandwich: false },
        Command::Ids { sandwich: true },
        Command::Lifshitz,
    ] {
        if let Ok(resolved) = cfg.clone().resolve(cmd) {
            // the echoed config must parse back to itself
            let echoed = RunConfig::parse(&resolved.to_json()).expect("echo parses");
            assert_eq!(echoed.resolve(cmd).expect("echo resolves"), resolved);
            let _ = resolved.energy_grid(cmd);
            let _ = resolved.scan_ls();
        }
    }
});
