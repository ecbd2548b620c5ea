use std::io::{stderr, stdout};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;

use ddccast_cli::config::TOPOLOGY_ENV;

fn main() -> ExitCode {
    let env_topology = std::env::var(TOPOLOGY_ENV).ok().filter(|v| !v.is_empty());
    let code = catch_unwind(AssertUnwindSafe(|| {
        ddccast_cli::run_cli(
            std::env::args_os(),
            env_topology,
            &mut stdout().lock(),
            &mut stderr().lock(),
        )
    }))
    .unwrap_or(2);
    ExitCode::from(code as u8)
}
