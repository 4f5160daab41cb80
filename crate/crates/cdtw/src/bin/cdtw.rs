// SPDX-License-Identifier: Apache-2.0 OR MIT

fn main() {
    let code = cdtw::cli::run(std::env::args_os(), &mut std::io::stdout(), &mut std::io::stderr());
    std::process::exit(code);
}
