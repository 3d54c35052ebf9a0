// SPDX-License-Identifier: Apache-2.0

fn main() {
    let stdout = std::io::stdout();
    let code = cpi_oracle::cli::run(std::env::args_os(), &mut stdout.lock());
    std::process::exit(code);
}
