use std::io::Write;

fn main() {
    let report = rooted_steiner::cli::run(std::env::args_os());
    let _ = std::io::stdout().write_all(report.stdout.as_bytes());
    let _ = std::io::stderr().write_all(report.stderr.as_bytes());
    std::process::exit(report.code);
}
