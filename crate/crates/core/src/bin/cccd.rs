fn main() {
    let mut out = std::io::stdout().lock();
    std::process::exit(cccd::cli::run(std::env::args_os(), &mut out));
}
