fn main() {
    std::process::exit(dualappell::cli::run(std::env::args_os()));
}
