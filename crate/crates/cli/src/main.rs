fn main() {
    let code = sconeparse::harness::cli::run(std::env::args_os());
    std::process::exit(code);
}
