fn main() {
    let code = mglab::cli::run(std::env::args_os());
    std::process::exit(code);
}
