fn main() {
    let code = smoothforge::cli::run(std::env::args_os());
    std::process::exit(code);
}
