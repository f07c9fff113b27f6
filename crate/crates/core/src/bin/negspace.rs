fn main() {
    let code = negspace::runtime::cli::run(std::env::args_os(), &mut std::io::stdout());
    std::process::exit(code);
}
