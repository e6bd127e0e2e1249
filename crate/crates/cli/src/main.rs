fn main() {
    let code = archdelta_cli::cli::run(std::env::args_os(), &mut std::io::stdout().lock());
    std::process::exit(code);
}
