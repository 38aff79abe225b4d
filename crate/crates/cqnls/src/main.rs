fn main() {
    std::process::exit(cqnls::cli::main());
}
