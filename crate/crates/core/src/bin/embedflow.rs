fn main() {
    std::process::exit(embedflow::cli::main_from(std::env::args_os()));
}
