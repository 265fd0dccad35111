fn main() {
    std::process::exit(cavity::cli::main_with(std::env::args_os()));
}
