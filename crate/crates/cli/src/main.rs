fn main() {
    std::process::exit(gprwi_cli::main_with(std::env::args_os()));
}
