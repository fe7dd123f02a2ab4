fn main() {
    std::process::exit(darklattice::cli::main_from(std::env::args_os()));
}
