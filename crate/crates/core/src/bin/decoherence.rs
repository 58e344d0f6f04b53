fn main() {
    std::process::exit(qubit_decoherence::cli::main_with_args(std::env::args_os()));
}
