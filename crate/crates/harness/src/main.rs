fn main() {
    std::process::exit(aflow_harness::cli::main_with_args(std::env::args_os()));
}
