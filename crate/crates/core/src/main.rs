fn main() {
    std::process::exit(mzi_footprint::cli::main_with_args(std::env::args_os()));
}
