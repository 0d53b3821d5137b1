fn main() {
    std::process::exit(pcd::cli::main_with_args(std::env::args_os()));
}
