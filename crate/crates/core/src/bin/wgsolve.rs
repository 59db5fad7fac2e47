fn main() {
    std::process::exit(wgfem::cli::main_with_args(std::env::args_os()));
}
