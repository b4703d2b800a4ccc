fn main() {
    std::process::exit(dwlattice_cli::run(std::env::args_os()));
}
