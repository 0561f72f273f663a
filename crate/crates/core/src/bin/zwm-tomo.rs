fn main() {
    std::process::exit(zwm_tomography::cli::run(std::env::args_os()));
}
