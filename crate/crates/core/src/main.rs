fn main() {
    std::process::exit(maxvem::driver::cli::cli_main(std::env::args_os()));
}
