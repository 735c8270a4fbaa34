fn main() {
    std::process::exit(surfem::cli::main_entry(std::env::args_os()));
}
